//! Channel matrices, priors and the quantities measured on them: ε-DP
//! audits against an adjacency graph, min-entropy, posterior success
//! probability, min-entropy leakage and min-capacity.

use num_traits::{One, Signed, Zero};

use crate::error::{arg, Error, Result};
use crate::exact::{self, Rational};
use crate::graphs::{distances, Graph, UNREACHABLE};

/// Largest denominator used when an ε given as a real is turned into an
/// exact ratio `e^{-ε}`.
pub const EPSILON_RATIO_MAX_DEN: u64 = 1_000_000;

/// Default tolerance on the ln-ratio when checking ε-DP.
pub const DP_TOLERANCE: f64 = 1e-9;

/// Tolerance for fixtures printed with three decimals.
pub const DP_TOLERANCE_ROUNDED: f64 = 1e-2;

/// Privacy level stored as the exact ratio `r = e^{-ε}` in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacyParameter {
    ratio: Rational,
}

impl PrivacyParameter {
    pub fn from_ratio(ratio: Rational) -> Result<Self> {
        if !ratio.is_positive() || ratio > Rational::one() {
            return arg(format!("ratio must lie in (0, 1], got {ratio}"));
        }
        Ok(PrivacyParameter { ratio })
    }

    pub fn from_ratio_str(s: &str) -> Result<Self> {
        Self::from_ratio(exact::parse_rational(s)?)
    }

    /// `e^{-ε}` rounded to the closest rational with a denominator of at
    /// most [`EPSILON_RATIO_MAX_DEN`]. Use [`Self::parse_epsilon`] with
    /// `lnK` for exact values.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return arg(format!("epsilon must be finite and >= 0, got {epsilon}"));
        }
        let r = exact::approximate((-epsilon).exp(), EPSILON_RATIO_MAX_DEN);
        if r.is_zero() {
            return arg(format!("epsilon {epsilon} too large to represent as a ratio"));
        }
        Self::from_ratio(r)
    }

    /// Accepts a decimal ε, or `lnK` / `ln(K)` for a positive integer `K`,
    /// which maps to the exact ratio `1/K`.
    pub fn parse_epsilon(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("ln") {
            let k = rest.trim_start_matches('(').trim_end_matches(')');
            let k: u64 = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad epsilon literal {s:?}")))?;
            if k == 0 {
                return arg("ln0 is not a valid epsilon");
            }
            return Self::from_ratio(exact::rat(1, k as i64));
        }
        let eps: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad epsilon literal {s:?}")))?;
        Self::from_epsilon(eps)
    }

    pub fn ratio(&self) -> &Rational {
        &self.ratio
    }

    /// `e^{ε} = 1/r`.
    pub fn inverse_ratio(&self) -> Rational {
        self.ratio.recip()
    }

    pub fn epsilon(&self) -> f64 {
        -exact::ln(&self.ratio)
    }
}

/// Probability distribution over input indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prior {
    probs: Vec<Rational>,
}

impl Prior {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.is_empty() {
            return arg("prior over an empty set");
        }
        if probs.iter().any(Signed::is_negative) {
            return arg("prior has a negative entry");
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return arg(format!("prior sums to {total}, not 1"));
        }
        Ok(Prior { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform prior over an empty set");
        let p = exact::rat(1, n as i64);
        Prior { probs: vec![p; n] }
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max(&self) -> &Rational {
        self.probs.iter().max().expect("non-empty prior")
    }
}

/// Row-stochastic matrix of conditional probabilities `p(output | input)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl ChannelMatrix {
    /// Every entry must be non-negative and every row must sum to exactly 1.
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return arg("channel matrix has no rows");
        }
        let m = rows[0].len();
        if m == 0 {
            return arg("channel matrix has no columns");
        }
        let mut entries = Vec::with_capacity(n * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return arg(format!("row {i} has {} entries, expected {m}", row.len()));
            }
            if row.iter().any(Signed::is_negative) {
                return arg(format!("row {i} has a negative entry"));
            }
            let total: Rational = row.iter().sum();
            if !total.is_one() {
                return arg(format!("row {i} sums to {total}, not 1"));
            }
            entries.extend(row);
        }
        Ok(ChannelMatrix {
            rows: n,
            cols: m,
            entries,
            row_labels: (0..n).map(|i| i.to_string()).collect(),
            col_labels: (0..m).map(|j| j.to_string()).collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Rational) -> Result<Self> {
        Self::new(
            (0..rows)
                .map(|i| (0..cols).map(|j| f(i, j)).collect())
                .collect(),
        )
    }

    pub fn with_labels(mut self, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if row_labels.len() != self.rows || col_labels.len() != self.cols {
            return arg("label count does not match matrix shape");
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Largest entry of column `j` and the lowest row index attaining it.
    pub fn column_max(&self, j: usize) -> (usize, &Rational) {
        let mut best = 0;
        for i in 1..self.rows {
            if self.get(i, j) > self.get(best, j) {
                best = i;
            }
        }
        (best, self.get(best, j))
    }

    pub fn max_entry(&self) -> &Rational {
        self.entries.iter().max().expect("non-empty matrix")
    }

    /// Output column `k` of the result is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.cols {
            return arg("column permutation has the wrong length");
        }
        let mut seen = vec![false; self.cols];
        for &j in perm {
            if j >= self.cols || std::mem::replace(&mut seen[j], true) {
                return arg("not a permutation of the columns");
            }
        }
        let m = Self::from_fn(self.rows, self.cols, |i, k| self.get(i, perm[k]).clone())?;
        let cols = perm.iter().map(|&j| self.col_labels[j].clone()).collect();
        m.with_labels(self.row_labels.clone(), cols)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Rational::one() } else { Rational::zero() })
            .expect("identity is stochastic")
    }

    /// Every row equal to `row`.
    pub fn constant_rows(n: usize, row: &[Rational]) -> Result<Self> {
        Self::from_fn(n, row.len(), |_, j| row[j].clone())
    }
}

/// Result of checking a matrix against the ε-DP quotient condition.
#[derive(Debug, Clone, PartialEq)]
pub struct DpAudit {
    /// Largest same-column ratio between adjacent rows; `None` is infinite.
    pub worst_ratio: Option<Rational>,
    /// `ln` of `worst_ratio`; `f64::INFINITY` when unbounded.
    pub eps_star: f64,
    /// `(row i, row h, column j)` with `M[i][j] / M[h][j]` equal to the worst ratio.
    pub worst_witness: Option<(usize, usize, usize)>,
}

impl DpAudit {
    pub fn is_dp(&self, pp: &PrivacyParameter, tolerance: f64) -> bool {
        self.eps_star <= pp.epsilon() + tolerance
    }

    /// Exact comparison of the worst ratio against `e^ε = 1/r`.
    pub fn is_dp_exact(&self, pp: &PrivacyParameter) -> bool {
        self.worst_ratio
            .as_ref()
            .is_some_and(|q| *q <= pp.inverse_ratio())
    }
}

fn check_rows(m: &ChannelMatrix, g: &Graph) -> Result<()> {
    if m.rows() != g.vertex_count() {
        return arg(format!(
            "matrix has {} rows but the graph has {} vertices",
            m.rows(),
            g.vertex_count()
        ));
    }
    Ok(())
}

/// Worst same-column ratio over all adjacent row pairs. `0/0` counts as 1
/// and `x/0` with `x > 0` as infinite.
pub fn dp_audit(m: &ChannelMatrix, g: &Graph) -> Result<DpAudit> {
    check_rows(m, g)?;
    let mut worst = Rational::one();
    let mut witness = None;
    for (a, b) in g.edges() {
        for j in 0..m.cols() {
            let (x, y) = (m.get(a, j), m.get(b, j));
            let (hi, lo, i, h) = if x >= y { (x, y, a, b) } else { (y, x, b, a) };
            if hi.is_zero() {
                continue;
            }
            if lo.is_zero() {
                return Ok(DpAudit {
                    worst_ratio: None,
                    eps_star: f64::INFINITY,
                    worst_witness: Some((i, h, j)),
                });
            }
            let q = hi / lo;
            if q > worst || (witness.is_none() && q == worst) {
                worst = q;
                witness = Some((i, h, j));
            }
        }
    }
    let eps_star = exact::ln(&worst);
    Ok(DpAudit {
        worst_ratio: Some(worst),
        eps_star,
        worst_witness: witness,
    })
}

pub fn is_dp(m: &ChannelMatrix, g: &Graph, pp: &PrivacyParameter, tolerance: f64) -> Result<bool> {
    Ok(dp_audit(m, g)?.is_dp(pp, tolerance))
}

/// `H∞(p) = -log2 max p`, in bits.
pub fn min_entropy(p: &Prior) -> f64 {
    -exact::log2(p.max())
}

fn check_prior(p: &Prior, m: &ChannelMatrix) -> Result<()> {
    if p.len() != m.rows() {
        return arg(format!(
            "prior has {} entries but the matrix has {} rows",
            p.len(),
            m.rows()
        ));
    }
    Ok(())
}

/// One-try success probability of the optimal attacker after observing the
/// output: `Σ_j max_i p_i M[i][j]`.
pub fn posterior_success(p: &Prior, m: &ChannelMatrix) -> Result<Rational> {
    check_prior(p, m)?;
    Ok((0..m.cols())
        .map(|j| {
            (0..m.rows())
                .map(|i| &p.probs()[i] * m.get(i, j))
                .max()
                .expect("non-empty column")
        })
        .sum())
}

/// `H∞(X|Z) = -log2 posterior_success`, in bits.
pub fn posterior_min_entropy(p: &Prior, m: &ChannelMatrix) -> Result<f64> {
    Ok(-exact::log2(&posterior_success(p, m)?))
}

/// `I∞ = H∞(X) - H∞(X|Z)`, computed as `log2(success / max p)` so that the
/// result is never negative.
pub fn leakage(p: &Prior, m: &ChannelMatrix) -> Result<f64> {
    let ratio = posterior_success(p, m)? / p.max();
    Ok(exact::log2(&ratio))
}

/// `Σ_j max_i M[i][j]`: the multiplicative min-capacity.
pub fn column_max_sum(m: &ChannelMatrix) -> Rational {
    (0..m.cols()).map(|j| m.column_max(j).1.clone()).sum()
}

/// `C∞ = log2 Σ_j max_i M[i][j]`, in bits.
pub fn min_capacity(m: &ChannelMatrix) -> f64 {
    exact::log2(&column_max_sum(m))
}

/// Outcome of checking `M[i][j] <= M[h][j] · e^{ε d(i,h)}` for every pair of
/// rows in the same connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRatioAudit {
    pub holds: bool,
    /// Largest `M[i][j] · r^{d(i,h)} / M[h][j]`; `None` is infinite. The
    /// condition holds iff this is at most 1.
    pub worst_excess: Option<Rational>,
    pub worst_witness: Option<(usize, usize, usize)>,
}

pub fn distance_ratio_audit(
    m: &ChannelMatrix,
    g: &Graph,
    pp: &PrivacyParameter,
) -> Result<DistanceRatioAudit> {
    check_rows(m, g)?;
    let dm = distances(g);
    let max_d = (0..g.vertex_count())
        .flat_map(|i| dm.row(i).iter().copied())
        .filter(|&d| d != UNREACHABLE)
        .max()
        .unwrap_or(0);
    let powers: Vec<Rational> = (0..=max_d).map(|d| exact::pow(pp.ratio(), d)).collect();
    let mut worst: Option<Rational> = Some(Rational::zero());
    let mut witness = None;
    'outer: for i in 0..m.rows() {
        for h in 0..m.rows() {
            let d = dm.get(i, h);
            if i == h || d == UNREACHABLE {
                continue;
            }
            for j in 0..m.cols() {
                let top = m.get(i, j);
                if top.is_zero() {
                    continue;
                }
                let bottom = m.get(h, j);
                if bottom.is_zero() {
                    worst = None;
                    witness = Some((i, h, j));
                    break 'outer;
                }
                let excess = top * &powers[d] / bottom;
                if worst.as_ref().is_some_and(|w| excess > *w) {
                    worst = Some(excess);
                    witness = Some((i, h, j));
                }
            }
        }
    }
    let holds = worst.as_ref().is_some_and(|w| *w <= Rational::one());
    Ok(DistanceRatioAudit {
        holds,
        worst_excess: worst,
        worst_witness: witness,
    })
}
