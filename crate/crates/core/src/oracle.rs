//! Independent checks on the synthesized mechanisms: exhaustive grid
//! search for tiny graphs, seeded hill-climbing over DP-feasible matrices,
//! and a generator of random ε-DP matrices for property tests.
//!
//! The search methods work on integer numerators over a common
//! denominator so feasibility checks are exact and cheap.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channels::{dp_audit, ChannelMatrix, PrivacyParameter};
use crate::error::{arg, Error, Result};
use crate::exact::{self, Rational};
use crate::graphs::{distances, uniform_profile_from, DistanceMatrix, Graph, UNREACHABLE};
use crate::mechanisms::optimal_mechanism;

/// Largest graph accepted by [`grid_search_optimal`].
pub const GRID_MAX_VERTICES: usize = 3;

/// Grid points per row above which the grid search refuses to run.
const GRID_MAX_ROWS: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    Hillclimb,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    /// Binary-gain utility of `best_matrix` under the uniform prior.
    pub best_utility: Rational,
    pub best_matrix: ChannelMatrix,
    pub trials: u64,
    pub seed: Option<u64>,
    pub method: Method,
}

impl SearchReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "seed": self.seed,
            "trials": self.trials,
            "best_utility": exact::to_f64(&self.best_utility),
            "best_utility_exact": self.best_utility.to_string(),
            "best_matrix": self
                .best_matrix
                .to_rows()
                .iter()
                .map(|row| row.iter().map(ToString::to_string).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

/// `r = p/q` as small integers.
fn ratio_parts(pp: &PrivacyParameter) -> Result<(i128, i128)> {
    let p = pp.ratio().numer().to_i128();
    let q = pp.ratio().denom().to_i128();
    match (p, q) {
        (Some(p), Some(q)) if q < (1 << 40) => Ok((p, q)),
        _ => arg("ratio numerator/denominator too large for the search oracles"),
    }
}

/// Exact DP test on integer numerators sharing a denominator:
/// `a / b <= q / p` and `b / a <= q / p`.
fn pair_ok(a: i128, b: i128, p: i128, q: i128) -> bool {
    a * p <= b * q && b * p <= a * q
}

/// Rows of integer numerators summing to `total`, split into `parts`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(parts);
    fn go(left: usize, parts: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            current.push(left);
            out.push(current.clone());
            current.pop();
            return;
        }
        for k in 0..=left {
            current.push(k);
            go(left - k, parts - 1, current, out);
            current.pop();
        }
    }
    go(total, parts, &mut current, &mut out);
    out
}

/// Enumerates every square row-stochastic matrix with entries on the grid
/// `{0, step, 2·step, ..., 1}`, keeps the ε-DP ones and returns the one
/// with the largest utility (first in enumeration order on ties).
pub fn grid_search_optimal(g: &Graph, pp: &PrivacyParameter, step: &Rational) -> Result<SearchReport> {
    let n = g.vertex_count();
    if n > GRID_MAX_VERTICES {
        return Err(Error::Resource {
            what: "grid search vertices",
            requested: n as u128,
            cap: GRID_MAX_VERTICES as u128,
        });
    }
    if !step.numer().is_one() || step.denom() <= &BigInt::zero() {
        return arg(format!("grid step must be 1/N, got {step}"));
    }
    let steps = step
        .denom()
        .to_usize()
        .filter(|&s| s > 0)
        .ok_or_else(|| Error::Argument("grid step too fine".into()))?;
    let row_count = (1..n as u128).fold(1u128, |acc, k| acc * (steps as u128 + k) / k);
    if row_count > GRID_MAX_ROWS {
        return Err(Error::Resource {
            what: "grid rows",
            requested: row_count,
            cap: GRID_MAX_ROWS,
        });
    }
    let (p, q) = ratio_parts(pp)?;
    let rows = compositions(steps, n);
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|i| g.neighbors(i).iter().copied().filter(|&h| h < i).collect())
        .collect();

    struct State<'a> {
        rows: &'a [Vec<usize>],
        adjacency: &'a [Vec<usize>],
        p: i128,
        q: i128,
        chosen: Vec<usize>,
        best: Option<(usize, Vec<usize>)>,
        trials: u64,
    }

    fn go(st: &mut State, i: usize) {
        let n = st.adjacency.len();
        if i == n {
            st.trials += 1;
            let score: usize = (0..n)
                .map(|j| st.chosen.iter().map(|&r| st.rows[r][j]).max().unwrap())
                .sum();
            if st.best.as_ref().map_or(true, |(b, _)| score > *b) {
                st.best = Some((score, st.chosen.clone()));
            }
            return;
        }
        for r in 0..st.rows.len() {
            let row = &st.rows[r];
            let ok = st.adjacency[i].iter().all(|&h| {
                let other = &st.rows[st.chosen[h]];
                row.iter()
                    .zip(other)
                    .all(|(&a, &b)| pair_ok(a as i128, b as i128, st.p, st.q))
            });
            if ok {
                st.chosen.push(r);
                go(st, i + 1);
                st.chosen.pop();
            }
        }
    }

    let mut st = State {
        rows: &rows,
        adjacency: &adjacency,
        p,
        q,
        chosen: Vec::with_capacity(n),
        best: None,
        trials: 0,
    };
    go(&mut st, 0);
    let (score, chosen) = st.best.expect("constant rows are always feasible");
    let best_matrix = ChannelMatrix::from_fn(n, n, |i, j| {
        exact::rat(rows[chosen[i]][j] as i64, steps as i64)
    })?;
    Ok(SearchReport {
        best_utility: exact::rat(score as i64, (n * steps) as i64),
        best_matrix,
        trials: st.trials,
        seed: None,
        method: Method::Grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HillclimbStart {
    /// The synthesized optimal mechanism when the graph supports it,
    /// uniform rows otherwise.
    Synthesized,
    Uniform,
}

/// Finer lattice used by hill-climbing moves, relative to the start matrix.
const HILLCLIMB_REFINEMENT: i128 = 1 << 12;

/// Probability of accepting a move that lowers utility.
const HILLCLIMB_EXPLORE: f64 = 0.05;

pub fn hillclimb_utility(g: &Graph, pp: &PrivacyParameter, iters: u64, seed: u64) -> Result<SearchReport> {
    hillclimb_utility_from(g, pp, iters, seed, HillclimbStart::Synthesized)
}

/// Seeded local search over square ε-DP matrices using random mass
/// transfers between two entries of one row. Moves that break ε-DP are
/// rejected; moves that lower utility are accepted with small probability.
pub fn hillclimb_utility_from(
    g: &Graph,
    pp: &PrivacyParameter,
    iters: u64,
    seed: u64,
    start: HillclimbStart,
) -> Result<SearchReport> {
    let n = g.vertex_count();
    let dm = distances(g);
    let start_matrix = match start {
        HillclimbStart::Synthesized if uniform_profile_from(&dm).is_ok() => {
            optimal_mechanism(g, pp)?.matrix
        }
        _ => ChannelMatrix::constant_rows(n, &vec![exact::rat(1, n as i64); n])?,
    };
    let (p, q) = ratio_parts(pp)?;
    let den = start_matrix
        .to_rows()
        .iter()
        .flatten()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let unit = den
        .to_i128()
        .and_then(|d| d.checked_mul(HILLCLIMB_REFINEMENT))
        .filter(|&u| u < (1i128 << 60) / q.max(1))
        .ok_or(Error::Resource {
            what: "hillclimb lattice denominator",
            requested: u128::MAX,
            cap: 1 << 60,
        })?;
    let mut cells: Vec<i128> = start_matrix
        .to_rows()
        .iter()
        .flatten()
        .map(|x| (x * Rational::from_integer(unit.into())).to_integer().to_i128().unwrap())
        .collect();

    let score = |cells: &[i128]| -> i128 {
        (0..n)
            .map(|j| (0..n).map(|i| cells[i * n + j]).max().unwrap())
            .sum()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = score(&cells);
    let mut best = (current, cells.clone());

    if n >= 2 {
        for _ in 0..iters {
            let i = rng.gen_range(0..n);
            let from = rng.gen_range(0..n);
            let to = (from + rng.gen_range(1..n)) % n;
            let available = cells[i * n + from];
            if available == 0 {
                continue;
            }
            let shrink = rng.gen_range(0..12);
            let amount = rng.gen_range(1..=(available >> shrink).max(1));
            cells[i * n + from] -= amount;
            cells[i * n + to] += amount;
            let feasible = g.neighbors(i).iter().all(|&h| {
                [from, to]
                    .iter()
                    .all(|&j| pair_ok(cells[i * n + j], cells[h * n + j], p, q))
            });
            let next = if feasible { score(&cells) } else { i128::MIN };
            let accept = feasible && (next >= current || rng.gen_bool(HILLCLIMB_EXPLORE));
            if accept {
                current = next;
                if current > best.0 {
                    best = (current, cells.clone());
                }
            } else {
                cells[i * n + from] += amount;
                cells[i * n + to] -= amount;
            }
        }
    }

    let to_rat = |x: i128| Rational::new(BigInt::from(x), BigInt::from(unit));
    let best_matrix = ChannelMatrix::from_fn(n, n, |i, j| to_rat(best.1[i * n + j]))?;
    debug_assert!(dp_audit(&best_matrix, g)?.is_dp_exact(pp));
    Ok(SearchReport {
        best_utility: Rational::new(BigInt::from(best.0), BigInt::from(unit * n as i128)),
        best_matrix,
        trials: iters,
        seed: Some(seed),
        method: Method::Hillclimb,
    })
}

/// Smallest "simple" rational `s` with `s^2 >= r`, `s <= 1`.
fn half_ratio(r: &Rational) -> Rational {
    if r.is_one() {
        return Rational::one();
    }
    let guess = exact::to_f64(r).sqrt();
    let mut s = exact::approximate(guess, 64);
    let bump = exact::rat(1, 64);
    while &s * &s < *r {
        s += &bump;
    }
    s.min(Rational::one())
}

/// Stream of random square-or-wider ε-DP matrices over `g`.
///
/// Each column is `a_j · s_j^{h_j(i)}` for a random 1-Lipschitz integer
/// field `h_j` on the graph and a base `s_j` with `s_j^2 >= r`, then rows
/// are normalized. Adjacent rows then differ by at most `1/s_j` per entry
/// and per row sum, so every ratio stays within `1/r`. Every emitted
/// matrix is audited before it is returned.
pub struct DpSampler {
    graph: Graph,
    dm: DistanceMatrix,
    pp: PrivacyParameter,
    base: Rational,
    rng: ChaCha8Rng,
    remaining: usize,
}

pub fn random_dp_sample(g: &Graph, pp: &PrivacyParameter, count: usize, seed: u64) -> DpSampler {
    DpSampler {
        graph: g.clone(),
        dm: distances(g),
        pp: pp.clone(),
        base: half_ratio(pp.ratio()),
        rng: ChaCha8Rng::seed_from_u64(seed),
        remaining: count,
    }
}

impl DpSampler {
    fn lipschitz_field(&mut self) -> Vec<usize> {
        let n = self.graph.vertex_count();
        let reach = self.dm.diameter().unwrap_or(n).max(1);
        let cap = self.rng.gen_range(0..=reach);
        let centers = self.rng.gen_range(1..=3);
        let picks: Vec<(usize, usize)> = (0..centers)
            .map(|_| (self.rng.gen_range(0..n), self.rng.gen_range(0..=2)))
            .collect();
        (0..n)
            .map(|i| {
                picks
                    .iter()
                    .map(|&(c, offset)| match self.dm.get(i, c) {
                        UNREACHABLE => cap,
                        d => d + offset,
                    })
                    .min()
                    .unwrap()
                    .min(cap)
            })
            .collect()
    }

    fn draw(&mut self) -> ChannelMatrix {
        let n = self.graph.vertex_count();
        let width = n + self.rng.gen_range(0..=2);
        let mut weights = vec![vec![Rational::zero(); width]; n];
        let mut any_column = false;
        for j in 0..width {
            let zero_column = self.rng.gen_bool(0.1);
            if zero_column && (any_column || j + 1 < width) {
                continue;
            }
            any_column = true;
            let scale = exact::int(self.rng.gen_range(1..=8));
            let base = if self.rng.gen_bool(0.5) {
                self.base.clone()
            } else {
                (&self.base + Rational::one()) / exact::int(2)
            };
            let field = self.lipschitz_field();
            for (i, row) in weights.iter_mut().enumerate() {
                row[j] = &scale * exact::pow(&base, field[i]);
            }
        }
        let rows = weights
            .into_iter()
            .map(|row| {
                let total: Rational = row.iter().sum();
                row.into_iter().map(|x| x / &total).collect()
            })
            .collect();
        ChannelMatrix::new(rows).expect("normalized rows")
    }
}

impl Iterator for DpSampler {
    type Item = ChannelMatrix;

    fn next(&mut self) -> Option<ChannelMatrix> {
        if self.remaining == 0 {
            return None;
        }
        loop {
            let m = self.draw();
            let audit = dp_audit(&m, &self.graph).expect("sampler matches graph");
            if audit.is_dp_exact(&self.pp) {
                self.remaining -= 1;
                return Some(m);
            }
        }
    }
}
