//! Mechanism synthesis and utility.
//!
//! On graphs where every vertex sees the same distance profile, the
//! matrix `H[i][j] = c · r^{d(i,j)}` with `c = 1 / Σ_d n_d r^d` is ε-DP and
//! attains the utility bound for binary gain under the uniform prior.

use num_traits::Zero;

use crate::bounds::profile_core;
use crate::channels::{posterior_success, ChannelMatrix, PrivacyParameter, Prior};
use crate::error::{arg, Error, Result};
use crate::exact::{self, Rational};
use crate::graphs::{distances, uniform_profile_from, Graph};

const CITY_LABELS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// Truncated geometric mechanism for the six-city example at ε = ln 2,
/// with every pair of answers adjacent. Entries are rounded to three
/// decimals, so the matrix is only ε-DP up to that rounding.
pub fn fixture_m1() -> ChannelMatrix {
    const ROWS: [[&str; 6]; 6] = [
        ["0.535", "0.060", "0.052", "0.046", "0.040", "0.267"],
        ["0.465", "0.069", "0.060", "0.053", "0.046", "0.307"],
        ["0.405", "0.060", "0.069", "0.060", "0.053", "0.353"],
        ["0.353", "0.053", "0.060", "0.069", "0.060", "0.405"],
        ["0.307", "0.046", "0.053", "0.060", "0.069", "0.465"],
        ["0.267", "0.040", "0.046", "0.052", "0.060", "0.535"],
    ];
    let rows = ROWS
        .iter()
        .map(|r| r.iter().map(|s| exact::parse_rational(s).unwrap()).collect())
        .collect();
    city_labels(ChannelMatrix::new(rows).expect("rows sum to 1"))
}

/// The optimal mechanism for the six-city clique at ε = ln 2: 2/7 on the
/// diagonal and 1/7 elsewhere.
pub fn fixture_m2() -> ChannelMatrix {
    let m = ChannelMatrix::from_fn(6, 6, |i, j| exact::rat(if i == j { 2 } else { 1 }, 7))
        .expect("stochastic");
    city_labels(m)
}

/// Prior `p(A) = p(F) = 1/10`, `p(B..E) = 1/5` used with the city fixtures.
pub fn fixture_city_prior() -> Prior {
    let tenth = exact::rat(1, 10);
    let fifth = exact::rat(1, 5);
    Prior::new(vec![
        tenth.clone(),
        fifth.clone(),
        fifth.clone(),
        fifth.clone(),
        fifth,
        tenth,
    ])
    .expect("sums to 1")
}

fn city_labels(m: ChannelMatrix) -> ChannelMatrix {
    let labels: Vec<String> = CITY_LABELS.iter().map(|s| s.to_string()).collect();
    m.with_labels(labels.clone(), labels).expect("6x6")
}

/// A synthesized mechanism together with the graph it was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismBundle {
    pub graph: Graph,
    pub matrix: ChannelMatrix,
    pub pp: PrivacyParameter,
    /// Diagonal value `c = 1 / Σ_d n_d r^d`.
    pub normalization: Rational,
}

/// Optimal-utility ε-DP mechanism over the answer graph `g`.
///
/// Refuses graphs whose distance profile depends on the base vertex: a
/// single normalization constant would not make every row sum to 1 there.
pub fn optimal_mechanism(g: &Graph, pp: &PrivacyParameter) -> Result<MechanismBundle> {
    let dm = distances(g);
    let profile = uniform_profile_from(&dm)?;
    let c = profile_core(&profile, pp).recip();
    let labels: Vec<String> = (0..g.vertex_count()).map(|v| g.label(v)).collect();
    let powers: Vec<Rational> = (0..profile.counts.len())
        .map(|d| &c * exact::pow(pp.ratio(), d))
        .collect();
    let n = g.vertex_count();
    let matrix = ChannelMatrix::from_fn(n, n, |i, j| powers[dm.get(i, j)].clone())?
        .with_labels(labels.clone(), labels)?;
    Ok(MechanismBundle {
        graph: g.clone(),
        matrix,
        pp: pp.clone(),
        normalization: c,
    })
}

/// The matrix attaining the posterior-entropy bound on the input graph.
pub fn tight_leakage_matrix(g: &Graph, pp: &PrivacyParameter) -> Result<ChannelMatrix> {
    Ok(optimal_mechanism(g, pp)?.matrix)
}

/// `gain(guess, truth)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GainFunction {
    Binary,
    /// Square table indexed `[guess][truth]`.
    Table(Vec<Vec<Rational>>),
}

impl GainFunction {
    fn gain(&self, guess: usize, truth: usize) -> Rational {
        match self {
            GainFunction::Binary => {
                if guess == truth {
                    exact::int(1)
                } else {
                    Rational::zero()
                }
            }
            GainFunction::Table(t) => t[guess][truth].clone(),
        }
    }

    fn check(&self, answers: usize) -> Result<()> {
        if let GainFunction::Table(t) = self {
            if t.len() != answers || t.iter().any(|row| row.len() != answers) {
                return arg(format!("gain table must be {answers}x{answers}"));
            }
        }
        Ok(())
    }
}

/// Maps each reported output to a guessed answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuessStrategy {
    /// Pick the answer maximizing expected gain for each output (lowest
    /// index on ties).
    Optimal,
    Map(Vec<usize>),
}

/// Expected gain `Σ_{y,z} p(y) M[y][z] gain(guess(z), y)`.
pub fn utility(
    p: &Prior,
    m: &ChannelMatrix,
    gain: &GainFunction,
    guess: &GuessStrategy,
) -> Result<Rational> {
    if p.len() != m.rows() {
        return arg(format!(
            "prior has {} entries but the matrix has {} rows",
            p.len(),
            m.rows()
        ));
    }
    let answers = m.rows();
    gain.check(answers)?;
    if let (GainFunction::Binary, GuessStrategy::Optimal) = (gain, guess) {
        return posterior_success(p, m);
    }
    // expected gain of guessing `y_hat` after seeing `z`
    let score = |z: usize, y_hat: usize| -> Rational {
        (0..answers)
            .map(|y| &p.probs()[y] * m.get(y, z) * gain.gain(y_hat, y))
            .sum()
    };
    let mut total = Rational::zero();
    match guess {
        GuessStrategy::Optimal => {
            for z in 0..m.cols() {
                total += (0..answers).map(|y_hat| score(z, y_hat)).max().expect("answers");
            }
        }
        GuessStrategy::Map(map) => {
            if map.len() != m.cols() {
                return arg(format!(
                    "guess map covers {} outputs, matrix has {}",
                    map.len(),
                    m.cols()
                ));
            }
            for (z, &y_hat) in map.iter().enumerate() {
                if y_hat >= answers {
                    return arg(format!("guess for output {z} is not an answer index"));
                }
                total += score(z, y_hat);
            }
        }
    }
    Ok(total)
}

/// An oblivious mechanism `K = H ∘ f` and the adjacency it induces on answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedChannel {
    pub matrix: ChannelMatrix,
    /// `y ~ y'` iff some adjacent inputs map to `y` and `y'` (`y != y'`).
    pub induced_graph: Graph,
}

/// Builds `K[x][z] = H[f(x)][z]` for a query `f` given as `f_map[x]` = row
/// of `H`.
pub fn compose_oblivious(
    f_map: &[usize],
    inputs: &Graph,
    h: &MechanismBundle,
) -> Result<ComposedChannel> {
    if f_map.len() != inputs.vertex_count() {
        return arg(format!(
            "query maps {} inputs but the input graph has {} vertices",
            f_map.len(),
            inputs.vertex_count()
        ));
    }
    let answers = h.matrix.rows();
    if let Some((x, &y)) = f_map.iter().enumerate().find(|(_, &y)| y >= answers) {
        return Err(Error::Argument(format!(
            "input {x} maps to answer {y}, but the mechanism has {answers} rows"
        )));
    }
    let mut edges: Vec<(usize, usize)> = inputs
        .edges()
        .into_iter()
        .map(|(a, b)| (f_map[a], f_map[b]))
        .filter(|(y, y2)| y != y2)
        .map(|(y, y2)| (y.min(y2), y.max(y2)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let mut induced = Graph::new(answers, &edges)?;
    if let Some(labels) = h.graph.labels() {
        induced = induced.with_labels(labels.to_vec())?;
    }
    let matrix = ChannelMatrix::from_fn(inputs.vertex_count(), h.matrix.cols(), |x, z| {
        h.matrix.get(f_map[x], z).clone()
    })?
    .with_labels(
        (0..inputs.vertex_count()).map(|x| inputs.label(x)).collect(),
        h.matrix.col_labels().to_vec(),
    )?;
    Ok(ComposedChannel {
        matrix,
        induced_graph: induced,
    })
}
