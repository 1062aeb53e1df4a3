//! Closed-form bounds on posterior min-entropy, leakage and utility.
//!
//! Every bound is driven by the exact core `Σ_d n_d r^d`, where `n_d`
//! counts vertices at distance `d` from any vertex of a distance-regular
//! or VT⁺ graph and `r = e^{-ε}`. Logarithms are taken only when the
//! report is built.

use num_traits::One;
use serde::Serialize;

use crate::channels::PrivacyParameter;
use crate::exact::{self, Rational};
use crate::graphs::DistanceProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    PosteriorEntropy,
    Leakage,
    IndividualLeakage,
    Utility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<usize>>,
    pub r: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// Bound in bits: a lower bound on `H∞(A|B)` for `PosteriorEntropy`,
    /// an upper bound on leakage for the leakage kinds, and the posterior
    /// entropy matching the success probability for `Utility`.
    pub bits: f64,
    /// Success-probability form, when the bound has one.
    pub probability: Option<Rational>,
    pub exact_core: Rational,
    pub inputs: BoundInputs,
}

/// `Σ_d n_d r^d`.
pub fn profile_core(profile: &DistanceProfile, pp: &PrivacyParameter) -> Rational {
    let mut term = Rational::one();
    let mut total = Rational::from_integer(0.into());
    for &count in &profile.counts {
        total += &term * Rational::from_integer(count.into());
        term *= pp.ratio();
    }
    total
}

fn profile_inputs(profile: &DistanceProfile, pp: &PrivacyParameter) -> BoundInputs {
    BoundInputs {
        profile: Some(profile.counts.clone()),
        r: pp.ratio().to_string(),
        u: None,
        v: None,
    }
}

/// Lower bound `H∞(A|B) >= log2 Σ_d n_d r^d` for ε-DP channels under the
/// uniform prior.
pub fn posterior_entropy_bound(profile: &DistanceProfile, pp: &PrivacyParameter) -> BoundReport {
    let core = profile_core(profile, pp);
    BoundReport {
        kind: BoundKind::PosteriorEntropy,
        bits: exact::log2(&core),
        probability: Some(core.recip()),
        exact_core: core,
        inputs: profile_inputs(profile, pp),
    }
}

/// `(v-1) r + 1`: the per-individual factor of the Hamming core.
fn hamming_factor(v: usize, pp: &PrivacyParameter) -> Rational {
    Rational::from_integer((v - 1).into()) * pp.ratio() + Rational::one()
}

/// Leakage bound `u log2(v / ((v-1) r + 1))` for databases of `u`
/// individuals over `v` values.
pub fn hamming_leakage_bound(u: usize, v: usize, pp: &PrivacyParameter) -> BoundReport {
    assert!(u >= 1 && v >= 2, "hamming bound needs u >= 1 and v >= 2");
    let factor = hamming_factor(v, pp);
    let per_individual = exact::log2(&(exact::int(v as u64) / &factor));
    BoundReport {
        kind: BoundKind::Leakage,
        bits: u as f64 * per_individual,
        probability: None,
        exact_core: exact::pow(&factor, u),
        inputs: BoundInputs {
            profile: None,
            r: pp.ratio().to_string(),
            u: Some(u),
            v: Some(v),
        },
    }
}

/// Leakage bound for a single individual, `log2(v / ((v-1) r + 1))`; it does
/// not depend on the number of individuals.
pub fn individual_leakage_bound(v: usize, pp: &PrivacyParameter) -> BoundReport {
    assert!(v >= 2, "individual bound needs v >= 2");
    let factor = hamming_factor(v, pp);
    BoundReport {
        kind: BoundKind::IndividualLeakage,
        bits: exact::log2(&(exact::int(v as u64) / &factor)),
        probability: None,
        exact_core: factor,
        inputs: BoundInputs {
            profile: None,
            r: pp.ratio().to_string(),
            u: None,
            v: Some(v),
        },
    }
}

/// Utility bound `1 / Σ_d n_d r^d` for binary gain, optimal guessing and a
/// uniform prior over answers.
pub fn utility_bound(profile: &DistanceProfile, pp: &PrivacyParameter) -> BoundReport {
    let core = profile_core(profile, pp);
    BoundReport {
        kind: BoundKind::Utility,
        bits: exact::log2(&core),
        probability: Some(core.recip()),
        exact_core: core,
        inputs: profile_inputs(profile, pp),
    }
}

/// Exact check of `Σ_d C(u,d) (v-1)^d r^d = ((v-1) r + 1)^u`.
pub fn hamming_identity_check(u: usize, v: usize, pp: &PrivacyParameter) -> bool {
    let (lhs, rhs) = hamming_identity_sides(u, v, pp);
    lhs == rhs
}

pub fn hamming_identity_sides(u: usize, v: usize, pp: &PrivacyParameter) -> (Rational, Rational) {
    let mut binom = Rational::one();
    let mut lhs = Rational::from_integer(0.into());
    let step = Rational::from_integer((v - 1).into()) * pp.ratio();
    let mut power = Rational::one();
    for d in 0..=u {
        lhs += &binom * &power;
        // C(u, d+1) = C(u, d) (u-d) / (d+1)
        binom = binom * Rational::from_integer((u - d).into()) / Rational::from_integer((d + 1).into());
        power *= &step;
    }
    (lhs, exact::pow(&hamming_factor(v, pp), u))
}

#[derive(Serialize)]
struct BoundJson<'a> {
    kind: BoundKind,
    bits: f64,
    probability: Option<f64>,
    probability_exact: Option<String>,
    core_num: String,
    core_den: String,
    inputs: &'a BoundInputs,
}

impl BoundReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(BoundJson {
            kind: self.kind,
            bits: self.bits,
            probability: self.probability.as_ref().map(exact::to_f64),
            probability_exact: self.probability.as_ref().map(ToString::to_string),
            core_num: self.exact_core.numer().to_string(),
            core_den: self.exact_core.denom().to_string(),
            inputs: &self.inputs,
        })
        .expect("bound report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn pp(n: i64, d: i64) -> PrivacyParameter {
        PrivacyParameter::from_ratio(rat(n, d)).unwrap()
    }

    fn profile(counts: &[usize]) -> DistanceProfile {
        DistanceProfile {
            base_vertex: 0,
            counts: counts.to_vec(),
        }
    }

    #[test]
    fn posterior_bound_examples() {
        let b = posterior_entropy_bound(&profile(&[1, 5]), &pp(1, 2));
        assert_eq!(b.exact_core, rat(7, 2));
        assert!((b.bits - 3.5f64.log2()).abs() < 1e-12);

        let b = posterior_entropy_bound(&profile(&[1, 3, 6]), &pp(1, 1));
        assert_eq!(b.exact_core, rat(10, 1));

        let b = posterior_entropy_bound(&profile(&[1, 3, 6]), &pp(1, 2));
        assert_eq!(b.exact_core, rat(4, 1));
        assert_eq!(b.bits, 2.0);
    }

    #[test]
    fn hamming_leakage_examples() {
        for u in 1..5 {
            assert_eq!(hamming_leakage_bound(u, 3, &pp(1, 1)).bits, 0.0);
        }
        let b = hamming_leakage_bound(2, 2, &pp(1, 2));
        assert!((b.bits - 2.0 * (4f64 / 3.0).log2()).abs() < 1e-12);
        assert_eq!(b.exact_core, rat(9, 4));
        // r -> 0 approaches u log2 v
        let tiny = hamming_leakage_bound(3, 4, &pp(1, 1_000_000_000));
        assert!((tiny.bits - 6.0).abs() < 1e-7);
    }

    #[test]
    fn individual_leakage_examples() {
        assert!((individual_leakage_bound(2, &pp(1, 2)).bits - (4f64 / 3.0).log2()).abs() < 1e-12);
        assert_eq!(individual_leakage_bound(5, &pp(1, 1)).bits, 0.0);
        assert!((individual_leakage_bound(6, &pp(1, 2)).bits - (12f64 / 7.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn utility_bound_examples() {
        assert_eq!(utility_bound(&profile(&[1, 5]), &pp(1, 2)).probability, Some(rat(2, 7)));
        assert_eq!(utility_bound(&profile(&[1, 3, 6]), &pp(1, 1)).probability, Some(rat(1, 10)));
        assert_eq!(utility_bound(&profile(&[1, 2, 2, 1]), &pp(1, 2)).probability, Some(rat(8, 21)));
    }

    #[test]
    fn identity_examples() {
        assert_eq!(hamming_identity_sides(3, 2, &pp(1, 2)), (rat(27, 8), rat(27, 8)));
        for v in 2..6 {
            let (l, r) = hamming_identity_sides(1, v, &pp(2, 5));
            assert_eq!(l, r);
            assert_eq!(l, rat(2 * (v as i64 - 1), 5) + rat(1, 1));
        }
        let (l, r) = hamming_identity_sides(4, 3, &pp(1, 3));
        assert_eq!(l, exact::pow(&rat(5, 3), 4));
        assert_eq!(l, r);
    }

    #[test]
    fn json_shape() {
        let v = utility_bound(&profile(&[1, 5]), &pp(1, 2)).to_json_value();
        assert_eq!(v["kind"], "utility");
        assert_eq!(v["core_num"], "7");
        assert_eq!(v["core_den"], "2");
        assert_eq!(v["probability_exact"], "2/7");
        assert_eq!(v["inputs"]["profile"], serde_json::json!([1, 5]));
    }
}
