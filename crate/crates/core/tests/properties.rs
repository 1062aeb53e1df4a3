use dpleak_core::bounds::{
    hamming_leakage_bound, posterior_entropy_bound, profile_core, utility_bound,
};
use dpleak_core::channels::{
    column_max_sum, dp_audit, leakage, min_capacity, posterior_success, ChannelMatrix,
    PrivacyParameter, Prior,
};
use dpleak_core::exact::{self, rat, Rational};
use dpleak_core::graphs::{
    self, build_clique, build_cycle, build_hamming, build_petersen, distances,
    is_distance_regular, vt_plus_certificate, verify_family, Graph, VtPlus, UNREACHABLE,
};
use dpleak_core::mechanisms::{
    compose_oblivious, optimal_mechanism, utility, GainFunction, GuessStrategy,
};
use dpleak_core::oracle::random_dp_sample;
use dpleak_core::transforms::{symmetrize_distance_regular, symmetrize_vt_plus, to_diagonal_form};
use proptest::prelude::*;

fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..9).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        proptest::sample::subsequence(pairs.clone(), 0..=pairs.len())
            .prop_map(move |edges| Graph::new(n, &edges).unwrap())
    })
}

fn arb_weights(len: usize) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0u32..20, len).prop_filter("not all zero", |w| w.iter().any(|&x| x > 0))
}

fn normalize(w: &[u32]) -> Vec<Rational> {
    let total: u32 = w.iter().sum();
    w.iter().map(|&x| rat(x as i64, total as i64)).collect()
}

fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = ChannelMatrix> {
    proptest::collection::vec(arb_weights(cols), rows).prop_map(|ws| {
        ChannelMatrix::new(ws.iter().map(|w| normalize(w)).collect()).unwrap()
    })
}

fn arb_prior(n: usize) -> impl Strategy<Value = Prior> {
    arb_weights(n).prop_map(|w| Prior::new(normalize(&w)).unwrap())
}

fn symmetric_graphs() -> Vec<Graph> {
    vec![
        build_clique(2).unwrap(),
        build_clique(3).unwrap(),
        build_cycle(4).unwrap(),
        build_cycle(5).unwrap(),
        build_petersen(),
        build_hamming(2, 2).unwrap(),
        build_hamming(2, 3).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_are_a_graph_metric(g in arb_graph()) {
        let dm = distances(&g);
        let n = g.vertex_count();
        for i in 0..n {
            prop_assert_eq!(dm.get(i, i), 0);
            for j in 0..n {
                prop_assert_eq!(dm.get(i, j), dm.get(j, i));
                prop_assert_eq!(dm.get(i, j) == 1, g.is_adjacent(i, j));
            }
        }
        for (i, h) in g.edges() {
            for j in 0..n {
                let (a, b) = (dm.get(i, j), dm.get(h, j));
                if a == UNREACHABLE || b == UNREACHABLE {
                    prop_assert_eq!(a, b);
                } else {
                    prop_assert!(a.abs_diff(b) <= 1);
                }
            }
        }
    }

    #[test]
    fn intersection_arrays_hold_on_every_pair(g in arb_graph()) {
        if let Some(ia) = is_distance_regular(&g) {
            let dm = distances(&g);
            let n = g.vertex_count();
            for v in 0..n {
                for w in 0..n {
                    let i = dm.get(v, w);
                    let down = g.neighbors(w).iter().filter(|&&x| dm.get(v, x) + 1 == i).count();
                    let up = g.neighbors(w).iter().filter(|&&x| dm.get(v, x) == i + 1).count();
                    if i > 0 { prop_assert_eq!(down, ia.c[i - 1]); }
                    if i < ia.b.len() { prop_assert_eq!(up, ia.b[i]); }
                }
            }
            // distance-regular graphs have a base-independent profile
            let profile = graphs::uniform_profile(&g).unwrap();
            prop_assert_eq!(profile.counts, ia.distance_counts());
        }
    }

    #[test]
    fn vt_plus_yes_is_always_verified(g in arb_graph()) {
        if let VtPlus::Yes { family, .. } = vt_plus_certificate(&g) {
            prop_assert!(verify_family(&g, &family).unwrap());
        }
    }

    #[test]
    fn leakage_is_between_zero_and_capacity(
        (m, p) in (2usize..6, 2usize..6).prop_flat_map(|(n, k)| (arb_matrix(n, k), arb_prior(n)))
    ) {
        let l = leakage(&p, &m).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert!(l <= min_capacity(&m) + 1e-12);
        let success = posterior_success(&p, &m).unwrap();
        prop_assert!(&success >= p.max());
        // binary gain with the optimal guess is the posterior success
        prop_assert_eq!(utility(&p, &m, &GainFunction::Binary, &GuessStrategy::Optimal).unwrap(), success.clone());
        // and the table form of the same gain agrees
        let n = m.rows();
        let table = (0..n).map(|a| (0..n).map(|b| rat(i64::from(a == b), 1)).collect()).collect();
        if m.cols() >= 1 {
            prop_assert_eq!(utility(&p, &m, &GainFunction::Table(table), &GuessStrategy::Optimal).unwrap(), success);
        }
    }

    #[test]
    fn capacity_is_reached_at_uniform_prior(m in (2usize..6).prop_flat_map(|n| arb_matrix(n, n))) {
        let u = Prior::uniform(m.rows());
        let exact_uniform = posterior_success(&u, &m).unwrap() * exact::int(m.rows() as u64);
        prop_assert_eq!(exact_uniform, column_max_sum(&m));
    }

    #[test]
    fn audit_ignores_column_order(
        (m, perm) in (2usize..6).prop_flat_map(|n| (arb_matrix(n, n), Just((0..n).collect::<Vec<_>>()).prop_shuffle()))
    ) {
        let g = build_cycle(m.rows().max(3)).ok().filter(|g| g.vertex_count() == m.rows())
            .unwrap_or_else(|| build_clique(m.rows()).unwrap());
        let a = dp_audit(&m, &g).unwrap();
        let b = dp_audit(&m.permute_columns(&perm).unwrap(), &g).unwrap();
        prop_assert_eq!(a.worst_ratio, b.worst_ratio);
    }

    #[test]
    fn canonical_form_pipeline_on_sampled_matrices(seed in any::<u64>(), which in 0usize..7, denom in 2i64..5) {
        let g = &symmetric_graphs()[which];
        let pp = PrivacyParameter::from_ratio(rat(1, denom)).unwrap();
        let u = Prior::uniform(g.vertex_count());
        let ia = is_distance_regular(g).unwrap();
        let fam = vt_plus_certificate(g).family().cloned().unwrap();
        for m in random_dp_sample(g, &pp, 2, seed) {
            let before = dp_audit(&m, g).unwrap().worst_ratio.unwrap();
            let success = posterior_success(&u, &m).unwrap();
            let diag = to_diagonal_form(&m, g).unwrap();
            prop_assert!(dp_audit(&diag.matrix, g).unwrap().worst_ratio.unwrap() <= before);
            prop_assert_eq!(posterior_success(&u, &diag.matrix).unwrap(), success.clone());
            let trace: Rational = (0..g.vertex_count()).map(|v| diag.matrix.get(v, v)).sum();
            let expected_diag = trace / exact::int(g.vertex_count() as u64);
            for sym in [
                symmetrize_distance_regular(&diag, g, &ia).unwrap(),
                symmetrize_vt_plus(&diag, g, &fam).unwrap(),
            ] {
                prop_assert!(dp_audit(&sym.matrix, g).unwrap().worst_ratio.unwrap() <= before.clone());
                prop_assert_eq!(posterior_success(&u, &sym.matrix).unwrap(), success.clone());
                prop_assert_eq!(sym.diagonal_value().unwrap(), &expected_diag);
                prop_assert_eq!(sym.matrix.max_entry(), &expected_diag);
                // posterior success is the diagonal value under the uniform prior
                prop_assert_eq!(&success, &expected_diag);
                let again_dr = symmetrize_distance_regular(&sym, g, &ia).unwrap();
                prop_assert_eq!(&again_dr.matrix, &symmetrize_distance_regular(&diag, g, &ia).unwrap().matrix);
                // distance-symmetric matrices are fixed by any automorphism family
                let dr_form = symmetrize_distance_regular(&diag, g, &ia).unwrap();
                let vt_of_dr = symmetrize_vt_plus(&dr_form, g, &fam).unwrap();
                prop_assert_eq!(vt_of_dr.matrix.to_rows(), dr_form.matrix.to_rows());
            }
        }
    }

    #[test]
    fn sampled_leakage_respects_hamming_bound(seed in any::<u64>(), u in 1usize..3, v in 2usize..4, denom in 2i64..5) {
        let g = build_hamming(u, v).unwrap();
        let pp = PrivacyParameter::from_ratio(rat(1, denom)).unwrap();
        let bound = hamming_leakage_bound(u, v, &pp).bits;
        for m in random_dp_sample(&g, &pp, 3, seed) {
            prop_assert!(leakage(&Prior::uniform(g.vertex_count()), &m).unwrap() <= bound + 1e-12);
        }
    }

    #[test]
    fn compose_never_raises_epsilon(
        f in proptest::collection::vec(0usize..3, 4),
    ) {
        let x = build_hamming(2, 2).unwrap();
        let pp = PrivacyParameter::from_ratio(rat(1, 2)).unwrap();
        let h = optimal_mechanism(&build_clique(3).unwrap(), &pp).unwrap();
        let k = compose_oblivious(&f, &x, &h).unwrap();
        let k_audit = dp_audit(&k.matrix, &x).unwrap();
        let h_on_induced = dp_audit(&h.matrix, &k.induced_graph).unwrap();
        prop_assert_eq!(&k_audit.worst_ratio, &h_on_induced.worst_ratio);
        prop_assert!(k_audit.worst_ratio.unwrap() <= dp_audit(&h.matrix, &h.graph).unwrap().worst_ratio.unwrap());
    }
}

#[test]
fn bounds_are_monotone_in_the_ratio() {
    let profiles = [vec![1, 5], vec![1, 3, 6], vec![1, 2, 2, 1]];
    let ratios = [rat(1, 10), rat(1, 3), rat(1, 2), rat(2, 3), rat(1, 1)];
    for counts in profiles {
        let profile = dpleak_core::graphs::DistanceProfile { base_vertex: 0, counts };
        let mut last: Option<(f64, Rational)> = None;
        for r in &ratios {
            let pp = PrivacyParameter::from_ratio(r.clone()).unwrap();
            let post = posterior_entropy_bound(&profile, &pp);
            let ub = utility_bound(&profile, &pp);
            // utility is 2^-H exactly, before any logarithm
            assert_eq!(ub.probability.clone().unwrap(), profile_core(&profile, &pp).recip());
            assert_eq!(post.probability, ub.probability);
            if let Some((bits, util)) = &last {
                assert!(post.bits > *bits);
                assert!(ub.probability.clone().unwrap() < *util);
            }
            last = Some((post.bits, ub.probability.unwrap()));
        }
    }
    for u in 1..4 {
        let mut prev = f64::INFINITY;
        for r in &ratios {
            let b = hamming_leakage_bound(u, 3, &PrivacyParameter::from_ratio(r.clone()).unwrap()).bits;
            assert!(b < prev);
            prev = b;
        }
    }
}

#[test]
fn optimal_mechanisms_are_symmetrization_fixed_points() {
    let pp = PrivacyParameter::from_ratio(rat(1, 3)).unwrap();
    for g in symmetric_graphs() {
        let b = optimal_mechanism(&g, &pp).unwrap();
        let diag = to_diagonal_form(&b.matrix, &g).unwrap();
        let ia = is_distance_regular(&g).unwrap();
        assert_eq!(symmetrize_distance_regular(&diag, &g, &ia).unwrap().matrix.to_rows(), b.matrix.to_rows());
        let fam = vt_plus_certificate(&g).family().cloned().unwrap();
        assert_eq!(symmetrize_vt_plus(&diag, &g, &fam).unwrap().matrix.to_rows(), b.matrix.to_rows());
        if g.edge_count() > 0 {
            assert_eq!(dp_audit(&b.matrix, &g).unwrap().worst_ratio, Some(pp.inverse_ratio()));
        }
    }
}

#[test]
fn database_graphs_are_in_both_classes() {
    for u in 1..=4 {
        for v in 2..=3 {
            let g = build_hamming(u, v).unwrap();
            assert!(is_distance_regular(&g).is_some(), "hamming({u},{v}) distance-regular");
            let fam = vt_plus_certificate(&g).family().cloned().expect("VT+");
            assert!(verify_family(&g, &fam).unwrap());
        }
    }
}
