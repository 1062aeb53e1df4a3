//! Automorphism search and VT⁺ certificates.
//!
//! A VT⁺ certificate is a list of `n` automorphisms whose images of every
//! vertex cover the vertex set, i.e. a sharply transitive set of
//! automorphisms (every ordered pair `(v, w)` is realized by exactly one
//! member). The search tries, in order: the translation family of a
//! Hamming graph, the powers of a single-orbit automorphism, and finally
//! an exact cover over the enumerated automorphism group.

use serde::{Deserialize, Serialize};

use super::{distances, hamming_shape, DistanceMatrix, Graph, UNREACHABLE};
use crate::error::{arg, Result};

/// Search nodes allowed before a search reports `Unknown`.
pub const DEFAULT_SEARCH_BUDGET: u64 = 5_000_000;

/// `n` vertex permutations claimed to form a VT⁺ system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomorphismFamily {
    perms: Vec<Vec<usize>>,
}

impl AutomorphismFamily {
    pub fn new(perms: Vec<Vec<usize>>) -> Self {
        AutomorphismFamily { perms }
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    /// Powers `σ^0 .. σ^{n-1}` of a single permutation.
    pub fn powers_of(sigma: &[usize]) -> Self {
        let n = sigma.len();
        let mut perms = Vec::with_capacity(n);
        let mut current: Vec<usize> = (0..n).collect();
        for _ in 0..n {
            let next = current.iter().map(|&v| sigma[v]).collect();
            perms.push(std::mem::replace(&mut current, next));
        }
        AutomorphismFamily { perms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySource {
    HammingTranslation,
    SingleOrbit,
    ExactCover,
}

/// Outcome of a VT⁺ search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VtPlus {
    Yes {
        family: AutomorphismFamily,
        source: FamilySource,
    },
    /// The full automorphism group was enumerated and admits no VT⁺ system.
    No { group_order: usize },
    /// Search budget ran out first.
    Unknown { nodes: u64 },
}

impl VtPlus {
    pub fn family(&self) -> Option<&AutomorphismFamily> {
        match self {
            VtPlus::Yes { family, .. } => Some(family),
            _ => None,
        }
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            VtPlus::Yes { .. } => "yes",
            VtPlus::No { .. } => "no",
            VtPlus::Unknown { .. } => "unknown",
        }
    }
}

/// True iff `fam` has `n` members, each an automorphism of `g`, and for
/// every vertex the images under the members are pairwise distinct.
pub fn verify_family(g: &Graph, fam: &AutomorphismFamily) -> Result<bool> {
    let n = g.vertex_count();
    if let Some(bad) = fam.perms.iter().find(|p| p.len() != n) {
        return arg(format!(
            "permutation of length {} for a graph on {n} vertices",
            bad.len()
        ));
    }
    if fam.len() != n {
        return Ok(false);
    }
    for perm in &fam.perms {
        if !is_automorphism(g, perm) {
            return Ok(false);
        }
    }
    for v in 0..n {
        let mut hit = vec![false; n];
        for perm in &fam.perms {
            if std::mem::replace(&mut hit[perm[v]], true) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn is_automorphism(g: &Graph, perm: &[usize]) -> bool {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    for &x in perm {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return false;
        }
    }
    g.edges()
        .iter()
        .all(|&(a, b)| g.is_adjacent(perm[a], perm[b]))
}

pub fn vt_plus_certificate(g: &Graph) -> VtPlus {
    vt_plus_certificate_with_budget(g, DEFAULT_SEARCH_BUDGET)
}

pub fn vt_plus_certificate_with_budget(g: &Graph, budget: u64) -> VtPlus {
    let n = g.vertex_count();
    if let Some((u, v)) = hamming_shape(g) {
        let family = translation_family(u, v);
        debug_assert!(verify_family(g, &family).unwrap_or(false));
        return VtPlus::Yes {
            family,
            source: FamilySource::HammingTranslation,
        };
    }
    let dm = distances(g);
    let inv = invariants(&dm);
    // every member maps 0 to a different vertex, so all invariants must agree
    if inv.iter().any(|x| *x != inv[0]) {
        let group = automorphisms_with(&dm, &inv, budget);
        return if group.complete {
            VtPlus::No {
                group_order: group.elements.len(),
            }
        } else {
            VtPlus::Unknown { nodes: group.nodes }
        };
    }

    let mut nodes = 0u64;
    match single_orbit_automorphism(&dm, budget, &mut nodes) {
        Search::Found(sigma) => {
            return VtPlus::Yes {
                family: AutomorphismFamily::powers_of(&sigma),
                source: FamilySource::SingleOrbit,
            }
        }
        Search::Exhausted => return VtPlus::Unknown { nodes },
        Search::None => {}
    }

    let group = automorphisms_with(&dm, &inv, budget.saturating_sub(nodes));
    nodes += group.nodes;
    if !group.complete {
        return VtPlus::Unknown { nodes };
    }
    match sharply_transitive_subset(n, &group.elements, budget.saturating_sub(nodes), &mut nodes) {
        Search::Found(perms) => VtPlus::Yes {
            family: AutomorphismFamily::new(perms),
            source: FamilySource::ExactCover,
        },
        Search::None => VtPlus::No {
            group_order: group.elements.len(),
        },
        Search::Exhausted => VtPlus::Unknown { nodes },
    }
}

/// Coordinate-wise translations `x ↦ x + t (mod v)` for every tuple `t`.
fn translation_family(u: usize, v: usize) -> AutomorphismFamily {
    let n = v.pow(u as u32);
    let digits = |mut x: usize| {
        let mut d = vec![0; u];
        for slot in d.iter_mut() {
            *slot = x % v;
            x /= v;
        }
        d
    };
    let tuples: Vec<Vec<usize>> = (0..n).map(digits).collect();
    let perms = tuples
        .iter()
        .map(|t| {
            tuples
                .iter()
                .map(|x| {
                    x.iter()
                        .zip(t)
                        .rev()
                        .fold(0, |acc, (a, b)| acc * v + (a + b) % v)
                })
                .collect()
        })
        .collect();
    AutomorphismFamily::new(perms)
}

/// Per-vertex invariant: counts of vertices at each distance, with the
/// unreachable count last.
fn invariants(dm: &DistanceMatrix) -> Vec<Vec<usize>> {
    let n = dm.vertex_count();
    (0..n)
        .map(|v| {
            let mut counts = vec![0usize; n + 1];
            for &d in dm.row(v) {
                counts[if d == UNREACHABLE { n } else { d }] += 1;
            }
            counts
        })
        .collect()
}

enum Search<T> {
    Found(T),
    None,
    Exhausted,
}

/// Looks for an automorphism that is a single `n`-cycle by growing the
/// orbit of vertex 0 one step at a time.
fn single_orbit_automorphism(dm: &DistanceMatrix, budget: u64, nodes: &mut u64) -> Search<Vec<usize>> {
    let n = dm.vertex_count();
    if n == 1 {
        return Search::Found(vec![0]);
    }
    // orbit[k] = σ^k(0); σ(orbit[k]) = orbit[k+1]
    let mut orbit = vec![0usize];
    let mut used = vec![false; n];
    used[0] = true;

    fn extend(
        dm: &DistanceMatrix,
        orbit: &mut Vec<usize>,
        used: &mut [bool],
        budget: u64,
        nodes: &mut u64,
    ) -> Search<()> {
        let n = dm.vertex_count();
        if orbit.len() == n {
            // closing step σ(orbit[n-1]) = 0 must also preserve distances
            let last = n - 1;
            let ok = (0..last).all(|i| dm.get(orbit[i], orbit[last]) == dm.get(orbit[i + 1], 0));
            return if ok { Search::Found(()) } else { Search::None };
        }
        let k = orbit.len() - 1;
        for w in 0..n {
            if used[w] {
                continue;
            }
            *nodes += 1;
            if *nodes > budget {
                return Search::Exhausted;
            }
            // σ(orbit[i]) = orbit[i+1] for i < k, and now σ(orbit[k]) = w
            let ok = (0..k).all(|i| dm.get(orbit[i], orbit[k]) == dm.get(orbit[i + 1], w));
            if !ok {
                continue;
            }
            used[w] = true;
            orbit.push(w);
            match extend(dm, orbit, used, budget, nodes) {
                Search::None => {}
                other => return other,
            }
            orbit.pop();
            used[w] = false;
        }
        Search::None
    }

    match extend(dm, &mut orbit, &mut used, budget, nodes) {
        Search::Found(()) => {
            let mut sigma = vec![0; n];
            for k in 0..n {
                sigma[orbit[k]] = orbit[(k + 1) % n];
            }
            Search::Found(sigma)
        }
        Search::None => Search::None,
        Search::Exhausted => Search::Exhausted,
    }
}

/// Automorphisms found by a search, flagged complete when the whole group
/// was enumerated within budget.
#[derive(Debug, Clone)]
pub struct GroupEnumeration {
    pub elements: Vec<Vec<usize>>,
    pub complete: bool,
    pub nodes: u64,
}

/// Enumerates the automorphism group of `g` by backtracking over
/// distance-preserving partial maps, pruned by per-vertex distance-count
/// invariants.
pub fn automorphisms(g: &Graph, budget: u64) -> GroupEnumeration {
    let dm = distances(g);
    let inv = invariants(&dm);
    automorphisms_with(&dm, &inv, budget)
}

fn automorphisms_with(dm: &DistanceMatrix, inv: &[Vec<usize>], budget: u64) -> GroupEnumeration {
    let n = dm.vertex_count();
    let order = search_order(dm);
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut out = GroupEnumeration {
        elements: Vec::new(),
        complete: true,
        nodes: 0,
    };

    fn go(
        pos: usize,
        order: &[usize],
        dm: &DistanceMatrix,
        inv: &[Vec<usize>],
        image: &mut [usize],
        used: &mut [bool],
        budget: u64,
        out: &mut GroupEnumeration,
    ) -> bool {
        if pos == order.len() {
            out.elements.push(image.to_vec());
            return true;
        }
        let v = order[pos];
        for w in 0..order.len() {
            if used[w] || inv[w] != inv[v] {
                continue;
            }
            out.nodes += 1;
            if out.nodes > budget {
                out.complete = false;
                return false;
            }
            let consistent = order[..pos]
                .iter()
                .all(|&x| dm.get(x, v) == dm.get(image[x], w));
            if !consistent {
                continue;
            }
            image[v] = w;
            used[w] = true;
            let keep_going = go(pos + 1, order, dm, inv, image, used, budget, out);
            used[w] = false;
            image[v] = usize::MAX;
            if !keep_going {
                return false;
            }
        }
        true
    }

    go(0, &order, dm, inv, &mut image, &mut used, budget, &mut out);
    out
}

/// BFS order, component by component, so each new vertex is close to the
/// already-placed ones.
fn search_order(dm: &DistanceMatrix) -> Vec<usize> {
    let n = dm.vertex_count();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if placed[root] {
            continue;
        }
        let mut layer: Vec<usize> = (0..n).filter(|&v| dm.get(root, v) != UNREACHABLE).collect();
        layer.sort_by_key(|&v| dm.get(root, v));
        for v in layer {
            placed[v] = true;
            order.push(v);
        }
    }
    order
}

/// Exact cover of all ordered pairs `(v, w)` by `n` group elements.
fn sharply_transitive_subset(
    n: usize,
    group: &[Vec<usize>],
    budget: u64,
    nodes: &mut u64,
) -> Search<Vec<Vec<usize>>> {
    // candidates[w] = elements sending vertex 0 to w
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, perm) in group.iter().enumerate() {
        candidates[perm[0]].push(idx);
    }
    if candidates.iter().any(Vec::is_empty) {
        return Search::None;
    }
    let mut covered = vec![false; n * n];
    let mut chosen: Vec<Option<usize>> = vec![None; n];
    let start = *nodes;

    fn compatible(perm: &[usize], covered: &[bool], n: usize) -> bool {
        perm.iter().enumerate().all(|(v, &w)| !covered[v * n + w])
    }

    fn go(
        n: usize,
        group: &[Vec<usize>],
        candidates: &[Vec<usize>],
        covered: &mut [bool],
        chosen: &mut [Option<usize>],
        budget: u64,
        start: u64,
        nodes: &mut u64,
    ) -> Search<()> {
        // most constrained open target first
        let mut best: Option<(usize, Vec<usize>)> = None;
        for w in (0..n).filter(|&w| chosen[w].is_none()) {
            let live: Vec<usize> = candidates[w]
                .iter()
                .copied()
                .filter(|&c| compatible(&group[c], covered, n))
                .collect();
            if live.is_empty() {
                return Search::None;
            }
            if best.as_ref().map_or(true, |(_, b)| live.len() < b.len()) {
                best = Some((w, live));
            }
        }
        let Some((w, live)) = best else {
            return Search::Found(());
        };
        for c in live {
            *nodes += 1;
            if *nodes - start > budget {
                return Search::Exhausted;
            }
            for (v, &x) in group[c].iter().enumerate() {
                covered[v * n + x] = true;
            }
            chosen[w] = Some(c);
            match go(n, group, candidates, covered, chosen, budget, start, nodes) {
                Search::None => {}
                other => return other,
            }
            chosen[w] = None;
            for (v, &x) in group[c].iter().enumerate() {
                covered[v * n + x] = false;
            }
        }
        Search::None
    }

    match go(n, group, &candidates, &mut covered, &mut chosen, budget, start, nodes) {
        Search::Found(()) => Search::Found(
            chosen
                .into_iter()
                .map(|c| group[c.expect("all targets chosen")].clone())
                .collect(),
        ),
        Search::None => Search::None,
        Search::Exhausted => Search::Exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_clique, build_cycle, build_hamming, build_path, build_petersen, build_star};

    fn yes(g: &Graph) -> (AutomorphismFamily, FamilySource) {
        match vt_plus_certificate(g) {
            VtPlus::Yes { family, source } => (family, source),
            other => panic!("expected yes, got {other:?}"),
        }
    }

    #[test]
    fn cycles_use_rotation() {
        for n in 3..=9 {
            let g = build_cycle(n).unwrap();
            let (fam, source) = yes(&g);
            assert_eq!(source, FamilySource::SingleOrbit);
            assert!(verify_family(&g, &fam).unwrap());
        }
    }

    #[test]
    fn hamming_uses_translations() {
        let g = build_hamming(3, 2).unwrap();
        let (fam, source) = yes(&g);
        assert_eq!(source, FamilySource::HammingTranslation);
        assert!(verify_family(&g, &fam).unwrap());
    }

    #[test]
    fn path3_is_not_vt_plus() {
        let g = build_path(3).unwrap();
        assert_eq!(automorphisms(&g, 1000).elements.len(), 2);
        assert_eq!(vt_plus_certificate(&g), VtPlus::No { group_order: 2 });
        assert_eq!(vt_plus_certificate(&build_star(3).unwrap()).verdict(), "no");
    }

    #[test]
    fn group_orders() {
        let order = |g: &Graph| {
            let e = automorphisms(g, u64::MAX);
            assert!(e.complete);
            e.elements.len()
        };
        assert_eq!(order(&build_cycle(6).unwrap()), 12);
        assert_eq!(order(&build_clique(5).unwrap()), 120);
        assert_eq!(order(&build_petersen()), 120);
        assert_eq!(order(&build_hamming(3, 2).unwrap()), 48);
        for perm in automorphisms(&build_petersen(), u64::MAX).elements {
            assert!(is_automorphism(&build_petersen(), &perm));
        }
    }

    #[test]
    fn petersen_certificate_is_decided() {
        let g = build_petersen();
        match vt_plus_certificate(&g) {
            VtPlus::Yes { family, .. } => assert!(verify_family(&g, &family).unwrap()),
            VtPlus::No { group_order } => assert_eq!(group_order, 120),
            VtPlus::Unknown { .. } => panic!("petersen search should terminate"),
        }
    }

    #[test]
    fn tiny_budget_reports_unknown() {
        let g = build_petersen();
        assert!(matches!(
            vt_plus_certificate_with_budget(&g, 5),
            VtPlus::Unknown { .. }
        ));
    }

    #[test]
    fn verify_family_checks() {
        let g = build_cycle(4).unwrap();
        let rotations = AutomorphismFamily::powers_of(&[1, 2, 3, 0]);
        assert!(verify_family(&g, &rotations).unwrap());
        let identity = AutomorphismFamily::new(vec![vec![0, 1, 2, 3]; 4]);
        assert!(!verify_family(&g, &identity).unwrap());
        let short = AutomorphismFamily::new(vec![vec![0, 1, 2]]);
        assert!(verify_family(&g, &short).is_err());
        // a Latin square of non-automorphisms fails too
        let swaps = AutomorphismFamily::new(vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ]);
        assert!(verify_family(&g, &swaps).unwrap() == is_automorphism(&g, &[1, 0, 3, 2]));

        let h = build_hamming(2, 2).unwrap();
        assert!(verify_family(&h, &translation_family(2, 2)).unwrap());
    }

    #[test]
    fn exact_cover_path_matches_fast_paths() {
        // bypass the fast paths and run the general search directly
        for g in [build_cycle(6).unwrap(), build_hamming(2, 3).unwrap(), build_clique(4).unwrap()] {
            let dm = distances(&g);
            let inv = invariants(&dm);
            let group = automorphisms_with(&dm, &inv, u64::MAX);
            let mut nodes = 0;
            match sharply_transitive_subset(g.vertex_count(), &group.elements, u64::MAX, &mut nodes) {
                Search::Found(perms) => {
                    assert!(verify_family(&g, &AutomorphismFamily::new(perms)).unwrap())
                }
                _ => panic!("exact cover should succeed"),
            }
        }
    }

    #[test]
    fn single_orbit_only_in_small_database_graphs() {
        // databases V^Ind with a single-orbit automorphism, checked on small cases
        let has_single_orbit = |u, v| {
            let g = build_hamming(u, v).unwrap();
            let dm = distances(&g);
            let mut nodes = 0;
            matches!(single_orbit_automorphism(&dm, u64::MAX, &mut nodes), Search::Found(_))
        };
        assert!(has_single_orbit(1, 2));
        assert!(has_single_orbit(2, 2));
        // one individual gives a clique, which always has a rotation
        assert!(has_single_orbit(1, 3));
        assert!(!has_single_orbit(3, 2));
        assert!(!has_single_orbit(2, 3));
    }
}
