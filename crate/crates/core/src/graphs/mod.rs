//! Adjacency graphs over inputs or answers: construction, shortest-path
//! distances, distance profiles and the two symmetry classes
//! (distance-regular and VT⁺) the bounds depend on.

mod automorphism;

pub use automorphism::{
    automorphisms, vt_plus_certificate, vt_plus_certificate_with_budget, verify_family,
    AutomorphismFamily, FamilySource, GroupEnumeration, VtPlus, DEFAULT_SEARCH_BUDGET,
};

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Default vertex cap for generated graphs.
pub const DEFAULT_MAX_VERTICES: usize = 4096;

/// Distance between vertices in different components.
pub const UNREACHABLE: usize = usize::MAX;

/// A finite simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge list. Rejects self-loops, duplicate
    /// edges and out-of-range endpoints.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return arg("graph needs at least one vertex");
        }
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return arg(format!("edge ({a},{b}) has an endpoint >= {n}"));
            }
            if a == b {
                return arg(format!("self-loop at vertex {a}"));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return arg(format!("duplicate edge ({a},{b})"));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { n, adj, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return arg(format!(
                "{} labels supplied for {} vertices",
                labels.len(),
                self.n
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(low, high)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of `v`, falling back to its index.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn is_connected(&self) -> bool {
        bfs(self, 0).iter().all(|&d| d != UNREACHABLE)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphJson {
            n: self.n,
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            labels: self.labels.clone(),
        };
        serde_json::to_string(&doc).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphJson = serde_json::from_str(text)?;
        let edges: Vec<_> = doc.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = Graph::new(doc.n, &edges)?;
        match doc.labels {
            Some(labels) => g.with_labels(labels),
            None => Ok(g),
        }
    }

    /// Index of the vertex carrying `label`.
    pub fn vertex_by_label(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|x| x == label),
            None => label.parse().ok().filter(|&v: &usize| v < self.n),
        }
    }
}

/// Database graph `V^Ind`: all `u`-tuples over `v` values, adjacent when
/// they differ in exactly one coordinate.
pub fn build_hamming(u: usize, v: usize) -> Result<Graph> {
    build_hamming_capped(u, v, DEFAULT_MAX_VERTICES)
}

pub fn build_hamming_capped(u: usize, v: usize, max_vertices: usize) -> Result<Graph> {
    if u < 1 {
        return arg("hamming graph needs at least one individual");
    }
    if v < 2 {
        return arg("hamming graph needs at least two values");
    }
    let n = (v as u128).checked_pow(u as u32).unwrap_or(u128::MAX);
    if n > max_vertices as u128 {
        return Err(Error::Resource {
            what: "hamming graph vertices",
            requested: n,
            cap: max_vertices as u128,
        });
    }
    let n = n as usize;
    let mut edges = Vec::new();
    for x in 0..n {
        // flip one coordinate at a time; place value stride walks the digits
        let mut stride = 1;
        for _ in 0..u {
            let digit = (x / stride) % v;
            for other in digit + 1..v {
                edges.push((x, x + (other - digit) * stride));
            }
            stride *= v;
        }
    }
    let labels = (0..n).map(|x| hamming_label(x, u, v)).collect();
    Graph::new(n, &edges)?.with_labels(labels)
}

/// Base-`v` digits of `x`, most significant individual first. Alphabets
/// wider than 36 symbols use dot-separated decimal digits.
fn hamming_label(x: usize, u: usize, v: usize) -> String {
    let mut digits = Vec::with_capacity(u);
    let mut rest = x;
    for _ in 0..u {
        digits.push(rest % v);
        rest /= v;
    }
    digits.reverse();
    if v <= 36 {
        digits
            .into_iter()
            .map(|d| std::char::from_digit(d as u32, 36).unwrap())
            .collect()
    } else {
        digits
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// Recognizes a graph produced by [`build_hamming`] from its labels and
/// edges, returning `(u, v)`.
pub fn hamming_shape(g: &Graph) -> Option<(usize, usize)> {
    let labels = g.labels()?;
    let u = labels.first()?.chars().count();
    if u == 0 {
        return None;
    }
    let n = g.vertex_count();
    let v = (2..=n.min(36)).find(|&v| (v as u128).checked_pow(u as u32) == Some(n as u128))?;
    if labels
        .iter()
        .enumerate()
        .any(|(x, l)| *l != hamming_label(x, u, v))
    {
        return None;
    }
    let expected = build_hamming_capped(u, v, n).ok()?;
    (expected.adj == g.adj).then_some((u, v))
}

pub fn build_clique(n: usize) -> Result<Graph> {
    if n < 2 {
        return arg("clique needs at least 2 vertices");
    }
    let edges: Vec<_> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    Graph::new(n, &edges)
}

pub fn build_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return arg("cycle needs at least 3 vertices");
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::new(n, &edges)
}

pub fn build_path(n: usize) -> Result<Graph> {
    if n < 1 {
        return arg("path needs at least 1 vertex");
    }
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::new(n, &edges)
}

/// Star `K_{1,k}` with the hub at vertex 0.
pub fn build_star(leaves: usize) -> Result<Graph> {
    if leaves < 1 {
        return arg("star needs at least one leaf");
    }
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    Graph::new(leaves + 1, &edges)
}

/// Petersen graph: outer 5-cycle 0..5, inner pentagram 5..10, spokes i–i+5.
pub fn build_petersen() -> Graph {
    let mut edges = Vec::with_capacity(15);
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
        edges.push((i, i + 5));
    }
    Graph::new(10, &edges).expect("petersen edges are valid")
}

/// Parses a family spec: `hamming:U,V`, `clique:N`, `cycle:N`, `path:N`,
/// `star:K`, `petersen`.
pub fn build_family(spec: &str, max_vertices: usize) -> Result<Graph> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let nums: Vec<usize> = if params.is_empty() {
        Vec::new()
    } else {
        params
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad parameter {p:?} in {spec:?}")))
            })
            .collect::<Result<_>>()?
    };
    let one = |nums: &[usize]| match nums {
        [n] => Ok(*n),
        _ => arg(format!("{name} takes exactly one parameter")),
    };
    let g = match name.trim().to_ascii_lowercase().as_str() {
        "hamming" => match nums[..] {
            [u, v] => build_hamming_capped(u, v, max_vertices)?,
            _ => return arg("hamming takes two parameters: U,V"),
        },
        "clique" | "complete" => build_clique(one(&nums)?)?,
        "cycle" => build_cycle(one(&nums)?)?,
        "path" => build_path(one(&nums)?)?,
        "star" => build_star(one(&nums)?)?,
        "petersen" => build_petersen(),
        other => return arg(format!("unknown graph family {other:?}")),
    };
    if g.vertex_count() > max_vertices {
        return Err(Error::Resource {
            what: "graph vertices",
            requested: g.vertex_count() as u128,
            cap: max_vertices as u128,
        });
    }
    Ok(g)
}

fn bfs(g: &Graph, source: usize) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; g.n];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in &g.adj[v] {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs shortest-path lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<usize>,
    diameter: Option<usize>,
}

impl DistanceMatrix {
    pub fn get(&self, a: usize, b: usize) -> usize {
        self.dist[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[usize] {
        &self.dist[a * self.n..(a + 1) * self.n]
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// `None` when the graph is disconnected.
    pub fn diameter(&self) -> Option<usize> {
        self.diameter
    }

    pub fn is_connected(&self) -> bool {
        self.diameter.is_some()
    }

    pub fn require_connected(&self) -> Result<usize> {
        self.diameter.ok_or(Error::Disconnected)
    }
}

pub fn distances(g: &Graph) -> DistanceMatrix {
    let n = g.n;
    let mut dist = Vec::with_capacity(n * n);
    for v in 0..n {
        dist.extend(bfs(g, v));
    }
    let diameter = if dist.contains(&UNREACHABLE) {
        None
    } else {
        dist.iter().copied().max()
    };
    DistanceMatrix { n, dist, diameter }
}

/// Number of vertices at each distance from a base vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub base_vertex: usize,
    pub counts: Vec<usize>,
}

impl DistanceProfile {
    pub fn diameter(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn distance_profile(g: &Graph, base: usize) -> Result<DistanceProfile> {
    if base >= g.n {
        return arg(format!("base vertex {base} out of range"));
    }
    profile_from(&distances(g), base)
}

pub(crate) fn profile_from(dm: &DistanceMatrix, base: usize) -> Result<DistanceProfile> {
    let diameter = dm.require_connected()?;
    let mut counts = vec![0; diameter + 1];
    for &d in dm.row(base) {
        counts[d] += 1;
    }
    // eccentricity of `base` may be below the diameter
    while counts.last() == Some(&0) {
        counts.pop();
    }
    Ok(DistanceProfile {
        base_vertex: base,
        counts,
    })
}

/// The profile shared by every vertex, or an error naming two vertices
/// whose profiles differ.
pub fn uniform_profile(g: &Graph) -> Result<DistanceProfile> {
    uniform_profile_from(&distances(g))
}

pub(crate) fn uniform_profile_from(dm: &DistanceMatrix) -> Result<DistanceProfile> {
    let first = profile_from(dm, 0)?;
    for v in 1..dm.vertex_count() {
        let p = profile_from(dm, v)?;
        if p.counts != first.counts {
            return Err(Error::Precondition(format!(
                "distance profile depends on the base vertex: vertex 0 has {:?}, vertex {v} has {:?}",
                first.counts, p.counts
            )));
        }
    }
    Ok(first)
}

/// Intersection array `{b_0..b_{D-1}; c_1..c_D}` of a distance-regular graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionArray {
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

impl IntersectionArray {
    pub fn diameter(&self) -> usize {
        self.c.len()
    }

    /// `k_i`: vertices at distance `i` from any vertex, from the recurrence
    /// `k_{i+1} = k_i b_i / c_{i+1}`.
    pub fn distance_counts(&self) -> Vec<usize> {
        let mut k = vec![1usize];
        for i in 0..self.b.len() {
            let next = k[i] * self.b[i] / self.c[i];
            k.push(next);
        }
        k
    }
}

impl std::fmt::Display for IntersectionArray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "b=({}), c=({})", join(&self.b), join(&self.c))
    }
}

/// Returns the intersection array iff `g` is connected and distance-regular.
pub fn is_distance_regular(g: &Graph) -> Option<IntersectionArray> {
    intersection_array_from(g, &distances(g))
}

pub(crate) fn intersection_array_from(
    g: &Graph,
    dm: &DistanceMatrix,
) -> Option<IntersectionArray> {
    let diameter = dm.diameter()?;
    let mut b: Vec<Option<usize>> = vec![None; diameter + 1];
    let mut c: Vec<Option<usize>> = vec![None; diameter + 1];
    for v in 0..g.n {
        let from_v = dm.row(v);
        for w in 0..g.n {
            let i = from_v[w];
            let (mut down, mut up) = (0, 0);
            for &x in g.neighbors(w) {
                let dx = from_v[x];
                if dx + 1 == i {
                    down += 1;
                } else if dx == i + 1 {
                    up += 1;
                }
            }
            for (slot, count) in [(&mut c[i], down), (&mut b[i], up)] {
                match slot {
                    None => *slot = Some(count),
                    Some(prev) if *prev != count => return None,
                    _ => {}
                }
            }
        }
    }
    Some(IntersectionArray {
        b: b[..diameter].iter().map(|x| x.unwrap_or(0)).collect(),
        c: c[1..].iter().map(|x| x.unwrap_or(0)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_3_2_is_the_cube() {
        let g = build_hamming(3, 2).unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert!(g.degree_sequence().iter().all(|&d| d == 3));
        assert_eq!(g.edge_count(), 12);
        let dm = distances(&g);
        let a = g.vertex_by_label("000").unwrap();
        let b = g.vertex_by_label("111").unwrap();
        assert_eq!(dm.get(a, b), 3);
        assert_eq!(dm.diameter(), Some(3));
    }

    #[test]
    fn hamming_1_2_is_an_edge() {
        let g = build_hamming(1, 2).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn hamming_2_3_by_enumeration() {
        let g = build_hamming(2, 3).unwrap();
        assert_eq!(g.vertex_count(), 9);
        // brute force over label pairs: adjacent iff exactly one position differs
        let labels = g.labels().unwrap();
        for a in 0..9 {
            for b in 0..9 {
                let diff = labels[a]
                    .chars()
                    .zip(labels[b].chars())
                    .filter(|(x, y)| x != y)
                    .count();
                assert_eq!(g.is_adjacent(a, b), diff == 1);
            }
            assert_eq!(g.degree(a), 4);
        }
        assert_eq!(distances(&g).diameter(), Some(2));
    }

    #[test]
    fn hamming_labels_most_significant_first() {
        let g = build_hamming(2, 3).unwrap();
        let labels: Vec<_> = g.labels().unwrap().to_vec();
        assert_eq!(labels[..4], ["00", "01", "02", "10"]);
        assert_eq!(hamming_shape(&g), Some((2, 3)));
        assert_eq!(hamming_shape(&build_cycle(4).unwrap()), None);
    }

    #[test]
    fn hamming_size_cap() {
        assert!(matches!(
            build_hamming_capped(13, 2, 4096),
            Err(Error::Resource { .. })
        ));
        assert!(build_hamming(12, 2).is_ok());
        assert!(build_hamming(0, 2).is_err());
        assert!(build_hamming(2, 1).is_err());
    }

    #[test]
    fn standard_families() {
        let k6 = build_clique(6).unwrap();
        assert_eq!(k6.edge_count(), 15);
        assert_eq!(distances(&k6).diameter(), Some(1));
        assert_eq!(distance_profile(&k6, 3).unwrap().counts, vec![1, 5]);

        let c6 = build_cycle(6).unwrap();
        assert_eq!(distances(&c6).get(0, 3), 3);
        assert_eq!(distance_profile(&c6, 0).unwrap().counts, vec![1, 2, 2, 1]);

        let p = build_petersen();
        assert_eq!(p.edge_count(), 15);
        assert!(p.degree_sequence().iter().all(|&d| d == 3));
        assert_eq!(distances(&p).diameter(), Some(2));
        assert_eq!(distance_profile(&p, 7).unwrap().counts, vec![1, 3, 6]);

        assert!(build_clique(1).is_err());
        assert!(build_cycle(2).is_err());
    }

    #[test]
    fn petersen_girth_is_five() {
        let g = build_petersen();
        // no triangles and no 4-cycles: adjacent vertices share no neighbour,
        // non-adjacent vertices share exactly one
        for a in 0..10 {
            for b in a + 1..10 {
                let common = g
                    .neighbors(a)
                    .iter()
                    .filter(|x| g.is_adjacent(b, **x))
                    .count();
                assert_eq!(common, usize::from(!g.is_adjacent(a, b)));
            }
        }
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(3, &[(0, 0)]).is_err());
        assert!(Graph::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, &[(0, 3)]).is_err());
        assert!(Graph::new(0, &[]).is_err());
    }

    #[test]
    fn disconnected_graphs() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let dm = distances(&g);
        assert_eq!(dm.get(0, 2), UNREACHABLE);
        assert_eq!(dm.diameter(), None);
        assert!(matches!(distance_profile(&g, 0), Err(Error::Disconnected)));
        assert!(is_distance_regular(&g).is_none());
    }

    #[test]
    fn hamming_profile_matches_binomial_count() {
        let binom = |n: usize, k: usize| -> usize {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        };
        for u in 1..=4 {
            for v in 2..=3 {
                let g = build_hamming(u, v).unwrap();
                let expected: Vec<_> = (0..=u).map(|d| binom(u, d) * (v - 1).pow(d as u32)).collect();
                for base in 0..g.vertex_count() {
                    assert_eq!(distance_profile(&g, base).unwrap().counts, expected);
                }
            }
        }
    }

    #[test]
    fn distance_regular_classification() {
        let ia = is_distance_regular(&build_petersen()).unwrap();
        assert_eq!(ia.b, vec![3, 2]);
        assert_eq!(ia.c, vec![1, 1]);
        assert_eq!(ia.to_string(), "b=(3,2), c=(1,1)");
        assert_eq!(ia.distance_counts(), vec![1, 3, 6]);

        assert!(is_distance_regular(&build_star(3).unwrap()).is_none());
        assert!(is_distance_regular(&build_path(3).unwrap()).is_none());

        let cube = is_distance_regular(&build_hamming(3, 2).unwrap()).unwrap();
        assert_eq!(cube.b, vec![3, 2, 1]);
        assert_eq!(cube.c, vec![1, 2, 3]);
    }

    #[test]
    fn family_specs() {
        assert_eq!(build_family("hamming:3,2", 4096).unwrap().vertex_count(), 8);
        assert_eq!(build_family("petersen", 4096).unwrap().vertex_count(), 10);
        assert_eq!(build_family("path:3", 4096).unwrap().edge_count(), 2);
        assert!(build_family("cycle", 4096).is_err());
        assert!(build_family("torus:3", 4096).is_err());
        assert!(build_family("clique:100", 50).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = build_hamming(2, 2).unwrap();
        let back = Graph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        let plain = Graph::from_json(r#"{"n":3,"edges":[[0,1],[1,2]]}"#).unwrap();
        assert_eq!(plain.labels(), None);
        assert!(Graph::from_json(r#"{"n":2,"edges":[[0,0]]}"#).is_err());
    }
}
