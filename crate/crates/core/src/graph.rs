//! Weighted graphs, vertex measure, integrals, BFS distances, balls and domains.

use std::collections::{HashSet, VecDeque};
use std::ops::Deref;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected graph with symmetric positive weights and the induced vertex measure.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    measure: Vec<f64>,
    connected: bool,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: usize,
    edges: Vec<(usize, usize, f64)>,
}

/// Builds a graph whose vertex count is one past the largest index in `edges`.
pub fn build_graph(edges: &[(usize, usize, f64)]) -> Result<WeightedGraph> {
    let n = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    WeightedGraph::new(n, edges)
}

impl WeightedGraph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidParameter("a graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::new();
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut stored = Vec::with_capacity(edges.len());
        for &(i, j, weight) in edges {
            for index in [i, j] {
                if index >= vertex_count {
                    return Err(Error::VertexOutOfRange {
                        index,
                        count: vertex_count,
                    });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::NonPositiveWeight { i, j, weight });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::DuplicateEdge(i, j));
            }
            adjacency[i].push((j, weight));
            adjacency[j].push((i, weight));
            stored.push(Edge { i, j, weight });
        }
        if let Some(x) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedVertex(x));
        }
        let measure = adjacency
            .iter()
            .map(|nbrs| nbrs.iter().map(|&(_, w)| w).sum())
            .collect();
        let connected = bfs(&adjacency, 0).iter().all(Option::is_some);
        Ok(Self {
            edges: stored,
            adjacency,
            measure,
            connected,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    /// ψ(x), the sum of weights of edges at x.
    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn volume(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.connected {
            return Ok(());
        }
        let vertex = bfs(&self.adjacency, 0).iter().position(Option::is_none).unwrap_or(0);
        Err(Error::Disconnected { from: 0, vertex })
    }

    pub fn min_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).fold(f64::INFINITY, f64::min)
    }

    pub fn min_measure(&self) -> f64 {
        self.measure.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// All weights multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let edges: Vec<_> = self.edges.iter().map(|e| (e.i, e.j, factor * e.weight)).collect();
        Self::new(self.vertex_count(), &edges)
    }

    /// Weights rescaled so that the total measure is 1.
    pub fn with_unit_volume(&self) -> Result<Self> {
        self.rescaled(1.0 / self.volume())
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            vertices: self.vertex_count(),
            edges: self.edges.iter().map(|e| (e.i, e.j, e.weight)).collect(),
        };
        serde_json::to_string(&file).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        Self::new(file.vertices, &file.edges)
    }

    /// Parses "i j w" lines; `#` starts a comment.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("line {}: expected \"i j w\", found {raw:?}", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let i = fields[0].parse().map_err(|_| bad())?;
            let j = fields[1].parse().map_err(|_| bad())?;
            let w = fields[2].parse().map_err(|_| bad())?;
            edges.push((i, j, w));
        }
        build_graph(&edges)
    }

    /// Reads JSON when the file parses as such, otherwise a plain edge list.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_edge_list(&text)
        }
    }
}

/// A finite real function on the vertices of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFunction(Vec<f64>);

impl GraphFunction {
    pub fn new(g: &WeightedGraph, values: Vec<f64>) -> Result<Self> {
        check_len(g.vertex_count(), values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GraphFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// ∫ u dψ over all vertices.
pub fn integral(g: &WeightedGraph, u: &[f64]) -> Result<f64> {
    check_len(g.vertex_count(), u.len())?;
    Ok(g.measure().iter().zip(u).map(|(m, x)| m * x).sum())
}

/// ∫ over the listed vertices only.
pub fn integral_over(g: &WeightedGraph, u: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&x| g.measure()[x] * u[x]).sum()
}

fn bfs(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::from([source]);
    dist[source] = Some(0);
    while let Some(x) = queue.pop_front() {
        let d = dist[x].unwrap_or(0);
        for &(y, _) in &adjacency[x] {
            if dist[y].is_none() {
                dist[y] = Some(d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Edge-count distance from `origin` to every vertex.
pub fn distances_from(g: &WeightedGraph, origin: usize) -> Result<Vec<usize>> {
    if origin >= g.vertex_count() {
        return Err(Error::VertexOutOfRange {
            index: origin,
            count: g.vertex_count(),
        });
    }
    bfs(&g.adjacency, origin)
        .into_iter()
        .enumerate()
        .map(|(vertex, d)| d.ok_or(Error::Disconnected { from: origin, vertex }))
        .collect()
}

pub fn distance(g: &WeightedGraph, x: usize, origin: usize) -> Result<usize> {
    for index in [x, origin] {
        if index >= g.vertex_count() {
            return Err(Error::VertexOutOfRange {
                index,
                count: g.vertex_count(),
            });
        }
    }
    bfs(&g.adjacency, origin)[x].ok_or(Error::Disconnected {
        from: origin,
        vertex: x,
    })
}

/// A vertex subset Ω with its boundary (vertices of Ω adjacent to the outside) and interior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSpec {
    omega: Vec<usize>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    #[serde(skip)]
    in_omega: Vec<bool>,
}

#[derive(Deserialize)]
struct DomainFile {
    omega: Vec<usize>,
}

impl DomainSpec {
    pub fn new(g: &WeightedGraph, omega: &[usize]) -> Result<Self> {
        let n = g.vertex_count();
        let mut in_omega = vec![false; n];
        for &x in omega {
            if x >= n {
                return Err(Error::VertexOutOfRange { index: x, count: n });
            }
            in_omega[x] = true;
        }
        let omega: Vec<usize> = (0..n).filter(|&x| in_omega[x]).collect();
        if omega.is_empty() {
            return Err(Error::Domain("Ω is empty".into()));
        }
        let (boundary, interior) = omega
            .iter()
            .partition(|&&x| g.neighbors(x).iter().any(|&(y, _)| !in_omega[y]));
        Ok(Self {
            omega,
            boundary,
            interior,
            in_omega,
        })
    }

    pub fn whole(g: &WeightedGraph) -> Self {
        let all: Vec<usize> = (0..g.vertex_count()).collect();
        Self::new(g, &all).expect("the full vertex set is a valid domain")
    }

    pub fn from_json(g: &WeightedGraph, text: &str) -> Result<Self> {
        let file: DomainFile = serde_json::from_str(text)?;
        Self::new(g, &file.omega)
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn contains(&self, x: usize) -> bool {
        self.in_omega.get(x).copied().unwrap_or(false)
    }

    /// 1 on Ω and 0 elsewhere.
    pub fn indicator(&self) -> Vec<f64> {
        self.in_omega.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn require_interior(&self) -> Result<()> {
        if self.interior.is_empty() {
            Err(Error::Domain("Ω has an empty interior".into()))
        } else {
            Ok(())
        }
    }
}

/// Nested balls V_k = {ρ < k} around a center, k = 1..=K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallFamily {
    center: usize,
    max_radius: usize,
    dist: Vec<usize>,
}

pub fn ball_family(g: &WeightedGraph, center: usize, max_radius: usize) -> Result<BallFamily> {
    if max_radius == 0 {
        return Err(Error::InvalidParameter("ball radius K must be at least 1".into()));
    }
    let dist = distances_from(g, center)?;
    Ok(BallFamily {
        center,
        max_radius,
        dist,
    })
}

impl BallFamily {
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn max_radius(&self) -> usize {
        self.max_radius
    }

    pub fn distances(&self) -> &[usize] {
        &self.dist
    }

    /// V_k = {x : ρ(x) < k}.
    pub fn ball(&self, k: usize) -> Vec<usize> {
        (0..self.dist.len()).filter(|&x| self.dist[x] < k).collect()
    }

    /// ∂V_k = {x : ρ(x) = k}.
    pub fn sphere(&self, k: usize) -> Vec<usize> {
        (0..self.dist.len()).filter(|&x| self.dist[x] == k).collect()
    }

    /// Sizes |V_1|, ..., |V_K|.
    pub fn ball_sizes(&self) -> Vec<usize> {
        (1..=self.max_radius).map(|k| self.ball(k).len()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    Path(usize),
    Cycle(usize),
    Complete(usize),
    Star(usize),
    Grid(usize, usize),
    RandomConnected(usize, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSpec {
    #[default]
    Unit,
    Constant(f64),
    Uniform(f64, f64),
}

/// Generates a family member; random choices are driven by `seed` alone.
pub fn generate(family: GraphFamily, weights: WeightSpec, seed: u64) -> Result<WeightedGraph> {
    let invalid = |msg: &str| Err(Error::InvalidParameter(format!("{family:?}: {msg}")));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, pairs) = match family {
        GraphFamily::Path(n) if n >= 2 => (n, (1..n).map(|i| (i - 1, i)).collect::<Vec<_>>()),
        GraphFamily::Cycle(n) if n >= 3 => (n, (0..n).map(|i| (i, (i + 1) % n)).collect()),
        GraphFamily::Complete(n) if n >= 2 => (n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()),
        GraphFamily::Star(n) if n >= 2 => (n, (1..n).map(|i| (0, i)).collect()),
        GraphFamily::Grid(a, b) if a >= 1 && b >= 1 && a * b >= 2 => {
            let id = |r: usize, c: usize| r * b + c;
            let mut pairs = Vec::new();
            for r in 0..a {
                for c in 0..b {
                    if c + 1 < b {
                        pairs.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < a {
                        pairs.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            (a * b, pairs)
        }
        GraphFamily::RandomConnected(n, p) if n >= 2 && p > 0.0 && p <= 1.0 => {
            let pairs = loop {
                let pairs: Vec<(usize, usize)> = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|_| rng.random::<f64>() < p)
                    .collect();
                if pairs_connected(n, &pairs) {
                    break pairs;
                }
            };
            (n, pairs)
        }
        _ => return invalid("parameters out of range"),
    };
    let weight_of = |rng: &mut ChaCha8Rng| match weights {
        WeightSpec::Unit => Ok(1.0),
        WeightSpec::Constant(w) if w > 0.0 => Ok(w),
        WeightSpec::Uniform(lo, hi) if lo > 0.0 && hi >= lo => Ok(rng.random_range(lo..=hi)),
        _ => Err(Error::InvalidParameter(format!("invalid weights {weights:?}"))),
    };
    let mut edges = Vec::with_capacity(pairs.len());
    for (i, j) in pairs {
        edges.push((i, j, weight_of(&mut rng)?));
    }
    WeightedGraph::new(n, &edges)
}

fn pairs_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adjacency = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adjacency[i].push((j, 1.0));
        adjacency[j].push((i, 1.0));
    }
    bfs(&adjacency, 0).iter().all(Option::is_some)
}

/// Infinite lattices whose finite truncations feed the exhaustion scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    /// ℤ with unit weights.
    Path,
    /// ℤ² with unit weights.
    Grid,
}

/// A finite truncation of a lattice with the origin as center and readable vertex labels.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub graph: WeightedGraph,
    pub center: usize,
    pub labels: Vec<String>,
    /// Minimum edge weight declared by the lattice, not inferred from the truncation.
    pub declared_min_weight: f64,
}

impl Lattice {
    /// The lattice ball {ρ ≤ radius} around the origin.
    pub fn truncate(self, radius: usize) -> Result<Truncation> {
        if radius == 0 {
            return Err(Error::InvalidParameter("truncation radius must be positive".into()));
        }
        let r = radius as i64;
        let points: Vec<(i64, i64)> = match self {
            Lattice::Path => (-r..=r).map(|x| (x, 0)).collect(),
            Lattice::Grid => (-r..=r)
                .flat_map(|x| (-r..=r).map(move |y| (x, y)))
                .filter(|&(x, y)| x.abs() + y.abs() <= r)
                .collect(),
        };
        let index = |p: (i64, i64)| points.binary_search(&p).ok();
        let mut edges = Vec::new();
        for (a, &(x, y)) in points.iter().enumerate() {
            for q in [(x + 1, y), (x, y + 1)] {
                if let Some(b) = index(q) {
                    edges.push((a, b, 1.0));
                }
            }
        }
        let graph = WeightedGraph::new(points.len(), &edges)?;
        let center = index((0, 0)).expect("origin is in every truncation");
        let labels = points
            .iter()
            .map(|&(x, y)| match self {
                Lattice::Path => x.to_string(),
                Lattice::Grid => format!("{x}:{y}"),
            })
            .collect();
        Ok(Truncation {
            graph,
            center,
            labels,
            declared_min_weight: 1.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> WeightedGraph {
        build_graph(&[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn measures_of_small_graphs() {
        let p2 = build_graph(&[(0, 1, 1.0)]).unwrap();
        assert_eq!(p2.measure(), &[1.0, 1.0]);
        assert!(p2.is_connected());
        let k3 = build_graph(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(k3.measure(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn disconnected_graph_builds_but_is_flagged() {
        let g = build_graph(&[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(!g.is_connected());
        assert!(matches!(g.require_connected(), Err(Error::Disconnected { .. })));
        assert!(matches!(distance(&g, 3, 0), Err(Error::Disconnected { vertex: 3, .. })));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            build_graph(&[(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::DuplicateEdge(1, 0))
        ));
        assert!(matches!(
            build_graph(&[(0, 1, 0.0)]),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(matches!(build_graph(&[(0, 0, 1.0)]), Err(Error::SelfLoop(0))));
        assert!(matches!(
            WeightedGraph::new(3, &[(0, 1, 1.0)]),
            Err(Error::IsolatedVertex(2))
        ));
        assert!(matches!(
            WeightedGraph::new(2, &[(0, 5, 1.0)]),
            Err(Error::VertexOutOfRange { index: 5, .. })
        ));
    }

    #[test]
    fn integrals() {
        let p2 = generate(GraphFamily::Path(2), WeightSpec::Unit, 0).unwrap();
        assert_eq!(integral(&p2, &[1.0, 2.0]).unwrap(), 3.0);
        assert_eq!(integral(&p2, &[1.0, -1.0]).unwrap(), 0.0);
        let k3 = generate(GraphFamily::Complete(3), WeightSpec::Unit, 0).unwrap();
        assert_eq!(integral(&k3, &[1.0; 3]).unwrap(), 6.0);
        assert!(matches!(integral(&k3, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn unit_volume_rescale() {
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 3.0)])
            .unwrap()
            .with_unit_volume()
            .unwrap();
        assert!((g.volume() - 1.0).abs() < 1e-15);
        assert!((g.edges()[1].weight - 0.375).abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let g = p3();
        assert_eq!(distance(&g, 2, 0).unwrap(), 2);
        assert_eq!(distance(&g, 1, 1).unwrap(), 0);
        let k3 = generate(GraphFamily::Complete(3), WeightSpec::Unit, 0).unwrap();
        assert_eq!(distance(&k3, 1, 0).unwrap(), 1);
    }

    #[test]
    fn balls() {
        let fam = ball_family(&p3(), 0, 2).unwrap();
        assert_eq!(fam.ball(1), vec![0]);
        assert_eq!(fam.ball(2), vec![0, 1]);
        assert_eq!(fam.sphere(2), vec![2]);
        let k3 = generate(GraphFamily::Complete(3), WeightSpec::Unit, 0).unwrap();
        assert_eq!(ball_family(&k3, 0, 2).unwrap().ball(2), vec![0, 1, 2]);
        let grid = generate(GraphFamily::Grid(5, 5), WeightSpec::Unit, 0).unwrap();
        assert_eq!(ball_family(&grid, 12, 2).unwrap().ball(2), vec![7, 11, 12, 13, 17]);
        assert!(ball_family(&grid, 12, 0).is_err());
    }

    #[test]
    fn domain_boundary_and_interior() {
        let d = DomainSpec::new(&p3(), &[1, 0]).unwrap();
        assert_eq!(d.omega(), &[0, 1]);
        assert_eq!(d.boundary(), &[1]);
        assert_eq!(d.interior(), &[0]);
        let whole = DomainSpec::whole(&p3());
        assert!(whole.boundary().is_empty());
        assert!(DomainSpec::new(&p3(), &[]).is_err());
    }

    #[test]
    fn generators() {
        let p2 = generate(GraphFamily::Path(2), WeightSpec::Unit, 0).unwrap();
        assert_eq!(p2, build_graph(&[(0, 1, 1.0)]).unwrap());
        let a = generate(GraphFamily::RandomConnected(10, 0.3), WeightSpec::Unit, 7).unwrap();
        let b = generate(GraphFamily::RandomConnected(10, 0.3), WeightSpec::Unit, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert!(a.is_connected());
        let w = generate(GraphFamily::Cycle(6), WeightSpec::Uniform(0.1, 2.0), 3).unwrap();
        assert!(w.edges().iter().all(|e| (0.1..=2.0).contains(&e.weight)));
        assert!(generate(GraphFamily::Path(1), WeightSpec::Unit, 0).is_err());
        assert!(generate(GraphFamily::Star(4), WeightSpec::Constant(-1.0), 0).is_err());
    }

    #[test]
    fn text_edge_list() {
        let g = WeightedGraph::from_edge_list("# path\n0 1 1.0\n1 2 0.5 # tail\n\n").unwrap();
        assert_eq!(g.measure(), &[1.0, 1.5, 0.5]);
        assert!(matches!(WeightedGraph::from_edge_list("0 1"), Err(Error::Parse(_))));
    }

    #[test]
    fn lattice_truncations() {
        let t = Lattice::Grid.truncate(5).unwrap();
        let fam = ball_family(&t.graph, t.center, 4).unwrap();
        assert_eq!(fam.ball_sizes(), vec![1, 5, 13, 25]);
        let p = Lattice::Path.truncate(3).unwrap();
        assert_eq!(p.graph.vertex_count(), 7);
        assert_eq!(p.labels[p.center], "0");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_graph() -> impl Strategy<Value = WeightedGraph> {
            (2usize..12, 0.2f64..0.9, any::<u64>()).prop_map(|(n, p, seed)| {
                generate(GraphFamily::RandomConnected(n, p), WeightSpec::Uniform(0.1, 2.0), seed).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn handshake(g in random_graph()) {
                let twice: f64 = 2.0 * g.edges().iter().map(|e| e.weight).sum::<f64>();
                prop_assert!((g.volume() - twice).abs() <= 1e-12 * twice);
            }

            #[test]
            fn json_round_trip(g in random_graph()) {
                let back = WeightedGraph::from_json(&g.to_json()).unwrap();
                prop_assert_eq!(back.edges(), g.edges());
                prop_assert_eq!(back.measure(), g.measure());
            }

            #[test]
            fn boundary_partitions_domain(g in random_graph(), mask in any::<u32>()) {
                let omega: Vec<usize> = (0..g.vertex_count()).filter(|x| mask >> x & 1 == 1).collect();
                prop_assume!(!omega.is_empty());
                let d = DomainSpec::new(&g, &omega).unwrap();
                let mut joined: Vec<usize> = d.boundary().iter().chain(d.interior()).copied().collect();
                joined.sort();
                prop_assert_eq!(joined, d.omega().to_vec());
                prop_assert!(d.boundary().iter().all(|x| !d.interior().contains(x)));
            }

            #[test]
            fn triangle_inequality(g in random_graph(), a in 0usize..12, b in 0usize..12, c in 0usize..12) {
                let n = g.vertex_count();
                let (a, b, c) = (a % n, b % n, c % n);
                let ab = distance(&g, a, b).unwrap();
                let bc = distance(&g, b, c).unwrap();
                let ac = distance(&g, a, c).unwrap();
                prop_assert!(ac <= ab + bc);
            }
        }
    }
}
