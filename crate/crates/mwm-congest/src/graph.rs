//! Graph, weight, and matching domain types plus the exact brute-force
//! matching oracles used as ground truth everywhere else.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rat;
use crate::{Error, Result};

/// Undirected edge, stored with `u < v`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    /// Normalizes endpoint order; rejects loops.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::LoopEdge(a));
        }
        Ok(Edge {
            u: a.min(b),
            v: a.max(b),
        })
    }

    pub fn touches(&self, vertex: usize) -> bool {
        self.u == vertex || self.v == vertex
    }

    pub fn other(&self, vertex: usize) -> usize {
        if self.u == vertex {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// Simple undirected graph on vertices `0..n` with no loops or parallel
/// edges. Adjacency lists are sorted and consistent with the edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

/// Checks a raw vertex count and edge list against the graph invariants.
pub fn validate_graph(n: usize, raw_edges: &[(usize, usize)]) -> Result<Graph> {
    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(raw_edges.len());
    for &(a, b) in raw_edges {
        if a >= n {
            return Err(Error::VertexOutOfRange { id: a, n });
        }
        if b >= n {
            return Err(Error::VertexOutOfRange { id: b, n });
        }
        let e = Edge::new(a, b)?;
        if !seen.insert(e) {
            return Err(Error::DuplicateEdge(e.u, e.v));
        }
        edges.push(e);
    }
    edges.sort();
    let mut adj = vec![Vec::new(); n];
    for e in &edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    Ok(Graph { n, edges, adj })
}

impl Graph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.edges.binary_search(e).is_ok()
    }
}

/// A set of pairwise vertex-disjoint edges.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Matching {
    edges: BTreeSet<Edge>,
}

impl Matching {
    pub fn empty() -> Self {
        Matching::default()
    }

    /// Builds a matching from edges of `g`, rejecting edges outside the
    /// graph or sharing an endpoint.
    pub fn new(g: &Graph, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        if !is_matching(g, &edges)? {
            return Err(Error::Oracle("edge set is not a matching".into()));
        }
        Ok(Matching { edges })
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn sorted_edges(&self) -> Vec<Edge> {
        self.edges.iter().copied().collect()
    }
}

/// True iff no two edges of `m` share a vertex. Every edge must exist in `g`.
pub fn is_matching(g: &Graph, m: &BTreeSet<Edge>) -> Result<bool> {
    let mut used = vec![false; g.n()];
    for e in m {
        if !g.contains_edge(e) {
            return Err(Error::EdgeNotInGraph(e.u, e.v));
        }
        if used[e.u] || used[e.v] {
            return Ok(false);
        }
        used[e.u] = true;
        used[e.v] = true;
    }
    Ok(true)
}

/// A weighted MWM instance: simple graph, per-edge rational weights in
/// `[1, +inf)`, and a rational epsilon budget in `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedInstance {
    graph: Graph,
    weights: BTreeMap<Edge, Rat>,
    epsilon: Rat,
}

impl WeightedInstance {
    pub fn new(graph: Graph, weights: BTreeMap<Edge, Rat>, epsilon: Rat) -> Result<Self> {
        if !(epsilon.is_positive() && epsilon < Rat::one()) {
            return Err(Error::EpsilonRange(epsilon.to_string()));
        }
        for e in graph.edges() {
            match weights.get(e) {
                None => return Err(Error::MissingWeight(e.u, e.v)),
                Some(w) if *w < Rat::one() => {
                    return Err(Error::WeightBelowOne(w.to_string()));
                }
                Some(_) => {}
            }
        }
        for e in weights.keys() {
            if !graph.contains_edge(e) {
                return Err(Error::EdgeNotInGraph(e.u, e.v));
            }
        }
        Ok(WeightedInstance {
            graph,
            weights,
            epsilon,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &BTreeMap<Edge, Rat> {
        &self.weights
    }

    pub fn weight(&self, e: &Edge) -> &Rat {
        &self.weights[e]
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }

    /// Largest edge weight, or 1 on an edgeless graph.
    pub fn max_weight(&self) -> Rat {
        self.weights
            .values()
            .max()
            .cloned()
            .unwrap_or_else(Rat::one)
    }

    /// Smallest edge weight, or 1 on an edgeless graph.
    pub fn min_weight(&self) -> Rat {
        self.weights
            .values()
            .min()
            .cloned()
            .unwrap_or_else(Rat::one)
    }

    /// Sorted distinct edge weights.
    pub fn distinct_weights(&self) -> Vec<Rat> {
        let set: BTreeSet<&Rat> = self.weights.values().collect();
        set.into_iter().cloned().collect()
    }

    /// Same graph and epsilon with a replacement weight map.
    pub fn with_weights(&self, weights: BTreeMap<Edge, Rat>) -> Result<Self> {
        WeightedInstance::new(self.graph.clone(), weights, self.epsilon.clone())
    }

    /// Same graph and weights with a replacement epsilon.
    pub fn with_epsilon(&self, epsilon: Rat) -> Result<Self> {
        WeightedInstance::new(self.graph.clone(), self.weights.clone(), epsilon)
    }
}

/// Exact rational sum of the matching's edge weights under `inst`.
pub fn matching_weight(inst: &WeightedInstance, m: &Matching) -> Rat {
    m.edges()
        .fold(Rat::zero(), |acc, e| acc + inst.weight(e).clone())
}

/// Output of an exact oracle: the optimal matching and its value
/// (cardinality as a rational for the unweighted oracle).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub matching: Matching,
    pub value: Rat,
}

// Exact oracles are verification tools, not production matchers; they refuse
// instances past desk scale rather than run for hours.
const SCALE_N: usize = 16;
const SCALE_M: usize = 40;

fn check_scale(g: &Graph) -> Result<()> {
    if g.n() > SCALE_N && g.m() > SCALE_M {
        return Err(Error::ScaleBound { n: g.n(), m: g.m() });
    }
    Ok(())
}

/// Exhaustive search over matchings by vertex branching: the lowest-index
/// undecided vertex is either left unmatched or matched to a free higher
/// neighbor, so each matching is visited exactly once. Ties on the value are
/// broken toward the lexicographically smallest sorted edge list.
fn search_best(g: &Graph, weights: Option<&BTreeMap<Edge, Rat>>) -> OracleResult {
    struct Ctx<'a> {
        g: &'a Graph,
        weights: Option<&'a BTreeMap<Edge, Rat>>,
        used: Vec<bool>,
        current: Vec<Edge>,
        current_value: Rat,
        best: Vec<Edge>,
        best_value: Rat,
    }

    fn recurse(ctx: &mut Ctx, from: usize) {
        let mut v = from;
        while v < ctx.g.n() && ctx.used[v] {
            v += 1;
        }
        if v == ctx.g.n() {
            let better = ctx.current_value > ctx.best_value
                || (ctx.current_value == ctx.best_value && ctx.current < ctx.best);
            if better {
                ctx.best_value = ctx.current_value.clone();
                ctx.best = ctx.current.clone();
            }
            return;
        }
        // Leave v unmatched.
        ctx.used[v] = true;
        recurse(ctx, v + 1);
        ctx.used[v] = false;
        // Match v with each free higher neighbor.
        let neighbors: Vec<usize> = ctx.g.neighbors(v).to_vec();
        for u in neighbors {
            if u < v || ctx.used[u] {
                continue;
            }
            let e = Edge { u: v, v: u };
            let w = match ctx.weights {
                Some(map) => map[&e].clone(),
                None => Rat::one(),
            };
            ctx.used[v] = true;
            ctx.used[u] = true;
            ctx.current.push(e);
            ctx.current_value = &ctx.current_value + &w;
            recurse(ctx, v + 1);
            ctx.current_value = &ctx.current_value - &w;
            ctx.current.pop();
            ctx.used[v] = false;
            ctx.used[u] = false;
        }
    }

    let mut ctx = Ctx {
        g,
        weights,
        used: vec![false; g.n()],
        current: Vec::new(),
        current_value: Rat::zero(),
        best: Vec::new(),
        best_value: Rat::zero(),
    };
    recurse(&mut ctx, 0);
    OracleResult {
        matching: Matching {
            edges: ctx.best.into_iter().collect(),
        },
        value: ctx.best_value,
    }
}

/// Maximum-cardinality matching by exhaustive search. The value is the
/// cardinality as a rational. Deterministic: among maximum matchings the
/// lexicographically smallest sorted edge list wins.
pub fn nu_exact(g: &Graph) -> Result<OracleResult> {
    check_scale(g)?;
    Ok(search_best(g, None))
}

/// Maximum-weight matching by exhaustive search, same tie-break as
/// [`nu_exact`].
pub fn opt_exact(inst: &WeightedInstance) -> Result<OracleResult> {
    check_scale(inst.graph())?;
    Ok(search_best(inst.graph(), Some(inst.weights())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        validate_graph(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn edge(a: usize, b: usize) -> Edge {
        Edge::new(a, b).unwrap()
    }

    fn uniform_instance(g: Graph, eps: Rat) -> WeightedInstance {
        let weights = g.edges().iter().map(|e| (*e, Rat::one())).collect();
        WeightedInstance::new(g, weights, eps).unwrap()
    }

    #[test]
    fn validate_accepts_path() {
        let g = path3();
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn validate_rejects_loop() {
        assert!(matches!(
            validate_graph(2, &[(0, 0)]),
            Err(Error::LoopEdge(0))
        ));
    }

    #[test]
    fn validate_rejects_duplicate_unordered() {
        assert!(matches!(
            validate_graph(2, &[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
    }

    #[test]
    fn validate_rejects_out_of_range() {
        assert!(matches!(
            validate_graph(2, &[(0, 2)]),
            Err(Error::VertexOutOfRange { id: 2, n: 2 })
        ));
    }

    #[test]
    fn is_matching_examples() {
        let g = path3();
        let both: BTreeSet<Edge> = [edge(0, 1), edge(1, 2)].into();
        assert!(!is_matching(&g, &both).unwrap());
        let one: BTreeSet<Edge> = [edge(0, 1)].into();
        assert!(is_matching(&g, &one).unwrap());
        assert!(is_matching(&g, &BTreeSet::new()).unwrap());
        let foreign: BTreeSet<Edge> = [edge(0, 2)].into();
        assert!(matches!(
            is_matching(&g, &foreign),
            Err(Error::EdgeNotInGraph(0, 2))
        ));
    }

    #[test]
    fn matching_weight_examples() {
        let g = path3();
        let weights: BTreeMap<Edge, Rat> =
            [(edge(0, 1), Rat::int(1)), (edge(1, 2), Rat::int(4))].into();
        let inst = WeightedInstance::new(g.clone(), weights, Rat::ratio(1, 2)).unwrap();
        assert_eq!(matching_weight(&inst, &Matching::empty()), Rat::zero());
        let heavy = Matching::new(&g, [edge(1, 2)]).unwrap();
        assert_eq!(matching_weight(&inst, &heavy), Rat::int(4));

        let c4 = validate_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let weights: BTreeMap<Edge, Rat> = [
            (edge(0, 1), Rat::int(1)),
            (edge(1, 2), Rat::int(5)),
            (edge(2, 3), Rat::int(1)),
            (edge(0, 3), Rat::int(5)),
        ]
        .into();
        let inst = WeightedInstance::new(c4.clone(), weights, Rat::ratio(1, 2)).unwrap();
        let two_heavy = Matching::new(&c4, [edge(1, 2), edge(0, 3)]).unwrap();
        assert_eq!(matching_weight(&inst, &two_heavy), Rat::int(10));
    }

    #[test]
    fn nu_exact_small_graphs() {
        let triangle = validate_graph(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(nu_exact(&triangle).unwrap().value, Rat::int(1));
        let c4 = validate_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(nu_exact(&c4).unwrap().value, Rat::int(2));
    }

    #[test]
    fn nu_exact_petersen() {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5)); // outer cycle
            edges.push((i, i + 5)); // spokes
            edges.push((i + 5, (i + 2) % 5 + 5)); // inner pentagram
        }
        let g = validate_graph(10, &edges).unwrap();
        let result = nu_exact(&g).unwrap();
        // Independent check: enumerate all matching edge subsets directly.
        fn scan(edges: &[Edge], idx: usize, used: &mut Vec<bool>, size: usize, best: &mut usize) {
            if idx == edges.len() {
                *best = (*best).max(size);
                return;
            }
            scan(edges, idx + 1, used, size, best);
            let e = edges[idx];
            if !used[e.u] && !used[e.v] {
                used[e.u] = true;
                used[e.v] = true;
                scan(edges, idx + 1, used, size + 1, best);
                used[e.u] = false;
                used[e.v] = false;
            }
        }
        let mut best = 0;
        scan(g.edges(), 0, &mut vec![false; 10], 0, &mut best);
        assert_eq!(best, 5);
        assert_eq!(result.value, Rat::int(5));
        assert_eq!(result.matching.len(), 5);
    }

    #[test]
    fn opt_exact_examples() {
        let g = path3();
        let weights: BTreeMap<Edge, Rat> =
            [(edge(0, 1), Rat::int(1)), (edge(1, 2), Rat::int(4))].into();
        let inst = WeightedInstance::new(g, weights, Rat::ratio(1, 2)).unwrap();
        let res = opt_exact(&inst).unwrap();
        assert_eq!(res.value, Rat::int(4));
        assert_eq!(res.matching.sorted_edges(), vec![edge(1, 2)]);

        let c4 = validate_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let weights: BTreeMap<Edge, Rat> = [
            (edge(0, 1), Rat::int(1)),
            (edge(1, 2), Rat::int(5)),
            (edge(2, 3), Rat::int(1)),
            (edge(0, 3), Rat::int(5)),
        ]
        .into();
        let inst = WeightedInstance::new(c4, weights, Rat::ratio(1, 2)).unwrap();
        assert_eq!(opt_exact(&inst).unwrap().value, Rat::int(10));

        let single = validate_graph(2, &[(0, 1)]).unwrap();
        let weights: BTreeMap<Edge, Rat> = [(edge(0, 1), Rat::int(7))].into();
        let inst = WeightedInstance::new(single, weights, Rat::ratio(1, 2)).unwrap();
        assert_eq!(opt_exact(&inst).unwrap().value, Rat::int(7));
    }

    #[test]
    fn oracle_value_matches_recomputed_weight() {
        let c4 = validate_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let weights: BTreeMap<Edge, Rat> = [
            (edge(0, 1), Rat::ratio(3, 2)),
            (edge(1, 2), Rat::int(2)),
            (edge(2, 3), Rat::ratio(7, 3)),
            (edge(0, 3), Rat::int(1)),
        ]
        .into();
        let inst = WeightedInstance::new(c4, weights, Rat::ratio(1, 4)).unwrap();
        let res = opt_exact(&inst).unwrap();
        assert_eq!(res.value, matching_weight(&inst, &res.matching));
    }

    #[test]
    fn scale_bound_enforced() {
        // 17 vertices and 41 edges: past both limits.
        let mut edges = Vec::new();
        for i in 0..17 {
            for j in (i + 1)..17 {
                edges.push((i, j));
                if edges.len() == 41 {
                    break;
                }
            }
            if edges.len() == 41 {
                break;
            }
        }
        let g = validate_graph(17, &edges).unwrap();
        assert!(matches!(nu_exact(&g), Err(Error::ScaleBound { .. })));
    }

    #[test]
    fn weight_below_one_rejected() {
        let g = path3();
        let weights: BTreeMap<Edge, Rat> =
            [(edge(0, 1), Rat::ratio(1, 2)), (edge(1, 2), Rat::int(4))].into();
        assert!(matches!(
            WeightedInstance::new(g, weights, Rat::ratio(1, 2)),
            Err(Error::WeightBelowOne(_))
        ));
    }

    #[test]
    fn opt_dominates_min_weight_times_nu() {
        // w_min * nu(G) <= OPT on a few handmade instances.
        let c4 = validate_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let weights: BTreeMap<Edge, Rat> = [
            (edge(0, 1), Rat::ratio(3, 2)),
            (edge(1, 2), Rat::int(2)),
            (edge(2, 3), Rat::int(6)),
            (edge(0, 3), Rat::int(1)),
        ]
        .into();
        let inst = WeightedInstance::new(c4.clone(), weights, Rat::ratio(1, 4)).unwrap();
        let opt = opt_exact(&inst).unwrap().value;
        let nu = nu_exact(&c4).unwrap().value;
        assert!(inst.min_weight() * nu <= opt);
    }

    #[test]
    fn opt_monotone_under_single_raise() {
        let c4 = validate_graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let base: BTreeMap<Edge, Rat> = [
            (edge(0, 1), Rat::int(1)),
            (edge(1, 2), Rat::int(2)),
            (edge(2, 3), Rat::int(3)),
            (edge(0, 3), Rat::int(1)),
        ]
        .into();
        let inst = WeightedInstance::new(c4, base.clone(), Rat::ratio(1, 4)).unwrap();
        let before = opt_exact(&inst).unwrap().value;
        for e in base.keys() {
            let mut raised = base.clone();
            raised.insert(*e, &base[e] + &Rat::ratio(5, 7));
            let inst2 = inst.with_weights(raised).unwrap();
            assert!(opt_exact(&inst2).unwrap().value >= before);
        }
    }

    #[test]
    fn empty_graph_oracles() {
        let g = validate_graph(1, &[]).unwrap();
        assert_eq!(nu_exact(&g).unwrap().value, Rat::zero());
        let inst = uniform_instance(validate_graph(3, &[]).unwrap(), Rat::ratio(1, 2));
        assert_eq!(opt_exact(&inst).unwrap().value, Rat::zero());
    }
}
