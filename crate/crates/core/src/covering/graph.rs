//! Voltage graphs, their derived covers and lifted graph Dirac operators.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{
    DeckGroup, EquivariantOperator, FiberDims, FiniteFactor, GroupElement, GroupSpec, Quotient,
};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
    pub voltage: GroupElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageGraph {
    group: DeckGroup,
    vertices: usize,
    edges: Vec<Edge>,
    potentials: Option<Vec<f64>>,
}

impl VoltageGraph {
    pub fn new(
        group: DeckGroup,
        vertices: usize,
        edges: Vec<Edge>,
        potentials: Option<Vec<f64>>,
    ) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidInput("graph has no vertices".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.tail >= vertices || e.head >= vertices {
                return Err(Error::InvalidInput(format!("edge {i} references a missing vertex")));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidInput(format!("edge {i} has non-positive weight")));
            }
            group.validate(&e.voltage)?;
        }
        if let Some(p) = &potentials {
            if p.len() != vertices {
                return Err(Error::InvalidInput(format!(
                    "{} potentials for {vertices} vertices",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite potential".into()));
            }
        }
        Ok(Self {
            group,
            vertices,
            edges,
            potentials,
        })
    }

    /// Graph with unit weights and identity voltages.
    pub fn plain(group: DeckGroup, vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let e = group.identity();
        let edges = pairs
            .iter()
            .map(|&(tail, head)| Edge {
                tail,
                head,
                weight: 1.0,
                voltage: e.clone(),
            })
            .collect();
        Self::new(group, vertices, edges, None)
    }

    pub fn path(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::plain(DeckGroup::trivial(), n, &pairs)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::plain(DeckGroup::trivial(), n, &pairs)
    }

    pub fn group(&self) -> &DeckGroup {
        &self.group
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn potentials(&self) -> Option<&[f64]> {
        self.potentials.as_deref()
    }

    /// `|V| − |E|`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges.len() as i64
    }

    /// Same graph with every voltage replaced according to `f`, over a new
    /// group.
    pub fn with_voltages(&self, group: DeckGroup, f: impl Fn(&Edge) -> GroupElement) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                voltage: f(e),
                ..e.clone()
            })
            .collect();
        Self::new(group, self.vertices, edges, self.potentials.clone())
    }

    /// Adjacency lists with voltages, both orientations.
    fn adjacency(&self) -> Vec<Vec<(usize, GroupElement)>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for e in &self.edges {
            adj[e.tail].push((e.head, e.voltage.clone()));
            adj[e.head].push((e.tail, self.group.inverse(&e.voltage)));
        }
        adj
    }

    /// Connected components of the base graph.
    pub fn component_count(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices];
        let mut count = 0;
        for s in 0..self.vertices {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for (w, _) in &adj[v] {
                    if !seen[*w] {
                        seen[*w] = true;
                        queue.push_back(*w);
                    }
                }
            }
        }
        count
    }

    /// Breadth-first distances from `source` (trivial-group graphs).
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.vertices];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("visited");
            for (w, _) in &adj[v] {
                if dist[*w].is_none() {
                    dist[*w] = Some(d + 1);
                    queue.push_back(*w);
                }
            }
        }
        dist
    }

    /// Random connected graph: a random spanning tree plus extra edges, no
    /// self-loops, uniformly random voltages in the finite part and in
    /// `{-1,0,1}` on lattice coordinates.
    pub fn random_connected<R: Rng + ?Sized>(
        group: DeckGroup,
        vertices: usize,
        edges: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if vertices < 2 || edges + 1 < vertices {
            return Err(Error::InvalidInput(
                "a connected graph needs at least two vertices and |V|-1 edges".into(),
            ));
        }
        let random_voltage = |rng: &mut R| {
            let mut v: Vec<i64> = (0..group.free_rank()).map(|_| rng.random_range(-1..=1)).collect();
            v.extend(group.factors().iter().map(|f: &FiniteFactor| rng.random_range(0..f.order()) as i64));
            GroupElement(v)
        };
        let mut list = Vec::with_capacity(edges);
        for v in 1..vertices {
            let u = rng.random_range(0..v);
            let voltage = random_voltage(rng);
            list.push(Edge {
                tail: u,
                head: v,
                weight: rng.random_range(0.5..2.0),
                voltage,
            });
        }
        while list.len() < edges {
            let u = rng.random_range(0..vertices);
            let v = rng.random_range(0..vertices);
            if u == v {
                continue;
            }
            let voltage = random_voltage(rng);
            list.push(Edge {
                tail: u,
                head: v,
                weight: rng.random_range(0.5..2.0),
                voltage,
            });
        }
        Self::new(group, vertices, list, None)
    }
}

/// Lifted graph Dirac operator: plus fiber = vertices, minus fiber = edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedGraphDirac {
    pub operator: EquivariantOperator,
    pub vertices: usize,
    pub edges: usize,
}

impl GradedGraphDirac {
    pub fn base_index(&self) -> i64 {
        self.vertices as i64 - self.edges as i64
    }

    /// Hopping bound: largest `√w` over edges.
    pub fn hopping_bound(&self) -> f64 {
        self.operator
            .blocks()
            .values()
            .flat_map(|m| m.iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

/// Twisted weighted coboundary: for an edge `(u, v, γ)`, `D⁺` has `−√w` at
/// the tail in block `e` and `+√w` at the head in block `γ`.
pub fn graph_dirac(g: &VoltageGraph) -> Result<GradedGraphDirac> {
    let (nv, ne) = (g.vertices, g.edges.len());
    let mut acc: std::collections::BTreeMap<GroupElement, CMatrix> = std::collections::BTreeMap::new();
    let e = g.group.identity();
    for (i, edge) in g.edges.iter().enumerate() {
        let s = edge.weight.sqrt();
        acc.entry(e.clone()).or_insert_with(|| CMatrix::zeros(ne, nv))[(i, edge.tail)] += c(-s, 0.0);
        acc.entry(edge.voltage.clone()).or_insert_with(|| CMatrix::zeros(ne, nv))[(i, edge.head)] += c(s, 0.0);
    }
    let blocks: Vec<(GroupElement, CMatrix)> = acc.into_iter().collect();
    let operator = EquivariantOperator::odd_from_plus(g.group.clone(), FiberDims::new(nv, ne), blocks)?;
    Ok(GradedGraphDirac {
        operator,
        vertices: nv,
        edges: ne,
    })
}

/// Vertex Laplacian `(D⁺)*D⁺` plus the vertex potentials, as an ungraded
/// operator.
pub fn graph_laplacian(g: &VoltageGraph) -> Result<EquivariantOperator> {
    let d = graph_dirac(g)?;
    let sq = d.operator.compose(&d.operator)?;
    let nv = g.vertices;
    let pot = g.potentials.clone().unwrap_or_else(|| vec![0.0; nv]);
    let e = g.group.identity();
    let mut blocks: Vec<(GroupElement, CMatrix)> = sq
        .blocks()
        .iter()
        .map(|(gm, m)| (gm.clone(), m.view((0, 0), (nv, nv)).into_owned()))
        .collect();
    blocks.push((e, crate::linalg::real_diagonal(&pot)));
    EquivariantOperator::new(g.group.clone(), FiberDims::ungraded(nv), blocks)
}

/// Finite cover over the trivial group. Vertex `(v, α)` has index
/// `v·d + rank(α)`; edge `(e, α)` has index `e·d + rank(α)` and joins
/// `(u, α)` to `(v, α·q(γ))`.
pub fn derived_cover(g: &VoltageGraph, q: &Quotient) -> Result<VoltageGraph> {
    if *q.source() != g.group {
        return Err(Error::GroupMismatch("quotient is not defined on the graph's group".into()));
    }
    let target = q.target();
    let elems = target.elements()?;
    let d = elems.len();
    let mut edges = Vec::with_capacity(g.edges.len() * d);
    for e in &g.edges {
        let qg = q.apply(&e.voltage);
        for alpha in &elems {
            let beta = target.multiply(alpha, &qg);
            edges.push(Edge {
                tail: e.tail * d + target.torsion_rank(alpha),
                head: e.head * d + target.torsion_rank(&beta),
                weight: e.weight,
                voltage: GroupElement(Vec::new()),
            });
        }
    }
    let potentials = g
        .potentials
        .as_ref()
        .map(|p| p.iter().flat_map(|&x| std::iter::repeat_n(x, d)).collect());
    VoltageGraph::new(DeckGroup::trivial(), g.vertices * d, edges, potentials)
}

/// Permutation sending dense-realization indices `rank·n + i` of the lifted
/// Dirac at quotient `q` to the derived cover's Dirac indices.
pub fn cover_permutation(g: &VoltageGraph, q: &Quotient) -> Vec<usize> {
    let d = q.index();
    let (nv, ne) = (g.vertices, g.edges.len());
    let n = nv + ne;
    let mut perm = vec![0; d * n];
    for r in 0..d {
        for i in 0..n {
            perm[r * n + i] = if i < nv {
                i * d + r
            } else {
                nv * d + (i - nv) * d + r
            };
        }
    }
    perm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub tail: usize,
    pub head: usize,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    #[serde(default)]
    pub voltage: Vec<i64>,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default = "trivial_group")]
    pub group: GroupSpec,
    pub vertices: usize,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials: Option<Vec<f64>>,
}

fn trivial_group() -> GroupSpec {
    GroupSpec {
        free_rank: 0,
        factors: Vec::new(),
    }
}

impl TryFrom<GraphSpec> for VoltageGraph {
    type Error = Error;

    fn try_from(spec: GraphSpec) -> Result<Self> {
        let group = DeckGroup::try_from(spec.group)?;
        let identity = group.identity();
        let edges = spec
            .edges
            .into_iter()
            .map(|e| Edge {
                tail: e.tail,
                head: e.head,
                weight: e.weight,
                voltage: if e.voltage.is_empty() {
                    identity.clone()
                } else {
                    GroupElement(e.voltage)
                },
            })
            .collect();
        VoltageGraph::new(group, spec.vertices, edges, spec.potentials)
    }
}

impl From<&VoltageGraph> for GraphSpec {
    fn from(g: &VoltageGraph) -> Self {
        GraphSpec {
            group: GroupSpec::from(&g.group),
            vertices: g.vertices,
            edges: g
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    tail: e.tail,
                    head: e.head,
                    weight: e.weight,
                    voltage: e.voltage.0.clone(),
                })
                .collect(),
            potentials: g.potentials.clone(),
        }
    }
}

pub fn graph_from_json(text: &str) -> Result<VoltageGraph> {
    let spec: GraphSpec = serde_json::from_str(text)?;
    VoltageGraph::try_from(spec)
}

pub fn graph_to_json(g: &VoltageGraph) -> Result<String> {
    Ok(serde_json::to_string(&GraphSpec::from(g))?)
}
