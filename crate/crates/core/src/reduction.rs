//! Constructive reduction chain from graph coloring: padding a graph so that
//! proper colorability becomes equitable colorability, and the gadget turning
//! an equitable-coloring question into the existence of a complete EF1-init
//! allocation. Small instances of the equivalence are certified exhaustively.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{check_allocation, Notion};
use crate::model::{Allocation, Instance};
use crate::oracle::{exists_complete, OracleConfig};

/// Simple undirected graph: no self-loops, no duplicate edges. Edges are
/// stored with the smaller endpoint first, in sorted order, so serialized
/// graphs are canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut canon = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::Shape(format!("self-loop at vertex {a}")));
            }
            if a >= vertices || b >= vertices {
                return Err(Error::Index(format!(
                    "edge ({a}, {b}) out of range (|V| = {vertices})"
                )));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if canon.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Shape("duplicate edge".into()));
        }
        Ok(Graph {
            vertices,
            edges: canon,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn to_canonical_json(&self) -> String {
        let raw = GraphJson {
            vertices: self.vertices,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&raw).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(text)?;
        Graph::new(
            raw.vertices,
            raw.edges.into_iter().map(|[a, b]| (a, b)).collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: usize,
    edges: Vec<[usize; 2]>,
}

/// Color per vertex, colors in [0, ell).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub colors: Vec<usize>,
}

impl Coloring {
    pub fn is_proper(&self, graph: &Graph) -> bool {
        graph
            .edges()
            .iter()
            .all(|&(a, b)| self.colors[a] != self.colors[b])
    }

    /// Proper and all class sizes (over all ell colors, including empty
    /// classes) pairwise differ by at most one.
    pub fn is_equitable(&self, graph: &Graph, ell: usize) -> bool {
        if !self.is_proper(graph) {
            return false;
        }
        let mut sizes = vec![0usize; ell];
        for &c in &self.colors {
            sizes[c] += 1;
        }
        let max = sizes.iter().max().copied().unwrap_or(0);
        let min = sizes.iter().min().copied().unwrap_or(0);
        max <= min + 1
    }
}

/// Adds (ell - 1) * |V| isolated vertices: the padded graph is equitably
/// ell-colorable iff the original is properly ell-colorable.
pub fn pad_to_equitable(graph: &Graph, ell: usize) -> Result<Graph> {
    if ell < 1 {
        return Err(Error::Precondition("need at least one color".into()));
    }
    let padded = graph.vertices() + (ell - 1) * graph.vertices();
    Graph::new(padded, graph.edges().to_vec())
}

/// The gadget instance: one color agent per color (initial utility 0, unit
/// utility for every vertex resource) followed by one edge agent per edge
/// (initial utility |V| + 1, utility |V| + 2 for each endpoint resource).
pub fn build_ef1_instance(graph: &Graph, ell: usize) -> Result<Instance> {
    if ell < 1 {
        return Err(Error::Precondition("need at least one color".into()));
    }
    if graph.vertices() == 0 {
        return Err(Error::Precondition("graph has no vertices".into()));
    }
    let v = graph.vertices();
    let mut initial = Vec::with_capacity(ell + graph.edges().len());
    let mut utility = Vec::with_capacity(ell + graph.edges().len());
    for _ in 0..ell {
        initial.push(0);
        utility.push(vec![1u64; v]);
    }
    for &(a, b) in graph.edges() {
        initial.push(v as u64 + 1);
        let mut row = vec![0u64; v];
        row[a] = v as u64 + 2;
        row[b] = v as u64 + 2;
        utility.push(row);
    }
    Instance::new(initial, utility)
}

/// Maps a coloring to the gadget allocation: vertex resource v goes to the
/// color agent c(v); edge agents receive nothing.
pub fn coloring_to_allocation(graph: &Graph, ell: usize, coloring: &Coloring) -> Result<Allocation> {
    if coloring.colors.len() != graph.vertices() {
        return Err(Error::Shape("coloring length differs from |V|".into()));
    }
    let mut bundles = vec![Vec::new(); ell + graph.edges().len()];
    for (vertex, &color) in coloring.colors.iter().enumerate() {
        if color >= ell {
            return Err(Error::Index(format!(
                "color {color} out of range (ell = {ell})"
            )));
        }
        bundles[color].push(vertex);
    }
    Allocation::new(bundles, graph.vertices())
}

/// Inverse map. Fails if an edge agent holds a resource or the allocation is
/// not complete, since only then does every vertex get a color.
pub fn allocation_to_coloring(graph: &Graph, ell: usize, alloc: &Allocation) -> Result<Coloring> {
    if alloc.agents() != ell + graph.edges().len() {
        return Err(Error::Shape("allocation shape differs from gadget".into()));
    }
    for (offset, bundle) in alloc.bundles()[ell..].iter().enumerate() {
        if !bundle.is_empty() {
            return Err(Error::Precondition(format!(
                "edge agent {offset} holds a resource"
            )));
        }
    }
    if !alloc.is_complete(graph.vertices()) {
        return Err(Error::Precondition(
            "allocation does not cover every vertex resource".into(),
        ));
    }
    let mut colors = vec![usize::MAX; graph.vertices()];
    for (color, bundle) in alloc.bundles()[..ell].iter().enumerate() {
        for &vertex in bundle {
            colors[vertex] = color;
        }
    }
    Ok(Coloring { colors })
}

fn decode_coloring(code: u64, ell: usize, v: usize) -> Coloring {
    let mut colors = vec![0usize; v];
    let mut rest = code;
    for slot in colors.iter_mut().rev() {
        *slot = (rest % ell as u64) as usize;
        rest /= ell as u64;
    }
    Coloring { colors }
}

/// First equitable ell-coloring in the fixed enumeration order, if any.
pub fn find_equitable_coloring(
    graph: &Graph,
    ell: usize,
    cfg: &OracleConfig,
) -> Result<Option<Coloring>> {
    let mut count: u128 = 1;
    for _ in 0..graph.vertices() {
        count = count.checked_mul(ell as u128).ok_or(Error::GuardExceeded {
            need: u128::MAX,
            limit: cfg.max_assignments,
        })?;
    }
    if count > cfg.max_assignments || count > u64::MAX as u128 {
        return Err(Error::GuardExceeded {
            need: count,
            limit: cfg.max_assignments,
        });
    }
    let hit = crate::par::find_first_index(count as u64, cfg.force_sequential, |code| {
        decode_coloring(code, ell, graph.vertices()).is_equitable(graph, ell)
    });
    Ok(hit.map(|code| decode_coloring(code, ell, graph.vertices())))
}

/// Both sides of the reduction equivalence, certified exhaustively.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub coloring_exists: bool,
    pub allocation_exists: bool,
    /// Decisions agree and the translated witnesses verify on both sides.
    pub certified: bool,
}

/// Certifies on a single (graph, ell) input that an equitable ell-coloring
/// exists iff the gadget admits a complete EF1-init allocation, additionally
/// translating each found witness across the reduction and re-checking it.
pub fn certify_reduction(graph: &Graph, ell: usize, cfg: &OracleConfig) -> Result<CertifyReport> {
    let coloring = find_equitable_coloring(graph, ell, cfg)?;
    let gadget = build_ef1_instance(graph, ell)?;
    let allocation = exists_complete(&gadget, Notion::Ef1Init, cfg)?;

    let mut certified = coloring.is_some() == allocation.is_some();
    if let Some(coloring) = &coloring {
        let mapped = coloring_to_allocation(graph, ell, coloring)?;
        certified &= mapped.is_complete(graph.vertices());
        certified &= check_allocation(&gadget, &mapped, Notion::Ef1Init)?.satisfied;
    }
    if let Some(alloc) = &allocation {
        let back = allocation_to_coloring(graph, ell, alloc)?;
        certified &= back.is_equitable(graph, ell);
    }
    Ok(CertifyReport {
        coloring_exists: coloring.is_some(),
        allocation_exists: allocation.is_some(),
        certified,
    })
}
