//! Metric (quantum) graphs: bonds with lengths and an arrow, vertices with
//! Neumann, Dirichlet or matrix-valued twist conditions.

use std::collections::VecDeque;
use std::fmt;

use crate::linalg::{self, CMatrix};

/// Unitarity tolerance for twist matrices.
pub const TWIST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum End {
    Tail,
    Head,
}

/// One end of a bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BondEnd {
    pub bond: usize,
    pub end: End,
}

impl BondEnd {
    pub fn tail(bond: usize) -> Self {
        BondEnd {
            bond,
            end: End::Tail,
        }
    }

    pub fn head(bond: usize) -> Self {
        BondEnd {
            bond,
            end: End::Head,
        }
    }
}

#[derive(Debug, Clone)]
pub enum VertexCondition {
    /// Continuity plus vanishing sum of outward derivatives.
    Neumann,
    /// Wavefunction vanishes at the vertex.
    Dirichlet,
    /// Degree-2 vertex with `ψ_out = M ψ_in` and `ψ'_out = M ψ'_in`, where
    /// values and derivatives are taken along the path entering through
    /// `incoming` and leaving through `outgoing`.
    Twist {
        matrix: CMatrix,
        incoming: BondEnd,
        outgoing: BondEnd,
    },
}

impl VertexCondition {
    pub fn name(&self) -> &'static str {
        match self {
            VertexCondition::Neumann => "neumann",
            VertexCondition::Dirichlet => "dirichlet",
            VertexCondition::Twist { .. } => "twist",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: usize,
    pub condition: VertexCondition,
}

/// A bond with coordinate `x ∈ [0, length]` running from `tail` to `head`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub id: usize,
    pub tail: usize,
    pub head: usize,
    pub length: f64,
    pub orbit: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphMetadata {
    pub seed: Option<u64>,
    pub description: String,
    /// Irrep label for quotient graphs, `full` for the symmetric graph.
    pub irrep: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MetricGraph {
    pub vertices: Vec<Vertex>,
    pub bonds: Vec<Bond>,
    /// Number of wavefunction components (1 scalar, 2 for the pseudo-real quotient).
    pub component_count: usize,
    pub metadata: GraphMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VertexIdMismatch {
        position: usize,
        id: usize,
    },
    BondIdMismatch {
        position: usize,
        id: usize,
    },
    UnknownEndpoint {
        bond: usize,
        vertex: usize,
    },
    NonpositiveLength {
        bond: usize,
        length: f64,
    },
    NonfiniteLength {
        bond: usize,
    },
    ZeroComponents,
    TwistDegree {
        vertex: usize,
        degree: usize,
    },
    TwistShape {
        vertex: usize,
        rows: usize,
        cols: usize,
        components: usize,
    },
    NonUnitaryTwist {
        vertex: usize,
        defect: f64,
    },
    TwistEnds {
        vertex: usize,
    },
    Disconnected {
        components: usize,
    },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::VertexIdMismatch { position, id } => {
                write!(f, "vertex at position {position} has id {id}")
            }
            Violation::BondIdMismatch { position, id } => {
                write!(f, "bond at position {position} has id {id}")
            }
            Violation::UnknownEndpoint { bond, vertex } => {
                write!(f, "bond {bond}: endpoint {vertex} is not a declared vertex")
            }
            Violation::NonpositiveLength { bond, length } => {
                write!(f, "bond {bond}: nonpositive length {length}")
            }
            Violation::NonfiniteLength { bond } => write!(f, "bond {bond}: non-finite length"),
            Violation::ZeroComponents => write!(f, "component count must be at least 1"),
            Violation::TwistDegree { vertex, degree } => {
                write!(
                    f,
                    "vertex {vertex}: twist vertex has degree {degree}, expected 2"
                )
            }
            Violation::TwistShape {
                vertex,
                rows,
                cols,
                components,
            } => write!(
                f,
                "vertex {vertex}: twist matrix is {rows}x{cols}, expected {components}x{components}"
            ),
            Violation::NonUnitaryTwist { vertex, defect } => {
                write!(
                    f,
                    "vertex {vertex}: non-unitary twist (defect {defect:.3e})"
                )
            }
            Violation::TwistEnds { vertex } => write!(
                f,
                "vertex {vertex}: twist ends must be two distinct bond ends at this vertex"
            ),
            Violation::Disconnected { components } => {
                write!(f, "graph is disconnected ({components} components)")
            }
            Violation::Empty => write!(f, "graph has no bonds"),
        }
    }
}

impl MetricGraph {
    pub fn total_length(&self) -> f64 {
        self.bonds.iter().map(|b| b.length).sum()
    }

    /// Bond ends attached to vertex `v`; a self-loop contributes both ends.
    pub fn ends_at(&self, v: usize) -> Vec<BondEnd> {
        let mut ends = Vec::new();
        for b in &self.bonds {
            if b.tail == v {
                ends.push(BondEnd::tail(b.id));
            }
            if b.head == v {
                ends.push(BondEnd::head(b.id));
            }
        }
        ends
    }

    pub fn degree(&self, v: usize) -> usize {
        self.ends_at(v).len()
    }

    pub fn endpoint(&self, end: BondEnd) -> usize {
        let b = &self.bonds[end.bond];
        match end.end {
            End::Tail => b.tail,
            End::Head => b.head,
        }
    }

    /// Checks every structural invariant and reports all violations found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let nv = self.vertices.len();
        if self.component_count == 0 {
            out.push(Violation::ZeroComponents);
        }
        if self.bonds.is_empty() {
            out.push(Violation::Empty);
        }
        for (position, v) in self.vertices.iter().enumerate() {
            if v.id != position {
                out.push(Violation::VertexIdMismatch { position, id: v.id });
            }
        }
        for (position, b) in self.bonds.iter().enumerate() {
            if b.id != position {
                out.push(Violation::BondIdMismatch { position, id: b.id });
            }
            for vertex in [b.tail, b.head] {
                if vertex >= nv {
                    out.push(Violation::UnknownEndpoint { bond: b.id, vertex });
                }
            }
            if !b.length.is_finite() {
                out.push(Violation::NonfiniteLength { bond: b.id });
            } else if b.length <= 0.0 {
                out.push(Violation::NonpositiveLength {
                    bond: b.id,
                    length: b.length,
                });
            }
        }
        // Degree and connectivity checks need well-formed ids.
        if out.iter().any(|v| {
            matches!(
                v,
                Violation::VertexIdMismatch { .. }
                    | Violation::BondIdMismatch { .. }
                    | Violation::UnknownEndpoint { .. }
            )
        }) {
            return Err(out);
        }
        for v in &self.vertices {
            if let VertexCondition::Twist {
                matrix,
                incoming,
                outgoing,
            } = &v.condition
            {
                let degree = self.degree(v.id);
                if degree != 2 {
                    out.push(Violation::TwistDegree {
                        vertex: v.id,
                        degree,
                    });
                }
                let c = self.component_count;
                if matrix.nrows() != c || matrix.ncols() != c {
                    out.push(Violation::TwistShape {
                        vertex: v.id,
                        rows: matrix.nrows(),
                        cols: matrix.ncols(),
                        components: c,
                    });
                } else {
                    let defect = linalg::unitarity_defect(matrix);
                    if defect > TWIST_TOL {
                        out.push(Violation::NonUnitaryTwist {
                            vertex: v.id,
                            defect,
                        });
                    }
                }
                let ends = self.ends_at(v.id);
                let ok = incoming != outgoing
                    && incoming.bond < self.bonds.len()
                    && outgoing.bond < self.bonds.len()
                    && ends.contains(incoming)
                    && ends.contains(outgoing);
                if !ok {
                    out.push(Violation::TwistEnds { vertex: v.id });
                }
            }
        }
        let components = self.connected_components();
        if components > 1 {
            out.push(Violation::Disconnected { components });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    fn connected_components(&self) -> usize {
        let nv = self.vertices.len();
        let mut adj = vec![Vec::new(); nv];
        for b in &self.bonds {
            adj[b.tail].push(b.head);
            adj[b.head].push(b.tail);
        }
        let mut seen = vec![false; nv];
        let mut count = 0;
        for start in 0..nv {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// True iff `perm` maps every bond to a bond of equal length (ignoring
    /// orientation, respecting multiplicity) and every vertex to one with
    /// the same condition.
    pub fn is_symmetry(&self, perm: &[usize]) -> bool {
        let nv = self.vertices.len();
        if perm.len() != nv {
            return false;
        }
        let mut hit = vec![false; nv];
        for &p in perm {
            if p >= nv || hit[p] {
                return false;
            }
            hit[p] = true;
        }
        for v in &self.vertices {
            if !same_condition(&v.condition, &self.vertices[perm[v.id]].condition) {
                return false;
            }
        }
        let key = |a: usize, b: usize, l: f64| (a.min(b), a.max(b), l.to_bits());
        let mut original: Vec<_> = self
            .bonds
            .iter()
            .map(|b| key(b.tail, b.head, b.length))
            .collect();
        let mut mapped: Vec<_> = self
            .bonds
            .iter()
            .map(|b| key(perm[b.tail], perm[b.head], b.length))
            .collect();
        original.sort_unstable();
        mapped.sort_unstable();
        original == mapped
    }
}

fn same_condition(a: &VertexCondition, b: &VertexCondition) -> bool {
    match (a, b) {
        (VertexCondition::Neumann, VertexCondition::Neumann) => true,
        (VertexCondition::Dirichlet, VertexCondition::Dirichlet) => true,
        (VertexCondition::Twist { matrix: ma, .. }, VertexCondition::Twist { matrix: mb, .. }) => {
            ma.nrows() == mb.nrows()
                && ma.ncols() == mb.ncols()
                && linalg::max_abs_diff(ma, mb) == 0.0
        }
        _ => false,
    }
}

/// Small builder used by fixtures and the symmetric-graph constructors.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    graph: MetricGraph,
}

impl GraphBuilder {
    pub fn new(component_count: usize) -> Self {
        GraphBuilder {
            graph: MetricGraph {
                vertices: Vec::new(),
                bonds: Vec::new(),
                component_count,
                metadata: GraphMetadata::default(),
            },
        }
    }

    pub fn vertex(&mut self, condition: VertexCondition) -> usize {
        let id = self.graph.vertices.len();
        self.graph.vertices.push(Vertex { id, condition });
        id
    }

    pub fn neumann(&mut self) -> usize {
        self.vertex(VertexCondition::Neumann)
    }

    pub fn bond(
        &mut self,
        tail: usize,
        head: usize,
        length: f64,
        orbit: impl Into<String>,
    ) -> usize {
        let id = self.graph.bonds.len();
        self.graph.bonds.push(Bond {
            id,
            tail,
            head,
            length,
            orbit: orbit.into(),
        });
        id
    }

    /// Replaces the condition on an existing vertex.
    pub fn set_condition(&mut self, v: usize, condition: VertexCondition) {
        self.graph.vertices[v].condition = condition;
    }

    pub fn metadata(&mut self, metadata: GraphMetadata) -> &mut Self {
        self.graph.metadata = metadata;
        self
    }

    pub fn finish(self) -> MetricGraph {
        self.graph
    }
}

/// Interval `[0, length]` with the given condition at both ends.
pub fn interval(length: f64, ends: VertexCondition) -> MetricGraph {
    let mut b = GraphBuilder::new(1);
    let v0 = b.vertex(ends.clone());
    let v1 = b.vertex(ends);
    b.bond(v0, v1, length, "interval");
    b.metadata(GraphMetadata {
        seed: None,
        description: format!("interval L={length}"),
        irrep: None,
    });
    b.finish()
}

/// A single bond closed into a loop through one twist vertex.
pub fn twisted_loop(length: f64, matrix: CMatrix) -> MetricGraph {
    let c = matrix.nrows();
    let mut b = GraphBuilder::new(c);
    let v = b.neumann();
    let e = b.bond(v, v, length, "loop");
    b.set_condition(
        v,
        VertexCondition::Twist {
            matrix,
            incoming: BondEnd::head(e),
            outgoing: BondEnd::tail(e),
        },
    );
    b.metadata(GraphMetadata {
        seed: None,
        description: format!("twisted loop L={length}"),
        irrep: None,
    });
    b.finish()
}

/// Star with `lengths.len()` bonds, Neumann at the centre and the given
/// condition at the leaves.
pub fn star(lengths: &[f64], leaves: VertexCondition) -> MetricGraph {
    let mut b = GraphBuilder::new(1);
    let centre = b.neumann();
    for (i, &l) in lengths.iter().enumerate() {
        let leaf = b.vertex(leaves.clone());
        b.bond(centre, leaf, l, format!("arm#{i}"));
    }
    b.metadata(GraphMetadata {
        seed: None,
        description: format!("star with {} arms", lengths.len()),
        irrep: None,
    });
    b.finish()
}
