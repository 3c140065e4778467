//! Q8-symmetric graphs built by inflating the Cayley graph, and their irrep
//! quotient graphs.
//!
//! Every element `g` of Q8 gets a copy of a template subgraph; vertex `a` of
//! copy `g` is `v(g, a) = g·m + a`. An I-link `(a, b)` adds the bonds
//! `v(g, a) → v(gI, b)` for all `g`, and J-links likewise. Left
//! multiplication by any `h` permutes the copies and is a symmetry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::groups::{self, FiniteGroup, Irrep, Q8_I, Q8_J, Q8_K};
use crate::linalg;
use crate::metric_graph::{
    BondEnd, GraphBuilder, GraphMetadata, MetricGraph, VertexCondition, Violation,
};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid inflation spec: {0}")]
    InvalidSpec(String),
    #[error("constructed graph is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidGraph(Vec<Violation>),
    #[error("'{0}' is not one of the Q8 irreps")]
    UnknownIrrep(String),
}

/// Combinatorial template placed at every group element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Template {
    /// Single vertex, no edges: inflating it gives the bare Cayley graph.
    pub fn point() -> Self {
        Template {
            vertex_count: 1,
            edges: Vec::new(),
        }
    }

    /// Random connected simple graph: a random spanning tree plus distinct
    /// extra edges until `edge_count` is reached.
    pub fn random(vertex_count: usize, edge_count: usize, seed: u64) -> Result<Self, BuildError> {
        let m = vertex_count;
        if m == 0 {
            return Err(BuildError::InvalidSpec(
                "template needs at least one vertex".into(),
            ));
        }
        let max_edges = m * (m - 1) / 2;
        if edge_count + 1 < m || edge_count > max_edges {
            return Err(BuildError::InvalidSpec(format!(
                "a connected simple template on {m} vertices has between {} and {max_edges} edges, got {edge_count}",
                m - 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::with_capacity(edge_count);
        for v in 1..m {
            let u = rng.random_range(0..v);
            edges.push((u, v));
        }
        while edges.len() < edge_count {
            let u = rng.random_range(0..m);
            let v = rng.random_range(0..m);
            if u == v {
                continue;
            }
            let e = (u.min(v), u.max(v));
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
        Ok(Template {
            vertex_count: m,
            edges,
        })
    }

    pub fn is_connected(&self) -> bool {
        let m = self.vertex_count;
        if m == 0 {
            return false;
        }
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (0..m).all(|v| find(&mut parent, v) == root)
    }
}

/// Where bond lengths come from: one value per orbit.
#[derive(Debug, Clone, PartialEq)]
pub enum LengthSource {
    /// i.i.d. uniform on (0, 1) from a ChaCha8 stream with this seed.
    Seeded(u64),
    /// Explicit per-orbit lengths: template edges, then I-links, then J-links.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InflationSpec {
    pub template: Template,
    pub i_links: Vec<(usize, usize)>,
    pub j_links: Vec<(usize, usize)>,
    pub lengths: LengthSource,
}

impl InflationSpec {
    /// The bare Cayley graph of Q8 with generators I and J.
    pub fn bare_cayley(lengths: LengthSource) -> Self {
        InflationSpec {
            template: Template::point(),
            i_links: vec![(0, 0)],
            j_links: vec![(0, 0)],
            lengths,
        }
    }

    pub fn orbit_count(&self) -> usize {
        self.template.edges.len() + self.i_links.len() + self.j_links.len()
    }

    pub fn seed(&self) -> Option<u64> {
        match self.lengths {
            LengthSource::Seeded(s) => Some(s),
            LengthSource::Explicit(_) => None,
        }
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let m = self.template.vertex_count;
        if !self.template.is_connected() {
            return Err(BuildError::InvalidSpec("template is not connected".into()));
        }
        if let Some(&(u, v)) = self.template.edges.iter().find(|&&(u, v)| u >= m || v >= m) {
            return Err(BuildError::InvalidSpec(format!(
                "template edge ({u}, {v}) out of range"
            )));
        }
        for (name, links) in [("i_links", &self.i_links), ("j_links", &self.j_links)] {
            if links.is_empty() {
                return Err(BuildError::InvalidSpec(format!("{name} is empty")));
            }
            if let Some(&(a, b)) = links.iter().find(|&&(a, b)| a >= m || b >= m) {
                return Err(BuildError::InvalidSpec(format!(
                    "{name} entry ({a}, {b}) out of range"
                )));
            }
        }
        if let LengthSource::Explicit(ls) = &self.lengths {
            if ls.len() != self.orbit_count() {
                return Err(BuildError::InvalidSpec(format!(
                    "{} explicit lengths for {} orbits",
                    ls.len(),
                    self.orbit_count()
                )));
            }
            if ls.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
                return Err(BuildError::InvalidSpec(
                    "explicit lengths must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// One length per orbit, in the order template edges, I-links, J-links.
    pub fn orbit_lengths(&self) -> Vec<f64> {
        match &self.lengths {
            LengthSource::Explicit(ls) => ls.clone(),
            LengthSource::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..self.orbit_count())
                    .map(|_| loop {
                        let x: f64 = rng.random();
                        if x > 0.0 {
                            break x;
                        }
                    })
                    .collect()
            }
        }
    }

    /// `(orbit label, length)` for every orbit.
    pub fn orbits(&self) -> Vec<(String, f64)> {
        let lengths = self.orbit_lengths();
        let labels = (0..self.template.edges.len())
            .map(|i| format!("template-edge#{i}"))
            .chain((0..self.i_links.len()).map(|i| format!("I-link#{i}")))
            .chain((0..self.j_links.len()).map(|i| format!("J-link#{i}")));
        labels.zip(lengths).collect()
    }

    fn describe(&self) -> String {
        format!(
            "m={} e={} i_links={:?} j_links={:?}",
            self.template.vertex_count,
            self.template.edges.len(),
            self.i_links,
            self.j_links
        )
    }
}

/// Builds the full scalar graph with 8m vertices and
/// `8(e + |i_links| + |j_links|)` bonds.
pub fn build_symmetric_graph(spec: &InflationSpec) -> Result<MetricGraph, BuildError> {
    spec.validate()?;
    let group = groups::q8();
    let m = spec.template.vertex_count;
    let orbits = spec.orbits();
    let vertex = |g: usize, a: usize| g * m + a;
    let mut b = GraphBuilder::new(1);
    for _ in 0..group.order() * m {
        b.neumann();
    }
    let mut orbit = orbits.iter();
    for &(u, v) in &spec.template.edges {
        let (label, length) = orbit.next().expect("orbit per edge");
        for g in 0..group.order() {
            b.bond(vertex(g, u), vertex(g, v), *length, label.clone());
        }
    }
    for (generator, links) in [(Q8_I, &spec.i_links), (Q8_J, &spec.j_links)] {
        for &(a, c) in links {
            let (label, length) = orbit.next().expect("orbit per link");
            for g in 0..group.order() {
                b.bond(
                    vertex(g, a),
                    vertex(group.multiply(g, generator), c),
                    *length,
                    label.clone(),
                );
            }
        }
    }
    b.metadata(GraphMetadata {
        seed: spec.seed(),
        description: format!("Q8-symmetric graph {}", spec.describe()),
        irrep: Some("full".into()),
    });
    let graph = b.finish();
    graph.validate().map_err(BuildError::InvalidGraph)?;
    Ok(graph)
}

/// Vertex permutation of the full graph induced by left multiplication with `h`.
pub fn left_multiplication(group: &FiniteGroup, template_vertices: usize, h: usize) -> Vec<usize> {
    let m = template_vertices;
    (0..group.order() * m)
        .map(|v| group.multiply(h, v / m) * m + v % m)
        .collect()
}

/// Fundamental-domain graph isolating the subspectrum of `irrep`.
///
/// The copy at `K` is kept with its template bonds. The I-link `(a, b)` leaves
/// the domain towards `v(J, b)` and enters it from `v(-J, a)`; the two half
/// bonds are glued into one loop `v(K, b) → t → v(K, a)` of the full length,
/// where `t` is a twist vertex carrying `M(I)ᵀ` along that direction.
/// J-links are treated the same way with `M(J)ᵀ`. One-dimensional irreps
/// give scalar graphs; the pseudo-real irrep gives a two-component graph.
pub fn quotient(spec: &InflationSpec, irrep: &Irrep) -> Result<MetricGraph, BuildError> {
    spec.validate()?;
    let known = groups::q8_irrep(&irrep.label)
        .ok_or_else(|| BuildError::UnknownIrrep(irrep.label.clone()))?;
    let same = known.dimension == irrep.dimension
        && known.matrices.iter().zip(&irrep.matrices).all(|(a, b)| {
            a.nrows() == b.nrows() && a.ncols() == b.ncols() && linalg::max_abs_diff(a, b) == 0.0
        });
    if !same {
        return Err(BuildError::UnknownIrrep(irrep.label.clone()));
    }
    let m = spec.template.vertex_count;
    let orbits = spec.orbits();
    let mut b = GraphBuilder::new(irrep.dimension);
    for _ in 0..m {
        b.neumann();
    }
    let mut orbit = orbits.iter();
    for &(u, v) in &spec.template.edges {
        let (label, length) = orbit.next().expect("orbit per edge");
        b.bond(u, v, *length, label.clone());
    }
    for (generator, links) in [(Q8_I, &spec.i_links), (Q8_J, &spec.j_links)] {
        let twist = linalg::transpose(irrep.matrix(generator));
        for &(a, c) in links {
            let (label, length) = orbit.next().expect("orbit per link");
            let t = b.neumann();
            let first = b.bond(c, t, length / 2.0, label.clone());
            let second = b.bond(t, a, length / 2.0, label.clone());
            b.set_condition(
                t,
                VertexCondition::Twist {
                    matrix: twist.clone(),
                    incoming: BondEnd::head(first),
                    outgoing: BondEnd::tail(second),
                },
            );
        }
    }
    b.metadata(GraphMetadata {
        seed: spec.seed(),
        description: format!(
            "Q8 quotient irrep={} representative={} {}",
            irrep.label,
            groups::Q8_LABELS[Q8_K],
            spec.describe()
        ),
        irrep: Some(irrep.label.clone()),
    });
    let graph = b.finish();
    graph.validate().map_err(BuildError::InvalidGraph)?;
    Ok(graph)
}

/// Twist matrices of a quotient graph, in vertex order.
pub fn twist_matrices(graph: &MetricGraph) -> Vec<linalg::CMatrix> {
    graph
        .vertices
        .iter()
        .filter_map(|v| match &v.condition {
            VertexCondition::Twist { matrix, .. } => Some(matrix.clone()),
            _ => None,
        })
        .collect()
}
