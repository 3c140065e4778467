//! Finite groups given by explicit multiplication tables, their matrix
//! irreps, and the real / complex / pseudo-real classification.
//!
//! Only the quaternion group Q8 is wired up ([`q8`], [`q8_irreps`]), but the
//! types work for any finite group small enough to tabulate.

use std::collections::VecDeque;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{self, c, CMatrix, I, ONE, ZERO};

/// Tolerance for the homomorphism and unitarity checks on irrep matrices.
pub const REPRESENTATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("multiplication table is not a valid group table: {0}")]
    InvalidTable(String),
    #[error("generators {generators:?} only generate a subgroup of order {reached} < {order}")]
    NotGenerating {
        generators: Vec<usize>,
        reached: usize,
        order: usize,
    },
    #[error("generator list is empty")]
    NoGenerators,
    #[error("generator {0} is the identity")]
    IdentityGenerator(usize),
    #[error("element index {0} out of range")]
    UnknownElement(usize),
    #[error(
        "irrep '{label}': matrix for element {element} is {rows}x{cols}, expected {dim}x{dim}"
    )]
    DimensionMismatch {
        label: String,
        element: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("irrep '{label}' has {got} matrices but the group has order {order}")]
    WrongMatrixCount {
        label: String,
        got: usize,
        order: usize,
    },
    #[error("Frobenius-Schur indicator {value} of irrep '{label}' is not in {{-1, 0, 1}}")]
    InconsistentIndicator { label: String, value: Complex64 },
    #[error("irrep '{label}' is not a representation: {reason}")]
    NotARepresentation { label: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    pub index: usize,
    pub label: String,
}

/// A finite group given by its full multiplication table.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    elements: Vec<GroupElement>,
    table: Vec<Vec<usize>>,
    inverses: Vec<usize>,
    identity: usize,
    generators: Vec<usize>,
}

impl FiniteGroup {
    /// Builds a group from a Cayley table, checking the group axioms and that
    /// `generators` generate everything.
    pub fn from_table(
        labels: &[&str],
        table: Vec<Vec<usize>>,
        generators: Vec<usize>,
    ) -> Result<Self, GroupError> {
        let n = labels.len();
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(GroupError::InvalidTable("table is not square".into()));
        }
        if table.iter().flatten().any(|&x| x >= n) {
            return Err(GroupError::InvalidTable("entry out of range".into()));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(GroupError::InvalidTable(format!("duplicate label {a}")));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| GroupError::InvalidTable("no identity".into()))?;
        let mut inverses = Vec::with_capacity(n);
        for g in 0..n {
            let inv = (0..n)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or_else(|| GroupError::InvalidTable(format!("element {g} has no inverse")))?;
            inverses.push(inv);
        }
        let elements = labels
            .iter()
            .enumerate()
            .map(|(index, l)| GroupElement {
                index,
                label: (*l).to_string(),
            })
            .collect();
        let group = FiniteGroup {
            elements,
            table,
            inverses,
            identity,
            generators: Vec::new(),
        };
        if !group.is_associative() {
            return Err(GroupError::InvalidTable("not associative".into()));
        }
        group.check_generators(&generators)?;
        Ok(FiniteGroup {
            generators,
            ..group
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn multiply(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn label(&self, g: usize) -> &str {
        &self.elements[g].label
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.label == label)
    }

    /// Exhaustive check over all `|G|³` triples.
    pub fn is_associative(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n).all(|c| {
                    self.multiply(self.multiply(a, b), c) == self.multiply(a, self.multiply(b, c))
                })
            })
        })
    }

    /// Elements of the subgroup generated by `gens`, in breadth-first order.
    pub fn generated_subgroup(&self, gens: &[usize]) -> Vec<usize> {
        self.words(gens).into_iter().map(|(g, _)| g).collect()
    }

    fn check_generators(&self, gens: &[usize]) -> Result<(), GroupError> {
        if gens.is_empty() {
            return Err(GroupError::NoGenerators);
        }
        if let Some(&g) = gens.iter().find(|&&g| g >= self.order()) {
            return Err(GroupError::UnknownElement(g));
        }
        if let Some(&g) = gens.iter().find(|&&g| g == self.identity) {
            return Err(GroupError::IdentityGenerator(g));
        }
        let reached = self.generated_subgroup(gens).len();
        if reached != self.order() {
            return Err(GroupError::NotGenerating {
                generators: gens.to_vec(),
                reached,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Shortest words (as generator-position lists, applied by right
    /// multiplication) for every element reachable from the identity.
    fn words(&self, gens: &[usize]) -> Vec<(usize, Vec<usize>)> {
        let mut seen = vec![false; self.order()];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        seen[self.identity] = true;
        queue.push_back((self.identity, Vec::new()));
        while let Some((g, word)) = queue.pop_front() {
            for (pos, &s) in gens.iter().enumerate() {
                let h = self.multiply(g, s);
                if !seen[h] {
                    seen[h] = true;
                    let mut w = word.clone();
                    w.push(pos);
                    queue.push_back((h, w));
                }
            }
            out.push((g, word));
        }
        out
    }
}

/// Quaternion units `1, i, j, k` in that order; products carry a sign.
const UNIT_PRODUCTS: [[(i8, usize); 4]; 4] = [
    [(1, 0), (1, 1), (1, 2), (1, 3)],
    [(1, 1), (-1, 0), (1, 3), (-1, 2)],
    [(1, 2), (-1, 3), (-1, 0), (1, 1)],
    [(1, 3), (1, 2), (-1, 1), (-1, 0)],
];

pub const Q8_LABELS: [&str; 8] = ["1", "-1", "I", "-I", "J", "-J", "K", "-K"];

/// Index of the Q8 element with the given sign and unit (0 = 1, 1 = I, ...).
fn q8_index(sign: i8, unit: usize) -> usize {
    2 * unit + usize::from(sign < 0)
}

/// The quaternion group `{±1, ±I, ±J, ±K}` with `I² = J² = K² = IJK = -1`,
/// generated by `I` and `J`.
pub fn q8() -> FiniteGroup {
    let mut table = vec![vec![0; 8]; 8];
    for a in 0..8 {
        for b in 0..8 {
            let (sa, ua) = (if a % 2 == 0 { 1 } else { -1 }, a / 2);
            let (sb, ub) = (if b % 2 == 0 { 1 } else { -1 }, b / 2);
            let (s, u) = UNIT_PRODUCTS[ua][ub];
            table[a][b] = q8_index(sa * sb * s, u);
        }
    }
    FiniteGroup::from_table(&Q8_LABELS, table, vec![Q8_I, Q8_J]).expect("Q8 table is a group")
}

pub const Q8_ONE: usize = 0;
pub const Q8_MINUS_ONE: usize = 1;
pub const Q8_I: usize = 2;
pub const Q8_J: usize = 4;
pub const Q8_K: usize = 6;

/// Real, complex or pseudo-real, as decided by the Frobenius-Schur indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsType {
    Real,
    Complex,
    PseudoReal,
}

impl FsType {
    pub fn indicator(self) -> i8 {
        match self {
            FsType::Real => 1,
            FsType::Complex => 0,
            FsType::PseudoReal => -1,
        }
    }

    pub fn from_indicator(v: i8) -> Option<Self> {
        match v {
            1 => Some(FsType::Real),
            0 => Some(FsType::Complex),
            -1 => Some(FsType::PseudoReal),
            _ => None,
        }
    }
}

impl fmt::Display for FsType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FsType::Real => "real",
            FsType::Complex => "complex",
            FsType::PseudoReal => "pseudo-real",
        })
    }
}

/// A unitary matrix representation, one matrix per group element.
#[derive(Debug, Clone)]
pub struct Irrep {
    pub label: String,
    pub dimension: usize,
    pub matrices: Vec<CMatrix>,
    pub fs_type: FsType,
}

impl Irrep {
    /// Extends generator images to the whole group by walking shortest words.
    pub fn from_generators(
        group: &FiniteGroup,
        label: &str,
        images: &[CMatrix],
        fs_type: FsType,
    ) -> Result<Self, GroupError> {
        let gens = group.generators();
        assert_eq!(images.len(), gens.len(), "one image per generator");
        let dim = images[0].nrows();
        let mut matrices: Vec<Option<CMatrix>> = vec![None; group.order()];
        for (g, word) in group.words(gens) {
            let mut m = linalg::identity(dim);
            for pos in word {
                m = linalg::matmul(&m, &images[pos]);
            }
            matrices[g] = Some(m);
        }
        let irrep = Irrep {
            label: label.to_string(),
            dimension: dim,
            matrices: matrices
                .into_iter()
                .map(|m| m.expect("generators generate"))
                .collect(),
            fs_type,
        };
        if !verify_representation(group, &irrep)? {
            return Err(GroupError::NotARepresentation {
                label: label.to_string(),
                reason: "generator images violate the group relations".into(),
            });
        }
        Ok(irrep)
    }

    pub fn matrix(&self, g: usize) -> &CMatrix {
        &self.matrices[g]
    }

    pub fn character(&self, g: usize) -> Complex64 {
        linalg::trace(&self.matrices[g])
    }
}

/// The five Q8 irreps: four sign characters labelled by `(M(I), M(J))`, then
/// the two-dimensional pseudo-real irrep with `M(I) = diag(i, -i)` and
/// `M(J) = [[0, 1], [-1, 0]]`.
///
/// Labels: `triv` (+,+), `sgnI` (-,+), `sgnJ` (+,-), `sgnIJ` (-,-), `pseudo`.
pub fn q8_irreps() -> Vec<Irrep> {
    let group = q8();
    let mut out = Vec::with_capacity(5);
    for (label, si, sj) in [
        ("triv", 1.0, 1.0),
        ("sgnI", -1.0, 1.0),
        ("sgnJ", 1.0, -1.0),
        ("sgnIJ", -1.0, -1.0),
    ] {
        let images = [linalg::scalar(c(si, 0.0)), linalg::scalar(c(sj, 0.0))];
        out.push(Irrep::from_generators(&group, label, &images, FsType::Real).expect("1D irrep"));
    }
    out.push(
        Irrep::from_generators(
            &group,
            "pseudo",
            &q8_pseudo_generators(),
            FsType::PseudoReal,
        )
        .expect("2D irrep"),
    );
    out
}

/// `[M(I), M(J)]` for the two-dimensional Q8 irrep.
pub fn q8_pseudo_generators() -> [CMatrix; 2] {
    [
        linalg::from_rows(&[&[I, ZERO], &[ZERO, -I]]),
        linalg::from_rows(&[&[ZERO, ONE], &[-ONE, ZERO]]),
    ]
}

/// Looks up one of the five Q8 irreps by label.
pub fn q8_irrep(label: &str) -> Option<Irrep> {
    q8_irreps().into_iter().find(|r| r.label == label)
}

/// True iff every matrix is unitary and `M(g)M(h) = M(gh)` for all pairs,
/// both to [`REPRESENTATION_TOL`] elementwise.
pub fn verify_representation(group: &FiniteGroup, irrep: &Irrep) -> Result<bool, GroupError> {
    if irrep.matrices.len() != group.order() {
        return Err(GroupError::WrongMatrixCount {
            label: irrep.label.clone(),
            got: irrep.matrices.len(),
            order: group.order(),
        });
    }
    for (g, m) in irrep.matrices.iter().enumerate() {
        if m.nrows() != irrep.dimension || m.ncols() != irrep.dimension {
            return Err(GroupError::DimensionMismatch {
                label: irrep.label.clone(),
                element: g,
                rows: m.nrows(),
                cols: m.ncols(),
                dim: irrep.dimension,
            });
        }
    }
    if irrep
        .matrices
        .iter()
        .any(|m| !linalg::is_unitary(m, REPRESENTATION_TOL))
    {
        return Ok(false);
    }
    let n = group.order();
    for a in 0..n {
        for b in 0..n {
            let prod = linalg::matmul(irrep.matrix(a), irrep.matrix(b));
            if linalg::max_abs_diff(&prod, irrep.matrix(group.multiply(a, b))) > REPRESENTATION_TOL
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Frobenius-Schur indicator `(1/|G|) Σ_g χ(g²)`: `+1` real, `0` complex,
/// `-1` pseudo-real.
pub fn frobenius_schur(group: &FiniteGroup, irrep: &Irrep) -> Result<i8, GroupError> {
    let sum: Complex64 = (0..group.order())
        .map(|g| irrep.character(group.multiply(g, g)))
        .sum();
    let value = sum / group.order() as f64;
    let rounded = value.re.round();
    if (value - c(rounded, 0.0)).norm() > 1e-9 || !(-1.0..=1.0).contains(&rounded) {
        return Err(GroupError::InconsistentIndicator {
            label: irrep.label.clone(),
            value,
        });
    }
    Ok(rounded as i8)
}

/// Computes the indicator and checks it agrees with the stored `fs_type`.
pub fn classify(group: &FiniteGroup, irrep: &Irrep) -> Result<FsType, GroupError> {
    let ind = frobenius_schur(group, irrep)?;
    let fs = FsType::from_indicator(ind).expect("indicator in range");
    if fs != irrep.fs_type {
        return Err(GroupError::NotARepresentation {
            label: irrep.label.clone(),
            reason: format!("stored type {} but indicator says {fs}", irrep.fs_type),
        });
    }
    Ok(fs)
}

const CONJUGATOR_SEED: u64 = 0x51_4d_38;
const CONJUGATOR_ATTEMPTS: u64 = 16;

/// Unitary `S` with `M(g) = S⁻¹ M(g)* S` for every `g`, or `None` for a
/// complex irrep.
///
/// `S` is obtained by averaging `M(g)ᵀ X M(g)` over the group for a seeded
/// random `X` and rescaling; the phase is fixed so the first nonzero entry
/// (row-major) is real and positive. It is symmetric for real irreps and
/// antisymmetric for pseudo-real ones.
pub fn conjugating_matrix(group: &FiniteGroup, irrep: &Irrep) -> Option<CMatrix> {
    if irrep.fs_type == FsType::Complex {
        return None;
    }
    let d = irrep.dimension;
    let normal = StandardNormal;
    for attempt in 0..CONJUGATOR_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(CONJUGATOR_SEED + attempt);
        let x = CMatrix::from_fn(d, d, |_, _| {
            c(normal.sample(&mut rng), normal.sample(&mut rng))
        });
        let mut s0 = CMatrix::zeros(d, d);
        for g in 0..group.order() {
            let m = irrep.matrix(g);
            s0 += linalg::transpose(m) * &x * m;
        }
        // Schur's lemma: S0† S0 is a multiple of the identity.
        let scale = (s0.adjoint() * &s0)[(0, 0)].re.sqrt();
        if scale < 1e-8 * group.order() as f64 {
            continue;
        }
        let mut s = CMatrix::from_fn(d, d, |i, j| s0[(i, j)] / scale);
        let first = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)])
            .find(|z| z.norm() > 1e-12)
            .expect("nonzero matrix");
        let phase = first.conj() / first.norm();
        s = CMatrix::from_fn(d, d, |i, j| s[(i, j)] * phase);
        return Some(s);
    }
    None
}

/// Undirected combinatorial graph whose edges carry the generator that
/// produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyGraph {
    pub vertex_count: usize,
    pub edges: Vec<CayleyEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CayleyEdge {
    pub from: usize,
    pub to: usize,
    pub generator: usize,
}

impl CayleyGraph {
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.from == v) + usize::from(e.to == v))
            .sum()
    }
}

/// One vertex per element and an edge `(g, g·s)` labelled `s` for every
/// element `g` and generator `s`.
pub fn cayley_graph(group: &FiniteGroup, generators: &[usize]) -> Result<CayleyGraph, GroupError> {
    group.check_generators(generators)?;
    let edges = generators
        .iter()
        .flat_map(|&s| {
            (0..group.order()).map(move |g| CayleyEdge {
                from: g,
                to: group.multiply(g, s),
                generator: s,
            })
        })
        .collect();
    Ok(CayleyGraph {
        vertex_count: group.order(),
        edges,
    })
}
