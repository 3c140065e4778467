//! Directed-bond scattering systems and their spectra.
//!
//! Levels are the `k` where `U(k) = D(k)·S` has eigenvalue 1. The eigenphases
//! of `U` increase with `k` at a rate between the shortest and the longest
//! bond length, so counting how often they pass through `0 mod 2π` gives a
//! monotone counting function `N(k)`. Between two grid points the number of
//! crossings follows exactly from `det U(k) = e^{ik·c·ΣL_d}·det S`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph_io;
use crate::linalg::{self, CMatrix, ZERO};
use crate::metric_graph::{BondEnd, End, MetricGraph, VertexCondition, Violation};
use crate::spectrum::{Spectrum, SpectrumMeta};

/// Grid step as a fraction of `π / L_max`.
pub const STEP_FRACTION: f64 = 0.4;
pub const MAX_HALVINGS: u32 = 6;
/// Slack on the per-step eigenphase increase.
pub const PHASE_SLACK: f64 = 1e-8;
/// `k_min = K_MIN_FACTOR · π / L_tot`.
pub const K_MIN_FACTOR: f64 = 1e-6;
/// Relative root tolerance, `1e-12 · max(1, k)`.
pub const ROOT_TOL: f64 = 1e-12;

const S_UNITARY_TOL: f64 = 1e-12;
const WINDING_TOL: f64 = 1e-6;
const MAX_ROOT_ITERATIONS: usize = 400;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("graph violates invariants: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidGraph(Vec<Violation>),
    #[error("unsupported vertex condition at vertex {vertex}: {reason}")]
    UnsupportedCondition { vertex: usize, reason: String },
    #[error("scattering matrix is not unitary (defect {0:.3e})")]
    NonUnitary(f64),
    #[error("eigenvalue solver failed at k={k}: {message}")]
    Eigen { k: f64, message: String },
    #[error(
        "eigenphase branch matching failed on [{k_lo}, {k_hi}] after {halvings} halvings: {detail}"
    )]
    BranchMatching {
        k_lo: f64,
        k_hi: f64,
        halvings: u32,
        detail: String,
    },
    #[error("root search did not converge in [{k_lo}, {k_hi}]")]
    RootSearch { k_lo: f64, k_hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

type Result<T> = std::result::Result<T, SpectralError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedBond {
    pub bond: usize,
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

/// Scattering data of a validated graph. Immutable, so every method can be
/// called from several threads at once.
#[derive(Debug, Clone)]
pub struct ScatteringSystem {
    /// Bond `b` appears as `2b` (tail to head) and `2b + 1` (head to tail).
    pub directed_bonds: Vec<DirectedBond>,
    pub s: CMatrix,
    pub components: usize,
    pub total_length: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// `e^{ik L}` per amplitude index `d·c + component`.
    amp_lengths: Vec<f64>,
    meta: SpectrumMeta,
}

/// Directed bond arriving at the vertex through `end`.
fn arriving(end: BondEnd) -> usize {
    match end.end {
        End::Head => 2 * end.bond,
        End::Tail => 2 * end.bond + 1,
    }
}

/// Directed bond leaving the vertex through `end`.
fn leaving(end: BondEnd) -> usize {
    match end.end {
        End::Tail => 2 * end.bond,
        End::Head => 2 * end.bond + 1,
    }
}

pub fn build_scattering(graph: &MetricGraph) -> Result<ScatteringSystem> {
    graph.validate().map_err(SpectralError::InvalidGraph)?;
    let c = graph.component_count;
    let nb = graph.bonds.len();
    let n = 2 * nb * c;
    let mut s = CMatrix::zeros(n, n);
    let mut put = |out: usize, inc: usize, block: &dyn Fn(usize, usize) -> Complex64| {
        for i in 0..c {
            for j in 0..c {
                s[(out * c + i, inc * c + j)] = block(i, j);
            }
        }
    };
    let diag = |z: f64| move |i: usize, j: usize| if i == j { Complex64::from(z) } else { ZERO };

    for v in &graph.vertices {
        let ends = graph.ends_at(v.id);
        match &v.condition {
            VertexCondition::Neumann => {
                let deg = ends.len() as f64;
                for &e_in in &ends {
                    for &e_out in &ends {
                        let val = 2.0 / deg - if e_in == e_out { 1.0 } else { 0.0 };
                        put(leaving(e_out), arriving(e_in), &diag(val));
                    }
                }
            }
            VertexCondition::Dirichlet => {
                for &e in &ends {
                    put(leaving(e), arriving(e), &diag(-1.0));
                }
            }
            VertexCondition::Twist {
                matrix,
                incoming,
                outgoing,
            } => {
                if ends.len() != 2 {
                    return Err(SpectralError::UnsupportedCondition {
                        vertex: v.id,
                        reason: format!("twist of degree {}", ends.len()),
                    });
                }
                let adj = linalg::adjoint(matrix);
                put(leaving(*outgoing), arriving(*incoming), &|i, j| {
                    matrix[(i, j)]
                });
                put(leaving(*incoming), arriving(*outgoing), &|i, j| adj[(i, j)]);
            }
        }
    }
    let defect = linalg::unitarity_defect(&s);
    if defect > S_UNITARY_TOL {
        return Err(SpectralError::NonUnitary(defect));
    }

    let directed_bonds: Vec<DirectedBond> = graph
        .bonds
        .iter()
        .flat_map(|b| {
            [
                DirectedBond {
                    bond: b.id,
                    from: b.tail,
                    to: b.head,
                    length: b.length,
                },
                DirectedBond {
                    bond: b.id,
                    from: b.head,
                    to: b.tail,
                    length: b.length,
                },
            ]
        })
        .collect();
    let amp_lengths = directed_bonds
        .iter()
        .flat_map(|d| std::iter::repeat_n(d.length, c))
        .collect();
    let l_min = graph
        .bonds
        .iter()
        .map(|b| b.length)
        .fold(f64::INFINITY, f64::min);
    let l_max = graph.bonds.iter().map(|b| b.length).fold(0.0, f64::max);
    let graph_hash =
        graph_io::content_hash(graph).map_err(|e| SpectralError::InvalidArgument(e.to_string()))?;
    let total_length = graph.total_length();
    Ok(ScatteringSystem {
        directed_bonds,
        s,
        components: c,
        total_length,
        l_min,
        l_max,
        amp_lengths,
        meta: SpectrumMeta {
            graph_hash,
            seed: graph.metadata.seed,
            components: c,
            total_length,
            irrep: graph.metadata.irrep.clone(),
            ensemble: None,
        },
    })
}

/// Sorted eigenphases in `[0, 2π)` at one `k`.
#[derive(Debug, Clone)]
struct Snapshot {
    k: f64,
    phases: Vec<f64>,
    sum: f64,
}

#[derive(Debug, Clone)]
struct Segment {
    a: Snapshot,
    b: Snapshot,
    crossings: usize,
}

/// A located level (or cluster of degenerate levels).
#[derive(Debug, Clone, Copy)]
struct Cluster {
    k: f64,
    multiplicity: usize,
    /// Upper end of the final bracket; the count there includes the cluster.
    k_hi: f64,
}

impl ScatteringSystem {
    /// Size of `U(k)`: `2B · c`.
    pub fn dim(&self) -> usize {
        self.amp_lengths.len()
    }

    pub fn meta(&self) -> &SpectrumMeta {
        &self.meta
    }

    pub fn k_min(&self) -> f64 {
        K_MIN_FACTOR * PI / self.total_length
    }

    /// Mean level density `dN/dk = c · L_tot / π`.
    pub fn weyl_slope(&self) -> f64 {
        self.components as f64 * self.total_length / PI
    }

    pub fn grid_step(&self) -> f64 {
        STEP_FRACTION * PI / self.l_max
    }

    /// Total eigenphase velocity, `c · Σ_d L_d`.
    fn phase_rate(&self) -> f64 {
        self.amp_lengths.iter().sum()
    }

    pub fn evolution_operator(&self, k: f64) -> CMatrix {
        let phases: Vec<Complex64> = self
            .amp_lengths
            .iter()
            .map(|&l| Complex64::from_polar(1.0, k * l))
            .collect();
        CMatrix::from_fn(self.dim(), self.dim(), |i, j| phases[i] * self.s[(i, j)])
    }

    /// Eigenphases of `U(k)` wrapped into `[0, 2π)`, ascending.
    pub fn eigenphases(&self, k: f64) -> Result<Vec<f64>> {
        Ok(self.snapshot(k)?.phases)
    }

    fn snapshot(&self, k: f64) -> Result<Snapshot> {
        let eig = self
            .evolution_operator(k)
            .eigenvalues()
            .map_err(|e| SpectralError::Eigen {
                k,
                message: format!("{e:?}"),
            })?;
        let mut phases: Vec<f64> = eig.iter().map(|z| linalg::wrap_phase(z.arg())).collect();
        phases.sort_by(f64::total_cmp);
        let sum = phases.iter().sum();
        Ok(Snapshot { k, phases, sum })
    }

    /// Number of eigenphases that passed `0 mod 2π` between the snapshots,
    /// from the determinant identity.
    fn winding(&self, a: &Snapshot, b: &Snapshot) -> std::result::Result<usize, String> {
        let r = (self.phase_rate() * (b.k - a.k) + a.sum - b.sum) / TAU;
        let rounded = r.round();
        if (r - rounded).abs() > WINDING_TOL {
            return Err(format!("non-integer winding {r}"));
        }
        if rounded < 0.0 || rounded > a.phases.len() as f64 {
            return Err(format!("winding {rounded} out of range"));
        }
        Ok(rounded as usize)
    }

    /// Checks that every lifted order statistic advanced by an amount the
    /// bond lengths allow, and returns the crossing count.
    fn matched_crossings(&self, a: &Snapshot, b: &Snapshot) -> std::result::Result<usize, String> {
        let r = self.winding(a, b)?;
        let dk = b.k - a.k;
        let (lo, hi) = (self.l_min * dk - PHASE_SLACK, self.l_max * dk + PHASE_SLACK);
        for i in 0..a.phases.len() {
            let step = lifted(b, i, r) - a.phases[i];
            if step < lo || step > hi {
                return Err(format!(
                    "branch {i} advanced by {step:.3e}, allowed [{lo:.3e}, {hi:.3e}]"
                ));
            }
        }
        Ok(r)
    }

    fn segment(&self, a: Snapshot, b: Snapshot) -> Result<Vec<Segment>> {
        self.refine(a, b, 0)
    }

    fn refine(&self, a: Snapshot, b: Snapshot, depth: u32) -> Result<Vec<Segment>> {
        match self.matched_crossings(&a, &b) {
            Ok(crossings) => Ok(vec![Segment { a, b, crossings }]),
            Err(detail) if depth >= MAX_HALVINGS => Err(SpectralError::BranchMatching {
                k_lo: a.k,
                k_hi: b.k,
                halvings: depth,
                detail,
            }),
            Err(_) => {
                let mid = self.snapshot(0.5 * (a.k + b.k))?;
                let mut left = self.refine(a, mid.clone(), depth + 1)?;
                left.extend(self.refine(mid, b, depth + 1)?);
                Ok(left)
            }
        }
    }

    /// Grid `k_start + jΔ` up to `k_end` (the last point clipped to `k_end`),
    /// cut into matched segments.
    fn scan(
        &self,
        k_start: f64,
        first_index: usize,
        last_index: usize,
        k_end: Option<f64>,
    ) -> Result<Vec<Segment>> {
        let dk = self.grid_step();
        let point = |j: usize| {
            let k = k_start + j as f64 * dk;
            match k_end {
                Some(end) if j == last_index => end,
                _ => k,
            }
        };
        let snaps: Vec<Snapshot> = (first_index..=last_index)
            .into_par_iter()
            .map(|j| self.snapshot(point(j)))
            .collect::<Result<_>>()?;
        let nested: Vec<Vec<Segment>> = snaps
            .par_windows(2)
            .map(|w| self.segment(w[0].clone(), w[1].clone()))
            .collect::<Result<_>>()?;
        Ok(nested.into_iter().flatten().collect())
    }

    /// `N(k)`: levels in `(k_min, k]` with multiplicity.
    pub fn count_levels(&self, k: f64) -> Result<usize> {
        let k0 = self.k_min();
        if !(k >= k0) {
            return Err(SpectralError::InvalidArgument(format!(
                "k={k} below k_min={k0}"
            )));
        }
        if k == k0 {
            return Ok(0);
        }
        let segments = self.scan_to(k0, k)?;
        Ok(segments.iter().map(|s| s.crossings).sum())
    }

    fn scan_to(&self, k_start: f64, k_end: f64) -> Result<Vec<Segment>> {
        let dk = self.grid_step();
        let full = ((k_end - k_start) / dk).floor() as usize;
        // grid points stay shared with every other scan from the same start
        let last_grid = k_start + full as f64 * dk;
        if k_end - last_grid > 0.0 {
            self.scan(k_start, 0, full + 1, Some(k_end))
        } else {
            self.scan(k_start, 0, full, None)
        }
    }

    /// Eigenphases of `U` followed continuously over `steps` equal steps
    /// from `k0` to `k1`. Row `j` holds the lifted phases at step `j`; each
    /// column is nondecreasing.
    pub fn track_eigenphases(&self, k0: f64, k1: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
        if steps == 0 || !(k1 > k0) {
            return Err(SpectralError::InvalidArgument(
                "need k1 > k0 and steps ≥ 1".into(),
            ));
        }
        let h = (k1 - k0) / steps as f64;
        if h > self.grid_step() {
            return Err(SpectralError::InvalidArgument(format!(
                "step {h} exceeds the matching limit {}",
                self.grid_step()
            )));
        }
        let mut prev = self.snapshot(k0)?;
        let mut offset = 0usize;
        let n = prev.phases.len();
        let lift = |s: &Snapshot, total: usize| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let j = i + total;
                    s.phases[j % n] + TAU * (j / n) as f64
                })
                .collect()
        };
        let mut rows = vec![lift(&prev, 0)];
        for j in 1..=steps {
            let next = self.snapshot(k0 + j as f64 * h)?;
            let r = self.matched_crossings(&prev, &next).map_err(|detail| {
                SpectralError::BranchMatching {
                    k_lo: prev.k,
                    k_hi: next.k,
                    halvings: 0,
                    detail,
                }
            })?;
            offset += r;
            rows.push(lift(&next, offset));
            prev = next;
        }
        Ok(rows)
    }

    /// The first `count` levels above `k_min`.
    pub fn find_levels(&self, count: usize) -> Result<Spectrum> {
        self.find_levels_from(self.k_min(), count)
    }

    /// The first `count` levels above `k_start`. A degenerate cluster
    /// straddling the cutoff is returned whole, so the result can hold a
    /// few more than `count` levels.
    pub fn find_levels_from(&self, k_start: f64, count: usize) -> Result<Spectrum> {
        if count == 0 {
            return Err(SpectralError::InvalidArgument(
                "count must be at least 1".into(),
            ));
        }
        if !(k_start >= self.k_min()) || !k_start.is_finite() {
            return Err(SpectralError::InvalidArgument(format!(
                "start {k_start} below k_min"
            )));
        }
        let dk = self.grid_step();
        let mut segments: Vec<Segment> = Vec::new();
        let mut found = 0usize;
        let mut next_index = 0usize;
        while found < count {
            let missing = (count - found) as f64;
            let span = (1.05 * missing / self.weyl_slope()).max(4.0 * dk);
            let last = next_index + (span / dk).ceil() as usize;
            let chunk = self.scan(k_start, next_index, last, None)?;
            found += chunk.iter().map(|s| s.crossings).sum::<usize>();
            segments.extend(chunk);
            next_index = last;
        }
        // drop segments past the one that reaches `count`
        let mut acc = 0;
        let keep = segments
            .iter()
            .position(|s| {
                acc += s.crossings;
                acc >= count
            })
            .map_or(segments.len(), |p| p + 1);
        segments.truncate(keep);

        let clusters = self.localise_all(&segments)?;
        let mut levels = Vec::with_capacity(count + 1);
        let mut k_max_scanned = k_start;
        for cl in clusters {
            if levels.len() >= count {
                break;
            }
            levels.extend(std::iter::repeat_n(cl.k, cl.multiplicity));
            k_max_scanned = cl.k_hi;
        }
        Ok(self.spectrum(levels, k_start, k_max_scanned))
    }

    /// All levels in `(k_min, k_max]`.
    pub fn levels_up_to(&self, k_max: f64) -> Result<Spectrum> {
        let k0 = self.k_min();
        if !(k_max > k0) || !k_max.is_finite() {
            return Err(SpectralError::InvalidArgument(format!(
                "k_max={k_max} not above k_min={k0}"
            )));
        }
        let segments = self.scan_to(k0, k_max)?;
        let levels = self
            .localise_all(&segments)?
            .into_iter()
            .flat_map(|cl| std::iter::repeat_n(cl.k, cl.multiplicity))
            .collect();
        Ok(self.spectrum(levels, k0, k_max))
    }

    fn spectrum(&self, levels: Vec<f64>, k_min: f64, k_max_scanned: f64) -> Spectrum {
        Spectrum {
            levels,
            k_min,
            k_max_scanned,
            meta: self.meta.clone(),
        }
    }

    fn localise_all(&self, segments: &[Segment]) -> Result<Vec<Cluster>> {
        let nested: Vec<Vec<Cluster>> = segments
            .par_iter()
            .map(|s| self.localise(s))
            .collect::<Result<_>>()?;
        Ok(nested.into_iter().flatten().collect())
    }

    /// Locates the crossings inside one segment. Branch `n-1-handled` is
    /// the next lifted order statistic to reach `2π`; its root is bracketed
    /// by an Illinois-weighted secant with a bisection safeguard.
    fn localise(&self, seg: &Segment) -> Result<Vec<Cluster>> {
        let n = seg.a.phases.len();
        let a = &seg.a;
        let eval = |s: &Snapshot| -> Result<usize> {
            self.winding(a, s)
                .map_err(|detail| SpectralError::BranchMatching {
                    k_lo: a.k,
                    k_hi: s.k,
                    halvings: 0,
                    detail,
                })
        };
        let mut out = Vec::with_capacity(seg.crossings);
        let mut handled = 0usize;
        let mut lo = seg.a.clone();
        while handled < seg.crossings {
            let i = n - 1 - handled;
            let mut hlo = lifted(&lo, i, handled) - TAU;
            let mut hi = seg.b.clone();
            let mut hhi = lifted(&hi, i, seg.crossings) - TAU;
            let mut r_hi = seg.crossings;
            let mut side = 0i8;
            let mut width_mark = hi.k - lo.k;
            let mut bisect = false;
            let mut iterations = 0;
            loop {
                let width = hi.k - lo.k;
                let tol = ROOT_TOL * hi.k.max(1.0);
                if width <= tol {
                    break;
                }
                iterations += 1;
                if iterations > MAX_ROOT_ITERATIONS {
                    return Err(SpectralError::RootSearch {
                        k_lo: lo.k,
                        k_hi: hi.k,
                    });
                }
                let mut x = lo.k - hlo * width / (hhi - hlo);
                if bisect || !x.is_finite() {
                    x = 0.5 * (lo.k + hi.k);
                }
                x = x.clamp(lo.k + 0.5 * tol, hi.k - 0.5 * tol);
                let snap = self.snapshot(x)?;
                let r = eval(&snap)?;
                let h = lifted(&snap, i, r) - TAU;
                if r > handled {
                    hi = snap;
                    hhi = h;
                    r_hi = r;
                    if side == 1 {
                        hlo *= 0.5;
                    }
                    side = 1;
                } else {
                    lo = snap;
                    hlo = h;
                    if side == -1 {
                        hhi *= 0.5;
                    }
                    side = -1;
                }
                if iterations % 2 == 0 {
                    let w = hi.k - lo.k;
                    bisect = w > 0.5 * width_mark;
                    width_mark = w;
                }
            }
            // a partner crossing within the tolerance joins the cluster
            while r_hi < seg.crossings {
                let tol = ROOT_TOL * hi.k.max(1.0);
                let next = lifted(&hi, n - 1 - r_hi, r_hi) - TAU;
                if next < -2.0 * self.l_max * tol {
                    break;
                }
                let x = hi.k + tol;
                let snap = if x >= seg.b.k {
                    seg.b.clone()
                } else {
                    self.snapshot(x)?
                };
                let r = eval(&snap)?;
                if r == r_hi {
                    break;
                }
                hi = snap;
                r_hi = r;
            }
            out.push(Cluster {
                k: 0.5 * (lo.k + hi.k),
                multiplicity: r_hi - handled,
                k_hi: hi.k,
            });
            handled = r_hi;
            lo = hi;
        }
        Ok(out)
    }
}

/// Lifted order statistic `i` of snapshot `s` after `r` crossings.
fn lifted(s: &Snapshot, i: usize, r: usize) -> f64 {
    let n = s.phases.len();
    let j = i + r;
    s.phases[j % n] + if j >= n { TAU } else { 0.0 }
}
