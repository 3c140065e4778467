//! Gaussian random-matrix samples used as ground truth for the spacing
//! statistics.
//!
//! Normalisation: GOE has off-diagonal variance 1/2 and diagonal variance 1;
//! GUE has `E|H_ij|² = 1`; GSE is `[[A, B], [-B*, A*]]` with `A` Hermitian,
//! `B` complex antisymmetric and `E|.|² = 1/2` off the diagonal.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::spectral_stats::{
    remove_kramers, EnsembleClass, Realisation, SpacingSample, StatsError, KRAMERS_TOL,
};

pub const DEFAULT_CENTRAL_FRACTION: f64 = 0.6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{0} has no random-matrix sampler")]
    UnsupportedClass(EnsembleClass),
    #[error("invalid dimension {dim} for {class}: {reason}")]
    Dimension {
        class: EnsembleClass,
        dim: usize,
        reason: &'static str,
    },
    #[error("eigenvalue solver failed: {0}")]
    Eigen(String),
    #[error("central fraction must lie in (0, 1], got {0}")]
    Fraction(f64),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSample {
    /// Ascending; GSE values come in degenerate pairs.
    pub eigenvalues: Vec<f64>,
    pub class: EnsembleClass,
    pub dim: usize,
    pub seed: u64,
    /// Sum of the diagonal of the sampled matrix.
    pub trace: f64,
}

impl EnsembleSample {
    /// Radius of the limiting semicircle, `R² = 4 × (off-diagonal variance per row)`.
    pub fn semicircle_radius(&self) -> f64 {
        let n = self.dim as f64;
        match self.class {
            EnsembleClass::Goe => (2.0 * n).sqrt(),
            EnsembleClass::Gue => 2.0 * n.sqrt(),
            _ => 2.0 * (n / 2.0).sqrt(),
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Complex Gaussian with `E|z|² = var`.
fn cgauss(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    Complex64::new(s * gauss(rng), s * gauss(rng))
}

pub fn sample_eigenvalues(
    class: EnsembleClass,
    dim: usize,
    seed: u64,
) -> Result<EnsembleSample, OracleError> {
    if dim < 2 {
        return Err(OracleError::Dimension {
            class,
            dim,
            reason: "need at least 2",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut eigenvalues, trace) = match class {
        EnsembleClass::Goe => {
            let mut h = Mat::<f64>::zeros(dim, dim);
            for i in 0..dim {
                h[(i, i)] = gauss(&mut rng);
                for j in 0..i {
                    let x = gauss(&mut rng) * 0.5f64.sqrt();
                    h[(i, j)] = x;
                    h[(j, i)] = x;
                }
            }
            let trace = (0..dim).map(|i| h[(i, i)]).sum();
            let ev = h
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| OracleError::Eigen(format!("{e:?}")))?;
            (ev, trace)
        }
        EnsembleClass::Gue => {
            let mut h = Mat::<Complex64>::zeros(dim, dim);
            for i in 0..dim {
                h[(i, i)] = Complex64::from(gauss(&mut rng));
                for j in 0..i {
                    let z = cgauss(&mut rng, 1.0);
                    h[(i, j)] = z;
                    h[(j, i)] = z.conj();
                }
            }
            hermitian_eigenvalues(&h)?
        }
        EnsembleClass::Gse => {
            if dim % 2 != 0 {
                return Err(OracleError::Dimension {
                    class,
                    dim,
                    reason: "must be even",
                });
            }
            let n = dim / 2;
            let mut h = Mat::<Complex64>::zeros(dim, dim);
            for i in 0..n {
                let d = Complex64::from(gauss(&mut rng) * 0.5f64.sqrt());
                h[(i, i)] = d;
                h[(n + i, n + i)] = d;
                for j in 0..i {
                    let a = cgauss(&mut rng, 0.5);
                    let b = cgauss(&mut rng, 0.5);
                    // A block and its conjugate
                    h[(i, j)] = a;
                    h[(j, i)] = a.conj();
                    h[(n + i, n + j)] = a.conj();
                    h[(n + j, n + i)] = a;
                    // B antisymmetric in the upper right, -B* in the lower left
                    h[(i, n + j)] = b;
                    h[(j, n + i)] = -b;
                    h[(n + i, j)] = -b.conj();
                    h[(n + j, i)] = b.conj();
                }
            }
            hermitian_eigenvalues(&h)?
        }
        EnsembleClass::Poisson => return Err(OracleError::UnsupportedClass(class)),
    };
    eigenvalues.sort_by(f64::total_cmp);
    Ok(EnsembleSample {
        eigenvalues,
        class,
        dim,
        seed,
        trace,
    })
}

fn hermitian_eigenvalues(h: &Mat<Complex64>) -> Result<(Vec<f64>, f64), OracleError> {
    let trace = (0..h.nrows()).map(|i| h[(i, i)].re).sum();
    let ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| OracleError::Eigen(format!("{e:?}")))?;
    Ok((ev, trace))
}

/// Fraction of the semicircle mass below `x`.
fn semicircle_cdf(x: f64, r: f64) -> f64 {
    let t = (x / r).clamp(-1.0, 1.0);
    0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / PI
}

/// Unfolded central levels of one sample. GSE pairs are collapsed first,
/// so the result is a simple spectrum in every class.
pub fn bulk_levels(
    sample: &EnsembleSample,
    central_fraction: f64,
) -> Result<Vec<f64>, OracleError> {
    if !(central_fraction > 0.0 && central_fraction <= 1.0) {
        return Err(OracleError::Fraction(central_fraction));
    }
    let r = sample.semicircle_radius();
    let distinct = match sample.class {
        EnsembleClass::Gse => sample.dim / 2,
        _ => sample.dim,
    } as f64;
    let unfolded: Vec<f64> = sample
        .eigenvalues
        .iter()
        .map(|&x| distinct * semicircle_cdf(x, r))
        .collect();
    let levels = match sample.class {
        EnsembleClass::Gse => remove_kramers(&unfolded, KRAMERS_TOL).values,
        _ => unfolded,
    };
    let n = levels.len();
    let keep = ((central_fraction * n as f64).round() as usize).clamp(2.min(n), n);
    let start = (n - keep) / 2;
    let kept = levels[start..start + keep].to_vec();
    if kept.len() < 2 {
        return Err(StatsError::TooFewLevels(kept.len()).into());
    }
    Ok(kept)
}

pub fn bulk_spacings(
    sample: &EnsembleSample,
    central_fraction: f64,
) -> Result<SpacingSample, OracleError> {
    pooled_bulk_spacings(std::slice::from_ref(sample), central_fraction)
}

/// Bulk spacings of several samples, pooled per realisation.
pub fn pooled_bulk_spacings(
    samples: &[EnsembleSample],
    central_fraction: f64,
) -> Result<SpacingSample, OracleError> {
    let parts = samples
        .iter()
        .map(|s| {
            Ok(Realisation {
                seed: Some(s.seed),
                levels: bulk_levels(s, central_fraction)?,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    let mut pooled = SpacingSample::pool(&parts)?;
    if samples.iter().any(|s| s.class == EnsembleClass::Gse) {
        pooled.removed_degeneracies = samples.iter().map(|s| s.dim / 2).sum();
    }
    Ok(pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_stats::{classify, ks_distance, DEFAULT_BINS};
    use rayon::prelude::*;

    fn pooled(class: EnsembleClass, dim: usize, seeds: u64, fraction: f64) -> SpacingSample {
        let samples: Vec<EnsembleSample> = (0..seeds)
            .into_par_iter()
            .map(|s| sample_eigenvalues(class, dim, s).unwrap())
            .collect();
        pooled_bulk_spacings(&samples, fraction).unwrap()
    }

    #[test]
    fn gse_eigenvalues_come_in_pairs() {
        let s = sample_eigenvalues(EnsembleClass::Gse, 200, 1).unwrap();
        assert_eq!(s.eigenvalues.len(), 200);
        let scale = s.eigenvalues[199] - s.eigenvalues[0];
        for p in s.eigenvalues.chunks(2) {
            assert!((p[1] - p[0]).abs() < 1e-9 * scale);
        }
        for w in s.eigenvalues.chunks(2).collect::<Vec<_>>().windows(2) {
            assert!(w[1][0] - w[0][1] > 1e-6);
        }
        let r = remove_kramers(&s.eigenvalues, 1e-8 * scale);
        assert_eq!(r.values.len(), 100);
    }

    #[test]
    fn deterministic_per_seed() {
        for class in [EnsembleClass::Goe, EnsembleClass::Gue, EnsembleClass::Gse] {
            let a = sample_eigenvalues(class, 10, 9).unwrap();
            let b = sample_eigenvalues(class, 10, 9).unwrap();
            let c = sample_eigenvalues(class, 10, 10).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.eigenvalues, c.eigenvalues);
        }
    }

    #[test]
    fn eigenvalue_sum_equals_trace() {
        for class in [EnsembleClass::Goe, EnsembleClass::Gue, EnsembleClass::Gse] {
            let s = sample_eigenvalues(class, 40, 3).unwrap();
            let sum: f64 = s.eigenvalues.iter().sum();
            let scale: f64 = s.eigenvalues.iter().map(|x| x.abs()).sum();
            assert!((sum - s.trace).abs() < 1e-10 * scale, "{class}");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            sample_eigenvalues(EnsembleClass::Gse, 7, 0),
            Err(OracleError::Dimension { .. })
        ));
        assert!(sample_eigenvalues(EnsembleClass::Goe, 1, 0).is_err());
        assert!(matches!(
            sample_eigenvalues(EnsembleClass::Poisson, 10, 0),
            Err(OracleError::UnsupportedClass(_))
        ));
        let s = sample_eigenvalues(EnsembleClass::Goe, 10, 0).unwrap();
        assert!(matches!(
            bulk_levels(&s, 0.0),
            Err(OracleError::Fraction(_))
        ));
    }

    #[test]
    fn semicircle_radius_matches_spectrum_edge() {
        for class in [EnsembleClass::Goe, EnsembleClass::Gue, EnsembleClass::Gse] {
            let s = sample_eigenvalues(class, 400, 2).unwrap();
            let r = s.semicircle_radius();
            let edge = s.eigenvalues[399].max(-s.eigenvalues[0]);
            assert!((edge / r - 1.0).abs() < 0.1, "{class}: {edge} vs {r}");
        }
    }

    #[test]
    fn two_by_two_goe_spacings_follow_the_surmise() {
        let spacings: Vec<f64> = (0..100_000u64)
            .into_par_iter()
            .map(|seed| {
                let s = sample_eigenvalues(EnsembleClass::Goe, 2, seed).unwrap();
                s.eigenvalues[1] - s.eigenvalues[0]
            })
            .collect();
        let sample = SpacingSample::from_spacings(spacings).unwrap();
        assert!(ks_distance(&sample, EnsembleClass::Goe).unwrap() < 0.02);
    }

    #[test]
    fn dim_four_goe_gives_low_confidence_report() {
        let s = sample_eigenvalues(EnsembleClass::Goe, 4, 0).unwrap();
        let sp = bulk_spacings(&s, DEFAULT_CENTRAL_FRACTION).unwrap();
        assert_eq!(sp.len(), 1);
        assert!(classify(&sp, DEFAULT_BINS).unwrap().low_confidence);
    }

    #[test]
    fn pooled_bulk_spacings_identify_their_class() {
        for class in [EnsembleClass::Goe, EnsembleClass::Gue, EnsembleClass::Gse] {
            let report = classify(
                &pooled(class, 200, 50, DEFAULT_CENTRAL_FRACTION),
                DEFAULT_BINS,
            )
            .unwrap();
            assert_eq!(report.best_class, class);
            assert!(report.ks(class) < 0.05, "{class}: {}", report.ks(class));
        }
    }

    #[test]
    fn semicircle_unfolding_squeezes_edge_spacings() {
        // the pooled KS distance cannot resolve this at small dim, the local
        // mean spacing at the spectrum edge can
        let (dim, seeds) = (12, 2000u64);
        let (mut edge, mut mid) = (0.0, 0.0);
        for seed in 0..seeds {
            let x = bulk_levels(
                &sample_eigenvalues(EnsembleClass::Goe, dim, seed).unwrap(),
                1.0,
            )
            .unwrap();
            edge += 0.5 * (x[1] - x[0] + x[dim - 1] - x[dim - 2]);
            mid += x[dim / 2] - x[dim / 2 - 1];
        }
        let (edge, mid) = (edge / seeds as f64, mid / seeds as f64);
        assert!(mid - edge > 0.04, "edge {edge} mid {mid}");
    }
}
