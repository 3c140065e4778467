//! Unfolding, Kramers-pair removal, nearest-neighbour spacings and
//! goodness-of-fit against the Wigner surmises.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use quadrature::double_exponential;
use thiserror::Error;

use crate::spectrum::Spectrum;

/// Default clustering tolerance for degenerate pairs, in unfolded units.
pub const KRAMERS_TOL: f64 = 1e-6;
pub const DEFAULT_BINS: usize = 40;
pub const HISTOGRAM_RANGE: (f64, f64) = (0.0, 4.0);
/// Below this many spacings a fit report is flagged as low confidence.
pub const MIN_CONFIDENT_SAMPLE: usize = 500;

const QUAD_TOL: f64 = 1e-13;
/// Every surmise has negligible mass beyond this spacing.
const S_CAP: f64 = 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("spacing sample is empty")]
    EmptySample,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnsembleClass {
    Goe,
    Gue,
    Gse,
    Poisson,
}

impl EnsembleClass {
    pub const ALL: [EnsembleClass; 4] = [
        EnsembleClass::Goe,
        EnsembleClass::Gue,
        EnsembleClass::Gse,
        EnsembleClass::Poisson,
    ];

    /// Lower-case key used in file names and CSV comments.
    pub fn key(self) -> &'static str {
        match self {
            EnsembleClass::Goe => "goe",
            EnsembleClass::Gue => "gue",
            EnsembleClass::Gse => "gse",
            EnsembleClass::Poisson => "poisson",
        }
    }
}

impl fmt::Display for EnsembleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleClass::Goe => "GOE",
            EnsembleClass::Gue => "GUE",
            EnsembleClass::Gse => "GSE",
            EnsembleClass::Poisson => "POISSON",
        })
    }
}

impl FromStr for EnsembleClass {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnsembleClass::ALL
            .into_iter()
            .find(|c| c.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| StatsError::InvalidArgument(format!("unknown ensemble '{s}'")))
    }
}

/// Wigner surmise densities (and the exponential for uncorrelated levels).
pub fn surmise_pdf(class: EnsembleClass, s: f64) -> f64 {
    if !(s >= 0.0) {
        return 0.0;
    }
    match class {
        EnsembleClass::Goe => PI / 2.0 * s * (-PI * s * s / 4.0).exp(),
        EnsembleClass::Gue => 32.0 / (PI * PI) * s * s * (-4.0 * s * s / PI).exp(),
        EnsembleClass::Gse => {
            let norm = 2f64.powi(18) / (3f64.powi(6) * PI.powi(3));
            norm * s.powi(4) * (-64.0 * s * s / (9.0 * PI)).exp()
        }
        EnsembleClass::Poisson => (-s).exp(),
    }
}

/// `∫_a^b f` by double-exponential quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    double_exponential::integrate(f, a, b, QUAD_TOL).integral
}

pub fn surmise_cdf(class: EnsembleClass, s: f64) -> f64 {
    integrate(|x| surmise_pdf(class, x), 0.0, s.min(S_CAP)).min(1.0)
}

/// CDF at every point of an ascending list, integrating piece by piece.
fn cdf_sorted(class: EnsembleClass, sorted: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sorted.len());
    let (mut prev, mut acc) = (0.0, 0.0);
    for &s in sorted {
        let s = s.clamp(0.0, S_CAP);
        acc += integrate(|x| surmise_pdf(class, x), prev, s);
        prev = s;
        out.push(acc.min(1.0));
    }
    out
}

/// `x_n = slope · k_n`.
pub fn unfold(levels: &[f64], slope: f64) -> Result<Vec<f64>, StatsError> {
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(StatsError::InvalidArgument(format!(
            "slope must be positive, got {slope}"
        )));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(StatsError::InvalidArgument("levels are not sorted".into()));
    }
    Ok(levels.iter().map(|k| slope * k).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KramersRemoval {
    pub values: Vec<f64>,
    /// Input length minus output length.
    pub removed: usize,
    /// Clusters with more than two members.
    pub oversized_clusters: usize,
}

/// Replaces every maximal run of values closer than `tol` to their
/// neighbour by the run's mean.
pub fn remove_kramers(unfolded: &[f64], tol: f64) -> KramersRemoval {
    let mut values = Vec::with_capacity(unfolded.len() / 2 + 1);
    let mut oversized_clusters = 0;
    let mut start = 0;
    for i in 1..=unfolded.len() {
        if i == unfolded.len() || unfolded[i] - unfolded[i - 1] > tol {
            if i > start {
                let run = &unfolded[start..i];
                values.push(run.iter().sum::<f64>() / run.len() as f64);
                if run.len() > 2 {
                    oversized_clusters += 1;
                }
            }
            start = i;
        }
    }
    KramersRemoval {
        removed: unfolded.len() - values.len(),
        values,
        oversized_clusters,
    }
}

/// Unfolded levels of one realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Realisation {
    pub seed: Option<u64>,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealisationInfo {
    pub seed: Option<u64>,
    pub level_count: usize,
    /// Indices of this realisation's spacings in the pooled list.
    pub spacings: std::ops::Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacingSample {
    /// Mean 1.
    pub spacings: Vec<f64>,
    pub realisations: Vec<RealisationInfo>,
    pub removed_degeneracies: usize,
    pub oversized_clusters: usize,
}

impl SpacingSample {
    /// Pools the nearest-neighbour spacings of several realisations. No
    /// spacing spans two realisations; the pooled list is scaled to mean 1.
    pub fn pool(parts: &[Realisation]) -> Result<Self, StatsError> {
        let mut spacings = Vec::new();
        let mut realisations = Vec::with_capacity(parts.len());
        for p in parts {
            if p.levels.len() < 2 {
                return Err(StatsError::TooFewLevels(p.levels.len()));
            }
            let start = spacings.len();
            spacings.extend(p.levels.windows(2).map(|w| w[1] - w[0]));
            realisations.push(RealisationInfo {
                seed: p.seed,
                level_count: p.levels.len(),
                spacings: start..spacings.len(),
            });
        }
        if spacings.is_empty() {
            return Err(StatsError::EmptySample);
        }
        normalise(&mut spacings)?;
        Ok(SpacingSample {
            spacings,
            realisations,
            removed_degeneracies: 0,
            oversized_clusters: 0,
        })
    }

    /// Unfolds graph spectra with their Weyl slope, optionally drops Kramers
    /// partners, and pools the result.
    pub fn from_spectra(spectra: &[Spectrum], kramers: bool) -> Result<Self, StatsError> {
        let mut parts = Vec::with_capacity(spectra.len());
        let (mut removed, mut oversized) = (0, 0);
        for s in spectra {
            let slope = s.meta.components as f64 * s.meta.total_length / PI;
            let mut levels = unfold(&s.levels, slope)?;
            if kramers {
                let r = remove_kramers(&levels, KRAMERS_TOL);
                removed += r.removed;
                oversized += r.oversized_clusters;
                levels = r.values;
            }
            parts.push(Realisation {
                seed: s.meta.seed,
                levels,
            });
        }
        let mut sample = Self::pool(&parts)?;
        sample.removed_degeneracies = removed;
        sample.oversized_clusters = oversized;
        Ok(sample)
    }

    /// A single realisation made of the given spacings.
    pub fn from_spacings(mut spacings: Vec<f64>) -> Result<Self, StatsError> {
        if spacings.is_empty() {
            return Err(StatsError::EmptySample);
        }
        normalise(&mut spacings)?;
        let n = spacings.len();
        Ok(SpacingSample {
            spacings,
            realisations: vec![RealisationInfo {
                seed: None,
                level_count: n + 1,
                spacings: 0..n,
            }],
            removed_degeneracies: 0,
            oversized_clusters: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.spacings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacings.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.spacings.iter().sum::<f64>() / self.len() as f64
    }
}

fn normalise(spacings: &mut [f64]) -> Result<(), StatsError> {
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(StatsError::InvalidArgument(format!(
            "mean spacing {mean} is not positive"
        )));
    }
    for s in spacings.iter_mut() {
        *s /= mean;
    }
    Ok(())
}

/// Consecutive differences of one unfolded list, scaled to mean 1.
pub fn spacings(unfolded: &[f64]) -> Result<SpacingSample, StatsError> {
    SpacingSample::pool(&[Realisation {
        seed: None,
        levels: unfolded.to_vec(),
    }])
}

/// Kolmogorov-Smirnov distance between the empirical spacing CDF and the
/// surmise CDF.
pub fn ks_distance(sample: &SpacingSample, class: EnsembleClass) -> Result<f64, StatsError> {
    ks_of(&sample.spacings, class)
}

fn ks_of(spacings: &[f64], class: EnsembleClass) -> Result<f64, StatsError> {
    if spacings.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted = spacings.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let cdf = cdf_sorted(class, &sorted);
    let mut d: f64 = 0.0;
    for (i, f) in cdf.iter().enumerate() {
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Normalised by the in-range count so the histogram integrates to 1.
    pub density: Vec<f64>,
    pub in_range: usize,
    pub total: usize,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Self, StatsError> {
        let (lo, hi) = range;
        if bins == 0 || !(hi > lo) {
            return Err(StatsError::InvalidArgument(format!(
                "bad histogram layout {bins} bins on [{lo}, {hi}]"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0usize; bins];
        for &v in values {
            if v >= lo && v <= hi {
                let b = (((v - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        let in_range: usize = counts.iter().sum();
        let density = counts
            .iter()
            .map(|&c| {
                if in_range == 0 {
                    0.0
                } else {
                    c as f64 / (in_range as f64 * width)
                }
            })
            .collect();
        Ok(Histogram {
            edges,
            density,
            in_range,
            total: values.len(),
        })
    }

    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassFit {
    pub class: EnsembleClass,
    pub ks: f64,
    pub chi2: f64,
    /// KS distance of each realisation on its own.
    pub ks_per_realisation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// One entry per class, in `EnsembleClass::ALL` order.
    pub fits: Vec<ClassFit>,
    pub best_class: EnsembleClass,
    pub histogram: Histogram,
    pub sample_size: usize,
    pub low_confidence: bool,
    pub removed_degeneracies: usize,
    pub oversized_clusters: usize,
}

impl FitReport {
    pub fn fit(&self, class: EnsembleClass) -> &ClassFit {
        self.fits
            .iter()
            .find(|f| f.class == class)
            .expect("every class is fitted")
    }

    pub fn ks(&self, class: EnsembleClass) -> f64 {
        self.fit(class).ks
    }

    /// Histogram table plus `# key=value` trailer lines.
    pub fn to_csv(&self) -> String {
        let h = &self.histogram;
        let mut out = String::from("bin_left,bin_right,empirical_density,goe_density,gue_density,gse_density,poisson_density\n");
        for (i, d) in h.density.iter().enumerate() {
            let (l, r) = (h.edges[i], h.edges[i + 1]);
            let mid = 0.5 * (l + r);
            let _ = write!(out, "{l:.6},{r:.6},{d:.10}");
            for class in EnsembleClass::ALL {
                let _ = write!(out, ",{:.10}", surmise_pdf(class, mid));
            }
            out.push('\n');
        }
        for f in &self.fits {
            let _ = writeln!(out, "# ks_{}={:.6}", f.class.key(), f.ks);
        }
        for f in &self.fits {
            let _ = writeln!(out, "# chi2_{}={:.6}", f.class.key(), f.chi2);
        }
        let _ = writeln!(out, "# best_class={}", self.best_class);
        let _ = writeln!(out, "# n_spacings={}", self.sample_size);
        let _ = writeln!(out, "# low_confidence={}", self.low_confidence);
        let _ = writeln!(
            out,
            "# realisations={}",
            self.fit(self.best_class).ks_per_realisation.len()
        );
        let _ = writeln!(out, "# removed_degeneracies={}", self.removed_degeneracies);
        let _ = writeln!(out, "# oversized_clusters={}", self.oversized_clusters);
        for f in &self.fits {
            let list: Vec<String> = f
                .ks_per_realisation
                .iter()
                .map(|k| format!("{k:.6}"))
                .collect();
            let _ = writeln!(
                out,
                "# ks_{}_per_realisation={}",
                f.class.key(),
                list.join(";")
            );
        }
        out
    }
}

/// Fits every class and picks the one with the smallest KS distance.
pub fn classify(sample: &SpacingSample, bins: usize) -> Result<FitReport, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let histogram = Histogram::new(&sample.spacings, bins, HISTOGRAM_RANGE)?;
    let mut fits = Vec::with_capacity(4);
    for class in EnsembleClass::ALL {
        let ks = ks_distance(sample, class)?;
        let ks_per_realisation = sample
            .realisations
            .iter()
            .filter(|r| !r.spacings.is_empty())
            .map(|r| ks_of(&sample.spacings[r.spacings.clone()], class))
            .collect::<Result<_, _>>()?;
        fits.push(ClassFit {
            class,
            ks,
            chi2: chi_squared(&histogram, class),
            ks_per_realisation,
        });
    }
    let best_class = fits
        .iter()
        .min_by(|a, b| a.ks.total_cmp(&b.ks))
        .map(|f| f.class)
        .expect("four classes");
    Ok(FitReport {
        fits,
        best_class,
        histogram,
        sample_size: sample.len(),
        low_confidence: sample.len() < MIN_CONFIDENT_SAMPLE,
        removed_degeneracies: sample.removed_degeneracies,
        oversized_clusters: sample.oversized_clusters,
    })
}

/// Pearson χ² of the histogram counts against the surmise restricted to the
/// histogram range.
fn chi_squared(h: &Histogram, class: EnsembleClass) -> f64 {
    let n = h.in_range as f64;
    let cdf = cdf_sorted(class, &h.edges);
    let mass = cdf[cdf.len() - 1] - cdf[0];
    let mut chi2 = 0.0;
    for i in 0..h.bins() {
        let width = h.edges[i + 1] - h.edges[i];
        let observed = h.density[i] * width * n;
        let expected = n * (cdf[i + 1] - cdf[i]) / mass;
        if expected > 0.0 {
            chi2 += (observed - expected).powi(2) / expected;
        }
    }
    chi2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Gamma};
    use statrs::function::gamma::gamma_lr;

    /// Closed-form CDFs: each surmise is `C s^β e^{-a s²}`, so its CDF is a
    /// regularised incomplete gamma function.
    fn oracle_cdf(class: EnsembleClass, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        match class {
            EnsembleClass::Goe => gamma_lr(1.0, PI * s * s / 4.0),
            EnsembleClass::Gue => gamma_lr(1.5, 4.0 * s * s / PI),
            EnsembleClass::Gse => gamma_lr(2.5, 64.0 * s * s / (9.0 * PI)),
            EnsembleClass::Poisson => 1.0 - (-s).exp(),
        }
    }

    #[test]
    fn surmise_values() {
        assert_eq!(surmise_pdf(EnsembleClass::Gse, 0.0), 0.0);
        assert!((surmise_pdf(EnsembleClass::Goe, 1.0) - 0.716186).abs() < 1e-6);
        assert!(
            (surmise_pdf(EnsembleClass::Goe, 1.0) - PI / 2.0 * (-PI / 4.0).exp()).abs() < 1e-15
        );
        assert_eq!(surmise_pdf(EnsembleClass::Poisson, -1.0), 0.0);
    }

    #[test]
    fn surmises_are_normalised_with_unit_mean() {
        for class in EnsembleClass::ALL {
            let mass = integrate(|s| surmise_pdf(class, s), 0.0, S_CAP);
            let mean = integrate(|s| s * surmise_pdf(class, s), 0.0, S_CAP);
            assert!((mass - 1.0).abs() < 1e-8, "{class}: {mass}");
            assert!((mean - 1.0).abs() < 1e-8, "{class}: {mean}");
        }
    }

    #[test]
    fn cdf_matches_incomplete_gamma() {
        for class in EnsembleClass::ALL {
            for i in 0..=80 {
                let s = i as f64 * 0.05;
                assert!(
                    (surmise_cdf(class, s) - oracle_cdf(class, s)).abs() < 1e-10,
                    "{class} s={s}"
                );
            }
        }
    }

    #[test]
    fn incremental_cdf_matches_direct() {
        let pts: Vec<f64> = (0..200).map(|i| (i as f64 * 0.013).powi(2)).collect();
        for class in EnsembleClass::ALL {
            for (s, f) in pts.iter().zip(cdf_sorted(class, &pts)) {
                assert!((f - oracle_cdf(class, *s)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cdfs_ordered_by_level_repulsion() {
        for i in 1..=100 {
            let s = 0.5 * i as f64 / 100.0;
            let f = EnsembleClass::ALL.map(|c| surmise_cdf(c, s));
            let [goe, gue, gse, poisson] = f;
            assert!(poisson > goe && goe > gue && gue > gse, "s={s}: {f:?}");
        }
    }

    #[test]
    fn class_names_round_trip() {
        for class in EnsembleClass::ALL {
            assert_eq!(class.key().parse::<EnsembleClass>().unwrap(), class);
            assert_eq!(class.to_string().parse::<EnsembleClass>().unwrap(), class);
        }
        assert!("gaussian".parse::<EnsembleClass>().is_err());
    }

    #[test]
    fn unfold_interval_gives_integers() {
        let levels: Vec<f64> = (1..=10).map(|n| n as f64 * PI).collect();
        let x = unfold(&levels, 1.0 / PI).unwrap();
        for (n, v) in x.iter().enumerate() {
            assert!((v - (n + 1) as f64).abs() < 1e-12);
        }
        assert!(unfold(&[2.0, 1.0], 1.0).is_err());
        assert!(unfold(&[1.0], 0.0).is_err());
    }

    #[test]
    fn kramers_pairs_collapse() {
        let r = remove_kramers(&[1.0, 1.0000000001, 2.0, 2.0000000001], KRAMERS_TOL);
        assert_eq!(r.values.len(), 2);
        assert!((r.values[0] - 1.0).abs() < 1e-9 && (r.values[1] - 2.0).abs() < 1e-9);
        assert_eq!(r.removed, 2);
        assert_eq!(r.oversized_clusters, 0);
        let r = remove_kramers(&[1.0, 1.0 + 1e-8, 1.0 + 2e-8, 3.0], KRAMERS_TOL);
        assert_eq!(r.values.len(), 2);
        assert_eq!(r.oversized_clusters, 1);
        assert!(remove_kramers(&[], KRAMERS_TOL).values.is_empty());
    }

    #[test]
    fn duplicated_levels_halve_raw_mean_spacing() {
        let base: Vec<f64> = (0..100)
            .map(|i| i as f64 + 0.3 * ((i * 7 % 5) as f64))
            .collect();
        let doubled: Vec<f64> = base.iter().flat_map(|&x| [x, x]).collect();
        let raw: Vec<f64> = doubled.windows(2).map(|w| w[1] - w[0]).collect();
        let raw_mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let base_mean = (base[99] - base[0]) / 99.0;
        assert!((raw_mean / base_mean - 0.5).abs() < 0.01);
        assert_eq!(remove_kramers(&doubled, KRAMERS_TOL).values, base);
    }

    #[test]
    fn spacing_examples() {
        let s = spacings(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.spacings, vec![1.0, 1.0, 1.0]);
        let s = spacings(&[0.0, 0.5, 2.0]).unwrap();
        assert_eq!(s.spacings, vec![0.5, 1.5]);
        assert_eq!(spacings(&[1.0]), Err(StatsError::TooFewLevels(1)));
    }

    #[test]
    fn pooling_never_bridges_realisations() {
        let parts = [
            Realisation {
                seed: Some(1),
                levels: vec![0.0, 1.0, 2.0],
            },
            Realisation {
                seed: Some(2),
                levels: vec![100.0, 101.0],
            },
        ];
        let s = SpacingSample::pool(&parts).unwrap();
        assert_eq!(s.spacings, vec![1.0; 3]);
        assert_eq!(s.realisations[1].spacings, 2..3);
        assert_eq!(s.realisations[0].seed, Some(1));
    }

    #[test]
    fn spectra_pool_with_kramers_removal() {
        use crate::spectrum::SpectrumMeta;
        let doubled = |seed: u64| Spectrum {
            levels: (1..=20).flat_map(|n| [n as f64, n as f64]).collect(),
            k_min: 0.0,
            k_max_scanned: 20.5,
            meta: SpectrumMeta {
                graph_hash: "x".into(),
                seed: Some(seed),
                components: 2,
                total_length: PI / 2.0,
                irrep: Some("pseudo".into()),
                ensemble: None,
            },
        };
        let spectra = [doubled(1), doubled(2)];
        let s = SpacingSample::from_spectra(&spectra, true).unwrap();
        assert_eq!(s.removed_degeneracies, 40);
        assert_eq!(s.len(), 38);
        assert!(s.spacings.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let kept = SpacingSample::from_spectra(&spectra, false).unwrap();
        assert_eq!(kept.len(), 78);
        assert_eq!(kept.removed_degeneracies, 0);
    }

    #[test]
    fn ks_of_point_mass_against_exponential() {
        let s = SpacingSample::from_spacings(vec![1.0; 50]).unwrap();
        let d = ks_distance(&s, EnsembleClass::Poisson).unwrap();
        assert!((d - (1.0 - (-1f64).exp())).abs() < 1e-12, "{d}");
    }

    #[test]
    fn ks_needs_a_sample() {
        assert_eq!(ks_of(&[], EnsembleClass::Goe), Err(StatsError::EmptySample));
        assert_eq!(
            SpacingSample::from_spacings(vec![]),
            Err(StatsError::EmptySample)
        );
    }

    #[test]
    fn inverse_cdf_gse_sample_is_close() {
        // CDF = P(5/2, a s²), so s = sqrt(G⁻¹(u) / a) with G the unit-rate Gamma(5/2)
        let gamma = Gamma::new(2.5, 1.0).unwrap();
        let a = 64.0 / (9.0 * PI);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| (gamma.inverse_cdf(rng.random::<f64>()) / a).sqrt())
            .collect();
        let s = SpacingSample::from_spacings(draws).unwrap();
        let report = classify(&s, DEFAULT_BINS).unwrap();
        assert!(report.ks(EnsembleClass::Gse) < 0.02);
        assert_eq!(report.best_class, EnsembleClass::Gse);
        assert!(!report.low_confidence);
    }

    #[test]
    fn exponential_sample_is_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..5000)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let report = classify(&SpacingSample::from_spacings(draws).unwrap(), DEFAULT_BINS).unwrap();
        assert_eq!(report.best_class, EnsembleClass::Poisson);
    }

    #[test]
    fn small_samples_are_flagged() {
        let report = classify(
            &SpacingSample::from_spacings(vec![0.5, 1.0, 1.5]).unwrap(),
            10,
        )
        .unwrap();
        assert!(report.low_confidence);
    }

    #[test]
    fn histogram_integrates_to_one() {
        let h = Histogram::new(
            &[0.1, 0.5, 0.5, 3.99, 4.0, 7.0],
            DEFAULT_BINS,
            HISTOGRAM_RANGE,
        )
        .unwrap();
        assert!((h.integral() - 1.0).abs() < 1e-12);
        assert_eq!(h.in_range, 5);
        assert_eq!(h.total, 6);
        assert!(Histogram::new(&[1.0], 0, HISTOGRAM_RANGE).is_err());
    }

    #[test]
    fn report_csv_layout() {
        let s =
            SpacingSample::from_spacings((1..=600).map(|i| (i % 17) as f64 * 0.2 + 0.05).collect())
                .unwrap();
        let report = classify(&s, DEFAULT_BINS).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "bin_left,bin_right,empirical_density,goe_density,gue_density,gse_density,poisson_density"
        );
        let rows: Vec<&str> = csv
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect();
        assert_eq!(rows.len(), DEFAULT_BINS);
        assert!(rows.iter().all(|r| r.split(',').count() == 7));
        for class in EnsembleClass::ALL {
            assert!(csv.contains(&format!("# ks_{}=", class.key())));
        }
        assert!(csv.contains(&format!("# best_class={}", report.best_class)));
    }

    proptest! {
        #[test]
        fn spacings_are_scale_and_shift_invariant(
            mut xs in proptest::collection::vec(-100.0f64..100.0, 3..40),
            a in 0.01f64..100.0,
            b in -1e3f64..1e3,
        ) {
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            prop_assume!(xs.len() >= 2);
            let s1 = spacings(&xs).unwrap();
            let moved: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let s2 = spacings(&moved).unwrap();
            for (p, q) in s1.spacings.iter().zip(&s2.spacings) {
                prop_assert!((p - q).abs() < 1e-8 * (1.0 + p.abs()));
            }
            prop_assert!((s1.mean() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn kramers_removal_is_idempotent(
            mut xs in proptest::collection::vec(0.0f64..50.0, 0..60),
            dup in proptest::collection::vec(any::<bool>(), 60),
        ) {
            xs.sort_by(f64::total_cmp);
            let mut input = Vec::new();
            for (x, d) in xs.iter().zip(&dup) {
                input.push(*x);
                if *d {
                    input.push(x + 1e-9);
                }
            }
            let once = remove_kramers(&input, KRAMERS_TOL);
            let twice = remove_kramers(&once.values, KRAMERS_TOL);
            prop_assert_eq!(&once.values, &twice.values);
            prop_assert_eq!(twice.removed, 0);
        }
    }
}
