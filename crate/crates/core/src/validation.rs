//! Cross-check of the irrep decomposition: the spectra of the five quotient
//! graphs, taken with the right multiplicities, must rebuild the spectrum of
//! the full symmetric graph.

use std::fmt;

use crate::groups::{q8_irreps, Irrep};
use crate::metric_graph::MetricGraph;
use crate::spectral::{build_scattering, SpectralError};
use crate::symmetry_build::{build_symmetric_graph, quotient, BuildError, InflationSpec};

/// Per-level agreement required between merged quotients and the full graph.
pub const LEVEL_TOL: f64 = 1e-8;
const SLOPE_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum ValidationError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSummary {
    pub label: String,
    pub dimension: usize,
    pub components: usize,
    pub levels: usize,
    pub weyl_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub k_max: f64,
    pub full_levels: usize,
    pub full_slope: f64,
    pub quotients: Vec<QuotientSummary>,
    /// Largest distance between paired levels, if the counts matched.
    pub max_deviation: Option<f64>,
    pub merged_ok: bool,
    /// Distinct pseudo-real levels and how many of them have multiplicity 4.
    pub pseudo_levels: usize,
    pub pseudo_fourfold: usize,
    pub weyl_ok: bool,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.merged_ok && self.pseudo_fourfold == self.pseudo_levels && self.weyl_ok
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "window (k_min, {}]", self.k_max)?;
        writeln!(
            f,
            "full graph: {} levels, Weyl slope {:.12}",
            self.full_levels, self.full_slope
        )?;
        for q in &self.quotients {
            writeln!(
                f,
                "  {:<6} dim {} c {}: {} levels, slope {:.12}",
                q.label, q.dimension, q.components, q.levels, q.weyl_slope
            )?;
        }
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        match self.max_deviation {
            Some(d) => writeln!(
                f,
                "[{}] merged quotients = full spectrum (max deviation {d:.3e})",
                mark(self.merged_ok)
            )?,
            None => writeln!(
                f,
                "[{}] merged quotients = full spectrum (level counts differ)",
                mark(self.merged_ok)
            )?,
        }
        writeln!(
            f,
            "[{}] pseudo-real levels with multiplicity 4 in the full graph: {}/{}",
            mark(self.pseudo_fourfold == self.pseudo_levels),
            self.pseudo_fourfold,
            self.pseudo_levels
        )?;
        writeln!(f, "[{}] Weyl slope bookkeeping", mark(self.weyl_ok))?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Builds the full graph and all five quotients of `spec` and compares
/// their spectra on `(k_min, k_max]`.
pub fn validate_decomposition(
    spec: &InflationSpec,
    k_max: f64,
) -> Result<ValidationReport, ValidationError> {
    let full = build_symmetric_graph(spec)?;
    let quotients = q8_irreps()
        .into_iter()
        .map(|irrep| {
            let q = quotient(spec, &irrep)?;
            Ok((irrep, q))
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    validate_graphs(&full, &quotients, k_max)
}

/// Same comparison for explicitly given graphs.
pub fn validate_graphs(
    full: &MetricGraph,
    quotients: &[(Irrep, MetricGraph)],
    k_max: f64,
) -> Result<ValidationReport, ValidationError> {
    let full_sys = build_scattering(full)?;
    let full_levels = full_sys.levels_up_to(k_max)?.levels;
    let mut warnings = Vec::new();

    let mut merged = Vec::new();
    let mut summaries = Vec::new();
    let mut weighted_slope = 0.0;
    let mut pseudo = Vec::new();
    let mut scalar = Vec::new();
    for (irrep, graph) in quotients {
        let sys = build_scattering(graph)?;
        let levels = sys.levels_up_to(k_max)?.levels;
        weighted_slope += irrep.dimension as f64 * sys.weyl_slope();
        for &k in &levels {
            merged.extend(std::iter::repeat_n(k, irrep.dimension));
        }
        if irrep.dimension == 1 {
            scalar.extend(levels.iter().copied());
        } else {
            pseudo.extend(levels.iter().copied());
        }
        summaries.push(QuotientSummary {
            label: irrep.label.clone(),
            dimension: irrep.dimension,
            components: graph.component_count,
            levels: levels.len(),
            weyl_slope: sys.weyl_slope(),
        });
    }
    merged.sort_by(f64::total_cmp);
    scalar.sort_by(f64::total_cmp);

    let (merged_ok, max_deviation) = if merged.len() == full_levels.len() {
        let dev = merged
            .iter()
            .zip(&full_levels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (dev < LEVEL_TOL, Some(dev))
    } else {
        warnings.push(format!(
            "merged quotients give {} levels, full graph {}",
            merged.len(),
            full_levels.len()
        ));
        (false, None)
    };

    // distinct pseudo-real levels: each appears twice in its own quotient
    let mut distinct: Vec<f64> = Vec::new();
    for &k in &pseudo {
        if distinct.last().is_none_or(|&p| k - p > LEVEL_TOL) {
            distinct.push(k);
        }
    }
    let near = |list: &[f64], k: f64| list.iter().filter(|&&x| (x - k).abs() < LEVEL_TOL).count();
    let pseudo_fourfold = distinct
        .iter()
        .filter(|&&k| near(&full_levels, k) == 4 + near(&scalar, k))
        .count();

    let full_slope = full_sys.weyl_slope();
    let weyl_ok = (weighted_slope - full_slope).abs() <= SLOPE_TOL * full_slope;
    if full_levels.is_empty() {
        warnings.push("no levels in the window; checks pass vacuously".into());
    }
    Ok(ValidationReport {
        k_max,
        full_levels: full_levels.len(),
        full_slope,
        quotients: summaries,
        max_deviation,
        merged_ok,
        pseudo_levels: distinct.len(),
        pseudo_fourfold,
        weyl_ok,
        warnings,
    })
}
