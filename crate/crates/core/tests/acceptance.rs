//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any of them fails.

use std::time::Instant;

use qgraph::rmt_oracle::{pooled_bulk_spacings, sample_eigenvalues, DEFAULT_CENTRAL_FRACTION};
use qgraph::spectral_stats::{classify, surmise_pdf, EnsembleClass, DEFAULT_BINS};

struct Outcome {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), String>) -> Outcome {
    let started = Instant::now();
    let (ok, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let detail = format!("{detail} [{:.1}s]", started.elapsed().as_secs_f64());
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    Outcome { name, ok, detail }
}

/// Composite Simpson on [a, b] with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

fn surmise_normalisation() -> Result<(bool, String), String> {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for class in EnsembleClass::ALL {
        let norm = simpson(|s| surmise_pdf(class, s), 0.0, 50.0, 200_000);
        let mean = simpson(|s| s * surmise_pdf(class, s), 0.0, 50.0, 200_000);
        worst = worst.max((norm - 1.0).abs()).max((mean - 1.0).abs());
        parts.push(format!(
            "{} norm-1={:.1e} mean-1={:.1e}",
            class.key(),
            norm - 1.0,
            mean - 1.0
        ));
    }
    Ok((worst < 1e-8, parts.join(", ")))
}

fn rmt_oracle() -> Result<(bool, String), String> {
    let mut ok = true;
    let mut parts = Vec::new();
    for class in [EnsembleClass::Goe, EnsembleClass::Gue, EnsembleClass::Gse] {
        let samples = (0..50)
            .map(|seed| sample_eigenvalues(class, 200, seed))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let sample =
            pooled_bulk_spacings(&samples, DEFAULT_CENTRAL_FRACTION).map_err(|e| e.to_string())?;
        let report = classify(&sample, DEFAULT_BINS).map_err(|e| e.to_string())?;
        let ks = report.ks(class);
        ok &= report.best_class == class && ks <= 0.05;
        parts.push(format!("{class}: best {} KS {ks:.4}", report.best_class));
    }
    Ok((ok, parts.join(", ")))
}

#[cfg(feature = "graphs")]
mod graphs {
    use std::f64::consts::PI;
    use std::path::PathBuf;
    use std::time::Instant;

    use qgraph::config::RunConfig;
    use qgraph::groups::q8_pseudo_generators;
    use qgraph::metric_graph::{interval, star, twisted_loop, MetricGraph, VertexCondition};
    use qgraph::spectral::build_scattering;
    use qgraph::spectral_stats::{
        classify, remove_kramers, unfold, EnsembleClass, FitReport, SpacingSample, DEFAULT_BINS,
        KRAMERS_TOL,
    };
    use qgraph::spectrum::Spectrum;
    use qgraph::symmetry_build::{build_symmetric_graph, quotient, InflationSpec, LengthSource};
    use qgraph::validation::validate_decomposition;

    type Check = Result<(bool, String), String>;

    fn err(e: impl std::fmt::Display) -> String {
        e.to_string()
    }

    fn default_config() -> Result<RunConfig, String> {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
        RunConfig::load(&path).map_err(err)
    }

    fn bare() -> InflationSpec {
        InflationSpec::bare_cayley(LengthSource::Explicit(vec![0.51234, 0.98765]))
    }

    fn solve(graph: &MetricGraph, count: usize) -> Result<Spectrum, String> {
        build_scattering(graph)
            .map_err(err)?
            .find_levels(count)
            .map_err(err)
    }

    fn j_loop() -> MetricGraph {
        let [_, j] = q8_pseudo_generators();
        twisted_loop(1.0, j)
    }

    pub fn analytic_spectra() -> Check {
        let started = Instant::now();
        let iv = solve(&interval(1.0, VertexCondition::Neumann), 50)?;
        let iv_err = iv
            .levels
            .iter()
            .enumerate()
            .map(|(n, k)| (k - (n + 1) as f64 * PI).abs())
            .fold(0.0, f64::max);
        let jl = solve(&j_loop(), 40)?;
        let mut jl_err: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for (n, pair) in jl.levels.chunks(2).enumerate() {
            jl_err = jl_err.max((pair[0] - (PI / 2.0 + n as f64 * PI)).abs());
            gap = gap.max(pair[1] - pair[0]);
        }
        let elapsed = started.elapsed().as_secs_f64();
        let ok = iv.len() == 50
            && iv_err < 1e-10
            && jl.len() == 40
            && jl_err < 1e-10
            && gap < 1e-9
            && elapsed < 1.0;
        Ok((
            ok,
            format!("interval max err {iv_err:.1e}, J-loop max err {jl_err:.1e}, pair gap {gap:.1e}, {elapsed:.3}s"),
        ))
    }

    pub fn decomposition() -> Check {
        let started = Instant::now();
        let report = validate_decomposition(&bare(), 200.0).map_err(err)?;
        let elapsed = started.elapsed().as_secs_f64();
        let dev = report.max_deviation.unwrap_or(f64::INFINITY);
        Ok((
            report.passed() && elapsed < 60.0,
            format!(
                "{} full levels, max deviation {dev:.1e}, fourfold {}/{}, {elapsed:.1}s",
                report.full_levels, report.pseudo_fourfold, report.pseudo_levels
            ),
        ))
    }

    /// Pseudo-real spectra of the default config, one per realisation.
    pub fn desk_spectra() -> Result<(RunConfig, Vec<Spectrum>), String> {
        let cfg = default_config()?;
        if cfg.irrep != "pseudo" {
            return Err(format!("default config selects irrep {}", cfg.irrep));
        }
        let spectra = cfg
            .realisation_seeds()
            .into_iter()
            .map(|seed| solve(&cfg.build_graph(seed).map_err(err)?, cfg.levels))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((cfg, spectra))
    }

    fn kramers_ok(s: &Spectrum) -> Result<(bool, f64), String> {
        let mean = 1.0 / (s.meta.components as f64 * s.meta.total_length / PI);
        let n = s.len() - s.len() % 2;
        let mut worst: f64 = 0.0;
        let mut paired = s.len() % 2 == 0;
        for i in (0..n).step_by(2) {
            let gap = s.levels[i + 1] - s.levels[i];
            worst = worst.max(gap / mean);
            paired &= gap < 1e-9 * mean;
            if i + 2 < n {
                paired &= s.levels[i + 2] - s.levels[i + 1] > 1e-9 * mean;
            }
        }
        let unfolded = unfold(&s.levels, 1.0 / mean).map_err(err)?;
        let removed = remove_kramers(&unfolded, KRAMERS_TOL);
        Ok((
            paired && removed.values.len() * 2 == s.len() && removed.removed * 2 == s.len(),
            worst,
        ))
    }

    pub fn kramers(desk: &[Spectrum]) -> Check {
        let bare_pseudo =
            quotient(&bare(), &qgraph::groups::q8_irrep("pseudo").unwrap()).map_err(err)?;
        let mut spectra = vec![solve(&bare_pseudo, 400)?, solve(&j_loop(), 200)?];
        spectra.extend(desk.iter().cloned());
        let mut ok = true;
        let mut worst: f64 = 0.0;
        let mut levels = 0;
        for s in &spectra {
            let (good, w) = kramers_ok(s)?;
            ok &= good;
            worst = worst.max(w);
            levels += s.len();
        }
        Ok((
            ok,
            format!(
                "{} spectra, {levels} levels, largest pair gap {worst:.1e} mean spacings",
                spectra.len()
            ),
        ))
    }

    fn describe(report: &FitReport) -> String {
        format!(
            "n={} KS GOE {:.4} GUE {:.4} GSE {:.4} best {}",
            report.sample_size,
            report.ks(EnsembleClass::Goe),
            report.ks(EnsembleClass::Gue),
            report.ks(EnsembleClass::Gse),
            report.best_class
        )
    }

    pub fn desk_reproduction(desk: &[Spectrum]) -> Check {
        let sample = SpacingSample::from_spectra(desk, true).map_err(err)?;
        let report = classify(&sample, DEFAULT_BINS).map_err(err)?;
        let (goe, gue, gse) = (
            report.ks(EnsembleClass::Goe),
            report.ks(EnsembleClass::Gue),
            report.ks(EnsembleClass::Gse),
        );
        let ok = gse <= 0.05 && gse < goe - 0.05 && gse < gue - 0.03;
        Ok((ok, describe(&report)))
    }

    pub fn one_dim_control() -> Check {
        let cfg = default_config()?;
        let mut spectra = Vec::new();
        for label in ["triv", "sgnI", "sgnJ", "sgnIJ"] {
            let irrep = qgraph::groups::q8_irrep(label).ok_or("missing irrep")?;
            for seed in cfg.realisation_seeds() {
                let g = quotient(&cfg.spec(seed).map_err(err)?, &irrep).map_err(err)?;
                spectra.push(solve(&g, cfg.levels)?);
            }
        }
        let sample = SpacingSample::from_spectra(&spectra, false).map_err(err)?;
        let report = classify(&sample, DEFAULT_BINS).map_err(err)?;
        let ok = report.ks(EnsembleClass::Goe) <= 0.05 && report.best_class == EnsembleClass::Goe;
        Ok((ok, describe(&report)))
    }

    /// Least-squares slope of the staircase through the emitted levels.
    fn fitted_slope(levels: &[f64]) -> f64 {
        let n = levels.len() as f64;
        let mx = levels.iter().sum::<f64>() / n;
        let my = (n + 1.0) / 2.0;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, &k) in levels.iter().enumerate() {
            sxy += (k - mx) * (i as f64 + 1.0 - my);
            sxx += (k - mx) * (k - mx);
        }
        sxy / sxx
    }

    pub fn no_missed_levels() -> Check {
        let cfg = default_config()?;
        let pseudo = qgraph::groups::q8_irrep("pseudo").unwrap();
        let graphs: Vec<(&str, MetricGraph, usize)> = vec![
            ("interval", interval(1.0, VertexCondition::Neumann), 2000),
            ("J-loop", j_loop(), 2000),
            (
                "Dirichlet star",
                star(&[0.3, 0.7, 1.1], VertexCondition::Dirichlet),
                3000,
            ),
            (
                "bare Cayley",
                build_symmetric_graph(&bare()).map_err(err)?,
                3000,
            ),
            (
                "bare pseudo",
                quotient(&bare(), &pseudo).map_err(err)?,
                3000,
            ),
            (
                "default pseudo",
                cfg.build_graph(cfg.seed).map_err(err)?,
                4000,
            ),
        ];
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, g, count) in graphs {
            let sys = build_scattering(&g).map_err(err)?;
            let spectrum = sys.find_levels(count).map_err(err)?;
            let rel = (fitted_slope(&spectrum.levels) - sys.weyl_slope()).abs() / sys.weyl_slope();
            // counting function between levels and at the end of the scan
            let mut probes: Vec<(f64, usize)> = spectrum
                .levels
                .windows(2)
                .enumerate()
                .filter(|(i, w)| i % 97 == 0 && w[1] - w[0] > 1e-6)
                .map(|(i, w)| ((w[0] + w[1]) / 2.0, i + 1))
                .collect();
            probes.push((spectrum.k_max_scanned, spectrum.len()));
            let mut counts_ok = true;
            for (k, expected) in probes {
                counts_ok &= sys.count_levels(k).map_err(err)? == expected;
            }
            ok &= rel < 1e-3 && counts_ok;
            parts.push(format!(
                "{name} slope err {rel:.1e}{}",
                if counts_ok { "" } else { " COUNT MISMATCH" }
            ));
        }
        Ok((ok, parts.join(", ")))
    }
}

fn main() {
    let mut outcomes = Vec::new();
    #[cfg(feature = "graphs")]
    {
        outcomes.push(check("analytic spectra", graphs::analytic_spectra));
        outcomes.push(check("subspectrum decomposition", graphs::decomposition));
        let started = Instant::now();
        let desk = graphs::desk_spectra();
        println!(
            "     (desk-scale spectra computed in {:.1}s)",
            started.elapsed().as_secs_f64()
        );
        let desk_ref = desk
            .as_ref()
            .map(|(_, s)| s.as_slice())
            .map_err(Clone::clone);
        outcomes.push(check("Kramers degeneracy", || {
            graphs::kramers(desk_ref.clone()?)
        }));
        outcomes.push(check("desk-scale GSE reproduction", || {
            graphs::desk_reproduction(desk_ref.clone()?)
        }));
        outcomes.push(check("1D-irrep control", graphs::one_dim_control));
    }
    outcomes.push(check("statistics-pipeline oracle", rmt_oracle));
    #[cfg(feature = "graphs")]
    outcomes.push(check("no missed levels", graphs::no_missed_levels));
    outcomes.push(check("surmise normalisation", surmise_normalisation));

    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.ok).collect();
    println!(
        "{} of {} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if !failed.is_empty() {
        for o in failed {
            eprintln!("failed: {} ({})", o.name, o.detail);
        }
        std::process::exit(1);
    }
}
