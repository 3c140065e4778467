use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qgraph::config::RunConfig;
use qgraph::graph_io;
use qgraph::metric_graph::MetricGraph;
use qgraph::rmt_oracle::{self, EnsembleSample, DEFAULT_CENTRAL_FRACTION};
use qgraph::spectral::{build_scattering, SpectralError};
use qgraph::spectral_stats::{classify, EnsembleClass, FitReport, SpacingSample, DEFAULT_BINS};
use qgraph::spectrum::{Spectrum, SpectrumMeta};
use qgraph::validation;

/// Level counts and realisations of the full-scale experiment.
const FULL_LEVELS: usize = 10_000;
const FULL_REALISATIONS: usize = 10;

#[derive(Parser)]
#[command(
    name = "qgraph",
    version,
    about = "Q8-symmetric quantum graphs: spectra and level statistics"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "QGRAPH_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the full symmetric graph or a quotient and write it as JSON.
    Build {
        #[arg(long)]
        config: PathBuf,
        /// Lengths seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Irrep label or "full" (overrides the config).
        #[arg(long)]
        irrep: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the first N levels of a graph file.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        levels: u64,
        /// Start the scan here instead of at the lowest cutoff.
        #[arg(long)]
        kmin: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool spectra into a spacing distribution and fit the reference curves.
    Stats {
        #[arg(long, num_args = 1.., required = true)]
        spectra: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = KramersMode::Auto)]
        remove_kramers: KramersMode,
        #[arg(long, default_value_t = DEFAULT_BINS as u16, value_parser = clap::value_parser!(u16).range(1..))]
        bins: u16,
        /// Central fraction kept from random-matrix spectra.
        #[arg(long, default_value_t = DEFAULT_CENTRAL_FRACTION)]
        central_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that the quotient spectra rebuild the full spectrum.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Upper end of the common k window.
        #[arg(long, default_value_t = 200.0)]
        kmax: f64,
    },
    /// Write eigenvalues of Gaussian random matrices as spectrum files.
    RmtSample {
        #[arg(long)]
        ensemble: Ensemble,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build, solve and fit every realisation of a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// 10 realisations of 10000 levels.
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        realisations: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KramersMode {
    /// On for two-component spectra.
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ensemble {
    Goe,
    Gue,
    Gse,
}

impl From<Ensemble> for EnsembleClass {
    fn from(e: Ensemble) -> Self {
        match e {
            Ensemble::Goe => EnsembleClass::Goe,
            Ensemble::Gue => EnsembleClass::Gue,
            Ensemble::Gse => EnsembleClass::Gse,
        }
    }
}

/// A check that ran but did not hold; exits with the numerical code.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        e.is::<SpectralError>()
            || e.is::<CheckFailed>()
            || matches!(
                e.downcast_ref::<validation::ValidationError>(),
                Some(validation::ValidationError::Spectral(_))
            )
            || matches!(
                e.downcast_ref::<rmt_oracle::OracleError>(),
                Some(rmt_oracle::OracleError::Eigen(_))
            )
    });
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Build {
            config,
            seed,
            irrep,
            out,
        } => cmd_build(&config, seed, irrep, &out),
        Command::Spectrum {
            graph,
            levels,
            kmin,
            out,
        } => cmd_spectrum(&graph, levels as usize, kmin, &out),
        Command::Stats {
            spectra,
            remove_kramers,
            bins,
            central_fraction,
            out,
        } => cmd_stats(
            &spectra,
            remove_kramers,
            bins as usize,
            central_fraction,
            &out,
        ),
        Command::Validate { config, seed, kmax } => cmd_validate(&config, seed, kmax),
        Command::RmtSample {
            ensemble,
            dim,
            samples,
            seed,
            out,
        } => cmd_rmt_sample(ensemble.into(), dim, samples, seed, &out),
        Command::Run {
            config,
            full_scale,
            levels,
            realisations,
            out_dir,
        } => cmd_run(&config, full_scale, levels, realisations, out_dir),
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    // temp files are created owner-only
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path, irrep: Option<String>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(irrep) = irrep {
        cfg.irrep = irrep;
        cfg.check()?;
    }
    Ok(cfg)
}

fn summarise(graph: &MetricGraph) -> String {
    let mut orbits: Vec<(&str, f64, usize)> = Vec::new();
    for b in &graph.bonds {
        match orbits.iter_mut().find(|(label, _, _)| *label == b.orbit) {
            Some(entry) => {
                entry.1 += b.length;
                entry.2 += 1;
            }
            None => orbits.push((&b.orbit, b.length, 1)),
        }
    }
    let mut out = format!(
        "{} vertices, {} bonds, c={}, total length {:.6}\n",
        graph.vertices.len(),
        graph.bonds.len(),
        graph.component_count,
        graph.total_length()
    );
    for (label, total, count) in orbits {
        out.push_str(&format!(
            "  {label:<18} {count:>3} bonds, orbit length {total:.10}\n"
        ));
    }
    out
}

fn cmd_build(config: &Path, seed: Option<u64>, irrep: Option<String>, out: &Path) -> Result<()> {
    let cfg = load_config(config, irrep)?;
    let graph = cfg.build_graph(seed.unwrap_or(cfg.seed))?;
    let json = graph_io::to_json(&graph)?;
    write_atomic(out, &json)?;
    print!("{}", summarise(&graph));
    println!(
        "wrote {} (sha256 {})",
        out.display(),
        graph_io::hash_text(&json)
    );
    Ok(())
}

fn load_graph(path: &Path) -> Result<MetricGraph> {
    graph_io::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn solve(graph: &MetricGraph, levels: usize, kmin: Option<f64>) -> Result<Spectrum> {
    let sys = build_scattering(graph)?;
    let spectrum = match kmin {
        Some(k) => sys.find_levels_from(k, levels)?,
        None => sys.find_levels(levels)?,
    };
    Ok(spectrum)
}

fn cmd_spectrum(graph: &Path, levels: usize, kmin: Option<f64>, out: &Path) -> Result<()> {
    let g = load_graph(graph)?;
    let spectrum = solve(&g, levels, kmin)?;
    write_atomic(out, &spectrum.to_csv())?;
    println!(
        "{} levels in ({:.6}, {:.6}] -> {}",
        spectrum.len(),
        spectrum.k_min,
        spectrum.k_max_scanned,
        out.display()
    );
    Ok(())
}

fn load_spectrum(path: &Path) -> Result<Spectrum> {
    Spectrum::from_csv(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Pools spectra files into one spacing sample.
fn spacing_sample(
    spectra: &[Spectrum],
    mode: KramersMode,
    central_fraction: f64,
) -> Result<SpacingSample> {
    let first = &spectra[0].meta;
    for s in &spectra[1..] {
        if s.meta.irrep != first.irrep
            || s.meta.ensemble != first.ensemble
            || s.meta.components != first.components
        {
            bail!(
                "incompatible spectra: irrep {:?}/{:?}, ensemble {:?}/{:?}, c {}/{}",
                first.irrep,
                s.meta.irrep,
                first.ensemble,
                s.meta.ensemble,
                first.components,
                s.meta.components
            );
        }
    }
    if let Some(name) = &first.ensemble {
        let class: EnsembleClass = name.parse()?;
        let samples: Vec<EnsembleSample> = spectra
            .iter()
            .map(|s| EnsembleSample {
                eigenvalues: s.levels.clone(),
                class,
                dim: s.levels.len(),
                seed: s.meta.seed.unwrap_or(0),
                trace: s.levels.iter().sum(),
            })
            .collect();
        return Ok(rmt_oracle::pooled_bulk_spacings(
            &samples,
            central_fraction,
        )?);
    }
    let remove = match mode {
        KramersMode::Auto => first.components == 2,
        KramersMode::On => true,
        KramersMode::Off => false,
    };
    if spectra.iter().any(|s| s.meta.total_length <= 0.0) {
        bail!("spectrum without a total length cannot be unfolded");
    }
    let sample = SpacingSample::from_spectra(spectra, remove)?;
    if sample.oversized_clusters > 0 {
        eprintln!(
            "warning: {} clusters with more than two degenerate levels",
            sample.oversized_clusters
        );
    }
    Ok(sample)
}

fn print_report(report: &FitReport) {
    for f in &report.fits {
        println!("KS({}) = {:.4}   chi2 = {:.1}", f.class, f.ks, f.chi2);
    }
    println!("best class: {}", report.best_class);
    println!(
        "spacings: {}, degeneracies removed: {}",
        report.sample_size, report.removed_degeneracies
    );
    if report.low_confidence {
        println!("warning: fewer than 500 spacings, low confidence");
    }
}

fn cmd_stats(
    paths: &[PathBuf],
    mode: KramersMode,
    bins: usize,
    central_fraction: f64,
    out: &Path,
) -> Result<()> {
    let spectra = paths
        .iter()
        .map(|p| load_spectrum(p))
        .collect::<Result<Vec<_>>>()?;
    let sample = spacing_sample(&spectra, mode, central_fraction)?;
    let report = classify(&sample, bins)?;
    write_atomic(out, &(report.to_csv() + &provenance(&spectra)))?;
    print_report(&report);
    Ok(())
}

fn cmd_validate(config: &Path, seed: Option<u64>, kmax: f64) -> Result<()> {
    let cfg = load_config(config, None)?;
    let spec = cfg.spec(seed.unwrap_or(cfg.seed))?;
    let report = validation::validate_decomposition(&spec, kmax)?;
    print!("{report}");
    if !report.passed() {
        return Err(CheckFailed("decomposition check failed".into()).into());
    }
    Ok(())
}

fn cmd_rmt_sample(
    class: EnsembleClass,
    dim: usize,
    samples: u64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    use rayon::prelude::*;
    let written: Vec<PathBuf> = (seed..seed + samples)
        .into_par_iter()
        .map(|s| {
            let sample = rmt_oracle::sample_eigenvalues(class, dim, s)?;
            let spectrum = Spectrum {
                k_min: sample.eigenvalues[0],
                k_max_scanned: sample.eigenvalues[dim - 1],
                levels: sample.eigenvalues,
                meta: SpectrumMeta {
                    graph_hash: "none".into(),
                    seed: Some(s),
                    components: 1,
                    total_length: 0.0,
                    irrep: None,
                    ensemble: Some(class.key().into()),
                },
            };
            let path = out.join(format!("{}_{dim}_{s}.csv", class.key()));
            write_atomic(&path, &spectrum.to_csv())?;
            Ok(path)
        })
        .collect::<Result<_>>()?;
    println!(
        "wrote {} {class} spectra of dimension {dim} to {}",
        written.len(),
        out.display()
    );
    Ok(())
}

fn cmd_run(
    config: &Path,
    full_scale: bool,
    levels: Option<usize>,
    realisations: Option<usize>,
    out_dir: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = load_config(config, None)?;
    if full_scale {
        cfg.levels = FULL_LEVELS;
        cfg.realisations = FULL_REALISATIONS;
    }
    if let Some(l) = levels {
        cfg.levels = l;
    }
    if let Some(r) = realisations {
        cfg.realisations = r;
    }
    if let Some(dir) = out_dir {
        cfg.out_dir = dir;
    }
    cfg.check()?;
    use rayon::prelude::*;
    let spectra = cfg
        .realisation_seeds()
        .into_par_iter()
        .map(|seed| realise(&cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let dir = &cfg.out_dir;
    let sample = spacing_sample(&spectra, KramersMode::Auto, DEFAULT_CENTRAL_FRACTION)?;
    let report = classify(&sample, DEFAULT_BINS)?;
    let report_path = dir.join(format!("fitreport_{}.csv", cfg.irrep));
    write_atomic(&report_path, &(report.to_csv() + &provenance(&spectra)))?;
    print_report(&report);
    println!("wrote {}", report_path.display());
    Ok(())
}

/// Graph file and spectrum of one realisation, reusing a finished spectrum of
/// the same graph.
fn realise(cfg: &RunConfig, seed: u64) -> Result<Spectrum> {
    let dir = &cfg.out_dir;
    let graph = cfg.build_graph(seed)?;
    let json = graph_io::to_json(&graph)?;
    let hash = graph_io::hash_text(&json);
    write_atomic(&dir.join(format!("graph_{}_{seed}.json", cfg.irrep)), &json)?;
    let spectrum_path = dir.join(format!("spectrum_{}_{seed}.csv", cfg.irrep));
    if let Ok(mut done) = load_spectrum(&spectrum_path) {
        if done.meta.graph_hash == hash && done.len() >= cfg.levels {
            eprintln!("seed {seed}: reusing {}", spectrum_path.display());
            // keep degenerate partners of the last requested level
            let mut n = cfg.levels;
            while n < done.len() && done.levels[n] == done.levels[n - 1] {
                n += 1;
            }
            done.levels.truncate(n);
            return Ok(done);
        }
    }
    let started = std::time::Instant::now();
    let spectrum = solve(&graph, cfg.levels, None)?;
    eprintln!(
        "seed {seed}: {} levels up to k={:.3} in {:.1}s",
        spectrum.len(),
        spectrum.k_max_scanned,
        started.elapsed().as_secs_f64()
    );
    write_atomic(&spectrum_path, &spectrum.to_csv())?;
    Ok(spectrum)
}

/// Trailer lines naming the seeds and graphs behind a report.
fn provenance(spectra: &[Spectrum]) -> String {
    let seeds: Vec<String> = spectra
        .iter()
        .map(|s| s.meta.seed.map_or_else(|| "none".into(), |v| v.to_string()))
        .collect();
    let hashes: Vec<&str> = spectra.iter().map(|s| s.meta.graph_hash.as_str()).collect();
    format!(
        "# seeds={}\n# graph_hashes={}\n",
        seeds.join(";"),
        hashes.join(";")
    )
}
