//! Sorted level lists and their CSV representation.
//!
//! A spectrum file is a block of `# key=value` header lines followed by one
//! level per line, written with 17 significant digits.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumMeta {
    /// SHA-256 of the source graph file, or `none` for random-matrix samples.
    pub graph_hash: String,
    pub seed: Option<u64>,
    /// Wavefunction component count of the source graph.
    pub components: usize,
    pub total_length: f64,
    /// Irrep label of a quotient graph (`full` for the symmetric graph).
    pub irrep: Option<String>,
    /// Random-matrix ensemble name for oracle samples.
    pub ensemble: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending; degenerate levels are repeated.
    pub levels: Vec<f64>,
    pub k_min: f64,
    pub k_max_scanned: f64,
    pub meta: SpectrumMeta,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header field '{0}'")]
    MissingField(&'static str),
    #[error("levels are not sorted ascending at line {0}")]
    Unsorted(usize),
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Number of levels `<= k`, counting multiplicity.
    pub fn count_below(&self, k: f64) -> usize {
        self.levels.partition_point(|&x| x <= k)
    }

    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let _ = writeln!(out, "# graph_hash={}", m.graph_hash);
        let _ = writeln!(
            out,
            "# seed={}",
            m.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
        );
        let _ = writeln!(out, "# c={}", m.components);
        let _ = writeln!(out, "# total_length={:.16e}", m.total_length);
        let _ = writeln!(out, "# k_max_scanned={:.16e}", self.k_max_scanned);
        let _ = writeln!(out, "# k_min={:.16e}", self.k_min);
        if let Some(irrep) = &m.irrep {
            let _ = writeln!(out, "# irrep={irrep}");
        }
        if let Some(ens) = &m.ensemble {
            let _ = writeln!(out, "# ensemble={ens}");
        }
        for k in &self.levels {
            let _ = writeln!(out, "{k:.16e}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SpectrumFileError> {
        let mut meta = SpectrumMeta::default();
        let (mut hash, mut comps, mut total, mut kmax) = (None, None, None, None);
        let mut k_min = 0.0;
        let mut levels = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() {
                continue;
            }
            let perr = |message: String| SpectrumFileError::Parse { line, message };
            if let Some(rest) = s.strip_prefix('#') {
                let Some((key, value)) = rest.trim().split_once('=') else {
                    continue;
                };
                let value = value.trim();
                let float = |v: &str| v.parse::<f64>().map_err(|e| perr(format!("{key}: {e}")));
                match key.trim() {
                    "graph_hash" => hash = Some(value.to_string()),
                    "seed" => {
                        meta.seed = if value == "none" {
                            None
                        } else {
                            Some(value.parse().map_err(|e| perr(format!("seed: {e}")))?)
                        }
                    }
                    "c" => {
                        comps = Some(
                            value
                                .parse::<usize>()
                                .map_err(|e| perr(format!("c: {e}")))?,
                        )
                    }
                    "total_length" => total = Some(float(value)?),
                    "k_max_scanned" => kmax = Some(float(value)?),
                    "k_min" => k_min = float(value)?,
                    "irrep" => meta.irrep = Some(value.to_string()),
                    "ensemble" => meta.ensemble = Some(value.to_string()),
                    _ => {}
                }
                continue;
            }
            let k: f64 = s.parse().map_err(|e| perr(format!("level: {e}")))?;
            if levels.last().is_some_and(|&prev| k < prev) {
                return Err(SpectrumFileError::Unsorted(line));
            }
            levels.push(k);
        }
        meta.graph_hash = hash.ok_or(SpectrumFileError::MissingField("graph_hash"))?;
        meta.components = comps.ok_or(SpectrumFileError::MissingField("c"))?;
        meta.total_length = total.ok_or(SpectrumFileError::MissingField("total_length"))?;
        Ok(Spectrum {
            levels,
            k_min,
            k_max_scanned: kmax.ok_or(SpectrumFileError::MissingField("k_max_scanned"))?,
            meta,
        })
    }
}
