//! Experiment configuration: a flat TOML table describing one inflation
//! template, its links, the length seeds and the spectrum request.
//!
//! ```toml
//! template_vertices = 6
//! template_edges = "random:9"      # or an explicit list "0-1 1-2 2-0"
//! template_seed = 17
//! i_links = "0:1 2:3"
//! j_links = "1:4 5:0"
//! seed = 1                         # lengths seed of the first realisation
//! realisations = 3
//! levels = 2000
//! irrep = "pseudo"                 # triv, sgnI, sgnJ, sgnIJ, pseudo or full
//! out_dir = "results/default"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::groups::{self, Irrep};
use crate::metric_graph::MetricGraph;
use crate::symmetry_build::{self, BuildError, InflationSpec, LengthSource, Template};

pub const IRREP_CHOICES: [&str; 6] = ["triv", "sgnI", "sgnJ", "sgnIJ", "pseudo", "full"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("config value '{key}': {message}")]
    Value { key: &'static str, message: String },
    #[error(transparent)]
    Build(#[from] BuildError),
}

fn value_err(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub template_vertices: usize,
    #[serde(default)]
    pub template_edges: String,
    #[serde(default)]
    pub template_seed: u64,
    pub i_links: String,
    pub j_links: String,
    #[serde(default)]
    pub seed: u64,
    /// Explicit per-orbit lengths; overrides the seeded lengths.
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub realisations: usize,
    pub levels: usize,
    pub irrep: String,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn parse_pairs(
    key: &'static str,
    text: &str,
    sep: char,
) -> Result<Vec<(usize, usize)>, ConfigError> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once(sep)
                .ok_or_else(|| value_err(key, format!("'{t}' is not of the form a{sep}b")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| value_err(key, format!("'{t}': {e}")))
            };
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Checks the value constraints that deserialisation cannot express.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.levels < 2 {
            return Err(value_err("levels", "must be at least 2"));
        }
        if self.realisations < 1 {
            return Err(value_err("realisations", "must be at least 1"));
        }
        if !IRREP_CHOICES.contains(&self.irrep.as_str()) {
            return Err(value_err(
                "irrep",
                format!("expected one of {}", IRREP_CHOICES.join(", ")),
            ));
        }
        self.spec(self.seed)?.validate()?;
        Ok(())
    }

    pub fn template(&self) -> Result<Template, ConfigError> {
        let edges = self.template_edges.trim();
        if let Some(count) = edges.strip_prefix("random:") {
            let count = count
                .trim()
                .parse()
                .map_err(|e| value_err("template_edges", format!("random edge count: {e}")))?;
            return Ok(Template::random(
                self.template_vertices,
                count,
                self.template_seed,
            )?);
        }
        Ok(Template {
            vertex_count: self.template_vertices,
            edges: parse_pairs("template_edges", edges, '-')?,
        })
    }

    /// Inflation spec of the realisation whose lengths come from `seed`.
    pub fn spec(&self, seed: u64) -> Result<InflationSpec, ConfigError> {
        Ok(InflationSpec {
            template: self.template()?,
            i_links: parse_pairs("i_links", &self.i_links, ':')?,
            j_links: parse_pairs("j_links", &self.j_links, ':')?,
            lengths: match &self.lengths {
                Some(ls) => LengthSource::Explicit(ls.clone()),
                None => LengthSource::Seeded(seed),
            },
        })
    }

    /// Length seeds of the realisations: `seed, seed + 1, …`.
    pub fn realisation_seeds(&self) -> Vec<u64> {
        (0..self.realisations as u64)
            .map(|r| self.seed.wrapping_add(r))
            .collect()
    }

    /// `None` for the full graph.
    pub fn irrep(&self) -> Option<Irrep> {
        groups::q8_irrep(&self.irrep)
    }

    /// Full symmetric graph or the configured quotient.
    pub fn build_graph(&self, seed: u64) -> Result<MetricGraph, ConfigError> {
        let spec = self.spec(seed)?;
        Ok(match self.irrep() {
            Some(irrep) => symmetry_build::quotient(&spec, &irrep)?,
            None => symmetry_build::build_symmetric_graph(&spec)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BARE: &str = r#"
template_vertices = 1
i_links = "0:0"
j_links = "0:0"
lengths = [0.51234, 0.98765]
levels = 20
irrep = "pseudo"
"#;

    #[test]
    fn bare_cayley_config_builds_two_twisted_loops() {
        let cfg = RunConfig::from_toml(BARE).unwrap();
        let g = cfg.build_graph(cfg.seed).unwrap();
        assert_eq!(g.component_count, 2);
        assert_eq!(symmetry_build::twist_matrices(&g).len(), 2);
        assert_eq!(cfg.realisation_seeds(), vec![0]);
    }

    #[test]
    fn full_graph_has_eight_copies() {
        let text = BARE.replace("\"pseudo\"", "\"full\"");
        let g = RunConfig::from_toml(&text).unwrap().build_graph(0).unwrap();
        assert_eq!(g.vertices.len(), 8);
        assert_eq!(g.component_count, 1);
    }

    #[test]
    fn random_template_is_deterministic() {
        let text = r#"
template_vertices = 6
template_edges = "random:9"
template_seed = 4
i_links = "0:1 2:3"
j_links = "1:4, 5:0"
seed = 10
realisations = 3
levels = 100
irrep = "full"
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.template().unwrap().edges.len(), 9);
        assert_eq!(cfg.realisation_seeds(), vec![10, 11, 12]);
        let a = cfg.build_graph(11).unwrap();
        let b = cfg.build_graph(11).unwrap();
        assert_eq!(a.bonds, b.bonds);
        assert_eq!(a.vertices.len(), 48);
    }

    #[test]
    fn explicit_edge_list() {
        let text = BARE
            .replace(
                "template_vertices = 1",
                "template_vertices = 3\ntemplate_edges = \"0-1 1-2\"",
            )
            .replace("lengths = [0.51234, 0.98765]", "");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.template().unwrap().edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("levels = 20", "levels = 1"),
            ("\"pseudo\"", "\"spin\""),
            ("\"0:0\"", "\"0:3\""),
            ("\"0:0\"", "\"0-0\""),
            ("levels = 20", "levels = 20\nrealisations = 0"),
            ("levels = 20", "levels = 20\ncolour = 3"),
        ] {
            let text = BARE.replacen(from, to, 1);
            assert!(RunConfig::from_toml(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn wrong_length_count_is_rejected() {
        let text = BARE.replace("[0.51234, 0.98765]", "[0.5]");
        assert!(matches!(
            RunConfig::from_toml(&text),
            Err(ConfigError::Build(_))
        ));
    }
}
