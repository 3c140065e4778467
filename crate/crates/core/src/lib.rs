//! Quantum graphs with quaternion symmetry: construction, irrep quotients,
//! spectra and spacing statistics.

pub mod linalg;
pub mod rmt_oracle;
pub mod spectral_stats;
pub mod spectrum;

#[cfg(feature = "graphs")]
pub mod config;
#[cfg(feature = "graphs")]
pub mod graph_io;
#[cfg(feature = "graphs")]
pub mod groups;
#[cfg(feature = "graphs")]
pub mod metric_graph;
#[cfg(feature = "graphs")]
pub mod spectral;
#[cfg(feature = "graphs")]
pub mod symmetry_build;
#[cfg(feature = "graphs")]
pub mod validation;
