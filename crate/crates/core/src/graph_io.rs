//! JSON graph files.
//!
//! Bond lengths are written with 17 significant digits so a read-back graph
//! is bit-identical to the one that was written.

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::{c, CMatrix};
use crate::metric_graph::{
    Bond, BondEnd, End, GraphMetadata, MetricGraph, Vertex, VertexCondition, Violation,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error("malformed graph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported graph file version {0}")]
    Version(u32),
    #[error("graph file field error: {0}")]
    Field(String),
    #[error("graph violates invariants: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    version: u32,
    component_count: usize,
    vertices: Vec<VertexRecord>,
    bonds: Vec<BondRecord>,
    metadata: MetadataRecord,
}

#[derive(Serialize, Deserialize)]
struct VertexRecord {
    id: usize,
    condition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    twist_matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    twist_in: Option<EndRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    twist_out: Option<EndRecord>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct EndRecord {
    bond: usize,
    end: EndName,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum EndName {
    Tail,
    Head,
}

#[derive(Serialize, Deserialize)]
struct BondRecord {
    id: usize,
    tail: usize,
    head: usize,
    #[serde(serialize_with = "seventeen_digits")]
    length: f64,
    orbit_label: String,
}

#[derive(Serialize, Deserialize)]
struct MetadataRecord {
    seed: Option<u64>,
    description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    irrep: Option<String>,
}

fn seventeen_digits<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

impl From<BondEnd> for EndRecord {
    fn from(e: BondEnd) -> Self {
        EndRecord {
            bond: e.bond,
            end: match e.end {
                End::Tail => EndName::Tail,
                End::Head => EndName::Head,
            },
        }
    }
}

impl From<EndRecord> for BondEnd {
    fn from(e: EndRecord) -> Self {
        BondEnd {
            bond: e.bond,
            end: match e.end {
                EndName::Tail => End::Tail,
                EndName::Head => End::Head,
            },
        }
    }
}

/// Serializes a graph. The output is deterministic, so equal graphs give
/// byte-identical files.
pub fn to_json(graph: &MetricGraph) -> Result<String, GraphIoError> {
    if let Err(v) = graph.validate() {
        return Err(GraphIoError::Invalid(v));
    }
    let record = GraphRecord {
        version: FORMAT_VERSION,
        component_count: graph.component_count,
        vertices: graph.vertices.iter().map(vertex_record).collect(),
        bonds: graph
            .bonds
            .iter()
            .map(|b| BondRecord {
                id: b.id,
                tail: b.tail,
                head: b.head,
                length: b.length,
                orbit_label: b.orbit.clone(),
            })
            .collect(),
        metadata: MetadataRecord {
            seed: graph.metadata.seed,
            description: graph.metadata.description.clone(),
            irrep: graph.metadata.irrep.clone(),
        },
    };
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    Ok(text)
}

fn vertex_record(v: &Vertex) -> VertexRecord {
    match &v.condition {
        VertexCondition::Twist {
            matrix,
            incoming,
            outgoing,
        } => VertexRecord {
            id: v.id,
            condition: v.condition.name().to_string(),
            twist_matrix: Some(
                (0..matrix.nrows())
                    .map(|i| {
                        (0..matrix.ncols())
                            .map(|j| [matrix[(i, j)].re, matrix[(i, j)].im])
                            .collect()
                    })
                    .collect(),
            ),
            twist_in: Some((*incoming).into()),
            twist_out: Some((*outgoing).into()),
        },
        other => VertexRecord {
            id: v.id,
            condition: other.name().to_string(),
            twist_matrix: None,
            twist_in: None,
            twist_out: None,
        },
    }
}

/// Parses and validates a graph file.
pub fn from_json(text: &str) -> Result<MetricGraph, GraphIoError> {
    let record: GraphRecord = serde_json::from_str(text)?;
    if record.version != FORMAT_VERSION {
        return Err(GraphIoError::Version(record.version));
    }
    let mut vertices = Vec::with_capacity(record.vertices.len());
    for v in record.vertices {
        let condition = match v.condition.as_str() {
            "neumann" => VertexCondition::Neumann,
            "dirichlet" => VertexCondition::Dirichlet,
            "twist" => {
                let rows = v.twist_matrix.ok_or_else(|| {
                    GraphIoError::Field(format!("vertex {}: twist without matrix", v.id))
                })?;
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(GraphIoError::Field(format!(
                        "vertex {}: twist matrix not square",
                        v.id
                    )));
                }
                let matrix = CMatrix::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1]));
                let (Some(incoming), Some(outgoing)) = (v.twist_in, v.twist_out) else {
                    return Err(GraphIoError::Field(format!(
                        "vertex {}: twist without bond ends",
                        v.id
                    )));
                };
                VertexCondition::Twist {
                    matrix,
                    incoming: incoming.into(),
                    outgoing: outgoing.into(),
                }
            }
            other => {
                return Err(GraphIoError::Field(format!(
                    "vertex {}: unknown condition '{other}'",
                    v.id
                )));
            }
        };
        vertices.push(Vertex {
            id: v.id,
            condition,
        });
    }
    let graph = MetricGraph {
        vertices,
        bonds: record
            .bonds
            .into_iter()
            .map(|b| Bond {
                id: b.id,
                tail: b.tail,
                head: b.head,
                length: b.length,
                orbit: b.orbit_label,
            })
            .collect(),
        component_count: record.component_count,
        metadata: GraphMetadata {
            seed: record.metadata.seed,
            description: record.metadata.description,
            irrep: record.metadata.irrep,
        },
    };
    graph.validate().map_err(GraphIoError::Invalid)?;
    Ok(graph)
}

/// SHA-256 (hex) of the serialized graph.
pub fn content_hash(graph: &MetricGraph) -> Result<String, GraphIoError> {
    Ok(hash_text(&to_json(graph)?))
}

pub fn hash_text(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
