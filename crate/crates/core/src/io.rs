//! JSON documents for meshes, functions, networks and tensor finite elements.
//!
//! Floats are written in the shortest form that parses back to the same
//! bits, so every document round-trips exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::mesh::{ConvexCell, Halfspace, PolytopeMesh};
use crate::net::{Branch, Provenance, ReluNet2, TensorNet, Triplet};
use crate::pwl::{nodal_linear, AffinePiece, FunctionKind, PiecewiseLinear};
use crate::tensorfe::{Tensor, TensorFE, TensorMesh};

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn write_string(path: impl AsRef<Path>, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}

fn to_pretty<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents are always serializable");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- meshes

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum CellDoc {
    Halfspaces { halfspaces: Vec<Halfspace> },
    Vertices { vertices: Vec<Vec<f64>> },
    Indexed { vertex_ids: Vec<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HullDoc {
    halfspaces: Vec<Halfspace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDoc {
    dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<Vec<f64>>>,
    cells: Vec<CellDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain_hull: Option<HullDoc>,
}

fn halfspaces_checked(hs: Vec<Halfspace>) -> Result<Vec<Halfspace>> {
    hs.into_iter().map(|h| Halfspace::new(h.normal, h.offset)).collect()
}

/// Simplicial meshes keep their node numbering; cells given as vertex
/// lists are numbered by first appearance.
pub fn mesh_from_str(text: &str) -> Result<PolytopeMesh> {
    let doc: MeshDoc = serde_json::from_str(text)?;
    let n = doc.dimension;
    let all_simplicial = doc.cells.iter().all(|c| !matches!(c, CellDoc::Halfspaces { .. }));
    let mesh = if all_simplicial && !doc.cells.is_empty() {
        let (nodes, simplices) = match &doc.nodes {
            Some(nodes) => {
                let simplices = doc
                    .cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| match c {
                        CellDoc::Indexed { vertex_ids } => Ok(vertex_ids.clone()),
                        _ => Err(Error::InvalidMesh(format!(
                            "cell {i}: use vertex_ids when nodes are listed"
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                (nodes.clone(), simplices)
            }
            None => {
                let lists = doc
                    .cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| match c {
                        CellDoc::Vertices { vertices } => Ok(vertices.clone()),
                        _ => Err(Error::InvalidMesh(format!("cell {i}: vertex_ids need a nodes list"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                PolytopeMesh::index_nodes(&lists)
            }
        };
        if let Some(p) = nodes.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.len(),
            });
        }
        PolytopeMesh::from_simplices(nodes, simplices)?
    } else {
        let cells = doc
            .cells
            .into_iter()
            .enumerate()
            .map(|(i, c)| match c {
                CellDoc::Halfspaces { halfspaces } => Ok(ConvexCell::new(halfspaces_checked(halfspaces)?)),
                CellDoc::Vertices { vertices } => ConvexCell::from_simplex(&vertices).map_err(|e| e.at_cell(i)),
                CellDoc::Indexed { .. } => Err(Error::InvalidMesh(format!(
                    "cell {i}: vertex_ids cannot be mixed with halfspace cells"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        PolytopeMesh::new(n, cells)?
    };
    if mesh.dimension != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: mesh.dimension,
        });
    }
    match doc.domain_hull {
        Some(h) => {
            let mesh = mesh.with_domain_hull(ConvexCell::new(halfspaces_checked(h.halfspaces)?));
            // re-run the structural checks on the hull
            PolytopeMesh::new(mesh.dimension, vec![mesh.domain_hull.clone().expect("set")])?;
            Ok(mesh)
        }
        None => Ok(mesh),
    }
}

pub fn mesh_to_string(mesh: &PolytopeMesh) -> String {
    let simplicial = mesh.is_simplicial();
    let doc = MeshDoc {
        dimension: mesh.dimension,
        nodes: simplicial.then(|| mesh.nodes.clone()),
        cells: mesh
            .cells
            .iter()
            .map(|c| match (&c.nodes, simplicial) {
                (Some(ids), true) => CellDoc::Indexed {
                    vertex_ids: ids.clone(),
                },
                _ => CellDoc::Halfspaces {
                    halfspaces: c.halfspaces.clone(),
                },
            })
            .collect(),
        domain_hull: mesh.domain_hull.as_ref().map(|h| HullDoc {
            halfspaces: h.halfspaces.clone(),
        }),
    };
    to_pretty(&doc)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolytopeMesh> {
    mesh_from_str(&read_to_string(path)?)
}

// ------------------------------------------------------------- functions

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDoc {
    kind: FunctionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pieces: Option<Vec<AffinePiece>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodal_values: Option<Vec<f64>>,
}

/// Reads a function defined on `mesh`. `general` needs `pieces`;
/// `constant` takes `pieces` or per-cell `values`; `nodal_linear` takes
/// `nodal_values` indexed like the mesh nodes.
pub fn function_from_str(text: &str, mesh: &PolytopeMesh) -> Result<PiecewiseLinear> {
    let doc: FunctionDoc = serde_json::from_str(text)?;
    let f = match (doc.kind, doc.pieces, doc.values, doc.nodal_values) {
        (FunctionKind::NodalLinear, None, None, Some(vals)) => nodal_linear(mesh, &vals)?,
        (FunctionKind::Constant, None, Some(vals), None) => PiecewiseLinear::constant(mesh, &vals)?,
        (kind @ (FunctionKind::General | FunctionKind::Constant), Some(pieces), None, None) => {
            PiecewiseLinear::new(kind, pieces)?
        }
        (kind, ..) => {
            return Err(Error::InvalidFunction(format!(
                "function of kind {kind:?} has the wrong set of value fields"
            )))
        }
    };
    f.check_mesh(mesh)?;
    Ok(f)
}

pub fn function_to_string(f: &PiecewiseLinear) -> String {
    to_pretty(&FunctionDoc {
        kind: f.kind,
        pieces: Some(f.pieces.clone()),
        values: None,
        nodal_values: None,
    })
}

/// Nodal function document (values per mesh node).
pub fn nodal_function_to_string(nodal_values: &[f64]) -> String {
    to_pretty(&FunctionDoc {
        kind: FunctionKind::NodalLinear,
        pieces: None,
        values: None,
        nodal_values: Some(nodal_values.to_vec()),
    })
}

// -------------------------------------------------------------- networks

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    arch: String,
    n: usize,
    h1: usize,
    h2: usize,
    #[serde(rename = "W1")]
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    #[serde(rename = "W2")]
    w2: Vec<Triplet>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_bias: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub fn network_to_string(net: &ReluNet2) -> String {
    to_pretty(&NetworkDoc {
        arch: "fnn2".into(),
        n: net.n,
        h1: net.h1(),
        h2: net.h2(),
        w1: net.w1.clone(),
        b1: net.b1.clone(),
        w2: net.w2.clone(),
        b2: net.b2.clone(),
        w3: net.w3.clone(),
        output_bias: net.output_bias,
        provenance: net.provenance.clone(),
    })
}

pub fn network_from_str(text: &str) -> Result<ReluNet2> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    if doc.arch != "fnn2" {
        return Err(Error::Parse(format!("expected arch \"fnn2\", found \"{}\"", doc.arch)));
    }
    let net = ReluNet2 {
        n: doc.n,
        w1: doc.w1,
        b1: doc.b1,
        w2: doc.w2,
        b2: doc.b2,
        w3: doc.w3,
        output_bias: doc.output_bias,
        provenance: doc.provenance,
    };
    if net.h1() != doc.h1 || net.h2() != doc.h2 {
        return Err(Error::InvalidNetwork(format!(
            "declared sizes ({}, {}) differ from stored layers ({}, {})",
            doc.h1,
            doc.h2,
            net.h1(),
            net.h2()
        )));
    }
    net.validate()?;
    Ok(net)
}

pub fn tnn_to_string(net: &TensorNet) -> String {
    let mut map = serde_json::Map::new();
    map.insert("arch".into(), Value::from("tnn"));
    map.insert("rank".into(), Value::from(net.rank));
    for (k, br) in net.branches.iter().enumerate() {
        map.insert(format!("branch_{}", k + 1), serde_json::to_value(br).expect("serializable"));
    }
    to_pretty(&Value::Object(map))
}

pub fn tnn_from_str(text: &str) -> Result<TensorNet> {
    let value: Value = serde_json::from_str(text)?;
    let map = value
        .as_object()
        .ok_or_else(|| Error::Parse("TNN document must be an object".into()))?;
    match map.get("arch").and_then(Value::as_str) {
        Some("tnn") => {}
        Some(other) => return Err(Error::Parse(format!("expected arch \"tnn\", found \"{other}\""))),
        None => return Err(Error::Parse("missing field `arch`".into())),
    }
    let rank = map
        .get("rank")
        .ok_or_else(|| Error::Parse("missing field `rank`".into()))?
        .as_u64()
        .ok_or_else(|| Error::Parse("field `rank` must be a non-negative integer".into()))? as usize;
    let mut branches = BTreeMap::new();
    for (key, v) in map {
        if key == "arch" || key == "rank" {
            continue;
        }
        let k: usize = key
            .strip_prefix("branch_")
            .and_then(|s| s.parse().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::Parse(format!("unknown field `{key}`")))?;
        let br: Branch = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("{key}: {e}")))?;
        branches.insert(k, br);
    }
    if branches.keys().copied().ne(1..=branches.len()) {
        return Err(Error::Parse("branches must be numbered branch_1 .. branch_n".into()));
    }
    let net = TensorNet {
        rank,
        branches: branches.into_values().collect(),
    };
    net.validate()?;
    Ok(net)
}

// -------------------------------------------------------- tensor elements

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorFeDoc {
    grids: Vec<Vec<f64>>,
    shape: Vec<usize>,
    coefficients: Vec<f64>,
}

pub fn tensor_fe_from_str(text: &str) -> Result<TensorFE> {
    let doc: TensorFeDoc = serde_json::from_str(text)?;
    let mesh = TensorMesh::new(doc.grids)?;
    let coefficients = Tensor::new(doc.shape, doc.coefficients).map_err(|e| Error::InvalidFunction(e.to_string()))?;
    TensorFE::new(mesh, coefficients)
}

pub fn tensor_fe_to_string(u: &TensorFE) -> String {
    to_pretty(&TensorFeDoc {
        grids: u.mesh.grids.clone(),
        shape: u.coefficients.shape.clone(),
        coefficients: u.coefficients.data.clone(),
    })
}

// ---------------------------------------------------------------- points

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PointsDoc {
    Bare(Vec<Vec<f64>>),
    Wrapped { points: Vec<Vec<f64>> },
}

/// Either a bare array of points or `{"points": [...]}`.
pub fn points_from_str(text: &str) -> Result<Vec<Vec<f64>>> {
    let doc: PointsDoc = serde_json::from_str(text)?;
    Ok(match doc {
        PointsDoc::Bare(p) | PointsDoc::Wrapped { points: p } => p,
    })
}
