//! Model files.
//!
//! Models are written as TOML:
//!
//! ```toml
//! kind = "binary"            # or "continuous"
//!
//! [[nodes]]
//! name = "X1"                # the first node is the always-1 bias node
//!
//! [[nodes]]
//! name = "X2"
//! link = "identity"          # identity | logistic | table
//! noise = 0.05               # optional uniform noise half-width
//!
//! [[nodes]]
//! name = "Y"                 # the last node is the reward
//! link = "table"
//! table = [0.1, 0.9]         # row bit k = value of the k-th parent in node order
//!
//! [[edges]]
//! parent = "X1"
//! child = "X2"
//! weight = 0.3               # omitted for table nodes
//! ```
//!
//! Nodes must be listed in topological order.

use serde::{Deserialize, Serialize};

use super::link::{LinkFunction, LinkKind};
use super::model::{CausalModel, Node, NoiseSpec, ValueKind};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    #[serde(default = "default_kind")]
    kind: String,
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    edges: Vec<EdgeEntry>,
}

fn default_kind() -> String {
    "binary".into()
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    link: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeEntry {
    parent: String,
    child: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<CausalModel> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let kind = match file.kind.as_str() {
        "binary" => ValueKind::Binary,
        "continuous" => ValueKind::Continuous,
        k => return Err(Error::Parse(format!("unknown model kind `{k}`"))),
    };
    let index = |name: &str| {
        file.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    };
    let mut parents: Vec<Vec<(usize, f64)>> = vec![Vec::new(); file.nodes.len()];
    for e in &file.edges {
        let p = index(&e.parent)?;
        let c = index(&e.child)?;
        parents[c].push((p, e.weight.unwrap_or(0.0)));
    }
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for (i, entry) in file.nodes.iter().enumerate() {
        let mut ps = std::mem::take(&mut parents[i]);
        ps.sort_by_key(|&(p, _)| p);
        let link = match (entry.link.as_deref(), &entry.table) {
            (None | Some("identity"), None) => LinkFunction::identity(),
            (Some("logistic"), None) => LinkFunction::logistic(),
            (Some("table") | None, Some(t)) => LinkFunction::tabulated(t.clone()),
            (Some(l), _) => return Err(Error::Parse(format!("node `{}`: bad link `{l}` or stray table", entry.name))),
        };
        let noise = match entry.noise {
            None | Some(0.0) => NoiseSpec::Zero,
            Some(h) => NoiseSpec::Uniform { half_width: h },
        };
        let (ids, weights) = ps.into_iter().unzip();
        nodes.push(Node::new(entry.name.clone(), ids, weights, link).with_noise(noise));
    }
    CausalModel::new(nodes, kind)
}

/// Reads a model file from disk.
pub fn read_model(path: &std::path::Path) -> Result<CausalModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

/// Serializes a model in the file format accepted by [`parse_model`].
pub fn write_model(model: &CausalModel) -> String {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, node) in model.nodes().iter().enumerate() {
        let (link, table) = match &node.link.kind {
            LinkKind::Identity => (if i == 0 { None } else { Some("identity".to_string()) }, None),
            LinkKind::Logistic => (Some("logistic".to_string()), None),
            LinkKind::Tabulated(t) => (Some("table".to_string()), Some(t.clone())),
        };
        let noise = match node.noise {
            NoiseSpec::Zero => None,
            NoiseSpec::Uniform { half_width } => Some(half_width),
        };
        nodes.push(NodeEntry { name: node.name.clone(), link, table, noise });
        for (&p, &w) in node.parents.iter().zip(&node.weights) {
            let weight = if node.link.is_tabulated() { None } else { Some(w) };
            edges.push(EdgeEntry { parent: model.name(p).to_string(), child: node.name.clone(), weight });
        }
    }
    let kind = match model.kind() {
        ValueKind::Binary => "binary",
        ValueKind::Continuous => "continuous",
    };
    let file = ModelFile { kind: kind.into(), nodes, edges };
    toml::to_string(&file).expect("model files always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::generate::{appendix_e, pe_lower_bound};

    #[test]
    fn round_trips_reference_models() {
        for m in [appendix_e(), pe_lower_bound(4, 0.05, 3).unwrap()] {
            let text = write_model(&m);
            assert_eq!(parse_model(&text).unwrap(), m);
        }
    }

    #[test]
    fn parses_hand_written_file() {
        let text = r#"
            [[nodes]]
            name = "X1"
            [[nodes]]
            name = "A"
            link = "logistic"
            noise = 0.01
            [[nodes]]
            name = "Y"
            link = "table"
            table = [0.2, 0.7]
            [[edges]]
            parent = "X1"
            child = "A"
            weight = 0.5
            [[edges]]
            parent = "A"
            child = "Y"
        "#;
        let m = parse_model(text).unwrap();
        assert_eq!(m.parents(2), &[1]);
        assert_eq!(m.node(1).noise, NoiseSpec::Uniform { half_width: 0.01 });
    }

    #[test]
    fn rejects_unknown_nodes_and_links() {
        assert!(parse_model("[[nodes]]\nname='X1'\n[[nodes]]\nname='Y'\n[[edges]]\nparent='Z'\nchild='Y'\n").is_err());
        assert!(parse_model("[[nodes]]\nname='X1'\n[[nodes]]\nname='Y'\nlink='cubic'\n").is_err());
    }
}
