//! JSON and DOT forms of an NFG.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Attachment, Edge, LocalFunction, Nfg, Node};
use crate::error::{Error, Result};

/// Version written into every serialized document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKindName {
    Equality,
    Parity,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: u64,
    pub kind: NodeKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    /// Table entries as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachmentDocument {
    pub node: u64,
    pub port: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub id: u64,
    pub attachments: Vec<AttachmentDocument>,
    /// Indices into `attachments` where the variable enters negated.
    #[serde(default)]
    pub negated: Vec<usize>,
}

/// Serialized NFG. Node references in edges use node ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NfgDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub q: u32,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<EdgeDocument>,
}

impl NfgDocument {
    pub fn from_nfg(nfg: &Nfg) -> Self {
        let nodes = nfg
            .nodes()
            .iter()
            .map(|n| {
                let (kind, values) = match &n.function {
                    LocalFunction::Equality { .. } => (NodeKindName::Equality, None),
                    LocalFunction::Parity { .. } => (NodeKindName::Parity, None),
                    LocalFunction::Table { values, .. } => (
                        NodeKindName::Table,
                        Some(values.iter().map(|v| [v.re, v.im]).collect()),
                    ),
                };
                NodeDocument {
                    id: n.id,
                    kind,
                    degree: Some(n.function.degree()),
                    values,
                }
            })
            .collect();
        let edges = nfg
            .edges()
            .iter()
            .map(|e| EdgeDocument {
                id: e.id,
                attachments: e
                    .ends
                    .iter()
                    .map(|a| AttachmentDocument {
                        node: nfg.nodes()[a.node].id,
                        port: a.port,
                    })
                    .collect(),
                negated: (0..e.ends.len()).filter(|&k| e.ends[k].negated).collect(),
            })
            .collect();
        Self {
            schema_version: Some(1),
            q: nfg.q(),
            nodes,
            edges,
        }
    }

    pub fn to_nfg(&self) -> Result<Nfg> {
        let mut position = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if position.insert(n.id, i).is_some() {
                return Err(Error::InvalidNfg(format!("duplicate node id {}", n.id)));
            }
        }
        let mut attached = vec![0usize; self.nodes.len()];
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if let Some(&bad) = e.negated.iter().find(|&&k| k >= e.attachments.len()) {
                return Err(Error::InvalidNfg(format!(
                    "edge {} marks missing attachment {bad}",
                    e.id
                )));
            }
            let ends = e
                .attachments
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let node = *position.get(&a.node).ok_or_else(|| {
                        Error::InvalidNfg(format!("edge {} names unknown node {}", e.id, a.node))
                    })?;
                    attached[node] += 1;
                    Ok(Attachment {
                        node,
                        port: a.port,
                        negated: e.negated.contains(&k),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            edges.push(Edge { id: e.id, ends });
        }
        let nodes = self
            .nodes
            .iter()
            .zip(&attached)
            .map(|(n, &count)| {
                let degree = n.degree.unwrap_or(count);
                if degree != count {
                    return Err(Error::InvalidNfg(format!(
                        "node {} declares degree {degree} but has {count} attachments",
                        n.id
                    )));
                }
                let function = match n.kind {
                    NodeKindName::Equality | NodeKindName::Parity if n.values.is_some() => {
                        return Err(Error::InvalidNfg(format!(
                            "indicator node {} carries values",
                            n.id
                        )))
                    }
                    NodeKindName::Equality => LocalFunction::Equality { degree },
                    NodeKindName::Parity => LocalFunction::Parity { degree },
                    NodeKindName::Table => {
                        let values = n.values.as_ref().ok_or_else(|| {
                            Error::InvalidNfg(format!("table node {} has no values", n.id))
                        })?;
                        LocalFunction::Table {
                            degree,
                            values: values.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
                        }
                    }
                };
                Ok(Node { id: n.id, function })
            })
            .collect::<Result<Vec<_>>>()?;
        Nfg::new(self.q, nodes, edges)
    }
}

impl Nfg {
    pub fn to_json(&self) -> String {
        let doc = NfgDocument {
            schema_version: Some(SCHEMA_VERSION),
            ..NfgDocument::from_nfg(self)
        };
        serde_json::to_string_pretty(&doc).expect("NFG serializes")
    }

    pub fn from_json(text: &str) -> Result<Nfg> {
        let doc: NfgDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidNfg(e.to_string()))?;
        if let Some(v) = doc.schema_version.filter(|&v| v != SCHEMA_VERSION) {
            return Err(Error::InvalidNfg(format!("unsupported schema_version {v}")));
        }
        doc.to_nfg()
    }

    /// Graphviz rendering. Half-edges end in small points; negation marks are
    /// drawn as hollow circles at the marked end.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph nfg {\n  node [fontname=\"Helvetica\"];\n");
        for n in self.nodes() {
            let (label, shape) = match &n.function {
                LocalFunction::Equality { .. } => ("=", "box"),
                LocalFunction::Parity { .. } => ("+", "box"),
                LocalFunction::Table { .. } => ("f", "circle"),
            };
            let _ = writeln!(s, "  n{} [label=\"{label}{}\", shape={shape}];", n.id, n.id);
        }
        for e in self.edges() {
            let name = |a: &Attachment| format!("n{}", self.nodes()[a.node].id);
            let arrow = |a: &Attachment| if a.negated { "odot" } else { "none" };
            match e.ends.as_slice() {
                [a] => {
                    let _ = writeln!(s, "  h{} [shape=point];", e.id);
                    let _ = writeln!(
                        s,
                        "  {} -- h{} [label=\"x{}\", dir=both, arrowtail={}, arrowhead=none];",
                        name(a),
                        e.id,
                        e.id,
                        arrow(a)
                    );
                }
                [a, b] => {
                    let _ = writeln!(
                        s,
                        "  {} -- {} [label=\"x{}\", dir=both, arrowtail={}, arrowhead={}];",
                        name(a),
                        name(b),
                        e.id,
                        arrow(a),
                        arrow(b)
                    );
                }
                _ => {}
            }
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfg::NfgBuilder;

    #[test]
    fn json_roundtrip_is_exact() {
        let mut b = NfgBuilder::new(3);
        let e = b.add_equality();
        let p = b.add_parity();
        let t = b.add_table(vec![
            Complex64::new(0.25, -1.0),
            Complex64::new(3.0, 0.5),
            Complex64::new(-2.0, 0.0),
        ]);
        b.edge(e, false, p, true);
        b.edge(e, true, p, false);
        b.edge(p, false, t, false);
        b.half_edge(e, false);
        let n = b.build().unwrap();
        let back = Nfg::from_json(&n.to_json()).unwrap();
        assert_eq!(back, n);
        assert!(n.to_dot().contains("odot"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"q": 2, "nodes": [], "edges": [], "extra": 1}"#;
        assert!(matches!(Nfg::from_json(text), Err(Error::InvalidNfg(_))));
        let text = r#"{"q": 2, "nodes": [{"id": 0, "kind": "equality", "colour": "red"}], "edges": []}"#;
        assert!(Nfg::from_json(text).is_err());
    }

    #[test]
    fn arbitrary_node_ids_are_remapped() {
        let text = r#"{
            "q": 2,
            "nodes": [
                {"id": 40, "kind": "table", "values": [[1.0, 0.0], [2.0, 0.0]]},
                {"id": 7, "kind": "equality"}
            ],
            "edges": [
                {"id": 3, "attachments": [{"node": 7, "port": 0}, {"node": 40, "port": 0}]},
                {"id": 9, "attachments": [{"node": 7, "port": 1}], "negated": [0]}
            ]
        }"#;
        let n = Nfg::from_json(text).unwrap();
        assert_eq!(n.nodes()[1].function.degree(), 2);
        assert!(n.edges()[1].ends[0].negated);
    }
}
