//! Normal factor graphs over Z_q.
//!
//! Nodes are local functions, edges carry variables. An edge with two
//! attachments is a full edge (summed over); an edge with one attachment is a
//! half-edge (an argument of the exterior function). Negation marks live on
//! individual attachments: the node at a marked attachment sees `-x`.
//!
//! Dense tables are indexed in mixed radix with port 0 as the most
//! significant digit.

mod contract;
mod eval;
mod json;
pub mod random;

use std::collections::HashSet;

use num_complex::Complex64;

use crate::algebra::{add_mod, check_modulus, neg_mod};
use crate::error::{Error, Result};

pub use contract::{min_degree_order, partition_sum_contracted, ContractOptions};
pub use eval::{
    exterior_function, partition_sum_brute, projected_valid_configs, support_constant,
    valid_config_counts, ConfigTable,
};
pub use json::{AttachmentDocument, EdgeDocument, NfgDocument, NodeDocument, NodeKindName, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Equality,
    Parity,
    Table,
}

/// A local function attached to a node.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalFunction {
    /// 1 iff all arguments are equal.
    Equality { degree: usize },
    /// 1 iff the arguments sum to zero mod q.
    Parity { degree: usize },
    /// Arbitrary complex values, `q^degree` entries.
    Table {
        degree: usize,
        values: Vec<Complex64>,
    },
}

impl LocalFunction {
    pub fn degree(&self) -> usize {
        match self {
            LocalFunction::Equality { degree }
            | LocalFunction::Parity { degree }
            | LocalFunction::Table { degree, .. } => *degree,
        }
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            LocalFunction::Equality { .. } => NodeKind::Equality,
            LocalFunction::Parity { .. } => NodeKind::Parity,
            LocalFunction::Table { .. } => NodeKind::Table,
        }
    }

    pub fn is_indicator(&self) -> bool {
        !matches!(self, LocalFunction::Table { .. })
    }

    /// Evaluates at the values seen by the node (negation already applied).
    pub fn eval(&self, args: &[u8], q: u32) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            LocalFunction::Equality { .. } => {
                if args.windows(2).all(|w| w[0] == w[1]) {
                    one
                } else {
                    zero
                }
            }
            LocalFunction::Parity { .. } => {
                if args.iter().fold(0u8, |s, &x| add_mod(s, x, q)) == 0 {
                    one
                } else {
                    zero
                }
            }
            LocalFunction::Table { values, .. } => values[table_index(args, q)],
        }
    }
}

/// Mixed-radix index of an argument tuple, first argument most significant.
#[inline]
pub fn table_index(args: &[u8], q: u32) -> usize {
    args.iter().fold(0usize, |acc, &x| acc * q as usize + x as usize)
}

/// Inverse of [`table_index`].
pub fn table_args(mut index: usize, degree: usize, q: u32) -> Vec<u8> {
    let mut args = vec![0u8; degree];
    for slot in args.iter_mut().rev() {
        *slot = (index % q as usize) as u8;
        index /= q as usize;
    }
    args
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Attachment {
    pub node: usize,
    pub port: usize,
    pub negated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: u64,
    /// One attachment for a half-edge, two for a full edge.
    pub ends: Vec<Attachment>,
}

impl Edge {
    pub fn is_half(&self) -> bool {
        self.ends.len() == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: u64,
    pub function: LocalFunction,
}

/// A validated normal factor graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Nfg {
    q: u32,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    /// `ports[node][port] = (edge, end)`
    ports: Vec<Vec<(usize, usize)>>,
}

impl Nfg {
    pub fn new(q: u32, nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        check_modulus(q)?;
        let mut ids = HashSet::new();
        for n in &nodes {
            if !ids.insert(n.id) {
                return Err(Error::InvalidNfg(format!("duplicate node id {}", n.id)));
            }
            match &n.function {
                LocalFunction::Equality { degree } | LocalFunction::Parity { degree } => {
                    if *degree == 0 {
                        return Err(Error::InvalidNfg(format!(
                            "indicator node {} has degree 0",
                            n.id
                        )));
                    }
                }
                LocalFunction::Table { degree, values } => {
                    let expected = (q as usize).checked_pow(*degree as u32);
                    if expected != Some(values.len()) {
                        return Err(Error::InvalidNfg(format!(
                            "table node {} has {} values, expected {q}^{degree}",
                            n.id,
                            values.len()
                        )));
                    }
                }
            }
        }
        let mut ids = HashSet::new();
        let mut ports: Vec<Vec<Option<(usize, usize)>>> =
            nodes.iter().map(|n| vec![None; n.function.degree()]).collect();
        for (e, edge) in edges.iter().enumerate() {
            if !ids.insert(edge.id) {
                return Err(Error::InvalidNfg(format!("duplicate edge id {}", edge.id)));
            }
            if edge.ends.is_empty() || edge.ends.len() > 2 {
                return Err(Error::InvalidNfg(format!(
                    "edge {} has {} attachments",
                    edge.id,
                    edge.ends.len()
                )));
            }
            for (k, a) in edge.ends.iter().enumerate() {
                let slot = ports
                    .get_mut(a.node)
                    .and_then(|p| p.get_mut(a.port))
                    .ok_or_else(|| {
                        Error::InvalidNfg(format!(
                            "edge {} attaches to missing port {} of node {}",
                            edge.id, a.port, a.node
                        ))
                    })?;
                if slot.is_some() {
                    return Err(Error::InvalidNfg(format!(
                        "port {} of node {} is attached twice",
                        a.port, a.node
                    )));
                }
                *slot = Some((e, k));
            }
        }
        let ports = ports
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                p.into_iter()
                    .enumerate()
                    .map(|(port, s)| {
                        s.ok_or_else(|| {
                            Error::InvalidNfg(format!(
                                "port {port} of node {} is not attached",
                                nodes[i].id
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            q,
            nodes,
            edges,
            ports,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The edge and attachment index behind a node port.
    pub fn port(&self, node: usize, port: usize) -> (usize, usize) {
        self.ports[node][port]
    }

    pub fn node_ports(&self, node: usize) -> &[(usize, usize)] {
        &self.ports[node]
    }

    /// Positions of half-edges, in edge order.
    pub fn half_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].is_half())
            .collect()
    }

    pub fn full_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| !self.edges[e].is_half())
            .collect()
    }

    pub fn edge_position(&self, id: u64) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Every local function is an indicator or has degree one, and half-edges
    /// appear only when all local functions are indicators.
    pub fn has_local_indicators(&self) -> bool {
        let all_indicator = self.nodes.iter().all(|n| n.function.is_indicator());
        let shape_ok = self
            .nodes
            .iter()
            .all(|n| n.function.is_indicator() || n.function.degree() == 1);
        shape_ok && (all_indicator || self.half_edges().is_empty())
    }

    /// Value seen by `node` at `port` under a full edge assignment.
    #[inline]
    pub(crate) fn seen(&self, node: usize, port: usize, assignment: &[u8]) -> u8 {
        let (e, k) = self.ports[node][port];
        let x = assignment[e];
        if self.edges[e].ends[k].negated {
            neg_mod(x, self.q)
        } else {
            x
        }
    }

    /// Returns a copy with the negation mark at `(edge, end)` toggled.
    pub fn with_negation_toggled(&self, edge: usize, end: usize) -> Result<Nfg> {
        let mut edges = self.edges.clone();
        let a = edges
            .get_mut(edge)
            .and_then(|e| e.ends.get_mut(end))
            .ok_or_else(|| Error::InvalidNfg(format!("no attachment {end} on edge {edge}")))?;
        a.negated = !a.negated;
        Nfg::new(self.q, self.nodes.clone(), edges)
    }

    /// Cuts a full edge in two and joins the halves through a new degree-2
    /// Equality node. The exterior function is unchanged.
    pub fn split_edge(&self, edge: usize) -> Result<Nfg> {
        let old = self
            .edges
            .get(edge)
            .ok_or_else(|| Error::InvalidNfg(format!("no edge {edge}")))?;
        if old.is_half() {
            return Err(Error::InvalidNfg(format!("edge {} is a half-edge", old.id)));
        }
        let mut nodes = self.nodes.clone();
        let mut edges = self.edges.clone();
        let new_node = nodes.len();
        let node_id = nodes.iter().map(|n| n.id).max().map_or(0, |m| m + 1);
        let edge_id = edges.iter().map(|e| e.id).max().map_or(0, |m| m + 1);
        nodes.push(Node {
            id: node_id,
            function: LocalFunction::Equality { degree: 2 },
        });
        let second = old.ends[1];
        edges[edge].ends[1] = Attachment {
            node: new_node,
            port: 0,
            negated: false,
        };
        edges.push(Edge {
            id: edge_id,
            ends: vec![
                Attachment {
                    node: new_node,
                    port: 1,
                    negated: false,
                },
                second,
            ],
        });
        Nfg::new(self.q, nodes, edges)
    }

    /// Ends every half-edge in a degree-one Equality node (the all-one
    /// function), so the partition sum counts over the former exterior too.
    pub fn close_half_edges(&self) -> Result<Nfg> {
        let mut nodes = self.nodes.clone();
        let mut edges = self.edges.clone();
        let first_id = nodes.iter().map(|n| n.id).max().map_or(0, |m| m + 1);
        for (k, e) in self.half_edges().into_iter().enumerate() {
            edges[e].ends.push(Attachment {
                node: nodes.len(),
                port: 0,
                negated: false,
            });
            nodes.push(Node {
                id: first_id + k as u64,
                function: LocalFunction::Equality { degree: 1 },
            });
        }
        Nfg::new(self.q, nodes, edges)
    }

    /// Removes degree-one indicator nodes together with their edges, shrinking
    /// the ports of whatever they were attached to. Used to compare operator
    /// NFGs up to their terminations.
    pub fn strip_terminations(&self) -> Result<Nfg> {
        let is_term = |i: usize| {
            let f = &self.nodes[i].function;
            f.is_indicator() && f.degree() == 1
        };
        let dropped_edges: HashSet<usize> = (0..self.nodes.len())
            .filter(|&i| is_term(i))
            .map(|i| self.ports[i][0].0)
            .collect();
        let mut new_index = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        let mut port_shift: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.nodes.len() {
            if is_term(i) {
                continue;
            }
            let mut shift = Vec::with_capacity(self.ports[i].len());
            let mut next = 0;
            for &(e, _) in &self.ports[i] {
                shift.push(next);
                if !dropped_edges.contains(&e) {
                    next += 1;
                }
            }
            let function = match &self.nodes[i].function {
                LocalFunction::Equality { .. } => LocalFunction::Equality { degree: next },
                LocalFunction::Parity { .. } => LocalFunction::Parity { degree: next },
                LocalFunction::Table { .. } if next != self.ports[i].len() => {
                    return Err(Error::InvalidNfg(
                        "cannot strip a termination attached to a table".into(),
                    ))
                }
                f => f.clone(),
            };
            new_index[i] = nodes.len();
            nodes.push(Node {
                id: self.nodes[i].id,
                function,
            });
            port_shift.push(shift);
        }
        let mut edges = Vec::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if dropped_edges.contains(&e) {
                continue;
            }
            let ends = edge
                .ends
                .iter()
                .map(|a| {
                    let ni = new_index[a.node];
                    Attachment {
                        node: ni,
                        port: port_shift[ni][a.port],
                        negated: a.negated,
                    }
                })
                .collect();
            edges.push(Edge { id: edge.id, ends });
        }
        Nfg::new(self.q, nodes, edges)
    }
}

/// Product of all local functions at a full assignment indexed by edge position.
pub fn global_function_value(nfg: &Nfg, assignment: &[u8]) -> Result<Complex64> {
    if assignment.len() != nfg.edges.len() {
        return Err(Error::IncompleteAssignment {
            expected: nfg.edges.len(),
            got: assignment.len(),
        });
    }
    if let Some(&bad) = assignment.iter().find(|&&x| x as u32 >= nfg.q) {
        return Err(Error::InvalidNfg(format!(
            "assignment value {bad} is not reduced mod {}",
            nfg.q
        )));
    }
    let mut prod = Complex64::new(1.0, 0.0);
    let mut args = Vec::new();
    for (i, node) in nfg.nodes.iter().enumerate() {
        args.clear();
        args.extend((0..node.function.degree()).map(|p| nfg.seen(i, p, assignment)));
        prod *= node.function.eval(&args, nfg.q);
    }
    Ok(prod)
}

/// Removes every degree-one table, turning its edge into a half-edge that
/// keeps its id. Indicator nodes are untouched.
pub fn support_nfg(nfg: &Nfg) -> Result<Nfg> {
    if !nfg.has_local_indicators() {
        return Err(Error::AssumptionViolated(
            "support NFG needs indicator or degree-one local functions".into(),
        ));
    }
    let keep: Vec<bool> = nfg.nodes.iter().map(|n| n.function.is_indicator()).collect();
    let mut new_index = vec![usize::MAX; nfg.nodes.len()];
    let mut nodes = Vec::new();
    for (i, n) in nfg.nodes.iter().enumerate() {
        if keep[i] {
            new_index[i] = nodes.len();
            nodes.push(n.clone());
        }
    }
    let mut edges = Vec::with_capacity(nfg.edges.len());
    for edge in &nfg.edges {
        let ends: Vec<Attachment> = edge
            .ends
            .iter()
            .filter(|a| keep[a.node])
            .map(|a| Attachment {
                node: new_index[a.node],
                ..*a
            })
            .collect();
        if ends.is_empty() {
            return Err(Error::AssumptionViolated(format!(
                "edge {} joins two interaction functions",
                edge.id
            )));
        }
        edges.push(Edge { id: edge.id, ends });
    }
    Nfg::new(nfg.q, nodes, edges)
}

#[derive(Clone, Debug)]
enum Pending {
    Equality,
    Parity,
    Table(Vec<Complex64>),
}

/// Incremental construction with automatic port numbering.
///
/// Node and edge ids equal their positions. Degrees of indicator nodes are
/// the number of ports used; table nodes must end with `q^degree` values.
#[derive(Clone, Debug)]
pub struct NfgBuilder {
    q: u32,
    nodes: Vec<Pending>,
    next_port: Vec<usize>,
    edges: Vec<Edge>,
}

impl NfgBuilder {
    pub fn new(q: u32) -> Self {
        Self {
            q,
            nodes: Vec::new(),
            next_port: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn push(&mut self, p: Pending) -> usize {
        self.nodes.push(p);
        self.next_port.push(0);
        self.nodes.len() - 1
    }

    pub fn add_equality(&mut self) -> usize {
        self.push(Pending::Equality)
    }

    pub fn add_parity(&mut self) -> usize {
        self.push(Pending::Parity)
    }

    pub fn add_table(&mut self, values: Vec<Complex64>) -> usize {
        self.push(Pending::Table(values))
    }

    /// Real-valued convenience for [`NfgBuilder::add_table`].
    pub fn add_real_table(&mut self, values: &[f64]) -> usize {
        self.add_table(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    fn attach(&mut self, node: usize, negated: bool) -> Attachment {
        let port = self.next_port[node];
        self.next_port[node] += 1;
        Attachment {
            node,
            port,
            negated,
        }
    }

    /// Adds a full edge; the flags mark negation at each end.
    pub fn edge(&mut self, a: usize, a_neg: bool, b: usize, b_neg: bool) -> usize {
        let ea = self.attach(a, a_neg);
        let eb = self.attach(b, b_neg);
        let id = self.edges.len();
        self.edges.push(Edge {
            id: id as u64,
            ends: vec![ea, eb],
        });
        id
    }

    pub fn half_edge(&mut self, node: usize, negated: bool) -> usize {
        let a = self.attach(node, negated);
        let id = self.edges.len();
        self.edges.push(Edge {
            id: id as u64,
            ends: vec![a],
        });
        id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn build(self) -> Result<Nfg> {
        let nodes = self
            .nodes
            .into_iter()
            .zip(&self.next_port)
            .enumerate()
            .map(|(i, (p, &degree))| Node {
                id: i as u64,
                function: match p {
                    Pending::Equality => LocalFunction::Equality { degree },
                    Pending::Parity => LocalFunction::Parity { degree },
                    Pending::Table(values) => LocalFunction::Table { degree, values },
                },
            })
            .collect();
        Nfg::new(self.q, nodes, self.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn equality_pair_value() {
        let mut b = NfgBuilder::new(3);
        let e = b.add_equality();
        b.half_edge(e, false);
        b.half_edge(e, false);
        let n = b.build().unwrap();
        assert_eq!(global_function_value(&n, &[2, 2]).unwrap(), c(1.0));
        assert_eq!(global_function_value(&n, &[2, 1]).unwrap(), c(0.0));
        assert_eq!(
            global_function_value(&n, &[2]),
            Err(Error::IncompleteAssignment {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn negation_applies_per_attachment() {
        // f(-x, y) with f a table; x = 1, y = 0 over Z_3 reads f(2, 0).
        let mut b = NfgBuilder::new(3);
        let values: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let t = b.add_real_table(&values);
        b.half_edge(t, true);
        b.half_edge(t, false);
        let n = b.build().unwrap();
        assert_eq!(global_function_value(&n, &[1, 0]).unwrap(), c(6.0));
    }

    #[test]
    fn validation_catches_bad_graphs() {
        let nodes = vec![Node {
            id: 0,
            function: LocalFunction::Equality { degree: 2 },
        }];
        let edges = vec![Edge {
            id: 0,
            ends: vec![Attachment {
                node: 0,
                port: 0,
                negated: false,
            }],
        }];
        assert!(matches!(
            Nfg::new(2, nodes.clone(), edges),
            Err(Error::InvalidNfg(_))
        ));
        let table = vec![Node {
            id: 0,
            function: LocalFunction::Table {
                degree: 1,
                values: vec![c(1.0)],
            },
        }];
        assert!(Nfg::new(2, table, vec![]).is_err());
    }

    #[test]
    fn support_cuts_interactions() {
        let mut b = NfgBuilder::new(2);
        let eq = b.add_equality();
        let t1 = b.add_real_table(&[1.0, 2.0]);
        let t2 = b.add_real_table(&[3.0, 4.0]);
        b.edge(eq, false, t1, false);
        b.edge(eq, false, t2, false);
        let n = b.build().unwrap();
        let s = support_nfg(&n).unwrap();
        assert_eq!(s.nodes().len(), 1);
        assert_eq!(s.half_edges(), vec![0, 1]);
        assert_eq!(s.edges()[1].id, 1);
    }

    #[test]
    fn support_rejects_higher_degree_tables() {
        let mut b = NfgBuilder::new(2);
        let t = b.add_real_table(&[1.0; 4]);
        let u = b.add_real_table(&[1.0; 4]);
        b.edge(t, false, u, false);
        b.edge(t, false, u, false);
        let n = b.build().unwrap();
        assert!(matches!(support_nfg(&n), Err(Error::AssumptionViolated(_))));
    }

    #[test]
    fn table_index_roundtrip() {
        for i in 0..27 {
            assert_eq!(table_index(&table_args(i, 3, 3), 3), i);
        }
        assert_eq!(table_args(5, 3, 2), vec![1, 0, 1]);
    }
}
