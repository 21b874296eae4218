//! Fourier transforms of local functions and dualization of whole NFGs.
//!
//! The transform of a table of degree d is
//! `f^(y) = sum_x f(x) prod_i exp(2 pi i y_i x_i / q)`.
//! Dualizing replaces every node by its transform and puts a degree-2 Parity
//! node in the middle of every edge. Indicator nodes are replaced by the dual
//! indicator without the constant factor; those factors are recorded in a
//! [`ScaleLedger`] so that `Z_dual * ledger = q^|E| * Z` holds exactly.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{check_modulus, orthogonal_complement, root_of_unity, span_rank, ZqVector};
use crate::error::{Error, Result};
use crate::nfg::{Attachment, Edge, LocalFunction, Nfg, Node, NodeKind};

/// Degree of a table of `len` entries over Z_q.
pub fn table_degree(len: usize, q: u32) -> Result<usize> {
    check_modulus(q)?;
    let mut size = 1usize;
    let mut d = 0;
    while size < len {
        size *= q as usize;
        d += 1;
    }
    if size == len {
        Ok(d)
    } else {
        Err(Error::DimensionMismatch(format!(
            "table of length {len} is not a power of {q}"
        )))
    }
}

fn transform(values: &[Complex64], q: u32, sign: i64) -> Result<Vec<Complex64>> {
    let degree = table_degree(values.len(), q)?;
    let qs = q as usize;
    let roots: Vec<Complex64> = (0..qs)
        .map(|m| root_of_unity((sign.rem_euclid(q as i64) as u64) * m as u64, q))
        .collect();
    let mut cur = values.to_vec();
    let mut next = vec![Complex64::new(0.0, 0.0); cur.len()];
    // One axis at a time; axis a has stride q^(degree - 1 - a).
    for axis in 0..degree {
        let stride = qs.pow((degree - 1 - axis) as u32);
        for idx in 0..cur.len() {
            let y = (idx / stride) % qs;
            let base = idx - y * stride;
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..qs {
                acc += cur[base + x * stride] * roots[(x * y) % qs];
            }
            next[idx] = acc;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Forward transform of a dense table (length must be a power of q).
pub fn fourier_table(values: &[Complex64], q: u32) -> Result<Vec<Complex64>> {
    transform(values, q, 1)
}

/// Inverse transform, including the 1/q^d factor.
pub fn inverse_fourier_table(values: &[Complex64], q: u32) -> Result<Vec<Complex64>> {
    let scale = 1.0 / values.len() as f64;
    Ok(transform(values, q, -1)?
        .into_iter()
        .map(|v| v * scale)
        .collect())
}

/// Dual kind and omitted factor of an indicator of the given degree:
/// Equality goes to Parity with factor q, Parity of degree d goes to
/// Equality with factor q^(d-1).
pub fn fourier_indicator_check(kind: NodeKind, degree: usize, q: u32) -> Result<(NodeKind, u64)> {
    check_modulus(q)?;
    match kind {
        NodeKind::Equality => Ok((NodeKind::Parity, q as u64)),
        NodeKind::Parity => Ok((NodeKind::Equality, (q as u64).pow(degree as u32 - 1))),
        NodeKind::Table => Err(Error::AssumptionViolated(
            "indicator dual requested for a table".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub node: u64,
    pub original: String,
    pub replacement: String,
    /// Power of q omitted for this node.
    pub exponent: i64,
}

/// Product of the constants omitted during dualization: q^exponent times a
/// real factor, kept apart so the power of q stays exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleLedger {
    pub q: u32,
    pub exponent: i64,
    pub real_factor: f64,
    pub entries: Vec<LedgerEntry>,
}

impl ScaleLedger {
    pub fn new(q: u32) -> Self {
        Self {
            q,
            exponent: 0,
            real_factor: 1.0,
            entries: Vec::new(),
        }
    }

    pub fn value(&self) -> f64 {
        self.real_factor * (self.q as f64).powi(self.exponent as i32)
    }

    /// Total exponent over entries whose original node kind matches.
    pub fn exponent_for(&self, original: &str) -> i64 {
        self.entries
            .iter()
            .filter(|e| e.original == original)
            .map(|e| e.exponent)
            .sum()
    }

    fn push(&mut self, entry: LedgerEntry) {
        self.exponent += entry.exponent;
        self.entries.push(entry);
    }
}

fn kind_name(f: &LocalFunction) -> &'static str {
    match f {
        LocalFunction::Equality { .. } => "equality",
        LocalFunction::Parity { .. } => "parity",
        LocalFunction::Table { .. } => "table",
    }
}

/// Fourier dual of an NFG with only full edges.
///
/// Node i of the input is node i of the output (same id). One degree-2
/// Parity junction per edge is appended after them. The edge at position k
/// becomes edges `2k` (original first end to junction port 0) and `2k + 1`
/// (junction port 1 to original second end); negation marks stay on the
/// original ends and junctions carry none.
pub fn dualize(nfg: &Nfg) -> Result<(Nfg, ScaleLedger)> {
    let half = nfg.half_edges();
    if !half.is_empty() {
        return Err(Error::HalfEdgesPresent { count: half.len() });
    }
    let q = nfg.q();
    let mut ledger = ScaleLedger::new(q);
    let mut nodes = Vec::with_capacity(nfg.nodes().len() + nfg.edges().len());
    for n in nfg.nodes() {
        let degree = n.function.degree();
        let (function, exponent) = match &n.function {
            LocalFunction::Equality { .. } => (LocalFunction::Parity { degree }, 1),
            LocalFunction::Parity { .. } => (LocalFunction::Equality { degree }, degree as i64 - 1),
            LocalFunction::Table { values, .. } => (
                LocalFunction::Table {
                    degree,
                    values: fourier_table(values, q)?,
                },
                0,
            ),
        };
        ledger.push(LedgerEntry {
            node: n.id,
            original: kind_name(&n.function).into(),
            replacement: kind_name(&function).into(),
            exponent,
        });
        nodes.push(Node { id: n.id, function });
    }
    let first_junction_id = nfg.nodes().iter().map(|n| n.id).max().map_or(0, |m| m + 1);
    let mut edges = Vec::with_capacity(2 * nfg.edges().len());
    for (k, edge) in nfg.edges().iter().enumerate() {
        let junction = nodes.len();
        nodes.push(Node {
            id: first_junction_id + k as u64,
            function: LocalFunction::Parity { degree: 2 },
        });
        let port = |p| Attachment {
            node: junction,
            port: p,
            negated: false,
        };
        edges.push(Edge {
            id: 2 * k as u64,
            ends: vec![edge.ends[0], port(0)],
        });
        edges.push(Edge {
            id: 2 * k as u64 + 1,
            ends: vec![port(1), edge.ends[1]],
        });
    }
    Ok((Nfg::new(q, nodes, edges)?, ledger))
}

/// Fourier side of a subgroup indicator: the transform of the indicator of
/// Y = span(basis) is |Y| times the indicator of the orthogonal complement.
pub fn subgroup_indicator_fourier(
    basis: &[ZqVector],
    len: usize,
    q: u32,
) -> Result<(Vec<ZqVector>, u64)> {
    let k = span_rank(basis, len, q)?;
    let dual = orthogonal_complement(basis, len, q)?;
    Ok((dual, (q as u64).pow(k as u32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfg::table_args;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn ising_kernel_transform() {
        let beta: f64 = 0.7;
        let k = [
            Complex64::new(beta.exp(), 0.0),
            Complex64::new((-beta).exp(), 0.0),
        ];
        let f = fourier_table(&k, 2).unwrap();
        assert!(close(f[0], Complex64::new(2.0 * beta.cosh(), 0.0), 1e-12));
        assert!(close(f[1], Complex64::new(2.0 * beta.sinh(), 0.0), 1e-12));
    }

    #[test]
    fn all_ones_goes_to_delta() {
        let ones = vec![Complex64::new(1.0, 0.0); 5];
        let f = fourier_table(&ones, 5).unwrap();
        assert!(close(f[0], Complex64::new(5.0, 0.0), 1e-12));
        assert!(f[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn parity_pair_transform_is_scaled_equality() {
        for q in [2u32, 3, 5] {
            let table: Vec<Complex64> = (0..q * q)
                .map(|i| {
                    let a = table_args(i as usize, 2, q);
                    Complex64::new(((a[0] as u32 + a[1] as u32) % q == 0) as u8 as f64, 0.0)
                })
                .collect();
            let f = fourier_table(&table, q).unwrap();
            for (i, v) in f.iter().enumerate() {
                let a = table_args(i, 2, q);
                let expected = if a[0] == a[1] { q as f64 } else { 0.0 };
                assert!(close(*v, Complex64::new(expected, 0.0), 1e-10));
            }
            assert_eq!(
                fourier_indicator_check(NodeKind::Parity, 2, q).unwrap(),
                (NodeKind::Equality, q as u64)
            );
        }
    }

    #[test]
    fn indicator_rules() {
        assert_eq!(
            fourier_indicator_check(NodeKind::Equality, 3, 2).unwrap(),
            (NodeKind::Parity, 2)
        );
        assert_eq!(
            fourier_indicator_check(NodeKind::Parity, 3, 2).unwrap(),
            (NodeKind::Equality, 4)
        );
        assert!(fourier_indicator_check(NodeKind::Table, 1, 2).is_err());
    }

    #[test]
    fn subgroup_examples() {
        let (dual, s) = subgroup_indicator_fourier(&[], 1, 2).unwrap();
        assert_eq!(s, 1);
        assert_eq!(dual.len(), 1);
        let (dual, s) = subgroup_indicator_fourier(&[vec![1, 1]], 2, 2).unwrap();
        assert_eq!(s, 2);
        assert_eq!(dual, vec![vec![1, 1]]);
    }

    #[test]
    fn rejects_non_power_lengths() {
        assert!(fourier_table(&[Complex64::new(1.0, 0.0); 6], 4).is_err());
    }
}
