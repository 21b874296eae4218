//! Operator NFGs of incidence-style matrices over Z_q.
//!
//! For a matrix m with entries in {0, 1, -1}, the input/output NFG has one
//! Equality node per column that fans out the input variable, and one Parity
//! node per row that adds up the incoming contributions and subtracts its
//! output. A -1 entry is a negation mark on the Parity side. Edges come in
//! the order: inputs (one per column), internal edges sorted by (column,
//! row), outputs (one per row).

use num_complex::Complex64;

use crate::algebra::ZqMatrix;
use crate::error::{Error, Result};
use crate::nfg::{Attachment, Edge, Nfg, NfgBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorForm {
    InputOutput,
    Kernel,
    Image,
}

/// An operator NFG with its half-edges tagged by role.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorNfg {
    pub nfg: Nfg,
    pub form: OperatorForm,
    /// Edge positions of the domain variables, by column.
    pub inputs: Vec<usize>,
    /// Edge positions of the codomain variables, by row.
    pub outputs: Vec<usize>,
}

/// Negation flag for each nonzero entry, or an error for other values.
fn entry_sign(m: &ZqMatrix, r: usize, c: usize) -> Result<Option<bool>> {
    let q = m.modulus();
    match m.get(r, c) {
        0 => Ok(None),
        1 => Ok(Some(false)),
        v if v as u32 == q - 1 => Ok(Some(true)),
        v => Err(Error::UnsupportedEntry {
            row: r,
            col: c,
            value: v,
            q,
        }),
    }
}

struct Skeleton {
    builder: NfgBuilder,
    rows: Vec<usize>,
    inputs: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Inputs {
    None,
    Half,
    /// Closed by degree-one Equality nodes placed after the row nodes.
    Closed,
}

/// Equality per column and Parity per row, joined by the internal edges.
/// Outputs are left for the caller.
fn skeleton(m: &ZqMatrix, inputs: Inputs) -> Result<Skeleton> {
    let mut signs = Vec::new();
    for c in 0..m.cols() {
        for r in 0..m.rows() {
            if let Some(neg) = entry_sign(m, r, c)? {
                signs.push((c, r, neg));
            }
        }
    }
    let mut b = NfgBuilder::new(m.modulus());
    let columns: Vec<usize> = (0..m.cols()).map(|_| b.add_equality()).collect();
    let rows: Vec<usize> = (0..m.rows()).map(|_| b.add_parity()).collect();
    let input_edges = match inputs {
        Inputs::None => Vec::new(),
        Inputs::Half => columns.iter().map(|&eq| b.half_edge(eq, false)).collect(),
        Inputs::Closed => {
            let closures: Vec<usize> = columns.iter().map(|_| b.add_equality()).collect();
            columns
                .iter()
                .zip(closures)
                .map(|(&eq, one)| b.edge(eq, false, one, false))
                .collect()
        }
    };
    for (c, r, neg) in signs {
        b.edge(columns[c], false, rows[r], neg);
    }
    Ok(Skeleton {
        builder: b,
        rows,
        inputs: input_edges,
    })
}

/// Input/output NFG whose valid configurations are {(z, m z)}.
pub fn nfg_io(m: &ZqMatrix) -> Result<OperatorNfg> {
    let Skeleton {
        mut builder,
        rows,
        inputs,
    } = skeleton(m, Inputs::Half)?;
    let outputs = rows.iter().map(|&p| builder.half_edge(p, true)).collect();
    Ok(OperatorNfg {
        nfg: builder.build()?,
        form: OperatorForm::InputOutput,
        inputs,
        outputs,
    })
}

/// Kernel form: outputs closed by degree-one Parity nodes, which force them
/// to zero. Valid configurations are ker m.
pub fn nfg_kernel(m: &ZqMatrix) -> Result<OperatorNfg> {
    let Skeleton {
        mut builder,
        rows,
        inputs,
    } = skeleton(m, Inputs::Half)?;
    for &p in &rows {
        let zero = builder.add_parity();
        builder.edge(p, true, zero, false);
    }
    Ok(OperatorNfg {
        nfg: builder.build()?,
        form: OperatorForm::Kernel,
        inputs,
        outputs: Vec::new(),
    })
}

/// Image form: inputs closed by degree-one Equality nodes (the all-one
/// function). Valid configurations are im m.
pub fn nfg_image(m: &ZqMatrix) -> Result<OperatorNfg> {
    let Skeleton {
        mut builder, rows, ..
    } = skeleton(m, Inputs::Closed)?;
    let outputs = rows.iter().map(|&p| builder.half_edge(p, true)).collect();
    Ok(OperatorNfg {
        nfg: builder.build()?,
        form: OperatorForm::Image,
        inputs: Vec::new(),
        outputs,
    })
}

/// Image form with a degree-one table on every output instead of a
/// half-edge: the NFG of a model whose interaction on row r is
/// `tables[r]((m z)_r)`. Returns the NFG and the table node of each row.
pub fn image_form_with_interactions(
    m: &ZqMatrix,
    tables: &[Vec<Complex64>],
) -> Result<(Nfg, Vec<usize>)> {
    if tables.len() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} tables for {} rows",
            tables.len(),
            m.rows()
        )));
    }
    let Skeleton {
        mut builder, rows, ..
    } = skeleton(m, Inputs::None)?;
    let mut table_nodes = Vec::with_capacity(rows.len());
    for (&p, t) in rows.iter().zip(tables) {
        let node = builder.add_table(t.clone());
        builder.edge(p, true, node, false);
        table_nodes.push(node);
    }
    Ok((builder.build()?, table_nodes))
}

/// Joins the outputs of `first` to the inputs of `second`, giving the
/// input/output NFG of the composite map.
pub fn compose(first: &OperatorNfg, second: &OperatorNfg) -> Result<OperatorNfg> {
    if first.form != OperatorForm::InputOutput || second.form != OperatorForm::InputOutput {
        return Err(Error::InvalidNfg("only input/output forms compose".into()));
    }
    if first.outputs.len() != second.inputs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} outputs feed {} inputs",
            first.outputs.len(),
            second.inputs.len()
        )));
    }
    if first.nfg.q() != second.nfg.q() {
        return Err(Error::ModulusMismatch {
            left: first.nfg.q(),
            right: second.nfg.q(),
        });
    }
    let offset = first.nfg.nodes().len();
    let id_offset = first.nfg.nodes().iter().map(|n| n.id).max().map_or(0, |m| m + 1);
    let mut nodes = first.nfg.nodes().to_vec();
    nodes.extend(second.nfg.nodes().iter().map(|n| crate::nfg::Node {
        id: n.id + id_offset,
        function: n.function.clone(),
    }));
    let shift = |a: &Attachment| Attachment {
        node: a.node + offset,
        ..*a
    };
    let joined: std::collections::HashMap<usize, usize> = second
        .inputs
        .iter()
        .zip(&first.outputs)
        .map(|(&i, &o)| (i, o))
        .collect();
    let mut edges: Vec<Edge> = Vec::new();
    let mut first_pos = vec![usize::MAX; first.nfg.edges().len()];
    for (k, e) in first.nfg.edges().iter().enumerate() {
        first_pos[k] = edges.len();
        edges.push(Edge {
            id: edges.len() as u64,
            ends: e.ends.clone(),
        });
    }
    let mut second_pos = vec![usize::MAX; second.nfg.edges().len()];
    for (k, e) in second.nfg.edges().iter().enumerate() {
        if let Some(&o) = joined.get(&k) {
            edges[first_pos[o]].ends.push(shift(&e.ends[0]));
            second_pos[k] = first_pos[o];
        } else {
            second_pos[k] = edges.len();
            edges.push(Edge {
                id: edges.len() as u64,
                ends: e.ends.iter().map(shift).collect(),
            });
        }
    }
    Ok(OperatorNfg {
        nfg: Nfg::new(first.nfg.q(), nodes, edges)?,
        form: OperatorForm::InputOutput,
        inputs: first.inputs.iter().map(|&e| first_pos[e]).collect(),
        outputs: second.outputs.iter().map(|&e| second_pos[e]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfg::projected_valid_configs;
    use crate::parallel::EvalConfig;
    use std::collections::BTreeSet;

    #[test]
    fn single_wire() {
        let m = ZqMatrix::identity(1, 3).unwrap();
        let op = nfg_io(&m).unwrap();
        let set = projected_valid_configs(&op.nfg, &EvalConfig::default()).unwrap();
        let expected: BTreeSet<Vec<u8>> = (0..3).map(|x| vec![x, x]).collect();
        assert_eq!(set, expected);
    }

    #[test]
    fn kernel_and_image_of_small_maps() {
        let m = ZqMatrix::from_rows(&[vec![1, 1]], 2).unwrap();
        let k = nfg_kernel(&m).unwrap();
        let set = projected_valid_configs(&k.nfg, &EvalConfig::default()).unwrap();
        assert_eq!(set, BTreeSet::from([vec![0, 0], vec![1, 1]]));
        let z = ZqMatrix::zeros(2, 2, 3).unwrap();
        let im = nfg_image(&z).unwrap();
        let set = projected_valid_configs(&im.nfg, &EvalConfig::default()).unwrap();
        assert_eq!(set, BTreeSet::from([vec![0, 0]]));
    }

    #[test]
    fn minus_one_entries_become_marks() {
        let m = ZqMatrix::from_rows(&[vec![-1, 1]], 5).unwrap();
        let op = nfg_io(&m).unwrap();
        let set = projected_valid_configs(&op.nfg, &EvalConfig::default()).unwrap();
        assert_eq!(set.len(), 25);
        for v in set {
            assert_eq!(v[2], ((5 + v[1] as i32 - v[0] as i32) % 5) as u8);
        }
    }

    #[test]
    fn large_entries_are_rejected() {
        let m = ZqMatrix::from_rows(&[vec![2, 1]], 5).unwrap();
        assert!(matches!(
            nfg_io(&m),
            Err(Error::UnsupportedEntry { value: 2, .. })
        ));
    }
}
