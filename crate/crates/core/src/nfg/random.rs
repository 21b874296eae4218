//! Random NFGs for property tests and the duality corpus.

use num_complex::Complex64;
use rand::Rng;

use super::{Nfg, NfgBuilder};
use crate::error::Result;

/// Shape of a random NFG with only full edges.
#[derive(Clone, Copy, Debug)]
pub struct RandomNfgSpec {
    pub q: u32,
    pub max_nodes: usize,
    pub max_edges: usize,
    /// Restrict tables to degree one (interaction functions).
    pub interactions_only: bool,
    /// Allow complex table entries; otherwise entries are positive reals.
    pub complex_tables: bool,
}

impl RandomNfgSpec {
    pub fn new(q: u32, max_nodes: usize, max_edges: usize) -> Self {
        Self {
            q,
            max_nodes,
            max_edges,
            interactions_only: false,
            complex_tables: false,
        }
    }
}

fn random_table<R: Rng + ?Sized>(rng: &mut R, len: usize, complex: bool) -> Vec<Complex64> {
    (0..len)
        .map(|_| {
            if complex {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(rng.gen_range(0.1..2.0), 0.0)
            }
        })
        .collect()
}

/// Draws a connected-ish NFG with between 1 and `max_edges` full edges.
///
/// In general mode every node is an Equality, Parity or Table node of any
/// degree. In interaction mode a skeleton of indicator nodes is drawn first
/// and degree-one tables hang off some of its ports.
pub fn random_nfg<R: Rng + ?Sized>(rng: &mut R, spec: &RandomNfgSpec) -> Result<Nfg> {
    let q = spec.q;
    let neg_prob = if q > 2 { 0.3 } else { 0.0 };
    let max_edges = spec.max_edges.max(1);
    let max_nodes = spec.max_nodes.max(2);
    if spec.interactions_only {
        let k = rng.gen_range(1..=(max_nodes / 2).max(1)).min(max_edges);
        let m = rng.gen_range(k..=max_edges.max(k));
        let internal = if k > 1 { rng.gen_range(0..=m - k) } else { 0 };
        let mut b = NfgBuilder::new(q);
        let ids: Vec<usize> = (0..k)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    b.add_equality()
                } else {
                    b.add_parity()
                }
            })
            .collect();
        let mut used = vec![false; k];
        for _ in 0..internal {
            let a = rng.gen_range(0..k);
            let c = (a + 1 + rng.gen_range(0..k - 1)) % k;
            used[a] = true;
            used[c] = true;
            b.edge(ids[a], rng.gen_bool(neg_prob), ids[c], rng.gen_bool(neg_prob));
        }
        // Tables go to bare skeleton nodes first, then anywhere.
        for _ in internal..m {
            let target = (0..k)
                .find(|&i| !used[i])
                .unwrap_or_else(|| rng.gen_range(0..k));
            used[target] = true;
            let table = b.add_table(random_table(rng, q as usize, spec.complex_tables));
            b.edge(ids[target], rng.gen_bool(neg_prob), table, rng.gen_bool(neg_prob));
        }
        return b.build();
    }

    let k = rng.gen_range(2..=max_nodes);
    let m = rng.gen_range(k.div_ceil(2).max(1)..=max_edges.max(k.div_ceil(2)));
    let mut ends: Vec<(usize, usize)> = Vec::with_capacity(m);
    // First pair up nodes so that every node gets at least one port.
    let mut order: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for pair in order.chunks(2) {
        let a = pair[0];
        let c = if pair.len() == 2 {
            pair[1]
        } else {
            (a + 1 + rng.gen_range(0..k - 1)) % k
        };
        ends.push((a, c));
    }
    while ends.len() < m {
        let a = rng.gen_range(0..k);
        let c = (a + 1 + rng.gen_range(0..k - 1)) % k;
        ends.push((a, c));
    }
    let mut degree = vec![0usize; k];
    for &(a, c) in &ends {
        degree[a] += 1;
        degree[c] += 1;
    }
    let mut b = NfgBuilder::new(q);
    let ids: Vec<usize> = degree
        .iter()
        .map(|&d| match rng.gen_range(0..3) {
            0 => b.add_equality(),
            1 => b.add_parity(),
            _ => b.add_table(random_table(
                rng,
                (q as usize).pow(d as u32),
                spec.complex_tables,
            )),
        })
        .collect();
    for (a, c) in ends {
        b.edge(ids[a], rng.gen_bool(neg_prob), ids[c], rng.gen_bool(neg_prob));
    }
    b.build()
}
