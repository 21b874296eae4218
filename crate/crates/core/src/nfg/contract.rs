//! Partition sums by variable elimination.
//!
//! Equality nodes, and Parity nodes of degree two, only say that their edges
//! carry the same value up to sign. They are folded into signed variable
//! classes first, so one spin spread over several edges is one variable.
//! Every other node becomes a dense factor over the classes it touches, and
//! classes are eliminated one at a time: all factors that mention the class
//! are multiplied together and the class is summed out.

use std::collections::BTreeSet;

use num_complex::Complex64;

use super::{LocalFunction, Nfg};
use crate::algebra::{mul_mod, neg_mod};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContractOptions {
    /// Largest number of variables any intermediate factor may carry.
    pub max_arity: usize,
}

impl Default for ContractOptions {
    fn default() -> Self {
        Self { max_arity: 20 }
    }
}

#[derive(Clone, Debug)]
struct Factor {
    vars: Vec<usize>,
    table: Vec<Complex64>,
}

/// Signed union-find over edges: x_e = sign(e) * x_root(e).
#[derive(Clone)]
struct Classes {
    parent: Vec<usize>,
    /// Sign relative to the parent, stored as a multiplier in Z_q.
    sign: Vec<u8>,
    q: u32,
}

impl Classes {
    fn new(m: usize, q: u32) -> Self {
        Self {
            parent: (0..m).collect(),
            sign: vec![1; m],
            q,
        }
    }

    fn find(&self, mut e: usize) -> (usize, u8) {
        let mut s = 1u8;
        while self.parent[e] != e {
            s = mul_mod(s, self.sign[e], self.q);
            e = self.parent[e];
        }
        (e, s)
    }

    /// Imposes x_a = rel * x_b. Returns false on a contradiction.
    fn union(&mut self, a: usize, b: usize, rel: u8) -> bool {
        let (ra, sa) = self.find(a);
        let (rb, sb) = self.find(b);
        // x_ra = sa * x_a = sa * rel * sb * x_rb (signs are their own inverses)
        let s = mul_mod(mul_mod(sa, rel, self.q), sb, self.q);
        if ra == rb {
            return s == 1;
        }
        self.parent[ra] = rb;
        self.sign[ra] = s;
        true
    }
}

/// Sign multiplier of an attachment.
fn mark(nfg: &Nfg, e: usize, k: usize) -> u8 {
    let q = nfg.q();
    if nfg.edges()[e].ends[k].negated {
        neg_mod(1, q)
    } else {
        1
    }
}

/// Folds copy-type nodes into classes. Returns the classes and, per node,
/// whether it was absorbed.
fn fold_copies(nfg: &Nfg) -> (Classes, Vec<bool>) {
    let q = nfg.q();
    let mut classes = Classes::new(nfg.edges().len(), q);
    let mut absorbed = vec![false; nfg.nodes().len()];
    for (i, node) in nfg.nodes().iter().enumerate() {
        let ports = nfg.node_ports(i);
        // Value seen at port k is s_k x_k; copy nodes require s_k x_k = t s_0 x_0
        // with t = 1 for Equality and t = -1 for the second port of Parity(2).
        let flip = match node.function {
            LocalFunction::Equality { .. } => false,
            LocalFunction::Parity { degree: 2 } => true,
            _ => continue,
        };
        let Some(&(e0, k0)) = ports.first() else {
            continue;
        };
        let s0 = mark(nfg, e0, k0);
        let mut trial = classes.clone();
        let ok = ports[1..].iter().all(|&(e, k)| {
            let t = if flip { neg_mod(1, q) } else { 1 };
            let rel = mul_mod(mul_mod(mark(nfg, e, k), t, q), s0, q);
            trial.union(e, e0, rel)
        });
        if ok {
            classes = trial;
            absorbed[i] = true;
        }
    }
    (classes, absorbed)
}

fn node_factor(nfg: &Nfg, node: usize, classes: &Classes) -> Factor {
    let q = nfg.q();
    let ports = nfg.node_ports(node);
    let refs: Vec<(usize, u8)> = ports
        .iter()
        .map(|&(e, k)| {
            let (root, s) = classes.find(e);
            (root, mul_mod(s, mark(nfg, e, k), q))
        })
        .collect();
    let mut vars: Vec<usize> = refs.iter().map(|&(r, _)| r).collect();
    vars.sort_unstable();
    vars.dedup();
    let size = (q as usize).pow(vars.len() as u32);
    let f = &nfg.nodes()[node].function;
    let mut vals = vec![0u8; nfg.edges().len()];
    let mut args = vec![0u8; ports.len()];
    let table = (0..size)
        .map(|idx| {
            let mut rest = idx;
            for &v in vars.iter().rev() {
                vals[v] = (rest % q as usize) as u8;
                rest /= q as usize;
            }
            for (slot, &(r, s)) in args.iter_mut().zip(&refs) {
                *slot = mul_mod(s, vals[r], q);
            }
            f.eval(&args, q)
        })
        .collect();
    Factor { vars, table }
}

fn eliminate(factors: Vec<Factor>, var: usize, q: u32, cap: usize) -> Result<Factor> {
    let mut out_vars: BTreeSet<usize> = BTreeSet::new();
    for f in &factors {
        out_vars.extend(f.vars.iter().copied().filter(|&v| v != var));
    }
    let out_vars: Vec<usize> = out_vars.into_iter().collect();
    if out_vars.len() + 1 > cap {
        return Err(Error::IntermediateTableTooLarge {
            arity: out_vars.len() + 1,
            cap,
        });
    }
    let qs = q as usize;
    // Stride of each output position and of the eliminated variable, per factor.
    let strides: Vec<(Vec<usize>, usize)> = factors
        .iter()
        .map(|f| {
            let n = f.vars.len();
            let stride_of = |v: usize| {
                f.vars
                    .iter()
                    .position(|&w| w == v)
                    .map_or(0, |p| qs.pow((n - 1 - p) as u32))
            };
            (out_vars.iter().map(|&v| stride_of(v)).collect(), stride_of(var))
        })
        .collect();
    let size = qs.pow(out_vars.len() as u32);
    let mut digits = vec![0usize; out_vars.len()];
    let mut table = Vec::with_capacity(size);
    for idx in 0..size {
        let mut rest = idx;
        for d in digits.iter_mut().rev() {
            *d = rest % qs;
            rest /= qs;
        }
        let bases: Vec<usize> = strides
            .iter()
            .map(|(s, _)| s.iter().zip(&digits).map(|(a, b)| a * b).sum())
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 0..qs {
            let mut p = Complex64::new(1.0, 0.0);
            for ((f, base), (_, sv)) in factors.iter().zip(&bases).zip(&strides) {
                p *= f.table[base + x * sv];
            }
            acc += p;
        }
        table.push(acc);
    }
    Ok(Factor {
        vars: out_vars,
        table,
    })
}

/// Greedy minimum-degree elimination over variable scopes, ties broken by
/// the lowest variable.
fn min_degree(mut scopes: Vec<BTreeSet<usize>>, vars: &BTreeSet<usize>) -> Vec<usize> {
    let mut left = vars.clone();
    let mut order = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let degree = |v: usize| {
            let mut nb = BTreeSet::new();
            for s in scopes.iter().filter(|s| s.contains(&v)) {
                nb.extend(s.iter().copied());
            }
            nb.len()
        };
        let v = *left
            .iter()
            .min_by_key(|&&v| (degree(v), v))
            .expect("nonempty");
        let (touching, rest): (Vec<_>, Vec<_>) = scopes.into_iter().partition(|s| s.contains(&v));
        let mut merged: BTreeSet<usize> = touching.into_iter().flatten().collect();
        merged.remove(&v);
        scopes = rest;
        scopes.push(merged);
        left.remove(&v);
        order.push(v);
    }
    order
}

/// Greedy minimum-degree elimination order on the edges, ties broken by
/// edge position. Returns edge ids.
pub fn min_degree_order(nfg: &Nfg) -> Vec<u64> {
    let scopes = (0..nfg.nodes().len())
        .map(|i| nfg.node_ports(i).iter().map(|&(e, _)| e).collect())
        .collect();
    let all = (0..nfg.edges().len()).collect();
    min_degree(scopes, &all)
        .into_iter()
        .map(|p| nfg.edges()[p].id)
        .collect()
}

/// Partition sum by sequential variable elimination. `order` lists edge ids;
/// a class of copied edges is eliminated at the first position of any of its
/// edges. `None` picks a minimum-degree order on the classes.
pub fn partition_sum_contracted(
    nfg: &Nfg,
    order: Option<&[u64]>,
    opts: &ContractOptions,
) -> Result<Complex64> {
    let half = nfg.half_edges();
    if !half.is_empty() {
        return Err(Error::HalfEdgesPresent { count: half.len() });
    }
    let m = nfg.edges().len();
    let mut positions = Vec::with_capacity(m);
    if let Some(order) = order {
        if order.len() != m {
            return Err(Error::InvalidOrder(format!(
                "order has {} entries for {m} edges",
                order.len()
            )));
        }
        let mut seen = vec![false; m];
        for &id in order {
            let p = nfg
                .edge_position(id)
                .ok_or_else(|| Error::InvalidOrder(format!("unknown edge id {id}")))?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidOrder(format!("edge id {id} repeated")));
            }
            positions.push(p);
        }
    }
    let (classes, absorbed) = fold_copies(nfg);
    let mut factors = Vec::new();
    for i in (0..nfg.nodes().len()).filter(|&i| !absorbed[i]) {
        let arity = {
            let mut v: Vec<usize> = nfg
                .node_ports(i)
                .iter()
                .map(|&(e, _)| classes.find(e).0)
                .collect();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        if arity > opts.max_arity {
            return Err(Error::IntermediateTableTooLarge {
                arity,
                cap: opts.max_arity,
            });
        }
        factors.push(node_factor(nfg, i, &classes));
    }
    let roots: BTreeSet<usize> = (0..m).map(|e| classes.find(e).0).collect();
    let order: Vec<usize> = if order.is_some() {
        let mut done = BTreeSet::new();
        positions
            .into_iter()
            .map(|p| classes.find(p).0)
            .filter(|r| done.insert(*r))
            .collect()
    } else {
        min_degree(
            factors.iter().map(|f| f.vars.iter().copied().collect()).collect(),
            &roots,
        )
    };
    // Classes no factor mentions are free and contribute q each.
    let mut free = 0i32;
    for v in order {
        let (touching, rest): (Vec<_>, Vec<_>) =
            factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        if touching.is_empty() {
            free += 1;
        } else {
            factors.push(eliminate(touching, v, nfg.q(), opts.max_arity)?);
        }
    }
    Ok(factors
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.table[0])
        * (nfg.q() as f64).powi(free))
}
