//! Exhaustive evaluation by depth-first search with constraint forcing.
//!
//! A static plan fixes the order in which edges receive values. An edge is
//! either branched over all of Z_q or forced: copied through an Equality node
//! that already has an assigned port, or solved from a Parity node with one
//! port left. Each node is checked the moment its last port is assigned, so
//! failing branches are cut early. The cost is q^(branch steps), which for
//! indicator-heavy graphs is far below q^(edges).

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_complex::Complex64;

use super::{support_nfg, table_index, LocalFunction, Nfg};
use crate::algebra::{add_mod, checked_pow, neg_mod};
use crate::error::{Error, Result};
use crate::parallel::{map_tasks, tree_reduce, EvalConfig};

/// Values of a function of several edge variables, mixed-radix indexed with
/// the first variable most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigTable {
    q: u32,
    variables: Vec<u64>,
    values: Vec<Complex64>,
}

impl ConfigTable {
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Edge ids in index order.
    pub fn variables(&self) -> &[u64] {
        &self.variables
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, assignment: &[u8]) -> Complex64 {
        self.values[table_index(assignment, self.q)]
    }

    /// The partition sum when there are no variables.
    pub fn scalar(&self) -> Option<Complex64> {
        self.variables.is_empty().then(|| self.values[0])
    }
}

#[derive(Clone, Debug)]
enum Source {
    Branch,
    Copy {
        from: usize,
        from_neg: bool,
        neg: bool,
    },
    Solve {
        others: Vec<(usize, bool)>,
        neg: bool,
    },
}

#[derive(Clone, Debug)]
struct Step {
    edge: usize,
    source: Source,
    /// Nodes whose last port is assigned by this step.
    checks: Vec<usize>,
    /// Position among branch steps, if this step branches.
    branch: Option<usize>,
}

struct CompiledNode {
    function: LocalFunction,
    ports: Vec<(usize, bool)>,
}

struct Plan<'a> {
    nfg: &'a Nfg,
    nodes: Vec<CompiledNode>,
    initial_checks: Vec<usize>,
    steps: Vec<Step>,
    branches: usize,
}

impl<'a> Plan<'a> {
    fn new(nfg: &'a Nfg, preassigned: &[usize]) -> Self {
        let nodes: Vec<CompiledNode> = (0..nfg.nodes().len())
            .map(|i| CompiledNode {
                function: nfg.nodes()[i].function.clone(),
                ports: nfg
                    .node_ports(i)
                    .iter()
                    .map(|&(e, k)| (e, nfg.edges()[e].ends[k].negated))
                    .collect(),
            })
            .collect();
        let m = nfg.edges().len();
        let mut assigned = vec![false; m];
        for &e in preassigned {
            assigned[e] = true;
        }
        let mut open: Vec<usize> = nodes
            .iter()
            .map(|n| n.ports.iter().filter(|(e, _)| !assigned[*e]).count())
            .collect();
        let initial_checks: Vec<usize> = (0..nodes.len()).filter(|&i| open[i] == 0).collect();
        let mut remaining = assigned.iter().filter(|a| !**a).count();
        let mut steps = Vec::with_capacity(remaining);
        let mut branches = 0;
        while remaining > 0 {
            let (edge, source) = Self::next_forced(nfg, &nodes, &assigned, &open)
                .unwrap_or_else(|| (Self::next_branch(nfg, &assigned), Source::Branch));
            let branch = matches!(source, Source::Branch).then(|| {
                branches += 1;
                branches - 1
            });
            assigned[edge] = true;
            remaining -= 1;
            let mut checks = Vec::new();
            for a in &nfg.edges()[edge].ends {
                open[a.node] -= 1;
                if open[a.node] == 0 {
                    checks.push(a.node);
                }
            }
            steps.push(Step {
                edge,
                source,
                checks,
                branch,
            });
        }
        Self {
            nfg,
            nodes,
            initial_checks,
            steps,
            branches,
        }
    }

    fn next_forced(
        nfg: &Nfg,
        nodes: &[CompiledNode],
        assigned: &[bool],
        open: &[usize],
    ) -> Option<(usize, Source)> {
        for (i, node) in nodes.iter().enumerate() {
            if open[i] == 0 {
                continue;
            }
            match node.function {
                LocalFunction::Equality { degree } if open[i] < degree => {
                    let &(from, from_neg) = node.ports.iter().find(|(e, _)| assigned[*e])?;
                    let &(edge, neg) = node.ports.iter().find(|(e, _)| !assigned[*e])?;
                    return Some((
                        edge,
                        Source::Copy {
                            from,
                            from_neg,
                            neg,
                        },
                    ));
                }
                LocalFunction::Parity { .. } if open[i] == 1 => {
                    let &(edge, neg) = node.ports.iter().find(|(e, _)| !assigned[*e])?;
                    let others = node
                        .ports
                        .iter()
                        .copied()
                        .filter(|(e, _)| assigned[*e])
                        .collect();
                    return Some((edge, Source::Solve { others, neg }));
                }
                _ => {}
            }
        }
        let _ = nfg;
        None
    }

    fn next_branch(nfg: &Nfg, assigned: &[bool]) -> usize {
        let on_equality = |e: usize| {
            nfg.edges()[e]
                .ends
                .iter()
                .any(|a| matches!(nfg.nodes()[a.node].function, LocalFunction::Equality { .. }))
        };
        (0..assigned.len())
            .find(|&e| !assigned[e] && on_equality(e))
            .or_else(|| (0..assigned.len()).find(|&e| !assigned[e]))
            .expect("an unassigned edge remains")
    }

    fn state_count(&self, cap: u64) -> Result<u64> {
        checked_pow(self.nfg.q() as u64, self.branches, cap)
    }

    #[inline]
    fn check(&self, node: usize, vals: &[u8]) -> Complex64 {
        let q = self.nfg.q();
        let n = &self.nodes[node];
        let seen = |&(e, neg): &(usize, bool)| {
            if neg {
                neg_mod(vals[e], q)
            } else {
                vals[e]
            }
        };
        match &n.function {
            LocalFunction::Equality { .. } => {
                let first = seen(&n.ports[0]);
                if n.ports.iter().all(|p| seen(p) == first) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            LocalFunction::Parity { .. } => {
                if n.ports.iter().fold(0, |s, p| add_mod(s, seen(p), q)) == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            LocalFunction::Table { values, .. } => {
                let idx = n
                    .ports
                    .iter()
                    .fold(0usize, |acc, p| acc * q as usize + seen(p) as usize);
                values[idx]
            }
        }
    }

    fn initial_product(&self, vals: &[u8]) -> Complex64 {
        self.initial_checks
            .iter()
            .fold(Complex64::new(1.0, 0.0), |p, &i| p * self.check(i, vals))
    }

    /// Visits every assignment with nonzero global value. Branch steps with
    /// ordinal below `prefix.len()` take the prefix value only.
    fn dfs<F: FnMut(&[u8], Complex64)>(
        &self,
        step: usize,
        vals: &mut [u8],
        prod: Complex64,
        prefix: &[u8],
        visit: &mut F,
    ) {
        if prod.re == 0.0 && prod.im == 0.0 {
            return;
        }
        let Some(s) = self.steps.get(step) else {
            visit(vals, prod);
            return;
        };
        let q = self.nfg.q();
        let mut descend = |vals: &mut [u8]| {
            let mut p = prod;
            for &c in &s.checks {
                p *= self.check(c, vals);
            }
            self.dfs(step + 1, vals, p, prefix, visit);
        };
        match &s.source {
            Source::Branch => {
                let ord = s.branch.unwrap_or(usize::MAX);
                if ord < prefix.len() {
                    vals[s.edge] = prefix[ord];
                    descend(vals);
                } else {
                    for v in 0..q as u8 {
                        vals[s.edge] = v;
                        descend(vals);
                    }
                }
            }
            Source::Copy {
                from,
                from_neg,
                neg,
            } => {
                let seen = if *from_neg {
                    neg_mod(vals[*from], q)
                } else {
                    vals[*from]
                };
                vals[s.edge] = if *neg { neg_mod(seen, q) } else { seen };
                descend(vals);
            }
            Source::Solve { others, neg } => {
                let sum = others.iter().fold(0u8, |acc, &(e, n)| {
                    add_mod(acc, if n { neg_mod(vals[e], q) } else { vals[e] }, q)
                });
                let seen = neg_mod(sum, q);
                vals[s.edge] = if *neg { neg_mod(seen, q) } else { seen };
                descend(vals);
            }
        }
    }

    fn sum_from(&self, vals: &mut [u8], prefix: &[u8]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let start = self.initial_product(vals);
        self.dfs(0, vals, start, prefix, &mut |_, p| total += p);
        total
    }
}

fn digits(mut index: u64, count: usize, q: u32) -> Vec<u8> {
    let mut d = vec![0u8; count];
    for slot in d.iter_mut().rev() {
        *slot = (index % q as u64) as u8;
        index /= q as u64;
    }
    d
}

/// Number of leading branch steps fixed per parallel task. Depends only on
/// the graph, never on the worker count.
fn prefix_len(q: u32, branches: usize) -> usize {
    let mut k = 0;
    let mut tasks = 1u64;
    while k < branches && tasks < 256 {
        tasks *= q as u64;
        k += 1;
    }
    k
}

/// Partition sum of an NFG without half-edges by exhaustive enumeration.
pub fn partition_sum_brute(nfg: &Nfg, cfg: &EvalConfig) -> Result<Complex64> {
    let half = nfg.half_edges();
    if !half.is_empty() {
        return Err(Error::HalfEdgesPresent { count: half.len() });
    }
    let plan = Plan::new(nfg, &[]);
    plan.state_count(cfg.budget)?;
    let k = prefix_len(nfg.q(), plan.branches);
    let tasks = checked_pow(nfg.q() as u64, k, u64::MAX)? as usize;
    let m = nfg.edges().len();
    let parts = map_tasks(tasks, cfg.workers, |t| {
        let prefix = digits(t as u64, k, nfg.q());
        let mut vals = vec![0u8; m];
        plan.sum_from(&mut vals, &prefix)
    });
    Ok(tree_reduce(&parts, Complex64::new(0.0, 0.0), |a, b| a + b))
}

/// The exterior function: for each half-edge assignment, the sum over all
/// full-edge assignments. Without half-edges this is the partition sum.
pub fn exterior_function(nfg: &Nfg, cfg: &EvalConfig) -> Result<ConfigTable> {
    let half = nfg.half_edges();
    let variables: Vec<u64> = half.iter().map(|&e| nfg.edges()[e].id).collect();
    if half.is_empty() {
        let z = partition_sum_brute(nfg, cfg)?;
        return Ok(ConfigTable {
            q: nfg.q(),
            variables,
            values: vec![z],
        });
    }
    let q = nfg.q();
    let plan = Plan::new(nfg, &half);
    let outer = checked_pow(q as u64, half.len(), cfg.budget)?;
    let inner = plan.state_count(cfg.budget)?;
    if outer.saturating_mul(inner) > cfg.budget {
        return Err(Error::BudgetExceeded {
            needed: outer as f64 * inner as f64,
            cap: cfg.budget,
        });
    }
    const CHUNK: u64 = 256;
    let tasks = outer.div_ceil(CHUNK) as usize;
    let m = nfg.edges().len();
    let chunks = map_tasks(tasks, cfg.workers, |t| {
        let start = t as u64 * CHUNK;
        let end = (start + CHUNK).min(outer);
        let mut vals = vec![0u8; m];
        (start..end)
            .map(|h| {
                for (&e, v) in half.iter().zip(digits(h, half.len(), q)) {
                    vals[e] = v;
                }
                plan.sum_from(&mut vals, &[])
            })
            .collect::<Vec<_>>()
    });
    Ok(ConfigTable {
        q,
        variables,
        values: chunks.into_iter().flatten().collect(),
    })
}

/// For the support NFG: how many valid full configurations sit over each
/// half-edge assignment that has at least one.
pub fn valid_config_counts(nfg: &Nfg, cfg: &EvalConfig) -> Result<BTreeMap<Vec<u8>, u64>> {
    let support = support_nfg(nfg)?;
    let half = support.half_edges();
    let plan = Plan::new(&support, &[]);
    plan.state_count(cfg.budget)?;
    let mut vals = vec![0u8; support.edges().len()];
    let mut counts = BTreeMap::new();
    let start = plan.initial_product(&vals);
    plan.dfs(0, &mut vals, start, &[], &mut |v, _| {
        let key: Vec<u8> = half.iter().map(|&e| v[e]).collect();
        *counts.entry(key).or_insert(0u64) += 1;
    });
    Ok(counts)
}

/// Projection of the valid configurations onto the support NFG's half-edges,
/// in half-edge order.
pub fn projected_valid_configs(nfg: &Nfg, cfg: &EvalConfig) -> Result<BTreeSet<Vec<u8>>> {
    Ok(valid_config_counts(nfg, cfg)?.into_keys().collect())
}

/// The constant c with Z(x_D) = c on every projected valid configuration of
/// the support NFG.
pub fn support_constant(nfg: &Nfg, cfg: &EvalConfig) -> Result<u64> {
    let counts = valid_config_counts(nfg, cfg)?;
    let mut values = counts.values();
    let first = *values
        .next()
        .ok_or_else(|| Error::AssumptionViolated("no valid configuration".into()))?;
    if values.any(|&c| c != first) {
        return Err(Error::AssumptionViolated(
            "exterior function of the support is not constant on its support".into(),
        ));
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfg::NfgBuilder;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cut_open_table_is_its_own_exterior() {
        let mut b = NfgBuilder::new(3);
        let t = b.add_real_table(&[0.5, 1.5, 2.5]);
        b.half_edge(t, false);
        let n = b.build().unwrap();
        let ext = exterior_function(&n, &EvalConfig::default()).unwrap();
        assert_eq!(ext.values(), &[c(0.5), c(1.5), c(2.5)]);
    }

    #[test]
    fn parity_pair_projects_to_negatives() {
        let mut b = NfgBuilder::new(5);
        let p = b.add_parity();
        b.half_edge(p, false);
        b.half_edge(p, false);
        let n = b.build().unwrap();
        let set = projected_valid_configs(&n, &EvalConfig::default()).unwrap();
        let expected: BTreeSet<Vec<u8>> = (0..5u8).map(|x| vec![x, (5 - x) % 5]).collect();
        assert_eq!(set, expected);
        assert_eq!(support_constant(&n, &EvalConfig::default()).unwrap(), 1);
    }

    #[test]
    fn chain_of_equalities_closed_by_ones() {
        let mut b = NfgBuilder::new(2);
        let a = b.add_equality();
        let e = b.add_equality();
        let t1 = b.add_real_table(&[1.0, 1.0]);
        let t2 = b.add_real_table(&[1.0, 1.0]);
        b.edge(a, false, e, false);
        b.edge(a, false, t1, false);
        b.edge(e, false, t2, false);
        let n = b.build().unwrap();
        assert_eq!(partition_sum_brute(&n, &EvalConfig::default()).unwrap(), c(2.0));
    }

    #[test]
    fn budget_is_enforced() {
        let mut b = NfgBuilder::new(2);
        for _ in 0..6 {
            let t = b.add_real_table(&[1.0, 1.0]);
            let u = b.add_real_table(&[1.0, 1.0]);
            b.edge(t, false, u, false);
        }
        let n = b.build().unwrap();
        let cfg = EvalConfig::default().with_budget(32);
        assert!(matches!(
            partition_sum_brute(&n, &cfg),
            Err(Error::BudgetExceeded { .. })
        ));
        let cfg = EvalConfig::default().with_budget(64);
        assert_eq!(partition_sum_brute(&n, &cfg).unwrap(), c(64.0));
    }

    #[test]
    fn half_edges_block_the_partition_sum() {
        let mut b = NfgBuilder::new(2);
        let e = b.add_equality();
        b.half_edge(e, false);
        let n = b.build().unwrap();
        assert_eq!(
            partition_sum_brute(&n, &EvalConfig::default()),
            Err(Error::HalfEdgesPresent { count: 1 })
        );
    }
}
