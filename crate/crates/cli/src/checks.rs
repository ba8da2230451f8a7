//! Oracle equivalence and hierarchy reports for the `self-check` and
//! `hierarchy` subcommands.

use rayon::prelude::*;
use spin_steering::oracle::{beam_splitter_state, dense_criterion_at, dense_partial_trace, fine_grid_criterion};
use spin_steering::{hierarchy_check, reduced_state_b, split_state, AngleSearchPolicy, CriterionId, SteeringAnalysis};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(name: String, deviation: f64, tol: f64) -> Self {
        Self {
            name,
            passed: deviation <= tol,
            detail: format!("deviation {deviation:.3e} (tolerance {tol:.0e})"),
        }
    }
}

/// Compares the main code path with the brute-force references at N ≤ 4.
pub fn self_check(policy: &AngleSearchPolicy) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for n in 1..=4 {
        let mut state_dev = 0.0f64;
        let mut trace_dev = 0.0f64;
        for mu in [0.0, 0.1, 0.7, 2.0] {
            let fock = beam_splitter_state(n, mu)?;
            let oracle = fock.to_split_state(mu)?;
            let direct = split_state(n, mu)?;
            for n_a in 0..=n {
                state_dev = state_dev.max((oracle.sector(n_a) - direct.sector(n_a)).norm());
            }
            trace_dev = trace_dev.max(dense_partial_trace(&fock)?.max_abs_diff(&reduced_state_b(&direct)));
        }
        lines.push(CheckLine::new(format!("split state N={n}"), state_dev, 1e-12));
        lines.push(CheckLine::new(format!("reduced state N={n}"), trace_dev, 1e-12));
    }
    let cases: Vec<(usize, CriterionId)> = (2..=4)
        .flat_map(|n| [(n, CriterionId::Delta1), (n, CriterionId::Delta2)])
        .collect();
    let crit_lines: Vec<Vec<CheckLine>> = cases
        .par_iter()
        .map(|&(n, id)| {
            let mu = 0.1;
            let state = split_state(n, mu)?;
            let r = SteeringAnalysis::new(state.clone(), 1)?.evaluate(id, 1, policy)?;
            let grid = fine_grid_criterion(&state, id, 1, 0.25)?;
            let at = dense_criterion_at(&state, id, 1, r.phi_x, r.phi_y)?;
            let label = if id == CriterionId::Delta1 { "delta1".to_string() } else { "delta2:1".into() };
            Ok(vec![
                CheckLine::new(format!("{label} vs fine grid N={n} mu={mu}"), (r.value - grid).abs(), 1e-6),
                CheckLine::new(format!("{label} at optimum N={n} mu={mu}"), (r.value - at).abs(), 1e-10),
            ])
        })
        .collect::<Result<_>>()?;
    lines.extend(crit_lines.into_iter().flatten());
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyRow {
    pub n_atoms: usize,
    pub mu: f64,
    /// `(label, value)` in evaluation order.
    pub values: Vec<(String, f64)>,
    pub failures: Vec<String>,
}

impl HierarchyRow {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn hierarchy_table(
    n_atoms: &[usize],
    mus: &[f64],
    orders: &[usize],
    policy: &AngleSearchPolicy,
    workers: usize,
) -> Result<Vec<HierarchyRow>> {
    let points: Vec<(usize, f64)> = n_atoms
        .iter()
        .flat_map(|&n| mus.iter().map(move |&mu| (n, mu)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        points
            .par_iter()
            .map(|&(n, mu)| {
                let report = hierarchy_check(&split_state(n, mu)?, orders, policy)?;
                let values = report
                    .results
                    .iter()
                    .map(|r| {
                        let label = if r.criterion.has_order() {
                            format!("{}:{}", r.criterion, r.order)
                        } else {
                            r.criterion.to_string()
                        };
                        (label, r.value)
                    })
                    .collect();
                let failures = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| format!("{} ({:.3e} < {:.3e})", c.name, c.larger, c.smaller))
                    .collect();
                Ok(HierarchyRow {
                    n_atoms: n,
                    mu,
                    values,
                    failures,
                })
            })
            .collect()
    })
}

pub fn format_hierarchy(rows: &[HierarchyRow]) -> String {
    let mut out = String::new();
    if let Some(first) = rows.first() {
        out.push_str(&format!("{:>4} {:>10}", "N", "mu"));
        for (label, _) in &first.values {
            out.push_str(&format!(" {label:>13}"));
        }
        out.push_str("  status\n");
    }
    for r in rows {
        out.push_str(&format!("{:>4} {:>10.5}", r.n_atoms, r.mu));
        for (_, v) in &r.values {
            out.push_str(&format!(" {v:>13.6e}"));
        }
        if r.passed() {
            out.push_str("  PASS\n");
        } else {
            out.push_str(&format!("  FAIL {}\n", r.failures.join("; ")));
        }
    }
    out
}
