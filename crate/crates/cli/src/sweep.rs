use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spin_steering::{split_state, CriterionId, SteeringAnalysis};

use crate::config::{CriterionSpec, SweepConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_atoms: usize,
    pub mu: f64,
    pub criterion: CriterionId,
    pub order: usize,
    pub value: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    pub first_term: f64,
    pub second_term: f64,
}

/// Kind of angle-optimized first term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirstTermKind {
    Fisher,
    Moment,
    Reid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstTermRow {
    pub n_atoms: usize,
    pub mu: f64,
    pub kind: FirstTermKind,
    pub order: usize,
    pub value: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub first_terms: Vec<FirstTermRow>,
}

struct Point {
    n_atoms: usize,
    mu_index: usize,
    mu: f64,
}

/// Evaluates every configured criterion on the (N, μ) grid.
///
/// Points run on a dedicated pool of `config.workers` threads; rows come back
/// ordered by (N, μ, criterion, order) whatever the scheduling was.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let mut n_atoms = config.n_atoms.clone();
    n_atoms.sort_unstable();
    n_atoms.dedup();
    let mus = config.mu_grid();
    let points: Vec<Point> = n_atoms
        .iter()
        .flat_map(|&n| {
            mus.iter()
                .enumerate()
                .map(move |(mu_index, &mu)| Point { n_atoms: n, mu_index, mu })
        })
        .collect();
    let mut criteria = config.criteria.clone();
    criteria.sort();
    criteria.dedup();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let mut results: Vec<(usize, usize, SweepOutput)> = pool.install(|| {
        points
            .par_iter()
            .map(|p| Ok((p.n_atoms, p.mu_index, evaluate_point(config, &criteria, p)?)))
            .collect::<Result<_>>()
    })?;
    results.sort_by_key(|(n, i, _)| (*n, *i));

    let mut out = SweepOutput::default();
    for (_, _, part) in results {
        out.rows.extend(part.rows);
        out.first_terms.extend(part.first_terms);
    }
    Ok(out)
}

fn evaluate_point(config: &SweepConfig, criteria: &[CriterionSpec], p: &Point) -> Result<SweepOutput> {
    let state = split_state(p.n_atoms, p.mu)?;
    let analysis = SteeringAnalysis::new(state, config.max_order())?;
    let policy = &config.angle_policy;
    let mut out = SweepOutput::default();
    for spec in criteria {
        let r = analysis.evaluate(spec.criterion, spec.order, policy)?;
        out.rows.push(SweepRow {
            n_atoms: p.n_atoms,
            mu: p.mu,
            criterion: spec.criterion,
            order: spec.order,
            value: r.value,
            phi_x: r.phi_x,
            phi_y: r.phi_y,
            first_term: r.first_term,
            second_term: r.second_term,
        });
    }
    if config.emit_first_terms {
        let orders: Vec<usize> = (1..=config.max_order()).collect();
        let ft = analysis.first_terms(&orders, policy)?;
        let mut push = |kind, order, m: spin_steering::AngleMax<f64>| {
            out.first_terms.push(FirstTermRow {
                n_atoms: p.n_atoms,
                mu: p.mu,
                kind,
                order,
                value: m.value,
                phi: m.phi,
            })
        };
        push(FirstTermKind::Fisher, 1, ft.fisher);
        for (o, m) in ft.moment {
            push(FirstTermKind::Moment, o, m);
        }
        for (o, m) in ft.reid {
            push(FirstTermKind::Reid, o, m);
        }
    }
    Ok(out)
}
