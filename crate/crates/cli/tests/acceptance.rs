//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use spin_steering::oracle::{beam_splitter_state, dense_criterion_at, dense_partial_trace, fine_grid_criterion};
use spin_steering::*;
use spin_steering_cli::{parse_criteria, rows_to_csv, run_sweep, SweepConfig};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const SLACK: f64 = 1e-7;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn ge(larger: f64, smaller: f64) -> bool {
    larger + SLACK * 1f64.max(larger.abs()).max(smaller.abs()) >= smaller
}

/// δ₁, δ₂⁽¹⁾, δ₂⁽²⁾, δ₃⁽¹⁾, δ₃⁽²⁾, δ₄ at one point.
#[derive(Debug, Clone, Copy)]
struct Six {
    n: usize,
    mu: f64,
    d1: f64,
    d2: [f64; 2],
    d3: [f64; 2],
    d4: f64,
}

fn six(n: usize, mu: f64) -> Result<Six> {
    let a = SteeringAnalysis::new(split_state(n, mu)?, 2)?;
    let p = AngleSearchPolicy::default();
    Ok(Six {
        n,
        mu,
        d1: a.delta1(&p)?.value,
        d2: [a.delta2(1, &p)?.value, a.delta2(2, &p)?.value],
        d3: [a.delta3(1, &p)?.value, a.delta3(2, &p)?.value],
        d4: a.delta4()?.value,
    })
}

fn hierarchy_grid() -> &'static std::result::Result<Vec<Six>, String> {
    static GRID: OnceLock<std::result::Result<Vec<Six>, String>> = OnceLock::new();
    GRID.get_or_init(|| {
        let points: Vec<(usize, f64)> = [4, 8, 12]
            .into_iter()
            .flat_map(|n| linspace(0.0, 1.0, 40).into_iter().map(move |mu| (n, mu)))
            .collect();
        points
            .par_iter()
            .map(|&(n, mu)| six(n, mu).map_err(|e| format!("N={n} mu={mu}: {e}")))
            .collect()
    })
}

fn hierarchy_chain() -> Check {
    let grid = hierarchy_grid().as_ref().map_err(|e| e.clone())?;
    let mut bad = Vec::new();
    for s in grid {
        let checks = [
            ("d1>=d2(2)", ge(s.d1, s.d2[1])),
            ("d2(1)>=d3(1)", ge(s.d2[0], s.d3[0])),
            ("d2(2)>=d3(2)", ge(s.d2[1], s.d3[1])),
            ("d3(1)>=d4", ge(s.d3[0], s.d4)),
        ];
        for (name, ok) in checks {
            if !ok {
                bad.push(format!("N={} mu={:.4} {name}", s.n, s.mu));
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("{} points, 4 inequalities each", grid.len()))
    } else {
        Err(bad.join("; "))
    }
}

fn order_chain() -> Check {
    let grid = hierarchy_grid().as_ref().map_err(|e| e.clone())?;
    let mut bad = Vec::new();
    for s in grid {
        for (name, d) in [("d2", s.d2), ("d3", s.d3)] {
            if !ge(d[1], d[0]) {
                bad.push(format!("N={} mu={:.4} {name}(1)<={name}(2)", s.n, s.mu));
            }
            if !ge(s.d1, d[1]) {
                bad.push(format!("N={} mu={:.4} {name}(2)<=d1", s.n, s.mu));
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("{} points, 4 inequalities each", grid.len()))
    } else {
        Err(bad.join("; "))
    }
}

fn four_atom_coincidence() -> Check {
    let p = AngleSearchPolicy::default();
    let worst = linspace(0.0, 0.5, 21)
        .par_iter()
        .map(|&mu| {
            let a = SteeringAnalysis::new(split_state(4, mu)?, 2)?;
            let d1 = a.delta1(&p)?.value;
            let d22 = a.delta2(2, &p)?.value;
            Ok((d1 - d22).abs() / d1.abs().max(1.0))
        })
        .collect::<Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, f64::max);
    let msg = format!("max relative gap {worst:.2e} (limit 1e-6)");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn separable_anchor() -> Check {
    let results: Vec<Six> = (2..=20)
        .into_par_iter()
        .map(|n| six(n, 0.0))
        .collect::<Result<_>>()
        .map_err(|e| e.to_string())?;
    let worst = results
        .iter()
        .flat_map(|s| [s.d1, s.d2[0], s.d2[1], s.d3[0], s.d3[1], s.d4])
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let msg = format!("max |value| {worst:.2e} over N=2..20 (limit 1e-9)");
    if worst < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gaussian_regime() -> Check {
    let s = six(20, 0.02).map_err(|e| e.to_string())?;
    let values = [
        ("d1", s.d1),
        ("d2(1)", s.d2[0]),
        ("d2(2)", s.d2[1]),
        ("d3(1)", s.d3[0]),
        ("d4", s.d4),
    ];
    let msg = values
        .iter()
        .map(|(k, v)| format!("{k}={v:.4e}"))
        .collect::<Vec<_>>()
        .join(" ");
    if values.iter().all(|(_, v)| *v > 0.0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn non_gaussian_advantage() -> Check {
    let p = AngleSearchPolicy::default();
    let rows = linspace(0.0, 0.6, 61)
        .par_iter()
        .map(|&mu| {
            let a = SteeringAnalysis::new(split_state(20, mu)?, 2)?;
            Ok((mu, a.delta2(2, &p)?.value, a.delta3(1, &p)?.value, a.delta4()?.value))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let hits: Vec<f64> = rows
        .iter()
        .filter(|(_, d22, d31, d4)| *d22 > 0.0 && *d31 <= 0.0 && *d4 <= 0.0)
        .map(|r| r.0)
        .collect();
    match (hits.first(), hits.last()) {
        (Some(lo), Some(hi)) => Ok(format!("{} of 61 points, mu in [{lo:.2}, {hi:.2}]", hits.len())),
        _ => Err("no mu in [0, 0.6] with d2(2) > 0 >= d3(1), d4".into()),
    }
}

fn oracle_equivalence() -> Check {
    let mut state_dev = 0.0f64;
    let mut trace_dev = 0.0f64;
    for n in 1..=4 {
        for mu in linspace(0.0, 3.0, 13) {
            let fock = beam_splitter_state(n, mu).map_err(|e| e.to_string())?;
            let oracle = fock.to_split_state(mu).map_err(|e| e.to_string())?;
            let direct = split_state(n, mu).map_err(|e| e.to_string())?;
            for n_a in 0..=n {
                state_dev = state_dev.max((oracle.sector(n_a) - direct.sector(n_a)).norm());
            }
            let dense = dense_partial_trace(&fock).map_err(|e| e.to_string())?;
            trace_dev = trace_dev.max(dense.max_abs_diff(&reduced_state_b(&direct)));
        }
    }
    let cases: Vec<(usize, f64, CriterionId)> = (2..=4)
        .flat_map(|n| {
            [0.05, 0.1, 0.2, 0.3]
                .into_iter()
                .flat_map(move |mu| [(n, mu, CriterionId::Delta1), (n, mu, CriterionId::Delta2)])
        })
        .collect();
    let devs = cases
        .par_iter()
        .map(|&(n, mu, id)| {
            let s = split_state(n, mu)?;
            let r = SteeringAnalysis::new(s.clone(), 1)?.evaluate(id, 1, &AngleSearchPolicy::default())?;
            let grid = fine_grid_criterion(&s, id, 1, 0.25)?;
            let at = dense_criterion_at(&s, id, 1, r.phi_x, r.phi_y)?;
            Ok(((r.value - grid).abs(), (r.value - at).abs()))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let grid_dev = devs.iter().fold(0.0f64, |m, d| m.max(d.0));
    let point_dev = devs.iter().fold(0.0f64, |m, d| m.max(d.1));
    let msg = format!(
        "states {state_dev:.1e}, reduced {trace_dev:.1e} (limit 1e-12); criteria vs 0.25 deg grid {grid_dev:.1e} (limit 1e-6), at optimum {point_dev:.1e}"
    );
    if state_dev <= 1e-12 && trace_dev <= 1e-12 && grid_dev <= 1e-6 && point_dev <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_direction(rng: &mut StdRng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

fn pure_state_qfi() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let mut worst = 0.0f64;
    let mut states = 0;
    for _ in 0..10 {
        let n = rng.random_range(1..=10);
        let mu: f64 = rng.random_range(0.0..1.5);
        let phi: f64 = rng.random_range(0.0..PI);
        let dir = random_direction(&mut rng);
        let s = split_state(n, mu).map_err(|e| e.to_string())?;
        let asm = measure_alice(&s, DirectionYZ::new(phi)).map_err(|e| e.to_string())?;
        for o in &asm.outcomes {
            let g = spin_matrices::<f64>(DickeSpace::new(o.n_b)).along(dir);
            let gpsi = g.matrix() * &o.bob_state;
            let mean = o.bob_state.dotc(&gpsi).re;
            let four_var = 4.0 * (gpsi.norm_squared() - mean * mean);
            let blocks = (0..=o.n_b)
                .map(|m| DensityBlock {
                    n_b: m,
                    matrix: if m == o.n_b {
                        &o.bob_state * o.bob_state.adjoint()
                    } else {
                        DMatrix::zeros(m + 1, m + 1)
                    },
                })
                .collect();
            let rho = BlockDensityMatrix::new(blocks).map_err(|e| e.to_string())?;
            let qfi = mixed_state_qfi_along(&rho, dir).map_err(|e| e.to_string())?;
            worst = worst.max((qfi - four_var).abs());
            states += 1;
        }
    }
    let msg = format!("{states} conditional states, max |F_Q - 4 Var| {worst:.2e} (limit 1e-9)");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn qfi_convexity() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    let s = split_state(8, 0.5).map_err(|e| e.to_string())?;
    let rho = reduced_state_b(&s);
    let mut margin = f64::INFINITY;
    for _ in 0..20 {
        let dir = random_direction(&mut rng);
        let phi: f64 = rng.random_range(0.0..PI);
        let qfi = mixed_state_qfi_along(&rho, dir).map_err(|e| e.to_string())?;
        let asm = measure_alice(&s, DirectionYZ::new(phi)).map_err(|e| e.to_string())?;
        let gamma = conditional_covariance(&asm, 1).map_err(|e| e.to_string())?.entries;
        let v = DVector::from_row_slice(&dir);
        let fisher = 4.0 * (v.transpose() * gamma * &v)[(0, 0)];
        margin = margin.min(fisher - qfi);
    }
    let msg = format!("20 samples, min (4 n'Gn - F_Q) {margin:.3e} (limit -1e-9)");
    if margin >= -1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism_and_periodicity() -> Check {
    let mut config = SweepConfig {
        n_atoms: vec![4, 6],
        mu_min: 0.0,
        mu_max: 0.6,
        mu_steps: 5,
        criteria: parse_criteria("delta1,delta2:1,delta2:2,delta3:1,delta3:2,delta4").map_err(|e| e.to_string())?,
        workers: 1,
        ..Default::default()
    };
    let one = rows_to_csv(&run_sweep(&config).map_err(|e| e.to_string())?.rows);
    config.workers = 8;
    let eight = rows_to_csv(&run_sweep(&config).map_err(|e| e.to_string())?.rows);
    if one != eight {
        return Err("sweep output differs between 1 and 8 workers".into());
    }

    let mut rng = StdRng::seed_from_u64(0x5eed_0010);
    let mut worst = 0.0f64;
    for (n, mu) in [(4, 0.3), (6, 0.45), (9, 0.8)] {
        let a = SteeringAnalysis::new(split_state::<f64>(n, mu).map_err(|e| e.to_string())?, 2).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let x: f64 = rng.random_range(0.0..PI);
            let y: f64 = rng.random_range(0.0..PI);
            for (id, o) in [
                (CriterionId::Delta1, 1),
                (CriterionId::Delta2, 1),
                (CriterionId::Delta2, 2),
                (CriterionId::Delta3, 1),
                (CriterionId::Delta3, 2),
            ] {
                let v = |x, y| a.value_at(id, o, x, y).map_err(|e| e.to_string());
                let base = v(x, y)?;
                worst = worst.max((v(x + PI, y)? - base).abs());
                worst = worst.max((v(x, y + PI)? - base).abs());
            }
        }
        let p0 = AngleSearchPolicy::default();
        let p1 = AngleSearchPolicy { origin: PI, ..p0 };
        let d0 = a.delta2(2, &p0).map_err(|e| e.to_string())?.value;
        let d1 = a.delta2(2, &p1).map_err(|e| e.to_string())?.value;
        worst = worst.max((d0 - d1).abs());
    }
    let msg = format!("sweeps byte-identical for 1 and 8 workers; max pi-shift deviation {worst:.2e} (limit 1e-9)");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("hierarchy of criteria, N in {4,8,12}, 40 twist values", hierarchy_chain),
        ("order hierarchy, same grid", order_chain),
        ("second-order coincidence with the Fisher criterion at N=4", four_atom_coincidence),
        ("product state gives zero for all six criteria, N=2..20", separable_anchor),
        ("all criteria positive at N=20, mu=0.02", gaussian_regime),
        ("second-order advantage over linear Reid at N=20", non_gaussian_advantage),
        ("agreement with the Fock-space and fine-grid oracle, N<=4", oracle_equivalence),
        ("pure-state QFI equals four times the variance", pure_state_qfi),
        ("QFI bounded by the conditional Fisher term, N=8, mu=0.5", qfi_convexity),
        ("determinism across worker counts and pi-periodicity", determinism_and_periodicity),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("acceptance {:>2} PASS: {title}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {:>2} FAIL: {title}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
