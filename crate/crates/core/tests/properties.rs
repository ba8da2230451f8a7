use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spin_steering::*;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    let m = (m + m.transpose()) * 0.5;
    nalgebra::SymmetricEigen::new(m).eigenvalues.min()
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn variance(psi: &DVector<Complex<f64>>, op: &DMatrix<Complex<f64>>) -> f64 {
    let v = op * psi;
    let m = psi.dotc(&v).re;
    v.norm_squared() - m * m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spin_algebra_closes(n in 0usize..14) {
        let s = spin_matrices::<f64>(DickeSpace::new(n));
        let (x, y, z) = (s.x.matrix(), s.y.matrix(), s.z.matrix());
        let i = Complex::new(0.0, 1.0);
        prop_assert!((x * y - y * x - z * i).norm() < 1e-10);
        prop_assert!((y * z - z * y - x * i).norm() < 1e-10);
        let j = n as f64 / 2.0;
        let casimir = x * x + y * y + z * z;
        let expected = DMatrix::<Complex<f64>>::identity(n + 1, n + 1) * Complex::from(j * (j + 1.0));
        prop_assert!((casimir - expected).norm() < 1e-9);
    }

    #[test]
    fn split_state_is_normalized_with_binomial_weights(n in 1usize..=30, mu in 0.0f64..6.3) {
        let s = split_state(n, mu).unwrap();
        prop_assert!((s.norm_squared() - 1.0).abs() < 1e-12);
        for n_a in 0..=n {
            let w = binomial(n, n_a) / 2f64.powi(n as i32);
            prop_assert!((s.sector_weight(n_a) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_state_is_a_density_matrix(n in 1usize..=16, mu in 0.0f64..3.2) {
        let rho = reduced_state_b(&split_state(n, mu).unwrap());
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        for b in rho.blocks() {
            prop_assert!((&b.matrix - b.matrix.adjoint()).norm() < 1e-13);
            let eig = nalgebra::SymmetricEigen::new(b.matrix.clone());
            prop_assert!(eig.eigenvalues.min() > -1e-12);
        }
    }

    #[test]
    fn assemblage_reproduces_bob_state(n in 1usize..=10, mu in 0.0f64..2.0, phi in 0.0f64..6.3) {
        let s = split_state(n, mu).unwrap();
        let asm = measure_alice(&s, DirectionYZ::new(phi)).unwrap();
        prop_assert!((asm.total_probability() - 1.0).abs() < 1e-12);
        let rho = reduced_state_b(&s);
        prop_assert!(asm.mixture().max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn pure_conditional_states_have_qfi_four_variance(
        n in 1usize..=10, mu in 0.0f64..1.5, phi in 0.0f64..3.2, th in 0.0f64..3.2, az in 0.0f64..6.3,
    ) {
        let s = split_state(n, mu).unwrap();
        let dir = unit(th, az);
        let asm = measure_alice(&s, DirectionYZ::new(phi)).unwrap();
        for o in &asm.outcomes {
            let g = spin_matrices::<f64>(DickeSpace::new(o.n_b)).along(dir);
            let four_var = 4.0 * variance(&o.bob_state, g.matrix());
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
            let rho = BlockDensityMatrix::new(blocks).unwrap();
            let qfi = mixed_state_qfi(&rho, &collective_generator(&rho, dir)).unwrap();
            prop_assert!((qfi - four_var).abs() < 1e-9, "{qfi} vs {four_var}");
        }
    }

    #[test]
    fn qfi_is_bounded_by_conditional_fisher(
        n in 2usize..=10, mu in 0.0f64..1.5, phi in 0.0f64..3.2, th in 0.0f64..3.2, az in 0.0f64..6.3,
    ) {
        let s = split_state(n, mu).unwrap();
        let dir = unit(th, az);
        let rho = reduced_state_b(&s);
        let qfi = mixed_state_qfi_along(&rho, dir).unwrap();
        let asm = measure_alice(&s, DirectionYZ::new(phi)).unwrap();
        let gamma = conditional_covariance(&asm, 1).unwrap().entries;
        let v = DVector::from_row_slice(&dir);
        let fisher = 4.0 * (v.transpose() * gamma * &v)[(0, 0)];
        prop_assert!(qfi <= fisher + 1e-9, "{qfi} > {fisher}");
    }

    #[test]
    fn pointwise_matrix_chain(n in 1usize..=9, mu in 0.0f64..1.2, phi in 0.0f64..3.2) {
        let s = split_state(n, mu).unwrap();
        let rho = reduced_state_b(&s);
        let asm = measure_alice(&s, DirectionYZ::new(phi)).unwrap();
        let stats = AssemblageStats::new(&asm, 3).unwrap();
        let comm = reduced_commutator(&rho, 3).unwrap().entries;
        let fisher = stats.conditional_covariance(1).unwrap() * 4.0;
        let m: Vec<_> = (1..=3).map(|o| stats.conditional_moment(o).unwrap()).collect();
        let r: Vec<_> = (1..=3).map(|o| stats.reid_moment(o, &comm).unwrap()).collect();
        prop_assert!(min_eig(&(&fisher - &m[2])) > -1e-9);
        prop_assert!(min_eig(&(&m[2] - &m[1])) > -1e-9);
        prop_assert!(min_eig(&(&m[1] - &m[0])) > -1e-9);
        for o in 0..3 {
            prop_assert!(min_eig(&(&m[o] - &r[o])) > -1e-9);
        }
        prop_assert!(min_eig(&(&r[1] - &r[0])) > -1e-9);
        prop_assert!(min_eig(&(&r[2] - &r[1])) > -1e-9);
    }

    #[test]
    fn criterion_values_are_pi_periodic(n in 2usize..=8, mu in 0.0f64..1.0, x in 0.0f64..3.2, y in 0.0f64..3.2) {
        let a = SteeringAnalysis::new(split_state(n, mu).unwrap(), 2).unwrap();
        for (id, o) in [(CriterionId::Delta1, 1), (CriterionId::Delta2, 2), (CriterionId::Delta3, 1)] {
            let base = a.value_at(id, o, x, y).unwrap();
            let pi = std::f64::consts::PI;
            prop_assert!((a.value_at(id, o, x + pi, y).unwrap() - base).abs() < 1e-9);
            prop_assert!((a.value_at(id, o, x, y + pi).unwrap() - base).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn optimized_results_are_self_consistent(n in 1usize..=8, mu in 0.0f64..1.0) {
        let policy = AngleSearchPolicy { coarse_points: 24, refine_rounds: 2, ..Default::default() };
        let a = SteeringAnalysis::new(split_state(n, mu).unwrap(), 2).unwrap();
        for (id, o) in [(CriterionId::Delta1, 1), (CriterionId::Delta2, 1), (CriterionId::Delta2, 2), (CriterionId::Delta3, 2), (CriterionId::Delta4, 1)] {
            let r = a.evaluate(id, o, &policy).unwrap();
            prop_assert!((r.value - (r.first_term - r.second_term)).abs() < 1e-10);
            prop_assert!((r.n_opt.norm() - 1.0).abs() < 1e-12);
            if id != CriterionId::Delta4 {
                let again = a.value_at(id, o, r.phi_x, r.phi_y).unwrap();
                prop_assert!((again - r.value).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn evaluation_is_deterministic(n in 2usize..=8, mu in 0.0f64..1.0) {
        let policy = AngleSearchPolicy { coarse_points: 24, refine_rounds: 2, ..Default::default() };
        let s = split_state(n, mu).unwrap();
        let first = delta2(&s, 2, &policy).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let second = pool.install(|| delta2(&s, 2, &policy).unwrap());
        prop_assert_eq!(first, second);
    }
}
