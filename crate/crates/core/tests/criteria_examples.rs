use spin_steering::*;

fn policy() -> AngleSearchPolicy {
    AngleSearchPolicy::default()
}

#[test]
fn gaussian_regime_detects_steering_with_every_criterion() {
    let a = SteeringAnalysis::new(split_state::<f64>(20, 0.02).unwrap(), 2).unwrap();
    let p = policy();
    for (id, o) in [
        (CriterionId::Delta1, 1),
        (CriterionId::Delta2, 1),
        (CriterionId::Delta2, 2),
        (CriterionId::Delta3, 1),
        (CriterionId::Delta4, 1),
    ] {
        let r = a.evaluate(id, o, &p).unwrap();
        assert!(r.value > 0.0, "{id}:{o} = {}", r.value);
    }
}

#[test]
fn reid_never_exceeds_conditional_squeezing() {
    let a = SteeringAnalysis::new(split_state::<f64>(8, 0.3).unwrap(), 2).unwrap();
    for order in [1, 2] {
        let d2 = a.delta2(order, &policy()).unwrap().value;
        let d3 = a.delta3(order, &policy()).unwrap().value;
        assert!(d3 <= d2 + 1e-9);
    }
}

#[test]
fn first_terms_follow_the_moment_chain() {
    let s = split_state::<f64>(20, 0.25).unwrap();
    let ft = first_terms(&s, &[1, 2], &policy()).unwrap();
    let fisher = ft.fisher.value;
    let m1 = ft.moment[0].1.value;
    let m2 = ft.moment[1].1.value;
    let r1 = ft.reid[0].1.value;
    assert!(fisher + 1e-9 >= m2, "{fisher} < {m2}");
    assert!(m2 + 1e-9 >= m1);
    assert!(m1 + 1e-9 >= r1);
}

#[test]
fn linear_reid_stays_below_optimal_reid_when_over_squeezed() {
    let s = split_state::<f64>(20, 0.6).unwrap();
    let d3 = delta3(&s, 1, &policy()).unwrap().value;
    let d4 = delta4(&s).unwrap().value;
    assert!(d4 <= d3 + 1e-9);
}

#[test]
fn hierarchy_on_an_eight_atom_grid() {
    for i in 0..20 {
        let mu = i as f64 / 19.0;
        let report = hierarchy_check(&split_state::<f64>(8, mu).unwrap(), &[1, 2], &policy()).unwrap();
        assert!(report.all_passed(), "mu={mu}: {:?}", report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }
}

#[test]
fn four_atoms_near_product_state() {
    let report = hierarchy_check(&split_state::<f64>(4, 0.05).unwrap(), &[1, 2], &policy()).unwrap();
    assert!(report.all_passed());
    let d1 = report.value(CriterionId::Delta1, 1).unwrap();
    let d22 = report.value(CriterionId::Delta2, 2).unwrap();
    assert!((d1 - d22).abs() <= 1e-6 * d1.abs().max(1.0));
}

#[test]
fn twelve_atom_product_state_is_unsteerable() {
    let report = hierarchy_check(&split_state::<f64>(12, 0.0).unwrap(), &[1, 2], &policy()).unwrap();
    for r in &report.results {
        assert!(r.value.abs() < 1e-9, "{}:{} = {}", r.criterion, r.order, r.value);
    }
}

#[test]
fn single_precision_pipeline_runs() {
    let s = split_state::<f32>(6, 0.3).unwrap();
    let p = AngleSearchPolicy {
        coarse_points: 24,
        ..Default::default()
    };
    let d1 = delta1(&s, &p).unwrap().value as f64;
    let reference = delta1(&split_state::<f64>(6, 0.3).unwrap(), &p).unwrap().value;
    assert!((d1 - reference).abs() < 1e-3 * reference.abs().max(1.0));
}
