use slm_core::nulling::{baseline_objective, ZoneLayout};
use slm_core::*;

fn small() -> (Scenario, PolarPoint, ZoneModel) {
    let cfg = ArrayConfig::new(8, 24, 0.0278, 0.0278, 5.8e9).unwrap();
    let feed = PolarPoint::horizontal_deg(0.4, 0.0).unwrap().to_cartesian();
    let center = PolarPoint::horizontal_deg(0.8, 0.0).unwrap();
    let zones = ZoneModel::around(center, [0.2, 0.2, 8f64.to_radians(), 8f64.to_radians()], &ZoneLayout::standard())
        .unwrap();
    (Scenario::new(cfg, feed).unwrap(), center, zones)
}

fn budget(generations: usize) -> SnmConfig {
    let mut cfg = SnmConfig::default();
    cfg.ga.generations = generations;
    cfg.ga.population = 16;
    cfg
}

fn run(scn: &Scenario, center: &PolarPoint, zones: &ZoneModel, cfg: &SnmConfig, seed: u64) -> SnmSolution {
    match solve_snm(scn, center, zones, cfg, seed) {
        Ok(s) => s,
        Err(Error::Infeasible(s)) => *s,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn one_generation_budget() {
    let (scn, center, zones) = small();
    let sol = run(&scn, &center, &zones, &budget(1), 3);
    assert_eq!(sol.generations, 1);
    assert_eq!(sol.trace.len(), 1);
    assert_eq!(sol.matrix, null_matrix(&scn, &sol.spec).unwrap());
    assert!(sol.depth.is_finite());
}

#[test]
fn seeded_runs_repeat_and_improve_on_baseline() {
    let (scn, center, zones) = small();
    let a = run(&scn, &center, &zones, &budget(15), 9);
    let b = run(&scn, &center, &zones, &budget(15), 9);
    assert_eq!(a, b);
    assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
    if a.feasible {
        let checked = snm_constraints(&scn, &a.matrix, &a.zones).unwrap();
        assert!(checked.satisfied());
        assert!(a.depth <= baseline_objective(&scn, &zones).unwrap() + 1e-12);
    }
}

#[test]
fn far_field_center_rejected() {
    let (scn, _, zones) = small();
    let far = PolarPoint::horizontal_deg(50.0, 0.0).unwrap();
    assert!(matches!(
        solve_snm(&scn, &far, &zones, &budget(1), 0),
        Err(Error::NotNearField { .. })
    ));
}

#[test]
fn infeasible_result_carries_best_candidate() {
    // A single element has no interference pattern: its field falls off as
    // 1/r, so front and back focal peaks always differ by more than 10%.
    let scn = Scenario::new(
        ArrayConfig::new(1, 1, 1.0, 1.0, 5.8e9).unwrap(),
        PolarPoint::horizontal_deg(0.3, 0.0).unwrap().to_cartesian(),
    )
    .unwrap();
    let center = PolarPoint::horizontal_deg(1.0, 0.0).unwrap();
    let zones =
        ZoneModel::around(center, [0.2, 0.2, 8f64.to_radians(), 8f64.to_radians()], &ZoneLayout::standard()).unwrap();
    match solve_snm(&scn, &center, &zones, &budget(3), 1) {
        Err(Error::Infeasible(sol)) => {
            assert!(!sol.feasible);
            assert!(!sol.feasibility.satisfied());
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn fixed_spec_matrix_is_stable() {
    let cfg = ArrayConfig::new(14, 56, 0.0278, 0.0278, 5.8e9).unwrap();
    let scn = Scenario::new(cfg, PolarPoint::horizontal_deg(0.8, 0.0).unwrap().to_cartesian()).unwrap();
    let bob = PolarPoint::horizontal_deg(1.6, 0.0).unwrap();
    let offsets = [0.3, 0.3, 6f64.to_radians(), 6f64.to_radians()];
    let m = null_matrix(&scn, &NullSpec::equal_weights(bob, offsets).unwrap()).unwrap();
    assert_eq!(m.fingerprint(), "5c264583c90dd710077f53daa9929b3bc0c93bc0c841dec0223c5e1965c5340d");
    let zones = ZoneModel::around(bob, offsets, &ZoneLayout::standard()).unwrap();
    let depth = null_depth(&scn, &m, &zones).unwrap();
    assert!((depth.objective - 3.3657317295654336).abs() < 1e-12);
    assert_eq!(depth.objective, baseline_objective(&scn, &zones).unwrap());
}
