mod common;

use common::{box_and_halfline, soc_attained};
use ddsolve_core::instances;
use ddsolve_core::oracles::{oracle_sigma_p, oracle_tp, OracleInstance};
use ddsolve_core::StartData;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};

/// Grid tolerance of the distance oracle.
const GRID_TOL: f64 = 1e-4;

fn check_infeasibility_bound(inst: &OracleInstance, z0: &DVector<f64>) {
    let sigma_p = oracle_sigma_p(inst);
    let tp = oracle_tp(inst, z0);
    let bound = z0.norm() / tp;
    assert!(
        sigma_p <= bound + GRID_TOL,
        "sigma_p {sigma_p} > |z0|/t_p = {bound}"
    );
}

#[test]
fn infeasibility_measure_bounded_at_default_start() {
    let problems = [
        instances::inst_box(),
        instances::inst_inf(),
        instances::inst_unb(),
        instances::inst_soc(),
        box_and_halfline(),
        soc_attained(),
    ];
    for problem in problems {
        let start = StartData::default_for(&problem);
        check_infeasibility_bound(&OracleInstance::new(problem).unwrap(), start.z0());
    }
}

#[test]
fn infeasibility_measure_bounded_for_random_starts() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let inst = OracleInstance::new(instances::inst_inf()).unwrap();
    for _ in 0..20 {
        // z⁰ ∈ int D = {z1 > 0, z2 > 1}
        let z0 = DVector::from_row_slice(&[rng.gen_range(0.05..5.0), 1.0 + rng.gen_range(0.05..5.0)]);
        check_infeasibility_bound(&inst, &z0);
    }
}

#[test]
fn infeasibility_distance_matches_analytic_value() {
    let inst = OracleInstance::new(instances::inst_inf()).unwrap();
    assert!((oracle_sigma_p(&inst) - 0.5f64.sqrt()).abs() <= 1e-3);
}

#[test]
fn shifted_feasibility_threshold_is_analytic() {
    // x ≥ -a/t and x ≤ b/t - 1 intersect iff t ≤ a + b, for z⁰ = (a, b)
    let inst = OracleInstance::new(instances::inst_inf()).unwrap();
    for (a, b) in [(1.0, 2.0), (0.5, 1.5), (2.0, 3.0)] {
        let tp = oracle_tp(&inst, &DVector::from_row_slice(&[a, b]));
        assert!((tp - (a + b)).abs() <= 1e-4, "t_p({a}, {b}) = {tp}");
    }
}
