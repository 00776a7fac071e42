#![allow(dead_code)]

use ddsolve_core::instances;
use ddsolve_core::{
    follow, AtomKind, BarrierAtom, FollowOutcome, FollowerOptions, Iterate, Problem, StartData,
};
use nalgebra::{DMatrix, DVector};

/// `min x1 + x2` over `x1 ∈ [0, 1]`, `x2 ≥ -1`. Both sides strictly feasible.
pub fn box_and_halfline() -> Problem {
    Problem::new(
        DMatrix::identity(2, 2),
        DVector::from_row_slice(&[1.0, 1.0]),
        vec![
            BarrierAtom::new(
                AtomKind::Box {
                    lower: 0.0,
                    upper: 1.0,
                },
                vec![0],
                None,
            )
            .unwrap(),
            BarrierAtom::new(AtomKind::HalflineLower { lower: -1.0 }, vec![1], None).unwrap(),
        ],
        Default::default(),
    )
    .unwrap()
}

/// `min y` over `y ≥ ‖(x, 1)‖`. Optimum 1 at `x = 0`, dual strictly feasible.
pub fn soc_attained() -> Problem {
    Problem::new(
        DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0]),
        DVector::from_row_slice(&[0.0, 1.0]),
        vec![BarrierAtom::new(AtomKind::Soc, vec![0, 1, 2], Some(vec![0.0, 0.0, 1.0])).unwrap()],
        Default::default(),
    )
    .unwrap()
}

/// Tolerance used for each reference instance, matching the end-to-end runs.
pub fn eps_for(name: &str) -> f64 {
    if name == "inst_soc" {
        1e-4
    } else {
        1e-6
    }
}

pub fn named_instances() -> Vec<(&'static str, Problem)> {
    instances::NAMES.into_iter().zip(instances::all()).collect()
}

pub struct Run {
    pub start: StartData,
    pub iterates: Vec<Iterate>,
    pub outcome: FollowOutcome,
}

pub fn run_with(problem: &Problem, options: &FollowerOptions) -> Run {
    let start = StartData::default_for(problem);
    let mut iterates = Vec::new();
    let outcome = follow(problem, &start, options, &mut |acc| {
        iterates.push(acc.iterate.clone())
    });
    Run {
        start,
        iterates,
        outcome,
    }
}

pub fn run(problem: &Problem, eps: f64) -> Run {
    run_with(
        problem,
        &FollowerOptions {
            eps,
            ..FollowerOptions::default()
        },
    )
}
