//! Small reference instances with known status.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{AtomKind, BarrierAtom};
use crate::problem::{Problem, SolverConstants};

fn build(rows: usize, cols: usize, a: &[f64], c: &[f64], atoms: Vec<BarrierAtom>) -> Problem {
    Problem::new(
        DMatrix::from_row_slice(rows, cols, a),
        DVector::from_row_slice(c),
        atoms,
        SolverConstants::default(),
    )
    .expect("reference instance is valid")
}

fn atom(kind: AtomKind, coords: Vec<usize>, offset: Option<Vec<f64>>) -> BarrierAtom {
    BarrierAtom::new(kind, coords, offset).expect("reference atom is valid")
}

/// `min x` over `x ∈ [0, 1]`. Optimum 0, attained, with dual `ȳ = -1`.
pub fn inst_box() -> Problem {
    build(
        1,
        1,
        &[1.0],
        &[1.0],
        vec![atom(
            AtomKind::Box {
                lower: 0.0,
                upper: 1.0,
            },
            vec![0],
            None,
        )],
    )
}

/// `x ≥ 0` and `-x ≥ 1`: infeasible, with certificate direction `(-1, -1)`.
pub fn inst_inf() -> Problem {
    build(
        2,
        1,
        &[1.0, -1.0],
        &[1.0],
        vec![
            atom(AtomKind::HalflineLower { lower: 0.0 }, vec![0], None),
            atom(AtomKind::HalflineLower { lower: 1.0 }, vec![1], None),
        ],
    )
}

/// `min -x` over `x ≥ 0`: unbounded.
pub fn inst_unb() -> Problem {
    build(
        1,
        1,
        &[1.0],
        &[-1.0],
        vec![atom(AtomKind::HalflineLower { lower: 0.0 }, vec![0], None)],
    )
}

/// `min y - x` over `y ≥ ‖(x, 1)‖`. The infimum 0 is not attained and the
/// only dual solution lies on the boundary of `D*`.
pub fn inst_soc() -> Problem {
    build(
        3,
        2,
        &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        &[-1.0, 1.0],
        vec![atom(AtomKind::Soc, vec![0, 1, 2], Some(vec![0.0, 0.0, 1.0]))],
    )
}

/// All reference instances in a fixed order.
pub fn all() -> Vec<Problem> {
    vec![inst_box(), inst_inf(), inst_unb(), inst_soc()]
}

/// Names matching [`all`].
pub const NAMES: [&str; 4] = ["inst_box", "inst_inf", "inst_unb", "inst_soc"];
