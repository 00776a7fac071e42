//! Deterministic benchmark fixtures.

use ddsolve_core::{AtomKind, BarrierAtom, Problem, SolverConstants};
use nalgebra::{DMatrix, DVector};

/// Bounded LP: `min <c, x>` subject to `x ∈ [-1, 1]^n` and `Bx ∈ [-2, 2]^n`
/// for a fixed dense `B`. Strictly feasible on both sides.
pub fn box_lp(n: usize) -> Problem {
    let m = 2 * n;
    let a = DMatrix::from_fn(m, n, |i, j| {
        if i < n {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            ((i * 7 + j * 13) as f64).sin() / n as f64
        }
    });
    let c = DVector::from_fn(n, |j, _| ((j * 3 + 1) as f64).cos());
    let atoms = (0..m)
        .map(|i| {
            let half = if i < n { 1.0 } else { 2.0 };
            BarrierAtom::new(
                AtomKind::Box {
                    lower: -half,
                    upper: half,
                },
                vec![i],
                None,
            )
            .unwrap()
        })
        .collect();
    Problem::new(a, c, atoms, SolverConstants::default()).unwrap()
}

/// `k` independent blocks `min t - s/2` subject to `t ≥ ‖(s, 1)‖` and
/// `s ∈ [-5, 5]`. Optimum attained at `s = 1/√3` in every block.
pub fn soc_blocks(k: usize) -> Problem {
    let (n, m) = (2 * k, 4 * k);
    let mut a = DMatrix::zeros(m, n);
    let mut atoms = Vec::with_capacity(2 * k);
    for b in 0..k {
        let (t, s, row) = (2 * b, 2 * b + 1, 4 * b);
        a[(row, t)] = 1.0;
        a[(row + 1, s)] = 1.0;
        a[(row + 3, s)] = 1.0;
        atoms.push(
            BarrierAtom::new(
                AtomKind::Soc,
                vec![row, row + 1, row + 2],
                Some(vec![0.0, 0.0, 1.0]),
            )
            .unwrap(),
        );
        atoms.push(
            BarrierAtom::new(
                AtomKind::Box {
                    lower: -5.0,
                    upper: 5.0,
                },
                vec![row + 3],
                None,
            )
            .unwrap(),
        );
    }
    let c = DVector::from_fn(n, |j, _| if j % 2 == 0 { 1.0 } else { -0.5 });
    Problem::new(a, c, atoms, SolverConstants::default()).unwrap()
}
