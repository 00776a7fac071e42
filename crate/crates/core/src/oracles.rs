//! Brute-force reference computations on tiny instances (`n ≤ 2`, `m ≤ 4`).
//!
//! Nothing here touches the path follower: feasibility questions are answered
//! by refined grid search over a bounding box and scalar bisection, and
//! minimizers by a plain damped Newton method.

use nalgebra::DVector;

use crate::barrier::{ExtendedReal, Side};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{support_function, Problem, StartData};

/// `t_p` beyond this value is reported as unbounded.
pub const TP_CEILING: f64 = 1e6;

/// A problem small enough for exhaustive grid search.
#[derive(Clone, Debug)]
pub struct OracleInstance {
    problem: Problem,
    /// Half-width of the search box `[-r, r]^n`.
    pub radius: f64,
    /// Grid points per axis in each refinement pass.
    pub resolution: usize,
    /// Number of refinement passes.
    pub passes: usize,
}

impl OracleInstance {
    pub fn new(problem: Problem) -> Result<Self> {
        if problem.n() > 2 || problem.m() > 4 {
            return Err(Error::DimensionMismatch(format!(
                "oracle instances need n <= 2 and m <= 4, got n = {}, m = {}",
                problem.n(),
                problem.m()
            )));
        }
        Ok(Self {
            problem,
            radius: 10.0,
            resolution: 21,
            passes: 24,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Maximizes a concave `f` over the box. Each pass keeps two grid cells
    /// around the best point, so the bracket shrinks by `(res - 1)/4` per pass.
    fn grid_maximize(&self, mut f: impl FnMut(&DVector<f64>) -> f64) -> (DVector<f64>, f64) {
        let n = self.problem.n();
        let res = self.resolution.max(5);
        let mut center = DVector::zeros(n);
        let mut half = self.radius;
        let mut best = (center.clone(), f(&center));
        let total = res.pow(n as u32);
        for _ in 0..self.passes {
            let cell = 2.0 * half / (res - 1) as f64;
            for k in 0..total {
                let mut idx = k;
                let x = DVector::from_fn(n, |i, _| {
                    let j = idx % res;
                    idx /= res;
                    center[i] - half + cell * j as f64
                });
                let v = f(&x);
                if v > best.1 {
                    best = (x, v);
                }
            }
            center = best.0.clone();
            half = 2.0 * cell;
        }
        best
    }
}

/// Unconstrained minimizer of `Φ(Ax) + <c, x>` and the dual data it induces.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticCenter {
    pub x: DVector<f64>,
    /// `Φ'(Ax)`
    pub y: DVector<f64>,
    /// `-ξϑ - <y, Ax>`
    pub y_tau: f64,
}

/// Damped Newton on `Φ(Ax) + <c, x>` from the most interior grid point.
pub fn compute_xbar1(inst: &OracleInstance) -> Result<AnalyticCenter> {
    let p = inst.problem();
    let domain = p.domain();
    let a = p.a();
    let c = p.c();
    let (mut x, margin) = inst.grid_maximize(|x| domain.margin(&(a * x), Side::Primal));
    if !(margin > 0.0) {
        return Err(Error::NewtonDivergence(
            "no interior point in the search box".into(),
        ));
    }
    for _ in 0..500 {
        let ax = a * &x;
        let grad = a.tr_mul(&domain.gradient(&ax, Side::Primal)?) + c;
        if grad.norm() <= 1e-10 {
            let y = domain.gradient(&ax, Side::Primal)?;
            let y_tau = -p.xi() * p.theta() - y.dot(&ax);
            return Ok(AnalyticCenter { x, y, y_tau });
        }
        let hess = a.tr_mul(&(domain.hessian(&ax, Side::Primal)? * a));
        let step = linalg::solve_spd(&hess, &grad)?;
        let decrement = grad.dot(&step).max(0.0).sqrt();
        x -= step / (1.0 + decrement);
        if !x.iter().all(|v| v.is_finite()) || x.norm() > 1e12 {
            break;
        }
    }
    Err(Error::NewtonDivergence(
        "no minimizer: primal or dual is not strictly feasible".into(),
    ))
}

/// The three conditions defining the feasibility measure at `α`.
pub fn sigma_f_conditions(
    inst: &OracleInstance,
    start: &StartData,
    center: &AnalyticCenter,
    alpha: f64,
) -> [bool; 3] {
    let p = inst.problem();
    let domain = p.domain();
    let dual = &center.y - start.y0() * alpha;
    let primal = (p.a() * &center.x - start.z0() * alpha) / (1.0 - alpha);
    let gap = support_function(p, &dual) + ExtendedReal::Finite(center.y_tau - alpha * start.y_tau0());
    [
        domain.margin(&dual, Side::Conjugate) >= 0.0,
        alpha < 1.0 && domain.margin(&primal, Side::Primal) >= 0.0,
        matches!(gap, ExtendedReal::Finite(v) if v <= 0.0),
    ]
}

/// Feasibility measure: the largest `α < 1` meeting all three conditions,
/// by bisection to width `1e-8`.
pub fn oracle_sigma_f(inst: &OracleInstance, start: &StartData) -> Result<f64> {
    let center = compute_xbar1(inst)?;
    let ok = |alpha: f64| sigma_f_conditions(inst, start, &center, alpha).iter().all(|&b| b);
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest primal margin of `Ax + z⁰/t` over the search box.
pub fn best_shifted_margin(inst: &OracleInstance, z0: &DVector<f64>, t: f64) -> f64 {
    let p = inst.problem();
    let shift = z0 / t;
    inst.grid_maximize(|x| p.domain().margin(&(p.a() * x + &shift), Side::Primal))
        .1
}

/// `sup { t ≥ 1 : Ax + z⁰/t ∈ D for some x }` by bisection to width `1e-4`,
/// or `+∞` when still feasible at [`TP_CEILING`].
pub fn oracle_tp(inst: &OracleInstance, z0: &DVector<f64>) -> f64 {
    let feasible = |t: f64| best_shifted_margin(inst, z0, t) >= 0.0;
    if feasible(TP_CEILING) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (1.0, TP_CEILING);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `dist(range A, D)`, minimizing `‖Ax - P_D(Ax)‖` over the search box.
pub fn oracle_sigma_p(inst: &OracleInstance) -> f64 {
    let p = inst.problem();
    -inst.grid_maximize(|x| -p.domain().distance(&(p.a() * x))).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_large_instances() {
        let p = Problem::new(
            nalgebra::DMatrix::identity(3, 3),
            DVector::zeros(3),
            (0..3)
                .map(|i| {
                    crate::BarrierAtom::new(crate::AtomKind::HalflineLower { lower: 0.0 }, vec![i], None)
                        .unwrap()
                })
                .collect(),
            Default::default(),
        )
        .unwrap();
        assert!(OracleInstance::new(p).is_err());
    }

    #[test]
    fn grid_finds_concave_maximum() {
        let inst = OracleInstance::new(instances::inst_soc()).unwrap();
        let (x, v) = inst.grid_maximize(|x| -(x[0] - 1.234567).powi(2) - (x[1] + 3.3).abs());
        assert_abs_diff_eq!(x[0], 1.234567, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], -3.3, epsilon = 1e-9);
        assert!(v <= 0.0 && v > -1e-12);
    }

    #[test]
    fn xbar1_on_box_matches_scalar_root() {
        // minimize -ln z - ln(1 - z) + z: stationarity z² - 3z + 1 = 0.
        let inst = OracleInstance::new(instances::inst_box()).unwrap();
        let center = compute_xbar1(&inst).unwrap();
        // gradient tolerance 1e-10 over curvature ≈ 11
        assert_abs_diff_eq!(center.x[0], (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-10);
        let p = inst.problem();
        assert!((p.a().tr_mul(&center.y) + p.c()).amax() <= 1e-8);
        let ax = p.a() * &center.x;
        assert_abs_diff_eq!(
            center.y.dot(&ax) + center.y_tau,
            -p.xi() * p.theta(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn xbar1_diverges_without_minimizer() {
        let inst = OracleInstance::new(instances::inst_unb()).unwrap();
        assert!(matches!(compute_xbar1(&inst), Err(Error::NewtonDivergence(_))));
    }

    #[test]
    fn sigma_f_on_box() {
        let p = instances::inst_box();
        let s = StartData::default_for(&p);
        let inst = OracleInstance::new(p.clone()).unwrap();
        let center = compute_xbar1(&inst).unwrap();
        // the display following the definition: δ*(ȳ) + ȳ_τ ≤ -(ξ - 1)ϑ
        let lhs = support_function(&p, &center.y).finite().unwrap() + center.y_tau;
        assert!(lhs <= -(p.xi() - 1.0) * p.theta() + 1e-12);
        assert_eq!(sigma_f_conditions(&inst, &s, &center, 0.0), [true; 3]);
        let sigma = oracle_sigma_f(&inst, &s).unwrap();
        assert!(sigma > 0.0 && sigma < 1.0);
        // the feasible set in α is an interval
        let mut left = true;
        for k in 0..2000 {
            let alpha = k as f64 / 2000.0;
            let ok = sigma_f_conditions(&inst, &s, &center, alpha).iter().all(|&b| b);
            if !ok {
                left = false;
            }
            assert!(!ok || left, "condition set is not an interval at {alpha}");
        }
    }

    #[test]
    fn tp_on_infeasible_instance() {
        // x ≥ -1/t and x ≤ 2/t - 1 intersect iff t ≤ 3.
        let p = instances::inst_inf();
        let s = StartData::default_for(&p);
        let inst = OracleInstance::new(p).unwrap();
        let tp = oracle_tp(&inst, s.z0());
        assert!((tp - 3.0).abs() <= 1e-4, "{tp}");
    }

    #[test]
    fn tp_unbounded_on_feasible_instance() {
        let p = instances::inst_box();
        let s = StartData::default_for(&p);
        let inst = OracleInstance::new(p).unwrap();
        assert_eq!(oracle_tp(&inst, s.z0()), f64::INFINITY);
    }

    #[test]
    fn sigma_p_values() {
        let inf = OracleInstance::new(instances::inst_inf()).unwrap();
        assert_abs_diff_eq!(oracle_sigma_p(&inf), 0.5f64.sqrt(), epsilon = 1e-4);
        for p in [
            instances::inst_box(),
            instances::inst_unb(),
            instances::inst_soc(),
        ] {
            let inst = OracleInstance::new(p).unwrap();
            assert!(oracle_sigma_p(&inst) <= 1e-4);
        }
    }
}
