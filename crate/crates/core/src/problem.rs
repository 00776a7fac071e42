//! Problem data, starting data, iterates and the scalar functionals of the
//! central path: `μ`, proximity, support function and duality-gap bounds.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{BarrierAtom, Domain, ExtendedReal, Side};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance of the rank test on `A`.
const RANK_TOL: f64 = 1e-10;

/// Absolute constants of the path: `ξ > 1` and neighborhood radius `κ` with
/// `ξ - 1 - κ > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConstants {
    pub xi: f64,
    pub kappa: f64,
}

impl Default for SolverConstants {
    fn default() -> Self {
        Self { xi: 2.0, kappa: 0.25 }
    }
}

impl SolverConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi.is_finite() && self.kappa.is_finite()) {
            return Err(Error::BadConstants("xi and kappa must be finite".into()));
        }
        if self.xi <= 1.0 {
            return Err(Error::BadConstants(format!("xi = {} must exceed 1", self.xi)));
        }
        if self.kappa <= 0.0 {
            return Err(Error::BadConstants(format!(
                "kappa = {} must be positive",
                self.kappa
            )));
        }
        if self.xi - 1.0 - self.kappa <= 0.0 {
            return Err(Error::BadConstants(format!(
                "xi - 1 - kappa = {} must be positive",
                self.xi - 1.0 - self.kappa
            )));
        }
        Ok(())
    }

    /// Lower bound on `τ` at κ-close points with `μ ≥ 1`: `(ξ - 1 - κ) / (2ξ)`.
    pub fn tau_lower_bound(&self) -> f64 {
        (self.xi - 1.0 - self.kappa) / (2.0 * self.xi)
    }
}

/// `inf { <c, x> : Ax ∈ D }` with validated data.
#[derive(Clone, Debug)]
pub struct Problem {
    a: DMatrix<f64>,
    c: DVector<f64>,
    domain: Domain,
    constants: SolverConstants,
}

impl Problem {
    /// Validates dimensions, atom coverage, constants and `ker A = {0}`.
    pub fn new(
        a: DMatrix<f64>,
        c: DVector<f64>,
        atoms: Vec<BarrierAtom>,
        constants: SolverConstants,
    ) -> Result<Self> {
        let (m, n) = a.shape();
        if n == 0 || m == 0 {
            return Err(Error::DimensionMismatch(format!("A is {m}x{n}")));
        }
        if c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "c has length {} but A has {n} columns",
                c.len()
            )));
        }
        if !a.iter().chain(c.iter()).all(|v| v.is_finite()) {
            return Err(Error::DimensionMismatch("A and c must be finite".into()));
        }
        let domain = Domain::new(atoms, m)?;
        constants.validate()?;
        let rank = linalg::column_rank(&a, RANK_TOL);
        if rank < n {
            return Err(Error::RankDeficient { rank, n });
        }
        Ok(Self {
            a,
            c,
            domain,
            constants,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn constants(&self) -> SolverConstants {
        self.constants
    }

    /// Same data with different path constants.
    pub fn with_constants(&self, constants: SolverConstants) -> Result<Self> {
        constants.validate()?;
        Ok(Self {
            constants,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn theta(&self) -> f64 {
        self.domain.theta()
    }

    pub fn xi(&self) -> f64 {
        self.constants.xi
    }

    pub fn kappa(&self) -> f64 {
        self.constants.kappa
    }
}

/// The starting triple `z⁰ ∈ int D`, `y⁰ = Φ'(z⁰)`, `y_τ,0 = -<y⁰, z⁰> - ξϑ`.
#[derive(Clone, Debug, PartialEq)]
pub struct StartData {
    z0: DVector<f64>,
    y0: DVector<f64>,
    y_tau0: f64,
}

impl StartData {
    pub fn from_z0(problem: &Problem, z0: DVector<f64>) -> Result<Self> {
        if z0.len() != problem.m() {
            return Err(Error::DimensionMismatch(format!(
                "z0 has length {} but m = {}",
                z0.len(),
                problem.m()
            )));
        }
        let y0 = problem.domain().gradient(&z0, Side::Primal)?;
        let y_tau0 = -y0.dot(&z0) - problem.xi() * problem.theta();
        Ok(Self { z0, y0, y_tau0 })
    }

    /// Per-atom canonical interior points.
    pub fn default_for(problem: &Problem) -> Self {
        Self::from_z0(problem, problem.domain().interior_point())
            .expect("canonical interior points are interior")
    }

    pub fn z0(&self) -> &DVector<f64> {
        &self.z0
    }

    pub fn y0(&self) -> &DVector<f64> {
        &self.y0
    }

    pub fn y_tau0(&self) -> f64 {
        self.y_tau0
    }
}

/// A triple `(x, τ, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub x: DVector<f64>,
    pub tau: f64,
    pub y: DVector<f64>,
}

impl Point {
    /// `(0, 1, y⁰)`, the central-path point at `μ = 1`.
    pub fn initial(problem: &Problem, start: &StartData) -> Self {
        Self {
            x: DVector::zeros(problem.n()),
            tau: 1.0,
            y: start.y0().clone(),
        }
    }

    /// `u = Ax + z⁰/τ`.
    pub fn shifted_image(&self, problem: &Problem, start: &StartData) -> DVector<f64> {
        problem.a() * &self.x + start.z0() / self.tau
    }
}

/// A point of `Q_DD` with its cached `μ` and proximity.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub x: DVector<f64>,
    pub tau: f64,
    pub y: DVector<f64>,
    pub mu: f64,
    pub proximity: f64,
}

impl Iterate {
    pub fn new(problem: &Problem, start: &StartData, point: Point) -> Result<Self> {
        let mu = mu_of(problem, start, &point);
        let proximity = proximity(problem, start, &point)?;
        Ok(Self {
            x: point.x,
            tau: point.tau,
            y: point.y,
            mu,
            proximity,
        })
    }

    pub fn point(&self) -> Point {
        Point {
            x: self.x.clone(),
            tau: self.tau,
            y: self.y.clone(),
        }
    }
}

/// Membership measurements for `Q_DD`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QddCheck {
    pub primal_margin: f64,
    pub dual_margin: f64,
    pub tau: f64,
    /// `‖Aᵀy - Aᵀy⁰ + (τ - 1)c‖`
    pub dual_residual: f64,
    pub tolerance: f64,
}

impl QddCheck {
    pub fn is_member(&self) -> bool {
        self.primal_margin > 0.0
            && self.dual_margin > 0.0
            && self.tau > 0.0
            && self.dual_residual <= self.tolerance
    }
}

/// Tolerance on the linear equation of `Q_DD`: `1e-9·(1 + ‖c‖)`.
pub fn dual_equality_tolerance(problem: &Problem) -> f64 {
    1e-9 * (1.0 + problem.c().norm())
}

pub fn dual_residual(problem: &Problem, start: &StartData, point: &Point) -> DVector<f64> {
    problem.a().tr_mul(&(&point.y - start.y0())) + problem.c() * (point.tau - 1.0)
}

pub fn qdd_check(problem: &Problem, start: &StartData, point: &Point) -> QddCheck {
    let primal_margin = if point.tau > 0.0 {
        problem
            .domain()
            .margin(&point.shifted_image(problem, start), Side::Primal)
    } else {
        f64::NEG_INFINITY
    };
    QddCheck {
        primal_margin,
        dual_margin: problem.domain().margin(&point.y, Side::Conjugate),
        tau: point.tau,
        dual_residual: dual_residual(problem, start, point).norm(),
        tolerance: dual_equality_tolerance(problem),
    }
}

/// `μ(x, τ, y) = -(1/ξϑ)[<y, z⁰> + τ(y_τ,0 + <Aᵀy⁰ + c, x>)]`.
pub fn mu_of(problem: &Problem, start: &StartData, point: &Point) -> f64 {
    let xt = problem.xi() * problem.theta();
    let aty0c = problem.a().tr_mul(start.y0()) + problem.c();
    -(point.y.dot(start.z0()) + point.tau * (start.y_tau0() + aty0c.dot(&point.x))) / xt
}

/// The three algebraic forms of `μ`; they agree on `Q_DD`.
pub fn mu_forms(problem: &Problem, start: &StartData, point: &Point) -> [f64; 3] {
    let xt = problem.xi() * problem.theta();
    let tau = point.tau;
    let cx = problem.c().dot(&point.x);
    let u = point.shifted_image(problem, start);
    let first = tau / xt * (-start.y_tau0() - tau * cx - point.y.dot(&u));
    let ax = problem.a() * &point.x;
    let second = -(point.y.dot(start.z0()) + tau * (start.y_tau0() + point.y.dot(&ax)) + tau * tau * cx) / xt;
    [first, second, mu_of(problem, start, point)]
}

/// `‖Ax + z⁰/τ - Φ*'((τ/μ)y)‖` in the norm `[Φ*''((τ/μ)y)]⁻¹`.
pub fn proximity(problem: &Problem, start: &StartData, point: &Point) -> Result<f64> {
    if point.tau <= 0.0 {
        return Err(Error::DomainViolation(format!(
            "tau = {} is not positive",
            point.tau
        )));
    }
    let mu = mu_of(problem, start, point);
    if !(mu > 0.0) {
        return Err(Error::DomainViolation(format!("mu = {mu} is not positive")));
    }
    let scaled = &point.y * (point.tau / mu);
    let domain = problem.domain();
    let target = domain.gradient(&scaled, Side::Conjugate)?;
    let diff = point.shifted_image(problem, start) - target;
    domain.inverse_hessian_norm(&scaled, &diff, Side::Conjugate)
}

/// `δ*(y | D)`.
pub fn support_function(problem: &Problem, y: &DVector<f64>) -> ExtendedReal {
    problem.domain().support(y)
}

/// The two sides of the duality-gap sandwich at a κ-close point, and the
/// actual value `<c, x> + δ*(y|D)/τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapBounds {
    pub lower: f64,
    pub upper: f64,
    pub actual: ExtendedReal,
}

impl GapBounds {
    /// Amount by which `actual` leaves `[lower, upper]` (zero inside).
    pub fn violation(&self) -> f64 {
        match self.actual {
            ExtendedReal::Finite(v) => (self.lower - v).max(v - self.upper).max(0.0),
            ExtendedReal::PlusInfinity => f64::INFINITY,
        }
    }
}

pub fn gap_bounds(problem: &Problem, start: &StartData, point: &Point) -> GapBounds {
    let mu = mu_of(problem, start, point);
    let tau = point.tau;
    let theta = problem.theta();
    let tau2 = tau * tau;
    let center = -(start.y_tau0() / tau + problem.xi() * mu * theta / tau2);
    let spread = problem.kappa() * mu * theta.sqrt() / tau2;
    let actual = ExtendedReal::Finite(problem.c().dot(&point.x))
        + support_function(problem, &point.y).scale(1.0 / tau);
    GapBounds {
        lower: center - spread,
        upper: center + spread + mu * theta / tau2,
        actual,
    }
}
