//! Stop parameters, status detection, strict certificate extraction and
//! solver-independent certificate verification.

use nalgebra::{DMatrix, DVector};

use crate::barrier::{ExtendedReal, Side};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{mu_of, support_function, Iterate, Point, Problem, StartData};

/// Fraction of `τξϑ` that the projected infeasibility certificate must reach
/// in `<w, z⁰> ≤ -0.9τξϑ`.
pub const INFEASIBILITY_PROJECTION_FACTOR: f64 = 0.9;

/// `‖Aᵀy‖∞` bound for an exact infeasibility certificate.
pub const STRICT_KERNEL_TOL: f64 = 1e-8;

/// Kernel residual allowed on a normalized projected certificate.
pub const PROJECTED_KERNEL_TOL: f64 = 1e-10;

/// Scaled duality gap, primal and dual infeasibility at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopParams {
    pub gap: f64,
    pub p_feas: f64,
    pub d_feas: f64,
}

impl StopParams {
    pub fn max(&self) -> f64 {
        self.gap.max(self.p_feas).max(self.d_feas)
    }
}

pub fn stop_params(problem: &Problem, start: &StartData, point: &Point) -> StopParams {
    let tau = point.tau;
    let cx = problem.c().dot(&point.x);
    let gap = match support_function(problem, &point.y) {
        ExtendedReal::Finite(s) => {
            let dual = s / tau;
            (cx + dual).abs() / (1.0 + cx.abs() + dual.abs())
        }
        ExtendedReal::PlusInfinity => 1.0,
    };
    let c = problem.c();
    let d_feas = (problem.a().tr_mul(&point.y) / tau + c).norm() / (1.0 + c.norm());
    StopParams {
        gap,
        p_feas: start.z0().norm() / tau,
        d_feas,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    EpsSolution,
    InfeasibilityCertificate,
    UnboundednessCertificate,
    IllConditioned,
    IterationLimit,
    NumericalFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::EpsSolution => "EpsSolution",
            Status::InfeasibilityCertificate => "InfeasibilityCertificate",
            Status::UnboundednessCertificate => "UnboundednessCertificate",
            Status::IllConditioned => "IllConditioned",
            Status::IterationLimit => "IterationLimit",
            Status::NumericalFailure => "NumericalFailure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Certificate payloads. `strict` marks exact certificates obtained by
/// projection; otherwise the payload is an ε-certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// `y ∈ D*` with `Aᵀy ≈ 0` and `δ*(y|D) < 0`.
    Infeasibility { y: DVector<f64>, strict: bool, eps: f64 },
    /// `x` with `<c, x> ≤ -1/ε`. A strict certificate has `Ax ∈ int D`; an
    /// ε-certificate has `Ax + z⁰/τ ∈ int D`.
    Unboundedness {
        x: DVector<f64>,
        tau: f64,
        strict: bool,
        eps: f64,
    },
    /// ε-solution `(x, y/τ)`.
    OptimalPair {
        x: DVector<f64>,
        y_scaled: DVector<f64>,
        tau: f64,
        eps: f64,
    },
    /// ε-feasible pair reported at the `μ` cap, with the estimate `-δ*(y|D)/τ`.
    FeasiblePair {
        x: DVector<f64>,
        y_scaled: DVector<f64>,
        tau: f64,
        objective_estimate: f64,
    },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Infeasibility { .. } => "infeasibility",
            Certificate::Unboundedness { .. } => "unboundedness",
            Certificate::OptimalPair { .. } => "optimal-pair",
            Certificate::FeasiblePair { .. } => "feasible-pair",
        }
    }

    pub fn is_strict(&self) -> bool {
        match self {
            Certificate::Infeasibility { strict, .. } | Certificate::Unboundedness { strict, .. } => *strict,
            _ => false,
        }
    }
}

/// One named check of a verification.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub kind: &'static str,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &'static str, value: f64, passed: bool) {
        self.checks.push(Check { name, value, passed });
    }
}

fn support_value(s: ExtendedReal) -> f64 {
    s.finite().unwrap_or(f64::INFINITY)
}

/// Checks a certificate with the problem data and barrier evaluators only.
pub fn verify_certificate(problem: &Problem, start: &StartData, cert: &Certificate) -> VerificationReport {
    let domain = problem.domain();
    let mut report = VerificationReport {
        kind: cert.kind(),
        checks: Vec::new(),
    };
    match cert {
        Certificate::Infeasibility { y, strict, eps } => {
            let aty = problem.a().tr_mul(y);
            let dual_margin = domain.margin(y, Side::Conjugate);
            let support = support_value(support_function(problem, y));
            if *strict {
                let kernel = aty.amax();
                report.push("kernel_residual_inf", kernel, kernel <= STRICT_KERNEL_TOL);
                report.push("dual_margin", dual_margin, dual_margin >= 0.0);
                report.push("support", support, support <= -1.0 + 1e-8);
            } else {
                let kernel = aty.norm();
                report.push("kernel_residual", kernel, kernel <= *eps);
                report.push("dual_margin", dual_margin, dual_margin >= 0.0);
                report.push("support", support, support < 0.0);
            }
        }
        Certificate::Unboundedness { x, tau, strict, eps } => {
            let objective = problem.c().dot(x);
            let ax = problem.a() * x;
            if *strict {
                let margin = domain.margin(&ax, Side::Primal);
                report.push("primal_margin", margin, margin > 0.0);
            } else {
                let margin = domain.margin(&(ax + start.z0() / *tau), Side::Primal);
                report.push("perturbed_primal_margin", margin, margin > 0.0 && *tau > 0.0);
            }
            report.push("objective", objective, objective <= -1.0 / eps);
        }
        Certificate::OptimalPair {
            x,
            y_scaled,
            tau,
            eps,
        } => {
            let point = Point {
                x: x.clone(),
                tau: *tau,
                y: y_scaled * *tau,
            };
            let sp = stop_params(problem, start, &point);
            report.push("gap", sp.gap, sp.gap <= *eps);
            report.push("p_feas", sp.p_feas, sp.p_feas <= *eps);
            report.push("d_feas", sp.d_feas, sp.d_feas <= *eps);
        }
        Certificate::FeasiblePair {
            x,
            y_scaled,
            tau,
            objective_estimate,
        } => {
            let u = problem.a() * x + start.z0() / *tau;
            let primal = domain.margin(&u, Side::Primal);
            let dual = domain.margin(y_scaled, Side::Conjugate);
            let support = support_value(support_function(problem, y_scaled));
            report.push("perturbed_primal_margin", primal, primal > 0.0);
            report.push("dual_margin", dual, dual > 0.0);
            report.push(
                "objective_estimate",
                *objective_estimate,
                (objective_estimate + support).abs() <= 1e-9 * (1.0 + support.abs()),
            );
        }
    }
    report
}

/// Run measurements attached to every report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    pub mu: f64,
    pub tau: f64,
    pub proximity: f64,
    pub gap: f64,
    pub p_feas: f64,
    pub d_feas: f64,
    /// Least-squares slope of `ln μ` against the iteration index.
    pub log_mu_slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatusReport {
    pub status: Status,
    pub x: Option<DVector<f64>>,
    /// `y/τ`
    pub y_scaled: Option<DVector<f64>>,
    pub certificate: Option<Certificate>,
    pub objective_estimate: Option<f64>,
    pub diagnostics: Diagnostics,
    pub verification: Option<VerificationReport>,
    pub message: Option<String>,
}

impl StatusReport {
    /// A report without payload, used for iteration limits and failures.
    pub fn bare(status: Status, diagnostics: Diagnostics, message: Option<String>) -> Self {
        Self {
            status,
            x: None,
            y_scaled: None,
            certificate: None,
            objective_estimate: None,
            diagnostics,
            verification: None,
            message,
        }
    }

    pub fn verified(&self) -> bool {
        self.verification.as_ref().is_none_or(|v| v.passed())
    }
}

pub(crate) fn diagnostics_at(problem: &Problem, start: &StartData, it: &Iterate) -> Diagnostics {
    let sp = stop_params(problem, start, &it.point());
    Diagnostics {
        iterations: 0,
        mu: it.mu,
        tau: it.tau,
        proximity: it.proximity,
        gap: sp.gap,
        p_feas: sp.p_feas,
        d_feas: sp.d_feas,
        log_mu_slope: 0.0,
    }
}

fn report_with(
    problem: &Problem,
    start: &StartData,
    it: &Iterate,
    status: Status,
    cert: Certificate,
    objective_estimate: Option<f64>,
) -> StatusReport {
    let verification = verify_certificate(problem, start, &cert);
    StatusReport {
        status,
        x: Some(it.x.clone()),
        y_scaled: Some(&it.y / it.tau),
        certificate: Some(cert),
        objective_estimate,
        diagnostics: diagnostics_at(problem, start, it),
        verification: Some(verification),
        message: None,
    }
}

/// The `μ` level at which an instance is declared ill-conditioned.
pub fn mu_cap(problem: &Problem, eps: f64) -> f64 {
    1.0 / (problem.theta() * eps.powi(3))
}

/// Status checks in precedence order: ε-solution, infeasibility,
/// unboundedness, `μ` cap.
pub fn check_status(problem: &Problem, start: &StartData, it: &Iterate, eps: f64) -> Option<StatusReport> {
    check_status_with_cap(problem, start, it, eps, mu_cap(problem, eps))
}

pub(crate) fn check_status_with_cap(
    problem: &Problem,
    start: &StartData,
    it: &Iterate,
    eps: f64,
    cap: f64,
) -> Option<StatusReport> {
    let point = it.point();
    let sp = stop_params(problem, start, &point);
    let cx = problem.c().dot(&it.x);
    let support = support_function(problem, &it.y);

    if sp.max() <= eps {
        let cert = Certificate::OptimalPair {
            x: it.x.clone(),
            y_scaled: &it.y / it.tau,
            tau: it.tau,
            eps,
        };
        return Some(report_with(
            problem,
            start,
            it,
            Status::EpsSolution,
            cert,
            Some(cx),
        ));
    }

    let ratio = it.tau / it.mu;
    let kernel = ratio * problem.a().tr_mul(&it.y).norm();
    if let ExtendedReal::Finite(s) = support {
        if kernel <= eps && ratio * s < 0.0 {
            let cert = Certificate::Infeasibility {
                y: &it.y * ratio,
                strict: false,
                eps,
            };
            return Some(report_with(
                problem,
                start,
                it,
                Status::InfeasibilityCertificate,
                cert,
                None,
            ));
        }
    }

    if cx <= -1.0 / eps {
        let cert = Certificate::Unboundedness {
            x: it.x.clone(),
            tau: it.tau,
            strict: false,
            eps,
        };
        return Some(report_with(
            problem,
            start,
            it,
            Status::UnboundednessCertificate,
            cert,
            Some(cx),
        ));
    }

    if it.mu >= cap {
        let estimate = -support_value(support) / it.tau;
        let cert = Certificate::FeasiblePair {
            x: it.x.clone(),
            y_scaled: &it.y / it.tau,
            tau: it.tau,
            objective_estimate: estimate,
        };
        return Some(report_with(
            problem,
            start,
            it,
            Status::IllConditioned,
            cert,
            Some(estimate),
        ));
    }
    None
}

/// Replaces the weak certificate of `report` by a strict one when the
/// projection succeeds.
pub(crate) fn upgrade_to_strict(
    problem: &Problem,
    start: &StartData,
    it: &Iterate,
    report: &StatusReport,
    eps: f64,
) -> Result<StatusReport> {
    let point = it.point();
    let cert = match report.status {
        Status::InfeasibilityCertificate => strict_infeasibility_certificate(problem, start, &point)?,
        Status::UnboundednessCertificate => strict_unboundedness_certificate(problem, start, &point, eps)?,
        _ => return Ok(report.clone()),
    };
    let verification = verify_certificate(problem, start, &cert);
    if !verification.passed() {
        return Err(Error::ProjectionOutsideCone(format!(
            "strict {} certificate failed verification",
            cert.kind()
        )));
    }
    let objective_estimate = match &cert {
        Certificate::Unboundedness { x, .. } => Some(problem.c().dot(x)),
        _ => None,
    };
    Ok(StatusReport {
        certificate: Some(cert),
        objective_estimate,
        verification: Some(verification),
        ..report.clone()
    })
}

/// Minimizes `‖w - w0‖` in the metric `H` subject to `Bᵀw = b`.
fn metric_projection(
    h_inv: &DMatrix<f64>,
    w0: &DVector<f64>,
    b_mat: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let hb = h_inv * b_mat;
    let gram = b_mat.tr_mul(&hb);
    let mut w = w0.clone();
    // second pass removes most of the rounding left by the first
    for _ in 0..2 {
        let resid = b_mat.tr_mul(&w) - b;
        w -= &hb * linalg::solve_spd(&gram, &resid)?;
    }
    Ok(w)
}

/// Projects `(τ/μ)y` onto `{w : Aᵀw = 0, <w, z⁰> ≤ -0.9τξϑ}` in the metric
/// `Φ*''((τ/μ)y)`, then rescales to `δ*(w|D) = -1`.
pub fn strict_infeasibility_certificate(
    problem: &Problem,
    start: &StartData,
    point: &Point,
) -> Result<Certificate> {
    let mu = mu_of(problem, start, point);
    if !(mu > 0.0) || !(point.tau > 0.0) {
        return Err(Error::DomainViolation(format!("mu = {mu}, tau = {}", point.tau)));
    }
    let scaled = &point.y * (point.tau / mu);
    let domain = problem.domain();
    let h = domain.hessian(&scaled, Side::Conjugate)?;
    let m = problem.m();
    let degenerate = |e: Error| Error::ProjectionOutsideCone(format!("projection metric is degenerate: {e}"));
    let h_inv = linalg::solve_spd_matrix(&h, &DMatrix::identity(m, m)).map_err(degenerate)?;
    let a = problem.a();
    let z0 = start.z0();
    let bound = -INFEASIBILITY_PROJECTION_FACTOR * point.tau * problem.xi() * problem.theta();

    let mut w = metric_projection(&h_inv, &scaled, a, &DVector::zeros(problem.n())).map_err(degenerate)?;
    if w.dot(z0) > bound {
        let mut b_mat = DMatrix::zeros(m, problem.n() + 1);
        b_mat.columns_mut(0, problem.n()).copy_from(a);
        b_mat.set_column(problem.n(), z0);
        let mut b = DVector::zeros(problem.n() + 1);
        b[problem.n()] = bound;
        w = metric_projection(&h_inv, &scaled, &b_mat, &b)
            .map_err(|_| Error::ProjectionOutsideCone("projection set is empty".into()))?;
    }

    let margin = domain.margin(&w, Side::Conjugate);
    if !(margin > 0.0) {
        return Err(Error::ProjectionOutsideCone(format!(
            "projected vector has dual margin {margin}"
        )));
    }
    let support = match support_function(problem, &w) {
        ExtendedReal::Finite(s) if s < 0.0 => s,
        other => {
            return Err(Error::ProjectionOutsideCone(format!(
                "support of projected vector is {other}"
            )))
        }
    };
    let y = w / -support;
    let kernel = a.tr_mul(&y).amax();
    if !(kernel <= PROJECTED_KERNEL_TOL) {
        return Err(Error::ProjectionOutsideCone(format!(
            "projected vector has |A^T y| = {kernel:e}"
        )));
    }
    Ok(Certificate::Infeasibility {
        y,
        strict: true,
        eps: 0.0,
    })
}

/// Projects `u = Ax + z⁰/τ` onto `{Ax̂ : <c, x̂> ≤ -1/ε}` in the metric
/// `Φ''(u)` and checks `Ax̂ ∈ int D`.
pub fn strict_unboundedness_certificate(
    problem: &Problem,
    start: &StartData,
    point: &Point,
    eps: f64,
) -> Result<Certificate> {
    if !(point.tau > 0.0) {
        return Err(Error::DomainViolation(format!("tau = {}", point.tau)));
    }
    let u = point.shifted_image(problem, start);
    let domain = problem.domain();
    let h = domain.hessian(&u, Side::Primal)?;
    let a = problem.a();
    let c = problem.c();
    let ha = &h * a;
    let normal = a.tr_mul(&ha);
    let mut x = linalg::solve_spd(&normal, &ha.tr_mul(&u))?;
    let limit = -1.0 / eps;
    if c.dot(&x) > limit {
        let target = limit * (1.0 + 1e-12);
        let mc = linalg::solve_spd(&normal, c)?;
        let curvature = c.dot(&mc);
        if !(curvature > 0.0) {
            return Err(Error::ProjectionOutsideDomain("objective is constant".into()));
        }
        let t = (c.dot(&x) - target) / curvature;
        x -= mc * t;
    }
    let objective = c.dot(&x);
    if !(objective <= limit) {
        return Err(Error::ProjectionOutsideDomain(format!(
            "projected objective {objective} above {limit}"
        )));
    }
    let margin = domain.margin(&(a * &x), Side::Primal);
    if !(margin > 0.0) {
        return Err(Error::ProjectionOutsideDomain(format!(
            "projected point has primal margin {margin}"
        )));
    }
    Ok(Certificate::Unboundedness {
        x,
        tau: point.tau,
        strict: true,
        eps,
    })
}
