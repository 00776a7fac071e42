//! Predictor-corrector tracking of the central path.
//!
//! For a target `μ` the path point solves
//!
//! ```text
//!     Aᵀy - Aᵀy⁰ + (τ - 1)c                       = 0
//!     y - (μ/τ) Φ'(Ax + z⁰/τ)                      = 0
//!     <c, x> + <y, Ax + z⁰/τ>/τ + ϑξμ/τ² + y_τ,0/τ = 0
//! ```
//!
//! with `Ax + z⁰/τ ∈ int D` and `τ > 0`. Newton steps on this system
//! eliminate `dy` and solve an `(n+1)`-dimensional system in `(dx, dτ)`.

use log::{debug, trace, warn};
use nalgebra::{DMatrix, DVector};

use crate::barrier::Side;
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{mu_of, Iterate, Point, Problem, StartData};
use crate::status::{self, stop_params, Diagnostics, Status, StatusReport};

#[derive(Clone, Debug, PartialEq)]
pub struct Residuals {
    pub r_dual: DVector<f64>,
    pub r_cent: DVector<f64>,
    pub r_gap: f64,
}

impl Residuals {
    pub fn max_abs(&self) -> f64 {
        self.r_dual.amax().max(self.r_cent.amax()).max(self.r_gap.abs())
    }
}

pub fn residuals(problem: &Problem, start: &StartData, point: &Point, mu: f64) -> Result<Residuals> {
    if !(point.tau > 0.0) {
        return Err(Error::DomainViolation(format!(
            "tau = {} is not positive",
            point.tau
        )));
    }
    let tau = point.tau;
    let u = point.shifted_image(problem, start);
    let g = problem.domain().gradient(&u, Side::Primal)?;
    let a = problem.a();
    let c = problem.c();
    let r_dual = a.tr_mul(&(&point.y - start.y0())) + c * (tau - 1.0);
    let r_cent = &point.y - g * (mu / tau);
    let r_gap = c.dot(&point.x)
        + point.y.dot(&u) / tau
        + problem.theta() * problem.xi() * mu / (tau * tau)
        + start.y_tau0() / tau;
    Ok(Residuals {
        r_dual,
        r_cent,
        r_gap,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FollowerOptions {
    pub eps: f64,
    /// Attempt strict certificates whenever a weak trigger fires.
    pub strict: bool,
    pub max_iters: usize,
    /// Predictor may leave the neighborhood up to `expansion · κ`.
    pub predictor_expansion: f64,
    /// Corrector stops once proximity is at most `contraction · κ`.
    pub corrector_contraction: f64,
    pub fraction_to_boundary: f64,
    pub max_corrector_steps: usize,
    pub max_predictor_halvings: usize,
    /// Largest relative `μ` increase tried by one predictor step.
    pub max_mu_growth: f64,
    /// Overrides `1/(ϑε³)`.
    pub mu_cap: Option<f64>,
    /// Iterations a weak certificate waits for its strict upgrade.
    pub strict_grace: usize,
}

impl Default for FollowerOptions {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            strict: false,
            max_iters: 500,
            predictor_expansion: 2.0,
            corrector_contraction: 0.5,
            fraction_to_boundary: 0.99,
            max_corrector_steps: 50,
            max_predictor_halvings: 60,
            max_mu_growth: 1e3,
            mu_cap: None,
            strict_grace: 50,
        }
    }
}

/// One accepted iterate as written to a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub mu: f64,
    pub tau: f64,
    pub gap: f64,
    pub p_feas: f64,
    pub d_feas: f64,
    pub proximity: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "iter,mu,tau,gap,p_feas,d_feas,proximity";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.iter, self.mu, self.tau, self.gap, self.p_feas, self.d_feas, self.proximity
        )
    }
}

/// What the sink of [`follow`] sees for every accepted iterate.
#[derive(Clone, Copy, Debug)]
pub struct Accepted<'a> {
    pub row: &'a TraceRow,
    pub iterate: &'a Iterate,
}

#[derive(Clone, Debug)]
pub struct FollowOutcome {
    pub report: StatusReport,
    pub trace: Vec<TraceRow>,
}

/// Derivatives of the path system at a point, with `dy` eliminated.
struct Linearization {
    reduced: DMatrix<f64>,
    /// `dy = -r_cent + P dx + q dτ`
    p: DMatrix<f64>,
    q: DVector<f64>,
    u: DVector<f64>,
    gradient: DVector<f64>,
    tau: f64,
}

impl Linearization {
    fn new(problem: &Problem, start: &StartData, point: &Point, mu: f64) -> Result<Self> {
        let tau = point.tau;
        let a = problem.a();
        let c = problem.c();
        let z0 = start.z0();
        let n = problem.n();
        let u = point.shifted_image(problem, start);
        let domain = problem.domain();
        let g = domain.gradient(&u, Side::Primal)?;
        let h = domain.hessian(&u, Side::Primal)?;
        let xt = problem.theta() * problem.xi();

        let p = (&h * a) * (mu / tau);
        let q = &g * (-mu / (tau * tau)) - (&h * z0) * (mu / (tau * tau * tau));

        let mut reduced = DMatrix::zeros(n + 1, n + 1);
        reduced.view_mut((0, 0), (n, n)).copy_from(&a.tr_mul(&p));
        reduced.view_mut((0, n), (n, 1)).copy_from(&(a.tr_mul(&q) + c));
        let gap_x = c + a.tr_mul(&point.y) / tau + p.tr_mul(&u) / tau;
        reduced.view_mut((n, 0), (1, n)).copy_from(&gap_x.transpose());
        let gap_tau = -point.y.dot(&u) / (tau * tau)
            - point.y.dot(z0) / (tau * tau * tau)
            - 2.0 * xt * mu / (tau * tau * tau)
            - start.y_tau0() / (tau * tau);
        reduced[(n, n)] = gap_tau + u.dot(&q) / tau;

        Ok(Self {
            reduced,
            p,
            q,
            u,
            gradient: g,
            tau,
        })
    }

    /// Solves `J d = -F` for `F = (r_dual, r_cent, r_gap)`.
    fn solve(
        &self,
        problem: &Problem,
        r_dual: &DVector<f64>,
        r_cent: &DVector<f64>,
        r_gap: f64,
    ) -> Result<Direction> {
        let n = problem.n();
        let a = problem.a();
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(a.tr_mul(r_cent) - r_dual));
        rhs[n] = -r_gap + self.u.dot(r_cent) / self.tau;
        let sol = linalg::solve_general(self.reduced.clone(), &rhs)?;
        let dx = sol.rows(0, n).into_owned();
        let dtau = sol[n];
        let dy = -r_cent + &self.p * &dx + &self.q * dtau;
        Ok(Direction { dx, dtau, dy })
    }
}

#[derive(Clone, Debug)]
struct Direction {
    dx: DVector<f64>,
    dtau: f64,
    dy: DVector<f64>,
}

fn advance(point: &Point, d: &Direction, t: f64) -> Point {
    Point {
        x: &point.x + &d.dx * t,
        tau: point.tau + d.dtau * t,
        y: &point.y + &d.dy * t,
    }
}

/// Largest `t` keeping `Ax + z⁰/τ`, `y` and `τ` interior to first order.
fn boundary_step(problem: &Problem, start: &StartData, point: &Point, d: &Direction) -> f64 {
    let tau = point.tau;
    let u = point.shifted_image(problem, start);
    let du = problem.a() * &d.dx - start.z0() * (d.dtau / (tau * tau));
    let domain = problem.domain();
    let mut t =
        domain
            .step_limit(&u, &du, Side::Primal)
            .min(domain.step_limit(&point.y, &d.dy, Side::Conjugate));
    if d.dtau < 0.0 {
        t = t.min(-tau / d.dtau);
    }
    t
}

/// Diagonal residual weights frozen for one corrector call.
struct MeritScale {
    dual: f64,
    cent: DVector<f64>,
    gap: f64,
}

impl MeritScale {
    fn new(problem: &Problem, start: &StartData, point: &Point, mu: f64) -> Result<Self> {
        let u = point.shifted_image(problem, start);
        let h = problem.domain().hessian(&u, Side::Primal)?;
        let ratio = point.tau / mu;
        let cent = DVector::from_fn(problem.m(), |i, _| ratio / h[(i, i)].sqrt());
        let dual = 1.0 / (1.0 + problem.c().norm() + problem.a().tr_mul(start.y0()).norm());
        let gap = point.tau * point.tau / (problem.xi() * problem.theta() * mu);
        Ok(Self { dual, cent, gap })
    }

    fn merit(&self, r: &Residuals) -> f64 {
        let cent = r.r_cent.component_mul(&self.cent).norm_squared();
        ((r.r_dual.norm() * self.dual).powi(2) + cent + (r.r_gap * self.gap).powi(2)).sqrt()
    }
}

fn evaluate(
    problem: &Problem,
    start: &StartData,
    point: &Point,
    mu: f64,
    scale: &MeritScale,
) -> Option<(Residuals, f64)> {
    if !(point.tau > 0.0) || problem.domain().margin(&point.y, Side::Conjugate) <= 0.0 {
        return None;
    }
    let r = residuals(problem, start, point, mu).ok()?;
    let merit = scale.merit(&r);
    merit.is_finite().then_some((r, merit))
}

const MERIT_FLOOR: f64 = 1e-15;
/// Below this merit a step that fails to reduce it fourfold ends polishing.
const POLISH_TOL: f64 = 1e-9;

/// Damped Newton on the path system at fixed `μ` until proximity is at most
/// `contraction · κ`, followed by polishing until the residual stagnates.
pub fn corrector_step(
    problem: &Problem,
    start: &StartData,
    point: &Point,
    mu: f64,
    options: &FollowerOptions,
) -> Result<Iterate> {
    let target = options.corrector_contraction * problem.kappa();
    let scale = MeritScale::new(problem, start, point, mu)?;
    let mut current = point.clone();
    let (mut res, mut merit) = evaluate(problem, start, &current, mu, &scale)
        .ok_or_else(|| Error::DomainViolation("corrector started outside Q_DD".into()))?;
    let mut prox = crate::problem::proximity(problem, start, &current).unwrap_or(f64::INFINITY);

    for step in 0..options.max_corrector_steps {
        if prox <= target && merit <= MERIT_FLOOR {
            break;
        }
        let lin = Linearization::new(problem, start, &current, mu)?;
        let dir = lin.solve(problem, &res.r_dual, &res.r_cent, res.r_gap)?;
        let mut t = (options.fraction_to_boundary * boundary_step(problem, start, &current, &dir)).min(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial = advance(&current, &dir, t);
            if let Some((r, m)) = evaluate(problem, start, &trial, mu, &scale) {
                if m <= (1.0 - 1e-4 * t) * merit {
                    accepted = Some((trial, r, m));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((next, r, m)) = accepted.filter(|_| t >= 1e-10) else {
            trace!("corrector: no merit decrease at step {step}, merit {merit:e}");
            break;
        };
        let stagnating = t >= 1.0 && m > 0.25 * merit;
        current = next;
        res = r;
        merit = m;
        prox = crate::problem::proximity(problem, start, &current).unwrap_or(f64::INFINITY);
        trace!("corrector step {step}: t = {t:e}, merit = {merit:e}, proximity = {prox:e}");
        if prox <= target && stagnating && merit <= POLISH_TOL {
            break;
        }
    }
    if prox > target {
        return Err(Error::CorrectorStall { proximity: prox });
    }
    Iterate::new(problem, start, current)
}

/// Tangent step along the path with the largest length (found by halving)
/// that keeps proximity within `expansion · κ` and increases `μ`.
pub fn predictor_step(
    problem: &Problem,
    start: &StartData,
    it: &Iterate,
    options: &FollowerOptions,
) -> Result<(Iterate, f64)> {
    let point = it.point();
    let mu = it.mu;
    let lin = Linearization::new(problem, start, &point, mu)?;
    let tau = point.tau;
    let dmu_cent = &lin.gradient / -tau;
    let dmu_gap = problem.theta() * problem.xi() / (tau * tau);
    let dir = lin.solve(problem, &DVector::zeros(problem.n()), &dmu_cent, dmu_gap)?;

    let radius = options.predictor_expansion * problem.kappa();
    let boundary = boundary_step(problem, start, &point, &dir);
    let mut h = (options.fraction_to_boundary * boundary).min(options.max_mu_growth * mu);
    let floor = mu * (1.0 + 1e-12);
    for _ in 0..options.max_predictor_halvings {
        let trial = advance(&point, &dir, h);
        let new_mu = mu_of(problem, start, &trial);
        if new_mu > floor && trial.tau > 0.0 {
            let interior = problem.domain().margin(&trial.y, Side::Conjugate) > 0.0
                && problem
                    .domain()
                    .margin(&trial.shifted_image(problem, start), Side::Primal)
                    > 0.0;
            if interior {
                if let Ok(prox) = crate::problem::proximity(problem, start, &trial) {
                    if prox <= radius {
                        trace!("predictor: h = {h:e}, mu {mu:e} -> {new_mu:e}, proximity {prox:e}");
                        let next = Iterate {
                            x: trial.x,
                            tau: trial.tau,
                            y: trial.y,
                            mu: new_mu,
                            proximity: prox,
                        };
                        return Ok((next, new_mu));
                    }
                }
            }
        }
        h *= 0.5;
    }
    Err(Error::PredictorStall { mu })
}

/// Least-squares slope of `ln μ` against the iteration index.
pub fn log_mu_slope(trace: &[TraceRow]) -> f64 {
    let n = trace.len() as f64;
    if trace.len() < 2 {
        return 0.0;
    }
    let mean_i = trace.iter().map(|r| r.iter as f64).sum::<f64>() / n;
    let mean_l = trace.iter().map(|r| r.mu.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in trace {
        let di = r.iter as f64 - mean_i;
        sxy += di * (r.mu.ln() - mean_l);
        sxx += di * di;
    }
    sxy / sxx
}

fn row_for(problem: &Problem, start: &StartData, iter: usize, it: &Iterate) -> TraceRow {
    let sp = stop_params(problem, start, &it.point());
    TraceRow {
        iter,
        mu: it.mu,
        tau: it.tau,
        gap: sp.gap,
        p_feas: sp.p_feas,
        d_feas: sp.d_feas,
        proximity: it.proximity,
    }
}

fn finish(mut report: StatusReport, trace: Vec<TraceRow>) -> FollowOutcome {
    report.diagnostics.iterations = trace.last().map_or(0, |r| r.iter);
    report.diagnostics.log_mu_slope = log_mu_slope(&trace);
    FollowOutcome { report, trace }
}

/// Runs predictor-corrector steps from the `μ = 1` point until a status
/// fires, `μ` reaches its cap, or the iteration limit is hit. Every accepted
/// iterate, including the starting one, is passed to `sink`.
pub fn follow<F>(
    problem: &Problem,
    start: &StartData,
    options: &FollowerOptions,
    sink: &mut F,
) -> FollowOutcome
where
    F: FnMut(&Accepted<'_>),
{
    let eps = options.eps;
    let mut trace = Vec::new();
    let mut it = match Iterate::new(problem, start, Point::initial(problem, start)) {
        Ok(it) => it,
        Err(e) => {
            let report = StatusReport::bare(
                Status::NumericalFailure,
                Diagnostics::default(),
                Some(e.to_string()),
            );
            return finish(report, trace);
        }
    };
    let row = row_for(problem, start, 0, &it);
    sink(&Accepted {
        row: &row,
        iterate: &it,
    });
    trace.push(row);

    let cap = options.mu_cap.unwrap_or_else(|| status::mu_cap(problem, eps));
    let mut pending: Option<(StatusReport, usize)> = None;

    for k in 1..=options.max_iters {
        let step = predictor_step(problem, start, &it, options)
            .and_then(|(pred, mu)| corrector_step(problem, start, &pred.point(), mu, options));
        let next = match step {
            Ok(next) => next,
            Err(e) => {
                warn!("iteration {k}: {e}");
                if let Some((report, _)) = pending {
                    return finish(report, trace);
                }
                let report = StatusReport::bare(
                    Status::NumericalFailure,
                    status::diagnostics_at(problem, start, &it),
                    Some(e.to_string()),
                );
                return finish(report, trace);
            }
        };
        it = next;
        let row = row_for(problem, start, k, &it);
        debug!(
            "iter {k}: mu {:e} tau {:e} gap {:e} p_feas {:e} d_feas {:e} prox {:.3}",
            row.mu, row.tau, row.gap, row.p_feas, row.d_feas, row.proximity
        );
        sink(&Accepted {
            row: &row,
            iterate: &it,
        });
        trace.push(row);

        let Some(report) = status::check_status_with_cap(problem, start, &it, eps, cap) else {
            continue;
        };
        if !report.verified() {
            warn!(
                "iteration {k}: {} payload failed verification, continuing",
                report.status
            );
            continue;
        }
        let weak = matches!(
            report.status,
            Status::InfeasibilityCertificate | Status::UnboundednessCertificate
        );
        if options.strict && weak {
            match status::upgrade_to_strict(problem, start, &it, &report, eps) {
                Ok(strict) => return finish(strict, trace),
                Err(e) => {
                    debug!("iteration {k}: strict certificate not available: {e}");
                    let since = pending.get_or_insert((report, k)).1;
                    if k - since >= options.strict_grace {
                        return finish(pending.take().unwrap().0, trace);
                    }
                    continue;
                }
            }
        }
        if report.status == Status::IllConditioned {
            if let Some((weak, _)) = pending {
                return finish(weak, trace);
            }
        }
        return finish(report, trace);
    }
    if let Some((report, _)) = pending {
        return finish(report, trace);
    }
    let report = StatusReport::bare(
        Status::IterationLimit,
        status::diagnostics_at(problem, start, &it),
        None,
    );
    finish(report, trace)
}
