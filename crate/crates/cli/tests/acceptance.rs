//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_BLOCKED` are still evaluated and printed; their
//! failure does not fail the process, but an unexpected failure elsewhere does.

use std::path::Path;
use std::time::Instant;

use ddsolve::{parse_problem_file, run_solve, trace_csv, SolveOptions};
use ddsolve_core::oracles::{oracle_sigma_f, oracle_sigma_p, oracle_tp, OracleInstance};
use ddsolve_core::problem::qdd_check;
use ddsolve_core::status::stop_params;
use ddsolve_core::{
    follow, gap_bounds, instances, log_mu_slope, mu_cap, support_function, AtomKind, BarrierAtom,
    Certificate, FollowOutcome, FollowerOptions, Iterate, Problem, Side, StartData, Status,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_BLOCKED: &[&str] = &["AC6"];

struct Verdict {
    id: &'static str,
    title: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    fn new(id: &'static str, title: &'static str) -> Self {
        Self {
            id,
            title,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Run {
    start: StartData,
    iterates: Vec<Iterate>,
    outcome: FollowOutcome,
    seconds: f64,
}

fn run(problem: &Problem, eps: f64, strict: bool) -> Run {
    let start = StartData::default_for(problem);
    let options = FollowerOptions {
        eps,
        strict,
        ..FollowerOptions::default()
    };
    let mut iterates = Vec::new();
    let t0 = Instant::now();
    let outcome = follow(problem, &start, &options, &mut |acc| {
        iterates.push(acc.iterate.clone())
    });
    Run {
        start,
        iterates,
        outcome,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

// ---------------------------------------------------------------- AC1

fn random_sample(
    kind: usize,
    rng: &mut ChaCha8Rng,
) -> (BarrierAtom, DVector<f64>, DVector<f64>, DVector<f64>) {
    match kind {
        0 | 1 => {
            let bound = rng.gen_range(-5.0..5.0);
            let d = rng.gen_range(-3.0..3.0);
            let sign = if kind == 0 { 1.0 } else { -1.0 };
            let atom_kind = if kind == 0 {
                AtomKind::HalflineLower { lower: bound }
            } else {
                AtomKind::HalflineUpper { upper: bound }
            };
            let mut at = || DVector::from_element(1, bound + sign * rng.gen_range(-4.0f64..4.0).exp() - d);
            let (u, v) = (at(), at());
            let atom = BarrierAtom::new(atom_kind, vec![0], Some(vec![d])).unwrap();
            (atom, u, v, DVector::from_element(1, rng.gen_range(-1.0..1.0)))
        }
        2 => {
            let lower = rng.gen_range(-5.0..5.0);
            let width = rng.gen_range(0.1..10.0);
            let d = rng.gen_range(-3.0..3.0);
            let mut at = || DVector::from_element(1, lower + width * rng.gen_range(0.01..0.99) - d);
            let (u, v) = (at(), at());
            let atom = BarrierAtom::new(
                AtomKind::Box {
                    lower,
                    upper: lower + width,
                },
                vec![0],
                Some(vec![d]),
            )
            .unwrap();
            (atom, u, v, DVector::from_element(1, rng.gen_range(-1.0..1.0)))
        }
        _ => {
            let len = rng.gen_range(2..=5);
            let d = DVector::from_fn(len, |_, _| rng.gen_range(-3.0..3.0));
            let mut at = || {
                let tail = DVector::from_fn(len - 1, |_, _| rng.gen_range(-3.0..3.0));
                let mut w = DVector::zeros(len);
                w[0] = tail.norm() + rng.gen_range(-4.0f64..2.0).exp();
                w.rows_mut(1, len - 1).copy_from(&tail);
                w - &d
            };
            let (u, v) = (at(), at());
            let atom =
                BarrierAtom::new(AtomKind::Soc, (0..len).collect(), Some(d.as_slice().to_vec())).unwrap();
            (atom, u, v, DVector::from_fn(len, |_, _| rng.gen_range(-1.0..1.0)))
        }
    }
}

fn central_difference(
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
    at: &DVector<f64>,
    step: f64,
) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..at.len())
        .map(|j| {
            let mut plus = at.clone();
            let mut minus = at.clone();
            plus[j] += step;
            minus[j] -= step;
            (f(&plus) - f(&minus)) / (2.0 * step)
        })
        .collect();
    DMatrix::from_columns(&cols)
}

fn derivative_error(atom: &BarrierAtom, at: &DVector<f64>, side: Side) -> f64 {
    let step = 1e-5 * atom.interior_margin(at, side).min(1.0);
    let grad = atom.gradient(at, side).unwrap();
    let fd_grad = central_difference(
        |v| DVector::from_element(1, atom.value(v, side).unwrap()),
        at,
        step,
    );
    let g_err = (fd_grad.transpose().column(0) - &grad).amax() / (1.0 + grad.amax());
    let hess = atom.hessian(at, side).unwrap();
    let fd_hess = central_difference(|v| atom.gradient(v, side).unwrap(), at, step);
    let h_err = (&fd_hess - &hess).amax() / (1.0 + hess.amax());
    g_err.max(h_err)
}

fn ac1() -> Verdict {
    let mut v = Verdict::new("AC1", "barrier calculus suite");
    let t0 = Instant::now();
    let names = ["halfline_lower", "halfline_upper", "box", "soc"];
    let mut rng = ChaCha8Rng::seed_from_u64(20261019);
    let (mut round, mut fy, mut theta_ratio, mut mono, mut deriv) = (0f64, 0f64, 0f64, f64::INFINITY, 0f64);
    for (kind, name) in names.iter().enumerate() {
        for _ in 0..100 {
            let (atom, u, other, h) = random_sample(kind, &mut rng);
            let y = atom.gradient(&u, Side::Primal).unwrap();
            let back = atom.gradient(&y, Side::Conjugate).unwrap();
            let e = (&back - &u).amax() / (1.0 + u.amax());
            round = round.max(e);
            v.check(e <= 1e-10, format!("{name}: round trip {e:e}"));

            let lhs = atom.value(&u, Side::Primal).unwrap() + atom.value(&y, Side::Conjugate).unwrap();
            let rhs = y.dot(&u);
            let e = (lhs - rhs).abs() / (1.0 + rhs.abs());
            fy = fy.max(e);
            v.check(e <= 1e-10, format!("{name}: Fenchel-Young {e:e}"));

            let hess = atom.hessian(&u, Side::Primal).unwrap();
            let dual_sq = atom.inverse_hessian_quadratic(&u, &y, Side::Primal).unwrap();
            let dir_ratio = y.dot(&h).powi(2) / h.dot(&(&hess * &h));
            let ratio = (dual_sq.max(dir_ratio)) / atom.theta();
            theta_ratio = theta_ratio.max(ratio);
            v.check(ratio <= 1.0 + 1e-9, format!("{name}: theta ratio {ratio}"));

            let y_other = atom.gradient(&other, Side::Primal).unwrap();
            let diff = &other - &u;
            let r = diff.dot(&(&hess * &diff)).sqrt();
            let gain = (&y_other - &y).dot(&diff);
            let floor = r * r / (1.0 + r);
            if floor > 0.0 {
                mono = mono.min(gain / floor);
            }
            v.check(
                gain >= floor * (1.0 - 1e-9),
                format!("{name}: monotone {gain} < {floor}"),
            );

            let e =
                derivative_error(&atom, &u, Side::Primal).max(derivative_error(&atom, &y, Side::Conjugate));
            deriv = deriv.max(e);
            v.check(e <= 1e-6, format!("{name}: finite differences {e:e}"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    v.check(secs < 5.0, format!("runtime {secs:.2}s"));
    v.note(format!(
        "400 points; round trip {round:.1e}, Fenchel-Young {fy:.1e}, max theta ratio {theta_ratio:.3}, \
         min monotone ratio {mono:.3}, FD {deriv:.1e}, {secs:.2}s"
    ));
    v
}

// ---------------------------------------------------------------- AC2

fn ac2() -> Verdict {
    let mut v = Verdict::new("AC2", "path invariants on accepted iterates");
    let mut counted = 0;
    for (name, problem) in instances::NAMES.iter().zip(instances::all()) {
        let eps = if *name == "inst_soc" { 1e-4 } else { 1e-6 };
        let r = run(&problem, eps, false);
        let floor = problem.constants().tau_lower_bound();
        v.check(floor == 0.1875, format!("tau floor {floor}"));
        for (k, it) in r.iterates.iter().enumerate() {
            counted += 1;
            let point = it.point();
            v.check(
                qdd_check(&problem, &r.start, &point).is_member(),
                format!("{name} #{k}: Q_DD"),
            );
            v.check(
                it.proximity <= problem.kappa(),
                format!("{name} #{k}: proximity {}", it.proximity),
            );
            let viol = gap_bounds(&problem, &r.start, &point).violation();
            v.check(viol <= 1e-8, format!("{name} #{k}: sandwich {viol:e}"));
            v.check(
                it.mu < 1.0 || it.tau >= floor,
                format!("{name} #{k}: tau {}", it.tau),
            );
        }
    }
    v.note(format!("{counted} iterates, violations {}", v.failures.len()));
    v
}

// ---------------------------------------------------------------- AC3

fn ac3() -> Verdict {
    let mut v = Verdict::new("AC3", "solvable case INST-BOX");
    let problem = instances::inst_box();
    let r = run(&problem, 1e-6, false);
    let report = &r.outcome.report;
    v.check(
        report.status == Status::EpsSolution,
        format!("status {}", report.status),
    );
    let iters = report.diagnostics.iterations;
    v.check(iters <= 200, format!("iterations {iters}"));
    let obj = report.x.as_ref().map_or(f64::NAN, |x| problem.c().dot(x));
    v.check(obj.abs() <= 1e-5, format!("objective {obj:e}"));
    let last = r.iterates.last().unwrap();
    let sp = stop_params(&problem, &r.start, &last.point()).max();
    v.check(sp <= 1e-6, format!("stop parameters {sp:e}"));
    v.check(r.seconds < 1.0, format!("runtime {:.3}s", r.seconds));

    let sigma = oracle_sigma_f(&OracleInstance::new(problem.clone()).unwrap(), &r.start).unwrap();
    let mut qualifying = 0;
    for it in &r.iterates {
        let y_tau = r.start.y_tau0() + it.tau * problem.c().dot(&it.x);
        let support = support_function(&problem, &it.y)
            .finite()
            .unwrap_or(f64::INFINITY);
        if support + y_tau > 0.0 {
            continue;
        }
        qualifying += 1;
        let bound = sigma * it.mu - 1.0 / sigma;
        v.check(
            it.tau - 1.0 >= bound - 1e-9 * (1.0 + bound.abs()),
            format!("tau growth at mu {:e}", it.mu),
        );
    }
    v.check(qualifying > 0, "no qualifying iterate for the tau growth bound");
    v.note(format!(
        "{iters} iterations, objective {obj:.2e}, stop {sp:.2e}, sigma_f {sigma:.4}, {qualifying} qualifying, {:.3}s",
        r.seconds
    ));
    v
}

// ---------------------------------------------------------------- AC4

fn ac4() -> Verdict {
    let mut v = Verdict::new("AC4", "infeasibility INST-INF");
    let problem = instances::inst_inf();
    let weak = run(&problem, 1e-6, false);
    v.check(
        weak.outcome.report.status == Status::InfeasibilityCertificate,
        format!("status {}", weak.outcome.report.status),
    );
    let strict = run(&problem, 1e-6, true);
    match &strict.outcome.report.certificate {
        Some(Certificate::Infeasibility { y, strict: true, .. }) => {
            let kernel = problem.a().tr_mul(y).amax();
            v.check(kernel <= 1e-10, format!("|A^T y| {kernel:e}"));
            let margins = problem.domain().margins(y, Side::Conjugate);
            v.check(
                margins.iter().all(|&m| m > 0.0),
                format!("dual margins {margins:?}"),
            );
            let support = support_function(&problem, y).finite().unwrap_or(f64::INFINITY);
            v.check((support + 1.0).abs() <= 1e-12, format!("support {support}"));
            let dir = (y - DVector::from_row_slice(&[-1.0, -1.0])).amax();
            v.check(dir <= 1e-8, format!("direction error {dir:e}"));
            v.note(format!(
                "y = ({:.12}, {:.12}), support {support}, margins {margins:?}",
                y[0], y[1]
            ));
        }
        other => v.check(false, format!("no strict certificate: {other:?}")),
    }
    let control = run(&instances::inst_box(), 1e-6, true);
    let false_cert = matches!(
        control.outcome.report.certificate,
        Some(Certificate::Infeasibility { .. })
    );
    v.check(
        !false_cert,
        "negative control emitted an infeasibility certificate",
    );
    v.note(format!(
        "negative control INST-BOX --strict -> {}",
        control.outcome.report.status
    ));
    v
}

// ---------------------------------------------------------------- AC5

fn ac5() -> Verdict {
    let mut v = Verdict::new("AC5", "unboundedness INST-UNB");
    let problem = instances::inst_unb();
    let weak = run(&problem, 1e-6, false);
    let report = &weak.outcome.report;
    v.check(
        report.status == Status::UnboundednessCertificate,
        format!("status {}", report.status),
    );
    let obj = report.x.as_ref().map_or(f64::NAN, |x| problem.c().dot(x));
    v.check(obj <= -1e6, format!("objective {obj:e}"));
    let strict = run(&problem, 1e-6, true);
    match &strict.outcome.report.certificate {
        Some(Certificate::Unboundedness { x, strict: true, .. }) => {
            let margin = problem.domain().margin(&(problem.a() * x), Side::Primal);
            let sobj = problem.c().dot(x);
            v.check(margin > 0.0, format!("margin {margin}"));
            v.check(sobj <= -1e6, format!("projected objective {sobj:e}"));
            v.note(format!("objective {obj:.4e}, projected margin {margin:.4e}"));
        }
        other => v.check(false, format!("no strict certificate: {other:?}")),
    }
    v
}

// ---------------------------------------------------------------- AC6

fn ac6() -> Verdict {
    let mut v = Verdict::new("AC6", "ill-conditioned INST-SOC via the mu cap");
    let problem = instances::inst_soc();
    let eps = 1e-4;
    let r = run(&problem, eps, false);
    let report = &r.outcome.report;
    let cap = mu_cap(&problem, eps);
    let final_mu = report.diagnostics.mu;
    v.check(
        report.status == Status::IllConditioned,
        format!("status {} (expected IllConditioned)", report.status),
    );
    v.check(
        final_mu >= cap,
        format!("final mu {final_mu:.3e} below cap {cap:.3e}"),
    );
    v.check(
        matches!(report.certificate, Some(Certificate::FeasiblePair { .. })),
        "no epsilon-feasible pair reported",
    );

    let estimates: Vec<f64> = r
        .iterates
        .iter()
        .map(|it| {
            -support_function(&problem, &it.y)
                .finite()
                .unwrap_or(f64::INFINITY)
                / it.tau
        })
        .collect();
    let rises = estimates.windows(2).filter(|w| w[1] > w[0]).count();
    v.check(rises == 0, format!("objective estimates rise {rises} times"));
    let bounded = estimates.iter().all(|e| e.is_finite());
    v.check(bounded, "objective estimates unbounded");

    // oracle feasible primal point (x, y) = (0, 1), exact dual point (-1, 1, 0)
    let x_feas = DVector::from_row_slice(&[0.0, 1.0]);
    let y_feas = DVector::from_row_slice(&[-1.0, 1.0, 0.0]);
    let aty0c = problem.a().tr_mul(r.start.y0()) + problem.c();
    let dual_support = support_function(&problem, &y_feas).finite().unwrap();
    let mut worst: f64 = f64::NEG_INFINITY;
    for it in &r.iterates {
        let support = support_function(&problem, &it.y)
            .finite()
            .unwrap_or(f64::INFINITY);
        let upper = problem.c().dot(&x_feas) - aty0c.dot(&x_feas) / it.tau;
        let lower = -support / it.tau;
        worst = worst.max(lower - upper);
        v.check(lower <= upper + 1e-9, format!("dual bracket at mu {:e}", it.mu));
        let primal = problem.c().dot(&it.x) - y_feas.dot(r.start.z0()) / it.tau;
        worst = worst.max(-dual_support - primal);
        v.check(
            -dual_support <= primal + 1e-9,
            format!("primal bracket at mu {:e}", it.mu),
        );
    }
    let est = estimates.last().copied().unwrap_or(f64::NAN);
    v.note(format!(
        "final mu {final_mu:.3e} (cap {cap:.3e}), last estimate {est:.3e}, bracket worst slack {worst:.2e}, \
         estimate rises {rises}"
    ));
    v
}

// ---------------------------------------------------------------- AC7

fn ac7() -> Verdict {
    let mut v = Verdict::new("AC7", "oracle consistency");
    let inf = OracleInstance::new(instances::inst_inf()).unwrap();
    let sp = oracle_sigma_p(&inf);
    v.check(
        (sp - 0.5f64.sqrt()).abs() <= 1e-3,
        format!("sigma_p(INST-INF) {sp}"),
    );
    let mut rows = Vec::new();
    for (name, problem) in instances::NAMES.iter().zip(instances::all()) {
        let start = StartData::default_for(&problem);
        let inst = OracleInstance::new(problem).unwrap();
        let sigma_p = oracle_sigma_p(&inst);
        let tp = oracle_tp(&inst, start.z0());
        let bound = start.z0().norm() / tp;
        // grid tolerance of the distance oracle
        v.check(
            sigma_p <= bound + 1e-4,
            format!("{name}: sigma_p {sigma_p} > {bound}"),
        );
        rows.push(format!("{name} {sigma_p:.2e}<={bound:.3}"));
    }
    v.note(format!("sigma_p(INST-INF) = {sp:.6}; {}", rows.join(", ")));
    v
}

// ---------------------------------------------------------------- AC8

fn ac8() -> Verdict {
    let mut v = Verdict::new("AC8", "mu growth");
    let mut slopes = Vec::new();
    for (name, problem) in instances::NAMES.iter().zip(instances::all()) {
        let eps = if *name == "inst_soc" { 1e-4 } else { 1e-6 };
        let r = run(&problem, eps, false);
        let trace = &r.outcome.trace;
        v.check(
            trace.windows(2).all(|w| w[1].mu.ln() > w[0].mu.ln()),
            format!("{name}: log mu not increasing"),
        );
        let slope = log_mu_slope(trace);
        let reported = r.outcome.report.diagnostics.log_mu_slope;
        v.check(slope > 0.0, format!("{name}: slope {slope}"));
        v.check(
            reported.to_bits() == slope.to_bits(),
            format!("{name}: reported slope {reported}"),
        );
        slopes.push(format!("{name} {slope:.3}"));
    }
    v.note(format!("slopes: {}", slopes.join(", ")));
    v
}

// ---------------------------------------------------------------- AC9

fn ac9() -> Verdict {
    let mut v = Verdict::new("AC9", "determinism");
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("problems");
    let mut runs = 0;
    for (name, eps) in [
        ("inst_box", 1e-6),
        ("inst_inf", 1e-6),
        ("inst_unb", 1e-6),
        ("inst_soc", 1e-4),
    ] {
        let parsed = parse_problem_file(&dir.join(format!("{name}.dd"))).unwrap();
        for strict in [false, true] {
            let options = SolveOptions {
                eps,
                strict,
                ..SolveOptions::default()
            };
            let a = run_solve(&parsed, &options).unwrap();
            let b = run_solve(&parsed, &options).unwrap();
            runs += 2;
            v.check(
                trace_csv(&a.trace) == trace_csv(&b.trace),
                format!("{name}: trace CSV differs"),
            );
            let bits = |t: &[ddsolve_core::TraceRow]| {
                t.iter()
                    .flat_map(|r| [r.mu, r.tau, r.gap, r.p_feas, r.d_feas, r.proximity].map(f64::to_bits))
                    .collect::<Vec<_>>()
            };
            v.check(
                bits(&a.trace) == bits(&b.trace),
                format!("{name}: trace bits differ"),
            );
            v.check(
                a.report.to_json() == b.report.to_json(),
                format!("{name}: reports differ"),
            );
        }
    }
    v.note(format!("{runs} runs compared bit-for-bit"));
    v
}

fn main() {
    let verdicts = [ac1(), ac2(), ac3(), ac4(), ac5(), ac6(), ac7(), ac8(), ac9()];
    let mut unexpected = 0;
    for v in &verdicts {
        let tag = if v.passed() { "PASS" } else { "FAIL" };
        println!("{tag} {} {}: {}", v.id, v.title, v.notes.join("; "));
        for f in v.failures.iter().take(5) {
            println!("     - {f}");
        }
        if v.failures.len() > 5 {
            println!("     - ... {} more", v.failures.len() - 5);
        }
        let blocked = KNOWN_BLOCKED.contains(&v.id);
        if !v.passed() && !blocked {
            unexpected += 1;
        }
        if v.passed() && blocked {
            println!("     note: {} is listed as blocked but passed", v.id);
        }
    }
    let passed = verdicts.iter().filter(|v| v.passed()).count();
    println!(
        "acceptance: {passed}/{} passed; known blocked: {}; unexpected failures: {unexpected}",
        verdicts.len(),
        KNOWN_BLOCKED.join(", ")
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
