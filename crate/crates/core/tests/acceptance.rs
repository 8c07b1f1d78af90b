//! Acceptance suite. Every test prints one `PASS` or `FAIL` line with the
//! measured quantities, then asserts. Run with `--nocapture` to see the lines.

use std::time::{Duration, Instant};

use cbdc_lab::calibration::{
    calibrate, derive_loan_rate, derive_mu, no_collateral_loan_rate, CalibrationTargets,
    LoanRateInputs,
};
use cbdc_lab::equivalence::{
    audit, balance_sheet_snapshot, binding_condition, ces_audit, equivalent_loan_rate,
    BalanceSheet, BaseKind, BasePosition, RateSet,
};
use cbdc_lab::model::{operating_cost, period_residuals, ModelParams};
use cbdc_lab::numerics::{fd_jacobian, newton_solve, NewtonOptions};
use cbdc_lab::perfect_foresight::{
    first_decay_violation, irf_report, robustness_scenarios, solve_transition, sweep, IrfReport,
    ShockSpec, SweepBase,
};
use cbdc_lab::steady_state::{solve_steady_state, SteadyState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// calibration
const IOTA: (f64, f64) = (0.009, 5e-4);
const VARPHI: (f64, f64) = (2.893, 1e-3);
const PHI1: (f64, f64) = (4.632e-5, 1e-7);
const MU: (f64, f64) = (0.002, 1e-4);
const LOAN_RATE: (f64, f64) = (0.993, 1e-3);
const CALIBRATION_BUDGET: Duration = Duration::from_secs(1);

// steady state
const ZETA: (f64, f64) = (0.1945, 1e-6);
const VELOCITY: (f64, f64) = (1.147, 5e-3);
const LABOR_RANGE: (f64, f64) = (0.31, 0.35);
const RATE_TOL: f64 = 1e-12;
const STEADY_RESIDUAL_TOL: f64 = 1e-9;
const STEADY_BUDGET: Duration = Duration::from_secs(1);

// equivalence
const AUDIT_DRAWS: usize = 50;
const AUDIT_REL_TOL: f64 = 1e-11;
const UNCOLLATERALIZED_LIMIT_TOL: f64 = 1e-9;
const UNCOLLATERALIZED_THETA: f64 = 1e9;
const AUDIT_BUDGET: Duration = Duration::from_secs(5);
const COROLLARY_REL_TOL: f64 = 1e-12;
const CORE_DELTA: f64 = 0.01;

// imperfect substitutes
const CES_EPSILONS: [f64; 4] = [0.1, 0.25, 0.5, 1.5];
const CES_TAX_REL_TOL: f64 = 1e-12;
const CES_PROFIT_REL_FLOOR: f64 = 1e-6;
const CES_NEAR_PERFECT: f64 = 1e-8;

// transition
const TERMINAL_TOL: f64 = 1e-6;
const DECAY_REL_TOL: f64 = 1e-6;
const SPREAD_RATIO_TOL: f64 = 1e-9;
const IRF_BUDGET: Duration = Duration::from_secs(30);
const THETA_B_POINTWISE: f64 = 0.10;
/// Deviations below this size (in report units) are compared in absolute
/// terms, since a relative comparison is meaningless near a zero crossing.
const POINTWISE_FLOOR: f64 = 1e-8;
const SWEEP_BUDGET: Duration = Duration::from_secs(180);

// solver
const QUADRATIC_RATIO_BOUND: f64 = 1.0;
const JACOBIAN_MAPS: usize = 20;
const JACOBIAN_REL_TOL: f64 = 1e-5;
const HORIZON_QUARTERS: usize = 40;
const HORIZON_REL_TOL: f64 = 1e-6;

type ScalarBench = (fn(&[f64]) -> Vec<f64>, f64, f64);

fn verdict(id: &str, ok: bool, detail: String) {
    println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn within((target, tol): (f64, f64), v: f64) -> bool {
    (v - target).abs() <= tol
}

fn baseline() -> (ModelParams, SteadyState) {
    let p = calibrate(&CalibrationTargets::default()).unwrap();
    let ss = solve_steady_state(&p).unwrap();
    (p, ss)
}

fn baseline_irf() -> (ModelParams, IrfReport, f64, Duration) {
    let (p, ss) = baseline();
    let start = Instant::now();
    let traj = solve_transition(&ss, &ShockSpec::default(), &p).unwrap();
    let elapsed = start.elapsed();
    (p, irf_report(&traj), traj.terminal_gap(), elapsed)
}

#[test]
fn ac01_calibration_reproduction() {
    let start = Instant::now();
    let p = calibrate(&CalibrationTargets::default()).unwrap();
    let elapsed = start.elapsed();
    let ok = within(IOTA, p.iota)
        && within(VARPHI, p.varphi)
        && within(PHI1, p.phi1)
        && within(MU, p.mu)
        && within(LOAN_RATE, p.r_l)
        && elapsed < CALIBRATION_BUDGET;
    verdict(
        "ac01 calibration",
        ok,
        format!(
            "iota={:.6} varphi={:.6} phi1={:.6e} mu={:.6} R_l={:.6} in {elapsed:?}",
            p.iota, p.varphi, p.phi1, p.mu, p.r_l
        ),
    );
    assert!(ok);
}

#[test]
fn ac02_steady_state_targets() {
    let p = calibrate(&CalibrationTargets::default()).unwrap();
    let start = Instant::now();
    let ss = solve_steady_state(&p).unwrap();
    let elapsed = start.elapsed();
    let s = ss.state;
    let worst = period_residuals(&s, &s, &s, &p, s.y).unwrap().max_abs();
    let labor = s.labor();
    let ok = within(ZETA, s.zeta_next)
        && within(VELOCITY, s.c / s.z_next)
        && (LABOR_RANGE.0..=LABOR_RANGE.1).contains(&labor)
        && (s.r_f_next - 1.0 / 0.99).abs() <= RATE_TOL
        && (s.r_k - 1.0 / 0.99).abs() <= RATE_TOL
        && worst <= STEADY_RESIDUAL_TOL
        && elapsed < STEADY_BUDGET;
    verdict(
        "ac02 steady state",
        ok,
        format!(
            "zeta={:.9} c/z={:.6} labor={labor:.6} R_f-1/0.99={:.1e} R_k-1/0.99={:.1e} max residual={worst:.1e} in {elapsed:?}",
            s.zeta_next,
            s.c / s.z_next,
            s.r_f_next - 1.0 / 0.99,
            s.r_k - 1.0 / 0.99
        ),
    );
    assert!(ok);
}

fn random_audit(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64, f64) {
    let lambda = rng.gen_range(0.5..2.0);
    let zeta = rng.gen_range(0.05..0.5);
    let mut p = ModelParams {
        lambda,
        theta_b: rng.gen_range(0.5..1.0),
        xi: rng.gen_range(0.0..0.003),
        ..ModelParams::reference()
    };
    p.mu = derive_mu(&p, zeta).unwrap();
    let r_f = 1.0 / rng.gen_range(0.97..0.995);
    let chi_n = rng.gen_range(0.001..0.03);
    let n = rng.gen_range(0.2..2.0);
    let base = BasePosition {
        kind: BaseKind::Custom,
        n,
        m: 0.0,
        r: zeta * n,
        l: 0.0,
        b: 0.0,
        k_h: rng.gen_range(1.0..10.0),
        k_g: rng.gen_range(1.0..5.0),
        zeta,
        rates: RateSet {
            r_f,
            r_k: r_f,
            r_n: r_f * (1.0 - chi_n),
            r_m: r_f * (1.0 - lambda * chi_n),
            r_r: p.r_r,
            r_b: p.r_b,
        },
    };
    let delta = n * rng.gen_range(0.001..0.9);
    let rate = equivalent_loan_rate(&base, &p).unwrap();
    let rep = audit(&base, delta, rate, &p).unwrap();
    (
        delta,
        rep.market_value_taxes,
        rep.market_value_profits,
        rep.gov_budget_residual_t,
        rep.gov_budget_residual_t1,
    )
}

#[test]
fn ac03_equivalence_audit() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240131);
    let mut worst = 0.0f64;
    for _ in 0..AUDIT_DRAWS {
        let (delta, t, pv, g0, g1) = random_audit(&mut rng);
        for v in [t, pv, g0, g1] {
            worst = worst.max(v.abs() / delta);
        }
    }

    let p = ModelParams::reference();
    let nu = operating_cost(0.1945, 0.1945, &p).unwrap().nu;
    let inputs = |theta_b| LoanRateInputs {
        r_n: 1.0 / 0.99 * 0.99,
        r_f: 1.0 / 0.99,
        r_r: p.r_r,
        r_k: 1.0 / 0.99,
        r_b: p.r_b,
        zeta: 0.1945,
        nu,
        xi: p.xi,
        theta_b,
    };
    let far = inputs(UNCOLLATERALIZED_THETA);
    let limit_gap = (derive_loan_rate(&far).unwrap() - no_collateral_loan_rate(&far)).abs();
    let grid: Vec<f64> = (1..=200)
        .map(|i| derive_loan_rate(&inputs(i as f64 / 200.0)).unwrap())
        .collect();
    let monotone = grid.windows(2).all(|w| w[1] > w[0]);
    let elapsed = start.elapsed();

    let ok = worst <= AUDIT_REL_TOL
        && limit_gap <= UNCOLLATERALIZED_LIMIT_TOL
        && monotone
        && elapsed < AUDIT_BUDGET;
    verdict(
        "ac03 equivalence",
        ok,
        format!(
            "{AUDIT_DRAWS} draws, worst |value|/delta={worst:.2e}; uncollateralized limit gap={limit_gap:.1e}; increasing in theta_b={monotone}; in {elapsed:?}"
        ),
    );
    assert!(ok);
}

#[test]
fn ac04_profits_insulated_business_model_not() {
    let (p, ss) = baseline();
    let mut ok = true;
    let mut details = Vec::new();
    for kind in [BaseKind::Normalized, BaseKind::Dynamic] {
        let base = BasePosition::from_steady(&ss, &p, kind);
        let rate = equivalent_loan_rate(&base, &p).unwrap();
        let rep = audit(&base, CORE_DELTA, rate, &p).unwrap();
        let before = BalanceSheet::of_base(&base);
        let after = BalanceSheet::after_shift(&base, &rep.ledger);
        let cmp = balance_sheet_snapshot(&before, &after).unwrap();
        let d_dep = after.deposits - before.deposits;
        let d_loans = after.loans - before.loans;
        let this = rep.market_value_profits.abs() <= COROLLARY_REL_TOL * CORE_DELTA
            && (d_dep + CORE_DELTA).abs() <= 1e-15
            && (d_loans - (1.0 - base.zeta) * CORE_DELTA).abs() <= 1e-15
            && cmp.shift.bonds_rise
            && cmp.shift.capital_falls;
        ok &= this;
        details.push(format!(
            "{kind:?}: P_mv={:.1e} deposits {d_dep:+.4} loans {d_loans:+.6} bonds {:+.6} capital {:+.6}",
            rep.market_value_profits,
            after.bonds - before.bonds,
            after.capital - before.capital
        ));
    }
    verdict("ac04 corollary", ok, details.join("; "));
    assert!(ok);
}

#[test]
fn ac05_ces_breakdown() {
    let (p, ss) = baseline();
    let mut base = BasePosition::from_steady(&ss, &p, BaseKind::Normalized);
    base.m = 0.5 * base.n;
    base.k_g = 1.0;
    base.k_h -= 1.0;
    let mut ok = true;
    let mut details = Vec::new();
    for eps in CES_EPSILONS {
        let rep = ces_audit(&base, CORE_DELTA, &ModelParams { epsilon: eps, ..p }).unwrap();
        let t = rep.market_value_taxes.abs() / CORE_DELTA;
        let pv = rep.market_value_profits.abs() / CORE_DELTA;
        ok &= t <= CES_TAX_REL_TOL && pv > CES_PROFIT_REL_FLOOR;
        details.push(format!("eps={eps}: |T|/delta={t:.1e} |P|/delta={pv:.2e}"));
    }
    let rep = ces_audit(
        &base,
        CORE_DELTA,
        &ModelParams {
            epsilon: CES_NEAR_PERFECT,
            ..p
        },
    )
    .unwrap();
    let pv = rep.market_value_profits.abs() / CORE_DELTA;
    ok &= pv <= CES_PROFIT_REL_FLOOR;
    details.push(format!("eps={CES_NEAR_PERFECT}: |P|/delta={pv:.1e}"));
    verdict("ac05 CES", ok, details.join("; "));
    assert!(ok);
}

#[test]
fn ac06_irf_signs_and_terminal() {
    let (p, irf, gap, elapsed) = baseline_irf();
    let at0 = |name: &str| irf.get(name).unwrap().values[0];
    let checks = [
        ("deposits > 0", at0("n") > 0.0),
        ("deposit spread < 0", at0("chi_n") < 0.0),
        ("CBDC spread < 0", at0("chi_m") < 0.0),
        (
            "CBDC spread = lambda * deposit spread",
            (at0("chi_m") - p.lambda * at0("chi_n")).abs() <= SPREAD_RATIO_TOL,
        ),
        ("consumption > 0", at0("c") > 0.0),
        ("hours < 0", at0("hours") < 0.0),
        ("central-bank loans > 0", at0("l") > 0.0),
        ("bonds > 0", at0("b") > 0.0),
        (
            "aggregate capital turns negative",
            irf.get("k").unwrap().values.iter().any(|&v| v < 0.0),
        ),
        ("bank capital > 0", at0("k_b") > 0.0),
        ("household capital < 0", at0("k_h") < 0.0),
        ("terminal period at steady state", gap <= TERMINAL_TOL),
        ("runtime", elapsed < IRF_BUDGET),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let ok = failed.is_empty();
    verdict(
        "ac06 IRF signs",
        ok,
        format!(
            "n={:+.3}% chi_n={:+.3}bp c={:+.4}% hours={:+.4}% l={:+.3}% k_b={:+.3}% k_h={:+.3}%; terminal gap={gap:.1e}; {elapsed:?}; failed: {failed:?}",
            at0("n"),
            at0("chi_n"),
            at0("c"),
            at0("hours"),
            at0("l"),
            at0("k_b"),
            at0("k_h")
        ),
    );
    assert!(ok);
}

#[test]
fn ac06b_irf_monotone_decay_after_peak() {
    let (_, irf, _, _) = baseline_irf();
    let violations: Vec<String> = irf
        .series
        .iter()
        .filter_map(|s| {
            first_decay_violation(&s.values, DECAY_REL_TOL).map(|t| format!("{}@t={t}", s.name))
        })
        .collect();
    let ok = violations.is_empty();
    verdict(
        "ac06b monotone decay",
        ok,
        format!("series leaving monotone decay after their peak: {violations:?}"),
    );
    assert!(ok);
}

#[test]
fn ac07_robustness_sweeps() {
    let start = Instant::now();
    let mut scenarios = vec![cbdc_lab::perfect_foresight::Scenario {
        label: "baseline".into(),
        overrides: vec![],
    }];
    scenarios.extend(robustness_scenarios());
    let results = sweep(
        &SweepBase::Targets(CalibrationTargets::default()),
        &scenarios,
        &ShockSpec::default(),
    );
    let elapsed = start.elapsed();

    let mut details = Vec::new();
    let mut ok = elapsed < SWEEP_BUDGET;
    let reports: Vec<Option<&IrfReport>> = results
        .iter()
        .map(|r| r.outcome.as_ref().ok().map(|o| &o.report))
        .collect();
    for (r, rep) in results.iter().zip(&reports) {
        if rep.is_none() {
            ok = false;
            details.push(format!(
                "{} failed: {}",
                r.label,
                r.outcome.as_ref().unwrap_err()
            ));
        }
    }
    if let Some(base) = reports[0] {
        let c0 = base.get("c").unwrap().values[0];
        for (r, rep) in results.iter().zip(&reports).skip(1) {
            let Some(rep) = rep else { continue };
            let same_signs = rep.signs == base.signs;
            ok &= same_signs;
            let c = rep.get("c").unwrap().values[0];
            match r.label.as_str() {
                "psi=0.8" => ok &= c.abs() > c0.abs(),
                "psi=0.5" => ok &= c.abs() < c0.abs(),
                _ => {}
            }
            let mut worst = 0.0f64;
            if r.label.starts_with("theta_b") {
                for (s, b) in rep.series.iter().zip(&base.series) {
                    for (v, w) in s.values.iter().zip(&b.values) {
                        let dev = (v - w).abs();
                        if w.abs() > POINTWISE_FLOOR {
                            worst = worst.max(dev / w.abs());
                        } else if dev > POINTWISE_FLOOR {
                            worst = f64::INFINITY;
                        }
                    }
                }
                ok &= worst < THETA_B_POINTWISE;
            }
            details.push(format!(
                "{}: signs match={same_signs} c impact={c:+.4}%{}",
                r.label,
                if r.label.starts_with("theta_b") {
                    format!(" worst pointwise rel dev={worst:.2e}")
                } else {
                    String::new()
                }
            ));
        }
        details.push(format!("baseline c impact={c0:+.4}%"));
    }
    details.push(format!("{elapsed:?}"));
    verdict("ac07 sweeps", ok, details.join("; "));
    assert!(ok);
}

#[test]
fn ac08_solver_properties() {
    // quadratic convergence on scalar benchmarks
    let opts = NewtonOptions {
        tol: 1e-14,
        record_iterates: true,
        ..NewtonOptions::default()
    };
    let mut worst_ratio = 0.0f64;
    let benches: [ScalarBench; 2] = [
        (|x| vec![x[0] * x[0] - 4.0], 3.0, 2.0),
        (|x| vec![x[0] - x[0].cos()], 1.0, 0.739_085_133_215_160_6),
    ];
    for (f, x0, root) in benches {
        let sol = newton_solve(f, &[x0], &opts).unwrap();
        let errs: Vec<f64> = sol.iterates.iter().map(|x| (x[0] - root).abs()).collect();
        for w in errs.windows(2) {
            if w[0] > 1e-6 && w[1] > 0.0 {
                worst_ratio = worst_ratio.max(w[1] / (w[0] * w[0]));
            }
        }
    }

    // finite-difference Jacobian against analytic derivatives
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_jac = 0.0f64;
    for _ in 0..JACOBIAN_MAPS {
        let n = rng.gen_range(2..7);
        let a: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0.2..2.0)).collect())
            .collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let f = |x: &[f64]| -> Vec<f64> {
            let g = x.iter().zip(&e).map(|(xi, ei)| xi * ei).sum::<f64>().exp();
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| a[i][j] * (b[i][j] * x[j]).sin())
                        .sum::<f64>()
                        + c[i] * x[i] * x[i]
                        + 0.5 * g
                })
                .collect()
        };
        let g = x.iter().zip(&e).map(|(xi, ei)| xi * ei).sum::<f64>().exp();
        let jac = fd_jacobian(&f, &x, &NewtonOptions::default()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let exact = a[i][j] * b[i][j] * (b[i][j] * x[j]).cos()
                    + if i == j { 2.0 * c[i] * x[i] } else { 0.0 }
                    + 0.5 * g * e[j];
                let rel = (jac.row(i)[j] - exact).abs() / exact.abs().max(1.0);
                worst_jac = worst_jac.max(rel);
            }
        }
    }

    // horizon insensitivity
    let (p, ss) = baseline();
    let short = irf_report(&solve_transition(&ss, &ShockSpec::default(), &p).unwrap());
    let long = irf_report(
        &solve_transition(
            &ss,
            &ShockSpec {
                horizon: 400,
                ..ShockSpec::default()
            },
            &p,
        )
        .unwrap(),
    );
    let mut worst_horizon = 0.0f64;
    for (a, b) in short.series.iter().zip(&long.series) {
        let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            continue;
        }
        for t in 0..HORIZON_QUARTERS {
            worst_horizon = worst_horizon.max((a.values[t] - b.values[t]).abs() / scale);
        }
    }

    let ok = worst_ratio <= QUADRATIC_RATIO_BOUND
        && worst_ratio > 0.0
        && worst_jac <= JACOBIAN_REL_TOL
        && worst_horizon <= HORIZON_REL_TOL;
    verdict(
        "ac08 solver",
        ok,
        format!(
            "max e_(k+1)/e_k^2={worst_ratio:.3}; worst Jacobian rel error={worst_jac:.1e} over {JACOBIAN_MAPS} maps; T=200 vs T=400 first {HORIZON_QUARTERS} quarters rel gap={worst_horizon:.1e}"
        ),
    );
    assert!(ok);
}

#[test]
fn ac09_binding_condition() {
    let (p, ss) = baseline();
    let s = ss.state;
    let margin = binding_condition(s.l_next, s.z_next, s.chi_n, s.r_f_next, &p).unwrap();
    let identity = (s.l_next - p.theta_b * s.b_next / p.r_l).abs();
    let ok = margin > 0.0 && identity <= 1e-12;
    verdict(
        "ac09 binding",
        ok,
        format!("margin={margin:.3e} collateral identity gap={identity:.1e}"),
    );
    assert!(ok);
}
