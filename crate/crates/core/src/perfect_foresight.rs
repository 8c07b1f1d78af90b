//! Deterministic transition after an unanticipated CBDC-share impulse.
//!
//! The economy starts at the no-CBDC steady state; the share path is then
//! perfectly foreseen. Six unknowns per period (`c`, `x`, `k_next`, `chi_n`,
//! `R_f_next`, `n_next`) are stacked over the horizon; every other field of a
//! period follows in closed form. The terminal period looks ahead to the
//! steady state with its return on capital evaluated at the final capital
//! stock.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, rederive_policy_terms, CalibrationTargets};
use crate::error::{Error, Result};
use crate::model::{
    household_budget_gap, loan_demand, operating_cost, period_residuals, production, reserve_ratio,
    resource_gap, spread, tax_closing_budget, Equation, Holdings, LoanBranch, ModelParams,
    PeriodState,
};
use crate::numerics::{inf_norm, newton_solve, Band, NewtonOptions};
use crate::steady_state::{solve_steady_state, SteadyState};

/// Bound on every equation at every period of an accepted transition.
pub const VERIFY_TOL: f64 = 1e-8;

const UNKNOWNS: usize = 6;
const CORE: [Equation; UNKNOWNS] = [
    Equation::Euler,
    Equation::RiskFree,
    Equation::Leisure,
    Equation::Resource,
    Equation::DepositDemand,
    Equation::DepositSpread,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShockSpec {
    /// CBDC share of steady-state output at impact.
    pub impulse: f64,
    pub persistence: f64,
    /// Number of solved quarters.
    pub horizon: usize,
}

impl Default for ShockSpec {
    fn default() -> Self {
        Self {
            impulse: 0.05,
            persistence: 0.9,
            horizon: 200,
        }
    }
}

impl ShockSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.impulse >= 0.0) || !self.impulse.is_finite() {
            return Err(Error::InvalidParams("impulse must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return Err(Error::InvalidParams("persistence must lie in [0,1)".into()));
        }
        if self.horizon < 20 {
            return Err(Error::InvalidParams("horizon must be at least 20".into()));
        }
        Ok(())
    }
}

/// CBDC share path: the impulse at `t = 0`, decaying geometrically.
pub fn theta_path(shock: &ShockSpec) -> Vec<f64> {
    let mut path = Vec::with_capacity(shock.horizon);
    let mut theta = shock.impulse;
    for _ in 0..shock.horizon {
        path.push(theta);
        theta *= shock.persistence;
    }
    path
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOptions {
    pub newton: NewtonOptions,
    pub verify_tol: f64,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions {
                band: Some(Band {
                    lower: 2 * UNKNOWNS - 1,
                    upper: 2 * UNKNOWNS - 1,
                }),
                ..NewtonOptions::default()
            },
            verify_tol: VERIFY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionDiagnostics {
    pub iterations: usize,
    pub residual_norm: f64,
    /// Largest residual over all equations and periods, and where it occurs.
    pub max_residual: f64,
    pub worst_period: usize,
    pub worst_equation: Equation,
    /// Largest gap between the solved capital path and the one obtained by
    /// rolling the resource constraint forward from the initial stock,
    /// relative to steady-state capital.
    pub capital_audit_gap: f64,
    /// Largest difference between the household budget gap and the resource
    /// constraint gap along the path.
    pub walras_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchFlip {
    pub period: usize,
    pub branch: LoanBranch,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<PeriodState>,
    pub theta: Vec<f64>,
    /// Household and government capital carried out of each period.
    pub holdings: Vec<Holdings>,
    pub taxes: Vec<f64>,
    /// Periods whose loan demand left the steady-state branch.
    pub branch_flips: Vec<BranchFlip>,
    pub steady: SteadyState,
    pub diagnostics: TransitionDiagnostics,
}

struct PathContext<'a> {
    p: &'a ModelParams,
    ss: &'a SteadyState,
    theta: &'a [f64],
}

impl PathContext<'_> {
    fn build_state(&self, u: &[f64], k_t: f64, theta_m: f64) -> Option<PeriodState> {
        let p = self.p;
        let ys = self.ss.output();
        let (c, x, k_next, chi_n, r_f, n) = (u[0], u[1], u[2], u[3], u[4], u[5]);
        if !(c > 0.0 && x > 0.0 && x < 1.0 && k_next > 0.0 && chi_n > 0.0 && n > 0.0) {
            return None;
        }
        let prod = production(k_t, 1.0 - x, p).ok()?;
        let chi_r = spread(p.r_r, r_f).ok()?;
        let zeta = reserve_ratio(chi_r, p).ok()?;
        let chi_l = spread(p.r_l, r_f).ok()?;
        let chi_b = spread(p.r_b, r_f).ok()?;
        let m = theta_m * ys;
        let z = n + p.lambda * m;
        let l = loan_demand(chi_l, chi_b, chi_n, r_f, z, p).ok()?.quantity;
        Some(PeriodState {
            c,
            x,
            k_next,
            n_next: n,
            m_next: m,
            z_next: z,
            zeta_next: zeta,
            r_next: zeta * n,
            l_next: l,
            b_next: l * p.r_l / p.theta_b,
            chi_n,
            chi_m: p.lambda * chi_n,
            chi_r,
            chi_l,
            chi_b,
            r_f_next: r_f,
            r_k: 1.0 - p.delta + prod.f_k,
            w: prod.f_l,
            theta_m,
            y: prod.y,
        })
    }

    fn build_path(&self, u: &[f64]) -> Option<Vec<PeriodState>> {
        let mut states: Vec<PeriodState> = Vec::with_capacity(self.theta.len());
        let mut k_t = self.ss.state.k_next;
        for (t, theta_m) in self.theta.iter().enumerate() {
            let s = self.build_state(&u[t * UNKNOWNS..(t + 1) * UNKNOWNS], k_t, *theta_m)?;
            k_t = s.k_next;
            states.push(s);
        }
        Some(states)
    }

    fn terminal(&self, k_final: f64) -> Option<PeriodState> {
        let mut s = self.ss.state;
        let prod = production(k_final, s.labor(), self.p).ok()?;
        s.r_k = 1.0 - self.p.delta + prod.f_k;
        Some(s)
    }

    fn neighbours<'s>(
        &'s self,
        states: &'s [PeriodState],
        terminal: &'s PeriodState,
        t: usize,
    ) -> (&'s PeriodState, &'s PeriodState) {
        let prev = if t == 0 {
            &self.ss.state
        } else {
            &states[t - 1]
        };
        let next = if t + 1 == states.len() {
            terminal
        } else {
            &states[t + 1]
        };
        (prev, next)
    }

    fn core_residuals(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let Some(states) = self.build_path(u) else {
            return vec![f64::NAN; n];
        };
        let Some(terminal) = self.terminal(states[states.len() - 1].k_next) else {
            return vec![f64::NAN; n];
        };
        let mut out = Vec::with_capacity(n);
        for t in 0..states.len() {
            let (prev, next) = self.neighbours(&states, &terminal, t);
            match period_residuals(prev, &states[t], next, self.p, self.ss.output()) {
                Ok(res) => out.extend(CORE.iter().map(|eq| res.get(*eq))),
                Err(_) => return vec![f64::NAN; n],
            }
        }
        out
    }

    fn worst_core(&self, u: &[f64]) -> (usize, Equation, f64) {
        let f = self.core_residuals(u);
        let (idx, val) = f
            .iter()
            .enumerate()
            .max_by(|a, b| {
                if a.1.is_nan() {
                    std::cmp::Ordering::Greater
                } else if b.1.is_nan() {
                    std::cmp::Ordering::Less
                } else {
                    a.1.abs().total_cmp(&b.1.abs())
                }
            })
            .map(|(i, v)| (i, *v))
            .unwrap_or((0, f64::NAN));
        (idx / UNKNOWNS, CORE[idx % UNKNOWNS], val)
    }
}

fn steady_unknowns(ss: &SteadyState, horizon: usize) -> Vec<f64> {
    let s = &ss.state;
    let block = [s.c, s.x, s.k_next, s.chi_n, s.r_f_next, s.n_next];
    block
        .iter()
        .copied()
        .cycle()
        .take(horizon * UNKNOWNS)
        .collect()
}

/// Net public claims `m + r + b - l` carried out of a period.
fn public_position(s: &PeriodState) -> f64 {
    s.m_next + s.r_next + s.b_next - s.l_next
}

pub fn solve_transition(
    ss: &SteadyState,
    shock: &ShockSpec,
    p: &ModelParams,
) -> Result<Trajectory> {
    solve_transition_with(ss, shock, p, &TransitionOptions::default())
}

pub fn solve_transition_with(
    ss: &SteadyState,
    shock: &ShockSpec,
    p: &ModelParams,
    opts: &TransitionOptions,
) -> Result<Trajectory> {
    p.validate()?;
    shock.validate()?;
    let theta = theta_path(shock);
    let ctx = PathContext {
        p,
        ss,
        theta: &theta,
    };

    let x0 = steady_unknowns(ss, shock.horizon);
    let sol = match newton_solve(|u: &[f64]| ctx.core_residuals(u), &x0, &opts.newton) {
        Ok(sol) => sol,
        Err(failure) => {
            let (period, equation, residual) = ctx.worst_core(&failure.x);
            return Err(Error::Transition {
                source: failure,
                period,
                equation,
                residual,
            });
        }
    };

    let states = ctx
        .build_path(&sol.x)
        .ok_or_else(|| Error::Integrity("converged path left the model domain".into()))?;
    let terminal = ctx
        .terminal(states[states.len() - 1].k_next)
        .ok_or_else(|| Error::Integrity("terminal capital outside the model domain".into()))?;

    let mut worst = (0usize, Equation::Euler, 0.0f64);
    let mut branch_flips = Vec::new();
    for t in 0..states.len() {
        let (prev, next) = ctx.neighbours(&states, &terminal, t);
        let res = period_residuals(prev, &states[t], next, p, ss.output())?;
        let (eq, v) = res.worst();
        if !(v.abs() <= worst.2.abs()) {
            worst = (t, eq, v);
        }
        if res.loan_branch.is_interior() != ss.loan_branch.is_interior() {
            branch_flips.push(BranchFlip {
                period: t,
                branch: res.loan_branch,
            });
        }
    }
    if !(worst.2.abs() <= opts.verify_tol) {
        return Err(Error::TransitionCheck {
            period: worst.0,
            equation: worst.1,
            residual: worst.2,
        });
    }

    let ss_position = public_position(&ss.state);
    let holdings: Vec<Holdings> = states
        .iter()
        .map(|s| Holdings::with_government_capital(s, public_position(s) - ss_position))
        .collect();

    let mut taxes = Vec::with_capacity(states.len());
    let mut walras_gap = 0.0f64;
    let mut capital_audit_gap = 0.0f64;
    let mut k_roll = ss.state.k_next;
    let ss_hold = ss.holdings();
    for t in 0..states.len() {
        let (prev, _) = ctx.neighbours(&states, &terminal, t);
        let cur = &states[t];
        let hold_prev = if t == 0 { &ss_hold } else { &holdings[t - 1] };
        let tau = tax_closing_budget(prev, cur, hold_prev, &holdings[t], p);
        let hh = household_budget_gap(prev, cur, hold_prev, &holdings[t], tau, p)?;
        walras_gap = walras_gap.max((hh - resource_gap(prev, cur, p)?).abs());
        taxes.push(tau);

        let prod = production(k_roll, cur.labor(), p)?;
        let cost = operating_cost(cur.zeta_next, cur.zeta_next, p)?;
        k_roll = prod.y + k_roll * (1.0 - p.delta)
            - cur.c
            - (cur.m_next * p.mu + cur.n_next * (cost.nu + cur.zeta_next * p.rho_res));
        capital_audit_gap = capital_audit_gap.max((k_roll - cur.k_next).abs() / ss.state.k_next);
    }

    Ok(Trajectory {
        states,
        theta,
        holdings,
        taxes,
        branch_flips,
        steady: *ss,
        diagnostics: TransitionDiagnostics {
            iterations: sol.iterations,
            residual_norm: sol.residual_norm,
            max_residual: worst.2.abs(),
            worst_period: worst.0,
            worst_equation: worst.1,
            capital_audit_gap,
            walras_gap,
        },
    })
}

impl Trajectory {
    /// Largest relative distance of the final period from the steady state
    /// over all state fields; fields that are zero at the steady state are
    /// measured in absolute terms.
    pub fn terminal_gap(&self) -> f64 {
        let last = self.states[self.states.len() - 1].named_fields();
        let ss = self.steady.state.named_fields();
        last.iter()
            .zip(ss.iter())
            .map(|((_, a), (_, b))| {
                let scale = if *b == 0.0 { 1.0 } else { b.abs() };
                (a - b).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Core residual infinity-norm of this trajectory re-evaluated from
    /// scratch.
    pub fn recheck(&self, p: &ModelParams) -> f64 {
        let ctx = PathContext {
            p,
            ss: &self.steady,
            theta: &self.theta,
        };
        let u: Vec<f64> = self
            .states
            .iter()
            .flat_map(|s| [s.c, s.x, s.k_next, s.chi_n, s.r_f_next, s.n_next])
            .collect();
        inf_norm(&ctx.core_residuals(&u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// `100 * (v - v_ss) / v_ss`.
    Percent,
    /// `1e4 * (v - v_ss)`.
    BasisPoints,
    /// The level itself (series that are zero at the steady state).
    Level,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrfSeries {
    pub name: &'static str,
    pub unit: Unit,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub period: usize,
    pub value: f64,
}

/// Capital ownership deviations from the steady state, in levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapitalDecomposition {
    pub household: Vec<f64>,
    pub bank: Vec<f64>,
    pub government: Vec<f64>,
    pub total: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrfReport {
    pub series: Vec<IrfSeries>,
    /// Sign of each series at impact: +1, -1 or 0.
    pub signs: BTreeMap<String, i8>,
    pub peaks: BTreeMap<String, Peak>,
    pub decomposition: CapitalDecomposition,
}

/// Deviations smaller than this count as zero in sign summaries.
pub const SIGN_EPS: f64 = 1e-12;

impl IrfReport {
    pub fn get(&self, name: &str) -> Option<&IrfSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.series.iter().map(|s| s.name).collect()
    }

    pub fn len(&self) -> usize {
        self.series.first().map_or(0, |s| s.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sign(v: f64) -> i8 {
    if v > SIGN_EPS {
        1
    } else if v < -SIGN_EPS {
        -1
    } else {
        0
    }
}

type Extractor = fn(&PeriodState, &Holdings) -> f64;

/// Reported series names, in report order.
pub fn series_names() -> Vec<&'static str> {
    SERIES.iter().map(|(name, _, _)| *name).collect()
}

const SERIES: [(&str, Unit, Extractor); 21] = [
    ("m", Unit::Level, |s, _| s.m_next),
    ("n", Unit::Percent, |s, _| s.n_next),
    ("chi_n", Unit::BasisPoints, |s, _| s.chi_n),
    ("chi_m", Unit::BasisPoints, |s, _| s.chi_m),
    ("c", Unit::Percent, |s, _| s.c),
    ("hours", Unit::Percent, |s, _| s.labor()),
    ("y", Unit::Percent, |s, _| s.y),
    ("w", Unit::Percent, |s, _| s.w),
    ("k", Unit::Percent, |s, _| s.k_next),
    ("k_h", Unit::Percent, |_, h| h.k_h),
    ("k_b", Unit::Percent, |s, _| s.bank_capital()),
    ("k_g", Unit::Level, |_, h| h.k_g),
    ("l", Unit::Percent, |s, _| s.l_next),
    ("b", Unit::Percent, |s, _| s.b_next),
    ("r", Unit::Percent, |s, _| s.r_next),
    ("z", Unit::Percent, |s, _| s.z_next),
    ("zeta", Unit::BasisPoints, |s, _| s.zeta_next),
    ("R_f", Unit::BasisPoints, |s, _| s.r_f_next),
    ("R_k", Unit::BasisPoints, |s, _| s.r_k),
    ("R_n", Unit::BasisPoints, |s, _| s.r_n_next()),
    ("R_m", Unit::BasisPoints, |s, _| s.r_m_next()),
];

/// Deviation series in reporting units, impact signs, peaks and the capital
/// ownership breakdown.
pub fn irf_report(traj: &Trajectory) -> IrfReport {
    let ss = &traj.steady;
    let ss_hold = ss.holdings();
    let mut series = Vec::with_capacity(SERIES.len());
    let mut signs = BTreeMap::new();
    let mut peaks = BTreeMap::new();
    for (name, unit, get) in SERIES {
        let base = get(&ss.state, &ss_hold);
        let values: Vec<f64> = traj
            .states
            .iter()
            .zip(&traj.holdings)
            .map(|(s, h)| {
                let v = get(s, h);
                match unit {
                    Unit::Percent => 100.0 * (v - base) / base,
                    Unit::BasisPoints => 1e4 * (v - base),
                    Unit::Level => v - base,
                }
            })
            .collect();
        signs.insert(name.to_string(), sign(values[0]));
        let (period, value) = values.iter().enumerate().fold((0, 0.0f64), |acc, (t, v)| {
            if v.abs() > acc.1.abs() {
                (t, *v)
            } else {
                acc
            }
        });
        peaks.insert(name.to_string(), Peak { period, value });
        series.push(IrfSeries { name, unit, values });
    }

    let dev = |f: &dyn Fn(&PeriodState, &Holdings) -> f64| -> Vec<f64> {
        let base = f(&ss.state, &ss_hold);
        traj.states
            .iter()
            .zip(&traj.holdings)
            .map(|(s, h)| f(s, h) - base)
            .collect()
    };
    let decomposition = CapitalDecomposition {
        household: dev(&|_, h| h.k_h),
        bank: dev(&|s, _| s.bank_capital()),
        government: dev(&|_, h| h.k_g),
        total: dev(&|s, _| s.k_next),
    };

    IrfReport {
        series,
        signs,
        peaks,
        decomposition,
    }
}

/// First period after the peak at which `values` moves away from zero by more
/// than `rel_tol` times the peak magnitude, if any.
pub fn first_decay_violation(values: &[f64], rel_tol: f64) -> Option<usize> {
    let (peak_t, peak) = values.iter().enumerate().fold((0, 0.0f64), |acc, (t, v)| {
        if v.abs() > acc.1.abs() {
            (t, *v)
        } else {
            acc
        }
    });
    let tol = rel_tol * peak.abs();
    let mut bound = peak.abs();
    for (t, v) in values.iter().enumerate().skip(peak_t + 1) {
        let crossed = v.signum() != peak.signum() && v.abs() > tol;
        if crossed || v.abs() > bound + tol {
            return Some(t);
        }
        bound = bound.min(v.abs());
    }
    None
}

/// Where sweep scenarios start from.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepBase {
    /// Overrides of targets or presets trigger a full recalibration.
    Targets(CalibrationTargets),
    /// Overrides apply to a fixed parameter vector; the CBDC cost and the
    /// equivalent loan rate are then recomputed.
    Params(ModelParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub overrides: Vec<(String, f64)>,
}

impl Scenario {
    pub fn single(key: &str, value: f64) -> Self {
        Self {
            label: format!("{key}={value}"),
            overrides: vec![(key.to_string(), value)],
        }
    }
}

/// Robustness scenarios varying the CBDC liquidity benefit, the
/// intratemporal elasticity and the bond haircut.
pub fn robustness_scenarios() -> Vec<Scenario> {
    [
        ("lambda", 0.5),
        ("lambda", 1.5),
        ("psi", 0.8),
        ("psi", 0.5),
        ("theta_b", 0.999),
        ("theta_b", 0.985),
    ]
    .iter()
    .map(|(k, v)| Scenario::single(k, *v))
    .collect()
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub params: ModelParams,
    pub steady: SteadyState,
    pub trajectory: Trajectory,
    pub report: IrfReport,
}

#[derive(Debug)]
pub struct ScenarioResult {
    pub label: String,
    pub outcome: Result<ScenarioOutput>,
}

/// Parameters for one scenario.
pub fn scenario_params(base: &SweepBase, scenario: &Scenario) -> Result<ModelParams> {
    const DERIVED: [&str; 2] = ["mu", "R_l"];
    match base {
        SweepBase::Targets(targets) => {
            let mut t = *targets;
            let mut direct = Vec::new();
            for (k, v) in &scenario.overrides {
                if CalibrationTargets::accepts(k) {
                    t.set(k, *v)?;
                } else {
                    direct.push((k, *v));
                }
            }
            let mut p = calibrate(&t)?;
            for (k, v) in direct {
                p.set(k, v)?;
            }
            p.validate()?;
            Ok(p)
        }
        SweepBase::Params(params) => {
            let mut p = *params;
            for (k, v) in &scenario.overrides {
                p.set(k, *v)?;
            }
            let mut p = rederive_policy_terms(&p)?;
            for (k, v) in &scenario.overrides {
                if DERIVED.contains(&k.as_str()) {
                    p.set(k, *v)?;
                }
            }
            p.validate()?;
            Ok(p)
        }
    }
}

pub fn run_scenario(p: &ModelParams, shock: &ShockSpec) -> Result<ScenarioOutput> {
    let steady = solve_steady_state(p)?;
    let trajectory = solve_transition(&steady, shock, p)?;
    let report = irf_report(&trajectory);
    Ok(ScenarioOutput {
        params: *p,
        steady,
        trajectory,
        report,
    })
}

/// Solves every scenario independently, in parallel. A failing scenario does
/// not affect the others; results keep the input order.
pub fn sweep(base: &SweepBase, scenarios: &[Scenario], shock: &ShockSpec) -> Vec<ScenarioResult> {
    scenarios
        .par_iter()
        .map(|sc| ScenarioResult {
            label: sc.label.clone(),
            outcome: scenario_params(base, sc).and_then(|p| run_scenario(&p, shock)),
        })
        .collect()
}
