//! The rest point without CBDC.
//!
//! Everything except consumption and leisure follows in closed form from the
//! policy rates; `(c, x)` solve the labor-supply and resource conditions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    deposit_demand, deposit_spread, loan_demand, omega_terms, operating_cost, period_residuals,
    reserve_ratio, spread, tax_closing_budget, Holdings, LoanBranch, ModelParams, PeriodState,
};
use crate::numerics::{newton_solve, NewtonOptions};

/// Residual bound on the full equation stack at the steady state.
pub const VERIFY_TOL: f64 = 1e-9;
/// Newton tolerance on the consumption/leisure core.
pub const CORE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyDiagnostics {
    /// Largest full-stack residual at `(ss, ss, ss)`.
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub state: PeriodState,
    pub tau: f64,
    pub k_h: f64,
    pub k_g: f64,
    pub loan_branch: LoanBranch,
    pub diagnostics: SteadyDiagnostics,
}

impl SteadyState {
    pub fn output(&self) -> f64 {
        self.state.y
    }

    pub fn holdings(&self) -> Holdings {
        Holdings {
            k_h: self.k_h,
            k_g: self.k_g,
        }
    }

    /// Steady-state report rows `(name, value)` in a fixed order.
    pub fn report_rows(&self) -> Vec<(&'static str, f64)> {
        let s = &self.state;
        let mut rows: Vec<(&'static str, f64)> = s.named_fields().to_vec();
        rows.extend([
            ("labor", s.labor()),
            ("R_n", s.r_n_next()),
            ("R_m", s.r_m_next()),
            ("bank_capital", s.bank_capital()),
            ("k_h", self.k_h),
            ("k_g", self.k_g),
            ("tau", self.tau),
            ("c_over_z", s.c / s.z_next),
            ("residual_norm", self.diagnostics.residual_norm),
        ]);
        rows
    }
}

struct Block {
    r_f: f64,
    capital_labor: f64,
    w: f64,
    chi_n: f64,
    chi_r: f64,
    chi_l: f64,
    chi_b: f64,
    zeta: f64,
    absorb_per_deposit: f64,
}

fn closed_form_block(p: &ModelParams) -> Result<Block> {
    let r_f = 1.0 / p.beta;
    let capital_labor = (p.alpha / (r_f - 1.0 + p.delta)).powf(1.0 / (1.0 - p.alpha));
    let chi_r = spread(p.r_r, r_f)?;
    let zeta = reserve_ratio(chi_r, p)?;
    let cost = operating_cost(zeta, zeta, p)?;
    Ok(Block {
        r_f,
        capital_labor,
        w: (1.0 - p.alpha) * capital_labor.powf(p.alpha),
        chi_n: deposit_spread(zeta, 1.0, p)?,
        chi_r,
        chi_l: spread(p.r_l, r_f)?,
        chi_b: spread(p.r_b, r_f)?,
        zeta,
        absorb_per_deposit: cost.nu + zeta * p.rho_res,
    })
}

/// Initial `(c, x)` guess: three quarters of output at one third labor.
pub fn default_guess(p: &ModelParams) -> Result<[f64; 2]> {
    let b = closed_form_block(p)?;
    let y = b.capital_labor.powf(p.alpha) / 3.0;
    Ok([0.75 * y, 2.0 / 3.0])
}

pub fn solve_steady_state(p: &ModelParams) -> Result<SteadyState> {
    solve_steady_state_from(p, default_guess(p)?)
}

/// Solves from an explicit `(c, x)` starting point.
pub fn solve_steady_state_from(p: &ModelParams, guess: [f64; 2]) -> Result<SteadyState> {
    p.validate()?;
    if p.epsilon != 0.0 {
        return Err(Error::Unsupported(
            "steady state requires perfect substitutes (epsilon = 0)".into(),
        ));
    }
    let b = closed_form_block(p)?;
    let omega = omega_terms(b.chi_n, p)?;

    let core = |v: &[f64]| -> Vec<f64> {
        let (c, x) = (v[0], v[1]);
        if !(c > 0.0 && x > 0.0 && x < 1.0) {
            return vec![f64::NAN; 2];
        }
        let ell = 1.0 - x;
        let k = b.capital_labor * ell;
        let y = b.capital_labor.powf(p.alpha) * ell;
        let n = c * (p.iota / ((1.0 - p.iota) * b.chi_n)).powf(1.0 / p.psi);
        let mu = c.powf(-p.sigma) * x.powf(p.upsilon) * omega.c;
        let leisure =
            c.powf(1.0 - p.sigma) / (1.0 - p.sigma) * p.upsilon * x.powf(p.upsilon - 1.0) * omega.x;
        vec![
            leisure / (b.w * mu) - 1.0,
            (p.delta * k + c + n * b.absorb_per_deposit - y) / y,
        ]
    };
    let opts = NewtonOptions {
        tol: CORE_TOL,
        ..NewtonOptions::default()
    };
    let sol = newton_solve(core, &guess, &opts).map_err(Error::SteadyState)?;
    let (c, x) = (sol.x[0], sol.x[1]);

    let ell = 1.0 - x;
    let k = b.capital_labor * ell;
    let n = deposit_demand(c, b.chi_n, p)?;
    let loans = loan_demand(b.chi_l, b.chi_b, b.chi_n, b.r_f, n, p)?;
    let state = PeriodState {
        c,
        x,
        k_next: k,
        n_next: n,
        m_next: 0.0,
        z_next: n,
        zeta_next: b.zeta,
        r_next: b.zeta * n,
        l_next: loans.quantity,
        b_next: loans.quantity * p.r_l / p.theta_b,
        chi_n: b.chi_n,
        chi_m: p.lambda * b.chi_n,
        chi_r: b.chi_r,
        chi_l: b.chi_l,
        chi_b: b.chi_b,
        r_f_next: b.r_f,
        r_k: b.r_f,
        w: b.w,
        theta_m: 0.0,
        y: k.powf(p.alpha) * ell.powf(1.0 - p.alpha),
    };

    let res = period_residuals(&state, &state, &state, p, state.y)?;
    let (equation, worst) = res.worst();
    if !(worst.abs() <= VERIFY_TOL) {
        return Err(Error::SteadyStateCheck {
            equation,
            residual: worst,
        });
    }

    let k_g = 0.0;
    let holdings = Holdings::with_government_capital(&state, k_g);
    Ok(SteadyState {
        state,
        tau: tax_closing_budget(&state, &state, &holdings, &holdings, p),
        k_h: holdings.k_h,
        k_g,
        loan_branch: loans.branch,
        diagnostics: SteadyDiagnostics {
            residual_norm: worst.abs(),
            iterations: sol.iterations,
        },
    })
}

/// Household capital `k - (n + l - r - b) - k_g`.
pub fn steady_household_capital(ss: &SteadyState, k_g: f64) -> Result<f64> {
    let k_h = ss.state.k_next - ss.state.bank_capital() - k_g;
    if k_h < 0.0 {
        return Err(Error::Infeasible {
            what: "household capital",
            margin: k_h,
        });
    }
    Ok(k_h)
}
