//! Per-period equilibrium residuals.

use serde::Serialize;

use super::functions::{
    deposit_demand, deposit_spread, loan_demand, marginal_utility_of_consumption, omega_terms,
    operating_cost, production, sdf, spread, LoanBranch,
};
use super::{ModelParams, PeriodState};
use crate::error::{Error, Result};

/// Equations evaluated by [`period_residuals`], in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Equation {
    Euler,
    RiskFree,
    Leisure,
    Resource,
    DepositDemand,
    RealBalances,
    DepositSpread,
    ReserveRatio,
    Reserves,
    CbdcSpread,
    ReserveSpread,
    LoanSpread,
    BondSpread,
    BondDemand,
    LoanDemand,
    ReturnOnCapital,
    Wage,
    Output,
    CbdcRule,
}

impl Equation {
    pub const ALL: [Equation; 19] = [
        Equation::Euler,
        Equation::RiskFree,
        Equation::Leisure,
        Equation::Resource,
        Equation::DepositDemand,
        Equation::RealBalances,
        Equation::DepositSpread,
        Equation::ReserveRatio,
        Equation::Reserves,
        Equation::CbdcSpread,
        Equation::ReserveSpread,
        Equation::LoanSpread,
        Equation::BondSpread,
        Equation::BondDemand,
        Equation::LoanDemand,
        Equation::ReturnOnCapital,
        Equation::Wage,
        Equation::Output,
        Equation::CbdcRule,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodResiduals {
    pub values: [f64; 19],
    pub loan_branch: LoanBranch,
}

impl PeriodResiduals {
    pub fn get(&self, eq: Equation) -> f64 {
        self.values[eq as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Equation, f64)> + '_ {
        Equation::ALL
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Largest residual in absolute value. NaN entries win.
    pub fn worst(&self) -> (Equation, f64) {
        self.iter()
            .max_by(|a, b| {
                let (x, y) = (a.1.abs(), b.1.abs());
                if x.is_nan() {
                    std::cmp::Ordering::Greater
                } else if y.is_nan() {
                    std::cmp::Ordering::Less
                } else {
                    x.total_cmp(&y)
                }
            })
            .expect("non-empty")
    }

    pub fn max_abs(&self) -> f64 {
        self.worst().1.abs()
    }
}

/// Residuals of every equilibrium condition at date `t`.
///
/// `prev` supplies the capital stock `k_t`, `next` the date `t+1` marginal
/// utility and return on capital. Quantity equations are divided by
/// `steady_output`; rate equations are left in levels. The loan-demand
/// residual uses the nonnegative branch and the branch taken is reported.
pub fn period_residuals(
    prev: &PeriodState,
    cur: &PeriodState,
    next: &PeriodState,
    p: &ModelParams,
    steady_output: f64,
) -> Result<PeriodResiduals> {
    if !(steady_output > 0.0) {
        return Err(Error::domain("steady output", steady_output));
    }
    let ys = steady_output;
    let k = prev.k_next;
    let prod = production(k, cur.labor(), p)?;
    let lambda = sdf(cur, next, p)?;
    let mu = marginal_utility_of_consumption(cur, p)?;
    let omega = omega_terms(cur.chi_n, p)?;
    let cost = operating_cost(cur.zeta_next, cur.zeta_next, p)?;
    if !(cur.z_next > 0.0) {
        return Err(Error::domain("z", cur.z_next));
    }

    let leisure_value = cur.c.powf(1.0 - p.sigma) / (1.0 - p.sigma)
        * p.upsilon
        * cur.x.powf(p.upsilon - 1.0)
        * omega.x;
    let absorbed = cur.m_next * p.mu + cur.n_next * (cost.nu + cur.zeta_next * p.rho_res);
    let loans = loan_demand(cur.chi_l, cur.chi_b, cur.chi_n, cur.r_f_next, cur.z_next, p)?;
    let rf = cur.r_f_next;

    let values = [
        1.0 - lambda * next.r_k,
        rf * lambda - 1.0,
        leisure_value / (cur.w * mu) - 1.0,
        (cur.k_next - (cur.y + k * (1.0 - p.delta) - cur.c - absorbed)) / ys,
        (cur.z_next - deposit_demand(cur.c, cur.chi_n, p)?) / ys,
        (cur.z_next - cur.n_next - p.lambda * cur.m_next) / ys,
        cur.chi_n - deposit_spread(cur.zeta_next, cur.n_next / cur.z_next, p)?,
        cur.chi_r - p.phi1 * (p.varphi - 1.0) * cur.zeta_next.powf(-p.varphi),
        (cur.r_next - cur.zeta_next * cur.n_next) / ys,
        cur.chi_m - p.lambda * cur.chi_n,
        cur.chi_r - spread(p.r_r, rf)?,
        cur.chi_l - spread(p.r_l, rf)?,
        cur.chi_b - spread(p.r_b, rf)?,
        (cur.b_next - cur.l_next * p.r_l / p.theta_b) / ys,
        (cur.l_next - loans.quantity) / ys,
        cur.r_k - (1.0 - p.delta + prod.f_k),
        cur.w - prod.f_l,
        (cur.y - prod.y) / ys,
        (cur.m_next - cur.theta_m * ys) / ys,
    ];
    Ok(PeriodResiduals {
        values,
        loan_branch: loans.branch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LoanFoc {
    Residual(f64),
    /// Corner with `l = 0`: the marginal benefit of a loan is below its cost by
    /// `-margin`.
    Slack(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BankFocResiduals {
    pub deposit: f64,
    pub loan: LoanFoc,
}

/// The bank's deposit and loan first-order conditions, with demand-schedule
/// elasticities written in closed form (`psi*chi_n*n/z` and `psi*chi_n*l/z`).
pub fn bank_foc_residuals(s: &PeriodState, p: &ModelParams) -> Result<BankFocResiduals> {
    if !(s.z_next > 0.0) {
        return Err(Error::domain("z", s.z_next));
    }
    let cost = operating_cost(s.zeta_next, s.zeta_next, p)?;
    let deposit = s.chi_n
        - ((cost.nu - p.xi) + s.chi_r * s.zeta_next)
        - p.psi * s.chi_n * s.n_next / s.z_next;

    let margin = s.chi_l - s.chi_b * p.r_l / p.theta_b;
    let loan = if s.l_next == 0.0 && margin < 0.0 {
        LoanFoc::Slack(margin)
    } else {
        let inv_eta_l = p.psi * s.chi_n * s.l_next * s.r_f_next / (s.z_next * p.r_l);
        LoanFoc::Residual(
            s.chi_l
                - s.chi_b * (p.r_l / p.theta_b) * (1.0 + inv_eta_l)
                - p.psi * s.chi_n * s.l_next / s.z_next,
        )
    };
    Ok(BankFocResiduals { deposit, loan })
}

/// Shadow value of the collateral constraint, `chi_b * R_l / theta_b`.
pub fn collateral_multiplier(s: &PeriodState, p: &ModelParams) -> f64 {
    s.chi_b * p.r_l / p.theta_b
}
