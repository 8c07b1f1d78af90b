//! Budget identities of the household, bank, firm and consolidated government.
//!
//! All functions describe date `t` flows: `prev` holds the stocks carried into
//! `t` and `cur` the choices made at `t`. Gaps are written as uses minus
//! resources, so each is zero when the corresponding constraint holds.

use serde::Serialize;

use super::functions::operating_cost;
use super::{ModelParams, PeriodState};
use crate::error::Result;

/// Capital ownership carried into the next period. Bank capital is
/// `n + l - r - b` and is read off the state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Holdings {
    pub k_h: f64,
    pub k_g: f64,
}

impl Holdings {
    /// Household capital as the remainder after bank and government holdings.
    pub fn with_government_capital(s: &PeriodState, k_g: f64) -> Self {
        Self {
            k_h: s.k_next - s.bank_capital() - k_g,
            k_g,
        }
    }
}

/// Firm profit `y - k(R_k + delta - 1) - w*labor`.
pub fn firm_profit(prev: &PeriodState, cur: &PeriodState, p: &ModelParams) -> f64 {
    cur.y - prev.k_next * (cur.r_k + p.delta - 1.0) - cur.w * cur.labor()
}

/// Bank cash flow at the date deposits are raised.
pub fn bank_profit_first(cur: &PeriodState, p: &ModelParams) -> Result<f64> {
    let cost = operating_cost(cur.zeta_next, cur.zeta_next, p)?;
    Ok(-cur.n_next * (cost.nu - p.xi))
}

/// Bank cash flow when the positions from `prev` unwind at date `t`.
pub fn bank_profit_second(prev: &PeriodState, cur: &PeriodState, p: &ModelParams) -> f64 {
    prev.bank_capital() * cur.r_k + prev.r_next * p.r_r + prev.b_next * p.r_b
        - prev.n_next * prev.r_n_next()
        - prev.l_next * p.r_l
}

fn government_flows(
    prev: &PeriodState,
    cur: &PeriodState,
    hold_prev: &Holdings,
    hold_cur: &Holdings,
    p: &ModelParams,
) -> f64 {
    let uses = hold_cur.k_g + cur.l_next - cur.b_next - cur.m_next - cur.r_next;
    let income = hold_prev.k_g * cur.r_k + prev.l_next * p.r_l
        - prev.b_next * p.r_b
        - prev.m_next * prev.r_m_next()
        - prev.r_next * p.r_r
        - cur.n_next * p.xi
        - cur.m_next * p.mu
        - cur.r_next * p.rho_res;
    uses - income
}

/// Lump-sum tax that balances the government budget at date `t`.
pub fn tax_closing_budget(
    prev: &PeriodState,
    cur: &PeriodState,
    hold_prev: &Holdings,
    hold_cur: &Holdings,
    p: &ModelParams,
) -> f64 {
    government_flows(prev, cur, hold_prev, hold_cur, p)
}

pub fn government_budget_gap(
    prev: &PeriodState,
    cur: &PeriodState,
    hold_prev: &Holdings,
    hold_cur: &Holdings,
    tau: f64,
    p: &ModelParams,
) -> f64 {
    government_flows(prev, cur, hold_prev, hold_cur, p) - tau
}

pub fn household_budget_gap(
    prev: &PeriodState,
    cur: &PeriodState,
    hold_prev: &Holdings,
    hold_cur: &Holdings,
    tau: f64,
    p: &ModelParams,
) -> Result<f64> {
    let profits =
        bank_profit_first(cur, p)? + bank_profit_second(prev, cur, p) + firm_profit(prev, cur, p);
    let uses = cur.c + hold_cur.k_h + cur.m_next + cur.n_next + tau;
    let income = cur.w * cur.labor()
        + profits
        + hold_prev.k_h * cur.r_k
        + prev.m_next * prev.r_m_next()
        + prev.n_next * prev.r_n_next();
    Ok(uses - income)
}

/// Aggregate resource constraint gap in levels: uses minus resources.
pub fn resource_gap(prev: &PeriodState, cur: &PeriodState, p: &ModelParams) -> Result<f64> {
    let cost = operating_cost(cur.zeta_next, cur.zeta_next, p)?;
    let absorbed = cur.m_next * p.mu + cur.n_next * (cost.nu + cur.zeta_next * p.rho_res);
    Ok(cur.k_next + cur.c + absorbed - cur.y - prev.k_next * (1.0 - p.delta))
}
