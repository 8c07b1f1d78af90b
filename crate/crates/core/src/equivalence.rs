//! Audits of the payment-instrument equivalence result: a shift of `delta`
//! deposits into CBDC, offset by collateralized central-bank lending, should
//! leave the market values of taxes and of bank profits at zero.

use serde::Serialize;

use crate::calibration::{derive_loan_rate, no_collateral_loan_rate, LoanRateInputs};
use crate::error::{Error, Result};
use crate::model::{operating_cost, ModelParams};
use crate::steady_state::SteadyState;

/// Which position the audit starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    /// Steady state with central-bank loans and bonds set to zero.
    Normalized,
    /// Steady state as solved, loans and bonds included.
    Dynamic,
    /// Supplied directly by the caller.
    Custom,
}

/// Gross rates between the shift date and the next period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSet {
    #[serde(rename = "R_f")]
    pub r_f: f64,
    #[serde(rename = "R_k")]
    pub r_k: f64,
    #[serde(rename = "R_n")]
    pub r_n: f64,
    #[serde(rename = "R_m")]
    pub r_m: f64,
    #[serde(rename = "R_r")]
    pub r_r: f64,
    #[serde(rename = "R_b")]
    pub r_b: f64,
}

impl RateSet {
    pub fn chi_n(&self) -> f64 {
        1.0 - self.r_n / self.r_f
    }
}

/// Balance-sheet position before the shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasePosition {
    pub kind: BaseKind,
    pub n: f64,
    pub m: f64,
    pub r: f64,
    pub l: f64,
    pub b: f64,
    pub k_h: f64,
    pub k_g: f64,
    pub zeta: f64,
    pub rates: RateSet,
}

impl BasePosition {
    /// Base taken from a solved steady state, with rates at `R_f = R_k = 1/beta`
    /// and the CBDC rate implied by the household's CBDC/deposit trade-off.
    pub fn from_steady(ss: &SteadyState, p: &ModelParams, kind: BaseKind) -> Self {
        let s = &ss.state;
        let r_f = s.r_f_next;
        let (l, b) = match kind {
            BaseKind::Normalized => (0.0, 0.0),
            _ => (s.l_next, s.b_next),
        };
        let bank = s.n_next + l - s.r_next - b;
        Self {
            kind,
            n: s.n_next,
            m: s.m_next,
            r: s.r_next,
            l,
            b,
            k_h: s.k_next - bank - ss.k_g,
            k_g: ss.k_g,
            zeta: s.zeta_next,
            rates: RateSet {
                r_f,
                r_k: s.r_k,
                r_n: s.r_n_next(),
                r_m: r_f * (1.0 - p.lambda * s.chi_n),
                r_r: p.r_r,
                r_b: p.r_b,
            },
        }
    }

    pub fn bank_capital(&self) -> f64 {
        self.n + self.l - self.r - self.b
    }

    /// Effective balances under the CES aggregator (`epsilon = 0` is the
    /// weighted sum).
    pub fn real_balances(&self, lambda: f64, epsilon: f64) -> f64 {
        real_balances(self.m, self.n, lambda, epsilon)
    }
}

fn real_balances(m: f64, n: f64, lambda: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        lambda * m + n
    } else {
        let e = 1.0 - epsilon;
        (lambda * m.powf(e) + n.powf(e)).powf(1.0 / e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundMargin {
    pub bound: &'static str,
    /// Nonnegative when the bound holds.
    pub margin: f64,
}

/// Changes in every position induced by moving `delta` out of deposits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaLedger {
    pub delta: f64,
    pub zeta: f64,
    pub loan_rate: f64,
    pub dn: f64,
    pub dm: f64,
    pub dr: f64,
    pub dl: f64,
    pub db: f64,
    pub dk_h: f64,
    pub dk_g: f64,
    /// Change in bank capital `n + l - r - b`.
    pub dk_b: f64,
    pub margins: Vec<BoundMargin>,
}

impl DeltaLedger {
    /// `dk_h + dk_b + dk_g`; zero when aggregate capital is preserved.
    pub fn capital_change(&self) -> f64 {
        self.dk_h + self.dk_b + self.dk_g
    }
}

/// Ledger of the shift at loan rate `p.r_l`. With `p.epsilon > 0` CBDC changes
/// so that the CES aggregate of balances is preserved.
pub fn delta_mapping(base: &BasePosition, delta: f64, p: &ModelParams) -> Result<DeltaLedger> {
    if !(delta >= 0.0) {
        return Err(Error::domain("delta", delta));
    }
    if p.lambda <= 0.0 {
        return Err(Error::Unsupported(
            "lambda must be positive for a CBDC shift".into(),
        ));
    }
    let eps = p.epsilon;
    if eps == 1.0 {
        return Err(Error::Unsupported(
            "epsilon = 1 is outside the CES audit domain".into(),
        ));
    }
    let dm = if eps == 0.0 {
        delta / p.lambda
    } else {
        let e = 1.0 - eps;
        let n_hat = base.n - delta;
        ((base.n.powf(e) - n_hat.powf(e)) / p.lambda + base.m.powf(e)).powf(1.0 / e) - base.m
    };
    let zeta = base.zeta;
    let dl = (1.0 - zeta) * delta;
    let db = dl * p.r_l / p.theta_b;
    let dk_h = delta - dm;
    let dk_g = -dk_h + db;
    let dn = -delta;
    let dr = -zeta * delta;
    let dk_b = dn + dl - dr - db;

    let checks = [
        ("delta <= n", base.n - delta),
        ("zeta*delta <= r", base.r - zeta * delta),
        ("household capital shift <= k_g", base.k_g - dk_h),
        ("household capital shift >= -k_h", dk_h + base.k_h),
    ];
    let tol = 1e-12 * (1.0 + delta);
    for (bound, margin) in checks {
        if margin < -tol {
            let (lhs, rhs) = match bound {
                "delta <= n" => (delta, base.n),
                "zeta*delta <= r" => (zeta * delta, base.r),
                "household capital shift <= k_g" => (dk_h, base.k_g),
                _ => (dk_h, -base.k_h),
            };
            return Err(Error::Bound { bound, lhs, rhs });
        }
    }
    if !dm.is_finite() {
        return Err(Error::domain("CBDC change", dm));
    }

    Ok(DeltaLedger {
        delta,
        zeta,
        loan_rate: p.r_l,
        dn,
        dm,
        dr,
        dl,
        db,
        dk_h,
        dk_g,
        dk_b,
        margins: checks
            .iter()
            .map(|(bound, margin)| BoundMargin {
                bound,
                margin: *margin,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitChanges {
    /// Change in the bank's first-date cash flow.
    pub first: f64,
    /// Change in the bank's second-date cash flow.
    pub second: f64,
}

pub fn profit_changes(
    ledger: &DeltaLedger,
    rates: &RateSet,
    p: &ModelParams,
) -> Result<ProfitChanges> {
    let nu = operating_cost(ledger.zeta, ledger.zeta, p)?.nu;
    Ok(ProfitChanges {
        first: -ledger.dn * (nu - p.xi),
        second: ledger.dk_b * rates.r_k + ledger.dr * rates.r_r + ledger.db * rates.r_b
            - ledger.dn * rates.r_n
            - ledger.dl * ledger.loan_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Taxes {
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
}

/// Taxes compensating the household: at the shift date for the bank's lower
/// operating losses, one period later for its portfolio return and the
/// change in bank profits.
pub fn taxes(ledger: &DeltaLedger, rates: &RateSet, p: &ModelParams) -> Result<Taxes> {
    let d = profit_changes(ledger, rates, p)?;
    Ok(Taxes {
        t1: d.first,
        t2: ledger.dk_h * rates.r_k + ledger.dn * rates.r_n + ledger.dm * rates.r_m + d.second,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketValues {
    #[serde(rename = "T_mv")]
    pub taxes: f64,
    #[serde(rename = "P_mv")]
    pub profits: f64,
}

/// Market values at the shift date, discounting with `1/R_f`.
pub fn market_values(
    ledger: &DeltaLedger,
    rates: &RateSet,
    p: &ModelParams,
) -> Result<MarketValues> {
    let t = taxes(ledger, rates, p)?;
    let d = profit_changes(ledger, rates, p)?;
    Ok(MarketValues {
        taxes: t.t1 + t.t2 / rates.r_f,
        profits: d.first + d.second / rates.r_f,
    })
}

/// Difference between the government budget constraints after and before
/// the shift, at the shift date and one period later, with the compensating
/// taxes levied.
pub fn government_budget_check(
    ledger: &DeltaLedger,
    rates: &RateSet,
    p: &ModelParams,
) -> Result<(f64, f64)> {
    let t = taxes(ledger, rates, p)?;
    let l = ledger;
    let lhs_t = l.dk_g + l.dl - l.dm - l.dr - l.db;
    let rhs_t = -l.dn * p.xi - l.dm * p.mu - l.dr * p.rho_res + t.t1;
    let rhs_t1 = l.dk_g * rates.r_k + l.dl * l.loan_rate
        - l.dm * rates.r_m
        - l.dr * rates.r_r
        - l.db * rates.r_b
        + t.t2;
    Ok((lhs_t - rhs_t, -rhs_t1))
}

/// `mu/lambda - (nu + zeta*rho)`: zero when CBDC and deposits cost the same
/// per unit of liquidity.
pub fn efficiency_gap(zeta: f64, p: &ModelParams) -> Result<f64> {
    let nu = operating_cost(zeta, zeta, p)?.nu;
    Ok(p.mu / p.lambda - (nu + zeta * p.rho_res))
}

/// Slack of the collateral-binding condition `R_b > R_l (1 + 1/eta_l)`, with
/// the loan-supply elasticity replicating the deposit-demand schedule.
pub fn binding_condition(l: f64, z: f64, chi_n: f64, r_f: f64, p: &ModelParams) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::Infeasible {
            what: "loan corner: elasticity of loan supply undefined at l = 0",
            margin: l,
        });
    }
    if !(z > 0.0) {
        return Err(Error::domain("z", z));
    }
    let inv_eta = p.psi * chi_n * l * r_f / (z * p.r_l);
    Ok(p.r_b - p.r_l * (1.0 + inv_eta))
}

/// Equivalent loan rate for perfect substitutes at the base rates.
pub fn equivalent_loan_rate(base: &BasePosition, p: &ModelParams) -> Result<f64> {
    derive_loan_rate(&loan_rate_inputs(base, p)?)
}

fn loan_rate_inputs(base: &BasePosition, p: &ModelParams) -> Result<LoanRateInputs> {
    let r = &base.rates;
    Ok(LoanRateInputs {
        r_n: r.r_n,
        r_f: r.r_f,
        r_r: r.r_r,
        r_k: r.r_k,
        r_b: r.r_b,
        zeta: base.zeta,
        nu: operating_cost(base.zeta, base.zeta, p)?.nu,
        xi: p.xi,
        theta_b: p.theta_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub base_kind: BaseKind,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "T_mv")]
    pub market_value_taxes: f64,
    #[serde(rename = "P_mv")]
    pub market_value_profits: f64,
    pub gov_budget_residual_t: f64,
    pub gov_budget_residual_t1: f64,
    pub loan_rate_used: f64,
    pub efficiency_gap: f64,
    /// `None` when the post-shift position has no central-bank loans.
    pub binding_margin: Option<f64>,
    /// Present only for imperfect substitutes.
    pub ces_factor: Option<f64>,
    pub ledger: DeltaLedger,
}

fn assemble_report(
    base: &BasePosition,
    ledger: DeltaLedger,
    rates: &RateSet,
    p: &ModelParams,
    ces_factor: Option<f64>,
) -> Result<AuditReport> {
    let t = taxes(&ledger, rates, p)?;
    let mv = market_values(&ledger, rates, p)?;
    let (g_t, g_t1) = government_budget_check(&ledger, rates, p)?;
    let z = base.real_balances(p.lambda, p.epsilon);
    let binding_margin = binding_condition(base.l + ledger.dl, z, rates.chi_n(), rates.r_f, p).ok();
    Ok(AuditReport {
        base_kind: base.kind,
        delta: ledger.delta,
        epsilon: p.epsilon,
        t1: t.t1,
        t2: t.t2,
        market_value_taxes: mv.taxes,
        market_value_profits: mv.profits,
        gov_budget_residual_t: g_t,
        gov_budget_residual_t1: g_t1,
        loan_rate_used: ledger.loan_rate,
        efficiency_gap: efficiency_gap(base.zeta, p)?,
        binding_margin,
        ces_factor,
        ledger,
    })
}

/// Perfect-substitutes audit at loan rate `loan_rate`.
pub fn audit(
    base: &BasePosition,
    delta: f64,
    loan_rate: f64,
    p: &ModelParams,
) -> Result<AuditReport> {
    if p.epsilon != 0.0 {
        return Err(Error::Unsupported("use ces_audit for epsilon > 0".into()));
    }
    let q = ModelParams {
        r_l: loan_rate,
        ..*p
    };
    let ledger = delta_mapping(base, delta, &q)?;
    assemble_report(base, ledger, &base.rates, &q, None)
}

/// `lambda * (dm/delta) * (n/m)^epsilon`, which equals one for perfect
/// substitutes.
pub fn ces_factor(base: &BasePosition, ledger: &DeltaLedger, p: &ModelParams) -> f64 {
    p.lambda * (ledger.dm / ledger.delta) * (base.n / base.m).powf(p.epsilon)
}

/// Imperfect-substitutes audit: sets the loan rate that zeroes the market
/// value of taxes and reports the resulting market value of bank profits.
///
/// The base must hold both CBDC and deposits. Its CBDC rate is replaced by
/// the one implied by the CES trade-off `chi_m = lambda chi_n (n/m)^epsilon`.
pub fn ces_audit(base: &BasePosition, delta: f64, p: &ModelParams) -> Result<AuditReport> {
    if !(p.epsilon > 0.0) || p.epsilon == 1.0 {
        return Err(Error::Unsupported(format!(
            "CES audit needs epsilon > 0 and epsilon != 1 (got {})",
            p.epsilon
        )));
    }
    if !(base.m > 0.0 && base.n > 0.0) {
        return Err(Error::Unsupported(
            "CES audit needs a base holding both CBDC and deposits".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("delta", delta));
    }
    let mut rates = base.rates;
    rates.r_m = rates.r_f * (1.0 - p.lambda * rates.chi_n() * (base.n / base.m).powf(p.epsilon));
    let base = BasePosition { rates, ..*base };

    // the CBDC change does not depend on the loan rate
    let probe = delta_mapping(&base, delta, p)?;
    let a = ces_factor(&base, &probe, p);
    let inputs = loan_rate_inputs(&base, p)?;
    let carry = 1.0 + (rates.r_k - rates.r_b) / p.theta_b;
    let rate = (a * rates.r_n - base.zeta * rates.r_r + (inputs.nu - p.xi + 1.0 - a) * rates.r_f)
        / ((1.0 - base.zeta) * carry);

    let q = ModelParams { r_l: rate, ..*p };
    let ledger = delta_mapping(&base, delta, &q)?;
    assemble_report(&base, ledger, &rates, &q, Some(a))
}

/// Market value of profit changes under the CES rate in closed form.
pub fn ces_profit_value(delta: f64, a: f64, rates: &RateSet) -> f64 {
    delta * (rates.r_n - a * rates.r_n - (1.0 - a) * rates.r_f) / rates.r_f
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceSheet {
    pub capital: f64,
    pub reserves: f64,
    pub bonds: f64,
    pub deposits: f64,
    pub loans: f64,
}

impl BalanceSheet {
    pub fn of_base(base: &BasePosition) -> Self {
        Self {
            capital: base.bank_capital(),
            reserves: base.r,
            bonds: base.b,
            deposits: base.n,
            loans: base.l,
        }
    }

    pub fn after_shift(base: &BasePosition, ledger: &DeltaLedger) -> Self {
        let before = Self::of_base(base);
        Self {
            capital: before.capital + ledger.dk_b,
            reserves: before.reserves + ledger.dr,
            bonds: before.bonds + ledger.db,
            deposits: before.deposits + ledger.dn,
            loans: before.loans + ledger.dl,
        }
    }

    pub fn assets(&self) -> f64 {
        self.capital + self.reserves + self.bonds
    }

    pub fn liabilities(&self) -> f64 {
        self.deposits + self.loans
    }

    fn check(&self, which: &str) -> Result<()> {
        let gap = self.assets() - self.liabilities();
        if gap.abs() > 1e-12 * self.liabilities().abs().max(1.0) {
            return Err(Error::Integrity(format!(
                "{which} balance sheet does not balance (assets - liabilities = {gap:e})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositionShift {
    pub deposits_fall: bool,
    pub loans_rise: bool,
    pub bonds_rise: bool,
    pub capital_falls: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceSheetComparison {
    pub before: BalanceSheet,
    pub after: BalanceSheet,
    pub shift: CompositionShift,
}

pub fn balance_sheet_snapshot(
    before: &BalanceSheet,
    after: &BalanceSheet,
) -> Result<BalanceSheetComparison> {
    before.check("pre-shift")?;
    after.check("post-shift")?;
    Ok(BalanceSheetComparison {
        before: *before,
        after: *after,
        shift: CompositionShift {
            deposits_fall: after.deposits < before.deposits,
            loans_rise: after.loans > before.loans,
            bonds_rise: after.bonds > before.bonds,
            capital_falls: after.capital < before.capital,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoanRatePoint {
    pub theta_b: f64,
    #[serde(rename = "R_l")]
    pub r_l: f64,
    #[serde(rename = "R_l_no_collateral")]
    pub r_l_free: f64,
}

/// Equivalent loan rate across pledgeability values.
pub fn loan_rate_curve(
    base: &BasePosition,
    p: &ModelParams,
    thetas: &[f64],
) -> Result<Vec<LoanRatePoint>> {
    let inputs = loan_rate_inputs(base, p)?;
    thetas
        .iter()
        .map(|&theta_b| {
            let i = LoanRateInputs { theta_b, ..inputs };
            Ok(LoanRatePoint {
                theta_b,
                r_l: derive_loan_rate(&i)?,
                r_l_free: no_collateral_loan_rate(&i),
            })
        })
        .collect()
}
