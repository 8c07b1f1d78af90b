//! Parameters, per-period state and the equilibrium conditions of the model.
//!
//! Timing: a quantity chosen at date `t` and carried into `t+1` is stored in
//! period `t`'s [`PeriodState`] (`k_next`, `n_next`, ...). Period `t` itself
//! uses `k_t`, which is the previous state's `k_next`.

mod accounts;
mod functions;
mod residuals;

pub use accounts::{
    bank_profit_first, bank_profit_second, firm_profit, government_budget_gap,
    household_budget_gap, resource_gap, tax_closing_budget, Holdings,
};
pub use functions::{
    deposit_demand, deposit_spread, loan_demand, omega_terms, operating_cost, production,
    reserve_ratio, sdf, spread, LoanBranch, LoanDemand, Omega, OperatingCost, Production,
};
pub use residuals::{
    bank_foc_residuals, collateral_multiplier, period_residuals, BankFocResiduals, Equation,
    LoanFoc, PeriodResiduals,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structural parameters and administered gross rates (quarterly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub beta: f64,
    /// Liquidity benefit of CBDC relative to deposits.
    pub lambda: f64,
    pub sigma: f64,
    pub upsilon: f64,
    pub psi: f64,
    pub iota: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub varphi: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Unit resource cost of reserves.
    pub rho_res: f64,
    /// Unit resource cost of CBDC.
    pub mu: f64,
    #[serde(rename = "R_l")]
    pub r_l: f64,
    #[serde(rename = "R_m")]
    pub r_m: f64,
    #[serde(rename = "R_r")]
    pub r_r: f64,
    #[serde(rename = "R_b")]
    pub r_b: f64,
    pub theta_b: f64,
    pub xi: f64,
    pub rho_theta: f64,
    /// Inverse elasticity of substitution between CBDC and deposits; zero means
    /// perfect substitutes.
    pub epsilon: f64,
}

impl ModelParams {
    pub const FIELD_NAMES: [&'static str; 21] = [
        "beta",
        "lambda",
        "sigma",
        "upsilon",
        "psi",
        "iota",
        "phi1",
        "phi2",
        "varphi",
        "alpha",
        "delta",
        "rho_res",
        "mu",
        "R_l",
        "R_m",
        "R_r",
        "R_b",
        "theta_b",
        "xi",
        "rho_theta",
        "epsilon",
    ];

    /// Rounded baseline parameter values.
    pub fn reference() -> Self {
        Self {
            beta: 0.99,
            lambda: 1.0,
            sigma: 0.5,
            upsilon: 0.85,
            psi: 0.6,
            iota: 0.009,
            phi1: 4.632e-5,
            phi2: 4.632e-5,
            varphi: 2.893,
            alpha: 1.0 / 3.0,
            delta: 0.025,
            rho_res: 1e-4,
            mu: 0.002,
            r_l: 0.993,
            r_m: 1.0,
            r_r: 1.0,
            r_b: 1.0,
            theta_b: 0.995,
            xi: 0.0,
            rho_theta: 0.9,
            epsilon: 0.0,
        }
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "beta" => &mut self.beta,
            "lambda" => &mut self.lambda,
            "sigma" => &mut self.sigma,
            "upsilon" => &mut self.upsilon,
            "psi" => &mut self.psi,
            "iota" => &mut self.iota,
            "phi1" => &mut self.phi1,
            "phi2" => &mut self.phi2,
            "varphi" => &mut self.varphi,
            "alpha" => &mut self.alpha,
            "delta" => &mut self.delta,
            "rho_res" => &mut self.rho_res,
            "mu" => &mut self.mu,
            "R_l" => &mut self.r_l,
            "R_m" => &mut self.r_m,
            "R_r" => &mut self.r_r,
            "R_b" => &mut self.r_b,
            "theta_b" => &mut self.theta_b,
            "xi" => &mut self.xi,
            "rho_theta" => &mut self.rho_theta,
            "epsilon" => &mut self.epsilon,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        let mut copy = *self;
        copy.slot(key)
            .map(|v| *v)
            .ok_or_else(|| Error::UnknownParameter(key.to_string()))
    }

    /// Sets one field by its serialized name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = self
            .slot(key)
            .ok_or_else(|| Error::UnknownParameter(key.to_string()))?;
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &str); 22] = [
            (self.beta > 0.0 && self.beta < 1.0, "beta must lie in (0,1)"),
            (self.lambda >= 0.0, "lambda must be >= 0"),
            (self.sigma > 0.0, "sigma must be > 0"),
            (self.sigma != 1.0, "sigma must differ from 1"),
            (self.upsilon > 0.0, "upsilon must be > 0"),
            (self.psi > 0.0, "psi must be > 0"),
            (self.psi != 1.0, "psi must differ from 1"),
            (self.iota > 0.0 && self.iota < 1.0, "iota must lie in (0,1)"),
            (
                self.phi1 >= 0.0 && self.phi2 >= 0.0,
                "phi1, phi2 must be >= 0",
            ),
            (self.varphi > 1.0, "varphi must be > 1"),
            (
                self.alpha > 0.0 && self.alpha < 1.0,
                "alpha must lie in (0,1)",
            ),
            (
                self.delta > 0.0 && self.delta < 1.0,
                "delta must lie in (0,1)",
            ),
            (self.rho_res >= 0.0, "rho_res must be >= 0"),
            (self.mu >= 0.0, "mu must be >= 0"),
            (
                [self.r_l, self.r_m, self.r_r, self.r_b]
                    .iter()
                    .all(|r| *r > 0.0),
                "administered rates must be positive",
            ),
            (self.beta * self.r_l < 1.0 + 1e-9, "beta*R_l must be < 1"),
            (self.beta * self.r_m < 1.0 + 1e-9, "beta*R_m must be < 1"),
            (self.beta * self.r_r < 1.0 + 1e-9, "beta*R_r must be < 1"),
            (self.beta * self.r_b < 1.0 + 1e-9, "beta*R_b must be < 1"),
            (
                self.theta_b > 0.0 && self.theta_b <= 1.0,
                "theta_b must lie in (0,1]",
            ),
            (self.xi >= 0.0, "xi must be >= 0"),
            (
                (0.0..1.0).contains(&self.rho_theta) && self.epsilon >= 0.0,
                "rho_theta must lie in [0,1) and epsilon must be >= 0",
            ),
        ];
        let all_finite = Self::FIELD_NAMES
            .iter()
            .all(|k| self.get(k).map(f64::is_finite).unwrap_or(false));
        if !all_finite {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidParams((*msg).to_string())),
            None => Ok(()),
        }
    }
}

/// One period of the economy. Fields suffixed `_next` are chosen at this date
/// and carried into the next one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeriodState {
    pub c: f64,
    /// Leisure; hours worked are `1 - x`.
    pub x: f64,
    pub k_next: f64,
    pub n_next: f64,
    pub m_next: f64,
    pub z_next: f64,
    pub zeta_next: f64,
    pub r_next: f64,
    pub l_next: f64,
    pub b_next: f64,
    pub chi_n: f64,
    pub chi_m: f64,
    pub chi_r: f64,
    pub chi_l: f64,
    pub chi_b: f64,
    #[serde(rename = "R_f_next")]
    pub r_f_next: f64,
    #[serde(rename = "R_k")]
    pub r_k: f64,
    pub w: f64,
    pub theta_m: f64,
    pub y: f64,
}

impl PeriodState {
    pub fn labor(&self) -> f64 {
        1.0 - self.x
    }

    /// Deposit rate implied by the deposit spread.
    pub fn r_n_next(&self) -> f64 {
        self.r_f_next * (1.0 - self.chi_n)
    }

    /// CBDC rate implied by the CBDC spread.
    pub fn r_m_next(&self) -> f64 {
        self.r_f_next * (1.0 - self.chi_m)
    }

    /// Bank capital `n + l - r - b` carried into next period.
    pub fn bank_capital(&self) -> f64 {
        self.n_next + self.l_next - self.r_next - self.b_next
    }

    /// `(name, value)` pairs in a fixed order, used by the report writers.
    pub fn named_fields(&self) -> [(&'static str, f64); 20] {
        [
            ("c", self.c),
            ("x", self.x),
            ("k_next", self.k_next),
            ("n_next", self.n_next),
            ("m_next", self.m_next),
            ("z_next", self.z_next),
            ("zeta", self.zeta_next),
            ("r_next", self.r_next),
            ("l_next", self.l_next),
            ("b_next", self.b_next),
            ("chi_n", self.chi_n),
            ("chi_m", self.chi_m),
            ("chi_r", self.chi_r),
            ("chi_l", self.chi_l),
            ("chi_b", self.chi_b),
            ("R_f_next", self.r_f_next),
            ("R_k", self.r_k),
            ("w", self.w),
            ("theta_m", self.theta_m),
            ("y", self.y),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values_are_valid() {
        ModelParams::reference().validate().unwrap();
    }

    #[test]
    fn unit_elasticities_are_rejected() {
        let mut p = ModelParams::reference();
        p.psi = 1.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::reference();
        p.sigma = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn spread_ordering_is_enforced() {
        let mut p = ModelParams::reference();
        p.r_b = 1.02;
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn set_and_get_by_name() {
        let mut p = ModelParams::reference();
        p.set("R_l", 0.98).unwrap();
        assert_eq!(p.r_l, 0.98);
        assert_eq!(p.get("theta_b").unwrap(), 0.995);
        assert!(matches!(
            p.set("gamma", 1.0),
            Err(Error::UnknownParameter(_))
        ));
    }

    #[test]
    fn json_uses_rate_names_and_rejects_unknown_keys() {
        let json = serde_json::to_string(&ModelParams::reference()).unwrap();
        assert!(json.contains("\"R_l\":0.993"));
        let bad = json.replacen('{', "{\"bogus\":1.0,", 1);
        assert!(serde_json::from_str::<ModelParams>(&bad).is_err());
    }
}
