//! Analytic inversion of steady-state targets into model parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{operating_cost, reserve_ratio, spread, ModelParams};
use crate::steady_state::solve_steady_state;

/// Parameters fixed directly rather than inverted from targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Presets {
    pub beta: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub upsilon: f64,
    pub psi: f64,
    pub alpha: f64,
    pub delta: f64,
    pub rho_res: f64,
    #[serde(rename = "R_m")]
    pub r_m: f64,
    #[serde(rename = "R_r")]
    pub r_r: f64,
    #[serde(rename = "R_b")]
    pub r_b: f64,
    pub xi: f64,
    pub rho_theta: f64,
}

impl Default for Presets {
    fn default() -> Self {
        let p = ModelParams::reference();
        Self {
            beta: p.beta,
            lambda: p.lambda,
            sigma: p.sigma,
            upsilon: p.upsilon,
            psi: p.psi,
            alpha: p.alpha,
            delta: p.delta,
            rho_res: p.rho_res,
            r_m: p.r_m,
            r_r: p.r_r,
            r_b: p.r_b,
            xi: p.xi,
            rho_theta: p.rho_theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationTargets {
    /// Reserves-to-deposits ratio.
    pub zeta_star: f64,
    /// Consumption velocity `c/z`.
    pub velocity: f64,
    pub labor_star: f64,
    /// `1 - theta_b`.
    pub bond_haircut: f64,
    /// Search `upsilon` so steady-state labor equals `labor_star` instead of
    /// keeping the preset.
    pub solve_upsilon: bool,
    pub presets: Presets,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            zeta_star: 0.1945,
            velocity: 1.147,
            labor_star: 1.0 / 3.0,
            bond_haircut: 0.005,
            solve_upsilon: false,
            presets: Presets::default(),
        }
    }
}

impl CalibrationTargets {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta_star > 0.0 && self.zeta_star < 1.0) {
            return Err(Error::InvalidParams("zeta_star must lie in (0,1)".into()));
        }
        if !(self.velocity > 0.0) {
            return Err(Error::InvalidParams("velocity must be > 0".into()));
        }
        if !(self.labor_star > 0.0 && self.labor_star < 1.0) {
            return Err(Error::InvalidParams("labor_star must lie in (0,1)".into()));
        }
        if !(self.bond_haircut >= 0.0 && self.bond_haircut < 1.0) {
            return Err(Error::InvalidParams(
                "bond_haircut must lie in [0,1)".into(),
            ));
        }
        Ok(())
    }

    /// Whether `key` names a target or preset that [`CalibrationTargets::set`]
    /// accepts. `theta_b` is accepted and stored as its haircut.
    pub fn accepts(key: &str) -> bool {
        let mut t = Self::default();
        t.set(key, 0.5).is_ok()
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let ps = &mut self.presets;
        let slot = match key {
            "zeta_star" => &mut self.zeta_star,
            "velocity" => &mut self.velocity,
            "labor_star" => &mut self.labor_star,
            "bond_haircut" => &mut self.bond_haircut,
            "theta_b" => {
                self.bond_haircut = 1.0 - value;
                return Ok(());
            }
            "beta" => &mut ps.beta,
            "lambda" => &mut ps.lambda,
            "sigma" => &mut ps.sigma,
            "upsilon" => &mut ps.upsilon,
            "psi" => &mut ps.psi,
            "alpha" => &mut ps.alpha,
            "delta" => &mut ps.delta,
            "rho_res" => &mut ps.rho_res,
            "R_m" => &mut ps.r_m,
            "R_r" => &mut ps.r_r,
            "R_b" => &mut ps.r_b,
            "xi" => &mut ps.xi,
            "rho_theta" => &mut ps.rho_theta,
            _ => return Err(Error::UnknownParameter(key.to_string())),
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadySpreads {
    pub chi_n: f64,
    pub chi_r: f64,
    pub chi_m: f64,
    pub r_f: f64,
}

/// Steady-state spreads implied by the preset rates at `R_f = 1/beta`.
pub fn steady_spreads_from_presets(t: &CalibrationTargets) -> Result<SteadySpreads> {
    let ps = &t.presets;
    if ps.lambda == 0.0 {
        return Err(Error::Unsupported(
            "lambda = 0: the deposit spread cannot be inferred from the CBDC spread".into(),
        ));
    }
    let r_f = 1.0 / ps.beta;
    let chi_m = 1.0 - ps.r_m * ps.beta;
    Ok(SteadySpreads {
        chi_n: chi_m / ps.lambda,
        chi_r: 1.0 - ps.r_r * ps.beta,
        chi_m,
        r_f,
    })
}

/// Liquidity weight matching the velocity target through deposit demand.
pub fn calibrate_iota(t: &CalibrationTargets, chi_n: f64) -> f64 {
    let q = (1.0 / t.velocity).powf(t.presets.psi) * chi_n;
    q / (1.0 + q)
}

/// Operating-cost curvature from the deposit spread at `n/z = 1`.
pub fn calibrate_varphi(t: &CalibrationTargets, chi_n: f64, chi_r: f64) -> Result<f64> {
    let a = chi_n * (1.0 - t.presets.psi) + t.presets.xi;
    let b = chi_r * t.zeta_star;
    let denom = a - b;
    if !(denom > 0.0) {
        return Err(Error::Infeasible {
            what: "operating-cost curvature (denominator)",
            margin: denom,
        });
    }
    let varphi = (a + b) / denom;
    if !(varphi > 1.0) {
        return Err(Error::Infeasible {
            what: "operating-cost curvature (must exceed 1)",
            margin: varphi - 1.0,
        });
    }
    Ok(varphi)
}

/// Operating-cost weight matching the reserve-ratio target; the second weight
/// is set equal to it.
pub fn calibrate_phi1(t: &CalibrationTargets, chi_r: f64, varphi: f64) -> f64 {
    chi_r / (t.zeta_star.powf(-varphi) * (varphi - 1.0))
}

/// CBDC resource cost making CBDC and deposits equally costly per unit of
/// liquidity: `lambda * (nu + zeta * rho)`.
pub fn derive_mu(p: &ModelParams, zeta: f64) -> Result<f64> {
    let cost = operating_cost(zeta, zeta, p)?;
    Ok(p.lambda * (cost.nu + zeta * p.rho_res))
}

/// Rates and bank-side quantities entering the equivalent loan rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoanRateInputs {
    #[serde(rename = "R_n")]
    pub r_n: f64,
    #[serde(rename = "R_f")]
    pub r_f: f64,
    #[serde(rename = "R_r")]
    pub r_r: f64,
    #[serde(rename = "R_k")]
    pub r_k: f64,
    #[serde(rename = "R_b")]
    pub r_b: f64,
    pub zeta: f64,
    pub nu: f64,
    pub xi: f64,
    pub theta_b: f64,
}

impl LoanRateInputs {
    /// Steady-state inputs at `R_f = R_k = 1/beta` with the deposit rate taken
    /// from the deposit spread `chi_n`.
    pub fn steady(p: &ModelParams, zeta: f64, chi_n: f64) -> Result<Self> {
        let r_f = 1.0 / p.beta;
        Ok(Self {
            r_n: r_f * (1.0 - chi_n),
            r_f,
            r_r: p.r_r,
            r_k: r_f,
            r_b: p.r_b,
            zeta,
            nu: operating_cost(zeta, zeta, p)?.nu,
            xi: p.xi,
            theta_b: p.theta_b,
        })
    }

    fn numerator(&self) -> f64 {
        self.r_n + (self.nu - self.xi) * self.r_f - self.zeta * self.r_r
    }
}

/// Central-bank loan rate that leaves the market value of bank profits
/// unchanged when deposits shift into CBDC.
pub fn derive_loan_rate(inputs: &LoanRateInputs) -> Result<f64> {
    if !(inputs.theta_b > 0.0) {
        return Err(Error::Infeasible {
            what: "collateral regime (theta_b must be positive)",
            margin: inputs.theta_b,
        });
    }
    let carry = 1.0 + (inputs.r_k - inputs.r_b) / inputs.theta_b;
    Ok(inputs.numerator() / ((1.0 - inputs.zeta) * carry))
}

/// The equivalent rate without a collateral requirement.
pub fn no_collateral_loan_rate(inputs: &LoanRateInputs) -> f64 {
    inputs.numerator() / (1.0 - inputs.zeta)
}

fn assemble(t: &CalibrationTargets, upsilon: f64) -> Result<ModelParams> {
    let s = steady_spreads_from_presets(t)?;
    let ps = &t.presets;
    let varphi = calibrate_varphi(t, s.chi_n, s.chi_r)?;
    let phi1 = calibrate_phi1(t, s.chi_r, varphi);
    let mut p = ModelParams {
        beta: ps.beta,
        lambda: ps.lambda,
        sigma: ps.sigma,
        upsilon,
        psi: ps.psi,
        iota: calibrate_iota(t, s.chi_n),
        phi1,
        phi2: phi1,
        varphi,
        alpha: ps.alpha,
        delta: ps.delta,
        rho_res: ps.rho_res,
        mu: 0.0,
        r_l: 0.0,
        r_m: ps.r_m,
        r_r: ps.r_r,
        r_b: ps.r_b,
        theta_b: 1.0 - t.bond_haircut,
        xi: ps.xi,
        rho_theta: ps.rho_theta,
        epsilon: 0.0,
    };
    p.mu = derive_mu(&p, t.zeta_star)?;
    p.r_l = derive_loan_rate(&LoanRateInputs::steady(&p, t.zeta_star, s.chi_n)?)?;
    p.validate()?;
    Ok(p)
}

/// Full parameter vector from targets and presets.
pub fn calibrate(t: &CalibrationTargets) -> Result<ModelParams> {
    t.validate()?;
    if !t.solve_upsilon {
        return assemble(t, t.presets.upsilon);
    }
    let upsilon = solve_upsilon(t)?;
    assemble(t, upsilon)
}

// Labor falls as the leisure exponent rises.
fn solve_upsilon(t: &CalibrationTargets) -> Result<f64> {
    let labor_gap = |u: f64| -> Result<f64> {
        let ss = solve_steady_state(&assemble(t, u)?)?;
        Ok(ss.state.labor() - t.labor_star)
    };
    let (mut lo, mut hi) = (0.05, 10.0);
    let (g_lo, g_hi) = (labor_gap(lo)?, labor_gap(hi)?);
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Infeasible {
            what: "labor target outside the leisure-exponent bracket",
            margin: if g_lo <= 0.0 { g_lo } else { g_hi },
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if labor_gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Recomputes the CBDC cost and the equivalent loan rate of `p` at its own
/// steady-state reserve ratio, leaving every other field unchanged.
pub fn rederive_policy_terms(p: &ModelParams) -> Result<ModelParams> {
    let r_f = 1.0 / p.beta;
    let zeta = reserve_ratio(spread(p.r_r, r_f)?, p)?;
    let chi_n = crate::model::deposit_spread(zeta, 1.0, p)?;
    let mut out = *p;
    out.mu = derive_mu(&out, zeta)?;
    out.r_l = derive_loan_rate(&LoanRateInputs::steady(&out, zeta, chi_n)?)?;
    Ok(out)
}
