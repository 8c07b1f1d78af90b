//! Closed-form pieces of the equilibrium conditions.

use serde::Serialize;

use super::{ModelParams, PeriodState};
use crate::error::{Error, Result};

/// Spread `1 - R_i / R_f` forgone by holding asset `i`.
pub fn spread(r_i: f64, r_f: f64) -> Result<f64> {
    if !(r_f > 0.0) {
        return Err(Error::domain("R_f", r_f));
    }
    Ok(1.0 - r_i / r_f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingCost {
    /// Cost per unit of deposits.
    pub nu: f64,
    /// Derivative of `nu` in the bank's own reserve ratio.
    pub nu_zeta: f64,
}

/// Bank operating cost per unit of deposits given its own and the aggregate
/// reserve ratio.
pub fn operating_cost(zeta: f64, zeta_bar: f64, p: &ModelParams) -> Result<OperatingCost> {
    if !(zeta > 0.0) {
        return Err(Error::domain("zeta", zeta));
    }
    if !(zeta_bar > 0.0) {
        return Err(Error::domain("zeta_bar", zeta_bar));
    }
    let e = 1.0 - p.varphi;
    Ok(OperatingCost {
        nu: p.phi1 * zeta.powf(e) + p.phi2 * zeta_bar.powf(e),
        nu_zeta: p.phi1 * e * zeta.powf(-p.varphi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega {
    pub c: f64,
    pub x: f64,
}

/// Marginal-utility scale factors for consumption and leisure at deposit
/// spread `chi_n`.
///
/// Note the consumption factor carries exponent `(psi - sigma)/(1 - psi)` on
/// the liquidity term while the leisure factor carries `(1 - sigma)/(1 - psi)`.
pub fn omega_terms(chi_n: f64, p: &ModelParams) -> Result<Omega> {
    let ok = if p.psi < 1.0 {
        chi_n > 0.0
    } else {
        chi_n >= 0.0
    };
    if !ok {
        return Err(Error::domain("chi_n", chi_n));
    }
    let (iota, psi, sigma) = (p.iota, p.psi, p.sigma);
    let a = 1.0 + (iota / (1.0 - iota)).powf(1.0 / psi) * chi_n.powf(1.0 - 1.0 / psi);
    let base = (1.0 - iota).powf((1.0 - sigma) / (1.0 - psi));
    Ok(Omega {
        c: base * a.powf((psi - sigma) / (1.0 - psi)),
        x: base * a.powf((1.0 - sigma) / (1.0 - psi)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Production {
    pub y: f64,
    pub f_k: f64,
    pub f_l: f64,
}

/// Cobb-Douglas output and marginal products.
pub fn production(k: f64, ell: f64, p: &ModelParams) -> Result<Production> {
    if !(k > 0.0) {
        return Err(Error::domain("k", k));
    }
    if !(ell > 0.0 && ell <= 1.0) {
        return Err(Error::domain("labor", ell));
    }
    let ratio = k / ell;
    Ok(Production {
        y: k.powf(p.alpha) * ell.powf(1.0 - p.alpha),
        f_k: p.alpha * ratio.powf(p.alpha - 1.0),
        f_l: (1.0 - p.alpha) * ratio.powf(p.alpha),
    })
}

fn marginal_utility(s: &PeriodState, p: &ModelParams) -> Result<f64> {
    if !(s.c > 0.0) {
        return Err(Error::domain("c", s.c));
    }
    if !(s.x > 0.0) {
        return Err(Error::domain("x", s.x));
    }
    let omega = omega_terms(s.chi_n, p)?;
    Ok(s.c.powf(-p.sigma) * s.x.powf(p.upsilon) * omega.c)
}

/// One-period discount factor between `cur` and `next`.
pub fn sdf(cur: &PeriodState, next: &PeriodState, p: &ModelParams) -> Result<f64> {
    Ok(p.beta * marginal_utility(next, p)? / marginal_utility(cur, p)?)
}

pub(crate) fn marginal_utility_of_consumption(s: &PeriodState, p: &ModelParams) -> Result<f64> {
    marginal_utility(s, p)
}

/// Reserve ratio solving the bank's reserve condition at spread `chi_r`.
pub fn reserve_ratio(chi_r: f64, p: &ModelParams) -> Result<f64> {
    let denom = p.phi1 * (p.varphi - 1.0);
    if !(chi_r > 0.0) || !(denom > 0.0) {
        return Err(Error::domain("chi_r", chi_r));
    }
    Ok((chi_r / denom).powf(-1.0 / p.varphi))
}

/// Deposit spread charged by the bank given the reserve ratio and its deposit
/// share `n/z` of effective balances.
pub fn deposit_spread(zeta: f64, n_over_z: f64, p: &ModelParams) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::domain("zeta", zeta));
    }
    let denom = 1.0 - p.psi * n_over_z;
    if !(denom > 0.0) {
        return Err(Error::domain("1 - psi*n/z", denom));
    }
    Ok(((p.phi1 * p.varphi + p.phi2) * zeta.powf(1.0 - p.varphi) - p.xi) / denom)
}

/// Effective real balances demanded at consumption `c` and spread `chi_n`.
pub fn deposit_demand(c: f64, chi_n: f64, p: &ModelParams) -> Result<f64> {
    if !(chi_n > 0.0) {
        return Err(Error::domain("chi_n", chi_n));
    }
    Ok(c * (p.iota / ((1.0 - p.iota) * chi_n)).powf(1.0 / p.psi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum LoanBranch {
    Interior,
    /// Loan demand pinned at zero; `margin = chi_l - chi_b*R_l/theta_b < 0`.
    Corner {
        margin: f64,
    },
}

impl LoanBranch {
    pub fn is_interior(&self) -> bool {
        matches!(self, LoanBranch::Interior)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoanDemand {
    pub quantity: f64,
    pub branch: LoanBranch,
}

/// Central-bank loan demand given the loan and bond spreads, the deposit spread
/// and effective balances.
pub fn loan_demand(
    chi_l: f64,
    chi_b: f64,
    chi_n: f64,
    r_f: f64,
    z: f64,
    p: &ModelParams,
) -> Result<LoanDemand> {
    if !(chi_n > 0.0) {
        return Err(Error::domain("chi_n", chi_n));
    }
    let margin = chi_l - chi_b * p.r_l / p.theta_b;
    if margin < 0.0 {
        return Ok(LoanDemand {
            quantity: 0.0,
            branch: LoanBranch::Corner { margin },
        });
    }
    let quantity = margin * p.theta_b / (chi_b * r_f + p.theta_b) * z / (p.psi * chi_n);
    Ok(LoanDemand {
        quantity,
        branch: LoanBranch::Interior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn spread_examples() {
        let rf = 1.0 / 0.99;
        assert_eq!(spread(rf, rf).unwrap(), 0.0);
        assert!((spread(1.0, rf).unwrap() - 0.01).abs() < 1e-15);
        // 1 - 0.993*0.99 evaluated in extended precision
        assert!((spread(0.993, rf).unwrap() - 0.01693).abs() < 1e-15);
        assert!(spread(1.0, 0.0).is_err());
    }

    #[test]
    fn operating_cost_anchors() {
        let p = ModelParams::reference();
        let oc = operating_cost(0.1945, 0.1945, &p).unwrap();
        assert!(close(oc.nu, 0.0020552929515481077, 1e-12));
        assert!(close(oc.nu_zeta, -0.010001721226942334, 1e-12));
        assert!(close(-oc.nu_zeta * 0.1945, 0.0019453347786402839, 1e-12));
        assert!(close(
            oc.nu + 0.1945 * p.rho_res,
            0.0020747429515481077,
            1e-12
        ));

        let unit = operating_cost(1.0, 1.0, &p).unwrap();
        assert!(close(unit.nu, 2.0 * p.phi1, 1e-15));
        assert!(operating_cost(0.0, 0.2, &p).is_err());
    }

    #[test]
    fn omega_anchors() {
        let p = ModelParams::reference();
        let o = omega_terms(0.01, &p).unwrap();
        assert!(close(o.c, 0.99086129170493648, 1e-13));
        assert!(close(o.x, 0.99930035584737256, 1e-13));
        assert!(omega_terms(0.0, &p).is_err());
    }

    #[test]
    fn omega_limits() {
        let mut p = ModelParams::reference();
        p.iota = 1e-14;
        let o = omega_terms(0.01, &p).unwrap();
        assert!(close(o.c, 1.0, 1e-6) && close(o.x, 1.0, 1e-6));

        let mut p = ModelParams::reference();
        p.sigma = p.psi;
        let expected = (1.0 - p.iota).powf((1.0 - p.sigma) / (1.0 - p.psi));
        for chi in [0.001, 0.01, 0.2] {
            assert!(close(omega_terms(chi, &p).unwrap().c, expected, 1e-14));
        }
    }

    #[test]
    fn production_examples() {
        let p = ModelParams::reference();
        let a = production(1.0, 1.0, &p).unwrap();
        assert!(
            close(a.y, 1.0, 1e-15)
                && close(a.f_k, 1.0 / 3.0, 1e-15)
                && close(a.f_l, 2.0 / 3.0, 1e-15)
        );
        let b = production(8.0, 1.0, &p).unwrap();
        assert!(
            close(b.y, 2.0, 1e-14)
                && close(b.f_k, 1.0 / 12.0, 1e-14)
                && close(b.f_l, 4.0 / 3.0, 1e-14)
        );
        assert!(production(-1.0, 0.5, &p).is_err());
        assert!(production(1.0, 0.0, &p).is_err());
    }

    #[test]
    fn sdf_is_beta_when_nothing_changes() {
        let p = ModelParams::reference();
        let s = PeriodState {
            c: 0.8,
            x: 0.66,
            chi_n: 0.01,
            ..PeriodState::default()
        };
        assert!(close(sdf(&s, &s, &p).unwrap(), p.beta, 1e-15));
        let zero_c = PeriodState { c: 0.0, ..s };
        assert!(sdf(&zero_c, &s, &p).is_err());
    }

    #[test]
    fn reserve_ratio_inverts_calibration() {
        let mut p = ModelParams::reference();
        p.varphi = 2.8929440389294404;
        p.phi1 = 4.6317641492737016e-5;
        assert!(close(reserve_ratio(0.01, &p).unwrap(), 0.1945, 1e-12));
    }

    #[test]
    fn loan_corner_is_reported() {
        let p = ModelParams::reference();
        let d = loan_demand(0.0, 0.01, 0.01, 1.0 / 0.99, 1.0, &p).unwrap();
        assert_eq!(d.quantity, 0.0);
        assert!(matches!(d.branch, LoanBranch::Corner { margin } if margin < 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn production_has_zero_profit(k in 0.01f64..100.0, ell in 0.01f64..1.0, alpha in 0.05f64..0.95) {
                let p = ModelParams { alpha, ..ModelParams::reference() };
                let pr = production(k, ell, &p).unwrap();
                prop_assert!((k * pr.f_k + ell * pr.f_l - pr.y).abs() <= 1e-12 * pr.y.max(1.0));
            }
        }
    }
}
