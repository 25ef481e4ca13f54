//! Conserved and diagnostic energy functionals on discrete states.
//!
//! Integrals use the `dx`-weighted rectangle rule. In one space dimension the
//! multi-index sums over `|alpha| = j` collapse to the single derivative
//! `d^j/dx^j`; `d^j sin(Phi)` differentiates the sampled field `sin(Phi)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{derivative_unchecked, RealField};
use crate::states::{HydroState, SGState, ScaledParams, SpinState};

/// One energy value at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub label: String,
    pub value: f64,
    pub order_k: u32,
    pub time: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "time,label,k,value";

    pub fn new(label: impl Into<String>, value: f64, order_k: u32, time: f64) -> Self {
        Self {
            label: label.into(),
            value,
            order_k,
            time,
        }
    }

    /// `time,label,k,value` with 17 significant digits.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            crate::io::fmt17(self.time),
            self.label,
            self.order_k,
            crate::io::fmt17(self.value)
        )
    }
}

fn integral(f: impl Iterator<Item = f64>, dx: f64) -> f64 {
    dx * f.sum::<f64>()
}

/// `d^j f`, with `j = 0` the field itself.
fn nth(f: &RealField, j: u32) -> RealField {
    if j == 0 {
        f.clone()
    } else {
        derivative_unchecked(f, j)
    }
}

fn sq_integral(f: &RealField) -> f64 {
    integral(f.samples().iter().map(|v| v * v), f.grid().spacing())
}

fn check_scaled(h: &HydroState, eps: f64) -> Result<()> {
    h.u.check_same_grid(&h.phi)?;
    h.check_nonvanishing(eps)
}

/// Landau-Lifshitz energy of a hydrodynamic pair:
/// `1/2 int( u'^2/(1-u^2) + (1-u^2) phi'^2 + lambda1 (1-u^2) sin^2 phi + lambda3 u^2 )`.
pub fn e_ll_hydro(h: &HydroState, lambda1: f64, lambda3: f64) -> Result<f64> {
    if lambda1 < 0.0 || lambda3 < 0.0 {
        return Err(invalid("anisotropy must be nonnegative"));
    }
    check_scaled(h, 1.0)?;
    let du = derivative_unchecked(&h.u, 1);
    let dphi = derivative_unchecked(&h.phi, 1);
    let (u, p, du, dp) = (h.u.samples(), h.phi.samples(), du.samples(), dphi.samples());
    let dens = (0..u.len()).map(|n| {
        let rho2 = 1.0 - u[n] * u[n];
        du[n] * du[n] / rho2 + rho2 * dp[n] * dp[n] + lambda1 * rho2 * p[n].sin().powi(2) + lambda3 * u[n] * u[n]
    });
    Ok(0.5 * integral(dens, h.grid().spacing()))
}

/// Energy of the rescaled system; equals [`e_scaled_k`] with `k = 1`.
pub fn e_scaled(h: &HydroState, p: ScaledParams) -> Result<f64> {
    e_scaled_k(h, p, 1)
}

/// Order-`k` energy of the rescaled system:
/// `1/2 int( eps^2 (d^k U)^2/(1-eps^2 U^2) + (d^{k-1} U)^2
///          + (1-eps^2 U^2)(d^k Phi)^2 + sigma (1-eps^2 U^2)(d^{k-1} sin Phi)^2 )`.
pub fn e_scaled_k(h: &HydroState, p: ScaledParams, k: u32) -> Result<f64> {
    if k < 1 {
        return Err(invalid("energy order must be >= 1"));
    }
    let eps = p.eps();
    check_scaled(h, eps)?;
    let e2 = eps * eps;
    let dku = nth(&h.u, k);
    let dk1u = nth(&h.u, k - 1);
    let dkphi = nth(&h.phi, k);
    let dk1sin = nth(&h.phi.map(f64::sin), k - 1);
    let u = h.u.samples();
    let dens = (0..u.len()).map(|n| {
        let rho2 = 1.0 - e2 * u[n] * u[n];
        e2 * dku.samples()[n].powi(2) / rho2
            + dk1u.samples()[n].powi(2)
            + rho2 * dkphi.samples()[n].powi(2)
            + p.sigma() * rho2 * dk1sin.samples()[n].powi(2)
    });
    Ok(0.5 * integral(dens, h.grid().spacing()))
}

/// Sine-Gordon energy `1/2 int( U^2 + Phi'^2 + sigma sin^2 Phi )`.
pub fn e_sg(s: &SGState, sigma: f64) -> Result<f64> {
    e_sg_k(s, sigma, 1)
}

/// `1/2 int( (d^{k-1} U)^2 + (d^k Phi)^2 + sigma (d^{k-1} sin Phi)^2 )`.
pub fn e_sg_k(s: &SGState, sigma: f64, k: u32) -> Result<f64> {
    if k < 1 {
        return Err(invalid("energy order must be >= 1"));
    }
    s.phi.check_same_grid(&s.u)?;
    let a = sq_integral(&nth(&s.u, k - 1));
    let b = sq_integral(&nth(&s.phi, k));
    let c = sq_integral(&nth(&s.phi.map(f64::sin), k - 1));
    Ok(0.5 * (a + b + sigma * c))
}

/// Landau-Lifshitz energy in spin variables,
/// `1/2 int( |m'|^2 + lambda1 m1^2 + lambda3 m3^2 )`.
pub fn e_ll_spin(m: &SpinState, lambda1: f64, lambda3: f64) -> Result<f64> {
    if lambda1 < 0.0 || lambda3 < 0.0 {
        return Err(invalid("anisotropy must be nonnegative"));
    }
    let grad: f64 = m.components().iter().map(|f| sq_integral(&nth(f, 1))).sum();
    Ok(0.5 * (grad + lambda1 * sq_integral(&m.m1) + lambda3 * sq_integral(&m.m3)))
}

/// Order-`k` (`k >= 2`) Landau-Lifshitz energy in spin variables, with
/// `mdot` the tendency of `m`:
/// `1/2 int( |d^a mdot|^2 + |d^a m''|^2 + (l1 + l3)(|d^a m1'|^2 + |d^a m3'|^2)
///          + l1 l3 (|d^a m1|^2 + |d^a m3|^2) )`, `a = k - 2`.
pub fn e_ll_k_spin(m: &SpinState, mdot: &SpinState, k: u32, lambda1: f64, lambda3: f64) -> Result<f64> {
    if k < 2 {
        return Err(invalid("spin energy order must be >= 2"));
    }
    m.m1.check_same_grid(&mdot.m1)?;
    let a = k - 2;
    let mut total = 0.0;
    for f in mdot.components() {
        total += sq_integral(&nth(f, a));
    }
    for f in m.components() {
        total += sq_integral(&nth(f, a + 2));
    }
    for f in [&m.m1, &m.m3] {
        total += (lambda1 + lambda3) * sq_integral(&nth(f, a + 1));
        total += lambda1 * lambda3 * sq_integral(&nth(f, a));
    }
    Ok(0.5 * total)
}

/// Energy of the differences `v = U_eps - U`, `phi = Phi_eps - Phi`:
/// `1/2 int( (d^{k-1} v)^2 + (d^k phi)^2 + sigma (d^{k-1} sin phi)^2 )`.
pub fn err_energy_sg_k(diff_u: &RealField, diff_phi: &RealField, sigma: f64, k: u32) -> Result<f64> {
    if k < 1 {
        return Err(invalid("energy order must be >= 1"));
    }
    if diff_u.grid() != diff_phi.grid() {
        return Err(Error::GridMismatch);
    }
    let s = SGState {
        phi: diff_phi.clone(),
        u: diff_u.clone(),
    };
    e_sg_k(&s, sigma, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{derivative, l2_norm, sobolev_norm, Grid1D};
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(30.0, 512).unwrap()
    }

    fn zero_hydro() -> HydroState {
        HydroState::new(RealField::zeros(grid()), RealField::zeros(grid())).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let h = zero_hydro();
        let p = ScaledParams::new(0.1, 1.0).unwrap();
        assert_eq!(e_ll_hydro(&h, 0.3, 5.0).unwrap(), 0.0);
        for k in 1..5 {
            assert_eq!(e_scaled_k(&h, p, k).unwrap(), 0.0);
            assert_eq!(e_sg_k(&SGState::zeros(grid()), 1.0, k).unwrap(), 0.0);
        }
        let z = RealField::zeros(grid());
        assert_eq!(err_energy_sg_k(&z, &z, 1.0, 2).unwrap(), 0.0);
    }

    #[test]
    fn static_kink_energies() {
        let lambda1: f64 = 0.36;
        let g = grid();
        let phi = RealField::from_fn(g, |x| 2.0 * (-lambda1.sqrt() * x).exp().atan()).unwrap();
        let h = HydroState::new(RealField::zeros(g), phi.clone()).unwrap();
        let e = e_ll_hydro(&h, lambda1, 17.0).unwrap();
        assert!((e - 2.0 * lambda1.sqrt()).abs() < 1e-10);

        let sigma: f64 = 2.0;
        let phi = RealField::from_fn(g, |x| 2.0 * (-sigma.sqrt() * x).exp().atan()).unwrap();
        let s = SGState::new(phi, RealField::zeros(g)).unwrap();
        assert!((e_sg(&s, sigma).unwrap() - 2.0 * sigma.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn energy_orders_agree_at_k1() {
        let g = grid();
        let u = RealField::from_fn(g, |x| 0.4 / x.cosh()).unwrap();
        let phi = RealField::from_fn(g, |x| 2.0 * (-0.8 * x).exp().atan()).unwrap();
        let h = HydroState::new(u.clone(), phi.clone()).unwrap();
        let p = ScaledParams::new(0.2, 1.3).unwrap();
        let e1 = e_scaled_k(&h, p, 1).unwrap();
        assert!((e1 - e_scaled(&h, p).unwrap()).abs() <= 1e-12 * e1);
        let s = SGState::new(phi, u).unwrap();
        let g1 = e_sg_k(&s, 1.3, 1).unwrap();
        assert!((g1 - e_sg(&s, 1.3).unwrap()).abs() <= 1e-12 * g1);
        let lim = ScaledParams::sine_gordon_limit(1.3).unwrap();
        for k in 1..4 {
            let a = e_scaled_k(&h, lim, k).unwrap();
            let b = e_sg_k(&s, 1.3, k).unwrap();
            assert!((a - b).abs() <= 1e-12 * b, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn second_order_energy_from_seminorms() {
        let g = grid();
        let u = RealField::from_fn(g, |x| 0.5 * (-x * x / 4.0).exp()).unwrap();
        let phi = RealField::from_fn(g, |x| 2.0 * (-x).exp().atan() + 0.2 * (-x * x).exp()).unwrap();
        let h = HydroState::new(u.clone(), phi.clone()).unwrap();
        let (eps, sigma) = (0.3, 0.7);
        let p = ScaledParams::new(eps, sigma).unwrap();
        // pieces assembled independently through the spectral module
        let rho2 = u.map(|v| 1.0 - eps * eps * v * v);
        let d2u = derivative(&u, 2).unwrap();
        let weighted = d2u.zip_map(&rho2, |a, r| a / r.sqrt()).unwrap();
        let d2phi = derivative(&phi, 2).unwrap();
        let wphi = d2phi.zip_map(&rho2, |a, r| a * r.sqrt()).unwrap();
        let dsin = derivative(&phi.map(f64::sin), 1).unwrap();
        let wsin = dsin.zip_map(&rho2, |a, r| a * r.sqrt()).unwrap();
        let expect = 0.5
            * (eps * eps * l2_norm(&weighted).powi(2)
                + sobolev_norm(&u, 1, true).powi(2)
                + l2_norm(&wphi).powi(2)
                + sigma * l2_norm(&wsin).powi(2));
        let got = e_scaled_k(&h, p, 2).unwrap();
        assert!((got - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn scaled_energy_tends_to_sine_gordon_quadratically() {
        let g = grid();
        let u = RealField::from_fn(g, |x| 0.6 / (0.9 * x).cosh()).unwrap();
        let phi = RealField::from_fn(g, |x| 2.0 * (-x).exp().atan()).unwrap();
        let h = HydroState::new(u.clone(), phi.clone()).unwrap();
        let s = SGState::new(phi, u).unwrap();
        for k in 1..3 {
            let sg = e_sg_k(&s, 1.0, k).unwrap();
            let d1 = (e_scaled_k(&h, ScaledParams::new(1e-2, 1.0).unwrap(), k).unwrap() - sg).abs();
            let d2 = (e_scaled_k(&h, ScaledParams::new(1e-3, 1.0).unwrap(), k).unwrap() - sg).abs();
            let ratio = d1 / d2;
            assert!((80.0..120.0).contains(&ratio), "k={k} ratio {ratio}");
        }
    }

    #[test]
    fn spin_energy_without_anisotropy() {
        let g = grid();
        let th = RealField::from_fn(g, |x| 0.5 * (-x * x / 8.0).exp()).unwrap();
        let m = SpinState::new(th.map(f64::sin), th.map(f64::cos), RealField::zeros(g)).unwrap();
        let mdot = SpinState::new(th.map(|t| 0.1 * t), RealField::zeros(g), th.map(|t| t * t)).unwrap();
        let e = e_ll_k_spin(&m, &mdot, 2, 0.0, 0.0).unwrap();
        let mut expect = 0.0;
        for f in mdot.components() {
            expect += l2_norm(f).powi(2);
        }
        for f in m.components() {
            expect += l2_norm(&derivative(f, 2).unwrap()).powi(2);
        }
        assert!((e - 0.5 * expect).abs() <= 1e-12 * e);
        assert!(e_ll_k_spin(&m, &mdot, 1, 0.0, 0.0).is_err());
    }

    #[test]
    fn constant_spin_has_zero_energy() {
        let g = grid();
        let m = SpinState::new(RealField::zeros(g), RealField::constant(g, 1.0), RealField::zeros(g)).unwrap();
        let z = SpinState::new(RealField::zeros(g), RealField::zeros(g), RealField::zeros(g)).unwrap();
        for k in 2..5 {
            assert!(e_ll_k_spin(&m, &z, k, 0.25, 4.0).unwrap().abs() < 1e-24);
        }
    }

    #[test]
    fn error_energy_matches_metric_pieces() {
        let g = grid();
        let v = RealField::from_fn(g, |x| 0.01 * (-x * x).exp()).unwrap();
        let w = RealField::from_fn(g, |x| 0.02 * x * (-x * x / 2.0).exp()).unwrap();
        let sigma = 1.7;
        let e = err_energy_sg_k(&v, &w, sigma, 1).unwrap();
        let expect = 0.5
            * (l2_norm(&v).powi(2)
                + l2_norm(&derivative(&w, 1).unwrap()).powi(2)
                + sigma * l2_norm(&w.map(f64::sin)).powi(2));
        assert!((e - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn domain_violation_reported() {
        let g = grid();
        let h = HydroState::new(RealField::constant(g, 1.0), RealField::zeros(g)).unwrap();
        assert!(e_ll_hydro(&h, 0.1, 1.0).is_err());
        let h = HydroState::new(RealField::constant(g, 20.0), RealField::zeros(g)).unwrap();
        assert!(e_scaled(&h, ScaledParams::new(0.05, 1.0).unwrap()).is_err());
        assert!(e_scaled(&h, ScaledParams::new(0.04, 1.0).unwrap()).is_ok());
    }

    #[test]
    fn csv_row_has_17_digits() {
        let r = EnergyReport::new("E_eps", PI, 1, 0.5);
        assert_eq!(r.csv_row(), "5.0000000000000000e-1,E_eps,1,3.1415926535897931e0");
    }
}
