//! Closed-form travelling waves: the two Landau-Lifshitz soliton branches,
//! the lift phase of the lower branch, Sine-Gordon kinks, the long-wave
//! rescaled solitons, their small-`eps` expansions and the sharpness constant
//! of the `eps^2` convergence rate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{adaptive_simpson, trapezoid};
use crate::spectral::{Grid1D, RealField};
use crate::states::{HydroState, SGState, ScaledParams, SpinState};

/// Minimal `mu * (L - |center|)` for soliton tails to be negligible at the box edge.
pub const TAIL_DECAY: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        })
    }
}

/// Kink (`Plus`, phase decreasing from `pi` to 0) or antikink (`Minus`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KinkSign {
    Plus,
    Minus,
}

impl KinkSign {
    fn value(self) -> f64 {
        match self {
            KinkSign::Plus => 1.0,
            KinkSign::Minus => -1.0,
        }
    }
}

/// Parameters of one travelling wave `m_c` of the biaxial equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub speed: f64,
    pub lambda1: f64,
    pub lambda3: f64,
    pub branch: Branch,
    /// Amplitude of `m1`, signed by `delta`.
    pub a: f64,
    /// Inverse width; the soliton energy is `2 mu`.
    pub mu: f64,
    pub delta: f64,
    /// `1 - a^2`, computed without cancellation.
    pub one_minus_a2: f64,
}

impl SolitonParams {
    pub fn cstar(&self) -> f64 {
        critical_speed(self.lambda1, self.lambda3)
    }

    pub fn energy(&self) -> f64 {
        2.0 * self.mu
    }
}

/// `c* = sqrt(lambda3) - sqrt(lambda1)`.
pub fn critical_speed(lambda1: f64, lambda3: f64) -> f64 {
    lambda3.sqrt() - lambda1.sqrt()
}

/// Amplitude and width of the soliton with speed `c` on the given branch.
///
/// Both branch formulas are evaluated in rationalised form so that `1 - a^2`
/// and the lower-branch `mu^2` keep full relative precision when they are
/// small (the long-wave regime).
pub fn branch_params(c: f64, lambda1: f64, lambda3: f64, branch: Branch) -> Result<SolitonParams> {
    if !(lambda1 > 0.0 && lambda3 > lambda1 && lambda3.is_finite()) {
        return Err(invalid(format!(
            "need 0 < lambda1 < lambda3, got ({lambda1}, {lambda3})"
        )));
    }
    let cstar = critical_speed(lambda1, lambda3);
    let ac = c.abs();
    if !c.is_finite() || ac > cstar * (1.0 + 1e-14) {
        return Err(Error::OutOfBranch { speed: c, cstar });
    }
    let ac = ac.min(cstar);
    let c2 = ac * ac;
    let (s1, s3) = (lambda1.sqrt(), lambda3.sqrt());
    // (l3 + l1 - c^2)^2 - 4 l1 l3, factored
    let disc = (cstar - ac) * (cstar + ac) * ((s3 + s1).powi(2) - c2);
    let d = disc.max(0.0).sqrt();
    let sum = lambda3 + lambda1 - c2;
    let gap = lambda3 - lambda1;
    let (mu2, a2, one_minus_a2) = match branch {
        Branch::Minus => {
            let q = 2.0 * lambda1 * c2 / (gap * (gap - c2 + d));
            (2.0 * lambda1 * lambda3 / (sum + d), (c2 + gap + d) / (2.0 * gap), q)
        }
        Branch::Plus => {
            let a2 = 2.0 * lambda3 * c2 / (gap * (c2 + gap + d));
            ((sum + d) / 2.0, a2, (gap - c2 + d) / (2.0 * gap))
        }
    };
    let delta = if c >= 0.0 { 1.0 } else { -1.0 };
    Ok(SolitonParams {
        speed: c,
        lambda1,
        lambda3,
        branch,
        a: delta * a2.min(1.0).sqrt(),
        mu: mu2.sqrt(),
        delta,
        one_minus_a2,
    })
}

fn check_tails(grid: &Grid1D, mu: f64, center: f64) -> Result<()> {
    let decay = mu * (grid.half_length() - center.abs());
    if decay < TAIL_DECAY {
        return Err(Error::TailLeak {
            decay,
            required: TAIL_DECAY,
        });
    }
    Ok(())
}

/// `m_c(x - center) = (a sech(mu s), tanh(mu s), (1-a^2)^(1/2) sech(mu s))`.
pub fn ll_soliton_state(grid: Grid1D, params: &SolitonParams, center: f64) -> Result<SpinState> {
    check_tails(&grid, params.mu, center)?;
    let (a, mu, b) = (params.a, params.mu, params.one_minus_a2.sqrt());
    let m1 = RealField::from_fn(grid, |x| a / (mu * (x - center)).cosh())?;
    let m2 = RealField::from_fn(grid, |x| (mu * (x - center)).tanh())?;
    let m3 = RealField::from_fn(grid, |x| b / (mu * (x - center)).cosh())?;
    SpinState::new(m1, m2, m3)
}

/// Lift phase of the lower branch,
/// `2 arctan( ((a^2 + sinh^2(mu x))^(1/2) - sinh(mu x)) / a )`.
pub fn lower_branch_phase(a: f64, mu: f64, x: f64) -> f64 {
    let s = (mu * x).sinh();
    let h = a.hypot(s);
    let t = if s > 0.0 { a / (h + s) } else { (h - s) / a };
    2.0 * t.atan()
}

/// Hydrodynamic pair of a lower-branch soliton centred at `center`.
pub fn ll_soliton_hydro(grid: Grid1D, params: &SolitonParams, center: f64) -> Result<HydroState> {
    if params.branch != Branch::Minus {
        return Err(Error::UnsupportedLift);
    }
    check_tails(&grid, params.mu, center)?;
    let (a, mu, b) = (params.a, params.mu, params.one_minus_a2.sqrt());
    let u = RealField::from_fn(grid, |x| b / (mu * (x - center)).cosh())?;
    let phi = RealField::from_fn(grid, |x| lower_branch_phase(a, mu, x - center))?;
    HydroState::new(u, phi)
}

/// Sine-Gordon kink of speed `c` at time `t`:
/// `phi = 2 arctan(exp(-+ z))`, `u = +- c sigma^(1/2) / ((1-c^2)^(1/2) cosh z)`,
/// `z = sigma^(1/2) (x - c t - center) / (1-c^2)^(1/2)`.
pub fn sg_kink(grid: Grid1D, c: f64, sigma: f64, sign: KinkSign, center: f64, t: f64) -> Result<SGState> {
    if !(c.abs() < 1.0) {
        return Err(Error::Superluminal(c));
    }
    if !(sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    let gamma = 1.0 / (1.0 - c * c).sqrt();
    let k = sigma.sqrt() * gamma;
    let sg = sign.value();
    let z = move |x: f64| k * (x - c * t - center);
    let phi = RealField::from_fn(grid, |x| 2.0 * (-sg * z(x)).exp().atan())?;
    let u = RealField::from_fn(grid, |x| sg * c * k / z(x).cosh())?;
    SGState::new(phi, u)
}

/// Lower-branch parameters for the speed `tau / eps^(1/2)` with
/// `lambda1 = sigma eps`, `lambda3 = 1/eps`.
pub fn scaled_branch_params(tau: f64, p: ScaledParams) -> Result<SolitonParams> {
    if !(0.0..1.0).contains(&tau) {
        return Err(invalid(format!("tau must lie in [0, 1), got {tau}")));
    }
    branch_params(tau / p.eps().sqrt(), p.lambda1(), p.lambda3(), Branch::Minus)
}

/// Rescaled lower-branch soliton `(U_{c_eps}, Phi_{c_eps})` at time 0.
pub fn scaled_soliton(grid: Grid1D, tau: f64, p: ScaledParams) -> Result<HydroState> {
    scaled_soliton_at(grid, tau, p, 0.0)
}

/// Rescaled soliton translated to `center` (its position at time `t` is
/// `center = tau t`).
pub fn scaled_soliton_at(grid: Grid1D, tau: f64, p: ScaledParams, center: f64) -> Result<HydroState> {
    let bp = scaled_branch_params(tau, p)?;
    let se = p.eps().sqrt();
    // width in the rescaled variable
    let k = bp.mu / se;
    let amp = bp.one_minus_a2.sqrt() / p.eps();
    let a = bp.a;
    let u = RealField::from_fn(grid, |y| amp / (k * (y - center)).cosh())?;
    let phi = RealField::from_fn(grid, |y| lower_branch_phase(a, bp.mu, (y - center) / se))?;
    HydroState::new(u, phi)
}

/// Truncated small-`eps` expansions of `a_{c_eps}` (through `eps^4`) and
/// `mu_{c_eps}` (through the relative `eps^2` correction), `nu = sigma`.
pub fn asymptotics(tau: f64, sigma: f64, eps: f64) -> (f64, f64) {
    let nu = sigma;
    let t2 = tau * tau;
    let w = 1.0 - t2;
    let e2 = eps * eps;
    let a = 1.0 - nu * t2 * e2 / (2.0 * w) - nu * nu * t2 * (8.0 - 7.0 * t2 + 3.0 * t2 * t2) * e2 * e2 / (8.0 * w.powi(3));
    // the relative eps^2 correction follows from mu^2 = l1 a^2 + l3 (1 - a^2)
    let mu = (nu * eps / w).sqrt() * (1.0 + nu * t2 * e2 / (2.0 * w * w));
    (a, mu)
}

/// Half-width of the integration window of the sharpness integral.
pub const SHARPNESS_WINDOW: f64 = 40.0;

/// `U_{c_eps} - U_tau ~ eps^2 C sech(g y) (1 + beta g y tanh(g y))`; amplitude
/// and width corrections of the exact soliton give `beta = -tau^2 / (2 - 2tau^2 + tau^4)`.
fn sharpness_beta(tau: f64) -> f64 {
    let t2 = tau * tau;
    -t2 / (2.0 - 2.0 * t2 + t2 * t2)
}

fn sharpness_prefactor(tau: f64, nu: f64) -> f64 {
    let t2 = tau * tau;
    nu.powf(1.25) * tau * (2.0 - 2.0 * t2 + t2 * t2) / (2.0 * (1.0 - t2).powf(2.25))
}

/// Integrand `(1 + beta x tanh x)^2 sech^2 x`.
pub fn sharpness_integrand(beta: f64, x: f64) -> f64 {
    (1.0 + beta * x * x.tanh()).powi(2) / x.cosh().powi(2)
}

fn check_sharpness_args(tau: f64, nu: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("tau must lie in (0, 1), got {tau}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid(format!("nu must be positive, got {nu}")));
    }
    Ok(())
}

/// Limit of `|U_{c_eps} - U_tau|_{L^2} / eps^2` as `eps -> 0`, by adaptive
/// Simpson quadrature on `|x| <= 40`.
pub fn sharpness_constant(tau: f64, nu: f64) -> Result<f64> {
    check_sharpness_args(tau, nu)?;
    let beta = sharpness_beta(tau);
    let w = SHARPNESS_WINDOW;
    let integral = adaptive_simpson(|x| sharpness_integrand(beta, x), -w, w, 1e-14);
    Ok(sharpness_prefactor(tau, nu) * integral.sqrt())
}

/// Same constant by the composite trapezoid rule.
pub fn sharpness_constant_trapezoid(tau: f64, nu: f64, panels: usize) -> Result<f64> {
    check_sharpness_args(tau, nu)?;
    let beta = sharpness_beta(tau);
    let w = SHARPNESS_WINDOW;
    let integral = trapezoid(|x| sharpness_integrand(beta, x), -w, w, panels);
    Ok(sharpness_prefactor(tau, nu) * integral.sqrt())
}

/// Far-field phase values `(phi(-inf), phi(+inf))` of a lower-branch lift.
pub fn lower_branch_limits(a: f64) -> (f64, f64) {
    if a > 0.0 {
        (PI, 0.0)
    } else {
        (-PI, 0.0)
    }
}
