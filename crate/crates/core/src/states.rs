//! Magnetization, its hydrodynamic lift, and the long-wave scaling maps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{trig_interpolate, Grid1D, RealField};

/// Default lift tolerance: `|m3| <= 1 - tol` is required.
pub const DEFAULT_LIFT_TOL: f64 = 1e-9;

/// Hydrodynamic pair `(u, phi)`, or its rescaled version `(U_eps, Phi_eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroState {
    pub u: RealField,
    pub phi: RealField,
}

impl HydroState {
    pub fn new(u: RealField, phi: RealField) -> Result<Self> {
        u.check_same_grid(&phi)?;
        Ok(Self { u, phi })
    }

    pub fn grid(&self) -> &Grid1D {
        self.u.grid()
    }

    /// Checks `scale * |u| < 1` everywhere.
    pub fn check_nonvanishing(&self, scale: f64) -> Result<()> {
        let (node, m) = self.u.argmax_abs();
        if scale * m >= 1.0 {
            return Err(Error::DomainViolation {
                node,
                value: scale * m,
                limit: 1.0,
            });
        }
        Ok(())
    }
}

/// Sine-Gordon pair: phase `phi` and its time derivative `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SGState {
    pub phi: RealField,
    pub u: RealField,
}

impl SGState {
    pub fn new(phi: RealField, u: RealField) -> Result<Self> {
        phi.check_same_grid(&u)?;
        Ok(Self { phi, u })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            phi: RealField::zeros(grid),
            u: RealField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        self.phi.grid()
    }
}

/// Sphere-valued magnetization `m = (m1, m2, m3)`.
///
/// Constructors do not enforce `|m| = 1`; states produced by
/// [`hydro_to_spin`] or the soliton factory satisfy it to rounding, and an
/// evolved state's defect is reported by [`SpinState::max_norm_defect`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub m1: RealField,
    pub m2: RealField,
    pub m3: RealField,
}

impl SpinState {
    pub fn new(m1: RealField, m2: RealField, m3: RealField) -> Result<Self> {
        m1.check_same_grid(&m2)?;
        m1.check_same_grid(&m3)?;
        Ok(Self { m1, m2, m3 })
    }

    pub fn grid(&self) -> &Grid1D {
        self.m1.grid()
    }

    pub fn components(&self) -> [&RealField; 3] {
        [&self.m1, &self.m2, &self.m3]
    }

    /// `max_n | |m(x_n)| - 1 |`.
    pub fn max_norm_defect(&self) -> f64 {
        let (a, b, c) = (self.m1.samples(), self.m2.samples(), self.m3.samples());
        (0..a.len())
            .map(|n| ((a[n] * a[n] + b[n] * b[n] + c[n] * c[n]).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise projection back onto the sphere.
    pub fn normalized(&self) -> SpinState {
        let (a, b, c) = (self.m1.samples(), self.m2.samples(), self.m3.samples());
        let norms: Vec<f64> = (0..a.len())
            .map(|n| (a[n] * a[n] + b[n] * b[n] + c[n] * c[n]).sqrt())
            .collect();
        let div = |f: &RealField| {
            let s = f.samples().iter().zip(&norms).map(|(v, r)| v / r).collect();
            RealField::raw(*f.grid(), s, f.jump())
        };
        SpinState {
            m1: div(&self.m1),
            m2: div(&self.m2),
            m3: div(&self.m3),
        }
    }
}

/// Anisotropy characteristic numbers `(lambda1, lambda3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    pub lambda1: f64,
    pub lambda3: f64,
}

impl Anisotropy {
    pub fn new(lambda1: f64, lambda3: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda3 >= 0.0 && lambda1.is_finite() && lambda3.is_finite()) {
            return Err(invalid(format!(
                "anisotropy must be nonnegative, got ({lambda1}, {lambda3})"
            )));
        }
        Ok(Self { lambda1, lambda3 })
    }
}

/// Long-wave regime parameters: `lambda1 = sigma * eps`, `lambda3 = 1 / eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    eps: f64,
    sigma: f64,
}

impl ScaledParams {
    /// Requires `0 < eps < 1` and `sigma > 0`.
    pub fn new(eps: f64, sigma: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { eps, sigma })
    }

    /// The formal limit `eps = 0`, in which the scaled energies reduce to the
    /// Sine-Gordon ones.
    pub fn sine_gordon_limit(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be nonnegative, got {sigma}")));
        }
        Ok(Self { eps: 0.0, sigma })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda1(&self) -> f64 {
        self.sigma * self.eps
    }

    pub fn lambda3(&self) -> f64 {
        1.0 / self.eps
    }

    pub fn anisotropy(&self) -> Anisotropy {
        Anisotropy {
            lambda1: self.lambda1(),
            lambda3: self.lambda3(),
        }
    }
}

/// `m = (rho sin phi, rho cos phi, u)` with `rho = (1 - u^2)^(1/2)`.
pub fn hydro_to_spin(h: &HydroState) -> Result<SpinState> {
    h.check_nonvanishing(1.0)?;
    let rho = |u: f64| (1.0 - u * u).sqrt();
    let m1 = h.u.zip_map_unchecked(&h.phi, |u, p| rho(u) * p.sin());
    let m2 = h.u.zip_map_unchecked(&h.phi, |u, p| rho(u) * p.cos());
    Ok(SpinState {
        m1,
        m2,
        m3: h.u.clone(),
    })
}

fn wrap_angle(d: f64) -> f64 {
    let mut w = d.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Continuous phase lift of `m`. The phase at node 0 lies in `(-pi, pi]`;
/// later nodes are unwrapped by minimal increments.
pub fn spin_to_hydro(m: &SpinState, tol: f64) -> Result<HydroState> {
    let (a, b, c) = (m.m1.samples(), m.m2.samples(), m.m3.samples());
    if let Some(node) = c.iter().position(|v| v.abs() > 1.0 - tol) {
        return Err(Error::LiftFailure {
            node,
            value: c[node].abs(),
        });
    }
    let n = a.len();
    let mut phi = Vec::with_capacity(n);
    let mut first = a[0].atan2(b[0]);
    if first <= -PI {
        first = PI;
    }
    phi.push(first);
    let mut prev_raw = first;
    for i in 1..n {
        let raw = a[i].atan2(b[i]);
        let next = phi[i - 1] + wrap_angle(raw - prev_raw);
        phi.push(next);
        prev_raw = raw;
    }
    // Lift across the periodic seam to recover the winding.
    let wrap_raw = m.m1.wrap_value().atan2(m.m2.wrap_value());
    let seam = phi[n - 1] + wrap_angle(wrap_raw - prev_raw);
    let jump = seam - phi[0];
    let grid = *m.grid();
    Ok(HydroState {
        u: m.m3.clone(),
        phi: RealField::raw(grid, phi, jump),
    })
}

fn check_consistent(aniso: Anisotropy, p: ScaledParams) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !(close(aniso.lambda1, p.lambda1()) && close(aniso.lambda3, p.lambda3())) {
        return Err(invalid(format!(
            "anisotropy ({}, {}) does not match sigma*eps = {}, 1/eps = {}",
            aniso.lambda1,
            aniso.lambda3,
            p.lambda1(),
            p.lambda3()
        )));
    }
    Ok(())
}

/// `U_eps(y) = u(y / sqrt(eps)) / eps`, `Phi_eps(y) = phi(y / sqrt(eps))` on
/// the grid of half-length `sqrt(eps) L` with the same number of nodes.
pub fn scale_down(h: &HydroState, aniso: Anisotropy, p: ScaledParams) -> Result<HydroState> {
    scale_down_to(h, aniso, p, h.grid().num_points())
}

/// [`scale_down`] onto a target grid with `num_points` nodes, by
/// trigonometric interpolation.
pub fn scale_down_to(
    h: &HydroState,
    aniso: Anisotropy,
    p: ScaledParams,
    num_points: usize,
) -> Result<HydroState> {
    check_consistent(aniso, p)?;
    let s = p.eps().sqrt();
    let target = Grid1D::new(s * h.grid().half_length(), num_points)?;
    let (u, phi) = resample(h, target, 1.0 / s)?;
    Ok(HydroState {
        u: u.scale(1.0 / p.eps()),
        phi,
    })
}

/// Inverse of [`scale_down`]: `u(x) = eps U(sqrt(eps) x)`, `phi(x) = Phi(sqrt(eps) x)`.
pub fn scale_up(h: &HydroState, p: ScaledParams) -> Result<HydroState> {
    scale_up_to(h, p, h.grid().num_points())
}

pub fn scale_up_to(h: &HydroState, p: ScaledParams, num_points: usize) -> Result<HydroState> {
    let s = p.eps().sqrt();
    if s == 0.0 {
        return Err(invalid("scale_up needs eps > 0"));
    }
    let target = Grid1D::new(h.grid().half_length() / s, num_points)?;
    let (u, phi) = resample(h, target, s)?;
    Ok(HydroState {
        u: u.scale(p.eps()),
        phi,
    })
}

/// Samples `f(stretch * y)` on `target` for both components.
fn resample(h: &HydroState, target: Grid1D, stretch: f64) -> Result<(RealField, RealField)> {
    let same_nodes = target.num_points() == h.grid().num_points();
    let pull = |f: &RealField| -> Result<RealField> {
        if same_nodes {
            // target node n maps exactly onto source node n
            return Ok(RealField::raw(target, f.samples().to_vec(), f.jump()));
        }
        let pts: Vec<f64> = target.nodes().iter().map(|y| stretch * y).collect();
        RealField::quasi_periodic(target, trig_interpolate(f, &pts), f.jump())
    };
    Ok((pull(&h.u)?, pull(&h.phi)?))
}
