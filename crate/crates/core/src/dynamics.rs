//! Right-hand sides of the evolution systems, the residual split of the
//! rescaled system, classical RK4 and the exact free-wave propagator.
//!
//! Hydrodynamic right-hand sides are evaluated as an exact linear part plus a
//! nonlinear remainder filtered by the two-thirds rule. The spin right-hand
//! side is left unfiltered so that `<m, dm/dt> = 0` holds pointwise.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::{dealias, derivative_unchecked, from_spectrum, spectrum, Grid1D, RealField};
use crate::states::{HydroState, SGState, ScaledParams, SpinState};

/// Runs abort once `eps |U|` (or `|u|`) reaches `1 - ABORT_MARGIN`.
pub const ABORT_MARGIN: f64 = 1e-6;

/// Extent of the RK4 stability region along the imaginary axis (rounded down).
pub const RK4_IMAGINARY_BOUND: f64 = 2.8;

/// Time derivatives of the two unknowns of a hydrodynamic or Sine-Gordon pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub du: RealField,
    pub dphi: RealField,
}

fn d1(f: &RealField) -> RealField {
    derivative_unchecked(f, 1)
}

fn d2(f: &RealField) -> RealField {
    derivative_unchecked(f, 2)
}

/// Coefficients shared by the unscaled and rescaled hydrodynamic systems.
struct HydroCoeffs {
    /// `eps^2`, or 1 for the unscaled system.
    e2: f64,
    /// `sigma`, or `lambda1`.
    aniso: f64,
    /// Coefficient of the linear `u` term in the phase equation.
    lin: f64,
}

fn hydro_rhs(h: &HydroState, c: HydroCoeffs) -> Tendency {
    let grid = *h.grid();
    let (u, phi) = (&h.u, &h.phi);
    let (du1, dp1, du2, dp2) = (d1(u), d1(phi), d2(u), d2(phi));
    let (us, ps, dus, dps) = (u.samples(), phi.samples(), du1.samples(), dp1.samples());
    let n = us.len();
    let e2 = c.e2;
    let rho2: Vec<f64> = us.iter().map(|v| 1.0 - e2 * v * v).collect();

    let flux = RealField::raw(grid, (0..n).map(|i| us[i] * us[i] * dps[i]).collect(), 0.0);
    let g = RealField::raw(
        grid,
        (0..n).map(|i| e2 * us[i] * us[i] * dus[i] / rho2[i]).collect(),
        0.0,
    );
    let (dflux, dg) = (d1(&flux), d1(&g));

    let nl_u: Vec<f64> = (0..n)
        .map(|i| -e2 * dflux.samples()[i] - 0.5 * c.aniso * rho2[i] * (2.0 * ps[i]).sin())
        .collect();
    let nl_phi: Vec<f64> = (0..n)
        .map(|i| {
            let s = ps[i].sin();
            -e2 * dg.samples()[i] + e2 * e2 * us[i] * dus[i] * dus[i] / (rho2[i] * rho2[i])
                - e2 * us[i] * dps[i] * dps[i]
                - e2 * c.aniso * us[i] * s * s
        })
        .collect();
    let nl_u = dealias(&RealField::raw(grid, nl_u, 0.0));
    let nl_phi = dealias(&RealField::raw(grid, nl_phi, 0.0));

    let du = RealField::lincomb(&[(1.0, &dp2.with_jump(0.0)), (1.0, &nl_u)]);
    let dphi = RealField::lincomb(&[(c.lin, &u.clone().with_jump(0.0)), (-e2, &du2), (1.0, &nl_phi)]);
    Tendency {
        du: du.with_jump(0.0),
        dphi: dphi.with_jump(0.0),
    }
}

/// Hydrodynamic Landau-Lifshitz system:
/// `u_t = ((1-u^2) phi')' - (l1/2)(1-u^2) sin 2phi`,
/// `phi_t = -(u'/(1-u^2))' + u u'^2/(1-u^2)^2 - u phi'^2 + u (l3 - l1 sin^2 phi)`.
pub fn rhs_hll(h: &HydroState, lambda1: f64, lambda3: f64) -> Result<Tendency> {
    h.check_nonvanishing(1.0)?;
    Ok(hydro_rhs(
        h,
        HydroCoeffs {
            e2: 1.0,
            aniso: lambda1,
            lin: lambda3,
        },
    ))
}

/// Rescaled system:
/// `U_t = ((1-e^2 U^2) Phi')' - (sigma/2)(1-e^2 U^2) sin 2Phi`,
/// `Phi_t = U (1 - e^2 sigma sin^2 Phi) - e^2 (U'/(1-e^2 U^2))'
///          + e^4 U U'^2/(1-e^2 U^2)^2 - e^2 U Phi'^2`.
pub fn rhs_hll_eps(h: &HydroState, p: ScaledParams) -> Result<Tendency> {
    h.check_nonvanishing(p.eps())?;
    Ok(hydro_rhs(
        h,
        HydroCoeffs {
            e2: p.eps() * p.eps(),
            aniso: p.sigma(),
            lin: 1.0,
        },
    ))
}

/// Sine-Gordon system `U_t = Phi'' - (sigma/2) sin 2Phi`, `Phi_t = U`.
pub fn rhs_sgs(s: &SGState, sigma: f64) -> Tendency {
    let grid = *s.grid();
    let force = RealField::raw(
        grid,
        s.phi.samples().iter().map(|p| -0.5 * sigma * (2.0 * p).sin()).collect(),
        0.0,
    );
    let du = RealField::lincomb(&[(1.0, &d2(&s.phi)), (1.0, &dealias(&force))]);
    Tendency {
        du: du.with_jump(0.0),
        dphi: s.u.clone().with_jump(0.0),
    }
}

/// `dm/dt = -m x (m'' - l1 m1 e1 - l3 m3 e3)`.
pub fn rhs_ll_spin(m: &SpinState, lambda1: f64, lambda3: f64) -> SpinState {
    let grid = *m.grid();
    let (a, b, c) = (m.m1.samples(), m.m2.samples(), m.m3.samples());
    let (a2, b2, c2) = (d2(&m.m1), d2(&m.m2), d2(&m.m3));
    let n = a.len();
    let h1: Vec<f64> = (0..n).map(|i| a2.samples()[i] - lambda1 * a[i]).collect();
    let h2 = b2.samples();
    let h3: Vec<f64> = (0..n).map(|i| c2.samples()[i] - lambda3 * c[i]).collect();
    let f = |v: Vec<f64>| RealField::raw(grid, v, 0.0);
    SpinState {
        m1: f((0..n).map(|i| -(b[i] * h3[i] - c[i] * h2[i])).collect()),
        m2: f((0..n).map(|i| -(c[i] * h1[i] - a[i] * h3[i])).collect()),
        m3: f((0..n).map(|i| -(a[i] * h2[i] - b[i] * h1[i])).collect()),
    }
}

/// `R^U = -(U^2 Phi')' + sigma U^2 sin Phi cos Phi`.
pub fn residual_u(h: &HydroState, p: ScaledParams) -> Result<RealField> {
    h.check_nonvanishing(p.eps())?;
    let grid = *h.grid();
    let dp = d1(&h.phi);
    let (u, phi) = (h.u.samples(), h.phi.samples());
    let flux = RealField::raw(grid, (0..u.len()).map(|i| u[i] * u[i] * dp.samples()[i]).collect(), 0.0);
    let dflux = d1(&flux);
    let out = (0..u.len())
        .map(|i| -dflux.samples()[i] + p.sigma() * u[i] * u[i] * phi[i].sin() * phi[i].cos())
        .collect();
    Ok(RealField::raw(grid, out, 0.0))
}

/// `R^Phi = -sigma U sin^2 Phi - (U'/(1-e^2 U^2))' + e^2 U U'^2/(1-e^2 U^2)^2 - U Phi'^2`.
pub fn residual_phi(h: &HydroState, p: ScaledParams) -> Result<RealField> {
    h.check_nonvanishing(p.eps())?;
    let grid = *h.grid();
    let e2 = p.eps() * p.eps();
    let (du, dp) = (d1(&h.u), d1(&h.phi));
    let (u, phi, dus, dps) = (h.u.samples(), h.phi.samples(), du.samples(), dp.samples());
    let n = u.len();
    let rho2: Vec<f64> = u.iter().map(|v| 1.0 - e2 * v * v).collect();
    let q = RealField::raw(grid, (0..n).map(|i| dus[i] / rho2[i]).collect(), 0.0);
    let dq = d1(&q);
    let out = (0..n)
        .map(|i| {
            let s = phi[i].sin();
            -p.sigma() * u[i] * s * s - dq.samples()[i] + e2 * u[i] * dus[i] * dus[i] / (rho2[i] * rho2[i])
                - u[i] * dps[i] * dps[i]
        })
        .collect();
    Ok(RealField::raw(grid, out, 0.0))
}

/// `cfl * 2.8 / omega_max` with `omega_max = xi_max (1 + eps^2 xi_max^2)^(1/2)`.
pub fn stable_dt(grid: &Grid1D, p: ScaledParams, cfl: f64) -> f64 {
    let xi = grid.xi_max();
    let e = p.eps();
    cfl * RK4_IMAGINARY_BOUND / (xi * (1.0 + e * e * xi * xi).sqrt())
}

/// Time step for the unscaled systems, from `omega^2 = (xi^2 + l1)(xi^2 + l3)`.
pub fn stable_dt_anisotropic(grid: &Grid1D, lambda1: f64, lambda3: f64, cfl: f64) -> f64 {
    let x2 = grid.xi_max().powi(2);
    cfl * RK4_IMAGINARY_BOUND / ((x2 + lambda1) * (x2 + lambda3)).sqrt()
}

/// States that can be advanced by a Runge-Kutta method.
pub trait OdeState: Sized {
    fn lincomb(terms: &[(f64, &Self)]) -> Self;
    fn all_finite(&self) -> bool;
}

impl OdeState for f64 {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(a, y)| a * **y).sum()
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

fn field_comb<S>(terms: &[(f64, &S)], pick: impl Fn(&S) -> &RealField) -> RealField {
    let parts: Vec<(f64, &RealField)> = terms.iter().map(|&(a, s)| (a, pick(s))).collect();
    RealField::lincomb(&parts)
}

impl OdeState for HydroState {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        HydroState {
            u: field_comb(terms, |s| &s.u),
            phi: field_comb(terms, |s| &s.phi),
        }
    }

    fn all_finite(&self) -> bool {
        self.u.is_finite() && self.phi.is_finite()
    }
}

impl OdeState for SGState {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        SGState {
            phi: field_comb(terms, |s| &s.phi),
            u: field_comb(terms, |s| &s.u),
        }
    }

    fn all_finite(&self) -> bool {
        self.u.is_finite() && self.phi.is_finite()
    }
}

impl OdeState for SpinState {
    fn lincomb(terms: &[(f64, &Self)]) -> Self {
        SpinState {
            m1: field_comb(terms, |s| &s.m1),
            m2: field_comb(terms, |s| &s.m2),
            m3: field_comb(terms, |s| &s.m3),
        }
    }

    fn all_finite(&self) -> bool {
        self.components().iter().all(|f| f.is_finite())
    }
}

/// One classical RK4 step of size `dt` from time `t`.
pub fn rk4_step<S: OdeState>(y: &S, t: f64, dt: f64, mut rhs: impl FnMut(&S) -> Result<S>) -> Result<S> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let mut stage = |s: &S| -> Result<S> {
        let k = rhs(s)?;
        if k.all_finite() {
            Ok(k)
        } else {
            Err(Error::StepFailure { time: t })
        }
    };
    let k1 = stage(y)?;
    let k2 = stage(&S::lincomb(&[(1.0, y), (0.5 * dt, &k1)]))?;
    let k3 = stage(&S::lincomb(&[(1.0, y), (0.5 * dt, &k2)]))?;
    let k4 = stage(&S::lincomb(&[(1.0, y), (dt, &k3)]))?;
    let out = S::lincomb(&[
        (1.0, y),
        (dt / 6.0, &k1),
        (dt / 3.0, &k2),
        (dt / 3.0, &k3),
        (dt / 6.0, &k4),
    ]);
    if out.all_finite() {
        Ok(out)
    } else {
        Err(Error::StepFailure { time: t + dt })
    }
}

/// Exact solution of `U_t = Phi''`, `Phi_t = U` by Fourier multipliers.
/// The linear ramp of a quasi-periodic phase is stationary and carried along.
pub fn fw_propagate(s: &SGState, t: f64) -> SGState {
    let grid = *s.grid();
    let cp = spectrum(&s.phi);
    let cu = spectrum(&s.u);
    let mut np = Vec::with_capacity(cp.len());
    let mut nu = Vec::with_capacity(cp.len());
    for j in 0..cp.len() {
        let xi = grid.wavenumber(j).abs();
        let (c, sn) = ((t * xi).cos(), (t * xi).sin());
        let sinc = if xi == 0.0 { t } else { sn / xi };
        np.push(cp[j] * c + cu[j] * sinc);
        nu.push(cp[j] * (-xi * sn) + cu[j] * c);
    }
    SGState {
        phi: from_spectrum(grid, np, s.phi.jump()),
        u: from_spectrum(grid, nu, s.u.jump()),
    }
}

/// Evolution system with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase")]
pub enum System {
    Hll { lambda1: f64, lambda3: f64 },
    HllEps(ScaledParams),
    Sgs { sigma: f64 },
    Ll { lambda1: f64, lambda3: f64 },
    Fw,
}

impl System {
    pub fn name(&self) -> &'static str {
        match self {
            System::Hll { .. } => "hll",
            System::HllEps(_) => "hlleps",
            System::Sgs { .. } => "sgs",
            System::Ll { .. } => "ll",
            System::Fw => "fw",
        }
    }
}

/// One observed state.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Hydro(HydroState),
    Sg(SGState),
    Spin(SpinState),
}

impl Snapshot {
    pub fn grid(&self) -> &Grid1D {
        match self {
            Snapshot::Hydro(h) => h.grid(),
            Snapshot::Sg(s) => s.grid(),
            Snapshot::Spin(m) => m.grid(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Snapshot::Hydro(_) => "hydro",
            Snapshot::Sg(_) => "sg",
            Snapshot::Spin(_) => "spin",
        }
    }
}

/// Run settings for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_final: f64,
    pub cfl: f64,
    pub observe_every: usize,
    /// Optional cap on the step chosen from the stability bound.
    pub dt_max: Option<f64>,
    /// Renormalize spins after every step.
    pub project: bool,
}

impl SimConfig {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            cfl: 0.5,
            observe_every: 16,
            dt_max: None,
            project: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid(format!("final time must be positive, got {}", self.t_final)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if self.observe_every == 0 {
            return Err(invalid("observe_every must be >= 1"));
        }
        if let Some(d) = self.dt_max {
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid(format!("dt_max must be positive, got {d}")));
            }
        }
        Ok(())
    }
}

/// Run parameters recorded alongside the snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    #[serde(flatten)]
    pub system: System,
    pub grid: Grid1D,
    pub dt: f64,
    pub scheme: String,
    pub cfl: f64,
    pub t_final: f64,
    pub observe_every: usize,
    pub project: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Snapshot>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.states.last().expect("trajectories hold the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectories hold the initial time")
    }
}

fn abort(time: f64, reason: String, times: Vec<f64>, states: Vec<Snapshot>, mut meta: TrajectoryMeta, steps: usize) -> Error {
    meta.steps = steps;
    Error::Aborted {
        time,
        reason,
        partial: Box::new(Trajectory { times, states, meta }),
    }
}

/// Fixed-step integration loop shared by all systems.
fn integrate<S: Clone>(
    y0: S,
    wrap: impl Fn(S) -> Snapshot,
    mut step: impl FnMut(&S, f64, f64) -> Result<S>,
    guard: impl Fn(&S) -> Option<String>,
    cfg: &SimConfig,
    mut meta: TrajectoryMeta,
) -> Result<Trajectory> {
    let t_final = cfg.t_final;
    let dt = meta.dt;
    let mut times = vec![0.0];
    let mut states = vec![wrap(y0.clone())];
    let mut y = y0;
    let mut t = 0.0;
    let mut steps = 0usize;
    loop {
        let remaining = t_final - t;
        let last = remaining <= dt * (1.0 + 1e-12);
        let h = if last { remaining } else { dt };
        y = match step(&y, t, h) {
            Ok(next) => next,
            Err(e @ (Error::DomainViolation { .. } | Error::StepFailure { .. })) => {
                return Err(abort(t, e.to_string(), times, states, meta, steps));
            }
            Err(e) => return Err(e),
        };
        t = if last { t_final } else { t + h };
        steps += 1;
        if let Some(reason) = guard(&y) {
            times.push(t);
            states.push(wrap(y));
            return Err(abort(t, reason, times, states, meta, steps));
        }
        if last || steps.is_multiple_of(cfg.observe_every) {
            times.push(t);
            states.push(wrap(y.clone()));
        }
        if last {
            break;
        }
    }
    meta.steps = steps;
    Ok(Trajectory { times, states, meta })
}

fn saturation_guard(u: &RealField, scale: f64) -> Option<String> {
    let (node, m) = u.argmax_abs();
    let v = scale * m;
    (v >= 1.0 - ABORT_MARGIN).then(|| format!("saturation {v} at node {node} reached the abort threshold"))
}

/// Method-of-lines integration of `system` from `initial` to `cfg.t_final`
/// with RK4 (exact propagation for the free wave). The step is the stability
/// bound capped by `dt_max`; the last step is shortened to land on the final
/// time. Snapshots are kept every `observe_every` steps and at the end.
pub fn simulate(initial: &Snapshot, system: System, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = *initial.grid();
    let dt_bound = match system {
        System::HllEps(p) => stable_dt(&grid, p, cfg.cfl),
        System::Sgs { sigma } => stable_dt(&grid, ScaledParams::sine_gordon_limit(sigma.max(0.0))?, cfg.cfl),
        System::Fw => stable_dt(&grid, ScaledParams::sine_gordon_limit(0.0)?, cfg.cfl),
        System::Hll { lambda1, lambda3 } | System::Ll { lambda1, lambda3 } => {
            stable_dt_anisotropic(&grid, lambda1, lambda3, cfg.cfl)
        }
    };
    let dt = cfg.dt_max.map_or(dt_bound, |m| dt_bound.min(m));
    let meta = TrajectoryMeta {
        system,
        grid,
        dt,
        scheme: if system == System::Fw { "exact-multiplier" } else { "rk4" }.to_string(),
        cfl: cfg.cfl,
        t_final: cfg.t_final,
        observe_every: cfg.observe_every,
        project: cfg.project,
        steps: 0,
    };
    let mismatch = || invalid(format!("{} initial data does not fit system {}", initial.kind(), system.name()));
    match (system, initial) {
        (System::HllEps(p), Snapshot::Hydro(h)) => {
            h.check_nonvanishing(p.eps())?;
            integrate(
                h.clone(),
                Snapshot::Hydro,
                |y, t, dt| {
                    rk4_step(y, t, dt, |s: &HydroState| {
                        let k = rhs_hll_eps(s, p)?;
                        Ok(HydroState { u: k.du, phi: k.dphi })
                    })
                },
                |y| saturation_guard(&y.u, p.eps()),
                cfg,
                meta,
            )
        }
        (System::Hll { lambda1, lambda3 }, Snapshot::Hydro(h)) => {
            h.check_nonvanishing(1.0)?;
            integrate(
                h.clone(),
                Snapshot::Hydro,
                |y, t, dt| {
                    rk4_step(y, t, dt, |s: &HydroState| {
                        let k = rhs_hll(s, lambda1, lambda3)?;
                        Ok(HydroState { u: k.du, phi: k.dphi })
                    })
                },
                |y| saturation_guard(&y.u, 1.0),
                cfg,
                meta,
            )
        }
        (System::Sgs { sigma }, Snapshot::Sg(s)) => integrate(
            s.clone(),
            Snapshot::Sg,
            |y, t, dt| {
                rk4_step(y, t, dt, |s: &SGState| {
                    let k = rhs_sgs(s, sigma);
                    Ok(SGState { phi: k.dphi, u: k.du })
                })
            },
            |_| None,
            cfg,
            meta,
        ),
        (System::Fw, Snapshot::Sg(s)) => integrate(s.clone(), Snapshot::Sg, |y, _, dt| Ok(fw_propagate(y, dt)), |_| None, cfg, meta),
        (System::Ll { lambda1, lambda3 }, Snapshot::Spin(m)) => {
            let project = cfg.project;
            integrate(
                m.clone(),
                Snapshot::Spin,
                |y, t, dt| {
                    let next = rk4_step(y, t, dt, |s: &SpinState| Ok(rhs_ll_spin(s, lambda1, lambda3)))?;
                    Ok(if project { next.normalized() } else { next })
                },
                |_| None,
                cfg,
                meta,
            )
        }
        _ => Err(mismatch()),
    }
}
