//! Periodic grid, Fourier-multiplier calculus and the Sobolev / `d_sin` norms.
//!
//! Fields are sampled on a uniform periodic grid over `[-L, L)`. A field may
//! carry a `jump`: its increment over one period, `f(x + 2L) = f(x) + jump`.
//! Phases of kinks (`pi` winding) and the in-plane spin component of a domain
//! wall (`tanh` profile) are of this kind. Spectral operations act on the
//! periodic part `f - jump * (x + L) / (2L)` and add the linear ramp back
//! analytically, which keeps derivatives spectrally accurate for profiles that
//! are flat near both ends of the box.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Uniform periodic grid on `[-L, L)` with `N` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    half_length: f64,
    num_points: usize,
    spacing: f64,
}

impl Grid1D {
    /// `num_points` must be a power of two and at least 8.
    pub fn new(half_length: f64, num_points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(invalid(format!("half_length must be positive, got {half_length}")));
        }
        if num_points < 8 || !num_points.is_power_of_two() {
            return Err(invalid(format!(
                "num_points must be a power of two >= 8, got {num_points}"
            )));
        }
        Ok(Self {
            half_length,
            num_points,
            spacing: 2.0 * half_length / num_points as f64,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn period(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn node(&self, n: usize) -> f64 {
        -self.half_length + n as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_points).map(|n| self.node(n)).collect()
    }

    /// Signed mode number of FFT slot `j` (slot `N/2` is the Nyquist mode `-N/2`).
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.num_points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Wavenumber `pi * k / L` of FFT slot `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        PI * self.mode(j) as f64 / self.half_length
    }

    /// Wavenumbers in FFT slot order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.wavenumber(j)).collect()
    }

    /// Wavenumbers `xi_j` for `j = -N/2 .. N/2 - 1`, increasing.
    pub fn wavenumbers_centered(&self) -> Vec<f64> {
        let half = self.num_points as i64 / 2;
        (-half..half)
            .map(|j| PI * j as f64 / self.half_length)
            .collect()
    }

    /// Largest resolved wavenumber `pi N / (2L)`.
    pub fn xi_max(&self) -> f64 {
        PI * self.num_points as f64 / (2.0 * self.half_length)
    }

    fn is_nyquist(&self, j: usize) -> bool {
        j == self.num_points / 2
    }
}

/// Real samples on a [`Grid1D`], optionally with a period increment (`jump`).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid1D,
    samples: Vec<f64>,
    jump: f64,
}

impl RealField {
    pub fn new(grid: Grid1D, samples: Vec<f64>) -> Result<Self> {
        Self::quasi_periodic(grid, samples, 0.0)
    }

    /// Field with `f(x + 2L) = f(x) + jump`.
    pub fn quasi_periodic(grid: Grid1D, samples: Vec<f64>, jump: f64) -> Result<Self> {
        if samples.len() != grid.num_points {
            return Err(invalid(format!(
                "expected {} samples, got {}",
                grid.num_points,
                samples.len()
            )));
        }
        if let Some(n) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite sample at node {n}")));
        }
        if !jump.is_finite() {
            return Err(invalid("non-finite jump"));
        }
        Ok(Self {
            grid,
            samples,
            jump,
        })
    }

    pub(crate) fn raw(grid: Grid1D, samples: Vec<f64>, jump: f64) -> Self {
        debug_assert_eq!(samples.len(), grid.num_points);
        Self {
            grid,
            samples,
            jump,
        }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self::raw(grid, vec![0.0; grid.num_points], 0.0)
    }

    pub fn constant(grid: Grid1D, value: f64) -> Self {
        Self::raw(grid, vec![value; grid.num_points], 0.0)
    }

    /// Samples `f` at the nodes. The jump is taken as `f(L) - f(-L)`, which is
    /// exact for periodic functions and for profiles flat near both ends.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = grid.nodes().into_iter().map(&f).collect();
        let jump = f(grid.half_length) - f(-grid.half_length);
        Self::quasi_periodic(grid, samples, jump)
    }

    /// Samples `f` at the nodes as a periodic field.
    pub fn from_fn_periodic(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn jump(&self) -> f64 {
        self.jump
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.jump.is_finite() && self.samples.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the sample with the largest magnitude.
    pub fn argmax_abs(&self) -> (usize, f64) {
        self.samples
            .iter()
            .enumerate()
            .fold((0, 0.0), |(i, m), (j, v)| if v.abs() > m { (j, v.abs()) } else { (i, m) })
    }

    /// Value the periodic continuation takes at `x = L`.
    pub fn wrap_value(&self) -> f64 {
        self.samples[0] + self.jump
    }

    fn ramp(&self, x: f64) -> f64 {
        self.jump * (x + self.grid.half_length) / self.grid.period()
    }

    /// Samples with the linear ramp removed.
    pub fn periodic_part(&self) -> Vec<f64> {
        if self.jump == 0.0 {
            return self.samples.clone();
        }
        self.samples
            .iter()
            .enumerate()
            .map(|(n, v)| v - self.ramp(self.grid.node(n)))
            .collect()
    }

    /// Replaces the jump by `f_{N-1} - f_0` when both ends of the box are flat,
    /// by zero otherwise.
    pub fn with_inferred_jump(mut self) -> Self {
        let s = &self.samples;
        let n = s.len();
        let scale = self.max_abs().max(1.0);
        let flat = (s[1] - s[0]).abs() <= 1e-9 * scale && (s[n - 1] - s[n - 2]).abs() <= 1e-9 * scale;
        self.jump = if flat { s[n - 1] - s[0] } else { 0.0 };
        self
    }

    /// Sets the jump to the multiple of `pi` nearest to `f_{N-1} - f_0`.
    pub fn with_phase_jump(mut self) -> Self {
        let n = self.samples.len();
        let d = self.samples[n - 1] - self.samples[0];
        self.jump = PI * (d / PI).round();
        self
    }

    pub fn check_same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise image `g(f)`; the new jump is `g(f_0 + jump) - g(f_0)`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> RealField {
        let samples: Vec<f64> = self.samples.iter().map(|&v| g(v)).collect();
        let s0 = self.samples[0];
        let jump = if self.jump == 0.0 {
            0.0
        } else {
            g(s0 + self.jump) - g(s0)
        };
        RealField::raw(self.grid, samples, jump)
    }

    /// Pointwise `g(f, h)` on a shared grid.
    pub fn zip_map(&self, other: &RealField, g: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        self.check_same_grid(other)?;
        Ok(self.zip_map_unchecked(other, g))
    }

    pub(crate) fn zip_map_unchecked(&self, other: &RealField, g: impl Fn(f64, f64) -> f64) -> RealField {
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| g(a, b))
            .collect();
        let jump = if self.jump == 0.0 && other.jump == 0.0 {
            0.0
        } else {
            let (a0, b0) = (self.samples[0], other.samples[0]);
            g(a0 + self.jump, b0 + other.jump) - g(a0, b0)
        };
        RealField::raw(self.grid, samples, jump)
    }

    pub fn scale(&self, a: f64) -> RealField {
        RealField::raw(
            self.grid,
            self.samples.iter().map(|v| a * v).collect(),
            a * self.jump,
        )
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &RealField) -> Result<RealField> {
        self.check_same_grid(other)?;
        Ok(self.axpy_unchecked(a, other))
    }

    pub(crate) fn axpy_unchecked(&self, a: f64, other: &RealField) -> RealField {
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| x + a * y)
            .collect();
        RealField::raw(self.grid, samples, self.jump + a * other.jump)
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.axpy(-1.0, other)
    }

    /// Same samples with the jump replaced.
    pub(crate) fn with_jump(mut self, jump: f64) -> Self {
        self.jump = jump;
        self
    }

    /// Sum of scaled fields sharing one grid; used by the time steppers.
    pub(crate) fn lincomb(terms: &[(f64, &RealField)]) -> RealField {
        let (a0, f0) = terms[0];
        let mut out = f0.scale(a0);
        for &(a, f) in &terms[1..] {
            for (o, v) in out.samples.iter_mut().zip(&f.samples) {
                *o += a * v;
            }
            out.jump += a * f.jump;
        }
        out
    }
}

/// Discrete Fourier coefficients of the periodic part, FFT slot order.
pub fn spectrum(f: &RealField) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = f
        .periodic_part()
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    plan(buf.len(), false).process(&mut buf);
    buf
}

/// Inverse of [`spectrum`]; the imaginary residue is dropped and the ramp for
/// `jump` is added back.
pub fn from_spectrum(grid: Grid1D, mut coeffs: Vec<Complex64>, jump: f64) -> RealField {
    let n = grid.num_points;
    plan(n, true).process(&mut coeffs);
    let inv = 1.0 / n as f64;
    let samples = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c.re * inv + jump * (grid.node(i) + grid.half_length) / grid.period())
        .collect();
    RealField::raw(grid, samples, jump)
}

fn apply_multiplier(f: &RealField, jump: f64, m: impl Fn(usize, f64) -> Complex64) -> RealField {
    let grid = *f.grid();
    let mut c = spectrum(f);
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= m(j, grid.wavenumber(j));
    }
    from_spectrum(grid, c, jump)
}

/// Spectral derivative of the given order. Odd orders zero the Nyquist mode.
pub fn derivative(f: &RealField, order: u32) -> Result<RealField> {
    if order < 1 {
        return Err(invalid("derivative order must be >= 1"));
    }
    Ok(derivative_unchecked(f, order))
}

pub(crate) fn derivative_unchecked(f: &RealField, order: u32) -> RealField {
    let grid = *f.grid();
    let odd = order % 2 == 1;
    let mut d = apply_multiplier(f, 0.0, |j, xi| {
        if odd && grid.is_nyquist(j) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi).powu(order)
        }
    });
    if order == 1 && f.jump() != 0.0 {
        let slope = f.jump() / grid.period();
        d.samples.iter_mut().for_each(|v| *v += slope);
    }
    d
}

/// Two-thirds rule: removes modes with `|k| > N/3` from the periodic part.
pub fn dealias(f: &RealField) -> RealField {
    let grid = *f.grid();
    let cutoff = grid.num_points as i64 / 3;
    apply_multiplier(f, f.jump(), |j, _| {
        if grid.mode(j).abs() > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// `(dx * sum f_n^2)^(1/2)`.
pub fn l2_norm(f: &RealField) -> f64 {
    (f.grid().spacing() * f.samples().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `dx / N * sum |F_j|^2`, the Fourier side of Parseval.
pub fn parseval_sum(f: &RealField) -> f64 {
    let g = f.grid();
    let s: f64 = spectrum(f).iter().map(|c| c.norm_sqr()).sum();
    g.spacing() / g.num_points() as f64 * s
}

/// Discrete `H^k` (or homogeneous `H^k-dot`) norm.
///
/// Periodic fields use the Parseval sum with multiplier `(1 + xi^2)^k`
/// (`xi^(2k)` when homogeneous), normalised so that `k = 0` gives
/// [`l2_norm`]. A nonzero jump contributes through the constant slope of the
/// first derivative.
pub fn sobolev_norm(f: &RealField, k: u32, homogeneous: bool) -> f64 {
    sobolev_sq(f, k as i32, homogeneous).sqrt()
}

/// Sobolev norm with a signed exponent. Negative exponents are only defined
/// for periodic fields and for the inhomogeneous norm.
pub fn sobolev_norm_signed(f: &RealField, s: i32, homogeneous: bool) -> Result<f64> {
    if s < 0 && (homogeneous || f.jump() != 0.0) {
        return Err(invalid(
            "negative Sobolev exponent needs a periodic field and the inhomogeneous norm",
        ));
    }
    Ok(sobolev_sq(f, s, homogeneous).sqrt())
}

fn sobolev_sq(f: &RealField, s: i32, homogeneous: bool) -> f64 {
    let g = f.grid();
    if s == 0 {
        let n = l2_norm(f);
        return n * n;
    }
    let w = g.spacing() / g.num_points() as f64;
    let c = spectrum(f);
    let slope_sq = (f.jump() / g.period()).powi(2) * g.period();
    if homogeneous {
        let body: f64 = c
            .iter()
            .enumerate()
            .map(|(j, cj)| g.wavenumber(j).powi(2 * s) * cj.norm_sqr())
            .sum();
        let ramp = if s == 1 { slope_sq } else { 0.0 };
        w * body + ramp
    } else if s > 0 {
        // |f|^2 from the samples plus sum_{j>=1} C(s,j) |d^j f|^2.
        let l2 = l2_norm(f);
        let body: f64 = c
            .iter()
            .enumerate()
            .map(|(j, cj)| ((1.0 + g.wavenumber(j).powi(2)).powi(s) - 1.0) * cj.norm_sqr())
            .sum();
        l2 * l2 + w * body + s as f64 * slope_sq
    } else {
        let body: f64 = c
            .iter()
            .enumerate()
            .map(|(j, cj)| (1.0 + g.wavenumber(j).powi(2)).powi(s) * cj.norm_sqr())
            .sum();
        w * body
    }
}

/// `d_sin^k(phi1, phi2) = (|sin(phi1 - phi2)|^2 + |d/dx (phi1 - phi2)|_{H^{k-1}}^2)^(1/2)`.
pub fn dsin_distance(phi1: &RealField, phi2: &RealField, k: u32) -> Result<f64> {
    if k < 1 {
        return Err(invalid("d_sin order must be >= 1"));
    }
    let diff = phi1.sub(phi2)?;
    Ok(hsin_seminorm_sq(&diff, k).sqrt())
}

fn hsin_seminorm_sq(diff: &RealField, k: u32) -> f64 {
    let s = l2_norm(&diff.map(f64::sin));
    let d = sobolev_norm(&derivative_unchecked(diff, 1), k - 1, false);
    s * s + d * d
}

/// Cutoff profile of the low/high split: 1 on `|xi| <= 1`, 0 on `|xi| >= 2`,
/// raised cosine in between.
pub fn cutoff_profile(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        (0.5 * PI * (a - 1.0)).cos().powi(2)
    }
}

/// Low/high frequency split of a phase.
#[derive(Debug, Clone)]
pub struct HsinSplit {
    /// Smooth part; carries the whole jump of the input.
    pub low: RealField,
    /// Periodic part supported on `|xi| >= 1`.
    pub high: RealField,
}

/// Splits `phi = low + high` with `high` controlled in `H^k` by
/// `sqrt(2) |phi'|_{H^{k-1}}`.
pub fn hsin_decompose(phi: &RealField, k: u32) -> Result<HsinSplit> {
    if k < 1 {
        return Err(invalid("decomposition order must be >= 1"));
    }
    let low = apply_multiplier(phi, phi.jump(), |_, xi| Complex64::new(cutoff_profile(xi), 0.0));
    let high = apply_multiplier(phi, 0.0, |_, xi| Complex64::new(1.0 - cutoff_profile(xi), 0.0));
    Ok(HsinSplit { low, high })
}

/// Evaluates the trigonometric interpolant (plus ramp) at arbitrary points.
pub fn trig_interpolate(f: &RealField, points: &[f64]) -> Vec<f64> {
    let g = *f.grid();
    let n = g.num_points;
    let c = spectrum(f);
    let inv = 1.0 / n as f64;
    points
        .iter()
        .map(|&y| {
            let s = y + g.half_length;
            let mut acc = c[0].re;
            for (j, cj) in c.iter().enumerate().skip(1) {
                let xi = g.wavenumber(j);
                if g.is_nyquist(j) {
                    acc += cj.re * (xi * s).cos();
                } else {
                    let (sn, cs) = (xi * s).sin_cos();
                    acc += cj.re * cs - cj.im * sn;
                }
            }
            acc * inv + f.jump() * s / g.period()
        })
        .collect()
}

/// Fraction of spectral power in the top octave `|k| > N/4`.
pub fn top_octave_fraction(f: &RealField) -> f64 {
    let g = f.grid();
    let c = spectrum(f);
    let q = g.num_points() as i64 / 4;
    let (mut top, mut all) = (0.0, 0.0);
    for (j, cj) in c.iter().enumerate() {
        let p = cj.norm_sqr();
        all += p;
        if g.mode(j).abs() > q {
            top += p;
        }
    }
    if all == 0.0 {
        0.0
    } else {
        top / all
    }
}
