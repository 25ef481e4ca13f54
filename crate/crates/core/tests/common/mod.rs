#![allow(dead_code)]

use std::f64::consts::PI;

use anisomag::spectral::{Grid1D, RealField};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random trigonometric polynomial with modes `1..=max_mode` and a mean,
/// scaled so that its sup norm is at most `amp`.
pub fn band_limited(rng: &mut StdRng, grid: Grid1D, max_mode: usize, amp: f64) -> RealField {
    let l = grid.half_length();
    let mut terms: Vec<(f64, f64, f64)> = (1..=max_mode)
        .map(|j| (j as f64 * PI / l, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mean: f64 = rng.gen_range(-1.0..1.0);
    let bound = mean.abs() + terms.iter().map(|t| t.1.abs() + t.2.abs()).sum::<f64>();
    let s = amp / bound;
    for t in &mut terms {
        t.1 *= s;
        t.2 *= s;
    }
    let mean = mean * s;
    RealField::from_fn_periodic(grid, |x| {
        mean + terms.iter().map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin()).sum::<f64>()
    })
    .unwrap()
}

pub fn max_abs_diff(a: &RealField, b: &RealField) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
