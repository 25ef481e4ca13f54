use std::f64::consts::PI;

use anisomag::dynamics::{
    fw_propagate, rhs_hll_eps, rhs_ll_spin, rk4_step, simulate, stable_dt, SimConfig, Snapshot, System,
};
use anisomag::energy::{e_ll_hydro, e_ll_k_spin, e_ll_spin, e_scaled};
use anisomag::regimes::{rate_runs, rate_study, thm1_metrics};
use anisomag::solitons::{
    asymptotics, branch_params, critical_speed, ll_soliton_hydro, ll_soliton_state, scaled_branch_params,
    scaled_soliton, sg_kink, sharpness_constant, Branch, KinkSign,
};
use anisomag::spectral::{l2_norm, Grid1D, RealField};
use anisomag::states::{scale_down, HydroState, SGState, ScaledParams};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn hydro_steps(h0: &HydroState, p: ScaledParams, dt: f64, steps: usize) -> Option<HydroState> {
    let mut h = h0.clone();
    for i in 0..steps {
        h = rk4_step(&h, i as f64 * dt, dt, |s| {
            let t = rhs_hll_eps(s, p)?;
            HydroState::new(t.du, t.dphi)
        })
        .ok()?;
    }
    Some(h)
}

#[test]
fn stable_step_is_stable_and_larger_step_blows_up() {
    let g = Grid1D::new(40.0, 1024).unwrap();
    let p = ScaledParams::new(0.1, 1.0).unwrap();
    let h0 = scaled_soliton(g, 0.5, p).unwrap();
    let e0 = e_scaled(&h0, p).unwrap();
    let dt = stable_dt(&g, p, 1.0);

    let stable = hydro_steps(&h0, p, dt, 100).expect("stable step must not fail");
    assert!(rel(e_scaled(&stable, p).unwrap(), e0) < 1e-6);

    let blown = hydro_steps(&h0, p, 1.5 * dt, 100);
    let grew = match blown {
        None => true,
        Some(h) => e_scaled(&h, p).map_or(true, |e| !e.is_finite() || e > 1e3 * e0),
    };
    assert!(grew, "1.5 times the stable step should blow up within 100 steps");
}

#[test]
fn smooth_data_energy_is_conserved_on_small_grid() {
    let g = Grid1D::new(10.0, 256).unwrap();
    let p = ScaledParams::new(0.2, 1.0).unwrap();
    let u = RealField::from_fn_periodic(g, |x| 0.5 * (-x * x).exp()).unwrap();
    let phi = RealField::from_fn_periodic(g, |x| 0.8 * (-(x - 1.0).powi(2)).exp()).unwrap();
    let tr = simulate(&Snapshot::Hydro(HydroState::new(u, phi).unwrap()), System::HllEps(p), &SimConfig::new(1.0)).unwrap();
    let e: Vec<f64> = tr
        .states
        .iter()
        .map(|s| match s {
            Snapshot::Hydro(h) => e_scaled(h, p).unwrap(),
            _ => unreachable!(),
        })
        .collect();
    assert!(e.iter().all(|v| rel(*v, e[0]) <= 1e-8), "{e:?}");
}

#[test]
fn sine_gordon_tends_to_free_wave_as_sigma_vanishes() {
    let g = Grid1D::new(20.0, 256).unwrap();
    let phi = RealField::from_fn_periodic(g, |x| 0.5 * (-x * x).exp()).unwrap();
    let s0 = SGState::new(phi, RealField::zeros(g)).unwrap();
    let fw = fw_propagate(&s0, 1.0);
    let mut gaps = Vec::new();
    for sigma in [1e-2, 1e-3, 1e-4] {
        let tr = simulate(&Snapshot::Sg(s0.clone()), System::Sgs { sigma }, &SimConfig::new(1.0)).unwrap();
        let Snapshot::Sg(s) = tr.last() else { unreachable!() };
        let d = l2_norm(&s.phi.sub(&fw.phi).unwrap()) + l2_norm(&s.u.sub(&fw.u).unwrap());
        gaps.push(d / sigma);
    }
    // gap / (sigma T) stays bounded and the gap itself decreases
    assert!(gaps.windows(2).all(|w| w[1] <= 1.05 * w[0]), "{gaps:?}");
    assert!(gaps.iter().all(|c| *c < 1.0), "{gaps:?}");
}

#[test]
fn expansions_have_the_stated_orders() {
    let (tau, sigma) = (0.5, 1.0);
    let err = |eps: f64| {
        let p = ScaledParams::new(eps, sigma).unwrap();
        let b = scaled_branch_params(tau, p).unwrap();
        let (a, mu) = asymptotics(tau, sigma, eps);
        ((b.a - a).abs(), (b.mu - mu).abs() / eps.sqrt())
    };
    let (a1, m1) = err(0.1);
    let (a2, m2) = err(0.05);
    let (ra, rm) = (a1 / a2, m1 / m2);
    assert!((32.0..=128.0).contains(&ra), "a ratio {ra}");
    assert!((8.0..=32.0).contains(&rm), "mu ratio {rm}");
}

#[test]
fn static_gap_shrinks_like_eps_squared() {
    let g = Grid1D::new(40.0, 1024).unwrap();
    let samples: Vec<(f64, f64)> = [0.08, 0.04, 0.02]
        .iter()
        .map(|&eps| {
            let p = ScaledParams::new(eps, 1.0).unwrap();
            let h = scaled_soliton(g, 0.5, p).unwrap();
            let k = sg_kink(g, 0.5, 1.0, KinkSign::Plus, 0.0, 0.0).unwrap();
            (eps, thm1_metrics(&h, &k, 4).unwrap().est1)
        })
        .collect();
    let fit = anisomag::regimes::fit_power_law(&samples).unwrap();
    assert!((fit.slope - 2.0).abs() <= 0.1, "{fit:?}");
}

fn u_gap_ratio(eps: f64) -> f64 {
    let g = Grid1D::new(40.0, 2048).unwrap();
    let p = ScaledParams::new(eps, 1.0).unwrap();
    let h = scaled_soliton(g, 0.5, p).unwrap();
    let k = sg_kink(g, 0.5, 1.0, KinkSign::Plus, 0.0, 0.0).unwrap();
    l2_norm(&h.u.sub(&k.u).unwrap()) / (eps * eps)
}

#[test]
fn sharpness_constant_is_the_extrapolated_limit() {
    let (r2, r1) = (u_gap_ratio(0.02), u_gap_ratio(0.01));
    let limit = (4.0 * r1 - r2) / 3.0;
    let c = sharpness_constant(0.5, 1.0).unwrap();
    assert!(rel(limit, c) <= 0.05, "extrapolated {limit}, constant {c}");
}

#[test]
fn sharpness_constant_matches_closed_form() {
    // int (1 + b x tanh x)^2 sech^2 x = 2 + 2b + b^2 (pi^2 + 12) / 18
    for tau in [0.1, 0.5, 0.9] {
        for nu in [0.5f64, 1.0, 3.0] {
            let t2: f64 = tau * tau;
            let q = 2.0 - 2.0 * t2 + t2 * t2;
            let b = -t2 / q;
            let integral = 2.0 + 2.0 * b + b * b * (PI * PI + 12.0) / 18.0;
            let pre = nu.powf(1.25) * tau * q / (2.0 * (1.0 - t2).powf(2.25));
            let exact = pre * integral.sqrt();
            let c = sharpness_constant(tau, nu).unwrap();
            assert!(rel(c, exact) <= 1e-10, "tau {tau} nu {nu}: {c} vs {exact}");
        }
    }
}

#[test]
fn initial_velocity_gap_matches_the_sharp_constant() {
    let g = Grid1D::new(40.0, 1024).unwrap();
    let eps = 0.05;
    let p = ScaledParams::new(eps, 1.0).unwrap();
    let h = scaled_soliton(g, 0.5, p).unwrap();
    let k = sg_kink(g, 0.5, 1.0, KinkSign::Plus, 0.0, 0.0).unwrap();
    let m = thm1_metrics(&h, &k, 4).unwrap();
    let u_part = l2_norm(&h.u.sub(&k.u).unwrap());
    let c = sharpness_constant(0.5, 1.0).unwrap();
    assert!(rel(u_part, c * eps * eps) <= 0.1, "U gap {u_part}, predicted {}", c * eps * eps);
    assert!(m.est1 >= u_part);
    assert!(m.est1 <= 4.0 * c * eps * eps, "est1 {} vs {}", m.est1, c * eps * eps);
}

#[test]
fn rate_study_is_deterministic_and_errors_grow() {
    let g = Grid1D::new(40.0, 1024).unwrap();
    let eps = [0.2, 0.1, 0.05];
    let a = rate_runs(&eps, 0.5, 1.0, 1.0, g, 4).unwrap();
    let b = rate_runs(&eps, 0.5, 1.0, 1.0, g, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        rate_study(&eps, 0.5, 1.0, 1.0, g, 4).unwrap(),
        rate_study(&eps, 0.5, 1.0, 1.0, g, 4).unwrap()
    );
    for run in &a {
        assert_eq!(run.metrics.first().unwrap().time, 0.0);
        assert_eq!(run.final_metrics().time, 1.0);
        let mut peak: f64 = 0.0;
        for m in &run.metrics {
            assert!(m.est1 >= 0.95 * peak, "eps {}: est1 {} after {peak}", run.eps, m.est1);
            peak = peak.max(m.est1);
        }
    }
}

#[test]
fn lower_branch_soliton_energy_is_twice_mu() {
    let (l1, l3) = (0.25, 4.0);
    let c = 0.5 * critical_speed(l1, l3);
    let params = branch_params(c, l1, l3, Branch::Minus).unwrap();
    let g = Grid1D::new(64.0, 1024).unwrap();
    let h = ll_soliton_hydro(g, &params, 0.0).unwrap();
    assert!(rel(e_ll_hydro(&h, l1, l3).unwrap(), 2.0 * params.mu) <= 1e-10);
    let m = ll_soliton_state(g, &params, 0.0).unwrap();
    assert!(rel(e_ll_spin(&m, l1, l3).unwrap(), 2.0 * params.mu) <= 1e-10);
    let plus = branch_params(c, l1, l3, Branch::Plus).unwrap();
    let mp = ll_soliton_state(Grid1D::new(32.0, 1024).unwrap(), &plus, 0.0).unwrap();
    assert!(rel(e_ll_spin(&mp, l1, l3).unwrap(), 2.0 * plus.mu) <= 1e-10);
}

#[test]
fn higher_spin_energy_stays_bounded_along_a_soliton() {
    let (l1, l3) = (0.25, 4.0);
    let params = branch_params(0.0, l1, l3, Branch::Minus).unwrap();
    let g = Grid1D::new(64.0, 512).unwrap();
    let m0 = ll_soliton_state(g, &params, 0.0).unwrap();
    let sys = System::Ll { lambda1: l1, lambda3: l3 };
    let tr = simulate(&Snapshot::Spin(m0), sys, &SimConfig::new(1.0)).unwrap();
    let e: Vec<f64> = tr
        .states
        .iter()
        .map(|s| match s {
            Snapshot::Spin(m) => e_ll_k_spin(m, &rhs_ll_spin(m, l1, l3), 2, l1, l3).unwrap(),
            _ => unreachable!(),
        })
        .collect();
    assert!(e.iter().all(|v| rel(*v, e[0]) <= 1e-6), "{e:?}");
}

#[test]
fn rescaled_lower_branch_soliton_is_the_scaled_soliton() {
    let (eps, tau) = (0.1, 0.5);
    let p = ScaledParams::new(eps, 1.0).unwrap();
    let params = scaled_branch_params(tau, p).unwrap();
    let big = Grid1D::new(40.0 / eps.sqrt(), 1024).unwrap();
    let h = ll_soliton_hydro(big, &params, 0.0).unwrap();
    let down = scale_down(&h, p.anisotropy(), p).unwrap();
    let direct = scaled_soliton(*down.grid(), tau, p).unwrap();
    let gap = |a: &RealField, b: &RealField| {
        a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    assert!(gap(&down.u, &direct.u) <= 1e-10);
    assert!(gap(&down.phi, &direct.phi) <= 1e-10);
}
