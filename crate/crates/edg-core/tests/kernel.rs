use edg_core::bessel::{bessel_i, bessel_i_scaled, h, seam_mismatch};
use edg_core::kernel::*;
use edg_core::profiles::profile_tail;
use edg_core::quad::QuadGrid;
use proptest::prelude::*;

#[test]
fn bessel_closed_form_and_origin() {
    let want = (2.0 / std::f64::consts::PI).sqrt() * 1f64.cosh();
    assert!((bessel_i(-0.5, 1.0).unwrap() - want).abs() < 1e-12 * want);
    assert!((want - 1.2313).abs() < 1e-4);
    assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
    assert_eq!(bessel_i(0.7, 0.0).unwrap(), 0.0);
}

#[test]
fn bessel_recurrence_residual() {
    for &nu in &[0.5, 0.75, 1.0, 2.5, 10.0, 33.3] {
        for &z in &[0.3, 2.0, 11.0, 39.0, 41.0, 75.0, 300.0, 690.0] {
            let a = bessel_i_scaled(nu - 1.0, z).unwrap();
            let b = bessel_i_scaled(nu + 1.0, z).unwrap();
            let c = bessel_i_scaled(nu, z).unwrap();
            let r = (a - b - 2.0 * nu / z * c).abs();
            assert!(r <= 1e-9 * c, "nu {nu} z {z}: {r:e}");
        }
    }
}

#[test]
fn h_function_examples() {
    let s = (2.0 / std::f64::consts::PI).sqrt();
    assert!((h(0.0, 0.0).unwrap() - s).abs() < 1e-12);
    assert!((h(0.0, 2.0).unwrap() - s * 2f64.cosh()).abs() < 1e-12);
    assert!((h(0.0, 2.0).unwrap() - 3.0017).abs() < 1e-4);
    for &c in &[0.0, 0.5, 1.5, 3.5, 20.0] {
        assert!(seam_mismatch(c - 0.5) < 1e-9);
    }
}

#[test]
fn psi_reflected_gaussian_and_profile() {
    let v = psi_kernel(0.0, 1.0, 0.0, 0.0).unwrap();
    assert!((v - 0.5642).abs() < 1e-4);
    for &l in &[0.0, 0.5, 1.0] {
        for i in 0..40 {
            let x = 0.2 * i as f64;
            let p = psi_kernel(l, 1.0, x, 0.0).unwrap();
            let g = profile_tail(l, x).unwrap();
            assert!((p - g).abs() <= 1e-10 * g.max(1e-300), "lambda {l} x {x}: {p} vs {g}");
        }
    }
}

#[test]
fn psi_is_normalised() {
    for &l in &[0.0, 0.5, 1.0, 1.5] {
        for &y in &[0.0, 1.0, 5.0] {
            let m = psi_mass(l, 1.0, y).unwrap();
            assert!((m - 1.0).abs() < 1e-6, "lambda {l} y {y}: {m}");
        }
    }
}

#[test]
fn psi_pde_residual_decays_with_step() {
    // ∂_t Ψ - ∂_x(x^λ ∂_x Ψ) by centered differences of step h and h/2
    let l = 0.5;
    let k = PsiKernel::new(l).unwrap();
    let f = |t: f64, x: f64| k.eval(t, x, 0.7);
    let res = |h: f64, x: f64| {
        let dt = (f(1.0 + h, x) - f(1.0 - h, x)) / (2.0 * h);
        let flux = |xm: f64| xm.powf(l) * (f(1.0, xm + 0.5 * h) - f(1.0, xm - 0.5 * h)) / h;
        let lx = (flux(x + 0.5 * h) - flux(x - 0.5 * h)) / h;
        (dt - lx).abs()
    };
    for &x in &[0.3, 0.8, 1.5, 3.0] {
        let (r1, r2) = (res(1e-2, x), res(5e-3, x));
        assert!(r2 < 0.35 * r1, "x {x}: {r1:e} {r2:e}");
    }
}

#[test]
fn psi_delta_limit() {
    let g = |x: f64| (-(x - 2.0) * (x - 2.0)).exp();
    let k = PsiKernel::new(1.0).unwrap();
    let y = 2.3;
    let mut errs = Vec::new();
    for &t in &[1e-2, 1e-3] {
        let grid = QuadGrid::from_breaks((0..=400).map(|i| 0.0125 * i as f64 + 0.3).collect(), 8);
        let v: f64 = grid.nodes.iter().zip(&grid.weights).map(|(&x, &w)| w * k.eval(t, x, y) * g(x)).sum();
        errs.push((v - g(y)).abs());
    }
    // error of order t
    let ratio = errs[0] / errs[1];
    assert!(ratio > 5.0 && ratio < 20.0, "{errs:?}");
}

#[test]
fn semigroup_identity_mass_and_contraction() {
    let p = ContinuumKernelParams::for_time(1.0, 6.0, 60, 12).unwrap();
    let grid = p.grid().unwrap();
    let g: Vec<f64> = grid.nodes.iter().map(|&x| (-(x - 3.0) * (x - 3.0)).exp()).collect();
    assert_eq!(semigroup_apply(1.0, 0.0, &grid, &g).unwrap(), g);
    let sg = semigroup_apply(1.0, 1.0, &grid, &g).unwrap();
    let (m0, m1) = (grid.integrate(&g), grid.integrate(&sg));
    assert!(((m1 - m0) / m0).abs() < 1e-6, "{m0} {m1}");
    for p in [1.0, 2.0, 4.0] {
        let n0 = grid.integrate(&g.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
        let n1 = grid.integrate(&sg.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
        assert!(n1 <= n0 * (1.0 + 1e-9));
    }
    let sup0 = g.iter().cloned().fold(0.0, f64::max);
    assert!(sg.iter().cloned().fold(0.0, f64::max) <= sup0);
}

#[test]
fn semigroup_rejects_short_grid() {
    let grid = QuadGrid::new(4.0, 8, 8, 4).unwrap();
    let g: Vec<f64> = grid.nodes.iter().map(|&x| (-(x - 2.0) * (x - 2.0)).exp()).collect();
    assert!(semigroup_apply(1.0, 5.0, &grid, &g).is_err());
}

#[test]
fn chapman_kolmogorov() {
    let p = ContinuumKernelParams::for_time(0.5, 12.0, 60, 12).unwrap();
    let grid = p.grid().unwrap();
    let g: Vec<f64> = grid.nodes.iter().map(|&x| (-(x - 2.0) * (x - 2.0)).exp()).collect();
    let once = semigroup_apply(0.5, 1.0, &grid, &g).unwrap();
    let twice = semigroup_apply(0.5, 1.0, &grid, &once).unwrap();
    let direct = semigroup_apply(0.5, 2.0, &grid, &g).unwrap();
    let err = twice.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-5, "{err:e}");
}

#[test]
fn duhamel_of_constant_source() {
    // ∫_0^t S(t-s) g ds with time-independent g equals ∫_0^t S(r) g dr
    let p = ContinuumKernelParams::for_time(1.0, 4.0, 40, 10).unwrap();
    let grid = p.grid().unwrap();
    let g: Vec<f64> = grid.nodes.iter().map(|&x| (-(x - 3.0) * (x - 3.0)).exp()).collect();
    let d = duhamel_apply(1.0, 0.5, &grid, |_| g.clone(), 8).unwrap();
    let mass = grid.integrate(&d);
    let want = 0.5 * grid.integrate(&g);
    assert!(((mass - want) / want).abs() < 1e-4, "{mass} {want}");
}

fn profile_density(grid: &QuadGrid, lambda: f64, t: f64, rho: f64) -> Vec<f64> {
    grid.nodes
        .iter()
        .map(|&x| rho * edg_core::profiles::scaling_solution(lambda, t, x).unwrap())
        .collect()
}

#[test]
fn entropy_vanishes_on_the_profile() {
    for &l in &[0.0, 0.5, 1.0] {
        let p = ContinuumKernelParams::for_time(l, 2.0, 40, 12).unwrap();
        let grid = p.grid().unwrap();
        let mu = profile_density(&grid, l, 2.0, 0.7);
        let r = relative_entropy_fisher(&grid, &mu, l, 2.0).unwrap();
        assert!(r.entropy.abs() < 1e-8 && r.fisher.abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn log_sobolev_on_perturbed_profiles() {
    for &l in &[0.0, 0.5, 1.0] {
        let c = bobkov_gotze_constants(l).unwrap().c_lsi_bound;
        for &t in &[0.5, 1.0, 3.0] {
            let p = ContinuumKernelParams::for_time(l, t, 40, 12).unwrap();
            let grid = p.grid().unwrap();
            let mu: Vec<f64> = profile_density(&grid, l, t, 1.0)
                .iter()
                .zip(&grid.nodes)
                .map(|(g, &x)| g * (1.0 + 0.1 * x.sin()))
                .collect();
            let r = relative_entropy_fisher(&grid, &mu, l, t).unwrap();
            assert!(r.entropy > 0.0);
            assert!(r.entropy <= 4.0 * c * t * r.fisher, "lambda {l} t {t}: {r:?}");
        }
    }
}

#[test]
fn entropy_decreases_along_the_semigroup() {
    let l = 1.0;
    let p = ContinuumKernelParams::for_time(l, 12.0, 60, 12).unwrap();
    let grid = p.grid().unwrap();
    let mu0: Vec<f64> = grid.nodes.iter().map(|&x| (-(x - 1.5) * (x - 1.5) * 4.0).exp()).collect();
    let mut last = f64::INFINITY;
    for &t in &[0.5, 1.0, 2.0, 4.0, 8.0] {
        let mu = semigroup_apply(l, t, &grid, &mu0).unwrap();
        let mu: Vec<f64> = mu.iter().map(|v| v.max(0.0)).collect();
        let h = relative_entropy_fisher(&grid, &mu, l, t).unwrap().entropy;
        assert!(h < last, "t {t}: {h} >= {last}");
        last = h;
    }
}

#[test]
fn bobkov_gotze_finite_and_stable() {
    for &l in &[0.0, 1.0, 1.5] {
        let a = bobkov_gotze_constants_with(l, 100).unwrap();
        let b = bobkov_gotze_constants_with(l, 200).unwrap();
        assert!(a.b_minus.is_finite() && a.b_plus.is_finite());
        assert!(((a.b_minus - b.b_minus) / b.b_minus).abs() <= 0.01);
        assert!(((a.b_plus - b.b_plus) / b.b_plus).abs() <= 0.01);
        assert_eq!(b.c_lsi_bound, 4.0 * b.b_minus.max(b.b_plus));
    }
    let b = bobkov_gotze_constants(1.0).unwrap();
    assert!(b.argmax_plus > 1.0 && b.argmax_plus < 1e3);
    assert!(b.argmax_minus > 1e-12 && b.argmax_minus < 1.0);
}

#[test]
fn lattice_oracle_mass_and_formulas() {
    for &t in &[0.5, 3.0, 40.0, 500.0] {
        assert!((phi_total_mass(t).unwrap() - 1.0).abs() < 1e-10, "t {t}");
    }
    for &t in &[0.3, 2.0, 15.0, 120.0] {
        for k in 0..30i64 {
            for l in 1..8usize {
                let a = psi_reflection(t, k as f64, l).unwrap();
                let b = psi_expansion(t, k as f64, l).unwrap();
                assert!((a - b).abs() < 1e-10, "t {t} k {k} l {l}");
            }
        }
        for l in 1..5usize {
            assert_eq!(discrete_heat_oracle_lambda0(t, 0, l).unwrap(), 0.0);
        }
    }
}

#[test]
fn lattice_oracle_long_time_profile() {
    let t: f64 = 1e4;
    let rho = 0.5;
    let c = [rho];
    for &x in &[0.5, 1.0, 2.0, 3.0] {
        let u = lambda0_solution(t, x * t.sqrt(), &c).unwrap();
        let want = rho * x * (-x * x / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
        let rel = (t * u - want).abs() / want;
        assert!(rel < 0.03, "x {x}: {rel}");
    }
}

#[test]
fn bessel_large_order_asymptotics() {
    let t: f64 = 1e4;
    for &x in &[0.5, 1.0, 2.0] {
        let v = bessel_i_scaled(x * t.sqrt(), t).unwrap() * (2.0 * std::f64::consts::PI * t).sqrt();
        let ratio = v / (-x * x / 2.0).exp();
        assert!((ratio - 1.0).abs() < 0.02, "x {x}: {ratio}");
    }
}

proptest! {
    #[test]
    fn z_round_trip(l in 0.0f64..1.99, x in 0.0f64..1e3) {
        let z = change_of_variables_z(l, x).unwrap();
        let back = inverse_z(l, z).unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn psi_is_symmetric(l in 0.0f64..1.95, t in 0.05f64..20.0, x in 0.0f64..30.0, y in 0.0f64..30.0) {
        let k = PsiKernel::new(l).unwrap();
        let (a, b) = (k.eval(t, x, y), k.eval(t, y, x));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(b).max(1e-300));
    }
}
