use edg_core::edg::TimeChangeMap;
use edg_core::heat::{solve_dp, solve_np, HeatRunConfig};
use edg_core::profiles::{profile_tail, scaling_solution};
use edg_core::scaling::*;
use proptest::prelude::*;

fn delta_tail(n: usize, rho: f64) -> Vec<f64> {
    let mut u = vec![0.0; n];
    u[0] = rho;
    u
}

#[test]
fn round_trip_and_mass() {
    let u: Vec<f64> = (0..50).map(|i| ((i * 37 % 11) as f64) / 7.0).collect();
    for &lam in &[0.0, 1.0, 1.5] {
        let f = iota_embed(&u, lam, 1.0 / 16.0).unwrap();
        let back = pi_project_step(&f, lam, 1.0 / 16.0, u.len()).unwrap();
        assert_eq!(back, u);
        let s: f64 = u.iter().sum();
        assert!((f.integral() - s).abs() <= 1e-12 * s);
    }
    let f = iota_embed(&[1.0, 0.0], 0.0, 1.0).unwrap();
    assert_eq!((f.eval(0.5), f.eval(1.5)), (1.0, 0.0));
}

#[test]
fn projection_preserves_mass() {
    // Gaussian density on [0, 8]
    let g = |x: f64| (-x * x / 2.0).exp();
    let eps: f64 = 1.0 / 16.0;
    let h = eps.powf(0.5);
    let n = (12.0 / h) as usize;
    let p = pi_project_density(g, 0.0, eps, n).unwrap();
    let total: f64 = p.iter().sum();
    let exact = (std::f64::consts::PI / 2.0).sqrt();
    assert!((total - exact).abs() < 1e-12, "{total}");
}

#[test]
fn coarse_to_fine_projection_conserves() {
    let u = vec![3.0, 1.0, 0.5, 0.25];
    let f = iota_embed(&u, 0.0, 1.0 / 4.0).unwrap();
    let fine = pi_project_step(&f, 0.0, 1.0 / 64.0, 64).unwrap();
    let a: f64 = u.iter().sum();
    let b: f64 = fine.iter().sum();
    assert!((a - b).abs() < 1e-12);
}

proptest! {
    #[test]
    fn iota_pi_adjoint(
        u in prop::collection::vec(0.0f64..2.0, 5..40),
        atoms in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30),
        lam in 0.0f64..1.9,
    ) {
        let eps: f64 = 1.0 / 8.0;
        let f = iota_embed(&u, lam, eps).unwrap();
        let atoms: Vec<(f64, f64)> = atoms.iter().map(|&(s, w)| (s * f.x_max(), w)).collect();
        let lhs: f64 = atoms.iter().map(|&(x, w)| w * f.eval(x)).sum();
        let p = pi_project_atoms(&atoms, lam, eps, u.len()).unwrap();
        let rhs: f64 = u.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / f.cell();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn round_trip_random(u in prop::collection::vec(-5.0f64..5.0, 3..60), lam in 0.0f64..1.9) {
        let f = iota_embed(&u, lam, 1.0 / 16.0).unwrap();
        prop_assert_eq!(pi_project_step(&f, lam, 1.0 / 16.0, u.len()).unwrap(), u);
    }
}

#[test]
fn rescaled_solution_examples() {
    let zero = vec![0.0; 100];
    assert!(rescaled_solution(&zero, 4.0, 0.0, &[0.0, 1.0]).unwrap().iter().all(|&v| v == 0.0));
    assert!(rescaled_solution(&zero, 4.0, 0.0, &[60.0]).is_err());
    assert!(rescaled_solution(&zero, 0.0, 0.0, &[1.0]).is_err());
}

#[test]
fn lambda0_rescaled_tail_matches_profile() {
    let (rho, n, t) = (0.5, 1500, 1e4);
    let cfg = HeatRunConfig::new(0.0, n, t).with_outputs(vec![1e2, 1e3, 1e4]);
    let traj = solve_np(&delta_tail(n, rho), &cfg).unwrap();
    let u = traj.at(t).unwrap();
    // mass of the rescaled field equals the lattice mass
    let sc = t.sqrt();
    let xs: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / sc).collect();
    let uh = rescaled_solution(u, t, 0.0, &xs).unwrap();
    let mass: f64 = uh.iter().sum::<f64>() / sc;
    assert!((mass - rho).abs() < 1e-10);
    for (x, v) in xs.iter().zip(&uh).take_while(|(x, _)| **x <= 3.0) {
        let g = rho * profile_tail(0.0, *x).unwrap();
        assert!((v - g).abs() <= 0.02 * g.max(0.05), "x {x}: {v} vs {g}");
    }
    let errs: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.fields)
        .map(|(t, f)| self_similarity_error(f, *t, 0.0, rho, (0.0, 3.0)).unwrap())
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] <= 0.02 * rho / std::f64::consts::PI.sqrt());
}

#[test]
fn self_similarity_of_exact_profile() {
    for &lam in &[0.0, 0.5, 1.0] {
        for &t in &[10.0f64, 1e3] {
            let a = 1.0 / (2.0 - lam);
            let sc = t.powf(a);
            let n = (12.0 * sc) as usize;
            // cell averages of γ_λ(t, ·) stored at the lattice resolution
            let u: Vec<f64> = (0..n)
                .map(|k| scaling_solution(lam, t, k as f64 + 0.5).unwrap())
                .collect();
            let e = self_similarity_error(&u, t, lam, 1.0, (0.1, 3.0)).unwrap();
            assert!(e < 1.0 / sc, "lambda {lam} t {t}: {e}");
        }
    }
    assert!(self_similarity_error(&[1.0; 10], 1.0, 1.0, 1.0, (0.0, 1.0)).is_err());
}

#[test]
fn embedding_rate_consistency_lambda0() {
    // 𝒰_ε(1, ·) = ι_ε U(ε^{-1}); error should halve as ε is quartered
    let rho = 1.0;
    let eps = [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0, 1.0 / 1024.0];
    let n = 400;
    let times: Vec<f64> = eps.iter().rev().map(|e| 1.0 / e).collect();
    let times: Vec<f64> = times.into_iter().rev().collect();
    let cfg = HeatRunConfig::new(0.0, n, 1024.0).with_outputs(times.clone());
    let traj = solve_np(&delta_tail(n, rho), &cfg).unwrap();
    let errs: Vec<f64> = eps
        .iter()
        .zip(&traj.fields)
        .map(|(e, u)| {
            let f = iota_embed(u, 0.0, *e).unwrap();
            (0..=300)
                .map(|i| {
                    let x = 3.0 * i as f64 / 300.0;
                    (f.eval(x) - rho * profile_tail(0.0, x).unwrap()).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((1.5..=3.0).contains(&r), "{errs:?}");
    }
}

fn defect_series<F: SmoothFunction>(phi: &F, lam: f64) -> (Vec<f64>, Vec<f64>) {
    (4..=8)
        .map(|j| {
            let t = replacement_defect(phi, lam, 2f64.powi(-j), 4.0).unwrap();
            (t.max_normalized(), t.lattice_constant(lam))
        })
        .unzip()
}

#[test]
fn replacement_defect_stays_bounded() {
    for &lam in &[0.0, 1.0] {
        let (ratios, consts) = defect_series(&GaussianBump { width: 1.0 }, lam);
        let (r2, _) = defect_series(&RationalBump { width: 1.0 }, lam);
        for r in [&ratios, &r2] {
            let hi = r.iter().cloned().fold(0.0, f64::max);
            assert!(hi <= 2.0 * r[0], "lambda {lam}: {r:?}");
        }
        let (lo, hi) = consts.iter().fold((f64::MAX, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi <= 2.0 * lo, "lambda {lam}: {consts:?}");
    }
}

#[test]
fn defect_vanishes_on_constants() {
    struct Flat;
    impl SmoothFunction for Flat {
        fn value(&self, _: f64) -> f64 {
            2.5
        }
        fn d1(&self, _: f64) -> f64 {
            0.0
        }
        fn d2(&self, _: f64) -> f64 {
            0.0
        }
        fn d3(&self, _: f64) -> f64 {
            0.0
        }
    }
    for &lam in &[0.0, 0.5, 1.5] {
        let t = replacement_defect(&Flat, lam, 1.0 / 32.0, 3.0).unwrap();
        assert!(t.defect.iter().all(|r| r.abs() < 1e-10));
    }
}

#[test]
fn synthetic_fits_are_exact() {
    let ts: Vec<f64> = (0..80).map(|i| 1.0 + 0.5 * i as f64).collect();
    let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (0.7 * t).exp()).collect();
    let r = fit_growth(&ts, &ys, FitRegime::Exponential, FitWindow::Default).unwrap();
    assert!((r.exponent - 0.7).abs() < 1e-10 && r.r2 > 1.0 - 1e-12);
    assert!((r.prefactor - 3.0).abs() < 1e-8);
    assert_eq!(r.regime.label(), "exponential");

    let t_star = 2.0;
    let ts: Vec<f64> = (0..60).map(|i| t_star - 10f64.powf(-3.0 * i as f64 / 59.0)).collect();
    let ys: Vec<f64> = ts.iter().map(|t| (t_star - t).powf(-2.0)).collect();
    let r = fit_growth(&ts, &ys, FitRegime::Blowup { t_star }, FitWindow::Default).unwrap();
    assert!((r.exponent + 2.0).abs() < 1e-8, "{}", r.exponent);
    let (half, double) = r.sensitivity;
    assert!((half.unwrap() + 2.0).abs() < 1e-8 && (double.unwrap() + 2.0).abs() < 1e-8);

    let ts: Vec<f64> = (0..40).map(|i| 10f64.powf(i as f64 / 13.0)).collect();
    let ys: Vec<f64> = ts.iter().map(|t| t * t).collect();
    let r = fit_growth(&ts, &ys, FitRegime::Algebraic, FitWindow::Range(1.0, 1e3)).unwrap();
    assert!((r.exponent - 2.0).abs() < 1e-10);
}

#[test]
fn fit_rejects_short_span() {
    let ts: Vec<f64> = (0..30).map(|i| 1.0 + 0.1 * i as f64).collect();
    let ys = ts.clone();
    assert!(fit_growth(&ts, &ys, FitRegime::Algebraic, FitWindow::Default).is_err());
    assert!(regime_for(1.75, None).is_err());
}

#[test]
fn tau_fit_on_synthetic_map() {
    let t_of_tau: Vec<f64> = (0..200).map(|i| 10f64.powf(3.0 * i as f64 / 199.0) - 1.0).collect();
    let tau_grid: Vec<f64> = t_of_tau.iter().map(|t| t * t).collect();
    let map = TimeChangeMap {
        tau_grid,
        t_of_tau,
        gel_time_estimate: None,
        gel_time_theory_tail: None,
    };
    let r = tau_asymptotics(&map, 0.0).unwrap();
    assert!((r.exponent - 2.0).abs() < 1e-10);
}

#[test]
fn moment_targets() {
    let pi = std::f64::consts::PI;
    assert_eq!(moment_target(0.3, 1.0, 0.7).unwrap(), 0.7);
    let a = moment_target(0.0, 0.0, 1.0).unwrap();
    assert!((a - 1.0 / pi.sqrt()).abs() < 1e-10, "{a}");
    // g_1(x) = e^{-x}, so the half moment is Γ(3/2)
    let b = moment_target(1.0, 0.5, 2.0).unwrap();
    assert!((b - pi.sqrt()).abs() < 1e-10);
}

#[test]
fn half_moment_converges_lambda1() {
    let (rho, n, t) = (1.0, 40_000, 1e3);
    let mut u0 = vec![0.0; n];
    u0[0] = rho;
    let times: Vec<f64> = (0..=10).map(|i| 10f64.powf(2.0 + i as f64 / 10.0)).collect();
    let cfg = HeatRunConfig::new(1.0, n, t).with_outputs(times);
    let traj = solve_dp(&u0, &cfg).unwrap();
    let m = moment_asymptotics(&traj, 0.5, rho).unwrap();
    let target = m.target.unwrap();
    assert!(((m.estimate - target) / target).abs() < 0.02, "{} {}", m.estimate, target);
    assert!(m.converged);
    let one = moment_asymptotics(&traj, 1.0, rho).unwrap();
    assert!((one.estimate - rho).abs() < 1e-8);
}
