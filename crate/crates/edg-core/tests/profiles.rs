use edg_core::profiles::*;
use edg_core::quad::integrate;
use edg_core::Regime;
use proptest::prelude::*;

fn half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    let br = [0.0, 1e-6, 0.01, 0.5, 2.0, 8.0, 30.0, 120.0, 500.0];
    br.windows(2).map(|w| integrate(&f, w[0], w[1], 1e-15, 1e-12).unwrap().value).sum()
}

#[test]
fn kernel_examples() {
    assert_eq!(kernel_a(1.0, 3).unwrap(), 3.0);
    assert_eq!(kernel_a(0.0, 0).unwrap(), 0.0);
    assert_eq!(kernel_a(0.0, 7).unwrap(), 1.0);
    assert_eq!(kernel_a(0.5, 4).unwrap(), 2.0);
    assert_eq!(kernel_a(1.3, 0).unwrap(), 0.0);
    assert!(kernel_a(2.0, 1).is_err());
    assert!(kernel_a(-0.1, 1).is_err());
}

#[test]
fn lambda0_values() {
    let pi = std::f64::consts::PI;
    assert_eq!(profile_g(0.0, 0.0).unwrap(), 0.0);
    assert!((profile_g(0.0, 2.0).unwrap() - (-1.0f64).exp() / pi.sqrt()).abs() < 1e-14);
    assert!((profile_tail(0.0, 0.0).unwrap() - 1.0 / pi.sqrt()).abs() < 1e-14);
    for i in 0..50 {
        let x = 0.1 * i as f64;
        assert!((profile_tail(0.0, x).unwrap() - (-x * x / 4.0).exp() / pi.sqrt()).abs() < 1e-14);
    }
    assert!((scaling_solution(0.0, 1.0, 0.0).unwrap() - 1.0 / pi.sqrt()).abs() < 1e-14);
    assert!(scaling_solution(0.5, 0.0, 1.0).is_err());
}

#[test]
fn normalisation_on_grid() {
    for i in 0..8 {
        let lam = 0.25 * i as f64;
        let m = half_line(|x| profile_tail(lam, x).unwrap());
        let first = half_line(|x| if x == 0.0 { 0.0 } else { x * profile_g(lam, x).unwrap() });
        assert!((m - 1.0).abs() < 1e-8, "lambda {lam}: {m}");
        assert!((first - 1.0).abs() < 1e-8, "lambda {lam}: {first}");
    }
    let m = half_line(|x| scaling_solution(1.0, 4.0, x).unwrap());
    assert!((m - 1.0).abs() < 1e-8);
}

#[test]
fn tail_differences_are_integrals_of_g() {
    for &lam in &[0.0, 1.0] {
        for &(a, b) in &[(0.0, 1.0), (0.5, 3.0), (2.0, 10.0)] {
            let lhs = profile_tail(lam, a).unwrap() - profile_tail(lam, b).unwrap();
            let rhs = integrate(|x| profile_g(lam, x).unwrap(), a, b, 1e-15, 1e-12).unwrap().value;
            assert!((lhs - rhs).abs() < 1e-8);
        }
    }
}

#[test]
fn singular_g_at_origin() {
    assert!(profile_g(1.5, 0.0).unwrap().is_infinite());
    assert!(profile_g(1.0, 0.0).unwrap().is_finite());
}

#[test]
fn moduli_examples() {
    for i in 1..20 {
        let x = 0.3 * i as f64;
        assert_eq!(theta(0.0, x), x);
    }
    assert!((theta(1.0, std::f64::consts::E) - 1.0).abs() < 1e-15);
    for &lam in &[0.0, 0.5, 1.0, 1.5] {
        assert_eq!(continuity_moduli(lam, 1.0, 1.0).unwrap().1, 0.0);
    }
    assert!(continuity_moduli(0.5, 0.0, 1.0).is_err());
    assert!(continuity_moduli(0.5, 1.0, 0.5).is_err());
}

#[test]
fn regimes_and_beta_sign() {
    assert_eq!(scaling_constants(1.0).unwrap().regime(), Regime::Coarsening);
    assert_eq!(scaling_constants(1.5).unwrap().regime(), Regime::Exponential);
    assert_eq!(scaling_constants(1.75).unwrap().regime(), Regime::Gelation);
    assert!(scaling_constants(1.5).unwrap().beta.is_none());
    assert_eq!(scaling_constants(1.75).unwrap().beta, Some(-2.0));
}

/// γ_λ solves ∂_t γ = ∂_x(x^λ ∂_x γ); the centred residual shrinks at second order.
#[test]
fn scaling_solution_pde_residual() {
    let residual = |lam: f64, h: f64| {
        let g = |t: f64, x: f64| scaling_solution(lam, t, x).unwrap();
        let mut worst = 0.0f64;
        for i in 0..30 {
            let x = 0.2 + 0.1 * i as f64;
            let dt = (g(1.0 + h, x) - g(1.0 - h, x)) / (2.0 * h);
            let flux = |y: f64| y.powf(lam) * (g(1.0, y + h / 2.0) - g(1.0, y - h / 2.0)) / h;
            let dx = (flux(x + h / 2.0) - flux(x - h / 2.0)) / h;
            worst = worst.max((dt - dx).abs());
        }
        worst
    };
    for &lam in &[0.0, 0.5, 1.0, 1.5] {
        let (a, b) = (residual(lam, 0.02), residual(lam, 0.01));
        assert!(a / b > 3.0 && a / b < 5.0, "lambda {lam}: {a:e} {b:e}");
    }
}

proptest! {
    #[test]
    fn exponent_identities(lam in 0.0f64..1.99) {
        let s = scaling_constants(lam).unwrap();
        prop_assert!((s.alpha * (2.0 - lam) - 1.0).abs() <= f64::EPSILON);
        prop_assert!(s.alpha >= 0.5);
        if let Some(beta) = s.beta {
            prop_assert!((beta * (3.0 - 2.0 * lam) - 1.0).abs() <= 2.0 * f64::EPSILON);
            prop_assert_eq!(beta > 0.0, lam < 1.5);
        }
        // log form, since the direct product underflows near 2
        let lz = 2.0 / (2.0 - lam) * (2.0 - lam).ln() + libm::lgamma(1.0 + 1.0 / (2.0 - lam));
        prop_assert!((s.z_lambda.ln() - lz).abs() <= 1e-12 * (1.0 + lz.abs()));
    }

    #[test]
    fn tail_profile_is_nonincreasing(lam in 0.0f64..1.99, x in 0.0f64..20.0, d in 0.0f64..5.0) {
        prop_assert!(profile_tail(lam, x + d).unwrap() <= profile_tail(lam, x).unwrap());
    }

    #[test]
    fn unit_time_is_identity(lam in 0.0f64..1.99, x in 0.0f64..10.0) {
        prop_assert_eq!(scaling_solution(lam, 1.0, x).unwrap(), profile_tail(lam, x).unwrap());
    }
}
