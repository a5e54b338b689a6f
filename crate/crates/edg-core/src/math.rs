//! Scalar helpers on top of `libm`, the Gamma function and compensated sums.

pub use core::f64::consts::{E, LN_2, PI};

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}
#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}

/// `k^λ` on integers with the convention `0^0 = 0` used by the lattice kernel.
#[inline]
pub fn ipow(k: usize, lambda: f64) -> f64 {
    if k == 0 {
        0.0
    } else if lambda == 0.0 {
        1.0
    } else if lambda == 1.0 {
        k as f64
    } else {
        powf(k as f64, lambda)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma function (Lanczos, g = 7, with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        if x == floor(x) {
            return f64::NAN;
        }
        return PI / (sin(PI * x) * gamma(1.0 - x));
    }
    if x == floor(x) && x <= 23.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    sqrt(2.0 * PI) * powf(t, y + 0.5) * exp(-t) * lanczos_sum(y)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return ln(PI / (sin(PI * x)).abs()) - ln_gamma(1.0 - x);
    }
    if x < 20.0 {
        return ln(gamma(x).abs());
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    0.5 * ln(2.0 * PI) + (y + 0.5) * ln(t) - t + ln(lanczos_sum(y))
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn ksum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Sup norm of the difference of two slices over their common length.
pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(0.5) - sqrt(PI)).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * sqrt(PI)).abs() < 1e-14);
        assert_eq!(gamma(5.0), 24.0);
        // Γ(4/3) and Γ(5/3), mpmath reference
        assert!((gamma(4.0 / 3.0) - 0.892_979_511_569_249_2).abs() < 1e-13);
        assert!((gamma(5.0 / 3.0) - 0.902_745_292_950_933_6).abs() < 1e-13);
        assert!((gamma(2.5) - 1.329_340_388_179_137).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_large() {
        // ln Γ(101) = ln(100!)
        let exact = 363.739_375_555_563_5;
        assert!((ln_gamma(101.0) - exact).abs() < 1e-11);
        assert!((ln_gamma(30.5) - 72.953_471_184_169_41).abs() < 1e-11);
    }

    #[test]
    fn compensated_sum() {
        let v = [1.0, 1e-16, -1.0, 1e-16];
        assert!((ksum(v) - 2e-16).abs() < 1e-30);
    }
}
