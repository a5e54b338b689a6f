//! Gauss-Legendre rules, adaptive Gauss-Kronrod integration and composite
//! quadrature grids on the half line.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, PI};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive Gauss-Kronrod (7/15) integration on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let max_intervals = 4000;
    let (v, e) = gk15(&mut f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Numerical("non-finite integrand"));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) || parts.len() >= max_intervals {
            if parts.len() >= max_intervals && err > 10.0 * abs_tol.max(rel_tol * total.abs()) {
                return Err(Error::Numerical("adaptive quadrature did not converge"));
            }
            return Ok(Integral {
                value: total,
                error: err,
                intervals: parts.len(),
            });
        }
        let (imax, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(imax);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Composite Gauss-Legendre grid on `[0, x_max]` with geometric grading
/// towards the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Panel boundaries; panel `p` covers nodes `p*order .. (p+1)*order`.
    pub breaks: Vec<f64>,
    pub order: usize,
}

impl QuadGrid {
    /// `panels` uniform panels of width `x_max / panels`, the first of which is
    /// refined geometrically (ratio 1/2) `grading` times.
    pub fn new(x_max: f64, panels: usize, order: usize, grading: usize) -> Result<Self> {
        if !(x_max > 0.0) || panels == 0 || order < 2 {
            return Err(Error::Invalid("quadrature grid needs x_max > 0, panels >= 1, order >= 2"));
        }
        let h = x_max / panels as f64;
        let mut breaks = Vec::with_capacity(panels + grading + 1);
        breaks.push(0.0);
        let mut g = Vec::with_capacity(grading);
        let mut b = h;
        for _ in 0..grading {
            b *= 0.5;
            g.push(b);
        }
        g.reverse();
        breaks.extend(g);
        for p in 1..=panels {
            breaks.push(h * p as f64);
        }
        Ok(Self::from_breaks(breaks, order))
    }

    pub fn from_breaks(breaks: Vec<f64>, order: usize) -> Self {
        let (xr, wr) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * order);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for win in breaks.windows(2) {
            let c = 0.5 * (win[0] + win[1]);
            let h = 0.5 * (win[1] - win[0]);
            for (x, w) in xr.iter().zip(&wr) {
                nodes.push(c + h * x);
                weights.push(h * w);
            }
        }
        Self {
            nodes,
            weights,
            breaks,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        *self.breaks.last().unwrap_or(&0.0)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        crate::math::ksum(self.weights.iter().zip(values).map(|(w, v)| w * v))
    }

    fn panel_of(&self, x: f64) -> Option<usize> {
        if x < 0.0 || x > self.x_max() {
            return None;
        }
        let p = self.breaks.partition_point(|&b| b <= x);
        Some(p.saturating_sub(1).min(self.breaks.len() - 2))
    }

    /// Lagrange interpolation inside the panel holding `x`; zero outside the grid.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let Some(p) = self.panel_of(x) else {
            return 0.0;
        };
        let off = p * self.order;
        let xs = &self.nodes[off..off + self.order];
        let ys = &values[off..off + self.order];
        let mut acc = 0.0;
        for i in 0..self.order {
            let mut l = 1.0;
            for j in 0..self.order {
                if i != j {
                    l *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            acc += l * ys[i];
        }
        acc
    }

    /// Derivative at the nodes from the panel-local interpolating polynomial.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut out = alloc::vec![0.0; values.len()];
        for p in 0..self.breaks.len() - 1 {
            let off = p * n;
            let xs = &self.nodes[off..off + n];
            let ys = &values[off..off + n];
            for k in 0..n {
                let mut d = 0.0;
                for i in 0..n {
                    // derivative of the i-th Lagrange basis polynomial at xs[k]
                    let li = if i == k {
                        (0..n).filter(|&j| j != i).map(|j| 1.0 / (xs[i] - xs[j])).sum()
                    } else {
                        let mut num = 1.0;
                        let mut den = 1.0;
                        for j in 0..n {
                            if j != i {
                                den *= xs[i] - xs[j];
                                if j != k {
                                    num *= xs[k] - xs[j];
                                }
                            }
                        }
                        num / den
                    };
                    d += li * ys[i];
                }
                out[off + k] = d;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{exp, sqrt};

    #[test]
    fn legendre_rule_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let sw: f64 = w.iter().sum();
        assert!((sw - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gaussian_and_singular() {
        let r = integrate(|x| exp(-x * x), 0.0, 20.0, 1e-14, 1e-13).unwrap();
        assert!((r.value - 0.5 * sqrt(PI)).abs() < 1e-13);
        let r = integrate(|x| 1.0 / sqrt(x), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn grid_integrates_and_interpolates() {
        let g = QuadGrid::new(10.0, 40, 10, 12).unwrap();
        let v: Vec<f64> = g.nodes.iter().map(|&x| exp(-x)).collect();
        assert!((g.integrate(&v) - (1.0 - exp(-10.0))).abs() < 1e-13);
        assert!((g.interpolate(&v, 1.2345) - exp(-1.2345)).abs() < 1e-12);
        let d = g.differentiate(&v);
        let e = d.iter().zip(&v).map(|(d, v)| (d + v).abs()).fold(0.0, f64::max);
        assert!(e < 1e-9);
    }
}
