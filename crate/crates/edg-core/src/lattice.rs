//! Calculus on the positive integers.
//!
//! Fields are slices indexed from `k = 1`: `values[i]` holds the value at
//! `k = i + 1`. Beyond the right end a field is taken to vanish,
//! `f(N+1) = 0`, except inside the generator `L_λ`, which uses zero flux at
//! both ends.

use alloc::vec::Vec;

use crate::error::{check_lambda, Error, Result};
use crate::math::{ipow, ksum, powf, KahanSum};

/// Value assumed at `k = 0` by the backward difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// `f(0) = 0`.
    Density,
    /// `f(0) = f(1)`.
    Tail,
}

/// Validated lattice field with its kernel exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub lambda: f64,
    pub values: Vec<f64>,
}

impl LatticeField {
    pub fn new(lambda: f64, values: Vec<f64>) -> Result<Self> {
        check_lambda(lambda)?;
        if values.len() < 2 {
            return Err(Error::Invalid("lattice field needs N >= 2"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("lattice field has non-finite entries"));
        }
        Ok(Self { lambda, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_index(f: &[f64], k: usize) -> Result<()> {
    if k == 0 || k > f.len() {
        Err(Error::Invalid("lattice index outside 1..=N"))
    } else {
        Ok(())
    }
}

/// `∂⁺f(k) = f(k+1) - f(k)` with `f(N+1) = 0`.
pub fn diff_plus(f: &[f64], k: usize) -> Result<f64> {
    check_index(f, k)?;
    let next = f.get(k).copied().unwrap_or(0.0);
    Ok(next - f[k - 1])
}

/// `∂⁻f(k) = f(k) - f(k-1)` with `f(0)` set by `boundary`.
pub fn diff_minus(f: &[f64], k: usize, boundary: Boundary) -> Result<f64> {
    check_index(f, k)?;
    let prev = if k == 1 {
        match boundary {
            Boundary::Density => 0.0,
            Boundary::Tail => f[0],
        }
    } else {
        f[k - 2]
    };
    Ok(f[k - 1] - prev)
}

/// `∂⁺f` at every `k = 1..=N`.
pub fn forward_diff(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| if i + 1 < n { f[i + 1] - f[i] } else { -f[i] })
        .collect()
}

/// Bond weights `a_λ(k)` for the bonds `(k, k+1)`, `k = 1..N-1`.
pub fn bond_weights(lambda: f64, n: usize) -> Vec<f64> {
    (1..n).map(|k| ipow(k, lambda)).collect()
}

/// `L_λ U` with the bond weights precomputed; `out` has the length of `u`.
pub(crate) fn apply_l_with(w: &[f64], u: &[f64], out: &mut [f64]) {
    let n = u.len();
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for i in 0..n - 1 {
        let flux = w[i] * (u[i + 1] - u[i]);
        out[i] += flux;
        out[i + 1] -= flux;
    }
}

/// `L_λ U = ∂⁻(a_λ ∂⁺U)` with zero flux at `k = 0` and at `k = N`.
pub fn apply_l_lambda(lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if u.len() < 3 {
        return Err(Error::Invalid("L_lambda needs N >= 3"));
    }
    let w = bond_weights(lambda, u.len());
    let mut out = alloc::vec![0.0; u.len()];
    apply_l_with(&w, u, &mut out);
    Ok(out)
}

/// `E_λ(U, V) = Σ_{k=1}^{N-1} k^λ ∂⁺U(k) ∂⁺V(k)`.
pub fn dirichlet_form(lambda: f64, u: &[f64], v: &[f64]) -> Result<f64> {
    check_lambda(lambda)?;
    if u.len() != v.len() {
        return Err(Error::Invalid("dirichlet_form: mismatched field sizes"));
    }
    let mut s = KahanSum::new();
    for i in 0..u.len().saturating_sub(1) {
        s.add(ipow(i + 1, lambda) * (u[i + 1] - u[i]) * (v[i + 1] - v[i]));
    }
    Ok(s.value())
}

/// Moments `M_κ = Σ_{k>=1} k^κ f(k)` for several orders.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub orders: Vec<f64>,
    pub values: Vec<f64>,
}

impl MomentVector {
    pub fn get(&self, order: f64) -> Option<f64> {
        self.orders.iter().position(|&o| o == order).map(|i| self.values[i])
    }
}

/// Single moment `Σ_{k>=1} k^κ f(k)` (compensated).
pub fn moment(f: &[f64], order: f64) -> f64 {
    if order == 0.0 {
        return ksum(f.iter().copied());
    }
    if order == 1.0 {
        return ksum(f.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v));
    }
    ksum(f.iter().enumerate().map(|(i, v)| powf((i + 1) as f64, order) * v))
}

pub fn moments(f: &[f64], orders: &[f64]) -> MomentVector {
    MomentVector {
        orders: orders.to_vec(),
        values: orders.iter().map(|&o| moment(f, o)).collect(),
    }
}

/// Tail `U(k) = Σ_{l>=k} u(l)`.
pub fn tail_transform(u: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; u.len()];
    let mut acc = KahanSum::new();
    for i in (0..u.len()).rev() {
        acc.add(u[i]);
        out[i] = acc.value();
    }
    out
}

/// Inverse of the tail: `u = -∂⁺U` with `U(N+1) = 0`.
pub fn tail_inverse(tail: &[f64]) -> Vec<f64> {
    forward_diff(tail).into_iter().map(|d| -d).collect()
}

/// `‖U‖₂² / (‖U‖₁^{2(2-λ)/(3-λ)} E_λ(U)^{1/(3-λ)})`.
pub fn nash_functional(lambda: f64, u: &[f64]) -> Result<f64> {
    let e = dirichlet_form(lambda, u, u)?;
    let l1 = ksum(u.iter().map(|v| v.abs()));
    let l2 = ksum(u.iter().map(|v| v * v));
    if l1 == 0.0 {
        return Err(Error::Invalid("nash_functional: zero field"));
    }
    if e <= 0.0 {
        return Err(Error::Invalid("nash_functional: zero Dirichlet energy"));
    }
    let p = 2.0 * (2.0 - lambda) / (3.0 - lambda);
    Ok(l2 / (powf(l1, p) * powf(e, 1.0 / (3.0 - lambda))))
}

/// Continuous piecewise-linear function on a sorted grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::Invalid("piecewise-linear needs >= 2 matching nodes and values"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("piecewise-linear nodes must increase"));
        }
        Ok(Self { nodes, values })
    }

    /// Uniform grid on `[0, x_max]` carrying `values`.
    pub fn uniform(x_max: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::Invalid("piecewise-linear needs >= 2 values"));
        }
        let h = x_max / (n - 1) as f64;
        Self::new((0..n).map(|i| i as f64 * h).collect(), values)
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (x[0], x[1], v[0], v[1]))
    }

    /// `∫ |f|`.
    pub fn l1(&self) -> f64 {
        ksum(self.cells().map(|(x0, x1, a, b)| {
            let h = x1 - x0;
            if a * b >= 0.0 {
                0.5 * h * (a.abs() + b.abs())
            } else {
                0.5 * h * (a * a + b * b) / (a.abs() + b.abs())
            }
        }))
    }

    /// `∫ f`.
    pub fn integral(&self) -> f64 {
        ksum(self.cells().map(|(x0, x1, a, b)| 0.5 * (x1 - x0) * (a + b)))
    }

    /// `∫ f²`.
    pub fn l2_sq(&self) -> f64 {
        ksum(self.cells().map(|(x0, x1, a, b)| (x1 - x0) * (a * a + a * b + b * b) / 3.0))
    }

    /// `ℰ_λ(f) = ∫ x^λ f'(x)² dx`.
    pub fn energy(&self, lambda: f64) -> f64 {
        ksum(self.cells().map(|(x0, x1, a, b)| {
            let s = (b - a) / (x1 - x0);
            let w = (powf(x1, lambda + 1.0) - powf(x0, lambda + 1.0)) / (lambda + 1.0);
            s * s * w
        }))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return self.values[0];
        }
        if x >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        let j = self.nodes.partition_point(|&y| y <= x) - 1;
        let t = (x - self.nodes[j]) / (self.nodes[j + 1] - self.nodes[j]);
        self.values[j] + t * (self.values[j + 1] - self.values[j])
    }
}

/// Piecewise-linear embedding of a lattice field: `f = U(1)` on `[0, 1]`,
/// linear between `(k, U(k))` and `(k+1, U(k+1))`, down to `U(N+1) = 0`.
pub fn cni_embedding(u: &[f64]) -> Result<PiecewiseLinear> {
    if u.is_empty() {
        return Err(Error::Invalid("empty field"));
    }
    let n = u.len();
    let mut nodes = Vec::with_capacity(n + 2);
    let mut values = Vec::with_capacity(n + 2);
    nodes.push(0.0);
    values.push(u[0]);
    for (i, &v) in u.iter().enumerate() {
        nodes.push((i + 1) as f64);
        values.push(v);
    }
    nodes.push((n + 1) as f64);
    values.push(0.0);
    PiecewiseLinear::new(nodes, values)
}

/// Nonincreasing rearrangement, exact for piecewise-linear input.
///
/// The distribution function `μ(t) = |{f > t}|` is piecewise linear between
/// node values, so `f*` is piecewise linear with nodes at `μ` of the sorted
/// node values (both one-sided limits, to keep flat pieces). The result lives
/// on `[x₀, x₀ + |domain|]` with its own grid.
pub fn decreasing_rearrangement(f: &PiecewiseLinear) -> Result<PiecewiseLinear> {
    if f.values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Invalid("rearrangement needs a finite nonnegative function"));
    }
    let x0 = f.nodes[0];
    // |{f > t}| (strict) or |{f >= t}|
    let measure = |t: f64, strict: bool| {
        ksum(f.cells().map(|(a, b, u, v)| {
            let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
            let h = b - a;
            if lo == hi {
                let inside = if strict { lo > t } else { lo >= t };
                if inside { h } else { 0.0 }
            } else if t >= hi {
                0.0
            } else if t < lo {
                h
            } else {
                h * (hi - t) / (hi - lo)
            }
        }))
    };
    let mut levels = f.values.clone();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut nodes: Vec<f64> = Vec::with_capacity(2 * levels.len());
    let mut values: Vec<f64> = Vec::with_capacity(2 * levels.len());
    let last = f.nodes[f.nodes.len() - 1];
    for &l in &levels {
        for strict in [true, false] {
            let x = (x0 + measure(l, strict)).min(last);
            if nodes.last().map_or(true, |&p| x > p) {
                nodes.push(x);
                values.push(l);
            } else if let Some(v) = values.last_mut() {
                // coincident position: keep the lower level (right limit)
                *v = v.min(l);
            }
        }
    }
    if nodes.len() == 1 {
        // constant input
        return Ok(PiecewiseLinear {
            nodes: alloc::vec![x0, last],
            values: alloc::vec![values[0], values[0]],
        });
    }
    Ok(PiecewiseLinear { nodes, values })
}

/// Outcome of the weighted Poincaré check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareReport {
    pub ratio: f64,
    pub bound: f64,
    pub exceeds_bound: bool,
}

/// `∫|f - f̄|² / (R^{2-λ} ∫ x^λ |f'|²)` on `[0, R]`, with `f̄` the Lebesgue mean.
pub fn poincare_check(f: &PiecewiseLinear, lambda: f64) -> Result<PoincareReport> {
    check_lambda(lambda)?;
    let r = f.nodes[f.nodes.len() - 1] - f.nodes[0];
    let mean = f.integral() / r;
    let centred = PiecewiseLinear {
        nodes: f.nodes.clone(),
        values: f.values.iter().map(|v| v - mean).collect(),
    };
    let e = f.energy(lambda);
    let num = centred.l2_sq();
    let bound = 1.0 / (2.0 * (2.0 - lambda) * (4.0 - lambda));
    if e <= 0.0 {
        if num <= 1e-30 {
            return Ok(PoincareReport {
                ratio: 0.0,
                bound,
                exceeds_bound: false,
            });
        }
        return Err(Error::Invalid("poincare_check: zero derivative"));
    }
    let ratio = num / (powf(r, 2.0 - lambda) * e);
    Ok(PoincareReport {
        ratio,
        bound,
        exceeds_bound: ratio > bound,
    })
}
