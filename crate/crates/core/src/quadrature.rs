//! Adaptive Gauss–Kronrod quadrature and polynomial extrapolation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> Vec<f64>>(f: &F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let dim = fc.len();
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for d in 0..dim {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            k[d] += WGK[j] * s;
            if j % 2 == 1 {
                g[d] += WG[j / 2] * s;
            }
        }
    }
    let mut error: f64 = 0.0;
    for d in 0..dim {
        k[d] *= half;
        g[d] *= half;
        error = error.max((k[d] - g[d]).abs());
    }
    Piece {
        a,
        b,
        value: k,
        error,
    }
}

/// Globally adaptive G7–K15 quadrature of a vector-valued integrand; the
/// error is measured in the max norm.
pub fn integrate_vec<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral<Vec<f64>>>
where
    F: Fn(f64) -> Vec<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    let first = kronrod(&f, a, b);
    let dim = first.value.len();
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut evaluations = 15;
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for p in heap.iter() {
            for d in 0..dim {
                total[d] += p.value[d];
            }
            err += p.error;
        }
        if total.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature("integrand produced non-finite values".into()));
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= cfg.abs_tol.max(cfg.rel_tol * scale) {
            return Ok(Integral {
                value: total,
                error: err,
                intervals: heap.len(),
                evaluations,
            });
        }
        if heap.len() >= cfg.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:.3e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature("interval collapsed below machine resolution".into()));
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
        evaluations += 30;
    }
}

pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral<f64>>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_vec(|x| vec![f(x)], a, b, cfg)?;
    Ok(Integral {
        value: r.value[0],
        error: r.error,
        intervals: r.intervals,
        evaluations: r.evaluations,
    })
}

/// Neville extrapolation of samples `(x_i, y_i)` to `x = 0`.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let r = integrate(|x: f64| (-x * x).exp(), 0.0, 6.0, &QuadratureConfig::default()).unwrap();
        let exact = 0.5 * std::f64::consts::PI.sqrt() * libm::erf(6.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_needs_subdivision() {
        let r = integrate(|x: f64| (40.0 * x).sin(), 0.0, 3.0, &QuadratureConfig::default()).unwrap();
        let exact = (1.0 - (120.0f64).cos()) / 40.0;
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.intervals > 1);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let cfg = QuadratureConfig {
            max_intervals: 4,
            ..Default::default()
        };
        assert!(integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn neville_recovers_polynomial() {
        let xs = [0.4, 0.2, 0.1];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x - x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 3.0).abs() < 1e-13);
    }
}
