//! Gauss–Legendre rules mapped onto finite intervals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{invalid, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let degree = NonZeroUsize::new(n).ok_or_else(|| invalid("quadrature needs at least one node"))?;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(invalid(format!("bad quadrature interval [{a}, {b}]")));
    }
    let rule = GaussLegendre::new(degree);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut pairs: Vec<(f64, f64)> =
        rule.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

/// Trapezoid rule on a (possibly non-uniform) ascending grid.
pub fn trapezoid<T>(x: &[f64], y: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    x.windows(2).zip(y.windows(2)).fold(T::default(), |acc, (xs, ys)| acc + (ys[0] + ys[1]) * (0.5 * (xs[1] - xs[0])))
}
