//! Univariate helpers: interpolation on roots of unity and companion-matrix
//! root finding.

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix, ONE, ZERO};

/// The `k`-th of `n` roots of unity.
pub fn root_of_unity(k: usize, n: usize) -> C64 {
    C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64)
}

/// Coefficients (ascending) of the polynomial of degree below `values.len()`
/// that takes `values[k]` at the `k`-th root of unity.
pub fn interpolate_roots_of_unity(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            values
                .iter()
                .enumerate()
                .map(|(k, v)| v * root_of_unity((n - (j * k) % n) % n, n))
                .sum::<C64>()
                / n as f64
        })
        .collect()
}

pub fn eval(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * x + c)
}

fn eval_with_derivative(coeffs: &[C64], x: C64) -> (C64, C64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Drop leading coefficients below `rel` times the largest one.
pub fn trim(coeffs: &[C64], rel: f64) -> Vec<C64> {
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut out = coeffs.to_vec();
    while out.last().is_some_and(|c| c.norm() <= rel * max) {
        out.pop();
    }
    out
}

/// All roots of a polynomial with ascending coefficients, polished by a few
/// Newton steps. Fails on the zero polynomial.
pub fn roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let c = trim(coeffs, 1e-14);
    if c.is_empty() {
        return Err(Error::Degenerate("zero polynomial".into()));
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut comp = CMatrix::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = ONE;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let schur = Schur::try_new(comp, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("companion Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut out: Vec<C64> = (0..deg).map(|i| t[(i, i)]).collect();
    for z in &mut out {
        for _ in 0..4 {
            let (p, dp) = eval_with_derivative(&c, *z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let next = *z - step;
            if eval(&c, next).norm() <= p.norm() {
                *z = next;
            } else {
                break;
            }
        }
    }
    Ok(out)
}
