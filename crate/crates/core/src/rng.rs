//! Seeded randomness for harnesses and tests.
//!
//! Every trial draws from its own ChaCha20 stream: the key comes from the run
//! seed and the stream id is the trial index, so trials are independent of
//! scheduling and reproducible across platforms.

use nalgebra as na;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{C64, CMatrix, CVector, condition_number, re};

pub const ALGORITHM: &str = "chacha20-stream/v1";

pub type TrialRng = ChaCha20Rng;

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| complex_normal(rng))
}

pub fn real_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| re(rng.sample(StandardNormal)))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    complex_vector(rng, dim).normalize()
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = na::QR::new(ginibre(rng, dim, dim));
    let (q, r) = qr.unpack();
    let phases = CVector::from_fn(dim, |k, _| {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            re(1.0)
        }
    });
    q * CMatrix::from_diagonal(&phases)
}

/// Unit-determinant matrix `U diag(d) V` with singular values spread
/// log-uniformly so that the condition number never exceeds `max_cond`.
pub fn special_linear<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_cond: f64) -> CMatrix {
    assert!(max_cond >= 1.0);
    let spread = max_cond.ln();
    let mut logs: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..=1.0) * spread).collect();
    let mean = logs.iter().sum::<f64>() / dim as f64;
    for l in &mut logs {
        *l -= mean;
    }
    let d = CVector::from_iterator(dim, logs.iter().map(|l| re(l.exp())));
    let u = unitary(rng, dim);
    let v = unitary(rng, dim);
    let a = u * CMatrix::from_diagonal(&d) * v;
    let det = a.determinant();
    let a = a * (re(1.0) / crate::linalg::cbrt(det));
    debug_assert!(condition_number(&a) <= max_cond * (1.0 + 1e-9));
    a
}
