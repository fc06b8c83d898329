//! Seeded generators for the round-trip and range-search experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::PentagramUpb;
use crate::error::{Error, Result};
use crate::gupb::ProductVector;
use crate::json;
use crate::linalg::{kron_mat, projector, re, CMatrix, Tolerance};
use crate::rng::{complex_vector, special_linear, trial_rng};
use crate::states::{oupb_projector, PptState};

pub const PARAM_RANGE: (f64, f64) = (0.3, 3.0);
pub const MAX_CONDITION: f64 = 20.0;
pub const MIN_NOISE_WEIGHT: f64 = 1e-4;

/// A pentagram UPB projector moved by a random local unit-determinant map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PentagramSample {
    pub params: [f64; 4],
    pub upb: PentagramUpb,
    #[serde(with = "json::matrix")]
    pub a: CMatrix,
    #[serde(with = "json::matrix")]
    pub b: CMatrix,
    pub state: PptState,
}

impl PentagramSample {
    /// Kernel vectors of the moved state: `(A⊗B)^{-1}` applied to the UPB.
    pub fn kernel_products(&self) -> Result<Vec<ProductVector>> {
        let ai = self.a.clone().try_inverse().ok_or(Error::Singular)?;
        let bi = self.b.clone().try_inverse().ok_or(Error::Singular)?;
        Ok(self.upb.products().iter().map(|p| p.transformed(&[&ai, &bi])).collect())
    }
}

/// `(A⊗B)† P (A⊗B)` for a random pentagram UPB, trace one.
pub fn pentagram_sample(seed: u64, trial: u64, max_cond: f64, tol: &Tolerance) -> Result<PentagramSample> {
    let mut rng = trial_rng(seed, trial);
    let (lo, hi) = PARAM_RANGE;
    let params: [f64; 4] = std::array::from_fn(|_| rng.random_range(lo..=hi));
    let upb = PentagramUpb::from_parameters(params[0], params[1], params[2], params[3]);
    let a = special_linear(&mut rng, 3, max_cond);
    let b = special_linear(&mut rng, 3, max_cond);
    let proj = oupb_projector(&upb, tol)?;
    let local = kron_mat(&a, &b);
    let state = PptState::new(local.adjoint() * &proj.rho * &local, (3, 3), tol)?;
    Ok(PentagramSample {
        params,
        upb,
        a,
        b,
        state,
    })
}

/// Random product vectors and the uniform mixture of their projectors.
pub fn separable_mixture<R: Rng + ?Sized>(rng: &mut R, count: usize, dims: (usize, usize)) -> (CMatrix, Vec<ProductVector>) {
    let d = dims.0 * dims.1;
    let products: Vec<ProductVector> = (0..count)
        .map(|_| ProductVector::bipartite(complex_vector(rng, dims.0), complex_vector(rng, dims.1)).unit())
        .collect();
    let mut rho = CMatrix::zeros(d, d);
    for p in &products {
        rho += projector(&p.vector());
    }
    (rho / re(count as f64), products)
}

/// A PPT state on `C^2 ⊗ C^n`: between one and `2n` product projectors
/// plus a random pure component whose weight is halved until the PPT test
/// passes; the component is dropped once its weight falls below
/// `MIN_NOISE_WEIGHT`, so every kept eigenvalue clears the rank threshold.
pub fn ppt_mixture_2xn(seed: u64, trial: u64, n: usize, tol: &Tolerance) -> Result<PptState> {
    let mut rng = trial_rng(seed, trial);
    let products = rng.random_range(1..=2 * n);
    let (sep, _) = separable_mixture(&mut rng, products, (2, n));
    let noise = projector(&complex_vector(&mut rng, 2 * n).normalize());
    let mut weight: f64 = rng.random_range(0.05..0.5);
    while weight >= MIN_NOISE_WEIGHT {
        let mix = &sep * re(1.0 - weight) + &noise * re(weight);
        let state = PptState::new(mix, (2, n), tol)?;
        if state.is_ppt(tol) {
            return Ok(state);
        }
        weight *= 0.5;
    }
    PptState::new(sep, (2, n), tol)
}
