//! Independent product-vector finder used as an oracle: alternating least
//! squares from many seeded starting points.

#![allow(dead_code)]

use upblab::gupb::ProductVector;
use upblab::linalg::{fubini_study, kron, CMatrix, CVector};
use upblab::rng::{complex_vector, trial_rng};

fn smallest_right_vector(m: &CMatrix) -> CVector {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.unwrap();
    let k = (0..svd.singular_values.len())
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .unwrap();
    vt.row(k).adjoint()
}

/// Product vectors in the span of the orthonormal columns of `q`, found by
/// alternating minimization of the distance to the subspace.
pub fn als_products(q: &CMatrix, dims: (usize, usize), starts: usize, seed: u64) -> Vec<ProductVector> {
    let (n, m) = dims;
    let d = n * m;
    let perp = CMatrix::identity(d, d) - q * q.adjoint();
    let mut rng = trial_rng(seed, 0);
    let mut found: Vec<CVector> = Vec::new();
    let mut out = Vec::new();
    for _ in 0..starts {
        let mut phi = complex_vector(&mut rng, n).normalize();
        let mut psi = complex_vector(&mut rng, m).normalize();
        let mut res = f64::INFINITY;
        for _ in 0..3000 {
            let a = CMatrix::from_fn(d, m, |r, j| if r % m == j { phi[r / m] } else { Default::default() });
            psi = smallest_right_vector(&(&perp * a));
            let b = CMatrix::from_fn(d, n, |r, i| if r / m == i { psi[r % m] } else { Default::default() });
            phi = smallest_right_vector(&(&perp * b));
            res = (&perp * kron(&phi, &psi)).norm();
            if res < 1e-13 {
                break;
            }
        }
        if res > 1e-10 {
            continue;
        }
        let x = kron(&phi, &psi);
        if found.iter().all(|y| fubini_study(y, &x) > 1e-6) {
            found.push(x);
            out.push(ProductVector::bipartite(phi, psi));
        }
    }
    out
}

/// Orthonormal basis for the span of the given columns.
pub fn orthonormal(cols: &[CVector]) -> CMatrix {
    let m = CMatrix::from_columns(cols);
    let qr = m.qr();
    qr.q()
}
