//! Local SL(3)⊗SL(3) normal forms of five product vectors in `C^3 ⊗ C^3`.
//!
//! Five vectors with independent triples on both sides are reduced to
//! `(e1, e2, e3, (1,1,1), (1,p,q))` and `(e1, e2, e3, (1,1,1), (1,r,s))`.
//! Cross-ratio invariants decide whether some ordering of the vectors can be
//! brought to an orthogonal pentagram.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gupb::{is_minimal_gupb, ProductVector};
use crate::json;
use crate::linalg::{
    cross3, cvec, det3, kron_mat, re, rvec, sl_normalize, C64, CMatrix, CVector, Tolerance, ONE,
    ZERO,
};

pub type Permutation = [usize; 5];

/// Coset representatives of the pentagon symmetry group in S5, one-based.
pub const PENTAGON_PERMUTATIONS: [Permutation; 12] = [
    [1, 2, 3, 4, 5],
    [1, 3, 2, 4, 5],
    [2, 1, 3, 4, 5],
    [2, 3, 1, 4, 5],
    [3, 1, 2, 4, 5],
    [3, 2, 1, 4, 5],
    [1, 2, 4, 3, 5],
    [1, 4, 2, 3, 5],
    [2, 1, 4, 3, 5],
    [2, 4, 1, 3, 5],
    [1, 3, 4, 2, 5],
    [1, 4, 3, 2, 5],
];

/// Reordering that turns the second-factor orthogonality pattern
/// (`j ⟂ j+2`) into the first-factor one (`i ⟂ i+1`).
pub const SECOND_FACTOR_ORDER: Permutation = [1, 3, 5, 2, 4];

pub fn pentagon_permutations() -> Vec<Permutation> {
    PENTAGON_PERMUTATIONS.to_vec()
}

/// The ten symmetries of a regular pentagon acting on labels 1..5.
pub fn pentagon_group() -> Vec<Permutation> {
    let mut out = Vec::with_capacity(10);
    for k in 0..5 {
        out.push(std::array::from_fn(|i| (i + k) % 5 + 1));
        out.push(std::array::from_fn(|i| (5 + k - i) % 5 + 1));
    }
    out
}

/// `out[i] = items[perm[i] - 1]`.
pub fn permute<T: Clone>(items: &[T], perm: &Permutation) -> Vec<T> {
    perm.iter().map(|&k| items[k - 1].clone()).collect()
}

/// `(f∘g)(i) = f(g(i))`.
pub fn compose(f: &Permutation, g: &Permutation) -> Permutation {
    std::array::from_fn(|i| f[g[i] - 1])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantQuadruple {
    #[serde(with = "json::complex")]
    pub s1: C64,
    #[serde(with = "json::complex")]
    pub s2: C64,
    #[serde(with = "json::complex")]
    pub s3: C64,
    #[serde(with = "json::complex")]
    pub s4: C64,
}

/// Real part above `1e-10` with imaginary part below `1e-8 (1 + |Re|)`.
pub fn is_real_positive(z: C64) -> bool {
    z.im.abs() <= 1e-8 * (1.0 + z.re.abs()) && z.re > 1e-10
}

impl InvariantQuadruple {
    pub fn values(&self) -> [C64; 4] {
        [self.s1, self.s2, self.s3, self.s4]
    }

    pub fn all_real_positive(&self) -> bool {
        self.values().into_iter().all(is_real_positive)
    }

    pub fn max_relative_difference(&self, other: &Self) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(1e-300))
            .fold(0.0, f64::max)
    }
}

fn checked_ratio(num: [C64; 2], den: [(C64, f64); 2], label: &str) -> Result<C64> {
    for (d, scale) in den {
        if d.norm() <= 1e-13 * scale {
            return Err(Error::VanishingDenominator(label.into()));
        }
    }
    Ok(-(num[0] * num[1]) / (den[0].0 * den[1].0))
}

fn det_scaled(v: &[CVector], i: usize, j: usize, k: usize) -> (C64, f64) {
    (det3(&v[i - 1], &v[j - 1], &v[k - 1]), v[i - 1].norm() * v[j - 1].norm() * v[k - 1].norm())
}

fn pair_invariants(v: &[CVector], label: [&str; 2]) -> Result<(C64, C64)> {
    let d = |i, j, k| det_scaled(v, i, j, k);
    let s1 = checked_ratio([d(1, 2, 4).0, d(1, 3, 5).0], [d(1, 2, 5), d(1, 3, 4)], label[0])?;
    let s2 = checked_ratio([d(1, 2, 3).0, d(2, 4, 5).0], [d(1, 2, 4), d(2, 3, 5)], label[1])?;
    Ok((s1, s2))
}

/// Determinant cross-ratios of five first factors and five second factors.
pub fn invariants(phis: &[CVector], psis: &[CVector]) -> Result<InvariantQuadruple> {
    if phis.len() != 5 || psis.len() != 5 || phis.iter().chain(psis).any(|v| v.len() != 3) {
        return Err(Error::Dimension("invariants need five vectors in C^3 on each side".into()));
    }
    let (s1, s2) = pair_invariants(phis, ["s1", "s2"])?;
    let d = |i, j, k| det_scaled(psis, i, j, k);
    let s3 = checked_ratio([d(1, 3, 2).0, d(1, 5, 4).0], [d(1, 3, 4), d(1, 5, 2)], "s3")?;
    let s4 = checked_ratio([d(1, 3, 5).0, d(3, 2, 4).0], [d(1, 3, 2), d(3, 5, 4)], "s4")?;
    Ok(InvariantQuadruple { s1, s2, s3, s4 })
}

pub fn invariants_of(vectors: &[ProductVector]) -> Result<InvariantQuadruple> {
    let phis: Vec<CVector> = vectors.iter().map(|v| v.phi().clone()).collect();
    let psis: Vec<CVector> = vectors.iter().map(|v| v.psi().clone()).collect();
    invariants(&phis, &psis)
}

/// Closed-form invariants of the canonical vectors reordered by the
/// permutation with one-based index `perm_index`.
pub fn invariants_table1(p: C64, q: C64, r: C64, s: C64, perm_index: usize) -> Result<InvariantQuadruple> {
    let nz = |x: C64, name: &str| -> Result<C64> {
        if x.norm() <= 1e-300 {
            Err(Error::VanishingDenominator(name.into()))
        } else {
            Ok(x)
        }
    };
    let one = ONE;
    let (pp, qq, rr, ss) = (p - one, q - one, r - one, s - one);
    let (pq, rs) = (p - q, r - s);
    let inv = |x: C64, name: &str| nz(x, name).map(|x| one / x);
    let quad = |s1, s2, s3, s4| InvariantQuadruple { s1, s2, s3, s4 };
    Ok(match perm_index {
        1 => quad(-p * inv(q, "q")?, qq, rs * inv(s, "s")?, -r * inv(rr, "r-1")?),
        2 => quad(-q * inv(p, "p")?, pp, -rs * inv(r, "r")?, -s * inv(ss, "s-1")?),
        3 => quad(-inv(q, "q")?, -pq * inv(p, "p")?, -ss * inv(s, "s")?, inv(rr, "r-1")?),
        4 => quad(-q, -pp * inv(p, "p")?, ss, s * inv(rs, "r-s")?),
        5 => quad(-inv(p, "p")?, pq * inv(q, "q")?, -rr * inv(r, "r")?, inv(ss, "s-1")?),
        6 => quad(-p, -qq * inv(q, "q")?, rr, -r * inv(rs, "r-s")?),
        7 => quad(pq * inv(q, "q")?, inv(qq, "q-1")?, -r * inv(s, "s")?, -rs * inv(rr, "r-1")?),
        8 => quad(q * inv(pq, "p-q")?, -pp * inv(qq, "q-1")?, -r * inv(rs, "r-s")?, -s),
        9 => quad(-qq * inv(q, "q")?, -p * inv(pq, "p-q")?, -inv(s, "s")?, -ss * inv(rr, "r-1")?),
        10 => quad(-q * inv(qq, "q-1")?, -pp * inv(pq, "p-q")?, inv(ss, "s-1")?, -s * inv(r, "r")?),
        11 => quad(-pq * inv(p, "p")?, inv(pp, "p-1")?, -s * inv(r, "r")?, rs * inv(ss, "s-1")?),
        12 => quad(-p * inv(pq, "p-q")?, -qq * inv(pp, "p-1")?, s * inv(rs, "r-s")?, -r),
        _ => return Err(Error::Input(format!("permutation index {perm_index} outside 1..=12"))),
    })
}

/// The canonical first factors `(e1, e2, e3, (1,1,1), (1,x,y))`.
pub fn canonical_factors(x: C64, y: C64) -> Vec<CVector> {
    vec![
        rvec(&[1., 0., 0.]),
        rvec(&[0., 1., 0.]),
        rvec(&[0., 0., 1.]),
        rvec(&[1., 1., 1.]),
        cvec(&[ONE, x, y]),
    ]
}

pub fn canonical_vectors(p: C64, q: C64, r: C64, s: C64) -> Vec<ProductVector> {
    canonical_factors(p, q)
        .into_iter()
        .zip(canonical_factors(r, s))
        .map(|(a, b)| ProductVector::bipartite(a, b))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalFive {
    #[serde(with = "json::complex")]
    pub p: C64,
    #[serde(with = "json::complex")]
    pub q: C64,
    #[serde(with = "json::complex")]
    pub r: C64,
    #[serde(with = "json::complex")]
    pub s: C64,
    /// acts on the first factor, unit determinant
    #[serde(with = "json::matrix")]
    pub a: CMatrix,
    /// acts on the second factor, unit determinant
    #[serde(with = "json::matrix")]
    pub b: CMatrix,
    /// `scales[i] (A⊗B)(φ_i⊗ψ_i)` is the i-th canonical vector
    #[serde(with = "json::complex_list")]
    pub scales: Vec<C64>,
    /// one-based order applied to the inputs before reduction
    pub ordering: Permutation,
    pub residual: f64,
}

impl CanonicalFive {
    pub fn local(&self) -> CMatrix {
        kron_mat(&self.a, &self.b)
    }

    pub fn targets(&self) -> Vec<ProductVector> {
        canonical_vectors(self.p, self.q, self.r, self.s)
    }

    pub fn max_imag(&self) -> f64 {
        [self.p, self.q, self.r, self.s]
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    /// Real parameters when every imaginary part is below `tol (1 + |Re|)`.
    pub fn real_params(&self, tol: f64) -> Option<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, z) in out.iter_mut().zip([self.p, self.q, self.r, self.s]) {
            if z.im.abs() > tol * (1.0 + z.re.abs()) {
                return None;
            }
            *o = z.re;
        }
        Some(out)
    }
}

fn first_dependent_triple(v: &[CVector]) -> Option<[usize; 3]> {
    for i in 0..5 {
        for j in i + 1..5 {
            for k in j + 1..5 {
                let scale = v[i].norm() * v[j].norm() * v[k].norm();
                if det3(&v[i], &v[j], &v[k]).norm() <= 1e-10 * scale {
                    return Some([i + 1, j + 1, k + 1]);
                }
            }
        }
    }
    None
}

pub fn check_triples(v: &[CVector], side: &'static str) -> Result<()> {
    match first_dependent_triple(v) {
        Some(triple) => Err(Error::DependentTriple { side, triple }),
        None => Ok(()),
    }
}

/// Map taking the first three vectors to multiples of the basis and the
/// fourth to `(1,1,1)`; returns the matrix and the image of the fifth,
/// normalized to leading entry one.
fn frame_map(v: &[CVector]) -> Result<(CMatrix, CVector)> {
    let frame = CMatrix::from_columns(&[v[0].clone(), v[1].clone(), v[2].clone()]);
    let inv = frame.try_inverse().ok_or(Error::Singular)?;
    let coeffs = &inv * &v[3];
    let d = CMatrix::from_diagonal(&coeffs.map(|z| ONE / z));
    let map = d * inv;
    let fifth = &map * &v[4];
    let fifth = &fifth / fifth[0];
    Ok((map, fifth))
}

/// Scale each image onto its target; returns the scales and the largest
/// relative mismatch.
fn fit_scales(map: &CMatrix, inputs: &[CVector], targets: &[CVector]) -> (Vec<C64>, f64) {
    let mut scales = Vec::with_capacity(inputs.len());
    let mut worst = 0.0f64;
    for (x, t) in inputs.iter().zip(targets) {
        let img = map * x;
        let k = (0..t.len())
            .max_by(|&i, &j| t[i].norm().total_cmp(&t[j].norm()))
            .unwrap_or(0);
        let sc = t[k] / img[k];
        worst = worst.max((img * sc - t).norm() / t.norm());
        scales.push(sc);
    }
    (scales, worst)
}

/// Reduce five product vectors with independent triples to canonical form.
pub fn canonical_five(vectors: &[ProductVector]) -> Result<CanonicalFive> {
    if vectors.len() != 5 {
        return Err(Error::WrongCount {
            expected: 5,
            got: vectors.len(),
        });
    }
    if vectors.iter().any(|v| v.dims() != [3, 3]) {
        return Err(Error::Dimension("canonical form needs 3x3 product vectors".into()));
    }
    let phis: Vec<CVector> = vectors.iter().map(|v| v.phi().clone()).collect();
    let psis: Vec<CVector> = vectors.iter().map(|v| v.psi().clone()).collect();
    check_triples(&phis, "first-factor")?;
    check_triples(&psis, "second-factor")?;
    let (a0, f5) = frame_map(&phis)?;
    let (b0, g5) = frame_map(&psis)?;
    let a = sl_normalize(&a0)?;
    let b = sl_normalize(&b0)?;
    let (p, q, r, s) = (f5[1], f5[2], g5[1], g5[2]);
    let (sa, ra) = fit_scales(&a, &phis, &canonical_factors(p, q));
    let (sb, rb) = fit_scales(&b, &psis, &canonical_factors(r, s));
    let residual = ra.max(rb);
    if residual > 1e-8 {
        return Err(Error::Numerical(format!("canonical round-trip residual {residual:.3e}")));
    }
    Ok(CanonicalFive {
        p,
        q,
        r,
        s,
        a,
        b,
        scales: sa.iter().zip(&sb).map(|(x, y)| x * y).collect(),
        ordering: [1, 2, 3, 4, 5],
        residual,
    })
}

/// Five vectors in `C^3` whose consecutive members are orthogonal.
pub fn pentagram_pattern(a: f64, b: f64) -> Vec<CVector> {
    vec![
        rvec(&[1., 0., 0.]),
        rvec(&[0., 1., 0.]),
        rvec(&[a, 0., b]),
        rvec(&[b, 1., -a]),
        rvec(&[0., a, 1.]),
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PentagramForm {
    /// unit determinant
    #[serde(with = "json::matrix")]
    pub transform: CMatrix,
    #[serde(with = "json::complex_list")]
    pub scales: Vec<C64>,
    pub a: f64,
    pub b: f64,
    /// largest relative mismatch against the target pattern
    pub residual: f64,
    /// phase consistency defect before correction, in radians
    pub phase_defect: f64,
}

fn wrap_angle(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let y = x.rem_euclid(tau);
    if y > std::f64::consts::PI {
        y - tau
    } else {
        y
    }
}

/// Square root with argument in `[0, π)`.
pub fn upper_sqrt(z: C64) -> C64 {
    let w = z.sqrt();
    if w.im < 0.0 || (w.im == 0.0 && w.re < 0.0) {
        -w
    } else {
        w
    }
}

/// SL(3) map taking five vectors, in order, to the pentagram pattern with
/// `a = √s1` and `b = √(s1 s2)`.
pub fn pentagram_form(vectors: &[CVector]) -> Result<PentagramForm> {
    if vectors.len() != 5 || vectors.iter().any(|v| v.len() != 3) {
        return Err(Error::Dimension("pentagram form needs five vectors in C^3".into()));
    }
    check_triples(vectors, "input")?;
    let (s1, s2) = pair_invariants(vectors, ["s1", "s2"])?;
    for (name, val) in [("s1", s1), ("s2", s2)] {
        if !is_real_positive(val) {
            return Err(Error::NotPentagram(format!("{name} = {val}")));
        }
    }
    let v = vectors;

    // first two vectors to the basis, the fifth to (0, z, 1)
    let row1 = cross3(&v[1], &v[4]);
    let row2 = cross3(&v[0], &v[2]);
    let row3 = cross3(&v[0], &v[1]);
    let row1 = &row1 / row1.dot(&v[0]);
    let row2 = &row2 / row2.dot(&v[1]);
    let row3 = &row3 / row3.dot(&v[4]);
    let t1 = CMatrix::from_rows(&[row1.transpose(), row2.transpose(), row3.transpose()]);
    let col3 = &t1 * &v[2];
    let col4 = &t1 * &v[3];
    let col4 = &col4 / col4[1];
    let z = (&t1 * &v[4])[1];
    let (x, t, y, u) = (col3[0], col3[2], col4[0], col4[2]);

    // u = -ρ z* with ρ > 0; rescale so that z becomes √s1
    let rho = -u / z.conj();
    let rprime = rho * z.conj() / z;
    let mut w = upper_sqrt(rprime);
    if (z * w).re < 0.0 {
        w = -w;
    }
    let quarter = w.sqrt();
    let d = CMatrix::from_diagonal(&cvec(&[ONE, quarter, ONE / quarter]));
    let a = (z * w).re;
    let x1 = x;
    let t1p = t / quarter;
    let y1 = y / quarter;

    // phases: α + α1 = -arg y', α4 - α = -arg t', α1 + α4 = -arg x'
    let (ay, at, ax) = (y1.arg(), t1p.arg(), x1.arg());
    let phase_defect = wrap_angle(ay + at - ax);
    // the system has rank two; make the right-hand side consistent exactly
    let ax = ay + at;
    let sys = CMatrix::from_row_slice(
        3,
        3,
        &[ONE, ONE, ZERO, -ONE, ZERO, ONE, ZERO, ONE, ONE],
    );
    let rhs = cvec(&[re(-ay), re(-at), re(-ax)]);
    let sol = sys
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(format!("phase system: {e}")))?;
    let (alpha, al1) = (sol[0].re, sol[1].re);
    // unit determinant on the row side; column phases absorb the shift
    let beta = -(al1 - 2.0 * alpha) / 3.0;
    let (al1, al2, al3) = (al1 + beta, beta - alpha, beta - alpha);

    // moduli
    let (rx, ry, rt) = (x1.norm(), y1.norm(), t1p.norm());
    let k = a * rt / (rx * ry);
    let r = k.powf(-1.0 / 6.0);
    let m1 = r * k.sqrt();
    let (m2, m3) = (r, r);
    let b = (a * ry * rt / rx).sqrt();
    let zeta = |m: f64, ang: f64| C64::from_polar(m, ang);
    let zdiag = CMatrix::from_diagonal(&cvec(&[zeta(m1, al1), zeta(m2, al2), zeta(m3, al3)]));

    let transform = sl_normalize(&(zdiag * d * t1))?;
    let targets = pentagram_pattern(a, b);
    let (scales, residual) = fit_scales(&transform, v, &targets);
    if residual > 1e-8 {
        return Err(Error::Numerical(format!("pentagram residual {residual:.3e}")));
    }
    Ok(PentagramForm {
        transform,
        scales,
        a,
        b,
        residual,
        phase_defect: phase_defect.abs(),
    })
}

/// Five product vectors with `v_i ⟂ v_{i+1}` and `w_j ⟂ w_{j+2}` (cyclic).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PentagramUpb {
    #[serde(with = "json::vectors")]
    pub v: Vec<CVector>,
    #[serde(with = "json::vectors")]
    pub w: Vec<CVector>,
}

impl PentagramUpb {
    /// Unit vectors from pattern parameters on each side.
    pub fn from_parameters(a: f64, b: f64, a2: f64, b2: f64) -> Self {
        let v: Vec<CVector> = pentagram_pattern(a, b).iter().map(|x| x.normalize()).collect();
        let pattern: Vec<CVector> = pentagram_pattern(a2, b2).iter().map(|x| x.normalize()).collect();
        PentagramUpb {
            v,
            w: unorder_second(&pattern),
        }
    }

    pub fn products(&self) -> Vec<ProductVector> {
        self.v
            .iter()
            .zip(&self.w)
            .map(|(a, b)| ProductVector::bipartite(a.clone(), b.clone()))
            .collect()
    }

    /// Largest violated orthogonality relation.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..5 {
            let a = &self.v[i];
            let b = &self.v[(i + 1) % 5];
            worst = worst.max(a.dotc(b).norm() / (a.norm() * b.norm()));
            let a = &self.w[i];
            let b = &self.w[(i + 2) % 5];
            worst = worst.max(a.dotc(b).norm() / (a.norm() * b.norm()));
        }
        worst
    }

    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        if self.v.len() != 5 || self.w.len() != 5 {
            return Err(Error::Input("a pentagram UPB has five vectors per side".into()));
        }
        let res = self.orthogonality_residual();
        if res > 1e-10_f64.max(tol.residual * 1e-2) {
            return Err(Error::Precondition(format!("orthogonality residual {res:.3e}")));
        }
        if !is_minimal_gupb(&self.products(), (3, 3), tol)?.verdict {
            return Err(Error::Precondition("pentagram vectors are not a gUPB".into()));
        }
        Ok(())
    }
}

/// Put vectors listed in pattern order back in second-factor order.
fn unorder_second(pattern: &[CVector]) -> Vec<CVector> {
    let mut w = vec![CVector::zeros(3); 5];
    for (i, &j) in SECOND_FACTOR_ORDER.iter().enumerate() {
        w[j - 1] = pattern[i].clone();
    }
    w
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Orthogonalization {
    Orthogonalized {
        #[serde(with = "json::matrix")]
        a: CMatrix,
        #[serde(with = "json::matrix")]
        b: CMatrix,
        /// one-based index into the twelve representatives
        permutation: usize,
        order: Permutation,
        invariants: InvariantQuadruple,
        upb: PentagramUpb,
        residual: f64,
    },
    NotOrthogonalizable {
        scan: Vec<Option<InvariantQuadruple>>,
    },
}

/// Invariants of the inputs under each of the twelve representative orders.
pub fn invariant_scan(vectors: &[ProductVector]) -> Vec<Option<InvariantQuadruple>> {
    PENTAGON_PERMUTATIONS
        .iter()
        .map(|perm| invariants_of(&permute(vectors, perm)).ok())
        .collect()
}

/// Search the twelve orders for one whose invariants are all positive and
/// map the inputs onto an orthogonal pentagram UPB.
pub fn orthogonalize_upb(vectors: &[ProductVector], tol: &Tolerance) -> Result<Orthogonalization> {
    if vectors.len() != 5 {
        return Err(Error::WrongCount {
            expected: 5,
            got: vectors.len(),
        });
    }
    if !is_minimal_gupb(vectors, (3, 3), tol)?.verdict {
        return Err(Error::Precondition("input is not a minimal gUPB".into()));
    }
    let scan = invariant_scan(vectors);
    for (idx, (perm, inv)) in PENTAGON_PERMUTATIONS.iter().zip(&scan).enumerate() {
        let Some(inv) = inv else { continue };
        if !inv.all_real_positive() {
            continue;
        }
        let ordered = permute(vectors, perm);
        let phis: Vec<CVector> = ordered.iter().map(|v| v.phi().clone()).collect();
        let psis: Vec<CVector> = ordered.iter().map(|v| v.psi().clone()).collect();
        let first = pentagram_form(&phis)?;
        let second = pentagram_form(&permute(&psis, &SECOND_FACTOR_ORDER))?;
        let v: Vec<CVector> = phis.iter().map(|x| (&first.transform * x).normalize()).collect();
        let w: Vec<CVector> = psis.iter().map(|x| (&second.transform * x).normalize()).collect();
        let upb = PentagramUpb { v, w };
        let residual = first.residual.max(second.residual).max(upb.orthogonality_residual());
        return Ok(Orthogonalization::Orthogonalized {
            a: first.transform,
            b: second.transform,
            permutation: idx + 1,
            order: *perm,
            invariants: *inv,
            upb,
            residual,
        });
    }
    Ok(Orthogonalization::NotOrthogonalizable { scan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gupb::vandermonde_gupb;
    use crate::linalg::c;
    use crate::rng::{complex_vector, special_linear, trial_rng};
    use rand::Rng;
    use crate::signtables::{atoms, positive_table1_rows};

    fn rc(x: f64) -> C64 {
        re(x)
    }

    fn sample_params() -> (C64, C64, C64, C64) {
        (rc(-1.0), rc(2.0), rc(0.5), rc(0.25))
    }

    #[test]
    fn canonical_input_is_fixed() {
        let (p, q, r, s) = sample_params();
        let v = canonical_vectors(p, q, r, s);
        let cf = canonical_five(&v).unwrap();
        for (got, want) in [(cf.p, p), (cf.q, q), (cf.r, r), (cf.s, s)] {
            assert!((got - want).norm() < 1e-14);
        }
        let id = CMatrix::identity(3, 3);
        assert!((&cf.a - &id).norm() < 1e-13);
        assert!((&cf.b - &id).norm() < 1e-13);
    }

    #[test]
    fn dependent_triple_is_named() {
        let mut v = canonical_vectors(rc(-1.0), rc(2.0), rc(0.5), rc(0.25));
        v[4] = ProductVector::bipartite(rvec(&[1., 1., 0.]), v[4].psi().clone());
        match canonical_five(&v) {
            Err(Error::DependentTriple { side, triple }) => {
                assert_eq!(side, "first-factor");
                assert_eq!(triple, [1, 2, 5]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table1_first_row_at_sample_point() {
        let (p, q, r, s) = sample_params();
        let t = invariants_table1(p, q, r, s, 1).unwrap();
        let expect = [0.5, 1.0, 1.0, 1.0];
        for (got, want) in t.values().iter().zip(expect) {
            assert!((got - rc(want)).norm() < 1e-14);
        }
        let v = canonical_vectors(p, q, r, s);
        let d = invariants_of(&v).unwrap();
        assert!(d.max_relative_difference(&t) < 1e-12);
        assert!(invariants_table1(p, q, r, s, 13).is_err());
        let s8 = invariants_table1(rc(2.0), rc(3.0), rc(0.5), rc(0.7), 8).unwrap();
        assert!((s8.s4 - rc(-0.7)).norm() < 1e-15);
    }

    #[test]
    fn table1_rows_match_determinants() {
        let mut rng = trial_rng(99, 0);
        for _ in 0..10 {
            let z = complex_vector(&mut rng, 4);
            let v = canonical_vectors(z[0], z[1], z[2], z[3]);
            for (k, perm) in PENTAGON_PERMUTATIONS.iter().enumerate() {
                let det = invariants_of(&permute(&v, perm)).unwrap();
                let closed = invariants_table1(z[0], z[1], z[2], z[3], k + 1).unwrap();
                assert!(det.max_relative_difference(&closed) < 1e-10, "row {}", k + 1);
            }
        }
    }

    #[test]
    fn invariants_ignore_scaling_and_local_maps() {
        let mut rng = trial_rng(5, 1);
        let v: Vec<ProductVector> = (0..5)
            .map(|_| ProductVector::bipartite(complex_vector(&mut rng, 3), complex_vector(&mut rng, 3)))
            .collect();
        let base = invariants_of(&v).unwrap();
        let a = special_linear(&mut rng, 3, 20.0);
        let b = special_linear(&mut rng, 3, 20.0);
        let mut moved: Vec<ProductVector> = v.iter().map(|x| x.transformed(&[&a, &b])).collect();
        moved[2].factors[0] *= c(7.0, 0.0);
        moved[3].factors[1] *= c(0.0, -2.0);
        assert!(base.max_relative_difference(&invariants_of(&moved).unwrap()) < 1e-10);
    }

    #[test]
    fn pentagon_group_cosets() {
        let group = pentagon_group();
        assert_eq!(group.len(), 10);
        let reps = pentagon_permutations();
        assert_eq!(reps.len(), 12);
        assert_eq!(reps[0], [1, 2, 3, 4, 5]);
        let mut all = Vec::new();
        for r in &reps {
            for g in &group {
                all.push(compose(g, r));
            }
        }
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 120);
    }

    #[test]
    fn pentagram_pattern_values() {
        let pat = pentagram_pattern(1.3, 0.7);
        let inv = invariants(&pat, &pat).unwrap();
        assert!((inv.s1 - rc(1.3 * 1.3)).norm() < 1e-12);
        assert!((inv.s2 - rc(0.49 / 1.69)).norm() < 1e-12);
        for i in 0..5 {
            assert!(pat[i].dotc(&pat[(i + 1) % 5]).norm() < 1e-15);
        }
    }

    #[test]
    fn pentagram_form_fixes_its_own_pattern() {
        let pat = pentagram_pattern(1.0, 1.0);
        let f = pentagram_form(&pat).unwrap();
        assert!((f.a - 1.0).abs() < 1e-12 && (f.b - 1.0).abs() < 1e-12);
        assert!((&f.transform - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn pentagram_form_on_moved_patterns() {
        let mut rng = trial_rng(8, 0);
        for trial in 0..30 {
            let a = 0.3 + 2.7 * (trial as f64 / 29.0);
            let b = 3.0 - 2.5 * (trial as f64 / 29.0);
            let m = special_linear(&mut rng, 3, 20.0);
            let moved: Vec<CVector> = pentagram_pattern(a, b)
                .iter()
                .map(|x| (&m * x) * complex_vector(&mut rng, 1)[0])
                .collect();
            let f = pentagram_form(&moved).unwrap();
            assert!((f.a - a).abs() < 1e-9 && (f.b - b).abs() < 1e-9, "trial {trial}");
            assert!(f.residual < 1e-8);
            assert!((f.transform.determinant() - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn pentagram_form_rejects_negative_invariant() {
        let (p, q) = (rc(-1.0), rc(2.0));
        // s1 = -p/q > 0, s2 = q - 1 > 0 for these; flip q to make s1 < 0
        let bad = canonical_factors(rc(1.0) * p, -q);
        assert!(matches!(pentagram_form(&bad), Err(Error::NotPentagram(_))));
    }

    #[test]
    fn second_factor_order_maps_invariants() {
        let mut rng = trial_rng(12, 0);
        let psis: Vec<CVector> = (0..5).map(|_| complex_vector(&mut rng, 3)).collect();
        let phis = psis.clone();
        let inv = invariants(&phis, &psis).unwrap();
        let reordered = permute(&psis, &SECOND_FACTOR_ORDER);
        let again = invariants(&reordered, &reordered).unwrap();
        assert!((again.s1 - inv.s3).norm() < 1e-10 * inv.s3.norm());
        assert!((again.s2 - inv.s4).norm() < 1e-10 * inv.s4.norm());
    }

    #[test]
    fn orthogonalize_recovers_pentagram() {
        let tol = Tolerance::default();
        let upb = PentagramUpb::from_parameters(1.2, 0.8, 0.6, 2.0);
        assert!(upb.orthogonality_residual() < 1e-15);
        let mut rng = trial_rng(3, 0);
        let a = special_linear(&mut rng, 3, 20.0);
        let b = special_linear(&mut rng, 3, 20.0);
        let moved: Vec<ProductVector> = upb.products().iter().map(|x| x.transformed(&[&a, &b])).collect();
        match orthogonalize_upb(&moved, &tol).unwrap() {
            Orthogonalization::Orthogonalized { upb: out, permutation, .. } => {
                assert_eq!(permutation, 1);
                assert!(out.orthogonality_residual() < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vandermonde_orthogonalizability_agrees_with_sign_tables() {
        let tol = Tolerance::default();
        let mut rng = trial_rng(31, 0);
        let mut nodes = || -> [f64; 5] { std::array::from_fn(|_| rng.random_range(-3.0..3.0)) };
        let pairs: Vec<([f64; 5], [f64; 5])> = (0..40).map(|_| (nodes(), nodes())).collect();
        let mut tested = 0;
        let mut orthogonalizable = 0;
        for (alphas, betas) in &pairs {
            {
                let v = vandermonde_gupb(3, 3, alphas, betas).unwrap();
                let cf = canonical_five(&v).unwrap();
                let [p, q, r, s] = cf.real_params(1e-10).unwrap();
                let Some(cfg) = atoms(p, q, r, s).sign_config() else {
                    continue;
                };
                tested += 1;
                let by_signs = !positive_table1_rows(cfg).is_empty();
                let by_search = matches!(
                    orthogonalize_upb(&v, &tol).unwrap(),
                    Orthogonalization::Orthogonalized { .. }
                );
                assert_eq!(by_signs, by_search, "{alphas:?} {betas:?}");
                orthogonalizable += by_search as usize;
            }
        }
        assert!(tested >= 35);
        assert!(orthogonalizable > 0 && orthogonalizable < tested);
    }
}
