//! Product vectors inside a linear subspace.
//!
//! For `C^3 ⊗ C^3` a product `φ⊗ψ` lies in a subspace with orthonormal
//! complement `w_1..w_k` iff `M(φ) ψ = 0`, `M(φ)_{kj} = Σ_i conj(w_k^{ij}) φ_i`.
//! The 3×3 minors of `M(φ)` are cubics on the projective plane; two generic
//! combinations are eliminated by a resultant on several affine charts, the
//! candidates are filtered by the rank of `M(φ)` and refined by Newton's
//! method on the bilinear system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gupb::ProductVector;
use crate::json;
use crate::linalg::{
    fubini_study, hstack, kron, numerical_rank, orthogonal_complement, projective_normalize, singular_values,
    smallest_right_singular, C64, CMatrix, CVector, Tolerance, ONE, ZERO,
};
use crate::poly;
use crate::rng::{trial_rng, unitary};

const CHART_SEED: u64 = 0x5e67e;
const RESULTANT_SAMPLES: usize = 16;
const CANDIDATE_RANK_RATIO: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegreSolution {
    pub points: Vec<ProductVector>,
    pub residuals: Vec<f64>,
    pub transverse: Vec<bool>,
    pub intersection_dims: Vec<usize>,
    /// the last point written in terms of the first five, when there are six
    #[serde(with = "opt_complex_list", default)]
    pub sixth_coefficients: Option<Vec<C64>>,
    /// chart index that first produced each point
    pub charts: Vec<usize>,
    pub chart_seed: u64,
}

mod opt_complex_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<C64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|x| x.iter().map(|z| json::pair(*z)).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<C64>>, D::Error> {
        let raw: Option<Vec<json::Pair>> = Option::deserialize(d)?;
        Ok(raw.map(|x| x.into_iter().map(json::unpair).collect()))
    }
}

impl SegreSolution {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn contains(&self, pv: &ProductVector, tol: &Tolerance) -> bool {
        self.points.iter().any(|p| p.projectively_equal(pv, tol))
    }
}

/// Complement rows as blocks: `blocks[i][(k, j)] = conj(w_k[i m + j])`.
#[derive(Clone, Debug)]
struct Bilinear {
    n: usize,
    m: usize,
    complement: CMatrix,
    blocks: Vec<CMatrix>,
}

impl Bilinear {
    fn new(complement: CMatrix, n: usize, m: usize) -> Self {
        let k = complement.ncols();
        let blocks = (0..n)
            .map(|i| CMatrix::from_fn(k, m, |r, j| complement[(i * m + j, r)].conj()))
            .collect();
        Bilinear { n, m, complement, blocks }
    }

    fn rows(&self) -> usize {
        self.complement.ncols()
    }

    fn matrix(&self, phi: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows(), self.m);
        for (i, b) in self.blocks.iter().enumerate() {
            out += b * phi[i];
        }
        out
    }

    /// Largest overlap with the complement, relative to the vector norm.
    fn residual(&self, phi: &CVector, psi: &CVector) -> f64 {
        let x = kron(phi, psi);
        let proj = self.complement.adjoint() * &x;
        proj.camax() / x.norm()
    }

    fn rank_ratio(&self, phi: &CVector) -> f64 {
        let sv = singular_values(&self.matrix(phi));
        let max = sv.first().copied().unwrap_or(0.0);
        if max == 0.0 {
            return 0.0;
        }
        sv.get(self.m - 1).copied().unwrap_or(0.0) / max
    }

    /// Newton / Gauss-Newton on `M(φ)ψ = 0` with two linear normalizations.
    fn refine(&self, phi0: &CVector, psi0: &CVector) -> (CVector, CVector) {
        let (n, m, k) = (self.n, self.m, self.rows());
        let a = phi0.map(|z| z.conj()).unscale(phi0.norm_squared());
        let b = psi0.map(|z| z.conj()).unscale(psi0.norm_squared());
        let mut phi = phi0.clone();
        let mut psi = psi0.clone();
        let mut best = (self.residual(&phi, &psi), phi.clone(), psi.clone());
        for _ in 0..40 {
            let mmat = self.matrix(&phi);
            let mut f = CVector::zeros(k + 2);
            f.rows_mut(0, k).copy_from(&(&mmat * &psi));
            f[k] = a.dot(&phi) - ONE;
            f[k + 1] = b.dot(&psi) - ONE;
            let mut jac = CMatrix::zeros(k + 2, n + m);
            for i in 0..n {
                jac.view_mut((0, i), (k, 1)).copy_from(&(&self.blocks[i] * &psi));
                jac[(k, i)] = a[i];
            }
            jac.view_mut((0, n), (k, m)).copy_from(&mmat);
            for j in 0..m {
                jac[(k + 1, n + j)] = b[j];
            }
            let Ok(step) = jac.svd(true, true).solve(&f, 1e-14) else {
                break;
            };
            phi -= step.rows(0, n);
            psi -= step.rows(n, m);
            let r = self.residual(&phi, &psi);
            if r < best.0 {
                best = (r, phi.clone(), psi.clone());
            }
            if step.norm() <= 1e-15 * (phi.norm() + psi.norm()) || r < 1e-15 {
                break;
            }
        }
        (best.1, best.2)
    }
}

fn chart_maps() -> Vec<CMatrix> {
    let mut rng = trial_rng(CHART_SEED, 0);
    let u = unitary(&mut rng, 3);
    // the fixed coordinate sits last, first, then middle
    let perms: [[usize; 3]; 3] = [[0, 1, 2], [1, 2, 0], [2, 0, 1]];
    perms
        .iter()
        .map(|p| {
            let mut pm = CMatrix::zeros(3, 3);
            for (col, &row) in p.iter().enumerate() {
                pm[(row, col)] = ONE;
            }
            &u * pm
        })
        .collect()
}

fn triples(k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn minor3(m: &CMatrix, rows: &[usize; 3]) -> C64 {
    let sub = CMatrix::from_fn(3, 3, |i, j| m[(rows[i], j)]);
    sub.determinant()
}

/// Deterministic generic weights for combining minors.
fn combination_weights(count: usize, which: usize) -> Vec<C64> {
    (0..count)
        .map(|t| {
            let x = (t + 1) as f64 * (1.0 + which as f64 * 0.618_033_988_75);
            C64::from_polar(1.0 + 0.37 * ((t * 7 + which * 3) % 5) as f64, 2.399_963 * x)
        })
        .collect()
}

struct ChartSystem<'a> {
    sys: &'a Bilinear,
    map: CMatrix,
    minors: Vec<[usize; 3]>,
    weights: [Vec<C64>; 2],
}

impl ChartSystem<'_> {
    fn phi(&self, x: C64, y: C64) -> CVector {
        &self.map * CVector::from_vec(vec![x, y, ONE])
    }

    fn combos(&self, x: C64, y: C64) -> [C64; 2] {
        let m = self.sys.matrix(&self.phi(x, y));
        let vals: Vec<C64> = self.minors.iter().map(|r| minor3(&m, r)).collect();
        let f = |w: &Vec<C64>| vals.iter().zip(w).map(|(v, c)| v * c).sum::<C64>();
        [f(&self.weights[0]), f(&self.weights[1])]
    }

    /// Cubic coefficients in `x` of both combinations at fixed `y`.
    fn cubics(&self, y: C64) -> [Vec<C64>; 2] {
        let vals: Vec<[C64; 2]> = (0..4).map(|k| self.combos(poly::root_of_unity(k, 4), y)).collect();
        let first: Vec<C64> = vals.iter().map(|v| v[0]).collect();
        let second: Vec<C64> = vals.iter().map(|v| v[1]).collect();
        [poly::interpolate_roots_of_unity(&first), poly::interpolate_roots_of_unity(&second)]
    }
}

fn sylvester_cubic(f: &[C64], g: &[C64]) -> C64 {
    let mut s = CMatrix::zeros(6, 6);
    for shift in 0..3 {
        for d in 0..4 {
            s[(shift, shift + d)] = f[3 - d];
            s[(shift + 3, shift + d)] = g[3 - d];
        }
    }
    s.determinant()
}

fn coeff_norm(c: &[C64]) -> f64 {
    c.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

struct Candidate {
    phi: CVector,
    psi: CVector,
    residual: f64,
    chart: usize,
}

fn chart_candidates(sys: &Bilinear, chart: usize, map: CMatrix) -> Result<Vec<(CVector, usize)>> {
    let k = sys.rows();
    let minors = triples(k);
    let weights = [combination_weights(minors.len(), 0), combination_weights(minors.len(), 1)];
    let cs = ChartSystem {
        sys,
        map,
        minors,
        weights,
    };
    let values: Vec<C64> = (0..RESULTANT_SAMPLES)
        .map(|j| {
            let [f, g] = cs.cubics(poly::root_of_unity(j, RESULTANT_SAMPLES));
            sylvester_cubic(&f, &g)
        })
        .collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let reference = (0..RESULTANT_SAMPLES)
        .map(|j| {
            let [f, g] = cs.cubics(poly::root_of_unity(j, RESULTANT_SAMPLES));
            coeff_norm(&f).powi(3) * coeff_norm(&g).powi(3)
        })
        .fold(0.0, f64::max);
    if scale <= 1e-12 * reference {
        return Err(Error::Degenerate(format!(
            "resultant vanishes identically on chart {chart}; the subspace contains a family of products"
        )));
    }
    let res = poly::interpolate_roots_of_unity(&values);
    let res: Vec<C64> = res.iter().take(10).copied().collect();
    let ys = poly::roots(&res)?;
    let mut out = Vec::new();
    for y in ys {
        let [f, _] = cs.cubics(y);
        let xs = match poly::roots(&f) {
            Ok(xs) => xs,
            Err(_) => continue,
        };
        for x in xs {
            let phi = cs.phi(x, y);
            if phi.iter().all(|z| z.is_finite()) {
                out.push((phi.normalize(), chart));
            }
        }
    }
    Ok(out)
}

fn sort_key(pv: &ProductVector) -> Vec<f64> {
    pv.factors
        .iter()
        .flat_map(|f| f.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>())
        .collect()
}

fn finish(
    basis: &CMatrix,
    found: Vec<Candidate>,
    tol: &Tolerance,
) -> Result<SegreSolution> {
    let mut kept: Vec<Candidate> = Vec::new();
    for cand in found {
        let x = kron(&cand.phi, &cand.psi);
        match kept
            .iter_mut()
            .find(|k| fubini_study(&kron(&k.phi, &k.psi), &x) < tol.dedup)
        {
            Some(k) => {
                if cand.residual < k.residual {
                    k.phi = cand.phi;
                    k.psi = cand.psi;
                    k.residual = cand.residual;
                }
            }
            None => kept.push(cand),
        }
    }
    let mut entries: Vec<(ProductVector, f64, usize)> = kept
        .into_iter()
        .map(|c| {
            let pv = ProductVector::bipartite(projective_normalize(&c.phi), projective_normalize(&c.psi));
            (pv, c.residual, c.chart)
        })
        .collect();
    entries.sort_by(|a, b| {
        sort_key(&a.0)
            .iter()
            .zip(sort_key(&b.0))
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut transverse = Vec::new();
    let mut dims = Vec::new();
    for (pv, _, _) in &entries {
        let (t, d) = transversality(basis, pv, tol)?;
        transverse.push(t);
        dims.push(d);
    }
    let points: Vec<ProductVector> = entries.iter().map(|e| e.0.clone()).collect();
    let sixth_coefficients = if points.len() == 6 {
        decompose(&points, 5).ok().map(|(c, _)| c)
    } else {
        None
    };
    Ok(SegreSolution {
        residuals: entries.iter().map(|e| e.1).collect(),
        charts: entries.iter().map(|e| e.2).collect(),
        points,
        transverse,
        intersection_dims: dims,
        sixth_coefficients,
        chart_seed: CHART_SEED,
    })
}

/// Coefficients writing `points[index]` in terms of the other points, with
/// the relative least-squares residual.
pub fn decompose(points: &[ProductVector], index: usize) -> Result<(Vec<C64>, f64)> {
    if index >= points.len() {
        return Err(Error::Input(format!("no point {index}")));
    }
    let others: Vec<CVector> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, p)| p.vector())
        .collect();
    let a = hstack(&others);
    let target = points[index].vector();
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&target, 1e-14)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let res = (&a * &coeffs - &target).norm() / target.norm();
    Ok((coeffs.iter().copied().collect(), res))
}

fn check_basis(basis: &CMatrix, expected: usize, tol: &Tolerance) -> Result<()> {
    if basis.nrows() != 9 {
        return Err(Error::Dimension(format!("expected vectors in C^9, got length {}", basis.nrows())));
    }
    let rank = numerical_rank(basis, tol);
    if rank != expected || basis.ncols() != expected {
        return Err(Error::Dimension(format!(
            "expected a basis of {expected} independent vectors, got {} of rank {rank}",
            basis.ncols()
        )));
    }
    Ok(())
}

/// All product vectors in a subspace of `C^3 ⊗ C^3` whose complement has
/// dimension at least three.
pub fn products_in_subspace_3x3(basis: &CMatrix, tol: &Tolerance) -> Result<SegreSolution> {
    let complement = orthogonal_complement(basis, tol);
    if complement.ncols() < 3 {
        return Err(Error::Dimension("complement too small for a finite product search".into()));
    }
    let sys = Bilinear::new(complement, 3, 3);
    let mut found = Vec::new();
    for (chart, map) in chart_maps().into_iter().enumerate() {
        for (phi, chart) in chart_candidates(&sys, chart, map)? {
            if sys.rank_ratio(&phi) > CANDIDATE_RANK_RATIO {
                continue;
            }
            let (psi, _) = smallest_right_singular(&sys.matrix(&phi));
            let (phi, psi) = sys.refine(&phi, &psi);
            let residual = sys.residual(&phi, &psi);
            if residual <= tol.residual {
                found.push(Candidate {
                    phi,
                    psi,
                    residual,
                    chart,
                });
            }
        }
    }
    finish(basis, found, tol)
}

/// Products in a five-dimensional subspace of `C^3 ⊗ C^3`.
pub fn products_in_kernel(basis: &CMatrix, tol: &Tolerance) -> Result<SegreSolution> {
    check_basis(basis, 5, tol)?;
    products_in_subspace_3x3(basis, tol)
}

/// Products in a four-dimensional subspace of `C^3 ⊗ C^3`.
pub fn products_in_range(basis: &CMatrix, tol: &Tolerance) -> Result<SegreSolution> {
    check_basis(basis, 4, tol)?;
    products_in_subspace_3x3(basis, tol)
}

/// Tangent-space test at a product point of a subspace of `C^n ⊗ C^m`.
pub fn transversality(basis: &CMatrix, point: &ProductVector, tol: &Tolerance) -> Result<(bool, usize)> {
    if point.factors.len() != 2 {
        return Err(Error::Dimension("transversality needs a bipartite product".into()));
    }
    let (phi, psi) = (point.phi(), point.psi());
    let (n, m) = (phi.len(), psi.len());
    if basis.nrows() != n * m {
        return Err(Error::Dimension("point and subspace dimensions differ".into()));
    }
    let x = point.vector().normalize();
    let q = crate::linalg::column_space(basis, tol);
    let miss = (&x - &q * (q.adjoint() * &x)).norm();
    if miss > tol.residual.max(1e-8) {
        return Err(Error::Precondition(format!("point not in subspace (residual {miss:.3e})")));
    }
    let mut cols: Vec<CVector> = (0..q.ncols()).map(|j| q.column(j).into_owned()).collect();
    for j in 0..m {
        cols.push(kron(phi, &crate::linalg::basis(m, j)).normalize());
    }
    for i in 0..n {
        cols.push(kron(&crate::linalg::basis(n, i), psi).normalize());
    }
    let rank = numerical_rank(&hstack(&cols), tol);
    let dim = q.ncols() + (n + m - 1) - rank;
    Ok((dim == 1, dim))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveSamples {
    /// first-factor parameter `φ = (1, α)` of each sample
    #[serde(with = "json::complex_list")]
    pub alphas: Vec<C64>,
    pub samples: Vec<ProductVector>,
    pub membership: Vec<f64>,
    pub span_rank: usize,
    pub subspace_dim: usize,
}

impl CurveSamples {
    pub fn spans_subspace(&self) -> bool {
        self.span_rank == self.subspace_dim
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TwoByN {
    Finite(SegreSolution),
    Curve(CurveSamples),
}

/// Product vectors in a subspace of `C^2 ⊗ C^n`.
pub fn products_in_subspace_2xn(basis: &CMatrix, n: usize, tol: &Tolerance) -> Result<TwoByN> {
    if !(1..=6).contains(&n) || basis.nrows() != 2 * n {
        return Err(Error::Dimension(format!("expected a subspace of C^2 ⊗ C^{n} with n ≤ 6")));
    }
    let d = numerical_rank(basis, tol);
    if d == 0 {
        return Err(Error::Dimension("empty subspace".into()));
    }
    let complement = orthogonal_complement(basis, tol);
    let k = complement.ncols();
    let sys = Bilinear::new(complement, 2, n);
    let phi_at = |alpha: C64| CVector::from_vec(vec![ONE, alpha]);
    if k < n {
        let count = 2 * n + 1;
        let alphas: Vec<C64> = (0..count)
            .map(|j| C64::from_polar(0.5 + j as f64 / count as f64, 2.0 * j as f64 + 0.3))
            .collect();
        let mut samples = Vec::new();
        let mut membership = Vec::new();
        for &alpha in &alphas {
            let phi = phi_at(alpha);
            let psi = if k == 0 {
                crate::linalg::basis(n, 0)
            } else {
                smallest_right_singular(&sys.matrix(&phi)).0
            };
            membership.push(sys.residual(&phi, &psi));
            samples.push(ProductVector::bipartite(phi, psi));
        }
        let span = hstack(&samples.iter().map(|s| s.vector().normalize()).collect::<Vec<_>>());
        return Ok(TwoByN::Curve(CurveSamples {
            alphas,
            span_rank: numerical_rank(&span, tol),
            samples,
            membership,
            subspace_dim: d,
        }));
    }
    let mut rng = trial_rng(CHART_SEED, 1);
    let mix = crate::rng::ginibre(&mut rng, n, k);
    let l0 = &sys.blocks[0];
    let l1 = &sys.blocks[1];
    let samples = (n + 1).next_power_of_two().max(4);
    let values: Vec<C64> = (0..samples)
        .map(|j| (&mix * (l0 + l1 * poly::root_of_unity(j, samples))).determinant())
        .collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut phis: Vec<CVector> = Vec::new();
    if scale <= 1e-12 * frob_scale(l0, l1, n) {
        return Err(Error::Degenerate("every first factor admits a product; no finite list".into()));
    }
    let coeffs: Vec<C64> = poly::interpolate_roots_of_unity(&values).into_iter().take(n + 1).collect();
    for alpha in poly::roots(&coeffs)? {
        phis.push(phi_at(alpha));
    }
    phis.push(CVector::from_vec(vec![ZERO, ONE]));
    let mut found = Vec::new();
    for phi in phis {
        let phi = phi.normalize();
        if sys.rank_ratio(&phi) > CANDIDATE_RANK_RATIO {
            continue;
        }
        let (psi, _) = smallest_right_singular(&sys.matrix(&phi));
        let (phi, psi) = sys.refine(&phi, &psi);
        let residual = sys.residual(&phi, &psi);
        if residual <= tol.residual {
            found.push(Candidate {
                phi,
                psi,
                residual,
                chart: 0,
            });
        }
    }
    finish(basis, found, tol).map(TwoByN::Finite)
}

fn frob_scale(l0: &CMatrix, l1: &CMatrix, n: usize) -> f64 {
    (l0.norm() + l1.norm()).max(1.0).powi(n as i32)
}

/// Orthonormal basis of a span of product vectors.
pub fn basis_of(points: &[ProductVector]) -> CMatrix {
    hstack(&points.iter().map(|p| p.vector()).collect::<Vec<_>>())
}
