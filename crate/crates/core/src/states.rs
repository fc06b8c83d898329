//! Rank-four PPT states on `C^3 ⊗ C^3` with five product vectors in the
//! kernel: closed form, an independent linear-constraint solve, the
//! orthogonal-UPB projector and the classification pipeline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::canonical::{
    canonical_five, canonical_vectors, check_triples, invariant_scan, orthogonalize_upb, CanonicalFive,
    InvariantQuadruple, Orthogonalization, PentagramUpb,
};
use crate::error::{Error, Result};
use crate::gupb::{is_gupb, is_minimal_gupb, GupbCertificate, ProductVector};
use crate::json;
use crate::linalg::{
    column_space, frobenius, hermitian_deviation, hermitian_eigen, kron_mat, null_space, numerical_rank,
    partial_transpose, projector, re, span_residual, support_pinv, C64, CMatrix, CVector, Subsystem, Tolerance,
};
use crate::segre::{products_in_kernel, products_in_range, products_in_subspace_2xn, SegreSolution, TwoByN};
use crate::signtables::{atoms, positivity_signs, Sign, ATOM_NAMES};

/// Zero-based positions of the free diagonal parameters.
pub const A_POSITIONS: [(usize, usize); 6] = [(1, 1), (2, 2), (3, 3), (5, 5), (6, 6), (7, 7)];
/// Zero-based positions of the free off-diagonal parameters.
pub const B_POSITIONS: [(usize, usize); 6] = [(1, 2), (1, 7), (2, 5), (3, 5), (3, 6), (6, 7)];

/// Entries of the "+" solution, generic over the scalar field.
fn closed_form_entries<T>(p: T, q: T, r: T, s: T, one: T) -> ([T; 6], [T; 6])
where
    T: Copy
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>
        + std::ops::Neg<Output = T>,
{
    let rs = r - s;
    let a = [
        (q * r - s) / (r * (q - one)),
        (r - p * s) / (s * (one - p)),
        rs * (p * s - q) / (p * (p - q) * (s - one)),
        (p - s) * rs / (p * (p - one) * s * (s - one)),
        (q * r - p) * rs / (q * (p - q) * (r - one)),
        (q - r) * rs / (q * (one - q) * r * (r - one)),
    ];
    let b = [
        -one,
        rs / (r * (one - q)),
        rs / (s * (p - one)),
        rs / (p * (one - s)),
        rs / (q - p),
        rs / (q * (r - one)),
    ];
    (a, b)
}

fn assemble<T: Copy + Default>(a: &[T; 6], b: &[T; 6]) -> [[T; 9]; 9] {
    let mut m = [[T::default(); 9]; 9];
    for (k, &(i, j)) in A_POSITIONS.iter().enumerate() {
        m[i][j] = a[k];
    }
    for (k, &(i, j)) in B_POSITIONS.iter().enumerate() {
        m[i][j] = b[k];
        m[j][i] = b[k];
    }
    m
}

/// The "+" solution as a plain real array; no atom checks.
pub fn closed_form_real(p: f64, q: f64, r: f64, s: f64) -> [[f64; 9]; 9] {
    let (a, b) = closed_form_entries(p, q, r, s, 1.0);
    assemble(&a, &b)
}

/// The "+" solution for complex parameters; no atom checks.
pub fn closed_form(p: C64, q: C64, r: C64, s: C64) -> CMatrix {
    let (a, b) = closed_form_entries(p, q, r, s, re(1.0));
    let m = assemble(&a, &b);
    CMatrix::from_fn(9, 9, |i, j| m[i][j])
}

fn check_atoms(p: f64, q: f64, r: f64, s: f64) -> Result<()> {
    let scale = 1.0 + [p, q, r, s].iter().map(|x| x.abs()).fold(0.0, f64::max).powi(2);
    let at = atoms(p, q, r, s);
    match at.values.iter().position(|v| v.abs() <= 1e-12 * scale) {
        Some(k) => Err(Error::VanishingAtom(ATOM_NAMES[k])),
        None => Ok(()),
    }
}

/// Unnormalized candidate state for the given sign; positivity is not checked.
pub fn rho_from_params(p: f64, q: f64, r: f64, s: f64, sign: Sign) -> Result<CMatrix> {
    check_atoms(p, q, r, s)?;
    let m = closed_form(re(p), re(q), re(r), re(s));
    Ok(m * re(sign.value() as f64))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PptState {
    pub dims: (usize, usize),
    /// unit trace
    #[serde(with = "json::matrix")]
    pub rho: CMatrix,
    pub rank: usize,
    pub rank_t1: usize,
    pub min_eig: f64,
    pub max_eig: f64,
    pub min_eig_t1: f64,
    pub max_eig_t1: f64,
    #[serde(with = "json::matrix")]
    pub kernel: CMatrix,
}

impl PptState {
    /// Trace-normalize and cache spectra of the matrix and its partial transpose.
    pub fn new(mat: CMatrix, dims: (usize, usize), tol: &Tolerance) -> Result<Self> {
        let d = dims.0 * dims.1;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::Dimension(format!("{}x{} matrix for dims {dims:?}", mat.nrows(), mat.ncols())));
        }
        let dev = hermitian_deviation(&mat);
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        let tr = mat.trace();
        if tr.re <= 0.0 || tr.im.abs() > 1e-10 * tr.re {
            return Err(Error::Precondition(format!("trace {tr} is not positive")));
        }
        let rho = (&mat + mat.adjoint()) / (tr * 2.0);
        let pt = partial_transpose(&rho, dims, Subsystem::First)?;
        let e = hermitian_eigen(&rho, tol)?;
        let et = hermitian_eigen(&pt, tol)?;
        Ok(PptState {
            dims,
            rank: numerical_rank(&rho, tol),
            rank_t1: numerical_rank(&pt, tol),
            min_eig: e.values[0],
            max_eig: e.values[d - 1],
            min_eig_t1: et.values[0],
            max_eig_t1: et.values[d - 1],
            kernel: null_space(&rho, tol),
            rho,
        })
    }

    pub fn is_psd(&self, tol: &Tolerance) -> bool {
        self.min_eig >= -tol.psd_rel * self.max_eig
    }

    pub fn is_ppt(&self, tol: &Tolerance) -> bool {
        self.is_psd(tol) && self.min_eig_t1 >= -tol.psd_rel * self.max_eig_t1
    }

    pub fn partial_transpose(&self) -> CMatrix {
        partial_transpose(&self.rho, self.dims, Subsystem::First).expect("dims checked on construction")
    }

    pub fn range(&self, tol: &Tolerance) -> CMatrix {
        column_space(&self.rho, tol)
    }

    /// Largest `‖ρ x‖ / (‖ρ‖ ‖x‖)` over the given vectors.
    pub fn kernel_residual(&self, vectors: &[ProductVector]) -> f64 {
        let scale = frobenius(&self.rho);
        vectors
            .iter()
            .map(|v| {
                let x = v.vector();
                (&self.rho * &x).norm() / (scale * x.norm())
            })
            .fold(0.0, f64::max)
    }

    /// Relative Frobenius distance after trace normalization.
    pub fn distance(&self, other: &CMatrix) -> f64 {
        let o = other / other.trace();
        frobenius(&(&self.rho - o)) / frobenius(&self.rho)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintSolution {
    pub a: [f64; 6],
    pub b: [f64; 6],
    pub nullspace_dim: usize,
    /// assembled from `a` and `b`, scaled so that `b[0] = -1`
    #[serde(with = "json::matrix")]
    pub matrix: CMatrix,
    /// largest violation of the twelve linear relations among `a`, `b`
    pub linear_residual: f64,
    /// largest imaginary part of the solution relative to its size
    pub imaginary_part: f64,
}

impl ConstraintSolution {
    /// Distance to the nearest multiple of `other`, relative to `self`.
    pub fn proportionality_residual(&self, other: &CMatrix) -> f64 {
        let num = other.iter().zip(self.matrix.iter()).map(|(o, m)| o.conj() * m).sum::<C64>();
        let den = other.iter().map(|o| o.norm_sqr()).sum::<f64>();
        if den == 0.0 {
            return f64::INFINITY;
        }
        frobenius(&(&self.matrix - other * (num / den))) / frobenius(&self.matrix)
    }
}

/// Relations implied by the five canonical vectors lying in the kernel:
/// six row sums and six conditions from the fifth vector.
pub fn linear_relations(p: f64, q: f64, r: f64, s: f64, a: &[f64; 6], b: &[f64; 6]) -> [f64; 12] {
    let [a1, a2, a3, a4, a5, a6] = *a;
    let [b1, b2, b3, b4, b5, b6] = *b;
    [
        a1 + b1 + b2,
        b1 + a2 + b3,
        a3 + b4 + b5,
        b3 + b4 + a4,
        b5 + a5 + b6,
        b2 + b6 + a6,
        -r * (b1 + b2) + q * r * b2 + s * b1,
        r * b1 - s * (b1 + b3) + p * s * b3,
        -p * (b4 + b5) + q * b5 + p * s * b4,
        p * b4 + s * b3 - p * s * (b3 + b4),
        p * b5 - q * (b5 + b6) + q * r * b6,
        q * b6 + r * b2 - q * r * (b2 + b6),
    ]
}

fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut h = CMatrix::zeros(d, d);
        h[(i, i)] = re(1.0);
        out.push(h);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut h = CMatrix::zeros(d, d);
            h[(i, j)] = re(1.0);
            h[(j, i)] = re(1.0);
            out.push(h);
            let mut h = CMatrix::zeros(d, d);
            h[(i, j)] = C64::new(0.0, 1.0);
            h[(j, i)] = C64::new(0.0, -1.0);
            out.push(h);
        }
    }
    out
}

/// Solve for every Hermitian `ρ` with `ρ x_i = 0` and
/// `ρ^{T1} (conj φ_i ⊗ ψ_i) = 0` for the five canonical vectors.
pub fn rho_from_constraints(p: f64, q: f64, r: f64, s: f64, tol: &Tolerance) -> Result<ConstraintSolution> {
    check_atoms(p, q, r, s)?;
    let vectors = canonical_vectors(re(p), re(q), re(r), re(s));
    let xs: Vec<CVector> = vectors.iter().map(|v| v.vector()).collect();
    let conj: Vec<CVector> = vectors.iter().map(|v| v.partial_conjugate().vector()).collect();
    let basis = hermitian_basis(9);
    let rows = 2 * 9 * 2 * xs.len();
    let mut sys = DMatrix::<f64>::zeros(rows, basis.len());
    for (col, h) in basis.iter().enumerate() {
        let ht = partial_transpose(h, (3, 3), Subsystem::First)?;
        let mut k = 0;
        for (x, y) in xs.iter().zip(&conj) {
            for z in (h * x).iter().chain((&ht * y).iter()) {
                sys[(k, col)] = z.re;
                sys[(k + 1, col)] = z.im;
                k += 2;
            }
        }
    }
    let svd = sys.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("constraint SVD failed".into()))?;
    let sv = &svd.singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|x| **x > tol.rank_rel * max).count();
    let nullspace_dim = basis.len() - rank;
    if nullspace_dim != 1 {
        return Err(Error::Degenerate(format!(
            "constraint nullspace has dimension {nullspace_dim}; the vectors are not a gUPB"
        )));
    }
    let idx = (0..sv.len())
        .min_by(|&i, &j| sv[i].total_cmp(&sv[j]))
        .expect("nonempty spectrum");
    let mut mat = CMatrix::zeros(9, 9);
    for (t, h) in basis.iter().enumerate() {
        mat += h * re(vt[(idx, t)]);
    }
    let pivot = mat[B_POSITIONS[0]];
    if pivot.norm() <= 1e-12 * frobenius(&mat) {
        return Err(Error::Numerical("solution has vanishing (1,2) entry".into()));
    }
    mat /= -pivot;
    let scale = mat.camax();
    let imaginary_part = mat.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    let a: [f64; 6] = std::array::from_fn(|k| mat[A_POSITIONS[k]].re);
    let b: [f64; 6] = std::array::from_fn(|k| mat[B_POSITIONS[k]].re);
    let linear_residual = linear_relations(p, q, r, s, &a, &b)
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        / scale;
    Ok(ConstraintSolution {
        a,
        b,
        nullspace_dim,
        matrix: mat,
        linear_residual,
        imaginary_part,
    })
}

/// `(1/4)(1 - Σ proj(v_i ⊗ w_i))` for a pentagram UPB.
pub fn oupb_projector(upb: &PentagramUpb, tol: &Tolerance) -> Result<PptState> {
    let res = upb.orthogonality_residual();
    if res > 1e-10 {
        return Err(Error::Precondition(format!("non-orthogonal input (residual {res:.3e})")));
    }
    let mut p = CMatrix::identity(9, 9);
    for pv in upb.products() {
        p -= projector(&pv.vector().normalize());
    }
    PptState::new(p / re(4.0), (3, 3), tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GupbState {
    State {
        state: PptState,
        sign: Sign,
        canonical: CanonicalFive,
        kernel_residual: f64,
        /// signs whose diagonal entries and minors are positive by sign tables
        predicted_signs: Vec<Sign>,
    },
    NoPptState {
        canonical: CanonicalFive,
        /// smallest eigenvalue of each candidate divided by its largest modulus
        relative_min_eigs: [f64; 2],
    },
}

/// The unique PPT state with the five given product vectors in its kernel,
/// when one exists.
pub fn state_from_gupb(vectors: &[ProductVector], tol: &Tolerance) -> Result<GupbState> {
    if !is_minimal_gupb(vectors, (3, 3), tol)?.verdict {
        return Err(Error::Precondition("input is not a minimal gUPB".into()));
    }
    let canonical = canonical_five(vectors)?;
    let [p, q, r, s] = canonical
        .real_params(1e-8)
        .ok_or(Error::NonReal(canonical.max_imag()))?;
    let cfg = atoms(p, q, r, s).sign_config();
    let predicted_signs: Vec<Sign> = Sign::both()
        .into_iter()
        .filter(|&g| cfg.is_some_and(|c| positivity_signs(c, g)))
        .collect();
    let mut chosen = None;
    let mut rel = [0.0; 2];
    for (k, sign) in Sign::both().into_iter().enumerate() {
        let cand = rho_from_params(p, q, r, s, sign)?;
        let e = hermitian_eigen(&cand, tol)?;
        let top = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
        rel[k] = e.values[0] / top;
        if e.values[0] >= -tol.psd_rel * top && chosen.is_none() {
            chosen = Some((sign, cand));
        }
    }
    let Some((sign, cand)) = chosen else {
        return Ok(GupbState::NoPptState {
            canonical,
            relative_min_eigs: rel,
        });
    };
    let local = canonical.local();
    let rho = local.adjoint() * cand * &local;
    let state = PptState::new(rho, (3, 3), tol)?;
    let kernel_residual = state.kernel_residual(vectors);
    if kernel_residual > 1e-8 {
        return Err(Error::Numerical(format!("inputs not in the kernel (residual {kernel_residual:.3e})")));
    }
    Ok(GupbState::State {
        state,
        sign,
        canonical,
        kernel_residual,
        predicted_signs,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subtraction {
    pub lambda: f64,
    #[serde(with = "json::matrix")]
    pub reduced: CMatrix,
    pub rank: usize,
    pub rank_t1: usize,
}

/// Remove the largest multiple of a product projector that keeps both the
/// state and its partial transpose positive.
pub fn subtract_product(state: &PptState, pv: &ProductVector, tol: &Tolerance) -> Result<Subtraction> {
    let x = pv.vector();
    let xc = pv.partial_conjugate().vector();
    let range = state.range(tol);
    let pt = state.partial_transpose();
    let range_t = column_space(&pt, tol);
    let miss = span_residual(&range, &x, tol);
    let miss_t = span_residual(&range_t, &xc, tol);
    if miss > tol.residual || miss_t > tol.residual {
        return Err(Error::Precondition(format!(
            "product not in the ranges (residuals {miss:.3e}, {miss_t:.3e})"
        )));
    }
    let quad = |m: &CMatrix, v: &CVector| -> Result<f64> {
        let pinv = support_pinv(m, tol)?;
        Ok(v.dotc(&(pinv * v)).re)
    };
    let lambda = (1.0 / quad(&state.rho, &x)?).min(1.0 / quad(&pt, &xc)?);
    let reduced = &state.rho - projector(&x) * re(lambda);
    let rank = numerical_rank(&reduced, tol);
    let rank_t1 = numerical_rank(&partial_transpose(&reduced, state.dims, Subsystem::First)?, tol);
    Ok(Subtraction {
        lambda,
        reduced,
        rank,
        rank_t1,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Classification {
    SeparableCandidate {
        products: Vec<ProductVector>,
    },
    EntangledUpbForm {
        #[serde(with = "json::matrix")]
        a: CMatrix,
        #[serde(with = "json::matrix")]
        b: CMatrix,
        upb: PentagramUpb,
        /// index of the kernel product left out
        dropped: usize,
        permutation: usize,
        residual: f64,
    },
    Undetermined {
        reason: String,
    },
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::SeparableCandidate { .. } => "separable-candidate",
            Classification::EntangledUpbForm { .. } => "entangled-upb-form",
            Classification::Undetermined { .. } => "undetermined",
        }
    }
}

/// Products in the range whose partial conjugates lie in the range of the
/// partial transpose.
pub fn range_products_with_conjugates(
    state: &PptState,
    tol: &Tolerance,
) -> Result<(SegreSolution, Vec<ProductVector>)> {
    let range = state.range(tol);
    let sol = products_in_range(&range, tol)?;
    let range_t = column_space(&state.partial_transpose(), tol);
    let good = sol
        .points
        .iter()
        .filter(|p| {
            let xc = p.partial_conjugate().vector();
            span_residual(&range_t, &xc, tol) <= tol.residual
        })
        .cloned()
        .collect();
    Ok((sol, good))
}

fn require_rank_four_3x3(state: &PptState) -> Result<()> {
    if state.dims != (3, 3) {
        return Err(Error::Unsupported(format!("dims {:?}; only 3x3 states are analyzed", state.dims)));
    }
    if state.rank != 4 {
        return Err(Error::Unsupported(format!("rank {}; only rank-4 states are analyzed", state.rank)));
    }
    Ok(())
}

/// Five of the kernel products whose triples are independent on both sides
/// and which orthogonalize onto a UPB reproducing the state.
fn entangled_form(state: &PptState, kernel: &SegreSolution, tol: &Tolerance) -> Result<Option<Classification>> {
    if kernel.len() < 5 {
        return Ok(None);
    }
    let drops: Vec<usize> = if kernel.len() == 5 { vec![usize::MAX] } else { (0..kernel.len()).collect() };
    for drop in drops {
        let five: Vec<ProductVector> = kernel
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != drop)
            .map(|(_, p)| p.clone())
            .take(5)
            .collect();
        let phis: Vec<CVector> = five.iter().map(|v| v.phi().clone()).collect();
        let psis: Vec<CVector> = five.iter().map(|v| v.psi().clone()).collect();
        if check_triples(&phis, "first").is_err() || check_triples(&psis, "second").is_err() {
            continue;
        }
        if !is_minimal_gupb(&five, (3, 3), tol)?.verdict {
            continue;
        }
        let Orthogonalization::Orthogonalized {
            a, b, permutation, upb, ..
        } = orthogonalize_upb(&five, tol)?
        else {
            continue;
        };
        let proj = oupb_projector(&upb, tol)?;
        let local = kron_mat(&a, &b);
        let rebuilt = local.adjoint() * &proj.rho * &local;
        let residual = state.distance(&rebuilt);
        if residual <= 1e-6 {
            return Ok(Some(Classification::EntangledUpbForm {
                a,
                b,
                upb,
                dropped: drop.min(kernel.len()),
                permutation,
                residual,
            }));
        }
    }
    Ok(None)
}

fn classify_parts(
    state: &PptState,
    kernel: &SegreSolution,
    range_good: &[ProductVector],
    tol: &Tolerance,
) -> Result<Classification> {
    if let Some(c) = entangled_form(state, kernel, tol)? {
        return Ok(c);
    }
    if !range_good.is_empty() {
        return Ok(Classification::SeparableCandidate {
            products: range_good.to_vec(),
        });
    }
    Ok(Classification::Undetermined {
        reason: format!(
            "{} kernel products, no orthogonalizable five-subset reproduces the state, no range products",
            kernel.len()
        ),
    })
}

/// Decide between the orthogonal-UPB form and a separable candidate.
pub fn classify(state: &PptState, tol: &Tolerance) -> Result<Classification> {
    require_rank_four_3x3(state)?;
    if !state.is_ppt(tol) {
        return Err(Error::Precondition("state is not PPT".into()));
    }
    let kernel = products_in_kernel(&state.kernel, tol)?;
    if let Some(c) = entangled_form(state, &kernel, tol)? {
        return Ok(c);
    }
    let (_, good) = range_products_with_conjugates(state, tol)?;
    classify_parts(state, &kernel, &good, tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub is_psd: bool,
    pub is_ppt: bool,
    pub rank: usize,
    pub rank_t1: usize,
    pub min_eig: f64,
    pub min_eig_t1: f64,
    pub kernel_products: SegreSolution,
    pub gupb: GupbCertificate,
    pub invariant_scan: Vec<Option<InvariantQuadruple>>,
    /// first of the twelve orders with all four invariants positive
    pub matching_permutation: Option<usize>,
    pub range_products: SegreSolution,
    pub is_edge: bool,
    pub classification: Classification,
}

pub fn analyze(state: &PptState, tol: &Tolerance) -> Result<AnalysisReport> {
    require_rank_four_3x3(state)?;
    let (kernel, range) = rayon::join(
        || products_in_kernel(&state.kernel, tol),
        || range_products_with_conjugates(state, tol),
    );
    let kernel = kernel?;
    let (range_products, good) = range?;
    let gupb = is_gupb(&kernel.points, (3, 3), tol)?;
    let classification = if state.is_ppt(tol) {
        classify_parts(state, &kernel, &good, tol)?
    } else {
        Classification::Undetermined {
            reason: "state is not PPT".into(),
        }
    };
    let five: Vec<ProductVector> = match &classification {
        Classification::EntangledUpbForm { dropped, .. } => kernel
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| i != dropped)
            .map(|(_, p)| p.clone())
            .take(5)
            .collect(),
        _ => kernel.points.iter().take(5).cloned().collect(),
    };
    let invariant_scan = if five.len() == 5 {
        invariant_scan(&five)
    } else {
        Vec::new()
    };
    let matching_permutation = invariant_scan
        .iter()
        .position(|q| q.is_some_and(|q| q.all_real_positive()))
        .map(|k| k + 1);
    Ok(AnalysisReport {
        is_psd: state.is_psd(tol),
        is_ppt: state.is_ppt(tol),
        rank: state.rank,
        rank_t1: state.rank_t1,
        min_eig: state.min_eig,
        min_eig_t1: state.min_eig_t1,
        is_edge: good.is_empty(),
        kernel_products: kernel,
        gupb,
        invariant_scan,
        matching_permutation,
        range_products,
        classification,
    })
}

/// A product vector in the range of a PPT state on `C^2 ⊗ C^n`.
pub fn product_in_range_2xn(state: &PptState, tol: &Tolerance) -> Result<ProductVector> {
    let (two, n) = state.dims;
    if two != 2 || !(1..=5).contains(&n) {
        return Err(Error::Dimension(format!("expected C^2 ⊗ C^n with n ≤ 5, got {:?}", state.dims)));
    }
    if !state.is_ppt(tol) {
        return Err(Error::Precondition("state is not PPT".into()));
    }
    let range = state.range(tol);
    let found = match products_in_subspace_2xn(&range, n, tol)? {
        TwoByN::Curve(c) => c
            .samples
            .into_iter()
            .zip(c.membership)
            .find(|(_, m)| *m <= tol.residual)
            .map(|(s, _)| s),
        TwoByN::Finite(sol) => sol.points.into_iter().next(),
    };
    found.ok_or_else(|| Error::Numerical("no product vector found in the range of a PPT state".into()))
}

/// Largest `|⟨φ'⊗ψ|ρ|φ⊗ψ'⟩|` over basis vectors `φ'`, `ψ'`, relative to `‖ρ‖`.
pub fn kernel_condition_residual(rho: &CMatrix, pv: &ProductVector) -> f64 {
    let (phi, psi) = (pv.phi().normalize(), pv.psi().normalize());
    let (n, m) = (phi.len(), psi.len());
    let scale = frobenius(rho);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..m {
            let left = crate::linalg::kron(&crate::linalg::basis(n, i), &psi);
            let right = crate::linalg::kron(&phi, &crate::linalg::basis(m, j));
            worst = worst.max(left.dotc(&(rho * right)).norm() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::PentagramUpb;

    const SAMPLE: (f64, f64, f64, f64) = (-1.0, 2.0, 0.5, 0.25);

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn closed_form_shape() {
        let (p, q, r, s) = SAMPLE;
        let m = rho_from_params(p, q, r, s, Sign::Plus).unwrap();
        for k in [0, 4, 8] {
            assert!(m.row(k).camax() == 0.0 && m.column(k).camax() == 0.0);
        }
        let pt = partial_transpose(&m, (3, 3), Subsystem::First).unwrap();
        assert!(frobenius(&(&pt - &m)) < 1e-12 * frobenius(&m));
        assert!(frobenius(&(m.transpose() - &m)) == 0.0);
    }

    #[test]
    fn sample_point_signs() {
        let (p, q, r, s) = SAMPLE;
        let t = tol();
        let plus = hermitian_eigen(&rho_from_params(p, q, r, s, Sign::Plus).unwrap(), &t).unwrap();
        assert!(plus.values[0] > -1e-12);
        assert_eq!(plus.values.iter().filter(|v| **v > 1e-9).count(), 4);
        let minus = hermitian_eigen(&rho_from_params(p, q, r, s, Sign::Minus).unwrap(), &t).unwrap();
        assert!(minus.values[0] < -1e-3);
    }

    #[test]
    fn vanishing_atom_rejected() {
        assert!(matches!(rho_from_params(2.0, 2.0, 0.5, 0.3, Sign::Plus), Err(Error::VanishingAtom("pq"))));
        assert!(rho_from_constraints(1.0, 2.0, 0.5, 0.3, &tol()).is_err());
    }

    #[test]
    fn constraints_match_closed_form_at_sample() {
        let (p, q, r, s) = SAMPLE;
        let sol = rho_from_constraints(p, q, r, s, &tol()).unwrap();
        assert_eq!(sol.nullspace_dim, 1);
        assert!(sol.linear_residual < 1e-10);
        assert!(sol.imaginary_part < 1e-10);
        let closed = closed_form(re(p), re(q), re(r), re(s));
        assert!(sol.proportionality_residual(&closed) < 1e-8);
    }

    #[test]
    fn projector_of_standard_upb() {
        let t = tol();
        let upb = PentagramUpb::from_parameters(1.0, 1.0, 1.0, 1.0);
        let st = oupb_projector(&upb, &t).unwrap();
        assert_eq!((st.rank, st.rank_t1), (4, 4));
        assert!(st.min_eig >= -1e-12 && st.min_eig_t1 >= -1e-12);
        assert!((st.rho.trace() - re(1.0)).norm() < 1e-14);
        assert!(st.kernel_residual(&upb.products()) < 1e-14);
    }

    #[test]
    fn kernel_condition_holds_for_projector() {
        let upb = PentagramUpb::from_parameters(0.7, 1.9, 1.4, 0.5);
        let st = oupb_projector(&upb, &tol()).unwrap();
        for pv in upb.products() {
            assert!(kernel_condition_residual(&st.rho, &pv) < 1e-12);
        }
    }
}
