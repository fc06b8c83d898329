//! Generalized unextendible product bases: certification and construction.
//!
//! A set of product vectors is a gUPB when no product vector is orthogonal to
//! all of them. Orthogonality within the set is not required.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{
    column_space, fubini_study, hstack, kron, null_space, numerical_rank, projective_normalize,
    re, CMatrix, CVector, Tolerance,
};

pub const MAX_BIPARTITE: usize = 20;
pub const MAX_MULTIPARTITE: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductVector {
    #[serde(with = "json::vectors")]
    pub factors: Vec<CVector>,
}

impl ProductVector {
    pub fn new(factors: Vec<CVector>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Input("product vector without factors".into()));
        }
        if let Some(k) = factors.iter().position(|f| f.is_empty() || f.norm() == 0.0) {
            return Err(Error::Input(format!("factor {k} is zero")));
        }
        Ok(ProductVector { factors })
    }

    pub fn bipartite(phi: CVector, psi: CVector) -> Self {
        ProductVector {
            factors: vec![phi, psi],
        }
    }

    pub fn phi(&self) -> &CVector {
        &self.factors[0]
    }

    pub fn psi(&self) -> &CVector {
        &self.factors[1]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.len()).collect()
    }

    /// The full tensor product vector.
    pub fn vector(&self) -> CVector {
        let mut out = self.factors[0].clone();
        for f in &self.factors[1..] {
            out = kron(&out, f);
        }
        out
    }

    /// Apply one matrix per factor.
    pub fn transformed(&self, mats: &[&CMatrix]) -> Self {
        ProductVector {
            factors: self
                .factors
                .iter()
                .zip(mats)
                .map(|(f, m)| *m * f)
                .collect(),
        }
    }

    /// Each factor scaled so its leading significant entry is one.
    pub fn normalized(&self) -> Self {
        ProductVector {
            factors: self.factors.iter().map(projective_normalize).collect(),
        }
    }

    pub fn unit(&self) -> Self {
        ProductVector {
            factors: self.factors.iter().map(|f| f.normalize()).collect(),
        }
    }

    /// Complex conjugate of the first factor.
    pub fn partial_conjugate(&self) -> Self {
        let mut factors = self.factors.clone();
        factors[0] = factors[0].conjugate();
        ProductVector { factors }
    }

    pub fn projectively_equal(&self, other: &Self, tol: &Tolerance) -> bool {
        self.factors.len() == other.factors.len()
            && self
                .factors
                .iter()
                .zip(&other.factors)
                .all(|(a, b)| a.len() == b.len() && fubini_study(a, b) < tol.dedup)
    }

    /// Largest normalized overlap with the given vectors.
    pub fn max_overlap(&self, others: &[ProductVector]) -> f64 {
        let x = self.vector();
        others
            .iter()
            .map(|o| {
                let y = o.vector();
                x.dotc(&y).norm() / (x.norm() * y.norm())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GupbKind {
    Minimal,
    General,
    Multipartite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GupbCertificate {
    pub kind: GupbKind,
    pub verdict: bool,
    pub witness: Option<ProductVector>,
    pub checked_partitions: u64,
}

fn check_dims(vectors: &[ProductVector], dims: &[usize]) -> Result<()> {
    for (k, v) in vectors.iter().enumerate() {
        if v.dims() != dims {
            return Err(Error::Dimension(format!(
                "vector {k} has dims {:?}, expected {dims:?}",
                v.dims()
            )));
        }
    }
    Ok(())
}

fn factor_matrix(vectors: &[ProductVector], side: usize, idx: &[usize]) -> CMatrix {
    let cols: Vec<CVector> = idx.iter().map(|&i| vectors[i].factors[side].clone()).collect();
    hstack(&cols)
}

/// A unit vector orthogonal to the given factors, which must not span.
fn orthogonal_factor(vectors: &[ProductVector], side: usize, idx: &[usize], dim: usize, tol: &Tolerance) -> CVector {
    if idx.is_empty() {
        let mut e = CVector::zeros(dim);
        e[0] = re(1.0);
        return e;
    }
    let ns = null_space(&factor_matrix(vectors, side, idx).adjoint(), tol);
    ns.column(0).into_owned()
}

/// All k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn complement(n: usize, idx: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !idx.contains(i)).collect()
}

/// Minimal gUPB test: exactly `n + m - 1` vectors, every `n` of the first
/// factors and every `m` of the second factors linearly independent.
pub fn is_minimal_gupb(vectors: &[ProductVector], dims: (usize, usize), tol: &Tolerance) -> Result<GupbCertificate> {
    let (n, m) = dims;
    let need = n + m - 1;
    if vectors.len() < need {
        return Err(Error::TooFewVectors {
            count: vectors.len(),
            n,
            m,
            min: need,
        });
    }
    if vectors.len() != need {
        return Err(Error::WrongCount {
            expected: need,
            got: vectors.len(),
        });
    }
    check_dims(vectors, &[n, m])?;
    let total = vectors.len();
    let mut checked = 0u64;
    for (side, k) in [(0usize, n), (1usize, m)] {
        for sub in subsets(total, k) {
            checked += 1;
            if numerical_rank(&factor_matrix(vectors, side, &sub), tol) < k {
                let rest = complement(total, &sub);
                let (nidx, midx) = if side == 0 { (sub, rest) } else { (rest, sub) };
                let f = orthogonal_factor(vectors, 0, &nidx, n, tol);
                let g = orthogonal_factor(vectors, 1, &midx, m, tol);
                return Ok(GupbCertificate {
                    kind: GupbKind::Minimal,
                    verdict: false,
                    witness: Some(ProductVector::bipartite(f, g)),
                    checked_partitions: checked,
                });
            }
        }
    }
    Ok(GupbCertificate {
        kind: GupbKind::Minimal,
        verdict: true,
        witness: None,
        checked_partitions: checked,
    })
}

/// Incrementally grown orthonormal basis.
#[derive(Clone)]
struct Span {
    dim: usize,
    basis: Vec<CVector>,
    eps: f64,
}

impl Span {
    fn new(dim: usize, tol: &Tolerance) -> Self {
        Span {
            dim,
            basis: Vec::with_capacity(dim),
            eps: tol.rank_rel * dim as f64,
        }
    }

    fn full(&self) -> bool {
        self.basis.len() == self.dim
    }

    fn add(&mut self, v: &CVector) {
        if self.full() {
            return;
        }
        let mut r = v.normalize();
        for _ in 0..2 {
            for q in &self.basis {
                let c = q.dotc(&r);
                r -= q * c;
            }
        }
        let nr = r.norm();
        if nr > self.eps {
            self.basis.push(r / re(nr));
        }
    }
}

struct Search<'a> {
    vectors: &'a [ProductVector],
    checked: u64,
}

impl Search<'_> {
    /// Depth-first over block assignments; returns the first assignment in
    /// which no block spans its space.
    fn run(&mut self, idx: usize, spans: &mut Vec<Span>, assign: &mut Vec<usize>) -> Option<Vec<usize>> {
        let total = self.vectors.len();
        let blocks = spans.len();
        if spans.iter().any(Span::full) {
            self.checked = self
                .checked
                .saturating_add((blocks as u64).saturating_pow((total - idx) as u32));
            return None;
        }
        if idx == total {
            self.checked += 1;
            return Some(assign.clone());
        }
        for b in 0..blocks {
            let saved = spans[b].clone();
            spans[b].add(&self.vectors[idx].factors[b]);
            assign.push(b);
            let found = self.run(idx + 1, spans, assign);
            assign.pop();
            spans[b] = saved;
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

fn partition_search(
    vectors: &[ProductVector],
    dims: &[usize],
    tol: &Tolerance,
) -> (Option<Vec<usize>>, u64) {
    let mut spans: Vec<Span> = dims.iter().map(|&d| Span::new(d, tol)).collect();
    let mut search = Search { vectors, checked: 0 };
    let found = search.run(0, &mut spans, &mut Vec::with_capacity(vectors.len()));
    (found, search.checked)
}

fn witness_from_assignment(
    vectors: &[ProductVector],
    dims: &[usize],
    assign: &[usize],
    tol: &Tolerance,
) -> ProductVector {
    let factors = dims
        .iter()
        .enumerate()
        .map(|(b, &d)| {
            let idx: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] == b).collect();
            orthogonal_factor(vectors, b, &idx, d, tol)
        })
        .collect();
    ProductVector { factors }
}

/// General gUPB test by exhaustive bipartition search with spanning pruning.
pub fn is_gupb(vectors: &[ProductVector], dims: (usize, usize), tol: &Tolerance) -> Result<GupbCertificate> {
    let (n, m) = dims;
    let need = n + m - 1;
    if vectors.len() < need {
        return Err(Error::TooFewVectors {
            count: vectors.len(),
            n,
            m,
            min: need,
        });
    }
    if vectors.len() > MAX_BIPARTITE {
        return Err(Error::TooManyVectors {
            count: vectors.len(),
            cap: MAX_BIPARTITE,
        });
    }
    check_dims(vectors, &[n, m])?;
    let (found, checked) = partition_search(vectors, &[n, m], tol);
    Ok(GupbCertificate {
        kind: GupbKind::General,
        verdict: found.is_none(),
        witness: found.map(|a| witness_from_assignment(vectors, &[n, m], &a, tol)),
        checked_partitions: checked,
    })
}

/// Multipartite test over all assignments of vectors to parties.
pub fn is_gupb_multipartite(vectors: &[ProductVector], dims: &[usize], tol: &Tolerance) -> Result<GupbCertificate> {
    if dims.len() < 2 {
        return Err(Error::Input("need at least two parties".into()));
    }
    let need = dims.iter().sum::<usize>() - dims.len() + 1;
    if vectors.len() < need {
        return Err(Error::TooFewVectors {
            count: vectors.len(),
            n: dims[0],
            m: dims[1..].iter().product(),
            min: need,
        });
    }
    if vectors.len() > MAX_MULTIPARTITE {
        return Err(Error::TooManyVectors {
            count: vectors.len(),
            cap: MAX_MULTIPARTITE,
        });
    }
    check_dims(vectors, dims)?;
    let (found, checked) = partition_search(vectors, dims, tol);
    Ok(GupbCertificate {
        kind: GupbKind::Multipartite,
        verdict: found.is_none(),
        witness: found.map(|a| witness_from_assignment(vectors, dims, &a, tol)),
        checked_partitions: checked,
    })
}

fn moments(x: f64, len: usize) -> CVector {
    CVector::from_iterator(len, (0..len).map(|k| re(x.powi(k as i32))))
}

fn check_distinct(nodes: &[f64]) -> Result<()> {
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if (nodes[i] - nodes[j]).abs() <= 1e-12 * (1.0 + nodes[i].abs()) {
                return Err(Error::RepeatedNode(i, j));
            }
        }
    }
    Ok(())
}

/// Minimal gUPB from moment vectors `(1, a, a², …)` at distinct nodes.
pub fn vandermonde_gupb(n: usize, m: usize, alphas: &[f64], betas: &[f64]) -> Result<Vec<ProductVector>> {
    let need = n + m - 1;
    if alphas.len() != need || betas.len() != need {
        return Err(Error::WrongCount {
            expected: need,
            got: alphas.len().min(betas.len()),
        });
    }
    check_distinct(alphas)?;
    check_distinct(betas)?;
    Ok(alphas
        .iter()
        .zip(betas)
        .map(|(&a, &b)| ProductVector::bipartite(moments(a, n), moments(b, m)))
        .collect())
}

/// All product vectors orthogonal to `n + m - 2` generic product vectors.
///
/// Each solution comes from a split of the inputs into `n - 1` vectors whose
/// first factors fix `φ` and `m - 1` vectors whose second factors fix `ψ`.
pub fn orthogonal_products(vectors: &[ProductVector], dims: (usize, usize), tol: &Tolerance) -> Result<Vec<ProductVector>> {
    let (n, m) = dims;
    let total = n + m - 2;
    if vectors.len() != total {
        return Err(Error::WrongCount {
            expected: total,
            got: vectors.len(),
        });
    }
    check_dims(vectors, &[n, m])?;
    for (side, d, name) in [(0usize, n, "first"), (1usize, m, "second")] {
        for k in [d - 1, d] {
            for sub in subsets(total, k) {
                if numerical_rank(&factor_matrix(vectors, side, &sub), tol) < k {
                    return Err(Error::Degenerate(format!("{name} factors {sub:?} are dependent")));
                }
            }
        }
    }
    let mut out: Vec<ProductVector> = Vec::new();
    for nidx in subsets(total, n - 1) {
        let midx = complement(total, &nidx);
        let f = orthogonal_factor(vectors, 0, &nidx, n, tol);
        let g = orthogonal_factor(vectors, 1, &midx, m, tol);
        let pv = ProductVector::bipartite(f, g).normalized();
        if !out.iter().any(|o| o.projectively_equal(&pv, tol)) {
            out.push(pv);
        }
    }
    for pv in &out {
        let overlap = pv.max_overlap(vectors);
        if overlap > tol.residual {
            return Err(Error::Numerical(format!("orthogonality residual {overlap:.3e}")));
        }
    }
    Ok(out)
}

/// Orthonormal basis of the span of the given product vectors.
pub fn span_basis(vectors: &[ProductVector], tol: &Tolerance) -> CMatrix {
    let cols: Vec<CVector> = vectors.iter().map(ProductVector::vector).collect();
    column_space(&hstack(&cols), tol)
}
