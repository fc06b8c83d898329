mod common;

use common::{als_products, orthonormal};
use upblab::gupb::{is_gupb, is_minimal_gupb, orthogonal_products, span_basis, ProductVector};
use upblab::linalg::{numerical_rank, orthogonal_complement, rvec, CMatrix, CVector, Tolerance};
use upblab::rng::{complex_vector, trial_rng};
use upblab::segre::products_in_kernel;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn pv(phi: &[f64], psi: &[f64]) -> ProductVector {
    ProductVector::bipartite(rvec(phi), rvec(psi))
}

fn random_products(seed: u64, trial: u64, count: usize, dims: (usize, usize)) -> Vec<ProductVector> {
    let mut rng = trial_rng(seed, trial);
    (0..count)
        .map(|_| ProductVector::bipartite(complex_vector(&mut rng, dims.0), complex_vector(&mut rng, dims.1)))
        .collect()
}

fn complement_of(vectors: &[ProductVector]) -> CMatrix {
    let cols: Vec<CVector> = vectors.iter().map(|p| p.vector()).collect();
    orthogonal_complement(&CMatrix::from_columns(&cols), &tol())
}

#[test]
fn orthogonal_product_counts_match_search_oracle() {
    let t = tol();
    for (dims, expected) in [((2, 2), 2), ((2, 3), 3), ((3, 3), 6)] {
        for trial in 0..20 {
            let v = random_products(7, trial, dims.0 + dims.1 - 2, dims);
            let sols = orthogonal_products(&v, dims, &t).unwrap();
            assert_eq!(sols.len(), expected, "{dims:?} trial {trial}");
            for s in &sols {
                assert!(s.max_overlap(&v) < 1e-8);
            }
            if trial < 3 {
                let q = complement_of(&v);
                let oracle = als_products(&q, dims, 200, trial);
                assert_eq!(oracle.len(), expected, "{dims:?} trial {trial}");
                assert!(oracle.iter().all(|o| sols.iter().any(|s| s.projectively_equal(o, &t))));
            }
            if dims == (3, 3) {
                let segre = products_in_kernel(&complement_of(&v), &t).unwrap();
                assert_eq!(segre.len(), 6);
                assert!(segre.points.iter().all(|o| sols.iter().any(|s| s.projectively_equal(o, &t))));
            }
        }
    }
}

#[test]
fn generic_minimal_sets_leave_no_orthogonal_product() {
    let t = tol();
    for (trial, dims) in [(2, 3), (3, 3), (2, 4)].into_iter().enumerate() {
        let v = random_products(8, trial as u64, dims.0 + dims.1 - 1, dims);
        assert!(is_minimal_gupb(&v, dims, &t).unwrap().verdict);
        assert!(is_gupb(&v, dims, &t).unwrap().verdict);
        assert!(als_products(&complement_of(&v), dims, 100, trial as u64).is_empty());
    }
}

#[test]
fn negative_verdicts_carry_a_checked_witness() {
    let t = tol();
    for trial in 0..10 {
        let mut v = random_products(9, trial, 5, (3, 3));
        v[1] = ProductVector::bipartite(v[0].phi().clone(), v[1].psi().clone());
        v[2] = ProductVector::bipartite(v[0].phi().clone(), v[2].psi().clone());
        let cert = is_minimal_gupb(&v, (3, 3), &t).unwrap();
        assert!(!cert.verdict);
        let w = cert.witness.unwrap();
        assert!(w.max_overlap(&v) < 1e-10);
        assert!(!als_products(&complement_of(&v), (3, 3), 50, trial).is_empty());
    }
}

fn example_five() -> Vec<ProductVector> {
    vec![
        pv(&[1., 0.], &[1., 0., 0.]),
        pv(&[0., 1.], &[0., 1., 0.]),
        pv(&[1., 1.], &[0., 0., 1.]),
        pv(&[0., 1.], &[1., 1., 1.]),
        pv(&[1., 0.], &[1., 2., -1.]),
    ]
}

fn example_quadruple() -> Vec<ProductVector> {
    vec![
        pv(&[1., -1.], &[1., -2., 1.]),
        pv(&[1., 1.], &[1., -2., 2.]),
        pv(&[1., 0.], &[1., -6., 3.]),
        pv(&[1., 2.], &[1., -4., 0.]),
    ]
}

#[test]
fn five_vector_example_and_its_minimal_quadruple() {
    let t = tol();
    let v = example_five();
    assert!(is_gupb(&v, (2, 3), &t).unwrap().verdict);
    assert!(als_products(&complement_of(&v), (2, 3), 100, 1).is_empty());
    for drop in 0..5 {
        let sub: Vec<_> = (0..5).filter(|&i| i != drop).map(|i| v[i].clone()).collect();
        assert!(!is_minimal_gupb(&sub, (2, 3), &t).unwrap().verdict);
    }
    let quad = example_quadruple();
    let span = span_basis(&v, &t);
    assert_eq!(span.ncols(), 5);
    let tight = Tolerance { rank_rel: 1e-10, ..t };
    for w in &quad {
        let cols: Vec<CVector> = (0..5).map(|i| span.column(i).into_owned()).chain([w.vector()]).collect();
        assert_eq!(numerical_rank(&CMatrix::from_columns(&cols), &tight), 5);
    }
    assert!(is_minimal_gupb(&quad, (2, 3), &t).unwrap().verdict);
    let q = orthonormal(&quad.iter().map(|p| p.vector()).collect::<Vec<_>>());
    let perp = orthogonal_complement(&q, &t);
    assert!(als_products(&perp, (2, 3), 100, 2).is_empty());
}
