mod common;

use common::{als_products, orthonormal};
use upblab::canonical::{canonical_vectors, PentagramUpb};
use upblab::gupb::ProductVector;
use upblab::linalg::{basis, kron, kron_mat, numerical_rank, re, CMatrix, CVector, Tolerance};
use upblab::rng::{complex_vector, ginibre, special_linear, trial_rng};
use upblab::segre::{
    basis_of, decompose, products_in_kernel, products_in_range, products_in_subspace_2xn, transversality, TwoByN,
};
use upblab::states::oupb_projector;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn same_sets(a: &[ProductVector], b: &[ProductVector], t: &Tolerance) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| x.projectively_equal(y, t)))
}

#[test]
fn diagonal_plus_generic_completion_has_six_products() {
    let t = tol();
    for seed in 0..3 {
        let mut rng = trial_rng(40 + seed, 0);
        let mut cols: Vec<CVector> = (0..3).map(|i| kron(&basis(3, i), &basis(3, i))).collect();
        cols.push(complex_vector(&mut rng, 9));
        cols.push(complex_vector(&mut rng, 9));
        let q = orthonormal(&cols);
        let sol = products_in_kernel(&q, &t).unwrap();
        assert_eq!(sol.len(), 6, "seed {seed}");
        let oracle = als_products(&q, (3, 3), 400, seed);
        assert!(same_sets(&sol.points, &oracle, &t), "seed {seed}: oracle found {}", oracle.len());
        assert!(sol.transverse.iter().all(|x| *x));
    }
}

#[test]
fn random_four_dim_subspaces_are_completely_entangled() {
    let t = tol();
    for seed in 0..3 {
        let mut rng = trial_rng(60 + seed, 0);
        let q = orthonormal(&(0..4).map(|_| complex_vector(&mut rng, 9)).collect::<Vec<_>>());
        assert!(products_in_range(&q, &t).unwrap().is_empty());
        assert!(als_products(&q, (3, 3), 100, seed).is_empty());
    }
}

#[test]
fn projector_kernel_is_transverse_everywhere() {
    let t = tol();
    let upb = PentagramUpb::from_parameters(1.0, 1.0, 1.0, 1.0);
    let st = oupb_projector(&upb, &t).unwrap();
    let sol = products_in_kernel(&st.kernel, &t).unwrap();
    assert_eq!(sol.len(), 6);
    for p in &sol.points {
        assert_eq!(transversality(&st.kernel, p, &t).unwrap(), (true, 1));
    }
    let range = st.range(&t);
    assert!(products_in_range(&range, &t).unwrap().is_empty());
}

#[test]
fn canonical_span_has_a_sixth_point_with_full_support() {
    let t = tol();
    let v = canonical_vectors(re(-1.0), re(2.0), re(0.5), re(0.25));
    let sol = products_in_kernel(&basis_of(&v), &t).unwrap();
    assert_eq!(sol.len(), 6);
    let sixth = (0..6)
        .find(|&i| v.iter().all(|x| !x.projectively_equal(&sol.points[i], &t)))
        .expect("one new point");
    let (coeffs, res) = decompose(&sol.points, sixth).unwrap();
    assert!(res < 1e-8);
    assert!(coeffs.iter().all(|c| c.norm() > 1e-6), "{coeffs:?}");
    let conj: Vec<ProductVector> = sol.points.iter().map(|p| p.partial_conjugate()).collect();
    let (xi, res) = decompose(&conj, sixth).unwrap();
    assert!(res < 1e-8);
    for (a, b) in coeffs.iter().zip(&xi) {
        assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()));
    }
}

#[test]
fn solutions_move_with_local_maps() {
    let t = tol();
    for trial in 0..50 {
        let mut rng = trial_rng(70, trial);
        let pts: Vec<ProductVector> = (0..5)
            .map(|_| ProductVector::bipartite(complex_vector(&mut rng, 3), complex_vector(&mut rng, 3)))
            .collect();
        let base = products_in_kernel(&basis_of(&pts), &t).unwrap();
        let a = special_linear(&mut rng, 3, 20.0);
        let b = special_linear(&mut rng, 3, 20.0);
        let moved_basis = kron_mat(&a, &b) * basis_of(&pts);
        let moved = products_in_kernel(&moved_basis, &t).unwrap();
        let expected: Vec<ProductVector> = base.points.iter().map(|p| p.transformed(&[&a, &b])).collect();
        assert!(same_sets(&moved.points, &expected, &t), "trial {trial}");
    }
}

#[test]
fn generic_three_dim_subspace_of_two_by_three() {
    let t = tol();
    for seed in 0..5 {
        let mut rng = trial_rng(80 + seed, 0);
        let q = orthonormal(&(0..3).map(|_| complex_vector(&mut rng, 6)).collect::<Vec<_>>());
        let TwoByN::Finite(sol) = products_in_subspace_2xn(&q, 3, &t).unwrap() else {
            panic!("expected finitely many products");
        };
        assert!(sol.len() <= 3);
        let oracle = als_products(&q, (2, 3), 300, seed);
        assert!(same_sets(&sol.points, &oracle, &t), "seed {seed}: {} vs {}", sol.len(), oracle.len());
    }
}

#[test]
fn complement_of_random_ces_is_a_curve() {
    let t = tol();
    for seed in 0..5 {
        let mut rng = trial_rng(90 + seed, 0);
        let ces = ginibre(&mut rng, 6, 2);
        assert!(als_products(&orthonormal(&[ces.column(0).into(), ces.column(1).into()]), (2, 3), 60, seed).is_empty());
        let comp = upblab::linalg::orthogonal_complement(&ces, &t);
        match products_in_subspace_2xn(&comp, 3, &t).unwrap() {
            TwoByN::Curve(curve) => {
                assert_eq!(curve.samples.len(), 7);
                assert!(curve.membership.iter().all(|m| *m <= 1e-8));
                assert_eq!(curve.span_rank, 4);
                assert!(curve.spans_subspace());
            }
            TwoByN::Finite(_) => panic!("expected a curve"),
        }
    }
}

#[test]
fn product_spans_in_range_search() {
    let t = tol();
    let mut rng = trial_rng(99, 0);
    let pts: Vec<ProductVector> = (0..4)
        .map(|_| ProductVector::bipartite(complex_vector(&mut rng, 3), complex_vector(&mut rng, 3)))
        .collect();
    let sol = products_in_range(&basis_of(&pts), &t).unwrap();
    assert!(same_sets(&sol.points, &pts, &t));
    let rank = numerical_rank(&CMatrix::from_columns(&pts.iter().map(|p| p.vector()).collect::<Vec<_>>()), &t);
    assert_eq!(rank, 4);
}

