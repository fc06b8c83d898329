//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use upblab::canonical::{
    canonical_five, canonical_vectors, invariants, invariants_of, invariants_table1, pentagram_pattern, permute,
    PENTAGON_PERMUTATIONS,
};
use upblab::gupb::{is_gupb, is_minimal_gupb, orthogonal_products, span_basis, ProductVector};
use upblab::harness::{pentagram_sample, ppt_mixture_2xn, PentagramSample, MAX_CONDITION};
use upblab::linalg::{
    column_space, numerical_rank, re, rvec, span_residual, CMatrix, CVector, Tolerance,
};
use upblab::rng::{complex_normal, complex_vector, special_linear, trial_rng};
use upblab::segre::{products_in_kernel, products_in_range, transversality};
use upblab::signtables::{atoms, enumerate_admissible, is_forbidden, sign_relations_hold, Sign};
use upblab::states::{classify, closed_form, product_in_range_2xn, rho_from_constraints, Classification};

const SEED: u64 = 42;
const STATES: u64 = 100;

const KERNEL_RESIDUAL: f64 = 1e-8;
const KERNEL_BUDGET_SECS: f64 = 60.0;
const RECONSTRUCTION: f64 = 1e-6;
const EDGE_MEMBERSHIP: f64 = 1e-8;
const INVARIANT_REL: f64 = 1e-10;
const INVARIANT_SAMPLES: u64 = 50;
const PLUS_COUNT: u64 = 761;
const MINUS_COUNT: u64 = 352;
const TABLES_BUDGET_SECS: f64 = 30.0;
const TABLES_WORKERS: usize = 4;
const ORTHOGONALITY: f64 = 1e-8;
const ORTHOGONAL_TRIALS: u64 = 20;
const SPAN_RANK: f64 = 1e-10;
const PROPORTIONALITY: f64 = 1e-8;
const UNIQUENESS_SETS: usize = 20;
const RANGE_MEMBERSHIP: f64 = 1e-8;
const RANGE_STATES: u64 = 50;
const IMAG_PART: f64 = 1e-8;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

fn samples(tol: &Tolerance) -> Vec<PentagramSample> {
    (0..STATES)
        .into_par_iter()
        .map(|t| pentagram_sample(SEED, t, MAX_CONDITION, tol).expect("sample"))
        .collect()
}

fn bezout_count(states: &[PentagramSample], tol: &Tolerance) -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for (t, s) in states.iter().enumerate() {
        match products_in_kernel(&s.state.kernel, tol) {
            Ok(sol) => {
                worst = worst.max(sol.max_residual());
                let dims_ok = sol
                    .points
                    .iter()
                    .all(|p| transversality(&s.state.kernel, p, tol).map(|d| d == (true, 1)).unwrap_or(false));
                if sol.len() != 6 || sol.max_residual() >= KERNEL_RESIDUAL || !dims_ok {
                    bad.push(t);
                }
            }
            Err(_) => bad.push(t),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && secs < KERNEL_BUDGET_SECS;
    report(
        1,
        "six kernel products",
        pass,
        format!("{}/{} states, max residual {worst:.1e}, {secs:.1}s, failing trials {bad:?}", states.len() - bad.len(), states.len()),
    )
}

fn round_trip(states: &[PentagramSample], tol: &Tolerance) -> Outcome {
    let results: Vec<Option<f64>> = states
        .par_iter()
        .map(|s| match classify(&s.state, tol) {
            Ok(Classification::EntangledUpbForm { residual, .. }) => Some(residual),
            _ => None,
        })
        .collect();
    let ok = results.iter().filter(|r| matches!(r, Some(x) if *x <= RECONSTRUCTION)).count();
    let worst = results.iter().flatten().copied().fold(0.0, f64::max);
    report(
        2,
        "classification round trip",
        ok == states.len(),
        format!("{ok}/{} entangled UPB form, max residual {worst:.1e}", states.len()),
    )
}

fn equal_ranks(states: &[PentagramSample]) -> Outcome {
    let ok = states.iter().filter(|s| s.state.rank == 4 && s.state.rank_t1 == 4).count();
    report(3, "rank and partial-transpose rank are four", ok == states.len(), format!("{ok}/{}", states.len()))
}

fn edge(states: &[PentagramSample], tol: &Tolerance) -> Outcome {
    let results: Vec<Option<usize>> = states
        .par_iter()
        .map(|s| {
            let sol = products_in_range(&s.state.range(tol), tol).ok()?;
            let range_t = column_space(&s.state.partial_transpose(), tol);
            Some(
                sol.points
                    .iter()
                    .filter(|p| span_residual(&range_t, &p.partial_conjugate().vector(), tol) <= EDGE_MEMBERSHIP)
                    .count(),
            )
        })
        .collect();
    let ok = results.iter().filter(|r| **r == Some(0)).count();
    report(4, "edge states", ok == states.len(), format!("{ok}/{} without a range product pair", states.len()))
}

fn invariant_forms() -> Outcome {
    let mut worst_pattern: f64 = 0.0;
    let mut rng = trial_rng(SEED, 5000);
    for _ in 0..INVARIANT_SAMPLES {
        let a: f64 = rng.random_range(0.3..3.0);
        let b: f64 = rng.random_range(0.3..3.0);
        let g = special_linear(&mut rng, 3, MAX_CONDITION);
        let moved: Vec<CVector> = pentagram_pattern(a, b).iter().map(|v| (&g * v) * complex_normal(&mut rng)).collect();
        let inv = invariants(&moved, &moved).expect("invariants");
        let e1 = (inv.s1 - re(a * a)).norm() / (a * a);
        let e2 = (inv.s2 - re(b * b / (a * a))).norm() / (b * b / (a * a));
        worst_pattern = worst_pattern.max(e1).max(e2);
    }
    let mut worst_table: f64 = 0.0;
    let mut rng = trial_rng(SEED, 5001);
    for _ in 0..INVARIANT_SAMPLES {
        let z = complex_vector(&mut rng, 4);
        let v = canonical_vectors(z[0], z[1], z[2], z[3]);
        for (k, perm) in PENTAGON_PERMUTATIONS.iter().enumerate() {
            let det = invariants_of(&permute(&v, perm)).expect("determinant invariants");
            let closed = invariants_table1(z[0], z[1], z[2], z[3], k + 1).expect("closed form");
            worst_table = worst_table.max(det.max_relative_difference(&closed));
        }
    }
    report(
        5,
        "invariant closed forms",
        worst_pattern <= INVARIANT_REL && worst_table <= INVARIANT_REL,
        format!("pattern max rel {worst_pattern:.1e}, 12 rows x {INVARIANT_SAMPLES} max rel {worst_table:.1e}"),
    )
}

fn sign_tables() -> Outcome {
    let start = Instant::now();
    let rep = match enumerate_admissible(TABLES_WORKERS) {
        Ok(r) => r,
        Err(e) => return report(6, "sign-table enumeration", false, format!("error: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let mut rows: Vec<usize> = rep.positive_configs.iter().filter_map(|c| c.table2_row).collect();
    rows.sort();
    rows.dedup();
    let bijection = rows.len() == 12 && rep.positive_configs.iter().all(|c| c.table2_row.is_some());
    let single_row = rep.positive_configs.iter().all(|c| c.table1_rows.len() == 1);
    let pass = rep.count_plus == PLUS_COUNT
        && rep.count_minus == MINUS_COUNT
        && rep.positive_configs.len() == 12
        && rep.count(Sign::Plus) == 10
        && rep.count(Sign::Minus) == 2
        && bijection
        && single_row
        && secs < TABLES_BUDGET_SECS;
    report(
        6,
        "sign-table enumeration",
        pass,
        format!(
            "admissible {}/{} (required {PLUS_COUNT}/{MINUS_COUNT}), positive {} ({}+, {}-), table rows matched {}, single permutation row {single_row}, {secs:.2}s",
            rep.count_plus,
            rep.count_minus,
            rep.positive_configs.len(),
            rep.count(Sign::Plus),
            rep.count(Sign::Minus),
            rows.len()
        ),
    )
}

fn orthogonal_counts(tol: &Tolerance) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (dims, expected) in [((2usize, 2usize), 2usize), ((2, 3), 3), ((3, 3), 6)] {
        let mut ok = 0;
        let mut worst: f64 = 0.0;
        for trial in 0..ORTHOGONAL_TRIALS {
            let mut rng = trial_rng(SEED, 6000 + trial);
            let v: Vec<ProductVector> = (0..dims.0 + dims.1 - 2)
                .map(|_| ProductVector::bipartite(complex_vector(&mut rng, dims.0), complex_vector(&mut rng, dims.1)))
                .collect();
            if let Ok(sols) = orthogonal_products(&v, dims, tol) {
                let res = sols.iter().map(|s| s.unit().max_overlap(&v.iter().map(|x| x.unit()).collect::<Vec<_>>())).fold(0.0, f64::max);
                worst = worst.max(res);
                if sols.len() == expected && res < ORTHOGONALITY {
                    ok += 1;
                }
            }
        }
        pass &= ok == ORTHOGONAL_TRIALS;
        parts.push(format!("{}x{}: {ok}/{ORTHOGONAL_TRIALS} with {expected} (max overlap {worst:.1e})", dims.0, dims.1));
    }
    report(7, "orthogonal product counts", pass, parts.join(", "))
}

fn example_sets(tol: &Tolerance) -> Outcome {
    let pv = |a: &[f64], b: &[f64]| ProductVector::bipartite(rvec(a), rvec(b));
    let five = vec![
        pv(&[1., 0.], &[1., 0., 0.]),
        pv(&[0., 1.], &[0., 1., 0.]),
        pv(&[1., 1.], &[0., 0., 1.]),
        pv(&[0., 1.], &[1., 1., 1.]),
        pv(&[1., 0.], &[1., 2., -1.]),
    ];
    let quad = vec![
        pv(&[1., -1.], &[1., -2., 1.]),
        pv(&[1., 1.], &[1., -2., 2.]),
        pv(&[1., 0.], &[1., -6., 3.]),
        pv(&[1., 2.], &[1., -4., 0.]),
    ];
    let general = is_gupb(&five, (2, 3), tol).map(|c| c.verdict).unwrap_or(false);
    let subsets_fail = (0..5).all(|drop| {
        let sub: Vec<_> = (0..5).filter(|&i| i != drop).map(|i| five[i].clone()).collect();
        matches!(is_minimal_gupb(&sub, (2, 3), tol), Ok(c) if !c.verdict)
    });
    let span = span_basis(&five, tol);
    let tight = Tolerance { rank_rel: SPAN_RANK, ..*tol };
    let in_span = quad.iter().all(|w| {
        let mut cols: Vec<CVector> = (0..span.ncols()).map(|i| span.column(i).into_owned()).collect();
        cols.push(w.vector());
        numerical_rank(&CMatrix::from_columns(&cols), &tight) == span.ncols()
    });
    let minimal = is_minimal_gupb(&quad, (2, 3), tol).map(|c| c.verdict).unwrap_or(false);
    report(
        8,
        "five-vector example",
        general && subsets_fail && in_span && minimal,
        format!("gupb {general}, all 4-subsets fail {subsets_fail}, quadruple in span {in_span}, quadruple minimal {minimal}"),
    )
}

fn uniqueness(tol: &Tolerance) -> Outcome {
    let mut rng = trial_rng(SEED, 7000);
    let mut ok = 0;
    let mut done = 0;
    let mut worst: f64 = 0.0;
    while done < UNIQUENESS_SETS {
        let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let a = atoms(x[0], x[1], x[2], x[3]);
        if a.values.iter().any(|v| v.abs() < 1e-2) {
            continue;
        }
        let cfg = a.sign_config().expect("nonzero atoms");
        if is_forbidden(cfg) || !Sign::both().iter().any(|&g| sign_relations_hold(cfg, g)) {
            continue;
        }
        done += 1;
        if let Ok(sol) = rho_from_constraints(x[0], x[1], x[2], x[3], tol) {
            let res = sol.proportionality_residual(&closed_form(re(x[0]), re(x[1]), re(x[2]), re(x[3])));
            worst = worst.max(res);
            if sol.nullspace_dim == 1 && res <= PROPORTIONALITY {
                ok += 1;
            }
        }
    }
    report(
        9,
        "unique state from kernel constraints",
        ok == UNIQUENESS_SETS,
        format!("{ok}/{UNIQUENESS_SETS} one-dimensional and proportional, max residual {worst:.1e}"),
    )
}

fn range_products_2xn(tol: &Tolerance) -> Outcome {
    let results: Vec<Option<f64>> = (0..RANGE_STATES)
        .into_par_iter()
        .map(|t| {
            let st = ppt_mixture_2xn(SEED, 8000 + t, 4, tol).ok()?;
            if !st.is_ppt(tol) {
                return None;
            }
            let pv = product_in_range_2xn(&st, tol).ok()?;
            Some(span_residual(&st.range(tol), &pv.vector(), tol))
        })
        .collect();
    let ok = results.iter().filter(|r| matches!(r, Some(x) if *x <= RANGE_MEMBERSHIP)).count();
    let worst = results.iter().flatten().copied().fold(0.0, f64::max);
    report(
        10,
        "product in the range on 2x4",
        ok as u64 == RANGE_STATES,
        format!("{ok}/{RANGE_STATES}, max membership residual {worst:.1e}"),
    )
}

fn real_parameters(states: &[PentagramSample]) -> Outcome {
    let imags: Vec<Option<f64>> = states
        .par_iter()
        .map(|s| canonical_five(&s.kernel_products().ok()?).ok().map(|c| c.max_imag()))
        .collect();
    let ok = imags.iter().filter(|r| matches!(r, Some(x) if *x <= IMAG_PART)).count();
    let worst = imags.iter().flatten().copied().fold(0.0, f64::max);
    report(
        11,
        "real canonical parameters",
        ok == states.len(),
        format!("{ok}/{}, max imaginary part {worst:.1e}", states.len()),
    )
}

fn main() {
    let tol = Tolerance::default();
    let states = samples(&tol);
    let outcomes = vec![
        bezout_count(&states, &tol),
        round_trip(&states, &tol),
        equal_ranks(&states),
        edge(&states, &tol),
        invariant_forms(),
        sign_tables(),
        orthogonal_counts(&tol),
        example_sets(&tol),
        uniqueness(&tol),
        range_products_2xn(&tol),
        real_parameters(&states),
    ];
    let mut failed = 0;
    for o in &outcomes {
        println!("[{}] {:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
