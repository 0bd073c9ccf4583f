use normnash::numerics::{
    default_rank_tolerance, lp_max, nullspace_basis, rank, solve_square, svd, symmetric_min_eigenvalue, DenseMatrix,
    NumericsError,
};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-1.0..1.0f64, rows * cols).prop_map(move |d| DenseMatrix::new(rows, cols, d).unwrap())
}

fn wide() -> impl Strategy<Value = DenseMatrix> {
    (1usize..=6)
        .prop_flat_map(|n| (1usize..=n, Just(n)))
        .prop_flat_map(|(m, n)| matrix(m, n))
}

fn square() -> impl Strategy<Value = (DenseMatrix, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|n| (matrix(n, n), prop::collection::vec(-10.0..10.0f64, n)))
}

/// Product of Householder reflections: a random orthogonal matrix.
fn orthogonal(n: usize, vs: &[Vec<f64>]) -> DenseMatrix {
    let mut q = DenseMatrix::identity(n);
    for v in vs {
        let nn: f64 = v.iter().map(|x| x * x).sum();
        if nn < 1e-6 {
            continue;
        }
        let mut h = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= 2.0 * v[i] * v[j] / nn;
            }
        }
        q = q.matmul(&h);
    }
    q
}

fn condition(a: &DenseMatrix) -> f64 {
    let d = svd(a);
    d.max_singular_value() / d.min_singular_value()
}

/// Maximum of `c . z` over vertices of `A z <= b`, by trying every
/// `k`-subset of rows as the active set.
fn brute_force_lp(c: &[f64], a: &DenseMatrix, b: &[f64]) -> Option<f64> {
    let (m, k) = (a.rows(), a.cols());
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let rows: Vec<Vec<f64>> = subset.iter().map(|&i| a.row(i).to_vec()).collect();
        let sub = DenseMatrix::from_rows(&rows).unwrap();
        let rhs: Vec<f64> = subset.iter().map(|&i| b[i]).collect();
        if let Ok(z) = solve_square(&sub, &rhs, 1e-12) {
            let feasible = (0..m).all(|i| a.row(i).iter().zip(&z).map(|(x, y)| x * y).sum::<f64>() <= b[i] + 1e-9);
            if feasible {
                let v: f64 = c.iter().zip(&z).map(|(x, y)| x * y).sum();
                best = Some(best.map_or(v, |bv: f64| bv.max(v)));
            }
        }
        // next k-subset in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < m - k + i {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn full_rank_nullspace(a in wide()) {
        let d = svd(&a);
        prop_assume!(d.min_singular_value() > 1e-3 * d.max_singular_value());
        prop_assert_eq!(rank(&a, default_rank_tolerance(&a)), a.rows());
        let n = nullspace_basis(&a, default_rank_tolerance(&a));
        prop_assert_eq!(n.cols(), a.cols() - a.rows());
        prop_assert!(a.matmul(&n).max_abs() <= 1e-12);
        let gram = n.transpose().matmul(&n);
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn solve_square_multiplies_back((a, b) in square()) {
        prop_assume!(condition(&a) <= 1e8);
        let z = solve_square(&a, &b, 1e-14).unwrap();
        let back = a.matvec(&z);
        let err = back.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * (1.0 + bn), "err {err}");
    }

    #[test]
    fn min_eigenvalue_of_rotated_diagonal(
        (n, diag, vs) in (1usize..=8).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec(prop::collection::vec(-1.0..1.0f64, n), 1..4),
        ))
    ) {
        let q = orthogonal(n, &vs);
        let s = q.matmul(&DenseMatrix::diagonal(&diag)).matmul(&q.transpose());
        let want = diag.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((symmetric_min_eigenvalue(&s) - want).abs() <= 1e-10);
    }

    #[test]
    fn lp_matches_vertex_enumeration(
        (k, c, rows, b) in (2usize..=3).prop_flat_map(|k| (
            Just(k),
            prop::collection::vec(-1.0..1.0f64, k),
            prop::collection::vec(prop::collection::vec(-1.0..1.0f64, k), 0..=(8 - 2 * k)),
            prop::collection::vec(-0.5..2.0f64, 8),
        ))
    ) {
        // box |z_i| <= 3 keeps every problem bounded; total rows stay <= 8
        let mut all = rows.clone();
        let mut rhs: Vec<f64> = b[..rows.len()].to_vec();
        for i in 0..k {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            all.push(e.clone());
            rhs.push(3.0);
            e[i] = -1.0;
            all.push(e);
            rhs.push(3.0);
        }
        let a = DenseMatrix::from_rows(&all).unwrap();
        match (lp_max(&c, &a, &rhs), brute_force_lp(&c, &a, &rhs)) {
            (Ok(sol), Some(best)) => {
                prop_assert!((sol.value - best).abs() <= 1e-8 * (1.0 + best.abs()), "{} vs {best}", sol.value);
                let z = &sol.argument;
                for (i, row) in all.iter().enumerate() {
                    let lhs: f64 = row.iter().zip(z).map(|(x, y)| x * y).sum();
                    prop_assert!(lhs <= rhs[i] + 1e-8);
                }
            }
            (Err(NumericsError::Infeasible), None) => {}
            (got, want) => prop_assert!(false, "lp {got:?}, brute force {want:?}"),
        }
    }
}
