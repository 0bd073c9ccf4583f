//! Derived values recomputed by small closed-form oracles written here,
//! independent of both the library and the derivation script.

mod common;

use common::*;
use normnash::certify::{certify_point, check_c3_sampled, feasible_grid};
use normnash::fixtures::{derived_values, ex4_perturbed, load_fixture};

fn derived(key: &str) -> f64 {
    derived_values()
        .get(key)
        .unwrap_or_else(|| panic!("no derived value {key}"))
        .value
}

/// Cramer's rule for `[[a, b], [c, d]] z = (e, f)`.
fn cramer(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> (f64, f64) {
    let det = a * d - b * c;
    ((e * d - b * f) / det, (a * f - e * c) / det)
}

/// Eigenvalues of the symmetric 2x2 matrix `[[p, q], [q, s]]`.
fn sym_eig(p: f64, q: f64, s: f64) -> (f64, f64) {
    let m = (p + s) / 2.0;
    let h = (((p - s) / 2.0).powi(2) + q * q).sqrt();
    (m - h, m + h)
}

#[test]
fn exact_fractions_match_values() {
    for (key, d) in derived_values() {
        let (num, den) = d.exact.split_once('/').unwrap();
        let v = num.parse::<f64>().unwrap() / den.parse::<f64>().unwrap();
        assert!((v - d.value).abs() <= 1e-15, "{key}");
    }
}

#[test]
fn ex5_half_point_multipliers() {
    // stationarity r^p d_p f^p = Lambda_1 d_p G1 + Lambda_2 d_p G2 at (1/2, 1/2):
    // player 1: -1 + x2 = -L1 + L2, player 2: -1 + x1/2 = -L1 - L2
    let (l1, l2) = cramer(-1.0, 1.0, -1.0, -1.0, -0.5, -0.75);
    assert!((l1 - derived("ex5.x_half.r_1_1.G1")).abs() < 1e-15);
    assert!((l2 - derived("ex5.x_half.r_1_1.G2")).abs() < 1e-15);
    let (inst, _) = load_fixture("ex5_compar").unwrap();
    let rr = r(&[1.0, 1.0]);
    assert!((shared_multiplier(&inst, &[0.5, 0.5], &rr, 0) - l1).abs() < 1e-12);
    assert!((shared_multiplier(&inst, &[0.5, 0.5], &rr, 1) - l2).abs() < 1e-12);
}

#[test]
fn ex5_vertex_multipliers() {
    // at (1, 0), G1 and G3 active: -1 + 0 = -L1, -1 + 1/2 = -L1 + L3
    let (l1, l3) = cramer(-1.0, 0.0, -1.0, 1.0, -1.0, -0.5);
    assert!((l1 - derived("ex5.x_zero.r_1_1.G1")).abs() < 1e-15);
    assert!((l3 - derived("ex5.x_zero.r_1_1.G3")).abs() < 1e-15);
}

#[test]
fn ex5_interior_family_closed_form() {
    for (rho, key) in [(0.75, "ex5.interior_t.rho_0.75"), (1.0, "ex5.interior_t.rho_1.0"), (1.25, "ex5.interior_t.rho_1.25")] {
        // r1 (t - 1) = r2 (x1 / 2 - 1) with x1 = 1 - t, solved for t by bisection
        let g = |t: f64| rho * (t - 1.0) - ((1.0 - t) / 2.0 - 1.0);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lo - derived(key)).abs() < 1e-14, "{key}");
    }
    let t = derived("ex5.interior_t.rho_1.0");
    assert!((1.0 - t - derived("ex5.interior.r_1_1.x1")).abs() < 1e-15);
    // Lambda_1 = r1 (1 - t)
    assert!((1.0 - t - derived("ex5.interior.r_1_1.G1")).abs() < 1e-15);
}

#[test]
fn ex5_tangent_determinant() {
    // D_x G_f = [[0, r1], [r2/2, 0]] on tangent direction (1, -1)
    let (r1, r2) = (1.0, 1.0);
    let v = [1.0, -1.0];
    let m = [[0.0, r1], [r2 / 2.0, 0.0]];
    let q: f64 = (0..2).map(|i| (0..2).map(|j| v[i] * m[i][j] * v[j]).sum::<f64>()).sum();
    assert_eq!(q, derived("ex5.nd3_canonical.r_1_1"));
    let (inst, _) = load_fixture("ex5_compar").unwrap();
    let cert = certify_point(&inst, &[2.0 / 3.0, 1.0 / 3.0], &r(&[r1, r2]), TOL, &[]).unwrap();
    let got = cert.nondegeneracy.nd3.unwrap().canonical_determinant.unwrap();
    assert!((got - q).abs() < 1e-10);
}

#[test]
fn ex5_c3_eigenvalue() {
    let (lo, _) = sym_eig(0.0, (1.0 + 0.5) / 2.0, 0.0);
    assert_eq!(lo, derived("ex5.c3_min_eigenvalue.r_1_1"));
    let (inst, _) = load_fixture("ex5_compar").unwrap();
    let samples = feasible_grid(&inst, &[0.0, 0.0], &[1.0, 1.0], 5, 1e-12).unwrap();
    let c3 = check_c3_sampled(&inst, &r(&[1.0, 1.0]), &samples).unwrap();
    assert!((c3.min_eigenvalue - lo).abs() < 1e-12);
}

#[test]
fn ex4_perturbed_closed_form() {
    for eps in [0.1, 0.01] {
        // interior of G1 at x = (2/3, 1/3): Lambda = 1 - eps x1 = 1 - 2 eps / 3
        let lambda = 1.0 - eps * 2.0 / 3.0;
        let det = eps * 1.0 + 2.0 * eps * 1.0;
        let key = |s: &str| format!("ex4_perturbed.eps_{eps}.{s}");
        assert!((lambda - derived(&key("G1"))).abs() < 1e-15);
        assert!((det - derived(&key("nd3_canonical"))).abs() < 1e-15);
        // both players' stationarity agree only at x1 = 2 x2
        let (x1, x2) = cramer(1.0, 1.0, eps, -2.0 * eps, 1.0, 0.0);
        assert!((x1 - derived(&key("x1"))).abs() < 1e-15 && (x2 - derived(&key("x2"))).abs() < 1e-15);

        let inst = ex4_perturbed(eps).unwrap();
        let cert = certify_point(&inst, &[x1, x2], &r(&[1.0, 1.0]), TOL, &[]).unwrap();
        assert!((cert.multipliers.shared[0] - lambda).abs() < 1e-12);
        let nd3 = cert.nondegeneracy.nd3.unwrap();
        assert!((nd3.canonical_determinant.unwrap() - det).abs() < 1e-12);
    }
}

#[test]
fn ex3_and_ex2_multipliers() {
    // ex3 at (1/2, 1/2): -r1 = -L1 + L2, -r2 = -L1 - L2
    for (r1, r2, tag) in [(1.0, 2.0, "r_1_2"), (2.0, 1.0, "r_2_1")] {
        let (l1, l2) = cramer(-1.0, 1.0, -1.0, -1.0, -r1, -r2);
        assert!((l1 - derived(&format!("ex3.{tag}.G1"))).abs() < 1e-15);
        assert!((l2 - derived(&format!("ex3.{tag}.G2"))).abs() < 1e-15);
    }
    // ex2 at the origin: player 1 gradient 2 (x1 - x2) = 0 = L dG1/dx1 = L
    // player 2 gradient -1 = L dG1/dx2 = -2 L
    assert_eq!(derived("ex2.player1.G1"), 0.0);
    assert_eq!(derived("ex2.player2.G1"), 1.0 / 2.0);
    // trivial: 2 (x - 2) = -lambda at x = 1
    assert_eq!(derived("trivial_1p.lambda"), -2.0 * (1.0 - 2.0));
}
