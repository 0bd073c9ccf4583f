#![allow(dead_code)]

use normnash::instance::{ConstraintId, GnepInstance};
use normnash::kkt::{recover_multipliers, RatioParameters};

pub const TOL: f64 = 1e-8;

pub fn r(v: &[f64]) -> RatioParameters {
    RatioParameters::new(v.to_vec()).unwrap()
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Same number of points and every expected point matched within `tol`.
pub fn assert_point_set(got: &[Vec<f64>], expected: &[Vec<f64>], tol: f64) {
    assert_eq!(got.len(), expected.len(), "got {got:?}, expected {expected:?}");
    for e in expected {
        assert!(
            got.iter().any(|g| dist_inf(g, e) <= tol),
            "{e:?} missing from {got:?}"
        );
    }
}

/// Shared multiplier `Lambda_j` recovered at `x` (0 when inactive).
pub fn shared_multiplier(inst: &GnepInstance, x: &[f64], rr: &RatioParameters, j: usize) -> f64 {
    let rec = recover_multipliers(inst, x, rr, TOL).unwrap();
    rec.multipliers.get(&rec.active, ConstraintId::Shared(j)).unwrap_or(0.0)
}

/// `"G2"` to the shared constraint index 1.
pub fn shared_index(label: &str) -> usize {
    label.strip_prefix('G').unwrap().parse::<usize>().unwrap() - 1
}
