//! Qualitative classifications survive coefficient perturbations of size 1e-4.

mod common;

use common::*;
use normnash::certify::{certify_point, check_gnep_licq};
use normnash::fixtures::load_fixture;
use normnash::instance::GnepInstance;
use normnash::kkt::{normalized_consistency, per_player_kkt, Consistency, InconsistencyReason, PlayerKktStatus};
use normnash::solver::{enumerate_normalized_kkt, SolveConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTA: f64 = 1e-4;

/// Every literal `c` becomes `c (1 +- 1e-4)`, signs drawn from `seed`.
fn perturb(inst: &GnepInstance, seed: u64) -> GnepInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inst.map_constants(|c| c * (1.0 + if rng.gen_bool(0.5) { DELTA } else { -DELTA }))
}

/// (active set, nondegenerate, singular Jacobian) for every solver output.
fn signature(inst: &GnepInstance, rv: &[f64]) -> Vec<(String, bool, bool)> {
    let rr = r(rv);
    let report = enumerate_normalized_kkt(inst, &rr, &SolveConfig::new(inst.dim())).unwrap();
    let mut sig: Vec<_> = report
        .points
        .iter()
        .map(|sp| {
            let cert = certify_point(inst, &sp.point.x, &rr, TOL, &[]).unwrap();
            (sp.point.active.label(), cert.nondegenerate(), sp.degenerate)
        })
        .collect();
    sig.sort();
    sig
}

#[test]
fn ex1_fritz_john_is_stable() {
    let (inst, _) = load_fixture("ex1_fj").unwrap();
    for (d1, d2) in [(DELTA, DELTA), (-DELTA, DELTA), (DELTA, -DELTA), (-DELTA, -DELTA)] {
        let f1 = format!("-x1_1 + {d1:?} * x1_2");
        let f2 = format!("-x2 + {d2:?} * x2");
        let p = inst.with_objectives(&[&f1, &f2]).unwrap();
        let x = [0.0; 3];
        let p1 = per_player_kkt(&p, &x, 0, TOL).unwrap();
        assert_eq!(p1.status, PlayerKktStatus::FritzJohnOnly);
        assert!(p1.mfcq_t_star.unwrap().abs() <= 1e-9);
        assert_eq!(check_gnep_licq(&p, &x, TOL).unwrap().rank, 2);
        assert!(!normalized_consistency(&p, &x, TOL).unwrap().is_consistent());
    }
}

#[test]
fn ex2_inconsistency_is_stable() {
    let (inst, _) = load_fixture("ex2_strictcomp").unwrap();
    for seed in 0..4 {
        let p = perturb(&inst, seed);
        match normalized_consistency(&p, &[0.0, 0.0], TOL).unwrap() {
            Consistency::Inconsistent {
                reason: InconsistencyReason::ZeroVersusPositive { zero_value, positive_value, .. },
            } => {
                assert!(zero_value.abs() < 1e-12);
                assert!((positive_value - 0.5).abs() < 1e-3);
            }
            other => panic!("seed {seed}: {other:?}"),
        }
    }
}

#[test]
fn ex3_and_ex5_classifications_are_stable() {
    let cases: [(&str, &[[f64; 2]]); 2] = [
        ("ex3_individual_degen", &[[1.0, 2.0], [2.0, 1.0]]),
        ("ex5_compar", &[[0.4, 1.0], [1.0, 1.0], [2.0, 1.0]]),
    ];
    for (name, rs) in cases {
        let (inst, _) = load_fixture(name).unwrap();
        for rv in rs {
            let base = signature(&inst, rv);
            assert!(!base.is_empty(), "{name} {rv:?}");
            for seed in 0..4 {
                assert_eq!(signature(&perturb(&inst, seed), rv), base, "{name} {rv:?} seed {seed}");
            }
        }
    }
}
