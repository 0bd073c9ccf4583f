//! Every manifest entry reproduced by the library within its tolerance.

mod common;

use common::*;
use normnash::certify::{certify_point, check_c3_sampled, check_gnep_licq, check_player_cq, check_slater_point, feasible_grid};
use normnash::fixtures::{derived_values, load_fixture, ProvenanceKind, FIXTURE_NAMES};
use normnash::kkt::{normalized_consistency, per_player_kkt, Consistency, InconsistencyReason, PlayerKktStatus};
use normnash::solver::{enumerate_normalized_kkt, SolveConfig};
use normnash::sweep::sweep_ratio;

#[test]
fn derived_entries_point_at_derived_values() {
    let table = derived_values();
    for name in FIXTURE_NAMES {
        let (_, man) = load_fixture(name).unwrap();
        for e in &man.entries {
            if e.provenance.kind == ProvenanceKind::Derived {
                assert!(e.provenance.oracle.is_some(), "{name}/{}", e.id);
            }
            for (key, src) in &e.derived_from {
                let d = table.get(src).unwrap_or_else(|| panic!("{name}/{}: no derived value {src}", e.id));
                assert!((d.value - e.value(key)).abs() <= 1e-15, "{name}/{}: {key}", e.id);
            }
        }
    }
}

#[test]
fn ex1_fritz_john_origin() {
    let (inst, man) = load_fixture("ex1_fj").unwrap();
    let fj = man.entry("origin_fritz_john").unwrap();
    let x = fj.point.clone().unwrap();
    let p1 = per_player_kkt(&inst, &x, 0, TOL).unwrap();
    assert_eq!(p1.status, PlayerKktStatus::FritzJohnOnly);
    assert_eq!(fj.labels["player1_status"], "fritz_john_only");
    assert!((p1.mfcq_t_star.unwrap() - fj.value("player1_mfcq_t_star")).abs() <= fj.tolerance);
    let cons = normalized_consistency(&inst, &x, TOL).unwrap();
    assert_eq!(cons.is_consistent(), fj.flag("normalized").unwrap());

    let licq = man.entry("origin_gnep_licq").unwrap();
    let l = check_gnep_licq(&inst, &x, TOL).unwrap();
    assert_eq!(l.holds, licq.flag("gnep_licq").unwrap());
    assert_eq!(l.rank as f64, licq.value("gnep_licq_rank"));
}

#[test]
fn ex2_not_normalized() {
    let (inst, man) = load_fixture("ex2_strictcomp").unwrap();
    let e = man.entry("origin_not_normalized").unwrap();
    let x = e.point.clone().unwrap();
    for (p, key) in ["player1.G1", "player2.G1"].iter().enumerate() {
        let res = per_player_kkt(&inst, &x, p, TOL).unwrap();
        assert_eq!(res.status, PlayerKktStatus::KktWithMultipliers);
        assert!((res.shared[0] - e.value(key)).abs() <= e.tolerance, "{key}: {:?}", res.shared);
    }
    match normalized_consistency(&inst, &x, TOL).unwrap() {
        Consistency::Inconsistent {
            reason: InconsistencyReason::ZeroVersusPositive { zero_player, positive_player, .. },
        } => assert_eq!((zero_player, positive_player), (1, 2)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn ex3_entries() {
    let (inst, man) = load_fixture("ex3_individual_degen").unwrap();
    for id in ["half_half_r12", "half_half_r21"] {
        let e = man.entry(id).unwrap();
        let rr = r(e.r.as_ref().unwrap());
        let x = e.point.clone().unwrap();
        for key in ["G1", "G2"] {
            let got = shared_multiplier(&inst, &x, &rr, shared_index(key));
            assert!((got - e.value(key)).abs() <= e.tolerance, "{id} {key} = {got}");
        }
        let cert = certify_point(&inst, &x, &rr, TOL, &[]).unwrap();
        let nd = &cert.nondegeneracy;
        assert_eq!(nd.nondegenerate, e.flag("nondegenerate").unwrap(), "{id}");
        assert_eq!(nd.nd2.holds, e.flag("nd2").unwrap(), "{id}");
        if let Some(d) = e.values.get("tangent_dimension") {
            assert_eq!(nd.nd3.as_ref().unwrap().tangent_dimension as f64, *d);
            assert_eq!(nd.nd3.as_ref().unwrap().holds, e.flag("nd3").unwrap());
        }
    }
    let e = man.entry("half_half_player_licq").unwrap();
    let x = e.point.clone().unwrap();
    assert_eq!(check_gnep_licq(&inst, &x, TOL).unwrap().holds, e.flag("gnep_licq").unwrap());
    for p in 0..2 {
        let cq = check_player_cq(&inst, &x, p, TOL).unwrap();
        assert_eq!(cq.licq.holds, e.flag(&format!("player{}_licq", p + 1)).unwrap());
    }
    let e = man.entry("slater").unwrap();
    assert_eq!(check_slater_point(&inst, e.point.as_ref().unwrap(), TOL).unwrap(), e.flag("slater").unwrap());
}

#[test]
fn ex4_family_entry() {
    let (inst, man) = load_fixture("ex4_family").unwrap();
    let e = man.entry("segment_degenerate").unwrap();
    let rr = r(e.r.as_ref().unwrap());
    let x = e.point.clone().unwrap();
    assert!((shared_multiplier(&inst, &x, &rr, 0) - e.value("G1")).abs() <= e.tolerance);
    let nd = certify_point(&inst, &x, &rr, TOL, &[]).unwrap().nondegeneracy;
    assert_eq!(nd.nd1.holds, e.flag("nd1").unwrap());
    assert_eq!(nd.nd2.holds, e.flag("nd2").unwrap());
    assert_eq!(nd.nd3.unwrap().holds, e.flag("nd3").unwrap());
    assert_eq!(nd.nondegenerate, e.flag("nondegenerate").unwrap());
    let report = enumerate_normalized_kkt(&inst, &rr, &SolveConfig::new(2)).unwrap();
    assert_eq!(report.has_degenerate_family(), e.flag("degenerate_family").unwrap());
}

#[test]
fn ex4_perturbed_entries() {
    let (inst, man) = load_fixture("ex4_perturbed").unwrap();
    let e = man.entry("unique_equilibrium").unwrap();
    let rr = r(e.r.as_ref().unwrap());
    let report = enumerate_normalized_kkt(&inst, &rr, &SolveConfig::new(2)).unwrap();
    assert_point_set(&report.xs(), e.equilibria.as_ref().unwrap(), e.tolerance);
    let x = &report.xs()[0];
    let cert = certify_point(&inst, x, &rr, TOL, &[]).unwrap();
    assert!((cert.multipliers.shared[0] - e.value("G1")).abs() <= e.tolerance);
    let nd3 = cert.nondegeneracy.nd3.as_ref().unwrap();
    assert!((nd3.canonical_determinant.unwrap() - e.value("nd3_canonical")).abs() <= e.tolerance);
    assert_eq!(cert.nondegenerate(), e.flag("nondegenerate").unwrap());

    let e = man.entry("c3_sampled").unwrap();
    let samples = feasible_grid(&inst, &[0.0, 0.0], &[1.0, 1.0], 11, 1e-12).unwrap();
    let c3 = check_c3_sampled(&inst, &r(e.r.as_ref().unwrap()), &samples).unwrap();
    assert!((c3.min_eigenvalue - e.value("c3_min_eigenvalue")).abs() <= e.tolerance);
    assert_eq!(c3.refuted, e.flag("c3_refuted").unwrap());
}

#[test]
fn ex5_entries() {
    let (inst, man) = load_fixture("ex5_compar").unwrap();
    for id in ["ratio_one", "ratio_low", "ratio_high"] {
        let e = man.entry(id).unwrap();
        let rr = r(e.r.as_ref().unwrap());
        let report = enumerate_normalized_kkt(&inst, &rr, &SolveConfig::new(2)).unwrap();
        assert_point_set(&report.xs(), e.equilibria.as_ref().unwrap(), e.tolerance);
        if e.flag("all_nondegenerate") == Some(true) {
            for x in report.xs() {
                assert!(certify_point(&inst, &x, &rr, TOL, &[]).unwrap().nondegenerate(), "{x:?}");
            }
        }
    }
    for id in ["x_zero_multipliers", "x_half_multipliers", "interior_nd3"] {
        let e = man.entry(id).unwrap();
        let rr = r(e.r.as_ref().unwrap());
        let x = e.point.clone().unwrap();
        for (key, want) in &e.values {
            if let Some(rest) = key.strip_prefix('G') {
                let j = rest.parse::<usize>().unwrap() - 1;
                let got = shared_multiplier(&inst, &x, &rr, j);
                assert!((got - want).abs() <= e.tolerance, "{id} {key} = {got}");
            }
        }
        if let Some(want) = e.values.get("nd3_canonical") {
            let cert = certify_point(&inst, &x, &rr, TOL, &[]).unwrap();
            let got = cert.nondegeneracy.nd3.unwrap().canonical_determinant.unwrap();
            assert!((got - want).abs() <= e.tolerance, "{got}");
            assert_eq!(cert.nondegeneracy.nondegenerate, e.flag("nondegenerate").unwrap());
        }
    }
    let e = man.entry("c3_refuted").unwrap();
    let samples = feasible_grid(&inst, &[0.0, 0.0], &[1.0, 1.0], 11, 1e-12).unwrap();
    let c3 = check_c3_sampled(&inst, &r(e.r.as_ref().unwrap()), &samples).unwrap();
    assert!((c3.min_eigenvalue - e.value("c3_min_eigenvalue")).abs() <= e.tolerance);
    assert_eq!(c3.refuted, e.flag("c3_refuted").unwrap());

    let e = man.entry("interior_family").unwrap();
    let rows = sweep_ratio(&inst, &[0.75, 1.0, 1.25], &SolveConfig::new(2)).unwrap();
    for (row, key) in rows.iter().zip(["rho_0.75", "rho_1", "rho_1.25"]) {
        let t = e.value(key);
        let interior: Vec<_> = row.entries.iter().filter(|en| en.active.len() == 1).collect();
        assert_eq!(interior.len(), 1, "{key}");
        assert!(dist_inf(&interior[0].x, &[1.0 - t, t]) <= e.tolerance, "{key}: {:?}", interior[0].x);
    }
}

#[test]
fn trivial_entries() {
    let (inst, man) = load_fixture("trivial_1p").unwrap();
    let e = man.entry("boundary_minimum").unwrap();
    let rr = r(e.r.as_ref().unwrap());
    let report = enumerate_normalized_kkt(&inst, &rr, &SolveConfig::new(1)).unwrap();
    assert_point_set(&report.xs(), e.equilibria.as_ref().unwrap(), e.tolerance);
    let m = &report.points[0].point.multipliers;
    assert!((m.individual[0][0] - e.value("lambda")).abs() <= e.tolerance);

    let (inst, man) = load_fixture("trivial_unconstrained").unwrap();
    let e = man.entry("origin").unwrap();
    let report = enumerate_normalized_kkt(&inst, &r(&[1.0]), &SolveConfig::new(1)).unwrap();
    assert_point_set(&report.xs(), e.equilibria.as_ref().unwrap(), e.tolerance);
    assert!(report.points[0].point.multipliers.flat().is_empty());
}
