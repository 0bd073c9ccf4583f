//! Constraint qualifications and nondegeneracy certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ActiveSetProfile, GnepInstance};
use crate::kkt::{
    active_gradient_matrix, jacobian_lagrangian, jacobian_objectives, least_squares_multipliers,
    player_gradient_rows, KktTolerances, KktViolation, Multipliers, NormalizedKktPoint,
    RatioParameters,
};
use crate::numerics::{
    self, canonical_nullspace_basis, default_rank_tolerance, determinant, lp_max, svd,
    symmetric_min_eigenvalue, DenseMatrix,
};

/// MFCQ holds iff the LP optimum exceeds this.
pub const MFCQ_THRESHOLD: f64 = 1e-9;
/// Multipliers must exceed this for strict complementarity.
pub const STRICT_COMPLEMENTARITY_TOL: f64 = 1e-7;
/// Relative threshold for ND3 nonsingularity.
pub const ND3_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LicqReport {
    pub holds: bool,
    pub rank: usize,
    pub required_rank: usize,
    /// Smallest singular value of the active gradient matrix (`None` without active constraints).
    pub min_singular_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfcqReport {
    pub holds: bool,
    pub t_star: f64,
    pub direction: Vec<f64>,
}

fn licq_of(rows: &DenseMatrix) -> LicqReport {
    if rows.rows() == 0 {
        return LicqReport {
            holds: true,
            rank: 0,
            required_rank: 0,
            min_singular_value: None,
        };
    }
    // singular values of the transpose give min(m, n) meaningful values
    let dec = svd(&rows.transpose());
    let rank = dec.rank(default_rank_tolerance(rows));
    let smin = if rows.rows() > rows.cols() {
        0.0
    } else {
        dec.min_singular_value()
    };
    LicqReport {
        holds: rank == rows.rows(),
        rank,
        required_rank: rows.rows(),
        min_singular_value: Some(smin),
    }
}

/// Solves `max t` s.t. `row . xi >= t` for every row, `|xi_i| <= 1`, `t <= 1`.
pub fn mfcq_lp(rows: &DenseMatrix) -> Result<MfcqReport> {
    let k = rows.cols();
    if rows.rows() == 0 {
        return Ok(MfcqReport {
            holds: true,
            t_star: 1.0,
            direction: vec![0.0; k],
        });
    }
    let nv = k + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..rows.rows() {
        let mut row: Vec<f64> = rows.row(i).iter().map(|v| -v).collect();
        row.push(1.0);
        a.push(row);
        b.push(0.0);
    }
    for i in 0..k {
        let mut hi = vec![0.0; nv];
        hi[i] = 1.0;
        a.push(hi);
        b.push(1.0);
        let mut lo = vec![0.0; nv];
        lo[i] = -1.0;
        a.push(lo);
        b.push(1.0);
    }
    let mut t_hi = vec![0.0; nv];
    t_hi[k] = 1.0;
    a.push(t_hi);
    b.push(1.0);
    let mut c = vec![0.0; nv];
    c[k] = 1.0;
    let sol = lp_max(&c, &DenseMatrix::from_rows(&a)?, &b)?;
    Ok(MfcqReport {
        holds: sol.value > MFCQ_THRESHOLD,
        t_star: sol.value,
        direction: sol.argument[..k].to_vec(),
    })
}

/// GNEP-LICQ: full-space active gradients are linearly independent.
pub fn check_gnep_licq(inst: &GnepInstance, x: &[f64], tol: f64) -> Result<LicqReport> {
    let active = inst.active_sets(x, tol)?;
    Ok(licq_of(&active_gradient_matrix(inst, x, &active)?))
}

/// GNEP-MFCQ: a direction strictly increasing every active constraint.
pub fn check_gnep_mfcq(inst: &GnepInstance, x: &[f64], tol: f64) -> Result<MfcqReport> {
    let active = inst.active_sets(x, tol)?;
    mfcq_lp(&active_gradient_matrix(inst, x, &active)?)
}

/// LICQ and MFCQ of one player's problem in its own variables.
pub fn check_player_cq(
    inst: &GnepInstance,
    x: &[f64],
    player: usize,
    tol: f64,
) -> Result<PlayerCqReport> {
    let active = inst.active_sets(x, tol)?;
    let rows = player_gradient_rows(inst, x, player, &active)?;
    Ok(PlayerCqReport {
        player: player + 1,
        licq: licq_of(&rows),
        mfcq: mfcq_lp(&rows)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerCqReport {
    /// 1-based player number.
    pub player: usize,
    pub licq: LicqReport,
    pub mfcq: MfcqReport,
}

/// True iff every constraint is strictly positive (above `tol`) at `point`.
pub fn check_slater_point(inst: &GnepInstance, point: &[f64], tol: f64) -> Result<bool> {
    match inst.convexity() {
        Some(c) if c.c2 => {}
        _ => return Err(Error::NotConvexFlagged),
    }
    Ok(inst.constraint_values(point)?.iter().all(|(_, v)| *v > tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentBasis {
    /// `n x d` matrix with orthonormal columns.
    pub basis: DenseMatrix,
    pub dimension: usize,
}

/// Orthonormal basis of the nullspace of the active gradient matrix.
pub fn tangent_basis(
    inst: &GnepInstance,
    x: &[f64],
    active: &ActiveSetProfile,
) -> Result<TangentBasis> {
    let b = active_gradient_matrix(inst, x, active)?;
    let n = inst.dim();
    if b.rows() == 0 {
        return Ok(TangentBasis {
            basis: DenseMatrix::identity(n),
            dimension: n,
        });
    }
    let lic = licq_of(&b);
    if !lic.holds {
        return Err(Error::LicqFailed {
            rank: lic.rank,
            required: lic.required_rank,
        });
    }
    let basis = numerics::nullspace_basis(&b, default_rank_tolerance(&b));
    Ok(TangentBasis {
        dimension: basis.cols(),
        basis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nd2Report {
    pub holds: bool,
    /// Smallest active multiplier (`None` without active constraints).
    pub min_multiplier: Option<f64>,
    /// Active constraints whose multiplier is not above the threshold.
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nd3Report {
    pub holds: bool,
    pub tangent_dimension: usize,
    /// Smallest singular value of `V^T D_x G_L V` (orthonormal `V`).
    pub min_singular_value: Option<f64>,
    pub determinant: Option<f64>,
    /// Determinant with the reduced-row-echelon basis (unit free variables),
    /// which keeps hand-computed values like `(1, -1) M (1, -1)^T`.
    pub canonical_determinant: Option<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub nd1: LicqReport,
    pub nd2: Nd2Report,
    /// `None` when ND1 fails and the tangent space is not defined.
    pub nd3: Option<Nd3Report>,
    pub nondegenerate: bool,
}

/// Checks ND1 (GNEP-LICQ), ND2 (strict complementarity) and ND3
/// (nonsingular tangent-restricted Jacobian) at an assembled point.
pub fn check_nondegenerate(inst: &GnepInstance, kkt: &NormalizedKktPoint) -> Result<NondegeneracyReport> {
    let x = &kkt.x;
    let b = active_gradient_matrix(inst, x, &kkt.active)?;
    let nd1 = licq_of(&b);

    let mut failing = Vec::new();
    for c in kkt.active.constraints() {
        let m = kkt.multipliers.get(&kkt.active, c).unwrap_or(0.0);
        if m <= STRICT_COMPLEMENTARITY_TOL {
            failing.push(c.to_string());
        }
    }
    let nd2 = Nd2Report {
        holds: failing.is_empty(),
        min_multiplier: kkt.multipliers.min(),
        failing,
    };

    let nd3 = if nd1.holds {
        let tb = tangent_basis(inst, x, &kkt.active)?;
        let d = jacobian_lagrangian(inst, x, &kkt.multipliers, &kkt.r, &kkt.active)?;
        let threshold = ND3_TOL * (1.0 + d.norm2());
        if tb.dimension == 0 {
            Some(Nd3Report {
                holds: true,
                tangent_dimension: 0,
                min_singular_value: None,
                determinant: None,
                canonical_determinant: None,
                threshold,
            })
        } else {
            let v = &tb.basis;
            let m = v.transpose().matmul(&d).matmul(v);
            let smin = svd(&m).min_singular_value();
            let canon = if b.rows() == 0 {
                DenseMatrix::identity(inst.dim())
            } else {
                canonical_nullspace_basis(&b, default_rank_tolerance(&b))
            };
            let mc = canon.transpose().matmul(&d).matmul(&canon);
            Some(Nd3Report {
                holds: smin > threshold,
                tangent_dimension: tb.dimension,
                min_singular_value: Some(smin),
                determinant: Some(determinant(&m)),
                canonical_determinant: Some(determinant(&mc)),
                threshold,
            })
        }
    } else {
        None
    };
    let nondegenerate = nd1.holds && nd2.holds && nd3.as_ref().is_some_and(|r| r.holds);
    Ok(NondegeneracyReport {
        nd1,
        nd2,
        nd3,
        nondegenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C3Report {
    pub samples: usize,
    pub min_eigenvalue: f64,
    /// Sample with the smallest eigenvalue.
    pub worst_point: Vec<f64>,
    /// A negative (or zero) eigenvalue was found: the condition is refuted.
    pub refuted: bool,
}

impl C3Report {
    pub fn verdict(&self) -> &'static str {
        if self.refuted {
            "refuted"
        } else {
            "not refuted on samples"
        }
    }
}

/// Minimum eigenvalue of the symmetric part of `D_x G_f(x, r)` over samples.
pub fn check_c3_sampled(
    inst: &GnepInstance,
    r: &RatioParameters,
    samples: &[Vec<f64>],
) -> Result<C3Report> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no sample points".into()));
    }
    let mut best = (f64::INFINITY, samples[0].clone());
    for s in samples {
        let lam = symmetric_min_eigenvalue(&jacobian_objectives(inst, s, r)?);
        if lam < best.0 {
            best = (lam, s.clone());
        }
    }
    Ok(C3Report {
        samples: samples.len(),
        min_eigenvalue: best.0,
        worst_point: best.1,
        refuted: best.0 <= 0.0,
    })
}

/// Feasible points of a uniform grid with `per_axis` points per coordinate.
pub fn feasible_grid(
    inst: &GnepInstance,
    lo: &[f64],
    hi: &[f64],
    per_axis: usize,
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = inst.dim();
    let per_axis = per_axis.max(2);
    let total = per_axis.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > 50_000_000 {
        return Err(Error::InvalidConfig(format!("grid of {total} points is too large")));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let p: Vec<f64> = (0..n)
            .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (per_axis - 1) as f64)
            .collect();
        if inst.feasible(&p, tol)? {
            out.push(p);
        }
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(out)
}

/// Full certificate of a candidate point for given weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub point: Vec<f64>,
    pub r: RatioParameters,
    pub active: String,
    pub multipliers: Multipliers,
    pub stationarity_residual: f64,
    /// Empty iff the point is a normalized KKT point for `r`.
    pub violations: Vec<KktViolation>,
    pub gnep_licq: LicqReport,
    pub gnep_mfcq: MfcqReport,
    pub nondegeneracy: NondegeneracyReport,
    /// Informational; never affects the overall flag.
    pub players: Vec<PlayerCqReport>,
    pub c3_sample: Option<C3Report>,
    /// Whether the instance's declared Slater point is strictly feasible.
    pub slater: Option<bool>,
}

impl CertificateReport {
    pub fn is_kkt(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn nondegenerate(&self) -> bool {
        self.nondegeneracy.nondegenerate
    }
}

/// Recovers multipliers at `x` for `r`, validates the point and runs every
/// check. `c3_samples` may be empty to skip the sampled (C3) test.
pub fn certify_point(
    inst: &GnepInstance,
    x: &[f64],
    r: &RatioParameters,
    tol: f64,
    c3_samples: &[Vec<f64>],
) -> Result<CertificateReport> {
    let active = inst.active_sets(x, tol)?;
    let (mult, _) = least_squares_multipliers(inst, x, r, &active)?;
    let kkt = NormalizedKktPoint::assemble(inst, x.to_vec(), active.clone(), mult, r.clone())?;
    let tols = KktTolerances {
        activity: tol,
        ..KktTolerances::default()
    };
    let violations = kkt.validate(inst, &tols)?;
    let b = active_gradient_matrix(inst, x, &active)?;
    let players = (0..inst.num_players())
        .map(|p| check_player_cq(inst, x, p, tol))
        .collect::<Result<Vec<_>>>()?;
    let slater = match (inst.slater_point(), inst.convexity()) {
        (Some(pt), Some(c)) if c.c2 => Some(check_slater_point(inst, pt, tol)?),
        _ => None,
    };
    let c3_sample = if c3_samples.is_empty() {
        None
    } else {
        Some(check_c3_sampled(inst, r, c3_samples)?)
    };
    Ok(CertificateReport {
        point: x.to_vec(),
        r: r.clone(),
        active: active.label(),
        stationarity_residual: kkt.stationarity_residual,
        violations,
        gnep_licq: licq_of(&b),
        gnep_mfcq: mfcq_lp(&b)?,
        nondegeneracy: check_nondegenerate(inst, &kkt)?,
        multipliers: kkt.multipliers,
        players,
        c3_sample,
        slater,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex3() -> GnepInstance {
        GnepInstance::load(
            br#"{"name": "ex3", "players": [
            {"dim": 1, "objective": "-x1"}, {"dim": 1, "objective": "-x2"}],
            "shared": ["1 - x1 - x2", "x1 - x2", "x2"], "convex": {"c1": true, "c2": true}}"#,
        )
        .unwrap()
    }

    #[test]
    fn licq_and_mfcq_examples() {
        let e = ex3();
        let l = check_gnep_licq(&e, &[0.5, 0.5], 1e-8).unwrap();
        assert!(l.holds);
        assert_eq!(l.rank, 2);
        assert!(check_gnep_mfcq(&e, &[0.5, 0.5], 1e-8).unwrap().holds);
        let l = check_gnep_licq(&e, &[0.4, 0.2], 1e-8).unwrap();
        assert!(l.holds && l.required_rank == 0);
        let m = check_gnep_mfcq(&e, &[0.4, 0.2], 1e-8).unwrap();
        assert_eq!(m.t_star, 1.0);
    }

    #[test]
    fn slater_examples() {
        let e = ex3();
        assert!(check_slater_point(&e, &[0.4, 0.2], 1e-8).unwrap());
        assert!(!check_slater_point(&e, &[0.5, 0.5], 1e-8).unwrap());
        let nc = GnepInstance::load(br#"{"name": "n", "players": [{"dim": 1, "objective": "x1"}]}"#)
            .unwrap();
        assert_eq!(check_slater_point(&nc, &[0.0], 1e-8), Err(Error::NotConvexFlagged));
    }

    #[test]
    fn tangent_examples() {
        let e = ex3();
        let a = e.active_sets(&[0.5, 0.5], 1e-8).unwrap();
        assert_eq!(tangent_basis(&e, &[0.5, 0.5], &a).unwrap().dimension, 0);
        let a = e.active_sets(&[0.7, 0.3], 1e-8).unwrap();
        let t = tangent_basis(&e, &[0.7, 0.3], &a).unwrap();
        assert_eq!(t.dimension, 1);
        let v = t.basis.column(0);
        assert!((v[0] + v[1]).abs() < 1e-12 && (v[0].abs() - 0.5f64.sqrt()).abs() < 1e-12);
        let a = e.active_sets(&[0.4, 0.2], 1e-8).unwrap();
        assert_eq!(tangent_basis(&e, &[0.4, 0.2], &a).unwrap().basis, DenseMatrix::identity(2));
    }

    #[test]
    fn c3_examples() {
        let sq = GnepInstance::load(
            br#"{"name": "sq", "players": [{"dim": 1, "objective": "x1^2"}, {"dim": 1, "objective": "x2^2"}]}"#,
        )
        .unwrap();
        let rep = check_c3_sampled(&sq, &RatioParameters::uniform(2), &[vec![0.3, -1.0]]).unwrap();
        assert!((rep.min_eigenvalue - 2.0).abs() < 1e-12);
        assert_eq!(rep.verdict(), "not refuted on samples");
    }
}
