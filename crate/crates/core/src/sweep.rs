//! Ratio sweeps and the interior family fit.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::certify::check_nondegenerate;
use crate::error::{Error, Result};
use crate::instance::{ActiveSetProfile, ConstraintId, GnepInstance};
use crate::kkt::{Multipliers, RatioParameters};
use crate::numerics::{svd, DenseMatrix};
use crate::solver::{enumerate_normalized_kkt, SolveConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub x: Vec<f64>,
    pub active: ActiveSetProfile,
    pub multipliers: Multipliers,
    pub nondegenerate: bool,
    pub nd1: bool,
    pub nd2: bool,
    /// `None` when ND1 fails.
    pub nd3: Option<bool>,
    /// Singular Newton Jacobian at this point.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `r^1 / r^2` in scalar mode.
    pub ratio: Option<f64>,
    pub r: RatioParameters,
    pub entries: Vec<SweepEntry>,
    pub degenerate_family: bool,
}

/// `lo, lo + step, ...` up to `hi` inclusive (with a small slack).
pub fn ratio_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || lo > hi || lo <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "ratio range {lo}:{hi}:{step} is empty or invalid"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

fn row_for(inst: &GnepInstance, r: RatioParameters, cfg: &SolveConfig) -> Result<SweepRow> {
    let report = enumerate_normalized_kkt(inst, &r, cfg)?;
    let mut entries = Vec::with_capacity(report.points.len());
    for sp in &report.points {
        let nd = check_nondegenerate(inst, &sp.point)?;
        entries.push(SweepEntry {
            x: sp.point.x.clone(),
            active: sp.point.active.clone(),
            multipliers: sp.point.multipliers.clone(),
            nondegenerate: nd.nondegenerate,
            nd1: nd.nd1.holds,
            nd2: nd.nd2.holds,
            nd3: nd.nd3.as_ref().map(|n| n.holds),
            degenerate: sp.degenerate,
        });
    }
    Ok(SweepRow {
        ratio: r.ratio(),
        degenerate_family: report.has_degenerate_family(),
        r,
        entries,
    })
}

/// Two-player sweep over `rho = r^1 / r^2`, using `r = (rho, 1)`.
pub fn sweep_ratio(inst: &GnepInstance, ratios: &[f64], cfg: &SolveConfig) -> Result<Vec<SweepRow>> {
    if inst.num_players() != 2 {
        return Err(Error::InvalidConfig(
            "scalar ratio sweeps need exactly two players; pass explicit r vectors".into(),
        ));
    }
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .map(|rho| row_for(inst, RatioParameters::from_ratio(rho)?, cfg))
        .collect()
}

/// Sweep over explicit weight vectors, in the given order.
pub fn sweep_vectors(
    inst: &GnepInstance,
    rs: &[RatioParameters],
    cfg: &SolveConfig,
) -> Result<Vec<SweepRow>> {
    rs.iter().map(|r| row_for(inst, r.clone(), cfg)).collect()
}

/// `t(rho) = (a rho + b) / (c rho + d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Maximum absolute deviation over the samples.
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
}

impl FamilyFit {
    pub fn eval(&self, rho: f64) -> f64 {
        (self.a * rho + self.b) / (self.c * rho + self.d)
    }
}

/// Fits a Moebius map to the interior family: rows contributing are those
/// with exactly one equilibrium having a single active constraint; `t` is
/// coordinate `coord` of that equilibrium.
pub fn interior_family_fit(rows: &[SweepRow], coord: usize) -> Result<FamilyFit> {
    let mut samples = Vec::new();
    for row in rows {
        let Some(rho) = row.ratio else { continue };
        let interior: Vec<&SweepEntry> = row.entries.iter().filter(|e| e.active.len() == 1).collect();
        if let [e] = interior.as_slice() {
            if let Some(t) = e.x.get(coord) {
                samples.push((rho, *t));
            }
        }
    }
    if samples.len() < 3 {
        return Err(Error::NoInteriorFamily);
    }
    let a_rows: Vec<[f64; 4]> = samples
        .iter()
        .map(|&(rho, t)| [rho, 1.0, -t * rho, -t])
        .collect();
    let mat = DenseMatrix::from_rows(&a_rows)?;
    let dec = svd(&mat);
    let k = dec.singular_values.len() - 1;
    let mut v = dec.v.column(k);
    let scale = if v[3].abs() > 1e-12 { v[3] } else { v[2] };
    for vi in &mut v {
        *vi /= scale;
    }
    let mut fit = FamilyFit {
        a: v[0],
        b: v[1],
        c: v[2],
        d: v[3],
        residual: 0.0,
        samples,
    };
    fit.residual = fit
        .samples
        .iter()
        .map(|&(rho, t)| (fit.eval(rho) - t).abs())
        .fold(0.0, f64::max);
    if !fit.residual.is_finite() {
        return Err(Error::NoInteriorFamily);
    }
    Ok(fit)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Plot-ready TSV: one line per equilibrium; rows without equilibria get a
/// line of `NA` cells.
pub fn write_tsv(inst: &GnepInstance, rows: &[SweepRow], mut w: impl Write) -> io::Result<()> {
    let mut header = vec!["ratio".to_string()];
    header.extend(inst.vars().names().iter().cloned());
    header.extend((0..inst.shared().len()).map(|j| format!("Lambda_{}", ConstraintId::Shared(j))));
    let individual: Vec<ConstraintId> = inst
        .all_constraints()
        .into_iter()
        .filter(|c| matches!(c, ConstraintId::Individual { .. }))
        .collect();
    header.extend(individual.iter().map(|c| format!("lambda_{c}")));
    header.extend(["nondegenerate", "nd1", "nd2", "nd3", "degenerate"].map(String::from));
    writeln!(w, "{}", header.join("\t"))?;

    for row in rows {
        let ratio = match row.ratio {
            Some(r) => format!("{r}"),
            None => row
                .r
                .values()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        };
        if row.entries.is_empty() {
            let mut cells = vec![ratio];
            cells.extend(std::iter::repeat("NA".to_string()).take(header.len() - 1));
            writeln!(w, "{}", cells.join("\t"))?;
            continue;
        }
        for e in &row.entries {
            let mut cells = vec![ratio.clone()];
            cells.extend(e.x.iter().map(|v| format!("{v}")));
            for j in 0..inst.shared().len() {
                let m = e.multipliers.get(&e.active, ConstraintId::Shared(j)).unwrap_or(0.0);
                cells.push(format!("{m}"));
            }
            for c in &individual {
                cells.push(format!("{}", e.multipliers.get(&e.active, *c).unwrap_or(0.0)));
            }
            cells.push(flag(e.nondegenerate).into());
            cells.push(flag(e.nd1).into());
            cells.push(flag(e.nd2).into());
            cells.push(e.nd3.map_or("NA", flag).into());
            cells.push(flag(e.degenerate).into());
            writeln!(w, "{}", cells.join("\t"))?;
        }
    }
    Ok(())
}
