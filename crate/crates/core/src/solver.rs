//! Normalized KKT point enumeration, the `Gamma` fixed-point oracle and a
//! per-player local solution check.
//!
//! For every active-set profile the square system `F = 0` is solved by
//! Newton's method from each point of a uniform start grid. Converged points
//! are re-validated independently of the Newton path: the active set seen at
//! the point must equal the profile that produced it, and the multipliers
//! must be nonnegative up to a small sign tolerance.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ActiveSetProfile, ConstraintId, GnepInstance};
use crate::kkt::{
    jacobian_f, least_squares_multipliers, per_player_kkt, residual_f, Multipliers,
    NormalizedKktPoint, PlayerKktStatus, RatioParameters,
};
use crate::numerics::{
    self, norm_inf, pseudo_inverse_apply, solve_square, svd, symmetric_min_eigenvalue, DenseMatrix,
};

/// Condition number above which a Newton step falls back to the pseudo-inverse.
pub const SINGULAR_CONDITION: f64 = 1e12;
const DIVERGENCE_NORM: f64 = 1e8;

/// A square nonlinear system with Jacobian.
pub trait SquareSystem {
    fn dim(&self) -> usize;
    fn residual(&self, z: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, z: &[f64]) -> Result<DenseMatrix>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum NewtonOutcome {
    Converged {
        point: Vec<f64>,
        residual: f64,
        iterations: usize,
        min_singular_value: f64,
    },
    /// A singular Jacobian was met and the iteration did not converge.
    Singular { iterations: usize, residual: f64 },
    Diverged { iterations: usize, residual: f64 },
}

/// Newton's method with a minimum-norm pseudo-inverse step whenever the
/// Jacobian's condition number exceeds [`SINGULAR_CONDITION`].
///
/// Consistent singular systems still converge (to a point of the solution
/// manifold near the start); inconsistent ones end as `Singular`.
pub fn newton_refine(
    system: &dyn SquareSystem,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> NewtonOutcome {
    let mut z = start.to_vec();
    let mut saw_singular = false;
    let mut last_res = f64::INFINITY;
    for it in 0..=max_iter {
        let f = match system.residual(&z) {
            Ok(f) => f,
            Err(_) => return NewtonOutcome::Diverged { iterations: it, residual: f64::INFINITY },
        };
        let res = norm_inf(&f);
        last_res = res;
        let jac = match system.jacobian(&z) {
            Ok(j) => j,
            Err(_) => return NewtonOutcome::Diverged { iterations: it, residual: res },
        };
        let dec = svd(&jac);
        if res <= tol {
            return NewtonOutcome::Converged {
                point: z,
                residual: res,
                iterations: it,
                min_singular_value: dec.min_singular_value(),
            };
        }
        if it == max_iter || !res.is_finite() {
            break;
        }
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let smax = dec.max_singular_value();
        let smin = dec.min_singular_value();
        let step = if smin > 0.0 && smax / smin <= SINGULAR_CONDITION {
            solve_square(&jac, &neg, 0.0).unwrap_or_else(|_| pseudo_inverse_apply(&dec, &neg, 1e-12))
        } else {
            saw_singular = true;
            pseudo_inverse_apply(&dec, &neg, 1e-12)
        };
        if saw_singular && norm_inf(&step) <= 1e-15 * (1.0 + norm_inf(&z)) {
            break;
        }
        for (zi, si) in z.iter_mut().zip(&step) {
            *zi += si;
        }
        if !z.iter().all(|v| v.is_finite()) || norm_inf(&z) > DIVERGENCE_NORM {
            return NewtonOutcome::Diverged { iterations: it + 1, residual: res };
        }
    }
    if saw_singular {
        NewtonOutcome::Singular { iterations: max_iter, residual: last_res }
    } else {
        NewtonOutcome::Diverged { iterations: max_iter, residual: last_res }
    }
}

/// `F = 0` for a fixed active-set profile, in unknowns `z = (x, multipliers)`.
pub struct KktSystem<'a> {
    inst: &'a GnepInstance,
    r: &'a RatioParameters,
    active: &'a ActiveSetProfile,
}

impl<'a> KktSystem<'a> {
    pub fn new(inst: &'a GnepInstance, r: &'a RatioParameters, active: &'a ActiveSetProfile) -> Self {
        Self { inst, r, active }
    }

    fn split(&self, z: &[f64]) -> (Vec<f64>, Multipliers) {
        let n = self.inst.dim();
        (z[..n].to_vec(), Multipliers::from_flat(self.active, &z[n..]))
    }

    /// `(x, least-squares multipliers at x)`.
    pub fn start_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (m, _) = least_squares_multipliers(self.inst, x, self.r, self.active)?;
        let mut z = x.to_vec();
        z.extend(m.flat());
        Ok(z)
    }
}

impl SquareSystem for KktSystem<'_> {
    fn dim(&self) -> usize {
        self.inst.dim() + self.active.len()
    }

    fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (x, m) = self.split(z);
        residual_f(self.inst, &x, &m, self.r, self.active)
    }

    fn jacobian(&self, z: &[f64]) -> Result<DenseMatrix> {
        let (x, m) = self.split(z);
        jacobian_f(self.inst, &x, &m, self.r, self.active)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Grid points per coordinate.
    pub grid: usize,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub dedupe_radius: f64,
    /// Degenerate points with the same active set closer than this are
    /// merged; Newton converges only linearly near such points.
    pub degenerate_merge_radius: f64,
    pub activity_tol: f64,
    pub sign_tol: f64,
    /// Maximum number of active-set profiles.
    pub cap: u128,
    /// Worker threads; `None` reads `GNEP_THREADS`, `Some(0)` runs sequentially.
    pub threads: Option<usize>,
}

impl SolveConfig {
    /// Box `[-2, 2]^n`, grid 9.
    pub fn new(dim: usize) -> Self {
        Self::with_box(vec![-2.0; dim], vec![2.0; dim])
    }

    pub fn with_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self {
            lo,
            hi,
            grid: 9,
            newton_tol: 1e-10,
            max_iter: 50,
            dedupe_radius: 1e-6,
            degenerate_merge_radius: 1e-3,
            activity_tol: crate::instance::DEFAULT_ACTIVITY_TOL,
            sign_tol: crate::kkt::ZERO_MULTIPLIER_TOL,
            cap: 4096,
            threads: None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.lo.len() != dim || self.hi.len() != dim {
            return Err(Error::InvalidConfig(format!(
                "box has {} / {} bounds for dimension {dim}",
                self.lo.len(),
                self.hi.len()
            )));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidConfig("box must satisfy lo < hi".into()));
        }
        if self.grid < 2 {
            return Err(Error::InvalidConfig("grid must be at least 2".into()));
        }
        Ok(())
    }

    fn grid_points(&self) -> Vec<Vec<f64>> {
        grid_points(&self.lo, &self.hi, self.grid)
    }
}

/// All points of the uniform grid, last coordinate varying fastest.
pub fn grid_points(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let n = lo.len();
    let total = per_axis.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        out.push(
            (0..n)
                .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (per_axis - 1) as f64)
                .collect(),
        );
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
        }
    }
    out
}

/// Thread count from `GNEP_THREADS`, if set and parseable.
pub fn env_threads() -> Option<usize> {
    std::env::var("GNEP_THREADS").ok()?.trim().parse().ok()
}

fn run_parallel<J: Sync, T: Send>(threads: Option<usize>, jobs: &[J], f: impl Fn(&J) -> T + Sync + Send) -> Vec<T> {
    match threads.or_else(env_threads) {
        Some(0) => jobs.iter().map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| jobs.par_iter().map(&f).collect()),
            Err(_) => jobs.iter().map(f).collect(),
        },
        None => jobs.par_iter().map(f).collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSetStats {
    pub active: String,
    pub starts: usize,
    pub converged: usize,
    pub singular: usize,
    pub diverged: usize,
    pub filtered_by_sign: usize,
    pub filtered_by_feasibility: usize,
    pub accepted: usize,
}

/// Degenerate points (singular `DF`) sharing one active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateFinding {
    pub active: ActiveSetProfile,
    pub label: String,
    /// Distinct solutions found, including those from probing along the
    /// nullspace of `DF`; sorted lexicographically.
    pub members: Vec<Vec<f64>>,
    pub min_singular_value: f64,
}

impl DegenerateFinding {
    /// More than one distinct member: a continuum of solutions.
    pub fn is_family(&self) -> bool {
        self.members.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedPoint {
    pub point: NormalizedKktPoint,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub points: Vec<SolvedPoint>,
    pub degenerate: Vec<DegenerateFinding>,
    pub stats: Vec<ActiveSetStats>,
}

impl SolveReport {
    pub fn has_degenerate_family(&self) -> bool {
        self.degenerate.iter().any(DegenerateFinding::is_family)
    }

    pub fn xs(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.point.x.clone()).collect()
    }
}

/// All active-set profiles in canonical order (bitmask over
/// `all_constraints`, lowest bit first).
pub fn active_set_profiles(inst: &GnepInstance, cap: u128) -> Result<Vec<ActiveSetProfile>> {
    let all = inst.all_constraints();
    let combos: u128 = if all.len() >= 127 { u128::MAX } else { 1u128 << all.len() };
    if combos > cap {
        return Err(Error::CombinatorialCap { combinations: combos, cap });
    }
    let mut out = Vec::with_capacity(combos as usize);
    for mask in 0..combos {
        let mut prof = ActiveSetProfile::empty(inst.num_players());
        for (k, c) in all.iter().enumerate() {
            if mask >> k & 1 == 1 {
                match *c {
                    ConstraintId::Individual { player, index } => prof.individual[player].push(index),
                    ConstraintId::Shared(j) => prof.shared.push(j),
                }
            }
        }
        out.push(prof);
    }
    Ok(out)
}

enum Verdict {
    Accepted(NormalizedKktPoint),
    Sign,
    Feasibility,
    Singular,
    Diverged,
}

fn verdict(
    inst: &GnepInstance,
    r: &RatioParameters,
    active: &ActiveSetProfile,
    outcome: NewtonOutcome,
    cfg: &SolveConfig,
) -> Verdict {
    let z = match outcome {
        NewtonOutcome::Converged { point, .. } => point,
        NewtonOutcome::Singular { .. } => return Verdict::Singular,
        NewtonOutcome::Diverged { .. } => return Verdict::Diverged,
    };
    let n = inst.dim();
    let x = z[..n].to_vec();
    let slack = 1e-9;
    if x
        .iter()
        .enumerate()
        .any(|(i, v)| *v < cfg.lo[i] - slack || *v > cfg.hi[i] + slack)
    {
        return Verdict::Feasibility;
    }
    match inst.active_sets(&x, cfg.activity_tol) {
        Ok(seen) if &seen == active => {}
        _ => return Verdict::Feasibility,
    }
    let mult = Multipliers::from_flat(active, &z[n..]);
    if mult.min().is_some_and(|m| m < -cfg.sign_tol) {
        return Verdict::Sign;
    }
    match NormalizedKktPoint::assemble(inst, x, active.clone(), mult, r.clone()) {
        Ok(p) => Verdict::Accepted(p),
        Err(_) => Verdict::Feasibility,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Enumerates normalized KKT points for fixed `r` inside the configured box.
pub fn enumerate_normalized_kkt(
    inst: &GnepInstance,
    r: &RatioParameters,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    cfg.validate(inst.dim())?;
    r.check_players(inst)?;
    let profiles = active_set_profiles(inst, cfg.cap)?;
    let starts = cfg.grid_points();
    let jobs: Vec<(usize, usize)> = (0..profiles.len())
        .flat_map(|p| (0..starts.len()).map(move |s| (p, s)))
        .collect();

    let verdicts = run_parallel(cfg.threads, &jobs, |&(p, s)| {
        let active = &profiles[p];
        let sys = KktSystem::new(inst, r, active);
        let outcome = match sys.start_vector(&starts[s]) {
            Ok(z0) => newton_refine(&sys, &z0, cfg.newton_tol, cfg.max_iter),
            Err(_) => NewtonOutcome::Diverged { iterations: 0, residual: f64::INFINITY },
        };
        verdict(inst, r, active, outcome, cfg)
    });

    let mut stats: Vec<ActiveSetStats> = profiles
        .iter()
        .map(|p| ActiveSetStats {
            active: p.label(),
            starts: starts.len(),
            ..Default::default()
        })
        .collect();
    let mut accepted: Vec<NormalizedKktPoint> = Vec::new();
    for (&(p, _), v) in jobs.iter().zip(verdicts) {
        let st = &mut stats[p];
        match v {
            Verdict::Accepted(pt) => {
                st.converged += 1;
                st.accepted += 1;
                let deg = pt.jacobian_is_singular();
                let dup = accepted.iter().any(|q| {
                    let d = dist_inf(&q.x, &pt.x);
                    d <= cfg.dedupe_radius
                        || (deg
                            && q.active == pt.active
                            && q.jacobian_is_singular()
                            && d <= cfg.degenerate_merge_radius)
                });
                if !dup {
                    accepted.push(pt);
                }
            }
            Verdict::Sign => {
                st.converged += 1;
                st.filtered_by_sign += 1;
            }
            Verdict::Feasibility => {
                st.converged += 1;
                st.filtered_by_feasibility += 1;
            }
            Verdict::Singular => st.singular += 1,
            Verdict::Diverged => st.diverged += 1,
        }
    }
    let key = |p: &NormalizedKktPoint| {
        profiles.iter().position(|q| *q == p.active).unwrap_or(usize::MAX)
    };
    accepted.sort_by(|a, b| key(a).cmp(&key(b)).then_with(|| lex_cmp(&a.x, &b.x)));

    let points: Vec<SolvedPoint> = accepted
        .into_iter()
        .map(|p| SolvedPoint {
            degenerate: p.jacobian_is_singular(),
            point: p,
        })
        .collect();

    let mut groups: BTreeMap<usize, DegenerateFinding> = BTreeMap::new();
    for sp in points.iter().filter(|p| p.degenerate) {
        let p = &sp.point;
        let entry = groups.entry(key(p)).or_insert_with(|| DegenerateFinding {
            active: p.active.clone(),
            label: p.active.label(),
            members: Vec::new(),
            min_singular_value: f64::INFINITY,
        });
        entry.min_singular_value = entry.min_singular_value.min(p.newton_jacobian_min_singular_value);
        for m in std::iter::once(p.x.clone()).chain(probe_family(inst, r, p, cfg)) {
            if !entry.members.iter().any(|q| dist_inf(q, &m) <= cfg.degenerate_merge_radius) {
                entry.members.push(m);
            }
        }
    }
    let degenerate = groups
        .into_values()
        .map(|mut g| {
            g.members.sort_by(|a, b| lex_cmp(a, b));
            g
        })
        .collect();

    Ok(SolveReport {
        points,
        degenerate,
        stats,
    })
}

/// Steps along the nullspace of `DF` from a degenerate point and re-solves.
fn probe_family(
    inst: &GnepInstance,
    r: &RatioParameters,
    p: &NormalizedKktPoint,
    cfg: &SolveConfig,
) -> Vec<Vec<f64>> {
    let Ok(jac) = jacobian_f(inst, &p.x, &p.multipliers, r, &p.active) else {
        return Vec::new();
    };
    let dec = svd(&jac);
    let k = dec.singular_values.len() - 1;
    let dir = dec.v.column(k);
    let n = inst.dim();
    let xnorm = norm_inf(&dir[..n]);
    if xnorm < 1e-12 {
        return Vec::new();
    }
    let sys = KktSystem::new(inst, r, &p.active);
    let mut z0 = p.x.clone();
    z0.extend(p.multipliers.flat());
    let mut out = Vec::new();
    for s in [-0.2, -0.1, 0.1, 0.2] {
        let start: Vec<f64> = z0.iter().zip(&dir).map(|(z, d)| z + s * d / xnorm).collect();
        let outcome = newton_refine(&sys, &start, cfg.newton_tol, cfg.max_iter);
        if let Verdict::Accepted(q) = verdict(inst, r, &p.active, outcome, cfg) {
            out.push(q.x);
        }
    }
    out
}

/// Newton restart for a fixed active set from `x_start`; returns the
/// converged `x` if the result re-validates.
pub fn resolve_from(
    inst: &GnepInstance,
    r: &RatioParameters,
    active: &ActiveSetProfile,
    x_start: &[f64],
    cfg: &SolveConfig,
) -> Result<Option<NormalizedKktPoint>> {
    let sys = KktSystem::new(inst, r, active);
    let z0 = sys.start_vector(x_start)?;
    let outcome = newton_refine(&sys, &z0, cfg.newton_tol, cfg.max_iter);
    Ok(match verdict(inst, r, active, outcome, cfg) {
        Verdict::Accepted(p) => Some(p),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub grid: usize,
    /// Pattern search stops once the step falls below this.
    pub min_step: f64,
}

impl OracleConfig {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self {
            lo,
            hi,
            grid: 201,
            min_step: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Approximate minimizer of `rho(x, .)` over the feasible set.
    pub y: Vec<f64>,
    pub value: f64,
    /// `||y - x||_inf`.
    pub residual: f64,
}

/// Minimizes `rho(x, y) = sum_p r^p f^p(y^p, x^-p)` over the feasible set by
/// grid search followed by pattern search.
pub struct GammaOracle<'a> {
    inst: &'a GnepInstance,
    r: RatioParameters,
    cfg: OracleConfig,
    feasible: Vec<Vec<f64>>,
    step: f64,
}

const FEAS_TOL: f64 = 1e-12;

impl<'a> GammaOracle<'a> {
    pub fn new(inst: &'a GnepInstance, r: &RatioParameters, cfg: OracleConfig) -> Result<Self> {
        if !inst.is_convex_flagged() {
            return Err(Error::NotConvexFlagged);
        }
        r.check_players(inst)?;
        let n = inst.dim();
        if cfg.lo.len() != n || cfg.hi.len() != n || cfg.grid < 2 {
            return Err(Error::InvalidConfig("oracle box or grid is invalid".into()));
        }
        let total = (cfg.grid as u128).pow(n as u32);
        if total > 5_000_000 {
            return Err(Error::InvalidConfig(format!("oracle grid of {total} points is too large")));
        }
        let mut feasible = Vec::new();
        for p in grid_points(&cfg.lo, &cfg.hi, cfg.grid) {
            if inst.feasible(&p, FEAS_TOL)? {
                feasible.push(p);
            }
        }
        if feasible.is_empty() {
            return Err(Error::InvalidConfig("no feasible grid point in the oracle box".into()));
        }
        let step = (0..n)
            .map(|i| (cfg.hi[i] - cfg.lo[i]) / (cfg.grid - 1) as f64)
            .fold(0.0, f64::max);
        Ok(Self {
            inst,
            r: r.clone(),
            cfg,
            feasible,
            step,
        })
    }

    /// Feasible grid points.
    pub fn grid(&self) -> &[Vec<f64>] {
        &self.feasible
    }

    pub fn rho(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        let mut z = x.to_vec();
        for (p, pl) in self.inst.players().iter().enumerate() {
            let block = self.inst.vars().block(p);
            z[block.clone()].copy_from_slice(&y[block.clone()]);
            total += self.r.get(p) * pl.objective.value(&z)?;
            z[block.clone()].copy_from_slice(&x[block]);
        }
        Ok(total)
    }

    fn feasible(&self, y: &[f64]) -> bool {
        y.iter()
            .enumerate()
            .all(|(i, v)| *v >= self.cfg.lo[i] && *v <= self.cfg.hi[i])
            && self.inst.feasible(y, FEAS_TOL).unwrap_or(false)
    }

    fn refine(&self, x: &[f64], start: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = x.len();
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = s;
                dirs.push(d);
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = vec![0.0; n];
                    d[i] = a;
                    d[j] = b;
                    dirs.push(d);
                }
            }
        }
        let mut y = start.to_vec();
        let mut v = self.rho(x, &y)?;
        let mut step = self.step;
        let mut budget = 200_000usize;
        while step >= self.cfg.min_step && budget > 0 {
            budget -= 1;
            let mut moved = false;
            for d in &dirs {
                let cand: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + step * b).collect();
                if !self.feasible(&cand) {
                    continue;
                }
                let cv = self.rho(x, &cand)?;
                if cv < v {
                    y = cand;
                    v = cv;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        Ok((y, v))
    }

    /// Lowest grid value of `rho(x, .)`; ties are broken towards `x`.
    pub fn grid_minimizer(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let vals = self
            .feasible
            .iter()
            .map(|y| self.rho(x, y))
            .collect::<Result<Vec<_>, _>>()?;
        let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let tie = 1e-12 * (1.0 + best.abs());
        let k = (0..vals.len())
            .filter(|&k| vals[k] <= best + tie)
            .min_by(|&a, &b| dist_inf(&self.feasible[a], x).total_cmp(&dist_inf(&self.feasible[b], x)))
            .unwrap_or(0);
        Ok((self.feasible[k].clone(), vals[k]))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<OracleResult> {
        self.inst.check_dim(x)?;
        let (g, _) = self.grid_minimizer(x)?;
        let mut cands = vec![self.refine(x, &g)?];
        if self.feasible(x) {
            cands.push(self.refine(x, x)?);
        }
        let best = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let tie = 1e-12 * (1.0 + best.abs());
        let (y, value) = cands
            .into_iter()
            .filter(|c| c.1 <= best + tie)
            .min_by(|a, b| dist_inf(&a.0, x).total_cmp(&dist_inf(&b.0, x)))
            .expect("at least one candidate");
        Ok(OracleResult {
            residual: dist_inf(&y, x),
            y,
            value,
        })
    }
}

/// One-shot `Gamma` oracle evaluation at `x`.
pub fn rho_fixed_point_residual(
    inst: &GnepInstance,
    x: &[f64],
    r: &RatioParameters,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    GammaOracle::new(inst, r, cfg.clone())?.evaluate(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalSolutionStatus {
    SecondOrderSufficient,
    SecondOrderNecessaryOnly,
    StationarityFails,
}

/// Per-player second-order classification of `x^p` for `P_p(x^-p)`.
pub fn local_solution_check(
    inst: &GnepInstance,
    x: &[f64],
    player: usize,
    tol: f64,
) -> Result<LocalSolutionStatus> {
    let kkt = per_player_kkt(inst, x, player, tol)?;
    if kkt.status != PlayerKktStatus::KktWithMultipliers {
        return Ok(LocalSolutionStatus::StationarityFails);
    }
    if inst.is_convex_flagged() {
        return Ok(LocalSolutionStatus::SecondOrderSufficient);
    }
    let block = inst.vars().block(player);
    let idx: Vec<usize> = block.clone().collect();
    let mut h = inst.player(player).objective.hessian(x)?.select(&idx, &idx);
    let active = &kkt.active;
    for (k, &j) in active.individual[player].iter().enumerate() {
        let hg = inst.player(player).individual[j].hessian(x)?.select(&idx, &idx);
        h = sub_scaled(&h, &hg, kkt.individual[k]);
    }
    for (k, &j) in active.shared.iter().enumerate() {
        let hg = inst.shared()[j].hessian(x)?.select(&idx, &idx);
        h = sub_scaled(&h, &hg, kkt.shared[k]);
    }
    let rows = crate::kkt::player_gradient_rows(inst, x, player, active)?;
    let v = if rows.rows() == 0 {
        DenseMatrix::identity(idx.len())
    } else {
        numerics::nullspace_basis(&rows, numerics::default_rank_tolerance(&rows))
    };
    if v.cols() == 0 {
        return Ok(LocalSolutionStatus::SecondOrderSufficient);
    }
    let proj = v.transpose().matmul(&h).matmul(&v);
    if symmetric_min_eigenvalue(&proj) > 1e-10 * (1.0 + proj.max_abs()) {
        Ok(LocalSolutionStatus::SecondOrderSufficient)
    } else {
        Ok(LocalSolutionStatus::SecondOrderNecessaryOnly)
    }
}

fn sub_scaled(a: &DenseMatrix, b: &DenseMatrix, s: f64) -> DenseMatrix {
    let mut out = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out[(i, j)] -= s * b[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(DenseMatrix, Vec<f64>);

    impl SquareSystem for Linear {
        fn dim(&self) -> usize {
            self.1.len()
        }
        fn residual(&self, z: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.matvec(z).iter().zip(&self.1).map(|(a, b)| a - b).collect())
        }
        fn jacobian(&self, _: &[f64]) -> Result<DenseMatrix> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn newton_at_solution_takes_no_step() {
        let sys = Linear(DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]).unwrap(), vec![3.0, 4.0]);
        match newton_refine(&sys, &[1.0, 1.0], 1e-12, 50) {
            NewtonOutcome::Converged { iterations, .. } => assert_eq!(iterations, 0),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn newton_inconsistent_rank_deficient_is_singular() {
        let sys = Linear(DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(
            newton_refine(&sys, &[0.0, 0.0], 1e-12, 50),
            NewtonOutcome::Singular { .. }
        ));
    }

    fn perturbed() -> GnepInstance {
        GnepInstance::load(
            br#"{"name": "p", "players": [
            {"dim": 1, "objective": "-x1 + (0.1/2)*x1*x1"}, {"dim": 1, "objective": "-x2 + 0.1*x2*x2"}],
            "shared": ["1 - x1 - x2", "x1 - x2", "x2"], "convex": {"c1": true, "c2": true}}"#,
        )
        .unwrap()
    }

    #[test]
    fn newton_kkt_from_origin() {
        let inst = perturbed();
        let r = RatioParameters::uniform(2);
        let active = ActiveSetProfile {
            individual: vec![vec![], vec![]],
            shared: vec![0],
        };
        let sys = KktSystem::new(&inst, &r, &active);
        match newton_refine(&sys, &[0.0, 0.0, 0.0], 1e-12, 50) {
            NewtonOutcome::Converged { point, .. } => {
                assert!((point[0] - 2.0 / 3.0).abs() < 1e-12);
                assert!((point[1] - 1.0 / 3.0).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn cap_is_enforced() {
        let inst = perturbed();
        let mut cfg = SolveConfig::new(2);
        cfg.cap = 4;
        assert!(matches!(
            enumerate_normalized_kkt(&inst, &RatioParameters::uniform(2), &cfg),
            Err(Error::CombinatorialCap { combinations: 8, cap: 4 })
        ));
    }

    #[test]
    fn unconstrained_concave_player_is_necessary_only() {
        let inst = GnepInstance::load(br#"{"name": "c", "players": [{"dim": 1, "objective": "-x1^2"}]}"#)
            .unwrap();
        assert_eq!(
            local_solution_check(&inst, &[0.0], 0, 1e-8).unwrap(),
            LocalSolutionStatus::SecondOrderNecessaryOnly
        );
        assert_eq!(
            local_solution_check(&inst, &[1.0], 0, 1e-8).unwrap(),
            LocalSolutionStatus::StationarityFails
        );
    }

    #[test]
    fn oracle_refuses_unflagged() {
        let inst = GnepInstance::load(br#"{"name": "c", "players": [{"dim": 1, "objective": "x1^2"}]}"#)
            .unwrap();
        let cfg = OracleConfig::new(vec![-1.0], vec![1.0]);
        assert!(matches!(
            rho_fixed_point_residual(&inst, &[0.0], &RatioParameters::uniform(1), &cfg),
            Err(Error::NotConvexFlagged)
        ));
    }
}
