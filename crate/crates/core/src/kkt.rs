//! Normalized KKT machinery.
//!
//! For ratio parameters `r > 0` the Lagrangian of player `p` on a fixed
//! active set is
//!
//! ```text
//! L^p(x, lambda, Lambda, r) = r^p f^p(x) - sum_j lambda^p_j g^p_j(x^p) - sum_j Lambda_j G_j(x)
//! ```
//!
//! with one common multiplier `Lambda_j` per shared constraint. Stacking the
//! own-variable gradients of all `L^p` gives the pseudogradient `G_L`; adding
//! the active constraint values gives the square residual map `F` whose
//! Jacobian drives the Newton solver.

use serde::{Deserialize, Serialize};

use crate::certify::mfcq_lp;
use crate::error::{Error, Result};
use crate::instance::{ActiveSetProfile, ConstraintId, GnepInstance};
use crate::numerics::{self, lp_max, norm_inf, svd, DenseMatrix};

/// Multipliers at or below this value count as zero in the consistency tests.
pub const ZERO_MULTIPLIER_TOL: f64 = 1e-7;

const LP_BOUND: f64 = 1e6;

/// Positive weights `r^p`, one per player.
///
/// Values are kept as given; [`RatioParameters::normalized`] rescales to
/// `r^1 = 1`. Solution sets only depend on the direction of `r`, while
/// multipliers scale linearly with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RatioParameters(Vec<f64>);

impl RatioParameters {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidRatio("at least one weight is required".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidRatio(format!("weights must be finite and positive, got {v}")));
        }
        Ok(Self(values))
    }

    pub fn uniform(players: usize) -> Self {
        Self(vec![1.0; players])
    }

    /// Two-player parameters `(ratio, 1)`, i.e. `r^1 / r^2 = ratio`.
    pub fn from_ratio(ratio: f64) -> Result<Self> {
        Self::new(vec![ratio, 1.0])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, player: usize) -> f64 {
        self.0[player]
    }

    pub fn normalized(&self) -> Self {
        let s = self.0[0];
        Self(self.0.iter().map(|v| v / s).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }

    /// `r^1 / r^2`; `None` unless there are exactly two players.
    pub fn ratio(&self) -> Option<f64> {
        (self.0.len() == 2).then(|| self.0[0] / self.0[1])
    }

    pub fn check_players(&self, inst: &GnepInstance) -> Result<()> {
        if self.0.len() != inst.num_players() {
            return Err(Error::InvalidRatio(format!(
                "{} weights for {} players",
                self.0.len(),
                inst.num_players()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for RatioParameters {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RatioParameters> for Vec<f64> {
    fn from(r: RatioParameters) -> Vec<f64> {
        r.0
    }
}

/// Multipliers aligned with an [`ActiveSetProfile`]: `individual[p][k]`
/// belongs to `active.individual[p][k]`, `shared[k]` to `active.shared[k]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Multipliers {
    pub individual: Vec<Vec<f64>>,
    pub shared: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(active: &ActiveSetProfile) -> Self {
        Self {
            individual: active.individual.iter().map(|v| vec![0.0; v.len()]).collect(),
            shared: vec![0.0; active.shared.len()],
        }
    }

    /// Canonical flat order: individual by player, then shared.
    pub fn flat(&self) -> Vec<f64> {
        self.individual
            .iter()
            .flatten()
            .chain(self.shared.iter())
            .copied()
            .collect()
    }

    pub fn from_flat(active: &ActiveSetProfile, flat: &[f64]) -> Self {
        let mut it = flat.iter().copied();
        let individual = active
            .individual
            .iter()
            .map(|v| it.by_ref().take(v.len()).collect())
            .collect();
        let shared = it.take(active.shared.len()).collect();
        Self { individual, shared }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            individual: self
                .individual
                .iter()
                .map(|v| v.iter().map(|m| m * factor).collect())
                .collect(),
            shared: self.shared.iter().map(|m| m * factor).collect(),
        }
    }

    /// Smallest multiplier, `None` when there are none.
    pub fn min(&self) -> Option<f64> {
        self.flat().into_iter().reduce(f64::min)
    }

    /// Multiplier of `c` if it is active.
    pub fn get(&self, active: &ActiveSetProfile, c: ConstraintId) -> Option<f64> {
        match c {
            ConstraintId::Individual { player, index } => active.individual[player]
                .iter()
                .position(|&i| i == index)
                .map(|k| self.individual[player][k]),
            ConstraintId::Shared(j) => active
                .shared
                .iter()
                .position(|&i| i == j)
                .map(|k| self.shared[k]),
        }
    }
}

/// `G_f(x, r)`: block `p` is `r^p * grad_{x^p} f^p(x)`.
pub fn pseudogradient_objectives(
    inst: &GnepInstance,
    x: &[f64],
    r: &RatioParameters,
) -> Result<Vec<f64>> {
    inst.check_dim(x)?;
    r.check_players(inst)?;
    let mut out = Vec::with_capacity(inst.dim());
    for (p, pl) in inst.players().iter().enumerate() {
        let g = pl.objective.gradient_block(x, inst.vars().block(p))?;
        out.extend(g.into_iter().map(|v| r.get(p) * v));
    }
    Ok(out)
}

/// `D_x G_f(x, r)`, generally non-symmetric across player blocks.
pub fn jacobian_objectives(inst: &GnepInstance, x: &[f64], r: &RatioParameters) -> Result<DenseMatrix> {
    inst.check_dim(x)?;
    r.check_players(inst)?;
    let n = inst.dim();
    let mut jac = DenseMatrix::zeros(n, n);
    for (p, pl) in inst.players().iter().enumerate() {
        let h = pl.objective.hessian(x)?;
        for i in inst.vars().block(p) {
            for j in 0..n {
                jac[(i, j)] = r.get(p) * h[(i, j)];
            }
        }
    }
    Ok(jac)
}

/// Full-space gradients of the active constraints as rows, in canonical
/// order. Individual constraint rows vanish outside their owner's block.
pub fn active_gradient_matrix(
    inst: &GnepInstance,
    x: &[f64],
    active: &ActiveSetProfile,
) -> Result<DenseMatrix> {
    inst.check_dim(x)?;
    let rows = active
        .constraints()
        .into_iter()
        .map(|c| inst.constraint(c).gradient(x))
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Ok(DenseMatrix::zeros(0, inst.dim()));
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

fn check_multiplier_shape(active: &ActiveSetProfile, mult: &Multipliers) -> Result<()> {
    let ok = mult.individual.len() == active.individual.len()
        && mult
            .individual
            .iter()
            .zip(&active.individual)
            .all(|(m, a)| m.len() == a.len())
        && mult.shared.len() == active.shared.len();
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(
            "multiplier lengths do not match the active set".into(),
        ))
    }
}

/// `G_L(x, lambda, Lambda, r)`: block `p` is `grad_{x^p} L^p`.
pub fn lagrangian_pseudogradient(
    inst: &GnepInstance,
    x: &[f64],
    mult: &Multipliers,
    r: &RatioParameters,
    active: &ActiveSetProfile,
) -> Result<Vec<f64>> {
    check_multiplier_shape(active, mult)?;
    let mut out = pseudogradient_objectives(inst, x, r)?;
    for (p, idx) in active.individual.iter().enumerate() {
        let block = inst.vars().block(p);
        for (k, &j) in idx.iter().enumerate() {
            let g = inst.player(p).individual[j].gradient_block(x, block.clone())?;
            for (i, gi) in block.clone().zip(g) {
                out[i] -= mult.individual[p][k] * gi;
            }
        }
    }
    for (k, &j) in active.shared.iter().enumerate() {
        let g = inst.shared()[j].gradient(x)?;
        for (o, gi) in out.iter_mut().zip(g) {
            *o -= mult.shared[k] * gi;
        }
    }
    Ok(out)
}

/// `D_x G_L`, assembled blockwise from exact Hessians.
pub fn jacobian_lagrangian(
    inst: &GnepInstance,
    x: &[f64],
    mult: &Multipliers,
    r: &RatioParameters,
    active: &ActiveSetProfile,
) -> Result<DenseMatrix> {
    check_multiplier_shape(active, mult)?;
    let n = inst.dim();
    let mut jac = jacobian_objectives(inst, x, r)?;
    for (p, idx) in active.individual.iter().enumerate() {
        for (k, &j) in idx.iter().enumerate() {
            let h = inst.player(p).individual[j].hessian(x)?;
            for i in inst.vars().block(p) {
                for c in 0..n {
                    jac[(i, c)] -= mult.individual[p][k] * h[(i, c)];
                }
            }
        }
    }
    for (k, &j) in active.shared.iter().enumerate() {
        let h = inst.shared()[j].hessian(x)?;
        for i in 0..n {
            for c in 0..n {
                jac[(i, c)] -= mult.shared[k] * h[(i, c)];
            }
        }
    }
    Ok(jac)
}

/// `F(x, lambda, Lambda) = (G_L; active g; active G)`.
pub fn residual_f(
    inst: &GnepInstance,
    x: &[f64],
    mult: &Multipliers,
    r: &RatioParameters,
    active: &ActiveSetProfile,
) -> Result<Vec<f64>> {
    let mut out = lagrangian_pseudogradient(inst, x, mult, r, active)?;
    for c in active.constraints() {
        out.push(inst.constraint(c).value(x)?);
    }
    Ok(out)
}

/// `DF = [[D_x G_L, -B^T], [B, 0]]` with `B` the active gradient matrix.
pub fn jacobian_f(
    inst: &GnepInstance,
    x: &[f64],
    mult: &Multipliers,
    r: &RatioParameters,
    active: &ActiveSetProfile,
) -> Result<DenseMatrix> {
    let n = inst.dim();
    let m = active.len();
    let dgl = jacobian_lagrangian(inst, x, mult, r, active)?;
    let b = active_gradient_matrix(inst, x, active)?;
    let mut jac = DenseMatrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..n {
            jac[(i, j)] = dgl[(i, j)];
        }
    }
    for k in 0..m {
        for i in 0..n {
            jac[(i, n + k)] = -b[(k, i)];
            jac[(n + k, i)] = b[(k, i)];
        }
    }
    Ok(jac)
}

/// Least-squares multipliers for a given active set, without any checks.
/// Returns the multipliers and `||G_L||_inf` at them.
pub fn least_squares_multipliers(
    inst: &GnepInstance,
    x: &[f64],
    r: &RatioParameters,
    active: &ActiveSetProfile,
) -> Result<(Multipliers, f64)> {
    let gf = pseudogradient_objectives(inst, x, r)?;
    if active.is_empty() {
        return Ok((Multipliers::zeros(active), norm_inf(&gf)));
    }
    let bt = active_gradient_matrix(inst, x, active)?.transpose();
    let (mu, _) = numerics::least_squares(&bt, &gf, 1e-12);
    let mult = Multipliers::from_flat(active, &mu);
    let res = norm_inf(&lagrangian_pseudogradient(inst, x, &mult, r, active)?);
    Ok((mult, res))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredMultipliers {
    pub active: ActiveSetProfile,
    pub multipliers: Multipliers,
    /// `||G_L||_inf` at the recovered multipliers.
    pub residual: f64,
}

/// Recovers `(lambda, Lambda)` at `x` from the stationarity equations.
///
/// `tol` is used both as the activity tolerance and, scaled by
/// `1 + ||G_f||_inf`, as the admissible stationarity residual.
pub fn recover_multipliers(
    inst: &GnepInstance,
    x: &[f64],
    r: &RatioParameters,
    tol: f64,
) -> Result<RecoveredMultipliers> {
    let active = inst.active_sets(x, tol)?;
    if !active.is_empty() {
        let b = active_gradient_matrix(inst, x, &active)?;
        let rk = numerics::rank(&b, numerics::default_rank_tolerance(&b));
        if rk < b.rows() {
            return Err(Error::RankDeficient {
                rank: rk,
                required: b.rows(),
            });
        }
    }
    let (multipliers, residual) = least_squares_multipliers(inst, x, r, &active)?;
    let scale = 1.0 + norm_inf(&pseudogradient_objectives(inst, x, r)?);
    if residual > tol * scale {
        return Err(Error::LargeResidual { residual });
    }
    Ok(RecoveredMultipliers {
        active,
        multipliers,
        residual,
    })
}

/// Tolerances used to validate a normalized KKT point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktTolerances {
    pub activity: f64,
    pub sign: f64,
    pub stationarity: f64,
}

impl Default for KktTolerances {
    fn default() -> Self {
        Self {
            activity: crate::instance::DEFAULT_ACTIVITY_TOL,
            sign: ZERO_MULTIPLIER_TOL,
            stationarity: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KktViolation {
    NegativeMultiplier { constraint: String, value: f64 },
    Stationarity { residual: f64 },
    ActiveNotZero { constraint: String, value: f64 },
    InactiveNotStrict { constraint: String, value: f64 },
}

/// A candidate normalized KKT point with its multipliers and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedKktPoint {
    pub x: Vec<f64>,
    pub active: ActiveSetProfile,
    pub multipliers: Multipliers,
    pub r: RatioParameters,
    /// `||G_L||_inf`.
    pub stationarity_residual: f64,
    /// Smallest singular value of the fixed-active-set Jacobian `DF`.
    pub newton_jacobian_min_singular_value: f64,
    /// Largest singular value of `DF`.
    pub newton_jacobian_norm: f64,
}

impl NormalizedKktPoint {
    /// Computes the residual and Jacobian diagnostics; does not validate.
    pub fn assemble(
        inst: &GnepInstance,
        x: Vec<f64>,
        active: ActiveSetProfile,
        multipliers: Multipliers,
        r: RatioParameters,
    ) -> Result<Self> {
        let gl = lagrangian_pseudogradient(inst, &x, &multipliers, &r, &active)?;
        let jac = jacobian_f(inst, &x, &multipliers, &r, &active)?;
        let dec = svd(&jac);
        Ok(Self {
            stationarity_residual: norm_inf(&gl),
            newton_jacobian_min_singular_value: dec.min_singular_value(),
            newton_jacobian_norm: dec.max_singular_value(),
            x,
            active,
            multipliers,
            r,
        })
    }

    /// Checks sign conditions, stationarity and strict activity pattern.
    pub fn validate(&self, inst: &GnepInstance, tol: &KktTolerances) -> Result<Vec<KktViolation>> {
        let mut out = Vec::new();
        for c in self.active.constraints() {
            let m = self.multipliers.get(&self.active, c).unwrap_or(0.0);
            if m < -tol.sign {
                out.push(KktViolation::NegativeMultiplier {
                    constraint: c.to_string(),
                    value: m,
                });
            }
        }
        let scale = 1.0 + norm_inf(&pseudogradient_objectives(inst, &self.x, &self.r)?);
        if self.stationarity_residual > tol.stationarity * scale {
            out.push(KktViolation::Stationarity {
                residual: self.stationarity_residual,
            });
        }
        for (c, v) in inst.constraint_values(&self.x)? {
            if self.active.contains(c) {
                if v.abs() > tol.activity {
                    out.push(KktViolation::ActiveNotZero {
                        constraint: c.to_string(),
                        value: v,
                    });
                }
            } else if v <= tol.activity {
                out.push(KktViolation::InactiveNotStrict {
                    constraint: c.to_string(),
                    value: v,
                });
            }
        }
        Ok(out)
    }

    /// True when the Jacobian `DF` is numerically singular:
    /// `sigma_min < 1e-6 * ||DF||`.
    pub fn jacobian_is_singular(&self) -> bool {
        self.newton_jacobian_min_singular_value < 1e-6 * self.newton_jacobian_norm.max(1e-300)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayerKktStatus {
    /// Own-variable stationarity holds with nonnegative multipliers.
    KktWithMultipliers,
    /// No KKT multipliers, but the active gradients admit a nontrivial
    /// nonnegative combination equal to zero (MFCQ fails).
    FritzJohnOnly,
    /// Neither KKT nor Fritz-John conditions hold.
    StationarityInfeasible,
}

/// Per-player KKT classification at a feasible point, with `r^p = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPlayerKktResult {
    pub player: usize,
    pub status: PlayerKktStatus,
    pub active: ActiveSetProfile,
    /// Multipliers of the player's active individual constraints.
    pub individual: Vec<f64>,
    /// Multipliers `Lambda^p_j` aligned with `active.shared`.
    pub shared: Vec<f64>,
    /// Whether the multipliers are unique (player-level LICQ).
    pub unique: bool,
    pub residual: f64,
    /// Optimum of the player's MFCQ program, when computed.
    pub mfcq_t_star: Option<f64>,
}

/// Active gradients of player `p`'s problem restricted to `x^p`, as rows:
/// own individual constraints first, then active shared constraints.
pub fn player_gradient_rows(
    inst: &GnepInstance,
    x: &[f64],
    player: usize,
    active: &ActiveSetProfile,
) -> Result<DenseMatrix> {
    let block = inst.vars().block(player);
    let mut rows = Vec::new();
    for &j in &active.individual[player] {
        rows.push(inst.player(player).individual[j].gradient_block(x, block.clone())?);
    }
    for &j in &active.shared {
        rows.push(inst.shared()[j].gradient_block(x, block.clone())?);
    }
    if rows.is_empty() {
        return Ok(DenseMatrix::zeros(0, block.len()));
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

/// Finds `mu >= 0` with `A^T mu = b` by a phase-one program; returns the
/// multipliers and the residual `||A^T mu - b||_inf`.
fn nonnegative_combination(rows: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows.rows();
    let k = b.len();
    if m == 0 {
        return Ok((Vec::new(), norm_inf(b)));
    }
    // variables: mu (m), u (k), v (k)
    let nv = m + 2 * k;
    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..k {
        let mut row = vec![0.0; nv];
        for c in 0..m {
            row[c] = rows[(c, i)];
        }
        row[m + i] = 1.0;
        row[m + k + i] = -1.0;
        a_rows.push(row.clone());
        rhs.push(b[i]);
        a_rows.push(row.iter().map(|v| -v).collect());
        rhs.push(-b[i]);
    }
    for c in 0..nv {
        let mut lo = vec![0.0; nv];
        lo[c] = -1.0;
        a_rows.push(lo);
        rhs.push(0.0);
        let mut hi = vec![0.0; nv];
        hi[c] = 1.0;
        a_rows.push(hi);
        rhs.push(LP_BOUND);
    }
    let mut cost = vec![0.0; nv];
    for c in m..nv {
        cost[c] = -1.0;
    }
    let sol = lp_max(&cost, &DenseMatrix::from_rows(&a_rows)?, &rhs)?;
    let mu: Vec<f64> = sol.argument[..m].iter().map(|v| v.max(0.0)).collect();
    let resid: Vec<f64> = (0..k)
        .map(|i| (0..m).map(|c| rows[(c, i)] * mu[c]).sum::<f64>() - b[i])
        .collect();
    Ok((mu, norm_inf(&resid)))
}

/// Classifies player `p`'s own-variable optimality at `x`: KKT with
/// nonnegative multipliers, Fritz-John only, or neither.
pub fn per_player_kkt(
    inst: &GnepInstance,
    x: &[f64],
    player: usize,
    tol: f64,
) -> Result<PerPlayerKktResult> {
    let active = inst.active_sets(x, tol)?;
    let rows = player_gradient_rows(inst, x, player, &active)?;
    let b = inst
        .player(player)
        .objective
        .gradient_block(x, inst.vars().block(player))?;
    let (mu, residual) = nonnegative_combination(&rows, &b)?;
    let n_ind = active.individual[player].len();
    let unique = rows.rows() == 0
        || numerics::rank(&rows, numerics::default_rank_tolerance(&rows)) == rows.rows();

    let accept = tol.max(1e-9) * (1.0 + norm_inf(&b));
    let (status, mfcq_t_star) = if residual <= accept {
        (PlayerKktStatus::KktWithMultipliers, None)
    } else {
        let t = mfcq_lp(&rows)?.t_star;
        if t <= crate::certify::MFCQ_THRESHOLD {
            (PlayerKktStatus::FritzJohnOnly, Some(t))
        } else {
            (PlayerKktStatus::StationarityInfeasible, Some(t))
        }
    };
    let kkt = status == PlayerKktStatus::KktWithMultipliers;
    Ok(PerPlayerKktResult {
        player,
        status,
        individual: if kkt { mu[..n_ind].to_vec() } else { Vec::new() },
        shared: if kkt { mu[n_ind..].to_vec() } else { Vec::new() },
        active,
        unique,
        residual,
        mfcq_t_star,
    })
}

/// Range of `r^1 / r^2` for which a two-player point is a normalized KKT
/// point. `hi = None` means unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioInterval {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl RatioInterval {
    pub fn contains(&self, ratio: f64, tol: f64) -> bool {
        ratio >= self.lo - tol && self.hi.map_or(true, |h| ratio <= h + tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyRoute {
    /// Per-player multipliers are unique and their ratios were matched.
    PerPlayerRatios,
    /// Joint feasibility program over `(r, lambda, Lambda)`.
    JointProgram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InconsistencyReason {
    /// Some player's own problem has no KKT multipliers at `x`.
    NotKkt { player: usize, status: PlayerKktStatus },
    /// A shared constraint carries a zero multiplier for one player and a
    /// positive one for another, so no positive ratio can equalize them.
    ZeroVersusPositive {
        constraint: String,
        zero_player: usize,
        zero_value: f64,
        positive_player: usize,
        positive_value: f64,
    },
    /// Positive multipliers whose ratios cannot be matched by a single `r`.
    RatioMismatch { residual: f64 },
    /// No positive `r` admits nonnegative normalized multipliers.
    NoPositiveRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Consistency {
    Consistent {
        witness: RatioParameters,
        ratio_interval: Option<RatioInterval>,
        route: ConsistencyRoute,
    },
    Inconsistent { reason: InconsistencyReason },
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent { .. })
    }
}

/// Ratio test on unique per-player multipliers: positive `r^p` must make
/// `r^p Lambda^p_j` independent of `p` for every active shared `j`.
pub fn per_player_consistency(inst: &GnepInstance, x: &[f64], tol: f64) -> Result<Consistency> {
    let n_players = inst.num_players();
    let mut per = Vec::with_capacity(n_players);
    for p in 0..n_players {
        let res = per_player_kkt(inst, x, p, tol)?;
        if res.status != PlayerKktStatus::KktWithMultipliers {
            return Ok(Consistency::Inconsistent {
                reason: InconsistencyReason::NotKkt {
                    player: p + 1,
                    status: res.status,
                },
            });
        }
        if !res.unique {
            return Err(Error::NonUniquePlayerMultipliers { player: p + 1 });
        }
        per.push(res);
    }
    let active = &per[0].active;

    // log r^p + log Lambda^p_j = c_j over players with positive multipliers;
    // unknowns: log r^2..N, then c_j per constrained shared index
    let mut eqs: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut n_c = 0;
    for (k, &j) in active.shared.iter().enumerate() {
        let vals: Vec<f64> = per.iter().map(|r| r.shared[k]).collect();
        let zero = vals.iter().position(|v| *v <= ZERO_MULTIPLIER_TOL);
        let pos = vals.iter().position(|v| *v > ZERO_MULTIPLIER_TOL);
        match (zero, pos) {
            (Some(z), Some(p)) => {
                return Ok(Consistency::Inconsistent {
                    reason: InconsistencyReason::ZeroVersusPositive {
                        constraint: ConstraintId::Shared(j).to_string(),
                        zero_player: z + 1,
                        zero_value: vals[z],
                        positive_player: p + 1,
                        positive_value: vals[p],
                    },
                })
            }
            (None, Some(_)) => {
                let c_col = n_players - 1 + n_c;
                n_c += 1;
                for (p, v) in vals.iter().enumerate() {
                    let mut terms = vec![(c_col, 1.0)];
                    if p > 0 {
                        terms.push((p - 1, -1.0));
                    }
                    eqs.push((terms, v.ln()));
                }
            }
            _ => {}
        }
    }
    let mut log_r = vec![0.0; n_players];
    if !eqs.is_empty() {
        let cols = n_players - 1 + n_c;
        let mut a = DenseMatrix::zeros(eqs.len(), cols);
        let mut b = Vec::with_capacity(eqs.len());
        for (row, (terms, rhs)) in eqs.iter().enumerate() {
            for &(c, v) in terms {
                a[(row, c)] = v;
            }
            b.push(*rhs);
        }
        let (z, res) = numerics::least_squares(&a, &b, 1e-12);
        if res > 1e-9 {
            return Ok(Consistency::Inconsistent {
                reason: InconsistencyReason::RatioMismatch { residual: res },
            });
        }
        log_r[1..].copy_from_slice(&z[..n_players - 1]);
    }
    let witness = RatioParameters::new(log_r.iter().map(|v| v.exp()).collect())?;
    Ok(Consistency::Consistent {
        witness,
        ratio_interval: ratio_interval(inst, x, tol)?,
        route: ConsistencyRoute::PerPlayerRatios,
    })
}

/// Rows of the joint stationarity system in unknowns `(r^2..N, mu)` with
/// right-hand side; `r^1 = fixed_first`.
struct JointSystem {
    /// Coefficients per stationarity row: r-part (players 1..N, 0-based full), mu-part.
    r_coef: Vec<Vec<f64>>,
    mu_coef: Vec<Vec<f64>>,
    scale: f64,
}

fn joint_system(inst: &GnepInstance, x: &[f64], active: &ActiveSetProfile) -> Result<JointSystem> {
    let n = inst.dim();
    let players = inst.num_players();
    let b = active_gradient_matrix(inst, x, active)?;
    let mut r_coef = vec![vec![0.0; players]; n];
    let mut scale: f64 = 1.0;
    for p in 0..players {
        let g = inst
            .player(p)
            .objective
            .gradient_block(x, inst.vars().block(p))?;
        for (i, gi) in inst.vars().block(p).zip(g) {
            r_coef[i][p] = gi;
            scale = scale.max(gi.abs());
        }
    }
    let mu_coef = (0..n)
        .map(|i| (0..b.rows()).map(|c| -b[(c, i)]).collect())
        .collect();
    Ok(JointSystem {
        r_coef,
        mu_coef,
        scale,
    })
}

/// Builds `A z <= b` for variables `(r (N), mu (m), s)` encoding
/// `|sum_p r^p grad f^p - B^T mu| <= eps`, `0 <= mu <= M`, `0 <= r <= M`,
/// `r^fixed = 1`, `r^p >= s` for the free players, `s <= 1`.
fn joint_program(sys: &JointSystem, fixed: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let players = sys.r_coef.first().map_or(0, Vec::len);
    let m = sys.mu_coef.first().map_or(0, Vec::len);
    let nv = players + m + 1;
    let eps = 1e-9 * sys.scale;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (rc, mc) in sys.r_coef.iter().zip(&sys.mu_coef) {
        let mut row = vec![0.0; nv];
        row[..players].copy_from_slice(rc);
        row[players..players + m].copy_from_slice(mc);
        rows.push(row.clone());
        rhs.push(eps);
        rows.push(row.iter().map(|v| -v).collect());
        rhs.push(eps);
    }
    for c in 0..players + m {
        let mut lo = vec![0.0; nv];
        lo[c] = -1.0;
        rows.push(lo);
        rhs.push(if c == fixed { -1.0 } else { 0.0 });
        let mut hi = vec![0.0; nv];
        hi[c] = 1.0;
        rows.push(hi);
        rhs.push(if c == fixed { 1.0 } else { LP_BOUND });
    }
    for p in (0..players).filter(|&p| p != fixed) {
        let mut row = vec![0.0; nv];
        row[nv - 1] = 1.0;
        row[p] = -1.0;
        rows.push(row);
        rhs.push(0.0);
    }
    let mut s_hi = vec![0.0; nv];
    s_hi[nv - 1] = 1.0;
    rows.push(s_hi);
    rhs.push(1.0);
    (rows, rhs)
}

/// Range of `r^1 / r^2` admitting nonnegative normalized multipliers at `x`
/// (two-player instances only).
pub fn ratio_interval(inst: &GnepInstance, x: &[f64], tol: f64) -> Result<Option<RatioInterval>> {
    if inst.num_players() != 2 {
        return Ok(None);
    }
    let active = inst.active_sets(x, tol)?;
    let sys = joint_system(inst, x, &active)?;
    // r^2 = 1 fixed, optimize r^1 directly
    let (rows, rhs) = joint_program(&sys, 1);
    let a = DenseMatrix::from_rows(&rows)?;
    let nv = a.cols();
    let mut c = vec![0.0; nv];
    c[0] = 1.0;
    let hi = match lp_max(&c, &a, &rhs) {
        Ok(s) => s.value,
        Err(crate::numerics::NumericsError::Infeasible) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    c[0] = -1.0;
    let lo = -lp_max(&c, &a, &rhs)?.value;
    Ok(Some(RatioInterval {
        lo: lo.max(0.0),
        hi: (hi < 0.5 * LP_BOUND).then_some(hi),
    }))
}

/// Decides whether `x` is a normalized KKT point for some positive `r`.
///
/// Unique per-player multipliers are matched by their ratios; when some
/// player's multipliers are not unique the joint program over
/// `(r, lambda, Lambda)` decides instead.
pub fn normalized_consistency(inst: &GnepInstance, x: &[f64], tol: f64) -> Result<Consistency> {
    match per_player_consistency(inst, x, tol) {
        Err(Error::NonUniquePlayerMultipliers { .. }) => {}
        other => return other,
    }
    let active = inst.active_sets(x, tol)?;
    let sys = joint_system(inst, x, &active)?;
    let (rows, rhs) = joint_program(&sys, 0);
    let a = DenseMatrix::from_rows(&rows)?;
    let nv = a.cols();
    let mut c = vec![0.0; nv];
    c[nv - 1] = 1.0;
    let sol = match lp_max(&c, &a, &rhs) {
        Ok(s) => s,
        Err(crate::numerics::NumericsError::Infeasible) => {
            return Ok(Consistency::Inconsistent {
                reason: InconsistencyReason::NoPositiveRatio,
            })
        }
        Err(e) => return Err(e.into()),
    };
    if sol.value <= 1e-9 {
        return Ok(Consistency::Inconsistent {
            reason: InconsistencyReason::NoPositiveRatio,
        });
    }
    let interval = ratio_interval(inst, x, tol)?;
    let witness = match interval {
        Some(RatioInterval { lo, hi }) => {
            let rho = match hi {
                Some(h) if h > lo => 0.5 * (lo + h),
                Some(h) => h,
                None => lo.max(0.5) * 2.0,
            };
            RatioParameters::new(vec![1.0, 1.0 / rho])?
        }
        None => RatioParameters::new(sol.argument[..inst.num_players()].to_vec())?,
    };
    Ok(Consistency::Consistent {
        witness,
        ratio_interval: interval,
        route: ConsistencyRoute::JointProgram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(json: &str) -> GnepInstance {
        GnepInstance::load(json.as_bytes()).unwrap()
    }

    const EX3: &str = r#"{"name": "ex3", "players": [
        {"dim": 1, "objective": "-x1"}, {"dim": 1, "objective": "-x2"}],
        "shared": ["1 - x1 - x2", "x1 - x2", "x2"], "convex": {"c1": true, "c2": true}}"#;
    const EX5: &str = r#"{"name": "ex5", "players": [
        {"dim": 1, "objective": "-x1 + x1*x2"}, {"dim": 1, "objective": "-x2 + (1/2)*x1*x2"}],
        "shared": ["1 - x1 - x2", "x1 - x2", "x2"], "convex": {"c1": true, "c2": true}}"#;

    #[test]
    fn ratio_parameters_validate() {
        assert!(RatioParameters::new(vec![1.0, 0.0]).is_err());
        assert!(RatioParameters::new(vec![]).is_err());
        assert!(RatioParameters::new(vec![1.0, f64::NAN]).is_err());
        let r = RatioParameters::new(vec![2.0, 4.0]).unwrap();
        assert_eq!(r.normalized().values(), &[1.0, 2.0]);
        assert_eq!(r.ratio(), Some(0.5));
        let back: RatioParameters = serde_json::from_str("[1.0, 3.0]").unwrap();
        assert_eq!(back.values(), &[1.0, 3.0]);
        assert!(serde_json::from_str::<RatioParameters>("[1.0, -3.0]").is_err());
    }

    #[test]
    fn pseudogradient_examples() {
        let e5 = inst(EX5);
        let r = RatioParameters::uniform(2);
        assert_eq!(pseudogradient_objectives(&e5, &[1.0, 0.0], &r).unwrap(), vec![-1.0, -0.5]);
        let e3 = inst(EX3);
        assert_eq!(pseudogradient_objectives(&e3, &[0.3, 0.9], &r).unwrap(), vec![-1.0, -1.0]);
        let c = inst(r#"{"name": "c", "players": [{"dim": 2, "objective": "4"}]}"#);
        assert_eq!(
            pseudogradient_objectives(&c, &[1.0, 2.0], &RatioParameters::uniform(1)).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn interior_family_jacobian_is_antisymmetric_pattern() {
        let e5 = inst(EX5);
        let r = RatioParameters::new(vec![1.0, 3.0]).unwrap();
        let active = ActiveSetProfile {
            individual: vec![vec![], vec![]],
            shared: vec![0],
        };
        let j = jacobian_lagrangian(&e5, &[0.7, 0.3], &Multipliers::zeros(&active), &r, &active)
            .unwrap();
        assert_eq!(j.to_rows(), vec![vec![0.0, 1.0], vec![1.5, 0.0]]);
    }

    #[test]
    fn zero_multipliers_reduce_to_objective_pseudogradient() {
        let e5 = inst(EX5);
        let r = RatioParameters::uniform(2);
        let active = ActiveSetProfile {
            individual: vec![vec![], vec![]],
            shared: vec![0, 2],
        };
        let x = [0.2, 0.4];
        let gl = lagrangian_pseudogradient(&e5, &x, &Multipliers::zeros(&active), &r, &active).unwrap();
        assert_eq!(gl, pseudogradient_objectives(&e5, &x, &r).unwrap());
    }

    #[test]
    fn multiplier_recovery_examples() {
        let e3 = inst(EX3);
        let rec = recover_multipliers(&e3, &[0.5, 0.5], &RatioParameters::new(vec![1.0, 2.0]).unwrap(), 1e-8)
            .unwrap();
        assert_eq!(rec.active.shared, vec![0, 1]);
        assert!((rec.multipliers.shared[0] - 1.5).abs() < 1e-12);
        assert!((rec.multipliers.shared[1] - 0.5).abs() < 1e-12);
        assert!(rec.residual < 1e-12);

        let e5 = inst(EX5);
        let r = RatioParameters::uniform(2);
        let rec = recover_multipliers(&e5, &[1.0, 0.0], &r, 1e-8).unwrap();
        assert_eq!(rec.active.shared, vec![0, 2]);
        assert!((rec.multipliers.shared[0] - 1.0).abs() < 1e-12);
        assert!((rec.multipliers.shared[1] - 0.5).abs() < 1e-12);
        let rec = recover_multipliers(&e5, &[0.5, 0.5], &r, 1e-8).unwrap();
        assert!((rec.multipliers.shared[0] - 0.625).abs() < 1e-12);
        assert!((rec.multipliers.shared[1] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn recovery_errors() {
        let e3 = inst(EX3);
        let r = RatioParameters::uniform(2);
        // (0.3, 0.3): only G2 active with gradient (1, -1); stationarity fails
        assert!(matches!(
            recover_multipliers(&e3, &[0.3, 0.3], &r, 1e-8),
            Err(Error::LargeResidual { .. })
        ));
        let dup = inst(r#"{"name": "d", "players": [{"dim": 1, "objective": "-x1"}],
            "shared": ["1 - x1", "2 - 2*x1"]}"#);
        assert_eq!(
            recover_multipliers(&dup, &[1.0], &RatioParameters::uniform(1), 1e-8),
            Err(Error::RankDeficient { rank: 1, required: 2 })
        );
    }

    #[test]
    fn newton_jacobian_block_structure() {
        let e4 = inst(r#"{"name": "p", "players": [
            {"dim": 1, "objective": "-x1 + (0.1/2)*x1*x1"}, {"dim": 1, "objective": "-x2 + 0.1*x2*x2"}],
            "shared": ["1 - x1 - x2", "x1 - x2", "x2"]}"#);
        let active = ActiveSetProfile {
            individual: vec![vec![], vec![]],
            shared: vec![0],
        };
        let mult = Multipliers {
            individual: vec![vec![], vec![]],
            shared: vec![1.0 - 0.2 / 3.0],
        };
        let r = RatioParameters::uniform(2);
        let j = jacobian_f(&e4, &[2.0 / 3.0, 1.0 / 3.0], &mult, &r, &active).unwrap();
        let expect = [[0.1, 0.0, 1.0], [0.0, 0.2, 1.0], [-1.0, -1.0, 0.0]];
        for i in 0..3 {
            for k in 0..3 {
                assert!((j[(i, k)] - expect[i][k]).abs() < 1e-15);
            }
        }
        let f = residual_f(&e4, &[2.0 / 3.0, 1.0 / 3.0], &mult, &r, &active).unwrap();
        assert!(norm_inf(&f) < 1e-15);
    }

    #[test]
    fn per_player_classification() {
        let e1 = inst(r#"{"name": "e1", "players": [
            {"dim": 2, "objective": "-x1_1"}, {"dim": 1, "objective": "-x2"}],
            "shared": ["1 - (x1_1 - x2)^2 - (x1_2 - (1 - 2*x2))^2", "1 - x1_1^2 - (x2 + 1)^2"]}"#);
        let p1 = per_player_kkt(&e1, &[0.0, 0.0, 0.0], 0, 1e-8).unwrap();
        assert_eq!(p1.status, PlayerKktStatus::FritzJohnOnly);
        assert_eq!(p1.mfcq_t_star, Some(0.0));

        let e2 = inst(r#"{"name": "e2", "players": [
            {"dim": 1, "objective": "(x1 - x2)^2"}, {"dim": 1, "objective": "-x2"}],
            "shared": ["x1 - 2*x2", "1 - x1", "x2 + 1"]}"#);
        let p1 = per_player_kkt(&e2, &[0.0, 0.0], 0, 1e-8).unwrap();
        assert_eq!(p1.status, PlayerKktStatus::KktWithMultipliers);
        assert_eq!(p1.shared, vec![0.0]);
        let p2 = per_player_kkt(&e2, &[0.0, 0.0], 1, 1e-8).unwrap();
        assert!((p2.shared[0] - 0.5).abs() < 1e-12);
        match normalized_consistency(&e2, &[0.0, 0.0], 1e-8).unwrap() {
            Consistency::Inconsistent {
                reason: InconsistencyReason::ZeroVersusPositive { zero_value, positive_value, .. },
            } => {
                assert_eq!(zero_value, 0.0);
                assert!((positive_value - 0.5).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn individual_degeneracy_point_is_consistent_below_unit_ratio() {
        let e3 = inst(EX3);
        assert!(matches!(
            per_player_consistency(&e3, &[0.5, 0.5], 1e-8),
            Err(Error::NonUniquePlayerMultipliers { player: 1 })
        ));
        match normalized_consistency(&e3, &[0.5, 0.5], 1e-8).unwrap() {
            Consistency::Consistent {
                witness,
                ratio_interval: Some(iv),
                route,
            } => {
                assert_eq!(route, ConsistencyRoute::JointProgram);
                assert!(iv.lo.abs() < 1e-6 && (iv.hi.unwrap() - 1.0).abs() < 1e-6, "{iv:?}");
                assert!(witness.ratio().unwrap() < 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_player_is_consistent() {
        let one = inst(r#"{"name": "one", "players": [
            {"dim": 1, "objective": "(x1 - 2)^2", "individual": ["1 - x1"]}]}"#);
        let c = normalized_consistency(&one, &[1.0], 1e-8).unwrap();
        assert!(c.is_consistent());
    }
}
