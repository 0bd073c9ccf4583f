//! Generalized Nash games with individual and shared inequality constraints.
//!
//! Player `p` minimizes `f^p(x^p, x^-p)` over `x^p` subject to its own
//! constraints `g^p_j(x^p) >= 0` and the shared constraints `G_j(x) >= 0`.
//! Every constraint string in an instance file is the left-hand side of a
//! `>= 0` inequality.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DiffExpr, EvalError, Expr, ExprError, VariableTable};

/// Default activity tolerance.
pub const DEFAULT_ACTIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("in {location}: {source}")]
    Expression {
        location: String,
        #[source]
        source: ExprError,
    },
    #[error(
        "individual constraint g{player}_{constraint} of player {player} references `{variable}`, \
         which belongs to another player"
    )]
    IndividualConstraintCrossReference {
        player: usize,
        constraint: usize,
        variable: String,
    },
    #[error("point has dimension {got}, instance has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is infeasible: {constraint} = {value:e}")]
    InfeasiblePoint { constraint: String, value: f64 },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Declared convexity assumptions: `c1` for objectives convex in the own
/// variables, `c2` for concave constraint functions. Never verified globally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Convexity {
    pub c1: bool,
    pub c2: bool,
}

/// On-disk form of a player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    pub dim: usize,
    pub objective: String,
    #[serde(default)]
    pub individual: Vec<String>,
}

/// On-disk form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub name: String,
    pub players: Vec<PlayerSpec>,
    #[serde(default)]
    pub shared: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convex: Option<Convexity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slater_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Player {
    pub objective: DiffExpr,
    pub individual: Vec<DiffExpr>,
}

/// A fully parsed game. Immutable after construction.
#[derive(Debug, Clone)]
pub struct GnepInstance {
    name: String,
    vars: VariableTable,
    players: Vec<Player>,
    shared: Vec<DiffExpr>,
    convexity: Option<Convexity>,
    slater_point: Option<Vec<f64>>,
}

/// Identifies one constraint of an instance. Indices are 0-based; `Display`
/// prints the 1-based names `g<p>_<j>` and `G<j>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintId {
    Individual { player: usize, index: usize },
    Shared(usize),
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::Individual { player, index } => write!(f, "g{}_{}", player + 1, index + 1),
            ConstraintId::Shared(j) => write!(f, "G{}", j + 1),
        }
    }
}

/// Active individual constraints per player and active shared constraints,
/// as sorted 0-based index lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct ActiveSetProfile {
    pub individual: Vec<Vec<usize>>,
    pub shared: Vec<usize>,
}

impl ActiveSetProfile {
    pub fn empty(players: usize) -> Self {
        Self {
            individual: vec![Vec::new(); players],
            shared: Vec::new(),
        }
    }

    /// Number of active constraints.
    pub fn len(&self) -> usize {
        self.individual.iter().map(Vec::len).sum::<usize>() + self.shared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Active constraints in canonical order: individual by player, then shared.
    pub fn constraints(&self) -> Vec<ConstraintId> {
        let mut out = Vec::with_capacity(self.len());
        for (player, idx) in self.individual.iter().enumerate() {
            out.extend(idx.iter().map(|&index| ConstraintId::Individual { player, index }));
        }
        out.extend(self.shared.iter().map(|&j| ConstraintId::Shared(j)));
        out
    }

    pub fn contains(&self, c: ConstraintId) -> bool {
        match c {
            ConstraintId::Individual { player, index } => self.individual[player].contains(&index),
            ConstraintId::Shared(j) => self.shared.contains(&j),
        }
    }

    /// Compact label such as `{g1_1, G2}`.
    pub fn label(&self) -> String {
        let names: Vec<String> = self.constraints().iter().map(ToString::to_string).collect();
        format!("{{{}}}", names.join(", "))
    }
}

impl GnepInstance {
    /// Parses an instance from JSON bytes.
    pub fn load(json: &[u8]) -> Result<Self, InstanceError> {
        let spec: InstanceSpec =
            serde_json::from_slice(json).map_err(|e| InstanceError::Schema(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &InstanceSpec) -> Result<Self, InstanceError> {
        if spec.players.is_empty() {
            return Err(InstanceError::Schema("at least one player is required".into()));
        }
        let dims: Vec<usize> = spec.players.iter().map(|p| p.dim).collect();
        let vars = VariableTable::new(&dims)
            .ok_or_else(|| InstanceError::Schema("every player needs dim >= 1".into()))?;
        let n = vars.len();

        let parse = |text: &str, location: String| {
            Expr::parse(text, &vars).map_err(|source| InstanceError::Expression { location, source })
        };

        let mut players = Vec::with_capacity(spec.players.len());
        for (p, ps) in spec.players.iter().enumerate() {
            let objective = parse(&ps.objective, format!("objective of player {}", p + 1))?;
            let block = vars.block(p);
            let mut individual = Vec::with_capacity(ps.individual.len());
            for (j, text) in ps.individual.iter().enumerate() {
                let e = parse(text, format!("constraint g{}_{}", p + 1, j + 1))?;
                if let Some(&v) = e.variables().iter().find(|v| !block.contains(v)) {
                    return Err(InstanceError::IndividualConstraintCrossReference {
                        player: p + 1,
                        constraint: j + 1,
                        variable: vars.name(v).to_string(),
                    });
                }
                individual.push(DiffExpr::new(e, n));
            }
            players.push(Player {
                objective: DiffExpr::new(objective, n),
                individual,
            });
        }
        let shared = spec
            .shared
            .iter()
            .enumerate()
            .map(|(j, text)| parse(text, format!("constraint G{}", j + 1)).map(|e| DiffExpr::new(e, n)))
            .collect::<Result<Vec<_>, _>>()?;

        if let Some(s) = &spec.slater_point {
            if s.len() != n {
                return Err(InstanceError::Schema(format!(
                    "slater_point has {} entries, expected {n}",
                    s.len()
                )));
            }
        }

        Ok(Self {
            name: spec.name.clone(),
            vars,
            players,
            shared,
            convexity: spec.convex,
            slater_point: spec.slater_point.clone(),
        })
    }

    /// Serializable form; expressions are printed back to source text.
    pub fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            name: self.name.clone(),
            players: self
                .players
                .iter()
                .enumerate()
                .map(|(p, pl)| PlayerSpec {
                    dim: self.vars.dim(p),
                    objective: pl.objective.expr().to_source(&self.vars),
                    individual: pl
                        .individual
                        .iter()
                        .map(|g| g.expr().to_source(&self.vars))
                        .collect(),
                })
                .collect(),
            shared: self
                .shared
                .iter()
                .map(|g| g.expr().to_source(&self.vars))
                .collect(),
            convex: self.convexity,
            slater_point: self.slater_point.clone(),
        }
    }

    pub fn save(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("instance spec serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    /// Total dimension `n`.
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, p: usize) -> &Player {
        &self.players[p]
    }

    pub fn shared(&self) -> &[DiffExpr] {
        &self.shared
    }

    pub fn convexity(&self) -> Option<Convexity> {
        self.convexity
    }

    /// True when both convexity flags are declared.
    pub fn is_convex_flagged(&self) -> bool {
        matches!(self.convexity, Some(Convexity { c1: true, c2: true }))
    }

    pub fn slater_point(&self) -> Option<&[f64]> {
        self.slater_point.as_deref()
    }

    pub fn constraint(&self, id: ConstraintId) -> &DiffExpr {
        match id {
            ConstraintId::Individual { player, index } => &self.players[player].individual[index],
            ConstraintId::Shared(j) => &self.shared[j],
        }
    }

    /// All constraints in canonical order.
    pub fn all_constraints(&self) -> Vec<ConstraintId> {
        let mut out = Vec::new();
        for (player, pl) in self.players.iter().enumerate() {
            out.extend((0..pl.individual.len()).map(|index| ConstraintId::Individual { player, index }));
        }
        out.extend((0..self.shared.len()).map(ConstraintId::Shared));
        out
    }

    pub fn num_constraints(&self) -> usize {
        self.players.iter().map(|p| p.individual.len()).sum::<usize>() + self.shared.len()
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<(), InstanceError> {
        if x.len() != self.dim() {
            return Err(InstanceError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Values of all constraints in canonical order.
    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<(ConstraintId, f64)>, InstanceError> {
        self.check_dim(x)?;
        self.all_constraints()
            .into_iter()
            .map(|c| Ok((c, self.constraint(c).value(x)?)))
            .collect()
    }

    /// True iff every constraint value is at least `-tol`.
    pub fn feasible(&self, x: &[f64], tol: f64) -> Result<bool, InstanceError> {
        Ok(self.constraint_values(x)?.iter().all(|(_, v)| *v >= -tol))
    }

    /// Constraints with `|value| <= tol`. Fails on points violating some
    /// constraint by more than `tol`.
    pub fn active_sets(&self, x: &[f64], tol: f64) -> Result<ActiveSetProfile, InstanceError> {
        let mut active = ActiveSetProfile::empty(self.num_players());
        for (c, v) in self.constraint_values(x)? {
            if v < -tol {
                return Err(InstanceError::InfeasiblePoint {
                    constraint: c.to_string(),
                    value: v,
                });
            }
            if v.abs() <= tol {
                match c {
                    ConstraintId::Individual { player, index } => active.individual[player].push(index),
                    ConstraintId::Shared(j) => active.shared.push(j),
                }
            }
        }
        Ok(active)
    }

    /// Copy of the instance with every numeric literal passed through `f`.
    /// Literals are visited in a fixed order: objectives and individual
    /// constraints player by player, then shared constraints.
    pub fn map_constants(&self, mut f: impl FnMut(f64) -> f64) -> GnepInstance {
        let n = self.dim();
        let remap = |d: &DiffExpr, f: &mut dyn FnMut(f64) -> f64| {
            DiffExpr::new(d.expr().map_constants(&mut |c| f(c)), n)
        };
        let players = self
            .players
            .iter()
            .map(|p| Player {
                objective: remap(&p.objective, &mut f),
                individual: p.individual.iter().map(|g| remap(g, &mut f)).collect(),
            })
            .collect();
        let shared = self.shared.iter().map(|g| remap(g, &mut f)).collect();
        GnepInstance {
            name: self.name.clone(),
            vars: self.vars.clone(),
            players,
            shared,
            convexity: self.convexity,
            slater_point: self.slater_point.clone(),
        }
    }

    /// Copy with player objectives replaced by parsed `sources`.
    pub fn with_objectives(&self, sources: &[&str]) -> Result<GnepInstance, InstanceError> {
        let mut spec = self.to_spec();
        for (p, src) in sources.iter().enumerate() {
            spec.players[p].objective = (*src).to_string();
        }
        GnepInstance::from_spec(&spec)
    }
}
