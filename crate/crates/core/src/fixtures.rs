//! Built-in example instances with expected-result manifests.
//!
//! Instance files and manifests live in the repository's `fixtures/`
//! directory and are embedded at compile time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Convexity, GnepInstance, InstanceSpec, PlayerSpec};

pub const FIXTURE_NAMES: [&str; 8] = [
    "ex1_fj",
    "ex2_strictcomp",
    "ex3_individual_degen",
    "ex4_family",
    "ex4_perturbed",
    "ex5_compar",
    "trivial_1p",
    "trivial_unconstrained",
];

/// Default perturbation size of `ex4_perturbed`.
pub const DEFAULT_EPSILON: f64 = 0.1;

macro_rules! embedded {
    ($name:literal) => {
        (
            include_str!(concat!("../../../fixtures/", $name, ".json")),
            include_str!(concat!("../../../fixtures/", $name, ".manifest.json")),
        )
    };
}

fn embedded(name: &str) -> Option<(&'static str, &'static str)> {
    Some(match name {
        "ex1_fj" => embedded!("ex1_fj"),
        "ex2_strictcomp" => embedded!("ex2_strictcomp"),
        "ex3_individual_degen" => embedded!("ex3_individual_degen"),
        "ex4_family" => embedded!("ex4_family"),
        "ex4_perturbed" => embedded!("ex4_perturbed"),
        "ex5_compar" => embedded!("ex5_compar"),
        "trivial_1p" => embedded!("trivial_1p"),
        "trivial_unconstrained" => embedded!("trivial_unconstrained"),
        _ => return None,
    })
}

/// Exact values written by `scripts/derive_values.py`.
pub const DERIVED_VALUES: &str = include_str!("../../../fixtures/derived_values.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvenanceKind {
    /// Stated in the published example.
    Published,
    /// Computed by a named independent oracle.
    Derived,
    /// Follows by inspection.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub kind: ProvenanceKind,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibria: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub flags: BTreeMap<String, bool>,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    /// Value name to key in the derived-values table.
    #[serde(default)]
    pub derived_from: BTreeMap<String, String>,
    pub tolerance: f64,
    pub provenance: Provenance,
}

impl ManifestEntry {
    pub fn value(&self, key: &str) -> f64 {
        *self
            .values
            .get(key)
            .unwrap_or_else(|| panic!("manifest entry {} has no value {key}", self.id))
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.flags.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedManifest {
    pub instance: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub entries: Vec<ManifestEntry>,
}

impl ExpectedManifest {
    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    fn check(&self) -> Result<()> {
        for e in &self.entries {
            if e.provenance.kind == ProvenanceKind::Derived && e.provenance.oracle.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "derived manifest entry {} does not name its oracle",
                    e.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedValue {
    pub exact: String,
    pub value: f64,
}

pub fn derived_values() -> BTreeMap<String, DerivedValue> {
    serde_json::from_str(DERIVED_VALUES).expect("embedded derived values parse")
}

/// Loads an embedded fixture and its manifest.
pub fn load_fixture(name: &str) -> Result<(GnepInstance, ExpectedManifest)> {
    let (inst, man) = embedded(name).ok_or_else(|| Error::UnknownFixture(name.to_string()))?;
    let inst = GnepInstance::load(inst.as_bytes())?;
    let man: ExpectedManifest = serde_json::from_str(man)
        .map_err(|e| Error::InvalidConfig(format!("manifest of {name}: {e}")))?;
    man.check()?;
    Ok((inst, man))
}

/// Raw instance JSON of an embedded fixture.
pub fn fixture_source(name: &str) -> Option<&'static str> {
    embedded(name).map(|(i, _)| i)
}

/// The linear instance with objectives `-x1 + (eps/2) x1^2`, `-x2 + eps x2^2`.
pub fn ex4_perturbed(eps: f64) -> Result<GnepInstance> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {eps}")));
    }
    let spec = InstanceSpec {
        name: "ex4_perturbed".into(),
        players: vec![
            PlayerSpec {
                dim: 1,
                objective: format!("-x1 + ({eps:?}/2)*x1*x1"),
                individual: Vec::new(),
            },
            PlayerSpec {
                dim: 1,
                objective: format!("-x2 + {eps:?}*x2*x2"),
                individual: Vec::new(),
            },
        ],
        shared: vec!["1 - x1 - x2".into(), "x1 - x2".into(), "x2".into()],
        convex: Some(Convexity { c1: true, c2: true }),
        slater_point: Some(vec![0.4, 0.2]),
    };
    Ok(GnepInstance::from_spec(&spec)?)
}

/// Manifest for `ex4_perturbed(eps)` at `r = (1, 1)`.
pub fn ex4_perturbed_manifest(eps: f64) -> ExpectedManifest {
    let mut values = BTreeMap::new();
    values.insert("G1".to_string(), 1.0 - 2.0 * eps / 3.0);
    values.insert("nd3_canonical".to_string(), 3.0 * eps);
    let mut flags = BTreeMap::new();
    flags.insert("nondegenerate".to_string(), true);
    ExpectedManifest {
        instance: "ex4_perturbed".into(),
        parameters: BTreeMap::from([("epsilon".to_string(), eps)]),
        entries: vec![ManifestEntry {
            id: "unique_equilibrium".into(),
            description: "unique normalized equilibrium for r1/r2 = 1".into(),
            r: Some(vec![1.0, 1.0]),
            point: None,
            equilibria: Some(vec![vec![2.0 / 3.0, 1.0 / 3.0]]),
            values,
            flags,
            labels: BTreeMap::new(),
            derived_from: BTreeMap::new(),
            tolerance: 1e-8,
            provenance: Provenance {
                kind: ProvenanceKind::Published,
                source: "published example: perturbation".into(),
                oracle: None,
            },
        }],
    }
}
