//! JSON model files.
//!
//! ```json
//! {
//!   "name": "example1",
//!   "species": ["A"],
//!   "parameters": ["birth", "dimerization"],
//!   "theta": [2.0, 1.0],
//!   "x0": [10],
//!   "reactions": [
//!     { "source": { "A": 1 }, "product": { "A": 2 }, "rate": { "param": 0 } },
//!     { "source": {}, "product": { "A": 1 },
//!       "rate": { "periodic": { "base": 60, "amplitude": { "param": 1 }, "period": 24, "phase": 0 } } }
//!   ]
//! }
//! ```
//!
//! Species and reactions keep file order. Parameter indices are zero based.
//! `parameters` (names) and `x0` are optional.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CrnError, Result};
use crate::network::{Coef, Complex, ParamPoint, RateLaw, Reaction, ReactionNetwork};

/// Models shipped with the crate, by name.
pub const BUNDLED_MODELS: [(&str, &str); 6] = [
    ("example1", include_str!("../models/example1.json")),
    ("viral", include_str!("../models/viral.json")),
    ("circadian", include_str!("../models/circadian.json")),
    ("explosive", include_str!("../models/explosive.json")),
    ("birth_death", include_str!("../models/birth_death.json")),
    ("pure_birth", include_str!("../models/pure_birth.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    #[serde(default)]
    name: Option<String>,
    species: Vec<String>,
    #[serde(default)]
    parameters: Option<Vec<String>>,
    theta: Vec<f64>,
    #[serde(default)]
    x0: Option<Vec<i64>>,
    reactions: Vec<ReactionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionSpec {
    source: BTreeMap<String, i64>,
    product: BTreeMap<String, i64>,
    rate: RateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RateSpec {
    Param(usize),
    Periodic(PeriodicSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodicSpec {
    base: CoefSpec,
    amplitude: CoefSpec,
    period: f64,
    #[serde(default)]
    phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum CoefSpec {
    Value(f64),
    Param(ParamRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamRef {
    param: usize,
}

impl CoefSpec {
    fn to_coef(&self) -> Coef<f64> {
        match self {
            CoefSpec::Value(v) => Coef::Const(*v),
            CoefSpec::Param(p) => Coef::Param(p.param),
        }
    }
}

/// A parsed model: network, nominal parameters and initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub network: ReactionNetwork<f64>,
    pub theta: ParamPoint<f64>,
    pub parameter_names: Vec<String>,
    pub x0: Vec<u64>,
}

fn complex(species: &[String], counts: &BTreeMap<String, i64>, at: &str) -> Result<Complex> {
    let mut v = vec![0u64; species.len()];
    for (name, &n) in counts {
        let i = species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| CrnError::Model(format!("{at}: unknown species '{name}'")))?;
        if n < 0 {
            return Err(CrnError::Model(format!("{at}: negative stoichiometry {n} for '{name}'")));
        }
        v[i] = n as u64;
    }
    Ok(Complex::new(v))
}

/// Parses a model from JSON text; `origin` names the source in diagnostics.
pub fn parse_model_str(text: &str, origin: &str) -> Result<Model> {
    let spec: ModelSpec = serde_json::from_str(text).map_err(|e| {
        CrnError::Model(format!("{origin}: line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let at = |what: String| format!("{origin}: {what}");
    if spec.species.is_empty() {
        return Err(CrnError::Model(at("species: at least one species is required".into())));
    }
    for (i, s) in spec.species.iter().enumerate() {
        if spec.species[..i].contains(s) {
            return Err(CrnError::Model(at(format!("species: duplicate name '{s}'"))));
        }
    }
    for (j, v) in spec.theta.iter().enumerate() {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(CrnError::Model(at(format!("theta[{j}]: rate constants must be positive, got {v}"))));
        }
    }
    let names = match spec.parameters {
        Some(n) if n.len() != spec.theta.len() => {
            return Err(CrnError::Model(at(format!(
                "parameters: {} names for {} values of theta",
                n.len(),
                spec.theta.len()
            ))))
        }
        Some(n) => n,
        None => (0..spec.theta.len()).map(|j| format!("theta{j}")).collect(),
    };
    let mut reactions = Vec::with_capacity(spec.reactions.len());
    for (k, r) in spec.reactions.iter().enumerate() {
        let here = at(format!("reactions[{k}]"));
        let source = complex(&spec.species, &r.source, &format!("{here}.source"))?;
        let product = complex(&spec.species, &r.product, &format!("{here}.product"))?;
        let rate = match &r.rate {
            RateSpec::Param(j) => RateLaw::MassAction { param: *j },
            RateSpec::Periodic(p) => RateLaw::Periodic {
                base: p.base.to_coef(),
                amplitude: p.amplitude.to_coef(),
                period: p.period,
                phase: p.phase,
            },
        };
        let reaction = Reaction::new(source, product, rate).map_err(|e| CrnError::Model(format!("{here}: {e}")))?;
        reactions.push(reaction);
    }
    let network = ReactionNetwork::new(spec.species, reactions, spec.theta.len())
        .map_err(|e| CrnError::Model(at(e.to_string())))?;
    network
        .check_params(&spec.theta)
        .map_err(|e| CrnError::Model(at(format!("theta: {e}"))))?;
    let x0 = match spec.x0 {
        None => vec![0; network.dim()],
        Some(x) => {
            if x.len() != network.dim() {
                return Err(CrnError::Model(at(format!("x0: {} entries for {} species", x.len(), network.dim()))));
            }
            if let Some(v) = x.iter().find(|v| **v < 0) {
                return Err(CrnError::Model(at(format!("x0: negative count {v}"))));
            }
            x.into_iter().map(|v| v as u64).collect()
        }
    };
    Ok(Model {
        name: spec.name.unwrap_or_else(|| origin.to_string()),
        theta: ParamPoint::new(spec.theta).map_err(|e| CrnError::Model(at(e.to_string())))?,
        network,
        parameter_names: names,
        x0,
    })
}

/// Reads a model file.
pub fn parse_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CrnError::Model(format!("{}: {e}", path.display())))?;
    parse_model_str(&text, &path.display().to_string())
}

/// The bundled model called `name`, with or without a `.json` suffix.
pub fn bundled_model(name: &str) -> Option<Model> {
    let key = name.strip_suffix(".json").unwrap_or(name);
    BUNDLED_MODELS
        .iter()
        .find(|(n, _)| *n == key)
        .map(|(n, text)| parse_model_str(text, n).expect("bundled models are valid"))
}

/// Reads `spec` as a file path if it exists, else as a bundled model name.
pub fn load_model(spec: &str) -> Result<Model> {
    let path = Path::new(spec);
    if path.exists() {
        return parse_model(path);
    }
    bundled_model(spec).ok_or_else(|| {
        let names: Vec<&str> = BUNDLED_MODELS.iter().map(|(n, _)| *n).collect();
        CrnError::Model(format!(
            "{spec}: no such file or bundled model (bundled: {})",
            names.join(", ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_models_parse() {
        for (name, _) in BUNDLED_MODELS {
            let m = bundled_model(name).unwrap();
            assert_eq!(m.name, name);
            assert_eq!(m.x0.len(), m.network.dim());
        }
        assert!(bundled_model("example1.json").is_some());
        assert!(bundled_model("nope").is_none());
    }

    #[test]
    fn example1_round_trip() {
        let m = bundled_model("example1").unwrap();
        let net = &m.network;
        assert_eq!(net.species(), ["A".to_string()]);
        assert_eq!(net.n_reactions(), 2);
        assert_eq!(net.intensity(0, &[5], 0.0, &m.theta).unwrap(), 10.0);
        assert_eq!(net.intensity(1, &[3], 0.0, &[2.0, 2.0]).unwrap(), 12.0);
        assert_eq!(net.reaction(0).unwrap().reaction_vector(), [1]);
        assert_eq!(net.reaction(1).unwrap().reaction_vector(), [-1]);
    }

    #[test]
    fn viral_shape() {
        let m = bundled_model("viral").unwrap();
        assert_eq!(m.network.dim(), 4);
        assert_eq!(m.network.n_reactions(), 6);
        assert_eq!(m.network.species(), ["T", "G", "S", "V"].map(String::from));
    }

    #[test]
    fn circadian_rate() {
        let m = bundled_model("circadian").unwrap();
        let net = &m.network;
        assert!(net.is_time_dependent());
        for t in [0.0, 3.0, 6.0, 17.5] {
            let expected = 60.0 + 15.0 * (2.0 * std::f64::consts::PI * t / 24.0).sin();
            assert!((net.intensity(0, &[0, 0], t, &m.theta).unwrap() - expected).abs() < 1e-12);
        }
        assert_eq!(net.intensity(1, &[3, 0], 0.0, &m.theta).unwrap(), 300.0);
    }

    #[test]
    fn diagnostics() {
        let bad_json = "{\n  \"species\": [\"A\"],\n  \"theta\": [1.0],\n  \"reactions\": [ oops ]\n}";
        let e = parse_model_str(bad_json, "m.json").unwrap_err().to_string();
        assert!(e.contains("line 4"), "{e}");

        let unknown_field = r#"{"species":["A"],"theta":[1],"reactions":[],"colour":1}"#;
        assert!(parse_model_str(unknown_field, "m").unwrap_err().to_string().contains("colour"));

        let negative = r#"{"species":["A"],"theta":[1],"reactions":[{"source":{"A":-1},"product":{},"rate":{"param":0}}]}"#;
        let e = parse_model_str(negative, "m").unwrap_err().to_string();
        assert!(e.contains("reactions[0].source") && e.contains("negative"), "{e}");

        let species = r#"{"species":["A"],"theta":[1],"reactions":[{"source":{"B":1},"product":{},"rate":{"param":0}}]}"#;
        assert!(parse_model_str(species, "m").unwrap_err().to_string().contains("unknown species 'B'"));

        let kappa = r#"{"species":["A"],"theta":[0],"reactions":[{"source":{"A":1},"product":{},"rate":{"param":0}}]}"#;
        assert!(parse_model_str(kappa, "m").unwrap_err().to_string().contains("theta[0]"));

        let index = r#"{"species":["A"],"theta":[1],"reactions":[{"source":{"A":1},"product":{},"rate":{"param":3}}]}"#;
        assert!(parse_model_str(index, "m").is_err());

        let amplitude = r#"{"species":["A"],"theta":[1],"reactions":[{"source":{},"product":{"A":1},
            "rate":{"periodic":{"base":{"param":0},"amplitude":2,"period":1}}}]}"#;
        assert!(parse_model_str(amplitude, "m").is_err());
    }

    #[test]
    fn missing_model_lists_bundled_names() {
        let e = load_model("/definitely/not/here.json").unwrap_err().to_string();
        assert!(e.contains("circadian"));
    }
}
