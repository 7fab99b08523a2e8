//! The protocol specification file format.

use cbc_forcing::decided::StateProperty;
use cbc_forcing::fincat::{category_from_dag, FinCatError, FinCategory, Obj};
use cbc_forcing::heyting::HeytingAlgebra;
use cbc_forcing::protocol::Protocol;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("executions contain a cycle through {}", .0.join(" -> "))]
    CyclicQuiver(Vec<String>),
    #[error("invalid specification: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Executions are edges; `Σ` is their reachability order.
    #[default]
    Dag,
    /// Executions are the non-identity arrows; composites come from `compose`.
    Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Execution {
    pub name: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub consensus: Vec<String>,
    pub states: Vec<String>,
    #[serde(default)]
    pub executions: Vec<Execution>,
    #[serde(default)]
    pub mode: Mode,
    /// `[g, f, h]` declares `g ∘ f = h`; identities compose implicitly.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compose: Vec<[String; 3]>,
    pub estimates: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub strict_functorial: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub properties: BTreeMap<String, BTreeMap<String, bool>>,
}

/// Parses and resolves a specification; the result always builds.
pub fn parse_spec(text: &str) -> Result<ProtocolSpec, SpecError> {
    let spec: ProtocolSpec = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let location = format!(" at line {} column {}", e.line(), e.column());
        SpecError::Parse {
            line: e.line(),
            column: e.column(),
            message: full.strip_suffix(&location).unwrap_or(&full).to_string(),
        }
    })?;
    spec.build()?;
    for name in spec.properties.keys() {
        spec.property_values(name)?;
    }
    Ok(spec)
}

pub fn to_json(spec: &ProtocolSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("specs serialize");
    s.push('\n');
    s
}

fn category_error(e: FinCatError) -> SpecError {
    match e {
        FinCatError::CyclicQuiver(c) => SpecError::CyclicQuiver(c),
        FinCatError::UnknownObject(s) | FinCatError::UnknownArrow(s) => {
            SpecError::UnresolvedReference(s)
        }
        other => SpecError::Invalid(other.to_string()),
    }
}

impl ProtocolSpec {
    fn state_index(&self) -> Result<HashMap<&str, usize>, SpecError> {
        let mut index = HashMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if index.insert(s.as_str(), i).is_some() {
                return Err(SpecError::Invalid(format!("state {s} listed twice")));
            }
        }
        Ok(index)
    }

    fn sigma(&self) -> Result<FinCategory, SpecError> {
        let index = self.state_index()?;
        let resolve = |e: &Execution, end: &str| {
            index.get(end).copied().ok_or_else(|| {
                SpecError::UnresolvedReference(format!("execution {} names state {end}", e.name))
            })
        };
        let mut ends = Vec::new();
        for e in &self.executions {
            ends.push((resolve(e, &e.from)?, resolve(e, &e.to)?));
        }
        match self.mode {
            Mode::Dag => {
                if !self.compose.is_empty() {
                    return Err(SpecError::Invalid("compose requires category mode".into()));
                }
                let states: Vec<&str> = self.states.iter().map(String::as_str).collect();
                let edges: Vec<(&str, &str, &str)> = self
                    .executions
                    .iter()
                    .map(|e| (e.name.as_str(), e.from.as_str(), e.to.as_str()))
                    .collect();
                category_from_dag(&states, &edges).map_err(category_error)
            }
            Mode::Category => {
                let n = self.states.len();
                let mut arrows: Vec<(String, usize, usize)> = self
                    .states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (format!("id_{s}"), i, i))
                    .collect();
                for (e, &(a, b)) in self.executions.iter().zip(&ends) {
                    arrows.push((e.name.clone(), a, b));
                }
                let mut arrow_index = HashMap::new();
                for (i, (name, _, _)) in arrows.iter().enumerate() {
                    if arrow_index.insert(name.clone(), i).is_some() {
                        return Err(SpecError::Invalid(format!("arrow {name} declared twice")));
                    }
                }
                let mut table = Vec::new();
                for (f, &(_, a, b)) in arrows.iter().enumerate() {
                    table.push((f, a, f));
                    if f >= n {
                        table.push((b, f, f));
                    }
                }
                for [g, f, h] in &self.compose {
                    let find = |name: &String| {
                        arrow_index.get(name).copied().ok_or_else(|| {
                            SpecError::UnresolvedReference(format!("compose names arrow {name}"))
                        })
                    };
                    let (g, f, h) = (find(g)?, find(f)?, find(h)?);
                    if f < n || g < n {
                        return Err(SpecError::Invalid("identities compose implicitly".into()));
                    }
                    table.push((g, f, h));
                }
                FinCategory::from_parts(self.states.clone(), arrows, (0..n).collect(), table)
                    .map_err(category_error)
            }
        }
    }

    pub fn build(&self) -> Result<Protocol, SpecError> {
        let sigma = Arc::new(self.sigma()?);
        let algebra = HeytingAlgebra::powerset(&self.consensus)
            .map_err(|e| SpecError::Invalid(e.to_string()))?;
        let index = self.state_index()?;
        for s in self.estimates.keys() {
            if !index.contains_key(s.as_str()) {
                return Err(SpecError::UnresolvedReference(format!(
                    "estimate for state {s}"
                )));
            }
        }
        let mut estimate = Vec::with_capacity(self.states.len());
        for s in &self.states {
            let values = self.estimates.get(s).ok_or_else(|| {
                SpecError::UnresolvedReference(format!("no estimate for state {s}"))
            })?;
            for v in values {
                if !self.consensus.contains(v) {
                    return Err(SpecError::UnresolvedReference(format!(
                        "estimate of {s} names consensus value {v}"
                    )));
                }
            }
            estimate.push(
                algebra
                    .subset(values)
                    .map_err(|e| SpecError::Invalid(e.to_string()))?,
            );
        }
        Protocol::new(&self.consensus, sigma, estimate, self.strict_functorial)
            .map_err(|e| SpecError::Invalid(e.to_string()))
    }

    fn property_values(&self, name: &str) -> Result<Vec<bool>, SpecError> {
        let map = self
            .properties
            .get(name)
            .ok_or_else(|| SpecError::UnresolvedReference(format!("property {name}")))?;
        if let Some(s) = map.keys().find(|s| !self.states.contains(s)) {
            return Err(SpecError::UnresolvedReference(format!(
                "property {name} names state {s}"
            )));
        }
        self.states
            .iter()
            .map(|s| {
                map.get(s).copied().ok_or_else(|| {
                    SpecError::UnresolvedReference(format!("property {name} has no value at {s}"))
                })
            })
            .collect()
    }

    /// A named state property over the states of `protocol`.
    pub fn property(&self, name: &str, protocol: &Protocol) -> Result<StateProperty, SpecError> {
        StateProperty::new(protocol.sigma().clone(), self.property_values(name)?)
            .map_err(|e| SpecError::Invalid(e.to_string()))
    }

    /// A specification that builds to `p`. Acyclic thin state categories are
    /// written in dag mode with every non-identity arrow as an edge.
    pub fn from_protocol(p: &Protocol) -> ProtocolSpec {
        let s = &**p.sigma();
        let is_identity = |f| s.identity(s.dom(f)) == f;
        let acyclic = s.objects().all(|a| {
            s.objects()
                .all(|b| a == b || !(s.has_arrow(a, b) && s.has_arrow(b, a)))
        });
        let executions = s
            .arrows()
            .filter(|&f| !is_identity(f))
            .map(|f| Execution {
                name: s.arrow_name(f).to_string(),
                from: s.object_name(s.dom(f)).to_string(),
                to: s.object_name(s.cod(f)).to_string(),
            })
            .collect();
        let (mode, compose) = if s.is_thin() && acyclic {
            (Mode::Dag, Vec::new())
        } else {
            let mut compose = Vec::new();
            for g in s.arrows().filter(|&g| !is_identity(g)) {
                for f in s.arrows().filter(|&f| !is_identity(f)) {
                    if let Some(h) = s.compose(g, f) {
                        compose.push([g, f, h].map(|a| s.arrow_name(a).to_string()));
                    }
                }
            }
            (Mode::Category, compose)
        };
        let h = p.algebra();
        let estimates = p
            .states()
            .map(|w| {
                let e = p.estimate(w);
                let members = p
                    .consensus()
                    .iter()
                    .filter(|c| {
                        h.subset(&[c.as_str()])
                            .map(|single| h.leq(single, e))
                            .unwrap_or(false)
                    })
                    .cloned()
                    .collect();
                (p.state_name(w).to_string(), members)
            })
            .collect();
        ProtocolSpec {
            consensus: p.consensus().to_vec(),
            states: s.object_names().to_vec(),
            executions,
            mode,
            compose,
            estimates,
            strict_functorial: p.strict_functorial(),
            properties: BTreeMap::new(),
        }
    }
}

/// The state named `name`, as a spec-level error.
pub fn state(p: &Protocol, name: &str) -> Result<Obj, SpecError> {
    p.state(name)
        .map_err(|_| SpecError::UnresolvedReference(format!("state {name}")))
}
