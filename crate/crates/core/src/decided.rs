//! Decided state properties: valid in every state reachable from a given one.

use crate::copresheaf::{classify, Copresheaf, NatTrans, Subobject};
use crate::copresheaf::{forcing_at_identity, CopresheafError};
use crate::fincat::{FinCategory, FinFunctor, Obj};
use crate::geometric::{box_op, induce, rel_forces, GeometricError, InducedGeometricMorphism};
use crate::report::{Check, Report};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecidedError {
    #[error(transparent)]
    Copresheaf(#[from] CopresheafError),
    #[error(transparent)]
    Geometric(#[from] GeometricError),
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("property has {got} values for {states} states")]
    ShapeMismatch { got: usize, states: usize },
    #[error("property is not monotone along {arrow}")]
    NotMonotone { arrow: String },
}

pub type Result<T> = std::result::Result<T, DecidedError>;

/// A two-valued property of states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateProperty {
    sigma: Arc<FinCategory>,
    value: Vec<bool>,
}

impl StateProperty {
    pub fn new(sigma: Arc<FinCategory>, value: Vec<bool>) -> Result<Self> {
        if value.len() != sigma.num_objects() {
            return Err(DecidedError::ShapeMismatch {
                got: value.len(),
                states: sigma.num_objects(),
            });
        }
        Ok(StateProperty { sigma, value })
    }

    /// True exactly at the named states.
    pub fn holding_at<S: AsRef<str>>(sigma: Arc<FinCategory>, states: &[S]) -> Result<Self> {
        let mut value = vec![false; sigma.num_objects()];
        for s in states {
            let w = sigma
                .find_object(s.as_ref())
                .ok_or_else(|| DecidedError::UnknownState(s.as_ref().to_string()))?;
            value[w.0] = true;
        }
        Self::new(sigma, value)
    }

    /// The property whose bit `i` is the value at state `i`.
    pub fn from_mask(sigma: Arc<FinCategory>, mask: u64) -> Self {
        let value = (0..sigma.num_objects())
            .map(|i| mask >> i & 1 == 1)
            .collect();
        StateProperty { sigma, value }
    }

    pub fn sigma(&self) -> &Arc<FinCategory> {
        &self.sigma
    }

    pub fn value(&self, w: Obj) -> bool {
        self.value[w.0]
    }

    fn monotonicity_witness(&self) -> Option<String> {
        let s = &*self.sigma;
        s.arrows()
            .find(|&f| self.value(s.dom(f)) && !self.value(s.cod(f)))
            .map(|f| s.arrow_name(f).to_string())
    }

    /// Whether the property extends to a functor `Σ → 2`.
    pub fn is_monotone(&self) -> bool {
        self.monotonicity_witness().is_none()
    }

    fn check_state(&self, w: Obj) -> Result<()> {
        if w.0 < self.value.len() {
            Ok(())
        } else {
            Err(DecidedError::UnknownState(format!("#{}", w.0)))
        }
    }
}

/// `∀ w → v: q(v)`, identities included.
pub fn is_decided(q: &StateProperty, w: Obj) -> Result<bool> {
    q.check_state(w)?;
    let s = &*q.sigma;
    Ok(s.out_arrows(w).iter().all(|&f| q.value(s.cod(f))))
}

/// `w ⊩ q` read as forcing of `x ⇒ q` over the representable `Σ(w, −)`.
pub fn decided_forcing(q: &StateProperty, w: Obj) -> Result<bool> {
    q.check_state(w)?;
    Ok(forcing_at_identity(&q.sigma, w, |v| q.value(v))?)
}

/// The global-sections morphism of `Σ` with the global element of `Ω_*`
/// classifying a monotone property.
#[derive(Clone, Debug)]
pub struct GlobalSections {
    pub morphism: InducedGeometricMorphism,
}

impl GlobalSections {
    pub fn new(sigma: &Arc<FinCategory>) -> Result<Self> {
        Ok(GlobalSections {
            morphism: induce(&FinFunctor::to_terminal(sigma.clone()))?,
        })
    }

    /// `p: 1 → Ω_*` whose family is the classifying map of the up-set `q`.
    pub fn proposition(&self, q: &StateProperty) -> Result<NatTrans> {
        if let Some(arrow) = q.monotonicity_witness() {
            return Err(DecidedError::NotMonotone { arrow });
        }
        let g = &self.morphism;
        let sigma = g.functor().source();
        let one_c = Arc::new(Copresheaf::terminal(sigma));
        let up = Subobject::new(&one_c, sigma.objects().map(|w| vec![q.value(w)]).collect())?;
        let chi = classify(&one_c, &up, g.omega_source())?;
        // comma objects over the terminal are (id_*, w), in object order
        let star = Obj(0);
        let fam: Vec<usize> = g
            .comma(star)
            .objects
            .iter()
            .map(|&(_, w)| chi.component(w, 0))
            .collect();
        let k = g.find_family(star, &fam).ok_or_else(|| {
            GeometricError::InvariantViolated("classifying family missing from Ω_*".into())
        })?;
        let one_d = Arc::new(Copresheaf::terminal(g.functor().target()));
        Ok(NatTrans::new(one_d, g.omega_star().clone(), vec![vec![k]])?)
    }

    /// `w ⊩* □p`.
    pub fn decided_modal(&self, q: &StateProperty, w: Obj) -> Result<bool> {
        q.check_state(w)?;
        let p = self.proposition(q)?;
        let boxed = box_op(&self.morphism, &p)?;
        Ok(rel_forces(&self.morphism, w, &boxed, 0)?)
    }

    /// `w ⊩* p`, without the modality.
    pub fn decided_relativised(&self, q: &StateProperty, w: Obj) -> Result<bool> {
        q.check_state(w)?;
        let p = self.proposition(q)?;
        Ok(rel_forces(&self.morphism, w, &p, 0)?)
    }
}

pub fn decided_modal(q: &StateProperty, w: Obj) -> Result<bool> {
    GlobalSections::new(&q.sigma)?.decided_modal(q, w)
}

pub fn decided_relativised(q: &StateProperty, w: Obj) -> Result<bool> {
    GlobalSections::new(&q.sigma)?.decided_relativised(q, w)
}

/// Two pointwise-disjoint properties are never decided at two states with a
/// common future. Exhaustive over all pairs of value maps.
pub fn check_inconsistent_decided(sigma: &Arc<FinCategory>) -> Report {
    let n = sigma.num_objects();
    let mut check = Check::new("inconsistent-decided");
    let pairs: Vec<(Obj, Obj)> = sigma
        .objects()
        .flat_map(|a| sigma.objects().map(move |b| (a, b)))
        .filter(|&(a, b)| {
            sigma
                .objects()
                .any(|v| sigma.has_arrow(a, v) && sigma.has_arrow(b, v))
        })
        .collect();
    let props: Vec<StateProperty> = (0..1u64 << n)
        .map(|m| StateProperty::from_mask(sigma.clone(), m))
        .collect();
    let decided: Vec<Vec<bool>> = props
        .iter()
        .map(|q| sigma.objects().map(|w| is_decided(q, w).unwrap()).collect())
        .collect();
    for m1 in 0..props.len() {
        for m2 in 0..props.len() {
            if m1 & m2 != 0 {
                continue;
            }
            for &(a, b) in &pairs {
                check.record(!(decided[m1][a.0] && decided[m2][b.0]), || {
                    vec![
                        format!("{m1:#b}"),
                        format!("{m2:#b}"),
                        sigma.object_name(a).to_string(),
                        sigma.object_name(b).to_string(),
                    ]
                });
            }
        }
    }
    Report {
        checks: vec![check],
    }
}
