//! Estimate consensus protocols and the direct safety calculus.

use crate::copresheaf::CopresheafError;
use crate::fincat::{
    category_from_dag, validate_category, FinCatError, FinCategory, FinFunctor, Obj,
};
use crate::geometric::GeometricError;
use crate::heyting::{Elem, HeytingAlgebra, HeytingError};
use crate::report::{Check, Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

/// Largest state count accepted by [`random_protocol`].
pub const RANDOM_STATE_LIMIT: usize = 16;
/// Largest consensus set accepted by [`random_protocol`].
pub const RANDOM_CONSENSUS_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Heyting(#[from] HeytingError),
    #[error(transparent)]
    Category(#[from] FinCatError),
    #[error(transparent)]
    Copresheaf(#[from] CopresheafError),
    #[error(transparent)]
    Geometric(#[from] GeometricError),
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("unknown proposition {0}")]
    UnknownProposition(String),
    #[error("estimate table has {got} entries for {states} states")]
    ShapeMismatch { got: usize, states: usize },
    #[error("operation needs a functorial estimator")]
    RequiresFunctorialEstimator,
    #[error("estimator does not induce a geometric model; objects {witness:?} are not retracts of the image")]
    NotAGeometricModel { witness: Vec<String> },
    #[error("size limit exceeded: {what} needs {requested}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// A protocol `(C, PC, Σ, E)` over a finite consensus set.
///
/// With `strict_functorial`, `E` must be a functor into [`pc_category`]:
/// an execution `w → v` requires `E(v) ⊆ E(w)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Protocol {
    consensus: Vec<String>,
    algebra: HeytingAlgebra,
    sigma: Arc<FinCategory>,
    estimate: Vec<Elem>,
    strict_functorial: bool,
}

impl Protocol {
    pub fn new<S: AsRef<str>>(
        consensus: &[S],
        sigma: Arc<FinCategory>,
        estimate: Vec<Elem>,
        strict_functorial: bool,
    ) -> Result<Self> {
        let algebra = HeytingAlgebra::powerset(consensus)?;
        if estimate.len() != sigma.num_objects() {
            return Err(ProtocolError::ShapeMismatch {
                got: estimate.len(),
                states: sigma.num_objects(),
            });
        }
        if let Some(e) = estimate.iter().find(|e| !algebra.contains(**e)) {
            return Err(ProtocolError::UnknownProposition(format!("#{}", e.0)));
        }
        Ok(Protocol {
            consensus: consensus.iter().map(|s| s.as_ref().to_string()).collect(),
            algebra,
            sigma,
            estimate,
            strict_functorial,
        })
    }

    /// Protocol on the reachability category of a DAG, estimates by name.
    pub fn from_dag(
        consensus: &[&str],
        states: &[&str],
        executions: &[(&str, &str, &str)],
        estimates: &[(&str, &[&str])],
    ) -> Result<Self> {
        let sigma = Arc::new(category_from_dag(states, executions)?);
        let algebra = HeytingAlgebra::powerset(consensus)?;
        let mut estimate = vec![algebra.bot(); sigma.num_objects()];
        for (state, values) in estimates {
            let w = sigma
                .find_object(state)
                .ok_or_else(|| ProtocolError::UnknownState(state.to_string()))?;
            estimate[w.0] = algebra
                .subset(values)
                .map_err(|_| ProtocolError::UnknownProposition(format!("{values:?}")))?;
        }
        Self::new(consensus, sigma, estimate, false)
    }

    pub fn consensus(&self) -> &[String] {
        &self.consensus
    }

    pub fn algebra(&self) -> &HeytingAlgebra {
        &self.algebra
    }

    pub fn sigma(&self) -> &Arc<FinCategory> {
        &self.sigma
    }

    pub fn estimate(&self, w: Obj) -> Elem {
        self.estimate[w.0]
    }

    pub fn estimates(&self) -> &[Elem] {
        &self.estimate
    }

    pub fn strict_functorial(&self) -> bool {
        self.strict_functorial
    }

    pub fn with_strict_functorial(mut self, strict: bool) -> Self {
        self.strict_functorial = strict;
        self
    }

    pub fn with_estimate(&self, w: Obj, e: Elem) -> Self {
        let mut p = self.clone();
        p.estimate[w.0] = e;
        p
    }

    pub fn states(&self) -> impl Iterator<Item = Obj> {
        self.sigma.objects()
    }

    pub fn propositions(&self) -> impl Iterator<Item = Elem> {
        self.algebra.elements()
    }

    pub fn state(&self, name: &str) -> Result<Obj> {
        self.sigma
            .find_object(name)
            .ok_or_else(|| ProtocolError::UnknownState(name.to_string()))
    }

    pub fn state_name(&self, w: Obj) -> &str {
        self.sigma.object_name(w)
    }

    /// The proposition with the given members.
    pub fn proposition<S: AsRef<str>>(&self, members: &[S]) -> Result<Elem> {
        self.algebra.subset(members).map_err(|_| {
            ProtocolError::UnknownProposition(
                members
                    .iter()
                    .map(|m| m.as_ref())
                    .collect::<Vec<_>>()
                    .join(","),
            )
        })
    }

    pub fn prop_label(&self, p: Elem) -> String {
        self.algebra.label(p)
    }

    pub fn check_state(&self, w: Obj) -> Result<()> {
        if w.0 < self.sigma.num_objects() {
            Ok(())
        } else {
            Err(ProtocolError::UnknownState(format!("#{}", w.0)))
        }
    }

    pub fn check_proposition(&self, p: Elem) -> Result<()> {
        if self.algebra.contains(p) {
            Ok(())
        } else {
            Err(ProtocolError::UnknownProposition(format!("#{}", p.0)))
        }
    }

    /// Whether `E` is monotone in the refinement order.
    pub fn is_functorial(&self) -> bool {
        self.functoriality_witness().is_none()
    }

    fn functoriality_witness(&self) -> Option<Vec<String>> {
        let s = &*self.sigma;
        s.arrows().find_map(|f| {
            let (w, v) = (s.dom(f), s.cod(f));
            (!self.algebra.leq(self.estimate(v), self.estimate(w))).then(|| {
                vec![
                    s.arrow_name(f).to_string(),
                    self.prop_label(self.estimate(w)),
                    self.prop_label(self.estimate(v)),
                ]
            })
        })
    }

    /// `E` as a functor `Σ → PC`, PC in refinement order.
    pub fn estimator_functor(&self) -> Result<FinFunctor> {
        if !self.is_functorial() {
            return Err(ProtocolError::RequiresFunctorialEstimator);
        }
        let pc = Arc::new(pc_category(&self.algebra, PcOrder::Refinement));
        let obj_map = self.estimate.iter().map(|e| Obj(e.0)).collect();
        Ok(FinFunctor::into_thin(self.sigma.clone(), pc, obj_map)?)
    }
}

/// Orientation of the thin category on a powerset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcOrder {
    /// `S → S'` iff `S ⊆ S'`.
    Inclusion,
    /// `S → S'` iff `S' ⊆ S`: estimates shrink along executions.
    Refinement,
}

/// The algebra as a thin category; object `Obj(i)` is element `Elem(i)`.
pub fn pc_category(algebra: &HeytingAlgebra, order: PcOrder) -> FinCategory {
    let labels: Vec<String> = algebra.elements().map(|e| algebra.label(e)).collect();
    let arrow = |a: usize, b: usize| match order {
        PcOrder::Inclusion => algebra.leq(Elem(a), Elem(b)),
        PcOrder::Refinement => algebra.leq(Elem(b), Elem(a)),
    };
    let name = |a: usize, b: usize| {
        if a == b {
            format!("id_{}", labels[a])
        } else {
            format!("{}>{}", labels[a], labels[b])
        }
    };
    FinCategory::preorder(labels.clone(), arrow, name).expect("an order is a thin category")
}

/// Switches for [`validate_protocol_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Skip the estimator condition entirely.
    pub waive_estimator_condition: bool,
    /// Also check the internal form `¬(E(w) ⇒ ¬p) = ⊤` whenever `E(w) ≤ p`.
    pub internal_estimator_condition: bool,
}

pub fn validate_protocol(p: &Protocol) -> Report {
    validate_protocol_with(p, ValidationOptions::default())
}

pub fn validate_protocol_with(p: &Protocol, opts: ValidationOptions) -> Report {
    let mut report = Report::new();
    for mut c in validate_category(&p.sigma).checks {
        c.name = format!("sigma-{}", c.name);
        report.push(c);
    }
    let h = &p.algebra;
    if opts.waive_estimator_condition {
        report.push(Check::not_applicable("estimator-condition", "waived"));
    } else {
        let mut sweep = Check::new("estimator-condition");
        let mut nonbottom = Check::new("estimator-nonbottom");
        let mut agree = Check::new("estimator-condition-agreement");
        for w in p.states() {
            let e = p.estimate(w);
            let mut ok_here = true;
            for q in h.elements() {
                let ok = !h.leq(e, q) || !h.leq(e, h.neg(q));
                ok_here &= ok;
                sweep.record(ok, || vec![p.state_name(w).to_string(), h.label(q)]);
            }
            let nb = e != h.bot();
            nonbottom.record(nb, || vec![p.state_name(w).to_string()]);
            agree.record(nb == ok_here, || vec![p.state_name(w).to_string()]);
        }
        report.push(sweep);
        report.push(nonbottom);
        report.push(agree);
        if opts.internal_estimator_condition {
            let mut internal = Check::new("estimator-condition-internal");
            for w in p.states() {
                let e = p.estimate(w);
                for q in h.elements().filter(|&q| h.leq(e, q)) {
                    internal.record(h.neg(h.implies(e, h.neg(q))) == h.top(), || {
                        vec![p.state_name(w).to_string(), h.label(q)]
                    });
                }
            }
            report.push(internal);
        }
    }
    if p.strict_functorial {
        let mut func = Check::new("estimator-functorial");
        let s = &*p.sigma;
        for f in s.arrows() {
            let (w, v) = (s.dom(f), s.cod(f));
            func.record(h.leq(p.estimate(v), p.estimate(w)), || {
                vec![
                    s.arrow_name(f).to_string(),
                    h.label(p.estimate(w)),
                    h.label(p.estimate(v)),
                ]
            });
        }
        report.push(func);
    }
    report
}

/// All `(w, p)` with `E(w) ≤ p` and `E(w) ≤ ¬p`.
pub fn estimator_condition_violations(p: &Protocol) -> Vec<(Obj, Elem)> {
    let h = &p.algebra;
    p.states()
        .flat_map(|w| h.elements().map(move |q| (w, q)))
        .filter(|&(w, q)| h.leq(p.estimate(w), q) && h.leq(p.estimate(w), h.neg(q)))
        .collect()
}

/// `p` is safe at `w` when every execution `w → v`, identities included,
/// has `E(v) ≤ p`.
pub fn is_safe(p: &Protocol, prop: Elem, w: Obj) -> Result<bool> {
    p.check_state(w)?;
    p.check_proposition(prop)?;
    Ok(safe_unchecked(p, prop, w))
}

fn safe_unchecked(p: &Protocol, prop: Elem, w: Obj) -> bool {
    let s = &*p.sigma;
    s.out_arrows(w)
        .iter()
        .all(|&f| p.algebra.leq(p.estimate(s.cod(f)), prop))
}

/// First state, in object order, reachable from both `w1` and `w2`.
pub fn compatible(p: &Protocol, w1: Obj, w2: Obj) -> Result<Option<Obj>> {
    p.check_state(w1)?;
    p.check_state(w2)?;
    Ok(common_future(&p.sigma, w1, w2))
}

fn common_future(s: &FinCategory, w1: Obj, w2: Obj) -> Option<Obj> {
    s.objects()
        .find(|&v| s.has_arrow(w1, v) && s.has_arrow(w2, v))
}

// safe[p][w]
fn safety_table(p: &Protocol) -> Vec<Vec<bool>> {
    p.propositions()
        .map(|q| p.states().map(|w| safe_unchecked(p, q, w)).collect())
        .collect()
}

pub fn check_consistency_lemmas(p: &Protocol) -> Report {
    let h = &p.algebra;
    let safe = safety_table(p);
    let s = &*p.sigma;
    let name = |w: Obj| s.object_name(w).to_string();
    let st = |q: Elem, w: Obj| safe[q.0][w.0];

    let mut persistence = Check::new("persistence");
    for q in h.elements() {
        for r in h.elements().filter(|&r| h.leq(q, r)) {
            for w in s.objects() {
                persistence.record(!st(q, w) || st(r, w), || {
                    vec![h.label(q), h.label(r), name(w)]
                });
            }
        }
    }
    let mut forward = Check::new("forward-consistency");
    let mut backward = Check::new("backward-consistency");
    for q in h.elements() {
        for f in s.arrows() {
            let (w, v) = (s.dom(f), s.cod(f));
            forward.record(!st(q, w) || st(q, v), || {
                vec![h.label(q), s.arrow_name(f).to_string()]
            });
            backward.record(!st(q, v) || !st(h.neg(q), w), || {
                vec![h.label(q), s.arrow_name(f).to_string()]
            });
        }
    }
    let mut current = Check::new("current-consistency");
    for q in h.elements() {
        for w in s.objects() {
            current.record(!st(q, w) || !st(h.neg(q), w), || vec![h.label(q), name(w)]);
        }
    }
    Report {
        checks: vec![persistence, forward, current, backward],
    }
}

/// All `(p, w)` where `p` and `¬p` are both safe at `w`.
pub fn current_consistency_violations(p: &Protocol) -> Vec<(Elem, Obj)> {
    let safe = safety_table(p);
    let h = &p.algebra;
    h.elements()
        .flat_map(|q| p.states().map(move |w| (q, w)))
        .filter(|&(q, w)| safe[q.0][w.0] && safe[h.neg(q).0][w.0])
        .collect()
}

/// Inconsistent propositions are never safe at two states with a common future.
pub fn check_safety_theorem(p: &Protocol) -> Report {
    let h = &p.algebra;
    let safe = safety_table(p);
    let s = &*p.sigma;
    let futures: Vec<(Obj, Obj, Obj)> = s
        .objects()
        .flat_map(|a| s.objects().map(move |b| (a, b)))
        .filter_map(|(a, b)| common_future(s, a, b).map(|v| (a, b, v)))
        .collect();
    let mut thm = Check::new("safety-theorem");
    for q in h.elements() {
        for r in h.elements().filter(|&r| h.meet(q, r) == h.bot()) {
            for &(a, b, v) in &futures {
                thm.record(!(safe[q.0][a.0] && safe[r.0][b.0]), || {
                    vec![
                        h.label(q),
                        h.label(r),
                        s.object_name(a).to_string(),
                        s.object_name(b).to_string(),
                        s.object_name(v).to_string(),
                    ]
                });
            }
        }
    }
    Report { checks: vec![thm] }
}

/// A seeded random protocol on a DAG over states `s0..`, consensus `c0..`.
/// Edges go from lower to higher index with probability `edge_density`;
/// estimates are uniform non-empty subsets.
pub fn random_protocol(
    n_states: usize,
    n_consensus: usize,
    edge_density: f64,
    seed: u64,
) -> Result<Protocol> {
    random_protocol_impl(n_states, n_consensus, edge_density, seed, 1)
}

/// As [`random_protocol`], with `∅` allowed as an estimate.
pub fn random_protocol_allowing_bottom(
    n_states: usize,
    n_consensus: usize,
    edge_density: f64,
    seed: u64,
) -> Result<Protocol> {
    random_protocol_impl(n_states, n_consensus, edge_density, seed, 0)
}

fn random_protocol_impl(
    n_states: usize,
    n_consensus: usize,
    edge_density: f64,
    seed: u64,
    lowest: usize,
) -> Result<Protocol> {
    if n_states == 0 || n_states > RANDOM_STATE_LIMIT {
        return Err(ProtocolError::SizeLimit {
            what: "random protocol states",
            requested: n_states,
            limit: RANDOM_STATE_LIMIT,
        });
    }
    if n_consensus == 0 || n_consensus > RANDOM_CONSENSUS_LIMIT {
        return Err(ProtocolError::SizeLimit {
            what: "random protocol consensus values",
            requested: n_consensus,
            limit: RANDOM_CONSENSUS_LIMIT,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density = edge_density.clamp(0.0, 1.0);
    let states: Vec<String> = (0..n_states).map(|i| format!("s{i}")).collect();
    let consensus: Vec<String> = (0..n_consensus).map(|i| format!("c{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n_states {
        for j in i + 1..n_states {
            if rng.gen_bool(density) {
                edges.push((format!("e{i}_{j}"), states[i].clone(), states[j].clone()));
            }
        }
    }
    let sigma = Arc::new(category_from_dag(&states, &edges)?);
    let full = (1usize << n_consensus) - 1;
    let estimate = (0..n_states)
        .map(|_| Elem(rng.gen_range(lowest..=full)))
        .collect();
    Protocol::new(&consensus, sigma, estimate, false)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::fincat::validate_functor;
    use proptest::prelude::*;

    fn prop(p: &Protocol, m: &[&str]) -> Elem {
        p.proposition(m).unwrap()
    }

    #[test]
    fn p0_validates_and_bottom_estimates_fail() {
        let p = p0();
        assert!(validate_protocol(&p).passed());
        let w2 = p.state("w2").unwrap();
        let bad = p.with_estimate(w2, p.algebra().bot());
        let report = validate_protocol(&bad);
        assert!(!report.get("estimator-condition").unwrap().passed);
        assert!(report.get("estimator-condition-agreement").unwrap().passed);
        let violations = estimator_condition_violations(&bad);
        assert!(violations.contains(&(w2, prop(&p, &["a"]))));
        assert!(violations.iter().all(|&(w, _)| w == w2));
        assert_eq!(violations.len(), 4);

        let g0 = g0_refined();
        let report = validate_protocol(&g0);
        let nb = report.get("estimator-nonbottom").unwrap();
        assert_eq!(nb.witness.as_deref(), Some(&["u2".to_string()][..]));
        assert!(report.get("estimator-functorial").unwrap().passed);
        let waived = validate_protocol_with(
            &g0,
            ValidationOptions {
                waive_estimator_condition: true,
                ..Default::default()
            },
        );
        assert!(waived.passed());
    }

    #[test]
    fn internal_condition_only_holds_for_top_estimates() {
        let opts = ValidationOptions {
            internal_estimator_condition: true,
            ..Default::default()
        };
        let p = p0();
        assert!(
            !validate_protocol_with(&p, opts)
                .get("estimator-condition-internal")
                .unwrap()
                .passed
        );
        let top = p.algebra().top();
        let mut q = p.clone();
        for w in p.states() {
            q = q.with_estimate(w, top);
        }
        assert!(validate_protocol_with(&q, opts).passed());
    }

    #[test]
    fn safety_examples() {
        let p = p0();
        let (w1, w2) = (p.state("w1").unwrap(), p.state("w2").unwrap());
        assert!(is_safe(&p, prop(&p, &["a"]), w1).unwrap());
        assert!(!is_safe(&p, prop(&p, &["b"]), w2).unwrap());
        for w in p.states() {
            assert!(is_safe(&p, p.algebra().top(), w).unwrap());
        }
        assert!(matches!(
            is_safe(&p, Elem(99), w1),
            Err(ProtocolError::UnknownProposition(_))
        ));
        assert!(matches!(
            is_safe(&p, Elem(0), Obj(9)),
            Err(ProtocolError::UnknownState(_))
        ));
        let p1 = p1();
        assert!(!is_safe(&p1, prop(&p1, &["a"]), p1.state("v1").unwrap()).unwrap());
    }

    #[test]
    fn compatibility_examples() {
        let p = p0();
        let w = |n| p.state(n).unwrap();
        assert_eq!(compatible(&p, w("w1"), w("w2")).unwrap(), Some(w("w3")));
        assert_eq!(compatible(&p, w("w1"), w("w1")).unwrap(), Some(w("w1")));
        let iso = Protocol::from_dag(
            &["a", "b"],
            &["v1", "v2", "z"],
            &[("e", "v1", "v2")],
            &[("v1", &["a"]), ("v2", &["a", "b"]), ("z", &["b"])],
        )
        .unwrap();
        assert_eq!(
            compatible(&iso, iso.state("v1").unwrap(), iso.state("z").unwrap()).unwrap(),
            None
        );
    }

    #[test]
    fn lemmas_and_theorem_on_fixtures() {
        for p in [p0(), p1()] {
            let lemmas = check_consistency_lemmas(&p);
            assert!(lemmas.passed(), "{lemmas}");
            assert_eq!(lemmas.checks.len(), 4);
            let thm = check_safety_theorem(&p);
            assert!(thm.passed());
        }
        // the 16 proposition pairs filtered to disjoint ones, times 9 compatible pairs
        let thm = check_safety_theorem(&p0());
        assert_eq!(thm.checks[0].cases, 9 * 9);
    }

    #[test]
    fn bottom_estimate_breaks_current_consistency() {
        let p = p0();
        let w3 = p.state("w3").unwrap();
        let bad = p.with_estimate(w3, p.algebra().bot());
        let report = check_consistency_lemmas(&bad);
        assert!(!report.get("current-consistency").unwrap().passed);
        assert!(current_consistency_violations(&bad).contains(&(prop(&p, &["a"]), w3)));
    }

    #[test]
    fn functoriality_uses_refinement_order() {
        let g = g0_refined();
        let e = g.estimator_functor().unwrap();
        assert!(validate_functor(&e).passed());
        assert!(p0().estimator_functor().is_ok());
        assert!(matches!(
            p1().estimator_functor(),
            Err(ProtocolError::RequiresFunctorialEstimator)
        ));
        let p1 = p1().with_strict_functorial(true);
        assert!(
            !validate_protocol(&p1)
                .get("estimator-functorial")
                .unwrap()
                .passed
        );
        let pc = pc_category(p1.algebra(), PcOrder::Refinement);
        assert_eq!(pc.num_arrows(), 9);
        assert!(pc.find_arrow("{a,b}>{a}").is_some());
        let inc = pc_category(p1.algebra(), PcOrder::Inclusion);
        assert!(inc.find_arrow("{a}>{a,b}").is_some());
    }

    #[test]
    fn random_protocols() {
        let p = random_protocol(3, 2, 0.5, 1).unwrap();
        assert!(validate_protocol(&p).passed());
        let tiny = random_protocol(1, 1, 0.0, 0).unwrap();
        assert_eq!(tiny.sigma().num_objects(), 1);
        assert_eq!(tiny.prop_label(tiny.estimate(Obj(0))), "{c0}");
        assert_eq!(
            random_protocol(5, 3, 0.4, 9).unwrap(),
            random_protocol(5, 3, 0.4, 9).unwrap()
        );
        assert!(matches!(
            random_protocol(RANDOM_STATE_LIMIT + 1, 2, 0.5, 0),
            Err(ProtocolError::SizeLimit { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn random_protocols_satisfy_the_theory(
            n in 1usize..=6, m in 1usize..=3, d in 0.0f64..=1.0, seed in any::<u64>()
        ) {
            let p = random_protocol(n, m, d, seed).unwrap();
            prop_assert!(validate_protocol(&p).passed());
            prop_assert!(check_consistency_lemmas(&p).passed());
            prop_assert!(check_safety_theorem(&p).passed());
            let h = p.algebra();
            let s = p.sigma();
            for q in h.elements() {
                for f in s.arrows() {
                    if is_safe(&p, q, s.dom(f)).unwrap() {
                        prop_assert!(is_safe(&p, q, s.cod(f)).unwrap());
                    }
                }
            }
            for a in s.objects() {
                for b in s.objects() {
                    prop_assert_eq!(
                        compatible(&p, a, b).unwrap().is_some(),
                        compatible(&p, b, a).unwrap().is_some()
                    );
                }
            }
        }

        #[test]
        fn estimator_sweep_agrees_with_nonbottom(
            n in 1usize..=5, m in 1usize..=3, seed in any::<u64>(), zero in 0usize..5
        ) {
            let p = random_protocol(n, m, 0.5, seed).unwrap();
            let p = if zero < n { p.with_estimate(Obj(zero), p.algebra().bot()) } else { p };
            let report = validate_protocol(&p);
            prop_assert!(report.get("estimator-condition-agreement").unwrap().passed);
            prop_assert_eq!(
                report.get("estimator-condition").unwrap().passed,
                report.get("estimator-nonbottom").unwrap().passed
            );
        }
    }
}
