//! Finite Heyting algebras.
//!
//! An algebra is either a table algebra, whose operations were computed from a
//! finite poset by scanning the carrier, or a powerset algebra, whose
//! operations are bit operations on subsets of a small universe. Both expose
//! the same element-level API through [`Elem`] handles.
//!
//! Implication is never assumed: [`HeytingAlgebra::from_poset`] looks for the
//! maximum of `{x | x ∧ q ≤ r}` and reports the lattices where it does not
//! exist.

use crate::report::{Check, Report};
use std::collections::HashMap;
use thiserror::Error;

/// Default bound on the size of the universe of a powerset algebra.
pub const POWERSET_LIMIT: usize = 16;

/// Exhaustive adjunction checks for quantifiers run when `2^|A| * 2^|B|` is at
/// most this many pairs.
pub const ADJOINT_CHECK_BOUND: u64 = 1 << 20;

/// Handle to an element of a specific algebra or poset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeytingError {
    #[error("invalid poset: {0}")]
    InvalidPoset(String),
    #[error("not a lattice: {left} and {right} have no {bound}")]
    NotALattice {
        left: String,
        right: String,
        bound: &'static str,
    },
    #[error(
        "not a Heyting algebra: {{x | x ∧ {q} ≤ {r}}} has no maximum (maximal: {candidates:?})"
    )]
    NotHeyting {
        q: String,
        r: String,
        candidates: Vec<String>,
    },
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("size limit exceeded: {what} needs {requested}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
    #[error("Boolean conditions disagree: {0}")]
    ConditionsDisagree(String),
    #[error("quantifier adjunction violated: {0}")]
    AdjunctionViolated(String),
}

pub type Result<T> = std::result::Result<T, HeytingError>;

/// A finite partial order. Constructors sort the labels; `Elem(i)` is the i-th label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinPoset {
    labels: Vec<String>,
    leq: Vec<bool>,
}

impl FinPoset {
    /// Builds a poset from labels and an order relation given on input indices.
    /// The relation is checked, not closed.
    pub fn from_relation<S, F>(labels: &[S], leq: F) -> Result<Self>
    where
        S: AsRef<str>,
        F: Fn(usize, usize) -> bool,
    {
        if labels.is_empty() {
            return Err(HeytingError::InvalidPoset("carrier is empty".into()));
        }
        let n = labels.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| labels[a].as_ref().cmp(labels[b].as_ref()));
        for w in order.windows(2) {
            if labels[w[0]].as_ref() == labels[w[1]].as_ref() {
                return Err(HeytingError::InvalidPoset(format!(
                    "duplicate element {}",
                    labels[w[0]].as_ref()
                )));
            }
        }
        let mut rel = vec![false; n * n];
        for (i, &a) in order.iter().enumerate() {
            for (j, &b) in order.iter().enumerate() {
                rel[i * n + j] = leq(a, b);
            }
        }
        let poset = FinPoset {
            labels: order
                .iter()
                .map(|&i| labels[i].as_ref().to_string())
                .collect(),
            leq: rel,
        };
        poset.check_axioms()?;
        Ok(poset)
    }

    /// Builds a poset from labels and label pairs `(x, y)` meaning `x ≤ y`.
    /// Reflexive pairs are added; the rest must already be transitive.
    pub fn from_pairs<S: AsRef<str>>(labels: &[S], pairs: &[(&str, &str)]) -> Result<Self> {
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_ref(), i))
            .collect();
        let mut set = std::collections::HashSet::new();
        for (x, y) in pairs {
            let xi = *index
                .get(x)
                .ok_or_else(|| HeytingError::UnknownElement((*x).to_string()))?;
            let yi = *index
                .get(y)
                .ok_or_else(|| HeytingError::UnknownElement((*y).to_string()))?;
            set.insert((xi, yi));
        }
        Self::from_relation(labels, |a, b| a == b || set.contains(&(a, b)))
    }

    /// A chain ordered by position in `labels`.
    pub fn chain<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::from_relation(labels, |a, b| a <= b)
    }

    /// An antichain.
    pub fn discrete<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::from_relation(labels, |a, b| a == b)
    }

    fn check_axioms(&self) -> Result<()> {
        let n = self.len();
        for a in 0..n {
            if !self.leq[a * n + a] {
                return Err(HeytingError::InvalidPoset(format!(
                    "not reflexive at {}",
                    self.labels[a]
                )));
            }
            for b in 0..n {
                if a != b && self.leq[a * n + b] && self.leq[b * n + a] {
                    return Err(HeytingError::InvalidPoset(format!(
                        "not antisymmetric at ({}, {})",
                        self.labels[a], self.labels[b]
                    )));
                }
                for c in 0..n {
                    if self.leq[a * n + b] && self.leq[b * n + c] && !self.leq[a * n + c] {
                        return Err(HeytingError::InvalidPoset(format!(
                            "not transitive at ({}, {}, {})",
                            self.labels[a], self.labels[b], self.labels[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, e: Elem) -> &str {
        &self.labels[e.0]
    }

    pub fn find(&self, label: &str) -> Option<Elem> {
        self.labels.iter().position(|l| l == label).map(Elem)
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        self.leq[a.0 * self.len() + b.0]
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.len()).map(Elem)
    }

    /// Number of pairs in the order relation.
    pub fn relation_size(&self) -> usize {
        self.leq.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Tables {
    n: usize,
    leq: Vec<bool>,
    meet: Vec<usize>,
    join: Vec<usize>,
    imp: Vec<usize>,
    neg: Vec<usize>,
    top: usize,
    bot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Repr {
    Table { labels: Vec<String>, t: Box<Tables> },
    Powerset { universe: Vec<String> },
}

/// A finite Heyting algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeytingAlgebra {
    repr: Repr,
}

impl HeytingAlgebra {
    /// Computes meets, joins and implication of a finite poset by scanning.
    pub fn from_poset(poset: &FinPoset) -> Result<Self> {
        let n = poset.len();
        let le = |a: usize, b: usize| poset.leq[a * n + b];
        let label = |a: usize| poset.labels[a].clone();

        let bound = |a: usize, b: usize, lower: bool| -> Option<usize> {
            let cands: Vec<usize> = (0..n)
                .filter(|&x| {
                    if lower {
                        le(x, a) && le(x, b)
                    } else {
                        le(a, x) && le(b, x)
                    }
                })
                .collect();
            cands.iter().copied().find(|&x| {
                cands
                    .iter()
                    .all(|&y| if lower { le(y, x) } else { le(x, y) })
            })
        };

        let mut meet = vec![0; n * n];
        let mut join = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                meet[a * n + b] = bound(a, b, true).ok_or_else(|| HeytingError::NotALattice {
                    left: label(a),
                    right: label(b),
                    bound: "meet",
                })?;
                join[a * n + b] = bound(a, b, false).ok_or_else(|| HeytingError::NotALattice {
                    left: label(a),
                    right: label(b),
                    bound: "join",
                })?;
            }
        }
        let top = (0..n).find(|&t| (0..n).all(|x| le(x, t))).ok_or_else(|| {
            HeytingError::NotALattice {
                left: label(0),
                right: label(0),
                bound: "top",
            }
        })?;
        let bot = (0..n).find(|&b| (0..n).all(|x| le(b, x))).ok_or_else(|| {
            HeytingError::NotALattice {
                left: label(0),
                right: label(0),
                bound: "bottom",
            }
        })?;

        let mut imp = vec![0; n * n];
        for q in 0..n {
            for r in 0..n {
                let below: Vec<usize> = (0..n).filter(|&x| le(meet[x * n + q], r)).collect();
                match below
                    .iter()
                    .copied()
                    .find(|&m| below.iter().all(|&x| le(x, m)))
                {
                    Some(m) => imp[q * n + r] = m,
                    None => {
                        let candidates = below
                            .iter()
                            .copied()
                            .filter(|&m| below.iter().all(|&x| x == m || !le(m, x)))
                            .map(label)
                            .collect();
                        return Err(HeytingError::NotHeyting {
                            q: label(q),
                            r: label(r),
                            candidates,
                        });
                    }
                }
            }
        }
        let neg = (0..n).map(|p| imp[p * n + bot]).collect();
        Ok(HeytingAlgebra {
            repr: Repr::Table {
                labels: poset.labels.clone(),
                t: Box::new(Tables {
                    n,
                    leq: poset.leq.clone(),
                    meet,
                    join,
                    imp,
                    neg,
                    top,
                    bot,
                }),
            },
        })
    }

    /// Assembles an algebra from externally computed operation tables, indexed
    /// by the poset's element order. Only shapes are checked here; run
    /// [`verify_heyting_laws`] to check the laws. Negation is derived.
    pub fn from_operation_tables(
        poset: &FinPoset,
        meet: Vec<Elem>,
        join: Vec<Elem>,
        imp: Vec<Elem>,
    ) -> Result<Self> {
        let n = poset.len();
        if meet.len() != n * n || join.len() != n * n || imp.len() != n * n {
            return Err(HeytingError::InvalidPoset(
                "operation tables must have |carrier|^2 entries".into(),
            ));
        }
        if [&meet, &join, &imp]
            .iter()
            .any(|t| t.iter().any(|e| e.0 >= n))
        {
            return Err(HeytingError::UnknownElement(
                "table entry out of range".into(),
            ));
        }
        let top = poset
            .elements()
            .find(|&t| poset.elements().all(|x| poset.leq(x, t)))
            .ok_or_else(|| HeytingError::InvalidPoset("no top element".into()))?
            .0;
        let bot = poset
            .elements()
            .find(|&b| poset.elements().all(|x| poset.leq(b, x)))
            .ok_or_else(|| HeytingError::InvalidPoset("no bottom element".into()))?
            .0;
        let imp: Vec<usize> = imp.into_iter().map(|e| e.0).collect();
        let neg = (0..n).map(|p| imp[p * n + bot]).collect();
        Ok(HeytingAlgebra {
            repr: Repr::Table {
                labels: poset.labels.clone(),
                t: Box::new(Tables {
                    n,
                    leq: poset.leq.clone(),
                    meet: meet.into_iter().map(|e| e.0).collect(),
                    join: join.into_iter().map(|e| e.0).collect(),
                    imp,
                    neg,
                    top,
                    bot,
                }),
            },
        })
    }

    /// The powerset of `universe`, ordered by inclusion. `Elem(mask)` is the
    /// subset whose bit `i` marks `universe[i]`.
    pub fn powerset<S: AsRef<str>>(universe: &[S]) -> Result<Self> {
        Self::powerset_with_limit(universe, POWERSET_LIMIT)
    }

    pub fn powerset_with_limit<S: AsRef<str>>(universe: &[S], limit: usize) -> Result<Self> {
        if universe.len() > limit.min(63) {
            return Err(HeytingError::SizeLimit {
                what: "powerset universe",
                requested: universe.len(),
                limit: limit.min(63),
            });
        }
        let universe: Vec<String> = universe.iter().map(|s| s.as_ref().to_string()).collect();
        let mut sorted = universe.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != universe.len() {
            return Err(HeytingError::InvalidPoset(
                "duplicate universe element".into(),
            ));
        }
        Ok(HeytingAlgebra {
            repr: Repr::Powerset { universe },
        })
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Table { t, .. } => t.n,
            Repr::Powerset { universe } => 1 << universe.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.len()).map(Elem)
    }

    pub fn contains(&self, e: Elem) -> bool {
        e.0 < self.len()
    }

    fn full(universe: &[String]) -> usize {
        (1usize << universe.len()) - 1
    }

    pub fn top(&self) -> Elem {
        match &self.repr {
            Repr::Table { t, .. } => Elem(t.top),
            Repr::Powerset { universe } => Elem(Self::full(universe)),
        }
    }

    pub fn bot(&self) -> Elem {
        match &self.repr {
            Repr::Table { t, .. } => Elem(t.bot),
            Repr::Powerset { .. } => Elem(0),
        }
    }

    pub fn leq(&self, a: Elem, b: Elem) -> bool {
        match &self.repr {
            Repr::Table { t, .. } => t.leq[a.0 * t.n + b.0],
            Repr::Powerset { .. } => a.0 & !b.0 == 0,
        }
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        match &self.repr {
            Repr::Table { t, .. } => Elem(t.meet[a.0 * t.n + b.0]),
            Repr::Powerset { .. } => Elem(a.0 & b.0),
        }
    }

    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        match &self.repr {
            Repr::Table { t, .. } => Elem(t.join[a.0 * t.n + b.0]),
            Repr::Powerset { .. } => Elem(a.0 | b.0),
        }
    }

    /// Heyting implication. Panics if an argument is out of range; see
    /// [`HeytingAlgebra::implication`] for the checked form.
    pub fn implies(&self, a: Elem, b: Elem) -> Elem {
        match &self.repr {
            Repr::Table { t, .. } => Elem(t.imp[a.0 * t.n + b.0]),
            Repr::Powerset { universe } => Elem((!a.0 | b.0) & Self::full(universe)),
        }
    }

    pub fn implication(&self, a: Elem, b: Elem) -> Result<Elem> {
        for e in [a, b] {
            if !self.contains(e) {
                return Err(HeytingError::UnknownElement(format!("#{}", e.0)));
            }
        }
        Ok(self.implies(a, b))
    }

    /// Pseudocomplement `p ⇒ ⊥`.
    pub fn neg(&self, a: Elem) -> Elem {
        match &self.repr {
            Repr::Table { t, .. } => Elem(t.neg[a.0]),
            Repr::Powerset { universe } => Elem(!a.0 & Self::full(universe)),
        }
    }

    pub fn label(&self, e: Elem) -> String {
        match &self.repr {
            Repr::Table { labels, .. } => labels[e.0].clone(),
            Repr::Powerset { universe } => subset_label(universe, e.0 as u64),
        }
    }

    pub fn find(&self, label: &str) -> Option<Elem> {
        match &self.repr {
            Repr::Table { labels, .. } => labels.iter().position(|l| l == label).map(Elem),
            Repr::Powerset { .. } => {
                let inner = label.trim().strip_prefix('{')?.strip_suffix('}')?;
                let names: Vec<&str> = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .collect();
                self.subset(&names).ok()
            }
        }
    }

    /// The subset of a powerset algebra with the given members.
    pub fn subset<S: AsRef<str>>(&self, members: &[S]) -> Result<Elem> {
        let Repr::Powerset { universe } = &self.repr else {
            return Err(HeytingError::UnknownElement(
                "subsets exist only in powerset algebras".into(),
            ));
        };
        let mut mask = 0usize;
        for m in members {
            let i = universe
                .iter()
                .position(|u| u == m.as_ref())
                .ok_or_else(|| HeytingError::UnknownElement(m.as_ref().to_string()))?;
            mask |= 1 << i;
        }
        Ok(Elem(mask))
    }

    /// The universe of a powerset algebra.
    pub fn universe(&self) -> Option<&[String]> {
        match &self.repr {
            Repr::Powerset { universe } => Some(universe),
            Repr::Table { .. } => None,
        }
    }

    /// The underlying order as an explicit poset, in this algebra's element order.
    pub fn poset(&self) -> FinPoset {
        let n = self.len();
        let labels = self.elements().map(|e| self.label(e)).collect();
        let mut leq = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                leq[a * n + b] = self.leq(Elem(a), Elem(b));
            }
        }
        FinPoset { labels, leq }
    }

    /// Copy of this algebra with one implication entry overwritten. Intended
    /// for exercising the law checker; the result is generally not Heyting.
    pub fn with_implication_entry(&self, p: Elem, q: Elem, value: Elem) -> Result<Self> {
        let n = self.len();
        for e in [p, q, value] {
            if !self.contains(e) {
                return Err(HeytingError::UnknownElement(format!("#{}", e.0)));
            }
        }
        let mut tables = self.tables();
        tables.imp[p.0 * n + q.0] = value.0;
        tables.neg = (0..n).map(|x| tables.imp[x * n + tables.bot]).collect();
        Ok(HeytingAlgebra {
            repr: Repr::Table {
                labels: self.elements().map(|e| self.label(e)).collect(),
                t: Box::new(tables),
            },
        })
    }

    fn tables(&self) -> Tables {
        match &self.repr {
            Repr::Table { t, .. } => (**t).clone(),
            Repr::Powerset { .. } => {
                let n = self.len();
                let mut t = Tables {
                    n,
                    leq: vec![false; n * n],
                    meet: vec![0; n * n],
                    join: vec![0; n * n],
                    imp: vec![0; n * n],
                    neg: vec![0; n],
                    top: self.top().0,
                    bot: self.bot().0,
                };
                for a in self.elements() {
                    for b in self.elements() {
                        let k = a.0 * n + b.0;
                        t.leq[k] = self.leq(a, b);
                        t.meet[k] = self.meet(a, b).0;
                        t.join[k] = self.join(a, b).0;
                        t.imp[k] = self.implies(a, b).0;
                    }
                    t.neg[a.0] = self.neg(a).0;
                }
                t
            }
        }
    }
}

/// Canonical label of a subset: `{a,b}` in universe order, `{}` when empty.
pub fn subset_label(universe: &[String], mask: u64) -> String {
    let members: Vec<&str> = universe
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, s)| s.as_str())
        .collect();
    format!("{{{}}}", members.join(","))
}

/// Heyting algebra of `poset`; fails on non-lattices and non-Heyting lattices.
pub fn heyting_from_poset(poset: &FinPoset) -> Result<HeytingAlgebra> {
    HeytingAlgebra::from_poset(poset)
}

pub fn powerset_algebra<S: AsRef<str>>(universe: &[S]) -> Result<HeytingAlgebra> {
    HeytingAlgebra::powerset(universe)
}

/// The three classical conditions, each with its first violating element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanCheck {
    pub is_boolean: bool,
    /// First `p` with `¬¬p ≰ p`.
    pub double_negation_below: Option<Elem>,
    /// First `p` with `¬¬p ≠ p`.
    pub double_negation_fixed: Option<Elem>,
    /// First `p` with `p ∨ ¬p ≠ ⊤`.
    pub excluded_middle: Option<Elem>,
}

/// Decides whether `h` is Boolean and confirms that the three standard
/// characterizations agree.
pub fn is_boolean(h: &HeytingAlgebra) -> Result<BooleanCheck> {
    let nn = |p: Elem| h.neg(h.neg(p));
    let below = h.elements().find(|&p| !h.leq(nn(p), p));
    let fixed = h.elements().find(|&p| nn(p) != p);
    let lem = h.elements().find(|&p| h.join(p, h.neg(p)) != h.top());
    let verdicts = [below.is_none(), fixed.is_none(), lem.is_none()];
    if verdicts.iter().any(|&v| v != verdicts[0]) {
        return Err(HeytingError::ConditionsDisagree(format!(
            "¬¬p ≤ p: {}, ¬¬p = p: {}, p ∨ ¬p = ⊤: {}",
            verdicts[0], verdicts[1], verdicts[2]
        )));
    }
    Ok(BooleanCheck {
        is_boolean: verdicts[1],
        double_negation_below: below,
        double_negation_fixed: fixed,
        excluded_middle: lem,
    })
}

/// Exhaustively checks the Heyting laws, one [`Check`] per law.
pub fn verify_heyting_laws(h: &HeytingAlgebra) -> Report {
    let lab = |xs: &[Elem]| -> Vec<String> { xs.iter().map(|&x| h.label(x)).collect() };
    let elems: Vec<Elem> = h.elements().collect();

    let mut glb = Check::new("meet-is-glb");
    let mut lub = Check::new("join-is-lub");
    let mut neg = Check::new("negation-is-implication-to-bottom");
    let mut order = Check::new("order-via-implication");
    let mut dni = Check::new("double-negation-introduction");
    let mut dni_top = Check::new("implies-double-negation-is-top");
    let mut noncontra = Check::new("non-contradiction");
    let mut largest = Check::new("pseudocomplement-is-largest");
    for &p in &elems {
        neg.record(h.neg(p) == h.implies(p, h.bot()), || lab(&[p]));
        dni.record(h.leq(p, h.neg(h.neg(p))), || lab(&[p]));
        dni_top.record(h.implies(p, h.neg(h.neg(p))) == h.top(), || lab(&[p]));
        noncontra.record(h.meet(p, h.neg(p)) == h.bot(), || lab(&[p]));
        for &q in &elems {
            let m = h.meet(p, q);
            let j = h.join(p, q);
            let m_ok = h.leq(m, p)
                && h.leq(m, q)
                && elems
                    .iter()
                    .all(|&x| !(h.leq(x, p) && h.leq(x, q)) || h.leq(x, m));
            let j_ok = h.leq(p, j)
                && h.leq(q, j)
                && elems
                    .iter()
                    .all(|&x| !(h.leq(p, x) && h.leq(q, x)) || h.leq(j, x));
            glb.record(m_ok, || lab(&[p, q]));
            lub.record(j_ok, || lab(&[p, q]));
            order.record(h.leq(p, q) == (h.implies(p, q) == h.top()), || lab(&[p, q]));
            if m == h.bot() {
                largest.record(h.leq(q, h.neg(p)), || lab(&[p, q]));
            }
        }
    }

    let mut adj = Check::new("implication-adjunction");
    let mut dist = Check::new("implication-preserves-meets");
    let mut curry = Check::new("implication-currying");
    for &p in &elems {
        for &q in &elems {
            for &r in &elems {
                let a = h.leq(h.meet(p, q), r);
                let b = h.leq(p, h.implies(q, r));
                let c = h.leq(q, h.implies(p, r));
                adj.record(a == b && b == c, || lab(&[p, q, r]));
                dist.record(
                    h.implies(p, h.meet(q, r)) == h.meet(h.implies(p, q), h.implies(p, r)),
                    || lab(&[p, q, r]),
                );
                curry.record(
                    h.implies(h.meet(p, q), r) == h.implies(p, h.implies(q, r)),
                    || lab(&[p, q, r]),
                );
            }
        }
    }

    Report {
        checks: vec![
            glb, lub, adj, dist, curry, order, neg, dni, dni_top, noncontra, largest,
        ],
    }
}

/// A total function between the finite sets `{0..domain}` and `{0..codomain}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteFunction {
    domain: usize,
    codomain: usize,
    map: Vec<usize>,
}

impl FiniteFunction {
    pub fn new(codomain: usize, map: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = map.iter().find(|&&b| b >= codomain) {
            return Err(HeytingError::UnknownElement(format!(
                "image {bad} outside codomain of size {codomain}"
            )));
        }
        if map.len() > 63 || codomain > 63 {
            return Err(HeytingError::SizeLimit {
                what: "finite function",
                requested: map.len().max(codomain),
                limit: 63,
            });
        }
        Ok(FiniteFunction {
            domain: map.len(),
            codomain,
            map,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, (0..n).collect())
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    pub fn apply(&self, a: usize) -> usize {
        self.map[a]
    }
}

/// Existential image, inverse image and universal image along a finite
/// function, acting on subsets encoded as bitmasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantifierTriple {
    f: FiniteFunction,
    /// Whether both adjunctions were checked over all subset pairs.
    pub exhaustively_checked: bool,
}

impl QuantifierTriple {
    pub fn function(&self) -> &FiniteFunction {
        &self.f
    }

    pub fn exists(&self, s: u64) -> u64 {
        (0..self.f.domain)
            .filter(|&a| s >> a & 1 == 1)
            .fold(0, |acc, a| acc | 1 << self.f.map[a])
    }

    pub fn pullback(&self, t: u64) -> u64 {
        (0..self.f.domain)
            .filter(|&a| t >> self.f.map[a] & 1 == 1)
            .fold(0, |acc, a| acc | 1 << a)
    }

    /// `{b | f⁻¹(b) ⊆ s}`.
    pub fn forall(&self, s: u64) -> u64 {
        let outside = self.exists(!s & mask(self.f.domain));
        !outside & mask(self.f.codomain)
    }

    /// The interior-style composite `pullback ∘ forall` on subsets of the domain.
    pub fn necessity(&self, s: u64) -> u64 {
        self.pullback(self.forall(s))
    }

    /// The closure-style composite `pullback ∘ exists` on subsets of the domain.
    pub fn possibility(&self, s: u64) -> u64 {
        self.pullback(self.exists(s))
    }

    /// Checks `∃ ⊣ f⁻¹ ⊣ ∀` and `◇ ⊣ □` over all subset pairs.
    pub fn verify(&self) -> Report {
        let (na, nb) = (self.f.domain, self.f.codomain);
        let sub = |x: u64, y: u64| x & !y == 0;
        let mut left = Check::new("exists-left-adjoint-to-pullback");
        let mut right = Check::new("pullback-left-adjoint-to-forall");
        let mut modal = Check::new("possibility-left-adjoint-to-necessity");
        for s in 0..1u64 << na {
            for t in 0..1u64 << nb {
                let w = || vec![format!("S={s:#b}"), format!("T={t:#b}")];
                left.record(sub(s, self.pullback(t)) == sub(self.exists(s), t), w);
                right.record(sub(self.pullback(t), s) == sub(t, self.forall(s)), w);
            }
            for s2 in 0..1u64 << na {
                modal.record(
                    sub(self.possibility(s), s2) == sub(s, self.necessity(s2)),
                    || vec![format!("S={s:#b}"), format!("S'={s2:#b}")],
                );
            }
        }
        Report {
            checks: vec![left, right, modal],
        }
    }
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Builds the quantifier triple of `f`, verifying both adjunctions
/// exhaustively when the subset space is within [`ADJOINT_CHECK_BOUND`].
pub fn quantifier_adjoints(f: &FiniteFunction) -> Result<QuantifierTriple> {
    let pairs = 1u128 << (f.domain + f.codomain);
    let mut triple = QuantifierTriple {
        f: f.clone(),
        exhaustively_checked: false,
    };
    if pairs <= ADJOINT_CHECK_BOUND as u128 {
        let report = triple.verify();
        if let Some(bad) = report.failures().next() {
            return Err(HeytingError::AdjunctionViolated(bad.to_string()));
        }
        triple.exhaustively_checked = true;
    }
    Ok(triple)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> HeytingAlgebra {
        HeytingAlgebra::from_poset(&FinPoset::chain(&["bot", "m", "top"]).unwrap()).unwrap()
    }

    fn diamond() -> FinPoset {
        FinPoset::from_pairs(
            &["bot", "x", "y", "top"],
            &[
                ("bot", "x"),
                ("bot", "y"),
                ("bot", "top"),
                ("x", "top"),
                ("y", "top"),
            ],
        )
        .unwrap()
    }

    /// Implication by brute force from the order alone: meets are found as
    /// greatest lower bounds, then the maximum of `{x | x ∧ q ≤ r}`.
    fn scan_implication(p: &FinPoset, q: Elem, r: Elem) -> Option<Elem> {
        let glb = |a: Elem, b: Elem| {
            let lower: Vec<Elem> = p
                .elements()
                .filter(|&x| p.leq(x, a) && p.leq(x, b))
                .collect();
            lower
                .iter()
                .copied()
                .find(|&x| lower.iter().all(|&y| p.leq(y, x)))
        };
        let set: Vec<Elem> = p
            .elements()
            .filter(|&x| glb(x, q).is_some_and(|m| p.leq(m, r)))
            .collect();
        set.iter()
            .copied()
            .find(|&m| set.iter().all(|&x| p.leq(x, m)))
    }

    #[test]
    fn chain3_implications_match_scan() {
        let h = chain3();
        let p = h.poset();
        let e = |l: &str| h.find(l).unwrap();
        assert_eq!(h.implies(e("m"), e("bot")), e("bot"));
        assert_eq!(h.implies(e("bot"), e("m")), e("top"));
        assert_eq!(h.implies(e("m"), e("m")), e("top"));
        assert_eq!(h.implies(e("top"), e("m")), e("m"));
        for q in h.elements() {
            for r in h.elements() {
                assert_eq!(Some(h.implies(q, r)), scan_implication(&p, q, r));
            }
        }
    }

    #[test]
    fn one_element_algebra_is_degenerate_and_boolean() {
        let h = HeytingAlgebra::from_poset(&FinPoset::chain(&["*"]).unwrap()).unwrap();
        assert_eq!(h.top(), h.bot());
        assert!(is_boolean(&h).unwrap().is_boolean);
        assert!(verify_heyting_laws(&h).passed());
    }

    #[test]
    fn diamond_is_boolean_and_matches_powerset_of_two() {
        let h = HeytingAlgebra::from_poset(&diamond()).unwrap();
        assert!(is_boolean(&h).unwrap().is_boolean);
        let ps = powerset_algebra(&["a", "b"]).unwrap();
        // x ↦ {a}, y ↦ {b} is an isomorphism of the operation tables.
        let iso = |e: Elem| -> Elem {
            match h.label(e).as_str() {
                "bot" => ps.bot(),
                "x" => ps.subset(&["a"]).unwrap(),
                "y" => ps.subset(&["b"]).unwrap(),
                _ => ps.top(),
            }
        };
        for p in h.elements() {
            assert_eq!(iso(h.neg(p)), ps.neg(iso(p)));
            for q in h.elements() {
                assert_eq!(iso(h.meet(p, q)), ps.meet(iso(p), iso(q)));
                assert_eq!(iso(h.join(p, q)), ps.join(iso(p), iso(q)));
                assert_eq!(iso(h.implies(p, q)), ps.implies(iso(p), iso(q)));
            }
        }
    }

    #[test]
    fn powerset_implication_matches_scan_oracle() {
        let ps = powerset_algebra(&["a", "b", "c"]).unwrap();
        let poset = ps.poset();
        for q in ps.elements() {
            for r in ps.elements() {
                assert_eq!(Some(ps.implies(q, r)), scan_implication(&poset, q, r));
            }
        }
        let ab = powerset_algebra(&["a", "b"]).unwrap();
        let a = ab.subset(&["a"]).unwrap();
        let b = ab.subset(&["b"]).unwrap();
        assert_eq!(ab.implies(a, b), b);
        assert_eq!(ab.neg(a), b);
    }

    #[test]
    fn chain3_is_not_boolean_at_m() {
        let h = chain3();
        let m = h.find("m").unwrap();
        let check = is_boolean(&h).unwrap();
        assert!(!check.is_boolean);
        assert_eq!(h.neg(m), h.bot());
        assert_eq!(h.join(m, h.neg(m)), m);
        assert_eq!(check.excluded_middle, Some(m));
        assert_eq!(check.double_negation_fixed, Some(m));
        assert_eq!(check.double_negation_below, Some(m));
    }

    #[test]
    fn laws_hold_on_chain3_and_powerset_of_three() {
        assert!(verify_heyting_laws(&chain3()).passed());
        assert!(verify_heyting_laws(&powerset_algebra(&["a", "b", "c"]).unwrap()).passed());
    }

    #[test]
    fn corrupted_implication_breaks_the_adjunction() {
        let h = chain3();
        let e = |l: &str| h.find(l).unwrap();
        let bad = h
            .with_implication_entry(e("m"), e("bot"), e("top"))
            .unwrap();
        let report = verify_heyting_laws(&bad);
        let adj = report.get("implication-adjunction").unwrap();
        assert!(!adj.passed);
        // The first violation in carrier order is (m, m, bot); (top, m, bot)
        // is another.
        assert_eq!(
            adj.witness.as_deref(),
            Some(&["m".to_string(), "m".into(), "bot".into()][..])
        );
        let at = |p: &str, q: &str, r: &str| {
            let (p, q, r) = (e(p), e(q), e(r));
            let a = bad.leq(bad.meet(p, q), r);
            let b = bad.leq(p, bad.implies(q, r));
            let c = bad.leq(q, bad.implies(p, r));
            a == b && b == c
        };
        assert!(!at("top", "m", "bot"));
        // Negation follows the overwritten entry.
        assert_eq!(bad.neg(e("m")), e("top"));
    }

    #[test]
    fn powerset_sizes_and_limits() {
        let one = powerset_algebra(&["a"]).unwrap();
        assert_eq!(one.len(), 2);
        let empty = powerset_algebra::<&str>(&[]).unwrap();
        assert_eq!(empty.len(), 1);
        assert_eq!(empty.top(), empty.bot());
        assert_eq!(empty.label(empty.top()), "{}");
        let names: Vec<String> = (0..17).map(|i| format!("c{i}")).collect();
        assert!(matches!(
            powerset_algebra(&names),
            Err(HeytingError::SizeLimit { .. })
        ));
        assert!(powerset_algebra(&names[..16]).is_ok());
    }

    #[test]
    fn non_lattices_and_non_heyting_lattices_are_rejected() {
        let two_tops =
            FinPoset::from_pairs(&["bot", "x", "y"], &[("bot", "x"), ("bot", "y")]).unwrap();
        assert!(matches!(
            HeytingAlgebra::from_poset(&two_tops),
            Err(HeytingError::NotALattice { bound: "join", .. })
        ));
        // M3: bot < x, y, z < top is a lattice but not distributive.
        let m3 = FinPoset::from_pairs(
            &["bot", "x", "y", "z", "top"],
            &[
                ("bot", "x"),
                ("bot", "y"),
                ("bot", "z"),
                ("bot", "top"),
                ("x", "top"),
                ("y", "top"),
                ("z", "top"),
            ],
        )
        .unwrap();
        match HeytingAlgebra::from_poset(&m3) {
            Err(HeytingError::NotHeyting { candidates, .. }) => assert!(candidates.len() >= 2),
            other => panic!("expected NotHeyting, got {other:?}"),
        }
    }

    #[test]
    fn invalid_posets_are_rejected() {
        assert!(FinPoset::chain::<&str>(&[]).is_err());
        assert!(FinPoset::chain(&["a", "a"]).is_err());
        // not transitive
        assert!(FinPoset::from_pairs(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).is_err());
        // not antisymmetric
        assert!(FinPoset::from_pairs(&["a", "b"], &[("a", "b"), ("b", "a")]).is_err());
    }

    #[test]
    fn checked_implication_rejects_unknown_elements() {
        let h = chain3();
        assert!(matches!(
            h.implication(Elem(7), h.top()),
            Err(HeytingError::UnknownElement(_))
        ));
    }

    #[test]
    fn quantifiers_along_collapse_and_empty_domain() {
        let f = FiniteFunction::new(1, vec![0, 0]).unwrap();
        let q = quantifier_adjoints(&f).unwrap();
        assert!(q.exhaustively_checked);
        assert_eq!(q.exists(0b01), 0b1);
        assert_eq!(q.forall(0b01), 0);
        assert_eq!(q.forall(0b11), 1);

        let id = quantifier_adjoints(&FiniteFunction::identity(2).unwrap()).unwrap();
        for s in 0..4 {
            assert_eq!(id.exists(s), s);
            assert_eq!(id.forall(s), s);
            assert_eq!(id.pullback(s), s);
        }

        let empty = quantifier_adjoints(&FiniteFunction::new(1, vec![]).unwrap()).unwrap();
        assert_eq!(empty.forall(0), 1);
        assert_eq!(empty.exists(0), 0);
    }

    #[test]
    fn quantifier_adjunctions_hold_for_all_small_functions() {
        for na in 0..=3usize {
            for nb in 1..=3usize {
                let total = nb.pow(na as u32);
                for code in 0..total {
                    let mut c = code;
                    let map = (0..na)
                        .map(|_| {
                            let v = c % nb;
                            c /= nb;
                            v
                        })
                        .collect();
                    let f = FiniteFunction::new(nb, map).unwrap();
                    let q = quantifier_adjoints(&f).unwrap();
                    assert!(q.verify().passed());
                    for s in 0..1u64 << na {
                        assert_eq!(q.necessity(s) & !s, 0, "necessity is deflationary");
                        assert_eq!(q.possibility(s) & s, s, "possibility is inflationary");
                    }
                }
            }
        }
    }
}
