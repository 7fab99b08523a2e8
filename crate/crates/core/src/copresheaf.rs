//! The finite copresheaf topos `[C, FinSet]`: Ω as cosieves, classifying maps,
//! subobject algebras and Kripke-Joyal forcing at representable stages.

use crate::fincat::{cosieve_transition, cosieves_at, Arr, Cosieve, FinCatError, FinCategory, Obj};
use crate::heyting::{Elem, FinPoset, HeytingAlgebra, HeytingError};
use crate::protocol::{Protocol, ProtocolError};
use crate::report::{Check, Report};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

/// Bound on the total element count of a copresheaf whose subobjects are
/// enumerated.
pub const SUBOBJECT_ELEMENT_LIMIT: usize = 20;
/// Bound on the number of candidate natural transformations examined.
pub const NAT_TRANS_SEARCH_LIMIT: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CopresheafError {
    #[error(transparent)]
    Category(#[from] FinCatError),
    #[error(transparent)]
    Heyting(#[from] HeytingError),
    #[error("invalid copresheaf: {0}")]
    InvalidCopresheaf(String),
    #[error("subobject is not closed under the action at {0:?}")]
    InvalidSubobject(Vec<String>),
    #[error("naturality fails at {0:?}")]
    NotNatural(Vec<String>),
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("malformed formula: {0}")]
    MalformedFormula(String),
    #[error("copresheaves live over different categories")]
    BaseMismatch,
    #[error("size limit exceeded: {what} needs {requested}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        requested: u64,
        limit: u64,
    },
}

pub type Result<T> = std::result::Result<T, CopresheafError>;

/// A functor `C → FinSet`. Elements of `X(c)` are indices `0..size(c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Copresheaf {
    base: Arc<FinCategory>,
    labels: Vec<Vec<String>>,
    // action[f][x] = f·x for x in X(dom f)
    action: Vec<Vec<usize>>,
}

impl Copresheaf {
    /// Checks shapes only; see [`Copresheaf::validate`] for the functor laws.
    pub fn new_unchecked(
        base: Arc<FinCategory>,
        labels: Vec<Vec<String>>,
        action: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if labels.len() != base.num_objects() || action.len() != base.num_arrows() {
            return Err(CopresheafError::InvalidCopresheaf(
                "one value per object and one action per arrow required".into(),
            ));
        }
        for f in base.arrows() {
            let (c, d) = (base.dom(f), base.cod(f));
            let row = &action[f.0];
            if row.len() != labels[c.0].len() || row.iter().any(|&y| y >= labels[d.0].len()) {
                return Err(CopresheafError::InvalidCopresheaf(format!(
                    "action of {} has the wrong shape",
                    base.arrow_name(f)
                )));
            }
        }
        Ok(Copresheaf {
            base,
            labels,
            action,
        })
    }

    pub fn new(
        base: Arc<FinCategory>,
        labels: Vec<Vec<String>>,
        action: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let x = Self::new_unchecked(base, labels, action)?;
        if let Some(bad) = x.validate().failures().next() {
            return Err(CopresheafError::InvalidCopresheaf(bad.to_string()));
        }
        Ok(x)
    }

    /// The terminal copresheaf: one element `*` everywhere.
    pub fn terminal(base: &Arc<FinCategory>) -> Self {
        Copresheaf {
            base: base.clone(),
            labels: vec![vec!["*".to_string()]; base.num_objects()],
            action: vec![vec![0]; base.num_arrows()],
        }
    }

    /// `C(w, −)`, acting by postcomposition. Elements are labelled by arrow name.
    pub fn representable(
        base: &Arc<FinCategory>,
        w: Obj,
    ) -> std::result::Result<Self, FinCatError> {
        base.check_object(w)?;
        let homs: Vec<Vec<Arr>> = base.objects().map(|x| base.hom(w, x).collect()).collect();
        let position: HashMap<Arr, usize> = homs
            .iter()
            .flat_map(|h| h.iter().enumerate().map(|(i, &a)| (a, i)))
            .collect();
        let mut action = Vec::with_capacity(base.num_arrows());
        for f in base.arrows() {
            let row = homs[base.dom(f).0]
                .iter()
                .map(|&g| {
                    let fg = base
                        .compose(f, g)
                        .ok_or_else(|| FinCatError::NotACategory("composition not total".into()))?;
                    Ok(position[&fg])
                })
                .collect::<std::result::Result<Vec<_>, FinCatError>>()?;
            action.push(row);
        }
        let labels = homs
            .iter()
            .map(|h| h.iter().map(|&a| base.arrow_name(a).to_string()).collect())
            .collect();
        Ok(Copresheaf {
            base: base.clone(),
            labels,
            action,
        })
    }

    pub fn base(&self) -> &Arc<FinCategory> {
        &self.base
    }

    pub fn size(&self, c: Obj) -> usize {
        self.labels[c.0].len()
    }

    pub fn total_size(&self) -> usize {
        self.labels.iter().map(Vec::len).sum()
    }

    pub fn labels(&self, c: Obj) -> &[String] {
        &self.labels[c.0]
    }

    pub fn label(&self, c: Obj, x: usize) -> &str {
        &self.labels[c.0][x]
    }

    pub fn find(&self, c: Obj, label: &str) -> Option<usize> {
        self.labels[c.0].iter().position(|l| l == label)
    }

    /// `f·x` for `x ∈ X(dom f)`.
    pub fn act(&self, f: Arr, x: usize) -> usize {
        self.action[f.0][x]
    }

    pub fn check_element(&self, c: Obj, x: usize) -> Result<()> {
        self.base.check_object(c)?;
        if x < self.size(c) {
            Ok(())
        } else {
            Err(CopresheafError::UnknownElement(format!(
                "#{x} at {}",
                self.base.object_name(c)
            )))
        }
    }

    /// Identity and composition laws of the action.
    pub fn validate(&self) -> Report {
        let cat = &*self.base;
        let mut ident = Check::new("action-identity");
        for c in cat.objects() {
            let id = cat.identity(c);
            for x in 0..self.size(c) {
                ident.record(self.act(id, x) == x, || {
                    vec![cat.object_name(c).to_string(), self.label(c, x).to_string()]
                });
            }
        }
        let mut comp = Check::new("action-composition");
        for f in cat.arrows() {
            for &g in cat.out_arrows(cat.cod(f)) {
                let Some(gf) = cat.compose(g, f) else {
                    continue;
                };
                for x in 0..self.size(cat.dom(f)) {
                    comp.record(self.act(gf, x) == self.act(g, self.act(f, x)), || {
                        vec![
                            cat.arrow_name(g).to_string(),
                            cat.arrow_name(f).to_string(),
                            self.label(cat.dom(f), x).to_string(),
                        ]
                    });
                }
            }
        }
        Report {
            checks: vec![ident, comp],
        }
    }
}

/// The subobject classifier: `Ω(c)` is the list of cosieves on `c`.
#[derive(Clone, Debug)]
pub struct Omega {
    pub presheaf: Arc<Copresheaf>,
    cosieves: Vec<Vec<Cosieve>>,
    index: Vec<HashMap<u64, usize>>,
}

impl Omega {
    pub fn base(&self) -> &Arc<FinCategory> {
        self.presheaf.base()
    }

    pub fn cosieves(&self, c: Obj) -> &[Cosieve] {
        &self.cosieves[c.0]
    }

    pub fn cosieve(&self, c: Obj, idx: usize) -> Cosieve {
        self.cosieves[c.0][idx]
    }

    /// Index of a cosieve in `Ω(base)`.
    pub fn index_of(&self, s: &Cosieve) -> usize {
        self.index[s.base.0][&s.mask]
    }

    pub fn total(&self, c: Obj) -> usize {
        self.cosieves[c.0].len() - 1
    }

    pub fn is_total(&self, c: Obj, idx: usize) -> bool {
        idx == self.total(c)
    }

    /// The proposition `X → Ω` that is constantly total.
    pub fn top(&self, x: &Arc<Copresheaf>) -> NatTrans {
        let components = x
            .base()
            .objects()
            .map(|c| vec![self.total(c); x.size(c)])
            .collect();
        NatTrans {
            source: x.clone(),
            target: self.presheaf.clone(),
            components,
        }
    }

    pub fn bottom(&self, x: &Arc<Copresheaf>) -> NatTrans {
        NatTrans {
            source: x.clone(),
            target: self.presheaf.clone(),
            components: x.base().objects().map(|c| vec![0; x.size(c)]).collect(),
        }
    }
}

/// `Ω` over `cat`; values are cosieves, the action is cosieve transition.
pub fn omega(cat: &Arc<FinCategory>) -> Result<Omega> {
    let mut cosieves = Vec::new();
    let mut index = Vec::new();
    for c in cat.objects() {
        let all = cosieves_at(cat, c)?;
        index.push(
            all.iter()
                .enumerate()
                .map(|(i, s)| (s.mask, i))
                .collect::<HashMap<_, _>>(),
        );
        cosieves.push(all);
    }
    let labels = cosieves
        .iter()
        .map(|v| v.iter().map(|s| s.label(cat)).collect())
        .collect();
    let mut action = Vec::new();
    for f in cat.arrows() {
        let d = cat.cod(f);
        let row = cosieves[cat.dom(f).0]
            .iter()
            .map(|r| Ok(index[d.0][&cosieve_transition(cat, r, f)?.mask]))
            .collect::<std::result::Result<Vec<_>, FinCatError>>()?;
        action.push(row);
    }
    Ok(Omega {
        presheaf: Arc::new(Copresheaf::new_unchecked(cat.clone(), labels, action)?),
        cosieves,
        index,
    })
}

/// A natural transformation between copresheaves on the same base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatTrans {
    source: Arc<Copresheaf>,
    target: Arc<Copresheaf>,
    components: Vec<Vec<usize>>,
}

impl NatTrans {
    pub fn new_unchecked(
        source: Arc<Copresheaf>,
        target: Arc<Copresheaf>,
        components: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if source.base() != target.base() {
            return Err(CopresheafError::BaseMismatch);
        }
        let cat = source.base();
        if components.len() != cat.num_objects()
            || cat.objects().any(|c| {
                components[c.0].len() != source.size(c)
                    || components[c.0].iter().any(|&y| y >= target.size(c))
            })
        {
            return Err(CopresheafError::InvalidCopresheaf(
                "components have the wrong shape".into(),
            ));
        }
        Ok(NatTrans {
            source,
            target,
            components,
        })
    }

    pub fn new(
        source: Arc<Copresheaf>,
        target: Arc<Copresheaf>,
        components: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let t = Self::new_unchecked(source, target, components)?;
        t.ensure_natural()?;
        Ok(t)
    }

    pub fn source(&self) -> &Arc<Copresheaf> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Copresheaf> {
        &self.target
    }

    pub fn component(&self, c: Obj, x: usize) -> usize {
        self.components[c.0][x]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// First square `α_d(f·x) ≠ f·α_c(x)`, as `(arrow, element)` labels.
    pub fn naturality_witness(&self) -> Option<Vec<String>> {
        let cat = self.source.base();
        for f in cat.arrows() {
            let (c, d) = (cat.dom(f), cat.cod(f));
            for x in 0..self.source.size(c) {
                let lhs = self.components[d.0][self.source.act(f, x)];
                let rhs = self.target.act(f, self.components[c.0][x]);
                if lhs != rhs {
                    return Some(vec![
                        cat.arrow_name(f).to_string(),
                        self.source.label(c, x).to_string(),
                    ]);
                }
            }
        }
        None
    }

    pub fn is_natural(&self) -> bool {
        self.naturality_witness().is_none()
    }

    pub fn ensure_natural(&self) -> Result<()> {
        match self.naturality_witness() {
            Some(w) => Err(CopresheafError::NotNatural(w)),
            None => Ok(()),
        }
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &NatTrans) -> Result<NatTrans> {
        if first.target != self.source {
            return Err(CopresheafError::BaseMismatch);
        }
        let components = first
            .components
            .iter()
            .enumerate()
            .map(|(c, row)| row.iter().map(|&y| self.components[c][y]).collect())
            .collect();
        Ok(NatTrans {
            source: first.source.clone(),
            target: self.target.clone(),
            components,
        })
    }
}

/// All natural transformations `X → Y`, in lexicographic component order.
pub fn natural_transformations(x: &Arc<Copresheaf>, y: &Arc<Copresheaf>) -> Result<Vec<NatTrans>> {
    natural_transformations_with_limit(x, y, NAT_TRANS_SEARCH_LIMIT)
}

/// As [`natural_transformations`], failing once `limit` partial
/// assignments have been explored.
pub fn natural_transformations_with_limit(
    x: &Arc<Copresheaf>,
    y: &Arc<Copresheaf>,
    limit: u64,
) -> Result<Vec<NatTrans>> {
    if x.base() != y.base() {
        return Err(CopresheafError::BaseMismatch);
    }
    let cat = x.base();
    // flat element order: by object, then by element
    let slots: Vec<(Obj, usize)> = cat
        .objects()
        .flat_map(|c| (0..x.size(c)).map(move |e| (c, e)))
        .collect();
    let mut offset = vec![0; cat.num_objects()];
    for c in 1..cat.num_objects() {
        offset[c] = offset[c - 1] + x.size(Obj(c - 1));
    }
    // squares (f, source slot, target slot), checked once both slots are set
    let mut checks: Vec<Vec<(Arr, usize, usize)>> = vec![Vec::new(); slots.len()];
    for f in cat.arrows() {
        let (c, d) = (cat.dom(f), cat.cod(f));
        for e in 0..x.size(c) {
            let (i, j) = (offset[c.0] + e, offset[d.0] + x.act(f, e));
            checks[i.max(j)].push((f, i, j));
        }
    }
    struct Search<'a> {
        y: &'a Copresheaf,
        slots: &'a [(Obj, usize)],
        checks: &'a [Vec<(Arr, usize, usize)>],
        value: Vec<usize>,
        visited: u64,
        limit: u64,
        found: Vec<Vec<usize>>,
    }
    impl Search<'_> {
        fn go(&mut self, k: usize) -> Result<()> {
            if k == self.slots.len() {
                self.found.push(self.value.clone());
                return Ok(());
            }
            let c = self.slots[k].0;
            for v in 0..self.y.size(c) {
                self.visited += 1;
                if self.visited > self.limit {
                    return Err(CopresheafError::SizeLimit {
                        what: "natural transformation search",
                        requested: self.visited,
                        limit: self.limit,
                    });
                }
                self.value[k] = v;
                let ok = self.checks[k]
                    .iter()
                    .all(|&(f, i, j)| self.value[j] == self.y.act(f, self.value[i]));
                if ok {
                    self.go(k + 1)?;
                }
            }
            Ok(())
        }
    }
    let mut search = Search {
        y,
        slots: &slots,
        checks: &checks,
        value: vec![0; slots.len()],
        visited: 0,
        limit,
        found: Vec::new(),
    };
    search.go(0)?;
    Ok(search
        .found
        .into_iter()
        .map(|flat| NatTrans {
            source: x.clone(),
            target: y.clone(),
            components: cat
                .objects()
                .map(|c| flat[offset[c.0]..offset[c.0] + x.size(c)].to_vec())
                .collect(),
        })
        .collect())
}

/// A subcopresheaf: a fiberwise selection closed under the action.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subobject {
    selection: Vec<Vec<bool>>,
}

impl Subobject {
    pub fn new(parent: &Copresheaf, selection: Vec<Vec<bool>>) -> Result<Self> {
        let cat = parent.base();
        if selection.len() != cat.num_objects()
            || cat
                .objects()
                .any(|c| selection[c.0].len() != parent.size(c))
        {
            return Err(CopresheafError::InvalidSubobject(vec!["shape".into()]));
        }
        for f in cat.arrows() {
            let c = cat.dom(f);
            for x in 0..parent.size(c) {
                if selection[c.0][x] && !selection[cat.cod(f).0][parent.act(f, x)] {
                    return Err(CopresheafError::InvalidSubobject(vec![
                        cat.arrow_name(f).to_string(),
                        parent.label(c, x).to_string(),
                    ]));
                }
            }
        }
        Ok(Subobject { selection })
    }

    /// Subobject from element labels per object name.
    pub fn from_labels(parent: &Copresheaf, members: &[(&str, &str)]) -> Result<Self> {
        let cat = parent.base();
        let mut selection: Vec<Vec<bool>> =
            cat.objects().map(|c| vec![false; parent.size(c)]).collect();
        for (obj, label) in members {
            let c = cat.object(obj)?;
            let x = parent
                .find(c, label)
                .ok_or_else(|| CopresheafError::UnknownElement(format!("{label} at {obj}")))?;
            selection[c.0][x] = true;
        }
        Self::new(parent, selection)
    }

    pub fn full(parent: &Copresheaf) -> Self {
        Subobject {
            selection: parent
                .base()
                .objects()
                .map(|c| vec![true; parent.size(c)])
                .collect(),
        }
    }

    pub fn empty(parent: &Copresheaf) -> Self {
        Subobject {
            selection: parent
                .base()
                .objects()
                .map(|c| vec![false; parent.size(c)])
                .collect(),
        }
    }

    /// Largest subobject inside an arbitrary fiberwise predicate:
    /// `x` is kept iff `f·x` satisfies it for every `f` out of its stage.
    pub fn interior<P>(parent: &Copresheaf, pred: P) -> Self
    where
        P: Fn(Obj, usize) -> bool,
    {
        let cat = parent.base();
        let selection = cat
            .objects()
            .map(|c| {
                (0..parent.size(c))
                    .map(|x| {
                        cat.out_arrows(c)
                            .iter()
                            .all(|&f| pred(cat.cod(f), parent.act(f, x)))
                    })
                    .collect()
            })
            .collect();
        Subobject { selection }
    }

    pub fn contains(&self, c: Obj, x: usize) -> bool {
        self.selection[c.0][x]
    }

    pub fn selection(&self) -> &[Vec<bool>] {
        &self.selection
    }

    pub fn leq(&self, other: &Subobject) -> bool {
        self.zip(other).all(|(a, b)| !a || b)
    }

    fn zip<'a>(&'a self, other: &'a Subobject) -> impl Iterator<Item = (bool, bool)> + 'a {
        self.selection
            .iter()
            .flatten()
            .zip(other.selection.iter().flatten())
            .map(|(&a, &b)| (a, b))
    }

    fn pointwise(&self, other: &Subobject, op: impl Fn(bool, bool) -> bool) -> Subobject {
        Subobject {
            selection: self
                .selection
                .iter()
                .zip(&other.selection)
                .map(|(r, s)| r.iter().zip(s).map(|(&a, &b)| op(a, b)).collect())
                .collect(),
        }
    }

    pub fn meet(&self, other: &Subobject) -> Subobject {
        self.pointwise(other, |a, b| a && b)
    }

    pub fn join(&self, other: &Subobject) -> Subobject {
        self.pointwise(other, |a, b| a || b)
    }

    /// `x ∈ (S ⇒ T)(c)` iff for every `f` out of `c`, `f·x ∈ S` implies `f·x ∈ T`.
    pub fn implies(&self, other: &Subobject, parent: &Copresheaf) -> Subobject {
        Subobject::interior(parent, |d, y| !self.contains(d, y) || other.contains(d, y))
    }

    pub fn neg(&self, parent: &Copresheaf) -> Subobject {
        self.implies(&Subobject::empty(parent), parent)
    }

    pub fn label(&self, parent: &Copresheaf) -> String {
        let cat = parent.base();
        let members: Vec<String> = cat
            .objects()
            .flat_map(|c| {
                (0..parent.size(c))
                    .filter(move |&x| self.contains(c, x))
                    .map(move |x| format!("{}:{}", cat.object_name(c), parent.label(c, x)))
            })
            .collect();
        format!("{{{}}}", members.join(","))
    }
}

/// `χ_c(x) = {f: c → d | f·x ∈ S(d)}`.
pub fn classify(parent: &Arc<Copresheaf>, s: &Subobject, omega: &Omega) -> Result<NatTrans> {
    Subobject::new(parent, s.selection.clone())?;
    let cat = parent.base();
    if cat != omega.base() {
        return Err(CopresheafError::BaseMismatch);
    }
    let components = cat
        .objects()
        .map(|c| {
            (0..parent.size(c))
                .map(|x| {
                    let mask = cat
                        .out_arrows(c)
                        .iter()
                        .enumerate()
                        .filter(|(_, &f)| s.contains(cat.cod(f), parent.act(f, x)))
                        .fold(0u64, |m, (i, _)| m | 1 << i);
                    omega.index_of(&Cosieve { base: c, mask })
                })
                .collect()
        })
        .collect();
    Ok(NatTrans {
        source: parent.clone(),
        target: omega.presheaf.clone(),
        components,
    })
}

/// `S(c) = {x | φ_c(x) = 𝔱_c}`.
pub fn comprehension(phi: &NatTrans, omega: &Omega) -> Result<Subobject> {
    check_proposition(phi, omega)?;
    phi.ensure_natural()?;
    let x = phi.source();
    Ok(Subobject {
        selection: x
            .base()
            .objects()
            .map(|c| {
                (0..x.size(c))
                    .map(|e| omega.is_total(c, phi.component(c, e)))
                    .collect()
            })
            .collect(),
    })
}

fn check_proposition(phi: &NatTrans, omega: &Omega) -> Result<()> {
    if phi.target() != &omega.presheaf {
        return Err(CopresheafError::BaseMismatch);
    }
    Ok(())
}

/// Every subobject of `X`, in increasing order of the flattened selection mask.
pub fn subobjects(x: &Copresheaf) -> Result<Vec<Subobject>> {
    let total = x.total_size();
    if total > SUBOBJECT_ELEMENT_LIMIT {
        return Err(CopresheafError::SizeLimit {
            what: "subobject enumeration elements",
            requested: total as u64,
            limit: SUBOBJECT_ELEMENT_LIMIT as u64,
        });
    }
    let cat = x.base();
    let mut offset = vec![0; cat.num_objects()];
    for c in 1..cat.num_objects() {
        offset[c] = offset[c - 1] + x.size(Obj(c - 1));
    }
    // up[i]: flat indices reachable from flat element i
    let mut up = vec![0u64; total];
    for c in cat.objects() {
        for e in 0..x.size(c) {
            for &f in cat.out_arrows(c) {
                up[offset[c.0] + e] |= 1 << (offset[cat.cod(f).0] + x.act(f, e));
            }
        }
    }
    let mut out = Vec::new();
    for mask in 0..(1u64 << total) {
        if (0..total).all(|i| mask >> i & 1 == 0 || up[i] & !mask == 0) {
            let selection = cat
                .objects()
                .map(|c| {
                    (0..x.size(c))
                        .map(|e| mask >> (offset[c.0] + e) & 1 == 1)
                        .collect()
                })
                .collect();
            out.push(Subobject { selection });
        }
    }
    Ok(out)
}

/// `Sub(X)` as an explicit Heyting algebra.
#[derive(Clone, Debug)]
pub struct SubobjectAlgebra {
    pub parent: Arc<Copresheaf>,
    pub algebra: HeytingAlgebra,
    subobjects: Vec<Subobject>,
    index: HashMap<Subobject, Elem>,
}

impl SubobjectAlgebra {
    pub fn element(&self, s: &Subobject) -> Option<Elem> {
        self.index.get(s).copied()
    }

    pub fn subobject(&self, e: Elem) -> &Subobject {
        &self.subobjects[e.0]
    }

    pub fn len(&self) -> usize {
        self.subobjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subobjects.is_empty()
    }
}

/// Heyting algebra of subobjects: pointwise meet and join, implication by the
/// future-quantified clause. Laws are not assumed; see `verify_heyting_laws`.
pub fn sub_heyting_ops(x: &Arc<Copresheaf>) -> Result<SubobjectAlgebra> {
    let subs = subobjects(x)?;
    let labels: Vec<String> = subs.iter().map(|s| s.label(x)).collect();
    let poset = FinPoset::from_relation(&labels, |a, b| subs[a].leq(&subs[b]))?;
    // reorder to the poset's sorted element order
    let mut ordered = vec![Subobject::empty(x); subs.len()];
    for (s, l) in subs.into_iter().zip(&labels) {
        let e = poset.find(l).expect("label present");
        ordered[e.0] = s;
    }
    let index: HashMap<Subobject, Elem> = ordered
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), Elem(i)))
        .collect();
    let n = ordered.len();
    let (mut meet, mut join, mut imp) = (Vec::new(), Vec::new(), Vec::new());
    for a in &ordered {
        for b in &ordered {
            meet.push(index[&a.meet(b)]);
            join.push(index[&a.join(b)]);
            imp.push(index[&a.implies(b, x)]);
        }
    }
    debug_assert_eq!(meet.len(), n * n);
    let algebra = HeytingAlgebra::from_operation_tables(&poset, meet, join, imp)?;
    Ok(SubobjectAlgebra {
        parent: x.clone(),
        algebra,
        subobjects: ordered,
        index,
    })
}

/// `c ⊩ φ(a)` iff `φ_c(a)` is the total cosieve on `c`.
pub fn forces(c: Obj, phi: &NatTrans, a: usize, omega: &Omega) -> Result<bool> {
    check_proposition(phi, omega)?;
    phi.source().check_element(c, a)?;
    Ok(omega.is_total(c, phi.component(c, a)))
}

/// Propositional formulas over atoms `φ_0, φ_1, …: X → Ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Top,
    Bot,
    Atom(usize),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn atom(i: usize) -> Self {
        Formula::Atom(i)
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn negation(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    fn max_atom(&self) -> Option<usize> {
        match self {
            Formula::Top | Formula::Bot => None,
            Formula::Atom(i) => Some(*i),
            Formula::Not(a) => a.max_atom(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.max_atom().max(b.max_atom())
            }
        }
    }
}

fn check_atoms(formula: &Formula, atoms: &[NatTrans], omega: &Omega) -> Result<()> {
    if let Some(i) = formula.max_atom() {
        if i >= atoms.len() {
            return Err(CopresheafError::MalformedFormula(format!(
                "atom {i} with only {} propositions",
                atoms.len()
            )));
        }
    }
    if let Some(first) = atoms.first() {
        if atoms.iter().any(|p| p.source() != first.source()) {
            return Err(CopresheafError::MalformedFormula(
                "propositions have different domains".into(),
            ));
        }
    }
    for p in atoms {
        check_proposition(p, omega)?;
    }
    Ok(())
}

/// Kripke-Joyal evaluation of `c ⊩ formula(a)` at representable stages.
pub fn eval_formula(
    c: Obj,
    formula: &Formula,
    atoms: &[NatTrans],
    a: usize,
    omega: &Omega,
) -> Result<bool> {
    check_atoms(formula, atoms, omega)?;
    let x = match atoms.first() {
        Some(p) => p.source().clone(),
        None if formula.max_atom().is_none() => {
            return Ok(eval_closed(formula));
        }
        None => unreachable!("checked above"),
    };
    x.check_element(c, a)?;
    Ok(eval_at(c, formula, atoms, a, &x, omega))
}

fn eval_closed(formula: &Formula) -> bool {
    // without atoms every stage agrees, and ⇒ is classical on {⊤, ⊥}
    match formula {
        Formula::Top => true,
        Formula::Bot | Formula::Atom(_) => false,
        Formula::And(a, b) => eval_closed(a) && eval_closed(b),
        Formula::Or(a, b) => eval_closed(a) || eval_closed(b),
        Formula::Implies(a, b) => !eval_closed(a) || eval_closed(b),
        Formula::Not(a) => !eval_closed(a),
    }
}

fn eval_at(
    c: Obj,
    formula: &Formula,
    atoms: &[NatTrans],
    a: usize,
    x: &Copresheaf,
    omega: &Omega,
) -> bool {
    let cat = x.base();
    match formula {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Atom(i) => omega.is_total(c, atoms[*i].component(c, a)),
        Formula::And(p, q) => {
            eval_at(c, p, atoms, a, x, omega) && eval_at(c, q, atoms, a, x, omega)
        }
        Formula::Or(p, q) => eval_at(c, p, atoms, a, x, omega) || eval_at(c, q, atoms, a, x, omega),
        Formula::Implies(p, q) => cat.out_arrows(c).iter().all(|&f| {
            let (d, b) = (cat.cod(f), x.act(f, a));
            !eval_at(d, p, atoms, b, x, omega) || eval_at(d, q, atoms, b, x, omega)
        }),
        Formula::Not(p) => cat
            .out_arrows(c)
            .iter()
            .all(|&f| !eval_at(cat.cod(f), p, atoms, x.act(f, a), x, omega)),
    }
}

/// The subobject a formula denotes, built from comprehensions with the
/// subobject-lattice operations. Independent of [`eval_formula`].
pub fn formula_subobject(
    parent: &Arc<Copresheaf>,
    formula: &Formula,
    atoms: &[NatTrans],
    omega: &Omega,
) -> Result<Subobject> {
    check_atoms(formula, atoms, omega)?;
    if atoms.iter().any(|p| p.source() != parent) {
        return Err(CopresheafError::MalformedFormula(
            "propositions are not on the given copresheaf".into(),
        ));
    }
    let comps = atoms
        .iter()
        .map(|p| comprehension(p, omega))
        .collect::<Result<Vec<_>>>()?;
    fn build(f: &Formula, comps: &[Subobject], x: &Copresheaf) -> Subobject {
        match f {
            Formula::Top => Subobject::full(x),
            Formula::Bot => Subobject::empty(x),
            Formula::Atom(i) => comps[*i].clone(),
            Formula::And(a, b) => build(a, comps, x).meet(&build(b, comps, x)),
            Formula::Or(a, b) => build(a, comps, x).join(&build(b, comps, x)),
            Formula::Implies(a, b) => build(a, comps, x).implies(&build(b, comps, x), x),
            Formula::Not(a) => build(a, comps, x).neg(x),
        }
    }
    Ok(build(formula, &comps, parent))
}

/// `w ⊩ (x ⇒ p)(id_w)` over `Σ(w, −)`: the executions out of `w` whose
/// every continuation lands at an estimate `e` with `e ⇒ p = ⊤` form a
/// subobject, and `w` forces its classifying map at the identity.
pub fn elementary_safety_forcing(
    protocol: &Protocol,
    p: Elem,
    w: Obj,
) -> std::result::Result<bool, ProtocolError> {
    protocol.check_state(w)?;
    protocol.check_proposition(p)?;
    let h = protocol.algebra();
    let sigma = protocol.sigma();
    forcing_at_identity(sigma, w, |v| h.implies(protocol.estimate(v), p) == h.top())
        .map_err(ProtocolError::from)
}

/// `w ⊩ χ(id_w)` where `χ` classifies the interior of `{f | pred(cod f)}`
/// inside the representable `Σ(w, −)`.
pub fn forcing_at_identity<P>(sigma: &Arc<FinCategory>, w: Obj, pred: P) -> Result<bool>
where
    P: Fn(Obj) -> bool,
{
    let x = Arc::new(Copresheaf::representable(sigma, w)?);
    let om = omega(sigma)?;
    let s = Subobject::interior(&x, |v, _| pred(v));
    let chi = classify(&x, &s, &om)?;
    let id = x
        .find(w, sigma.arrow_name(sigma.identity(w)))
        .expect("identity is an element of the representable");
    forces(w, &chi, id, &om)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::category_from_dag;
    use crate::heyting::{is_boolean, verify_heyting_laws};

    fn cat2() -> Arc<FinCategory> {
        Arc::new(category_from_dag(&["a", "b"], &[("h", "a", "b")]).unwrap())
    }

    fn p0_sigma() -> Arc<FinCategory> {
        Arc::new(
            category_from_dag(&["w1", "w2", "w3"], &[("f", "w1", "w3"), ("g", "w2", "w3")])
                .unwrap(),
        )
    }

    fn p1_sigma() -> Arc<FinCategory> {
        Arc::new(category_from_dag(&["v1", "v2"], &[("e", "v1", "v2")]).unwrap())
    }

    fn obj(c: &FinCategory, n: &str) -> Obj {
        c.object(n).unwrap()
    }

    #[test]
    fn omega_sizes() {
        let c = cat2();
        let om = omega(&c).unwrap();
        assert_eq!(om.presheaf.size(obj(&c, "a")), 3);
        assert_eq!(om.presheaf.size(obj(&c, "b")), 2);
        assert!(om.presheaf.validate().passed());
        let t = Arc::new(FinCategory::terminal());
        assert_eq!(omega(&t).unwrap().presheaf.size(Obj(0)), 2);
        let s = p0_sigma();
        let om = omega(&s).unwrap();
        let sizes: Vec<usize> = s.objects().map(|w| om.presheaf.size(w)).collect();
        assert_eq!(sizes, vec![3, 3, 2]);
    }

    #[test]
    fn representables() {
        let s = p0_sigma();
        let x = Copresheaf::representable(&s, obj(&s, "w1")).unwrap();
        assert_eq!(x.labels(obj(&s, "w1")), ["id_w1"]);
        assert!(x.labels(obj(&s, "w2")).is_empty());
        assert_eq!(x.labels(obj(&s, "w3")), ["f"]);
        assert!(x.validate().passed());
        let y = Copresheaf::representable(&s, obj(&s, "w3")).unwrap();
        assert_eq!(y.total_size(), 1);
        let p1 = p1_sigma();
        let z = Copresheaf::representable(&p1, obj(&p1, "v1")).unwrap();
        assert_eq!(z.labels(obj(&p1, "v2")), ["e"]);
        assert!(matches!(
            Copresheaf::representable(&p1, Obj(7)),
            Err(FinCatError::UnknownObject(_))
        ));
    }

    #[test]
    fn classify_examples() {
        let s = p0_sigma();
        let om = omega(&s).unwrap();
        let x = Arc::new(Copresheaf::representable(&s, obj(&s, "w1")).unwrap());
        let chi = classify(&x, &Subobject::full(&x), &om).unwrap();
        assert_eq!(chi, om.top(&x));

        let c = cat2();
        let om = omega(&c).unwrap();
        let ya = Arc::new(Copresheaf::representable(&c, obj(&c, "a")).unwrap());
        let chi = classify(&ya, &Subobject::empty(&ya), &om).unwrap();
        assert_eq!(
            om.cosieve(obj(&c, "a"), chi.component(obj(&c, "a"), 0))
                .mask,
            0
        );

        let w = om.presheaf.clone();
        let true_only = Subobject::from_labels(&w, &[("a", "{id_a,h}"), ("b", "{id_b}")]).unwrap();
        let chi = classify(&w, &true_only, &om).unwrap();
        let a = obj(&c, "a");
        let value = |label: &str| {
            om.cosieve(a, chi.component(a, w.find(a, label).unwrap()))
                .label(&c)
        };
        assert_eq!(value("{}"), "{}");
        assert_eq!(value("{h}"), "{h}");
        assert_eq!(value("{id_a,h}"), "{id_a,h}");
        assert_eq!(comprehension(&chi, &om).unwrap(), true_only);

        assert!(!forces(a, &chi, w.find(a, "{h}").unwrap(), &om).unwrap());
        assert!(forces(a, &chi, w.find(a, "{id_a,h}").unwrap(), &om).unwrap());
        let top = om.top(&w);
        assert_eq!(comprehension(&top, &om).unwrap(), Subobject::full(&w));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let c = cat2();
        let om = omega(&c).unwrap();
        let w = om.presheaf.clone();
        assert!(matches!(
            Subobject::from_labels(&w, &[("a", "{id_a,h}")]),
            Err(CopresheafError::InvalidSubobject(_))
        ));
        let broken =
            NatTrans::new_unchecked(w.clone(), w.clone(), vec![vec![2, 2, 2], vec![0, 0]]).unwrap();
        assert!(matches!(
            comprehension(&broken, &om),
            Err(CopresheafError::NotNatural(_))
        ));
        let foreign = omega(&Arc::new(FinCategory::terminal())).unwrap();
        assert!(matches!(
            comprehension(&om.top(&w), &foreign),
            Err(CopresheafError::BaseMismatch)
        ));
        let not_natural = NatTrans::new_unchecked(
            Arc::new(Copresheaf::terminal(&c)),
            w.clone(),
            vec![vec![2], vec![0]],
        )
        .unwrap();
        assert!(matches!(
            comprehension(&not_natural, &om),
            Err(CopresheafError::NotNatural(_))
        ));
        assert!(matches!(
            forces(Obj(0), &om.top(&w), 9, &om),
            Err(CopresheafError::UnknownElement(_))
        ));
    }

    fn assert_bijection(x: &Arc<Copresheaf>, om: &Omega) {
        let subs = subobjects(x).unwrap();
        let props = natural_transformations(x, &om.presheaf).unwrap();
        assert_eq!(subs.len(), props.len());
        for s in &subs {
            let chi = classify(x, s, om).unwrap();
            assert!(chi.is_natural());
            assert_eq!(&comprehension(&chi, om).unwrap(), s);
        }
        for p in &props {
            assert_eq!(&classify(x, &comprehension(p, om).unwrap(), om).unwrap(), p);
        }
    }

    #[test]
    fn classify_comprehension_bijection_on_small_copresheaves() {
        for cat in [
            cat2(),
            p0_sigma(),
            p1_sigma(),
            Arc::new(FinCategory::terminal()),
        ] {
            let om = omega(&cat).unwrap();
            let mut xs = vec![Arc::new(Copresheaf::terminal(&cat)), om.presheaf.clone()];
            for w in cat.objects() {
                xs.push(Arc::new(Copresheaf::representable(&cat, w).unwrap()));
            }
            for x in xs {
                assert!(x.total_size() <= 12);
                assert_bijection(&x, &om);
            }
        }
    }

    #[test]
    fn subobject_algebras() {
        let p1 = p1_sigma();
        let one = Arc::new(Copresheaf::terminal(&p1));
        let sub = sub_heyting_ops(&one).unwrap();
        let labels: Vec<String> = sub
            .algebra
            .elements()
            .map(|e| sub.algebra.label(e))
            .collect();
        assert_eq!(labels, vec!["{v1:*,v2:*}", "{v2:*}", "{}"]);
        assert!(verify_heyting_laws(&sub.algebra).passed());
        assert!(!is_boolean(&sub.algebra).unwrap().is_boolean);
        let scanned = HeytingAlgebra::from_poset(&sub.algebra.poset()).unwrap();
        for a in sub.algebra.elements() {
            for b in sub.algebra.elements() {
                assert_eq!(sub.algebra.implies(a, b), scanned.implies(a, b));
            }
            assert_eq!(sub.algebra.implies(sub.algebra.bot(), a), sub.algebra.top());
        }

        let disc = Arc::new(FinCategory::discrete(&["x", "y", "z"]).unwrap());
        let sub = sub_heyting_ops(&Arc::new(Copresheaf::terminal(&disc))).unwrap();
        assert_eq!(sub.len(), 8);
        assert!(is_boolean(&sub.algebra).unwrap().is_boolean);
    }

    #[test]
    fn intuitionistic_gap_on_p1() {
        let p1 = p1_sigma();
        let om = omega(&p1).unwrap();
        let one = Arc::new(Copresheaf::terminal(&p1));
        let s = Subobject::from_labels(&one, &[("v2", "*")]).unwrap();
        let phi = classify(&one, &s, &om).unwrap();
        let v1 = obj(&p1, "v1");
        let atoms = [phi];
        let nn = Formula::negation(Formula::negation(Formula::atom(0)));
        assert!(eval_formula(v1, &nn, &atoms, 0, &om).unwrap());
        assert!(!eval_formula(v1, &Formula::atom(0), &atoms, 0, &om).unwrap());
        assert!(eval_formula(v1, &Formula::Top, &atoms, 0, &om).unwrap());
        let id = Formula::implies(Formula::atom(0), Formula::atom(0));
        assert!(eval_formula(v1, &id, &atoms, 0, &om).unwrap());
        assert!(matches!(
            eval_formula(v1, &Formula::atom(3), &atoms, 0, &om),
            Err(CopresheafError::MalformedFormula(_))
        ));
    }

    fn formulas(depth: usize) -> Vec<Formula> {
        let mut all = vec![
            Formula::Top,
            Formula::Bot,
            Formula::atom(0),
            Formula::atom(1),
        ];
        for _ in 0..depth {
            let prev = all.clone();
            for a in &prev {
                all.push(Formula::negation(a.clone()));
                for b in prev.iter().take(6) {
                    all.push(Formula::and(a.clone(), b.clone()));
                    all.push(Formula::or(a.clone(), b.clone()));
                    all.push(Formula::implies(a.clone(), b.clone()));
                }
            }
        }
        all
    }

    #[test]
    fn formula_evaluation_matches_subobject_operations() {
        for cat in [cat2(), p0_sigma(), p1_sigma()] {
            let om = omega(&cat).unwrap();
            for x in [Arc::new(Copresheaf::terminal(&cat)), om.presheaf.clone()] {
                let props = natural_transformations(&x, &om.presheaf).unwrap();
                for p in &props {
                    for q in props.iter().step_by(2) {
                        let atoms = [p.clone(), q.clone()];
                        for f in formulas(1) {
                            let s = formula_subobject(&x, &f, &atoms, &om).unwrap();
                            let chi = classify(&x, &s, &om).unwrap();
                            for c in cat.objects() {
                                for a in 0..x.size(c) {
                                    let direct = eval_formula(c, &f, &atoms, a, &om).unwrap();
                                    assert_eq!(direct, s.contains(c, a), "{f:?}");
                                    assert_eq!(direct, forces(c, &chi, a, &om).unwrap());
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn forcing_is_stable_along_arrows() {
        for cat in [cat2(), p0_sigma(), p1_sigma()] {
            let om = omega(&cat).unwrap();
            let x = om.presheaf.clone();
            for phi in natural_transformations(&x, &om.presheaf).unwrap() {
                for f in cat.arrows() {
                    let (c, d) = (cat.dom(f), cat.cod(f));
                    for a in 0..x.size(c) {
                        if forces(c, &phi, a, &om).unwrap() {
                            assert!(forces(d, &phi, x.act(f, a), &om).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn forcing_at_identity_reads_every_future() {
        let s = p0_sigma();
        let w3 = obj(&s, "w3");
        assert!(forcing_at_identity(&s, obj(&s, "w1"), |v| v != obj(&s, "w2")).unwrap());
        assert!(!forcing_at_identity(&s, obj(&s, "w1"), |v| v != w3).unwrap());
        assert!(forcing_at_identity(&s, obj(&s, "w2"), |_| true).unwrap());
    }
}
