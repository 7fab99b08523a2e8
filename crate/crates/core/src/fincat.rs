//! Finite categories, functors, cosieves and comma categories.

use crate::copresheaf::Copresheaf;
use crate::heyting::FinPoset;
use crate::report::{Check, Report};
use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use thiserror::Error;

/// Default bound on out-arrows of an object when enumerating its cosieves.
pub const COSIEVE_ARROW_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Obj(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arr(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FinCatError {
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("unknown arrow {0}")]
    UnknownArrow(String),
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("quiver has a cycle through {0:?}")]
    CyclicQuiver(Vec<String>),
    #[error("arrow {arrow} does not start at {expected}")]
    DomainMismatch { arrow: String, expected: String },
    #[error("not a category: {0}")]
    NotACategory(String),
    #[error("not a functor: {0}")]
    NotAFunctor(String),
    #[error("not a cosieve: {0}")]
    NotACosieve(String),
    #[error("size limit exceeded: {what} needs {requested}, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
}

pub type Result<T> = std::result::Result<T, FinCatError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrowInfo {
    pub name: String,
    pub dom: Obj,
    pub cod: Obj,
}

/// A finite category with an explicit composition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinCategory {
    objects: Vec<String>,
    arrows: Vec<ArrowInfo>,
    identities: Vec<Arr>,
    // compose[g * |arrows| + f] = g ∘ f
    compose: Vec<Option<Arr>>,
    out_arrows: Vec<Vec<Arr>>,
    // position of each arrow in the out-arrow list of its domain
    out_position: Vec<usize>,
    object_index: HashMap<String, Obj>,
    arrow_index: HashMap<String, Arr>,
}

impl FinCategory {
    /// Assembles a category from raw parts. Only references and names are
    /// checked; the category axioms are left to [`validate_category`].
    ///
    /// `arrows` are `(name, dom, cod)` with object indices, `identities[c]` is
    /// the arrow index of `id_c`, and `compose` holds `(g, f, g∘f)` triples.
    pub fn from_parts(
        objects: Vec<String>,
        arrows: Vec<(String, usize, usize)>,
        identities: Vec<usize>,
        compose: Vec<(usize, usize, usize)>,
    ) -> Result<Self> {
        let mut object_index = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if object_index.insert(o.clone(), Obj(i)).is_some() {
                return Err(FinCatError::DuplicateName(o.clone()));
            }
        }
        let n_obj = objects.len();
        let mut arrow_index = HashMap::new();
        let mut infos = Vec::with_capacity(arrows.len());
        for (i, (name, dom, cod)) in arrows.into_iter().enumerate() {
            if dom >= n_obj || cod >= n_obj {
                return Err(FinCatError::UnknownObject(format!("index in arrow {name}")));
            }
            if arrow_index.insert(name.clone(), Arr(i)).is_some() {
                return Err(FinCatError::DuplicateName(name));
            }
            infos.push(ArrowInfo {
                name,
                dom: Obj(dom),
                cod: Obj(cod),
            });
        }
        let n_arr = infos.len();
        if identities.len() != n_obj || identities.iter().any(|&a| a >= n_arr) {
            return Err(FinCatError::NotACategory(
                "every object needs an identity arrow".into(),
            ));
        }
        let mut table = vec![None; n_arr * n_arr];
        for (g, f, h) in compose {
            if g >= n_arr || f >= n_arr || h >= n_arr {
                return Err(FinCatError::UnknownArrow(
                    "index in composition table".into(),
                ));
            }
            if table[g * n_arr + f].replace(Arr(h)).is_some() {
                return Err(FinCatError::NotACategory(format!(
                    "composite {} ∘ {} given twice",
                    infos[g].name, infos[f].name
                )));
            }
        }
        let mut out_arrows = vec![Vec::new(); n_obj];
        let mut out_position = vec![0; n_arr];
        for (i, a) in infos.iter().enumerate() {
            out_position[i] = out_arrows[a.dom.0].len();
            out_arrows[a.dom.0].push(Arr(i));
        }
        Ok(FinCategory {
            objects,
            arrows: infos,
            identities: identities.into_iter().map(Arr).collect(),
            compose: table,
            out_arrows,
            out_position,
            object_index,
            arrow_index,
        })
    }

    /// [`FinCategory::from_parts`] followed by [`validate_category`].
    pub fn new(
        objects: Vec<String>,
        arrows: Vec<(String, usize, usize)>,
        identities: Vec<usize>,
        compose: Vec<(usize, usize, usize)>,
    ) -> Result<Self> {
        let cat = Self::from_parts(objects, arrows, identities, compose)?;
        cat.ensure_valid()?;
        Ok(cat)
    }

    fn ensure_valid(&self) -> Result<()> {
        let report = validate_category(self);
        let first = report.failures().next().map(|bad| bad.to_string());
        match first {
            Some(bad) => Err(FinCatError::NotACategory(bad)),
            None => Ok(()),
        }
    }

    /// Thin category on a preorder given by `leq` over object indices, with
    /// arrow names from `name(dom, cod)`.
    pub fn preorder<F, N>(objects: Vec<String>, leq: F, name: N) -> Result<Self>
    where
        F: Fn(usize, usize) -> bool,
        N: Fn(usize, usize) -> String,
    {
        let n = objects.len();
        let mut arrows = Vec::new();
        let mut hom = HashMap::new();
        let mut identities = vec![0; n];
        for (a, identity) in identities.iter_mut().enumerate() {
            for b in 0..n {
                if leq(a, b) {
                    if a == b {
                        *identity = arrows.len();
                    }
                    hom.insert((a, b), arrows.len());
                    arrows.push((name(a, b), a, b));
                }
            }
        }
        let mut compose = Vec::new();
        for (fi, &(_, a, b)) in arrows.iter().enumerate() {
            for (gi, &(_, b2, c)) in arrows.iter().enumerate() {
                if b == b2 {
                    let h = *hom.get(&(a, c)).ok_or_else(|| {
                        FinCatError::NotACategory("order relation is not transitive".into())
                    })?;
                    compose.push((gi, fi, h));
                }
            }
        }
        Self::new(objects, arrows, identities, compose)
    }

    /// The one-object, one-arrow category.
    pub fn terminal() -> Self {
        Self::new(
            vec!["*".into()],
            vec![("id_*".into(), 0, 0)],
            vec![0],
            vec![(0, 0, 0)],
        )
        .expect("terminal category is valid")
    }

    /// A discrete category (identities only).
    pub fn discrete<S: AsRef<str>>(objects: &[S]) -> Result<Self> {
        let names: Vec<String> = objects.iter().map(|s| s.as_ref().to_string()).collect();
        let ids: Vec<String> = names.iter().map(|o| format!("id_{o}")).collect();
        Self::preorder(names, |a, b| a == b, |a, _| ids[a].clone())
    }

    /// Copy with the composite `g ∘ f` removed from the table.
    pub fn without_composite(&self, g: Arr, f: Arr) -> Self {
        let mut c = self.clone();
        let n = c.arrows.len();
        c.compose[g.0 * n + f.0] = None;
        c
    }

    /// Copy with the composite `g ∘ f` overwritten.
    pub fn with_composite(&self, g: Arr, f: Arr, h: Arr) -> Self {
        let mut c = self.clone();
        let n = c.arrows.len();
        c.compose[g.0 * n + f.0] = Some(h);
        c
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn objects(&self) -> impl Iterator<Item = Obj> {
        (0..self.objects.len()).map(Obj)
    }

    pub fn arrows(&self) -> impl Iterator<Item = Arr> {
        (0..self.arrows.len()).map(Arr)
    }

    pub fn object_name(&self, o: Obj) -> &str {
        &self.objects[o.0]
    }

    pub fn object_names(&self) -> &[String] {
        &self.objects
    }

    pub fn arrow(&self, a: Arr) -> &ArrowInfo {
        &self.arrows[a.0]
    }

    pub fn arrow_name(&self, a: Arr) -> &str {
        &self.arrows[a.0].name
    }

    pub fn dom(&self, a: Arr) -> Obj {
        self.arrows[a.0].dom
    }

    pub fn cod(&self, a: Arr) -> Obj {
        self.arrows[a.0].cod
    }

    pub fn identity(&self, o: Obj) -> Arr {
        self.identities[o.0]
    }

    pub fn find_object(&self, name: &str) -> Option<Obj> {
        self.object_index.get(name).copied()
    }

    pub fn find_arrow(&self, name: &str) -> Option<Arr> {
        self.arrow_index.get(name).copied()
    }

    pub fn object(&self, name: &str) -> Result<Obj> {
        self.find_object(name)
            .ok_or_else(|| FinCatError::UnknownObject(name.to_string()))
    }

    pub fn check_object(&self, o: Obj) -> Result<()> {
        if o.0 < self.objects.len() {
            Ok(())
        } else {
            Err(FinCatError::UnknownObject(format!("#{}", o.0)))
        }
    }

    /// `g ∘ f`, when the table defines it.
    pub fn compose(&self, g: Arr, f: Arr) -> Option<Arr> {
        self.compose[g.0 * self.arrows.len() + f.0]
    }

    /// Arrows with domain `o`, in arrow order.
    pub fn out_arrows(&self, o: Obj) -> &[Arr] {
        &self.out_arrows[o.0]
    }

    /// Position of `a` within `out_arrows(dom a)`.
    pub fn out_position(&self, a: Arr) -> usize {
        self.out_position[a.0]
    }

    pub fn hom(&self, c: Obj, d: Obj) -> impl Iterator<Item = Arr> + '_ {
        self.out_arrows[c.0]
            .iter()
            .copied()
            .filter(move |&a| self.cod(a) == d)
    }

    pub fn has_arrow(&self, c: Obj, d: Obj) -> bool {
        self.hom(c, d).next().is_some()
    }

    pub fn is_thin(&self) -> bool {
        self.objects()
            .all(|c| self.objects().all(|d| self.hom(c, d).count() <= 1))
    }
}

/// Checks the category axioms of a raw composition table.
pub fn validate_category(cat: &FinCategory) -> Report {
    let name = |a: Arr| cat.arrow_name(a).to_string();
    let mut ids = Check::new("identities-typed");
    for c in cat.objects() {
        let id = cat.identity(c);
        ids.record(cat.dom(id) == c && cat.cod(id) == c, || {
            vec![cat.object_name(c).to_string(), name(id)]
        });
    }
    let mut total = Check::new("composition-total");
    let mut typed = Check::new("composition-typed");
    for g in cat.arrows() {
        for f in cat.arrows() {
            let composable = cat.cod(f) == cat.dom(g);
            match cat.compose(g, f) {
                Some(h) => typed.record(
                    composable && cat.dom(h) == cat.dom(f) && cat.cod(h) == cat.cod(g),
                    || vec![name(g), name(f), name(h)],
                ),
                None if composable => total.record(false, || vec![name(g), name(f)]),
                None => {}
            }
            if composable && cat.compose(g, f).is_some() {
                total.record(true, Vec::new);
            }
        }
    }
    let mut unit = Check::new("identity-laws");
    for f in cat.arrows() {
        let left = cat.compose(cat.identity(cat.cod(f)), f);
        let right = cat.compose(f, cat.identity(cat.dom(f)));
        unit.record(left == Some(f) && right == Some(f), || vec![name(f)]);
    }
    let mut assoc = Check::new("associativity");
    for f in cat.arrows() {
        for &g in cat.out_arrows(cat.cod(f)) {
            for &h in cat.out_arrows(cat.cod(g)) {
                let lhs = cat.compose(h, g).and_then(|hg| cat.compose(hg, f));
                let rhs = cat.compose(g, f).and_then(|gf| cat.compose(h, gf));
                if lhs.is_some() && rhs.is_some() {
                    assoc.record(lhs == rhs, || vec![name(h), name(g), name(f)]);
                }
            }
        }
    }
    Report {
        checks: vec![ids, total, typed, unit, assoc],
    }
}

/// A functor between finite categories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinFunctor {
    source: Arc<FinCategory>,
    target: Arc<FinCategory>,
    obj_map: Vec<Obj>,
    arr_map: Vec<Arr>,
}

impl FinFunctor {
    /// Checks only that the maps are total and in range.
    pub fn new_unchecked(
        source: Arc<FinCategory>,
        target: Arc<FinCategory>,
        obj_map: Vec<Obj>,
        arr_map: Vec<Arr>,
    ) -> Result<Self> {
        if obj_map.len() != source.num_objects() || arr_map.len() != source.num_arrows() {
            return Err(FinCatError::NotAFunctor("maps are not total".into()));
        }
        if obj_map.iter().any(|o| o.0 >= target.num_objects())
            || arr_map.iter().any(|a| a.0 >= target.num_arrows())
        {
            return Err(FinCatError::NotAFunctor("image outside target".into()));
        }
        Ok(FinFunctor {
            source,
            target,
            obj_map,
            arr_map,
        })
    }

    pub fn new(
        source: Arc<FinCategory>,
        target: Arc<FinCategory>,
        obj_map: Vec<Obj>,
        arr_map: Vec<Arr>,
    ) -> Result<Self> {
        let f = Self::new_unchecked(source, target, obj_map, arr_map)?;
        if let Some(bad) = validate_functor(&f).failures().next() {
            return Err(FinCatError::NotAFunctor(bad.to_string()));
        }
        Ok(f)
    }

    /// Functor into a thin category determined by its object map.
    pub fn into_thin(
        source: Arc<FinCategory>,
        target: Arc<FinCategory>,
        obj_map: Vec<Obj>,
    ) -> Result<Self> {
        if obj_map.len() != source.num_objects() {
            return Err(FinCatError::NotAFunctor("object map is not total".into()));
        }
        let mut arr_map = Vec::with_capacity(source.num_arrows());
        for a in source.arrows() {
            let (x, y) = (obj_map[source.dom(a).0], obj_map[source.cod(a).0]);
            let image = target.hom(x, y).next().ok_or_else(|| {
                FinCatError::NotAFunctor(format!(
                    "{}: no arrow {} -> {} in target",
                    source.arrow_name(a),
                    target.object_name(x),
                    target.object_name(y)
                ))
            })?;
            arr_map.push(image);
        }
        Self::new(source, target, obj_map, arr_map)
    }

    pub fn identity(cat: Arc<FinCategory>) -> Self {
        let obj_map = cat.objects().collect();
        let arr_map = cat.arrows().collect();
        FinFunctor {
            source: cat.clone(),
            target: cat,
            obj_map,
            arr_map,
        }
    }

    /// The unique functor to the terminal category.
    pub fn to_terminal(cat: Arc<FinCategory>) -> Self {
        let obj_map = vec![Obj(0); cat.num_objects()];
        let arr_map = vec![Arr(0); cat.num_arrows()];
        FinFunctor {
            source: cat,
            target: Arc::new(FinCategory::terminal()),
            obj_map,
            arr_map,
        }
    }

    pub fn source(&self) -> &Arc<FinCategory> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FinCategory> {
        &self.target
    }

    pub fn on_object(&self, o: Obj) -> Obj {
        self.obj_map[o.0]
    }

    pub fn on_arrow(&self, a: Arr) -> Arr {
        self.arr_map[a.0]
    }
}

pub fn validate_functor(f: &FinFunctor) -> Report {
    let (s, t) = (&*f.source, &*f.target);
    let name = |a: Arr| s.arrow_name(a).to_string();
    let mut dom = Check::new("preserves-domain");
    let mut cod = Check::new("preserves-codomain");
    for a in s.arrows() {
        let fa = f.on_arrow(a);
        dom.record(t.dom(fa) == f.on_object(s.dom(a)), || vec![name(a)]);
        cod.record(t.cod(fa) == f.on_object(s.cod(a)), || vec![name(a)]);
    }
    let mut ids = Check::new("preserves-identities");
    for c in s.objects() {
        ids.record(
            f.on_arrow(s.identity(c)) == t.identity(f.on_object(c)),
            || vec![s.object_name(c).to_string()],
        );
    }
    let mut comp = Check::new("preserves-composition");
    for g in s.arrows() {
        for ff in s.arrows() {
            if let Some(gf) = s.compose(g, ff) {
                let image = t.compose(f.on_arrow(g), f.on_arrow(ff));
                comp.record(image == Some(f.on_arrow(gf)), || vec![name(g), name(ff)]);
            }
        }
    }
    Report {
        checks: vec![dom, cod, ids, comp],
    }
}

/// Thin category of a poset: one arrow `x → y` exactly when `x ≤ y`.
pub fn poset_category(p: &FinPoset) -> FinCategory {
    let labels = p.labels().to_vec();
    let name = |a: usize, b: usize| {
        if a == b {
            format!("id_{}", labels[a])
        } else {
            format!("{}>{}", labels[a], labels[b])
        }
    };
    FinCategory::preorder(
        p.labels().to_vec(),
        |a, b| p.leq(crate::heyting::Elem(a), crate::heyting::Elem(b)),
        name,
    )
    .expect("a poset is a thin category")
}

/// Thin category of reachability in an acyclic quiver. Named edges keep their
/// names, identities are `id_x`, other composites are `dom>cod`.
pub fn category_from_dag<S: AsRef<str>>(nodes: &[S], edges: &[(S, S, S)]) -> Result<FinCategory> {
    let names: Vec<String> = nodes.iter().map(|s| s.as_ref().to_string()).collect();
    let mut index = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if index.insert(n.as_str(), i).is_some() {
            return Err(FinCatError::DuplicateName(n.clone()));
        }
    }
    let n = names.len();
    let mut succ = vec![Vec::new(); n];
    let mut edge_name: HashMap<(usize, usize), String> = HashMap::new();
    for (name, from, to) in edges {
        let a = *index
            .get(from.as_ref())
            .ok_or_else(|| FinCatError::UnknownObject(from.as_ref().to_string()))?;
        let b = *index
            .get(to.as_ref())
            .ok_or_else(|| FinCatError::UnknownObject(to.as_ref().to_string()))?;
        succ[a].push(b);
        edge_name
            .entry((a, b))
            .or_insert_with(|| name.as_ref().to_string());
    }
    if let Some(cycle) = find_cycle(&succ) {
        return Err(FinCatError::CyclicQuiver(
            cycle.into_iter().map(|i| names[i].clone()).collect(),
        ));
    }
    let mut reach = vec![false; n * n];
    for a in 0..n {
        reach[a * n + a] = true;
        for &b in &succ[a] {
            reach[a * n + b] = true;
        }
    }
    for k in 0..n {
        for a in 0..n {
            if reach[a * n + k] {
                for b in 0..n {
                    if reach[k * n + b] {
                        reach[a * n + b] = true;
                    }
                }
            }
        }
    }
    let arrow_name = |a: usize, b: usize| {
        if a == b {
            format!("id_{}", names[a])
        } else if let Some(e) = edge_name.get(&(a, b)) {
            e.clone()
        } else {
            format!("{}>{}", names[a], names[b])
        }
    };
    let mut seen = HashSet::new();
    for a in 0..n {
        for b in 0..n {
            if reach[a * n + b] && !seen.insert(arrow_name(a, b)) {
                return Err(FinCatError::DuplicateName(arrow_name(a, b)));
            }
        }
    }
    FinCategory::preorder(names.clone(), |a, b| reach[a * n + b], arrow_name)
}

fn find_cycle(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(v: usize, succ: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> bool {
        state[v] = 1;
        stack.push(v);
        for &w in &succ[v] {
            if state[w] == 1 {
                let start = stack.iter().position(|&x| x == w).unwrap();
                stack.drain(..start);
                return true;
            }
            if state[w] == 0 && visit(w, succ, state, stack) {
                return true;
            }
        }
        stack.pop();
        state[v] = 2;
        false
    }
    let mut state = vec![0u8; succ.len()];
    for v in 0..succ.len() {
        let mut stack = Vec::new();
        if state[v] == 0 && visit(v, succ, &mut state, &mut stack) {
            return Some(stack);
        }
    }
    None
}

/// A set of arrows out of `base`, closed under postcomposition. Bit `i` of
/// `mask` stands for `out_arrows(base)[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cosieve {
    pub base: Obj,
    pub mask: u64,
}

impl Cosieve {
    pub fn empty(base: Obj) -> Self {
        Cosieve { base, mask: 0 }
    }

    pub fn total(cat: &FinCategory, base: Obj) -> Self {
        Cosieve {
            base,
            mask: low_bits(cat.out_arrows(base).len()),
        }
    }

    pub fn from_arrows(cat: &FinCategory, base: Obj, arrows: &[Arr]) -> Result<Self> {
        let mut mask = 0;
        for &a in arrows {
            if cat.dom(a) != base {
                return Err(FinCatError::DomainMismatch {
                    arrow: cat.arrow_name(a).to_string(),
                    expected: cat.object_name(base).to_string(),
                });
            }
            mask |= 1 << cat.out_position(a);
        }
        let s = Cosieve { base, mask };
        if !s.is_closed(cat) {
            return Err(FinCatError::NotACosieve(format!(
                "{:?} is not closed under postcomposition",
                s.arrow_names(cat)
            )));
        }
        Ok(s)
    }

    pub fn contains(&self, cat: &FinCategory, a: Arr) -> bool {
        cat.dom(a) == self.base && self.mask >> cat.out_position(a) & 1 == 1
    }

    pub fn arrows<'a>(&self, cat: &'a FinCategory) -> impl Iterator<Item = Arr> + 'a {
        let mask = self.mask;
        cat.out_arrows(self.base)
            .iter()
            .enumerate()
            .filter(move |(i, _)| mask >> i & 1 == 1)
            .map(|(_, &a)| a)
    }

    pub fn arrow_names(&self, cat: &FinCategory) -> Vec<String> {
        self.arrows(cat)
            .map(|a| cat.arrow_name(a).to_string())
            .collect()
    }

    pub fn is_total(&self, cat: &FinCategory) -> bool {
        self.mask == low_bits(cat.out_arrows(self.base).len())
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_closed(&self, cat: &FinCategory) -> bool {
        self.arrows(cat).all(|f| {
            cat.out_arrows(cat.cod(f))
                .iter()
                .all(|&g| cat.compose(g, f).is_some_and(|gf| self.contains(cat, gf)))
        })
    }

    pub fn label(&self, cat: &FinCategory) -> String {
        format!("{{{}}}", self.arrow_names(cat).join(","))
    }
}

pub(crate) fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// All cosieves on `c`, in increasing mask order (so `∅` first, total last).
pub fn cosieves_at(cat: &FinCategory, c: Obj) -> Result<Vec<Cosieve>> {
    cosieves_at_with_limit(cat, c, COSIEVE_ARROW_LIMIT)
}

pub fn cosieves_at_with_limit(cat: &FinCategory, c: Obj, limit: usize) -> Result<Vec<Cosieve>> {
    cat.check_object(c)?;
    let out = cat.out_arrows(c);
    if out.len() > limit.min(63) {
        return Err(FinCatError::SizeLimit {
            what: "out-arrows for cosieve enumeration",
            requested: out.len(),
            limit: limit.min(63),
        });
    }
    // up[i]: postcomposites of the i-th out-arrow
    let up: Vec<u64> = out
        .iter()
        .map(|&f| {
            cat.out_arrows(cat.cod(f))
                .iter()
                .filter_map(|&g| cat.compose(g, f))
                .fold(0u64, |m, gf| m | 1 << cat.out_position(gf))
        })
        .collect();
    let mut result = Vec::new();
    for mask in 0..=low_bits(out.len()) {
        let closed = (0..out.len()).all(|i| mask >> i & 1 == 0 || up[i] & !mask == 0);
        if closed {
            result.push(Cosieve { base: c, mask });
        }
    }
    Ok(result)
}

/// Transition of a cosieve on `c` along `f: c → d`: `{g | g ∘ f ∈ R}`.
pub fn cosieve_transition(cat: &FinCategory, r: &Cosieve, f: Arr) -> Result<Cosieve> {
    if cat.dom(f) != r.base {
        return Err(FinCatError::DomainMismatch {
            arrow: cat.arrow_name(f).to_string(),
            expected: cat.object_name(r.base).to_string(),
        });
    }
    let d = cat.cod(f);
    let mask = cat
        .out_arrows(d)
        .iter()
        .enumerate()
        .filter(|(_, &g)| cat.compose(g, f).is_some_and(|gf| r.contains(cat, gf)))
        .fold(0u64, |m, (i, _)| m | 1 << i);
    Ok(Cosieve { base: d, mask })
}

/// The representable copresheaf `C(w, −)` acting by postcomposition.
pub fn hom_from(cat: &Arc<FinCategory>, w: Obj) -> Result<Copresheaf> {
    Copresheaf::representable(cat, w)
}

/// The comma category `d ↓ F` with its projection to the source of `F`.
#[derive(Clone, Debug)]
pub struct CommaCategory {
    pub category: Arc<FinCategory>,
    /// Object `j` is the pair `(g: d → F c, c)`.
    pub objects: Vec<(Arr, Obj)>,
    pub projection: FinFunctor,
    index: HashMap<(Arr, Obj), usize>,
}

impl CommaCategory {
    pub fn find(&self, g: Arr, c: Obj) -> Option<usize> {
        self.index.get(&(g, c)).copied()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

pub fn comma_category(d: Obj, f: &FinFunctor) -> Result<CommaCategory> {
    let (src, tgt) = (f.source(), f.target());
    tgt.check_object(d)?;
    let mut objects = Vec::new();
    let mut index = HashMap::new();
    for c in src.objects() {
        for g in tgt.hom(d, f.on_object(c)) {
            index.insert((g, c), objects.len());
            objects.push((g, c));
        }
    }
    let obj_names: Vec<String> = objects
        .iter()
        .map(|&(g, c)| format!("({},{})", tgt.arrow_name(g), src.object_name(c)))
        .collect();
    // one comma arrow per (object, out-arrow of its C-component)
    let mut arrows = Vec::new();
    let mut underlying = Vec::new();
    let mut lookup = HashMap::new();
    for (j, &(g, c)) in objects.iter().enumerate() {
        for &h in src.out_arrows(c) {
            let g2 = tgt.compose(f.on_arrow(h), g).ok_or_else(|| {
                FinCatError::NotACategory("target composition is not total".into())
            })?;
            let k = index[&(g2, src.cod(h))];
            lookup.insert((j, h), arrows.len());
            arrows.push((format!("{}@{}", src.arrow_name(h), obj_names[j]), j, k));
            underlying.push(h);
        }
    }
    let mut identities = vec![0; objects.len()];
    for (j, &(_, c)) in objects.iter().enumerate() {
        identities[j] = lookup[&(j, src.identity(c))];
    }
    let mut compose = Vec::new();
    for (fi, &(_, j, k)) in arrows.iter().enumerate() {
        for &h2 in src.out_arrows(objects[k].1) {
            let gi = lookup[&(k, h2)];
            let h = underlying[fi];
            let composite = src.compose(h2, h).ok_or_else(|| {
                FinCatError::NotACategory("source composition is not total".into())
            })?;
            compose.push((gi, fi, lookup[&(j, composite)]));
        }
    }
    let category = Arc::new(FinCategory::new(obj_names, arrows, identities, compose)?);
    let projection = FinFunctor::new(
        category.clone(),
        src.clone(),
        objects.iter().map(|&(_, c)| c).collect(),
        underlying,
    )?;
    Ok(CommaCategory {
        category,
        objects,
        projection,
        index,
    })
}
