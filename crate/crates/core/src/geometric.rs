//! The geometric morphism `[C, FinSet] → [D, FinSet]` induced by a functor
//! `F: C → D`, computed on subobject classifiers.
//!
//! `Ω_*(d)` is the set of compatible families over `d ↓ F`: one cosieve
//! `R_(g,c)` on `c` for each `g: d → F c`, with `R_(g,c)·h = R_(F h ∘ g, c')`.

use crate::copresheaf::{
    classify, natural_transformations, omega, Copresheaf, CopresheafError, NatTrans, Omega,
    Subobject,
};
use crate::fincat::{comma_category, CommaCategory, Cosieve, FinCatError, FinFunctor, Obj};
use crate::heyting::Elem;
use crate::protocol::{Protocol, ProtocolError};
use crate::report::{Check, Report};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometricError {
    #[error(transparent)]
    Category(#[from] FinCatError),
    #[error(transparent)]
    Copresheaf(#[from] CopresheafError),
    #[error("structural invariant failed: {0}")]
    InvariantViolated(String),
    #[error("retract test says {retract}, injectivity of i says {injective}")]
    SurjectionTestsDisagree { retract: bool, injective: bool },
}

pub type Result<T> = std::result::Result<T, GeometricError>;

/// The induced morphism on classifiers, with `i ⊣ τ` style data and the counit.
#[derive(Clone, Debug)]
pub struct InducedGeometricMorphism {
    functor: FinFunctor,
    omega_c: Omega,
    omega_d: Omega,
    commas: Vec<CommaCategory>,
    // families[d][k][j]: index in Ω_C(c_j) of component j of family k
    families: Vec<Vec<Vec<usize>>>,
    family_index: Vec<HashMap<Vec<usize>, usize>>,
    omega_star: Arc<Copresheaf>,
    i: NatTrans,
    tau: NatTrans,
    // counit[c][k]: the (id_{Fc}, c)-component of family k over F c
    counit: Vec<Vec<usize>>,
}

/// Builds the morphism and checks every structural law that holds for all
/// functors; a failure there is an internal error.
pub fn induce(f: &FinFunctor) -> Result<InducedGeometricMorphism> {
    let g = InducedGeometricMorphism::build(f)?;
    let report = g.structure_report();
    let bad = report
        .failures()
        .find(|c| c.name != "tau-after-i-identity")
        .map(|c| c.to_string());
    if let Some(bad) = bad {
        return Err(GeometricError::InvariantViolated(bad));
    }
    Ok(g)
}

impl InducedGeometricMorphism {
    fn build(f: &FinFunctor) -> Result<Self> {
        let (src, tgt) = (f.source().clone(), f.target().clone());
        let omega_c = omega(&src)?;
        let omega_d = omega(&tgt)?;
        let mut commas = Vec::new();
        let mut families = Vec::new();
        let mut family_index = Vec::new();
        for d in tgt.objects() {
            let comma = comma_category(d, f)?;
            // families are global elements of Ω_C ∘ π on the comma category
            let cat = comma.category.clone();
            let labels = comma
                .objects
                .iter()
                .map(|&(_, c)| omega_c.presheaf.labels(c).to_vec())
                .collect();
            let action = cat
                .arrows()
                .map(|a| {
                    let h = comma.projection.on_arrow(a);
                    (0..omega_c.presheaf.size(src.dom(h)))
                        .map(|r| omega_c.presheaf.act(h, r))
                        .collect()
                })
                .collect();
            let pulled = Arc::new(Copresheaf::new_unchecked(cat.clone(), labels, action)?);
            let one = Arc::new(Copresheaf::terminal(&cat));
            let fams: Vec<Vec<usize>> = natural_transformations(&one, &pulled)?
                .into_iter()
                .map(|t| t.components().iter().map(|row| row[0]).collect())
                .collect();
            family_index.push(
                fams.iter()
                    .enumerate()
                    .map(|(k, fam)| (fam.clone(), k))
                    .collect::<HashMap<_, _>>(),
            );
            families.push(fams);
            commas.push(comma);
        }
        // Ω_* as a copresheaf on D: (Φ·e)_(g',c) = Φ_(g'∘e, c)
        let mut action = Vec::with_capacity(tgt.num_arrows());
        for e in tgt.arrows() {
            let (d, d2) = (tgt.dom(e), tgt.cod(e));
            let row = families[d.0]
                .iter()
                .map(|fam| {
                    let moved: Vec<usize> = commas[d2.0]
                        .objects
                        .iter()
                        .map(|&(g2, c)| {
                            let g = tgt.compose(g2, e).expect("composable");
                            fam[commas[d.0].find(g, c).expect("comma object")]
                        })
                        .collect();
                    family_index[d2.0].get(&moved).copied().ok_or_else(|| {
                        GeometricError::InvariantViolated("family action leaves Ω_*".into())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            action.push(row);
        }
        let labels = tgt
            .objects()
            .map(|d| {
                families[d.0]
                    .iter()
                    .map(|fam| family_label(&omega_c, &commas[d.0], fam, &src))
                    .collect()
            })
            .collect();
        let omega_star = Arc::new(Copresheaf::new_unchecked(tgt.clone(), labels, action)?);

        // i_d(R)_(g,c) = {h: c → c' | F h ∘ g ∈ R}
        let mut i_comp = Vec::new();
        for d in tgt.objects() {
            let row = omega_d
                .cosieves(d)
                .iter()
                .map(|r| {
                    let fam: Vec<usize> = commas[d.0]
                        .objects
                        .iter()
                        .map(|&(g, c)| {
                            let mask = src
                                .out_arrows(c)
                                .iter()
                                .enumerate()
                                .filter(|(_, &h)| {
                                    let fhg = tgt.compose(f.on_arrow(h), g).expect("composable");
                                    r.contains(&tgt, fhg)
                                })
                                .fold(0u64, |m, (i, _)| m | 1 << i);
                            omega_c.index_of(&Cosieve { base: c, mask })
                        })
                        .collect();
                    family_index[d.0].get(&fam).copied().ok_or_else(|| {
                        GeometricError::InvariantViolated("i(R) is not a compatible family".into())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            i_comp.push(row);
        }
        let i = NatTrans::new_unchecked(omega_d.presheaf.clone(), omega_star.clone(), i_comp)?;

        // τ_d(Φ) = {e: d → d' | Φ·e is the all-total family}
        let top_of = |d: Obj| -> Option<usize> {
            let fam: Vec<usize> = commas[d.0]
                .objects
                .iter()
                .map(|&(_, c)| omega_c.total(c))
                .collect();
            family_index[d.0].get(&fam).copied()
        };
        let tops: Vec<usize> = tgt
            .objects()
            .map(|d| {
                top_of(d).ok_or_else(|| GeometricError::InvariantViolated("no top family".into()))
            })
            .collect::<Result<_>>()?;
        let mut tau_comp = Vec::new();
        for d in tgt.objects() {
            let row = (0..families[d.0].len())
                .map(|k| {
                    let mask = tgt
                        .out_arrows(d)
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| omega_star.act(e, k) == tops[tgt.cod(e).0])
                        .fold(0u64, |m, (i, _)| m | 1 << i);
                    omega_d.index_of(&Cosieve { base: d, mask })
                })
                .collect();
            tau_comp.push(row);
        }
        let tau = NatTrans::new_unchecked(omega_star.clone(), omega_d.presheaf.clone(), tau_comp)?;

        let counit = src
            .objects()
            .map(|c| {
                let fc = f.on_object(c);
                let j = commas[fc.0]
                    .find(tgt.identity(fc), c)
                    .expect("(id, c) is a comma object");
                families[fc.0].iter().map(|fam| fam[j]).collect()
            })
            .collect();

        Ok(InducedGeometricMorphism {
            functor: f.clone(),
            omega_c,
            omega_d,
            commas,
            families,
            family_index,
            omega_star,
            i,
            tau,
            counit,
        })
    }

    pub fn functor(&self) -> &FinFunctor {
        &self.functor
    }

    /// Ω of the source category `C`.
    pub fn omega_source(&self) -> &Omega {
        &self.omega_c
    }

    /// Ω of the target category `D`.
    pub fn omega_target(&self) -> &Omega {
        &self.omega_d
    }

    pub fn omega_star(&self) -> &Arc<Copresheaf> {
        &self.omega_star
    }

    pub fn i(&self) -> &NatTrans {
        &self.i
    }

    pub fn tau(&self) -> &NatTrans {
        &self.tau
    }

    pub fn comma(&self, d: Obj) -> &CommaCategory {
        &self.commas[d.0]
    }

    /// Component indices (into `Ω_C`) of family `k` over `d`.
    pub fn family(&self, d: Obj, k: usize) -> &[usize] {
        &self.families[d.0][k]
    }

    pub fn find_family(&self, d: Obj, components: &[usize]) -> Option<usize> {
        self.family_index[d.0].get(components).copied()
    }

    pub fn top_star(&self, d: Obj) -> usize {
        self.i.component(d, self.omega_d.total(d))
    }

    pub fn bottom_star(&self, d: Obj) -> usize {
        self.i.component(d, 0)
    }

    /// `ε_c`: the `(id_{Fc}, c)`-component of a family over `F c`.
    pub fn counit(&self, c: Obj, k: usize) -> usize {
        self.counit[c.0][k]
    }

    /// `□ = i ∘ τ` on elements of `Ω_*(d)`.
    pub fn box_element(&self, d: Obj, k: usize) -> usize {
        self.i.component(d, self.tau.component(d, k))
    }

    fn family_op(&self, d: Obj, a: usize, b: usize, op: impl Fn(u64, u64) -> u64) -> Option<usize> {
        let (fa, fb) = (&self.families[d.0][a], &self.families[d.0][b]);
        let fam: Vec<usize> = self.commas[d.0]
            .objects
            .iter()
            .enumerate()
            .map(|(j, &(_, c))| {
                let (x, y) = (
                    self.omega_c.cosieve(c, fa[j]),
                    self.omega_c.cosieve(c, fb[j]),
                );
                self.omega_c.index_of(&Cosieve {
                    base: c,
                    mask: op(x.mask, y.mask),
                })
            })
            .collect();
        self.find_family(d, &fam)
    }

    /// Componentwise intersection, if it is again a family.
    pub fn meet_star(&self, d: Obj, a: usize, b: usize) -> Option<usize> {
        self.family_op(d, a, b, |x, y| x & y)
    }

    pub fn join_star(&self, d: Obj, a: usize, b: usize) -> Option<usize> {
        self.family_op(d, a, b, |x, y| x | y)
    }

    /// Componentwise cosieve inclusion.
    pub fn leq_star(&self, d: Obj, a: usize, b: usize) -> bool {
        let (fa, fb) = (&self.families[d.0][a], &self.families[d.0][b]);
        self.commas[d.0]
            .objects
            .iter()
            .enumerate()
            .all(|(j, &(_, c))| {
                let (x, y) = (
                    self.omega_c.cosieve(c, fa[j]),
                    self.omega_c.cosieve(c, fb[j]),
                );
                x.mask & !y.mask == 0
            })
    }

    /// Frame and modality laws of `i`, `τ` and `□`, exhaustively.
    pub fn structure_report(&self) -> Report {
        let tgt = self.functor.target().clone();
        let od = &self.omega_d;
        let dn = |d: Obj| tgt.object_name(d).to_string();
        let rl = |d: Obj, r: usize| od.presheaf.label(d, r).to_string();
        let sl = |d: Obj, k: usize| self.omega_star.label(d, k).to_string();
        let mut report = Report::new();
        let mut laws = self.omega_star.validate();
        for c in &mut laws.checks {
            c.name = format!("omega-star-{}", c.name);
        }
        report.extend(laws);
        let mut nat_i = Check::new("i-natural");
        nat_i.record(self.i.is_natural(), || {
            self.i.naturality_witness().unwrap_or_default()
        });
        let mut nat_tau = Check::new("tau-natural");
        nat_tau.record(self.tau.is_natural(), || {
            self.tau.naturality_witness().unwrap_or_default()
        });
        let mut top = Check::new("i-preserves-top");
        let mut bottom = Check::new("i-preserves-bottom");
        let mut meets = Check::new("i-preserves-meets");
        let mut joins = Check::new("i-preserves-joins");
        let mut inflation = Check::new("tau-after-i-inflationary");
        let mut retraction = Check::new("tau-after-i-identity");
        let mut iti = Check::new("i-tau-i-is-i");
        for d in tgt.objects() {
            let top_fam: Vec<usize> = self.commas[d.0]
                .objects
                .iter()
                .map(|&(_, c)| self.omega_c.total(c))
                .collect();
            top.record(
                self.family(d, self.top_star(d)) == top_fam.as_slice(),
                || vec![dn(d)],
            );
            let bottom_fam = self.family(d, self.bottom_star(d));
            bottom.record(bottom_fam.iter().all(|&r| r == 0), || vec![dn(d)]);
            let n = od.cosieves(d).len();
            for r in 0..n {
                let ir = self.i.component(d, r);
                let tir = self.tau.component(d, ir);
                let (rm, tm) = (od.cosieve(d, r).mask, od.cosieve(d, tir).mask);
                inflation.record(rm & !tm == 0, || vec![dn(d), rl(d, r)]);
                retraction.record(tir == r, || vec![dn(d), rl(d, r)]);
                iti.record(self.i.component(d, tir) == ir, || vec![dn(d), rl(d, r)]);
                for s in 0..n {
                    let (a, b) = (od.cosieve(d, r), od.cosieve(d, s));
                    let m = od.index_of(&Cosieve {
                        base: d,
                        mask: a.mask & b.mask,
                    });
                    let j = od.index_of(&Cosieve {
                        base: d,
                        mask: a.mask | b.mask,
                    });
                    let is = self.i.component(d, s);
                    meets.record(
                        self.meet_star(d, ir, is) == Some(self.i.component(d, m)),
                        || vec![dn(d), rl(d, r), rl(d, s)],
                    );
                    joins.record(
                        self.join_star(d, ir, is) == Some(self.i.component(d, j)),
                        || vec![dn(d), rl(d, r), rl(d, s)],
                    );
                }
            }
        }
        let mut deflationary = Check::new("box-deflationary");
        let mut idempotent = Check::new("box-idempotent");
        let mut meet_pres = Check::new("box-preserves-meets");
        let mut box_top = Check::new("box-preserves-top");
        for d in tgt.objects() {
            box_top.record(
                self.box_element(d, self.top_star(d)) == self.top_star(d),
                || vec![dn(d)],
            );
            let n = self.families[d.0].len();
            for a in 0..n {
                let ba = self.box_element(d, a);
                deflationary.record(self.leq_star(d, ba, a), || vec![dn(d), sl(d, a)]);
                idempotent.record(self.box_element(d, ba) == ba, || vec![dn(d), sl(d, a)]);
                for b in 0..n {
                    let lhs = self.meet_star(d, a, b).map(|m| self.box_element(d, m));
                    let rhs = self.meet_star(d, ba, self.box_element(d, b));
                    meet_pres.record(lhs.is_some() && lhs == rhs, || {
                        vec![dn(d), sl(d, a), sl(d, b)]
                    });
                }
            }
        }
        report.checks.extend([
            nat_i,
            nat_tau,
            top,
            bottom,
            meets,
            joins,
            inflation,
            iti,
            retraction,
            deflationary,
            idempotent,
            meet_pres,
            box_top,
        ]);
        report
    }
}

fn family_label(
    omega_c: &Omega,
    comma: &CommaCategory,
    fam: &[usize],
    src: &crate::fincat::FinCategory,
) -> String {
    let parts: Vec<String> = comma
        .objects
        .iter()
        .zip(fam)
        .map(|(&(_, c), &r)| omega_c.cosieve(c, r).label(src))
        .collect();
    format!("[{}]", parts.join(";"))
}

/// Outcome of the surjection test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurjectionCheck {
    pub surjective: bool,
    /// Objects of `D` that are not a retract of any `F c`, in object order.
    pub non_retracts: Vec<Obj>,
    pub i_injective: bool,
}

/// Every object of `D` is a retract of one in the image of `F`; cross-checked
/// against componentwise injectivity of `i`.
pub fn is_surjection(g: &InducedGeometricMorphism) -> Result<SurjectionCheck> {
    let f = &g.functor;
    let (src, tgt) = (f.source(), f.target());
    let non_retracts: Vec<Obj> = tgt
        .objects()
        .filter(|&d| {
            !src.objects().any(|c| {
                let fc = f.on_object(c);
                tgt.hom(d, fc).any(|s| {
                    tgt.hom(fc, d)
                        .any(|r| tgt.compose(r, s) == Some(tgt.identity(d)))
                })
            })
        })
        .collect();
    let i_injective = tgt.objects().all(|d| {
        let mut seen = std::collections::HashSet::new();
        (0..g.omega_d.presheaf.size(d)).all(|r| seen.insert(g.i.component(d, r)))
    });
    let surjective = non_retracts.is_empty();
    if surjective != i_injective {
        return Err(GeometricError::SurjectionTestsDisagree {
            retract: surjective,
            injective: i_injective,
        });
    }
    Ok(SurjectionCheck {
        surjective,
        non_retracts,
        i_injective,
    })
}

/// `F* X`: the copresheaf `c ↦ X(F c)` on the source category.
pub fn inverse_image(f: &FinFunctor, x: &Copresheaf) -> Result<Copresheaf> {
    if x.base() != f.target() {
        return Err(CopresheafError::BaseMismatch.into());
    }
    let src = f.source();
    let labels = src
        .objects()
        .map(|c| x.labels(f.on_object(c)).to_vec())
        .collect();
    let action = src
        .arrows()
        .map(|h| {
            let fh = f.on_arrow(h);
            (0..x.size(f.on_object(src.dom(h))))
                .map(|a| x.act(fh, a))
                .collect()
        })
        .collect();
    Ok(Copresheaf::new_unchecked(src.clone(), labels, action)?)
}

fn check_star_proposition(g: &InducedGeometricMorphism, phi: &NatTrans) -> Result<()> {
    if phi.target() != &g.omega_star {
        return Err(CopresheafError::BaseMismatch.into());
    }
    phi.ensure_natural()?;
    Ok(())
}

/// `φ̄ = ε ∘ F*φ : F* X → Ω_C`.
pub fn transpose(g: &InducedGeometricMorphism, phi: &NatTrans) -> Result<NatTrans> {
    check_star_proposition(g, phi)?;
    let f = &g.functor;
    let pulled = Arc::new(inverse_image(f, phi.source())?);
    let components = f
        .source()
        .objects()
        .map(|c| {
            (0..pulled.size(c))
                .map(|a| g.counit(c, phi.component(f.on_object(c), a)))
                .collect()
        })
        .collect();
    let t = NatTrans::new_unchecked(pulled, g.omega_c.presheaf.clone(), components)?;
    t.ensure_natural()?;
    Ok(t)
}

/// `□φ = i ∘ τ ∘ φ`.
pub fn box_op(g: &InducedGeometricMorphism, phi: &NatTrans) -> Result<NatTrans> {
    check_star_proposition(g, phi)?;
    Ok(g.i.after(&g.tau.after(phi)?)?)
}

/// `c ⊩* φ(a)` iff `c ⊩ φ̄(a)`, for `a ∈ X(F c)`.
pub fn rel_forces(g: &InducedGeometricMorphism, c: Obj, phi: &NatTrans, a: usize) -> Result<bool> {
    check_star_proposition(g, phi)?;
    let f = &g.functor;
    f.source().check_object(c)?;
    phi.source().check_element(f.on_object(c), a)?;
    Ok(rel_forces_unchecked(g, c, phi, a))
}

fn rel_forces_unchecked(g: &InducedGeometricMorphism, c: Obj, phi: &NatTrans, a: usize) -> bool {
    let k = phi.component(g.functor.on_object(c), a);
    g.omega_c.is_total(c, g.counit(c, k))
}

/// Checks the forcing biconditionals over every global element `1 → Ω_*`
/// and over the generic proposition `id: Ω_* → Ω_*`. All three clauses only
/// see `φ(a)` and its translates, so the generic one covers every `X → Ω_*`.
///
///
/// * `total-cosieve-semantics`: `c ⊩* φ(a)` iff `c' ⊩* φ(F f·a)` for all `f: c → c'`;
/// * `box-semantics`: `c ⊩* □φ(a)` iff the same right-hand side;
/// * `box-semantics-target-arrows`: `c ⊩* □φ(a)` iff `c' ⊩* φ(g·a)` for every
///   `c'` and every `g: F c → F c'` in the target. Holds for any functor, and
///   agrees with the previous clause when `F` is full;
/// * `restrict-to-identity`: `□φ` has constantly total transpose iff `φ` does.
///
/// The last two assume a surjection and are reported not-applicable otherwise.
pub fn verify_semantics(g: &InducedGeometricMorphism) -> Result<Report> {
    let f = &g.functor;
    let (src, tgt) = (f.source().clone(), f.target().clone());
    let surjective = is_surjection(g)?.surjective;
    let one = Arc::new(Copresheaf::terminal(&tgt));
    let mut lemma = Check::new("total-cosieve-semantics");
    let mut boxed = Check::new("box-semantics");
    let mut boxed_target = Check::new("box-semantics-target-arrows");
    let mut restrict = Check::new("restrict-to-identity");
    let star = g.omega_star.clone();
    let generic = NatTrans::new_unchecked(
        star.clone(),
        star.clone(),
        tgt.objects().map(|d| (0..star.size(d)).collect()).collect(),
    )?;
    let cases = [
        ("1", one.clone(), natural_transformations(&one, &star)?),
        ("omega-star", star.clone(), vec![generic]),
    ];
    for (xname, x, props) in cases {
        for (n, phi) in props.iter().enumerate() {
            let bphi = box_op(g, phi)?;
            let witness = |c: Obj, a: usize| {
                vec![
                    xname.to_string(),
                    format!("phi#{n}"),
                    src.object_name(c).to_string(),
                    x.label(f.on_object(c), a).to_string(),
                ]
            };
            for c in src.objects() {
                for a in 0..x.size(f.on_object(c)) {
                    let rhs = src.out_arrows(c).iter().all(|&h| {
                        rel_forces_unchecked(g, src.cod(h), phi, x.act(f.on_arrow(h), a))
                    });
                    lemma.record(rel_forces_unchecked(g, c, phi, a) == rhs, || witness(c, a));
                    let lhs = rel_forces_unchecked(g, c, &bphi, a);
                    if surjective {
                        boxed.record(lhs == rhs, || witness(c, a));
                    }
                    let fc = f.on_object(c);
                    let rhs_target = src.objects().all(|c2| {
                        tgt.hom(fc, f.on_object(c2))
                            .all(|e| rel_forces_unchecked(g, c2, phi, x.act(e, a)))
                    });
                    boxed_target.record(lhs == rhs_target, || witness(c, a));
                }
            }
            if surjective {
                let top = |p: &NatTrans| -> Result<bool> {
                    let t = transpose(g, p)?;
                    Ok(src.objects().all(|c| {
                        (0..t.source().size(c)).all(|a| g.omega_c.is_total(c, t.component(c, a)))
                    }))
                };
                restrict.record(top(&bphi)? == top(phi)?, || {
                    vec![xname.to_string(), format!("phi#{n}")]
                });
            }
        }
    }
    let mut report = Report::new();
    report.push(lemma);
    report.push(boxed_target);
    if surjective {
        report.push(boxed);
        report.push(restrict);
    } else {
        report.push(Check::not_applicable("box-semantics", "not a surjection"));
        report.push(Check::not_applicable(
            "restrict-to-identity",
            "not a surjection",
        ));
    }
    Ok(report)
}

/// The support of `D(d, −)` as a subobject of `1`: objects reachable from `d`.
pub fn support_subobject(g: &InducedGeometricMorphism, d: Obj) -> Result<(Subobject, NatTrans)> {
    let tgt = g.functor.target();
    tgt.check_object(d)?;
    let one = Arc::new(Copresheaf::terminal(tgt));
    let selection = tgt.objects().map(|x| vec![tgt.has_arrow(d, x)]).collect();
    let s = Subobject::new(&one, selection)?;
    let chi = classify(&one, &s, &g.omega_d)?;
    Ok((s, chi))
}

/// A proposition `p` seen in the target topos of an estimator.
#[derive(Clone, Debug)]
pub struct PointSubobject {
    /// `selection[S]` for each object `S` of `PC`.
    pub selection: Vec<bool>,
    pub chi: NatTrans,
    pub i_chi: NatTrans,
}

/// Protocol together with the morphism induced by its estimator.
#[derive(Clone, Debug)]
pub struct GeometricModel {
    protocol: Protocol,
    morphism: InducedGeometricMorphism,
    surjection: SurjectionCheck,
}

impl GeometricModel {
    /// Needs a functorial estimator; the morphism need not be a surjection.
    pub fn induced(protocol: &Protocol) -> std::result::Result<Self, ProtocolError> {
        let e = protocol.estimator_functor()?;
        let morphism = induce(&e)?;
        let surjection = is_surjection(&morphism)?;
        Ok(GeometricModel {
            protocol: protocol.clone(),
            morphism,
            surjection,
        })
    }

    /// As [`GeometricModel::induced`], refusing non-surjective estimators.
    pub fn new(protocol: &Protocol) -> std::result::Result<Self, ProtocolError> {
        let m = Self::induced(protocol)?;
        if !m.surjection.surjective {
            let pc = m.morphism.functor.target();
            return Err(ProtocolError::NotAGeometricModel {
                witness: m
                    .surjection
                    .non_retracts
                    .iter()
                    .map(|&d| pc.object_name(d).to_string())
                    .collect(),
            });
        }
        Ok(m)
    }

    pub fn morphism(&self) -> &InducedGeometricMorphism {
        &self.morphism
    }

    pub fn surjection(&self) -> &SurjectionCheck {
        &self.surjection
    }

    /// `p` as the support of `PC(p, −)`, i.e. the states of knowledge that
    /// already entail `p`, with its classifying map and `i ∘ χ_p`.
    pub fn point_subobject(&self, p: Elem) -> std::result::Result<PointSubobject, ProtocolError> {
        self.protocol.check_proposition(p)?;
        let (s, chi) = support_subobject(&self.morphism, Obj(p.0))?;
        let i_chi = self.morphism.i.after(&chi).map_err(GeometricError::from)?;
        Ok(PointSubobject {
            selection: s.selection().iter().map(|row| row[0]).collect(),
            chi,
            i_chi,
        })
    }

    pub fn safety_via_rel_forcing(
        &self,
        p: Elem,
        w: Obj,
    ) -> std::result::Result<bool, ProtocolError> {
        self.protocol.check_state(w)?;
        let point = self.point_subobject(p)?;
        Ok(rel_forces(&self.morphism, w, &point.i_chi, 0)?)
    }

    pub fn safety_via_box(&self, p: Elem, w: Obj) -> std::result::Result<bool, ProtocolError> {
        self.protocol.check_state(w)?;
        let point = self.point_subobject(p)?;
        let boxed = box_op(&self.morphism, &point.i_chi)?;
        Ok(rel_forces(&self.morphism, w, &boxed, 0)?)
    }
}

pub fn point_subobject(
    protocol: &Protocol,
    p: Elem,
) -> std::result::Result<PointSubobject, ProtocolError> {
    GeometricModel::induced(protocol)?.point_subobject(p)
}

pub fn safety_via_rel_forcing(
    protocol: &Protocol,
    p: Elem,
    w: Obj,
) -> std::result::Result<bool, ProtocolError> {
    GeometricModel::new(protocol)?.safety_via_rel_forcing(p, w)
}

pub fn safety_via_box(
    protocol: &Protocol,
    p: Elem,
    w: Obj,
) -> std::result::Result<bool, ProtocolError> {
    GeometricModel::new(protocol)?.safety_via_box(p, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fincat::{category_from_dag, validate_functor, Arr, FinCategory};
    use crate::generate::random_thin_functor;
    use crate::heyting::powerset_algebra;
    use crate::protocol::fixtures::{g0_refined, p0};
    use crate::protocol::{is_safe, pc_category, PcOrder};
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn arc(c: FinCategory) -> Arc<FinCategory> {
        Arc::new(c)
    }

    /// `u1 → u2` sent to `∅ ⊆ {a}` in inclusion-ordered `PC`.
    fn g0_inclusion() -> FinFunctor {
        let sigma = arc(category_from_dag(&["u1", "u2"], &[("k", "u1", "u2")]).unwrap());
        let pc = arc(pc_category(
            &powerset_algebra(&names(&["a"])).unwrap(),
            PcOrder::Inclusion,
        ));
        FinFunctor::into_thin(sigma, pc, vec![Obj(0), Obj(1)]).unwrap()
    }

    fn cat2() -> Arc<FinCategory> {
        arc(category_from_dag(&["a", "b"], &[("f", "a", "b")]).unwrap())
    }

    /// Compatible families counted by brute force over all cosieve choices.
    fn count_families(f: &FinFunctor, d: Obj) -> usize {
        let (src, tgt) = (f.source(), f.target());
        let om = omega(src).unwrap();
        let objs: Vec<(Arr, Obj)> = src
            .objects()
            .flat_map(|c| tgt.hom(d, f.on_object(c)).map(move |g| (g, c)))
            .collect();
        let sizes: Vec<usize> = objs.iter().map(|&(_, c)| om.cosieves(c).len()).collect();
        let total: usize = sizes.iter().product();
        (0..total)
            .filter(|&code| {
                let mut rest = code;
                let choice: Vec<usize> = sizes
                    .iter()
                    .map(|&s| {
                        let x = rest % s;
                        rest /= s;
                        x
                    })
                    .collect();
                objs.iter().enumerate().all(|(j, &(g, c))| {
                    src.out_arrows(c).iter().all(|&h| {
                        let g2 = tgt.compose(f.on_arrow(h), g).unwrap();
                        let k = objs.iter().position(|&o| o == (g2, src.cod(h))).unwrap();
                        om.presheaf.act(h, choice[j]) == choice[k]
                    })
                })
            })
            .count()
    }

    fn constant(x: &Arc<Copresheaf>, g: &InducedGeometricMorphism, k: usize) -> NatTrans {
        assert_eq!(x.base().num_objects(), 1);
        NatTrans::new(x.clone(), g.omega_star().clone(), vec![vec![k]]).unwrap()
    }

    #[test]
    fn omega_star_sizes_on_g0() {
        let f = g0_inclusion();
        let g = induce(&f).unwrap();
        assert_eq!(g.omega_star().size(Obj(0)), 3);
        assert_eq!(g.omega_star().size(Obj(1)), 2);
        for d in f.target().objects() {
            assert_eq!(g.omega_star().size(d), count_families(&f, d));
        }
        assert!(g.structure_report().passed());
        let s = is_surjection(&g).unwrap();
        assert!(s.surjective && s.i_injective && s.non_retracts.is_empty());
        assert!(verify_semantics(&g).unwrap().passed());
    }

    #[test]
    fn identity_functor_gives_identity_modality() {
        let c = cat2();
        let g = induce(&FinFunctor::identity(c.clone())).unwrap();
        for d in c.objects() {
            let n = g.omega_target().cosieves(d).len();
            assert_eq!(g.omega_star().size(d), n);
            for r in 0..n {
                let k = g.i().component(d, r);
                assert_eq!(g.tau().component(d, k), r);
                assert_eq!(g.box_element(d, k), k);
            }
        }
        assert!(verify_semantics(&g).unwrap().passed());
    }

    #[test]
    fn global_sections_of_cat2() {
        let c = cat2();
        let f = FinFunctor::to_terminal(c.clone());
        let g = induce(&f).unwrap();
        let star = Obj(0);
        // global elements of Ω on a ≤ b are the up-sets ∅, {b}, {a,b}
        assert_eq!(g.omega_star().size(star), 3);
        assert_eq!(count_families(&f, star), 3);
        assert!(is_surjection(&g).unwrap().surjective);
        let (a, b) = (c.object("a").unwrap(), c.object("b").unwrap());
        let up_b = (0..3)
            .find(|&k| {
                let fam = g.family(star, k);
                !g.omega_source().is_total(a, fam[0]) && g.omega_source().is_total(b, fam[1])
            })
            .unwrap();
        assert_eq!(g.box_element(star, up_b), g.bottom_star(star));
        assert_eq!(g.box_element(star, g.top_star(star)), g.top_star(star));

        let one = Arc::new(Copresheaf::terminal(f.target()));
        let phi = constant(&one, &g, up_b);
        let boxed = box_op(&g, &phi).unwrap();
        // b sees only itself, so the relativised reading holds there but the
        // boxed proposition is already ⊥: □ misses local truth off a full functor
        assert!(rel_forces(&g, b, &phi, 0).unwrap());
        assert!(!rel_forces(&g, b, &boxed, 0).unwrap());
        let report = verify_semantics(&g).unwrap();
        assert!(report.get("total-cosieve-semantics").unwrap().passed);
        let bs = report.get("box-semantics").unwrap();
        assert!(!bs.passed);
        assert!(bs.violations > 0);
        assert!(report.get("box-semantics-target-arrows").unwrap().passed);
    }

    #[test]
    fn tau_after_i_fails_off_surjections() {
        let e = p0().estimator_functor().unwrap();
        let g = induce(&e).unwrap();
        let s = is_surjection(&g).unwrap();
        assert!(!s.surjective && !s.i_injective);
        let pc = e.target();
        let labels: Vec<&str> = s.non_retracts.iter().map(|&d| pc.object_name(d)).collect();
        assert!(labels.contains(&"{b}"));
        let report = g.structure_report();
        assert!(!report.get("tau-after-i-identity").unwrap().passed);
        assert!(report.get("tau-after-i-inflationary").unwrap().passed);
        assert!(report.get("i-tau-i-is-i").unwrap().passed);
        let sem = verify_semantics(&g).unwrap();
        assert!(sem.get("total-cosieve-semantics").unwrap().passed);
        assert_eq!(
            sem.get("box-semantics").unwrap().note.as_deref(),
            Some("not a surjection")
        );
        assert!(matches!(
            GeometricModel::new(&p0()),
            Err(ProtocolError::NotAGeometricModel { witness }) if witness.contains(&"{b}".to_string())
        ));
    }

    #[test]
    fn safety_through_the_refined_model() {
        let p = g0_refined();
        let m = GeometricModel::new(&p).unwrap();
        let (u1, u2) = (p.state("u1").unwrap(), p.state("u2").unwrap());
        let a = p.proposition(&["a"]).unwrap();
        let empty = p.proposition(&[] as &[&str]).unwrap();
        assert!(m.safety_via_rel_forcing(a, u1).unwrap());
        assert!(!m.safety_via_rel_forcing(empty, u1).unwrap());
        let point = m.point_subobject(empty).unwrap();
        // only ∅ itself refines ∅
        assert_eq!(point.selection, vec![true, false]);
        for q in p.propositions() {
            for w in [u1, u2] {
                let direct = is_safe(&p, q, w).unwrap();
                assert_eq!(m.safety_via_rel_forcing(q, w).unwrap(), direct);
                assert_eq!(m.safety_via_box(q, w).unwrap(), direct);
            }
        }
        let top = m.point_subobject(p.algebra().top()).unwrap();
        assert!(top.selection.iter().all(|&x| x));
    }

    #[test]
    fn inclusion_reading_of_the_point_is_reversed() {
        let g = induce(&g0_inclusion()).unwrap();
        let a = Obj(1);
        let (s, chi) = support_subobject(&g, a).unwrap();
        let sel: Vec<bool> = s.selection().iter().map(|r| r[0]).collect();
        assert_eq!(sel, vec![false, true]);
        let pc = g.functor().target();
        let at_empty = g.omega_target().cosieve(Obj(0), chi.component(Obj(0), 0));
        assert_eq!(at_empty.arrow_names(pc), vec!["{}>{a}".to_string()]);

        // u1 is safe for {a} and unsafe for ∅, and the inclusion reading says the opposite
        let i_chi = g.i().after(&chi).unwrap();
        let u1 = Obj(0);
        assert!(!rel_forces(&g, u1, &i_chi, 0).unwrap());
        let (_, chi0) = support_subobject(&g, Obj(0)).unwrap();
        assert!(rel_forces(&g, u1, &g.i().after(&chi0).unwrap(), 0).unwrap());
    }

    #[test]
    fn transpose_of_top_is_top() {
        let g = induce(&g0_refined().estimator_functor().unwrap()).unwrap();
        let d = g.functor().target();
        let one = Arc::new(Copresheaf::terminal(d));
        let top = NatTrans::new(
            one.clone(),
            g.omega_star().clone(),
            d.objects().map(|x| vec![g.top_star(x)]).collect(),
        )
        .unwrap();
        let t = transpose(&g, &top).unwrap();
        for c in g.functor().source().objects() {
            assert!(g.omega_source().is_total(c, t.component(c, 0)));
        }
        assert_eq!(box_op(&g, &top).unwrap(), top);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn structure_laws_on_random_functors(seed in 0u64..10_000) {
            let f = random_thin_functor(seed, 4);
            prop_assert!(validate_functor(&f).passed());
            let g = induce(&f).unwrap();
            let report = g.structure_report();
            let s = is_surjection(&g).unwrap();
            prop_assert_eq!(report.get("tau-after-i-identity").unwrap().passed, s.surjective);
            for d in f.target().objects() {
                prop_assert_eq!(g.omega_star().size(d), count_families(&f, d));
            }
            let sem = verify_semantics(&g).unwrap();
            prop_assert!(sem.get("total-cosieve-semantics").unwrap().passed);
            prop_assert!(sem.get("box-semantics-target-arrows").unwrap().passed);
        }
    }
}
