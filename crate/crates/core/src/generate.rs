//! Exhaustive and seeded generators for protocol and functor sweeps.

use crate::fincat::{category_from_dag, FinCategory, FinFunctor, Obj};
use crate::heyting::Elem;
use crate::protocol::Protocol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::sync::Arc;

/// Every partial order on the states `s0..s{n-1}`, as thin categories.
/// Each order appears once, built from the first edge set whose closure it is.
pub fn all_orders(n: usize) -> Vec<FinCategory> {
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                1 => edges.push((i, j)),
                2 => edges.push((j, i)),
                _ => {}
            }
            c /= 3;
        }
        let named: Vec<(String, String, String)> = edges
            .iter()
            .map(|&(i, j)| (format!("e{i}_{j}"), states[i].clone(), states[j].clone()))
            .collect();
        let Ok(cat) = category_from_dag(&states, &named) else {
            continue;
        };
        let key: Vec<bool> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| cat.has_arrow(Obj(i), Obj(j)))
            .collect();
        if seen.insert(key) {
            out.push(cat);
        }
    }
    out
}

/// Every protocol with consensus values `c0..c{m-1}`, at most `max_states`
/// states, any order on the states and any non-empty estimates.
pub fn exhaustive_protocols(n_consensus: usize, max_states: usize) -> Vec<Protocol> {
    exhaustive_protocols_with(n_consensus, max_states, false)
}

/// As [`exhaustive_protocols`], optionally letting estimates be `∅`.
pub fn exhaustive_protocols_with(
    n_consensus: usize,
    max_states: usize,
    allow_bottom: bool,
) -> Vec<Protocol> {
    let consensus: Vec<String> = (0..n_consensus).map(|i| format!("c{i}")).collect();
    let lowest = usize::from(!allow_bottom);
    let nonbottom: Vec<Elem> = (lowest..1usize << n_consensus).map(Elem).collect();
    let mut out = Vec::new();
    for n in 1..=max_states {
        for cat in all_orders(n) {
            let sigma = Arc::new(cat);
            for_each_assignment(n, &nonbottom, |est| {
                out.push(
                    Protocol::new(&consensus, sigma.clone(), est.to_vec(), false)
                        .expect("generated protocol is well formed"),
                );
            });
        }
    }
    out
}

/// Protocols whose estimator is a functor into `PC` (refinement order) that
/// hits every object, so that it induces a geometric model. Bottom estimates
/// are unavoidable here.
pub fn surjective_functorial_protocols(max_consensus: usize, max_states: usize) -> Vec<Protocol> {
    let mut out = Vec::new();
    for m in 1..=max_consensus {
        let consensus: Vec<String> = (0..m).map(|i| format!("c{i}")).collect();
        let all: Vec<Elem> = (0..1usize << m).map(Elem).collect();
        for n in all.len()..=max_states {
            for cat in all_orders(n) {
                let sigma = Arc::new(cat);
                for_each_assignment(n, &all, |est| {
                    let hits = all.iter().all(|e| est.contains(e));
                    if !hits {
                        return;
                    }
                    let p = Protocol::new(&consensus, sigma.clone(), est.to_vec(), true)
                        .expect("generated protocol is well formed");
                    if p.is_functorial() {
                        out.push(p);
                    }
                });
            }
        }
    }
    out
}

fn for_each_assignment(n: usize, choices: &[Elem], mut f: impl FnMut(&[Elem])) {
    let mut digits = vec![0usize; n];
    let mut est = vec![choices[0]; n];
    loop {
        for (e, &d) in est.iter_mut().zip(&digits) {
            *e = choices[d];
        }
        f(&est);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            digits[i] += 1;
            if digits[i] < choices.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// A seeded random DAG category on `n` objects named `prefix0..`.
pub fn random_dag_category(
    rng: &mut ChaCha8Rng,
    n: usize,
    density: f64,
    prefix: &str,
) -> FinCategory {
    let names: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // random topological order, so edges are not biased towards low indices
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                let (i, j) = (order[a], order[b]);
                edges.push((
                    format!("{prefix}{i}_{j}"),
                    names[i].clone(),
                    names[j].clone(),
                ));
            }
        }
    }
    category_from_dag(&names, &edges).expect("edges follow a topological order")
}

/// A seeded random functor between thin categories with at most
/// `max_objects` objects each.
pub fn random_thin_functor(seed: u64, max_objects: usize) -> FinFunctor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_objects);
    let m = rng.gen_range(1..=max_objects);
    let density = rng.gen_range(0.2..0.8);
    let source = Arc::new(random_dag_category(&mut rng, n, density, "c"));
    let target = Arc::new(random_dag_category(&mut rng, m, density, "d"));
    for _ in 0..200 {
        let map: Vec<Obj> = (0..n).map(|_| Obj(rng.gen_range(0..m))).collect();
        if let Ok(f) = FinFunctor::into_thin(source.clone(), target.clone(), map) {
            return f;
        }
    }
    let constant = vec![Obj(rng.gen_range(0..m)); n];
    FinFunctor::into_thin(source, target, constant).expect("constant maps are monotone")
}
