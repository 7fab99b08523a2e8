//! Batch verification of the lemma suite, the safety theorem and the
//! forcing oracle over generated protocols.

use crate::copresheaf::elementary_safety_forcing;
use crate::generate::exhaustive_protocols_with;
use crate::protocol::{
    check_consistency_lemmas, check_safety_theorem, is_safe, random_protocol,
    random_protocol_allowing_bottom, validate_protocol_with, Protocol, ProtocolError,
    ValidationOptions, RANDOM_CONSENSUS_LIMIT, RANDOM_STATE_LIMIT,
};
use crate::report::{Check, Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bound on the number of protocols an exhaustive sweep may enumerate.
pub const EXHAUSTIVE_PROTOCOL_LIMIT: u64 = 200_000;

// labelled partial orders on n points, n = 0..=5
const ORDER_COUNTS: [u64; 6] = [1, 1, 3, 19, 219, 4231];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub exhaustive: bool,
    pub max_states: usize,
    pub max_consensus: usize,
    /// Number of random protocols; ignored when exhaustive.
    pub count: usize,
    pub seed: u64,
    /// Also generate `∅` estimates and skip the estimator condition.
    pub waive_estimator_condition: bool,
}

impl SweepOptions {
    /// All protocols with exactly `n_consensus` values and up to `max_states` states.
    pub fn exhaustive(n_consensus: usize, max_states: usize) -> Self {
        SweepOptions {
            exhaustive: true,
            max_states,
            max_consensus: n_consensus,
            count: 0,
            seed: 0,
            waive_estimator_condition: false,
        }
    }

    pub fn random(count: usize, max_states: usize, max_consensus: usize, seed: u64) -> Self {
        SweepOptions {
            exhaustive: false,
            max_states,
            max_consensus,
            count,
            seed,
            waive_estimator_condition: false,
        }
    }

    pub fn waived(mut self) -> Self {
        self.waive_estimator_condition = true;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub report: Report,
    pub protocols: usize,
    /// The first protocol with a failing check.
    pub counterexample: Option<Protocol>,
}

/// Number of protocols an exhaustive sweep would enumerate.
pub fn exhaustive_count(n_consensus: usize, max_states: usize, allow_bottom: bool) -> Option<u64> {
    let choices = (1u64 << n_consensus.min(20)) - u64::from(!allow_bottom);
    (1..=max_states).try_fold(0u64, |acc, n| {
        let orders = *ORDER_COUNTS.get(n)?;
        acc.checked_add(orders.checked_mul(choices.checked_pow(n as u32)?)?)
    })
}

/// The per-protocol checks of a sweep.
pub fn protocol_checks(
    p: &Protocol,
    waive_estimator_condition: bool,
) -> Result<Report, ProtocolError> {
    let opts = ValidationOptions {
        waive_estimator_condition,
        internal_estimator_condition: false,
    };
    let mut report = Report::new();
    if let Some(c) = validate_protocol_with(p, opts).get("estimator-condition") {
        report.push(c.clone());
    }
    report.extend(check_consistency_lemmas(p));
    report.extend(check_safety_theorem(p));
    let mut agree = Check::new("safety-forcing-agreement");
    for q in p.propositions() {
        for w in p.states() {
            let ok = is_safe(p, q, w)? == elementary_safety_forcing(p, q, w)?;
            agree.record(ok, || vec![p.prop_label(q), p.state_name(w).to_string()]);
        }
    }
    report.push(agree);
    Ok(report)
}

pub fn sweep(opts: &SweepOptions) -> Result<SweepOutcome, ProtocolError> {
    let protocols = generate(opts)?;
    let mut report = Report::new();
    let mut counterexample = None;
    for (i, p) in protocols.iter().enumerate() {
        let r = protocol_checks(p, opts.waive_estimator_condition)?;
        if counterexample.is_none() && !r.passed() {
            counterexample = Some(p.clone());
        }
        report.absorb(&r, || format!("protocol#{i}"));
    }
    Ok(SweepOutcome {
        report,
        protocols: protocols.len(),
        counterexample,
    })
}

fn generate(opts: &SweepOptions) -> Result<Vec<Protocol>, ProtocolError> {
    let allow_bottom = opts.waive_estimator_condition;
    if opts.exhaustive {
        let n = exhaustive_count(opts.max_consensus, opts.max_states, allow_bottom);
        match n {
            Some(n) if n <= EXHAUSTIVE_PROTOCOL_LIMIT && opts.max_consensus > 0 => {}
            _ => {
                return Err(ProtocolError::SizeLimit {
                    what: "exhaustive sweep protocols",
                    requested: n.map_or(usize::MAX, |n| n as usize),
                    limit: EXHAUSTIVE_PROTOCOL_LIMIT as usize,
                })
            }
        }
        return Ok(exhaustive_protocols_with(
            opts.max_consensus,
            opts.max_states,
            allow_bottom,
        ));
    }
    if opts.max_states == 0 || opts.max_states > RANDOM_STATE_LIMIT {
        return Err(ProtocolError::SizeLimit {
            what: "random protocol states",
            requested: opts.max_states,
            limit: RANDOM_STATE_LIMIT,
        });
    }
    if opts.max_consensus == 0 || opts.max_consensus > RANDOM_CONSENSUS_LIMIT {
        return Err(ProtocolError::SizeLimit {
            what: "random protocol consensus values",
            requested: opts.max_consensus,
            limit: RANDOM_CONSENSUS_LIMIT,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.count)
        .map(|_| {
            let n = rng.gen_range(1..=opts.max_states);
            let m = rng.gen_range(1..=opts.max_consensus);
            let density = rng.gen_range(0.0..=1.0);
            let seed = rng.gen();
            if allow_bottom {
                random_protocol_allowing_bottom(n, m, density, seed)
            } else {
                random_protocol(n, m, density, seed)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_the_generator() {
        assert_eq!(exhaustive_count(2, 3, false), Some(543));
        assert_eq!(exhaustive_count(2, 3, true), Some(4 + 48 + 19 * 64));
        assert_eq!(exhaustive_count(2, 6, false), None);
    }

    #[test]
    fn small_exhaustive_sweep_is_clean() {
        let out = sweep(&SweepOptions::exhaustive(2, 2)).unwrap();
        assert_eq!(out.protocols, 3 + 27);
        assert!(out.report.passed(), "{}", out.report);
        assert!(out.counterexample.is_none());
    }

    #[test]
    fn waiving_the_condition_exposes_current_consistency() {
        let out = sweep(&SweepOptions::exhaustive(1, 1).waived()).unwrap();
        let cur = out.report.get("current-consistency").unwrap();
        assert!(!cur.passed);
        assert!(out.report.get("estimator-condition").unwrap().passed);
        let p = out.counterexample.unwrap();
        assert_eq!(p.estimates(), &[p.algebra().bot()]);
    }

    #[test]
    fn random_sweeps_are_deterministic() {
        let a = sweep(&SweepOptions::random(20, 4, 2, 7)).unwrap();
        let b = sweep(&SweepOptions::random(20, 4, 2, 7)).unwrap();
        assert_eq!(a.report, b.report);
        assert!(a.report.passed());
        assert!(sweep(&SweepOptions::random(1, 0, 2, 0)).is_err());
        assert!(sweep(&SweepOptions::exhaustive(3, 5)).is_err());
    }
}
