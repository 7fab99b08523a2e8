//! Pass/fail bookkeeping shared by every law, lemma and theorem checker.

use serde::Serialize;
use std::fmt;

/// Outcome of one named check run over a finite family of cases.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Number of instances examined.
    pub cases: u64,
    pub violations: u64,
    /// Labels of the first violating instance, in canonical enumeration order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: true,
            cases: 0,
            violations: 0,
            witness: None,
            note: None,
        }
    }

    /// Records one instance; the first failing instance becomes the witness.
    pub fn record<F>(&mut self, ok: bool, witness: F)
    where
        F: FnOnce() -> Vec<String>,
    {
        self.cases += 1;
        if !ok {
            self.violations += 1;
            self.passed = false;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// A check that was not run because its hypothesis does not apply.
    pub fn not_applicable(name: impl Into<String>, note: impl Into<String>) -> Self {
        Check::new(name).with_note(note)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {} cases={} violations={}",
            self.name, self.cases, self.violations
        )?;
        if let Some(w) = &self.witness {
            write!(f, " witness=({})", w.join(", "))?;
        }
        if let Some(n) = &self.note {
            write!(f, " [{n}]")?;
        }
        Ok(())
    }
}

/// An ordered list of checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Adds `other` into same-named checks, appending new names in order.
    /// A witness taken from `other` is prefixed by `tag`.
    pub fn absorb<F>(&mut self, other: &Report, tag: F)
    where
        F: Fn() -> String,
    {
        for c in &other.checks {
            let slot = match self.checks.iter().position(|x| x.name == c.name) {
                Some(i) => &mut self.checks[i],
                None => {
                    self.checks.push(Check::new(c.name.clone()));
                    self.checks.last_mut().expect("just pushed")
                }
            };
            slot.cases += c.cases;
            slot.violations += c.violations;
            slot.passed &= c.passed;
            if slot.witness.is_none() {
                if let Some(w) = &c.witness {
                    slot.witness = Some(std::iter::once(tag()).chain(w.iter().cloned()).collect());
                }
            }
            if slot.note.is_none() {
                slot.note.clone_from(&c.note);
            }
        }
    }

    pub fn total_violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
