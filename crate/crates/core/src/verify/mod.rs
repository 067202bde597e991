//! Property-based verification: a seeded corpus of choreographies, the
//! property checks run over it in parallel, and shrinking of failures.

pub mod checks;
pub mod exhaustive;
pub mod gen;
pub mod shrink;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::syntax::print_chor;
use checks::{Bounds, Instance, Outcome};
use gen::{gen_chor, gen_state, GenConfig, GenError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Progress,
    Confluence,
    SeqConc,
    Epp,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::Progress,
        Property::Confluence,
        Property::SeqConc,
        Property::Epp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Progress => "progress",
            Property::Confluence => "confluence",
            Property::SeqConc => "seq-conc",
            Property::Epp => "epp",
        }
    }

    pub fn check(self, inst: &Instance, b: &Bounds) -> Outcome {
        match self {
            Property::Progress => checks::progress(inst, b),
            Property::Confluence => checks::confluence(inst, b),
            Property::SeqConc => checks::seq_conc(inst, b),
            Property::Epp => checks::epp(inst, b),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown property `{s}` (expected progress, confluence, seq-conc or epp)"))
    }
}

/// The instance for one seed. When `base` asks for projectable terms,
/// every fourth seed is generated unrestricted so that the corpus also
/// covers choreographies without a projection.
pub fn instance(seed: u64, base: &GenConfig) -> Result<Instance, GenError> {
    let cfg = GenConfig {
        seed,
        require_projectable: base.require_projectable && seed % 4 != 3,
        ..base.clone()
    };
    let chor = gen_chor(&cfg)?;
    let state = gen_state(&chor, seed);
    Ok(Instance { seed, chor, state })
}

/// `n` instances with seeds `base.seed`, `base.seed + 1`, ...
pub fn gen_corpus(n: usize, base: &GenConfig) -> Result<Vec<Instance>, GenError> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| instance(base.seed.wrapping_add(i), base))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub seed: u64,
    /// The shrunk choreography, printed.
    pub counterexample: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub property: Property,
    /// Instances the property applied to.
    pub instances: usize,
    pub skipped: usize,
    pub failures: Vec<Failure>,
    pub inconclusive: Vec<Failure>,
    pub elapsed_ms: u128,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.inconclusive.is_empty()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {} instances, {} skipped, {} failures, {} inconclusive ({} ms)",
            self.property,
            if self.passed() { "ok" } else { "FAILED" },
            self.instances,
            self.skipped,
            self.failures.len(),
            self.inconclusive.len(),
            self.elapsed_ms
        )?;
        for (tag, list) in [("failure", &self.failures), ("inconclusive", &self.inconclusive)] {
            for x in list {
                write!(
                    f,
                    "\n  {tag} (seed {}): {}\n    {}",
                    x.seed,
                    x.counterexample,
                    x.detail.replace('\n', "\n    ")
                )?;
            }
        }
        Ok(())
    }
}

/// Runs `prop` on every instance. Failures are shrunk before reporting.
pub fn run_property(prop: Property, corpus: &[Instance], b: &Bounds) -> CheckReport {
    let start = Instant::now();
    let outcomes: Vec<(usize, Outcome)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, inst)| (i, prop.check(inst, b)))
        .collect();
    let mut report = CheckReport {
        property: prop,
        instances: 0,
        skipped: 0,
        failures: Vec::new(),
        inconclusive: Vec::new(),
        elapsed_ms: 0,
    };
    for (i, outcome) in outcomes {
        let inst = &corpus[i];
        match outcome {
            Outcome::Pass => report.instances += 1,
            Outcome::Skip => report.skipped += 1,
            Outcome::Fail(detail) => {
                report.instances += 1;
                report.failures.push(minimize(prop, inst, b, detail));
            }
            Outcome::Inconclusive(detail) => {
                report.instances += 1;
                report.inconclusive.push(Failure {
                    seed: inst.seed,
                    counterexample: print_chor(&inst.chor),
                    detail,
                });
            }
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    report
}

fn minimize(prop: Property, inst: &Instance, b: &Bounds, detail: String) -> Failure {
    let with = |chor: &crate::ast::Choreography| Instance {
        chor: chor.clone(),
        ..inst.clone()
    };
    let small = shrink::shrink(&inst.chor, |d| {
        matches!(prop.check(&with(d), b), Outcome::Fail(_))
    });
    let detail = match prop.check(&with(&small), b) {
        Outcome::Fail(d) => d,
        _ => detail,
    };
    Failure {
        seed: inst.seed,
        counterexample: print_chor(&small),
        detail,
    }
}
