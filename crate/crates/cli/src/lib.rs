//! Batch driver: parses protocol specifications, runs queries and theorem
//! sweeps, and renders deterministic reports.
//!
//! Exit codes: 0 every check passed, 1 validation failure, 2 counterexample
//! or method disagreement, 3 parse or usage error.

pub mod spec;

use cbc_forcing::copresheaf::{elementary_safety_forcing, sub_heyting_ops, Copresheaf};
use cbc_forcing::decided::{
    check_inconsistent_decided, decided_forcing, is_decided, GlobalSections, StateProperty,
};
use cbc_forcing::fincat::Obj;
use cbc_forcing::geometric::{verify_semantics, GeometricModel};
use cbc_forcing::heyting::{is_boolean, verify_heyting_laws, Elem};
use cbc_forcing::protocol::{
    check_consistency_lemmas, check_safety_theorem, compatible, is_safe, validate_protocol_with,
    Protocol, ProtocolError, ValidationOptions,
};
use cbc_forcing::report::{Check, Report};
use cbc_forcing::sweep::{protocol_checks, sweep, SweepOptions};
use clap::{Args, ColorChoice, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use spec::{parse_spec, state, ProtocolSpec, SpecError};
use std::path::PathBuf;
use std::sync::Arc;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_COUNTEREXAMPLE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;

/// Largest state count for which `inconsistent-decided` enumerates all pairs
/// of value maps.
pub const DECIDED_PAIR_STATE_LIMIT: usize = 6;

#[derive(Parser, Debug)]
#[command(name = "cbc-forcing", version, color = ColorChoice::Never)]
#[command(about = "Safety, compatibility and forcing checks for estimate consensus protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// Protocol specification (JSON).
    spec: PathBuf,
    /// Require the estimator to be functorial, regardless of the spec.
    #[arg(long)]
    strict_functorial: bool,
    /// Skip the estimator condition and accept empty estimates.
    #[arg(long)]
    waive_estimator_condition: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the state category, the estimator condition and functoriality.
    Validate {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Estimate safety of a proposition at states, by one or more methods.
    Safety {
        #[command(flatten)]
        spec: SpecArgs,
        /// Consensus values, comma separated; `{}` or empty for the empty set.
        /// All propositions when omitted.
        #[arg(long)]
        prop: Option<String>,
        /// State names, comma separated; all states when omitted.
        #[arg(long)]
        state: Option<String>,
        /// direct, forcing, relativised, modal or all, comma separated.
        #[arg(long, default_value = "direct")]
        method: String,
    },
    /// Whether two states have a common future.
    Compatible {
        #[command(flatten)]
        spec: SpecArgs,
        /// Two state names, comma separated; every pair when omitted.
        #[arg(long)]
        state: Option<String>,
    },
    /// Whether a named state property is decided at states.
    Decided {
        #[command(flatten)]
        spec: SpecArgs,
        /// Name of an entry of `properties` in the spec.
        #[arg(long)]
        prop: String,
        #[arg(long)]
        state: Option<String>,
        /// direct, forcing, relativised, modal or all, comma separated.
        #[arg(long, default_value = "direct,forcing")]
        method: String,
    },
    /// Run a verification suite on the protocol.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
        /// laws, lemmas, theorem, decided or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Structure and forcing semantics of the morphism induced by the estimator.
    Semantics {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Lemma and theorem sweep over generated protocols.
    Sweep {
        /// exhaustive or random.
        #[arg(long, default_value = "exhaustive")]
        suite: String,
        /// Most states (exhaustive default 3, random default 6).
        #[arg(long)]
        states: Option<usize>,
        /// Consensus values (exhaustive: exactly, default 2; random: at most, default 3).
        #[arg(long)]
        consensus: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also generate empty estimates and skip the estimator condition.
        #[arg(long)]
        waive_estimator_condition: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Every applicable check and query on one protocol.
    Report {
        #[command(flatten)]
        spec: SpecArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    ValidationFailure,
    Counterexample,
    ParseError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => EXIT_PASS,
            Status::ValidationFailure => EXIT_VALIDATION,
            Status::Counterexample => EXIT_COUNTEREXAMPLE,
            Status::ParseError => EXIT_PARSE,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counts {
    pub checks: usize,
    pub failed: usize,
    pub violations: u64,
    pub results: usize,
}

/// Everything a command prints.
#[derive(Clone, Debug, Serialize)]
pub struct CliReport {
    pub command: Vec<String>,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: Status,
    pub exit_code: i32,
    pub checks: Vec<Check>,
    pub results: Vec<Value>,
    pub counts: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<ProtocolSpec>,
}

impl CliReport {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "cbc-forcing {}\ncommand: {}\n",
            self.version,
            self.command.join(" ")
        );
        if let Some(seed) = self.seed {
            out += &format!("seed: {seed}\n");
        }
        for c in &self.checks {
            out += &format!("{c}\n");
        }
        for r in &self.results {
            out += "result";
            if let Value::Object(map) = r {
                if let Some(Value::String(kind)) = map.get("kind") {
                    out += &format!(" {kind}");
                }
                for (k, v) in map.iter().filter(|(k, _)| k.as_str() != "kind") {
                    let v = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    out += &format!(" {k}={v}");
                }
            }
            out.push('\n');
        }
        let c = &self.counts;
        out += &format!(
            "counts: checks={} failed={} violations={} results={}\n",
            c.checks, c.failed, c.violations, c.results
        );
        if let Some(e) = &self.error {
            out += &format!("error: {e}\n");
        }
        if let Some(p) = &self.counterexample {
            out += "counterexample:\n";
            out += &spec::to_json(p);
        }
        let status = serde_json::to_value(self.status).expect("status serializes");
        out += &format!(
            "status: {} (exit {})\n",
            status.as_str().unwrap_or("?"),
            self.exit_code
        );
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

// why a command stopped before producing its own checks
enum Stop {
    Parse(String),
    Invalid { checks: Report, message: String },
}

impl From<SpecError> for Stop {
    fn from(e: SpecError) -> Self {
        Stop::Parse(e.to_string())
    }
}

fn protocol_stop(e: ProtocolError) -> Stop {
    match e {
        ProtocolError::UnknownState(_) | ProtocolError::UnknownProposition(_) => {
            Stop::Parse(e.to_string())
        }
        ProtocolError::SizeLimit { .. } => Stop::Parse(e.to_string()),
        other => Stop::Invalid {
            checks: Report::new(),
            message: other.to_string(),
        },
    }
}

#[derive(Default)]
struct Body {
    checks: Report,
    results: Vec<Value>,
    seed: Option<u64>,
    counterexample: Option<ProtocolSpec>,
    /// Failing checks are a validation failure rather than a counterexample.
    validation_only: bool,
}

struct Loaded {
    spec: ProtocolSpec,
    protocol: Protocol,
    options: ValidationOptions,
    validation: Report,
}

fn load(args: &SpecArgs) -> Result<Loaded, Stop> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Stop::Parse(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec = parse_spec(&text)?;
    let mut protocol = spec.build()?;
    if args.strict_functorial {
        protocol = protocol.with_strict_functorial(true);
    }
    let options = ValidationOptions {
        waive_estimator_condition: args.waive_estimator_condition,
        internal_estimator_condition: false,
    };
    let validation = validate_protocol_with(&protocol, options);
    Ok(Loaded {
        spec,
        protocol,
        options,
        validation,
    })
}

/// Loads and refuses protocols that fail validation.
fn load_valid(args: &SpecArgs) -> Result<Loaded, Stop> {
    let l = load(args)?;
    if !l.validation.passed() {
        let failed: Vec<&str> = l.validation.failures().map(|c| c.name.as_str()).collect();
        return Err(Stop::Invalid {
            message: format!("protocol fails validation: {}", failed.join(", ")),
            checks: l.validation,
        });
    }
    Ok(l)
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(String::from)
        .collect()
}

fn parse_prop(p: &Protocol, s: &str) -> Result<Elem, Stop> {
    let inner = s.trim();
    let inner = inner
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .unwrap_or(inner);
    p.proposition(&split_list(inner)).map_err(protocol_stop)
}

fn parse_states(p: &Protocol, s: Option<&str>) -> Result<Vec<Obj>, Stop> {
    match s {
        None => Ok(p.states().collect()),
        Some(s) => {
            let names = split_list(s);
            if names.is_empty() {
                return Err(Stop::Parse("--state lists no states".into()));
            }
            names.iter().map(|n| Ok(state(p, n)?)).collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Direct,
    Forcing,
    Relativised,
    Modal,
}

impl Method {
    const ALL: [Method; 4] = [
        Method::Direct,
        Method::Forcing,
        Method::Relativised,
        Method::Modal,
    ];

    fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Forcing => "forcing",
            Method::Relativised => "relativised",
            Method::Modal => "modal",
        }
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>, Stop> {
    let mut out = Vec::new();
    for m in split_list(s) {
        let found: Vec<Method> = if m == "all" {
            Method::ALL.to_vec()
        } else {
            vec![Method::ALL
                .into_iter()
                .find(|x| x.name() == m)
                .ok_or_else(|| Stop::Parse(format!("unknown method {m}")))?]
        };
        for f in found {
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
    if out.is_empty() {
        return Err(Stop::Parse("--method lists no methods".into()));
    }
    Ok(out)
}

fn safety_rows(
    p: &Protocol,
    props: &[Elem],
    states: &[Obj],
    methods: &[Method],
) -> Result<(Vec<Value>, Check), Stop> {
    let model = if methods
        .iter()
        .any(|m| matches!(m, Method::Relativised | Method::Modal))
    {
        Some(GeometricModel::new(p).map_err(protocol_stop)?)
    } else {
        None
    };
    let mut agree = Check::new("method-agreement");
    let mut rows = Vec::new();
    for &q in props {
        for &w in states {
            let mut row = serde_json::Map::new();
            row.insert("kind".into(), json!("safety"));
            row.insert("prop".into(), json!(p.prop_label(q)));
            row.insert("state".into(), json!(p.state_name(w)));
            let mut values = Vec::new();
            for &m in methods {
                let v = match m {
                    Method::Direct => is_safe(p, q, w),
                    Method::Forcing => elementary_safety_forcing(p, q, w),
                    Method::Relativised => {
                        model.as_ref().expect("built").safety_via_rel_forcing(q, w)
                    }
                    Method::Modal => model.as_ref().expect("built").safety_via_box(q, w),
                }
                .map_err(protocol_stop)?;
                row.insert(m.name().into(), json!(v));
                values.push(v);
            }
            if values.len() > 1 {
                agree.record(values.iter().all(|&v| v == values[0]), || {
                    vec![p.prop_label(q), p.state_name(w).to_string()]
                });
            }
            rows.push(Value::Object(row));
        }
    }
    Ok((rows, agree))
}

fn decided_rows(
    p: &Protocol,
    name: &str,
    q: &StateProperty,
    states: &[Obj],
    methods: &[Method],
) -> Result<(Vec<Value>, Check), Stop> {
    let geometric = |e| Stop::Invalid {
        checks: Report::new(),
        message: format!("{e}"),
    };
    let gs = if methods
        .iter()
        .any(|m| matches!(m, Method::Relativised | Method::Modal))
    {
        Some(GlobalSections::new(p.sigma()).map_err(geometric)?)
    } else {
        None
    };
    let mut agree = Check::new("decided-method-agreement");
    let mut rows = Vec::new();
    for &w in states {
        let mut row = serde_json::Map::new();
        row.insert("kind".into(), json!("decided"));
        row.insert("property".into(), json!(name));
        row.insert("state".into(), json!(p.state_name(w)));
        let mut values = Vec::new();
        for &m in methods {
            let v = match m {
                Method::Direct => is_decided(q, w),
                Method::Forcing => decided_forcing(q, w),
                Method::Relativised => gs.as_ref().expect("built").decided_relativised(q, w),
                Method::Modal => gs.as_ref().expect("built").decided_modal(q, w),
            }
            .map_err(geometric)?;
            row.insert(m.name().into(), json!(v));
            values.push(v);
        }
        if values.len() > 1 {
            agree.record(values.iter().all(|&v| v == values[0]), || {
                vec![name.to_string(), p.state_name(w).to_string()]
            });
        }
        rows.push(Value::Object(row));
    }
    Ok((rows, agree))
}

fn prefixed(report: Report, prefix: &str) -> Report {
    Report {
        checks: report
            .checks
            .into_iter()
            .map(|mut c| {
                c.name = format!("{prefix}{}", c.name);
                c
            })
            .collect(),
    }
}

fn laws_suite(p: &Protocol) -> Report {
    let mut r = prefixed(verify_heyting_laws(p.algebra()), "pc-");
    let mut boolean = Check::new("pc-boolean-conditions");
    boolean.record(is_boolean(p.algebra()).is_ok(), Vec::new);
    r.push(boolean);
    let one = Arc::new(Copresheaf::terminal(p.sigma()));
    match sub_heyting_ops(&one) {
        Ok(sub) => r.extend(prefixed(verify_heyting_laws(&sub.algebra), "sub-terminal-")),
        Err(e) => r.push(Check::not_applicable("sub-terminal-laws", e.to_string())),
    }
    r
}

fn theorem_suite(p: &Protocol, waive: bool) -> Result<Report, Stop> {
    let full = protocol_checks(p, waive).map_err(protocol_stop)?;
    let mut r = check_safety_theorem(p);
    if let Some(c) = full.get("safety-forcing-agreement") {
        r.push(c.clone());
    }
    Ok(r)
}

fn decided_suite(p: &Protocol) -> Report {
    if p.sigma().num_objects() > DECIDED_PAIR_STATE_LIMIT {
        return Report {
            checks: vec![Check::not_applicable(
                "inconsistent-decided",
                "too many states",
            )],
        };
    }
    check_inconsistent_decided(p.sigma())
}

/// Structure laws, surjectivity and forcing semantics of the estimator's morphism.
fn semantics_checks(p: &Protocol) -> Result<(Report, Value), Stop> {
    let model = GeometricModel::induced(p).map_err(protocol_stop)?;
    let g = model.morphism();
    let surjective = model.surjection().surjective;
    let mut checks = Report::new();
    for c in g.structure_report().checks {
        if c.name == "tau-after-i-identity" && !surjective {
            checks.push(Check::not_applicable(c.name, "not a surjection"));
        } else {
            checks.push(c);
        }
    }
    let sem = verify_semantics(g).map_err(|e| Stop::Invalid {
        checks: Report::new(),
        message: e.to_string(),
    })?;
    checks.extend(sem);
    let pc = g.functor().target();
    let missing: Vec<&str> = model
        .surjection()
        .non_retracts
        .iter()
        .map(|&d| pc.object_name(d))
        .collect();
    let row = json!({
        "kind": "morphism",
        "surjective": surjective,
        "non_retracts": missing,
    });
    Ok((checks, row))
}

fn run_command(cmd: &Command) -> Result<Body, Stop> {
    match cmd {
        Command::Validate { spec } => {
            let l = load(spec)?;
            Ok(Body {
                checks: l.validation,
                validation_only: true,
                ..Body::default()
            })
        }
        Command::Safety {
            spec,
            prop,
            state,
            method,
        } => {
            let l = load_valid(spec)?;
            let p = &l.protocol;
            let methods = parse_methods(method)?;
            let props = match prop {
                Some(s) => vec![parse_prop(p, s)?],
                None => p.propositions().collect(),
            };
            let states = parse_states(p, state.as_deref())?;
            let (results, agree) = safety_rows(p, &props, &states, &methods)?;
            let mut checks = Report::new();
            if methods.len() > 1 {
                checks.push(agree);
            }
            Ok(Body {
                checks,
                results,
                ..Body::default()
            })
        }
        Command::Compatible { spec, state } => {
            let l = load_valid(spec)?;
            let p = &l.protocol;
            let pairs: Vec<(Obj, Obj)> = match state {
                Some(s) => {
                    let st = parse_states(p, Some(s))?;
                    if st.len() != 2 {
                        return Err(Stop::Parse("--state needs exactly two states".into()));
                    }
                    vec![(st[0], st[1])]
                }
                None => p
                    .states()
                    .flat_map(|a| p.states().filter(move |&b| a.0 <= b.0).map(move |b| (a, b)))
                    .collect(),
            };
            let mut results = Vec::new();
            for (a, b) in pairs {
                let fut = compatible(p, a, b).map_err(protocol_stop)?;
                results.push(json!({
                    "kind": "compatible",
                    "states": [p.state_name(a), p.state_name(b)],
                    "compatible": fut.is_some(),
                    "common_future": fut.map(|v| p.state_name(v).to_string()),
                }));
            }
            Ok(Body {
                results,
                ..Body::default()
            })
        }
        Command::Decided {
            spec,
            prop,
            state,
            method,
        } => {
            let l = load_valid(spec)?;
            let p = &l.protocol;
            let methods = parse_methods(method)?;
            let q = l.spec.property(prop, p)?;
            let states = parse_states(p, state.as_deref())?;
            let (results, agree) = decided_rows(p, prop, &q, &states, &methods)?;
            let mut checks = Report::new();
            if methods.len() > 1 {
                checks.push(agree);
            }
            Ok(Body {
                checks,
                results,
                ..Body::default()
            })
        }
        Command::Verify { spec, suite } => {
            let l = load_valid(spec)?;
            let p = &l.protocol;
            let waive = l.options.waive_estimator_condition;
            let mut checks = Report::new();
            let suites = split_list(suite);
            if suites.is_empty() {
                return Err(Stop::Parse("--suite lists no suites".into()));
            }
            for s in &suites {
                match s.as_str() {
                    "laws" => checks.extend(laws_suite(p)),
                    "lemmas" => checks.extend(check_consistency_lemmas(p)),
                    "theorem" => checks.extend(theorem_suite(p, waive)?),
                    "decided" => checks.extend(decided_suite(p)),
                    "all" => {
                        checks.extend(laws_suite(p));
                        checks.extend(check_consistency_lemmas(p));
                        checks.extend(theorem_suite(p, waive)?);
                        checks.extend(decided_suite(p));
                    }
                    other => return Err(Stop::Parse(format!("unknown suite {other}"))),
                }
            }
            Ok(Body {
                checks,
                ..Body::default()
            })
        }
        Command::Semantics { spec } => {
            let l = load_valid(spec)?;
            let (checks, row) = semantics_checks(&l.protocol)?;
            Ok(Body {
                checks,
                results: vec![row],
                ..Body::default()
            })
        }
        Command::Sweep {
            suite,
            states,
            consensus,
            count,
            seed,
            waive_estimator_condition,
            ..
        } => {
            let mut opts = match suite.as_str() {
                "exhaustive" => {
                    SweepOptions::exhaustive(consensus.unwrap_or(2), states.unwrap_or(3))
                }
                "random" => {
                    SweepOptions::random(*count, states.unwrap_or(6), consensus.unwrap_or(3), *seed)
                }
                other => return Err(Stop::Parse(format!("unknown sweep suite {other}"))),
            };
            opts.waive_estimator_condition = *waive_estimator_condition;
            let out = sweep(&opts).map_err(protocol_stop)?;
            Ok(Body {
                checks: out.report,
                results: vec![json!({
                    "kind": "sweep",
                    "suite": suite,
                    "protocols": out.protocols,
                    "waived": opts.waive_estimator_condition,
                })],
                seed: (!opts.exhaustive).then_some(opts.seed),
                counterexample: out.counterexample.as_ref().map(ProtocolSpec::from_protocol),
                validation_only: false,
            })
        }
        Command::Report { spec } => {
            let l = load(spec)?;
            let p = &l.protocol;
            let waive = l.options.waive_estimator_condition;
            let mut checks = l.validation.clone();
            if !l.validation.passed() {
                return Ok(Body {
                    checks,
                    validation_only: true,
                    ..Body::default()
                });
            }
            checks.extend(check_consistency_lemmas(p));
            checks.extend(theorem_suite(p, waive)?);
            let props: Vec<Elem> = p.propositions().collect();
            let states: Vec<Obj> = p.states().collect();
            let geometric = GeometricModel::new(p).is_ok();
            let methods: &[Method] = if geometric {
                &Method::ALL
            } else {
                &[Method::Direct, Method::Forcing]
            };
            let (mut results, agree) = safety_rows(p, &props, &states, methods)?;
            checks.push(agree);
            match semantics_checks(p) {
                Ok((sem, row)) => {
                    checks.extend(sem);
                    results.push(row);
                }
                Err(Stop::Invalid { message, .. }) => {
                    checks.push(Check::not_applicable("semantics", message));
                }
                Err(stop) => return Err(stop),
            }
            for name in l.spec.properties.keys() {
                let q = l.spec.property(name, p)?;
                let mut ms = vec![Method::Direct, Method::Forcing];
                if q.is_monotone() {
                    ms.push(Method::Relativised);
                }
                let (rows, mut agree) = decided_rows(p, name, &q, &states, &ms)?;
                agree.name = format!("decided-method-agreement-{name}");
                checks.push(agree);
                results.extend(rows);
            }
            Ok(Body {
                checks,
                results,
                ..Body::default()
            })
        }
    }
}

fn format_of(cmd: &Command) -> Format {
    match cmd {
        Command::Validate { spec }
        | Command::Safety { spec, .. }
        | Command::Compatible { spec, .. }
        | Command::Decided { spec, .. }
        | Command::Verify { spec, .. }
        | Command::Semantics { spec }
        | Command::Report { spec } => spec.format,
        Command::Sweep { format, .. } => *format,
    }
}

fn finish(command: Vec<String>, body: Body, status: Status, error: Option<String>) -> CliReport {
    let failed = body.checks.failures().count();
    CliReport {
        command,
        version: VERSION,
        seed: body.seed,
        status,
        exit_code: status.exit_code(),
        counts: Counts {
            checks: body.checks.checks.len(),
            failed,
            violations: body.checks.total_violations(),
            results: body.results.len(),
        },
        checks: body.checks.checks,
        results: body.results,
        error,
        counterexample: body.counterexample,
    }
}

fn wants_json(args: &[String]) -> bool {
    args.windows(2)
        .any(|w| w[0] == "--format" && w[1] == "json")
        || args.iter().any(|a| a == "--format=json")
}

/// Runs one invocation; `args` excludes the program name.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli =
        match Cli::try_parse_from(std::iter::once("cbc-forcing".to_string()).chain(args.clone())) {
            Ok(cli) => cli,
            Err(e) => {
                use clap::error::ErrorKind;
                if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                    return Outcome {
                        stdout: e.to_string(),
                        exit_code: EXIT_PASS,
                    };
                }
                let rendered = e.to_string();
                let message = rendered
                    .trim_end()
                    .trim_start_matches("error: ")
                    .to_string();
                let report = finish(
                    args.clone(),
                    Body::default(),
                    Status::ParseError,
                    Some(message),
                );
                let stdout = if wants_json(&args) {
                    report.render_json()
                } else {
                    report.render_text()
                };
                return Outcome {
                    stdout,
                    exit_code: EXIT_PARSE,
                };
            }
        };
    let report = match run_command(&cli.command) {
        Ok(body) => {
            let status = if body.checks.passed() {
                Status::Pass
            } else if body.validation_only {
                Status::ValidationFailure
            } else {
                Status::Counterexample
            };
            finish(args, body, status, None)
        }
        Err(Stop::Parse(msg)) => finish(args, Body::default(), Status::ParseError, Some(msg)),
        Err(Stop::Invalid { checks, message }) => {
            let body = Body {
                checks,
                ..Body::default()
            };
            finish(args, body, Status::ValidationFailure, Some(message))
        }
    };
    let stdout = match format_of(&cli.command) {
        Format::Text => report.render_text(),
        Format::Json => report.render_json(),
    };
    Outcome {
        exit_code: report.exit_code,
        stdout,
    }
}
