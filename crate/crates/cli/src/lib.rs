//! The commands behind the `secintent` binary.
//!
//! Each command writes human-readable output to the writer it is given and
//! returns a process exit code. The codes are a stable contract:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | intents parsed but failed validation |
//! | 2 | unreadable or malformed input |
//! | 3 | the run finished with unfulfilled intents |

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use secintent_core::catalog::{load_catalog, load_inventory, Catalog, CatalogError};
use secintent_core::control::{ControlLoop, IntentSummary, LoopConfig, RunSummary};
use secintent_core::intent::{extract, validate, AuditEvent, IntentError, LifecycleState};
use secintent_core::metrics::{attack_surface_coverage, security_control_coverage, ExpectedControlSet};
use secintent_core::netsim::{load_scenario, ScenarioError};
use secintent_core::rdf::{parse_turtle, Graph, RdfError};
use secintent_core::scalar::serialize_fixed4;
use secintent_core::slo::{load_mapping, LevelMappingTable, SloError};
use secintent_core::{Fraction, Scalar};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNFULFILLED: i32 = 3;

pub const REPORTS_FILE: &str = "reports.ndjson";
pub const EVENTS_FILE: &str = "events.ndjson";
pub const METRICS_FILE: &str = "metrics.ndjson";
pub const SUMMARY_FILE: &str = "summary.json";

/// Problems that stop a command before it produces results.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}:{column}: {source}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, source: RdfError },
    #[error("{}: {source}", path.display())]
    Rdf { path: PathBuf, source: RdfError },
    #[error("{}: {source}", path.display())]
    Catalog { path: PathBuf, source: CatalogError },
    #[error("{}: {source}", path.display())]
    Mapping { path: PathBuf, source: SloError },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Parses a Turtle file, keeping the source position of syntax errors.
pub fn read_turtle(path: &Path) -> Result<Graph, CliError> {
    parse_turtle(&read(path)?).map_err(|source| match source.position() {
        Some((line, column)) => CliError::Parse { path: path.to_path_buf(), line, column, source },
        None => CliError::Rdf { path: path.to_path_buf(), source },
    })
}

pub fn read_catalog(path: &Path) -> Result<Catalog, CliError> {
    load_catalog(&read(path)?).map_err(|source| CliError::Catalog { path: path.to_path_buf(), source })
}

/// Loads the mapping table and fills surfaces it leaves out from the catalog.
pub fn read_mapping(path: &Path, catalog: &Catalog) -> Result<LevelMappingTable, CliError> {
    let table = load_mapping(&read(path)?).map_err(|source| CliError::Mapping { path: path.to_path_buf(), source })?;
    Ok(table.with_catalog_defaults(catalog))
}

/// Problems found in one intent file, keyed by intent id.
fn check_intents(graph: &Graph) -> (usize, BTreeMap<String, Vec<String>>) {
    let extraction = extract(graph);
    let mut problems: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let count = extraction.intents.len();
    for item in extraction.intents {
        match item {
            Ok(intent) => {
                let v = validate(&intent);
                if !v.is_empty() {
                    problems.entry(intent.id.as_str().to_string()).or_default().extend(v.iter().map(|v| v.to_string()));
                }
            }
            Err(IntentError::Vocabulary { intent, message }) => problems.entry(intent).or_default().push(message),
            Err(e) => problems.entry(String::new()).or_default().push(e.to_string()),
        }
    }
    (count, problems)
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

/// Parses and validates intent files, printing one verdict per file.
pub fn cmd_validate(files: &[PathBuf], out: &mut dyn Write) -> i32 {
    let mut code = EXIT_OK;
    for path in files {
        let graph = match read_turtle(path) {
            Ok(g) => g,
            Err(e) => {
                let _ = writeln!(out, "error: {e}");
                return EXIT_INPUT;
            }
        };
        let (count, problems) = check_intents(&graph);
        if count == 0 {
            let _ = writeln!(out, "{}: no intents found", path.display());
            code = code.max(EXIT_INVALID);
        } else if problems.is_empty() {
            let _ = writeln!(out, "{}: {}: OK", path.display(), plural(count, "intent"));
        } else {
            let _ = writeln!(out, "{}: {}: {} invalid", path.display(), plural(count, "intent"), problems.len());
            for (id, list) in &problems {
                for p in list {
                    let _ = writeln!(out, "  {id}: {p}");
                }
            }
            code = code.max(EXIT_INVALID);
        }
    }
    code
}

/// Everything `run` needs; paths are checked when the run starts.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub scenario: PathBuf,
    pub intents: Vec<PathBuf>,
    pub catalog: PathBuf,
    pub mapping: PathBuf,
    pub ticks: u64,
    /// Overrides the scenario's own seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// A lifecycle transition as written to the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub tick: u64,
    pub from: LifecycleState,
    pub to: LifecycleState,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntentRecord {
    #[serde(flatten)]
    pub summary: IntentSummary,
    pub transitions: Vec<TransitionRecord>,
}

/// Enabled controls on one NF when the run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfEndState {
    pub nf: String,
    pub nf_type: String,
    pub location_area: String,
    pub enabled: Vec<String>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunDocument {
    pub scenario: String,
    pub seed: u64,
    pub ticks: u64,
    pub all_satisfied: bool,
    /// Intents that ended in a state needing attention.
    pub unsatisfied: Vec<String>,
    pub intents: Vec<IntentRecord>,
    pub final_inventory: Vec<NfEndState>,
}

/// Resolves an intent argument: an existing path, or a bare file name
/// looked up in `corpus/intents/`.
pub fn resolve_intent_path(arg: &Path) -> PathBuf {
    if arg.exists() || arg.components().count() > 1 {
        return arg.to_path_buf();
    }
    let in_corpus = Path::new("corpus/intents").join(arg);
    if in_corpus.exists() {
        in_corpus
    } else {
        arg.to_path_buf()
    }
}

/// Runs the closed loop and writes the output directory. Returns the
/// summary document and whether every intent ended satisfied.
pub fn execute_run(m: &RunManifest) -> Result<RunDocument, CliError> {
    if m.ticks == 0 {
        return Err(CliError::Usage("--ticks must be at least 1".into()));
    }
    if m.intents.is_empty() {
        return Err(CliError::Usage("at least one --intents file is required".into()));
    }
    let catalog = read_catalog(&m.catalog)?;
    let mapping = read_mapping(&m.mapping, &catalog)?;
    let scenario = load_scenario(&m.scenario, &catalog, m.seed)?;
    let graphs = m
        .intents
        .iter()
        .map(|p| {
            let p = resolve_intent_path(p);
            read_turtle(&p).map(|g| (p, g))
        })
        .collect::<Result<Vec<_>, _>>()?;
    log::info!("scenario '{}' seed {} with {} NFs", scenario.name, scenario.seed, scenario.inventory.len());

    let mut lp: ControlLoop<Fraction> = ControlLoop::new(LoopConfig::default(), catalog, mapping, &scenario);
    for (path, graph) in &graphs {
        let outcome = lp.submit(graph).map_err(|e| CliError::Schema { path: path.clone(), message: e.to_string() })?;
        for r in &outcome.rejected {
            log::warn!("{}: intent {} rejected: {}", path.display(), r.intent, r.reasons.join("; "));
        }
    }

    fs::create_dir_all(&m.out).map_err(write_err(&m.out))?;
    let mut reports = Vec::new();
    let mut metrics = Vec::new();
    for _ in 0..m.ticks {
        let output = lp.run_tick();
        for r in &output.reports {
            serde_json::to_writer(&mut reports, r).expect("in-memory write");
            reports.push(b'\n');
        }
        for s in &output.metrics {
            serde_json::to_writer(&mut metrics, s).expect("in-memory write");
            metrics.push(b'\n');
        }
        for p in &output.plans {
            log::debug!("tick {}: {} actions on {}", p.tick, p.plan.actions.len(), p.plan.nf_id);
        }
    }
    let mut events = Vec::new();
    lp.simulator().write_log(&mut events).expect("in-memory write");

    let summary: RunSummary = lp.summary();
    let intents: Vec<IntentRecord> = summary
        .intents
        .into_iter()
        .map(|s| {
            let transitions = lp
                .store()
                .get(&s.intent)
                .map(|i| {
                    i.audit
                        .iter()
                        .filter_map(|a| match a.event {
                            AuditEvent::Transition { from, to } => Some(TransitionRecord { tick: a.tick, from, to }),
                            _ => None,
                        })
                        .collect()
                })
                .unwrap_or_default();
            IntentRecord { summary: s, transitions }
        })
        .collect();
    let doc = RunDocument {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        ticks: summary.ticks,
        all_satisfied: summary.all_satisfied,
        unsatisfied: intents.iter().filter(|i| !i.summary.is_satisfied()).map(|i| i.summary.intent.clone()).collect(),
        intents,
        final_inventory: lp
            .inventory()
            .iter()
            .map(|nf| NfEndState {
                nf: nf.id.clone(),
                nf_type: nf.nf_type.clone(),
                location_area: nf.location_area.clone(),
                enabled: nf.enabled_controls().into_iter().collect(),
            })
            .collect(),
    };
    let mut summary_bytes = serde_json::to_vec_pretty(&doc).expect("summary serializes");
    summary_bytes.push(b'\n');

    for (name, bytes) in
        [(REPORTS_FILE, &reports), (EVENTS_FILE, &events), (METRICS_FILE, &metrics), (SUMMARY_FILE, &summary_bytes)]
    {
        let path = m.out.join(name);
        fs::write(&path, bytes).map_err(write_err(&path))?;
    }
    Ok(doc)
}

/// Runs a scenario, printing the end state of every intent.
pub fn cmd_run(m: &RunManifest, out: &mut dyn Write) -> i32 {
    for path in &m.intents {
        let path = resolve_intent_path(path);
        let graph = match read_turtle(&path) {
            Ok(g) => g,
            Err(e) => {
                let _ = writeln!(out, "error: {e}");
                return EXIT_INPUT;
            }
        };
        let (_, problems) = check_intents(&graph);
        if !problems.is_empty() {
            for (id, list) in problems {
                let _ = writeln!(out, "{}: {id}: {}", path.display(), list.join("; "));
            }
            return EXIT_INVALID;
        }
    }
    let doc = match execute_run(m) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let _ = writeln!(out, "scenario {} (seed {}), {} ticks", doc.scenario, doc.seed, doc.ticks);
    for i in &doc.intents {
        let s = &i.summary;
        let status = s.final_status.map_or("-", |st| st.as_str());
        let _ = writeln!(out, "  {:<60} {:<10} {:<17} replans {}", s.intent, s.state.as_str(), status, s.replans);
        for u in &s.unresolved {
            let _ = writeln!(out, "    unresolved: {u}");
        }
    }
    if doc.all_satisfied {
        let _ = writeln!(out, "all intents satisfied; output in {}", m.out.display());
        EXIT_OK
    } else {
        let _ = writeln!(out, "unsatisfied: {}", doc.unsatisfied.join(", "));
        EXIT_UNFULFILLED
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpectedDoc {
    expected: Vec<ExpectedEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpectedEntry {
    nf: String,
    controls: Vec<String>,
    /// Required configuration versions; controls not listed only need to be enabled.
    #[serde(default)]
    versions: BTreeMap<String, u64>,
}

/// One row of the `metrics` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub nf: String,
    #[serde(serialize_with = "serialize_fixed4")]
    pub as_cv: Fraction,
    #[serde(serialize_with = "serialize_fixed4")]
    pub sc_cv: Fraction,
}

/// Coverage of every NF in an inventory against an expected-set document.
pub fn coverage_rows(inventory: &Path, expected: &Path, catalog: &Path) -> Result<Vec<CoverageRow>, CliError> {
    let catalog = read_catalog(catalog)?;
    let inv = load_inventory(&read(inventory)?, &catalog)
        .map_err(|source| CliError::Catalog { path: inventory.to_path_buf(), source })?;
    let doc: ExpectedDoc = serde_json::from_slice(&read(expected)?)
        .map_err(|e| CliError::Schema { path: expected.to_path_buf(), message: e.to_string() })?;
    let mut sets: BTreeMap<String, ExpectedControlSet> = BTreeMap::new();
    for entry in doc.expected {
        let schema = |message: String| CliError::Schema { path: expected.to_path_buf(), message };
        let nf = inv.get(&entry.nf).ok_or_else(|| schema(format!("unknown nf '{}'", entry.nf)))?;
        if let Some(c) = entry.controls.iter().find(|c| !catalog.contains(c)) {
            return Err(schema(format!("unknown control '{c}'")));
        }
        let mut set = ExpectedControlSet::from_controls(nf, &catalog, &entry.controls);
        set.expected_versions = entry.versions;
        if sets.insert(entry.nf.clone(), set).is_some() {
            return Err(schema(format!("nf '{}' listed twice", entry.nf)));
        }
    }
    Ok(inv
        .iter()
        .map(|nf| {
            let empty = ExpectedControlSet::empty(nf.id.clone());
            let set = sets.get(&nf.id).unwrap_or(&empty);
            CoverageRow {
                nf: nf.id.clone(),
                as_cv: attack_surface_coverage(nf, set).expect("inventory NFs have surfaces"),
                sc_cv: security_control_coverage(nf, set),
            }
        })
        .collect())
}

/// Prints as_cv and sc_cv per NF, as a table or as JSON.
pub fn cmd_metrics(inventory: &Path, expected: &Path, catalog: &Path, json: bool, out: &mut dyn Write) -> i32 {
    let rows = match coverage_rows(inventory, expected, catalog) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_INPUT;
        }
    };
    if json {
        #[derive(Serialize)]
        struct Doc<'a> {
            nfs: &'a [CoverageRow],
        }
        let _ = writeln!(out, "{}", serde_json::to_string(&Doc { nfs: &rows }).expect("rows serialize"));
    } else {
        let width = rows.iter().map(|r| r.nf.len()).max().unwrap_or(2).max(2);
        let _ = writeln!(out, "{:<width$}  as_cv   sc_cv", "nf");
        for r in &rows {
            let _ = writeln!(out, "{:<width$}  {}  {}", r.nf, r.as_cv.fixed4(), r.sc_cv.fixed4());
        }
    }
    EXIT_OK
}
