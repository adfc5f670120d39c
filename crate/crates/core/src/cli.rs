//! Command-line front end: process files, analyses and reports.
//!
//! Files are JSON objects with a `kind` field. Complex numbers are `[re, im]`
//! pairs (a bare number is read as real), matrices are arrays of rows, and
//! dimensions are declared explicitly.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::causal::behavior::{signal_requirement_check, signalling_graph, Behavior};
use crate::causal::detect::{biorder_of, detect_causal_order, ic_behavior, is_causally_ordered};
use crate::causal::membership::causal_membership;
use crate::causal::order::PartialOrder;
use crate::causal::separability::{is_causally_separable_2lab, SeparabilityVerdict, DEFAULT_MAX_ITER};
use crate::ctc::{check_consistency, enumerate_valid, fixed_points, signalling_structure, LocalOp, ProcessFunction};
use crate::error::{Error, Result};
use crate::games::{best_game_value, causal_bound, constant_game, gyni_game, ocb_game, play, CausalGame};
use crate::graph::DiGraph;
use crate::linalg::{hadamard, pauli_x, pauli_y, pauli_z, CMatrix, C64};
use crate::osis::{causal_reversibility_check, reverse_is, ISDescription};
use crate::process::{validate_process_seeded, Lab, ProcessMatrix, DEFAULT_N_RANDOM};
use crate::qcm::{markov_discover, verify_markov, Dag, QuantumCausalModel};
use crate::switch::{
    fine_grained_equivalence, switch_discriminate, switch_w_matrix, uncorrelated_copies_deviation, Commutation,
    SwitchInstance,
};
use crate::tensor::{DenseOperator, SpaceLabel};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Largest lab count for order checks on process matrices.
const MAX_ORDER_LABS: usize = 4;

// ---------------------------------------------------------------- files

#[derive(Clone, Debug, PartialEq)]
pub struct QcmFile {
    pub dag: Dag,
    /// Factors in [`Dag::spaces`] order.
    pub sigma: DenseOperator,
    /// Node channels over [`Dag::channel_spaces`], if declared.
    pub channels: Option<Vec<DenseOperator>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    ProcessMatrix(ProcessMatrix),
    Behavior(Behavior),
    ProcessFunction(ProcessFunction),
    IsDescription(ISDescription),
    Qcm(QcmFile),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessFile {
    pub name: Option<String>,
    pub payload: Payload,
}

impl ProcessFile {
    pub fn new(name: Option<String>, payload: Payload) -> Self {
        ProcessFile { name, payload }
    }

    pub fn kind(&self) -> &'static str {
        match self.payload {
            Payload::ProcessMatrix(_) => "process_matrix",
            Payload::Behavior(_) => "behavior",
            Payload::ProcessFunction(_) => "process_function",
            Payload::IsDescription(_) => "is_description",
            Payload::Qcm(_) => "qcm",
        }
    }

    fn subject(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind().to_string())
    }
}

fn perr(loc: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::parse(loc, msg)
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| perr(key, "missing field"))
}

fn as_usize(v: &Value, loc: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| perr(loc, format!("expected a non-negative integer, found {v}")))
}

fn as_str<'a>(v: &'a Value, loc: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| perr(loc, format!("expected a string, found {v}")))
}

fn as_array<'a>(v: &'a Value, loc: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| perr(loc, "expected an array"))
}

fn usize_list(v: &Value, loc: &str) -> Result<Vec<usize>> {
    as_array(v, loc)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_usize(x, &format!("{loc}[{i}]")))
        .collect()
}

fn string_list(v: &Value, loc: &str) -> Result<Vec<String>> {
    as_array(v, loc)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_str(x, &format!("{loc}[{i}]")).map(String::from))
        .collect()
}

fn complex(v: &Value, loc: &str) -> Result<C64> {
    if let Some(re) = v.as_f64() {
        return Ok(C64::new(re, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(perr(loc, "complex parts must be numbers")),
        },
        _ => Err(perr(loc, format!("expected a number or an [re, im] pair, found {v}"))),
    }
}

fn matrix(v: &Value, loc: &str, rows: usize, cols: usize) -> Result<CMatrix> {
    let rs = as_array(v, loc)?;
    if rs.len() != rows {
        return Err(perr(loc, format!("expected {rows} rows, found {}", rs.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (r, row) in rs.iter().enumerate() {
        let rloc = format!("{loc}[{r}]");
        let entries = as_array(row, &rloc)?;
        if entries.len() != cols {
            return Err(perr(&rloc, format!("expected {cols} entries, found {}", entries.len())));
        }
        for (c, e) in entries.iter().enumerate() {
            data.push(complex(e, &format!("{rloc}[{c}]"))?);
        }
    }
    CMatrix::from_vec(rows, cols, data)
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| json!([m.get(r, c).re, m.get(r, c).im])).collect())
            .collect(),
    )
}

fn operator(v: &Value, loc: &str, factors: Vec<SpaceLabel>) -> Result<DenseOperator> {
    let n: usize = factors.iter().map(|f| f.dim).product();
    let m = matrix(v, loc, n, n)?;
    DenseOperator::new(factors, m).map_err(|e| perr(loc, e.to_string()))
}

/// `{"name", "in_dim", "out_dim"}` with optional `in_label` / `out_label`
/// (default `<name>_in` / `<name>_out`).
fn lab(v: &Value, loc: &str) -> Result<Lab> {
    let name = as_str(v.get("name").ok_or_else(|| perr(format!("{loc}.name"), "missing field"))?, &format!("{loc}.name"))?;
    let dim = |key: &str| -> Result<usize> {
        let l = format!("{loc}.{key}");
        let d = as_usize(v.get(key).ok_or_else(|| perr(&l, "missing field"))?, &l)?;
        if d == 0 {
            return Err(perr(l, "dimension must be positive"));
        }
        Ok(d)
    };
    let (din, dout) = (dim("in_dim")?, dim("out_dim")?);
    let label = |key: &str, default: String| -> Result<String> {
        v.get(key).map_or(Ok(default), |x| as_str(x, &format!("{loc}.{key}")).map(String::from))
    };
    let in_label = label("in_label", format!("{name}_in"))?;
    let out_label = label("out_label", format!("{name}_out"))?;
    Ok(Lab::new(name, SpaceLabel::new(in_label, din), SpaceLabel::new(out_label, dout)))
}

fn lab_json(l: &Lab) -> Value {
    let mut o = json!({"name": l.name, "in_dim": l.in_space.dim, "out_dim": l.out_space.dim});
    if l.in_space.name != format!("{}_in", l.name) {
        o["in_label"] = json!(l.in_space.name);
    }
    if l.out_space.name != format!("{}_out", l.name) {
        o["out_label"] = json!(l.out_space.name);
    }
    o
}

fn labs(v: &Value, loc: &str) -> Result<Vec<Lab>> {
    as_array(v, loc)?
        .iter()
        .enumerate()
        .map(|(i, x)| lab(x, &format!("{loc}[{i}]")))
        .collect()
}

/// Parses a process file.
pub fn parse(bytes: &[u8]) -> Result<ProcessFile> {
    let text = std::str::from_utf8(bytes).map_err(|e| perr(format!("byte {}", e.valid_up_to()), "invalid UTF-8"))?;
    let root: Value = serde_json::from_str(text)
        .map_err(|e| perr(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    if !root.is_object() {
        return Err(perr("document", "expected a JSON object"));
    }
    let name = root.get("name").map(|n| as_str(n, "name").map(String::from)).transpose()?;
    let kind = as_str(field(&root, "kind")?, "kind")?;
    let payload = match kind {
        "process_matrix" => {
            let labs = labs(field(&root, "labs")?, "labs")?;
            let factors: Vec<SpaceLabel> = labs.iter().flat_map(Lab::spaces).collect();
            let w = operator(field(&root, "w")?, "w", factors)?;
            Payload::ProcessMatrix(ProcessMatrix::new(labs, w).map_err(|e| perr("w", e.to_string()))?)
        }
        "behavior" => {
            let labs = string_list(field(&root, "labs")?, "labs")?;
            let settings = usize_list(field(&root, "settings")?, "settings")?;
            let outcomes = usize_list(field(&root, "outcomes")?, "outcomes")?;
            let table: Vec<f64> = as_array(field(&root, "table")?, "table")?
                .iter()
                .enumerate()
                .map(|(i, x)| x.as_f64().ok_or_else(|| perr(format!("table[{i}]"), format!("expected a number, found {x}"))))
                .collect::<Result<_>>()?;
            Payload::Behavior(Behavior::new(labs, settings, outcomes, table).map_err(|e| perr("table", e.to_string()))?)
        }
        "process_function" => {
            let n = as_usize(field(&root, "n_labs")?, "n_labs")?;
            let table = usize_list(field(&root, "table")?, "table")?
                .into_iter()
                .enumerate()
                .map(|(i, x)| u32::try_from(x).map_err(|_| perr(format!("table[{i}]"), "entry too large")))
                .collect::<Result<Vec<u32>>>()?;
            Payload::ProcessFunction(ProcessFunction::new(n, table).map_err(|e| perr("table", e.to_string()))?)
        }
        "is_description" => {
            let d: ISDescription =
                serde_json::from_value(root.clone()).map_err(|e| perr("is_description", e.to_string()))?;
            Payload::IsDescription(d)
        }
        "qcm" => {
            let nodes = labs(field(&root, "nodes")?, "nodes")?;
            let edges: Vec<(String, String)> = as_array(field(&root, "edges")?, "edges")?
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let l = format!("edges[{i}]");
                    match string_list(e, &l)?.as_slice() {
                        [a, b] => Ok((a.clone(), b.clone())),
                        _ => Err(perr(l, "expected a [from, to] pair")),
                    }
                })
                .collect::<Result<_>>()?;
            let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let dag = Dag::new(nodes, &refs).map_err(|e| perr("edges", e.to_string()))?;
            let sigma = operator(field(&root, "sigma")?, "sigma", dag.spaces())?;
            let channels = root
                .get("channels")
                .map(|cs| {
                    let list = as_array(cs, "channels")?;
                    if list.len() != dag.nodes.len() {
                        return Err(perr("channels", format!("expected {} channels", dag.nodes.len())));
                    }
                    list.iter()
                        .enumerate()
                        .map(|(i, c)| operator(c, &format!("channels[{i}]"), dag.channel_spaces(i)))
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            Payload::Qcm(QcmFile { dag, sigma, channels })
        }
        other => return Err(perr("kind", format!("unknown kind `{other}`"))),
    };
    Ok(ProcessFile { name, payload })
}

/// Inverse of [`parse`].
pub fn serialize(pf: &ProcessFile) -> String {
    let mut root = match &pf.payload {
        Payload::ProcessMatrix(p) => json!({
            "labs": p.labs().iter().map(lab_json).collect::<Vec<_>>(),
            "w": matrix_json(p.w().matrix()),
        }),
        Payload::Behavior(b) => json!({
            "labs": b.labs(),
            "settings": b.settings(),
            "outcomes": b.outcomes(),
            "table": b.table(),
        }),
        Payload::ProcessFunction(f) => json!({"n_labs": f.n_labs, "table": f.table}),
        Payload::IsDescription(d) => serde_json::to_value(d).expect("serializable"),
        Payload::Qcm(q) => {
            let mut o = json!({
                "nodes": q.dag.nodes.iter().map(lab_json).collect::<Vec<_>>(),
                "edges": q.dag.graph.edge_names().iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
                "sigma": matrix_json(q.sigma.permute(&space_names(&q.dag.spaces())).expect("own factors").matrix()),
            });
            if let Some(cs) = &q.channels {
                o["channels"] = Value::Array(
                    cs.iter()
                        .enumerate()
                        .map(|(i, c)| {
                            let spaces = q.dag.channel_spaces(i);
                            matrix_json(c.permute(&space_names(&spaces)).expect("own factors").matrix())
                        })
                        .collect(),
                );
            }
            o
        }
    };
    root["kind"] = json!(pf.kind());
    if let Some(n) = &pf.name {
        root["name"] = json!(n);
    }
    serde_json::to_string_pretty(&root).expect("serializable") + "\n"
}

fn space_names(spaces: &[SpaceLabel]) -> Vec<&str> {
    spaces.iter().map(|s| s.name.as_str()).collect()
}

pub fn read_file(path: &Path) -> Result<ProcessFile> {
    let bytes = std::fs::read(path).map_err(|e| perr(path.display().to_string(), e.to_string()))?;
    parse(&bytes).map_err(|e| match e {
        Error::Parse { location, message } => perr(format!("{}: {location}", path.display()), message),
        other => other,
    })
}

// ---------------------------------------------------------------- reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    Input,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub subject: String,
    pub verdicts: BTreeMap<String, String>,
    pub evidence: BTreeMap<String, Evidence>,
    pub items: Vec<String>,
}

/// Rounding-level noise is shown as zero.
fn clean(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

impl Report {
    fn new(command: &str, subject: impl Into<String>) -> Self {
        Report {
            command: command.to_string(),
            subject: subject.into(),
            ..Default::default()
        }
    }

    fn verdict(&mut self, key: &str, value: impl Into<String>) {
        self.verdicts.insert(key.to_string(), value.into());
    }

    fn computed(&mut self, key: &str, value: f64) {
        self.evidence.insert(key.to_string(), Evidence { value: clean(value), provenance: Provenance::Computed });
    }

    fn input(&mut self, key: &str, value: f64) {
        self.evidence.insert(key.to_string(), Evidence { value, provenance: Provenance::Input });
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("serializable");
        serde_json::to_string_pretty(&v).expect("serializable") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("[{}] {}\n", self.command, self.subject);
        if let Some(c) = self.verdicts.get("classification") {
            let _ = writeln!(s, "classification: {c}");
        }
        for (k, v) in self.verdicts.iter().filter(|(k, _)| *k != "classification") {
            let _ = writeln!(s, "{k}: {v}");
        }
        for (k, e) in &self.evidence {
            let p = match e.provenance {
                Provenance::Computed => "computed",
                Provenance::Input => "input",
            };
            let _ = writeln!(s, "  {k} = {:?} ({p})", e.value);
        }
        for item in &self.items {
            let _ = writeln!(s, "  {item}");
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: DEFAULT_TOL,
            seed: DEFAULT_SEED,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

// ---------------------------------------------------------------- analyses

/// Plugs the trace channel into every lab without an output system; `None`
/// unless exactly two labs remain.
fn two_lab_reduction(p: &ProcessMatrix) -> Result<Option<ProcessMatrix>> {
    let mut q = p.clone();
    for l in p.labs().iter().filter(|l| l.out_space.dim == 1) {
        if q.labs().len() <= 2 {
            break;
        }
        let discard = DenseOperator::identity(l.spaces())?;
        q = q.plug(&l.name, &discard)?;
    }
    Ok((q.labs().len() == 2).then_some(q))
}

fn bundled_games() -> Vec<CausalGame> {
    vec![ocb_game(), gyni_game()]
}

fn order_from_graph(g: &DiGraph) -> Option<PartialOrder> {
    let edges = g.edge_names();
    let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    PartialOrder::from_generators(g.nodes.clone(), &refs).ok()
}

/// Places a process matrix or behavior in the hierarchy
/// ordered ⊂ separable ⊂ causal, with the evidence for each step.
pub fn classify(pf: &ProcessFile, s: &Settings) -> Result<Report> {
    let mut r = Report::new("classify", pf.subject());
    r.input("tol", s.tol);
    match &pf.payload {
        Payload::ProcessMatrix(p) => classify_process(p, s, &mut r)?,
        Payload::Behavior(b) => classify_behavior(b, s, &mut r)?,
        _ => return Err(Error::Precondition(format!("cannot classify a `{}` file", pf.kind()))),
    }
    Ok(r)
}

fn classify_process(p: &ProcessMatrix, s: &Settings, r: &mut Report) -> Result<()> {
    let v = validate_process_seeded(p, DEFAULT_N_RANDOM, s.tol, s.seed);
    r.input("seed", s.seed as f64);
    r.computed("validity.min_eigenvalue", v.min_eigenvalue);
    r.computed("validity.trace", v.trace);
    r.computed("validity.max_normalization_deviation", v.max_normalization_deviation);
    if !v.valid() {
        r.verdict("validity", "invalid");
        r.verdict("classification", "invalid process");
        return Ok(());
    }
    r.verdict("validity", "valid");

    let n = p.labs().len();
    if n <= MAX_ORDER_LABS {
        if let Some(order) = is_causally_ordered(p, s.tol)? {
            r.verdict("causally_ordered", format!("yes {order}"));
            r.verdict("separability", "implied by causal order");
            r.verdict("inequality", "none possible (causally ordered)");
            r.verdict("classification", "causally ordered");
            return Ok(());
        }
        r.verdict("causally_ordered", "no");
    } else {
        r.verdict("causally_ordered", format!("skipped (more than {MAX_ORDER_LABS} labs)"));
    }

    let mut undecided_separability = false;
    match is_causally_separable_2lab(p, s.tol, s.max_iter) {
        Ok(SeparabilityVerdict::Separable { weight, residual, iterations, .. }) => {
            r.computed("separability.weight", weight);
            r.computed("separability.residual", residual);
            r.computed("separability.iterations", iterations as f64);
            r.verdict("separability", "separable");
            r.verdict("inequality", "none possible (causally separable)");
            r.verdict("classification", "causally separable, not causally ordered");
            return Ok(());
        }
        Ok(SeparabilityVerdict::Undecided { gap, iterations }) => {
            r.computed("separability.gap", gap);
            r.computed("separability.iterations", iterations as f64);
            r.verdict("separability", "undecided (heuristic)");
            undecided_separability = true;
        }
        Err(e) => r.verdict("separability", format!("skipped ({e})")),
    }

    let mut violation: Option<(String, f64, f64)> = None;
    match two_lab_reduction(p)? {
        Some(q) => {
            let b = ic_behavior(&q)?;
            let mut scanned = Vec::new();
            for g in bundled_games() {
                let value = best_game_value(&b, &g)?;
                let bound = causal_bound(&g)?;
                r.computed(&format!("game.{}.value", g.name), value);
                r.computed(&format!("game.{}.bound", g.name), bound);
                if value > bound + s.tol && violation.as_ref().is_none_or(|v| value - bound > v.1 - v.2) {
                    violation = Some((g.name.clone(), value, bound));
                }
                scanned.push(g.name);
            }
            match &violation {
                Some((name, value, bound)) => r.verdict("inequality", format!("violates {name}: {value:.6} > {bound}")),
                None => r.verdict("inequality", format!("no violation found ({})", scanned.join(", "))),
            }
        }
        None => r.verdict("inequality", "skipped (needs two labs)"),
    }

    if n <= MAX_ORDER_LABS {
        let b = ic_behavior(p)?;
        let v = detect_causal_order(&b, b.labs(), s.tol)?;
        r.verdict("causal_order_detected", if v.exhibits { "yes" } else { "no" });
    }

    let class = match (&violation, r.verdicts["inequality"].starts_with("no violation")) {
        (Some((_, value, bound)), _) => format!("non-causal (inequality violation {value:.6} > {bound})"),
        (None, true) if undecided_separability => {
            "causal, not causally ordered; separability search: undecided (heuristic)".to_string()
        }
        (None, true) => "causal, not causally ordered".to_string(),
        (None, false) => "not causally ordered; causal status undecided".to_string(),
    };
    r.verdict("classification", class);
    Ok(())
}

fn classify_behavior(b: &Behavior, s: &Settings, r: &mut Report) -> Result<()> {
    let graph = signalling_graph(b, s.tol);
    r.verdict("signalling", graph.to_string());
    if let Some(order) = order_from_graph(&graph) {
        if signal_requirement_check(b, &order, s.tol)? {
            r.verdict("causally_ordered", format!("yes {order}"));
            r.verdict("classification", "causally ordered");
            return Ok(());
        }
    }
    r.verdict("causally_ordered", "no");
    for g in bundled_games() {
        if let Ok(res) = play(b, &g, s.tol) {
            r.computed(&format!("game.{}.value", g.name), res.value);
            r.computed(&format!("game.{}.bound", g.name), res.bound);
        }
    }
    if b.labs().len() != 2 {
        r.verdict("membership", "skipped (needs two labs)");
        r.verdict("classification", "not causally ordered; causal status undecided");
        return Ok(());
    }
    let m = causal_membership(b, s.tol, s.max_iter)?;
    r.computed("membership.distance", m.distance());
    r.computed("membership.iterations", m.iterations as f64);
    if m.is_causal() {
        r.verdict("membership", "causal");
        r.verdict("classification", "causal, not causally ordered");
    } else {
        r.verdict("membership", "outside the causal polytope");
        r.verdict(
            "classification",
            format!("non-causal (distance {:.6} from the causal polytope)", m.distance()),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- commands

#[derive(Parser, Debug)]
#[command(name = "causalkit", version, about = "Analyses of processes with indefinite causal order")]
struct Cli {
    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Iteration cap for the separability and membership searches.
    #[arg(long = "max-iter", global = true, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// No output; only the exit code.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a process matrix (or process function) for validity.
    Validate { file: PathBuf },
    /// Place a process matrix or behavior in the causal hierarchy.
    Classify { file: PathBuf },
    /// Does the process exhibit causal order on a subset of labs?
    OrderDetect {
        file: PathBuf,
        /// Comma-separated labs (default: all).
        #[arg(long, value_delimiter = ',')]
        subset: Vec<String>,
    },
    /// Signalling graph between labs.
    Signalling { file: PathBuf },
    /// Play a two-party causal game.
    Game {
        file: PathBuf,
        /// `ocb`, `gyni`, `constant`, or a game file.
        #[arg(long, default_value = "ocb")]
        game: String,
    },
    /// Quantum switch demonstrations.
    SwitchDemo {
        /// Decide whether two gates (I, X, Y, Z, H) commute or anticommute.
        #[arg(long, num_args = 2, value_names = ["U", "V"])]
        discriminate: Option<Vec<String>>,
    },
    /// Classical process functions.
    Ctc {
        #[command(subcommand)]
        action: CtcCommand,
    },
    /// Quantum causal models.
    Qcm {
        #[command(subcommand)]
        action: QcmCommand,
    },
    /// Reverse an invertible IS description and check reversibility.
    Reverse {
        file: PathBuf,
        /// Write the reversed description here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CtcCommand {
    /// List every valid process function on N labs.
    Enumerate { n: usize },
    /// Check a process function for logical consistency, or count its fixed
    /// points under one choice of local operations.
    Check {
        file: PathBuf,
        /// Comma-separated operations per lab: 0, 1, id or not.
        #[arg(long, value_delimiter = ',')]
        ops: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum QcmCommand {
    /// Check that sigma is Markov for the DAG (with the declared channels, if any).
    Verify { file: PathBuf },
    /// Extract channels from sigma for the DAG.
    Discover {
        file: PathBuf,
        /// Write the discovered model here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutput {
    /// 0 success, 1 negative verdict of a check, 2 usage or parse error.
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn gate(name: &str) -> Result<CMatrix> {
    Ok(match name.to_ascii_uppercase().as_str() {
        "I" => CMatrix::identity(2),
        "X" => pauli_x(),
        "Y" => pauli_y(),
        "Z" => pauli_z(),
        "H" => hadamard(),
        _ => return Err(perr("gate", format!("unknown gate `{name}` (use I, X, Y, Z or H)"))),
    })
}

fn load_game(spec: &str) -> Result<CausalGame> {
    match spec {
        "ocb" => Ok(ocb_game()),
        "gyni" => Ok(gyni_game()),
        "constant" => Ok(constant_game()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| perr(path, e.to_string()))?;
            CausalGame::from_json(&text)
        }
    }
}

fn behavior_for(pf: &ProcessFile) -> Result<Behavior> {
    match &pf.payload {
        Payload::Behavior(b) => Ok(b.clone()),
        Payload::ProcessMatrix(p) if p.labs().len() <= MAX_ORDER_LABS => ic_behavior(p),
        Payload::ProcessMatrix(_) => Err(Error::TooLarge(format!("more than {MAX_ORDER_LABS} labs"))),
        _ => Err(Error::Precondition(format!("expected a behavior or process matrix, got `{}`", pf.kind()))),
    }
}

fn write_output(path: &Path, pf: &ProcessFile) -> Result<()> {
    std::fs::write(path, serialize(pf)).map_err(|e| perr(path.display().to_string(), e.to_string()))
}

/// Runs one command; the report and whether it is a negative verdict.
fn dispatch(cmd: &Command, s: &Settings) -> Result<(Report, bool)> {
    Ok(match cmd {
        Command::Validate { file } => {
            let pf = read_file(file)?;
            let mut r = Report::new("validate", pf.subject());
            let ok = match &pf.payload {
                Payload::ProcessMatrix(p) => {
                    let v = validate_process_seeded(p, DEFAULT_N_RANDOM, s.tol, s.seed);
                    r.input("tol", s.tol);
                    r.input("seed", s.seed as f64);
                    r.computed("min_eigenvalue", v.min_eigenvalue);
                    r.computed("trace", v.trace);
                    r.computed("expected_trace", p.expected_trace());
                    r.computed("max_normalization_deviation", v.max_normalization_deviation);
                    r.verdict("psd", v.psd_ok.to_string());
                    r.verdict("trace", v.trace_ok.to_string());
                    r.verdict("normalization", v.normalization_ok.to_string());
                    v.valid()
                }
                Payload::ProcessFunction(f) => {
                    let c = check_consistency(f)?;
                    if let Some((ops, count)) = &c.counterexample {
                        let ops: Vec<String> = ops.iter().map(|o| o.to_string()).collect();
                        r.items.push(format!("counterexample: ({}) has {count} fixed points", ops.join(", ")));
                    }
                    c.valid
                }
                Payload::Qcm(q) => verify_qcm(q, s, &mut r),
                // invariants are enforced while parsing
                Payload::Behavior(_) | Payload::IsDescription(_) => true,
            };
            r.verdict("valid", ok.to_string());
            (r, !ok)
        }
        Command::Classify { file } => {
            let pf = read_file(file)?;
            (classify(&pf, s)?, false)
        }
        Command::OrderDetect { file, subset } => {
            let pf = read_file(file)?;
            let b = behavior_for(&pf)?;
            let subset = if subset.is_empty() { b.labs().to_vec() } else { subset.clone() };
            let v = detect_causal_order(&b, &subset, s.tol)?;
            let mut r = Report::new("order-detect", pf.subject());
            r.input("tol", s.tol);
            r.verdict("subset", subset.join(","));
            r.verdict("exhibits_causal_order", v.exhibits.to_string());
            if let Some(bg) = &v.witnessing_background_order {
                r.verdict("background_order", bg.to_string());
            }
            if v.exhibits {
                r.verdict("biorder", biorder_of(&v)?.to_string());
            }
            r.items.extend(v.compatible_orders.iter().map(|o| format!("compatible {o}")));
            r.items.extend(v.incompatible_orders.iter().map(|o| format!("incompatible {o}")));
            (r, !v.exhibits)
        }
        Command::Signalling { file } => {
            let pf = read_file(file)?;
            let g = match &pf.payload {
                Payload::ProcessFunction(f) => signalling_structure(f),
                _ => signalling_graph(&behavior_for(&pf)?, s.tol),
            };
            let mut r = Report::new("signalling", pf.subject());
            r.verdict("graph", g.to_string());
            r.verdict("acyclic", g.is_acyclic().to_string());
            r.items.extend(g.edge_names().iter().map(|(a, b)| format!("{a} -> {b}")));
            (r, false)
        }
        Command::Game { file, game } => {
            let pf = read_file(file)?;
            let g = load_game(game)?;
            let mut r = Report::new("game", pf.subject());
            r.verdict("game", g.name.clone());
            let (value, bound) = match &pf.payload {
                Payload::Behavior(b) if b.settings() == g.settings.as_slice() && b.outcomes() == g.outcomes.as_slice() => {
                    let res = play(b, &g, s.tol)?;
                    r.verdict("strategy", "behavior as given");
                    (res.value, res.bound)
                }
                Payload::ProcessMatrix(p) => {
                    let q = two_lab_reduction(p)?.ok_or(Error::LabCount { expected: 2, got: p.labs().len() })?;
                    r.verdict("strategy", "best local instruments");
                    (best_game_value(&ic_behavior(&q)?, &g)?, causal_bound(&g)?)
                }
                Payload::Behavior(b) => {
                    r.verdict("strategy", "best relabeling of the behavior");
                    (best_game_value(b, &g)?, causal_bound(&g)?)
                }
                _ => return Err(Error::Precondition(format!("cannot play a game with a `{}` file", pf.kind()))),
            };
            r.computed("value", value);
            r.computed("bound", bound);
            r.verdict("violates_bound", (value > bound + s.tol).to_string());
            (r, false)
        }
        Command::SwitchDemo { discriminate } => match discriminate.as_deref() {
            Some([u, v]) => {
                let d = switch_discriminate(&gate(u)?, &gate(v)?)?;
                let mut r = Report::new("switch-demo", format!("discriminate {u} {v}"));
                let outcome = if d.p_plus >= 0.5 { "+" } else { "-" };
                r.verdict("outcome", outcome);
                r.verdict(
                    "relation",
                    match d.relation {
                        Commutation::Commute => "commute",
                        Commutation::Anticommute => "anticommute",
                        Commutation::Neither => "neither",
                    },
                );
                r.computed("probability", d.p_plus);
                (r, false)
            }
            Some(_) => unreachable!("clap enforces two values"),
            None => {
                let plus = CMatrix::from_fn(2, 2, |_, _| C64::new(0.5, 0.0));
                let inst = SwitchInstance::unitary(plus, &pauli_x(), &pauli_z())?;
                let mut r = Report::new("switch-demo", "control |+>, gates X and Z");
                r.computed("fine_grained_deviation", fine_grained_equivalence(&inst)?);
                r.computed("uncorrelated_copies_deviation", uncorrelated_copies_deviation(&inst)?);
                let d = switch_discriminate(&pauli_x(), &pauli_z())?;
                r.computed("discrimination.probability_plus", d.p_plus);
                let w = switch_w_matrix();
                let v = validate_process_seeded(&w, DEFAULT_N_RANDOM, s.tol, s.seed);
                r.verdict("w_valid", v.valid().to_string());
                let ordered = is_causally_ordered(&w, s.tol)?;
                r.verdict("w_causally_ordered", ordered.is_some().to_string());
                (r, false)
            }
        },
        Command::Ctc { action: CtcCommand::Enumerate { n } } => {
            let all = enumerate_valid(*n)?;
            let mut r = Report::new("ctc enumerate", format!("{n} labs"));
            r.computed("count", all.len() as f64);
            r.computed("cyclic", all.iter().filter(|f| !signalling_structure(f).is_acyclic()).count() as f64);
            r.items.extend(all.iter().map(|f| f.to_string()));
            (r, false)
        }
        Command::Ctc { action: CtcCommand::Check { file, ops } } => {
            let pf = read_file(file)?;
            let Payload::ProcessFunction(f) = &pf.payload else {
                return Err(Error::Precondition(format!("expected a process_function file, got `{}`", pf.kind())));
            };
            let mut r = Report::new("ctc check", pf.subject());
            r.verdict("signalling", signalling_structure(f).to_string());
            if !ops.is_empty() {
                let ops = ops.iter().map(|o| LocalOp::parse(o)).collect::<Result<Vec<_>>>()?;
                let count = fixed_points(f, &ops)?;
                let shown: Vec<String> = ops.iter().map(|o| o.to_string()).collect();
                r.verdict("operations", shown.join(","));
                r.computed("fixed_points", count as f64);
                r.verdict("consistent", (count == 1).to_string());
                r.items.push(format!("({}) has {count} fixed points", shown.join(", ")));
                return Ok((r, count != 1));
            }
            let c = check_consistency(f)?;
            r.verdict("consistent", c.valid.to_string());
            if let Some((ops, count)) = &c.counterexample {
                let ops: Vec<String> = ops.iter().map(|o| o.to_string()).collect();
                r.items.push(format!("counterexample: ({}) has {count} fixed points", ops.join(", ")));
            }
            (r, !c.valid)
        }
        Command::Qcm { action } => {
            let (file, output) = match action {
                QcmCommand::Verify { file } => (file, None),
                QcmCommand::Discover { file, output } => (file, Some(output)),
            };
            let pf = read_file(file)?;
            let Payload::Qcm(q) = &pf.payload else {
                return Err(Error::Precondition(format!("expected a qcm file, got `{}`", pf.kind())));
            };
            let mut r = Report::new(if output.is_some() { "qcm discover" } else { "qcm verify" }, pf.subject());
            r.input("tol", s.tol);
            r.verdict("dag", q.dag.graph.to_string());
            let ok = match output {
                None => verify_qcm(q, s, &mut r),
                Some(out) => match markov_discover(&q.sigma, &q.dag, s.tol) {
                    Some(m) => {
                        r.computed("max_commutator", m.max_commutator()?);
                        if let Some(path) = out {
                            let found = QcmFile { dag: q.dag.clone(), sigma: q.sigma.clone(), channels: Some(m.channels.clone()) };
                            write_output(path, &ProcessFile::new(pf.name.clone(), Payload::Qcm(found)))?;
                            r.verdict("written", path.display().to_string());
                        }
                        true
                    }
                    None => false,
                },
            };
            r.verdict("markov", ok.to_string());
            (r, !ok)
        }
        Command::Reverse { file, output } => {
            let pf = read_file(file)?;
            let Payload::IsDescription(d) = &pf.payload else {
                return Err(Error::Precondition(format!("expected an is_description file, got `{}`", pf.kind())));
            };
            let mut r = Report::new("reverse", pf.subject());
            match reverse_is(d) {
                Err(e) => {
                    r.verdict("reversible", format!("precondition failed: {e}"));
                    return Ok((r, true));
                }
                Ok(rev) => {
                    r.items.extend(rev.operations().iter().map(|op| {
                        format!("{}: ({}) -> ({})", op.name, op.inputs.join(", "), op.outputs.join(", "))
                    }));
                    if let Some(path) = output {
                        write_output(path, &ProcessFile::new(pf.name.clone(), Payload::IsDescription(rev)))?;
                        r.verdict("written", path.display().to_string());
                    }
                }
            }
            let ok = match causal_reversibility_check(d, s.tol) {
                Ok(ok) => {
                    r.verdict("reversible", ok.to_string());
                    ok
                }
                Err(e) => {
                    r.verdict("reversible", format!("precondition failed: {e}"));
                    false
                }
            };
            (r, !ok)
        }
    })
}

fn verify_qcm(q: &QcmFile, s: &Settings, r: &mut Report) -> bool {
    match &q.channels {
        Some(cs) => match QuantumCausalModel::new(q.dag.clone(), cs.clone()) {
            Ok(m) => verify_markov(&q.sigma, &m, s.tol),
            Err(e) => {
                r.verdict("channels", format!("rejected: {e}"));
                false
            }
        },
        None => {
            r.verdict("channels", "extracted from sigma");
            markov_discover(&q.sigma, &q.dag, s.tol).is_some()
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_command<I, T>(argv: I) -> CommandOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutput { code: 2, stdout: String::new(), stderr: text }
            } else {
                CommandOutput { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    let settings = Settings {
        tol: cli.tol,
        seed: cli.seed,
        max_iter: cli.max_iter,
    };
    match dispatch(&cli.command, &settings) {
        Ok((report, negative)) => {
            let stdout = match (cli.quiet, cli.json) {
                (true, _) => String::new(),
                (false, true) => report.to_json(),
                (false, false) => report.to_text(),
            };
            CommandOutput {
                code: i32::from(negative),
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => CommandOutput {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::behavior::identity_channel_behavior;
    use crate::games::ocb_process;

    fn round_trip(pf: ProcessFile) {
        let text = serialize(&pf);
        assert_eq!(parse(text.as_bytes()).unwrap(), pf, "{text}");
    }

    #[test]
    fn behavior_file_parses() {
        let text = r#"{"kind": "behavior", "labs": ["A", "B"], "settings": [2, 1], "outcomes": [1, 2],
                       "table": [1, 0, 0, 1]}"#;
        let pf = parse(text.as_bytes()).unwrap();
        let Payload::Behavior(b) = &pf.payload else { panic!() };
        assert_eq!(b.labs().len(), 2);
        assert_eq!(b, &identity_channel_behavior());
    }

    #[test]
    fn complex_entries_and_truncation() {
        let text = r#"{"kind": "process_matrix", "labs": [{"name": "A", "in_dim": 1, "out_dim": 2}],
                       "w": [[[1, 0], [0, 0.5]], [[0, -0.5], 1]]}"#;
        let pf = parse(text.as_bytes()).unwrap();
        let Payload::ProcessMatrix(p) = &pf.payload else { panic!() };
        assert_eq!(p.w().matrix().get(0, 1), C64::new(0.0, 0.5));
        assert_eq!(p.w().matrix().get(1, 1), C64::new(1.0, 0.0));

        let truncated = text.replace(", 1]]}", "]]}");
        match parse(truncated.as_bytes()) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "w[1]"),
            other => panic!("{other:?}"),
        }
        match parse(br#"{"kind": "tensor"}"#) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "kind"),
            other => panic!("{other:?}"),
        }
        match parse(b"{\"kind\": \n 1.5e}") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips() {
        round_trip(ProcessFile::new(Some("ocb".into()), Payload::ProcessMatrix(ocb_process())));
        round_trip(ProcessFile::new(None, Payload::Behavior(identity_channel_behavior())));
        round_trip(ProcessFile::new(None, Payload::ProcessFunction(ProcessFunction::identity(2))));
        round_trip(ProcessFile::new(None, Payload::IsDescription(crate::osis::identity_is(3))));
        let dag = Dag::new(vec![Lab::qudit("A", 1, 2), Lab::qudit("B", 2, 1)], &[("A", "B")]).unwrap();
        let m = QuantumCausalModel::random(4, dag.clone()).unwrap();
        let sigma = crate::qcm::build_process_operator(&m).unwrap();
        round_trip(ProcessFile::new(None, Payload::Qcm(QcmFile { dag, sigma, channels: Some(m.channels) })));
    }

    #[test]
    fn usage_errors_exit_2() {
        let out = run_command(["causalkit", "classify", "/nonexistent/file.json"]);
        assert_eq!(out.code, 2);
        assert!(out.stderr.contains("nonexistent"));
        assert_eq!(run_command(["causalkit", "frobnicate"]).code, 2);
        assert_eq!(run_command(["causalkit", "--help"]).code, 0);
    }

    #[test]
    fn switch_discrimination_command() {
        let out = run_command(["causalkit", "switch-demo", "--discriminate", "X", "Z"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("outcome: -"), "{}", out.stdout);
        assert!(out.stdout.contains("probability = 0.0"), "{}", out.stdout);
        let out = run_command(["causalkit", "switch-demo", "--discriminate", "X", "X"]);
        assert!(out.stdout.contains("outcome: +"));
    }

    #[test]
    fn ctc_enumerate_one_lab() {
        let out = run_command(["causalkit", "--json", "ctc", "enumerate", "1"]);
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["items"].as_array().unwrap().len(), 2);
        assert_eq!(v["evidence"]["count"]["value"], 2.0);
    }

    #[test]
    fn behavior_classification() {
        let s = Settings::default();
        let pf = ProcessFile::new(None, Payload::Behavior(identity_channel_behavior()));
        assert_eq!(classify(&pf, &s).unwrap().verdicts["classification"], "causally ordered");
        let pf = ProcessFile::new(None, Payload::Behavior(crate::causal::behavior::two_way_behavior()));
        let r = classify(&pf, &s).unwrap();
        assert!(r.verdicts["classification"].starts_with("non-causal"), "{r:?}");
        let pf = ProcessFile::new(None, Payload::ProcessFunction(ProcessFunction::identity(1)));
        assert!(classify(&pf, &s).is_err());
    }
}
