use std::path::{Path, PathBuf};

use causalkit::causal::behavior::{identity_channel_behavior, tsirelson_behavior};
use causalkit::causal::order::PartialOrder;
use causalkit::cli::{parse, run_command, serialize, CommandOutput, Payload, ProcessFile, QcmFile};
use causalkit::games::{ocb_behavior, ocb_process};
use causalkit::osis::{random_bijective_chain, ISDescription, OpMap, Operation, Variable};
use causalkit::process::{random_causal_process, Lab, ProcessMatrix};
use causalkit::qcm::{build_process_operator, Dag, QuantumCausalModel};
use causalkit::switch::switch_w_matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn write(dir: &TempDir, name: &str, payload: Payload) -> PathBuf {
    let path = dir.path().join(format!("{name}.json"));
    std::fs::write(&path, serialize(&ProcessFile::new(Some(name.into()), payload))).unwrap();
    path
}

fn run(args: &[&str]) -> CommandOutput {
    let mut argv = vec!["causalkit"];
    argv.extend_from_slice(args);
    run_command(argv)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn chain() -> ProcessMatrix {
    let labs = vec![Lab::qubit("A"), Lab::qubit("B")];
    random_causal_process(1, &PartialOrder::chain(vec!["A".into(), "B".into()]), &labs).unwrap()
}

fn classification(out: &CommandOutput) -> String {
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    v["verdicts"]["classification"].as_str().unwrap().to_string()
}

#[test]
fn classify_places_processes_in_the_hierarchy() {
    let dir = TempDir::new().unwrap();
    let chain = write(&dir, "chain", Payload::ProcessMatrix(chain()));
    let ocb = write(&dir, "ocb", Payload::ProcessMatrix(ocb_process()));
    let switch = write(&dir, "switch", Payload::ProcessMatrix(switch_w_matrix()));

    let out = run(&["--json", "classify", p(&chain)]);
    assert_eq!(out.code, 0, "{out:?}");
    assert_eq!(classification(&out), "causally ordered");

    let out = run(&["--json", "classify", p(&ocb)]);
    let class = classification(&out);
    assert!(class.starts_with("non-causal (inequality violation 0.853553 > 0.75"), "{class}");
    // reproducible byte for byte
    assert_eq!(run(&["--json", "classify", p(&ocb)]).stdout, out.stdout);

    let out = run(&["--json", "classify", p(&switch)]);
    assert_eq!(classification(&out), "causal, not causally ordered; separability search: undecided (heuristic)");
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!(v["evidence"]["game.ocb.value"]["value"].as_f64().unwrap() <= 0.75 + 1e-9);
    assert_eq!(v["evidence"]["tol"]["provenance"], "input");
}

#[test]
fn classify_verdicts_are_nested() {
    let dir = TempDir::new().unwrap();
    for (name, payload) in [
        ("chain", Payload::ProcessMatrix(chain())),
        ("identity", Payload::Behavior(identity_channel_behavior())),
        ("tsirelson", Payload::Behavior(tsirelson_behavior())),
        ("ocb_behavior", Payload::Behavior(ocb_behavior())),
    ] {
        let path = write(&dir, name, payload);
        let out = run(&["--json", "classify", p(&path)]);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        let class = v["verdicts"]["classification"].as_str().unwrap();
        let ordered = v["verdicts"]["causally_ordered"].as_str().unwrap();
        if class == "causally ordered" {
            assert!(ordered.starts_with("yes"));
            if let Some(sep) = v["verdicts"]["separability"].as_str() {
                assert!(sep.starts_with("implied"));
            }
        } else {
            assert_eq!(ordered, "no", "{name}");
        }
        if class.starts_with("non-causal") {
            assert_ne!(v["verdicts"]["separability"], "separable");
        }
    }
}

#[test]
fn validate_and_order_commands() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "chain", Payload::ProcessMatrix(chain()));
    assert_eq!(run(&["validate", p(&good)]).code, 0);
    let bad = ProcessMatrix::new(chain().labs().to_vec(), chain().w().scale(0.5)).unwrap();
    let bad = write(&dir, "bad", Payload::ProcessMatrix(bad));
    let out = run(&["validate", p(&bad)]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("trace: false"), "{}", out.stdout);

    let id = write(&dir, "identity", Payload::Behavior(identity_channel_behavior()));
    let out = run(&["order-detect", p(&id)]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("biorder: {A<B} ~ {B<A}"), "{}", out.stdout);
    let ts = write(&dir, "tsirelson", Payload::Behavior(tsirelson_behavior()));
    assert_eq!(run(&["order-detect", p(&ts)]).code, 1);
    let out = run(&["signalling", p(&id)]);
    assert!(out.stdout.contains("A -> B"));

    let ocb = write(&dir, "ocb", Payload::Behavior(ocb_behavior()));
    let out = run(&["--json", "game", p(&ocb), "--game", "ocb"]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!((v["evidence"]["value"]["value"].as_f64().unwrap() - 0.8535533905932737).abs() < 1e-9);
    assert_eq!(v["verdicts"]["violates_bound"], "true");
}

#[test]
fn ctc_commands() {
    let out = run(&["--json", "ctc", "enumerate", "2"]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["evidence"]["cyclic"]["value"], 0.0);
    assert!(run(&["ctc", "enumerate", "9"]).code == 2);

    let dir = TempDir::new().unwrap();
    let swap = write(&dir, "swap", Payload::ProcessFunction(causalkit::ctc::ProcessFunction::new(2, vec![0, 2, 1, 3]).unwrap()));
    let out = run(&["ctc", "check", p(&swap)]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("counterexample"));
}

#[test]
fn qcm_commands() {
    let dir = TempDir::new().unwrap();
    let dag = Dag::new(["A", "B", "C"].iter().map(|n| Lab::qubit(n)).collect(), &[("A", "B"), ("B", "C")]).unwrap();
    let m = QuantumCausalModel::random(9, dag.clone()).unwrap();
    let sigma = build_process_operator(&m).unwrap();
    let with = write(&dir, "model", Payload::Qcm(QcmFile { dag: dag.clone(), sigma: sigma.clone(), channels: Some(m.channels.clone()) }));
    assert_eq!(run(&["qcm", "verify", p(&with)]).code, 0);

    let bare = write(&dir, "bare", Payload::Qcm(QcmFile { dag: dag.clone(), sigma: sigma.clone(), channels: None }));
    let found = dir.path().join("found.json");
    assert_eq!(run(&["qcm", "discover", p(&bare), "--output", p(&found)]).code, 0);
    assert_eq!(run(&["qcm", "verify", p(&found)]).code, 0);

    let wrong = Dag::new(dag.nodes.clone(), &[("A", "B")]).unwrap();
    let wrong = write(&dir, "wrong", Payload::Qcm(QcmFile { dag: wrong, sigma, channels: None }));
    assert_eq!(run(&["qcm", "discover", p(&wrong)]).code, 1);
}

#[test]
fn reverse_command() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = random_bijective_chain(4, 1, &mut rng).unwrap();
    let path = write(&dir, "chain", Payload::IsDescription(d.clone()));
    let out_path = dir.path().join("rev.json");
    let out = run(&["reverse", p(&path), "--output", p(&out_path)]);
    assert_eq!(out.code, 0, "{out:?}");
    assert!(out.stdout.contains("reversible: true"));
    let back = dir.path().join("back.json");
    assert_eq!(run(&["reverse", p(&out_path), "--output", p(&back)]).code, 0);
    let pf = parse(&std::fs::read(&back).unwrap()).unwrap();
    assert_eq!(pf.payload, Payload::IsDescription(d));

    let constant = ISDescription::new(
        vec![Variable::bit("x"), Variable::bit("y")],
        vec!["x".into()],
        vec![Operation::new("A", &["x"], &["y"], OpMap::Function(vec![0, 0]))],
    )
    .unwrap();
    let path = write(&dir, "constant", Payload::IsDescription(constant));
    let out = run(&["reverse", p(&path)]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("precondition failed"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"kind": "behavior", "labs": ["A"], "settings": [2], "outcomes": [2], "table": [1, 0, 0.5]}"#).unwrap();
    let out = run(&["classify", p(&path)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("table"), "{}", out.stderr);

    std::fs::write(&path, r#"{"kind": "process_matrix", "labs": [{"name": "A", "in_dim": 2, "out_dim": 1}], "w": [[1, 0], [0]]}"#).unwrap();
    let out = run(&["validate", p(&path)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("w[1]"), "{}", out.stderr);

    let ok = write(&dir, "id", Payload::Behavior(identity_channel_behavior()));
    let out = run(&["--quiet", "order-detect", p(&ok)]);
    assert_eq!((out.code, out.stdout.as_str()), (0, ""));
    assert_eq!(run(&["validate"]).code, 2);
}
