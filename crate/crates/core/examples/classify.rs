//! Writes a few process files and runs the command-line classifier on them.

use causalkit::causal::order::PartialOrder;
use causalkit::cli::{run_command, serialize, Payload, ProcessFile};
use causalkit::games::ocb_process;
use causalkit::process::{random_causal_process, Lab};
use causalkit::switch::switch_w_matrix;

fn main() -> causalkit::Result<()> {
    let dir = std::env::temp_dir().join("causalkit-classify-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let labs = vec![Lab::qubit("A"), Lab::qubit("B")];
    let chain = random_causal_process(1, &PartialOrder::chain(vec!["A".into(), "B".into()]), &labs)?;
    for (name, p) in [("chain", chain), ("ocb", ocb_process()), ("switch", switch_w_matrix())] {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, serialize(&ProcessFile::new(Some(name.into()), Payload::ProcessMatrix(p)))).expect("write");
        let out = run_command(["causalkit", "classify", path.to_str().expect("utf-8 path")]);
        print!("{}{}", out.stdout, out.stderr);
        println!();
    }
    Ok(())
}
