//! Classical closed loops: the grandfather paradox has no consistent history,
//! and with three parties some consistent loops have cyclic signalling.

use causalkit::ctc::{check_consistency, enumerate_valid, fixed_points, is_trivial, signalling_structure, LocalOp, ProcessFunction};

fn main() -> causalkit::Result<()> {
    // one lab whose output is fed straight back as its input
    let loop1 = ProcessFunction::identity(1);
    for op in LocalOp::ALL {
        println!("identity loop with local op {op:>3}: {} fixed points", fixed_points(&loop1, &[op])?);
    }
    let report = check_consistency(&loop1)?;
    println!("identity loop consistent: {} (counterexample {:?})", report.valid, report.counterexample);
    println!("constant loop consistent: {}", check_consistency(&ProcessFunction::constant(1, 0)?)?.valid);

    for n in 1..=3 {
        let valid = enumerate_valid(n)?;
        let cyclic: Vec<_> = valid.iter().filter(|p| !is_trivial(p)).collect();
        println!("{n} labs: {} consistent process functions, {} with cyclic signalling", valid.len(), cyclic.len());
        if let Some(p) = cyclic.first() {
            println!("  e.g. {p}");
            println!("  signalling {}", signalling_structure(p));
        }
    }
    Ok(())
}
