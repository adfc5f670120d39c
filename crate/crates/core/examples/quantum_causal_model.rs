//! Markov factorization of a process operator over a DAG, and the
//! influence structure of a unitary and its inverse.

use causalkit::linalg::{pauli_x, CMatrix};
use causalkit::process::Lab;
use causalkit::qcm::{build_process_operator, influence_graph, markov_discover, unitary_choi, verify_markov, Dag, QuantumCausalModel};
use causalkit::tensor::SpaceLabel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> causalkit::Result<()> {
    let nodes: Vec<Lab> = ["A", "B", "C"].iter().map(|n| Lab::qubit(n)).collect();
    let fork = Dag::new(nodes.clone(), &[("A", "B"), ("A", "C")])?;
    let m = QuantumCausalModel::random(3, fork.clone())?;
    let sigma = build_process_operator(&m)?;
    println!("fork {}: round trip {}", fork.graph, verify_markov(&sigma, &m, 1e-7));
    println!("  max channel commutator {:.1e}", m.max_commutator()?);
    for edges in [vec![("A", "B"), ("A", "C")], vec![("A", "B")], vec![("A", "B"), ("B", "C")]] {
        let dag = Dag::new(nodes.clone(), &edges)?;
        println!("  Markov for {}: {}", dag.graph, markov_discover(&sigma, &dag, 1e-7).is_some());
    }

    let q = |n: &str| SpaceLabel::new(n, 2);
    let p0 = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let p1 = CMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
    let cnot = p0.kron(&CMatrix::identity(2)).add(&p1.kron(&pauli_x()));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, u) in [("CNOT", cnot), ("random", CMatrix::haar_unitary(4, &mut rng))] {
        let j = unitary_choi(&u, vec![q("1"), q("2")], vec![q("1'"), q("2'")])?;
        let ji = unitary_choi(&u.adjoint(), vec![q("1'"), q("2'")], vec![q("1"), q("2")])?;
        println!("{name}: U {}  U^-1 {}", influence_graph(&j, &["1", "2"], &["1'", "2'"], 1e-8)?,
            influence_graph(&ji, &["1'", "2'"], &["1", "2"], 1e-8)?);
    }
    Ok(())
}
