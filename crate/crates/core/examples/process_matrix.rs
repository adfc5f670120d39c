//! Process matrices from circuits: validity and the generalized Born rule.

use causalkit::causal::order::PartialOrder;
use causalkit::linalg::{basis_vector, CMatrix};
use causalkit::process::{born_probability, identity_channel, random_causal_process, validate_process, w_from_chain, Lab};
use causalkit::tensor::DenseOperator;

fn main() -> causalkit::Result<()> {
    let (a, b) = (Lab::qubit("A"), Lab::qubit("B"));
    // a qubit wire from A's output to B's input, A starting in |0>
    let state = DenseOperator::new(vec![a.in_space.clone()], CMatrix::outer(&basis_vector(2, 0)))?;
    let wire = identity_channel(a.out_space.clone(), b.in_space.clone())?;
    let p = w_from_chain(&state, &[wire], &[a.clone(), b.clone()])?;
    println!("A -> B wire: {:?}", validate_process(&p, 16, 1e-9));

    // A measures Z and re-prepares |1>; B measures Z
    let proj = |k| CMatrix::outer(&basis_vector(2, k));
    let a_map = |k| DenseOperator::new(a.spaces(), proj(k).transpose().kron(&proj(1))).unwrap();
    let b_disc = Lab::qudit("B", 2, 1);
    let p1 = w_from_chain(&state, &[identity_channel(a.out_space.clone(), b_disc.in_space.clone())?], &[a.clone(), b_disc.clone()])?;
    for oa in 0..2 {
        for ob in 0..2 {
            let bm = DenseOperator::new(b_disc.spaces(), proj(ob).transpose())?;
            println!("p(a={oa}, b={ob}) = {:.3}", born_probability(&p1, &[&a_map(oa), &bm])?);
        }
    }

    let labs = vec![Lab::qubit("A"), Lab::qubit("B"), Lab::qubit("C")];
    let q = random_causal_process(4, &PartialOrder::chain(vec!["A".into(), "B".into(), "C".into()]), &labs)?;
    println!("random three-lab chain valid: {}", validate_process(&q, 16, 1e-9).valid());
    Ok(())
}
