//! Alternating-projection search for a decomposition into ordered parts.

use causalkit::causal::separability::{is_causally_separable_2lab, DEFAULT_MAX_ITER};
use causalkit::games::ocb_process;
use causalkit::linalg::CMatrix;
use causalkit::process::{identity_channel, w_from_chain, Lab, ProcessMatrix};
use causalkit::tensor::DenseOperator;

fn chain(first: &Lab, second: &Lab) -> causalkit::Result<ProcessMatrix> {
    let state = DenseOperator::new(vec![first.in_space.clone()], CMatrix::identity(2).scale_real(0.5))?;
    let ch = identity_channel(first.out_space.clone(), second.in_space.clone())?;
    w_from_chain(&state, &[ch], &[first.clone(), second.clone()])
}

fn main() -> causalkit::Result<()> {
    let (a, b) = (Lab::qubit("A"), Lab::qubit("B"));
    let ab = chain(&a, &b)?;
    let ba = chain(&b, &a)?.w().permute(&["A_in", "A_out", "B_in", "B_out"])?;
    let mix = ProcessMatrix::new(vec![a, b], ab.w().scale(0.3).add(&ba.scale(0.7))?)?;

    for (name, p) in [("A then B", ab), ("30/70 mixture", mix), ("OCB", ocb_process())] {
        let v = is_causally_separable_2lab(&p, 1e-7, DEFAULT_MAX_ITER)?;
        println!("{name:>14}: {:?}", v.summary());
    }
    Ok(())
}
