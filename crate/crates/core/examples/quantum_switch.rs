//! The quantum switch: coherent control of gate order, perfect
//! commutation discrimination, and its process matrix.

use causalkit::causal::detect::is_causally_ordered;
use causalkit::linalg::{basis_vector, hadamard, pauli_x, pauli_y, pauli_z, CMatrix, C64};
use causalkit::process::validate_process;
use causalkit::switch::{
    fine_grained_equivalence, switch_discriminate, switch_output, switch_w_matrix, uncorrelated_copies_deviation,
    SwitchInstance,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> causalkit::Result<()> {
    let gates = [("X", pauli_x()), ("Y", pauli_y()), ("Z", pauli_z()), ("H", hadamard())];
    println!("p(control = +) after the switch, target |0>:");
    for (a, u) in &gates {
        let row: Vec<String> = gates
            .iter()
            .map(|(_, v)| switch_discriminate(u, v).map(|d| format!("{:.3}", d.p_plus)))
            .collect::<causalkit::Result<_>>()?;
        println!("  {a}: {}", row.join("  "));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = CMatrix::haar_unitary(2, &mut rng);
    let v = CMatrix::haar_unitary(2, &mut rng);
    let plus = CMatrix::from_fn(2, 2, |_, _| C64::new(0.5, 0.0));
    let s = SwitchInstance::unitary(plus, &u, &v)?;
    println!("fine-grained routing deviation:   {:.2e}", fine_grained_equivalence(&s)?);
    println!("uncorrelated copies deviation:    {:.3}", uncorrelated_copies_deviation(&s)?);

    let zero = CMatrix::outer(&basis_vector(2, 0));
    let out = switch_output(&SwitchInstance::unitary(zero, &u, &v)?, &CMatrix::outer(&basis_vector(2, 0)))?;
    println!("control |0>: output trace {:.6}", out.trace().re);

    let w = switch_w_matrix();
    println!("switch W valid: {}", validate_process(&w, 16, 1e-9).valid());
    println!("switch W causally ordered: {:?}", is_causally_ordered(&w, 1e-7)?);
    Ok(())
}
