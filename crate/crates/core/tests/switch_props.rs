use causalkit::linalg::{basis_vector, pauli_x, pauli_z, CMatrix, C64};
use causalkit::switch::{fine_grained_equivalence, switch_discriminate, switch_output, switch_supermap, SwitchInstance};
use causalkit::process::tomographic_states;
use causalkit::tensor::is_cptp;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.matmul(b).unwrap()
}

fn phase(t: f64) -> C64 {
    C64::from_polar(1.0, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn classical_control_is_sequential(seed in any::<u64>(), d in 2..4usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = CMatrix::haar_unitary(d, &mut rng);
        let v = CMatrix::haar_unitary(d, &mut rng);
        let rho = CMatrix::random_density(d, &mut rng);
        for (k, seq) in [(0, mm(&v, &u)), (1, mm(&u, &v))] {
            let ctrl = CMatrix::outer(&basis_vector(2, k));
            let out = switch_output(&SwitchInstance::unitary(ctrl.clone(), &u, &v).unwrap(), &rho).unwrap();
            let expected = ctrl.kron(&mm(&mm(&seq, &rho), &seq.adjoint()));
            prop_assert!(out.max_abs_diff(&expected) < 1e-12);
        }
    }

    #[test]
    fn output_trace_is_preserved(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ctrl = CMatrix::random_density(2, &mut rng);
        let u = CMatrix::haar_unitary(2, &mut rng);
        let v = CMatrix::haar_unitary(2, &mut rng);
        let s = SwitchInstance::unitary(ctrl, &u, &v).unwrap();
        prop_assert!(is_cptp(&switch_supermap(&s).unwrap(), &["c_in", "t_in"], 1e-10));
        for t in tomographic_states(2) {
            let out = switch_output(&s, &t).unwrap();
            prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        }
        prop_assert!(fine_grained_equivalence(&s).unwrap() <= 1e-9);
    }

    #[test]
    fn discrimination_is_deterministic(seed in any::<u64>(), a in 0.0..6.3f64, b in 0.0..6.3f64) {
        // conjugated Pauli pairs anticommute; functions of one unitary commute
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = CMatrix::haar_unitary(2, &mut rng);
        let conj = |m: &CMatrix| mm(&mm(&q, m), &q.adjoint());
        let x = conj(&pauli_x()).scale(phase(a));
        let z = conj(&pauli_z()).scale(phase(b));
        prop_assert!(switch_discriminate(&x, &z).unwrap().p_plus.abs() < 1e-9);
        let w = CMatrix::haar_unitary(2, &mut rng);
        let w2 = mm(&w, &w).scale(phase(a));
        prop_assert!((switch_discriminate(&w, &w2).unwrap().p_plus - 1.0).abs() < 1e-9);
    }
}
