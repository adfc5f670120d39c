use causalkit::linalg::CMatrix;
use causalkit::tensor::{choi_of_unitary, hermitian_spectrum, partial_trace, tensor, DenseOperator, SpaceLabel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn op(names: &[&str], dims: &[usize], rng: &mut ChaCha8Rng) -> DenseOperator {
    let factors = names.iter().zip(dims).map(|(n, &d)| SpaceLabel::new(*n, d)).collect();
    let n: usize = dims.iter().product();
    DenseOperator::new(factors, CMatrix::ginibre(n, n, rng)).unwrap()
}

fn hermitian(names: &[&str], dims: &[usize], rng: &mut ChaCha8Rng) -> DenseOperator {
    let x = op(names, dims, rng);
    x.add(&x.adjoint()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(seed in any::<u64>(), da in 1..4usize, db in 1..4usize, dc in 1..4usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (op(&["a"], &[da], &mut rng), op(&["b"], &[db], &mut rng), op(&["c"], &[dc], &mut rng));
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.factors(), right.factors());
        prop_assert_eq!(left.dim(), da * db * dc);
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1..4usize, db in 1..4usize, dc in 1..3usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = op(&["a"], &[da], &mut rng);
        let b = op(&["b", "c"], &[db, dc], &mut rng);
        let got = partial_trace(&tensor(&a, &b).unwrap(), &["a"]).unwrap();
        let expected = a.scale_complex(b.trace());
        prop_assert!(got.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn spectrum_sums_to_trace(seed in any::<u64>(), da in 1..4usize, db in 1..4usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = hermitian(&["a", "b"], &[da, db], &mut rng);
        let s = hermitian_spectrum(&h, 1e-9).unwrap();
        prop_assert!((s.sum() - h.trace().re).abs() < 1e-10);
    }

    #[test]
    fn unitary_choi_is_rank_one(seed in any::<u64>(), d in 1..5usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = DenseOperator::new(vec![SpaceLabel::new("q", d)], CMatrix::haar_unitary(d, &mut rng)).unwrap();
        let j = choi_of_unitary(&u).unwrap();
        prop_assert!((j.trace().re - d as f64).abs() < 1e-10);
        let s = hermitian_spectrum(&j, 1e-9).unwrap();
        prop_assert_eq!(s.rank(1e-9), 1);
        prop_assert!((s.max() - d as f64).abs() < 1e-9);
    }
}
