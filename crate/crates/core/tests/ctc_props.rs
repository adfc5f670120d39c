use std::collections::BTreeSet;

use causalkit::ctc::{check_consistency, enumerate_valid, is_trivial, LocalOp, ProcessFunction};
use proptest::prelude::*;

fn truth(op: LocalOp) -> [u32; 2] {
    match op {
        LocalOp::Zero => [0, 0],
        LocalOp::Identity => [0, 1],
        LocalOp::Not => [1, 0],
        LocalOp::One => [1, 1],
    }
}

/// Consistent iff every tuple of local operations leaves exactly one
/// input that reproduces itself around the loop.
fn slow_consistent(p: &ProcessFunction) -> bool {
    let n = p.n_labs;
    let ops = LocalOp::ALL;
    (0..4usize.pow(n as u32)).all(|code| {
        let choice: Vec<LocalOp> = (0..n).map(|i| ops[code / 4usize.pow(i as u32) % 4]).collect();
        let mut count = 0;
        for a in 0..1u32 << n {
            let mut out = 0;
            for (i, op) in choice.iter().enumerate() {
                out |= truth(*op)[(a >> i & 1) as usize] << i;
            }
            if p.table[out as usize] == a {
                count += 1;
            }
        }
        count == 1
    })
}

/// A random function whose dependence follows the lab order `perm`.
fn ordered_function(n: usize, perm: &[usize], bits: &[bool]) -> ProcessFunction {
    let mut table = vec![0u32; 1 << n];
    for (x, entry) in table.iter_mut().enumerate() {
        for (pos, &lab) in perm.iter().enumerate() {
            // input of `lab` depends on the outputs of labs before it
            let key = perm[..pos].iter().fold(0usize, |acc, &e| acc * 2 + (x >> e & 1));
            let bit = bits[(lab * 8 + key) % bits.len()];
            *entry |= u32::from(bit) << lab;
        }
    }
    ProcessFunction::new(n, table).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn consistency_matches_slow_oracle(n in 1..4usize, seed in prop::collection::vec(0..8u32, 8)) {
        let table: Vec<u32> = (0..1usize << n).map(|x| seed[x % 8] & ((1 << n) - 1)).collect();
        let p = ProcessFunction::new(n, table).unwrap();
        prop_assert_eq!(check_consistency(&p).unwrap().valid, slow_consistent(&p));
    }

    #[test]
    fn ordered_functions_are_consistent(perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
                                        bits in prop::collection::vec(any::<bool>(), 24)) {
        let p = ordered_function(3, &perm, &bits);
        prop_assert!(is_trivial(&p));
        prop_assert!(check_consistency(&p).unwrap().valid);
        prop_assert!(slow_consistent(&p));
    }
}

#[test]
fn exhaustive_small_cases_agree_with_oracle() {
    for n in 1..=2usize {
        let m = 1u32 << n;
        for code in 0..m.pow(m) {
            let table: Vec<u32> = (0..m).map(|x| code / m.pow(x) % m).collect();
            let p = ProcessFunction::new(n, table).unwrap();
            assert_eq!(check_consistency(&p).unwrap().valid, slow_consistent(&p), "{p}");
            if is_trivial(&p) {
                assert!(slow_consistent(&p), "{p}");
            }
        }
    }
}

#[test]
fn valid_sets_are_closed_under_symmetries() {
    for n in 1..=2usize {
        let all: BTreeSet<ProcessFunction> = enumerate_valid(n).unwrap().into_iter().collect();
        let perms: Vec<Vec<usize>> = if n == 1 { vec![vec![0]] } else { vec![vec![0, 1], vec![1, 0]] };
        for p in &all {
            for perm in &perms {
                assert!(all.contains(&p.relabeled(perm)));
            }
            for i in 0..n {
                assert!(all.contains(&p.flipped(i)));
            }
        }
    }
}
