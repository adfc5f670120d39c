//! Causal-order detection on a subset of labs, and order checks for
//! process matrices.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::causal::behavior::{behavior_of, signal_requirement_check, Behavior};
use crate::causal::order::{posets_on, BiOrder, PartialOrder};
use crate::error::{Error, Result};
use crate::process::{ic_instruments, ProcessMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalOrderVerdict {
    pub exhibits: bool,
    pub witnessing_background_order: Option<PartialOrder>,
    pub compatible_orders: Vec<PartialOrder>,
    pub incompatible_orders: Vec<PartialOrder>,
}

type PairSet = BTreeSet<(String, String)>;

/// Does the behavior exhibit causal order on `subset`?
///
/// For each background order `O` on the remaining labs, an order `O_X` on the
/// subset counts as compatible when some order on all labs restricting to
/// `O` and `O_X` passes the signal requirement. The verdict is positive as
/// soon as one background order has both compatible and incompatible orders
/// on the subset. When none does, the lists refer to the first background
/// order (the empty one).
pub fn detect_causal_order(b: &Behavior, subset: &[String], tol: f64) -> Result<CausalOrderVerdict> {
    for s in subset {
        if b.lab_index(s).is_none() {
            return Err(Error::InvalidBehavior(format!("unknown lab `{s}`")));
        }
    }
    let set: BTreeSet<&String> = subset.iter().collect();
    if set.len() != subset.len() {
        return Err(Error::InvalidBehavior("subset lists a lab twice".into()));
    }
    let rest: Vec<String> = b.labs().iter().filter(|l| !set.contains(l)).cloned().collect();

    // every order on all labs that passes, keyed by its two restrictions
    let mut passing: BTreeSet<(PairSet, PairSet)> = BTreeSet::new();
    for full in posets_on(b.labs().to_vec())? {
        if signal_requirement_check(b, &full, tol)? {
            passing.insert((full.restrict(&rest)?.pairs(), full.restrict(subset)?.pairs()));
        }
    }

    let candidates = posets_on(subset.to_vec())?;
    let mut first: Option<CausalOrderVerdict> = None;
    for background in posets_on(rest.clone())? {
        let key = background.pairs();
        let (compatible, incompatible): (Vec<_>, Vec<_>) = candidates
            .iter()
            .cloned()
            .partition(|o| passing.contains(&(key.clone(), o.pairs())));
        let exhibits = !compatible.is_empty() && !incompatible.is_empty();
        let verdict = CausalOrderVerdict {
            exhibits,
            witnessing_background_order: exhibits.then(|| background.clone()),
            compatible_orders: compatible,
            incompatible_orders: incompatible,
        };
        if exhibits {
            return Ok(verdict);
        }
        first.get_or_insert(verdict);
    }
    Ok(first.expect("at least the empty background order"))
}

/// The bi-order of the first compatible order of a positive verdict.
pub fn biorder_of(verdict: &CausalOrderVerdict) -> Result<BiOrder> {
    if !verdict.exhibits {
        return Err(Error::NoCausalOrder);
    }
    let first = verdict.compatible_orders.first().ok_or(Error::NoCausalOrder)?;
    Ok(BiOrder::new(first.clone()))
}

/// Behavior of `p` under the informationally complete instrument family.
pub fn ic_behavior(p: &ProcessMatrix) -> Result<Behavior> {
    let sets: Vec<_> = p.labs().iter().map(ic_instruments).collect();
    behavior_of(p, &sets)
}

/// The first order (in enumeration order) satisfying the signal requirement
/// on the informationally complete behavior, if any.
pub fn is_causally_ordered(p: &ProcessMatrix, tol: f64) -> Result<Option<PartialOrder>> {
    if p.labs().len() > 4 {
        return Err(Error::TooLarge(format!("{} labs; at most 4 supported", p.labs().len())));
    }
    let b = ic_behavior(p)?;
    for order in posets_on(p.lab_names())? {
        if signal_requirement_check(&b, &order, tol)? {
            return Ok(Some(order));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::behavior::*;
    use crate::linalg::CMatrix;
    use crate::process::{identity_channel, w_from_chain, Lab};
    use crate::tensor::DenseOperator;

    fn ab() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn definition_trio() {
        let v = detect_causal_order(&identity_channel_behavior(), &ab(), DEPENDENCE_TOL).unwrap();
        assert!(v.exhibits);
        assert_eq!(v.compatible_orders, vec![PartialOrder::new(ab(), &[("A", "B")]).unwrap()]);
        assert_eq!(v.incompatible_orders.len(), 2);

        let v = detect_causal_order(&tsirelson_behavior(), &ab(), DEPENDENCE_TOL).unwrap();
        assert!(!v.exhibits);
        assert_eq!(v.compatible_orders.len(), 3);

        let v = detect_causal_order(&two_way_behavior(), &ab(), DEPENDENCE_TOL).unwrap();
        assert!(!v.exhibits);
        assert!(v.compatible_orders.is_empty());
        assert!(matches!(biorder_of(&v), Err(Error::NoCausalOrder)));
    }

    #[test]
    fn background_lab_is_conditioned_on() {
        // C is a spectator; A -> B signalling persists
        let id = identity_channel_behavior();
        let b = Behavior::from_fn(&["A", "B", "C"], vec![2, 1, 2], vec![1, 2, 1], |s, o| id.prob(&s[..2], &o[..2])).unwrap();
        let v = detect_causal_order(&b, &ab(), DEPENDENCE_TOL).unwrap();
        assert!(v.exhibits);
        assert_eq!(v.witnessing_background_order.unwrap().len(), 1);
        // a subset with no signalling inside cannot exhibit causal order
        let v = detect_causal_order(&b, &["C".into()], DEPENDENCE_TOL).unwrap();
        assert!(!v.exhibits);
    }

    #[test]
    fn chain_is_ordered() {
        let a = Lab::qubit("A");
        let b = Lab::qubit("B");
        let state = DenseOperator::new(vec![a.in_space.clone()], CMatrix::identity(2).scale_real(0.5)).unwrap();
        let ch = identity_channel(a.out_space.clone(), b.in_space.clone()).unwrap();
        let p = w_from_chain(&state, &[ch], &[a, b]).unwrap();
        let order = is_causally_ordered(&p, DEPENDENCE_TOL).unwrap().unwrap();
        assert_eq!(order, PartialOrder::new(ab(), &[("A", "B")]).unwrap());
        let v = detect_causal_order(&ic_behavior(&p).unwrap(), &ab(), DEPENDENCE_TOL).unwrap();
        assert!(v.exhibits);
        assert_eq!(biorder_of(&v).unwrap(), BiOrder::new(order.reverse()));
    }
}
