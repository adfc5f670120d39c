//! Strict partial orders on lab labels, their enumeration, and bi-orders.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest element count `enumerate_posets` accepts.
pub const MAX_POSET_ELEMENTS: usize = 5;

/// A strict partial order on named elements.
///
/// Stored as a predecessor bitmask per element: bit `j` of `below[i]` is set
/// iff `elements[j] < elements[i]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialOrder {
    elements: Vec<String>,
    below: Vec<u64>,
}

impl PartialOrder {
    /// Validates irreflexivity, antisymmetry and transitivity of `pairs`
    /// (each `(a, b)` meaning `a < b`).
    pub fn new(elements: Vec<String>, pairs: &[(&str, &str)]) -> Result<Self> {
        let below = Self::collect_pairs(&elements, pairs)?;
        let order = PartialOrder { elements, below };
        order.check()?;
        Ok(order)
    }

    /// Like [`PartialOrder::new`] but closes the relation transitively first;
    /// fails only if the generated relation has a cycle.
    pub fn from_generators(elements: Vec<String>, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut below = Self::collect_pairs(&elements, pairs)?;
        let n = elements.len();
        loop {
            let mut changed = false;
            for i in 0..n {
                let mut acc = below[i];
                for j in 0..n {
                    if below[i] >> j & 1 == 1 {
                        acc |= below[j];
                    }
                }
                if acc != below[i] {
                    below[i] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let order = PartialOrder { elements, below };
        order.check()?;
        Ok(order)
    }

    fn collect_pairs(elements: &[String], pairs: &[(&str, &str)]) -> Result<Vec<u64>> {
        if elements.len() > 64 {
            return Err(Error::TooLarge("partial orders hold at most 64 elements".into()));
        }
        let unique: BTreeSet<&String> = elements.iter().collect();
        if unique.len() != elements.len() {
            return Err(Error::InvalidOrder("duplicate element".into()));
        }
        let idx = |name: &str| {
            elements
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| Error::InvalidOrder(format!("unknown element `{name}`")))
        };
        let mut below = vec![0u64; elements.len()];
        for (a, b) in pairs {
            let (i, j) = (idx(a)?, idx(b)?);
            below[j] |= 1 << i;
        }
        Ok(below)
    }

    fn check(&self) -> Result<()> {
        let n = self.elements.len();
        for i in 0..n {
            if self.below[i] >> i & 1 == 1 {
                return Err(Error::InvalidOrder(format!(
                    "`{}` < `{}` violates irreflexivity",
                    self.elements[i], self.elements[i]
                )));
            }
            for j in 0..n {
                if self.less_idx(j, i) && self.less_idx(i, j) {
                    return Err(Error::InvalidOrder(format!(
                        "`{}` and `{}` precede each other",
                        self.elements[i], self.elements[j]
                    )));
                }
                if self.less_idx(j, i) && (self.below[j] & !self.below[i]) != 0 {
                    return Err(Error::InvalidOrder("relation is not transitive".into()));
                }
            }
        }
        Ok(())
    }

    /// The empty relation (every pair incomparable).
    pub fn empty(elements: Vec<String>) -> Self {
        let n = elements.len();
        PartialOrder {
            elements,
            below: vec![0; n],
        }
    }

    /// The total order listing `elements` first to last.
    pub fn chain(elements: Vec<String>) -> Self {
        let below = (0..elements.len()).map(|i| (1u64 << i) - 1).collect();
        PartialOrder { elements, below }
    }

    pub(crate) fn from_masks(elements: Vec<String>, below: Vec<u64>) -> Self {
        PartialOrder { elements, below }
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == name)
    }

    #[inline]
    pub fn less_idx(&self, a: usize, b: usize) -> bool {
        self.below[b] >> a & 1 == 1
    }

    /// `a < b`; false when either name is absent.
    pub fn less(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.less_idx(i, j),
            _ => false,
        }
    }

    /// Indices of the strict predecessors of element `i`.
    pub fn predecessors(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.less_idx(j, i)).collect()
    }

    pub fn predecessor_mask(&self, i: usize) -> u64 {
        self.below[i]
    }

    /// Immediate successors (covering relation) of `i`.
    pub fn covers_of(&self, i: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| {
                self.less_idx(i, j) && !(0..self.len()).any(|k| self.less_idx(i, k) && self.less_idx(k, j))
            })
            .collect()
    }

    /// Sorted `(smaller, larger)` name pairs.
    pub fn pairs(&self) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if self.less_idx(i, j) {
                    out.insert((self.elements[i].clone(), self.elements[j].clone()));
                }
            }
        }
        out
    }

    pub fn relation_count(&self) -> usize {
        self.below.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// Every relation flipped. Always another strict partial order.
    pub fn reverse(&self) -> Self {
        let n = self.len();
        let mut below = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                if self.less_idx(i, j) {
                    below[i] |= 1 << j;
                }
            }
        }
        PartialOrder {
            elements: self.elements.clone(),
            below,
        }
    }

    /// Restriction to the named subset (in the subset's order).
    pub fn restrict(&self, subset: &[String]) -> Result<Self> {
        let idx = subset
            .iter()
            .map(|s| {
                self.index_of(s)
                    .ok_or_else(|| Error::InvalidOrder(format!("unknown element `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let below = idx
            .iter()
            .map(|&i| {
                idx.iter()
                    .enumerate()
                    .filter(|(_, &j)| self.less_idx(j, i))
                    .fold(0u64, |m, (k, _)| m | 1 << k)
            })
            .collect();
        Ok(PartialOrder {
            elements: subset.to_vec(),
            below,
        })
    }

    /// Same relation with elements listed in another order.
    pub fn reindexed(&self, elements: &[String]) -> Result<Self> {
        if elements.len() != self.len() {
            return Err(Error::InvalidOrder("element sets differ".into()));
        }
        self.restrict(elements)
    }

    /// Some total order containing this one.
    pub fn linear_extension(&self) -> Vec<usize> {
        let n = self.len();
        let mut placed = 0u64;
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let next = (0..n)
                .find(|&i| placed >> i & 1 == 0 && self.below[i] & !placed == 0)
                .expect("strict partial orders are acyclic");
            placed |= 1 << next;
            out.push(next);
        }
        out
    }

    fn element_set(&self) -> BTreeSet<&String> {
        self.elements.iter().collect()
    }
}

impl PartialEq for PartialOrder {
    fn eq(&self, other: &Self) -> bool {
        self.element_set() == other.element_set() && self.pairs() == other.pairs()
    }
}

impl Eq for PartialOrder {}

impl fmt::Display for PartialOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs = self.pairs();
        if pairs.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}<{b}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// An order identified with its reversal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiOrder {
    pub representative: PartialOrder,
}

impl BiOrder {
    pub fn new(representative: PartialOrder) -> Self {
        BiOrder { representative }
    }

    /// Both members of the class.
    pub fn members(&self) -> [PartialOrder; 2] {
        [self.representative.clone(), self.representative.reverse()]
    }
}

impl PartialEq for BiOrder {
    fn eq(&self, other: &Self) -> bool {
        self.representative == other.representative
            || self.representative == other.representative.reverse()
    }
}

impl Eq for BiOrder {}

impl fmt::Display for BiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ {}", self.representative, self.representative.reverse())
    }
}

/// All labeled strict partial orders on `n` elements named `"0"`, `"1"`, ...
pub fn enumerate_posets(n: usize) -> Result<Vec<PartialOrder>> {
    let names = (0..n).map(|i| i.to_string()).collect();
    posets_on(names)
}

/// All strict partial orders on the given elements.
///
/// Built by inserting one element at a time: a new element is placed with a
/// down-closed set `D` below it and an up-closed set `U` above it, where every
/// member of `D` already precedes every member of `U`. Each order on `k + 1`
/// elements arises from exactly one order on the first `k` and one `(D, U)`.
pub fn posets_on(elements: Vec<String>) -> Result<Vec<PartialOrder>> {
    let n = elements.len();
    if n > MAX_POSET_ELEMENTS {
        return Err(Error::TooLarge(format!(
            "poset enumeration supports at most {MAX_POSET_ELEMENTS} elements, got {n}"
        )));
    }
    let mut layer: Vec<Vec<u64>> = vec![Vec::new()];
    for k in 0..n {
        let mut next = Vec::new();
        for below in &layer {
            let above = |i: usize| -> u64 {
                (0..k).filter(|&j| below[j] >> i & 1 == 1).fold(0, |m, j| m | 1 << j)
            };
            for d in 0u64..(1 << k) {
                // D must be down-closed
                if (0..k).any(|i| d >> i & 1 == 1 && below[i] & !d != 0) {
                    continue;
                }
                for u in 0u64..(1 << k) {
                    if u & d != 0 {
                        continue;
                    }
                    if (0..k).any(|i| u >> i & 1 == 1 && above(i) & !u != 0) {
                        continue;
                    }
                    // everything in D precedes everything in U
                    if (0..k).any(|i| u >> i & 1 == 1 && d & !below[i] != 0) {
                        continue;
                    }
                    let mut nb = below.clone();
                    for (i, m) in nb.iter_mut().enumerate() {
                        if u >> i & 1 == 1 {
                            *m |= 1 << k;
                        }
                    }
                    nb.push(d);
                    next.push(nb);
                }
            }
        }
        layer = next;
    }
    Ok(layer
        .into_iter()
        .map(|below| PartialOrder::from_masks(elements.clone(), below))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_posets(0).unwrap().len(), 1);
        assert_eq!(enumerate_posets(1).unwrap().len(), 1);
        assert_eq!(enumerate_posets(2).unwrap().len(), 3);
        assert_eq!(enumerate_posets(3).unwrap().len(), 19);
        assert_eq!(enumerate_posets(4).unwrap().len(), 219);
        assert_eq!(enumerate_posets(5).unwrap().len(), 4231);
    }

    #[test]
    fn too_many_elements() {
        assert!(matches!(enumerate_posets(6), Err(Error::TooLarge(_))));
    }

    #[test]
    fn enumerated_orders_are_unique_and_valid() {
        let all = enumerate_posets(4).unwrap();
        let set: BTreeSet<BTreeSet<(String, String)>> = all.iter().map(|o| o.pairs()).collect();
        assert_eq!(set.len(), all.len());
        for o in &all {
            o.check().unwrap();
            o.reverse().check().unwrap();
        }
    }

    #[test]
    fn rejects_non_orders() {
        let e = names(&["a", "b", "c"]);
        assert!(PartialOrder::new(e.clone(), &[("a", "a")]).is_err());
        assert!(PartialOrder::new(e.clone(), &[("a", "b"), ("b", "a")]).is_err());
        assert!(PartialOrder::new(e.clone(), &[("a", "b"), ("b", "c")]).is_err());
        assert!(PartialOrder::from_generators(e.clone(), &[("a", "b"), ("b", "c")]).is_ok());
        assert!(PartialOrder::from_generators(e, &[("a", "b"), ("b", "a")]).is_err());
    }

    #[test]
    fn equality_ignores_element_listing_order() {
        let a = PartialOrder::new(names(&["x", "y"]), &[("x", "y")]).unwrap();
        let b = PartialOrder::new(names(&["y", "x"]), &[("x", "y")]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, a.reverse());
    }

    #[test]
    fn biorder_identifies_reversal() {
        let a = PartialOrder::chain(names(&["A", "B", "C"]));
        assert_eq!(BiOrder::new(a.clone()), BiOrder::new(a.reverse()));
        let other = PartialOrder::chain(names(&["B", "A", "C"]));
        assert_ne!(BiOrder::new(a), BiOrder::new(other));
    }

    #[test]
    fn restrict_and_extend() {
        let o = PartialOrder::chain(names(&["A", "B", "C"]));
        let r = o.restrict(&names(&["C", "A"])).unwrap();
        assert!(r.less("A", "C"));
        assert_eq!(r.relation_count(), 1);
        let ext = o.linear_extension();
        assert_eq!(ext, vec![0, 1, 2]);
        assert_eq!(o.covers_of(0), vec![1]);
    }
}
