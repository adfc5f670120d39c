//! Heuristic search for a decomposition `W = W_{A<B} + W_{B<A}` into
//! positive parts compatible with each fixed order.
//!
//! A failed search is not a proof of non-separability; rigorous
//! non-causality certificates come from causal inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{Lab, ProcessMatrix};
use crate::tensor::DenseOperator;

pub const DEFAULT_MAX_ITER: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub enum SeparabilityVerdict {
    /// `W = weight * first + (1 - weight) * second`, with `first` ordered
    /// A before B and `second` B before A, each a valid process matrix up to
    /// `residual`.
    Separable {
        weight: f64,
        first: DenseOperator,
        second: DenseOperator,
        residual: f64,
        iterations: usize,
    },
    Undecided { gap: f64, iterations: usize },
}

impl SeparabilityVerdict {
    pub fn is_separable(&self) -> bool {
        matches!(self, SeparabilityVerdict::Separable { .. })
    }

    pub fn summary(&self) -> SeparabilitySummary {
        match self {
            SeparabilityVerdict::Separable { weight, residual, iterations, .. } => SeparabilitySummary {
                separable: true,
                weight: Some(*weight),
                residual: *residual,
                iterations: *iterations,
            },
            SeparabilityVerdict::Undecided { gap, iterations } => SeparabilitySummary {
                separable: false,
                weight: None,
                residual: *gap,
                iterations: *iterations,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparabilitySummary {
    pub separable: bool,
    pub weight: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Projector onto the span of process matrices compatible with the total
/// order `order` (lab indices, earliest first).
///
/// Writing `_X W = Tr_X W (x) 1_X / d_X`, the span is cut out by
/// `(1 - _{out_k}) _{after k} W = 0` for every lab `k`, where `after k`
/// holds all spaces of later labs. These maps are commuting projectors, so
/// the projector onto the intersection of their kernels is the product of
/// their complements.
pub fn ordered_projection(w: &DenseOperator, labs: &[Lab], order: &[usize]) -> Result<DenseOperator> {
    let mut x = w.clone();
    for (pos, &k) in order.iter().enumerate() {
        let mut after: Vec<&str> = Vec::new();
        for &j in &order[pos + 1..] {
            after.push(&labs[j].in_space.name);
            after.push(&labs[j].out_space.name);
        }
        let mut with_out = after.clone();
        with_out.push(&labs[k].out_space.name);
        x = x.sub(&x.trace_replace(&after)?)?.add(&x.trace_replace(&with_out)?)?;
    }
    Ok(x)
}

fn psd_violation(x: &DenseOperator) -> f64 {
    let (values, _) = x.matrix().eigh();
    (-values.last().copied().unwrap_or(0.0)).max(0.0)
}

fn orders_for(p: &ProcessMatrix) -> Result<(Vec<usize>, Vec<usize>)> {
    let labs = p.labs();
    match labs.len() {
        2 => Ok((vec![0, 1], vec![1, 0])),
        3 if labs[2].out_space.dim == 1 => Ok((vec![0, 1, 2], vec![1, 0, 2])),
        n => Err(Error::LabCount { expected: 2, got: n }),
    }
}

/// Dykstra's alternating projections between the affine set of admissible
/// splittings, `{X >= 0}` and `{W - X >= 0}`.
///
/// Accepts two labs, or two labs followed by a lab with trivial output (a
/// global future), which both orders place last.
pub fn is_causally_separable_2lab(p: &ProcessMatrix, tol: f64, max_iter: usize) -> Result<SeparabilityVerdict> {
    let (o1, o2) = orders_for(p)?;
    let labs = p.labs();
    let w = p.w();
    let p1 = |x: &DenseOperator| ordered_projection(x, labs, &o1);
    let p2 = |x: &DenseOperator| ordered_projection(x, labs, &o2);

    // X0 in L1 with W - X0 in L2, provided W lies in L1 + L2
    let x0 = p1(w)?.sub(&p1(&p2(w)?)?)?;
    let rest = w.sub(&x0)?;
    let outside = rest.sub(&p2(&rest)?)?.matrix().frobenius_norm();
    if outside > tol.max(1e-9) {
        return Ok(SeparabilityVerdict::Undecided { gap: outside, iterations: 0 });
    }
    let affine = |y: &DenseOperator| -> Result<DenseOperator> { x0.add(&p1(&p2(y)?)?) };

    let mut x = affine(&w.scale(0.5))?;
    let zero = DenseOperator::zeros(w.factors().to_vec())?;
    let (mut q1, mut q2, mut q3) = (zero.clone(), zero.clone(), zero);
    let mut gap = f64::INFINITY;
    for it in 1..=max_iter {
        let y = x.add(&q1)?;
        let next = y.psd_projection();
        q1 = y.sub(&next)?;
        x = next;

        let y = x.add(&q2)?;
        let next = w.sub(&w.sub(&y)?.psd_projection())?;
        q2 = y.sub(&next)?;
        x = next;

        let y = x.add(&q3)?;
        let next = affine(&y)?;
        q3 = y.sub(&next)?;
        x = next;

        if it % 10 == 0 || it == max_iter {
            gap = psd_violation(&x).max(psd_violation(&w.sub(&x)?));
            if gap <= tol {
                let total = w.trace().re;
                let weight = x.trace().re / total;
                let first = if weight > 0.0 { x.scale(1.0 / weight) } else { x.clone() };
                let other = w.sub(&x)?;
                let second = if weight < 1.0 { other.scale(1.0 / (1.0 - weight)) } else { other };
                return Ok(SeparabilityVerdict::Separable {
                    weight,
                    first,
                    second,
                    residual: gap,
                    iterations: it,
                });
            }
        }
    }
    Ok(SeparabilityVerdict::Undecided { gap, iterations: max_iter })
}
