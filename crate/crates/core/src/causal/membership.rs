//! Membership of a two-lab behavior in the causal polytope: the convex hull
//! of deterministic strategies in which at most one lab's setting reaches the
//! other.

use serde::{Deserialize, Serialize};

use crate::causal::behavior::Behavior;
use crate::error::{Error, Result};
use crate::linalg::digits;

/// Largest vertex count enumerated.
pub const MAX_VERTICES: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Membership {
    /// Convex weights on vertices (see [`causal_vertices`]).
    Causal { weights: Vec<(usize, f64)>, distance: f64 },
    NonCausal { distance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub membership: Membership,
    pub iterations: usize,
    /// Distance after each iteration.
    pub history: Vec<f64>,
}

impl MembershipReport {
    pub fn is_causal(&self) -> bool {
        matches!(self.membership, Membership::Causal { .. })
    }

    pub fn distance(&self) -> f64 {
        match self.membership {
            Membership::Causal { distance, .. } | Membership::NonCausal { distance } => distance,
        }
    }
}

/// Deterministic one-way strategies as behavior tables, A-first ones first.
///
/// In an A-first strategy A's outcome is a function of its setting and B's
/// outcome a function of both settings; symmetrically for B-first.
pub fn causal_vertices(b: &Behavior) -> Result<Vec<Vec<f64>>> {
    if b.labs().len() != 2 {
        return Err(Error::LabCount { expected: 2, got: b.labs().len() });
    }
    let (sa, sb) = (b.settings()[0], b.settings()[1]);
    let (oa, ob) = (b.outcomes()[0], b.outcomes()[1]);
    let count = |own_s: usize, own_o: usize, other_o: usize| -> Option<usize> {
        let first = own_o.checked_pow(own_s as u32)?;
        let second = other_o.checked_pow((sa * sb) as u32)?;
        first.checked_mul(second)
    };
    let total = count(sa, oa, ob)
        .zip(count(sb, ob, oa))
        .and_then(|(x, y)| x.checked_add(y))
        .filter(|&t| t <= MAX_VERTICES)
        .ok_or_else(|| Error::TooLarge(format!("more than {MAX_VERTICES} deterministic strategies")))?;

    let mut out = Vec::with_capacity(total);
    let no = oa * ob;
    for a_first in [true, false] {
        let (own_s, own_o, other_o) = if a_first { (sa, oa, ob) } else { (sb, ob, oa) };
        let f_dims = vec![own_o; own_s];
        let g_dims = vec![other_o; sa * sb];
        let nf: usize = f_dims.iter().product();
        let ng: usize = g_dims.iter().product();
        for fi in 0..nf {
            let f = digits(fi, &f_dims);
            for gi in 0..ng {
                let g = digits(gi, &g_dims);
                let mut v = vec![0.0; sa * sb * no];
                for x in 0..sa {
                    for y in 0..sb {
                        let s = x * sb + y;
                        let (a, bb) = if a_first { (f[x], g[s]) } else { (g[s], f[y]) };
                        v[s * no + a * ob + bb] = 1.0;
                    }
                }
                out.push(v);
            }
        }
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pairwise Frank–Wolfe on `||x - b||^2` over the causal polytope, with exact
/// line search so the distance never increases. Causal iff the final
/// Euclidean distance is at most `tol`.
pub fn causal_membership(b: &Behavior, tol: f64, max_iter: usize) -> Result<MembershipReport> {
    let vertices = causal_vertices(b)?;
    let target = b.table();
    let n = target.len();

    // start at the vertex closest to the target
    let start = (0..vertices.len())
        .min_by(|&i, &j| {
            let di = dist2(&vertices[i], target);
            let dj = dist2(&vertices[j], target);
            di.total_cmp(&dj)
        })
        .expect("nonempty");
    let mut weights: Vec<(usize, f64)> = vec![(start, 1.0)];
    let mut x = vertices[start].clone();
    let mut history = vec![dist2(&x, target).sqrt()];
    let mut iterations = 0;

    for it in 0..max_iter {
        iterations = it + 1;
        let grad: Vec<f64> = x.iter().zip(target).map(|(a, t)| a - t).collect();
        let (s, s_val) = vertices
            .iter()
            .enumerate()
            .map(|(k, v)| (k, dot(&grad, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let gx = dot(&grad, &x);
        let fw_gap = gx - s_val;
        if fw_gap <= 1e-15 || history.last().copied().unwrap_or(0.0) <= tol * 1e-3 {
            break;
        }
        let (slot, _) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| dot(&grad, &vertices[a.1 .0]).total_cmp(&dot(&grad, &vertices[b.1 .0])))
            .expect("nonempty active set");
        let (away, max_step) = weights[slot];
        let d: Vec<f64> = (0..n).map(|k| vertices[s][k] - vertices[away][k]).collect();
        let dd = dot(&d, &d);
        if dd == 0.0 {
            break;
        }
        let step = (-dot(&grad, &d) / dd).clamp(0.0, max_step);
        if step == 0.0 {
            break;
        }
        for k in 0..n {
            x[k] += step * d[k];
        }
        weights[slot].1 -= step;
        match weights.iter_mut().find(|w| w.0 == s) {
            Some(w) => w.1 += step,
            None => weights.push((s, step)),
        }
        weights.retain(|w| w.1 > 1e-15);
        history.push(dist2(&x, target).sqrt());
    }
    let distance = *history.last().expect("nonempty");
    let membership = if distance <= tol {
        Membership::Causal { weights, distance }
    } else {
        Membership::NonCausal { distance }
    };
    Ok(MembershipReport {
        membership,
        iterations,
        history,
    })
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::behavior::{pr_box_behavior, tsirelson_behavior};

    fn binary(f: impl Fn(&[usize], &[usize]) -> f64) -> Behavior {
        Behavior::from_fn(&["A", "B"], vec![2, 2], vec![2, 2], f).unwrap()
    }

    #[test]
    fn vertex_counts() {
        let b = binary(|_, _| 0.25);
        // 2^2 * 2^4 per direction
        assert_eq!(causal_vertices(&b).unwrap().len(), 128);
        let big = Behavior::from_fn(&["A", "B"], vec![2, 4], vec![2, 2], |_, _| 0.25).unwrap();
        assert_eq!(causal_vertices(&big).unwrap().len(), 1024 + 4096);
    }

    #[test]
    fn deterministic_one_way_strategy_is_a_vertex() {
        let b = binary(|s, o| if o[0] == s[0] && o[1] == (s[0] ^ s[1]) { 1.0 } else { 0.0 });
        let r = causal_membership(&b, 1e-6, 1000).unwrap();
        assert!(r.is_causal());
        assert_eq!(r.distance(), 0.0);
    }

    #[test]
    fn uniform_behavior_is_causal_with_explicit_weights() {
        let b = binary(|_, _| 0.25);
        let r = causal_membership(&b, 1e-6, 5000).unwrap();
        let Membership::Causal { weights, .. } = &r.membership else { panic!("{r:?}") };
        let verts = causal_vertices(&b).unwrap();
        let mut mix = vec![0.0; b.table().len()];
        for &(k, w) in weights {
            for (m, v) in mix.iter_mut().zip(&verts[k]) {
                *m += w * v;
            }
        }
        let err = mix.iter().zip(b.table()).map(|(a, t)| (a - t).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6);
        assert!((weights.iter().map(|w| w.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_signalling_bell_correlations_are_causal() {
        // no-signalling behaviors are causal in either order
        let r = causal_membership(&tsirelson_behavior(), 1e-6, 20_000).unwrap();
        assert!(r.is_causal(), "{}", r.distance());
        let r = causal_membership(&pr_box_behavior(), 1e-6, 20_000).unwrap();
        assert!(r.is_causal(), "{}", r.distance());
    }

    #[test]
    fn two_way_signalling_is_not_causal_and_distance_is_monotone() {
        let b = binary(|s, o| if o[0] == s[1] && o[1] == s[0] { 1.0 } else { 0.0 });
        let r = causal_membership(&b, 1e-6, 5000).unwrap();
        assert!(!r.is_causal());
        assert!(r.distance() > 0.1);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }
}
