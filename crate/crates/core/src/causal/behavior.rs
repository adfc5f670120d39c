//! Behaviors `P(outcomes | settings)` and their signalling structure.

use serde::{Deserialize, Serialize};

use crate::causal::order::PartialOrder;
use crate::error::{Error, Result};
use crate::graph::DiGraph;
use crate::linalg::{compose, digits};
use crate::process::{Instrument, ProcessMatrix};
use crate::tensor::DenseOperator;

/// Default total-variation threshold for statistical dependence.
pub const DEPENDENCE_TOL: f64 = 1e-7;

/// Conditional distribution `P(o_1..o_n | s_1..s_n)`.
///
/// `table[s * n_outcomes + o]` where `s`, `o` are mixed-radix joint indices
/// with the first lab most significant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    labs: Vec<String>,
    settings: Vec<usize>,
    outcomes: Vec<usize>,
    table: Vec<f64>,
}

impl Behavior {
    pub fn new(labs: Vec<String>, settings: Vec<usize>, outcomes: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(labs, settings, outcomes, table, 1e-9)
    }

    pub fn with_tolerance(
        labs: Vec<String>,
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        table: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        if labs.len() != settings.len() || labs.len() != outcomes.len() {
            return Err(Error::InvalidBehavior("per-lab sizes do not match lab count".into()));
        }
        if settings.iter().chain(&outcomes).any(|&k| k == 0) {
            return Err(Error::InvalidBehavior("setting and outcome counts must be positive".into()));
        }
        let ns: usize = settings.iter().product();
        let no: usize = outcomes.iter().product();
        if table.len() != ns * no {
            return Err(Error::InvalidBehavior(format!(
                "table has {} entries, expected {}",
                table.len(),
                ns * no
            )));
        }
        for (k, &p) in table.iter().enumerate() {
            if !p.is_finite() || p < -1e-12 {
                return Err(Error::InvalidBehavior(format!("entry {k} is {p}")));
            }
        }
        for s in 0..ns {
            let sum: f64 = table[s * no..(s + 1) * no].iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidBehavior(format!(
                    "distribution for joint setting {s} sums to {sum}"
                )));
            }
        }
        Ok(Behavior {
            labs,
            settings,
            outcomes,
            table,
        })
    }

    /// Builds the table from a function of (settings, outcomes).
    pub fn from_fn(
        labs: &[&str],
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        f: impl Fn(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        let ns: usize = settings.iter().product();
        let no: usize = outcomes.iter().product();
        let mut table = Vec::with_capacity(ns * no);
        for s in 0..ns {
            let sd = digits(s, &settings);
            for o in 0..no {
                table.push(f(&sd, &digits(o, &outcomes)));
            }
        }
        Self::new(labs.iter().map(|s| s.to_string()).collect(), settings, outcomes, table)
    }

    pub fn labs(&self) -> &[String] {
        &self.labs
    }

    pub fn settings(&self) -> &[usize] {
        &self.settings
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn n_settings(&self) -> usize {
        self.settings.iter().product()
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.iter().product()
    }

    pub fn lab_index(&self, name: &str) -> Option<usize> {
        self.labs.iter().position(|l| l == name)
    }

    pub fn prob(&self, settings: &[usize], outcomes: &[usize]) -> f64 {
        let s = compose(settings, &self.settings);
        let o = compose(outcomes, &self.outcomes);
        self.table[s * self.n_outcomes() + o]
    }

    /// Joint distribution of the outcomes of `labs` (indices, mixed radix in
    /// the given order) at joint setting index `s`.
    pub fn marginal(&self, s: usize, labs: &[usize]) -> Vec<f64> {
        let dims: Vec<usize> = labs.iter().map(|&i| self.outcomes[i]).collect();
        let mut out = vec![0.0; dims.iter().product()];
        let no = self.n_outcomes();
        for o in 0..no {
            let od = digits(o, &self.outcomes);
            let sub: Vec<usize> = labs.iter().map(|&i| od[i]).collect();
            out[compose(&sub, &dims)] += self.table[s * no + o];
        }
        out
    }

    /// Largest total-variation change of the outcome marginal of `target`
    /// when only lab `source`'s setting changes.
    pub fn dependence(&self, target: &[usize], source: usize) -> f64 {
        let ns = self.n_settings();
        let mut worst: f64 = 0.0;
        let marginals: Vec<Vec<f64>> = (0..ns).map(|s| self.marginal(s, target)).collect();
        for s in 0..ns {
            let mut sd = digits(s, &self.settings);
            if sd[source] != 0 {
                continue;
            }
            for v in 1..self.settings[source] {
                sd[source] = v;
                let t = compose(&sd, &self.settings);
                let tv: f64 = 0.5
                    * marginals[s]
                        .iter()
                        .zip(&marginals[t])
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>();
                worst = worst.max(tv);
            }
        }
        worst
    }

    /// Behavior restricted to a different lab order.
    pub fn reordered(&self, labs: &[String]) -> Result<Self> {
        let perm = labs
            .iter()
            .map(|l| self.lab_index(l).ok_or_else(|| Error::InvalidBehavior(format!("unknown lab `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        if perm.len() != self.labs.len() {
            return Err(Error::InvalidBehavior("lab sets differ".into()));
        }
        let settings: Vec<usize> = perm.iter().map(|&i| self.settings[i]).collect();
        let outcomes: Vec<usize> = perm.iter().map(|&i| self.outcomes[i]).collect();
        let n = perm.len();
        Behavior::from_fn(
            &labs.iter().map(String::as_str).collect::<Vec<_>>(),
            settings,
            outcomes,
            |s, o| {
                let mut ss = vec![0; n];
                let mut oo = vec![0; n];
                for (k, &i) in perm.iter().enumerate() {
                    ss[i] = s[k];
                    oo[i] = o[k];
                }
                self.prob(&ss, &oo)
            },
        )
    }

    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        if self.table.len() != other.table.len() {
            return f64::INFINITY;
        }
        self.table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Edge `j -> i` iff lab `i`'s own outcome marginal depends on lab `j`'s
/// setting by more than `tol` in total variation.
pub fn signalling_graph(b: &Behavior, tol: f64) -> DiGraph {
    let n = b.labs.len();
    let mut g = DiGraph::new(b.labs.clone());
    for i in 0..n {
        for j in 0..n {
            if i != j && b.dependence(&[i], j) > tol {
                g.add_edge(j, i);
            }
        }
    }
    g
}

/// True iff, for every lab `i`, the joint outcome of `i` and its predecessors
/// is independent of the setting of every other lab.
pub fn signal_requirement_check(b: &Behavior, order: &PartialOrder, tol: f64) -> Result<bool> {
    let idx = order_indices(b, order)?;
    let n = b.labs.len();
    for i in 0..n {
        let mut group = vec![i];
        group.extend((0..n).filter(|&k| order.less_idx(idx[k], idx[i])));
        for j in 0..n {
            if group.contains(&j) {
                continue;
            }
            if b.dependence(&group, j) > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Position in `order` of each behavior lab.
pub(crate) fn order_indices(b: &Behavior, order: &PartialOrder) -> Result<Vec<usize>> {
    if order.len() != b.labs.len() {
        return Err(Error::InvalidOrder("order and behavior have different labs".into()));
    }
    b.labs
        .iter()
        .map(|l| {
            order
                .index_of(l)
                .ok_or_else(|| Error::InvalidOrder(format!("lab `{l}` missing from order")))
        })
        .collect()
}

/// Born-rule statistics of one instrument per setting per lab.
///
/// All instruments of a lab must have the same number of outcomes.
pub fn behavior_of(p: &ProcessMatrix, instrument_sets: &[Vec<Instrument>]) -> Result<Behavior> {
    let labs = p.labs();
    if instrument_sets.len() != labs.len() {
        return Err(Error::LabCount {
            expected: labs.len(),
            got: instrument_sets.len(),
        });
    }
    let mut settings = Vec::new();
    let mut outcomes = Vec::new();
    let mut adopted: Vec<Vec<Vec<DenseOperator>>> = Vec::new();
    for (lab, set) in labs.iter().zip(instrument_sets) {
        let Some(first) = set.first() else {
            return Err(Error::InvalidBehavior(format!("lab `{}` has no settings", lab.name)));
        };
        let k = first.outcomes();
        if set.iter().any(|ins| ins.outcomes() != k) {
            return Err(Error::InvalidBehavior(format!(
                "instruments of lab `{}` differ in outcome count",
                lab.name
            )));
        }
        settings.push(set.len());
        outcomes.push(k);
        adopted.push(
            set.iter()
                .map(|ins| ins.cp_maps.iter().map(|m| lab.adopt(m)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let ns: usize = settings.iter().product();
    let no: usize = outcomes.iter().product();
    let mut table = vec![0.0; ns * no];
    fill(p.w(), &adopted, &settings, &outcomes, 0, 0, 0, &mut table, no);
    Behavior::new(p.lab_names(), settings, outcomes, table)
}

#[allow(clippy::too_many_arguments)]
fn fill(
    w: &DenseOperator,
    maps: &[Vec<Vec<DenseOperator>>],
    settings: &[usize],
    outcomes: &[usize],
    lab: usize,
    s_acc: usize,
    o_acc: usize,
    table: &mut [f64],
    no: usize,
) {
    if lab == maps.len() {
        table[s_acc * no + o_acc] = w.get(0, 0).re;
        return;
    }
    for (s, ins) in maps[lab].iter().enumerate() {
        for (o, m) in ins.iter().enumerate() {
            let reduced = w.contract(m).expect("lab spaces present");
            fill(
                &reduced,
                maps,
                settings,
                outcomes,
                lab + 1,
                s_acc * settings[lab] + s,
                o_acc * outcomes[lab] + o,
                table,
                no,
            );
        }
    }
}

/// CHSH value `sum_xy (-1)^{xy} E_xy` of a two-lab binary behavior.
pub fn chsh_value(b: &Behavior) -> Result<f64> {
    if b.settings != [2, 2] || b.outcomes != [2, 2] {
        return Err(Error::InvalidBehavior("CHSH needs two labs with binary settings and outcomes".into()));
    }
    let mut total = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let mut e = 0.0;
            for a in 0..2 {
                for bb in 0..2 {
                    let sign = if (a ^ bb) == 0 { 1.0 } else { -1.0 };
                    e += sign * b.prob(&[x, y], &[a, bb]);
                }
            }
            total += if x & y == 1 { -e } else { e };
        }
    }
    Ok(total)
}

/// Optimal quantum CHSH correlations: `P(a,b|x,y) = (1 + (-1)^{a+b+xy}/sqrt2)/4`.
pub fn tsirelson_behavior() -> Behavior {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    Behavior::from_fn(&["A", "B"], vec![2, 2], vec![2, 2], |s, o| {
        let sign = if (o[0] ^ o[1] ^ (s[0] & s[1])) == 0 { 1.0 } else { -1.0 };
        (1.0 + sign * c) / 4.0
    })
    .expect("normalized")
}

/// `P(a,b|x,y) = 1/2` iff `a + b = xy (mod 2)`.
pub fn pr_box_behavior() -> Behavior {
    Behavior::from_fn(&["A", "B"], vec![2, 2], vec![2, 2], |s, o| {
        if o[0] ^ o[1] == s[0] & s[1] {
            0.5
        } else {
            0.0
        }
    })
    .expect("normalized")
}

/// Alice's setting is sent through a noiseless channel and read out by Bob.
pub fn identity_channel_behavior() -> Behavior {
    Behavior::from_fn(&["A", "B"], vec![2, 1], vec![1, 2], |s, o| {
        if o[1] == s[0] {
            1.0
        } else {
            0.0
        }
    })
    .expect("normalized")
}

/// Each lab outputs the other's setting.
pub fn two_way_behavior() -> Behavior {
    Behavior::from_fn(&["A", "B"], vec![2, 2], vec![2, 2], |s, o| {
        if o[0] == s[1] && o[1] == s[0] {
            1.0
        } else {
            0.0
        }
    })
    .expect("normalized")
}
