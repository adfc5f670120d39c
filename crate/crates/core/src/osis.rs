//! Observational vs interventionist descriptions of deterministic and unitary
//! wirings, and the restricted time-reversal check for invertible ones.
//!
//! An [`ISDescription`] lists operations in wiring order; each consumes some
//! variables and produces fresh ones. Unitaries are read in the computational
//! basis: their transition probabilities are `|U_{ji}|^2`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::behavior::{signal_requirement_check, Behavior};
use crate::causal::order::PartialOrder;
use crate::error::{Error, Result};
use crate::linalg::{compose, digits, CMatrix, C64};

/// Largest joint table built.
pub const MAX_TABLE: usize = 1 << 22;
const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub dim: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Variable { name: name.into(), dim }
    }

    pub fn bit(name: impl Into<String>) -> Self {
        Self::new(name, 2)
    }
}

/// What an operation does to its joint input value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub enum OpMap {
    /// `table[i]` is the joint output index for joint input `i`.
    Function(Vec<usize>),
    Unitary(CMatrix),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MapRepr {
    Function(Vec<usize>),
    /// Row-major, entries as `[re, im]`.
    Unitary(Vec<Vec<[f64; 2]>>),
}

impl TryFrom<MapRepr> for OpMap {
    type Error = Error;

    fn try_from(r: MapRepr) -> Result<Self> {
        Ok(match r {
            MapRepr::Function(t) => OpMap::Function(t),
            MapRepr::Unitary(rows) => {
                let rows: Vec<Vec<C64>> = rows
                    .into_iter()
                    .map(|row| row.into_iter().map(|[re, im]| C64::new(re, im)).collect())
                    .collect();
                OpMap::Unitary(CMatrix::from_rows(&rows)?)
            }
        })
    }
}

impl From<OpMap> for MapRepr {
    fn from(m: OpMap) -> Self {
        match m {
            OpMap::Function(t) => MapRepr::Function(t),
            OpMap::Unitary(u) => MapRepr::Unitary(
                (0..u.rows())
                    .map(|r| (0..u.cols()).map(|c| [u.get(r, c).re, u.get(r, c).im]).collect())
                    .collect(),
            ),
        }
    }
}

impl OpMap {
    /// Column-stochastic `T[out][in]` flattened as `out * n_in + in`.
    fn transition(&self, n_in: usize, n_out: usize) -> Vec<f64> {
        let mut t = vec![0.0; n_in * n_out];
        match self {
            OpMap::Function(table) => {
                for (i, &o) in table.iter().enumerate() {
                    t[o * n_in + i] = 1.0;
                }
            }
            OpMap::Unitary(u) => {
                for o in 0..n_out {
                    for i in 0..n_in {
                        t[o * n_in + i] = u.get(o, i).norm_sqr();
                    }
                }
            }
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub map: OpMap,
}

impl Operation {
    pub fn new(name: impl Into<String>, inputs: &[&str], outputs: &[&str], map: OpMap) -> Self {
        Operation {
            name: name.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            map,
        }
    }

    /// The inverse operation, with inputs and outputs swapped.
    pub fn inverse(&self) -> Result<Operation> {
        let map = match &self.map {
            OpMap::Function(table) => {
                let mut inv = vec![usize::MAX; table.len()];
                for (i, &o) in table.iter().enumerate() {
                    if o >= inv.len() || inv[o] != usize::MAX {
                        return Err(Error::NotInvertible(self.name.clone()));
                    }
                    inv[o] = i;
                }
                OpMap::Function(inv)
            }
            OpMap::Unitary(u) => OpMap::Unitary(u.adjoint()),
        };
        Ok(Operation {
            name: self.name.clone(),
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
            map,
        })
    }
}

/// Operations in wiring order over declared variables. Variables listed in
/// `inputs` are chosen externally; every other variable is produced by
/// exactly one operation, and each variable is consumed at most once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIs")]
pub struct ISDescription {
    variables: Vec<Variable>,
    inputs: Vec<String>,
    operations: Vec<Operation>,
}

#[derive(Deserialize)]
struct RawIs {
    variables: Vec<Variable>,
    inputs: Vec<String>,
    operations: Vec<Operation>,
}

impl TryFrom<RawIs> for ISDescription {
    type Error = Error;

    fn try_from(r: RawIs) -> Result<Self> {
        ISDescription::new(r.variables, r.inputs, r.operations)
    }
}

impl ISDescription {
    pub fn new(variables: Vec<Variable>, inputs: Vec<String>, operations: Vec<Operation>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, v) in variables.iter().enumerate() {
            if v.dim == 0 {
                return Err(Error::DimensionMismatch(format!("variable `{}` has dimension 0", v.name)));
            }
            if index.insert(v.name.as_str(), k).is_some() {
                return Err(Error::DuplicateLabel(v.name.clone()));
            }
        }
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| Error::UnknownLabel(name.to_string()));

        let mut available: BTreeSet<&str> = BTreeSet::new();
        let mut produced: BTreeSet<&str> = BTreeSet::new();
        let mut consumed: BTreeSet<&str> = BTreeSet::new();
        for i in &inputs {
            lookup(i)?;
            if !produced.insert(i) {
                return Err(Error::DuplicateLabel(i.clone()));
            }
            available.insert(i);
        }
        let mut names = BTreeSet::new();
        for op in &operations {
            if !names.insert(op.name.as_str()) {
                return Err(Error::DuplicateLabel(op.name.clone()));
            }
            for i in &op.inputs {
                lookup(i)?;
                if !available.contains(i.as_str()) {
                    return Err(Error::InvalidGraph(format!("`{}` reads `{i}` before it is produced", op.name)));
                }
                if !consumed.insert(i) {
                    return Err(Error::InvalidGraph(format!("`{i}` is consumed twice")));
                }
            }
            for o in &op.outputs {
                lookup(o)?;
                if !produced.insert(o) {
                    return Err(Error::InvalidGraph(format!("`{o}` is produced twice")));
                }
                available.insert(o);
            }
            let n_in: usize = op.inputs.iter().map(|i| variables[lookup(i).unwrap()].dim).product();
            let n_out: usize = op.outputs.iter().map(|o| variables[lookup(o).unwrap()].dim).product();
            match &op.map {
                OpMap::Function(t) => {
                    if t.len() != n_in || t.iter().any(|&o| o >= n_out) {
                        return Err(Error::DimensionMismatch(format!(
                            "`{}`: table must map {n_in} inputs into 0..{n_out}",
                            op.name
                        )));
                    }
                }
                OpMap::Unitary(u) => {
                    if u.rows() != n_out || u.cols() != n_in {
                        return Err(Error::DimensionMismatch(format!(
                            "`{}`: expected a {n_out}x{n_in} unitary",
                            op.name
                        )));
                    }
                    let dev = u.unitary_deviation();
                    if dev > 1e-9 {
                        return Err(Error::NotUnitary(dev));
                    }
                }
            }
        }
        if let Some(v) = variables.iter().find(|v| !produced.contains(v.name.as_str())) {
            return Err(Error::InvalidGraph(format!("`{}` is never produced", v.name)));
        }
        Ok(ISDescription {
            variables,
            inputs,
            operations,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    /// Variables no operation consumes.
    pub fn outputs(&self) -> Vec<String> {
        let consumed: BTreeSet<&String> = self.operations.iter().flat_map(|o| &o.inputs).collect();
        self.variables
            .iter()
            .map(|v| &v.name)
            .filter(|n| !consumed.contains(n))
            .cloned()
            .collect()
    }

    fn var_index(&self, name: &str) -> usize {
        self.variables.iter().position(|v| v.name == name).expect("validated")
    }

    fn dims_of(&self, names: &[String]) -> Vec<usize> {
        names.iter().map(|n| self.variables[self.var_index(n)].dim).collect()
    }

    pub fn is_invertible(&self) -> bool {
        self.operations.iter().all(|op| op.inverse().is_ok())
    }

    /// Operation names ordered by the wiring: `a < b` when a variable path
    /// leads from `a` to `b`.
    pub fn wiring_order(&self) -> PartialOrder {
        let producer: BTreeMap<&str, &str> = self
            .operations
            .iter()
            .flat_map(|op| op.outputs.iter().map(move |o| (o.as_str(), op.name.as_str())))
            .collect();
        let pairs: Vec<(&str, &str)> = self
            .operations
            .iter()
            .flat_map(|op| {
                op.inputs
                    .iter()
                    .filter_map(|i| producer.get(i.as_str()).map(|&p| (p, op.name.as_str())))
                    .collect::<Vec<_>>()
            })
            .collect();
        let names = self.operations.iter().map(|o| o.name.clone()).collect();
        PartialOrder::from_generators(names, &pairs).expect("wiring is acyclic by construction")
    }
}

/// Joint distribution over every variable of a description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OSDistribution {
    pub variables: Vec<Variable>,
    /// Row-major over `variables`, first variable most significant.
    pub table: Vec<f64>,
}

impl OSDistribution {
    fn dims(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.dim).collect()
    }

    pub fn prob(&self, values: &[usize]) -> f64 {
        self.table[compose(values, &self.dims())]
    }

    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    /// Marginal over the named variables, in the given order.
    pub fn marginal(&self, names: &[&str]) -> Result<Vec<f64>> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.variables
                    .iter()
                    .position(|v| v.name == *n)
                    .ok_or_else(|| Error::UnknownLabel(n.to_string()))
            })
            .collect::<Result<_>>()?;
        let dims = self.dims();
        let mdims: Vec<usize> = idx.iter().map(|&k| dims[k]).collect();
        let mut out = vec![0.0; mdims.iter().product()];
        for (i, &p) in self.table.iter().enumerate() {
            let d = digits(i, &dims);
            let sub: Vec<usize> = idx.iter().map(|&k| d[k]).collect();
            out[compose(&sub, &mdims)] += p;
        }
        Ok(out)
    }

    /// Largest entrywise difference after matching variables by name.
    pub fn max_abs_diff(&self, other: &OSDistribution) -> Result<f64> {
        let names: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        let theirs: BTreeSet<&str> = other.variables.iter().map(|v| v.name.as_str()).collect();
        if names.len() != theirs.len() || names.iter().any(|n| !theirs.contains(n)) {
            return Err(Error::DimensionMismatch("distributions over different variables".into()));
        }
        let aligned = other.marginal(&names)?;
        Ok(self
            .table
            .iter()
            .zip(&aligned)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Sparse joint assignment with its probability.
type Branch = (Vec<usize>, f64);

fn check_size(d: &ISDescription) -> Result<()> {
    d.variables
        .iter()
        .try_fold(1usize, |acc, v| acc.checked_mul(v.dim))
        .filter(|&n| n <= MAX_TABLE)
        .map(|_| ())
        .ok_or_else(|| Error::TooLarge(format!("joint table above {MAX_TABLE} entries")))
}

/// Pushes independent input distributions (one per input variable, in the
/// order of [`ISDescription::inputs`]) through the wiring.
pub fn os_from_is(d: &ISDescription, input_dist: &[Vec<f64>]) -> Result<OSDistribution> {
    check_size(d)?;
    if input_dist.len() != d.inputs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} input distributions for {} inputs",
            input_dist.len(),
            d.inputs.len()
        )));
    }
    let nv = d.variables.len();
    let mut branches: Vec<Branch> = vec![(vec![0; nv], 1.0)];
    for (name, dist) in d.inputs.iter().zip(input_dist) {
        let k = d.var_index(name);
        if dist.len() != d.variables[k].dim {
            return Err(Error::DimensionMismatch(format!("distribution for `{name}`")));
        }
        if dist.iter().any(|&p| p < -1e-12) || (dist.iter().sum::<f64>() - 1.0).abs() > NORM_TOL {
            return Err(Error::Precondition(format!("distribution for `{name}` is not normalized")));
        }
        branches = branches
            .into_iter()
            .flat_map(|(a, p)| {
                dist.iter().enumerate().filter(|(_, &q)| q > 0.0).map(move |(x, &q)| {
                    let mut a = a.clone();
                    a[k] = x;
                    (a, p * q)
                })
            })
            .collect();
    }
    for op in &d.operations {
        branches = apply_op(d, op, branches, None);
    }
    let dims: Vec<usize> = d.variables.iter().map(|v| v.dim).collect();
    let mut table = vec![0.0; dims.iter().product()];
    for (a, p) in branches {
        table[compose(&a, &dims)] += p;
    }
    Ok(OSDistribution {
        variables: d.variables.clone(),
        table,
    })
}

/// Uniform distribution on every input variable.
pub fn os_uniform(d: &ISDescription) -> Result<OSDistribution> {
    let dists: Vec<Vec<f64>> = d
        .dims_of(&d.inputs)
        .into_iter()
        .map(|n| vec![1.0 / n as f64; n])
        .collect();
    os_from_is(d, &dists)
}

/// Applies `op`, optionally adding `shift` (mod the joint input dimension)
/// to its input first.
fn apply_op(d: &ISDescription, op: &Operation, branches: Vec<Branch>, shift: Option<usize>) -> Vec<Branch> {
    let in_idx: Vec<usize> = op.inputs.iter().map(|n| d.var_index(n)).collect();
    let out_idx: Vec<usize> = op.outputs.iter().map(|n| d.var_index(n)).collect();
    let in_dims = d.dims_of(&op.inputs);
    let out_dims = d.dims_of(&op.outputs);
    let (n_in, n_out) = (in_dims.iter().product::<usize>(), out_dims.iter().product::<usize>());
    let t = op.map.transition(n_in, n_out);
    let mut next = Vec::with_capacity(branches.len());
    for (a, p) in branches {
        let vals: Vec<usize> = in_idx.iter().map(|&k| a[k]).collect();
        let x = (compose(&vals, &in_dims) + shift.unwrap_or(0)) % n_in;
        for y in 0..n_out {
            let q = t[y * n_in + x];
            if q <= 0.0 {
                continue;
            }
            let mut b = a.clone();
            for (&k, v) in out_idx.iter().zip(digits(y, &out_dims)) {
                b[k] = v;
            }
            next.push((b, p * q));
        }
    }
    next
}

/// Inverts every operation and runs them in reverse order, so the former
/// outputs become the inputs.
pub fn reverse_is(d: &ISDescription) -> Result<ISDescription> {
    let operations = d
        .operations
        .iter()
        .rev()
        .map(Operation::inverse)
        .collect::<Result<Vec<_>>>()?;
    ISDescription::new(d.variables.clone(), d.outputs(), operations)
}

/// Each operation as a lab. The lab's outcome is its incoming joint value
/// and its setting is added (mod the input dimension) before the operation
/// acts. External inputs are fixed to 0.
pub fn behavior_of_is(d: &ISDescription) -> Result<Behavior> {
    let labs: Vec<String> = d.operations.iter().map(|o| o.name.clone()).collect();
    let dims: Vec<usize> = d.operations.iter().map(|o| d.dims_of(&o.inputs).iter().product()).collect();
    let n_s = dims
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .filter(|&n| n.checked_mul(n).is_some_and(|m| m <= MAX_TABLE))
        .ok_or_else(|| Error::TooLarge("behavior table too large".into()))?;
    let nv = d.variables.len();
    let mut table = vec![0.0; n_s * n_s];
    for s in 0..n_s {
        let settings = digits(s, &dims);
        // branches carry the outcomes seen so far alongside the assignment
        let mut branches: Vec<(Vec<usize>, Vec<usize>, f64)> = vec![(vec![0; nv], Vec::new(), 1.0)];
        for (k, op) in d.operations.iter().enumerate() {
            let in_dims = d.dims_of(&op.inputs);
            let mut next = Vec::new();
            for (a, seen, p) in branches {
                let vals: Vec<usize> = op.inputs.iter().map(|n| a[d.var_index(n)]).collect();
                let observed = compose(&vals, &in_dims);
                for (b, q) in apply_op(d, op, vec![(a, p)], Some(settings[k])) {
                    let mut seen = seen.clone();
                    seen.push(observed);
                    next.push((b, seen, q));
                }
            }
            branches = next;
        }
        for (_, seen, p) in branches {
            table[s * n_s + compose(&seen, &dims)] += p;
        }
    }
    Behavior::new(labs, dims.clone(), dims, table)
}

/// Forward and reversed descriptions agree on their uniform-input joint
/// distributions, and the reversed description's behavior respects the
/// reversed wiring order.
pub fn causal_reversibility_check(d: &ISDescription, tol: f64) -> Result<bool> {
    let rev = reverse_is(d)?;
    let forward = os_uniform(d)?;
    let outs = d.outputs();
    let names: Vec<&str> = outs.iter().map(String::as_str).collect();
    let out_marginal = forward.marginal(&names)?;
    let uniform = 1.0 / out_marginal.len() as f64;
    if out_marginal.iter().any(|p| (p - uniform).abs() > NORM_TOL) {
        return Err(Error::Precondition("uniform inputs do not give uniform outputs".into()));
    }
    let backward = os_uniform(&rev)?;
    if forward.max_abs_diff(&backward)? > NORM_TOL {
        return Ok(false);
    }
    signal_requirement_check(&behavior_of_is(&rev)?, &d.wiring_order().reverse(), tol)
}

/// A chain of `n_ops` random permutations on `bits`-bit registers
/// `x0 -> x1 -> ... -> x{n_ops}`; operations are named `A`, `B`, ...
pub fn random_bijective_chain<R: Rng + ?Sized>(n_ops: usize, bits: u32, rng: &mut R) -> Result<ISDescription> {
    if n_ops > 26 {
        return Err(Error::TooLarge("at most 26 operations".into()));
    }
    let dim = 1usize << bits;
    let variables: Vec<Variable> = (0..=n_ops).map(|k| Variable::new(format!("x{k}"), dim)).collect();
    let operations = (0..n_ops)
        .map(|k| {
            let mut perm: Vec<usize> = (0..dim).collect();
            perm.shuffle(rng);
            Operation::new(
                ((b'A' + k as u8) as char).to_string(),
                &[&format!("x{k}")],
                &[&format!("x{}", k + 1)],
                OpMap::Function(perm),
            )
        })
        .collect();
    ISDescription::new(variables, vec!["x0".into()], operations)
}

/// A single identity channel `A: x -> y` on a `dim`-valued variable.
pub fn identity_is(dim: usize) -> ISDescription {
    ISDescription::new(
        vec![Variable::new("x", dim), Variable::new("y", dim)],
        vec!["x".into()],
        vec![Operation::new("A", &["x"], &["y"], OpMap::Function((0..dim).collect()))],
    )
    .expect("valid by construction")
}
