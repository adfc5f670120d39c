//! Labeled tensor-product spaces and the operators that live on them.
//!
//! Every [`DenseOperator`] carries an ordered list of [`SpaceLabel`] factors.
//! The composite index is row-major with the first factor most significant,
//! so `|i>|k>` on factors `(a, b)` sits at index `i * dim(b) + k`.
//!
//! # Choi convention
//!
//! A map `E` from space `in` to space `out` is represented by the
//! unnormalized column-convention Choi operator
//!
//! ```text
//! J = sum_ij |i><j| (x) E(|i><j|)      on factors (in, out)
//! ```
//!
//! so `E(rho) = Tr_in[(rho^T (x) 1) J]` and a trace-preserving map has
//! `Tr J = dim(in)`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{compose, digits, CMatrix, C64, ONE, ZERO};

/// Default Hermiticity / positivity tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpaceLabel {
    pub name: String,
    pub dim: usize,
}

impl SpaceLabel {
    /// Panics when `dim == 0`.
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        assert!(dim >= 1, "space dimension must be positive");
        SpaceLabel {
            name: name.into(),
            dim,
        }
    }

    pub fn primed(&self) -> Self {
        SpaceLabel::new(format!("{}'", self.name), self.dim)
    }
}

/// Descending eigenvalues of a Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    tol: f64,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn is_psd(&self) -> bool {
        self.min() >= -self.tol
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|l| l.abs() > tol).count()
    }
}

/// Square complex matrix over an ordered product of labeled spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    factors: Vec<SpaceLabel>,
    matrix: CMatrix,
}

fn check_unique(factors: &[SpaceLabel]) -> Result<()> {
    let mut seen = HashSet::new();
    for f in factors {
        if !seen.insert(f.name.as_str()) {
            return Err(Error::DuplicateLabel(f.name.clone()));
        }
    }
    Ok(())
}

fn total_dim(factors: &[SpaceLabel]) -> usize {
    factors.iter().map(|f| f.dim).product()
}

/// For every composite index, the index within the `selected` factors (in the
/// listed order) and within the remaining factors (in original order).
fn split_indices(dims: &[usize], selected: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !selected.contains(k)).collect();
    let sel_dims: Vec<usize> = selected.iter().map(|&k| dims[k]).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&k| dims[k]).collect();
    let n: usize = dims.iter().product();
    let mut sel_idx = Vec::with_capacity(n);
    let mut rest_idx = Vec::with_capacity(n);
    for i in 0..n {
        let d = digits(i, dims);
        let s: Vec<usize> = selected.iter().map(|&k| d[k]).collect();
        let r: Vec<usize> = rest.iter().map(|&k| d[k]).collect();
        sel_idx.push(compose(&s, &sel_dims));
        rest_idx.push(compose(&r, &rest_dims));
    }
    (sel_idx, rest_idx)
}

impl DenseOperator {
    pub fn new(factors: Vec<SpaceLabel>, matrix: CMatrix) -> Result<Self> {
        check_unique(&factors)?;
        let n = total_dim(&factors);
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "factors have total dimension {n} but matrix is {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(DenseOperator { factors, matrix })
    }

    /// Row-major entries, `(prod dims)^2` of them.
    pub fn from_entries(factors: Vec<SpaceLabel>, entries: Vec<C64>) -> Result<Self> {
        let n = total_dim(&factors);
        Self::new(factors, CMatrix::from_vec(n, n, entries)?)
    }

    pub fn identity(factors: Vec<SpaceLabel>) -> Result<Self> {
        let n = total_dim(&factors);
        Self::new(factors, CMatrix::identity(n))
    }

    pub fn zeros(factors: Vec<SpaceLabel>) -> Result<Self> {
        let n = total_dim(&factors);
        Self::new(factors, CMatrix::zeros(n, n))
    }

    /// 1x1 operator on the empty product.
    pub fn scalar(value: C64) -> Self {
        DenseOperator {
            factors: Vec::new(),
            matrix: CMatrix::from_vec(1, 1, vec![value]).expect("1x1"),
        }
    }

    /// `|v><v|` on a single space.
    pub fn pure(label: SpaceLabel, v: &[C64]) -> Result<Self> {
        Self::new(vec![label], CMatrix::outer(v))
    }

    pub fn factors(&self) -> &[SpaceLabel] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.matrix.get(r, c)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.name == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.factors.iter().any(|f| f.name == label)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.transpose(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.scale_real(s),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.scale(s),
        }
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.factors != other.factors {
            return Err(Error::DimensionMismatch(format!(
                "factor lists differ: {:?} vs {:?}",
                self.labels(),
                other.labels()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.add(&other.matrix),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.sub(&other.matrix),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.matmul(&other.matrix)?,
        })
    }

    /// Entrywise max distance; infinite when the spaces differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.factors != other.factors {
            return f64::INFINITY;
        }
        self.matrix.max_abs_diff(&other.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.matrix.hermitian_deviation() <= tol
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        hermitian_spectrum(self, tol).is_ok_and(|s| s.is_psd())
    }

    /// Rename factors in place of the current ones; dimensions must agree.
    pub fn with_factors(&self, factors: Vec<SpaceLabel>) -> Result<Self> {
        if factors.len() != self.factors.len()
            || factors.iter().zip(&self.factors).any(|(a, b)| a.dim != b.dim)
        {
            return Err(Error::DimensionMismatch(
                "relabeling must preserve factor dimensions".into(),
            ));
        }
        Self::new(factors, self.matrix.clone())
    }

    /// Reorder the tensor factors.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.factors.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation names {} factors, operator has {}",
                order.len(),
                self.factors.len()
            )));
        }
        let perm = order
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        let new_factors: Vec<SpaceLabel> = perm.iter().map(|&k| self.factors[k].clone()).collect();
        check_unique(&new_factors)?;
        if perm.iter().enumerate().all(|(a, &b)| a == b) {
            return Ok(self.clone());
        }
        let (new_index, _) = split_indices(&self.dims(), &perm);
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(new_index[i], new_index[j], self.matrix.get(i, j));
            }
        }
        Self::new(new_factors, m)
    }

    /// Tensor with the identity on every space of `full` this operator does
    /// not carry, then reorder to `full`.
    pub fn embed(&self, full: &[SpaceLabel]) -> Result<Self> {
        for f in &self.factors {
            if !full.contains(f) {
                return Err(Error::UnknownLabel(f.name.clone()));
            }
        }
        let missing: Vec<SpaceLabel> = full
            .iter()
            .filter(|f| !self.factors.contains(f))
            .cloned()
            .collect();
        let padded = if missing.is_empty() {
            self.clone()
        } else {
            tensor(self, &DenseOperator::identity(missing)?)?
        };
        let order: Vec<&str> = full.iter().map(|f| f.name.as_str()).collect();
        padded.permute(&order)
    }

    /// `Tr_X[ self (1 (x) other^T) ]` where `X` are the factors of `other`.
    ///
    /// This is the contraction used by the Born rule: contracting a process
    /// matrix with one lab's CP map leaves an operator on the other labs.
    pub fn contract(&self, other: &DenseOperator) -> Result<Self> {
        let sel = other
            .factors
            .iter()
            .map(|f| {
                let k = self.position(&f.name)?;
                if self.factors[k].dim != f.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "space `{}` has dimension {} vs {}",
                        f.name, self.factors[k].dim, f.dim
                    )));
                }
                Ok(k)
            })
            .collect::<Result<Vec<_>>>()?;
        let (sub, rest) = split_indices(&self.dims(), &sel);
        let rest_factors: Vec<SpaceLabel> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(k, _)| !sel.contains(k))
            .map(|(_, f)| f.clone())
            .collect();
        let m = total_dim(&rest_factors);
        let mut out = CMatrix::zeros(m, m);
        let n = self.dim();
        for i in 0..n {
            let (ri, si) = (rest[i], sub[i]);
            for j in 0..n {
                let w = self.matrix.get(i, j);
                if w == ZERO {
                    continue;
                }
                // (other^T)[sj, si] = other[si, sj]
                out.add_at(ri, rest[j], w * other.matrix.get(si, sub[j]));
            }
        }
        Self::new(rest_factors, out)
    }

    /// `Tr[self * other^T]`, requiring identical factor sets (any order).
    pub fn pair(&self, other: &DenseOperator) -> Result<C64> {
        if self.factors.len() != other.factors.len() {
            return Err(Error::DimensionMismatch(
                "pairing needs operators on the same spaces".into(),
            ));
        }
        Ok(self.contract(other)?.get(0, 0))
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        partial_trace(self, keep)
    }

    pub fn spectrum(&self, tol: f64) -> Result<Spectrum> {
        hermitian_spectrum(self, tol)
    }

    /// Eigenvalues (descending) and eigenvectors as columns.
    pub fn eigh(&self, tol: f64) -> Result<(Vec<f64>, CMatrix)> {
        let dev = self.matrix.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        Ok(self.matrix.eigh())
    }

    /// Nearest PSD operator (negative eigenvalues clipped).
    pub fn psd_projection(&self) -> Self {
        DenseOperator {
            factors: self.factors.clone(),
            matrix: self.matrix.psd_projection(),
        }
    }

    /// Sum of absolute eigenvalues of a Hermitian operator.
    pub fn trace_norm(&self, tol: f64) -> Result<f64> {
        Ok(self.spectrum(tol)?.eigenvalues.iter().map(|l| l.abs()).sum())
    }

    /// `Tr_X(self) (x) 1_X / d_X` reordered back to the original factors.
    pub fn trace_replace(&self, spaces: &[&str]) -> Result<Self> {
        if spaces.is_empty() {
            return Ok(self.clone());
        }
        let keep: Vec<&str> = self
            .labels()
            .into_iter()
            .filter(|l| !spaces.contains(l))
            .collect();
        let d: usize = spaces
            .iter()
            .map(|s| self.position(s).map(|k| self.factors[k].dim))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .product();
        let reduced = self.partial_trace(&keep)?.scale(1.0 / d as f64);
        reduced.embed(&self.factors)
    }
}

/// Kronecker product; the factor lists concatenate.
pub fn tensor(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().cloned());
    check_unique(&factors)?;
    DenseOperator::new(factors, a.matrix.kron(&b.matrix))
}

/// Tensor a whole list; an empty list gives the 1x1 identity.
pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a DenseOperator>) -> Result<DenseOperator> {
    let mut acc = DenseOperator::scalar(ONE);
    for op in ops {
        acc = tensor(&acc, op)?;
    }
    Ok(acc)
}

/// Trace over every factor not named in `keep`. The result keeps the
/// surviving factors in their original order; an empty `keep` gives the full
/// trace as a 1x1 operator.
pub fn partial_trace(op: &DenseOperator, keep: &[&str]) -> Result<DenseOperator> {
    let keep_pos = keep
        .iter()
        .map(|l| op.position(l))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = keep_pos.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep_pos.len() {
        return Err(Error::DuplicateLabel("repeated label in keep set".into()));
    }
    let traced: Vec<usize> = (0..op.factors.len()).filter(|k| !sorted.contains(k)).collect();
    let (sub, rest) = split_indices(&op.dims(), &traced);
    let kept: Vec<SpaceLabel> = sorted.iter().map(|&k| op.factors[k].clone()).collect();
    let m = total_dim(&kept);
    let mut out = CMatrix::zeros(m, m);
    let n = op.dim();
    for i in 0..n {
        for j in 0..n {
            if sub[i] == sub[j] {
                out.add_at(rest[i], rest[j], op.matrix.get(i, j));
            }
        }
    }
    DenseOperator::new(kept, out)
}

/// Eigenvalues of a Hermitian operator, descending.
pub fn hermitian_spectrum(op: &DenseOperator, tol: f64) -> Result<Spectrum> {
    let (eigenvalues, _) = op.eigh(tol)?;
    Ok(Spectrum { eigenvalues, tol })
}

/// Choi operator of `rho -> U rho U^dagger`. Input factors are `U`'s own
/// factors; output factors are the same names primed.
pub fn choi_of_unitary(u: &DenseOperator) -> Result<DenseOperator> {
    let dev = u.matrix.unitary_deviation();
    if dev > DEFAULT_TOL {
        return Err(Error::NotUnitary(dev));
    }
    let outputs: Vec<SpaceLabel> = u.factors.iter().map(SpaceLabel::primed).collect();
    choi_from_kraus(std::slice::from_ref(&u.matrix), u.factors.clone(), outputs)
}

/// `sum_k |K_k>> <<K_k|` with `|K>> = sum_i |i> (x) K|i>`.
pub fn choi_from_kraus(
    kraus: &[CMatrix],
    inputs: Vec<SpaceLabel>,
    outputs: Vec<SpaceLabel>,
) -> Result<DenseOperator> {
    let din = total_dim(&inputs);
    let dout = total_dim(&outputs);
    let mut factors = inputs;
    factors.extend(outputs);
    let n = din * dout;
    let mut j = CMatrix::zeros(n, n);
    for k in kraus {
        if k.rows() != dout || k.cols() != din {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, expected {dout}x{din}",
                k.rows(),
                k.cols()
            )));
        }
        let vec: Vec<C64> = (0..n).map(|idx| k.get(idx % dout, idx / dout)).collect();
        j = j.add(&CMatrix::outer(&vec));
    }
    DenseOperator::new(factors, j)
}

/// Kraus operators recovered from the spectral decomposition of a Choi
/// operator over `(inputs, outputs)`, `din` being the input dimension.
pub fn kraus_from_choi(choi: &DenseOperator, din: usize, tol: f64) -> Result<Vec<CMatrix>> {
    let n = choi.dim();
    if n % din != 0 {
        return Err(Error::DimensionMismatch("input dimension does not divide Choi".into()));
    }
    let dout = n / din;
    let (vals, vecs) = choi.eigh(tol)?;
    if vals.last().is_some_and(|&l| l < -tol) {
        return Err(Error::NotCptp("Choi operator has a negative eigenvalue".into()));
    }
    Ok(vals
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > tol)
        .map(|(k, &l)| {
            let s = l.sqrt();
            CMatrix::from_fn(dout, din, |o, i| vecs.get(i * dout + o, k) * s)
        })
        .collect())
}

/// Apply the map with Choi `choi` (factors `inputs ++ outputs`) to `rho`
/// (factors `inputs`): `Tr_in[(rho^T (x) 1) J]`. Result carries the output
/// factors.
pub fn apply_choi(choi: &DenseOperator, rho: &DenseOperator) -> Result<DenseOperator> {
    // contract() transposes its argument, so pass rho itself
    choi.contract(rho)
}

/// CP and trace preserving within `tol`, with `inputs` naming the input
/// factors of `choi`.
pub fn is_cptp(choi: &DenseOperator, inputs: &[&str], tol: f64) -> bool {
    let Ok(spec) = choi.spectrum(tol) else {
        return false;
    };
    if !spec.is_psd() {
        return false;
    }
    let Ok(reduced) = choi.partial_trace(inputs) else {
        return false;
    };
    let id = CMatrix::identity(reduced.dim());
    reduced.matrix.max_abs_diff(&id) <= tol
}
