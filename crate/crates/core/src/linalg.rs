//! Unlabeled dense complex matrices.
//!
//! [`CMatrix`] is the rectangular workhorse behind [`crate::tensor::DenseOperator`]:
//! Kraus operators, unitaries and state vectors live here before they are
//! attached to labeled spaces. Storage is row-major.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Build from nested real-valued rows; convenient for Pauli-style literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Column vector from amplitudes.
    pub fn column(amps: &[C64]) -> Self {
        CMatrix {
            rows: amps.len(),
            cols: 1,
            data: amps.to_vec(),
        }
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix product; panics on shape mismatch. For internal use where shapes
    /// are known to agree.
    pub(crate) fn mul(&self, other: &CMatrix) -> CMatrix {
        self.matmul(other).expect("matrix shapes agree")
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "vector length");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = CMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] =
                            a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - A^dagger|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// `max |U^dagger U - 1|`.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint()
            .mul(self)
            .max_abs_diff(&CMatrix::identity(self.rows))
    }

    /// Eigen-decomposition of a Hermitian matrix via Householder
    /// tridiagonalization and implicit QL/QR sweeps. Eigenvalues come back in
    /// descending order with the matching eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        assert!(self.is_square());
        let n = self.rows;
        // symmetrize to kill rounding-level anti-Hermitian noise
        let m = DMatrix::<C64>::from_fn(n, n, |r, c| 0.5 * (self.get(r, c) + self.get(c, r).conj()));
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    /// Reassemble `V diag(f(lambda)) V^dagger` from an eigen-decomposition.
    pub fn from_spectrum(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = vectors.rows;
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = vectors.get(r, k) * w;
                if vr == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += vr * vectors.get(c, k).conj();
                }
            }
        }
        out
    }

    /// Nearest positive semidefinite matrix in Frobenius norm.
    pub fn psd_projection(&self) -> CMatrix {
        let (vals, vecs) = self.eigh();
        Self::from_spectrum(&vals, &vecs, |l| l.max(0.0))
    }

    /// Complex Ginibre matrix with standard normal real and imaginary parts.
    pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
        Self::from_fn(rows, cols, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    /// Haar-random isometry with `rows >= cols` (unitary when square).
    pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
        assert!(rows >= cols, "isometry needs rows >= cols");
        let g = Self::ginibre(rows, cols, rng);
        let m = DMatrix::<C64>::from_fn(rows, cols, |r, c| g.get(r, c));
        let qr = m.qr();
        let q = qr.q();
        let r = qr.r();
        // fix the phase freedom of QR so the distribution is Haar
        CMatrix::from_fn(rows, cols, |i, j| {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
            q[(i, j)] * phase
        })
    }

    pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        Self::haar_isometry(n, n, rng)
    }

    /// Random density matrix `G G^dagger / tr` from a Ginibre matrix.
    pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let g = Self::ginibre(n, n, rng);
        let rho = g.mul(&g.adjoint());
        let t = rho.trace().re;
        rho.scale_real(1.0 / t)
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_vec(2, 2, vec![ZERO, -I, I, ZERO]).expect("2x2")
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_real_rows(&[&[s, s], &[s, -s]])
}

/// Computational basis vector `|k>` in dimension `d`.
pub fn basis_vector(d: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[k] = ONE;
    v
}

/// Digits of a row-major composite index, most significant factor first.
pub(crate) fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

pub(crate) fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            let u = CMatrix::haar_unitary(n, &mut rng);
            assert!(u.unitary_deviation() < 1e-12);
        }
        let v = CMatrix::haar_isometry(6, 2, &mut rng);
        assert!(v.adjoint().mul(&v).max_abs_diff(&CMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn eigh_sorts_descending() {
        let m = CMatrix::diag(&[C64::new(-1.0, 0.0), C64::new(3.0, 0.0), C64::new(0.5, 0.0)]);
        let (vals, _) = m.eigh();
        assert_eq!(vals, vec![3.0, 0.5, -1.0]);
    }

    #[test]
    fn digits_roundtrip() {
        let dims = [2, 3, 4];
        for i in 0..24 {
            assert_eq!(compose(&digits(i, &dims), &dims), i);
        }
    }

    #[test]
    fn paulis_anticommute() {
        let xz = pauli_x().mul(&pauli_z());
        let zx = pauli_z().mul(&pauli_x());
        assert!(xz.add(&zx).max_abs() < 1e-15);
        let y = pauli_y();
        assert!(y.mul(&y).max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }
}
