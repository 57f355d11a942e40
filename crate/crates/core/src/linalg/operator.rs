use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen;
use super::json::MatrixJson;
use crate::error::{Error, Result};

/// Deviation from Hermiticity above which construction is refused instead of
/// silently symmetrised.
const HERMITIAN_REJECT_TOL: f64 = 1e-8;

/// Dense `d x d` complex Hermitian matrix.
///
/// Construction symmetrises the input, so `entries[i][j] == conj(entries[j][i])`
/// holds exactly afterwards.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct HermitianOperator {
    mat: DMatrix<Complex64>,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianOperator(dim={}) ", self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.mat[(i, j)];
                    format!("{:.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl HermitianOperator {
    pub fn from_matrix(mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::invalid(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("operator has non-finite entries"));
        }
        let skew = (&mat - mat.adjoint()).norm();
        if skew > HERMITIAN_REJECT_TOL * (1.0 + mat.norm()) {
            return Err(Error::invalid(format!(
                "operator is not Hermitian (||A - A^dag||_F = {skew:.3e})"
            )));
        }
        Ok(Self::symmetrised(mat))
    }

    /// Hermitian part `(A + A^dag) / 2` of an arbitrary square matrix.
    pub fn symmetrised(mat: DMatrix<Complex64>) -> Self {
        let adj = mat.adjoint();
        Self {
            mat: (mat + adj) * Complex64::new(0.5, 0.0),
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::invalid("rows must form a square matrix"));
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(v, 0.0);
            }
        }
        Self::from_matrix(m)
    }

    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let d = re.len();
        if im.len() != d || re.iter().chain(im).any(|r| r.len() != d) {
            return Err(Error::invalid("re/im parts must both be d x d"));
        }
        let m = DMatrix::from_fn(d, d, |i, j| Complex64::new(re[i][j], im[i][j]));
        Self::from_matrix(m)
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            mat: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mat: DMatrix::identity(d, d),
        }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let d = entries.len();
        let mut mat = DMatrix::zeros(d, d);
        for (i, &v) in entries.iter().enumerate() {
            mat[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { mat }
    }

    /// `|psi><psi|` (not normalised).
    pub fn projector(psi: &[Complex64]) -> Self {
        let d = psi.len();
        Self {
            mat: DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj()),
        }
    }

    /// `|i><i|` in dimension `d`.
    pub fn basis_projector(d: usize, i: usize) -> Self {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        Self::diag(&e)
    }

    /// Coefficient `C` with `Re Tr(C X) = Re X_ij`.
    pub fn re_entry_functional(d: usize, i: usize, j: usize) -> Self {
        let mut mat = DMatrix::zeros(d, d);
        if i == j {
            mat[(i, i)] = Complex64::new(1.0, 0.0);
        } else {
            mat[(i, j)] = Complex64::new(0.5, 0.0);
            mat[(j, i)] = Complex64::new(0.5, 0.0);
        }
        Self { mat }
    }

    /// Coefficient `C` with `Re Tr(C X) = Im X_ij` (`i != j`).
    pub fn im_entry_functional(d: usize, i: usize, j: usize) -> Self {
        let mut mat = DMatrix::zeros(d, d);
        mat[(i, j)] = Complex64::new(0.0, 0.5);
        mat[(j, i)] = Complex64::new(0.0, -0.5);
        Self { mat }
    }

    /// Orthonormal basis of the `d^2`-dimensional real space of Hermitian
    /// matrices: `E_ii`, `(E_ij + E_ji)/sqrt 2`, `i(E_ij - E_ji)/sqrt 2`.
    pub fn hermitian_basis(d: usize) -> Vec<Self> {
        let s = std::f64::consts::SQRT_2;
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            out.push(Self::re_entry_functional(d, i, i));
            for j in i + 1..d {
                out.push(Self::re_entry_functional(d, i, j).scale(s));
                out.push(Self::im_entry_functional(d, i, j).scale(s));
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// Real trace pairing `Re Tr(A B)`; exact for Hermitian arguments.
    pub fn pair(&self, other: &HermitianOperator) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.mat[(i, j)] * other.mat[(j, i)]).re;
            }
        }
        acc
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            mat: &self.mat * Complex64::new(c, 0.0),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigen::hermitian_eigenvalues(&self.mat)
    }

    /// Eigenvalues (ascending) with eigenvectors as unitary columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        eigen::hermitian_eigh(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("dimension is positive")
    }

    /// `||A||_1`, the sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|v| v.abs()).sum()
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Spectral map `f(A) = U f(diag) U^dag`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, u) = self.eigh();
        let fd = DVector::from_iterator(vals.len(), vals.iter().map(|&v| Complex64::new(f(v), 0.0)));
        let mat = &u * DMatrix::from_diagonal(&fd) * u.adjoint();
        Self::symmetrised(mat)
    }

    /// Replaces eigenvalues below zero by zero.
    pub fn clip_negative(&self) -> Self {
        self.map_spectrum(|v| v.max(0.0))
    }

    pub fn sqrt_psd(&self) -> Self {
        self.map_spectrum(|v| v.max(0.0).sqrt())
    }

    /// Pseudo-inverse square root: eigenvalues below `cutoff` map to zero.
    pub fn inv_sqrt_psd(&self, cutoff: f64) -> Self {
        self.map_spectrum(|v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 })
    }

    /// `B A B` for Hermitian `B`.
    pub fn sandwich(&self, b: &HermitianOperator) -> Self {
        Self::symmetrised(&b.mat * &self.mat * &b.mat)
    }

    /// `U A U^dag` for an arbitrary square `U`.
    pub fn conjugate_by(&self, u: &DMatrix<Complex64>) -> Self {
        Self::symmetrised(u * &self.mat * u.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self {
            mat: self.mat.transpose(),
        }
    }

    pub fn kron(&self, other: &HermitianOperator) -> Self {
        Self {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Frobenius distance to the nearest diagonal matrix.
    pub fn off_diagonal_norm(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    acc += self.mat[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Keeps only the diagonal.
    pub fn dephased(&self) -> Self {
        Self::diag(&self.diagonal())
    }

    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn sum<'a>(d: usize, ops: impl IntoIterator<Item = &'a HermitianOperator>) -> Self {
        let mut mat = DMatrix::zeros(d, d);
        for op in ops {
            mat += &op.mat;
        }
        Self { mat }
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        HermitianOperator { mat: -&self.mat }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

impl TryFrom<MatrixJson> for HermitianOperator {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        j.into_operator()
    }
}

impl From<HermitianOperator> for MatrixJson {
    fn from(op: HermitianOperator) -> Self {
        MatrixJson::from_operator(&op, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trace_norm_examples() {
        assert!((HermitianOperator::identity(2).trace_norm() - 2.0).abs() < 1e-14);
        assert!((HermitianOperator::diag(&[1.0, -1.0]).trace_norm() - 2.0).abs() < 1e-14);
        let ones = HermitianOperator::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!((ones.trace_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite_and_non_hermitian() {
        let nan = DMatrix::from_element(2, 2, c(f64::NAN, 0.0));
        assert!(HermitianOperator::from_matrix(nan).is_err());
        let skew = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(HermitianOperator::from_matrix(skew).is_err());
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(HermitianOperator::from_matrix(rect).is_err());
    }

    #[test]
    fn construction_symmetrises_small_noise() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 1.0), c(1e-13, -1.0), c(2.0, 1e-14)],
        );
        let h = HermitianOperator::from_matrix(m).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        assert_eq!(h.get(1, 1).im, 0.0);
    }

    #[test]
    fn spectral_functions() {
        let a = HermitianOperator::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let s = a.sqrt_psd();
        let back = HermitianOperator::symmetrised(s.matrix() * s.matrix());
        assert!(back.max_abs_diff(&a) < 1e-12);
        let is = a.inv_sqrt_psd(1e-14);
        let id = a.sandwich(&is);
        assert!(id.max_abs_diff(&HermitianOperator::identity(2)) < 1e-12);
    }

    #[test]
    fn pairing_is_real_trace_product() {
        let a = HermitianOperator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)],
        ))
        .unwrap();
        let b = HermitianOperator::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let direct = (a.matrix() * b.matrix()).trace().re;
        assert!((a.pair(&b) - direct).abs() < 1e-15);
    }
}
