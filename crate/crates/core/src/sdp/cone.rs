//! Product cone `R^l_+ x S^{n_1}_+ x ... x S^{n_k}_+` in svec coordinates
//! (column-major lower triangle, off-diagonals scaled by sqrt 2), and the
//! Nesterov-Todd scaling at a strictly interior pair.

use nalgebra::{DMatrix, DVector};

use crate::linalg::eigen::jacobi_symmetric;

const SQRT2: f64 = std::f64::consts::SQRT_2;

pub(crate) fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        out[k] = m[(j, j)];
        k += 1;
        for i in j + 1..n {
            out[k] = SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
}

pub(crate) fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = vec![0.0; svec_len(m.nrows())];
    svec_into(m, &mut v);
    v
}

pub(crate) fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..n {
            let x = v[k] / SQRT2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

#[derive(Debug, Clone)]
pub(crate) struct Cone {
    pub lin: usize,
    pub psd: Vec<usize>,
    offsets: Vec<usize>,
    pub dim: usize,
}

impl Cone {
    pub fn new(lin: usize, psd: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(psd.len());
        let mut off = lin;
        for &n in &psd {
            offsets.push(off);
            off += svec_len(n);
        }
        Self { lin, psd, offsets, dim: off }
    }

    /// Barrier degree.
    pub fn degree(&self) -> f64 {
        (self.lin + self.psd.iter().sum::<usize>()) as f64
    }

    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b] + svec_len(self.psd[b])
    }

    pub fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim);
        for i in 0..self.lin {
            e[i] = 1.0;
        }
        for (b, &n) in self.psd.iter().enumerate() {
            let r = self.block_range(b);
            svec_into(&DMatrix::identity(n, n), &mut e.as_mut_slice()[r]);
        }
        e
    }

    fn map_blocks(&self, v: &DVector<f64>, lin: impl Fn(usize, f64) -> f64, mut psd: impl FnMut(usize, DMatrix<f64>) -> DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.lin {
            out[i] = lin(i, v[i]);
        }
        for (b, &n) in self.psd.iter().enumerate() {
            let r = self.block_range(b);
            let m = smat(&v.as_slice()[r.clone()], n);
            svec_into(&psd(b, m), &mut out.as_mut_slice()[r]);
        }
        out
    }

    /// Jordan product `(XY + YX)/2` blockwise.
    pub fn jordan(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.lin {
            out[i] = a[i] * b[i];
        }
        for (k, &n) in self.psd.iter().enumerate() {
            let r = self.block_range(k);
            let x = smat(&a.as_slice()[r.clone()], n);
            let y = smat(&b.as_slice()[r.clone()], n);
            let p = &x * &y;
            svec_into(&((&p + p.transpose()) * 0.5), &mut out.as_mut_slice()[r]);
        }
        out
    }

    /// Smallest eigenvalue over all blocks (linear entries count as 1x1 blocks).
    pub fn min_eig(&self, v: &DVector<f64>) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.lin {
            min = min.min(v[i]);
        }
        for (b, &n) in self.psd.iter().enumerate() {
            let m = smat(&v.as_slice()[self.block_range(b)], n);
            min = min.min(m.symmetric_eigenvalues().min());
        }
        min
    }

    /// Smallest eigenvalue of `s^{1/2} z s^{1/2}` over all blocks, a measure
    /// of how far the pair is from the central path. `None` if `s` is not
    /// positive definite.
    pub fn min_complementarity(&self, s: &DVector<f64>, z: &DVector<f64>) -> Option<f64> {
        let mut min = f64::INFINITY;
        for i in 0..self.lin {
            min = min.min(s[i] * z[i]);
        }
        for (b, &n) in self.psd.iter().enumerate() {
            let r = self.block_range(b);
            let sm = smat(&s.as_slice()[r.clone()], n);
            let zm = smat(&z.as_slice()[r], n);
            let l = sm.cholesky()?.l();
            let m = l.transpose() * zm * &l;
            let m = (&m + m.transpose()) * 0.5;
            min = min.min(m.symmetric_eigenvalues().min());
        }
        Some(min)
    }

    /// Largest `alpha <= cap` with `v + alpha dv` in the cone, where `v` is
    /// strictly interior. Uses Cholesky of each block of `v`.
    pub fn max_step(&self, v: &DVector<f64>, dv: &DVector<f64>, cap: f64) -> Option<f64> {
        let mut alpha = cap;
        for i in 0..self.lin {
            if dv[i] < 0.0 {
                alpha = alpha.min(-v[i] / dv[i]);
            }
        }
        for (b, &n) in self.psd.iter().enumerate() {
            let r = self.block_range(b);
            let x = smat(&v.as_slice()[r.clone()], n);
            let dx = smat(&dv.as_slice()[r], n);
            let l = x.cholesky()?.l();
            let li = l.clone().try_inverse()?;
            let m = &li * dx * li.transpose();
            let m = (&m + m.transpose()) * 0.5;
            let min = m.symmetric_eigenvalues().min();
            if min < 0.0 {
                alpha = alpha.min(-1.0 / min);
            }
        }
        Some(alpha)
    }
}

/// Nesterov-Todd scaling `W` with `W z = W^{-T} s = lambda`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    lin_w: Vec<f64>,
    lin_lambda: Vec<f64>,
    r: Vec<DMatrix<f64>>,
    rinv: Vec<DMatrix<f64>>,
    lambda: Vec<Vec<f64>>,
}

impl Scaling {
    pub fn new(cone: &Cone, s: &DVector<f64>, z: &DVector<f64>) -> Option<Self> {
        let mut lin_w = Vec::with_capacity(cone.lin);
        let mut lin_lambda = Vec::with_capacity(cone.lin);
        for i in 0..cone.lin {
            if s[i] <= 0.0 || z[i] <= 0.0 {
                return None;
            }
            lin_w.push((s[i] / z[i]).sqrt());
            lin_lambda.push((s[i] * z[i]).sqrt());
        }
        let mut r = Vec::new();
        let mut rinv = Vec::new();
        let mut lambda = Vec::new();
        for (b, &n) in cone.psd.iter().enumerate() {
            let range = cone.block_range(b);
            let sm = smat(&s.as_slice()[range.clone()], n);
            let zm = smat(&z.as_slice()[range], n);
            let ls = sm.cholesky()?.l();
            let lz = zm.cholesky()?.l();
            // right singular pairs of L_z^T L_s from the Gram matrix: the
            // iterative SVD can split singular values that are exactly paired
            let m = lz.transpose() * &ls;
            let (ev, v) = jacobi_symmetric(&(m.transpose() * m));
            let sig = DVector::from_iterator(ev.len(), ev.iter().map(|&e| e.max(0.0).sqrt()));
            if sig.iter().any(|&x| !(x > 0.0)) {
                return None;
            }
            let inv_sqrt = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
            let sqrt = DMatrix::from_diagonal(&sig.map(|x| x.sqrt()));
            let ls_inv = ls.clone().try_inverse()?;
            r.push(&ls * &v * inv_sqrt);
            rinv.push(sqrt * v.transpose() * ls_inv);
            lambda.push(sig.iter().copied().collect());
        }
        Some(Self { lin_w, lin_lambda, r, rinv, lambda })
    }

    pub fn lambda(&self, cone: &Cone) -> DVector<f64> {
        let mut out = DVector::zeros(cone.dim);
        for i in 0..cone.lin {
            out[i] = self.lin_lambda[i];
        }
        for (b, lam) in self.lambda.iter().enumerate() {
            let r = cone.block_range(b);
            svec_into(&DMatrix::from_diagonal(&DVector::from_column_slice(lam)), &mut out.as_mut_slice()[r]);
        }
        out
    }

    /// `W v`: `R^T V R`.
    pub fn apply(&self, cone: &Cone, v: &DVector<f64>) -> DVector<f64> {
        cone.map_blocks(v, |i, x| x * self.lin_w[i], |b, m| self.r[b].transpose() * m * &self.r[b])
    }

    /// `W^T v`: `R V R^T`.
    pub fn apply_t(&self, cone: &Cone, v: &DVector<f64>) -> DVector<f64> {
        cone.map_blocks(v, |i, x| x * self.lin_w[i], |b, m| &self.r[b] * m * self.r[b].transpose())
    }

    /// `W^{-T} v`: `R^{-1} V R^{-T}`.
    pub fn apply_inv_t(&self, cone: &Cone, v: &DVector<f64>) -> DVector<f64> {
        cone.map_blocks(v, |i, x| x / self.lin_w[i], |b, m| &self.rinv[b] * m * self.rinv[b].transpose())
    }

    /// `(W^T W)^{-1} v`.
    pub fn apply_wtw_inv(&self, cone: &Cone, v: &DVector<f64>) -> DVector<f64> {
        cone.map_blocks(
            v,
            |i, x| x / (self.lin_w[i] * self.lin_w[i]),
            |b, m| {
                let q = self.rinv[b].transpose() * &self.rinv[b];
                &q * m * &q
            },
        )
    }

    /// Inverse of `u -> lambda o u`.
    pub fn lambda_div(&self, cone: &Cone, v: &DVector<f64>) -> DVector<f64> {
        cone.map_blocks(
            v,
            |i, x| x / self.lin_lambda[i],
            |b, m| {
                let lam = &self.lambda[b];
                DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 2.0 * m[(i, j)] / (lam[i] + lam[j]))
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_preserves_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.5, 0.0, 1.5, -3.0]);
        let ip = a.component_mul(&b).sum();
        let va = svec(&a);
        let vb = svec(&b);
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        assert!((ip - dot).abs() < 1e-12);
        assert!((smat(&va, 3) - a).norm() < 1e-14);
    }

    #[test]
    fn nt_scaling_identities() {
        let cone = Cone::new(1, vec![2]);
        let s = DVector::from_vec(vec![2.0, 2.0, 0.3 * SQRT2, 1.0]);
        let z = DVector::from_vec(vec![0.5, 1.0, -0.2 * SQRT2, 3.0]);
        let w = Scaling::new(&cone, &s, &z).unwrap();
        let lam = w.lambda(&cone);
        assert!((w.apply(&cone, &z) - &lam).norm() < 1e-12);
        assert!((w.apply_inv_t(&cone, &s) - &lam).norm() < 1e-12);
        // (W^T W)^{-1} applied to W^T W v returns v
        let v = DVector::from_vec(vec![0.3, -1.0, 0.7, 2.0]);
        let wtw = w.apply_t(&cone, &w.apply(&cone, &v));
        assert!((w.apply_wtw_inv(&cone, &wtw) - v).norm() < 1e-10);
    }

    #[test]
    fn step_length_hits_boundary() {
        let cone = Cone::new(0, vec![2]);
        let v = cone.identity();
        let dv = DVector::from_vec(vec![-2.0, 0.0, 0.0]);
        let a = cone.max_step(&v, &dv, 10.0).unwrap();
        assert!((a - 0.5).abs() < 1e-12);
    }
}
