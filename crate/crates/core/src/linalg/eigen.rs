//! Cyclic Jacobi eigensolver for real symmetric matrices, and the Hermitian
//! eigendecomposition built on top of it through the real embedding
//! `[[Re, -Im], [Im, Re]]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition of a real symmetric matrix. Eigenvalues are returned in
/// ascending order with matching eigenvector columns.
pub fn jacobi_symmetric(input: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = input.nrows();
    assert_eq!(n, input.ncols(), "jacobi_symmetric expects a square matrix");
    let mut a = input.clone();
    // symmetrise against rounding in callers
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    (values, vectors)
}

/// Real symmetric embedding `[[Re, -Im], [Im, Re]]` of a complex matrix.
pub fn real_embedding(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let d = m.nrows();
    let mut out = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + d, j + d)] = z.re;
            out[(i, j + d)] = -z.im;
            out[(i + d, j)] = z.im;
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix: the embedding's spectrum is each
/// eigenvalue duplicated, so sorted pairs are averaged.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let (vals, _) = jacobi_symmetric(&real_embedding(m));
    vals.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Full Hermitian eigendecomposition `(values ascending, unitary columns)`.
///
/// Every real eigenvector `[u; v]` of the embedding maps to a complex
/// eigenvector `u + i v`; each complex eigenvector appears twice (up to a
/// phase), so within each eigenvalue cluster a pivoted Gram-Schmidt keeps the
/// `cluster_len / 2` most independent images.
pub fn hermitian_eigh(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let d = m.nrows();
    let (vals, vecs) = jacobi_symmetric(&real_embedding(m));
    let scale = vals.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-8 * scale;

    let candidates: Vec<Vec<Complex64>> = (0..2 * d)
        .map(|c| {
            (0..d)
                .map(|i| Complex64::new(vecs[(i, c)], vecs[(i + d, c)]))
                .collect()
        })
        .collect();

    let mut accepted: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    let mut start = 0;
    while start < 2 * d {
        let mut end = start + 1;
        while end < 2 * d && vals[end] - vals[end - 1] <= tol {
            end += 1;
        }
        let want = (end - start).div_ceil(2);
        let mut pool: Vec<usize> = (start..end).collect();
        for _ in 0..want {
            if accepted.len() == d {
                break;
            }
            let mut best: Option<(usize, Vec<Complex64>, f64)> = None;
            for (slot, &c) in pool.iter().enumerate() {
                let r = orthogonalise(&candidates[c], &accepted);
                let n = norm(&r);
                if best.as_ref().is_none_or(|b| n > b.2) {
                    best = Some((slot, r, n));
                }
            }
            if let Some((slot, r, n)) = best {
                if n > 1e-6 {
                    accepted.push(r.iter().map(|z| z / n).collect());
                }
                pool.remove(slot);
            }
        }
        start = end;
    }
    // pathological clustering: fill from whatever remains most independent
    while accepted.len() < d {
        let mut best: Option<(Vec<Complex64>, f64)> = None;
        for c in &candidates {
            let r = orthogonalise(c, &accepted);
            let n = norm(&r);
            if best.as_ref().is_none_or(|b| n > b.1) {
                best = Some((r, n));
            }
        }
        let (r, n) = best.expect("candidates are nonempty");
        accepted.push(r.iter().map(|z| z / n).collect());
    }

    // order by Rayleigh quotient so columns line up with the sorted values
    let mut with_rq: Vec<(f64, Vec<Complex64>)> = accepted
        .into_iter()
        .map(|v| (rayleigh(m, &v), v))
        .collect();
    with_rq.sort_by(|a, b| a.0.total_cmp(&b.0));

    let values: Vec<f64> = vals.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    let mut u = DMatrix::<Complex64>::zeros(d, d);
    for (col, (_, v)) in with_rq.iter().enumerate() {
        for i in 0..d {
            u[(i, col)] = v[i];
        }
    }
    (values, u)
}

fn orthogonalise(v: &[Complex64], basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut r = v.to_vec();
    // two passes for stability
    for _ in 0..2 {
        for b in basis {
            let proj: Complex64 = b.iter().zip(&r).map(|(bi, ri)| bi.conj() * ri).sum();
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= proj * bi;
            }
        }
    }
    r
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rayleigh(m: &DMatrix<Complex64>, v: &[Complex64]) -> f64 {
    let d = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += v[i].conj() * m[(i, j)] * v[j];
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalises_small_symmetric() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let (vals, vecs) = jacobi_symmetric(&a);
        let s2 = 2f64.sqrt();
        let expected = [2.0 - s2, 2.0, 2.0 + s2];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-13);
        }
        let recon = &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)) * vecs.transpose();
        assert!((recon - a).norm() < 1e-12);
    }

    #[test]
    fn degenerate_hermitian_eigenvectors_are_unitary() {
        // identity plus a rank-one complex projector: eigenvalue 1 twice, 2 once
        let psi = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(0.5_f64.sqrt(), 0.0),
        ];
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += psi[i] * psi[j].conj();
            }
        }
        let (vals, u) = hermitian_eigh(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        assert!((vals[2] - 2.0).abs() < 1e-12);
        let gram = u.adjoint() * &u;
        assert!((gram - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            vals.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        assert!((&u * d * u.adjoint() - m).norm() < 1e-12);
    }
}
