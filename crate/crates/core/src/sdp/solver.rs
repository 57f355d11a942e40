use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cone::{smat, svec, svec_into, svec_len, Cone, Scaling};
use super::program::{ConicProgram, LinearExpr, Sense};
use crate::error::Result;
use crate::linalg::eigen::real_embedding;
use crate::linalg::HermitianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub mu: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
    /// Primal and dual objectives of the normalised iterate, in the internal
    /// minimisation form.
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `s.z` of the normalised iterate; never negative.
    pub complementarity: f64,
    /// Residual part of the objective difference, so that
    /// `primal_objective - dual_objective = complementarity + residual_slack`.
    pub residual_slack: f64,
}

/// Iteration records as CSV with header `iter,mu,primal_res,dual_res,gap`.
pub fn iteration_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("iter,mu,primal_res,dual_res,gap\n");
    for r in records {
        out.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", r.iter, r.mu, r.primal_res, r.dual_res, r.gap));
    }
    out
}

/// Outcome of [`solve`].
///
/// Dual quantities refer to the program as minimised internally (a maximised
/// objective is negated first). With Lagrangian
/// `c.x - y.(Ax - b) + u.(Gx - h) - sum_b <Z_b, X_b>`, `eq_duals` holds `y`,
/// `ineq_duals` holds `u >= 0` and `block_duals` the dual slacks `Z_b >= 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: SolverStatus,
    /// Primal objective in the program's own sense, constant included.
    pub objective: f64,
    /// Dual objective in the program's own sense, constant included.
    pub dual_objective: f64,
    /// `|primal - dual| / max(1, |primal|)`, measured with the objective
    /// scaled to unit norm.
    pub duality_gap: f64,
    /// Relative primal residual.
    pub primal_residual: f64,
    /// Dual residual relative to the objective norm.
    pub dual_residual: f64,
    pub iterations: usize,
    pub block_values: Vec<HermitianOperator>,
    pub scalar_values: Vec<f64>,
    pub eq_duals: Vec<f64>,
    pub ineq_duals: Vec<f64>,
    pub block_duals: Vec<HermitianOperator>,
    pub message: String,
    #[serde(skip)]
    pub log: Vec<IterationRecord>,
}

impl SolverReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }

    /// Iteration log as CSV with header `iter,mu,primal_res,dual_res,gap`.
    pub fn log_csv(&self) -> String {
        iteration_csv(&self.log)
    }

    /// Converts a non-optimal report into a solver error.
    pub fn require_optimal(self, what: &str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(crate::Error::Solver {
                status: self.status,
                detail: format!(
                    "{what}: {} (gap {:.2e}, pres {:.2e}, dres {:.2e})",
                    self.message, self.duality_gap, self.primal_residual, self.dual_residual
                ),
            })
        }
    }
}

/// `[[Re, -Im], [Im, Re]]`: real symmetric `2d x 2d` embedding of a Hermitian
/// operator. Spectrum is that of the input with every eigenvalue doubled in
/// multiplicity, and `<realify(A), realify(B)> = 2 Re Tr(AB)`.
pub fn realify(op: &HermitianOperator) -> DMatrix<f64> {
    real_embedding(op.matrix())
}

/// Hermitian operator whose realification is the structured projection of `x`.
fn unrealify(x: &DMatrix<f64>) -> HermitianOperator {
    let d = x.nrows() / 2;
    let m = DMatrix::from_fn(d, d, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + d, j + d)]);
        let im = 0.5 * (x[(i + d, j)] - x[(i, j + d)]);
        Complex64::new(re, im)
    });
    HermitianOperator::symmetrised(m)
}

struct Standard {
    /// Objective scaled to unit norm, so that `C` and `cC` follow one path.
    c: DVector<f64>,
    /// Norm of the unscaled objective.
    c_scale: f64,
    /// Linearly independent subset of the equality rows.
    a: DMatrix<f64>,
    b: DVector<f64>,
    a_full: DMatrix<f64>,
    b_full: DVector<f64>,
    kept: Vec<usize>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    cone: Cone,
    /// Offset of each Hermitian block inside `x`.
    block_offsets: Vec<usize>,
    scalar_offset: usize,
}

impl Standard {
    fn build(prog: &ConicProgram) -> Self {
        let dims = prog.block_dims();
        let mut block_offsets = Vec::with_capacity(dims.len());
        let mut n = 0;
        for &d in &dims {
            block_offsets.push(n);
            n += svec_len(2 * d);
        }
        let scalar_offset = n;
        n += prog.scalars.len();

        let row = |e: &LinearExpr| -> DVector<f64> {
            let mut v = DVector::zeros(n);
            for (bid, coeff) in &e.blocks {
                let off = block_offsets[bid.0];
                let cv = svec(&realify(coeff));
                for (k, x) in cv.iter().enumerate() {
                    v[off + k] += 0.5 * x;
                }
            }
            for (sid, c) in &e.scalars {
                v[scalar_offset + sid.0] += c;
            }
            v
        };

        let sign = match prog.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let c = row(&prog.objective) * sign;
        let c_scale = match c.norm() {
            v if v > 0.0 => v,
            _ => 1.0,
        };
        let c = c / c_scale;

        let rows: Vec<DVector<f64>> = prog.eqs.iter().map(|(e, _)| row(e)).collect();
        let kept = independent_rows(&rows);
        let p = kept.len();
        let mut a = DMatrix::zeros(p, n);
        let mut b = DVector::zeros(p);
        for (r, &i) in kept.iter().enumerate() {
            a.set_row(r, &rows[i].transpose());
            b[r] = prog.eqs[i].1;
        }
        let mut a_full = DMatrix::zeros(rows.len(), n);
        let mut b_full = DVector::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            a_full.set_row(i, &r.transpose());
            b_full[i] = prog.eqs[i].1;
        }

        let psd: Vec<usize> = dims.iter().map(|d| 2 * d).collect();
        let cone = Cone::new(prog.ineqs.len(), psd);
        let mut g = DMatrix::zeros(cone.dim, n);
        let mut h = DVector::zeros(cone.dim);
        for (i, (e, rhs)) in prog.ineqs.iter().enumerate() {
            g.set_row(i, &row(e).transpose());
            h[i] = *rhs;
        }
        for (bi, &d) in dims.iter().enumerate() {
            let range = cone.block_range(bi);
            for (k, r) in range.enumerate() {
                g[(r, block_offsets[bi] + k)] = -1.0;
            }
            debug_assert_eq!(svec_len(2 * d), cone.block_range(bi).len());
        }
        Self {
            c,
            c_scale,
            a,
            b,
            a_full,
            b_full,
            kept,
            g,
            h,
            cone,
            block_offsets,
            scalar_offset,
        }
    }
}

impl Standard {
    /// Projects the block parts of a step onto realified Hermitian matrices.
    /// The starting point and the program are invariant under this projection,
    /// but rounding is not, and the anti-Hermitian part is otherwise free to drift.
    fn project_structured(&self, x: &mut DVector<f64>, s: &mut DVector<f64>, z: &mut DVector<f64>) {
        for (bi, &off) in self.block_offsets.iter().enumerate() {
            let range = self.cone.block_range(bi);
            let n = (((8 * range.len() + 1) as f64).sqrt() as usize - 1) / 2;
            project_block(&mut x.as_mut_slice()[off..off + range.len()], n);
            project_block(&mut s.as_mut_slice()[range.clone()], n);
            project_block(&mut z.as_mut_slice()[range], n);
        }
    }
}

fn project_block(v: &mut [f64], n: usize) {
    let m = smat(v, n);
    let d = n / 2;
    let p = DMatrix::from_fn(n, n, |i, j| {
        let (ii, jj) = (i % d, j % d);
        let re = 0.5 * (m[(ii, jj)] + m[(ii + d, jj + d)]);
        let im = 0.5 * (m[(ii + d, jj)] - m[(ii, jj + d)]);
        match (i < d, j < d) {
            (true, true) | (false, false) => re,
            (false, true) => im,
            (true, false) => -im,
        }
    });
    svec_into(&p, v);
}

/// Greedy Gram-Schmidt selection of a maximal linearly independent subset.
fn independent_rows(rows: &[DVector<f64>]) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let scale = r.norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = r.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v -= q * c;
            }
        }
        let nv = v.norm();
        if nv > 1e-10 * scale {
            basis.push(v / nv);
            kept.push(i);
        }
    }
    kept
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

#[derive(Clone, Copy)]
struct Metrics {
    pres: f64,
    dres: f64,
    pcost: f64,
    dcost: f64,
    gap: f64,
}

impl Metrics {
    fn score(&self) -> f64 {
        self.pres.max(self.dres).max(self.gap)
    }
}

struct Direction {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    kappa: f64,
}

/// Factorised reduced KKT matrix `[[G^T (W^T W)^{-1} G, A^T], [A, 0]]`.
struct Kkt {
    full: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl Kkt {
    fn new(sf: &Standard, w: &Scaling) -> Option<Self> {
        let n = sf.c.len();
        let p = sf.b.len();
        let mut dg = DMatrix::zeros(sf.cone.dim, n);
        for j in 0..n {
            let col = sf.g.column(j).into_owned();
            if col.iter().all(|&v| v == 0.0) {
                continue;
            }
            dg.set_column(j, &w.apply_wtw_inv(&sf.cone, &col));
        }
        let hmat = sf.g.transpose() * dg;
        let mut full = DMatrix::zeros(n + p, n + p);
        full.view_mut((0, 0), (n, n)).copy_from(&hmat);
        full.view_mut((0, n), (n, p)).copy_from(&sf.a.transpose());
        full.view_mut((n, 0), (p, n)).copy_from(&sf.a);
        let scale = (0..n).map(|i| hmat[(i, i)].abs()).fold(1.0, f64::max);
        let reg = 1e-15 * scale;
        let mut regd = full.clone();
        for i in 0..n {
            regd[(i, i)] += reg;
        }
        for i in n..n + p {
            regd[(i, i)] -= reg;
        }
        let lu = regd.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self { full, lu, n })
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut u = self.lu.solve(rhs)?;
        for _ in 0..4 {
            let r = rhs - &self.full * &u;
            let du = self.lu.solve(&r)?;
            u += du;
        }
        if u.iter().all(|v| v.is_finite()) {
            Some(u)
        } else {
            None
        }
    }

    /// Solves `A^T dy + G^T dz = bx`, `-A dx = by`, `-G dx + W^T W dz = bz`,
    /// refining against the unreduced system.
    fn solve3(
        &self,
        sf: &Standard,
        w: &Scaling,
        bx: &DVector<f64>,
        by: &DVector<f64>,
        bz: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (mut dx, mut dy, mut dz) = self.solve3_once(sf, w, bx, by, bz)?;
        for _ in 0..8 {
            let r1 = bx - sf.a.transpose() * &dy - sf.g.transpose() * &dz;
            let r2 = by + &sf.a * &dx;
            let r3 = bz + &sf.g * &dx - w.apply_t(&sf.cone, &w.apply(&sf.cone, &dz));
            let (cx, cy, cz) = self.solve3_once(sf, w, &r1, &r2, &r3)?;
            dx += cx;
            dy += cy;
            dz += cz;
        }
        Some((dx, dy, dz))
    }

    fn solve3_once(
        &self,
        sf: &Standard,
        w: &Scaling,
        bx: &DVector<f64>,
        by: &DVector<f64>,
        bz: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let n = self.n;
        let p = by.len();
        let dbz = w.apply_wtw_inv(&sf.cone, bz);
        let top = bx - sf.g.transpose() * &dbz;
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&top);
        rhs.rows_mut(n, p).copy_from(&(-by));
        let u = self.solve(&rhs)?;
        let dx = u.rows(0, n).into_owned();
        let dy = u.rows(n, p).into_owned();
        let dz = w.apply_wtw_inv(&sf.cone, &(bz + &sf.g * &dx));
        Some((dx, dy, dz))
    }
}

const NEIGHBOURHOOD: f64 = 1e-3;

/// Projects an almost optimal iterate onto the primal and dual affine
/// constraints; cone membership is left for the caller to check.
fn polish(
    sf: &Standard,
    it: &Iterate,
    aat: Option<&nalgebra::Cholesky<f64, nalgebra::Dyn>>,
) -> Option<(Iterate, Metrics)> {
    let t = it.tau;
    let mut x = &it.x / t;
    if let Some(ch) = aat {
        let miss = &sf.b - &sf.a * &x;
        x += sf.a.transpose() * ch.solve(&miss);
    }
    let s = &sf.h - &sf.g * &x;
    let mut y = &it.y / t;
    let mut z = &it.z / t;
    // minimum-norm (y, z) correction with A^T y + G^T z = -c
    let rx = sf.a.transpose() * &y + sf.g.transpose() * &z + &sf.c;
    let mmt = sf.a.transpose() * &sf.a + sf.g.transpose() * &sf.g;
    let w = mmt.cholesky()?.solve(&rx);
    y -= &sf.a * &w;
    z -= &sf.g * &w;
    let out = Iterate {
        x,
        y,
        z,
        s,
        tau: 1.0,
        kappa: 0.0,
    };
    let m = metrics(sf, &out);
    Some((out, m))
}

/// `rx.x - ry.y - rz.z` at the normalised iterate, where the residuals are
/// those of `A^T y + G^T z + c = 0`, `Ax = b` and `Gx + s = h`.
fn residual_slack(sf: &Standard, it: &Iterate) -> f64 {
    let t = it.tau;
    let (x, y, z, s) = (&it.x / t, &it.y / t, &it.z / t, &it.s / t);
    let rx = sf.a.transpose() * &y + sf.g.transpose() * &z + &sf.c;
    let ry = &sf.a * &x - &sf.b;
    let rz = &sf.g * &x + &s - &sf.h;
    rx.dot(&x) - ry.dot(&y) - rz.dot(&z)
}

fn norm(v: &DVector<f64>) -> f64 {
    v.norm()
}

fn metrics(sf: &Standard, it: &Iterate) -> Metrics {
    let t = it.tau;
    let x = &it.x / t;
    let y = &it.y / t;
    let z = &it.z / t;
    let s = &it.s / t;
    let ry = &sf.a_full * &x - &sf.b_full;
    let rz = &sf.g * &x + &s - &sf.h;
    let rx = sf.a.transpose() * &y + sf.g.transpose() * &z + &sf.c;
    let pres = (norm(&ry) / norm(&sf.b_full).max(1.0)).max(norm(&rz) / norm(&sf.h).max(1.0));
    let dres = norm(&rx) / norm(&sf.c).max(1.0);
    let pcost = sf.c.dot(&x);
    let dcost = -sf.b.dot(&y) - sf.h.dot(&z);
    let gap = (pcost - dcost).abs() / pcost.abs().max(1.0);
    Metrics {
        pres,
        dres,
        pcost,
        dcost,
        gap,
    }
}

/// Solves the program with a homogeneous self-dual interior-point method
/// (Nesterov-Todd scaling, Mehrotra predictor-corrector).
pub fn solve(prog: &ConicProgram, opts: &SolverOptions) -> Result<SolverReport> {
    prog.validate()?;
    let sf = Standard::build(prog);
    Ok(attempt(prog, &sf, opts))
}

/// A run is abandoned when its best residual has not halved for this many
/// iterations.
const NO_PROGRESS: usize = 25;

fn attempt(prog: &ConicProgram, sf: &Standard, opts: &SolverOptions) -> SolverReport {
    let max_iter = opts.max_iter;
    let n = sf.c.len();
    let p = sf.b.len();
    let cone = sf.cone.clone();
    let e = cone.identity();
    let nu = cone.degree();

    let mut it = Iterate {
        x: DVector::zeros(n),
        y: DVector::zeros(p),
        z: e.clone(),
        s: e.clone(),
        tau: 1.0,
        kappa: 1.0,
    };
    let mut best = it.clone();
    let mut best_metrics = metrics(sf, &it);
    let mut log = Vec::new();
    let mut status = SolverStatus::MaxIter;
    let mut message = String::from("iteration limit reached");
    let mut iterations = 0;
    let mut stalls = 0;
    // projector onto the equality constraints, used to clean up step directions
    let aat = (sf.a.nrows() > 0).then(|| (&sf.a * sf.a.transpose()).cholesky()).flatten();
    let mut certificate: Option<Iterate> = None;

    let resx0 = norm(&sf.c).max(1.0);
    let resy0 = norm(&sf.b).max(1.0);
    let resz0 = norm(&sf.h).max(1.0);

    let mut progress_ref = best_metrics.score();
    let mut progress_k = 0;
    for k in 0..=max_iter {
        iterations = k;
        let m = metrics(sf, &it);
        let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (nu + 1.0);
        log.push(IterationRecord {
            iter: k,
            mu,
            primal_res: m.pres,
            dual_res: m.dres,
            gap: m.gap,
            primal_objective: sf.c_scale * m.pcost,
            dual_objective: sf.c_scale * m.dcost,
            complementarity: sf.c_scale * it.s.dot(&it.z) / (it.tau * it.tau),
            residual_slack: sf.c_scale * residual_slack(sf, &it),
        });
        if m.score() < best_metrics.score() {
            best = it.clone();
            best_metrics = m;
        }
        if m.score() < 0.5 * progress_ref {
            progress_ref = m.score();
            progress_k = k;
        } else if k - progress_k > NO_PROGRESS {
            message = "no progress".into();
            break;
        }
        if m.pres <= opts.feas_tol && m.dres <= opts.feas_tol && m.gap <= opts.gap_tol {
            status = SolverStatus::Optimal;
            message = "optimal".into();
            best = it.clone();
            best_metrics = m;
            break;
        }

        if m.pres <= 1e3 * opts.feas_tol && m.dres <= 1e3 * opts.feas_tol && m.gap <= opts.gap_tol {
            if let Some((p_it, p_m)) = polish(sf, &it, aat.as_ref()) {
                let cone_ok = cone.min_eig(&p_it.s) >= -opts.feas_tol && cone.min_eig(&p_it.z) >= -opts.feas_tol;
                if cone_ok && p_m.pres <= opts.feas_tol && p_m.dres <= opts.feas_tol && p_m.gap <= opts.gap_tol {
                    status = SolverStatus::Optimal;
                    message = "optimal (after final projection)".into();
                    best = p_it;
                    best_metrics = p_m;
                    break;
                }
            }
        }

        // infeasibility certificates
        let hz_by = sf.h.dot(&it.z) + sf.b.dot(&it.y);
        if hz_by < 0.0 {
            let r = sf.a.transpose() * &it.y + sf.g.transpose() * &it.z;
            let pinf = norm(&r) / resx0 / (-hz_by);
            if pinf <= opts.feas_tol {
                status = SolverStatus::Infeasible;
                message = "primal infeasible (dual ray found)".into();
                certificate = Some(it.clone());
                break;
            }
        }
        let cx = sf.c.dot(&it.x);
        if cx < 0.0 {
            let ax = norm(&(&sf.a * &it.x)) / resy0;
            let gxs = norm(&(&sf.g * &it.x + &it.s)) / resz0;
            let dinf = ax.max(gxs) / (-cx);
            if dinf <= opts.feas_tol {
                status = SolverStatus::Unbounded;
                message = "dual infeasible (primal ray found)".into();
                certificate = Some(it.clone());
                break;
            }
        }
        if k == max_iter {
            break;
        }

        let Some(w) = Scaling::new(&cone, &it.s, &it.z) else {
            message = "scaling breakdown".into();
            break;
        };
        let Some(kkt) = Kkt::new(sf, &w) else {
            message = "singular KKT system".into();
            break;
        };
        let lambda = w.lambda(&cone);
        let lam_sq = cone.jordan(&lambda, &lambda);

        let rx = sf.a.transpose() * &it.y + sf.g.transpose() * &it.z + &sf.c * it.tau;
        let ry = &sf.b * it.tau - &sf.a * &it.x;
        let rz = &sf.h * it.tau - &sf.g * &it.x - &it.s;
        let rt = it.kappa + sf.c.dot(&it.x) + sf.b.dot(&it.y) + sf.h.dot(&it.z);

        let Some((x2, y2, z2)) = kkt.solve3(sf, &w, &(-&sf.c), &(-&sf.b), &(-&sf.h)) else {
            message = "KKT solve failed".into();
            break;
        };
        let denom = sf.c.dot(&x2) + sf.b.dot(&y2) + sf.h.dot(&z2) - it.kappa / it.tau;

        let direction = |eta: f64, ds_rhs: &DVector<f64>, dk_rhs: f64| -> Option<Direction> {
            let scaled = w.lambda_div(&cone, ds_rhs);
            let bz = -(&rz * eta) + w.apply_t(&cone, &scaled);
            let (x1, y1, z1) = kkt.solve3(sf, &w, &(-(&rx * eta)), &(-(&ry * eta)), &bz)?;
            let num = -eta * rt - dk_rhs / it.tau - (sf.c.dot(&x1) + sf.b.dot(&y1) + sf.h.dot(&z1));
            let dtau = num / denom;
            let mut dx = x1 + &x2 * dtau;
            if let Some(ch) = &aat {
                let miss = &sf.b * dtau + &ry * eta - &sf.a * &dx;
                dx += sf.a.transpose() * ch.solve(&miss);
            }
            let dy = y1 + &y2 * dtau;
            let dz = z1 + &z2 * dtau;
            let dkappa = (dk_rhs - it.kappa * dtau) / it.tau;
            // from G dx + ds - h dtau = eta rz; avoids the scaling round trip
            let ds = &rz * eta + &sf.h * dtau - &sf.g * &dx;
            Some(Direction {
                x: dx,
                y: dy,
                z: dz,
                s: ds,
                tau: dtau,
                kappa: dkappa,
            })
        };

        let step_to_boundary = |d: &Direction, cap: f64| -> Option<f64> {
            let mut a = cone.max_step(&it.s, &d.s, cap)?;
            a = cone.max_step(&it.z, &d.z, a)?;
            if d.tau < 0.0 {
                a = a.min(-it.tau / d.tau);
            }
            if d.kappa < 0.0 {
                a = a.min(-it.kappa / d.kappa);
            }
            Some(a)
        };

        // predictor
        let Some(aff) = direction(1.0, &(-&lam_sq), -it.tau * it.kappa) else {
            message = "KKT solve failed".into();
            break;
        };
        let Some(alpha_aff) = step_to_boundary(&aff, 1.0) else {
            message = "step computation failed".into();
            break;
        };
        let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);

        // corrector
        let ds_a = w.apply_inv_t(&cone, &aff.s);
        let dz_a = w.apply(&cone, &aff.z);
        let corr = cone.jordan(&ds_a, &dz_a);
        let ds_rhs = -&lam_sq - corr + &e * (sigma * mu);
        let dk_rhs = -it.tau * it.kappa - aff.tau * aff.kappa + sigma * mu;
        let Some(dir) = direction(1.0 - sigma, &ds_rhs, dk_rhs) else {
            message = "KKT solve failed".into();
            break;
        };
        let Some(amax) = step_to_boundary(&dir, f64::INFINITY) else {
            message = "step computation failed".into();
            break;
        };
        let mut alpha = (0.99 * amax).min(1.0);
        let mut dir = dir;
        if alpha < 1e-10 {
            // fall back to a pure centring step
            let centre_rhs = -&lam_sq + &e * mu;
            if let Some(c) = direction(0.0, &centre_rhs, -it.tau * it.kappa + mu) {
                if let Some(a) = step_to_boundary(&c, f64::INFINITY) {
                    if 0.99 * a > alpha {
                        alpha = (0.99 * a).min(1.0);
                        dir = c;
                    }
                }
            }
        }
        sf.project_structured(&mut dir.x, &mut dir.s, &mut dir.z);
        // keep the next iterate inside a wide neighbourhood of the central path
        for _ in 0..40 {
            if alpha < 1e-10 {
                break;
            }
            let s1 = &it.s + &dir.s * alpha;
            let z1 = &it.z + &dir.z * alpha;
            let t1 = it.tau + dir.tau * alpha;
            let k1 = it.kappa + dir.kappa * alpha;
            let mu1 = (s1.dot(&z1) + t1 * k1) / (nu + 1.0);
            let comp = cone.min_complementarity(&s1, &z1).unwrap_or(f64::NEG_INFINITY);
            if comp >= NEIGHBOURHOOD * mu1 && t1 * k1 >= NEIGHBOURHOOD * mu1 {
                break;
            }
            alpha *= 0.8;
        }
        if alpha < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                message = "stalled (step length below 1e-10)".into();
                break;
            }
        } else {
            stalls = 0;
        }

        it.x += &dir.x * alpha;
        it.y += &dir.y * alpha;
        it.z += &dir.z * alpha;
        it.s += &dir.s * alpha;
        it.tau += dir.tau * alpha;
        it.kappa += dir.kappa * alpha;
        if !(it.tau > 0.0 && it.kappa > 0.0) || it.x.iter().any(|v| !v.is_finite()) {
            message = "numerical breakdown".into();
            break;
        }
    }

    let final_it = match (&certificate, status) {
        (Some(c), _) => c.clone(),
        (None, _) => best.clone(),
    };
    assemble(prog, sf, &final_it, best_metrics, status, message, iterations, log)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    prog: &ConicProgram,
    sf: &Standard,
    it: &Iterate,
    m: Metrics,
    status: SolverStatus,
    message: String,
    iterations: usize,
    log: Vec<IterationRecord>,
) -> SolverReport {
    let certificate = matches!(status, SolverStatus::Infeasible | SolverStatus::Unbounded);
    // certificates are rays: report them unnormalised
    let t = if certificate { 1.0 } else { it.tau };
    let x = &it.x / t;
    let y = &it.y / t * sf.c_scale;
    let z = &it.z / t * sf.c_scale;
    let dims = prog.block_dims();
    let block_values = dims
        .iter()
        .enumerate()
        .map(|(b, &d)| {
            let off = sf.block_offsets[b];
            let len = svec_len(2 * d);
            unrealify(&smat(&x.as_slice()[off..off + len], 2 * d))
        })
        .collect();
    let block_duals = dims
        .iter()
        .enumerate()
        .map(|(b, &d)| {
            let r = sf.cone.block_range(b);
            unrealify(&smat(&z.as_slice()[r], 2 * d)).scale(2.0)
        })
        .collect();
    let scalar_values = x.as_slice()[sf.scalar_offset..].to_vec();
    let ineq_duals = z.as_slice()[..sf.cone.lin].to_vec();
    let mut eq_duals = vec![0.0; sf.b_full.len()];
    for (r, &i) in sf.kept.iter().enumerate() {
        eq_duals[i] = -y[r];
    }

    let sign = match prog.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let (objective, dual_objective) = if certificate {
        let inf = match (status, prog.sense) {
            (SolverStatus::Infeasible, Sense::Minimize) | (SolverStatus::Unbounded, Sense::Maximize) => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        (inf, inf)
    } else {
        (
            sign * sf.c_scale * m.pcost + prog.objective_constant,
            sign * sf.c_scale * m.dcost + prog.objective_constant,
        )
    };
    SolverReport {
        status,
        objective,
        dual_objective,
        duality_gap: m.gap,
        primal_residual: m.pres,
        dual_residual: m.dres,
        iterations,
        block_values,
        scalar_values,
        eq_duals,
        ineq_duals,
        block_duals,
        message,
        log,
    }
}
