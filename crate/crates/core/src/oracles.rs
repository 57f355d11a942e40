//! Brute-force reference values for small instances.
//!
//! Everything here works from entries and closed-form eigenvalues or
//! principal minors; nothing calls the conic solver or the free-set
//! machinery.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameKind;
use crate::linalg::{DensityMatrix, HermitianOperator, Povm, Subchannel};

/// Largest number of grid points an oracle will visit.
pub const MAX_GRID_POINTS: f64 = 1e8;
/// Largest number of deterministic maps enumerated.
pub const MAX_MAPS: f64 = 1e6;
const BISECTION_TOL: f64 = 1e-6;
const BISECTION_ITERS: usize = 60;
const PSD_SLACK: f64 = 1e-12;

/// Uniform grid over each parameter simplex with the given step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub resolution: f64,
}

impl GridSpec {
    pub fn new(resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution <= 1.0) {
            return Err(Error::invalid(format!("grid resolution must be in (0, 1], got {resolution}")));
        }
        Ok(Self { resolution })
    }

    fn steps(&self) -> usize {
        (1.0 / self.resolution).round().max(1.0) as usize
    }

    /// Number of points of the simplex grid with `parts` coordinates.
    fn simplex_points(&self, parts: usize) -> f64 {
        let m = self.steps() as f64;
        // C(m + parts - 1, parts - 1)
        (1..parts).fold(1.0, |acc, i| acc * (m + i as f64) / i as f64)
    }

    fn guard(&self, points: f64) -> Result<()> {
        if points > MAX_GRID_POINTS {
            return Err(Error::GuardExceeded(format!(
                "grid needs {points:.3e} points (limit {MAX_GRID_POINTS:.0e})"
            )));
        }
        Ok(())
    }
}

/// Calls `f` on every point of `{q >= 0, sum q = 1}` with coordinates in
/// multiples of `1/m`. Stops early when `f` returns `true`.
fn for_each_simplex_point(parts: usize, m: usize, f: &mut impl FnMut(&[f64]) -> bool) -> bool {
    fn rec(q: &mut Vec<f64>, left: usize, parts: usize, m: usize, f: &mut impl FnMut(&[f64]) -> bool) -> bool {
        if q.len() + 1 == parts {
            q.push(left as f64 / m as f64);
            let stop = f(q);
            q.pop();
            return stop;
        }
        for i in 0..=left {
            q.push(i as f64 / m as f64);
            let stop = rec(q, left - i, parts, m, f);
            q.pop();
            if stop {
                return true;
            }
        }
        false
    }
    rec(&mut Vec::with_capacity(parts), m, parts, m, f)
}

fn entries(op: &HermitianOperator) -> Vec<Vec<Complex64>> {
    let d = op.dim();
    (0..d).map(|i| (0..d).map(|j| op.get(i, j)).collect()).collect()
}

/// PSD test for `d <= 3` through all principal minors.
fn psd_by_minors(a: &[Vec<Complex64>]) -> bool {
    let d = a.len();
    let scale = a.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = PSD_SLACK * scale;
    if (0..d).any(|i| a[i][i].re < -tol) {
        return false;
    }
    for i in 0..d {
        for j in i + 1..d {
            if a[i][i].re * a[j][j].re - a[i][j].norm_sqr() < -tol * scale {
                return false;
            }
        }
    }
    if d == 3 {
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        if det.re < -tol * scale * scale {
            return false;
        }
    }
    true
}

/// Eigenvalues `(min, max)` of a 2x2 Hermitian matrix.
fn eig2(op: &HermitianOperator) -> (f64, f64) {
    let (a, c, b) = (op.get(0, 0).re, op.get(1, 1).re, op.get(0, 1));
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b.norm_sqr()).sqrt();
    (mean - rad, mean + rad)
}

fn require_dim(got: usize, allowed: &[usize], what: &'static str) -> Result<()> {
    if allowed.contains(&got) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: what,
            expected: allowed[0],
            got,
        })
    }
}

/// Smallest `t` in `[lo, hi]` with `feasible(t)`, assuming monotonicity.
fn bisect(mut lo: f64, mut hi: f64, feasible: &mut impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Whether `c * diag(sigma) - rho` (robustness) or `rho - c * diag(sigma)`
/// (weight) is PSD for some grid point `sigma`.
fn diagonal_feasible(rho: &[Vec<Complex64>], c: f64, m: usize, robustness: bool) -> bool {
    let d = rho.len();
    let mut a = rho.to_vec();
    for_each_simplex_point(d, m, &mut |s| {
        for i in 0..d {
            for j in 0..d {
                let base = if robustness { -rho[i][j] } else { rho[i][j] };
                a[i][j] = base;
            }
            let shift = c * s[i];
            a[i][i] += Complex64::new(if robustness { shift } else { -shift }, 0.0);
        }
        psd_by_minors(&a)
    })
}

/// Generalised robustness against diagonal states for `d <= 3`, by
/// bisection on `r` with a grid search over `sigma`.
pub fn grid_robustness_state_incoherent(rho: &DensityMatrix, grid: &GridSpec) -> Result<f64> {
    let d = rho.dim();
    require_dim(d, &[2, 3], "oracle state dimension")?;
    grid.guard(grid.simplex_points(d) * BISECTION_ITERS as f64)?;
    let a = entries(rho.op());
    let m = grid.steps();
    let mut feasible = |r: f64| diagonal_feasible(&a, 1.0 + r, m, true);
    if feasible(0.0) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !feasible(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::GuardExceeded("robustness bracket exceeded 1e6".into()));
        }
    }
    Ok(bisect(0.0, hi, &mut feasible))
}

/// Qubit case of [`grid_robustness_state_incoherent`].
pub fn grid_robustness_state_qubit_incoherent(rho: &DensityMatrix, grid: &GridSpec) -> Result<f64> {
    require_dim(rho.dim(), &[2], "oracle state dimension")?;
    grid_robustness_state_incoherent(rho, grid)
}

/// Weight of resource against diagonal states for `d <= 3`: smallest `w`
/// with `rho - (1 - w) sigma >= 0` for a grid point `sigma`.
pub fn grid_weight_state_incoherent(rho: &DensityMatrix, grid: &GridSpec) -> Result<f64> {
    let d = rho.dim();
    require_dim(d, &[2, 3], "oracle state dimension")?;
    grid.guard(grid.simplex_points(d) * BISECTION_ITERS as f64)?;
    let a = entries(rho.op());
    let m = grid.steps();
    let mut feasible = |w: f64| diagonal_feasible(&a, 1.0 - w, m, false);
    if feasible(0.0) {
        return Ok(0.0);
    }
    Ok(bisect(0.0, 1.0, &mut feasible))
}

/// Robustness of a qubit POVM against trivial measurements
/// `{q_a I}`: `min_q max_a lambda_max(M_a) / q_a - 1` over the grid.
pub fn grid_robustness_povm_qubit_trivial(m: &Povm, grid: &GridSpec) -> Result<f64> {
    require_dim(m.dim(), &[2], "oracle POVM dimension")?;
    let k = m.outcomes();
    grid.guard(grid.simplex_points(k))?;
    let top: Vec<f64> = m.elements().iter().map(|e| eig2(e).1.max(0.0)).collect();
    let mut best = f64::INFINITY;
    for_each_simplex_point(k, grid.steps(), &mut |q| {
        let r = top
            .iter()
            .zip(q)
            .map(|(&l, &qa)| if l <= 0.0 { 0.0 } else if qa <= 0.0 { f64::INFINITY } else { l / qa })
            .fold(0.0, f64::max);
        best = best.min(r);
        false
    });
    Ok((best - 1.0).max(0.0))
}

/// Weight of a qubit POVM against trivial measurements:
/// `1 - max_q min(1, min_a lambda_min(M_a) / q_a)` over the grid.
pub fn grid_weight_povm_qubit_trivial(m: &Povm, grid: &GridSpec) -> Result<f64> {
    require_dim(m.dim(), &[2], "oracle POVM dimension")?;
    let k = m.outcomes();
    grid.guard(grid.simplex_points(k))?;
    let bottom: Vec<f64> = m.elements().iter().map(|e| eig2(e).0.max(0.0)).collect();
    let mut best: f64 = 0.0;
    for_each_simplex_point(k, grid.steps(), &mut |q| {
        let c = bottom
            .iter()
            .zip(q)
            .map(|(&l, &qa)| if qa <= 0.0 { f64::INFINITY } else { l / qa })
            .fold(1.0, f64::min);
        best = best.max(c);
        false
    });
    Ok(1.0 - best)
}

/// `Tr[(rho^T (x) E) J]` straight from the Choi entries.
fn choi_pairing(j: &HermitianOperator, rho: &[Vec<Complex64>], effect: &[Vec<Complex64>]) -> f64 {
    let (di, dout) = (rho.len(), effect.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..di {
        for k in 0..di {
            for b in 0..dout {
                for c in 0..dout {
                    acc += rho[k][i] * effect[b][c] * j.get(k * dout + c, i * dout + b);
                }
            }
        }
    }
    acc.re
}

/// `p[a][x] = Tr[(rho^T (x) M_a) J_x]`.
fn choi_table(subs: &[Subchannel], rho: &DensityMatrix, m: &Povm) -> Result<Vec<Vec<f64>>> {
    let first = subs.first().ok_or_else(|| Error::invalid("no subchannels"))?;
    if rho.dim() != first.d_in() || m.dim() != first.d_out() {
        return Err(Error::DimensionMismatch {
            context: "oracle game dimensions",
            expected: first.d_in() * first.d_out(),
            got: rho.dim() * m.dim(),
        });
    }
    let r = entries(rho.op());
    Ok(m.elements()
        .iter()
        .map(|ma| {
            let me = entries(ma);
            subs.iter().map(|s| choi_pairing(s.choi(), &r, &me)).collect()
        })
        .collect())
}

/// Exhaustive search over deterministic maps `a -> g`; returns the best
/// value and the first map (in lexicographic order) attaining it.
pub fn enumerate_post_processings(
    subs: &[Subchannel],
    rho: &DensityMatrix,
    m: &Povm,
    kind: GameKind,
) -> Result<(f64, Vec<usize>)> {
    let table = choi_table(subs, rho, m)?;
    enumerate_table(&table, subs.len(), kind)
}

fn enumerate_table(table: &[Vec<f64>], k: usize, kind: GameKind) -> Result<(f64, Vec<usize>)> {
    let o = table.len();
    let count = (k as f64).powi(o as i32);
    if count > MAX_MAPS {
        return Err(Error::GuardExceeded(format!("{count:.3e} post-processings (limit {MAX_MAPS:.0e})")));
    }
    let mut map = vec![0usize; o];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let v: f64 = map.iter().enumerate().map(|(a, &g)| table[a][g]).sum();
        let better = match (&best, kind) {
            (None, _) => true,
            (Some((b, _)), GameKind::Discrimination) => v > *b,
            (Some((b, _)), GameKind::Exclusion) => v < *b,
        };
        if better {
            best = Some((v, map.clone()));
        }
        // odometer increment, last digit fastest
        let mut pos = o;
        loop {
            if pos == 0 {
                return Ok(best.expect("at least one map"));
            }
            pos -= 1;
            map[pos] += 1;
            if map[pos] < k {
                break;
            }
            map[pos] = 0;
        }
    }
}

/// Best free-pair value of a qubit game over diagonal states
/// `diag(s, 1 - s)` and trivial measurements `{q_x I}` with one outcome per
/// subchannel (`k <= 4`), each grid point evaluated by enumeration.
pub fn grid_free_pair_value(subs: &[Subchannel], kind: GameKind, grid: &GridSpec) -> Result<f64> {
    let first = subs.first().ok_or_else(|| Error::invalid("no subchannels"))?;
    require_dim(first.d_in(), &[2], "oracle game input dimension")?;
    require_dim(first.d_out(), &[2], "oracle game output dimension")?;
    let k = subs.len();
    if k > 4 {
        return Err(Error::GuardExceeded(format!("{k} subchannels (oracle limit 4)")));
    }
    grid.guard(grid.simplex_points(2) * grid.simplex_points(k))?;
    let m = grid.steps();
    let mut best = match kind {
        GameKind::Discrimination => f64::NEG_INFINITY,
        GameKind::Exclusion => f64::INFINITY,
    };
    let identity = entries(&HermitianOperator::identity(2));
    for_each_simplex_point(2, m, &mut |s| {
        let sigma = [
            vec![Complex64::new(s[0], 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(s[1], 0.0)],
        ];
        // Tr Psi_x(sigma)
        let unit: Vec<f64> = subs.iter().map(|x| choi_pairing(x.choi(), &sigma, &identity)).collect();
        for_each_simplex_point(k, m, &mut |q| {
            // the trivial effect q_a I pays q_a Tr Psi_x(sigma)
            let table: Vec<Vec<f64>> = q.iter().map(|&qa| unit.iter().map(|&t| qa * t).collect()).collect();
            let (v, _) = enumerate_table(&table, k, kind).expect("k <= 4 outcomes");
            best = match kind {
                GameKind::Discrimination => best.max(v),
                GameKind::Exclusion => best.min(v),
            };
            false
        });
        false
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SubchannelSet;

    fn grid(r: f64) -> GridSpec {
        GridSpec::new(r).unwrap()
    }

    #[test]
    fn simplex_grid_counts() {
        let mut n = 0;
        for_each_simplex_point(3, 4, &mut |q| {
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            n += 1;
            false
        });
        assert_eq!(n, 15);
        assert_eq!(grid(0.25).simplex_points(3), 15.0);
    }

    #[test]
    fn state_oracles_on_known_states() {
        let g = grid(1e-4);
        assert!((grid_robustness_state_qubit_incoherent(&DensityMatrix::plus(), &g).unwrap() - 1.0).abs() < 2e-4);
        let diag = DensityMatrix::new(HermitianOperator::diag(&[0.3, 0.7])).unwrap();
        assert_eq!(grid_robustness_state_qubit_incoherent(&diag, &g).unwrap(), 0.0);
        assert_eq!(grid_weight_state_incoherent(&diag, &g).unwrap(), 0.0);
        let half = DensityMatrix::new(HermitianOperator::from_real_rows(&[&[0.5, 0.25], &[0.25, 0.5]]).unwrap()).unwrap();
        assert!((grid_weight_state_incoherent(&half, &g).unwrap() - 0.5).abs() < 2e-4);
        assert!((grid_robustness_state_qubit_incoherent(&half, &g).unwrap() - 0.5).abs() < 2e-4);
        let coherent = DensityMatrix::maximally_coherent(3);
        assert!((grid_robustness_state_incoherent(&coherent, &grid(1e-3)).unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn povm_oracles_on_known_povms() {
        let g = grid(1e-4);
        let proj = Povm::computational(2);
        assert!((grid_robustness_povm_qubit_trivial(&proj, &g).unwrap() - 1.0).abs() < 2e-4);
        assert!((grid_weight_povm_qubit_trivial(&proj, &g).unwrap() - 1.0).abs() < 2e-4);
        let noisy = Povm::new(vec![HermitianOperator::diag(&[0.75, 0.25]), HermitianOperator::diag(&[0.25, 0.75])]).unwrap();
        assert!((grid_weight_povm_qubit_trivial(&noisy, &g).unwrap() - 0.5).abs() < 2e-4);
        let trivial = Povm::trivial(2, &[0.4, 0.6]).unwrap();
        assert!(grid_robustness_povm_qubit_trivial(&trivial, &g).unwrap() < 2e-4);
    }

    #[test]
    fn enumeration_counts_and_values() {
        let g = SubchannelSet::relabelling(2, &[0.7, 0.3]).unwrap();
        let (v, map) =
            enumerate_post_processings(g.subchannels(), &DensityMatrix::plus(), &Povm::computational(2), GameKind::Discrimination)
                .unwrap();
        assert!((v - 0.7).abs() < 1e-12);
        assert_eq!(map, vec![0, 0]);
        let (v, _) =
            enumerate_post_processings(g.subchannels(), &DensityMatrix::plus(), &Povm::computational(2), GameKind::Exclusion)
                .unwrap();
        assert!((v - 0.3).abs() < 1e-12);
    }

    #[test]
    fn enumeration_guard() {
        let table = vec![vec![0.0; 10]; 7];
        assert!(matches!(enumerate_table(&table, 10, GameKind::Discrimination), Err(Error::GuardExceeded(_))));
    }

    #[test]
    fn free_pair_value_of_relabelling_game() {
        let g = SubchannelSet::relabelling(2, &[0.6, 0.4]).unwrap();
        let d = grid_free_pair_value(g.subchannels(), GameKind::Discrimination, &grid(0.05)).unwrap();
        assert!((d - 0.6).abs() < 1e-12);
        let e = grid_free_pair_value(g.subchannels(), GameKind::Exclusion, &grid(0.05)).unwrap();
        assert!((e - 0.4).abs() < 1e-12);
    }

    #[test]
    fn grid_guard() {
        assert!(GridSpec::new(0.0).is_err());
        let g = SubchannelSet::relabelling(2, &[0.25; 4]).unwrap();
        assert!(matches!(
            grid_free_pair_value(g.subchannels(), GameKind::Discrimination, &grid(1e-4)),
            Err(Error::GuardExceeded(_))
        ));
    }
}
