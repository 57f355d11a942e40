//! Random instances: Ginibre states, POVMs, instruments, stochastic maps and
//! free-set members. Every sampler draws only from the supplied RNG.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::Result;
use crate::free_sets::{FreeMeasurementSet, FreeStateSet};
use crate::linalg::{ChannelEnsemble, DensityMatrix, HermitianOperator, Povm, Subchannel, SubchannelSet};

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

fn gram(g: &DMatrix<Complex64>) -> HermitianOperator {
    HermitianOperator::symmetrised(g * g.adjoint())
}

/// Uniform point on the probability simplex.
pub fn probability_vector<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Row-stochastic matrix `p[a][x]` with `rows` rows and `cols` columns.
pub fn stochastic_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..rows).map(|_| probability_vector(cols, rng)).collect()
}

/// Random Hermitian matrix with Gaussian entries.
pub fn hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianOperator {
    let g = ginibre(d, d, rng);
    HermitianOperator::symmetrised((&g + g.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Full-rank Ginibre (Hilbert-Schmidt) random state.
pub fn state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::normalised(&gram(&ginibre(d, d, rng))).expect("Ginibre matrix is nonzero")
}

/// Haar-random pure state.
pub fn pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, 1, rng);
    let psi: Vec<Complex64> = g.iter().copied().collect();
    DensityMatrix::pure(&psi).expect("nonzero vector")
}

/// POVM `S^{-1/2} A_a S^{-1/2}` with Ginibre `A_a` and `S = sum_a A_a`.
pub fn povm<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Povm {
    let a: Vec<HermitianOperator> = (0..k).map(|_| gram(&ginibre(d, d, rng))).collect();
    Povm::renormalised(a).expect("Ginibre POVM is full rank")
}

/// Instrument of `k` subchannels `d_in -> d_out` with Ginibre Choi matrices,
/// normalised by `(B^{-1/2} (x) I) J_x (B^{-1/2} (x) I)`, `B = sum_x Tr_out J_x`.
pub fn instrument<R: Rng + ?Sized>(d_in: usize, d_out: usize, k: usize, rng: &mut R) -> SubchannelSet {
    let n = d_in * d_out;
    let raw: Vec<HermitianOperator> = (0..k).map(|_| gram(&ginibre(n, n, rng))).collect();
    let marginals: Vec<HermitianOperator> = raw
        .iter()
        .map(|j| Subchannel::from_choi_unchecked(j.clone(), d_in, d_out).input_marginal())
        .collect();
    let b = HermitianOperator::sum(d_in, &marginals);
    let l = b.inv_sqrt_psd(0.0).kron(&HermitianOperator::identity(d_out));
    let subs = raw
        .iter()
        .map(|j| Subchannel::from_choi_unchecked(j.sandwich(&l), d_in, d_out))
        .collect();
    SubchannelSet::new(subs).expect("normalised instrument is CPTP")
}

/// Random CPTP channel.
pub fn channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Subchannel {
    let n = d_in * d_out;
    let j = gram(&ginibre(n, n, rng));
    let b = Subchannel::from_choi_unchecked(j.clone(), d_in, d_out).input_marginal();
    let l = b.inv_sqrt_psd(0.0).kron(&HermitianOperator::identity(d_out));
    Subchannel::from_choi_unchecked(j.sandwich(&l), d_in, d_out)
}

/// Random channel ensemble with a uniform-simplex prior.
pub fn ensemble<R: Rng + ?Sized>(d_in: usize, d_out: usize, k: usize, rng: &mut R) -> ChannelEnsemble {
    let channels = (0..k).map(|_| channel(d_in, d_out, rng)).collect();
    let mut prior = probability_vector(k, rng);
    let s: f64 = prior.iter().sum();
    let last = prior.len() - 1;
    prior[last] += 1.0 - s;
    ChannelEnsemble::new(channels, prior).expect("valid ensemble")
}

/// Random member of a free state set.
pub fn free_state<R: Rng + ?Sized>(free: &FreeStateSet, rng: &mut R) -> Result<DensityMatrix> {
    let d = free.dim();
    if free.is_builtin() {
        return DensityMatrix::new(HermitianOperator::diag(&probability_vector(d, rng)));
    }
    // mixture of extreme points selected by random linear objectives
    let weights = probability_vector(3, rng);
    let mut acc = HermitianOperator::zeros(d);
    for w in weights {
        let (_, s) = free.maximise_linear(&hermitian(d, rng))?;
        acc = &acc + &s.op().scale(w);
    }
    DensityMatrix::normalised(&acc)
}

/// Random member of a free measurement set.
pub fn free_povm<R: Rng + ?Sized>(free: &FreeMeasurementSet, rng: &mut R) -> Result<Povm> {
    let (d, k) = (free.dim(), free.outcomes());
    let trivial = FreeMeasurementSet::trivial(d, k)?;
    let incoherent = FreeMeasurementSet::incoherent(d, k)?;
    if *free == trivial {
        return Povm::trivial(d, &probability_vector(k, rng));
    }
    if *free == incoherent {
        let rows = stochastic_matrix(d, k, rng);
        return Povm::new(
            (0..k)
                .map(|x| HermitianOperator::diag(&rows.iter().map(|r| r[x]).collect::<Vec<_>>()))
                .collect(),
        );
    }
    let weights = probability_vector(3, rng);
    let mut acc = vec![HermitianOperator::zeros(d); k];
    for w in weights {
        let ds: Vec<HermitianOperator> = (0..k).map(|_| hermitian(d, rng)).collect();
        let (_, n) = free.maximise_linear(&ds)?;
        for (a, e) in acc.iter_mut().zip(n.elements()) {
            *a = &*a + &e.scale(w);
        }
    }
    Povm::renormalised(acc)
}
