//! Subchannels in Choi form.
//!
//! Convention: `J(Phi) = sum_{ij} |i><j| (x) Phi(|i><j|)`, input factor first,
//! so the Choi index of `(input i, output a)` is `i * d_out + a`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::json::{expect_kind, EnsembleJson, InstrumentJson, MatrixJson};
use super::operator::HermitianOperator;
use super::states::DensityMatrix;
use super::{CPTP_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// Completely positive, trace-nonincreasing map.
#[derive(Debug, Clone, PartialEq)]
pub struct Subchannel {
    choi: HermitianOperator,
    d_in: usize,
    d_out: usize,
}

impl Subchannel {
    pub fn from_choi(choi: HermitianOperator, d_in: usize, d_out: usize) -> Result<Self> {
        if d_in == 0 || d_out == 0 || choi.dim() != d_in * d_out {
            return Err(Error::DimensionMismatch {
                context: "Choi matrix dimension",
                expected: d_in * d_out,
                got: choi.dim(),
            });
        }
        let min = choi.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::invalid(format!(
                "Choi matrix is not PSD (min eigenvalue {min:.3e}); map is not CP"
            )));
        }
        let sub = Self { choi, d_in, d_out };
        let defect = (&HermitianOperator::identity(d_in) - &sub.input_marginal()).min_eigenvalue();
        if defect < -PSD_TOL {
            return Err(Error::NotTraceNonincreasing(format!(
                "Tr_out J exceeds identity by {:.3e}",
                -defect
            )));
        }
        Ok(sub)
    }

    pub fn identity(d: usize) -> Self {
        let mut m = DMatrix::<Complex64>::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + i, j * d + j)] = Complex64::new(1.0, 0.0);
            }
        }
        Self {
            choi: HermitianOperator::symmetrised(m),
            d_in: d,
            d_out: d,
        }
    }

    pub fn zero(d_in: usize, d_out: usize) -> Self {
        Self {
            choi: HermitianOperator::zeros(d_in * d_out),
            d_in,
            d_out,
        }
    }

    /// `eta -> Tr(eta) I / d_out`.
    pub fn depolarising(d_in: usize, d_out: usize) -> Self {
        Self {
            choi: HermitianOperator::identity(d_in * d_out).scale(1.0 / d_out as f64),
            d_in,
            d_out,
        }
    }

    /// Choi matrix of `eta -> Tr(weight eta) prepared` without validation; the
    /// caller guarantees CP (both PSD) and trace-nonincrease.
    pub(crate) fn trace_and_prepare_unchecked(weight: &HermitianOperator, prepared: &HermitianOperator) -> Self {
        Self {
            choi: weight.transpose().kron(prepared),
            d_in: weight.dim(),
            d_out: prepared.dim(),
        }
    }

    /// Wraps a Choi matrix the caller knows to be PSD and trace-nonincreasing.
    pub(crate) fn from_choi_unchecked(choi: HermitianOperator, d_in: usize, d_out: usize) -> Self {
        debug_assert_eq!(choi.dim(), d_in * d_out);
        Self { choi, d_in, d_out }
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// `Tr_out J`; equals the identity iff the map is trace preserving.
    pub fn input_marginal(&self) -> HermitianOperator {
        let (di, dout) = (self.d_in, self.d_out);
        let j = self.choi.matrix();
        let m = DMatrix::from_fn(di, di, |i, k| (0..dout).map(|a| j[(i * dout + a, k * dout + a)]).sum());
        HermitianOperator::symmetrised(m)
    }

    /// Output `Phi(X)` for an arbitrary Hermitian input.
    pub fn apply_op(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        if x.dim() != self.d_in {
            return Err(Error::DimensionMismatch {
                context: "subchannel input",
                expected: self.d_in,
                got: x.dim(),
            });
        }
        let (di, dout) = (self.d_in, self.d_out);
        let j = self.choi.matrix();
        let xm = x.matrix();
        let mut out = DMatrix::<Complex64>::zeros(dout, dout);
        for i in 0..di {
            for k in 0..di {
                let c = xm[(i, k)];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..dout {
                    for b in 0..dout {
                        out[(a, b)] += c * j[(i * dout + a, k * dout + b)];
                    }
                }
            }
        }
        Ok(HermitianOperator::symmetrised(out))
    }

    /// Heisenberg-picture adjoint `Phi^dag(N)`, so that
    /// `Tr[N Phi(rho)] = Tr[Phi^dag(N) rho]`.
    pub fn adjoint_op(&self, n: &HermitianOperator) -> Result<HermitianOperator> {
        if n.dim() != self.d_out {
            return Err(Error::DimensionMismatch {
                context: "subchannel adjoint input",
                expected: self.d_out,
                got: n.dim(),
            });
        }
        let (di, dout) = (self.d_in, self.d_out);
        let j = self.choi.matrix();
        let nm = n.matrix();
        let m = DMatrix::from_fn(di, di, |jj, ii| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..dout {
                for b in 0..dout {
                    acc += nm[(b, a)] * j[(ii * dout + a, jj * dout + b)];
                }
            }
            acc
        });
        Ok(HermitianOperator::symmetrised(m))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            choi: self.choi.scale(c),
            d_in: self.d_in,
            d_out: self.d_out,
        }
    }

    fn matches(&self, other: &Subchannel) -> bool {
        self.d_in == other.d_in && self.d_out == other.d_out
    }
}

/// `Psi(rho)` for a subchannel, via the Choi pairing. The result is PSD and
/// has trace in `[0, 1]` up to rounding.
pub fn apply_subchannel(sub: &Subchannel, state: &DensityMatrix) -> Result<HermitianOperator> {
    sub.apply_op(state.op())
}

/// Builds `eta -> Tr(weight_op eta) prepared`, whose Choi matrix is
/// `weight_op^T (x) prepared`.
pub fn make_trace_and_prepare(weight_op: &HermitianOperator, prepared: &HermitianOperator) -> Result<Subchannel> {
    if !weight_op.is_psd(PSD_TOL) || !prepared.is_psd(PSD_TOL) {
        return Err(Error::invalid("trace-and-prepare operators must be PSD"));
    }
    let bound = weight_op.trace_norm() * prepared.trace();
    if bound > 1.0 + PSD_TOL {
        return Err(Error::NotTraceNonincreasing(format!(
            "||weight||_1 * Tr(prepared) = {bound} > 1"
        )));
    }
    Subchannel::from_choi(weight_op.transpose().kron(prepared), weight_op.dim(), prepared.dim())
}

/// Completes trace-nonincreasing `partial` maps into an instrument by
/// appending `reference - sum(partial)`; fails when that difference is not CP.
pub fn complete_to_instrument(partial: &[Subchannel], reference: &Subchannel) -> Result<SubchannelSet> {
    let mut choi = reference.choi().clone();
    for p in partial {
        if !p.matches(reference) {
            return Err(Error::DimensionMismatch {
                context: "completion partial map",
                expected: reference.d_in() * reference.d_out(),
                got: p.d_in() * p.d_out(),
            });
        }
        choi = &choi - p.choi();
    }
    let min = choi.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::CompletionInfeasible(format!(
            "reference minus partial sum is not CP (min Choi eigenvalue {min:.3e})"
        )));
    }
    let last = Subchannel::from_choi(choi, reference.d_in(), reference.d_out())
        .map_err(|e| Error::CompletionInfeasible(e.to_string()))?;
    let mut all = partial.to_vec();
    all.push(last);
    SubchannelSet::new(all)
}

/// A referee's game: `k >= 2` subchannels summing to a CPTP map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstrumentJson", into = "InstrumentJson")]
pub struct SubchannelSet {
    subchannels: Vec<Subchannel>,
}

impl SubchannelSet {
    pub fn new(subchannels: Vec<Subchannel>) -> Result<Self> {
        if subchannels.len() < 2 {
            return Err(Error::invalid(format!(
                "a subchannel set needs at least 2 subchannels, got {}",
                subchannels.len()
            )));
        }
        let first = &subchannels[0];
        for s in &subchannels[1..] {
            if !s.matches(first) {
                return Err(Error::DimensionMismatch {
                    context: "subchannel dimensions",
                    expected: first.d_in() * first.d_out(),
                    got: s.d_in() * s.d_out(),
                });
            }
        }
        let set = Self { subchannels };
        let dev = set.cptp_deviation();
        if dev > CPTP_TOL {
            return Err(Error::invalid(format!(
                "subchannels do not sum to a trace-preserving map (deviation {dev:.3e})"
            )));
        }
        Ok(set)
    }

    /// Relabelling game `Psi_x(eta) = p(x) eta`.
    pub fn relabelling(d: usize, prior: &[f64]) -> Result<Self> {
        Self::new(prior.iter().map(|&p| Subchannel::identity(d).scale(p)).collect())
    }

    /// Max-abs deviation of `sum_x Tr_out J_x` from the identity.
    pub fn cptp_deviation(&self) -> f64 {
        let d_in = self.d_in();
        let total = HermitianOperator::sum(d_in, &self.subchannels.iter().map(|s| s.input_marginal()).collect::<Vec<_>>());
        total.max_abs_diff(&HermitianOperator::identity(d_in))
    }

    pub fn len(&self) -> usize {
        self.subchannels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subchannels.is_empty()
    }

    pub fn subchannels(&self) -> &[Subchannel] {
        &self.subchannels
    }

    pub fn get(&self, x: usize) -> &Subchannel {
        &self.subchannels[x]
    }

    pub fn d_in(&self) -> usize {
        self.subchannels[0].d_in()
    }

    pub fn d_out(&self) -> usize {
        self.subchannels[0].d_out()
    }

    /// Outputs `Psi_x(rho)` for every `x`.
    pub fn outputs(&self, state: &DensityMatrix) -> Result<Vec<HermitianOperator>> {
        self.subchannels.iter().map(|s| apply_subchannel(s, state)).collect()
    }
}

impl TryFrom<InstrumentJson> for SubchannelSet {
    type Error = Error;
    fn try_from(j: InstrumentJson) -> Result<Self> {
        expect_kind(Some(&j.kind), &["instrument"], "instrument")?;
        let subs = j
            .subchannels
            .into_iter()
            .enumerate()
            .map(|(x, m)| {
                m.into_operator()
                    .and_then(|op| Subchannel::from_choi(op, j.d_in, j.d_out))
                    .map_err(|e| Error::invalid(format!("subchannels[{x}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SubchannelSet::new(subs)
    }
}

impl From<SubchannelSet> for InstrumentJson {
    fn from(s: SubchannelSet) -> Self {
        InstrumentJson {
            kind: "instrument".into(),
            d_in: s.d_in(),
            d_out: s.d_out(),
            subchannels: s
                .subchannels
                .iter()
                .map(|c| MatrixJson::from_operator(c.choi(), None))
                .collect(),
        }
    }
}

/// Channels `Lambda_x`, each CPTP, with a prior `p(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleJson", into = "EnsembleJson")]
pub struct ChannelEnsemble {
    channels: Vec<Subchannel>,
    prior: Vec<f64>,
}

impl ChannelEnsemble {
    pub fn new(channels: Vec<Subchannel>, prior: Vec<f64>) -> Result<Self> {
        if channels.is_empty() || channels.len() != prior.len() {
            return Err(Error::invalid(format!(
                "ensemble needs one prior entry per channel ({} channels, {} prior entries)",
                channels.len(),
                prior.len()
            )));
        }
        if prior.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("prior entries must be nonnegative"));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("prior sums to {total}, expected 1")));
        }
        for (x, c) in channels.iter().enumerate() {
            if !c.matches(&channels[0]) {
                return Err(Error::invalid(format!("channel {x} has mismatched dimensions")));
            }
            let dev = c.input_marginal().max_abs_diff(&HermitianOperator::identity(c.d_in()));
            if dev > CPTP_TOL {
                return Err(Error::invalid(format!(
                    "channel {x} is not trace preserving (deviation {dev:.3e})"
                )));
            }
        }
        Ok(Self { channels, prior })
    }

    pub fn channels(&self) -> &[Subchannel] {
        &self.channels
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.channels[0].d_in()
    }

    pub fn d_out(&self) -> usize {
        self.channels[0].d_out()
    }

    /// The prepared-state game `Psi_x = p(x) Lambda_x`. Needs at least two
    /// channels.
    pub fn as_game(&self) -> Result<SubchannelSet> {
        SubchannelSet::new(
            self.channels
                .iter()
                .zip(&self.prior)
                .map(|(c, &p)| c.scale(p))
                .collect(),
        )
    }
}

impl TryFrom<EnsembleJson> for ChannelEnsemble {
    type Error = Error;
    fn try_from(j: EnsembleJson) -> Result<Self> {
        expect_kind(Some(&j.kind), &["ensemble"], "ensemble")?;
        let channels = j
            .channels
            .into_iter()
            .enumerate()
            .map(|(x, m)| {
                m.into_operator()
                    .and_then(|op| Subchannel::from_choi(op, j.d_in, j.d_out))
                    .map_err(|e| Error::invalid(format!("channels[{x}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelEnsemble::new(channels, j.prior)
    }
}

impl From<ChannelEnsemble> for EnsembleJson {
    fn from(e: ChannelEnsemble) -> Self {
        EnsembleJson {
            kind: "ensemble".into(),
            d_in: e.d_in(),
            d_out: e.d_out(),
            channels: e
                .channels
                .iter()
                .map(|c| MatrixJson::from_operator(c.choi(), None))
                .collect(),
            prior: e.prior,
        }
    }
}
