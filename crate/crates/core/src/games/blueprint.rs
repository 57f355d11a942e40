use serde::{Deserialize, Serialize};

use super::{evaluate_subchannels, Evaluation, GameKind};
use crate::error::{Error, Result};
use crate::linalg::json::MatrixJson;
use crate::linalg::{DensityMatrix, HermitianOperator, Povm, Subchannel, SubchannelSet, CPTP_TOL};

/// Witnesses may have eigenvalues down to this (relative) value; they are
/// clipped to PSD before use.
const WITNESS_PSD_TOL: f64 = 1e-8;
/// Trace norms below this make a witness unusable.
const DEGENERATE_TOL: f64 = 1e-12;
/// Cap on `#subchannels * (d_in d_out)^2` when materialising an instrument.
const MAX_INSTRUMENT_ENTRIES: usize = 50_000_000;

/// `n = ceil(1000 / alpha)`, so the filler slack `1/n` is at most `alpha / 1000`.
pub fn default_n(alpha: f64) -> usize {
    (1000.0 / alpha).ceil().max(1.0) as usize
}

/// A game built from witnesses. The `n` filler subchannels of a
/// discrimination game are identical, so they are stored once with a
/// multiplicity; [`GameBlueprint::instrument`] expands them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlueprintJson", into = "BlueprintJson")]
pub struct GameBlueprint {
    kind: GameKind,
    parameter: f64,
    n: Option<usize>,
    witness_state: HermitianOperator,
    witness_measurement: Vec<HermitianOperator>,
    completion_state: DensityMatrix,
    prior: Option<Vec<f64>>,
    distinct: Vec<Subchannel>,
    multiplicity: Vec<usize>,
}

fn psd_witness(op: &HermitianOperator, what: &str) -> Result<HermitianOperator> {
    let min = op.min_eigenvalue();
    if min < -WITNESS_PSD_TOL * op.max_abs_entry().max(1.0) {
        return Err(Error::invalid(format!("{what} is not PSD (min eigenvalue {min:.3e})")));
    }
    Ok(op.clip_negative())
}

fn prepare_witnesses(
    state_witness: &HermitianOperator,
    measurement_witness: &[HermitianOperator],
) -> Result<(HermitianOperator, Vec<HermitianOperator>, f64, f64)> {
    if measurement_witness.len() < 2 {
        return Err(Error::invalid("measurement witness needs at least 2 elements"));
    }
    let d_out = measurement_witness[0].dim();
    if let Some(w) = measurement_witness.iter().find(|w| w.dim() != d_out) {
        return Err(Error::DimensionMismatch {
            context: "measurement witness elements",
            expected: d_out,
            got: w.dim(),
        });
    }
    let zr = psd_witness(state_witness, "state witness")?;
    let zm = measurement_witness
        .iter()
        .enumerate()
        .map(|(y, w)| psd_witness(w, &format!("measurement witness element {y}")))
        .collect::<Result<Vec<_>>>()?;
    let norm = zr.trace_norm();
    let total: f64 = zm.iter().map(HermitianOperator::trace).sum();
    if norm < DEGENERATE_TOL {
        return Err(Error::DegenerateWitness(format!("state witness has trace norm {norm:.3e}")));
    }
    if total < DEGENERATE_TOL {
        return Err(Error::DegenerateWitness(format!(
            "measurement witness has total trace {total:.3e}"
        )));
    }
    Ok((zr, zm, norm, total))
}

/// Discrimination game: `Psi_y(eta) = alpha Tr(Z eta) Z_y` for each witness
/// element, plus `n` copies of
/// `eta -> Tr[(I - Z/||Z||_1) eta] xi / n`, with
/// `alpha = 1 / (||Z||_1 sum_y Tr Z_y)`. `xi` defaults to the maximally
/// mixed state.
pub fn build_discrimination_game(
    state_witness: &HermitianOperator,
    measurement_witness: &[HermitianOperator],
    n: usize,
    completion_state: Option<&DensityMatrix>,
) -> Result<GameBlueprint> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let (zr, zm, norm, total) = prepare_witnesses(state_witness, measurement_witness)?;
    let (d_in, d_out) = (zr.dim(), zm[0].dim());
    let xi = match completion_state {
        Some(x) if x.dim() != d_out => {
            return Err(Error::DimensionMismatch {
                context: "completion state",
                expected: d_out,
                got: x.dim(),
            })
        }
        Some(x) => x.clone(),
        None => DensityMatrix::maximally_mixed(d_out),
    };
    let alpha = 1.0 / (norm * total);
    let scaled = zr.scale(alpha);
    let mut distinct: Vec<Subchannel> = zm
        .iter()
        .map(|zy| Subchannel::trace_and_prepare_unchecked(&scaled, zy))
        .collect();
    let rest = (&HermitianOperator::identity(d_in) - &zr.scale(1.0 / norm)).scale(1.0 / n as f64);
    distinct.push(Subchannel::trace_and_prepare_unchecked(&rest, xi.op()));
    let mut multiplicity = vec![1; zm.len()];
    multiplicity.push(n);
    let bp = GameBlueprint {
        kind: GameKind::Discrimination,
        parameter: alpha,
        n: Some(n),
        witness_state: zr,
        witness_measurement: zm,
        completion_state: xi,
        prior: None,
        distinct,
        multiplicity,
    };
    bp.check_cptp()?;
    Ok(bp)
}

/// Exclusion game: `Psi_y(eta) = beta Tr(Y eta) Y_y` plus one filler
/// `eta -> Tr[(I - Y/(2||Y||_1)) eta] xi_M`, with
/// `beta = 1 / (2 ||Y||_1 sum_y Tr Y_y)` and
/// `xi_M = sum_x p(x) Y_x / sum_x p(x) Tr Y_x`. The prior `p` defaults to
/// uniform.
pub fn build_exclusion_game(
    state_witness: &HermitianOperator,
    measurement_witness: &[HermitianOperator],
    prior: Option<&[f64]>,
) -> Result<GameBlueprint> {
    let (yr, ym, norm, total) = prepare_witnesses(state_witness, measurement_witness)?;
    let k = ym.len();
    let (d_in, d_out) = (yr.dim(), ym[0].dim());
    let p: Vec<f64> = match prior {
        Some(p) => {
            if p.len() != k {
                return Err(Error::DimensionMismatch {
                    context: "exclusion prior length",
                    expected: k,
                    got: p.len(),
                });
            }
            if p.iter().any(|&v| !v.is_finite() || v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("prior must be a probability vector"));
            }
            p.to_vec()
        }
        None => vec![1.0 / k as f64; k],
    };
    let weighted: Vec<HermitianOperator> = ym.iter().zip(&p).map(|(y, &q)| y.scale(q)).collect();
    let mix = HermitianOperator::sum(d_out, &weighted);
    let mix_tr = mix.trace();
    if mix_tr < DEGENERATE_TOL {
        return Err(Error::DegenerateWitness(format!(
            "prior-weighted measurement witness has trace {mix_tr:.3e}"
        )));
    }
    let xi = DensityMatrix::normalised(&mix)?;
    let beta = 1.0 / (2.0 * norm * total);
    let scaled = yr.scale(beta);
    let mut distinct: Vec<Subchannel> = ym
        .iter()
        .map(|yy| Subchannel::trace_and_prepare_unchecked(&scaled, yy))
        .collect();
    let rest = &HermitianOperator::identity(d_in) - &yr.scale(0.5 / norm);
    distinct.push(Subchannel::trace_and_prepare_unchecked(&rest, xi.op()));
    let bp = GameBlueprint {
        kind: GameKind::Exclusion,
        parameter: beta,
        n: None,
        witness_state: yr,
        witness_measurement: ym,
        completion_state: xi,
        prior: Some(p),
        distinct,
        multiplicity: vec![1; k + 1],
    };
    bp.check_cptp()?;
    Ok(bp)
}

impl GameBlueprint {
    fn check_cptp(&self) -> Result<()> {
        let dev = self.cptp_deviation();
        if dev > CPTP_TOL {
            return Err(Error::invalid(format!(
                "constructed game is not trace preserving (deviation {dev:.3e})"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    /// `alpha` for discrimination, `beta` for exclusion.
    pub fn parameter(&self) -> f64 {
        self.parameter
    }

    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn d_in(&self) -> usize {
        self.witness_state.dim()
    }

    pub fn d_out(&self) -> usize {
        self.completion_state.dim()
    }

    pub fn witness_state(&self) -> &HermitianOperator {
        &self.witness_state
    }

    pub fn witness_measurement(&self) -> &[HermitianOperator] {
        &self.witness_measurement
    }

    pub fn completion_state(&self) -> &DensityMatrix {
        &self.completion_state
    }

    pub fn prior(&self) -> Option<&[f64]> {
        self.prior.as_deref()
    }

    /// Distinct subchannels; subchannel `i` occurs `multiplicity()[i]` times.
    pub fn distinct_subchannels(&self) -> &[Subchannel] {
        &self.distinct
    }

    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn num_subchannels(&self) -> usize {
        self.multiplicity.iter().sum()
    }

    /// Upper bound on the free-pair success probability (`alpha + 1/n`) or
    /// lower bound on the free-pair error probability (`beta`).
    pub fn free_bound(&self) -> f64 {
        match (self.kind, self.n) {
            (GameKind::Discrimination, Some(n)) => self.parameter + 1.0 / n as f64,
            _ => self.parameter,
        }
    }

    pub fn cptp_deviation(&self) -> f64 {
        let d = self.d_in();
        let mut total = HermitianOperator::zeros(d);
        for (s, &m) in self.distinct.iter().zip(&self.multiplicity) {
            total = &total + &s.input_marginal().scale(m as f64);
        }
        total.max_abs_diff(&HermitianOperator::identity(d))
    }

    /// Expands the stored subchannels into the full instrument.
    pub fn instrument(&self) -> Result<SubchannelSet> {
        let count = self.num_subchannels();
        let entries = count.saturating_mul((self.d_in() * self.d_out()).pow(2));
        if entries > MAX_INSTRUMENT_ENTRIES {
            return Err(Error::GuardExceeded(format!(
                "instrument with {count} subchannels needs {entries} matrix entries (limit {MAX_INSTRUMENT_ENTRIES})"
            )));
        }
        let subs = self
            .distinct
            .iter()
            .zip(&self.multiplicity)
            .flat_map(|(s, &m)| std::iter::repeat_n(s.clone(), m))
            .collect();
        SubchannelSet::new(subs)
    }

    /// Game value for `(rho, M)`. Identical copies give identical payoffs,
    /// so this equals the value on the expanded instrument, and the returned
    /// post-processing uses expanded indices.
    pub fn evaluate(&self, rho: &DensityMatrix, m: &Povm) -> Result<Evaluation> {
        let mut e = evaluate_subchannels(&self.distinct, rho, m, self.kind)?;
        let offsets: Vec<usize> = self
            .multiplicity
            .iter()
            .scan(0, |acc, &m| {
                let o = *acc;
                *acc += m;
                Some(o)
            })
            .collect();
        for g in &mut e.post_processing {
            *g = offsets[*g];
        }
        Ok(e)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlueprintJson {
    kind: String,
    game: GameKind,
    parameter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    d_in: usize,
    d_out: usize,
    witness_state: MatrixJson,
    witness_measurement: Vec<MatrixJson>,
    completion_state: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<Vec<f64>>,
    subchannels: Vec<MatrixJson>,
    multiplicity: Vec<usize>,
}

impl From<GameBlueprint> for BlueprintJson {
    fn from(b: GameBlueprint) -> Self {
        BlueprintJson {
            kind: "game-blueprint".into(),
            game: b.kind,
            parameter: b.parameter,
            n: b.n,
            d_in: b.d_in(),
            d_out: b.d_out(),
            witness_state: MatrixJson::from_operator(&b.witness_state, None),
            witness_measurement: b
                .witness_measurement
                .iter()
                .map(|w| MatrixJson::from_operator(w, None))
                .collect(),
            completion_state: MatrixJson::from_operator(b.completion_state.op(), Some("state")),
            prior: b.prior.clone(),
            subchannels: b.distinct.iter().map(|s| MatrixJson::from_operator(s.choi(), None)).collect(),
            multiplicity: b.multiplicity.clone(),
        }
    }
}

impl TryFrom<BlueprintJson> for GameBlueprint {
    type Error = Error;

    /// Rebuilds from the witnesses and checks the stored data against the
    /// rebuilt game.
    fn try_from(j: BlueprintJson) -> Result<Self> {
        if j.kind != "game-blueprint" {
            return Err(Error::invalid(format!("expected kind \"game-blueprint\", got \"{}\"", j.kind)));
        }
        let zr = j.witness_state.into_operator()?;
        let zm = j
            .witness_measurement
            .into_iter()
            .map(MatrixJson::into_operator)
            .collect::<Result<Vec<_>>>()?;
        let xi = DensityMatrix::try_from(j.completion_state)?;
        let bp = match j.game {
            GameKind::Discrimination => {
                let n = j.n.ok_or_else(|| Error::invalid("discrimination blueprint needs n"))?;
                build_discrimination_game(&zr, &zm, n, Some(&xi))?
            }
            GameKind::Exclusion => build_exclusion_game(&zr, &zm, j.prior.as_deref())?,
        };
        if bp.d_in() != j.d_in || bp.d_out() != j.d_out {
            return Err(Error::invalid("blueprint dimensions do not match its witnesses"));
        }
        if (bp.parameter - j.parameter).abs() > 1e-9 * bp.parameter.max(1.0) {
            return Err(Error::invalid(format!(
                "stored parameter {} differs from rebuilt {}",
                j.parameter, bp.parameter
            )));
        }
        if j.multiplicity != bp.multiplicity || j.subchannels.len() != bp.distinct.len() {
            return Err(Error::invalid("stored subchannel layout differs from rebuilt game"));
        }
        for (x, (m, s)) in j.subchannels.into_iter().zip(&bp.distinct).enumerate() {
            if m.into_operator()?.max_abs_diff(s.choi()) > 1e-9 {
                return Err(Error::invalid(format!("stored subchannel {x} differs from rebuilt game")));
            }
        }
        Ok(bp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plus_witness() -> HermitianOperator {
        // robustness witness of |+><+| for the incoherent set
        HermitianOperator::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap()
    }

    fn basis_witness() -> Vec<HermitianOperator> {
        vec![
            HermitianOperator::basis_projector(2, 0),
            HermitianOperator::basis_projector(2, 1),
        ]
    }

    #[test]
    fn discrimination_structure() {
        let bp = build_discrimination_game(&plus_witness(), &basis_witness(), 5, None).unwrap();
        assert!((bp.parameter() - 0.25).abs() < 1e-15);
        assert_eq!(bp.num_subchannels(), 7);
        assert!(bp.cptp_deviation() < 1e-12);
        let full = bp.instrument().unwrap();
        assert_eq!(full.len(), 7);
        let (rho, m) = (DensityMatrix::plus(), Povm::computational(2));
        let compact = bp.evaluate(&rho, &m).unwrap();
        let expanded = super::super::eval_discrimination(&full, &rho, &m).unwrap();
        assert!((compact.value - expanded.value).abs() < 1e-14);
        assert_eq!(compact.post_processing, expanded.post_processing);
    }

    #[test]
    fn exclusion_structure() {
        let bp = build_exclusion_game(&plus_witness(), &basis_witness(), None).unwrap();
        assert!((bp.parameter() - 0.125).abs() < 1e-15);
        assert_eq!(bp.num_subchannels(), 3);
        assert!(bp.instrument().unwrap().cptp_deviation() < 1e-12);
    }

    #[test]
    fn rejects_bad_witnesses() {
        let neg = HermitianOperator::diag(&[1.0, -0.5]);
        assert!(matches!(
            build_discrimination_game(&neg, &basis_witness(), 5, None),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            build_exclusion_game(&HermitianOperator::zeros(2), &basis_witness(), None),
            Err(Error::DegenerateWitness(_))
        ));
        assert!(build_exclusion_game(&plus_witness(), &basis_witness(), Some(&[0.5, 0.6])).is_err());
        assert!(build_discrimination_game(&plus_witness(), &basis_witness(), 0, None).is_err());
    }

    #[test]
    fn guard_on_huge_instruments() {
        let bp = build_discrimination_game(&plus_witness(), &basis_witness(), 10_000_000, None).unwrap();
        assert!(matches!(bp.instrument(), Err(Error::GuardExceeded(_))));
    }

    #[test]
    fn json_round_trip() {
        for bp in [
            build_discrimination_game(&plus_witness(), &basis_witness(), 4000, None).unwrap(),
            build_exclusion_game(&plus_witness(), &basis_witness(), Some(&[0.3, 0.7])).unwrap(),
        ] {
            let back = GameBlueprint::from_json(&bp.to_json().unwrap()).unwrap();
            assert_eq!(back.kind(), bp.kind());
            assert_eq!(back.multiplicity(), bp.multiplicity());
            assert!((back.parameter() - bp.parameter()).abs() < 1e-15);
        }
        let mut v: serde_json::Value =
            serde_json::from_str(&build_exclusion_game(&plus_witness(), &basis_witness(), None).unwrap().to_json().unwrap())
                .unwrap();
        v["parameter"] = serde_json::json!(0.5);
        assert!(GameBlueprint::from_json(&v.to_string()).is_err());
    }
}
