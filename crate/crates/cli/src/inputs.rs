use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qrt_games_core::games::{self, GameBlueprint, GameKind};
use qrt_games_core::{
    ChannelEnsemble, DensityMatrix, Evaluation, FreeMeasurementSet, FreeSetDescriptor, FreeStateSet, Povm,
    SubchannelSet,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Kind;

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {what} file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} file {}", path.display()))
}

pub fn state(path: &Path) -> Result<DensityMatrix> {
    read_json(path, "state")
}

pub fn povm(path: &Path) -> Result<Povm> {
    read_json(path, "POVM")
}

pub fn ensemble(path: &Path) -> Result<ChannelEnsemble> {
    read_json(path, "ensemble")
}

/// `incoherent` names the built-in set; anything else is read as a
/// descriptor file.
pub fn state_descriptor(spec: &str, dim: usize) -> Result<FreeSetDescriptor> {
    match spec {
        "incoherent" => Ok(FreeSetDescriptor::Incoherent { dim, outcomes: None }),
        path => read_json(Path::new(path), "free-state descriptor"),
    }
}

pub fn measurement_descriptor(spec: &str, dim: usize, outcomes: usize) -> Result<FreeSetDescriptor> {
    match spec {
        "trivial" => Ok(FreeSetDescriptor::Trivial { dim, outcomes }),
        "incoherent" | "incoherent-povm" => Ok(FreeSetDescriptor::IncoherentPovm { dim, outcomes }),
        path => read_json(Path::new(path), "free-measurement descriptor"),
    }
}

pub fn free_states(d: &FreeSetDescriptor) -> Result<FreeStateSet> {
    d.state_set().context("building the free-state set")
}

pub fn free_measurements(d: &FreeSetDescriptor) -> Result<FreeMeasurementSet> {
    d.measurement_set().context("building the free-measurement set")
}

impl From<Kind> for GameKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Discrimination => GameKind::Discrimination,
            Kind::Exclusion => GameKind::Exclusion,
        }
    }
}

/// Any of the accepted game files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Game {
    Blueprint(GameBlueprint),
    Instrument(SubchannelSet),
    Ensemble(ChannelEnsemble),
}

impl Game {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading game file {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing game file {}", path.display()))?;
        let ctx = || format!("parsing game file {}", path.display());
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("game-blueprint") => Ok(Game::Blueprint(GameBlueprint::from_json(&text).with_context(ctx)?)),
            Some("instrument") => Ok(Game::Instrument(serde_json::from_value(value).with_context(ctx)?)),
            Some("ensemble") => Ok(Game::Ensemble(serde_json::from_value(value).with_context(ctx)?)),
            Some(other) => bail!(
                "game file {}: field \"kind\" is {other:?}, expected game-blueprint, instrument or ensemble",
                path.display()
            ),
            None => bail!("game file {}: missing field \"kind\"", path.display()),
        }
    }

    /// Resolves the game kind from the file and the `--kind` flag.
    pub fn kind(&self, flag: Option<Kind>) -> Result<GameKind> {
        match (self, flag) {
            (Game::Blueprint(b), None) => Ok(b.kind()),
            (Game::Blueprint(b), Some(k)) if GameKind::from(k) == b.kind() => Ok(b.kind()),
            (Game::Blueprint(b), Some(k)) => {
                bail!("--kind {:?} conflicts with the blueprint's kind {:?}", GameKind::from(k), b.kind())
            }
            (_, Some(k)) => Ok(k.into()),
            (_, None) => bail!("--kind is required for instrument and ensemble games"),
        }
    }

    pub fn instrument(&self) -> Result<SubchannelSet> {
        Ok(match self {
            Game::Blueprint(b) => b.instrument()?,
            Game::Instrument(s) => s.clone(),
            Game::Ensemble(e) => e.as_game()?,
        })
    }

    pub fn evaluate(&self, rho: &DensityMatrix, m: &Povm, kind: GameKind) -> Result<Evaluation> {
        Ok(match self {
            Game::Blueprint(b) => b.evaluate(rho, m)?,
            other => games::evaluate(&other.instrument()?, rho, m, kind)?,
        })
    }
}
