//! Run configuration, read from a single JSON document.
//!
//! ```json
//! {
//!   "mode": "simulate",
//!   "games": [
//!     { "game": { "game_id": 0 }, "sim": { "sessions": 3, "seed": 7 } },
//!     { "game": { "game_id": 9, "a": 90, "b": 120, "c": 20, "d": 90 } }
//!   ],
//!   "reference": [0.25, 0.25, 0.25, 0.25],
//!   "output_dir": "out",
//!   "rounding": 0.0001
//! }
//! ```
//!
//! A custom game carries its payoffs and a free `game_id` label used to group
//! its sessions in reports. `CYCLESCOPE_SEED` overrides every seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, PayScale};
use crate::sim::SimConfig;
use crate::state::{check_simplex, Simplex4, CENTER};

pub const SEED_ENV: &str = "CYCLESCOPE_SEED";
/// Precision multiplier of the high-pay treatment ($5 vs $2 per 100 EF).
pub const HIGH_PAY_SCALE: f64 = 2.5;
pub const DEFAULT_ROUNDING: f64 = 1e-4;
pub const DEFAULT_BOUNDARY: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Ingest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentRef {
    pub game_id: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomGame {
    /// Grouping label in reports; not checked against the treatment table.
    pub game_id: u8,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(default = "low_pay")]
    pub pay_scale: PayScale,
}

fn low_pay() -> PayScale {
    PayScale::Low
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameRef {
    Treatment(TreatmentRef),
    Custom(CustomGame),
}

impl GameRef {
    pub fn label(&self) -> u8 {
        match self {
            GameRef::Treatment(t) => t.game_id,
            GameRef::Custom(c) => c.game_id,
        }
    }

    pub fn spec(&self) -> Result<GameSpec> {
        match self {
            GameRef::Treatment(t) => GameSpec::from_id(t.game_id),
            GameRef::Custom(c) => {
                let g = GameSpec::custom(c.a, c.b, c.c, c.d, c.pay_scale);
                g.validate()?;
                Ok(g)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameRun {
    pub game: GameRef,
    #[serde(default)]
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    pub path: PathBuf,
    /// Falls back to the `game<digit>` pattern in the file name.
    #[serde(default)]
    pub game_id: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub games: Vec<GameRun>,
    #[serde(default)]
    pub inputs: Vec<InputFile>,
    #[serde(default = "center")]
    pub reference: Simplex4,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Table resolution in absolute units; 1e-4 prints one decimal of 10^-3.
    #[serde(default = "default_rounding")]
    pub rounding: f64,
    /// Last period of the first half in the persistence split.
    #[serde(default = "default_boundary")]
    pub boundary: usize,
    /// Extra precision multiplier applied to high-pay games.
    #[serde(default = "default_high_pay")]
    pub high_pay_scale: f64,
}

fn center() -> Simplex4 {
    CENTER
}
fn default_rounding() -> f64 {
    DEFAULT_ROUNDING
}
fn default_boundary() -> usize {
    DEFAULT_BOUNDARY
}
fn default_high_pay() -> f64 {
    HIGH_PAY_SCALE
}

impl Default for RunConfig {
    /// Simulation of all four treatments with default parameters.
    fn default() -> Self {
        RunConfig {
            mode: Mode::Simulate,
            games: (0..4)
                .map(|g| GameRun {
                    game: GameRef::Treatment(TreatmentRef { game_id: g }),
                    sim: SimConfig::default(),
                })
                .collect(),
            inputs: Vec::new(),
            reference: CENTER,
            output_dir: None,
            rounding: DEFAULT_ROUNDING,
            boundary: DEFAULT_BOUNDARY,
            high_pay_scale: HIGH_PAY_SCALE,
        }
    }
}

/// Number of decimals of a value printed in 10^-3 units at resolution `rounding`.
pub fn milli_decimals(rounding: f64) -> Result<usize> {
    if !(rounding.is_finite() && rounding > 0.0 && rounding <= 1e-3) {
        return Err(Error::config(format!("rounding {rounding} must lie in (0, 1e-3]")));
    }
    let d = (1e-3 / rounding).log10();
    if (d - d.round()).abs() > 1e-9 || d.round() > 12.0 {
        return Err(Error::config(format!("rounding {rounding} is not 1e-3 over a power of ten")));
    }
    Ok(d.round() as usize)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::Simulate if self.games.is_empty() => {
                return Err(Error::config("simulate mode needs at least one game"))
            }
            Mode::Simulate if !self.inputs.is_empty() => {
                return Err(Error::config("simulate mode takes no input files"))
            }
            Mode::Ingest if self.inputs.is_empty() => {
                return Err(Error::config("ingest mode needs at least one input file"))
            }
            Mode::Ingest if !self.games.is_empty() => {
                return Err(Error::config("ingest mode takes no simulated games"))
            }
            _ => {}
        }
        let mut labels = std::collections::HashSet::new();
        for run in &self.games {
            run.game.spec()?;
            run.sim.validate()?;
            if !labels.insert(run.game.label()) {
                return Err(Error::config(format!("game {} listed twice", run.game.label())));
            }
        }
        check_simplex(&self.reference).map_err(|e| Error::config(format!("reference: {e}")))?;
        milli_decimals(self.rounding)?;
        if self.boundary < 1 {
            return Err(Error::config("boundary must be at least 1"));
        }
        if !(self.high_pay_scale.is_finite() && self.high_pay_scale > 0.0) {
            return Err(Error::config("high_pay_scale must be finite and > 0"));
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        for run in &mut self.games {
            run.sim.seed = seed;
        }
    }

    /// Applies `CYCLESCOPE_SEED` if it is set.
    pub fn apply_env_seed(&mut self) -> Result<()> {
        if let Some(seed) = env_seed()? {
            self.set_seed(seed);
        }
        Ok(())
    }

    /// The game, its effective simulator settings and its report label.
    pub fn resolved_games(&self) -> Result<Vec<(GameSpec, SimConfig, u8)>> {
        self.games
            .iter()
            .map(|run| {
                let spec = run.game.spec()?;
                let mut sim = run.sim.clone();
                if spec.pay_scale == PayScale::High {
                    sim.payoff_scale *= self.high_pay_scale;
                }
                Ok((spec, sim, run.game.label()))
            })
            .collect()
    }
}

pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::config(format!("{SEED_ENV}: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_covers_four_treatments() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let games = cfg.resolved_games().unwrap();
        let scales: Vec<f64> = games.iter().map(|(_, s, _)| s.payoff_scale).collect();
        assert_eq!(scales, vec![1.0, HIGH_PAY_SCALE, 1.0, HIGH_PAY_SCALE]);
        assert_eq!(games.iter().map(|g| g.2).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn parses_treatment_and_custom_games() {
        let cfg = RunConfig::from_json(
            r#"{"mode":"simulate","games":[
                {"game":{"game_id":1},"sim":{"seed":3,"sessions":2}},
                {"game":{"game_id":7,"a":60,"b":150,"c":20,"d":90,"pay_scale":"high"}}
            ],"rounding":0.00001}"#,
        )
        .unwrap();
        assert_eq!(cfg.games[0].sim.seed, 3);
        assert!(matches!(cfg.games[1].game, GameRef::Custom(CustomGame { game_id: 7, .. })));
        assert_eq!(milli_decimals(cfg.rounding).unwrap(), 2);
        assert_eq!(cfg.boundary, DEFAULT_BOUNDARY);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"mode":"simulate"}"#,
            r#"{"mode":"ingest","games":[{"game":{"game_id":0}}]}"#,
            r#"{"mode":"simulate","games":[{"game":{"game_id":4}}]}"#,
            r#"{"mode":"simulate","games":[{"game":{"game_id":0},"sim":{"n":11}}]}"#,
            r#"{"mode":"simulate","games":[{"game":{"game_id":0}},{"game":{"game_id":0}}]}"#,
            r#"{"mode":"simulate","games":[{"game":{"game_id":0}}],"rounding":0.0003}"#,
            r#"{"mode":"simulate","games":[{"game":{"game_id":0}}],"reference":[1,1,1,1]}"#,
            r#"{"mode":"simulate","games":[{"game":{"game_id":0}}],"colour":"red"}"#,
            r#"{"mode":"both"}"#,
            "not json",
        ];
        for text in bad {
            assert!(matches!(RunConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn rounding_decimals() {
        assert_eq!(milli_decimals(1e-3).unwrap(), 0);
        assert_eq!(milli_decimals(1e-4).unwrap(), 1);
        assert_eq!(milli_decimals(1e-6).unwrap(), 3);
        assert!(milli_decimals(0.01).is_err());
    }

    #[test]
    fn seed_override() {
        let mut cfg = RunConfig::default();
        cfg.set_seed(42);
        assert!(cfg.games.iter().all(|g| g.sim.seed == 42));
    }
}
