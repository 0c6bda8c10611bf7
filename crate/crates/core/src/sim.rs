//! Agent-based RPSD sessions: random pairwise matching, logit choice and
//! belief learning, plus two population-level alternatives.
//!
//! Every session draws from its own ChaCha stream, keyed by the game and the
//! session index, so a batch is reproducible regardless of how it is scheduled.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{expected_payoffs_raw, GameSpec, MixedProfile, PayoffMatrix, Strategy};
use crate::metrics::{trajectory_bivectors, Trajectory};
use crate::state::{Setting, SocialState, CENTER};
use crate::stats;

/// Logit precision found by [`calibrate`] on the unstable low-pay game.
pub const CALIBRATED_LAMBDA: f64 = 0.5;
/// Belief recency weight found by [`calibrate`].
pub const CALIBRATED_RHO: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRule {
    /// Each agent best-responds (logit) to weighted beliefs about opponents.
    LogitFictitiousPlay,
    /// Every agent redraws by logit against the current population mixture.
    PopulationLogit,
    /// Agents imitate a sampled peer with a Fermi switching probability.
    SampledReplicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    UniformRandom,
    Fixed(SocialState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Population size; must be even for pairwise matching.
    pub n: u32,
    pub periods: usize,
    pub sessions: usize,
    pub rule: LearningRule,
    pub lambda: f64,
    pub rho: f64,
    /// Multiplier on the logit precision, `lambda_eff = lambda * payoff_scale`.
    pub payoff_scale: f64,
    pub seed: u64,
    pub initial_state: InitialState,
    /// Update beliefs from the whole period's action distribution instead of
    /// the matched opponent's action.
    pub full_information: bool,
    /// Per-agent random-strategy probability for the imitation rule.
    pub mutation: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 12,
            periods: 80,
            sessions: 3,
            rule: LearningRule::LogitFictitiousPlay,
            lambda: CALIBRATED_LAMBDA,
            rho: CALIBRATED_RHO,
            payoff_scale: 1.0,
            seed: 0,
            initial_state: InitialState::UniformRandom,
            full_information: false,
            mutation: 0.02,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::config(format!(
                "population size {} must be even and at least 2",
                self.n
            )));
        }
        if self.periods == 0 || self.sessions == 0 {
            return Err(Error::config("periods and sessions must be positive"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config(format!("lambda {} must be finite and >= 0", self.lambda)));
        }
        if !(self.payoff_scale.is_finite() && self.payoff_scale > 0.0) {
            return Err(Error::config(format!(
                "payoff_scale {} must be finite and > 0",
                self.payoff_scale
            )));
        }
        if self.rule == LearningRule::LogitFictitiousPlay && !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::config(format!("rho {} must lie in (0, 1]", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.mutation) {
            return Err(Error::config(format!("mutation {} must lie in [0, 1]", self.mutation)));
        }
        if let InitialState::Fixed(s) = self.initial_state {
            if s.n() != self.n {
                return Err(Error::config(format!(
                    "initial state {s} has {} players, config says {}",
                    s.n(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn effective_lambda(&self) -> f64 {
        self.lambda * self.payoff_scale
    }
}

/// Session stream: one ChaCha stream per (game, session).
pub fn session_rng(seed: u64, game: &GameSpec, session: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let game_key = game.game_id.map_or(0xff, u64::from);
    rng.set_stream((game_key << 32) | session as u64);
    rng
}

/// Uniform perfect matching of `n` agents, pairs as `(lower, higher)`.
pub fn random_pairing<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::domain(format!("cannot pair {n} agents")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(order
        .chunks_exact(2)
        .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
        .collect())
}

/// Softmax choice probabilities with max-subtraction.
pub fn logit_probabilities(payoffs: &[f64; 4], lambda: f64) -> [f64; 4] {
    let max = payoffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = payoffs.map(|u| (lambda * (u - max)).exp());
    let sum: f64 = w.iter().sum();
    w.map(|v| v / sum)
}

pub fn logit_choice<R: Rng + ?Sized>(payoffs: &[f64; 4], lambda: f64, rng: &mut R) -> Strategy {
    draw(&logit_probabilities(payoffs, lambda), rng)
}

fn draw<R: Rng + ?Sized>(probs: &[f64; 4], rng: &mut R) -> Strategy {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Strategy::from_index(i);
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    Strategy::from_index(probs.iter().rposition(|&p| p > 0.0).unwrap_or(3))
}

/// `(1 - rho) * beliefs + rho * e_observed`.
pub fn belief_update(beliefs: &MixedProfile, observed: Strategy, rho: f64) -> MixedProfile {
    let mut b = beliefs.probs().map(|p| (1.0 - rho) * p);
    b[observed.index()] += rho;
    MixedProfile::from_raw(b)
}

fn blend(beliefs: &MixedProfile, target: &[f64; 4], rho: f64) -> MixedProfile {
    let b = beliefs.probs();
    MixedProfile::from_raw(std::array::from_fn(|i| (1.0 - rho) * b[i] + rho * target[i]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub beliefs: MixedProfile,
    pub last_action: Strategy,
}

fn counts_of(actions: impl Iterator<Item = Strategy>) -> SocialState {
    let mut counts = [0u32; 4];
    for a in actions {
        counts[a.index()] += 1;
    }
    SocialState { counts }
}

fn initial_actions<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Vec<Strategy> {
    match cfg.initial_state {
        InitialState::UniformRandom => (0..cfg.n)
            .map(|_| Strategy::from_index(rng.gen_range(0..4)))
            .collect(),
        InitialState::Fixed(s) => Strategy::ALL
            .iter()
            .flat_map(|&st| std::iter::repeat(st).take(s.count(st) as usize))
            .collect(),
    }
}

/// Simulates session 0 of `cfg`.
pub fn run_session(cfg: &SimConfig, game: &GameSpec) -> Result<Trajectory> {
    run_session_indexed(cfg, game, 0)
}

/// Simulates one session on its own random stream.
pub fn run_session_indexed(cfg: &SimConfig, game: &GameSpec, session: usize) -> Result<Trajectory> {
    cfg.validate()?;
    game.validate()?;
    let mut rng = session_rng(cfg.seed, game, session);
    let matrix = game.matrix();
    let states = match cfg.rule {
        LearningRule::LogitFictitiousPlay => fictitious_play(cfg, &matrix, &mut rng)?,
        LearningRule::PopulationLogit => {
            let mut s = counts_of(initial_actions(cfg, &mut rng).into_iter());
            let mut out = vec![s];
            for _ in 1..cfg.periods {
                s = population_step_matrix(&s, &matrix, cfg.effective_lambda(), &mut rng);
                out.push(s);
            }
            out
        }
        LearningRule::SampledReplicator => imitation(cfg, &matrix, &mut rng)?,
    };
    let game_label = game.game_id.map_or("x".to_string(), |g| g.to_string());
    Trajectory::new(
        format!("g{game_label}-s{}", session + 1),
        game.game_id.unwrap_or(0),
        states,
    )
}

/// All `cfg.sessions` sessions, generated in parallel.
pub fn run_sessions(cfg: &SimConfig, game: &GameSpec) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    (0..cfg.sessions)
        .into_par_iter()
        .map(|s| run_session_indexed(cfg, game, s))
        .collect()
}

fn fictitious_play(cfg: &SimConfig, matrix: &PayoffMatrix, rng: &mut ChaCha8Rng) -> Result<Vec<SocialState>> {
    let lambda = cfg.effective_lambda();
    let mut agents: Vec<AgentState> = initial_actions(cfg, rng)
        .into_iter()
        .map(|a| AgentState {
            beliefs: MixedProfile::UNIFORM,
            last_action: a,
        })
        .collect();
    let mut states = Vec::with_capacity(cfg.periods);
    for period in 0..cfg.periods {
        if period > 0 {
            for agent in agents.iter_mut() {
                let u = expected_payoffs_raw(matrix, &agent.beliefs.probs());
                agent.last_action = logit_choice(&u, lambda, rng);
            }
        }
        let state = counts_of(agents.iter().map(|a| a.last_action));
        states.push(state);
        let pairs = random_pairing(agents.len(), rng)?;
        if cfg.full_information {
            let mix = state.fractions();
            for agent in agents.iter_mut() {
                agent.beliefs = blend(&agent.beliefs, &mix, cfg.rho);
            }
        } else {
            for (i, j) in pairs {
                let (ai, aj) = (agents[i].last_action, agents[j].last_action);
                agents[i].beliefs = belief_update(&agents[i].beliefs, aj, cfg.rho);
                agents[j].beliefs = belief_update(&agents[j].beliefs, ai, cfg.rho);
            }
        }
    }
    Ok(states)
}

fn imitation(cfg: &SimConfig, matrix: &PayoffMatrix, rng: &mut ChaCha8Rng) -> Result<Vec<SocialState>> {
    let lambda = cfg.effective_lambda();
    let n = cfg.n as usize;
    let mut actions = initial_actions(cfg, rng);
    let mut states = Vec::with_capacity(cfg.periods);
    let mut payoff = vec![0.0; n];
    for period in 0..cfg.periods {
        if period > 0 {
            let previous = actions.clone();
            for i in 0..n {
                if rng.gen::<f64>() < cfg.mutation {
                    actions[i] = Strategy::from_index(rng.gen_range(0..4));
                    continue;
                }
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let switch = 1.0 / (1.0 + (-lambda * (payoff[j] - payoff[i])).exp());
                if rng.gen::<f64>() < switch {
                    actions[i] = previous[j];
                }
            }
        }
        states.push(counts_of(actions.iter().copied()));
        for (i, j) in random_pairing(n, rng)? {
            payoff[i] = matrix.get(actions[i], actions[j]);
            payoff[j] = matrix.get(actions[j], actions[i]);
        }
    }
    Ok(states)
}

/// Every agent independently redraws by logit against the current mixture.
pub fn population_step<R: Rng + ?Sized>(
    state: &SocialState,
    game: &GameSpec,
    lambda: f64,
    rng: &mut R,
) -> SocialState {
    population_step_matrix(state, &game.matrix(), lambda, rng)
}

fn population_step_matrix<R: Rng + ?Sized>(
    state: &SocialState,
    matrix: &PayoffMatrix,
    lambda: f64,
    rng: &mut R,
) -> SocialState {
    let u = expected_payoffs_raw(matrix, &state.fractions());
    let probs = logit_probabilities(&u, lambda);
    counts_of((0..state.n()).map(|_| draw(&probs, rng)))
}

/// Grid, seed and target used to derive [`CALIBRATED_LAMBDA`] and [`CALIBRATED_RHO`].
pub const CALIBRATION_LAMBDAS: [f64; 6] = [0.1, 0.2, 0.3, 0.5, 0.8, 1.2];
pub const CALIBRATION_RHOS: [f64; 4] = [0.03, 0.05, 0.1, 0.2];
pub const CALIBRATION_SEED: u64 = 20_130_621;
pub const CALIBRATION_SESSIONS: usize = 100;
/// Cycle strength `|L|` of the unstable low-pay treatment in the experiments.
pub const TARGET_STRENGTH: f64 = 7.9e-3;
/// Two-sided 1% critical value of the normal distribution.
const Z_01: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub lambda: f64,
    pub rho: f64,
    /// `|L|` of the pooled k1 mean.
    pub strength: f64,
    /// One-sample t statistics of the pooled k1 components.
    pub k1_t: [f64; 3],
    /// Largest |t| among the three bivector components involving D.
    pub off_plane_max_abs_t: f64,
}

impl CalibrationPoint {
    /// All three k1 components positive at p < 0.01 (normal approximation).
    pub fn is_significant(&self) -> bool {
        self.k1_t.iter().all(|&t| t > Z_01)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target_strength: f64,
    pub points: Vec<CalibrationPoint>,
    pub best: CalibrationPoint,
}

/// Grid search over `(lambda, rho)` on pooled sessions of `game`.
///
/// Among grid points whose pooled k1 components are all significantly
/// positive, picks the one whose cycle strength is closest to
/// `target_strength`. Fails if no grid point produces significant cycles.
pub fn calibrate(
    base: &SimConfig,
    game: &GameSpec,
    lambdas: &[f64],
    rhos: &[f64],
    target_strength: f64,
) -> Result<Calibration> {
    if lambdas.is_empty() || rhos.is_empty() {
        return Err(Error::config("calibration grid is empty"));
    }
    let grid: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| rhos.iter().map(move |&r| (l, r)))
        .collect();
    let points = grid
        .par_iter()
        .map(|&(lambda, rho)| {
            let cfg = SimConfig {
                lambda,
                rho,
                ..base.clone()
            };
            let sessions = run_sessions(&cfg, game)?;
            calibration_point(lambda, rho, &sessions)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points
        .iter()
        .filter(|p| p.is_significant())
        .min_by(|a, b| {
            (a.strength - target_strength)
                .abs()
                .total_cmp(&(b.strength - target_strength).abs())
        })
        .cloned()
        .ok_or_else(|| Error::config("no grid point produces significant k1 cycles"))?;
    Ok(Calibration {
        target_strength,
        points,
        best,
    })
}

/// [`calibrate`] with the built-in grid on the unstable low-pay game.
pub fn calibrate_default() -> Result<Calibration> {
    let base = SimConfig {
        sessions: CALIBRATION_SESSIONS,
        seed: CALIBRATION_SEED,
        ..SimConfig::default()
    };
    calibrate(
        &base,
        &GameSpec::from_id(0)?,
        &CALIBRATION_LAMBDAS,
        &CALIBRATION_RHOS,
        TARGET_STRENGTH,
    )
}

fn calibration_point(lambda: f64, rho: f64, sessions: &[Trajectory]) -> Result<CalibrationPoint> {
    let biv = sessions
        .iter()
        .map(|t| trajectory_bivectors(t, &CENTER))
        .collect::<Result<Vec<_>>>()?;
    let column = |k: Setting, c: usize| -> Vec<f64> {
        biv.iter().flat_map(|b| b.view(k).component(c)).collect()
    };
    let t_of = |k: Setting, c: usize| -> f64 {
        stats::one_sample_t(&column(k, c), 0.0).map_or(0.0, |r| r.statistic)
    };
    let k1_t = [t_of(Setting::K1, 0), t_of(Setting::K1, 1), t_of(Setting::K1, 2)];
    let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
    let m = [
        mean(column(Setting::K1, 0)),
        mean(column(Setting::K1, 1)),
        mean(column(Setting::K1, 2)),
    ];
    // B_SD, B_DP and B_DR are read as k2.x, k2.y and k3.x
    let off = [t_of(Setting::K2, 0), t_of(Setting::K2, 1), t_of(Setting::K3, 0)]
        .iter()
        .fold(0.0f64, |acc, t| acc.max(t.abs()));
    Ok(CalibrationPoint {
        lambda,
        rho,
        strength: m.iter().map(|v| v * v).sum::<f64>().sqrt(),
        k1_t,
        off_plane_max_abs_t: off,
    })
}
