//! Angular momentum of period-by-period transitions and the statistics built
//! on it: time averages, strength, the pooled `(1,1,1)` scale, first/second
//! half persistence, reference-point sweeps and average play.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Strategy;
use crate::state::{
    bivector_unchecked, check_simplex, project_unchecked, Bivector6, Setting, Simplex4, SocialState,
};
use crate::stats::{self, P_FLOOR};

/// Social states of one session, one per period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub session_id: String,
    pub game_id: u8,
    pub states: Vec<SocialState>,
}

impl Trajectory {
    pub fn new(session_id: impl Into<String>, game_id: u8, states: Vec<SocialState>) -> Result<Self> {
        let t = Trajectory {
            session_id: session_id.into(),
            game_id,
            states,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.states.first() else {
            return Err(Error::domain(format!("session {} has no states", self.session_id)));
        };
        let n = first.n();
        if n == 0 {
            return Err(Error::domain(format!("session {} has zero players", self.session_id)));
        }
        if let Some((i, s)) = self.states.iter().enumerate().find(|(_, s)| s.n() != n) {
            return Err(Error::domain(format!(
                "session {}: period {} has {} players, expected {n}",
                self.session_id,
                i + 1,
                s.n()
            )));
        }
        Ok(())
    }

    pub fn periods(&self) -> usize {
        self.states.len()
    }

    pub fn ppt_count(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn n(&self) -> u32 {
        self.states.first().map_or(0, SocialState::n)
    }

    pub fn is_closed(&self) -> bool {
        self.states.len() >= 2 && self.states.first() == self.states.last()
    }

    pub fn reversed(&self) -> Trajectory {
        let mut states = self.states.clone();
        states.reverse();
        Trajectory {
            session_id: self.session_id.clone(),
            game_id: self.game_id,
            states,
        }
    }
}

/// `L = [pi_k(x_t) - pi_k(o)] x [pi_k(x_t1) - pi_k(o)]`, computed directly in 3D.
pub fn angular_momentum_step(
    x_t: &SocialState,
    x_t1: &SocialState,
    o: &Simplex4,
    k: Setting,
) -> Result<[f64; 3]> {
    if x_t.n() != x_t1.n() {
        return Err(Error::domain(format!(
            "states have different populations: {} vs {}",
            x_t.n(),
            x_t1.n()
        )));
    }
    check_simplex(o)?;
    Ok(angular_momentum_points(&x_t.fractions(), &x_t1.fractions(), o, k))
}

/// Same as [`angular_momentum_step`] on raw 4-vectors; no simplex check.
pub fn angular_momentum_points(from: &Simplex4, to: &Simplex4, o: &Simplex4, k: Setting) -> [f64; 3] {
    let po = project_unchecked(o, k);
    let u = project_unchecked(from, k).sub(po);
    let v = project_unchecked(to, k).sub(po);
    u.cross(v).to_array()
}

/// Per-PPT bivectors of one session. Every setting's samples are views of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivectorSamples {
    pub session_id: String,
    pub game_id: u8,
    pub reference: Simplex4,
    /// `(t, B)` with `t` the 1-based index of the PPT from period `t` to `t + 1`.
    pub samples: Vec<(usize, Bivector6)>,
}

impl BivectorSamples {
    pub fn view(&self, k: Setting) -> AngularSamples {
        AngularSamples {
            setting: k,
            reference: self.reference,
            session_id: self.session_id.clone(),
            game_id: self.game_id,
            samples: self
                .samples
                .iter()
                .map(|(t, b)| Sample { t: *t, l: b.view(k) })
                .collect(),
        }
    }
}

pub fn trajectory_bivectors(traj: &Trajectory, o: &Simplex4) -> Result<BivectorSamples> {
    traj.validate()?;
    if traj.states.len() < 2 {
        return Err(Error::domain(format!(
            "session {} has {} state(s); at least 2 are needed for a transition",
            traj.session_id,
            traj.states.len()
        )));
    }
    check_simplex(o)?;
    let fractions: Vec<Simplex4> = traj.states.iter().map(SocialState::fractions).collect();
    let samples = fractions
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, bivector_unchecked(&w[0], &w[1], o)))
        .collect();
    Ok(BivectorSamples {
        session_id: traj.session_id.clone(),
        game_id: traj.game_id,
        reference: *o,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: usize,
    pub l: [f64; 3],
}

/// Per-PPT `(L_x, L_y, L_z)` of one session under one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularSamples {
    pub setting: Setting,
    pub reference: Simplex4,
    pub session_id: String,
    pub game_id: u8,
    pub samples: Vec<Sample>,
}

impl AngularSamples {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One column of samples (0 = x, 1 = y, 2 = z).
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.l[c]).collect()
    }
}

pub fn trajectory_samples(traj: &Trajectory, o: &Simplex4, k: Setting) -> Result<AngularSamples> {
    Ok(trajectory_bivectors(traj, o)?.view(k))
}

pub fn samples_csv_header() -> &'static str {
    "session_id,game_id,k,t,Lx,Ly,Lz\n"
}

pub fn samples_csv_rows(samples: &AngularSamples, out: &mut String) {
    for s in &samples.samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            samples.session_id,
            samples.game_id,
            samples.setting.id(),
            s.t,
            s.l[0],
            s.l[1],
            s.l[2]
        ));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanL {
    pub mean: [f64; 3],
    pub n: usize,
}

impl MeanL {
    /// Component sums, `n * mean`.
    pub fn sums(&self) -> [f64; 3] {
        self.mean.map(|m| m * self.n as f64)
    }
}

pub fn mean_l(samples: &AngularSamples) -> Result<MeanL> {
    mean_l_pooled(std::slice::from_ref(samples))
}

/// Mean over the samples of several sessions pooled together.
pub fn mean_l_pooled(groups: &[AngularSamples]) -> Result<MeanL> {
    let mut sum = [0.0; 3];
    let mut n = 0;
    for s in groups.iter().flat_map(|g| g.samples.iter()) {
        for c in 0..3 {
            sum[c] += s.l[c];
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::domain("mean of an empty sample set"));
    }
    Ok(MeanL {
        mean: sum.map(|v| v / n as f64),
        n,
    })
}

/// `|L| = sqrt(Lx^2 + Ly^2 + Lz^2)` of the mean vector.
pub fn strength(m: &MeanL) -> f64 {
    m.mean.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Pools the three k1 components as separate scalar samples.
pub fn combined_scale_samples(samples: &AngularSamples) -> Result<Vec<f64>> {
    if samples.setting != Setting::K1 {
        return Err(Error::domain(format!(
            "combined scale is defined on k1 samples, got {}",
            samples.setting
        )));
    }
    Ok(samples.samples.iter().flat_map(|s| s.l).collect())
}

/// Normalized projection `(Lx + Ly + Lz) / sqrt(3)`, one value per PPT.
pub fn projected_111_samples(samples: &AngularSamples) -> Result<Vec<f64>> {
    if samples.setting != Setting::K1 {
        return Err(Error::domain(format!(
            "(1,1,1) projection is defined on k1 samples, got {}",
            samples.setting
        )));
    }
    Ok(samples
        .samples
        .iter()
        .map(|s| s.l.iter().sum::<f64>() / 3f64.sqrt())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub boundary: usize,
    pub first_mean: f64,
    pub second_mean: f64,
    /// `second_mean - first_mean`.
    pub delta: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Compares the k1 combined scale before and after `boundary`.
///
/// First half: PPTs `t` in `1..boundary`; second half: `t` in `boundary+1..T`.
/// The PPT starting at the boundary period is dropped.
pub fn persistence_split(
    group: &[Trajectory],
    o: &Simplex4,
    boundary: usize,
) -> Result<PersistenceReport> {
    let mut sessions = Vec::with_capacity(group.len());
    for traj in group {
        if boundary < 1 || boundary > traj.periods() {
            return Err(Error::domain(format!(
                "boundary {boundary} outside periods 1..={} of session {}",
                traj.periods(),
                traj.session_id
            )));
        }
        sessions.push(trajectory_samples(traj, o, Setting::K1)?);
    }
    persistence_from_samples(&sessions, boundary)
}

/// [`persistence_split`] on precomputed k1 samples.
pub fn persistence_from_samples(
    sessions: &[AngularSamples],
    boundary: usize,
) -> Result<PersistenceReport> {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for s in sessions {
        if s.setting != Setting::K1 {
            return Err(Error::domain("persistence uses k1 samples"));
        }
        for sample in &s.samples {
            if sample.t < boundary {
                first.extend_from_slice(&sample.l);
            } else if sample.t > boundary {
                second.extend_from_slice(&sample.l);
            }
        }
    }
    if first.is_empty() || second.is_empty() {
        return Err(Error::domain(format!(
            "boundary {boundary} leaves an empty half ({} / {} samples)",
            first.len(),
            second.len()
        )));
    }
    let m1 = first.iter().sum::<f64>() / first.len() as f64;
    let m2 = second.iter().sum::<f64>() / second.len() as f64;
    let (t, p) = match stats::two_sample_t(&first, &second) {
        Ok(r) => (r.statistic, r.p_value),
        // Both halves constant: equal means cannot be distinguished, distinct ones trivially are.
        Err(Error::Degenerate(_)) if m1 == m2 => (0.0, 1.0),
        Err(Error::Degenerate(_)) => (f64::MAX.copysign(m2 - m1), P_FLOOR),
        Err(e) => return Err(e),
    };
    Ok(PersistenceReport {
        boundary,
        first_mean: m1,
        second_mean: m2,
        delta: m2 - m1,
        t_statistic: t,
        p_value: p,
        n1: first.len(),
        n2: second.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSweep {
    pub setting: Setting,
    pub references: Vec<SocialState>,
    pub means: Vec<MeanL>,
    /// First state equals last state; the L sums must then agree across references.
    pub closed: bool,
}

impl ReferenceSweep {
    /// Largest spread of any component's L sum across references.
    pub fn sum_spread(&self) -> f64 {
        (0..3)
            .map(|c| {
                let vals = self.means.iter().map(|m| m.sums()[c]);
                let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
                let min = vals.fold(f64::INFINITY, f64::min);
                max - min
            })
            .fold(0.0, f64::max)
    }
}

/// Recomputes the mean angular momentum of `traj` about each reference state.
pub fn reference_sweep(
    traj: &Trajectory,
    k: Setting,
    references: &[SocialState],
) -> Result<ReferenceSweep> {
    if references.is_empty() {
        return Err(Error::domain("reference sweep needs at least one reference"));
    }
    let means = references
        .par_iter()
        .map(|r| mean_l(&trajectory_samples(traj, &r.fractions(), k)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceSweep {
        setting: k,
        references: references.to_vec(),
        means,
        closed: traj.is_closed(),
    })
}

/// Mean fraction of `strategy` over every period of every session.
pub fn average_play(group: &[Trajectory], strategy: Strategy) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in group.iter().flat_map(|t| t.states.iter()) {
        sum += s.fractions()[strategy.index()];
        n += 1;
    }
    if n == 0 {
        return Err(Error::domain("average play of an empty group"));
    }
    Ok(sum / n as f64)
}
