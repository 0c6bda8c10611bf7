//! Report bundle: per-setting means with t-tests, cycle strength and
//! cross-game rank-sum comparisons, first/second half persistence, the
//! session-level regression on average D play, and the sign verdicts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment;
use crate::game::Strategy;
use crate::metrics::{
    mean_l_pooled, persistence_from_samples, projected_111_samples,
    samples_csv_header, samples_csv_rows, strength, trajectory_bivectors, AngularSamples,
    BivectorSamples, MeanL, PersistenceReport, Trajectory,
};
use crate::state::{enumerate_lattice, project, ExpectedSign, Setting, Simplex4, CENTER};
use crate::stats::{self, stars, SignificanceMark, P_FLOOR};

/// Significance level of the verdict rule.
pub const VERDICT_ALPHA: f64 = 0.05;

const COMPONENTS: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub reference: Simplex4,
    /// Last period of the first half in the persistence split.
    pub boundary: usize,
    /// Repeat the k-setting means about every lattice state.
    pub sweep: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            reference: CENTER,
            boundary: 40,
            sweep: false,
        }
    }
}

/// One session's transitions plus its average D play, if known.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionInput {
    pub bivectors: BivectorSamples,
    pub p_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub game_id: u8,
    pub ppt: usize,
    pub p_d: Option<f64>,
    pub mean_k1: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub k: Setting,
    pub game_id: u8,
    pub n: usize,
    pub mean: [f64; 3],
    pub t: [f64; 3],
    pub p_value: [f64; 3],
    pub marks: [SignificanceMark; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthRow {
    pub game_id: u8,
    pub strength: f64,
    pub n: usize,
}

/// Rank-sum comparison of the k1 samples of game `row` against game `col`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub row: u8,
    pub col: u8,
    /// Positive when `row` ranks higher.
    pub z: [f64; 3],
    pub p_value: [f64; 3],
    pub marks: [SignificanceMark; 3],
}

impl Comparison {
    pub fn sign(&self, c: usize) -> char {
        match self.z[c] {
            z if z > 0.0 => '+',
            z if z < 0.0 => '-',
            _ => '0',
        }
    }

    /// `"-*;+;-**"` style cell.
    pub fn cell(&self) -> String {
        (0..3)
            .map(|c| format!("{}{}", self.sign(c), self.marks[c]))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Check of one predicted strength ordering `stronger > weaker`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrowCheck {
    pub stronger: u8,
    pub weaker: u8,
    /// `|L|` of `stronger` exceeds that of `weaker`.
    pub holds: bool,
    /// Components whose rank-sum z points the predicted way.
    pub components_agreeing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceRow {
    pub game_id: u8,
    /// Three k1 components pooled as separate samples.
    pub combined: PersistenceReport,
    /// `(L_x + L_y + L_z) / sqrt(3)`, one sample per transition.
    pub projected: PersistenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub component: usize,
    pub slope: f64,
    pub t: f64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCheck {
    pub game_id: u8,
    pub sessions: usize,
    pub n: usize,
    pub halves: Option<(usize, usize)>,
    pub lab_n: usize,
    pub lab_halves: (usize, usize),
    pub matches_lab: bool,
    /// Lab counts agree with equal-length sessions that drop one boundary transition.
    pub lab_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub game_id: u8,
    pub k: Setting,
    pub component: usize,
    pub default_mean: f64,
    pub min: f64,
    pub max: f64,
    /// Share of references giving the same sign as the default reference.
    pub same_sign: f64,
    pub references: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub reference: Simplex4,
    pub boundary: usize,
    pub games: Vec<u8>,
    pub sessions: Vec<SessionSummary>,
    pub means: Vec<MeanRow>,
    pub strength: Vec<StrengthRow>,
    pub comparisons: Vec<Comparison>,
    pub arrows: Vec<ArrowCheck>,
    pub persistence: Vec<PersistenceRow>,
    pub regression: Option<Vec<RegressionRow>>,
    pub count_checks: Vec<CountCheck>,
    pub sweep: Option<Vec<SweepRow>>,
    pub flags: Vec<String>,
}

impl Report {
    pub fn mean_row(&self, k: Setting, game_id: u8) -> Option<&MeanRow> {
        self.means.iter().find(|r| r.k == k && r.game_id == game_id)
    }
}

fn p_d(traj: &Trajectory) -> f64 {
    let n = traj.states.len() as f64;
    traj.states
        .iter()
        .map(|s| s.fractions()[Strategy::D.index()])
        .sum::<f64>()
        / n
}

/// Groups `trajectories` by game and runs the full analysis.
///
/// Every game in `games` needs at least one trajectory; trajectories of other
/// games are a configuration error too.
pub fn analyze(trajectories: &[Trajectory], games: &[u8], opts: &AnalysisOptions) -> Result<Report> {
    let sessions = trajectories
        .par_iter()
        .map(|t| {
            Ok(SessionInput {
                bivectors: trajectory_bivectors(t, &opts.reference)?,
                p_d: Some(p_d(t)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = analyze_sessions(&sessions, games, opts)?;
    if opts.sweep {
        let (rows, flags) = sweep(trajectories, &report)?;
        report.sweep = Some(rows);
        report.flags.extend(flags);
    }
    Ok(report)
}

fn t_test(xs: &[f64]) -> Result<(f64, f64)> {
    match stats::one_sample_t(xs, 0.0) {
        Ok(r) => Ok((r.statistic, r.p_value)),
        Err(Error::Degenerate(_)) => {
            let m = xs[0];
            if m == 0.0 {
                Ok((0.0, 1.0))
            } else {
                Ok((f64::MAX.copysign(m), P_FLOOR))
            }
        }
        Err(e) => Err(e),
    }
}

/// [`analyze`] on precomputed per-session transitions.
pub fn analyze_sessions(sessions: &[SessionInput], games: &[u8], opts: &AnalysisOptions) -> Result<Report> {
    if games.is_empty() {
        return Err(Error::config("no games declared"));
    }
    let mut by_game: BTreeMap<u8, Vec<&SessionInput>> = games.iter().map(|&g| (g, Vec::new())).collect();
    for s in sessions {
        match by_game.get_mut(&s.bivectors.game_id) {
            Some(v) => v.push(s),
            None => {
                return Err(Error::config(format!(
                    "session {} belongs to undeclared game {}",
                    s.bivectors.session_id, s.bivectors.game_id
                )))
            }
        }
    }
    if let Some((g, _)) = by_game.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::config(format!("game {g} has no sessions")));
    }
    let games: Vec<u8> = by_game.keys().copied().collect();
    let views: BTreeMap<(u8, Setting), Vec<AngularSamples>> = by_game
        .iter()
        .flat_map(|(&g, group)| {
            Setting::ALL.map(|k| ((g, k), group.iter().map(|s| s.bivectors.view(k)).collect()))
        })
        .collect();

    let mut means = Vec::with_capacity(16);
    for k in Setting::ALL {
        for &g in &games {
            let group = &views[&(g, k)];
            let m = mean_l_pooled(group)?;
            if m.n < 2 {
                return Err(Error::domain(format!("game {g} has fewer than 2 transitions")));
            }
            let mut t = [0.0; 3];
            let mut p = [1.0; 3];
            for c in 0..3 {
                let xs: Vec<f64> = group.iter().flat_map(|s| s.component(c)).collect();
                (t[c], p[c]) = t_test(&xs)?;
            }
            means.push(MeanRow {
                k,
                game_id: g,
                n: m.n,
                mean: m.mean,
                t,
                p_value: p,
                marks: p.map(|v| stars(v).unwrap_or(SignificanceMark::None)),
            });
        }
    }

    let strength_rows: Vec<StrengthRow> = games
        .iter()
        .map(|&g| {
            let row = means.iter().find(|r| r.k == Setting::K1 && r.game_id == g).expect("k1 row");
            StrengthRow {
                game_id: g,
                strength: strength(&MeanL { mean: row.mean, n: row.n }),
                n: row.n,
            }
        })
        .collect();

    let k1_samples: BTreeMap<u8, Vec<[f64; 3]>> = games
        .iter()
        .map(|&g| {
            let v = views[&(g, Setting::K1)]
                .iter()
                .flat_map(|s| s.samples.iter().map(|x| x.l))
                .collect();
            (g, v)
        })
        .collect();
    let comparisons = compare_games(&k1_samples)?;
    let arrows = arrow_checks(&strength_rows, &comparisons);

    let mut flags = Vec::new();
    let mut persistence = Vec::new();
    for &g in &games {
        let group = &views[&(g, Setting::K1)];
        match persistence_row(g, group, opts.boundary) {
            Ok(row) => persistence.push(row),
            Err(Error::Domain(msg)) => flags.push(format!("game {g}: persistence skipped, {msg}")),
            Err(e) => return Err(e),
        }
    }

    let summaries: Vec<SessionSummary> = by_game
        .values()
        .flatten()
        .map(|s| {
            let k1 = s.bivectors.view(Setting::K1);
            let m = mean_l_pooled(std::slice::from_ref(&k1)).map(|m| m.mean).unwrap_or([0.0; 3]);
            SessionSummary {
                session_id: s.bivectors.session_id.clone(),
                game_id: s.bivectors.game_id,
                ppt: k1.len(),
                p_d: s.p_d,
                mean_k1: m,
            }
        })
        .collect();
    let regression = match regression(&summaries) {
        Ok(r) => Some(r),
        Err(Error::Domain(msg)) | Err(Error::Degenerate(msg)) => {
            flags.push(format!("regression on P_D skipped, {msg}"));
            None
        }
        Err(e) => return Err(e),
    };

    let count_checks = count_checks(&by_game, &persistence);
    for c in &count_checks {
        if !c.lab_consistent {
            flags.push(format!(
                "game {}: lab counts n = {} with halves ({}, {}) do not fit {} equal sessions; \
                 halves imply {} transitions",
                c.game_id,
                c.lab_n,
                c.lab_halves.0,
                c.lab_halves.1,
                experiment::SESSIONS,
                (c.lab_halves.0 + c.lab_halves.1) / 3 + experiment::SESSIONS,
            ));
        }
        if !c.matches_lab {
            let halves = c
                .halves
                .map_or("none".to_string(), |(a, b)| format!("({a}, {b})"));
            flags.push(format!(
                "game {}: observed n = {} with halves {halves}, lab reported n = {} with ({}, {})",
                c.game_id, c.n, c.lab_n, c.lab_halves.0, c.lab_halves.1
            ));
        }
    }

    Ok(Report {
        reference: sessions.first().map_or(opts.reference, |s| s.bivectors.reference),
        boundary: opts.boundary,
        games,
        sessions: summaries,
        means,
        strength: strength_rows,
        comparisons,
        arrows,
        persistence,
        regression,
        count_checks,
        sweep: None,
        flags,
    })
}

fn persistence_row(game_id: u8, group: &[AngularSamples], boundary: usize) -> Result<PersistenceRow> {
    let combined = persistence_from_samples(group, boundary)?;
    // Same split on the normalized projection: one scalar per transition.
    let mut first = Vec::new();
    let mut second = Vec::new();
    for s in group {
        let proj = projected_111_samples(s)?;
        for (sample, v) in s.samples.iter().zip(proj) {
            if sample.t < boundary {
                first.push(v);
            } else if sample.t > boundary {
                second.push(v);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m1, m2) = (mean(&first), mean(&second));
    let (t, p) = match stats::two_sample_t(&first, &second) {
        Ok(r) => (r.statistic, r.p_value),
        Err(Error::Degenerate(_)) if m1 == m2 => (0.0, 1.0),
        Err(Error::Degenerate(_)) => (f64::MAX.copysign(m2 - m1), P_FLOOR),
        Err(e) => return Err(e),
    };
    Ok(PersistenceRow {
        game_id,
        combined,
        projected: PersistenceReport {
            boundary,
            first_mean: m1,
            second_mean: m2,
            delta: m2 - m1,
            t_statistic: t,
            p_value: p,
            n1: first.len(),
            n2: second.len(),
        },
    })
}

/// OLS of session-level k1 means on session P_D, one fit per component.
fn regression(sessions: &[SessionSummary]) -> Result<Vec<RegressionRow>> {
    let with_pd: Vec<&SessionSummary> = sessions.iter().filter(|s| s.p_d.is_some()).collect();
    if with_pd.len() < 3 {
        return Err(Error::domain(format!("{} session(s) with P_D, need 3", with_pd.len())));
    }
    let x: Vec<f64> = with_pd.iter().map(|s| s.p_d.unwrap_or_default()).collect();
    (0..3)
        .map(|c| {
            let y: Vec<f64> = with_pd.iter().map(|s| s.mean_k1[c]).collect();
            let r = stats::ols_slope(&x, &y)?;
            Ok(RegressionRow {
                component: c,
                slope: r.estimate,
                t: r.statistic,
                p_value: r.p_value,
                n: r.n,
            })
        })
        .collect()
}

fn count_checks(by_game: &BTreeMap<u8, Vec<&SessionInput>>, persistence: &[PersistenceRow]) -> Vec<CountCheck> {
    by_game
        .iter()
        .filter(|(&g, _)| (g as usize) < experiment::PPT_COUNTS.len())
        .map(|(&g, group)| {
            let i = g as usize;
            let n: usize = group.iter().map(|s| s.bivectors.samples.len()).sum();
            let halves = persistence
                .iter()
                .find(|p| p.game_id == g)
                .map(|p| (p.combined.n1, p.combined.n2));
            let lab_n = experiment::PPT_COUNTS[i];
            let lab_halves = experiment::HALF_COUNTS[i];
            let lab_consistent = lab_n % experiment::SESSIONS == 0
                && lab_halves.0 + lab_halves.1 == 3 * (lab_n - experiment::SESSIONS);
            CountCheck {
                game_id: g,
                sessions: group.len(),
                n,
                halves,
                lab_n,
                lab_halves,
                matches_lab: n == lab_n && halves == Some(lab_halves),
                lab_consistent,
            }
        })
        .collect()
}

/// Pairwise Wilcoxon rank-sum tests of k1 samples, one per component,
/// for every pair `row < col` of games.
pub fn compare_games(samples: &BTreeMap<u8, Vec<[f64; 3]>>) -> Result<Vec<Comparison>> {
    let games: Vec<u8> = samples.keys().copied().collect();
    let mut out = Vec::new();
    for (i, &a) in games.iter().enumerate() {
        for &b in &games[i + 1..] {
            let mut z = [0.0; 3];
            let mut p = [1.0; 3];
            for c in 0..3 {
                let xa: Vec<f64> = samples[&a].iter().map(|l| l[c]).collect();
                let xb: Vec<f64> = samples[&b].iter().map(|l| l[c]).collect();
                let r = stats::rank_sum(&xa, &xb)?;
                z[c] = r.statistic;
                p[c] = r.p_value;
            }
            out.push(Comparison {
                row: a,
                col: b,
                z,
                p_value: p,
                marks: p.map(|v| stars(v).unwrap_or(SignificanceMark::None)),
            });
        }
    }
    Ok(out)
}

fn arrow_checks(strength: &[StrengthRow], comparisons: &[Comparison]) -> Vec<ArrowCheck> {
    let of = |g: u8| strength.iter().find(|r| r.game_id == g).map(|r| r.strength);
    experiment::STRONGER
        .iter()
        .filter_map(|&(a, b)| {
            let (sa, sb) = (of(a)?, of(b)?);
            let cmp = comparisons
                .iter()
                .find(|c| (c.row, c.col) == (a.min(b), a.max(b)))?;
            let want = if a < b { 1.0 } else { -1.0 };
            Some(ArrowCheck {
                stronger: a,
                weaker: b,
                holds: sa > sb,
                components_agreeing: cmp.z.iter().filter(|&&z| z * want > 0.0).count(),
            })
        })
        .collect()
}

fn sweep(trajectories: &[Trajectory], report: &Report) -> Result<(Vec<SweepRow>, Vec<String>)> {
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for &g in &report.games {
        let group: Vec<&Trajectory> = trajectories.iter().filter(|t| t.game_id == g).collect();
        let n = group[0].n();
        if group.iter().any(|t| t.n() != n) {
            flags.push(format!("game {g}: sessions differ in size, reference sweep skipped"));
            continue;
        }
        let references = enumerate_lattice(n)?;
        let per_ref: Vec<Vec<(Setting, MeanL)>> = references
            .par_iter()
            .map(|r| {
                let o = r.fractions();
                let biv = group
                    .iter()
                    .map(|t| trajectory_bivectors(t, &o))
                    .collect::<Result<Vec<_>>>()?;
                Setting::ALL
                    .iter()
                    .map(|&k| {
                        let views: Vec<AngularSamples> = biv.iter().map(|b| b.view(k)).collect();
                        Ok((k, mean_l_pooled(&views)?))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        for (ki, k) in Setting::ALL.into_iter().enumerate() {
            let default = report.mean_row(k, g).expect("mean row").mean;
            for c in 0..3 {
                let vals: Vec<f64> = per_ref.iter().map(|v| v[ki].1.mean[c]).collect();
                let same = vals.iter().filter(|v| v.signum() == default[c].signum()).count();
                rows.push(SweepRow {
                    game_id: g,
                    k,
                    component: c,
                    default_mean: default[c],
                    min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                    max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    same_sign: same as f64 / vals.len() as f64,
                    references: vals.len(),
                });
            }
        }
    }
    Ok((rows, flags))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Match,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictCell {
    pub k: Setting,
    pub game_id: u8,
    pub component: usize,
    pub mean: f64,
    pub p_value: f64,
    pub mark: SignificanceMark,
    pub expected: ExpectedSign,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictGrid {
    pub cells: Vec<VerdictCell>,
    pub matches: usize,
    pub signed_cells: usize,
    pub signed_matches: usize,
    pub zero_cells: usize,
    pub zero_matches: usize,
}

pub fn verdict_for(expected: ExpectedSign, mean: f64, p: f64) -> Verdict {
    let ok = match expected {
        ExpectedSign::Positive => mean > 0.0 && p < VERDICT_ALPHA,
        ExpectedSign::Negative => mean < 0.0 && p < VERDICT_ALPHA,
        ExpectedSign::Zero => p >= VERDICT_ALPHA,
    };
    if ok {
        Verdict::Match
    } else {
        Verdict::Mismatch
    }
}

/// Compares every mean with the sign expected for rotation along R, P, S.
pub fn verdicts(report: &Report) -> VerdictGrid {
    let mut cells = Vec::with_capacity(report.means.len() * 3);
    for row in &report.means {
        let expected = row.k.expected_signs();
        for c in 0..3 {
            cells.push(VerdictCell {
                k: row.k,
                game_id: row.game_id,
                component: c,
                mean: row.mean[c],
                p_value: row.p_value[c],
                mark: row.marks[c],
                expected: expected[c],
                verdict: verdict_for(expected[c], row.mean[c], row.p_value[c]),
            });
        }
    }
    let count = |zero: bool, matched: bool| {
        cells
            .iter()
            .filter(|c| (c.expected == ExpectedSign::Zero) == zero)
            .filter(|c| !matched || c.verdict == Verdict::Match)
            .count()
    };
    VerdictGrid {
        matches: cells.iter().filter(|c| c.verdict == Verdict::Match).count(),
        signed_cells: count(false, false),
        signed_matches: count(false, true),
        zero_cells: count(true, false),
        zero_matches: count(true, true),
        cells,
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub report: Report,
    pub verdicts: VerdictGrid,
}

impl Bundle {
    pub fn new(report: Report) -> Bundle {
        let verdicts = verdicts(&report);
        Bundle { report, verdicts }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn load(dir: &Path) -> Result<Bundle> {
        let path = dir.join("report.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }
}

/// Value in 10^-3 units with `decimals` digits.
pub fn milli(v: f64, decimals: usize) -> String {
    format!("{:.*}", decimals, v * 1e3)
}

pub fn p_fmt(p: f64) -> String {
    format!("{p:.3e}")
}

pub fn table3_csv(report: &Report, decimals: usize) -> String {
    let mut out = String::from("k,game,Lx,Ly,Lz,p_x,p_y,p_z,mark_x,mark_y,mark_z,n\n");
    for r in &report.means {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k.id(),
            r.game_id,
            milli(r.mean[0], decimals),
            milli(r.mean[1], decimals),
            milli(r.mean[2], decimals),
            p_fmt(r.p_value[0]),
            p_fmt(r.p_value[1]),
            p_fmt(r.p_value[2]),
            r.marks[0],
            r.marks[1],
            r.marks[2],
            r.n
        );
    }
    out
}

pub fn table4_csv(report: &Report, decimals: usize) -> String {
    let mut out = String::from("game,strength");
    for g in &report.games {
        let _ = write!(out, ",vs_{g}");
    }
    out.push('\n');
    for s in &report.strength {
        let _ = write!(out, "{},{}", s.game_id, milli(s.strength, decimals));
        for &g in &report.games {
            let cell = report
                .comparisons
                .iter()
                .find(|c| c.row == s.game_id && c.col == g)
                .map(Comparison::cell)
                .unwrap_or_default();
            let _ = write!(out, ",{cell}");
        }
        out.push('\n');
    }
    out
}

pub fn table5_csv(report: &Report, decimals: usize) -> String {
    let mut out = String::from(
        "game,first_half,second_half,delta,t,p_value,mark,n1,n2,\
         projected_first,projected_second,projected_delta,projected_p\n",
    );
    for r in &report.persistence {
        let c = &r.combined;
        let p = &r.projected;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{},{},{},{},{},{},{},{}",
            r.game_id,
            milli(c.first_mean, decimals),
            milli(c.second_mean, decimals),
            milli(c.delta, decimals),
            c.t_statistic,
            p_fmt(c.p_value),
            stars(c.p_value).unwrap_or(SignificanceMark::None),
            c.n1,
            c.n2,
            milli(p.first_mean, decimals),
            milli(p.second_mean, decimals),
            milli(p.delta, decimals),
            p_fmt(p.p_value)
        );
    }
    out
}

pub fn verdicts_csv(grid: &VerdictGrid, decimals: usize) -> String {
    let mut out = String::from("k,game,component,mean,p_value,mark,expected,verdict\n");
    for c in &grid.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.k.id(),
            c.game_id,
            COMPONENTS[c.component],
            milli(c.mean, decimals),
            p_fmt(c.p_value),
            c.mark,
            c.expected,
            match c.verdict {
                Verdict::Match => "match",
                Verdict::Mismatch => "mismatch",
            }
        );
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("game,k,component,default_mean,min,max,same_sign,references\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{},{}",
            r.game_id,
            r.k.id(),
            COMPONENTS[r.component],
            r.default_mean,
            r.min,
            r.max,
            r.same_sign,
            r.references
        );
    }
    out
}

/// Projected coordinates of every state under setting `k`, for plotting.
pub fn trajectory_csv(trajectories: &[Trajectory], k: Setting) -> Result<String> {
    let mut out = String::from("session_id,period,x,y,z\n");
    for t in trajectories {
        for (i, s) in t.states.iter().enumerate() {
            let p = project(&s.fractions(), k)?;
            let _ = writeln!(out, "{},{},{},{},{}", t.session_id, i + 1, p.x, p.y, p.z);
        }
    }
    Ok(out)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the tables, `report.json` and plot data into `dir`, creating it if needed.
pub fn emit(bundle: &Bundle, trajectories: &[Trajectory], dir: &Path, decimals: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report = &bundle.report;
    let mut written = vec![
        write_file(dir, "table3.csv", &table3_csv(report, decimals))?,
        write_file(dir, "table4.csv", &table4_csv(report, decimals))?,
        write_file(dir, "table5.csv", &table5_csv(report, decimals))?,
        write_file(dir, "verdicts.csv", &verdicts_csv(&bundle.verdicts, decimals))?,
        write_file(dir, "report.json", &bundle.to_json())?,
    ];
    for k in Setting::ALL {
        let name = format!("trajectory_k{}.csv", k.id());
        written.push(write_file(dir, &name, &trajectory_csv(trajectories, k)?)?);
    }
    let mut samples = String::from(samples_csv_header());
    for t in trajectories {
        let biv = trajectory_bivectors(t, &report.reference)?;
        for k in Setting::ALL {
            samples_csv_rows(&biv.view(k), &mut samples);
        }
    }
    written.push(write_file(dir, "samples.csv", &samples)?);
    if let Some(rows) = &report.sweep {
        written.push(write_file(dir, "reference_sweep.csv", &sweep_csv(rows))?);
    }
    Ok(written)
}

/// Plain-text rendering of the bundle for the terminal.
pub fn render(bundle: &Bundle, decimals: usize) -> String {
    let report = &bundle.report;
    let mut out = String::new();
    let _ = writeln!(out, "Mean angular momentum (x 1e-3), reference {:?}", report.reference);
    let _ = writeln!(out, "{:>2} {:>4} {:>9} {:>9} {:>9}   n", "k", "game", "Lx", "Ly", "Lz");
    for r in &report.means {
        let cell = |c: usize| format!("{}{}", milli(r.mean[c], decimals), r.marks[c]);
        let _ = writeln!(
            out,
            "{:>2} {:>4} {:>9} {:>9} {:>9} {:>4}",
            r.k.id(),
            r.game_id,
            cell(0),
            cell(1),
            cell(2),
            r.n
        );
    }
    let _ = writeln!(out, "\nCycle strength |L| (x 1e-3) and rank-sum comparisons");
    for s in &report.strength {
        let cells: Vec<String> = report
            .comparisons
            .iter()
            .filter(|c| c.row == s.game_id)
            .map(|c| format!("vs {}: {}", c.col, c.cell()))
            .collect();
        let _ = writeln!(out, "game {}: {}  {}", s.game_id, milli(s.strength, decimals), cells.join("  "));
    }
    for a in &report.arrows {
        let _ = writeln!(
            out,
            "  {} > {}: {} ({}/3 components agree)",
            a.stronger,
            a.weaker,
            if a.holds { "holds" } else { "fails" },
            a.components_agreeing
        );
    }
    let _ = writeln!(out, "\nPersistence, split at period {}", report.boundary);
    for r in &report.persistence {
        let c = &r.combined;
        let _ = writeln!(
            out,
            "game {}: {} -> {}  delta {}{}  ({}, {})",
            r.game_id,
            milli(c.first_mean, decimals),
            milli(c.second_mean, decimals),
            milli(c.delta, decimals),
            stars(c.p_value).unwrap_or(SignificanceMark::None),
            c.n1,
            c.n2
        );
    }
    if let Some(reg) = &report.regression {
        let _ = writeln!(out, "\nSession-level OLS of k1 L on P_D");
        for r in reg {
            let _ = writeln!(
                out,
                "L{}: slope {:.4e}  t {:.3}  p {}  n {}",
                COMPONENTS[r.component],
                r.slope,
                r.t,
                p_fmt(r.p_value),
                r.n
            );
        }
    }
    let v = &bundle.verdicts;
    let _ = writeln!(
        out,
        "\nVerdicts: {}/{} match ({}/{} signed, {}/{} zero)",
        v.matches,
        v.cells.len(),
        v.signed_matches,
        v.signed_cells,
        v.zero_matches,
        v.zero_cells
    );
    for f in &report.flags {
        let _ = writeln!(out, "flag: {f}");
    }
    out
}
