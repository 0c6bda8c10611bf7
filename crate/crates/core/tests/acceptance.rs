//! Acceptance checks, one per criterion. Runs without the libtest harness so
//! that every PASS/FAIL line is printed; exits non-zero if any check fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cyclescope::experiment;
use cyclescope::game::{find_symmetric_nash, is_symmetric_nash, GameSpec};
use cyclescope::ingest::{parse_states, states_csv};
use cyclescope::metrics::{persistence_split, trajectory_bivectors, trajectory_samples};
use cyclescope::report::{analyze, AnalysisOptions};
use cyclescope::sim::{calibrate_default, run_sessions, SimConfig};
use cyclescope::state::{enumerate_lattice, l_from_bivector, lattice_size, Bivector6, Setting, SocialState, CENTER};
use cyclescope::stats::dist::student_t_cdf;
use cyclescope::stats::{one_sample_t, rank_sum};
use cyclescope::Trajectory;

type Outcome = Result<String, String>;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cyclescope"))
}

fn run_bin(args: &[&str]) -> Result<String, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "cyclescope {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, || format!("{what} took {took:?}, limit {limit:?}"))
}

fn lattice_count() -> Outcome {
    let start = Instant::now();
    let out = run_bin(&["lattice", "--n", "12"])?;
    within(Duration::from_secs(1), start, "lattice --n 12")?;
    check(out.trim() == "455 states for N = 12", || format!("unexpected output '{}'", out.trim()))?;
    for n in 1..=20u32 {
        let formula = u64::from((n + 1) * (n + 2) * (n + 3) / 6);
        let listed = enumerate_lattice(n).map_err(|e| e.to_string())?.len() as u64;
        check(lattice_size(n) == formula && listed == formula, || {
            format!("N = {n}: size {} listed {listed} formula {formula}", lattice_size(n))
        })?;
    }
    Ok("455 states; closed formula holds for N = 1..20".into())
}

fn nash_dumb() -> Outcome {
    let want = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5];
    for g in ["0", "1", "2", "3"] {
        let out = run_bin(&["nash", "--game", g])?;
        let lines: Vec<&str> = out.lines().collect();
        check(lines.len() == 1, || format!("game {g}: {} equilibria", lines.len()))?;
        check(lines[0].ends_with("best-response check: ok"), || lines[0].to_string())?;
        let probs: Vec<f64> = lines[0]
            .split_whitespace()
            .take(4)
            .map(|f| f[2..].parse::<f64>().unwrap())
            .collect();
        for (p, w) in probs.iter().zip(want) {
            check((p - w).abs() <= 1e-9, || format!("game {g}: {probs:?}"))?;
        }
        let m = GameSpec::from_id(g.parse().unwrap()).unwrap().matrix();
        let eq = find_symmetric_nash(&m);
        check(eq.len() == 1 && is_symmetric_nash(&m, &eq[0]), || format!("game {g}: {eq:?}"))?;
        for (p, w) in eq[0].probs().iter().zip(want) {
            check((p - w).abs() <= 1e-9, || format!("game {g}: {:?}", eq[0]))?;
        }
    }
    Ok("(1/6, 1/6, 1/6, 1/2) for games 0-3, best-response verified".into())
}

/// Bivector means read off the k1, k2 and k3 rows of the lab table.
fn lab_bivector(game: usize) -> Bivector6 {
    let row = |k: usize| experiment::MEAN_L_MILLI[k - 1][game];
    // k1 = (R,P,S;D): x = PS, y = SR, z = RP
    // k2 = (P,S,D;R): x = SD, y = DP
    // k3 = (S,D,R;P): x = DR
    let (ps, sr, rp) = (row(1)[0], row(1)[1], row(1)[2]);
    let (sd, dp) = (row(2)[0], row(2)[1]);
    let dr = row(3)[0];
    Bivector6([rp, -sr, -dr, ps, -dp, sd]).scale(1e-3)
}

fn table3_consistency() -> Outcome {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for game in 0..4 {
        let b = lab_bivector(game);
        for k in Setting::ALL {
            let l = l_from_bivector(&b, k);
            for c in 0..3 {
                checked += 1;
                let got = format!("{:.1}", l[c] * 1e3);
                let want = format!("{:.1}", experiment::MEAN_L_MILLI[k.id() as usize - 1][game][c]);
                if got != want {
                    mismatches.push(format!("{k} game {game} c{c}: {got} vs {want}"));
                }
            }
        }
    }
    check(checked == 48 && mismatches.is_empty(), || format!("{mismatches:?}"))?;
    Ok(format!("{checked} entries, 0 mismatches"))
}

fn table4_strength() -> Outcome {
    let s: Vec<f64> = (0..4)
        .map(|g| {
            let l = experiment::MEAN_L_MILLI[0][g];
            l.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    for (g, (got, want)) in s.iter().zip(experiment::STRENGTH_MILLI).enumerate() {
        check((got - want).abs() <= 0.06, || format!("game {g}: {got:.3} vs {want}"))?;
    }
    check(s[1] > s[3] && s[3] > s[0] && s[0] > s[2], || format!("order {s:?}"))?;
    Ok(format!(
        "|L| = ({:.3}, {:.3}, {:.3}, {:.3}) x 1e-3, order 1 > 3 > 0 > 2",
        s[0], s[1], s[2], s[3]
    ))
}

fn random_state(rng: &mut ChaCha8Rng, states: &[SocialState]) -> SocialState {
    states[rng.gen_range(0..states.len())]
}

fn random_simplex_point(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let e: [f64; 4] = std::array::from_fn(|_| -rng.gen::<f64>().max(1e-300).ln());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn closed_loops() -> Outcome {
    let start = Instant::now();
    let lattice = enumerate_lattice(12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let len = rng.gen_range(2..=40);
        let mut states: Vec<SocialState> = (0..len - 1).map(|_| random_state(&mut rng, &lattice)).collect();
        states.push(states[0]);
        let traj = Trajectory::new(format!("loop{trial}"), 0, states).unwrap();
        let refs: Vec<[f64; 4]> = (0..50).map(|_| random_simplex_point(&mut rng)).collect();
        for k in Setting::ALL {
            let sums: Vec<[f64; 3]> = refs
                .iter()
                .map(|o| {
                    let s = trajectory_samples(&traj, o, k).unwrap();
                    let mut acc = [0.0; 3];
                    for x in &s.samples {
                        for c in 0..3 {
                            acc[c] += x.l[c];
                        }
                    }
                    acc
                })
                .collect();
            for s in &sums[1..] {
                for c in 0..3 {
                    worst = worst.max((s[c] - sums[0][c]).abs());
                }
            }
        }
    }
    within(Duration::from_secs(10), start, "1000 loops")?;
    check(worst < 1e-10, || format!("largest deviation {worst:e}"))?;
    Ok(format!("largest L-sum deviation {worst:.2e} in {:?}", start.elapsed()))
}

fn null_calibration() -> Outcome {
    let start = Instant::now();
    let lattice = enumerate_lattice(12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let reps = 2000;
    let mut rejections = [0usize; 3];
    for r in 0..reps {
        let states: Vec<SocialState> = (0..238).map(|_| random_state(&mut rng, &lattice)).collect();
        let traj = Trajectory::new(format!("null{r}"), 0, states).unwrap();
        let s = trajectory_samples(&traj, &CENTER, Setting::K1).unwrap();
        for (c, rej) in rejections.iter_mut().enumerate() {
            if one_sample_t(&s.component(c), 0.0).unwrap().p_value < 0.05 {
                *rej += 1;
            }
        }
    }
    within(Duration::from_secs(30), start, "null calibration")?;
    let rates = rejections.map(|n| n as f64 / reps as f64);
    check(rates.iter().all(|r| (0.03..=0.07).contains(r)), || format!("rates {rates:?}"))?;
    Ok(format!("rejection rates {rates:?} over {reps} trajectories"))
}

fn pooled_column(sessions: &[Trajectory], k: Setting, c: usize) -> Vec<f64> {
    sessions
        .iter()
        .flat_map(|t| trajectory_bivectors(t, &CENTER).unwrap().view(k).component(c))
        .collect()
}

/// (k, component) of the six cells expected to show no rotation.
const ZERO_CELLS: [(Setting, usize); 6] = [
    (Setting::K2, 0),
    (Setting::K2, 1),
    (Setting::K3, 0),
    (Setting::K3, 2),
    (Setting::K4, 1),
    (Setting::K4, 2),
];

fn simulated_direction() -> Outcome {
    let start = Instant::now();
    let cal = calibrate_default().map_err(|e| e.to_string())?;
    let base = SimConfig {
        sessions: 100,
        periods: 80,
        lambda: cal.best.lambda,
        rho: cal.best.rho,
        ..SimConfig::default()
    };
    let game = GameSpec::from_id(0).unwrap();
    let eval = SimConfig { seed: 1, ..base.clone() };
    let sessions = run_sessions(&eval, &game).map_err(|e| e.to_string())?;
    let signed = [
        (Setting::K1, 0, 1.0),
        (Setting::K1, 1, 1.0),
        (Setting::K1, 2, 1.0),
        (Setting::K2, 2, 1.0),
        (Setting::K4, 0, 1.0),
        (Setting::K3, 1, -1.0),
    ];
    for (k, c, sign) in signed {
        let r = one_sample_t(&pooled_column(&sessions, k, c), 0.0).unwrap();
        check(r.estimate * sign > 0.0 && r.p_value < 0.01, || {
            format!("{k} component {c}: mean {:.3e} p {:.3e}", r.estimate, r.p_value)
        })?;
    }
    let meta = 200;
    let mut all_quiet = 0;
    let mut cell_quiet = [0usize; 6];
    for m in 0..meta {
        let cfg = SimConfig { seed: 1000 + m, ..base.clone() };
        let sessions = run_sessions(&cfg, &game).map_err(|e| e.to_string())?;
        let mut quiet = true;
        for (i, &(k, c)) in ZERO_CELLS.iter().enumerate() {
            let p = one_sample_t(&pooled_column(&sessions, k, c), 0.0).unwrap().p_value;
            if p >= 0.05 {
                cell_quiet[i] += 1;
            } else {
                quiet = false;
            }
        }
        all_quiet += usize::from(quiet);
    }
    within(Duration::from_secs(120), start, "simulated direction")?;
    let joint = all_quiet as f64 / meta as f64;
    let per_cell = cell_quiet.map(|n| n as f64 / meta as f64);
    check(joint >= 0.8, || format!("all six zero cells quiet in {joint:.3} of replications, per cell {per_cell:?}"))?;
    Ok(format!(
        "lambda {} rho {}; signed cells p < 0.01; zero cells all quiet in {:.1}% of {meta} replications (per cell min {:.1}%)",
        cal.best.lambda,
        cal.best.rho,
        100.0 * joint,
        100.0 * per_cell.iter().copied().fold(1.0, f64::min)
    ))
}

fn persistence_bookkeeping() -> Outcome {
    let mut trajectories = Vec::new();
    for g in 0..4u8 {
        let game = GameSpec::from_id(g).unwrap();
        let cfg = SimConfig { seed: 8, ..SimConfig::default() };
        let sessions = run_sessions(&cfg, &game).map_err(|e| e.to_string())?;
        let rep = persistence_split(&sessions, &CENTER, 40).map_err(|e| e.to_string())?;
        check((rep.n1, rep.n2) == (351, 351), || format!("game {g}: ({}, {})", rep.n1, rep.n2))?;
        trajectories.extend(sessions);
    }
    let report = analyze(&trajectories, &[0, 1, 2, 3], &AnalysisOptions::default()).map_err(|e| e.to_string())?;
    let flagged = report.flags.iter().filter(|f| f.starts_with("game 1:")).count();
    check(flagged >= 1, || format!("no game-1 flag in {:?}", report.flags))?;
    check(!report.flags.iter().any(|f| f.starts_with("game 0:") || f.starts_with("game 2:") || f.starts_with("game 3:")), || {
        format!("unexpected flags {:?}", report.flags)
    })?;
    Ok(format!("(351, 351) for every game; {flagged} game-1 count flag(s) raised"))
}

/// Gamma function at integer and half-integer arguments.
fn gamma_half(x2: u32) -> f64 {
    // x = x2 / 2
    if x2 % 2 == 0 {
        (1..x2 / 2).map(f64::from).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut k = 1;
        while k < x2 {
            g *= f64::from(k) / 2.0;
            k += 2;
        }
        g
    }
}

/// Student t CDF by composite Simpson integration of the density.
fn t_cdf_oracle(t: f64, df: u32) -> f64 {
    let nu = f64::from(df);
    let norm = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    let f = |x: f64| norm * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let steps = 20_000;
    let h = t.abs() / steps as f64;
    let mut acc = f(0.0) + f(t.abs());
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    let half = acc * h / 3.0;
    0.5 + half.copysign(t)
}

/// Two-sided rank-sum p by enumerating every assignment of the pooled ranks.
fn rank_sum_oracle(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    // doubled midranks
    let rank2: Vec<i64> = pooled
        .iter()
        .map(|x| {
            let below = pooled.iter().filter(|y| *y < x).count() as i64;
            let ties = pooled.iter().filter(|y| *y == x).count() as i64;
            2 * below + ties + 1
        })
        .collect();
    let n1 = a.len();
    let total2: i64 = rank2.iter().sum();
    // centre of W, doubled: n1 * (n + 1)
    let centre2 = (n1 * (n + 1)) as i64;
    let obs2: i64 = rank2[..n1].iter().sum();
    let dev = (obs2 - centre2).abs();
    let _ = total2;
    let (mut extreme, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let w2: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rank2[i]).sum();
        all += 1;
        if (w2 - centre2).abs() >= dev {
            extreme += 1;
        }
    }
    extreme as f64 / all as f64
}

fn statistics_oracles() -> Outcome {
    let r = one_sample_t(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0).unwrap();
    let oracle_p = 2.0 * (1.0 - t_cdf_oracle(r.statistic, 4));
    check((r.p_value - oracle_p).abs() <= 1e-3 && (r.p_value - 0.0132).abs() <= 1e-3, || {
        format!("p {} oracle {oracle_p}", r.p_value)
    })?;
    let mut worst = 0.0f64;
    for (i, t) in (0..20).map(|i| (i, -4.0 + 0.45 * i as f64)) {
        let df = [1, 2, 3, 4, 5, 7, 10, 30][i % 8];
        worst = worst.max((student_t_cdf(t, f64::from(df)) - t_cdf_oracle(t, df)).abs());
    }
    check(worst <= 1e-8, || format!("t CDF off by {worst:e}"))?;

    let mut sizes: Vec<(usize, usize)> = (1..10).flat_map(|a| (1..=10 - a).map(move |b| (a, b))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    while sizes.len() < 200 {
        let a = rng.gen_range(1..10);
        let b = rng.gen_range(1..=10 - a);
        sizes.push((a, b));
    }
    let mut exact_matches = 0;
    for (n1, n2) in &sizes {
        // small integers force ties
        let a: Vec<f64> = (0..*n1).map(|_| f64::from(rng.gen_range(0..6u8))).collect();
        let b: Vec<f64> = (0..*n2).map(|_| f64::from(rng.gen_range(0..6u8))).collect();
        let got = rank_sum(&a, &b).map(|r| r.p_value);
        let want = rank_sum_oracle(&a, &b);
        match got {
            Ok(p) if p == want => exact_matches += 1,
            // all values tied: no test possible
            Err(_) if a.iter().chain(&b).all(|v| *v == a[0]) => exact_matches += 1,
            other => return Err(format!("{a:?} vs {b:?}: {other:?}, oracle {want}")),
        }
    }
    Ok(format!(
        "t p = {:.5} (oracle {oracle_p:.5}); t CDF max error {worst:.1e}; rank-sum {exact_matches}/200 exact",
        r.p_value
    ))
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    run_bin(&["simulate", "--seed", "7", "--out", &d("sim")])?;
    run_bin(&["analyze", "--in", &d("sim"), "--out", &d("a1")])?;
    run_bin(&["analyze", "--in", &d("sim"), "--out", &d("a2")])?;
    let r1 = std::fs::read(dir.path().join("a1/report.json")).map_err(|e| e.to_string())?;
    let r2 = std::fs::read(dir.path().join("a2/report.json")).map_err(|e| e.to_string())?;
    check(r1 == r2, || "report.json differs between runs".into())?;

    let cfg = SimConfig { seed: 7, ..SimConfig::default() };
    let game = GameSpec::from_id(0).unwrap();
    let sessions = run_sessions(&cfg, &game).map_err(|e| e.to_string())?;
    let parsed = parse_states(&states_csv(&sessions), 0).map_err(|e| e.to_string())?;
    check(parsed == sessions, || "re-ingested trajectories differ".into())?;
    let written = std::fs::read_to_string(dir.path().join("sim/states_game0.csv")).map_err(|e| e.to_string())?;
    let from_cli = parse_states(&written, 0).map_err(|e| e.to_string())?;
    check(from_cli == sessions, || "CLI export differs from in-memory simulation".into())?;
    Ok(format!("report.json identical ({} bytes); export round-trips", r1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("lattice count", lattice_count),
        ("Nash-Dumb", nash_dumb),
        ("mean table internal consistency", table3_consistency),
        ("cycle strength", table4_strength),
        ("closed-loop reference independence", closed_loops),
        ("null calibration", null_calibration),
        ("simulated direction", simulated_direction),
        ("persistence bookkeeping", persistence_bookkeeping),
        ("statistics oracles", statistics_oracles),
        ("end-to-end determinism and round-trip", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{:.2?}]", i + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{:.2?}]", i + 1, start.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
