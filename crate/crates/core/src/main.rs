use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cyclescope::config::{env_seed, milli_decimals, Mode, RunConfig, DEFAULT_BOUNDARY, DEFAULT_ROUNDING};
use cyclescope::game::{find_symmetric_nash, is_symmetric_nash, GameSpec, PayScale};
use cyclescope::ingest::{game_id_from_path, parse_any, states_csv};
use cyclescope::report::{analyze, emit, render, AnalysisOptions, Bundle};
use cyclescope::sim::run_sessions;
use cyclescope::state::{enumerate_lattice, lattice_csv, lattice_size, CENTER};
use cyclescope::{Error, Result, Trajectory};

#[derive(Parser)]
#[command(name = "cyclescope", version, about = "Cycle detection for RPSD game sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceMode {
    Default,
    Sweep,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pay {
    Low,
    High,
}

#[derive(Subcommand)]
enum Command {
    /// Count (and optionally list) the social states of N players.
    Lattice {
        #[arg(long)]
        n: u32,
        /// Print every state as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Symmetric Nash equilibria of a treatment or a custom RPSD game.
    Nash {
        /// 0-3 or "custom".
        #[arg(long)]
        game: String,
        #[arg(long, required_if_eq("game", "custom"))]
        a: Option<f64>,
        #[arg(long, required_if_eq("game", "custom"))]
        b: Option<f64>,
        #[arg(long, required_if_eq("game", "custom"))]
        c: Option<f64>,
        #[arg(long, required_if_eq("game", "custom"))]
        d: Option<f64>,
        #[arg(long, value_enum, default_value = "low")]
        pay: Pay,
    },
    /// Simulate sessions and write one states CSV per game.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed and CYCLESCOPE_SEED.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Analyze session CSVs and write tables, verdicts and plot data.
    Analyze {
        /// Directory of `*game<digit>*.csv` files, or individual files.
        #[arg(long = "in", num_args = 1.., required_unless_present = "config")]
        inputs: Vec<PathBuf>,
        /// Ingest-mode config listing inputs, reference and rounding.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "default")]
        reference: ReferenceMode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        boundary: Option<usize>,
        /// Table resolution in absolute units.
        #[arg(long)]
        rounding: Option<f64>,
    },
    /// Print the tables of a previous analysis.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ROUNDING)]
        rounding: f64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Lattice { n, csv } => lattice(n, csv),
        Command::Nash { game, a, b, c, d, pay } => nash(&game, [a, b, c, d], pay),
        Command::Simulate { config, out, seed } => simulate(config.as_deref(), &out, seed),
        Command::Analyze {
            inputs,
            config,
            reference,
            out,
            boundary,
            rounding,
        } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            if let Some(cfg) = &cfg {
                if cfg.mode != Mode::Ingest {
                    return Err(Error::Config("analyze needs an ingest-mode config".into()));
                }
            }
            let mut files: Vec<(PathBuf, Option<u8>)> = Vec::new();
            for p in &inputs {
                files.extend(expand_input(p)?.into_iter().map(|f| (f, None)));
            }
            if let Some(cfg) = &cfg {
                files.extend(cfg.inputs.iter().map(|i| (i.path.clone(), i.game_id)));
            }
            let opts = AnalysisOptions {
                reference: cfg.as_ref().map_or(CENTER, |c| c.reference),
                boundary: boundary.or(cfg.as_ref().map(|c| c.boundary)).unwrap_or(DEFAULT_BOUNDARY),
                sweep: matches!(reference, ReferenceMode::Sweep),
            };
            let rounding = rounding.or(cfg.as_ref().map(|c| c.rounding)).unwrap_or(DEFAULT_ROUNDING);
            analyze_files(&files, &opts, &out, rounding)
        }
        Command::Report { dir, rounding } => {
            let bundle = Bundle::load(&dir)?;
            print!("{}", render(&bundle, milli_decimals(rounding)?));
            Ok(())
        }
    }
}

fn lattice(n: u32, csv: bool) -> Result<()> {
    let states = enumerate_lattice(n)?;
    debug_assert_eq!(states.len() as u64, lattice_size(n));
    if csv {
        print!("{}", lattice_csv(&states));
    } else {
        println!("{} states for N = {n}", states.len());
    }
    Ok(())
}

fn nash(game: &str, abcd: [Option<f64>; 4], pay: Pay) -> Result<()> {
    let spec = if game == "custom" {
        let [a, b, c, d] = abcd.map(|v| v.unwrap_or_default());
        let pay = match pay {
            Pay::Low => PayScale::Low,
            Pay::High => PayScale::High,
        };
        GameSpec::custom(a, b, c, d, pay)
    } else {
        let id: u8 = game
            .parse()
            .map_err(|_| Error::Config(format!("--game must be 0-3 or custom, got '{game}'")))?;
        GameSpec::from_id(id)?
    };
    let matrix = spec.matrix();
    for sigma in find_symmetric_nash(&matrix) {
        let p = sigma.probs();
        let check = if is_symmetric_nash(&matrix, &sigma) { "ok" } else { "FAILED" };
        println!(
            "R={:.12} P={:.12} S={:.12} D={:.12}  best-response check: {check}",
            p[0], p[1], p[2], p[3]
        );
    }
    Ok(())
}

fn simulate(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cfg.mode != Mode::Simulate {
        return Err(Error::Config("simulate needs a simulate-mode config".into()));
    }
    if let Some(s) = seed.or(env_seed()?) {
        cfg.set_seed(s);
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (spec, sim, label) in cfg.resolved_games()? {
        let mut sessions = run_sessions(&sim, &spec)?;
        for (i, t) in sessions.iter_mut().enumerate() {
            t.game_id = label;
            t.session_id = format!("g{label}-s{}", i + 1);
        }
        let path = out.join(format!("states_game{label}.csv"));
        std::fs::write(&path, states_csv(&sessions)).map_err(|e| Error::io(&path, e))?;
        println!("wrote {} ({} sessions)", path.display(), sessions.len());
    }
    let path = out.join("config.json");
    let text = serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn expand_input(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.extension().is_some_and(|e| e == "csv") && game_id_from_path(&p).is_some() {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no *game<digit>*.csv files in {}", path.display())));
    }
    Ok(files)
}

fn analyze_files(files: &[(PathBuf, Option<u8>)], opts: &AnalysisOptions, out: &Path, rounding: f64) -> Result<()> {
    let decimals = milli_decimals(rounding)?;
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for (path, id) in files {
        let game = id.or_else(|| game_id_from_path(path)).ok_or_else(|| {
            Error::Config(format!("cannot tell the game of {}; name it *game<digit>*.csv", path.display()))
        })?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        trajectories.extend(parse_any(&text, game).map_err(|e| match e {
            Error::Parse { row, msg } => Error::Parse {
                row,
                msg: format!("{}: {msg}", path.display()),
            },
            other => other,
        })?);
    }
    let mut games: Vec<u8> = trajectories.iter().map(|t| t.game_id).collect();
    games.sort_unstable();
    games.dedup();
    let bundle = Bundle::new(analyze(&trajectories, &games, opts)?);
    emit(&bundle, &trajectories, out, decimals)?;
    print!("{}", render(&bundle, decimals));
    Ok(())
}
