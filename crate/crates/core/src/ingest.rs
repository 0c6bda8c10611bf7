//! CSV ingestion of experimental sessions.
//!
//! Two schemas are accepted, both with a bit-exact header:
//!
//! * actions: `session_id,period,subject_id,action` with `action` in `R,P,S,D`
//! * states:  `session_id,period,n_R,n_P,n_S,n_D`
//!
//! Periods are 1-based and must be contiguous within a session. Fields may be
//! padded with whitespace and lines may end in CRLF. Row numbers in errors are
//! 1-based file lines (the header is row 1).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::game::Strategy;
use crate::metrics::Trajectory;
use crate::state::SocialState;

pub const ACTIONS_HEADER: &str = "session_id,period,subject_id,action";
pub const STATES_HEADER: &str = "session_id,period,n_R,n_P,n_S,n_D";

fn valid_label(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Non-blank lines split into trimmed fields, with their row numbers.
fn rows<'a>(text: &'a str, header: &str, width: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    let Some((_, first)) = lines.next() else {
        return Err(Error::parse(1, format!("empty input, expected header '{header}'")));
    };
    let got: Vec<&str> = first.trim_start_matches('\u{feff}').split(',').map(str::trim).collect();
    if got.join(",") != header {
        return Err(Error::parse(1, format!("expected header '{header}', got '{}'", first.trim())));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(Error::parse(
                row,
                format!("expected {width} fields, got {}", fields.len()),
            ));
        }
        if !valid_label(fields[0]) {
            return Err(Error::parse(row, format!("invalid session id '{}'", fields[0])));
        }
        out.push((row, fields));
    }
    Ok(out)
}

fn parse_period(row: usize, s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(p) if p >= 1 => Ok(p),
        _ => Err(Error::parse(row, format!("period '{s}' is not a positive integer"))),
    }
}

fn parse_count(row: usize, s: &str) -> Result<u32> {
    if s.starts_with('-') {
        return Err(Error::parse(row, format!("negative count '{s}'")));
    }
    s.parse::<u32>()
        .map_err(|_| Error::parse(row, format!("count '{s}' is not a non-negative integer")))
}

/// Keeps sessions in order of first appearance.
struct SessionOrder<'a> {
    order: Vec<&'a str>,
    seen: HashSet<&'a str>,
}

impl<'a> SessionOrder<'a> {
    fn new() -> Self {
        SessionOrder {
            order: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn note(&mut self, s: &'a str) {
        if self.seen.insert(s) {
            self.order.push(s);
        }
    }
}

/// Checks periods are exactly `1..=T`; `periods` maps period -> first row.
fn check_contiguous(session: &str, periods: &BTreeMap<usize, usize>) -> Result<()> {
    for (expected, (&period, &row)) in (1usize..).zip(periods.iter()) {
        if period != expected {
            return Err(Error::parse(
                row,
                format!("session {session}: missing period {expected}"),
            ));
        }
    }
    Ok(())
}

pub fn parse_states(text: &str, game_id: u8) -> Result<Vec<Trajectory>> {
    let rows = rows(text, STATES_HEADER, 6)?;
    let mut order = SessionOrder::new();
    let mut sessions: HashMap<&str, BTreeMap<usize, (usize, SocialState)>> = HashMap::new();
    for (row, f) in &rows {
        let period = parse_period(*row, f[1])?;
        let mut counts = [0u32; 4];
        for (c, field) in counts.iter_mut().zip(&f[2..]) {
            *c = parse_count(*row, field)?;
        }
        let state = SocialState { counts };
        if state.n() == 0 {
            return Err(Error::parse(*row, "state has zero players"));
        }
        order.note(f[0]);
        let periods = sessions.entry(f[0]).or_default();
        if periods.insert(period, (*row, state)).is_some() {
            return Err(Error::parse(
                *row,
                format!("session {}: duplicate period {period}", f[0]),
            ));
        }
    }
    let mut out = Vec::with_capacity(order.order.len());
    for session in order.order {
        let periods = &sessions[session];
        let first_rows: BTreeMap<usize, usize> = periods.iter().map(|(p, (r, _))| (*p, *r)).collect();
        check_contiguous(session, &first_rows)?;
        let n = periods.values().next().map(|(_, s)| s.n()).unwrap_or(0);
        if let Some((row, s)) = periods.values().find(|(_, s)| s.n() != n) {
            return Err(Error::parse(
                *row,
                format!("session {session}: state sums to {}, expected N = {n}", s.n()),
            ));
        }
        let states = periods.values().map(|(_, s)| *s).collect();
        out.push(Trajectory::new(session, game_id, states)?);
    }
    Ok(out)
}

pub fn parse_actions(text: &str, game_id: u8) -> Result<Vec<Trajectory>> {
    let rows = rows(text, ACTIONS_HEADER, 4)?;
    let mut order = SessionOrder::new();
    // session -> period -> (first row, subjects, counts)
    type PeriodData<'a> = (usize, HashSet<&'a str>, [u32; 4]);
    let mut sessions: HashMap<&str, BTreeMap<usize, PeriodData>> = HashMap::new();
    for (row, f) in &rows {
        let period = parse_period(*row, f[1])?;
        if !valid_label(f[2]) {
            return Err(Error::parse(*row, format!("invalid subject id '{}'", f[2])));
        }
        let action: Strategy = f[3]
            .parse()
            .map_err(|_| Error::parse(*row, format!("unknown action '{}'", f[3])))?;
        order.note(f[0]);
        let entry = sessions
            .entry(f[0])
            .or_default()
            .entry(period)
            .or_insert_with(|| (*row, HashSet::new(), [0; 4]));
        if !entry.1.insert(f[2]) {
            return Err(Error::parse(
                *row,
                format!("session {}: subject {} appears twice in period {period}", f[0], f[2]),
            ));
        }
        entry.2[action.index()] += 1;
    }
    let mut out = Vec::with_capacity(order.order.len());
    for session in order.order {
        let periods = &sessions[session];
        let first_rows: BTreeMap<usize, usize> = periods.iter().map(|(p, (r, _, _))| (*p, *r)).collect();
        check_contiguous(session, &first_rows)?;
        let n = periods.values().next().map(|(_, s, _)| s.len()).unwrap_or(0);
        if let Some((row, s, _)) = periods.values().find(|(_, s, _)| s.len() != n) {
            return Err(Error::parse(
                *row,
                format!("session {session}: inconsistent N, {} subjects instead of {n}", s.len()),
            ));
        }
        let states = periods.values().map(|(_, _, c)| SocialState { counts: *c }).collect();
        out.push(Trajectory::new(session, game_id, states)?);
    }
    Ok(out)
}

/// Dispatches on the header line.
pub fn parse_any(text: &str, game_id: u8) -> Result<Vec<Trajectory>> {
    let header: Vec<&str> = text
        .lines()
        .next()
        .unwrap_or("")
        .trim_start_matches('\u{feff}')
        .split(',')
        .map(str::trim)
        .collect();
    if header.join(",") == ACTIONS_HEADER {
        parse_actions(text, game_id)
    } else {
        parse_states(text, game_id)
    }
}

/// Game id from the first `game<digits>` in a file name, e.g. `states_game2.csv`.
pub fn game_id_from_path(path: &Path) -> Option<u8> {
    let name = path.file_name()?.to_str()?;
    name.match_indices("game").find_map(|(i, m)| {
        let rest = &name[i + m.len()..];
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        rest[..end].parse().ok()
    })
}

/// Writes trajectories in the states schema; the inverse of [`parse_states`].
pub fn states_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::with_capacity(64 + 24 * trajectories.iter().map(|t| t.states.len()).sum::<usize>());
    out.push_str(STATES_HEADER);
    out.push('\n');
    for t in trajectories {
        for (i, s) in t.states.iter().enumerate() {
            let [r, p, sc, d] = s.counts;
            out.push_str(&format!("{},{},{r},{p},{sc},{d}\n", t.session_id, i + 1));
        }
    }
    out
}
