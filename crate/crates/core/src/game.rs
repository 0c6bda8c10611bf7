//! Rock-Paper-Scissors-Dumb games, payoff evaluation and symmetric Nash
//! equilibria by support enumeration.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Pure strategies in canonical order `R, P, S, D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    R,
    P,
    S,
    D,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::R, Strategy::P, Strategy::S, Strategy::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Strategy {
        Strategy::ALL[i]
    }

    pub fn letter(self) -> char {
        match self {
            Strategy::R => 'R',
            Strategy::P => 'P',
            Strategy::S => 'S',
            Strategy::D => 'D',
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" => Ok(Strategy::R),
            "P" => Ok(Strategy::P),
            "S" => Ok(Strategy::S),
            "D" => Ok(Strategy::D),
            other => Err(Error::domain(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayScale {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Unstable,
    Stable,
}

/// Payoff parameters of an RPSD game.
///
/// The four treatments are indexed 0..=3: 0 = unstable/low pay, 1 = unstable/high
/// pay, 2 = stable/low pay, 3 = stable/high pay. Custom games carry no id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub pay_scale: PayScale,
    pub game_id: Option<u8>,
    pub stability: Option<Stability>,
}

impl GameSpec {
    pub const UNSTABLE: [f64; 4] = [90.0, 120.0, 20.0, 90.0];
    pub const STABLE: [f64; 4] = [60.0, 150.0, 20.0, 90.0];

    pub fn from_id(game_id: u8) -> Result<GameSpec> {
        let (stability, pay_scale) = match game_id {
            0 => (Stability::Unstable, PayScale::Low),
            1 => (Stability::Unstable, PayScale::High),
            2 => (Stability::Stable, PayScale::Low),
            3 => (Stability::Stable, PayScale::High),
            other => return Err(Error::config(format!("game id {other} not in 0..=3"))),
        };
        let [a, b, c, d] = match stability {
            Stability::Unstable => Self::UNSTABLE,
            Stability::Stable => Self::STABLE,
        };
        Ok(GameSpec {
            a,
            b,
            c,
            d,
            pay_scale,
            game_id: Some(game_id),
            stability: Some(stability),
        })
    }

    pub fn custom(a: f64, b: f64, c: f64, d: f64, pay_scale: PayScale) -> GameSpec {
        GameSpec {
            a,
            b,
            c,
            d,
            pay_scale,
            game_id: None,
            stability: None,
        }
    }

    /// Checks the treatment table when a game id is present.
    pub fn validate(&self) -> Result<()> {
        if ![self.a, self.b, self.c, self.d].iter().all(|v| v.is_finite()) {
            return Err(Error::config("payoff parameters must be finite"));
        }
        if let Some(id) = self.game_id {
            let expected = GameSpec::from_id(id)?;
            if expected != *self {
                return Err(Error::config(format!(
                    "game {id} must be {:?}/{:?} with [a b c d] = [{} {} {} {}]",
                    expected.stability.unwrap(),
                    expected.pay_scale,
                    expected.a,
                    expected.b,
                    expected.c,
                    expected.d
                )));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> PayoffMatrix {
        build_rpsd_matrix(self)
    }
}

/// Row = own strategy, column = opponent strategy, order `R, P, S, D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix(pub [[f64; 4]; 4]);

impl PayoffMatrix {
    pub fn get(&self, own: Strategy, opponent: Strategy) -> f64 {
        self.0[own.index()][opponent.index()]
    }

    pub fn scaled(&self, factor: f64) -> PayoffMatrix {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|v| *v *= factor);
        PayoffMatrix(m)
    }

    /// Largest minus smallest entry.
    pub fn spread(&self) -> f64 {
        let flat = self.0.iter().flatten();
        let max = flat.clone().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = flat.cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

pub fn build_rpsd_matrix(spec: &GameSpec) -> PayoffMatrix {
    let GameSpec { a, b, c, d, .. } = *spec;
    PayoffMatrix([
        [a, 0.0, b, c],
        [b, a, 0.0, c],
        [0.0, b, a, c],
        [d, d, d, 0.0],
    ])
}

/// A probability vector over `R, P, S, D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile([f64; 4]);

impl MixedProfile {
    pub const UNIFORM: MixedProfile = MixedProfile([0.25; 4]);

    pub fn new(p: [f64; 4]) -> Result<MixedProfile> {
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::domain(format!("probabilities out of [0,1]: {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(MixedProfile(p))
    }

    pub fn pure(s: Strategy) -> MixedProfile {
        let mut p = [0.0; 4];
        p[s.index()] = 1.0;
        MixedProfile(p)
    }

    pub fn probs(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, s: Strategy) -> f64 {
        self.0[s.index()]
    }

    pub fn max_abs_diff(&self, other: &MixedProfile) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Unchecked constructor for internal arithmetic that preserves the simplex.
    pub(crate) fn from_raw(p: [f64; 4]) -> MixedProfile {
        MixedProfile(p)
    }
}

/// Expected payoff of each pure strategy against `opponent`.
pub fn expected_payoffs(matrix: &PayoffMatrix, opponent: &MixedProfile) -> [f64; 4] {
    expected_payoffs_raw(matrix, &opponent.0)
}

pub(crate) fn expected_payoffs_raw(matrix: &PayoffMatrix, opponent: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, row) in matrix.0.iter().enumerate() {
        out[i] = row.iter().zip(opponent.iter()).map(|(m, p)| m * p).sum();
    }
    out
}

/// Payoff of mixed `own` against mixed `opponent`.
pub fn profile_payoff(matrix: &PayoffMatrix, own: &MixedProfile, opponent: &MixedProfile) -> f64 {
    expected_payoffs(matrix, opponent)
        .iter()
        .zip(own.0.iter())
        .map(|(u, p)| u * p)
        .sum()
}

const NASH_TOL: f64 = 1e-9;

/// All symmetric Nash equilibria found by enumerating the 15 nonempty supports.
///
/// Each support yields the linear system "every strategy in the support earns
/// the same payoff `v`, probabilities sum to one". Singular systems are skipped,
/// candidates with negative weights or a profitable pure deviation are
/// discarded, and duplicates from nested supports are merged.
pub fn find_symmetric_nash(matrix: &PayoffMatrix) -> Vec<MixedProfile> {
    let mut found: Vec<MixedProfile> = Vec::new();
    for mask in 1u8..16 {
        let support: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let Some(candidate) = solve_support(matrix, &support) else {
            continue;
        };
        if !is_symmetric_nash(matrix, &candidate) {
            continue;
        }
        if found
            .iter()
            .all(|f| f.max_abs_diff(&candidate) > NASH_TOL)
        {
            found.push(candidate);
        }
    }
    found
}

/// Best-response check: no pure strategy beats the profile against itself.
pub fn is_symmetric_nash(matrix: &PayoffMatrix, sigma: &MixedProfile) -> bool {
    let payoffs = expected_payoffs(matrix, sigma);
    let value = profile_payoff(matrix, sigma, sigma);
    let scale = 1.0 + matrix.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    payoffs.iter().enumerate().all(|(i, &u)| {
        let ok = u <= value + NASH_TOL * scale;
        let on_support = sigma.0[i] > NASH_TOL;
        ok && (!on_support || (u - value).abs() <= NASH_TOL * scale)
    })
}

fn solve_support(matrix: &PayoffMatrix, support: &[usize]) -> Option<MixedProfile> {
    // Unknowns: weights on the support, then the common value v.
    let k = support.len();
    let dim = k + 1;
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for (row, &i) in support.iter().enumerate() {
        for (col, &j) in support.iter().enumerate() {
            a[row][col] = matrix.0[i][j];
        }
        a[row][k] = -1.0;
    }
    for col in 0..k {
        a[k][col] = 1.0;
    }
    a[k][dim] = 1.0;

    let x = gauss_solve(a)?;
    let mut p = [0.0; 4];
    for (col, &i) in support.iter().enumerate() {
        let w = x[col];
        if w < -NASH_TOL {
            return None;
        }
        p[i] = w.max(0.0);
    }
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    Some(MixedProfile(p))
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][n] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nash_dumb() -> MixedProfile {
        MixedProfile::new([1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5]).unwrap()
    }

    #[test]
    fn matrices_match_treatments() {
        let u = GameSpec::from_id(0).unwrap().matrix();
        assert_eq!(
            u.0,
            [
                [90.0, 0.0, 120.0, 20.0],
                [120.0, 90.0, 0.0, 20.0],
                [0.0, 120.0, 90.0, 20.0],
                [90.0, 90.0, 90.0, 0.0]
            ]
        );
        let s = GameSpec::from_id(3).unwrap().matrix();
        assert_eq!(
            s.0,
            [
                [60.0, 0.0, 150.0, 20.0],
                [150.0, 60.0, 0.0, 20.0],
                [0.0, 150.0, 60.0, 20.0],
                [90.0, 90.0, 90.0, 0.0]
            ]
        );
        let z = build_rpsd_matrix(&GameSpec::custom(0.0, 0.0, 0.0, 0.0, PayScale::Low));
        assert!(z.0.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn game_ids_follow_treatment_table() {
        let expect = [
            (Stability::Unstable, PayScale::Low),
            (Stability::Unstable, PayScale::High),
            (Stability::Stable, PayScale::Low),
            (Stability::Stable, PayScale::High),
        ];
        for (id, (st, pay)) in expect.into_iter().enumerate() {
            let g = GameSpec::from_id(id as u8).unwrap();
            assert_eq!(g.stability, Some(st));
            assert_eq!(g.pay_scale, pay);
            g.validate().unwrap();
        }
        assert!(GameSpec::from_id(4).is_err());
        let mut bad = GameSpec::from_id(0).unwrap();
        bad.a = 60.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn expected_payoffs_examples() {
        let m = GameSpec::from_id(0).unwrap().matrix();
        assert_eq!(
            expected_payoffs(&m, &MixedProfile::pure(Strategy::R)),
            [90.0, 120.0, 0.0, 90.0]
        );
        let u = expected_payoffs(&m, &nash_dumb());
        for v in u {
            assert!((v - 45.0).abs() < 1e-12);
        }
        let z = GameSpec::custom(0.0, 0.0, 0.0, 0.0, PayScale::Low).matrix();
        assert_eq!(expected_payoffs(&z, &nash_dumb()), [0.0; 4]);
    }

    #[test]
    fn nash_dumb_for_both_games() {
        for id in 0..4 {
            let g = GameSpec::from_id(id).unwrap();
            let eqs = find_symmetric_nash(&g.matrix());
            assert_eq!(eqs.len(), 1, "game {id}: {eqs:?}");
            assert!(eqs[0].max_abs_diff(&nash_dumb()) < 1e-9);
            // value = d/2
            let v = profile_payoff(&g.matrix(), &eqs[0], &eqs[0]);
            assert!((v - g.d / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn coordination_game_has_all_pure_equilibria() {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let m = PayoffMatrix(m);
        let eqs = find_symmetric_nash(&m);
        // brute-force pure check
        for s in Strategy::ALL {
            let pure = MixedProfile::pure(s);
            let u = expected_payoffs(&m, &pure);
            assert!(u.iter().all(|&x| x <= u[s.index()]));
            assert!(eqs.iter().any(|e| e.max_abs_diff(&pure) < 1e-9), "{s} missing");
        }
        // nested supports of the uniform kind are equilibria too; no duplicates
        assert_eq!(eqs.len(), 15);
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("D".parse::<Strategy>().unwrap(), Strategy::D);
        assert!("X".parse::<Strategy>().is_err());
    }
}
