//! Social-state lattice, the four coordinate settings and the 4D bivector
//! from which every setting's 3D angular momentum is read.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::game::Strategy;

/// Point on the probability simplex over `R, P, S, D`.
pub type Simplex4 = [f64; 4];

/// The uniform mixture `(1,1,1,1)/4`, the default reference point.
pub const CENTER: Simplex4 = [0.25; 4];

/// Strategy counts `(n_R, n_P, n_S, n_D)` of a population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SocialState {
    pub counts: [u32; 4],
}

impl SocialState {
    pub fn new(counts: [u32; 4]) -> Result<SocialState> {
        if counts.iter().sum::<u32>() == 0 {
            return Err(Error::domain("social state with zero players"));
        }
        Ok(SocialState { counts })
    }

    pub fn pure(s: Strategy, n: u32) -> SocialState {
        let mut counts = [0; 4];
        counts[s.index()] = n;
        SocialState { counts }
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn count(&self, s: Strategy) -> u32 {
        self.counts[s.index()]
    }

    pub fn fractions(&self) -> Simplex4 {
        let n = self.n() as f64;
        self.counts.map(|c| c as f64 / n)
    }
}

impl fmt::Display for SocialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, p, s, d] = self.counts;
        write!(f, "({r},{p},{s},{d})")
    }
}

/// Number of lattice states for `n` players: `(n+1)(n+2)(n+3)/6`.
pub fn lattice_size(n: u32) -> u64 {
    let n = n as u64;
    (n + 1) * (n + 2) * (n + 3) / 6
}

/// Every social state of `n` players, ordered lexicographically by `(n_R, n_P, n_S)`.
pub fn enumerate_lattice(n: u32) -> Result<Vec<SocialState>> {
    if n == 0 {
        return Err(Error::domain("lattice needs at least one player"));
    }
    let mut out = Vec::with_capacity(lattice_size(n) as usize);
    for r in 0..=n {
        for p in 0..=n - r {
            for s in 0..=n - r - p {
                out.push(SocialState {
                    counts: [r, p, s, n - r - p - s],
                });
            }
        }
    }
    Ok(out)
}

pub fn lattice_csv(states: &[SocialState]) -> String {
    let mut out = String::from("n_R,n_P,n_S,n_D\n");
    for s in states {
        let [r, p, sc, d] = s.counts;
        out.push_str(&format!("{r},{p},{sc},{d}\n"));
    }
    out
}

/// One of the four projections of the simplex into a trirectangular tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Setting {
    K1,
    K2,
    K3,
    K4,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::K1, Setting::K2, Setting::K3, Setting::K4];

    pub fn id(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_id(k: u8) -> Result<Setting> {
        match k {
            1 => Ok(Setting::K1),
            2 => Ok(Setting::K2),
            3 => Ok(Setting::K3),
            4 => Ok(Setting::K4),
            other => Err(Error::domain(format!("setting k{other} does not exist"))),
        }
    }

    /// Strategies on the x, y and z axes.
    pub fn axes(self) -> [Strategy; 3] {
        use Strategy::*;
        match self {
            Setting::K1 => [R, P, S],
            Setting::K2 => [P, S, D],
            Setting::K3 => [S, D, R],
            Setting::K4 => [D, R, P],
        }
    }

    /// Strategy placed at the origin.
    pub fn origin(self) -> Strategy {
        use Strategy::*;
        match self {
            Setting::K1 => D,
            Setting::K2 => R,
            Setting::K3 => P,
            Setting::K4 => S,
        }
    }

    /// Expected sign of `(L_x, L_y, L_z)` for rotation along `R -> P -> S -> R`.
    pub fn expected_signs(self) -> [ExpectedSign; 3] {
        use ExpectedSign::*;
        match self {
            Setting::K1 => [Positive, Positive, Positive],
            Setting::K2 => [Zero, Zero, Positive],
            Setting::K3 => [Zero, Negative, Zero],
            Setting::K4 => [Positive, Zero, Zero],
        }
    }
}

impl TryFrom<u8> for Setting {
    type Error = Error;
    fn try_from(k: u8) -> Result<Setting> {
        Setting::from_id(k)
    }
}

impl From<Setting> for u8 {
    fn from(k: Setting) -> u8 {
        k.id()
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedSign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
}

impl fmt::Display for ExpectedSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpectedSign::Positive => "+",
            ExpectedSign::Negative => "-",
            ExpectedSign::Zero => "0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Point3 {
        Point3 { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn cross(self, v: Point3) -> Point3 {
        Point3::new(
            self.y * v.z - self.z * v.y,
            self.z * v.x - self.x * v.z,
            self.x * v.y - self.y * v.x,
        )
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

pub(crate) fn check_simplex(p: &Simplex4) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if !p.iter().all(|v| v.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("not a simplex point: {p:?}")));
    }
    Ok(())
}

/// Reads the three axis coordinates of `point` under setting `k`.
pub fn project(point: &Simplex4, k: Setting) -> Result<Point3> {
    check_simplex(point)?;
    Ok(project_unchecked(point, k))
}

pub(crate) fn project_unchecked(point: &Simplex4, k: Setting) -> Point3 {
    let [x, y, z] = k.axes().map(|s| point[s.index()]);
    Point3::new(x, y, z)
}

/// Antisymmetric part of the outer product of two displacement vectors,
/// stored as the upper triangle `(RP, RS, RD, PS, PD, SD)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bivector6(pub [f64; 6]);

impl Bivector6 {
    /// Upper-triangle pairs in storage order.
    pub const PAIRS: [(Strategy, Strategy); 6] = {
        use Strategy::*;
        [(R, P), (R, S), (R, D), (P, S), (P, D), (S, D)]
    };

    fn slot(i: usize, j: usize) -> usize {
        match (i, j) {
            (0, 1) => 0,
            (0, 2) => 1,
            (0, 3) => 2,
            (1, 2) => 3,
            (1, 3) => 4,
            (2, 3) => 5,
            _ => unreachable!("not an upper-triangle pair"),
        }
    }

    /// `B_ij`, resolving reversed pairs by negation.
    pub fn component(&self, i: Strategy, j: Strategy) -> f64 {
        let (i, j) = (i.index(), j.index());
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.0[Self::slot(i, j)],
            std::cmp::Ordering::Greater => -self.0[Self::slot(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn from_displacements(u: &Simplex4, v: &Simplex4) -> Bivector6 {
        let mut b = [0.0; 6];
        for (slot, (i, j)) in Self::PAIRS.iter().enumerate() {
            let (i, j) = (i.index(), j.index());
            b[slot] = u[i] * v[j] - u[j] * v[i];
        }
        Bivector6(b)
    }

    pub fn negated(&self) -> Bivector6 {
        Bivector6(self.0.map(|v| -v))
    }

    /// `(L_x, L_y, L_z)` as seen under setting `k`.
    pub fn view(&self, k: Setting) -> [f64; 3] {
        let [p, q, r] = k.axes();
        [
            self.component(q, r),
            self.component(r, p),
            self.component(p, q),
        ]
    }

    pub fn add(&self, other: &Bivector6) -> Bivector6 {
        let mut b = self.0;
        b.iter_mut().zip(other.0.iter()).for_each(|(a, o)| *a += o);
        Bivector6(b)
    }

    pub fn scale(&self, f: f64) -> Bivector6 {
        Bivector6(self.0.map(|v| v * f))
    }
}

/// Bivector of the transition `from -> to` about reference `o`.
pub fn bivector(from: &Simplex4, to: &Simplex4, o: &Simplex4) -> Result<Bivector6> {
    check_simplex(from)?;
    check_simplex(to)?;
    check_simplex(o)?;
    Ok(bivector_unchecked(from, to, o))
}

pub(crate) fn bivector_unchecked(from: &Simplex4, to: &Simplex4, o: &Simplex4) -> Bivector6 {
    let u = displacement(from, o);
    let v = displacement(to, o);
    Bivector6::from_displacements(&u, &v)
}

fn displacement(p: &Simplex4, o: &Simplex4) -> Simplex4 {
    [p[0] - o[0], p[1] - o[1], p[2] - o[2], p[3] - o[3]]
}

pub fn l_from_bivector(b: &Bivector6, k: Setting) -> [f64; 3] {
    b.view(k)
}
