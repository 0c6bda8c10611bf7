//! Statistics reported for the laboratory sessions of the four treatments.
//!
//! They serve as fixtures for the reporting pipeline and as the reference for
//! sample-count bookkeeping. The raw session data is not available, so only
//! these summaries are reproducible.

use crate::metrics::BivectorSamples;
use crate::state::{Bivector6, Setting, CENTER};

/// Sessions per treatment.
pub const SESSIONS: usize = 3;

/// Mean `(L_x, L_y, L_z)` in 10^-3 units, indexed `[k - 1][game]`.
pub const MEAN_L_MILLI: [[[f64; 3]; 4]; 4] = [
    [[4.5, 4.0, 5.2], [6.7, 8.0, 6.4], [3.9, 4.2, 3.3], [5.2, 5.5, 4.2]],
    [[0.5, -0.7, 4.5], [-1.3, 0.3, 6.7], [-0.3, 0.7, 3.9], [-0.3, 1.0, 5.2]],
    [[1.2, -4.0, 0.5], [-1.5, -8.0, -1.3], [-1.0, -4.2, -0.3], [-1.3, -5.5, -0.3]],
    [[5.2, 0.7, 1.2], [6.4, -0.3, -1.5], [3.3, -0.7, -1.0], [4.2, -1.0, -1.3]],
];

/// Transitions pooled per treatment.
pub const PPT_COUNTS: [usize; 4] = [237, 217, 237, 237];

/// Cycle strength `|L|` in 10^-3 units.
pub const STRENGTH_MILLI: [f64; 4] = [7.9, 12.2, 6.6, 8.7];

/// Combined-scale sample counts of the first and second halves.
pub const HALF_COUNTS: [(usize, usize); 4] = [(351, 351), (351, 321), (351, 351), (351, 351)];

/// Predicted strength ordering: `(a, b)` means game `a` cycles harder than game `b`.
pub const STRONGER: [(u8, u8); 4] = [(1, 0), (0, 2), (1, 3), (3, 2)];

/// Mean bivector of a treatment, read off the k1, k2 and k3 rows.
pub fn mean_bivector(game: usize) -> Bivector6 {
    let [k1, k2, k3, _] = MEAN_L_MILLI.map(|rows| rows[game]);
    let rp = k1[2];
    let rs = -k1[1];
    let rd = -k3[0];
    let ps = k1[0];
    let pd = -k2[1];
    let sd = k2[0];
    Bivector6([rp, rs, rd, ps, pd, sd]).scale(1e-3)
}

/// Per-transition samples whose means equal [`mean_bivector`] exactly.
///
/// The `PPT_COUNTS[game]` samples are split over [`SESSIONS`] sessions.
/// Deviations come in cancelling pairs, with a wider spread on the D-plane
/// components so that they stay insignificant.
pub fn fixture_sessions(game: usize) -> Vec<BivectorSamples> {
    const SPREAD: [f64; 6] = [10e-3, 10e-3, 40e-3, 10e-3, 40e-3, 40e-3];
    const PATTERNS: [[f64; 6]; 3] = [
        [1.0, 0.5, -1.0, -0.5, 1.0, 0.5],
        [-0.5, 1.0, 0.5, 1.0, -0.5, 1.0],
        [1.0, -1.0, 1.0, 0.5, 0.5, -1.0],
    ];
    let mean = mean_bivector(game);
    let n = PPT_COUNTS[game];
    let mut all = Vec::with_capacity(n);
    for i in 0..n {
        let b = if n % 2 == 1 && i == n - 1 {
            mean
        } else {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let pattern = PATTERNS[(i / 2) % PATTERNS.len()];
            let mut v = mean.0;
            for c in 0..6 {
                v[c] += sign * pattern[c] * SPREAD[c];
            }
            Bivector6(v)
        };
        all.push(b);
    }
    let base = n / SESSIONS;
    let extra = n % SESSIONS;
    let mut out = Vec::with_capacity(SESSIONS);
    let mut start = 0;
    for s in 0..SESSIONS {
        let len = base + usize::from(s < extra);
        out.push(BivectorSamples {
            session_id: format!("lab-g{game}-s{}", s + 1),
            game_id: game as u8,
            reference: CENTER,
            samples: all[start..start + len]
                .iter()
                .enumerate()
                .map(|(t, b)| (t + 1, *b))
                .collect(),
        });
        start += len;
    }
    out
}

/// Published entry for setting `k`, game `game` and component `c`, in 10^-3 units.
pub fn mean_l_milli(k: Setting, game: usize, c: usize) -> f64 {
    MEAN_L_MILLI[(k.id() - 1) as usize][game][c]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_means_match_bivectors() {
        for g in 0..4 {
            let sessions = fixture_sessions(g);
            let n: usize = sessions.iter().map(|s| s.samples.len()).sum();
            assert_eq!(n, PPT_COUNTS[g]);
            let mut sum = Bivector6::default();
            for s in &sessions {
                for (_, b) in &s.samples {
                    sum = sum.add(b);
                }
            }
            let mean = sum.scale(1.0 / n as f64);
            let want = mean_bivector(g);
            for c in 0..6 {
                assert!((mean.0[c] - want.0[c]).abs() < 1e-15, "game {g} slot {c}");
            }
        }
    }
}
