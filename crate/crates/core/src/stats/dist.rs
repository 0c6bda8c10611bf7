//! Reference distributions for the tests, backed by `statrs`.
//!
//! Tail probabilities go through the survival function so p-values of large
//! statistics stay accurate instead of collapsing to `1 - 1`.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn normal_cdf(z: f64) -> f64 {
    standard_normal().cdf(z)
}

/// `P(|Z| >= |z|)`.
pub fn normal_two_sided(z: f64) -> f64 {
    (2.0 * standard_normal().sf(z.abs())).min(1.0)
}

/// # Panics
/// If `df` is not positive.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").cdf(t)
}

/// `P(|T| >= |t|)` with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    (2.0 * StudentsT::new(0.0, 1.0, df).expect("df > 0").sf(t.abs())).min(1.0)
}
