//! Cycle detection for discrete-time evolutionary game trajectories.
//!
//! The crate measures rotation in a population's social-state trajectory by
//! averaging the per-transition angular momentum `L(t) = [x(t) - o] x [x(t+1) - o]`
//! and testing the averages against zero. It ships with a Rock-Paper-Scissors-Dumb
//! game model, an agent-based session simulator, CSV ingestion and a reporting
//! pipeline that renders the results as tables and hypothesis verdicts.

pub mod config;
pub mod error;
pub mod experiment;
pub mod game;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod sim;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
pub use game::{GameSpec, MixedProfile, PayScale, PayoffMatrix, Stability, Strategy};
pub use config::RunConfig;
pub use metrics::{AngularSamples, MeanL, PersistenceReport, Trajectory};
pub use report::{analyze, verdicts, Bundle, Report, VerdictGrid};
pub use state::{Bivector6, Point3, Setting, SocialState};
