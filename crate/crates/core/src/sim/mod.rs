//! Synthetic phantoms, artifact injection and the scoring harness.

pub mod artifacts;
pub mod experiment;
pub mod phantom;
pub mod score;

pub use artifacts::{inject_banding, inject_ghosting, inject_motion, inject_spike};
pub use experiment::{
    run_experiment, scale_noise, simulate_scan, summary_to_csv, summary_to_json, write_summary,
    ArtifactKind, ArtifactRanges, ExperimentConfig, ExperimentSummary, IterationScores, ScanInfo,
    Setup, SimulatedScan, SummaryRow,
};
pub use phantom::{make_phantom, Geometry, PhantomConfig, PhantomScan};
pub use score::{bootstrap_ci, score, Interval, Score};
