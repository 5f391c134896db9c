//! Experiment orchestration: configuration, seeded Monte Carlo sweeps,
//! result records and CSV output.

pub mod config;
pub mod records;
pub mod run;

pub use config::{
    ChannelConfig, ChannelProfile, CsiMode, ExperimentConfig, ExperimentKind, FilterConfig, FilterFamily, GridConfig, LinkKind, LinkSpec,
    RadarConfig, ResolvedLink, TargetSpec, Waveform, SCHEMA_VERSION,
};
pub use records::{paired_difference, summarize, BerCounts, ResultRecord, SummaryRow};
pub use run::{frame_rng, radar_surface, run_experiment, simulate_frame, write_summary, RngStream, Runner};
