//! Scenario generators and the experiment driver behind the CLI.

mod experiment;
mod generators;

pub use experiment::{
    run_experiment, ExperimentConfig, ExperimentOutput, MetricsRecord, ScenarioSource, METRICS_HEADER,
};
pub use generators::{
    generate_bottleneck, generate_clutter, generate_corridor, BottleneckParams, ClutterParams, CorridorParams,
};
