//! Training, evaluation and the experiment protocols.

mod config;
mod fixture;
mod metrics;
mod protocol;
mod report;
mod sweep;
mod train;

pub use config::TrainConfig;
pub use fixture::{synthetic_fixture, FixtureSpec};
pub use metrics::{evaluate, AggregateMetrics, Averaging, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use protocol::{
    prepare, run_protocol, run_protocol_with, FoldOutcome, ProtocolOptions, ProtocolResult, TableRow, CLASSIFIER_NAME,
    METHOD_NAME,
};
pub use report::{sweep_csv, table_csv, to_json, write_json, write_text, SWEEP_HEADER, TABLE_HEADER};
pub use sweep::{
    default_length_axis, plan_for, reference_accuracy, segment_length_sweep, snr_sweep, sweep_noise_seed,
    NoiseProtocol, ReferencePoint, SnrSweepOptions, SweepAxis, SweepPoint, SweepResult, SweepTraining,
    DEFAULT_SNR_AXIS_DB, REFERENCE_POINTS,
};
pub use train::{loss_and_accuracy, train, EpochRecord, History, TrainOutcome};
