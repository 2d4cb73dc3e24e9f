//! Synthetic scenes, the oracle predictor, the streaming driver, the
//! evaluation protocol and memory reports.

mod eval;
mod format;
mod memory;
mod oracle;
mod stream;
mod synth;

pub use eval::{
    evaluate, run_protocol, split_protocol, EvalConfig, EvalMode, MetricsReport, ProtocolSplit, TargetMetrics,
    TARGET_BINS,
};
pub use format::{round6, sig6};
pub use memory::{memory_report, MemoryReport, MemoryRow};
pub use oracle::{oracle_predict, visible_gaussians, OracleNoise, OraclePrediction, OraclePredictor};
pub use stream::{
    chunk_ranges, expected_token_sets, frames_from_scene, stream_reconstruct, ChunkLog, PredictorKind, StreamConfig,
    StreamFrame, StreamOutput,
};
pub use synth::{generate_scene, Facing, SceneConfig, SceneExtent, SyntheticScene, TrajectoryKind, MAX_ATTEMPTS};
