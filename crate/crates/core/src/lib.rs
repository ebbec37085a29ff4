//! Gravity adaptation zone calibration: grid handling and kriging, window
//! features, attention fusion, classifiers, feature selectors and the
//! end-to-end pipeline.

pub mod config;
pub mod featsel;
pub mod features;
pub mod fusion;
pub mod grid;
pub mod kriging;
pub mod learners;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod rng;

pub use config::{ConfigError, RunConfig};
pub use featsel::{SelectionResult, SelectorKind};
pub use features::{extract_features, FeatureCube, WindowSpec, FEATURE_NAMES, N_FEATURES};
pub use fusion::{AttentionFuser, FusionMode, FusionTrainConfig};
pub use grid::{GravityGrid, GridError, GridSpec, SamplePoint, ScatterSamples, SynthConfig};
pub use kriging::{KrigingError, Neighborhood, VariogramKind, VariogramModel};
pub use learners::{LearnError, Model, ModelKind, ModelSpec, Prediction, TrainedForest};
pub use matrix::Matrix;
pub use metrics::{evaluate, EvalReport};
pub use pipeline::{
    CalibrationConfig, CalibrationRun, ComparisonTable, LabeledDataset, PipelineError,
};
pub use render::{Palette, RenderError};
