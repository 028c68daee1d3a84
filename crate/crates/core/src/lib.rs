//! Patch Gaussian augmentation and the tooling around it: seeded streams,
//! image tensors, augmentations, corruptions, robustness metrics, Fourier
//! analysis and a small trainable model.

pub mod augment;
pub mod corrupt;
pub mod error;
pub mod formats;
pub mod fourier;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod tensor;

pub use augment::{run_pipeline, AugmentKind, AugmentSpec, PatchRect, PipelineOrder};
pub use corrupt::{CorruptionKind, CorruptionSpec, Severity, SeverityTable, EVAL_SIGMAS};
pub use error::{Error, Result};
pub use fourier::{FourierHeatmap, Plane, Probe, Spectrum};
pub use metrics::{Candidate, ErrorMap, EvalResult, RobustnessReport};
pub use model::{Classifier, SynthKind, ToyConfig, ToyModel, TrainConfig};
pub use rng::{derive_stream, RngStream};
pub use tensor::{ChannelMean, ImageTensor, LabeledDataset, Shape};
