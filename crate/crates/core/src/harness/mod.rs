//! Experimental protocols: multi-trial accuracy, Gaussian-perturbation
//! robustness and report formatting.

pub mod config;
pub mod perturb;
pub mod protocol;
pub mod report;
pub mod train;

pub use config::{DataChoice, ExperimentConfig};
pub use perturb::{perturb_dataset, perturb_gaussian, NoiseScale, PerturbSpec};
pub use protocol::{render_protocol, run_protocol, run_protocol_on, ProtocolOutput};
pub use report::{assign_deltas, format_report, round_half_even_2, TrialReport};
pub use train::{predict, top1_accuracy, train_model, TrainConfig, TrainLog};
