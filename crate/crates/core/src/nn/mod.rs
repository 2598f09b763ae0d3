//! Layers, loss, optimizer and checkpointing built on the tape.

pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod linear;
pub mod loss;
pub mod optim;
pub mod param;
pub mod pool;

pub use batchnorm::BatchNorm2d;
pub use conv::{Conv1d, Conv2d};
pub use linear::Linear;
pub use optim::Sgd;
pub use param::{Param, Parameterized};
pub use pool::PoolKind;

/// Forward-pass mode. Only batch norm behaves differently between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
