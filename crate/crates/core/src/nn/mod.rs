//! Minimal real/complex 1D network toolkit: tensors, layers, a reverse-mode
//! tape, losses, optimizers and checkpoints.

pub mod checkpoint;
pub mod functional;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod ops;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use checkpoint::Checkpoint;
pub use functional::{complex_conv1d, real_conv1d, real_conv1d_2ch, split_relu, ComplexKernel, SplitBatchNorm};
pub use layers::{BatchNorm, Conv, Linear};
pub use optim::{Optimizer, OptimizerConfig};
pub use params::{Param, ParamId, ParamStore};
pub use scalar::Scalar;
pub use tape::{Mode, NodeId, Tape};
pub use tensor::{ComplexTensor, FeatureMap, Matrix, Tensor3, Value};
