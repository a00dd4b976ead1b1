//! The differentiable core: a gradient tape, parameter storage with
//! checkpoints and Adam, and the policy network built on them.

mod model;
mod params;
mod tape;

pub use model::{DistanceWeighting, PolicyLayout, PolicyNet, DEFAULT_DIM, INIT_BOUND};
pub use params::{Adam, Checkpoint, Gradients, ParamId, ParamStore, Tensor};
pub(crate) use tape::sigmoid;
pub use tape::{Tape, Var};
