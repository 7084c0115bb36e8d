//! Differentiable-computation substrate: flat parameter vectors with named
//! segments, an eager reverse-mode tape over small dense tensors, an Adam
//! optimizer with global-norm clipping, and gradient utilities.

mod adam;
mod checkpoint;
mod grad;
mod param;
mod tape;

pub use adam::{optim_step, OptimState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use grad::{cosine, eval_loss, finite_diff_check, grad_of, GradReport};
pub use param::{Layout, ParamVector, Segment};
pub use tape::{NodeId, ParamSource, Tape};
