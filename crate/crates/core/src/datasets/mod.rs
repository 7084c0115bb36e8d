//! Offline dataset generation (expert, replay, mixture variants), a
//! checksummed columnar on-disk format, and per-robot minibatch sampling.

mod gen;
mod sample;
pub(crate) mod shard;

pub use gen::{gen_expert, gen_mixture, gen_replay, Direction, SweepSchedule, Variant};
pub use sample::{sample_batch, MiniBatch, RobotBatch};
pub use shard::{
    crc32, load_dataset, save_dataset, DatasetManifest, RobotShard, Transition, FORMAT_VERSION,
};
