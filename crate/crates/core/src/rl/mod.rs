//! Offline reinforcement learning: BC, IQL, and TD3+BC trainers, the
//! grouped-update wrapper with shared global critic, the PCGrad combiner,
//! the compute-normalized control, and pre-train/fine-tune workflows.

mod config;
mod losses;
mod pcgrad;
mod step;
mod train;
mod trainer;

pub use config::{Algorithm, ConflictResolver, Grouping, TrainConfig};
pub use losses::{actor_grad, awr_weight, td3_lambda};
pub use pcgrad::pcgrad_combine;
pub use step::{
    eg_train_step, expectile_fit, expectile_weight, normalized_train_step, StepLog,
};
pub use train::{
    pretrain_finetune, resolve_groups, run_training, run_training_from, save_eval_table,
    save_update_log, ActorPolicy, EvalRow, FinetuneOutcome, TrainOutcome, UpdateRow,
};
pub use trainer::{ema_update, init_trainer, param_hash, state_hash, TrainerState};
