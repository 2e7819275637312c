//! Repair instances: loading, hunk extraction, splits and samples.

mod diff;
mod instance;
mod load;
mod sampling;

pub use diff::{apply_hunks, extract_hunks, extract_single_hunk, DiffError, Hunk, HunkLine, LineKind};
pub use instance::{InstanceError, KnowledgeKind, RepairInstance, UnknownKnowledgeKind};
pub use load::{load_dataset, parse_language, read_dataset, write_canonical, DatasetSchema, LoadError};
pub use sampling::{
    below, fraction_size, reserve_test, rng, sample_fraction, sample_shots, sample_shots_excluding, shuffle,
    split_dataset, split_ids, DatasetSplit, SamplingError, SamplingMode, SamplingPlan, DEFAULT_SEEDS,
    FRACTION_STREAM, RESERVE_STREAM, SHOTS_STREAM, SPLIT_STREAM,
};
