//! Dataset ingestion, synthetic generation, and non-IID partitioning.

mod dataset;
mod idx;
mod partition;
mod synthetic;

pub use dataset::{ClientShard, Dataset, ProxyDataset};
pub use idx::{load_idx, write_idx, IMAGE_MAGIC, LABEL_MAGIC};
pub use partition::{dirichlet_partition, sample_proxy, sample_subset, PartitionPlan};
pub use synthetic::{gen_synthetic, gen_synthetic_with_noise, DEFAULT_NOISE};
