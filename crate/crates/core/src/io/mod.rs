//! Gray coding, dataset generation and the binary file formats.

pub mod dataset;
pub mod format;
pub mod gray;

pub use dataset::{gen_random_block, split_dataset, split_indices, GENERATOR_ID};
pub use format::{read_mapping_table, read_pattern, write_mapping_table, write_pattern, MappingTable};
pub use gray::{gray_decode, gray_encode};
