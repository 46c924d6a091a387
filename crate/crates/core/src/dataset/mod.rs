//! Generated feature datasets on disk and stratified splits.

mod generate;
mod split;
mod store;

pub use generate::{generate_dataset, generate_matrix, GenConfig};
pub use split::{split, stratified_holdout, stratified_kfold, SplitScheme};
pub use store::{
    append_dataset, decode_dataset, read_dataset, read_header, write_dataset, Dataset, DatasetHeader,
    DatasetWriter, DATASET_VERSION,
};
