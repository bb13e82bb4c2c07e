//! Dataset files, the synthetic block-model generator, and train/val/test
//! splits.

mod io;
mod sbm;
mod split;

pub use io::{
    load_dataset, read_embeddings, read_features, read_labels, save_dataset, write_embeddings,
    write_features, write_labels, Dataset, DatasetPaths,
};
pub use sbm::{gen_sbm, SbmSpec};
pub use split::{make_split, DataSplit, SplitSpec};
