//! Files in and out: datasets, model files and result tables.

pub mod csv_out;
pub mod dataset;
pub mod model_file;

pub use csv_out::{fmt_sig6, write_table};
pub use dataset::{load_dataset, Dataset, IdMap, SocialSource};
pub use model_file::{load_model, save_model};
