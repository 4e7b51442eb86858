//! Problem ingestion and experiment output.

mod matrix_market;
mod records;
mod synthetic;

pub use matrix_market::{
    parse_matrix_market, read_matrix_market, save_matrix_market, write_matrix_market_array,
};
pub use records::{
    flatten, read_records, write_csv, write_json, write_records, ExperimentRecord, OutputFormat,
    RecordRow, CSV_HEADER,
};
pub use synthetic::{generate_synthetic, GeneratorMeta, ProblemInstance, Provenance};
