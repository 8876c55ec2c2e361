//! PaySim-format transaction records: CSV ingestion, a synthetic flow
//! simulator with fraud and laundering motifs, feature encoding and the
//! cross-time / sparsity splits.

mod csvio;
mod features;
mod record;
mod split;
mod synth;

pub use csvio::{
    load_paysim_csv, load_paysim_csv_with, read_paysim, write_synthetic, write_synthetic_csv,
    LoadOptions, LoadReport, PATTERN_COLUMN, PAYSIM_COLUMNS,
};
pub use features::{
    encode, encode_all, feature_layout, fit_stats, NormalizationStats, CONTINUOUS_FEATURES,
    DAY_LENGTH, FEATURE_WIDTH,
};
pub use record::{label_counts, PatternLabel, TransactionRecord, TxType};
pub use split::{cross_time_split, kept_count, sparsify, DatasetSplit};
pub use synth::{generate_synthetic, SynthConfig};
