//! Driven logistic-map experiments: series generation, delay embedding,
//! alignment against the driving force and slowness reporting.

pub mod analysis;
pub mod embed;
pub mod logistic;
pub mod series;

pub use analysis::{
    align, alignment_mse, constraint_report, correlation, slowness_eta, Alignment, SlownessReport,
};
pub use embed::{embed, Embedding, EmbeddingSpec};
pub use logistic::{
    driving_force, driving_series, logistic_series, Forcing, LogisticConfig, DRIVING_OMEGA,
};
pub use series::{
    format_f64, load_series, read_series_csv, save_series, write_columns_csv, write_series_csv,
    SeriesMeta, TimeSeries,
};
