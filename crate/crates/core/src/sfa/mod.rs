//! The SFA pipeline: input preprocessing, quadratic expansion, training by
//! generalized eigenproblem or by SVD sphering, application and persistence.

pub mod expansion;
pub mod persist;
pub mod preprocess;
pub mod train;

pub use expansion::{expand, expand_rows, expansion_dim};
pub use persist::{load_model, model_from_json, model_to_json, save_model, MODEL_VERSION};
pub use preprocess::{
    fit_preprocessor, PreprocessMode, PreprocessOptions, Preprocessor, DEFAULT_INPUT_FLOOR,
};
pub use train::{
    accumulate_training, apply_model, prepare, solve_gen_eig, solve_svd_sfa, train, train_from,
    train_gen_eig, train_svd_sfa, Diagnostics, Method, SfaModel, SfaSolution, TrainOptions,
};
