//! Offline influence learning: dataset collection from a global simulator,
//! a from-scratch recurrent sequence classifier trained with backpropagation
//! through time, and an exact enumeration oracle for small Grab A Chair games.

pub mod dataset;
pub mod oracle;
pub mod rnn;
pub mod train;

pub use dataset::{collect_dataset, EpisodeRecord, InfluenceDataset};
pub use oracle::{exact_influence_gac, OracleError};
pub use rnn::{CellKind, RnnPredictor};
pub use train::{train, LearningCurve, OptimizerKind, TrainConfig, TrainError};
