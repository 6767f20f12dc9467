mod dropout;
mod geometry;
mod measure;
mod train;

pub use dropout::{cmd_dropout_sweep, CellRow, DropoutOutcome, RateRow};
pub use geometry::{cmd_diagnose, cmd_verify, DiagnoseOutcome};
pub use measure::{cmd_measure, cmd_sweep, load_model, LoadedModel, SweepOutcome};
pub use train::{cmd_train, fit, FitSpec, Fitted, TrainOutcome, TrainSummary};
