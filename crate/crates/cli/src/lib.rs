//! Pipeline behind the `qdgm` binary: dataset generation, FToG marginals,
//! training, prediction and evaluation.

pub mod data;
pub mod evaluate;
pub mod figures;
pub mod ftog;
pub mod predict;
pub mod run;
pub mod training;
