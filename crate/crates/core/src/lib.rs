#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod dataset;
pub mod eval;
pub mod phy;
pub mod pipeline;
pub mod predict;
pub mod scenario;
pub mod track;
