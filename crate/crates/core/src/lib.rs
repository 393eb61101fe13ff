//! Composite competitiveness index built from variance-weighted modified
//! principal components, with deterministic rankings and a CSV command line.

pub mod cli;
pub mod dataset;
pub mod index;
pub mod linalg;
pub mod options;
pub mod ranking;

pub use dataset::{Dataset, Direction, IndicatorSchema};
pub use index::{compute_competitiveness, IndexError, IndexReport};
pub use linalg::{EigenDecomposition, Matrix, SymmetricMatrix};
pub use options::RunOptions;
pub use ranking::{RankedTable, TiePolicy};
