//! Building blocks of the `hybridpower` command line tool.

pub mod figures;
pub mod format;
pub mod scenario;
