//! File formats, participants, the staged pipeline and the command line
//! built on `assocgeom-core`.

pub mod binio;
pub mod collector;
pub mod counts;
pub mod error;
pub mod fsutil;
pub mod lemb;
pub mod manifest;
pub mod participant;
pub mod records;
pub mod report;
pub mod settings;
pub mod ssim;
pub mod stages;

pub use error::{Error, Result};
