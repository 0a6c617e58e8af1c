//! File formats, multi-threaded drivers and the command-line front end for
//! [`gerrygrid_core`].

pub mod edgelist;
pub mod error;
pub mod par;
pub mod planfile;
pub mod tables;
pub mod text;

pub use error::{Error, Result};
