//! Compound figure classification (is this image made of several panels?)
//! and separation (where are the panels?) for images from scientific
//! articles.

pub mod band_sep;
pub mod cfc_features;
pub mod cfs;
pub mod data;
pub mod edge_sep;
pub mod error;
pub mod eval;
pub mod illustration;
pub mod learn;
pub mod raster;
pub mod separator;
pub mod tune;

pub use cfs::{separate, CfsParams, SeparationResult, Variant};
pub use error::{Error, Result};
pub use illustration::{FixedRouter, IlluModel, Router, Routing};
pub use raster::{Direction, GrayImage, Rect};
