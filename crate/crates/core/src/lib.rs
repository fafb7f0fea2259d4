//! Unsupervised single-object tracking.
//!
//! The tracker fuses three box proposals per frame:
//!
//! * an appearance proposal from a spatial-temporal regularized correlation
//!   filter ([`strcf`]),
//! * a background proposal from an affine camera-motion model and the
//!   resulting frame-difference map ([`bgmotion`]),
//! * a trajectory proposal from PCA over recent box displacements
//!   ([`trajectory`]).
//!
//! [`pipeline`] orchestrates the modules and [`eval`] provides the
//! one-pass evaluation harness, metrics, reports and a synthetic sequence
//! generator.

pub mod bgmotion;
pub mod error;
pub mod eval;
pub mod features;
pub mod fft2;
pub mod geometry;
pub mod media;
pub mod pipeline;
pub mod strcf;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::BoundingBox;
pub use media::{Frame, GrayImage, SequenceSpec};
pub use pipeline::{Tracker, TrackerConfig, Variant};
