//! Sparse dictionaries of unit quaternions for plausible joint rotations.
//!
//! This crate learns over-complete sets of rotation "atoms" per skeletal joint
//! and uses their convex hulls as a pose prior: a joint rotation is recovered as
//! a sparse convex combination of atoms (selected by [`simplex::sparsemax`],
//! blended by [`quat::nlerp`]), which confines pose recovery to the region of
//! rotation space the training data actually visits.
//!
//! The pieces, bottom to top:
//!
//! * [`quat`] — unit quaternions with double-cover discipline (canonical forms,
//!   slerp/nlerp, geodesic distance).
//! * [`simplex`] — exact Euclidean projection onto the probability simplex
//!   (sparsemax) and its generalized Jacobian.
//! * [`dict`] — online batch dictionary learning for quaternion atoms and for
//!   unit-norm Euclidean atoms (shape-style parameters).
//! * [`cluster`] — a spherical k-means baseline and the coverage-ratio metric
//!   used to compare dictionaries.
//! * [`kinematics`] — joint-tree forward kinematics and a weak-perspective
//!   camera.
//! * [`fitting`] — dictionary-constrained pose recovery from 2D/3D keypoints by
//!   direct optimization over simplex codes and camera parameters.
//!
//! The crate is `no_std`-compatible (with `alloc`): disable default features and
//! enable `libm` for float math. The `parallel` feature (default) parallelizes
//! batch coding, coverage evaluation, and fit restarts with rayon; results are
//! bitwise independent of thread count.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("kinedict-core needs float math: enable the `std` or `libm` feature");

pub mod cluster;
pub mod dict;
pub mod error;
pub mod fitting;
pub mod kinematics;
pub mod mat;
pub(crate) mod math;
pub mod quat;
pub(crate) mod rng;
pub mod simplex;

pub use error::{Error, Result};
