// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact small-scale quantum secret sharing.
//!
//! - [`finite_field`]: prime-field arithmetic and Vandermonde matrices.
//! - [`qudit`]: dense state-vector and density-matrix simulation.
//! - [`access`]: access structures as bitmask families.
//! - [`schemes`]: coherent Shamir encoding with explicit decoders.
//! - [`channels`]: Kraus channels and compound families.
//! - [`capacity`]: coherent information and its max-min optimization.

pub mod access;
pub mod capacity;
pub mod channels;
mod error;
pub mod finite_field;
pub mod qudit;
pub mod schemes;

pub use error::{QssError, Result};
