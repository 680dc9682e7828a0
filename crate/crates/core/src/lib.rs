// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Numerical engine for an inductively coupled pair of fluxonium circuits.

pub mod circuit;
pub mod error;
pub mod fitter;
pub mod io;
pub mod noise;
pub mod qop;
pub mod simplex;
pub mod spectrum;

pub use circuit::{devices, FluxPoint, MoleculeParams};
pub use error::{Error, Result};
pub use fitter::{FitConfig, FitResult, TransitionObservation};
pub use noise::{DephasingResult, FluxNoiseModel, FormulaMode};
pub use spectrum::{Spectrum, Transition};
