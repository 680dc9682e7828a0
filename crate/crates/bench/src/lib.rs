// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Benchmark fixtures shared by the criterion targets.

use fluxmol::circuit::devices::DEVICE_A;
use fluxmol::fitter::{synthesize, Dataset};
use fluxmol::Transition;

/// Device A spectroscopy at 10 fluxes in [0, 1.5], three labels each.
pub fn device_a_dataset(dim: usize) -> Dataset {
    let points: Vec<(f64, Transition)> = (0..10)
        .map(|i| 1.5 * i as f64 / 9.0)
        .flat_map(|x| [Transition::Ge, Transition::Gf, Transition::Gh].map(|t| (x, t)))
        .collect();
    let data = synthesize(&DEVICE_A, &points, dim).expect("device A spectra");
    Dataset::new(&data).expect("valid observations")
}
