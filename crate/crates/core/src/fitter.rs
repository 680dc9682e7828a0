// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spectroscopic fit of `(alpha, e_j / e_c, e_l)` at a fixed `e_j * e_c`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::circuit::{FluxPoint, MoleculeParams};
use crate::error::{Error, Result};
use crate::simplex::{minimize, Interval, SimplexOptions};
use crate::spectrum::{spectrum_at, Transition};

/// Objective value reported when the model cannot be evaluated.
pub const SENTINEL: f64 = 1e6;

/// Polish simplex edge relative to `initial_step`.
const POLISH_STEP_SCALE: f64 = 0.02;

/// One measured transition frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionObservation {
    pub phi_ext: f64,
    /// Frequency in GHz.
    pub frequency: f64,
    pub label: Transition,
    pub weight: f64,
}

impl TransitionObservation {
    pub fn new(phi_ext: f64, frequency: f64, label: Transition, weight: f64) -> Result<Self> {
        let o = Self {
            phi_ext,
            frequency,
            label,
            weight,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi_ext.is_finite() {
            return Err(Error::InvalidInput(format!(
                "phi_ext must be finite, got {}",
                self.phi_ext
            )));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::InvalidInput(format!(
                "frequency must be > 0, got {}",
                self.frequency
            )));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "weight must be >= 0, got {}",
                self.weight
            )));
        }
        if self.label == Transition::Ef {
            return Err(Error::InvalidInput(
                "observations must be ge, gf, gh or gd transitions".into(),
            ));
        }
        Ok(())
    }
}

/// Fit coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub alpha: f64,
    /// `e_j / e_c`.
    pub ratio: f64,
    pub e_l: f64,
}

impl Candidate {
    pub fn from_params(p: &MoleculeParams) -> Self {
        Self {
            alpha: p.alpha,
            ratio: p.e_j / p.e_c,
            e_l: p.e_l,
        }
    }

    /// Circuit parameters with `e_j = sqrt(P r)` and `e_c = sqrt(P / r)`.
    pub fn to_params(&self, ejec_product: f64) -> Result<MoleculeParams> {
        if !(self.ratio > 0.0 && ejec_product > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ratio and product must be > 0 (ratio = {}, product = {ejec_product})",
                self.ratio
            )));
        }
        MoleculeParams::new(
            (ejec_product * self.ratio).sqrt(),
            (ejec_product / self.ratio).sqrt(),
            self.e_l,
            self.alpha,
        )
    }

    fn to_vec(self) -> [f64; 3] {
        [self.alpha, self.ratio, self.e_l]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self {
            alpha: x[0],
            ratio: x[1],
            e_l: x[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub alpha: Interval,
    pub ratio: Interval,
    pub e_l: Interval,
}

impl FitBounds {
    fn as_array(&self) -> [Interval; 3] {
        [self.alpha, self.ratio, self.e_l]
    }

    pub fn contains(&self, c: &Candidate) -> bool {
        self.alpha.contains(c.alpha) && self.ratio.contains(c.ratio) && self.e_l.contains(c.e_l)
    }
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            alpha: Interval::new(-0.2, 0.2),
            ratio: Interval::new(0.5, 10.0),
            e_l: Interval::new(0.1, 5.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Fixed `e_j * e_c` in GHz^2.
    pub ejec_product: f64,
    pub initial: Candidate,
    pub bounds: FitBounds,
    pub basis_dim: usize,
    /// Second pass at this dimension, started from the first-pass optimum.
    pub polish_dim: Option<usize>,
    /// Total evaluation budget over both passes.
    pub max_evals: usize,
    /// Initial simplex edge as a fraction of each coordinate's magnitude.
    pub initial_step: f64,
    pub f_tol: f64,
}

impl FitConfig {
    pub const DEFAULT_BASIS_DIM: usize = 20;
    pub const DEFAULT_POLISH_DIM: usize = 30;

    pub fn new(ejec_product: f64, initial: Candidate) -> Self {
        Self {
            ejec_product,
            initial,
            bounds: FitBounds::default(),
            basis_dim: Self::DEFAULT_BASIS_DIM,
            polish_dim: Some(Self::DEFAULT_POLISH_DIM),
            max_evals: 400,
            initial_step: 0.1,
            f_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ejec_product.is_finite() && self.ejec_product > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ejec_product must be > 0, got {}",
                self.ejec_product
            )));
        }
        if !self.bounds.as_array().iter().all(Interval::is_valid) {
            return Err(Error::InvalidParameter(
                "fit bounds must be finite, lo < hi".into(),
            ));
        }
        if !self.bounds.contains(&self.initial) {
            return Err(Error::InvalidParameter(format!(
                "initial guess {:?} lies outside the bounds",
                self.initial
            )));
        }
        if self.basis_dim < 2 || self.polish_dim.is_some_and(|d| d < 2) {
            return Err(Error::InvalidBasis(
                "fit basis dimension must be >= 2".into(),
            ));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidParameter("max_evals must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: MoleculeParams,
    /// Weighted RMS residual in GHz at the final basis dimension.
    pub residual: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub ejec_product: f64,
}

/// Observations grouped by flux so each flux point is diagonalized once.
#[derive(Debug, Clone)]
pub struct Dataset {
    groups: Vec<FluxGroup>,
    total_weight: f64,
    len: usize,
}

#[derive(Debug, Clone)]
struct FluxGroup {
    phi_ext: f64,
    levels: usize,
    entries: Vec<(Transition, f64, f64)>,
}

fn observation_order(a: &TransitionObservation, b: &TransitionObservation) -> Ordering {
    a.phi_ext
        .total_cmp(&b.phi_ext)
        .then(a.label.cmp(&b.label))
        .then(a.frequency.total_cmp(&b.frequency))
        .then(a.weight.total_cmp(&b.weight))
}

impl Dataset {
    pub fn new(data: &[TransitionObservation]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidInput("no observations".into()));
        }
        for o in data {
            o.validate()?;
        }
        let total_weight: f64 = {
            let mut w: Vec<f64> = data.iter().map(|o| o.weight).collect();
            w.sort_by(f64::total_cmp);
            w.iter().sum()
        };
        if total_weight <= 0.0 {
            return Err(Error::InvalidInput(
                "total observation weight is zero".into(),
            ));
        }
        let mut sorted = data.to_vec();
        sorted.sort_by(observation_order);
        let mut groups: Vec<FluxGroup> = Vec::new();
        for o in sorted {
            let entry = (o.label, o.frequency, o.weight);
            let hi = o.label.levels().1 + 1;
            match groups.last_mut() {
                Some(g) if g.phi_ext == o.phi_ext => {
                    g.levels = g.levels.max(hi);
                    g.entries.push(entry);
                }
                _ => groups.push(FluxGroup {
                    phi_ext: o.phi_ext,
                    levels: hi,
                    entries: vec![entry],
                }),
            }
        }
        Ok(Self {
            groups,
            total_weight,
            len: data.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn distinct_fluxes(&self) -> usize {
        self.groups.len()
    }

    /// Weighted RMS residual in GHz, or `None` if a flux point fails.
    pub fn rms_residual(&self, params: &MoleculeParams, dim: usize) -> Option<f64> {
        let basis = params.mode_basis(dim).ok()?;
        let partial: Vec<Option<f64>> = self
            .groups
            .par_iter()
            .map(|g| {
                let s = spectrum_at(params, FluxPoint(g.phi_ext), &basis, g.levels).ok()?;
                Some(
                    g.entries
                        .iter()
                        .map(|&(label, f, w)| {
                            let d = s.transition(label).unwrap_or(f64::NAN) - f;
                            w * d * d
                        })
                        .sum(),
                )
            })
            .collect();
        let mut acc = 0.0;
        for p in partial {
            acc += p?;
        }
        let rms = (acc / self.total_weight).sqrt();
        rms.is_finite().then_some(rms)
    }
}

/// Weighted RMS residual at `candidate`, or [`SENTINEL`] if evaluation fails.
pub fn objective(candidate: &Candidate, ejec_product: f64, dim: usize, data: &Dataset) -> f64 {
    candidate
        .to_params(ejec_product)
        .ok()
        .and_then(|p| data.rms_residual(&p, dim))
        .unwrap_or(SENTINEL)
}

/// Model observations at `params` for the given `(phi_ext, label)` pairs.
pub fn synthesize(
    params: &MoleculeParams,
    points: &[(f64, Transition)],
    dim: usize,
) -> Result<Vec<TransitionObservation>> {
    let basis = params.mode_basis(dim)?;
    points
        .iter()
        .map(|&(x, label)| {
            let s = spectrum_at(params, FluxPoint(x), &basis, label.levels().1 + 1)?;
            TransitionObservation::new(x, s.transition(label).expect("levels"), label, 1.0)
        })
        .collect()
}

fn stage(
    config: &FitConfig,
    data: &Dataset,
    dim: usize,
    start: Candidate,
    step_fraction: f64,
    budget: usize,
) -> (Candidate, f64, usize, bool) {
    let bounds = config.bounds.as_array();
    let x0 = start.to_vec();
    let steps: Vec<f64> = x0
        .iter()
        .zip(&bounds)
        .map(|(v, b)| {
            let s = step_fraction * v.abs();
            if s > 0.0 {
                s
            } else {
                step_fraction * b.width() * 0.1
            }
        })
        .collect();
    let opts = SimplexOptions {
        f_tol: config.f_tol,
        max_evals: budget,
        ..SimplexOptions::default()
    };
    let f = |x: &[f64]| objective(&Candidate::from_slice(x), config.ejec_product, dim, data);
    let r = minimize(f, &x0, &steps, &bounds, &opts);
    (
        Candidate::from_slice(&r.x),
        r.fx,
        r.evaluations,
        r.converged,
    )
}

/// Fits `(alpha, ratio, e_l)` to `data`; `alpha` is reported as non-negative.
pub fn fit(config: &FitConfig, data: &[TransitionObservation]) -> Result<FitResult> {
    config.validate()?;
    let dataset = Dataset::new(data)?;
    if dataset.len() < 4 || dataset.distinct_fluxes() < 2 {
        return Err(Error::InvalidInput(format!(
            "fit needs at least 4 observations at 2 or more flux points (got {} at {})",
            dataset.len(),
            dataset.distinct_fluxes()
        )));
    }

    let first_budget = match config.polish_dim {
        Some(_) => (config.max_evals * 2).div_ceil(3),
        None => config.max_evals,
    };
    let (mut best, mut fx, mut evals, mut converged) = stage(
        config,
        &dataset,
        config.basis_dim,
        config.initial,
        config.initial_step,
        first_budget,
    );
    let mut final_dim = config.basis_dim;
    if let Some(dim) = config.polish_dim {
        let budget = config.max_evals.saturating_sub(evals).max(1);
        let (b, f, e, c) = stage(
            config,
            &dataset,
            dim,
            best,
            POLISH_STEP_SCALE * config.initial_step,
            budget,
        );
        best = b;
        fx = f;
        evals += e;
        converged = c;
        final_dim = dim;
    }
    best.alpha = best.alpha.abs();
    let residual = objective(&best, config.ejec_product, final_dim, &dataset).min(fx);
    Ok(FitResult {
        params: best.to_params(config.ejec_product)?,
        residual,
        evaluations: evals,
        converged,
        ejec_product: config.ejec_product,
    })
}
