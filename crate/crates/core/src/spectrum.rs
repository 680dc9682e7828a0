// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Diagonalization, transition labels, flux sweeps and sensitivities.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::traits::ComplexField;
use faer::{Mat, Par};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::circuit::{build_hamiltonian, FluxPoint, GridSpec, MoleculeParams};
use crate::error::{Error, Result};
use crate::qop::{swap_modes, ModeBasis, OperatorMatrix, C64};

/// Default number of levels kept per spectrum.
pub const DEFAULT_LEVELS: usize = 8;
/// Entrywise Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Finite-difference step in external flux (flux quanta).
pub const FLUX_STEP: f64 = 1e-4;
/// Finite-difference step in alpha/2.
pub const ASYMMETRY_STEP: f64 = 1e-5;

/// Labelled transitions out of the ground state, plus e to f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transition {
    Ge,
    Gf,
    Gh,
    Gd,
    Ef,
}

impl Transition {
    pub const ALL: [Transition; 5] = [Self::Ge, Self::Gf, Self::Gh, Self::Gd, Self::Ef];

    /// `(lower, upper)` level indices in energy order.
    pub fn levels(self) -> (usize, usize) {
        match self {
            Self::Ge => (0, 1),
            Self::Gf => (0, 2),
            Self::Gh => (0, 3),
            Self::Gd => (0, 4),
            Self::Ef => (1, 2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ge => "ge",
            Self::Gf => "gf",
            Self::Gh => "gh",
            Self::Gd => "gd",
            Self::Ef => "ef",
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Transition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown transition label '{s}'")))
    }
}

/// Ground-referenced levels at one flux point.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    levels: Vec<f64>,
    ground_energy: f64,
}

impl Spectrum {
    /// Builds a spectrum from ascending absolute energies.
    pub fn from_energies(energies: &[f64]) -> Result<Self> {
        let ground_energy = *energies
            .first()
            .ok_or_else(|| Error::InvalidInput("empty spectrum".into()))?;
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("energies must be ascending".into()));
        }
        Ok(Self {
            levels: energies.iter().map(|e| e - ground_energy).collect(),
            ground_energy,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Absolute energy of the ground state before referencing.
    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    /// Transition frequency in GHz, if enough levels were computed.
    pub fn transition(&self, t: Transition) -> Option<f64> {
        let (lo, hi) = t.levels();
        Some(self.levels.get(hi)? - self.levels.get(lo)?)
    }

    pub fn ge(&self) -> f64 {
        self.transition(Transition::Ge).unwrap_or(f64::NAN)
    }

    /// All labelled transitions available at this level count.
    pub fn transitions(&self) -> Vec<(Transition, f64)> {
        Transition::ALL
            .into_iter()
            .filter_map(|t| self.transition(t).map(|f| (t, f)))
            .collect()
    }
}

fn evd<T: ComplexField>(a: &Mat<T>, vectors: bool) -> Result<(Diag<T>, Option<Mat<T>>)> {
    let n = a.nrows();
    let par = Par::Seq;
    let flag = if vectors {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let mut s = Diag::<T>::zeros(n);
    let mut u = vectors.then(|| Mat::<T>::zeros(n, n));
    let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<T>(
        n,
        flag,
        par,
        Default::default(),
    ));
    self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok((s, u))
}

/// Eigenvalues and eigenvectors of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// Ascending absolute eigenvalues.
    pub values: Vec<f64>,
    /// Column `k` is the normalized eigenvector of `values[k]`.
    pub vectors: DMatrix<C64>,
}

impl Eigenpairs {
    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// `|H v - E v| / |v|` for pair `k`.
    pub fn residual(&self, h: &OperatorMatrix, k: usize) -> f64 {
        let v = self.vector(k);
        let hv = h.apply(&v);
        (hv - &v * C64::new(self.values[k], 0.0)).norm() / v.norm()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::from_energies(&self.values)
    }
}

fn check_request(h: &OperatorMatrix, k: usize) -> Result<()> {
    if k == 0 || k > h.dim() {
        return Err(Error::TooManyLevels {
            requested: k,
            dim: h.dim(),
        });
    }
    let defect = h.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Real-valued input takes the cheaper real symmetric path.
fn is_effectively_real(h: &OperatorMatrix) -> bool {
    let (im, abs) = h.entries().iter().fold((0.0_f64, 0.0_f64), |(im, abs), z| {
        (im.max(z.im.abs()), abs.max(z.norm_sqr()))
    });
    im <= 1e-14 * abs.sqrt().max(1.0)
}

fn real_mat(h: &OperatorMatrix) -> Mat<f64> {
    let e = h.entries();
    Mat::from_fn(h.dim(), h.dim(), |i, j| e[(i, j)].re)
}

fn complex_mat(h: &OperatorMatrix) -> Mat<faer::c64> {
    let e = h.entries();
    Mat::from_fn(h.dim(), h.dim(), |i, j| e[(i, j)])
}

/// Lowest `k` absolute eigenvalues, ascending.
pub fn eigenvalues(h: &OperatorMatrix, k: usize) -> Result<Vec<f64>> {
    check_request(h, k)?;
    let all: Vec<f64> = if is_effectively_real(h) {
        let (s, _) = evd(&real_mat(h), false)?;
        s.column_vector().iter().copied().collect()
    } else {
        let (s, _) = evd(&complex_mat(h), false)?;
        s.column_vector().iter().map(|x| x.re).collect()
    };
    if all.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok(all.into_iter().take(k).collect())
}

/// Lowest `k` eigenpairs.
pub fn eigenpairs(h: &OperatorMatrix, k: usize) -> Result<Eigenpairs> {
    check_request(h, k)?;
    let n = h.dim();
    let (values, vectors) = if is_effectively_real(h) {
        let (s, u) = evd(&real_mat(h), true)?;
        let u = u.expect("vectors requested");
        (
            s.column_vector().iter().copied().collect::<Vec<_>>(),
            DMatrix::from_fn(n, k, |i, j| C64::new(u[(i, j)], 0.0)),
        )
    } else {
        let (s, u) = evd(&complex_mat(h), true)?;
        let u = u.expect("vectors requested");
        (
            s.column_vector().iter().map(|x| x.re).collect::<Vec<_>>(),
            DMatrix::from_fn(n, k, |i, j| u[(i, j)]),
        )
    };
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok(Eigenpairs {
        values: values.into_iter().take(k).collect(),
        vectors,
    })
}

/// Lowest `k` levels of `h`, ground-referenced.
pub fn diagonalize(h: &OperatorMatrix, k: usize) -> Result<Spectrum> {
    Spectrum::from_energies(&eigenvalues(h, k)?)
}

/// Spectrum of the molecule at one flux point.
pub fn spectrum_at(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
    k: usize,
) -> Result<Spectrum> {
    diagonalize(&build_hamiltonian(params, flux, basis)?, k)
}

fn transition_at(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
    label: Transition,
) -> Result<f64> {
    let (_, hi) = label.levels();
    let s = spectrum_at(params, flux, basis, hi + 1)?;
    Ok(s.transition(label).expect("enough levels"))
}

/// Spectra over a flux grid; failed points are kept as errors.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub flux_axis: Vec<f64>,
    pub spectra: Vec<Result<Spectrum>>,
}

impl SweepResult {
    pub fn converged(&self) -> Vec<bool> {
        self.spectra.iter().map(|s| s.is_ok()).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.spectra.iter().all(|s| s.is_ok())
    }

    /// One transition across the sweep, NaN where the point failed.
    pub fn series(&self, label: Transition) -> Vec<f64> {
        self.spectra
            .iter()
            .map(|s| {
                s.as_ref()
                    .ok()
                    .and_then(|s| s.transition(label))
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }
}

/// Diagonalizes every flux point in parallel; output follows input order.
pub fn flux_sweep(
    params: &MoleculeParams,
    flux_grid: &[f64],
    basis: &ModeBasis,
    k: usize,
) -> Result<SweepResult> {
    if flux_grid.is_empty() {
        return Err(Error::InvalidInput("flux grid is empty".into()));
    }
    params.validate()?;
    let spectra = flux_grid
        .par_iter()
        .map(|&x| spectrum_at(params, FluxPoint(x), basis, k))
        .collect();
    Ok(SweepResult {
        flux_axis: flux_grid.to_vec(),
        spectra,
    })
}

/// Serial reference implementation of [`flux_sweep`].
pub fn flux_sweep_serial(
    params: &MoleculeParams,
    flux_grid: &[f64],
    basis: &ModeBasis,
    k: usize,
) -> Result<SweepResult> {
    if flux_grid.is_empty() {
        return Err(Error::InvalidInput("flux grid is empty".into()));
    }
    params.validate()?;
    let spectra = flux_grid
        .iter()
        .map(|&x| spectrum_at(params, FluxPoint(x), basis, k))
        .collect();
    Ok(SweepResult {
        flux_axis: flux_grid.to_vec(),
        spectra,
    })
}

/// One row of a truncation ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub dim: usize,
    pub f_ge: f64,
    /// Relative change from the previous row; `None` for the first.
    pub rel_change: Option<f64>,
}

/// Truncation ladder of `f_ge`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub tolerance: f64,
}

impl ConvergenceReport {
    /// The last step changed `f_ge` by less than the tolerance.
    pub fn converged(&self) -> bool {
        self.rows
            .last()
            .and_then(|r| r.rel_change)
            .is_some_and(|c| c < self.tolerance)
    }
}

pub const CONVERGENCE_TOL: f64 = 1e-4;

pub fn convergence_check(
    params: &MoleculeParams,
    flux: FluxPoint,
    dims: &[usize],
) -> Result<ConvergenceReport> {
    if dims.is_empty() {
        return Err(Error::InvalidInput("no dimensions given".into()));
    }
    if dims.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("dimensions must be ascending".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(dims.len());
    for &dim in dims {
        let basis = params.mode_basis(dim)?;
        let f_ge = spectrum_at(params, flux, &basis, 2)?.ge();
        let rel_change = rows.last().map(|prev| ((f_ge - prev.f_ge) / f_ge).abs());
        rows.push(ConvergenceRow {
            dim,
            f_ge,
            rel_change,
        });
    }
    Ok(ConvergenceReport {
        rows,
        tolerance: CONVERGENCE_TOL,
    })
}

/// Central difference of a transition in external flux (GHz per flux quantum).
pub fn flux_sensitivity(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
    label: Transition,
) -> Result<f64> {
    let up = transition_at(params, FluxPoint(flux.0 + FLUX_STEP), basis, label)?;
    let down = transition_at(params, FluxPoint(flux.0 - FLUX_STEP), basis, label)?;
    Ok((up - down) / (2.0 * FLUX_STEP))
}

/// Central difference of a transition in alpha/2 (GHz per unit alpha/2).
pub fn asymmetry_sensitivity(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
    label: Transition,
) -> Result<f64> {
    let half = 0.5 * params.alpha;
    let at = |h: f64| transition_at(&params.with_alpha(2.0 * h), flux, basis, label);
    Ok((at(half + ASYMMETRY_STEP)? - at(half - ASYMMETRY_STEP)?) / (2.0 * ASYMMETRY_STEP))
}

/// Expectation of the mode-swap operator in each of the lowest `k` states.
///
/// Values near +1 or -1 label symmetric and antisymmetric states.
pub fn swap_parities(h: &OperatorMatrix, mode_dim: usize, k: usize) -> Result<Vec<f64>> {
    let pairs = eigenpairs(h, k)?;
    let n = mode_dim;
    Ok((0..k)
        .map(|s| {
            let v = pairs.vectors.column(s);
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += v[i * n + j].conj() * v[j * n + i];
                }
            }
            acc.re
        })
        .collect())
}

/// Swap operator kept for callers that want the matrix.
pub fn swap_operator(dim: usize) -> OperatorMatrix {
    swap_modes(&OperatorMatrix::identity(dim * dim), dim)
}

/// Oscillator eigenfunctions `psi_k(phi)` for `k < dim` at one point.
pub fn oscillator_functions(dim: usize, phi_zpf: f64, phi: f64) -> Vec<f64> {
    // psi_0 has variance phi_zpf^2 in phi.
    let scale = std::f64::consts::SQRT_2 * phi_zpf;
    let xi = phi / scale;
    let norm = 1.0 / scale.sqrt();
    let mut out = Vec::with_capacity(dim);
    let h0 = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    out.push(h0);
    if dim > 1 {
        out.push(std::f64::consts::SQRT_2 * xi * h0);
    }
    for k in 1..dim.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out.iter().map(|h| h * norm).collect()
}

/// Position-space amplitudes of selected eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionGrid {
    pub phi1_axis: Vec<f64>,
    pub phi2_axis: Vec<f64>,
    /// One matrix per state; entry `(i, j)` is at `(phi1_axis[i], phi2_axis[j])`.
    pub amplitude: Vec<DMatrix<f64>>,
    pub states: Vec<usize>,
}

impl WavefunctionGrid {
    /// Riemann-sum L2 norm of state `idx` over the grid.
    pub fn norm(&self, idx: usize) -> f64 {
        let step = |a: &[f64]| if a.len() > 1 { a[1] - a[0] } else { 1.0 };
        let area = step(&self.phi1_axis) * step(&self.phi2_axis);
        (self.amplitude[idx].iter().map(|x| x * x).sum::<f64>() * area).sqrt()
    }
}

pub fn wavefunction_grid(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
    state_indices: &[usize],
    grid: &GridSpec,
) -> Result<WavefunctionGrid> {
    grid.validate()?;
    let k = state_indices.iter().copied().max().map_or(1, |m| m + 1);
    let h = build_hamiltonian(params, flux, basis)?;
    let pairs = eigenpairs(&h, k)?;
    let n = basis.dim();
    let table = |axis: &[f64]| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(axis.len(), n);
        for (r, &phi) in axis.iter().enumerate() {
            for (c, v) in oscillator_functions(n, basis.phi_zpf(), phi)
                .into_iter()
                .enumerate()
            {
                m[(r, c)] = v;
            }
        }
        m
    };
    let t1 = table(&grid.phi1_axis).map(|x| C64::new(x, 0.0));
    let t2 = table(&grid.phi2_axis).map(|x| C64::new(x, 0.0));
    let mut amplitude = Vec::with_capacity(state_indices.len());
    for &s in state_indices {
        let v = pairs.vectors.column(s);
        // Row index is the mode-1 level, column index the mode-2 level.
        let coeff = DMatrix::from_fn(n, n, |i, j| v[i * n + j]);
        let psi = &t1 * coeff * t2.transpose();
        let peak = psi
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = if peak.norm() > 0.0 {
            peak.conj() / peak.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        amplitude.push(psi.map(|z| (z * phase).re));
    }
    Ok(WavefunctionGrid {
        phi1_axis: grid.phi1_axis.clone(),
        phi2_axis: grid.phi2_axis.clone(),
        amplitude,
        states: state_indices.to_vec(),
    })
}
