// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dephasing and population estimates.
//!
//! Rates are in s^-1, frequencies at the API boundary are in GHz and flux
//! amplitudes are in flux quanta.

use std::f64::consts::{LN_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::circuit::{FluxPoint, MoleculeParams};
use crate::error::{Error, Result};
use crate::qop::ModeBasis;
use crate::spectrum::spectrum_at;

const GHZ: f64 = 1e9;
/// Planck constant over Boltzmann constant, K per GHz.
pub const H_OVER_KB_K_PER_GHZ: f64 = 6.626_070_15e-34 / 1.380_649e-23 * GHZ;
/// Relative step for derivatives with respect to log-energies.
pub const LOG_ENERGY_STEP: f64 = 1e-4;

pub const FIXED_POINT_START: f64 = 10.0;
pub const FIXED_POINT_MAX_ITER: usize = 100;
/// Tolerance on successive eta iterates, relative once eta exceeds 1.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// How the noise amplitude enters the Ramsey rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum FormulaMode {
    /// `Gamma = 2 pi sqrt(A eta) |slope|`, as printed.
    PaperLiteral,
    /// `Gamma = 2 pi A sqrt(eta) |slope|`.
    #[default]
    Conventional,
}

impl FormulaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PaperLiteral => "paper-literal",
            Self::Conventional => "conventional",
        }
    }

    /// Amplitude factor multiplying `sqrt(eta)`.
    fn amplitude_factor(self, amplitude: f64) -> f64 {
        match self {
            Self::PaperLiteral => amplitude.sqrt(),
            Self::Conventional => amplitude,
        }
    }
}

impl fmt::Display for FormulaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(Self::PaperLiteral),
            "conventional" => Ok(Self::Conventional),
            _ => Err(Error::InvalidInput(format!(
                "unknown mode '{s}' (expected paper-literal or conventional)"
            ))),
        }
    }
}

/// 1/f flux-noise amplitudes and infrared cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxNoiseModel {
    pub a_com: f64,
    pub a_diff: f64,
    /// Infrared cutoff in Hz.
    pub f_ir: f64,
}

impl FluxNoiseModel {
    pub const DEFAULT_F_IR: f64 = 1.0;

    pub fn new(a_com: f64, a_diff: f64, f_ir: f64) -> Result<Self> {
        let m = Self {
            a_com,
            a_diff,
            f_ir,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("a_com", self.a_com), ("a_diff", self.a_diff)] {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be >= 0, got {a}"
                )));
            }
        }
        if !(self.f_ir.is_finite() && self.f_ir > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "f_ir must be > 0, got {}",
                self.f_ir
            )));
        }
        Ok(())
    }
}

/// Inferred amplitudes of the measured devices.
pub mod amplitudes {
    use super::FluxNoiseModel;

    pub const DEVICE_A: FluxNoiseModel = FluxNoiseModel {
        a_com: 6e-6,
        a_diff: 10e-6,
        f_ir: 1.0,
    };

    pub const DEVICE_B: FluxNoiseModel = FluxNoiseModel {
        a_com: 4e-6,
        a_diff: 4e-6,
        f_ir: 1.0,
    };

    pub const DEVICE_C: FluxNoiseModel = FluxNoiseModel {
        a_com: 8e-6,
        a_diff: 11e-6,
        f_ir: 1.0,
    };
}

/// Which branch of the self-consistent rate equation applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Fixed point found; `eta = ln(gamma / (2 pi f_ir))`.
    Converged,
    /// Zero sensitivity or zero amplitude.
    Insensitive,
    /// No fixed point exists: the rate would fall below the cutoff scale.
    BelowCutoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingResult {
    pub gamma: f64,
    pub eta: f64,
    pub iterations: usize,
    pub mode: FormulaMode,
    pub regime: Regime,
}

impl DephasingResult {
    fn zero(mode: FormulaMode, regime: Regime) -> Self {
        Self {
            gamma: 0.0,
            eta: 0.0,
            iterations: 0,
            mode,
            regime,
        }
    }

    /// `|eta - ln(gamma / (2 pi f_ir))|`; zero outside the converged regime.
    pub fn residual(&self, f_ir: f64) -> f64 {
        match self.regime {
            Regime::Converged => (self.eta - (self.gamma / (TAU * f_ir)).ln()).abs(),
            _ => 0.0,
        }
    }
}

/// `S(omega) = A^2 / |omega|`.
pub fn one_over_f_psd(amplitude: f64, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Singularity(
            "1/f spectrum diverges at omega = 0".into(),
        ));
    }
    Ok(amplitude * amplitude / omega.abs())
}

/// Smallest `k / (2 pi f_ir)` for which `Gamma = k sqrt(ln(Gamma / (2 pi f_ir)))`
/// has a solution, `sqrt(2 e)`.
pub fn cutoff_ratio() -> f64 {
    (2.0 * std::f64::consts::E).sqrt()
}

/// Solves `Gamma = k sqrt(eta)`, `eta = ln(Gamma / (2 pi f_ir))` for the stable root.
///
/// `k` is in s^-1. Iterates `eta <- ln r + ln(eta)/2` from `eta = 10` and falls
/// back to bisection if the iteration stalls.
pub fn solve_rate(k: f64, f_ir: f64, mode: FormulaMode) -> Result<DephasingResult> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "rate prefactor must be finite and >= 0, got {k}"
        )));
    }
    if !(f_ir.is_finite() && f_ir > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "f_ir must be > 0, got {f_ir}"
        )));
    }
    if k == 0.0 {
        return Ok(DephasingResult::zero(mode, Regime::Insensitive));
    }
    let r = k / (TAU * f_ir);
    if r < cutoff_ratio() {
        return Ok(DephasingResult::zero(mode, Regime::BelowCutoff));
    }
    let ln_r = r.ln();
    let finish = |eta: f64, iterations: usize| DephasingResult {
        gamma: k * eta.sqrt(),
        eta,
        iterations,
        mode,
        regime: Regime::Converged,
    };

    let mut eta = FIXED_POINT_START;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let next = ln_r + 0.5 * eta.ln();
        if !next.is_finite() || next <= 0.5 {
            break;
        }
        if (next - eta).abs() < FIXED_POINT_TOL * eta.max(1.0) {
            return Ok(finish(next, it));
        }
        eta = next;
    }

    // Bisection on eta - ln(eta)/2 = ln r, increasing for eta > 1/2.
    let g = |e: f64| e - 0.5 * e.ln() - ln_r;
    let (mut lo, mut hi) = (0.5, 40.0_f64);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut iterations = FIXED_POINT_MAX_ITER;
    while hi - lo > FIXED_POINT_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 4 * FIXED_POINT_MAX_ITER {
            return Err(Error::IterationFailure { iterations });
        }
    }
    Ok(finish(0.5 * (lo + hi), iterations))
}

fn prefactor(amplitude: f64, slope_ghz: f64, mode: FormulaMode) -> f64 {
    TAU * mode.amplitude_factor(amplitude) * (slope_ghz * GHZ).abs()
}

fn check_slope(slope: f64) -> Result<()> {
    if slope.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "slope must be finite, got {slope}"
        )))
    }
}

/// Rate at a pinned `eta`, bypassing self-consistency.
pub fn ramsey_rate_at_eta(amplitude: f64, slope_ghz: f64, eta: f64, mode: FormulaMode) -> f64 {
    prefactor(amplitude, slope_ghz, mode) * eta.sqrt()
}

/// Ramsey dephasing from common-mode flux noise; `slope` is d f_ge / d phi_ext in GHz.
pub fn ramsey_rate_common(
    model: &FluxNoiseModel,
    slope: f64,
    mode: FormulaMode,
) -> Result<DephasingResult> {
    model.validate()?;
    check_slope(slope)?;
    solve_rate(prefactor(model.a_com, slope, mode), model.f_ir, mode)
}

/// Ramsey dephasing from differential-mode flux noise.
///
/// `alpha_slope` is d f_ge / d(alpha/2) in GHz; the effective flux slope is
/// `|alpha_slope| / phi_ext`.
pub fn ramsey_rate_diff(
    model: &FluxNoiseModel,
    phi_ext: f64,
    alpha_slope: f64,
    mode: FormulaMode,
) -> Result<DephasingResult> {
    model.validate()?;
    check_slope(alpha_slope)?;
    if phi_ext == 0.0 {
        return Err(Error::Singularity(
            "differential-mode rate divides by phi_ext, which is 0".into(),
        ));
    }
    if !phi_ext.is_finite() {
        return Err(Error::InvalidInput(format!(
            "phi_ext must be finite, got {phi_ext}"
        )));
    }
    let slope = alpha_slope.abs() / phi_ext.abs();
    solve_rate(prefactor(model.a_diff, slope, mode), model.f_ir, mode)
}

/// Ramsey-to-echo rate ratio under 1/f noise.
pub fn echo_ramsey_ratio(gamma_r: f64, f_ir: f64) -> Result<f64> {
    if !(f_ir > 0.0 && f_ir.is_finite()) {
        return Err(Error::Domain(format!("f_ir must be > 0, got {f_ir}")));
    }
    if !(gamma_r.is_finite() && gamma_r > TAU * f_ir) {
        return Err(Error::Domain(format!(
            "ratio requires gamma_r > 2 pi f_ir, got gamma_r = {gamma_r}"
        )));
    }
    Ok(((gamma_r / (TAU * f_ir)).ln() / LN_2).sqrt())
}

/// Junctions whose critical current fluctuates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalCurrentTarget {
    /// Both small junctions together, through `e_j`.
    SmallJunction,
    /// Superinductance arrays, through `e_l`.
    Array,
}

/// |d f_ge / d ln E| in GHz for the energy selected by `target`.
pub fn log_energy_sensitivity(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
    target: CriticalCurrentTarget,
) -> Result<f64> {
    let scaled = |factor: f64| -> MoleculeParams {
        match target {
            CriticalCurrentTarget::SmallJunction => MoleculeParams {
                e_j: params.e_j * factor,
                ..*params
            },
            CriticalCurrentTarget::Array => MoleculeParams {
                e_l: params.e_l * factor,
                ..*params
            },
        }
    };
    let f = |factor: f64| -> Result<f64> { Ok(spectrum_at(&scaled(factor), flux, basis, 2)?.ge()) };
    let h = LOG_ENERGY_STEP;
    Ok(((f(1.0 + h)? - f(1.0 - h)?) / (2.0 * h)).abs())
}

/// Ramsey dephasing from critical-current noise, conventional mode.
///
/// `rel_amp` is the fractional 1/f amplitude of the critical current; for the
/// array it is reduced by `sqrt(n_array)`.
pub fn critical_current_dephasing(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
    target: CriticalCurrentTarget,
    rel_amp: f64,
    n_array: usize,
    f_ir: f64,
) -> Result<DephasingResult> {
    if !(rel_amp.is_finite() && rel_amp >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rel_amp must be >= 0, got {rel_amp}"
        )));
    }
    let amplitude = match target {
        CriticalCurrentTarget::SmallJunction => rel_amp,
        CriticalCurrentTarget::Array => {
            if n_array == 0 {
                return Err(Error::InvalidParameter("n_array must be >= 1".into()));
            }
            rel_amp / (n_array as f64).sqrt()
        }
    };
    let mode = FormulaMode::Conventional;
    if amplitude == 0.0 {
        return Ok(DephasingResult::zero(mode, Regime::Insensitive));
    }
    let slope = log_energy_sensitivity(params, flux, basis, target)?;
    solve_rate(prefactor(amplitude, slope, mode), f_ir, mode)
}

/// Thermal-photon dephasing `n kappa chi^2 / (kappa^2 + chi^2)`.
pub fn photon_noise_rate(n_bar: f64, kappa: f64, chi: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "kappa must be > 0, got {kappa}"
        )));
    }
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "n_bar must be >= 0, got {n_bar}"
        )));
    }
    if !chi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "chi must be finite, got {chi}"
        )));
    }
    let chi2 = chi * chi;
    Ok(n_bar * kappa * chi2 / (kappa * kappa + chi2))
}

/// Order-of-magnitude phase-slip scales in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSlipEstimate {
    pub e_s: f64,
    pub delta: f64,
    pub splitting: f64,
}

pub fn phase_slip_estimate(params: &MoleculeParams) -> Result<PhaseSlipEstimate> {
    params.validate()?;
    let (ej, ec) = (params.e_j, params.e_c);
    let e_s = (ej.powi(3) * ec).powf(0.25) * (-(8.0 * ej / ec).sqrt()).exp();
    let delta = 2.0 / 3.0 * PI * PI * params.e_l;
    Ok(PhaseSlipEstimate {
        e_s,
        delta,
        splitting: e_s * e_s / delta,
    })
}

/// Excited-state occupancy of a two-level system at temperature `t` (K).
pub fn thermal_population(f_ge: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "temperature must be > 0, got {t}"
        )));
    }
    if !f_ge.is_finite() {
        return Err(Error::InvalidInput(format!(
            "frequency must be finite, got {f_ge}"
        )));
    }
    let x = H_OVER_KB_K_PER_GHZ * f_ge / t;
    Ok(1.0 / (1.0 + x.exp()))
}
