// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Circuit Hamiltonian of two fluxonium loops sharing a superinductance.
//!
//! Energies are frequencies (E/h) in GHz and external flux is in units of the
//! flux quantum. Loop 1 carries `(1 + alpha/2) phi_ext` and loop 2 carries
//! `(1 - alpha/2) phi_ext`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qop::{
    coupled_kron_sum, kron_sum, tensor_product, ModeBasis, OperatorMatrix, PaddedMode, C64,
};

/// Scale applied to the inductive oscillator length when building the basis.
pub const BASIS_WIDTH_FACTOR: f64 = 0.85;

/// Circuit energies of the molecule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoleculeParams {
    /// Josephson energy of each small junction (GHz).
    pub e_j: f64,
    /// Charging energy of each junction (GHz).
    pub e_c: f64,
    /// Inductive energy of each superinductance (GHz).
    pub e_l: f64,
    /// Fractional flux asymmetry between the loops.
    pub alpha: f64,
}

impl MoleculeParams {
    pub fn new(e_j: f64, e_c: f64, e_l: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            e_j,
            e_c,
            e_l,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    /// `e_j = 0` is accepted as the harmonic reference limit.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.e_j, self.e_c, self.e_l, self.alpha]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(format!(
                "non-finite value in {self:?}"
            )));
        }
        if self.e_j < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "e_j must be >= 0, got {}",
                self.e_j
            )));
        }
        if self.e_c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "e_c must be > 0, got {}",
                self.e_c
            )));
        }
        if self.e_l <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "e_l must be > 0, got {}",
                self.e_l
            )));
        }
        if self.alpha.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "|alpha| must be < 1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    /// Working basis for each mode.
    ///
    /// The oscillator length of the per-mode quadratic term `(1/3) e_l phi^2`
    /// is scaled by [`BASIS_WIDTH_FACTOR`]; the narrower basis resolves the
    /// junction wells better at fixed dimension.
    pub fn mode_basis(&self, dim: usize) -> Result<ModeBasis> {
        let inductive = self.inductive_basis(dim)?;
        ModeBasis::new(dim, inductive.phi_zpf() * BASIS_WIDTH_FACTOR)
    }

    /// Oscillator basis of the per-mode quadratic term alone.
    pub fn inductive_basis(&self, dim: usize) -> Result<ModeBasis> {
        ModeBasis::harmonic(dim, self.e_c, 2.0 * self.e_l / 3.0)
    }

    /// Reduced loop fluxes `(1 +- alpha/2) 2 pi phi_ext` in radians.
    pub fn loop_phases(&self, flux: FluxPoint) -> (f64, f64) {
        let base = TAU * flux.0;
        (
            (1.0 + 0.5 * self.alpha) * base,
            (1.0 - 0.5 * self.alpha) * base,
        )
    }

    /// Normal-mode frequencies `(common, differential)` of the `e_j = 0` circuit.
    pub fn harmonic_frequencies(&self) -> (f64, f64) {
        let w = 8.0 * self.e_c * self.e_l;
        (w.sqrt(), (w / 3.0).sqrt())
    }
}

/// Fitted parameters of the three measured devices.
pub mod devices {
    use super::MoleculeParams;

    pub const DEVICE_A: MoleculeParams = MoleculeParams {
        e_j: 9.4,
        e_c: 3.4,
        e_l: 1.2,
        alpha: 0.006,
    };

    pub const DEVICE_B: MoleculeParams = MoleculeParams {
        e_j: 9.5,
        e_c: 3.4,
        e_l: 1.1,
        alpha: 0.007,
    };

    pub const DEVICE_C: MoleculeParams = MoleculeParams {
        e_j: 9.8,
        e_c: 3.3,
        e_l: 1.2,
        alpha: 0.03,
    };

    pub const ALL: [(&str, MoleculeParams); 3] =
        [("A", DEVICE_A), ("B", DEVICE_B), ("C", DEVICE_C)];
}

/// Applied external flux in units of the flux quantum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FluxPoint(pub f64);

impl FluxPoint {
    pub fn phi_ext(&self) -> f64 {
        self.0
    }
}

impl From<f64> for FluxPoint {
    fn from(x: f64) -> Self {
        Self(x)
    }
}

fn check_inputs(params: &MoleculeParams, flux: FluxPoint) -> Result<()> {
    params.validate()?;
    if !flux.0.is_finite() {
        return Err(Error::InvalidInput(format!(
            "flux must be finite, got {}",
            flux.0
        )));
    }
    Ok(())
}

/// Advisory note when the truncation looks too small for the circuit.
pub fn basis_warning(params: &MoleculeParams, basis: &ModeBasis) -> Option<String> {
    (basis.dim() < 10 && params.e_j > 0.0).then(|| {
        format!(
            "basis dimension {} is likely too small for e_j/e_c = {:.3}",
            basis.dim(),
            params.e_j / params.e_c
        )
    })
}

/// Molecule Hamiltonian in the junction-phase gauge, dimension `dim^2`.
///
/// `H = 4 e_c (n1^2 + n2^2) + (e_l/3)(phi1^2 + phi2^2 + phi1 phi2)
///      - e_j cos(phi1 - theta1) - e_j cos(phi2 - theta2)`
pub fn build_hamiltonian(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
) -> Result<OperatorMatrix> {
    check_inputs(params, flux)?;
    let (theta1, theta2) = params.loop_phases(flux);
    let mode = PaddedMode::new(basis);
    let phase = mode.phase();
    let quad = &(&mode.number_squared() * (4.0 * params.e_c))
        + &(&mode.phase_squared() * (params.e_l / 3.0));
    let e = mode.exp_i_phase(1.0);
    let h1 = &quad - &(&mode.cosine_from(&e, theta1) * params.e_j);
    let h2 = &quad - &(&mode.cosine_from(&e, theta2) * params.e_j);
    Ok(coupled_kron_sum(&h1, &h2, params.e_l / 3.0, &phase, &phase))
}

/// Molecule Hamiltonian after shifting each junction phase by its loop flux.
///
/// `H = 4 e_c (n1^2 + n2^2)
///      + (e_l/4) [(phi1 + phi2 + phi_com)^2 + (1/3)(phi1 - phi2 + phi_diff)^2]
///      - 2 e_j cos((phi1 + phi2)/2) cos((phi1 - phi2)/2)`
///
/// with `phi_com = theta1 + theta2` and `phi_diff = theta1 - theta2`.
pub fn build_hamiltonian_gauge2(
    params: &MoleculeParams,
    flux: FluxPoint,
    basis: &ModeBasis,
) -> Result<OperatorMatrix> {
    check_inputs(params, flux)?;
    let (theta1, theta2) = params.loop_phases(flux);
    let (com, diff) = (theta1 + theta2, theta1 - theta2);
    let n = basis.dim();
    let mode = PaddedMode::new(basis);
    let phase = mode.phase();
    let phase_sq = mode.phase_squared();
    let id = OperatorMatrix::identity(n);
    let quarter_el = 0.25 * params.e_l;

    // (s + com)^2 with s = phi1 + phi2, and (d + diff)^2 with d = phi1 - phi2,
    // expanded into single-mode pieces and the phi1 phi2 product.
    let kinetic = &mode.number_squared() * (4.0 * params.e_c);
    let single = |sign: f64| -> OperatorMatrix {
        let sq = &phase_sq * (quarter_el * (1.0 + 1.0 / 3.0));
        let lin = &phase * (quarter_el * 2.0 * (com + sign * diff / 3.0));
        &(&kinetic + &sq) + &lin
    };
    let constant = &id * (quarter_el * (com * com + diff * diff / 3.0) / 2.0);
    let h1 = &single(1.0) + &constant;
    let h2 = &single(-1.0) + &constant;
    let cross = &tensor_product(&phase, &phase) * (quarter_el * (2.0 - 2.0 / 3.0));

    // cos(s/2) cos(d/2) = (1/4) sum over exp(+-i s/2) exp(+-i d/2), where
    // exp(i s/2) = E (x) E and exp(i d/2) = E (x) E^dagger with E = exp(i phi/2).
    let e = mode.exp_i_phase(0.5);
    let ed = e.adjoint();
    let prod = |a: &DMatrix<C64>, b: &DMatrix<C64>| mode.crop(&(a * b));
    let (ee, eed, ede, eded) = (prod(&e, &e), prod(&e, &ed), prod(&ed, &e), prod(&ed, &ed));
    let mut junction = tensor_product(&ee, &eed);
    junction = &junction + &tensor_product(&eed, &ee);
    junction = &junction + &tensor_product(&ede, &eded);
    junction = &junction + &tensor_product(&eded, &ede);
    let junction = &junction * (-2.0 * params.e_j * 0.25);

    Ok(&(&kron_sum(&h1, &h2) + &cross) + &junction)
}

/// Classical potential energy (GHz) at junction phases `(phi1, phi2)`.
pub fn potential(params: &MoleculeParams, flux: FluxPoint, phi1: f64, phi2: f64) -> f64 {
    let (t1, t2) = params.loop_phases(flux);
    params.e_l / 3.0 * (phi1 * phi1 + phi2 * phi2 + phi1 * phi2)
        - params.e_j * (phi1 - t1).cos()
        - params.e_j * (phi2 - t2).cos()
}

/// Rectangular grid of junction phases (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub phi1_axis: Vec<f64>,
    pub phi2_axis: Vec<f64>,
}

impl GridSpec {
    pub fn new(phi1_axis: Vec<f64>, phi2_axis: Vec<f64>) -> Result<Self> {
        let g = Self {
            phi1_axis,
            phi2_axis,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid with `points` samples per axis on `[lo, hi]`.
    pub fn square(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let axis = linspace(lo, hi, points);
        Self::new(axis.clone(), axis)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("phi1", &self.phi1_axis), ("phi2", &self.phi2_axis)] {
            if axis.is_empty() {
                return Err(Error::InvalidInput(format!("{name} axis is empty")));
            }
            if axis.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} axis has non-finite values"
                )));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput(format!(
                    "{name} axis must be strictly increasing"
                )));
            }
        }
        Ok(())
    }
}

/// Evenly spaced samples including both endpoints.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|k| {
                    if k + 1 == points {
                        hi
                    } else {
                        lo + step * k as f64
                    }
                })
                .collect()
        }
    }
}

/// Potential sampled on a grid; `values[(i, j)]` is at `(phi1_axis[i], phi2_axis[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    pub phi1_axis: Vec<f64>,
    pub phi2_axis: Vec<f64>,
    pub values: DMatrix<f64>,
}

pub fn potential_landscape(
    params: &MoleculeParams,
    flux: FluxPoint,
    grid: &GridSpec,
) -> Result<PotentialGrid> {
    check_inputs(params, flux)?;
    grid.validate()?;
    let values = DMatrix::from_fn(grid.phi1_axis.len(), grid.phi2_axis.len(), |i, j| {
        potential(params, flux, grid.phi1_axis[i], grid.phi2_axis[j])
    });
    Ok(PotentialGrid {
        phi1_axis: grid.phi1_axis.clone(),
        phi2_axis: grid.phi2_axis.clone(),
        values,
    })
}

/// Box searched for classical minima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub phi1: (f64, f64),
    pub phi2: (f64, f64),
    /// Seed samples per axis.
    pub seeds: usize,
}

impl SearchBox {
    pub fn symmetric(half_width: f64) -> Self {
        Self {
            phi1: (-half_width, half_width),
            phi2: (-half_width, half_width),
            seeds: 201,
        }
    }
}

impl Default for SearchBox {
    fn default() -> Self {
        Self::symmetric(TAU)
    }
}

/// A local minimum of the classical potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub phi1: f64,
    pub phi2: f64,
    pub u: f64,
}

const MERGE_RADIUS: f64 = 1e-6;

/// Compass search from a seed; the step halves whenever no axis move improves.
fn refine_minimum(
    f: &dyn Fn(f64, f64) -> f64,
    start: (f64, f64),
    step: f64,
    bounds: &SearchBox,
) -> (f64, f64, f64) {
    let (mut x, mut y) = start;
    let mut fx = f(x, y);
    let mut h = step;
    let clamp = |v: f64, (lo, hi): (f64, f64)| v.clamp(lo, hi);
    while h > 1e-10 {
        let mut moved = false;
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let (nx, ny) = (clamp(x + dx, bounds.phi1), clamp(y + dy, bounds.phi2));
            let fn_ = f(nx, ny);
            if fn_ < fx {
                x = nx;
                y = ny;
                fx = fn_;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (x, y, fx)
}

/// Local minima of the classical potential in `search`, sorted by energy.
///
/// Seeds are grid points no higher than their eight neighbours; each is
/// refined by compass search and duplicates within 1e-6 rad are merged.
/// Minima that end on the box boundary are discarded.
pub fn classical_minima(
    params: &MoleculeParams,
    flux: FluxPoint,
    search: &SearchBox,
) -> Result<Vec<Minimum>> {
    check_inputs(params, flux)?;
    let seeds = search.seeds.max(3);
    let ax1 = linspace(search.phi1.0, search.phi1.1, seeds);
    let ax2 = linspace(search.phi2.0, search.phi2.1, seeds);
    let u = |a: f64, b: f64| potential(params, flux, a, b);
    let grid = DMatrix::from_fn(seeds, seeds, |i, j| u(ax1[i], ax2[j]));
    let step = ((search.phi1.1 - search.phi1.0) / (seeds - 1) as f64)
        .max((search.phi2.1 - search.phi2.0) / (seeds - 1) as f64);

    let mut found: Vec<Minimum> = Vec::new();
    for i in 1..seeds - 1 {
        for j in 1..seeds - 1 {
            let v = grid[(i, j)];
            let is_seed = (i - 1..=i + 1).all(|a| (j - 1..=j + 1).all(|b| grid[(a, b)] >= v));
            if !is_seed {
                continue;
            }
            let (x, y, fx) = refine_minimum(&u, (ax1[i], ax2[j]), step, search);
            let on_edge = x <= search.phi1.0
                || x >= search.phi1.1
                || y <= search.phi2.0
                || y >= search.phi2.1;
            if on_edge {
                continue;
            }
            let duplicate = found
                .iter()
                .any(|m| (m.phi1 - x).hypot(m.phi2 - y) < MERGE_RADIUS);
            if !duplicate {
                found.push(Minimum {
                    phi1: x,
                    phi2: y,
                    u: fx,
                });
            }
        }
    }
    found.sort_by(|a, b| a.u.total_cmp(&b.u));
    Ok(found)
}

/// Number of minima within `tol` (GHz) of the lowest one.
pub fn degenerate_lowest_count(minima: &[Minimum], tol: f64) -> usize {
    match minima.first() {
        None => 0,
        Some(lowest) => minima.iter().filter(|m| m.u - lowest.u <= tol).count(),
    }
}
