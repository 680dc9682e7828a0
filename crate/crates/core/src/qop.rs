// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Operators on truncated harmonic-oscillator modes.
//!
//! Each circuit mode is represented in the number basis `|0>, ..., |N-1>` of
//! an auxiliary oscillator with phase `phi = phi_zpf (a + a^dagger)` and charge
//! `n = i n_zpf (a^dagger - a)`, normalized so that `[phi, n] = i`.
//! Nonpolynomial functions of the phase (and squares) are evaluated in a
//! basis enlarged by `pad` levels and then cropped back to `N`, which keeps the
//! low-lying matrix elements free of truncation artifacts.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Truncated oscillator basis for a single mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBasis {
    dim: usize,
    phi_zpf: f64,
    n_zpf: f64,
    pad: usize,
}

impl ModeBasis {
    pub const DEFAULT_PAD: usize = 32;

    /// Basis of `dim` levels with phase zero-point amplitude `phi_zpf`.
    ///
    /// The charge amplitude is fixed by `phi_zpf * n_zpf = 1/2`.
    pub fn new(dim: usize, phi_zpf: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidBasis(format!("dim must be >= 2, got {dim}")));
        }
        if !(phi_zpf.is_finite() && phi_zpf > 0.0) {
            return Err(Error::InvalidBasis(format!(
                "phi_zpf must be positive and finite, got {phi_zpf}"
            )));
        }
        Ok(Self {
            dim,
            phi_zpf,
            n_zpf: 0.5 / phi_zpf,
            pad: Self::DEFAULT_PAD,
        })
    }

    /// Basis matched to `H = 4 e_c n^2 + curvature phi^2 / 2`.
    pub fn harmonic(dim: usize, e_c: f64, curvature: f64) -> Result<Self> {
        if !(e_c > 0.0 && curvature > 0.0) {
            return Err(Error::InvalidBasis(format!(
                "charging energy and curvature must be positive (e_c = {e_c}, curvature = {curvature})"
            )));
        }
        Self::new(dim, (2.0 * e_c / curvature).powf(0.25))
    }

    pub fn with_pad(mut self, pad: usize) -> Self {
        self.pad = pad;
        self
    }

    pub fn with_dim(self, dim: usize) -> Result<Self> {
        Ok(Self::new(dim, self.phi_zpf)?.with_pad(self.pad))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi_zpf(&self) -> f64 {
        self.phi_zpf
    }

    pub fn n_zpf(&self) -> f64 {
        self.n_zpf
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn padded_dim(&self) -> usize {
        self.dim + self.pad
    }
}

/// Dense square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(DMatrix<C64>);

impl OperatorMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidInput(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self(entries))
    }

    pub fn from_real(entries: &DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| C64::new(x, 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest entrywise deviation `max |A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.0[(i, j)] - self.0[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Largest absolute imaginary part over all entries.
    pub fn max_imag(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
        &self.0 * v
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        OperatorMatrix(&self.0 * C64::new(rhs, 0.0))
    }
}

fn lowering_matrix(m: usize) -> DMatrix<C64> {
    let mut a = DMatrix::from_element(m, m, ZERO);
    for k in 1..m {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

fn crop(m: &DMatrix<C64>, dim: usize) -> OperatorMatrix {
    OperatorMatrix(m.view((0, 0), (dim, dim)).into_owned())
}

/// `(lowering, raising)` with `<k-1|a|k> = sqrt(k)`.
pub fn ladder_ops(basis: &ModeBasis) -> (OperatorMatrix, OperatorMatrix) {
    let a = lowering_matrix(basis.dim());
    let adag = a.adjoint();
    (OperatorMatrix(a), OperatorMatrix(adag))
}

/// Phase and charge of one mode in the oversized basis.
#[derive(Debug, Clone)]
pub(crate) struct PaddedMode {
    dim: usize,
    phase: DMatrix<C64>,
    number: DMatrix<C64>,
}

impl PaddedMode {
    pub(crate) fn new(basis: &ModeBasis) -> Self {
        let a = lowering_matrix(basis.padded_dim());
        let adag = a.adjoint();
        let phase = (&a + &adag) * C64::new(basis.phi_zpf(), 0.0);
        let number = (&adag - &a) * (I * basis.n_zpf());
        Self {
            dim: basis.dim(),
            phase,
            number,
        }
    }

    pub(crate) fn crop(&self, m: &DMatrix<C64>) -> OperatorMatrix {
        crop(m, self.dim)
    }

    pub(crate) fn phase(&self) -> OperatorMatrix {
        self.crop(&self.phase)
    }

    pub(crate) fn phase_squared(&self) -> OperatorMatrix {
        self.crop(&(&self.phase * &self.phase))
    }

    pub(crate) fn number_squared(&self) -> OperatorMatrix {
        self.crop(&(&self.number * &self.number))
    }

    /// `exp(i * scale * phi)` in the oversized basis, not cropped.
    pub(crate) fn exp_i_phase(&self, scale: f64) -> DMatrix<C64> {
        expm(&(&self.phase * (I * scale)))
    }

    /// `cos(phi - offset)` cropped to the working dimension.
    pub(crate) fn cosine(&self, offset: f64) -> OperatorMatrix {
        self.cosine_from(&self.exp_i_phase(1.0), offset)
    }

    /// `cos(phi - offset)` from a precomputed `exp(i phi)`.
    pub(crate) fn cosine_from(&self, e: &DMatrix<C64>, offset: f64) -> OperatorMatrix {
        let rot = C64::from_polar(1.0, -offset);
        let c = (e * rot + e.adjoint() * rot.conj()) * C64::new(0.5, 0.0);
        self.crop(&c)
    }
}

/// `phi = phi_zpf (a + a^dagger)`.
pub fn phase_op(basis: &ModeBasis) -> OperatorMatrix {
    let (a, adag) = ladder_ops(basis);
    &(&a + &adag) * basis.phi_zpf()
}

/// `n = i n_zpf (a^dagger - a)`.
pub fn number_op(basis: &ModeBasis) -> OperatorMatrix {
    let (a, adag) = ladder_ops(basis);
    (&adag - &a).scale(I * basis.n_zpf())
}

/// `phi^2`, squared in the oversized basis before cropping.
pub fn phase_squared_op(basis: &ModeBasis) -> OperatorMatrix {
    PaddedMode::new(basis).phase_squared()
}

/// `n^2`, squared in the oversized basis before cropping.
pub fn number_squared_op(basis: &ModeBasis) -> OperatorMatrix {
    PaddedMode::new(basis).number_squared()
}

/// `cos(phi - offset)` built from `exp(i phi)` in a basis of `dim + pad`
/// levels, cropped to `dim`.
pub fn cosine_phase_op(basis: &ModeBasis, offset: f64) -> OperatorMatrix {
    PaddedMode::new(basis).cosine(offset)
}

/// `exp(i * scale * phi)` computed in the oversized basis, cropped to `dim`.
pub fn phase_exponential_op(basis: &ModeBasis, scale: f64) -> OperatorMatrix {
    let mode = PaddedMode::new(basis);
    mode.crop(&mode.exp_i_phase(scale))
}

/// Kronecker product; `a` acts on mode 1 (the slow index).
pub fn tensor_product(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix(a.0.kronecker(&b.0))
}

/// `a (x) I + I (x) b + c (u (x) v)` in one pass over the product space.
pub fn coupled_kron_sum(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    c: f64,
    u: &OperatorMatrix,
    v: &OperatorMatrix,
) -> OperatorMatrix {
    let (na, nb) = (a.dim(), b.dim());
    assert!(u.dim() == na && v.dim() == nb, "dimension mismatch");
    let n = na * nb;
    let mut out = DMatrix::from_element(n, n, ZERO);
    let data = out.as_mut_slice();
    for k in 0..na {
        for l in 0..nb {
            let col = &mut data[(k * nb + l) * n..(k * nb + l + 1) * n];
            for i in 0..na {
                let cu = u.0[(i, k)] * c;
                let row = &mut col[i * nb..(i + 1) * nb];
                for (j, x) in row.iter_mut().enumerate() {
                    *x = cu * v.0[(j, l)];
                }
                row[l] += a.0[(i, k)];
                if i == k {
                    for (j, x) in row.iter_mut().enumerate() {
                        *x += b.0[(j, l)];
                    }
                }
            }
        }
    }
    OperatorMatrix(out)
}

/// `a (x) I + I (x) b` without forming the identity factors.
pub fn kron_sum(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = DMatrix::from_element(n, n, ZERO);
    for i in 0..na {
        for k in 0..na {
            let aik = a.0[(i, k)];
            if aik != ZERO {
                for j in 0..nb {
                    out[(i * nb + j, k * nb + j)] += aik;
                }
            }
        }
    }
    for i in 0..na {
        for j in 0..nb {
            for l in 0..nb {
                let bjl = b.0[(j, l)];
                if bjl != ZERO {
                    out[(i * nb + j, i * nb + l)] += bjl;
                }
            }
        }
    }
    OperatorMatrix(out)
}

/// Permutation exchanging the two modes of an `n x n` product space.
pub fn swap_modes(op: &OperatorMatrix, n: usize) -> OperatorMatrix {
    assert_eq!(op.dim(), n * n, "operator is not on an n x n product space");
    let idx = |k: usize| (k % n) * n + k / n;
    let m = DMatrix::from_fn(n * n, n * n, |r, c| op.0[(idx(r), idx(c))]);
    OperatorMatrix(m)
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// The argument is scaled so its 1-norm is at most 1/2, where the Taylor
/// series reaches double precision in under 20 terms.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = a * C64::new(0.5_f64.powi(squarings), 0.0);

    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=40 {
        term = (&term * &x) * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if one_norm(&term) <= 1e-18 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
