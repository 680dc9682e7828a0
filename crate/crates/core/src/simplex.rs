// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Bounded Nelder-Mead minimization.

use std::cell::Cell;

/// Closed interval for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop once `max f - min f` over the simplex falls below this.
    pub f_tol: f64,
    /// Stop once the best value falls below this.
    pub f_floor: f64,
    pub max_evals: usize,
    /// Weight of the squared out-of-bounds distance, in units of the objective.
    pub penalty: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-6,
            f_floor: 1e-12,
            max_evals: 500,
            penalty: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    /// Best vertex, inside the bounds.
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn clamp(x: &[f64], bounds: &[Interval]) -> Vec<f64> {
    x.iter()
        .zip(bounds)
        .map(|(v, b)| v.clamp(b.lo, b.hi))
        .collect()
}

/// Minimizes `f` from `x0` with initial edge lengths `steps`.
///
/// Points outside `bounds` are evaluated at their clamped image plus a
/// quadratic penalty on the normalized excursion.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    bounds: &[Interval],
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0 && steps.len() == n && bounds.len() == n);
    let evals = Cell::new(0usize);
    let mut eval = |x: &[f64]| -> f64 {
        evals.set(evals.get() + 1);
        let c = clamp(x, bounds);
        let excursion: f64 = x
            .iter()
            .zip(&c)
            .zip(bounds)
            .map(|((v, cv), b)| ((v - cv) / b.width()).powi(2))
            .sum();
        let v = f(&c);
        let v = if v.is_finite() { v } else { f64::MAX / 4.0 };
        v + opts.penalty * excursion
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(clamp(x0, bounds));
    for i in 0..n {
        let mut v = simplex[0].clone();
        v[i] += steps[i];
        if !bounds[i].contains(v[i]) {
            v[i] = simplex[0][i] - steps[i];
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if values[n] - values[0] < opts.f_tol || values[0] < opts.f_floor {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(EXPAND);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(REFLECT * CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + SHRINK * (v - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = clamp(&simplex[0], bounds);
    SimplexResult {
        x: best,
        fx: values[0],
        evaluations: evals.get(),
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let b = [Interval::new(-5.0, 5.0); 2];
        let opts = SimplexOptions {
            f_tol: 1e-14,
            f_floor: 0.0,
            max_evals: 5000,
            penalty: 1.0,
        };
        let r = minimize(f, &[-1.2, 1.0], &[0.5, 0.5], &b, &opts);
        assert!(r.converged);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r.x
        );
    }

    #[test]
    fn optimum_outside_bounds_lands_on_boundary() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2);
        let b = [Interval::new(0.0, 2.0), Interval::new(-5.0, 5.0)];
        let opts = SimplexOptions {
            f_tol: 1e-12,
            ..Default::default()
        };
        let r = minimize(f, &[1.0, 0.0], &[0.3, 0.3], &b, &opts);
        assert!(
            (r.x[0] - 2.0).abs() < 1e-3 && (r.x[1] + 1.0).abs() < 1e-3,
            "{:?}",
            r.x
        );
        assert!(b[0].contains(r.x[0]));
    }

    #[test]
    fn respects_evaluation_budget() {
        let f = |x: &[f64]| x.iter().map(|v| v.abs().sqrt()).sum::<f64>();
        let b = [Interval::new(-1.0, 1.0); 3];
        let opts = SimplexOptions {
            f_tol: 0.0,
            f_floor: 0.0,
            max_evals: 40,
            penalty: 1.0,
        };
        let r = minimize(f, &[0.5, -0.3, 0.2], &[0.1; 3], &b, &opts);
        assert!(!r.converged);
        // The last iteration may add a reflection, a contraction and a shrink.
        assert!(r.evaluations < 40 + 2 + 3);
    }
}
