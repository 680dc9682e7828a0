// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::Path;

use fluxmol::circuit::{basis_warning, classical_minima, degenerate_lowest_count, linspace};
use fluxmol::circuit::{potential_landscape, GridSpec, SearchBox};
use fluxmol::fitter::{self, Candidate, FitConfig};
use fluxmol::io::DeviceConfig;
use fluxmol::io::{parse_config, parse_spectroscopy, six_significant, CsvBlock, CsvDocument};
use fluxmol::noise::{ramsey_rate_common, ramsey_rate_diff};
use fluxmol::qop::ModeBasis;
use fluxmol::spectrum::{asymmetry_sensitivity, flux_sensitivity, spectrum_at};
use fluxmol::{FluxPoint, FormulaMode, Transition};
use rayon::prelude::*;

use crate::{CliError, Common, Range};

/// Minima closer than this to the lowest one (GHz) count as degenerate.
const DEGENERACY_TOL: f64 = 1e-6;
const MIN_GRID: usize = 11;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))
        }
    }
}

struct Loaded {
    config: DeviceConfig,
    basis: ModeBasis,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let config = parse_config(&read(&common.config)?)?;
    let dim = common.dim.unwrap_or(config.basis_dim);
    let basis = config.params.mode_basis(dim)?;
    if let Some(w) = basis_warning(&config.params, &basis) {
        eprintln!("warning: {w}");
    }
    Ok(Loaded { config, basis })
}

fn flux_grid(range: &Range) -> Result<Vec<f64>, CliError> {
    if range.points < 2 {
        return Err(CliError::Validation(format!(
            "--points must be at least 2, got {}",
            range.points
        )));
    }
    if !(range.from.is_finite() && range.to.is_finite()) || range.from == range.to {
        return Err(CliError::Validation(format!(
            "--from and --to must be finite and distinct, got {} and {}",
            range.from, range.to
        )));
    }
    Ok(linspace(range.from, range.to, range.points))
}

fn check_flux(phi: f64) -> Result<(), CliError> {
    if phi.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "--phi must be finite, got {phi}"
        )))
    }
}

pub fn spectrum(common: &Common, phi: f64, levels: usize) -> Result<(), CliError> {
    check_flux(phi)?;
    let Loaded { config, basis } = load(common)?;
    let s = spectrum_at(&config.params, FluxPoint(phi), &basis, levels)?;

    let mut table = String::new();
    let _ = writeln!(
        table,
        "{} phi_ext = {phi}, dim = {}",
        if config.name.is_empty() {
            "device"
        } else {
            &config.name
        },
        basis.dim()
    );
    let _ = writeln!(table, "level  energy_ghz");
    for (k, e) in s.levels().iter().enumerate() {
        let _ = writeln!(table, "{k:>5}  {}", six_significant(*e));
    }
    let _ = writeln!(table, "transition  frequency_ghz");
    for (t, f) in s.transitions() {
        let _ = writeln!(table, "{:>10}  {}", t.as_str(), six_significant(f));
    }
    emit(None, &table)?;

    if let Some(out) = &common.out {
        let mut lv = CsvBlock::new(&["level", "energy_ghz"]);
        lv.comments.push(format!("phi_ext = {phi}"));
        for (k, e) in s.levels().iter().enumerate() {
            lv.push_row(vec![k as f64, *e]);
        }
        let ts = s.transitions();
        let names: Vec<String> = ts.iter().map(|(t, _)| format!("f_{t}")).collect();
        let mut tr = CsvBlock {
            comments: Vec::new(),
            header: names,
            rows: Vec::new(),
        };
        tr.rows.push(ts.iter().map(|(_, f)| *f).collect());
        let doc = CsvDocument {
            blocks: vec![lv, tr],
        };
        emit(Some(out), &doc.to_csv())?;
    }
    Ok(())
}

pub fn sweep(common: &Common, range: &Range) -> Result<(), CliError> {
    let grid = flux_grid(range)?;
    let Loaded { config, basis } = load(common)?;
    let labels = [
        Transition::Ge,
        Transition::Gf,
        Transition::Gh,
        Transition::Gd,
    ];
    let rows: Vec<Result<Vec<f64>, fluxmol::Error>> = grid
        .par_iter()
        .map(|&x| {
            let s = spectrum_at(&config.params, FluxPoint(x), &basis, 5)?;
            let slope = flux_sensitivity(&config.params, FluxPoint(x), &basis, Transition::Ge)?;
            let mut row = vec![x];
            row.extend(labels.iter().map(|t| s.transition(*t).unwrap_or(f64::NAN)));
            row.push(slope);
            Ok(row)
        })
        .collect();

    let mut block = CsvBlock::new(&["phi_ext", "f_ge", "f_gf", "f_gh", "f_gd", "dfge_dphi"]);
    for (x, row) in grid.iter().zip(rows) {
        let row = row.map_err(|e| CliError::Validation(format!("phi_ext = {x}: {e}")))?;
        block.push_row(row);
    }
    emit(common.out.as_deref(), &CsvDocument::single(block).to_csv())
}

pub fn fit(common: &Common, data_path: &Path) -> Result<(), CliError> {
    let Loaded { config, basis } = load(common)?;
    let parsed = parse_spectroscopy(&read(data_path)?)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }

    let mut fc = FitConfig::new(
        config.ejec_product(),
        Candidate::from_params(&config.params),
    );
    if common.dim.is_some() {
        fc.basis_dim = basis.dim();
        fc.polish_dim = None;
    }
    let r = fitter::fit(&fc, &parsed.observations)?;
    let p = r.params;

    let mut report = String::new();
    let _ = writeln!(report, "# fluxmol fit report");
    let _ = writeln!(report, "observations = {}", parsed.observations.len());
    let _ = writeln!(report, "ejec_product = {}", r.ejec_product);
    let _ = writeln!(report, "alpha = {}", p.alpha);
    let _ = writeln!(report, "ej_over_ec = {}", p.e_j / p.e_c);
    let _ = writeln!(report, "e_j = {}", p.e_j);
    let _ = writeln!(report, "e_c = {}", p.e_c);
    let _ = writeln!(report, "e_l = {}", p.e_l);
    let _ = writeln!(report, "residual_ghz = {}", r.residual);
    let _ = writeln!(report, "evaluations = {}", r.evaluations);
    let _ = writeln!(report, "converged = {}", r.converged);
    emit(common.out.as_deref(), &report)
}

pub fn dephasing(common: &Common, range: &Range, mode: FormulaMode) -> Result<(), CliError> {
    let grid = flux_grid(range)?;
    let (lo, hi) = (range.from.min(range.to), range.from.max(range.to));
    if lo <= 0.0 && hi >= 0.0 {
        return Err(CliError::Validation(format!(
            "flux range [{lo}, {hi}] contains phi_ext = 0, where the differential-mode rate \
             is singular (it divides by phi_ext)"
        )));
    }
    let Loaded { config, basis } = load(common)?;
    let noise = *config.require_noise()?;

    let rows: Vec<Result<Vec<f64>, fluxmol::Error>> = grid
        .par_iter()
        .map(|&x| {
            let flux = FluxPoint(x);
            let slope = flux_sensitivity(&config.params, flux, &basis, Transition::Ge)?;
            let alpha_slope = asymmetry_sensitivity(&config.params, flux, &basis, Transition::Ge)?;
            let common = ramsey_rate_common(&noise, slope, mode)?.gamma;
            let diff = ramsey_rate_diff(&noise, x, alpha_slope, mode)?.gamma;
            Ok(vec![x, common, diff, common + diff])
        })
        .collect();

    let mut block = CsvBlock::new(&["phi_ext", "gamma_common", "gamma_diff", "gamma_total"]);
    block.comments.push(format!("mode = {}", mode.as_str()));
    block.comments.push(format!(
        "a_com = {}, a_diff = {}, f_ir = {}",
        noise.a_com, noise.a_diff, noise.f_ir
    ));
    block.comments.push("rates in 1/s".into());
    for (x, row) in grid.iter().zip(rows) {
        let row = row.map_err(|e| CliError::Validation(format!("phi_ext = {x}: {e}")))?;
        block.push_row(row);
    }
    emit(common.out.as_deref(), &CsvDocument::single(block).to_csv())
}

pub fn potential(
    common: &Common,
    phi: f64,
    points: usize,
    half_width: f64,
) -> Result<(), CliError> {
    check_flux(phi)?;
    if points < MIN_GRID {
        return Err(CliError::Validation(format!(
            "--points must be at least {MIN_GRID}, got {points}"
        )));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(CliError::Validation(format!(
            "--range must be > 0, got {half_width}"
        )));
    }
    let config = parse_config(&read(&common.config)?)?;
    let flux = FluxPoint(phi);
    let grid = potential_landscape(
        &config.params,
        flux,
        &GridSpec::square(-half_width, half_width, points)?,
    )?;
    let minima = classical_minima(&config.params, flux, &SearchBox::symmetric(half_width))?;

    let mut landscape = CsvBlock::new(&["phi1", "phi2", "U_GHz"]);
    landscape.comments.push(format!("phi_ext = {phi}"));
    for (i, a) in grid.phi1_axis.iter().enumerate() {
        for (j, b) in grid.phi2_axis.iter().enumerate() {
            landscape.push_row(vec![*a, *b, grid.values[(i, j)]]);
        }
    }
    let mut found = CsvBlock::new(&["phi1", "phi2", "U_GHz"]);
    found.comments.push("minima".into());
    found.comments.push(format!(
        "degenerate_lowest = {}",
        degenerate_lowest_count(&minima, DEGENERACY_TOL)
    ));
    for m in &minima {
        found.push_row(vec![m.phi1, m.phi2, m.u]);
    }
    let doc = CsvDocument {
        blocks: vec![landscape, found],
    };
    emit(common.out.as_deref(), &doc.to_csv())
}
