// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

//! Device configuration files, spectroscopy CSV input and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::circuit::MoleculeParams;
use crate::error::{Error, Result};
use crate::fitter::TransitionObservation;
use crate::noise::FluxNoiseModel;
use crate::spectrum::Transition;

pub const DEFAULT_BASIS_DIM: usize = 30;

/// Readout antenna; `kappa_over_2pi` is in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antenna {
    pub f_a: f64,
    pub kappa_over_2pi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    pub name: String,
    pub params: MoleculeParams,
    pub basis_dim: usize,
    pub noise: Option<FluxNoiseModel>,
    pub antenna: Option<Antenna>,
    /// Fixed E_J·E_C for fitting; `None` means use the product of `params`.
    pub ejec_product: Option<f64>,
}

impl DeviceConfig {
    pub fn ejec_product(&self) -> f64 {
        self.ejec_product
            .unwrap_or(self.params.e_j * self.params.e_c)
    }

    /// The noise model, or an error naming the first missing key.
    pub fn require_noise(&self) -> Result<&FluxNoiseModel> {
        self.noise.as_ref().ok_or_else(|| {
            Error::InvalidInput("[noise] section with keys a_com and a_diff is required".into())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Top,
    Params,
    Noise,
    Antenna,
}

impl Section {
    fn header(self) -> &'static str {
        match self {
            Self::Top => "",
            Self::Params => "[params] ",
            Self::Noise => "[noise] ",
            Self::Antenna => "[antenna] ",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Self::Top => &["name", "basis_dim", "ejec_product"],
            Self::Params => &["e_j", "e_c", "e_l", "alpha"],
            Self::Noise => &["a_com", "a_diff", "f_ir"],
            Self::Antenna => &["f_a", "kappa_over_2pi"],
        }
    }
}

fn config_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("config line {line}: {msg}"))
}

struct Entries {
    values: BTreeMap<(Section, &'static str), (usize, String)>,
    seen: Vec<Section>,
}

impl Entries {
    fn raw(&self, section: Section, key: &'static str) -> Option<&(usize, String)> {
        self.values.get(&(section, key))
    }

    fn number(&self, section: Section, key: &'static str) -> Result<Option<f64>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<f64>().map(Some).map_err(|_| {
                config_error(
                    *line,
                    format!("{}{key}: expected a number, got '{v}'", section.header()),
                )
            }),
        }
    }

    fn required(&self, section: Section, key: &'static str) -> Result<f64> {
        self.number(section, key)?.ok_or_else(|| {
            Error::InvalidInput(format!(
                "config: missing required key {}{key}",
                section.header()
            ))
        })
    }

    /// Wraps a validation failure so the message names the keys involved.
    fn checked<T>(&self, section: Section, r: Result<T>) -> Result<T> {
        r.map_err(|e| {
            let line = section
                .keys()
                .iter()
                .filter_map(|k| self.raw(section, k).map(|(l, _)| *l))
                .min()
                .unwrap_or(0);
            config_error(line, format!("{}{e}", section.header()))
        })
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut section = Section::Top;
    let mut values = BTreeMap::new();
    let mut seen = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| config_error(line_no, format!("malformed section header '{line}'")))?
                .trim();
            section = match name {
                "params" => Section::Params,
                "noise" => Section::Noise,
                "antenna" => Section::Antenna,
                other => return Err(config_error(line_no, format!("unknown section [{other}]"))),
            };
            if seen.contains(&section) {
                return Err(config_error(line_no, format!("duplicate section [{name}]")));
            }
            seen.push(section);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_error(line_no, format!("expected 'key = value', got '{line}'"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let known = section.keys().iter().find(|k| **k == key).ok_or_else(|| {
            config_error(line_no, format!("unknown key {}{key}", section.header()))
        })?;
        if value.is_empty() {
            return Err(config_error(
                line_no,
                format!("{}{key}: empty value", section.header()),
            ));
        }
        if values
            .insert((section, *known), (line_no, value.to_string()))
            .is_some()
        {
            return Err(config_error(
                line_no,
                format!("duplicate key {}{key}", section.header()),
            ));
        }
    }
    Ok(Entries { values, seen })
}

/// Parses a device configuration.
///
/// ```text
/// name = device A
/// basis_dim = 30
/// [params]
/// e_j = 9.4
/// e_c = 3.4
/// e_l = 1.2
/// alpha = 0.006
/// [noise]
/// a_com = 6e-6
/// a_diff = 10e-6
/// ```
///
/// Errors name the offending key and, when it appears in the file, its line.
pub fn parse_config(text: &str) -> Result<DeviceConfig> {
    let e = tokenize(text)?;

    let name = e
        .raw(Section::Top, "name")
        .map(|(_, v)| v.trim_matches('"').to_string())
        .unwrap_or_default();
    let basis_dim = match e.raw(Section::Top, "basis_dim") {
        None => DEFAULT_BASIS_DIM,
        Some((line, v)) => match v.parse::<usize>() {
            Ok(d) if d >= 2 => d,
            _ => {
                return Err(config_error(
                    *line,
                    format!("basis_dim: expected an integer >= 2, got '{v}'"),
                ))
            }
        },
    };
    let ejec_product = e.number(Section::Top, "ejec_product")?;
    if let Some(p) = ejec_product {
        if !(p.is_finite() && p > 0.0) {
            let line = e.raw(Section::Top, "ejec_product").map_or(0, |r| r.0);
            return Err(config_error(
                line,
                format!("ejec_product must be > 0, got {p}"),
            ));
        }
    }

    let s = Section::Params;
    let (e_j, e_c, e_l, alpha) = (
        e.required(s, "e_j")?,
        e.required(s, "e_c")?,
        e.required(s, "e_l")?,
        e.required(s, "alpha")?,
    );
    let params = e.checked(s, MoleculeParams::new(e_j, e_c, e_l, alpha))?;

    let noise = if e.seen.contains(&Section::Noise) {
        let s = Section::Noise;
        let f_ir = e.number(s, "f_ir")?.unwrap_or(FluxNoiseModel::DEFAULT_F_IR);
        let model = FluxNoiseModel::new(e.required(s, "a_com")?, e.required(s, "a_diff")?, f_ir);
        Some(e.checked(s, model)?)
    } else {
        None
    };

    let antenna = if e.seen.contains(&Section::Antenna) {
        let s = Section::Antenna;
        let a = Antenna {
            f_a: e.required(s, "f_a")?,
            kappa_over_2pi: e.required(s, "kappa_over_2pi")?,
        };
        for (key, v) in [("f_a", a.f_a), ("kappa_over_2pi", a.kappa_over_2pi)] {
            if !(v.is_finite() && v > 0.0) {
                let line = e.raw(s, key).map_or(0, |r| r.0);
                return Err(config_error(
                    line,
                    format!("[antenna] {key} must be > 0, got {v}"),
                ));
            }
        }
        Some(a)
    } else {
        None
    };

    Ok(DeviceConfig {
        name,
        params,
        basis_dim,
        noise,
        antenna,
        ejec_product,
    })
}

/// Parsed spectroscopy file plus non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectroscopy {
    pub observations: Vec<TransitionObservation>,
    pub warnings: Vec<String>,
}

/// Reads `phi_ext,frequency_ghz,label[,weight]` rows.
///
/// Columns are located by header name. Unknown columns produce a warning and
/// are ignored. Row numbers in errors count the header as row 1.
pub fn parse_spectroscopy(text: &str) -> Result<Spectroscopy> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_row, header) = rows
        .next()
        .ok_or_else(|| Error::InvalidInput("spectroscopy file is empty".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| names.iter().position(|n| *n == name);
    let col = |name: &str| {
        find(name).ok_or_else(|| {
            Error::InvalidInput(format!(
                "spectroscopy header (row {header_row}) lacks column '{name}'"
            ))
        })
    };
    let (c_phi, c_freq, c_label) = (col("phi_ext")?, col("frequency_ghz")?, col("label")?);
    let c_weight = find("weight");
    let mut warnings = Vec::new();
    for (i, n) in names.iter().enumerate() {
        if ![Some(c_phi), Some(c_freq), Some(c_label), c_weight].contains(&Some(i)) {
            warnings.push(format!("ignoring unknown column '{n}'"));
        }
    }

    let mut observations = Vec::new();
    for (row, line) in rows {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::InvalidInput(format!(
                "row {row}: expected {} fields, got {}",
                names.len(),
                fields.len()
            )));
        }
        let number = |c: usize, what: &str| -> Result<f64> {
            fields[c].parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("row {row}: {what} '{}' is not a number", fields[c]))
            })
        };
        let phi = number(c_phi, "phi_ext")?;
        let freq = number(c_freq, "frequency_ghz")?;
        let label: Transition = fields[c_label]
            .parse()
            .map_err(|e| Error::InvalidInput(format!("row {row}: {e}")))?;
        let weight = match c_weight {
            Some(c) if !fields[c].is_empty() => number(c, "weight")?,
            _ => 1.0,
        };
        let obs = TransitionObservation::new(phi, freq, label, weight)
            .map_err(|e| Error::InvalidInput(format!("row {row}: {e}")))?;
        observations.push(obs);
    }
    if observations.is_empty() {
        return Err(Error::InvalidInput(
            "spectroscopy file has no data rows".into(),
        ));
    }
    Ok(Spectroscopy {
        observations,
        warnings,
    })
}

/// Writes observations in the layout `parse_spectroscopy` reads.
pub fn format_spectroscopy(data: &[TransitionObservation]) -> String {
    let mut out = String::from("phi_ext,frequency_ghz,label,weight\n");
    for o in data {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            o.phi_ext, o.frequency, o.label, o.weight
        );
    }
    out
}

/// One table: optional `# ` comment lines, a header, numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvBlock {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvBlock {
    pub fn new(header: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

/// Blocks separated by one blank line. Numbers use the shortest decimal
/// form that parses back to the same double, so output is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvDocument {
    pub blocks: Vec<CsvBlock>,
}

impl CsvDocument {
    pub fn single(block: CsvBlock) -> Self {
        Self {
            blocks: vec![block],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for c in &b.comments {
                let _ = writeln!(out, "# {c}");
            }
            let _ = writeln!(out, "{}", b.header.join(","));
            for r in &b.rows {
                let mut first = true;
                for v in r {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    let _ = write!(out, "{v}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut current: Option<CsvBlock> = None;
        let mut comments = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let row_no = idx + 1;
            if line.is_empty() {
                if let Some(b) = current.take() {
                    blocks.push(b);
                } else if !comments.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "row {row_no}: comment block without a header"
                    )));
                }
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if current.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "row {row_no}: comment inside a table"
                    )));
                }
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            match current.as_mut() {
                None => {
                    current = Some(CsvBlock {
                        comments: std::mem::take(&mut comments),
                        header: line.split(',').map(str::to_string).collect(),
                        rows: Vec::new(),
                    });
                }
                Some(b) => {
                    let row = line
                        .split(',')
                        .map(|f| {
                            f.parse::<f64>().map_err(|_| {
                                Error::InvalidInput(format!("row {row_no}: '{f}' is not a number"))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    if row.len() != b.header.len() {
                        return Err(Error::InvalidInput(format!(
                            "row {row_no}: expected {} fields, got {}",
                            b.header.len(),
                            row.len()
                        )));
                    }
                    b.rows.push(row);
                }
            }
        }
        if let Some(b) = current {
            blocks.push(b);
        } else if !comments.is_empty() {
            return Err(Error::InvalidInput(
                "trailing comment block without a header".into(),
            ));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidInput("CSV document is empty".into()));
        }
        Ok(Self { blocks })
    }
}

/// `x` rounded to six significant digits, in plain decimal notation.
pub fn six_significant(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..=9).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
