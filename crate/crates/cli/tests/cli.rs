// Copyright 2026 fluxmol Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fluxmol::circuit::devices::{DEVICE_A, DEVICE_C};
use fluxmol::fitter::{synthesize, Candidate};
use fluxmol::io::{format_spectroscopy, CsvDocument};
use fluxmol::{MoleculeParams, Transition};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluxmol"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn fluxmol")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn config_text(p: &MoleculeParams) -> String {
    format!(
        "name = test\n[params]\ne_j = {}\ne_c = {}\ne_l = {}\nalpha = {}\n[noise]\na_com = 6e-6\na_diff = 10e-6\n",
        p.e_j, p.e_c, p.e_l, p.alpha
    )
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv(path: &Path) -> CsvDocument {
    CsvDocument::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Frequency printed for `label` in the spectrum table.
fn table_value(out: &str, label: &str) -> f64 {
    out.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(label)).then(|| it.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {label} line in\n{out}"))
}

#[test]
fn spectrum_device_a_ge() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.cfg", &config_text(&DEVICE_A));
    let o = run(&["spectrum", "--config", s(&cfg), "--phi", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ge = table_value(&stdout(&o), "ge");
    assert!((ge - 0.105).abs() < 0.2 * 0.105, "ge = {ge}");
}

#[test]
fn spectrum_prints_six_significant_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.cfg", &config_text(&DEVICE_A));
    let o = run(&[
        "spectrum",
        "--config",
        s(&cfg),
        "--phi",
        "0.5",
        "--dim",
        "16",
    ]);
    let out = stdout(&o);
    let line = out
        .lines()
        .find(|l| l.trim_start().starts_with("gd"))
        .unwrap();
    let digits: String = line
        .split_whitespace()
        .nth(1)
        .unwrap()
        .chars()
        .filter(char::is_ascii_digit)
        .collect();
    assert_eq!(digits.trim_start_matches('0').len(), 6, "{line}");
}

#[test]
fn spectrum_harmonic_ladder() {
    let dir = TempDir::new().unwrap();
    let p = MoleculeParams::new(0.0, 3.4, 1.2, 0.0).unwrap();
    let cfg = write(&dir, "h.cfg", &config_text(&p));
    let o = run(&[
        "spectrum",
        "--config",
        s(&cfg),
        "--phi",
        "0.3",
        "--dim",
        "20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let soft = (8.0 * p.e_c * p.e_l / 3.0).sqrt();
    let hard = (8.0 * p.e_c * p.e_l).sqrt();
    let mut ladder: Vec<f64> = (0..4)
        .flat_map(|m| (0..4).map(move |n| m as f64 * soft + n as f64 * hard))
        .collect();
    ladder.sort_by(f64::total_cmp);
    for (label, want) in ["ge", "gf", "gh", "gd"]
        .into_iter()
        .zip(ladder[1..].iter().copied())
    {
        let got = table_value(&out, label);
        assert!((got - want).abs() < 1e-5 * want, "{label}: {got} vs {want}");
    }
}

#[test]
fn missing_key_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let text = config_text(&DEVICE_A).replace("e_l = 1.2\n", "");
    let cfg = write(&dir, "bad.cfg", &text);
    let o = run(&["spectrum", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("e_l"), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_2_without_panicking() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "a.cfg", &config_text(&DEVICE_A));
    for text in [
        "",
        "[params\n",
        "e_j 9.4\n",
        "[params]\ne_j = x\n",
        "\u{0}\u{1}=\n[[",
    ] {
        let cfg = write(&dir, "m.cfg", text);
        let o = run(&["spectrum", "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(2), "{text:?}: {}", stderr(&o));
    }
    let cases: [&[&str]; 5] = [
        &["sweep", "--points", "1"],
        &["sweep", "--from", "0.5", "--to", "0.5"],
        &["potential", "--points", "5"],
        &["spectrum", "--dim", "1"],
        &["spectrum", "--levels", "0"],
    ];
    for extra in cases {
        let mut args = vec![extra[0], "--config", s(&good)];
        args.extend_from_slice(&extra[1..]);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = bin()
        .args(["spectrum", "--config", s(&good)])
        .env("FLUXMOL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_files_exit_3() {
    let dir = TempDir::new().unwrap();
    let o = run(&["spectrum", "--config", s(&dir.path().join("absent.cfg"))]);
    assert_eq!(o.status.code(), Some(3));
    let cfg = write(&dir, "a.cfg", &config_text(&DEVICE_A));
    let out = dir.path().join("no/such/dir/out.csv");
    let o = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--points",
        "2",
        "--dim",
        "8",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = run(&[
        "potential",
        "--config",
        s(&cfg),
        "--points",
        "11",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_device_c_minimum_near_043() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.cfg", &config_text(&DEVICE_C));
    let out = dir.path().join("c.csv");
    let o = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--from",
        "0",
        "--to",
        "1",
        "--points",
        "201",
        "--dim",
        "20",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = csv(&out);
    let b = &doc.blocks[0];
    assert_eq!(
        b.header,
        ["phi_ext", "f_ge", "f_gf", "f_gh", "f_gd", "dfge_dphi"]
    );
    assert_eq!(b.rows.len(), 201);
    let ge = b.column("f_ge").unwrap();
    let x = b.column("phi_ext").unwrap();
    let k = (0..ge.len())
        .min_by(|&i, &j| ge[i].total_cmp(&ge[j]))
        .unwrap();
    assert!((x[k] - 0.43).abs() <= 0.02, "minimum at {}", x[k]);
}

#[test]
fn sweep_symmetric_deterministic_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.cfg", &config_text(&DEVICE_A.with_alpha(0.0)));
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--config".into(),
            s(&cfg).into(),
            "--from".into(),
            "0".into(),
            "--to".into(),
            "1".into(),
            "--points".into(),
            "21".into(),
            "--dim".into(),
            "16".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    assert!(bin().args(args(&a)).status().unwrap().success());
    let one = bin()
        .args(args(&b))
        .env("FLUXMOL_THREADS", "1")
        .status()
        .unwrap();
    assert!(one.success());
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb, "output depends on run or thread count");
    assert!(!ta.contains(&b'\r'));

    let doc = csv(&a);
    assert_eq!(doc.to_csv().as_bytes(), &ta[..]);
    let ge = doc.blocks[0].column("f_ge").unwrap();
    for i in 0..ge.len() {
        let j = ge.len() - 1 - i;
        assert!(
            (ge[i] - ge[j]).abs() < 1e-6,
            "row {i}: {} vs {}",
            ge[i],
            ge[j]
        );
    }
}

fn fit_data(params: &MoleculeParams, dim: usize) -> Vec<fluxmol::TransitionObservation> {
    let pts: Vec<(f64, Transition)> = [0.0, 0.2, 0.45, 0.7, 1.1]
        .into_iter()
        .flat_map(|x| [(x, Transition::Ge), (x, Transition::Gf)])
        .collect();
    synthesize(params, &pts, dim).unwrap()
}

fn report_value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
        .parse()
        .unwrap()
}

#[test]
fn fit_recovers_generator_without_weights() {
    let dir = TempDir::new().unwrap();
    let truth = MoleculeParams::new(9.4, 3.4, 1.2, 0.03).unwrap();
    let csv_text: String = format_spectroscopy(&fit_data(&truth, 12))
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    assert!(csv_text.starts_with("phi_ext,frequency_ghz,label\n"));
    let data = write(&dir, "d.csv", &csv_text);
    let t = Candidate::from_params(&truth);
    let start = Candidate {
        alpha: t.alpha * 1.1,
        ratio: t.ratio * 0.9,
        e_l: t.e_l * 1.1,
    }
    .to_params(truth.e_j * truth.e_c)
    .unwrap();
    let cfg = write(&dir, "f.cfg", &config_text(&start));
    let out = dir.path().join("report.txt");
    let o = run(&[
        "fit",
        "--config",
        s(&cfg),
        "--data",
        s(&data),
        "--dim",
        "12",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(&out).unwrap();
    assert!((report_value(&report, "ejec_product") - 31.96).abs() < 1e-9);
    for (key, want) in [
        ("alpha", truth.alpha),
        ("ej_over_ec", t.ratio),
        ("e_l", truth.e_l),
    ] {
        let got = report_value(&report, key);
        assert!((got / want - 1.0).abs() < 0.01, "{key}: {got} vs {want}");
    }
    assert!(report_value(&report, "evaluations") > 0.0);
}

#[test]
fn fit_rejects_bad_data() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.cfg", &config_text(&DEVICE_A));
    let cases = [
        ("", ""),
        (
            "phi_ext,frequency_ghz,label\n0,11.2,ge\n0.5,0.1,xy\n",
            "row 3",
        ),
        (
            "phi_ext,frequency_ghz,label\n0,11.2,ge\n0.5,0.1,ge\n0.6,1.0,ge\n",
            "at least 4",
        ),
    ];
    for (text, needle) in cases {
        let data = write(&dir, "d.csv", text);
        let o = run(&["fit", "--config", s(&cfg), "--data", s(&data), "--dim", "8"]);
        assert_eq!(o.status.code(), Some(2), "{text:?}");
        assert!(stderr(&o).contains(needle), "{}", stderr(&o));
    }
}

#[test]
fn dephasing_columns_and_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.cfg", &config_text(&DEVICE_A));
    let out = dir.path().join("g.csv");
    let o = run(&[
        "dephasing",
        "--config",
        s(&cfg),
        "--from",
        "0.3",
        "--to",
        "0.7",
        "--points",
        "41",
        "--dim",
        "20",
        "--mode",
        "paper-literal",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = csv(&out);
    let b = &doc.blocks[0];
    assert!(b.comments.iter().any(|c| c == "mode = paper-literal"));
    assert_eq!(
        b.header,
        ["phi_ext", "gamma_common", "gamma_diff", "gamma_total"]
    );
    for r in &b.rows {
        assert_eq!(r[3], r[1] + r[2]);
    }
    // Near the sweet spot the differential term dominates.
    let x = b.column("phi_ext").unwrap();
    let k = x.iter().position(|v| (v - 0.5).abs() < 1e-9).unwrap();
    assert!(b.rows[k][2] > b.rows[k][1]);
    // The common-mode rate has a local minimum near the f_ge minimum.
    let com = b.column("gamma_common").unwrap();
    let m = (0..com.len())
        .min_by(|&i, &j| com[i].total_cmp(&com[j]))
        .unwrap();
    assert!(
        m > 0 && m < com.len() - 1 && (x[m] - 0.5).abs() < 0.03,
        "min at {}",
        x[m]
    );
}

#[test]
fn dephasing_rejects_zero_flux() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.cfg", &config_text(&DEVICE_A));
    let o = run(&[
        "dephasing",
        "--config",
        s(&cfg),
        "--from",
        "-0.1",
        "--to",
        "0.4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("singular"), "{}", stderr(&o));
    let text = config_text(&DEVICE_A);
    let text = &text[..text.find("[noise]").unwrap()];
    let cfg = write(&dir, "quiet.cfg", text);
    let o = run(&[
        "dephasing",
        "--config",
        s(&cfg),
        "--from",
        "0.1",
        "--to",
        "0.4",
        "--points",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a_com"));
}

fn potential_doc(dir: &TempDir, p: &MoleculeParams, phi: &str) -> CsvDocument {
    let cfg = write(dir, "p.cfg", &config_text(p));
    let out = dir.path().join("p.csv");
    let o = run(&[
        "potential",
        "--config",
        s(&cfg),
        "--phi",
        phi,
        "--points",
        "21",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = csv(&out);
    assert_eq!(doc.to_csv(), std::fs::read_to_string(&out).unwrap());
    doc
}

fn degenerate(doc: &CsvDocument) -> usize {
    doc.blocks[1]
        .comments
        .iter()
        .find_map(|c| c.strip_prefix("degenerate_lowest = "))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn potential_minima_summary() {
    let dir = TempDir::new().unwrap();
    let doc = potential_doc(&dir, &DEVICE_A, "0");
    assert_eq!(degenerate(&doc), 1);
    let lowest = &doc.blocks[1].rows[0];
    assert!((lowest[2] + 2.0 * DEVICE_A.e_j).abs() < 1e-9, "{lowest:?}");

    let sym = DEVICE_A.with_alpha(0.0);
    let doc = potential_doc(&dir, &sym, "0.5");
    assert_eq!(degenerate(&doc), 2);

    // Long format rows run phi1-major; U(phi1, phi2) = U(phi2, phi1).
    let rows = &doc.blocks[0].rows;
    assert_eq!(rows.len(), 21 * 21);
    for i in 0..21 {
        for j in 0..21 {
            let (a, b) = (rows[i * 21 + j][2], rows[j * 21 + i][2]);
            assert!((a - b).abs() < 1e-12);
        }
    }
}
