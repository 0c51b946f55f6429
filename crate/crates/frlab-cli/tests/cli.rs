use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn frlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frlab")).current_dir(dir).args(args).output().expect("spawn frlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lattice_and_interactions_verify() {
    let d = tempfile::tempdir().unwrap();
    let o = frlab(d.path(), &["lattice", "verify", "--max-shell", "8", "--pair-shell", "4", "--out", "lat.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&d.path().join("lat.json"))["passed"], true);
    assert!(d.path().join("lat.json.manifest.json").exists());

    let o = frlab(d.path(), &["interactions", "verify", "--max-m", "3", "--out", "int.json"]);
    assert_eq!(code(&o), 0);
    let rep = json(&d.path().join("int.json"));
    assert_eq!(rep["passed"], true);
    assert!(rep["max_relative_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn simulate_writes_columns_and_monotone_shell_energy() {
    let d = tempfile::tempdir().unwrap();
    let o = frlab(d.path(), &["simulate", "--shells", "10", "--psi0", "delta0", "--t-end", "0.5", "--out", "run.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&d.path().join("run.csv"));
    assert_eq!(h.len(), 1 + 11 + 5);
    assert_eq!(h[0], "t");
    assert_eq!(h[11], "psi_10");
    assert_eq!(h.last().unwrap(), "sup_weighted");
    let e0 = h.iter().position(|c| c == "E_0").unwrap();
    assert_eq!(rows[0][e0], 1.0);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
        assert!(w[1][e0] <= w[0][e0] * (1.0 + 1e-14));
    }
    let m = json(&d.path().join("run.csv.manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["config"]["shells"], 10);
    assert!(m["seed"].is_null());
}

#[test]
fn simulate_is_bit_reproducible() {
    let d = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let o = frlab(
            d.path(),
            &["--jobs", "2", "simulate", "--model", "hypo", "--alpha", "0.3", "--nu", "0.5", "--shells", "8", "--psi0", "geometric(0.5)", "--t-end", "1", "--out", name],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(d.path().join("a.csv")).unwrap(), fs::read(d.path().join("b.csv")).unwrap());
}

#[test]
fn galerkin_and_dyadic_runs_agree() {
    let d = tempfile::tempdir().unwrap();
    let base = ["simulate", "--shells", "5", "--psi0", "delta0", "--t-end", "0.15"];
    let o = frlab(d.path(), &[&base[..], &["--galerkin", "--out", "g.csv"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&frlab(d.path(), &[&base[..], &["--out", "y.csv"]].concat())), 0);
    let (_, g) = read_csv(&d.path().join("g.csv"));
    let (_, y) = read_csv(&d.path().join("y.csv"));
    let (gl, yl) = (g.last().unwrap(), y.last().unwrap());
    assert!((gl[0] - yl[0]).abs() < 1e-14);
    for i in 1..=6 {
        assert!((gl[i] - yl[i]).abs() < 1e-8, "psi_{}: {} vs {}", i - 1, gl[i], yl[i]);
    }
}

#[test]
fn psi0_from_file() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("psi0.csv"), "psi\n0.5\n0.25\n").unwrap();
    let o = frlab(d.path(), &["simulate", "--shells", "4", "--psi0", "psi0.csv", "--t-end", "0.1", "--out", "r.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&d.path().join("r.csv"));
    assert_eq!(&rows[0][1..6], &[0.5, 0.25, 0.0, 0.0, 0.0]);
}

#[test]
fn diagnose_euler_and_hypo() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&frlab(d.path(), &["simulate", "--shells", "12", "--psi0", "delta0", "--t-end", "1", "--out", "e.csv"])), 0);
    let o = frlab(d.path(), &["diagnose", "--traj", "e.csv", "--out", "e.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&d.path().join("e.json"));
    assert!((rep["blowup_bound"]["t_star"].as_f64().unwrap() - 6.5738163164).abs() < 1e-9);
    assert_eq!(rep["ladder"]["all_reliable_hold"], true);
    assert!(rep["max_relative_gronwall_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(rep["failures"].as_array().unwrap().len(), 0);

    let hypo = ["--alpha", "0.2", "--nu", "1"];
    let o = frlab(d.path(), &[&["simulate", "--model", "hypo", "--shells", "10", "--psi0", "geometric(0.3)", "--t-end", "1", "--out", "h.csv"][..], &hypo[..]].concat());
    assert_eq!(code(&o), 0);
    let o = frlab(d.path(), &[&["diagnose", "--traj", "h.csv", "--out", "h.json"][..], &hypo[..]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&d.path().join("h.json"));
    assert!(rep["lyapunov_criterion"]["threshold"].as_f64().unwrap() > 0.0);
}

#[test]
fn diagnose_rejects_mismatched_model_data() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.csv"), "t,psi_0\n0,1\n").unwrap();
    assert_eq!(code(&frlab(d.path(), &["diagnose", "--traj", "bad.csv"])), 2);
    fs::write(d.path().join("none.csv"), "t,x\n0,1\n1,2\n").unwrap();
    assert_eq!(code(&frlab(d.path(), &["diagnose", "--traj", "none.csv"])), 2);
}

#[test]
fn sheet_and_grid() {
    let d = tempfile::tempdir().unwrap();
    let o = frlab(d.path(), &["sheet", "--epsilon", "0.5", "--bump-nodes", "4000", "--out", "s.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&d.path().join("s.json"));
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["helicity"], 0.0);

    // A coarse truncation misses the closed-form values: verification failure, report still written.
    let o = frlab(d.path(), &["sheet", "--epsilon", "0.5", "--truncation", "3", "--bump-nodes", "4000", "--out", "c.json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&d.path().join("c.json"))["passed"], false);

    let o = frlab(d.path(), &["grid", "--field", "c.json", "--resolution", "7", "--out", "g.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&d.path().join("g.csv"));
    assert_eq!(h.len(), 13);
    assert_eq!(rows.len(), 343);
    for r in &rows {
        assert!(r[9] <= r[10] && r[10] <= r[11]);
        assert!((r[9] + r[10] + r[11]).abs() < 1e-9);
        assert!((r[12] - r[9] * r[10] * r[11]).abs() < 1e-9 * (1.0 + r[12].abs()));
    }
    // Below the Nyquist resolution for bandwidth 3.
    assert_eq!(code(&frlab(d.path(), &["grid", "--field", "c.json", "--resolution", "6", "--out", "g.csv"])), 2);
}

#[test]
fn grid_accepts_lattice_field_files() {
    use frlab::field::SpectralField;
    use frlab::lattice::ShellTable;
    use frlab::physical::GeneralSpectralField;
    use std::sync::Arc;

    let d = tempfile::tempdir().unwrap();
    let table = Arc::new(ShellTable::new(3).unwrap());
    let f = SpectralField::from_psi(table, &[1.0, 0.5, 0.25, 0.125]).unwrap();
    fs::write(d.path().join("f.json"), serde_json::to_string(&f.to_entries()).unwrap()).unwrap();
    let o = frlab(d.path(), &["grid", "--field", "f.json", "--resolution", "29", "--out", "g.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&d.path().join("g.csv"));
    let general = GeneralSpectralField::from_spectral(&f);
    for r in rows.iter().step_by(997) {
        let s = general.evaluate([r[0], r[1], r[2]]);
        for i in 0..3 {
            assert!((r[3 + i] - s.u[i]).abs() < 1e-12 * (1.0 + s.u[i].abs()));
            assert!((r[6 + i] - s.vorticity[i]).abs() < 1e-11 * (1.0 + s.vorticity[i].abs()));
        }
    }
}

#[test]
fn config_files_supply_defaults_and_flags_override() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.json"), r#"{"shells": 6, "psi0": "delta0", "t_end": 0.05, "rtol": 1e-9}"#).unwrap();
    let o = frlab(d.path(), &["simulate", "--config", "c.json", "--shells", "3", "--out", "r.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&d.path().join("r.csv"));
    assert_eq!(h.iter().filter(|c| c.starts_with("psi_")).count(), 4);
    assert!((rows.last().unwrap()[0] - 0.05).abs() < 1e-15);

    // A manifest replays the same run.
    let o = frlab(d.path(), &["simulate", "--config", "r.csv.manifest.json", "--out", "r2.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(d.path().join("r.csv")).unwrap(), fs::read(d.path().join("r2.csv")).unwrap());
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&frlab(d.path(), &["simulate", "--shells", "3"])), 2);
    assert_eq!(code(&frlab(d.path(), &["simulate", "--shells", "3", "--psi0", "nope", "--t-end", "1", "--out", "x.csv"])), 2);
    assert_eq!(code(&frlab(d.path(), &["simulate", "--model", "hypo", "--shells", "3", "--psi0", "delta0", "--t-end", "1", "--out", "x.csv"])), 2);
    assert_eq!(code(&frlab(d.path(), &["lattice", "verify", "--max-shell", "99"])), 2);
    assert_eq!(code(&frlab(d.path(), &["--config", "missing.json", "lattice", "verify"])), 2);
    assert_eq!(code(&frlab(d.path(), &["--jobs", "0", "lattice", "verify"])), 2);
    assert_eq!(code(&frlab(d.path(), &["bogus"])), 2);
    assert_eq!(code(&frlab(d.path(), &["--help"])), 0);
    assert_eq!(code(&frlab(d.path(), &["--version"])), 0);
}
