use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn anisomag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anisomag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_dir(t: &TempDir, name: &str) -> String {
    t.path().join(name).to_string_lossy().into_owned()
}

fn field(summary: &str, key: &str) -> f64 {
    summary
        .split_whitespace()
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from '{summary}'"))
        .parse()
        .unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn soliton_table_has_both_branches() {
    let t = TempDir::new().unwrap();
    let dir = out_dir(&t, "sol");
    let o = anisomag(&["soliton", "--lambda1", "0.25", "--lambda3", "4", "--samples", "11", "-o", &dir]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(field(&s, "cstar"), 1.5);
    assert!((field(&s, "meeting_energy") - 2.0).abs() < 1e-12);
    let table = fs::read_to_string(Path::new(&dir).join("solitons.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "c,branch,a,mu,energy");
    assert_eq!(rows.len(), 1 + 2 * 11);
    let first_minus: Vec<f64> = rows[1].split(',').filter_map(|v| v.parse().ok()).collect();
    assert_eq!(first_minus[3], 1.0);
    assert!(rows[12].contains(",plus,"));
}

#[test]
fn zero_simulation_stays_zero() {
    let t = TempDir::new().unwrap();
    let dir = out_dir(&t, "zero");
    let o = anisomag(&["simulate", "--system", "sgs", "--initial", "zero", "--T", "0.5", "--grid", "10x64", "-o", &dir]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "energy_drift"), 0.0);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&dir).join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["system"], "sgs");
    let snaps = meta["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), meta["times"].as_array().unwrap().len());
    for name in snaps {
        let text = fs::read_to_string(Path::new(&dir).join(name.as_str().unwrap())).unwrap();
        for line in text.lines().skip(1) {
            let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(&vals[1..], &[0.0, 0.0]);
        }
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let o = anisomag(&["simulate", "--system", "sgs", "--initial", "zero"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("T: required by simulate"), "{}", stderr(&o));
    let o = anisomag(&["simulate", "--system", "nope", "--initial", "zero", "--T", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("system:"));
    let o = anisomag(&["converge", "--tau", "0.5", "--sigma", "1", "--eps", "0.1,0.2,0.05", "--T", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("eps:"));
    assert_eq!(anisomag(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(anisomag(&["--help"]).status.code(), Some(0));
}

#[test]
fn saturated_data_aborts_with_two_and_keeps_partial_output() {
    let t = TempDir::new().unwrap();
    let grid = anisomag::spectral::Grid1D::new(10.0, 32).unwrap();
    let mut csv = String::from("x,u,phi\n");
    for n in 0..32 {
        csv.push_str(&format!("{},0.9999995,0.3\n", anisomag::io::fmt17(grid.node(n))));
    }
    let input = t.path().join("sat.csv");
    fs::write(&input, csv).unwrap();
    let dir = out_dir(&t, "sat");
    let init = format!("file:{}", input.display());
    let o = anisomag(&[
        "simulate", "--system", "hll", "--lambda1", "0.25", "--lambda3", "4", "--initial", &init, "--T", "1", "--grid",
        "10x32", "-o", &dir,
    ]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).starts_with("aborted at t="));
    assert!(Path::new(&dir).join("meta.json").exists());
    assert!(Path::new(&dir).join("snap_000000.csv").exists());
}

#[test]
fn emitted_snapshot_round_trips_through_file_input() {
    let t = TempDir::new().unwrap();
    let first = out_dir(&t, "first");
    let o = anisomag(&["simulate", "--system", "sgs", "--initial", "sg-kink:0.3,+", "--T", "0.5", "--grid", "40x512", "-o", &first]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&first).join("meta.json")).unwrap()).unwrap();
    let last = meta["snapshots"].as_array().unwrap().last().unwrap().as_str().unwrap().to_string();
    let last_path = Path::new(&first).join(&last);

    let second = out_dir(&t, "second");
    let init = format!("file:{}", last_path.display());
    let o = anisomag(&["simulate", "--system", "sgs", "--initial", &init, "--T", "0.1", "--grid", "40x512", "-o", &second]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        fs::read(&last_path).unwrap(),
        fs::read(Path::new(&second).join("snap_000000.csv")).unwrap()
    );
}

#[test]
fn reruns_are_bit_identical() {
    let t = TempDir::new().unwrap();
    let args = |dir: &str| {
        vec![
            "simulate".to_string(),
            "--system".into(),
            "hlleps".into(),
            "--eps".into(),
            "0.1".into(),
            "--initial".into(),
            "scaled-soliton:0.5".into(),
            "--T".into(),
            "0.2".into(),
            "--grid".into(),
            "40x512".into(),
            "-o".into(),
            dir.into(),
        ]
    };
    let (a, b) = (out_dir(&t, "a"), out_dir(&t, "b"));
    let oa = Command::new(env!("CARGO_BIN_EXE_anisomag")).args(args(&a)).output().unwrap();
    let ob = Command::new(env!("CARGO_BIN_EXE_anisomag"))
        .args(args(&b))
        .env("ANISOMAG_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(stdout(&oa), stdout(&ob));
    let (fa, fb) = (files(Path::new(&a)), files(Path::new(&b)));
    assert_eq!(fa.len(), fb.len());
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(ca == cb, "{na} differs");
    }
    assert!(field(&stdout(&oa), "energy_drift") < 1e-8);
}

#[test]
fn converge_writes_fit_and_rates() {
    let t = TempDir::new().unwrap();
    let dir = out_dir(&t, "conv");
    let o = anisomag(&[
        "converge", "--tau", "0.5", "--sigma", "1", "--eps", "0.2,0.1,0.05", "--T", "0.25", "--grid", "40x512", "-o", &dir,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let slope = field(&stdout(&o), "slope");
    assert!((1.75..=2.25).contains(&slope), "{slope}");
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&dir).join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["slope"].as_f64().unwrap(), slope);
    assert_eq!(fit["degenerate"], false);
    assert_eq!(fit["config"]["command"], "converge");
    let rates = fs::read_to_string(Path::new(&dir).join("rates.csv")).unwrap();
    assert_eq!(rates.lines().next(), Some("eps_or_sigma,error,fitted"));
    assert_eq!(rates.lines().count(), 4);
}

#[test]
fn wave_reports_regime() {
    let t = TempDir::new().unwrap();
    let dir = out_dir(&t, "wave");
    let o = anisomag(&["wave", "--eps", "0.001", "--sigma", "0.04,0.01,0.0025", "--T", "1", "--grid", "8x256", "-o", &dir]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("regime=sigma-dominated"), "{s}");
    assert!((0.35..=0.65).contains(&field(&s, "slope")));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let t = TempDir::new().unwrap();
    let dir = out_dir(&t, "scan");
    let cfg = t.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "system = \"sgs\"\ninitial = \"sg-kink:0.3\"\nT = 5.0\ngrid = \"40x256\"\nk = 3\noutput-dir = \"{}\"\n",
            dir.replace('\\', "\\\\")
        ),
    )
    .unwrap();
    let o = anisomag(&["energy-scan", "--config", cfg.to_str().unwrap(), "--T", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(Path::new(&dir).join("energies.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "time,label,k,value");
    let last_time: f64 = rows.last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((last_time - 0.1).abs() < 1e-12);
    assert!(rows[1..].iter().all(|r| r.split(',').nth(1) == Some("E_sg")));
    assert_eq!((rows.len() - 1) % 3, 0);

    fs::write(&cfg, "system = \"sgs\"\nbogus = 1\n").unwrap();
    let o = anisomag(&["energy-scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config:"), "{}", stderr(&o));
}
