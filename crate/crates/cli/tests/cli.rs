use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qdot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run qdot")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn read(dir: &Path, path: &str) -> String {
    std::fs::read_to_string(dir.join(path)).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn spectrum_device1_writes_the_bound_set() {
    let tmp = TempDir::new().unwrap();
    let o = qdot(tmp.path(), &["spectrum", "--preset", "device1", "--out", "s"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(tmp.path(), "s/spectrum.csv");
    assert!(csv.starts_with("sweep_param,l,n_r,E,P_inner\n"));
    let p = column(&csv, "P_inner");
    assert_eq!(p.len(), 10);
    assert_eq!(p.iter().filter(|&&x| x > 0.5).count(), 2);
    for e in column(&csv, "E") {
        assert!(e > 0.0 && e < 0.9);
    }
    // stdout carries paths and summaries, never tables
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.ends_with("spectrum.csv")));
    assert!(!out.contains("sweep_param"));
    assert!(out.lines().all(|l| l.split(',').count() < 4), "{out}");
    let manifest: serde_json::Value =
        serde_json::from_str(&read(tmp.path(), "s/manifest.json")).unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["config"]["device"]["preset"], "device1");
    assert!(manifest["details"]["basis_size"].as_u64().unwrap() > 300);
    assert!(manifest["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["outputs"][0], "spectrum.csv");
}

#[test]
fn core_radius_sweep_and_densities() {
    let tmp = TempDir::new().unwrap();
    let o = qdot(
        tmp.path(),
        &["spectrum", "--preset", "fig2", "--rc-min", "0.4", "--rc-max", "1.0", "--rc-steps", "3"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut radii = column(&read(tmp.path(), "qdot-out/spectrum.csv"), "sweep_param");
    radii.dedup();
    assert_eq!(radii, vec![0.4, 0.7, 1.0]);

    let o = qdot(tmp.path(), &["spectrum", "--densities", "--out", "d"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = read(tmp.path(), "d/densities.csv");
    assert!(csv.starts_with("l,n_r,r,u2\n"));
    assert_eq!(csv.lines().count(), 1 + 10 * 801);
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let o = qdot(tmp.path(), &["spectrum", "--preset", "device9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("device.preset"));

    let bad = write(tmp.path(), "bad.toml", "[basis]\norder = = 5\n");
    let o = qdot(tmp.path(), &["spectrum", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let unknown = write(tmp.path(), "unknown.toml", "[drive]\nfrequency = 1.0\n");
    let o = qdot(tmp.path(), &["drive", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("drive.frequency"));

    let o = qdot(tmp.path(), &["spectrum", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qdot(tmp.path(), &["drive", "--omega-rel", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_and_integrator_errors() {
    let tmp = TempDir::new().unwrap();
    let single = write(
        tmp.path(),
        "single.toml",
        "[device]\npreset = \"custom\"\nradii_nm = [1.0]\npotentials_eV = [0.0]\n\
         masses = [0.13]\noutside_potential_eV = 0.9\noutside_mass = 0.28\n",
    );
    let o = qdot(tmp.path(), &["drive", "--config", &single]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no qubit"));

    let coarse = write(
        tmp.path(),
        "coarse.toml",
        "[drive]\na0_meV_per_nm = 25\nsteps_per_period = 8\nsamples_per_period = 4\n",
    );
    let o = qdot(tmp.path(), &["drive", "--config", &coarse]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("norm deficit"));
}

#[test]
fn drive_without_field_is_static() {
    let tmp = TempDir::new().unwrap();
    let o = qdot(tmp.path(), &["drive", "--a0", "0", "--out", "z"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(tmp.path(), "z/trajectory.csv");
    assert!(csv.starts_with("t,pop_q1,pop_q2,leakage,norm_deficit\n"));
    for p in column(&csv, "pop_q1") {
        assert_eq!(p, 1.0);
    }
    for p in column(&csv, "leakage") {
        assert_eq!(p, 0.0);
    }
}

#[test]
fn detuned_drive_frequency() {
    let tmp = TempDir::new().unwrap();
    let o = qdot(tmp.path(), &["drive", "--a0", "25", "--omega-rel", "0.9", "--out", "w"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&read(tmp.path(), "w/manifest.json")).unwrap();
    let omega = m["details"]["omega"].as_f64().unwrap();
    let res = m["details"]["omega_res"].as_f64().unwrap();
    assert!((omega / res - 0.9).abs() < 1e-12);
    assert_eq!(m["config"]["drive"]["a0_meV_per_nm"], 25.0);
    let leak = column(&read(tmp.path(), "w/trajectory.csv"), "leakage");
    assert!(leak.iter().all(|&x| (0.0..=1.0).contains(&x)));
}

#[test]
fn strength_sweep_for_both_devices() {
    let tmp = TempDir::new().unwrap();
    let grid = write(
        tmp.path(),
        "grid.toml",
        "[sweep]\nkind = \"strength\"\na0_min_meV_per_nm = 10\na0_max_meV_per_nm = 40\na0_steps = 3\n",
    );
    for preset in ["device1", "device2"] {
        let o = qdot(tmp.path(), &["sweep", "--config", &grid, "--preset", preset, "--out", preset]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = read(tmp.path(), &format!("{preset}/strength.csv"));
        assert!(csv.starts_with("A0,L_p,max_norm_deficit\n"));
        let a0 = column(&csv, "A0");
        assert_eq!(a0.len(), 3);
        assert!((a0[1] - 20.0).abs() < 1e-9);
        let l = column(&csv, "L_p");
        assert!(l[0] < l[1] && l[1] < l[2]);
    }
}

#[test]
fn jobs_do_not_change_output_and_manifest_replays() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "det.toml",
        "[drive]\na0_meV_per_nm = 25\n[sweep]\nkind = \"detuning\"\n\
         omega_rel_min = 0.9\nomega_rel_max = 1.1\nomega_rel_steps = 3\n",
    );
    for (jobs, dir) in [("1", "j1"), ("8", "j8")] {
        let o = qdot(tmp.path(), &["sweep", "--config", &cfg, "--jobs", jobs, "--out", dir]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = read(tmp.path(), "j1/detuning.csv");
    assert_eq!(a, read(tmp.path(), "j8/detuning.csv"));
    assert_eq!(column(&a, "L_p_rel")[1], 1.0);

    let o = qdot(tmp.path(), &["sweep", "--config", "j1/manifest.json", "--out", "replay"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(a, read(tmp.path(), "replay/detuning.csv"));
    let o = qdot(tmp.path(), &["sweep", "--config", "j8/resolved.toml", "--out", "again"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(a, read(tmp.path(), "again/detuning.csv"));
}

#[test]
fn depth_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "v0.toml",
        "[device]\npreset = \"expsine\"\n[sweep]\nv0_min_au = 1.9\nv0_max_au = 2.3\n\
         v0_steps = 2\nv0_a0_au = [0.01]\n",
    );
    let o = qdot(tmp.path(), &["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(tmp.path(), "qdot-out/v0.csv");
    assert!(csv.starts_with("A0,V0,L_p,omega_res,max_norm_deficit\n"));
    let l = column(&csv, "L_p");
    assert!(l[1] > 100.0 * l[0]);
}

#[test]
fn oracle_check_reports_max_difference() {
    let tmp = TempDir::new().unwrap();
    let o = qdot(tmp.path(), &["oracle-check", "--preset", "device1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("max |dE| ="));
    let csv = read(tmp.path(), "qdot-out/oracle.csv");
    assert_eq!(column(&csv, "dE").len(), 10);

    let o = qdot(tmp.path(), &["oracle-check", "--preset", "expsine"]);
    assert_eq!(o.status.code(), Some(2));
}
