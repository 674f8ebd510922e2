use pendulum::persist::{read_csv, read_manifest};
use pendulum::sweep::SplittingRecord;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pendulum")).args(args).output().unwrap()
}

fn splittings(out: &Path) -> Output {
    run(&["splittings", "--out", out.to_str().unwrap(), "--inv-hbar-range", "5:7:5", "--threads", "1"])
}

#[test]
fn splitting_sweep_round_trips_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = splittings(d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows: Vec<SplittingRecord> = read_csv(&a.join("splittings.csv")).unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].inv_hbar, 5.0);
    assert_eq!(rows[4].inv_hbar, 7.0);
    assert!(rows.iter().all(|r| r.is_ok() && r.delta_eps0 > 0.0 && r.delta_eps0 <= 0.5 * r.hbar));

    let manifest = read_manifest(&a).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["splittings.csv"]);
    assert_eq!(manifest.files[0].rows, 5);
    assert_eq!(manifest.points.len(), 5);

    let bytes = |d: &Path| std::fs::read(d.join("splittings.csv")).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
}

#[test]
fn area_estimate_writes_one_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pn");
    let o = run(&["pn", "--out", out.to_str().unwrap(), "--area", "2.0", "--inv-hbar-range", "10:30:21"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut entries: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    entries.sort();
    assert_eq!(entries, ["manifest.json", "pn.csv"]);
    let manifest = read_manifest(&out).unwrap();
    assert_eq!(manifest.files[0].rows, 21);
    assert!(manifest.config.to_string().contains("\"area\":2.0"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[sweep]\ngama = 0.7\n").unwrap();
    let out = dir.path().join("x");
    let o = run(&["pn", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--area", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[config]"));

    let o = run(&["pn", "--out", out.to_str().unwrap(), "--area", "-1"]);
    assert_eq!(o.status.code(), Some(2));

    // an occupied output directory is refused
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("keep.txt"), "x").unwrap();
    let o = run(&["pn", "--out", out.to_str().unwrap(), "--area", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(out.join("keep.txt")).unwrap(), "x");
}
