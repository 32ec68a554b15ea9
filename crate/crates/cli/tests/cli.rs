use std::path::Path;
use std::process::{Command, Output};

fn divtower(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divtower"))
        .env("DIVTOWER_OUT", out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn tower_specs() {
    let dir = tempfile::tempdir().unwrap();
    let o = divtower(dir.path(), &["tower", "--family", "G", "--m", "2"]);
    assert_eq!(code(&o), 0);
    let spec = read_json(&dir.path().join("G2.spec.json"));
    let relators: Vec<&str> = spec["relators"].as_array().unwrap().iter().map(|r| r.as_str().unwrap()).collect();
    assert!(relators.iter().any(|r| r.starts_with("s2^-1")));

    let o = divtower(dir.path(), &["tower", "--family", "B", "--m", "1"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("B1.spec.json")).unwrap();
    assert!(text.contains("t_x t_y"));

    let o = divtower(dir.path(), &["tower", "--m", "0"]);
    assert_eq!(code(&o), 3);
    assert!(!o.stderr.is_empty());
}

#[test]
fn spec_round_trip_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&divtower(a.path(), &["tower", "--m", "3"])), 0);
    let first = a.path().join("G3.spec.json");
    assert_eq!(code(&divtower(b.path(), &["tower", "--spec", first.to_str().unwrap()])), 0);
    let second = b.path().join("G3.spec.json");
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let o = divtower(b.path(), &["nf", "--spec", second.to_str().unwrap(), "s3^-1 s1 s3 s2^-1"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn nf_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = divtower(dir.path(), &["nf", "--m", "2", "s2^-1 a1 s2 b1^-1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("trivial: true"));
    assert_eq!(code(&divtower(dir.path(), &["nf", "s1 s2"])), 1);
    assert_eq!(code(&divtower(dir.path(), &["nf", ""])), 0);
    assert_eq!(code(&divtower(dir.path(), &["nf", "q7"])), 3);
}

#[test]
fn dist_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = divtower(dir.path(), &["dist", "--ambient", "fbc-phi", "--n", "6"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("dist_fbc-phi1.csv")).unwrap();
    let d3: u64 = csv.lines().find(|l| l.starts_with("3,")).unwrap()[2..].parse().unwrap();
    assert!(d3 >= 3);
    assert!(dir.path().join("dist_fbc-phi1.svg").exists());
    let o = divtower(dir.path(), &["dist", "--n", "6", "--node-cap", "50"]);
    assert_eq!(code(&o), 2);
    assert_eq!(read_json(&dir.path().join("dist_fbc-phi1.json"))["partial"], true);
}

#[test]
fn cert_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = divtower(dir.path(), &["cert", "--family", "phi", "--nmax", "20", "--C", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let j = read_json(&dir.path().join("cert_phi_n20.json"));
    assert_eq!(j["passed"], true);
    assert_eq!(j["derived"]["d"], 27.0);
    assert_eq!(code(&divtower(dir.path(), &["cert", "--nmax", "20", "--C", "1.01", "--table-n", "0"])), 1);
}

#[test]
fn embed_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = divtower(d.path(), &["embed", "--m", "2", "--samples", "100"]);
        assert_eq!(code(&o), 0);
    }
    let without_dir = |d: &Path| {
        let mut j = read_json(&d.join("embed_m2.json"));
        j["config"]["output"]["dir"] = serde_json::Value::Null;
        j
    };
    let ja = without_dir(a.path());
    assert_eq!(ja["counterexamples"].as_array().unwrap().len(), 0);
    assert_eq!(ja["seed"], 7);
    assert_eq!(ja, without_dir(b.path()));
}

#[test]
fn witness_and_div() {
    let dir = tempfile::tempdir().unwrap();
    let o = divtower(dir.path(), &["witness", "--kind", "corner-g2", "--r", "9", "--sign1", "-1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let j = read_json(&dir.path().join("witness_corner-g2_r9.json"));
    assert!(j["edges"].as_str().unwrap().split_whitespace().count() > 0);
    assert_eq!(code(&divtower(dir.path(), &["witness", "--kind", "s1-detour", "--r", "3", "--sign2", "2"])), 3);

    let o = divtower(dir.path(), &["div", "--group", "lattice", "--rmax", "2"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("div_Z2.csv")).unwrap();
    assert!(csv.starts_with("r,rho,value,resolved_pairs,infinite_pairs,unknown_pairs"));
    let o = divtower(dir.path(), &["div", "--group", "free", "--rmax", "1", "--rho", "1"]);
    assert!(stdout(&o).contains("1,1,inf,0,6,0"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[tower]\nm = 3\n[output]\nformats = [\"csv\"]\n").unwrap();
    let out = dir.path().join("out");
    let o = divtower(&out, &["--config", cfg.to_str().unwrap(), "dist", "--n", "4"]);
    assert_eq!(code(&o), 0);
    assert!(out.join("dist_fbc-phi1.csv").exists());
    assert!(!out.join("dist_fbc-phi1.json").exists());
    let o = divtower(&out, &["--config", cfg.to_str().unwrap(), "config", "--format", "json"]);
    let text = stdout(&o);
    assert!(text.contains("m = 3") && text.contains("formats = [\"json\"]"));
    std::fs::write(&cfg, "[tower]\nm = 0\n").unwrap();
    assert_eq!(code(&divtower(&out, &["--config", cfg.to_str().unwrap(), "tower"])), 3);
}
