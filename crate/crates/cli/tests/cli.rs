use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const WELL: &str = r#"
energy = 1.0
degree = 3

[grid]
dim = 2
n = 32
side = 8.0

[potential]
dim = 2
decay = { rho = 2.0, c = 10.0, radius = 1.0 }
electric = [{ kind = "well", value = -0.5, radius = 1.0 }]
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    let out = dir.join(format!("out-{name}"));
    fs::write(&p, format!("output = {:?}\n{body}", out.to_str().unwrap())).unwrap();
    p
}

fn run(sub: &str, config: &Path, cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scatlab"));
    cmd.arg(sub).arg("--config").arg(config);
    cmd.env_remove("SCATLAB_CACHE_DIR");
    if let Some(c) = cache {
        cmd.env("SCATLAB_CACHE_DIR", c);
    }
    cmd.output().unwrap()
}

fn out_dir(config: &Path) -> PathBuf {
    config.parent().unwrap().join(format!(
        "out-{}",
        config.file_name().unwrap().to_str().unwrap()
    ))
}

fn metric(dir: &Path, file: &str, name: &str) -> f64 {
    let text = fs::read_to_string(dir.join(file)).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap_or_else(|| panic!("{name} missing in {file}"))
        .parse()
        .unwrap()
}

fn stderr_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .expect("json record on stderr");
    serde_json::from_str::<serde_json::Value>(line).unwrap()["error"].clone()
}

#[test]
fn forward_with_zero_potential_has_zero_far_field() {
    let t = tempfile::tempdir().unwrap();
    let body = WELL.replace(
        r#"electric = [{ kind = "well", value = -0.5, radius = 1.0 }]"#,
        "electric = []",
    );
    let c = write_config(t.path(), "free.toml", &body);
    let o = run("forward", &c, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out_dir(&c);
    assert_eq!(metric(&dir, "farfield_summary.csv", "max_abs"), 0.0);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "forward");
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f == "farfield.csv"));
    assert!(dir.join("potential.bin").exists());
}

#[test]
fn oracle_smatrix_is_unitary() {
    let t = tempfile::tempdir().unwrap();
    let body = format!(
        "{}\n[smatrix]\nroute = \"oracle\"\n",
        WELL.replace("degree = 3", "degree = 6")
    );
    let c = write_config(t.path(), "oracle.toml", &body);
    let o = run("smatrix", &c, None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out_dir(&c);
    assert!(metric(&dir, "defects.csv", "unitarity_defect") <= 1e-10);
    assert!(dir.join("phase_shifts.csv").exists());
}

#[test]
fn outside_violation_exits_with_precondition_code() {
    let t = tempfile::tempdir().unwrap();
    let body = format!(
        "{WELL}\n[uniqueness]\nradius = 0.5\n\n[second]\ndim = 2\ndecay = {{ rho = 2.0, c = 10.0, radius = 1.0 }}\nelectric = []\n"
    );
    let c = write_config(t.path(), "outside.toml", &body);
    let o = run("uniqueness", &c, None);
    assert_eq!(o.status.code(), Some(4));
    let rec = stderr_record(&o);
    assert_eq!(rec["kind"], "precondition");
    assert!(rec["message"].as_str().unwrap().contains("sample"), "{rec}");
    let file: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir(&c).join("error.json")).unwrap()).unwrap();
    assert_eq!(file["error"], rec);
}

#[test]
fn unknown_key_is_a_schema_error() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(
        t.path(),
        "bad.toml",
        &format!("{WELL}\n[grid.extra]\nx = 1\n"),
    );
    let o = run("forward", &c, None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_record(&o)["kind"], "schema");

    let c = write_config(t.path(), "missing.toml", &WELL.replace("energy = 1.0", ""));
    assert_eq!(run("forward", &c, None).status.code(), Some(2));

    let c = write_config(
        t.path(),
        "mismatch.toml",
        &format!("scenario = \"dtn\"\n{WELL}"),
    );
    assert_eq!(run("forward", &c, None).status.code(), Some(2));
}

#[test]
fn failed_decay_validation_exits_four() {
    let t = tempfile::tempdir().unwrap();
    let body = WELL.replace(
        r#"electric = [{ kind = "well", value = -0.5, radius = 1.0 }]"#,
        r#"electric = [{ kind = "power", amplitude = 10.0, exponent = 0.5 }]"#,
    );
    let c = write_config(t.path(), "power.toml", &body);
    let o = run("validate", &c, None);
    assert_eq!(o.status.code(), Some(4));
    assert!(out_dir(&c).join("validation.json").exists());
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let c = write_config(t.path(), "grid.toml", WELL);
    assert!(run("smatrix", &c, None).status.success());
    let first = snapshot(&out_dir(&c));
    assert!(run("smatrix", &c, None).status.success());
    assert_eq!(first, snapshot(&out_dir(&c)));
}

#[test]
fn cache_replays_and_survives_corruption() {
    let t = tempfile::tempdir().unwrap();
    let cache = t.path().join("cache");
    let c = write_config(t.path(), "cached.toml", WELL);
    assert!(run("smatrix", &c, Some(&cache)).status.success());
    let fresh = snapshot(&out_dir(&c));
    let entries: Vec<PathBuf> = fs::read_dir(&cache)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "slce"))
        .collect();
    assert_eq!(entries.len(), 1);

    assert!(run("smatrix", &c, Some(&cache)).status.success());
    assert_eq!(fresh, snapshot(&out_dir(&c)));

    let mut bytes = fs::read(&entries[0]).unwrap();
    let n = bytes.len();
    bytes[n - 50] ^= 0xff;
    fs::write(&entries[0], &bytes).unwrap();
    let o = run("smatrix", &c, Some(&cache));
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt"));
    assert_eq!(fresh, snapshot(&out_dir(&c)));
    assert_ne!(fs::read(&entries[0]).unwrap(), bytes);
}
