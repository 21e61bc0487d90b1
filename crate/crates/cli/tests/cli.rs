//! End-to-end tests of the `rdpos` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONTRACT_SPEC: &str = r#"
name = "menu"
outputs = ["contract_menu", "verifier_utilities", "profit_vs_types"]

[contract]
types = 4
type_counts = [2, 4]
"#;

const SCENARIO_SPEC: &str = r#"
name = "small"
outputs = ["reputation_timeseries", "detection_rate", "event_dump"]

[scenario]
rounds = 8

[analysis]
replicates = 2
thresholds = [0.3, 0.5]
"#;

fn rdpos(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdpos"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RDPOS_TRACE_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_spec(dir: &Path, file: &str, text: &str) -> String {
    let p = dir.join(file);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn run_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "menu.toml", CONTRACT_SPEC);
    let out = tmp.path().join("out");
    let o = rdpos(&["run", &spec, "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(
        listing(&out),
        ["contract_menu.csv", "manifest.json", "profit_vs_types.csv", "verifier_utilities.csv"]
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(manifest["name"], "menu");
    assert_eq!(manifest["tables"].as_array().unwrap().len(), 3);

    let menu = fs::read_to_string(out.join("contract_menu.csv")).unwrap();
    let mut lines = menu.lines();
    assert_eq!(lines.next().unwrap(), format!("# config_hash={hash}"));
    assert_eq!(lines.next().unwrap(), "q,theta,prior,reward,inv_latency,utility,profit");
    assert_eq!(lines.count(), 4);
    let profit = fs::read_to_string(out.join("profit_vs_types.csv")).unwrap();
    assert_eq!(profit.lines().count(), 2 + 4);
    // One stdout line per table.
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "small.toml", SCENARIO_SPEC);
    let read = |name: &str| {
        let out = tmp.path().join(name);
        let o = rdpos(&["run", &spec, "--out", out.to_str().unwrap()], tmp.path());
        assert!(o.status.success(), "{o:?}");
        listing(&out)
            .into_iter()
            .map(|f| (f.clone(), fs::read(out.join(f)).unwrap()))
            .collect::<Vec<_>>()
    };
    let a = read("a");
    assert_eq!(a.len(), 4);
    assert_eq!(a, read("b"));
}

#[test]
fn default_output_directory_is_results_name() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "menu.toml", CONTRACT_SPEC);
    let o = rdpos(&["run", &spec, "--tables", "profit_vs_types"], tmp.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(
        listing(&tmp.path().join("results/menu")),
        ["manifest.json", "profit_vs_types.csv"]
    );
}

#[test]
fn seed_override_changes_results_and_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "small.toml", SCENARIO_SPEC);
    let run = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec!["run", spec.as_str(), "--out", out.to_str().unwrap(), "--tables", "event_dump"];
        args.extend_from_slice(extra);
        assert!(rdpos(&args, tmp.path()).status.success());
        fs::read_to_string(out.join("event_dump.csv")).unwrap()
    };
    let base = run("base", &[]);
    let reseeded = run("seeded", &["--seed", "9"]);
    assert_ne!(base.lines().next(), reseeded.lines().next());
    assert_ne!(base, reseeded);
    assert_eq!(reseeded, run("again", &["--seed", "9"]));
}

#[test]
fn malformed_spec_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for (file, text) in [
        ("syntax.toml", "name = \"x\"\noutputs = [\n"),
        ("unknown.toml", "name = \"x\"\noutputs = [\"profit_vs_types\"]\nbogus = 1\n[contract]\n"),
        ("table.toml", "name = \"x\"\noutputs = [\"no_such_table\"]\n[contract]\n"),
        ("both.toml", "name = \"x\"\noutputs = [\"profit_vs_types\"]\n[contract]\n[scenario]\n"),
        ("mismatch.toml", "name = \"x\"\noutputs = [\"detection_rate\"]\n[contract]\n"),
    ] {
        let spec = write_spec(tmp.path(), file, text);
        let o = rdpos(&["run", &spec, "--out", out.to_str().unwrap()], tmp.path());
        assert_eq!(o.status.code(), Some(2), "{file}: {o:?}");
        assert!(!o.stderr.is_empty());
        assert!(!out.exists(), "{file} left outputs behind");
    }
}

#[test]
fn validate_echoes_effective_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "menu.toml", CONTRACT_SPEC);
    let o = rdpos(&["validate", &spec], tmp.path());
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.starts_with("spec menu: ok\n"), "{text}");
    assert!(text.contains(
        "contract: g1=1.2 e1=15 e2=10 z1=2 z2=1 l=5 l'=1 T_max=300 R_max=1000 psi=0.5"
    ));
    assert!(text.contains("# effective parameters"));
    assert!(text.contains("type_counts = [\n    2,\n    4,\n]") || text.contains("type_counts = [2, 4]"));
}

#[test]
fn validate_rejects_bad_weights_and_even_k() {
    let tmp = tempfile::tempdir().unwrap();
    let weights = r#"
name = "w"
outputs = ["detection_rate"]

[scenario.weights]
recent_weight = 0.4
past_weight = 0.6
positive_weight = 0.4
negative_weight = 0.6
scale = 1.0
uncertainty_effect = 0.5
recent_horizon_s = 360
window_s = 3600
"#;
    let even_k = "name = \"k\"\noutputs = [\"detection_rate\"]\n[scenario]\nk = 8\n";
    for (file, text, needle) in [
        ("w.toml", weights, "recent_weight must exceed past_weight"),
        ("k.toml", even_k, "k must be odd"),
    ] {
        let spec = write_spec(tmp.path(), file, text);
        let o = rdpos(&["validate", &spec], tmp.path());
        assert_eq!(o.status.code(), Some(1), "{o:?}");
        let text = stdout(&o);
        assert!(text.contains("invalid") && text.contains(needle), "{text}");
    }
}

#[test]
fn trace_dir_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let traces = tmp.path().join("cabs");
    fs::create_dir(&traces).unwrap();
    let start = 1_211_018_400i64;
    for v in 0..6 {
        let lines: Vec<String> = (0..40)
            .rev()
            .map(|i| {
                let lat = 37.701 + 0.0027 * i as f64;
                let lon = -122.519 + 0.0034 * i as f64 + 0.01 * v as f64;
                format!("{lat:.6} {lon:.6} {} {}", i % 2, start + 30 * i)
            })
            .collect();
        fs::write(traces.join(format!("new_cab{v}.txt")), lines.join("\n")).unwrap();
    }
    let spec = write_spec(
        tmp.path(),
        "trace.toml",
        "name = \"trace\"\noutputs = [\"event_dump\"]\n[scenario]\nrounds = 20\nvehicles = 6\n\
         [scenario.attack]\ncompromised_vehicles = 1\n",
    );
    let run = |dir: &str, env: Option<&Path>| {
        let out = tmp.path().join(dir);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rdpos"));
        cmd.args(["run", &spec, "--out", out.to_str().unwrap()])
            .current_dir(tmp.path())
            .env_remove("RDPOS_TRACE_DIR")
            .env("RUST_LOG", "warn");
        if let Some(p) = env {
            cmd.env("RDPOS_TRACE_DIR", p);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{o:?}");
        fs::read_to_string(out.join("event_dump.csv")).unwrap()
    };
    let traced = run("traced", Some(&traces));
    let synthetic = run("synthetic", None);
    assert_ne!(traced.lines().next(), synthetic.lines().next());
    assert!(traced.lines().count() > 2);
    for line in traced.lines().skip(2) {
        let vehicle: u32 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(vehicle < 6);
    }
}

#[test]
fn sweep_runs_each_spec_into_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let specs = tmp.path().join("specs");
    fs::create_dir(&specs).unwrap();
    write_spec(&specs, "a.toml", CONTRACT_SPEC);
    write_spec(&specs, "b.toml", &SCENARIO_SPEC.replace("rounds = 8", "rounds = 4"));
    fs::write(specs.join("notes.txt"), "ignored").unwrap();
    let out = tmp.path().join("out");
    let o = rdpos(
        &["sweep", specs.to_str().unwrap(), "--out", out.to_str().unwrap()],
        tmp.path(),
    );
    assert!(o.status.success(), "{o:?}");
    assert_eq!(listing(&out), ["menu", "small"]);
    assert_eq!(listing(&out.join("menu")).len(), 4);
    assert_eq!(listing(&out.join("small")).len(), 4);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn sweep_rejects_duplicate_names_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let specs = tmp.path().join("specs");
    fs::create_dir(&specs).unwrap();
    write_spec(&specs, "a.toml", CONTRACT_SPEC);
    write_spec(&specs, "b.toml", CONTRACT_SPEC);
    let out = tmp.path().join("out");
    let o = rdpos(
        &["sweep", specs.to_str().unwrap(), "--out", out.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate"));
    assert!(!out.exists());
}
