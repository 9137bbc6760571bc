use std::path::Path;
use std::process::{Command, Output};

fn minwidth(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minwidth"))
        .args(args)
        .env("MINWIDTH_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value printed on the `key value` line of the output.
fn field(o: &Output, key: &str) -> String {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')).map(str::to_string))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{}", stdout(o)))
}

#[test]
fn construct_elu_figure() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(dir.path(), &["construct", "--from", "elu", "--to", "leaky", "--alpha", "0.1", "--eps", "0.3", "--domain", "-9", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let gap: f64 = field(&o, "measured_gap").parse().unwrap();
    assert!(gap <= 0.3);
    assert!(dir.path().join("leaky-from-elu.net").exists());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("leaky-from-elu.report.json")).unwrap()).unwrap();
    assert_eq!(sidecar["stages"], 3);
}

#[test]
fn construct_softplus_scale() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(dir.path(), &["construct", "--from", "softplus", "--to", "relu", "--beta", "1", "--eps", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&o, "stages"), "200");
}

#[test]
fn construct_identity_leaky() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(
        dir.path(),
        &["construct", "--from", "leaky", "--to", "leaky", "--alpha", "1", "--beta", "0.3", "--eps", "0.1"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&o, "measured_gap").parse::<f64>().unwrap(), 0.0);
    assert_eq!(field(&o, "depth"), "0");
}

#[test]
fn usage_errors_exit_2_with_all_problems() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(dir.path(), &["construct", "--from", "nope", "--to", "leaky"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nope") && err.contains("eps") && err.contains("alpha"), "{err}");
    assert_eq!(minwidth(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(minwidth(dir.path(), &["eval", "--net", "missing.net"]).status.code(), Some(2));
}

#[test]
fn verify_roundtrip_and_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(dir.path(), &["construct", "--from", "elu", "--to", "leaky", "--alpha", "0.1", "--eps", "0.3", "--domain", "-9", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let net = dir.path().join("leaky-from-elu.net");
    let net = net.to_str().unwrap();
    let ok = minwidth(dir.path(), &["verify", "--net", net, "--to", "leaky", "--alpha", "0.1", "--eps", "0.3", "--domain", "-9", "10"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = minwidth(dir.path(), &["verify", "--net", net, "--to", "leaky", "--alpha", "0.1", "--eps", "0.01", "--domain", "-9", "10"]);
    assert_eq!(bad.status.code(), Some(1));
    let same = minwidth(dir.path(), &["verify", "--net", net, "--reference", net, "--eps", "1e-12", "--domain", "-1", "1"]);
    assert_eq!(same.status.code(), Some(0));
}

#[test]
fn certify_self_test_and_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(dir.path(), &["certify", "--m", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let t1: f64 = field(&o, "t1").parse().unwrap();
    let t2: f64 = field(&o, "t2").parse().unwrap();
    assert!((t1 - 0.1).abs() < 1e-9 && (t2 - 0.9).abs() < 1e-9);

    // A candidate network R -> R^2 one unit away from g: the constant (1, 1)
    // is 1 away where g vanishes.
    let far = r#"{"input_dim": 1, "output_dim": 2, "layers": [], "final": {"W": [[0.0], [0.0]], "b": [1.0, 1.0]}}"#;
    let far_path = dir.path().join("far.net");
    std::fs::write(&far_path, far).unwrap();
    let o = minwidth(dir.path(), &["certify", "--m", "1", "--candidate", far_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("certificate refused"));

    let o = minwidth(dir.path(), &["certify", "--m", "2", "--grid", "21"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(field(&o, "M").parse::<f64>().unwrap() < 0.0);
    assert!(field(&o, "epsilon").parse::<f64>().unwrap() > 0.0);
}

#[test]
fn gendata_writes_disjoint_sets() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(dir.path(), &["gendata", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let read = |name: &str| -> Vec<String> {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
            .collect()
    };
    let train = read("disk_k2_train.csv");
    let val = read("disk_k2_val.csv");
    assert_eq!(train.len(), 7845);
    let set: std::collections::HashSet<_> = train.iter().collect();
    assert!(val.iter().all(|p| !set.contains(p)));
}

#[test]
fn eval_shipped_network() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(dir.path(), &["eval", "--net", "appendix_c.net", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let l: f64 = field(&o, "train_loss").parse().unwrap();
    assert!(l.is_finite());
}

#[test]
fn train_is_idempotent_and_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["train", "--width", "2", "--depth", "1", "--k", "2", "--max-steps", "300", "--eval-interval", "100", "--seed", "3"];
    let a = minwidth(dir.path(), &args);
    assert_eq!(a.status.code(), Some(1), "{}", String::from_utf8_lossy(&a.stderr));
    let stem = dir.path().join("train_w2_d1_k2_s3");
    let first = std::fs::read(stem.with_extension("report.json")).unwrap();
    let net_first = std::fs::read(stem.with_extension("net")).unwrap();
    let b = minwidth(dir.path(), &args);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(first, std::fs::read(stem.with_extension("report.json")).unwrap());
    assert_eq!(net_first, std::fs::read(stem.with_extension("net")).unwrap());
    let curve = std::fs::read_to_string(stem.with_extension("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
}

#[test]
fn affine_rot1_trains_successfully() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(
        dir.path(),
        &["train", "--width", "1", "--depth", "0", "--k", "1", "--lr", "0.01", "--threshold", "1e-6", "--max-steps", "20000", "--eval-interval", "100"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let cfg_out = dir.path().join("from_config");
    std::fs::write(
        &cfg,
        format!(
            "[global]\nout_dir = {:?}\n[construct]\neps = 0.3\ndomain = [-9.0, 10.0]\n",
            cfg_out.to_str().unwrap()
        ),
    )
    .unwrap();
    // No MINWIDTH_OUT here: the file decides the directory.
    let o = Command::new(env!("CARGO_BIN_EXE_minwidth"))
        .args(["--config", cfg.to_str().unwrap(), "construct", "--from", "elu", "--to", "leaky", "--alpha", "0.1"])
        .env_remove("MINWIDTH_OUT")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o, "stages"), "3");
    assert!(cfg_out.join("leaky-from-elu.net").exists());
    // The environment overrides the file, and a flag overrides both.
    let env_out = dir.path().join("from_env");
    let o = minwidth(&env_out, &["--config", cfg.to_str().unwrap(), "construct", "--from", "elu", "--to", "leaky", "--alpha", "0.1", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&o, "stages"), "9");
    assert!(env_out.join("leaky-from-elu.net").exists());
    let flag_out = dir.path().join("from_flag");
    let o = minwidth(&env_out, &["--out", flag_out.to_str().unwrap(), "gendata", "--k", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_out.join("disk_k1_val.csv").exists());

    std::fs::write(&cfg, "[global]\nunknown = 1\n").unwrap();
    let o = minwidth(dir.path(), &["--config", cfg.to_str().unwrap(), "gendata"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_reports_minimal_depth() {
    let dir = tempfile::tempdir().unwrap();
    let o = minwidth(
        dir.path(),
        &["sweep", "--width", "2", "--depths", "0..2", "--k", "1", "--act", "relu", "--lr", "0.01", "--threshold", "1e-6", "--max-steps", "20000", "--eval-interval", "100"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o, "min_success_depth"), "0");
    assert!(dir.path().join("sweep_w2_k1.csv").exists());
}
