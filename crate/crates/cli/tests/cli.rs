use std::path::Path;
use std::process::{Command, Output};

use gmmrf_core::imageio::{load_image, save_image};
use gmmrf_core::Image;

fn gmmrf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmmrf")).args(args).current_dir(dir).output().expect("spawn gmmrf")
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = gmmrf(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn report_value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in report"))
        .parse()
        .unwrap()
}

/// Trains a small single-group model on two noisy tissue phantoms.
fn toy_model(dir: &Path) {
    for s in 1..=2 {
        write(
            dir,
            &format!("sim{s}.toml"),
            &format!("seed = {s}\n[phantom]\nkind = \"tissue\"\nsize = 48\n[noise]\nsigma = 5.0\noutput = \"train{s}.gmi\"\n"),
        );
        run_ok(&["simulate", &format!("sim{s}.toml")], dir);
    }
    write(
        dir,
        "train.toml",
        r#"output = "model.gmm"
images = ["train1.gmi", "train2.gmi"]
patch = [3, 3]
[em]
max_iters = 20
[[groups]]
index = 1
mean_range = [-inf, inf]
sample_target = 3000
components = 3
mixture_weight = 1.0
"#,
    );
    let log = run_ok(&["train", "train.toml"], dir);
    assert!(log.contains("group 1 iter 0:"));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(gmmrf(&["eval", "missing.toml"], d).status.code(), Some(2));
    write(d, "bad.toml", "image = \"x.gmi\"\nreport = \"r.txt\"\nsurprise = 1\n");
    assert_eq!(gmmrf(&["eval", "bad.toml"], d).status.code(), Some(2));
    write(d, "nofile.toml", "image = \"x.gmi\"\nreport = \"r.txt\"\n");
    assert_eq!(gmmrf(&["eval", "nofile.toml"], d).status.code(), Some(2));
    toy_model(d);
    for bad in [["--p", "1.5"], ["--alpha", "0"]] {
        let out = gmmrf(&["scale-model", "--input", "model.gmm", "--output", "m.gmm", bad[0], bad[1]], d);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("must"));
    }
    assert_eq!(gmmrf(&["frobnicate"], d).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_gmmrf"))
        .args(["eval", "nofile.toml"])
        .current_dir(d)
        .env("GMMRF_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    save_image(&Image::filled(48, 48, 1.0, 0.0), d.join("flat.gmi")).unwrap();
    write(d, "ev.toml", "image = \"flat.gmi\"\nreport = \"r.txt\"\nwire = { row = 24, col = 24 }\n");
    assert_eq!(gmmrf(&["eval", "ev.toml"], d).status.code(), Some(3));
}

#[test]
fn eval_on_identical_images_reports_zero_rmse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "sim.toml", "truth = \"sl.gmi\"\n[phantom]\nkind = \"shepp-logan\"\nsize = 32\n");
    run_ok(&["simulate", "sim.toml"], d);
    write(
        d,
        "ev.toml",
        "image = \"sl.gmi\"\nreference = \"sl.gmi\"\nreport = \"r.txt\"\n[[roi]]\nname = \"c\"\nrow = 16.0\ncol = 16.0\nradius = 3.0\n",
    );
    let report = run_ok(&["eval", "ev.toml"], d);
    assert_eq!(report_value(&report, "rmse"), 0.0);
    assert_eq!(report_value(&report, "roi.c.rmse"), 0.0);
    assert_eq!(std::fs::read_to_string(d.join("r.txt")).unwrap(), report);
    assert!(d.join("r.txt.manifest.toml").is_file());
}

#[test]
fn noiseless_round_trip_recovers_phantom() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy_model(d);
    write(
        d,
        "sim.toml",
        "truth = \"sl.gmi\"\n[phantom]\nkind = \"shepp-logan\"\nsize = 32\n[scan]\nn_angles = 60\nphotons = 1e5\nnoiseless = true\noutput = \"sl.sino\"\n",
    );
    run_ok(&["simulate", "sim.toml"], d);
    write(
        d,
        "rec.toml",
        "model = \"model.gmm\"\nsinogram = \"sl.sino\"\noutput = \"rec.gmi\"\ninit = \"fbp\"\n[stop]\nouter_iters = 200\nrel_change_tol = 0.001\n[params]\nsigma_x = 1e6\n",
    );
    run_ok(&["reconstruct", "rec.toml"], d);
    let trace = std::fs::read_to_string(d.join("rec.gmi.trace.txt")).unwrap();
    let values: Vec<f64> = trace.lines().map(|l| l.parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
    write(d, "ev.toml", "image = \"rec.gmi\"\nreference = \"sl.gmi\"\nreport = \"r.txt\"\n");
    let rmse = report_value(&run_ok(&["eval", "ev.toml"], d), "rmse");
    assert!(rmse < 2.0, "round-trip RMSE {rmse} HU");
}

#[test]
fn weak_prior_denoise_is_nearly_identity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy_model(d);
    write(
        d,
        "den.toml",
        "model = \"model.gmm\"\ninput = \"train1.gmi\"\noutput = \"out.gmi\"\nnoise_sigma = 5.0\n[params]\nsigma_x = 1e4\n",
    );
    run_ok(&["denoise", "den.toml"], d);
    let a = load_image(d.join("train1.gmi")).unwrap();
    let b = load_image(d.join("out.gmi")).unwrap();
    let worst = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 0.01, "max change {worst} HU");
}

#[test]
fn scale_model_identities() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    toy_model(d);
    run_ok(&["scale-model", "--input", "model.gmm", "--output", "p0.gmm", "--p", "0"], d);
    let orig = gmmrf_core::model::load_model(d.join("model.gmm")).unwrap();
    let p0 = gmmrf_core::model::load_model(d.join("p0.gmm")).unwrap();
    for (a, b) in orig.scaled_mixture().components().iter().zip(p0.scaled_mixture().components()) {
        assert_eq!(a.covariance(), b.covariance());
    }
    let out = run_ok(&["scale-model", "--input", "model.gmm", "--output", "p1.gmm", "--p", "1", "--alpha", "20"], d);
    assert!(out.contains("p = 1, alpha = 20"));
    let p1 = gmmrf_core::model::load_model(d.join("p1.gmm")).unwrap();
    for ((c, s), o) in p1.mixture().components().iter().zip(p1.scaled_mixture().components()).zip(orig.mixture().components()) {
        assert!((gmmrf_core::model::component_average_eigenvalue(s) / 400.0 - 1.0).abs() < 1e-9);
        assert_eq!(c.covariance(), o.covariance());
    }
}
