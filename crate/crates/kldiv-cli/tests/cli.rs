//! End-to-end tests of the `kldiv` binary: exit codes, determinism, and the
//! documented file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kldiv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kldiv"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary must run")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kldiv-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn sample_is_deterministic_and_round_trips_into_estimate() {
    let dir = tempdir("sample");
    let args = [
        "sample",
        "--dist",
        "uniform-box d=1 lo=0 hi=2",
        "--n",
        "5",
        "--seed",
        "7",
        "--out",
        "a.csv",
    ];
    assert!(kldiv(&args, &dir).status.success());
    let first = std::fs::read(dir.join("a.csv")).unwrap();
    let mut rerun = args;
    rerun[8] = "b.csv";
    assert!(kldiv(&rerun, &dir).status.success());
    let second = std::fs::read(dir.join("b.csv")).unwrap();
    assert_eq!(first, second, "reruns must be byte-identical");
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().next().unwrap(), "x1");

    // round-trip: sampled files feed estimate without transformation
    let more = [
        "sample",
        "--dist",
        "uniform-box d=1 lo=0.5 hi=1.5",
        "--n",
        "200",
        "--seed",
        "8",
        "--out",
        "x.csv",
    ];
    assert!(kldiv(&more, &dir).status.success());
    let bigger = [
        "sample",
        "--dist",
        "uniform-box d=1 lo=0 hi=2",
        "--n",
        "200",
        "--seed",
        "9",
        "--out",
        "y.csv",
    ];
    assert!(kldiv(&bigger, &dir).status.success());
    let est = kldiv(&["estimate", "--x", "x.csv", "--y", "y.csv"], &dir);
    assert!(est.status.success(), "{}", stderr_of(&est));
    let out = stdout_of(&est);
    assert!(out.contains("kl_nats="));
    assert!(out.contains("n=200"));
    assert!(out.contains("m=200"));
    assert!(out.contains("k=3"));
}

#[test]
fn sample_rejects_bad_usage() {
    let dir = tempdir("sample-usage");
    let zero = kldiv(
        &["sample", "--dist", "uniform-box d=1 lo=0 hi=2", "--n", "0"],
        &dir,
    );
    assert_eq!(zero.status.code(), Some(2));

    let bad_spec = kldiv(
        &["sample", "--dist", "uniform-box d=1 lo=2 hi=1", "--n", "5"],
        &dir,
    );
    assert_eq!(bad_spec.status.code(), Some(2));
    assert!(stderr_of(&bad_spec).contains("lo < hi"));

    let unknown_flag = kldiv(
        &["sample", "--dist", "gaussian d=1 mean=0 scale=1", "--n", "5", "--frobnicate"],
        &dir,
    );
    assert_eq!(unknown_flag.status.code(), Some(2));
}

#[test]
fn sampled_gaussian_columns_have_near_zero_mean() {
    let dir = tempdir("gaussian");
    let args = [
        "sample",
        "--dist",
        "gaussian d=2 mean=0 scale=1",
        "--n",
        "1000",
        "--seed",
        "11",
        "--out",
        "g.csv",
    ];
    assert!(kldiv(&args, &dir).status.success());
    let text = std::fs::read_to_string(dir.join("g.csv")).unwrap();
    let mut sums = [0.0f64; 2];
    let mut count = 0usize;
    for line in text.lines().skip(1) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        sums[0] += fields[0];
        sums[1] += fields[1];
        count += 1;
    }
    assert_eq!(count, 1000);
    let band = 3.0 / (count as f64).sqrt();
    for sum in sums {
        let mean = sum / count as f64;
        assert!(mean.abs() < band, "column mean {mean} outside 3-sigma band");
    }
}

#[test]
fn estimate_hand_example_and_error_paths() {
    let dir = tempdir("estimate");
    std::fs::write(dir.join("x.csv"), "x1\n0.0\n1.0\n").unwrap();
    std::fs::write(dir.join("y.csv"), "x1\n0.5\n1.5\n").unwrap();
    let ok = kldiv(
        &["estimate", "--x", "x.csv", "--y", "y.csv", "--k", "1"],
        &dir,
    );
    assert!(ok.status.success());
    assert!(stdout_of(&ok).contains("kl_nats=0.00000000e0"));

    // y with fewer than k rows
    std::fs::write(dir.join("small.csv"), "x1\n0.5\n").unwrap();
    let small = kldiv(
        &["estimate", "--x", "x.csv", "--y", "small.csv", "--k", "2"],
        &dir,
    );
    assert_eq!(small.status.code(), Some(1));

    // identical files under the error policy: zero distance names the index
    let dup = kldiv(
        &["estimate", "--x", "x.csv", "--y", "x.csv", "--k", "1"],
        &dir,
    );
    assert_eq!(dup.status.code(), Some(1));
    assert!(stderr_of(&dup).contains("index 0"));

    // clamp policy turns the same inputs into a finite estimate
    let clamped = kldiv(
        &[
            "estimate",
            "--x",
            "x.csv",
            "--y",
            "x.csv",
            "--k",
            "1",
            "--policy",
            "clamp:0.001",
        ],
        &dir,
    );
    assert!(clamped.status.success(), "{}", stderr_of(&clamped));

    // dimension mismatch
    std::fs::write(dir.join("wide.csv"), "x1,x2\n0.0,0.0\n1.0,1.0\n").unwrap();
    let mismatch = kldiv(
        &["estimate", "--x", "x.csv", "--y", "wide.csv", "--k", "1"],
        &dir,
    );
    assert_eq!(mismatch.status.code(), Some(1));

    // malformed input file is a usage error
    std::fs::write(dir.join("bad.csv"), "x1\nnot-a-number\n").unwrap();
    let bad = kldiv(
        &["estimate", "--x", "bad.csv", "--y", "y.csv", "--k", "1"],
        &dir,
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_of(&bad).contains("line 2"));
}

const SMALL_CONFIG: &str = "\
# small deterministic lab run
f_spec = uniform-box d=1 lo=0.5 hi=1.5
g_spec = uniform-box d=1 lo=0 hi=2
sizes = 100,164,268
trials = 40
seed = 3
case = bounded
";

#[test]
fn experiment_writes_deterministic_outputs() {
    let dir = tempdir("experiment");
    std::fs::write(dir.join("cfg.txt"), SMALL_CONFIG).unwrap();
    let run = kldiv(
        &["experiment", "--config", "cfg.txt", "--out-dir", "out1", "--raw"],
        &dir,
    );
    assert!(run.status.success(), "{}", stderr_of(&run));
    assert!(stdout_of(&run).contains("bias"));
    let summary = std::fs::read(dir.join("out1/summary.csv")).unwrap();
    let rates = std::fs::read(dir.join("out1/rates.csv")).unwrap();
    let raw = std::fs::read_to_string(dir.join("out1/raw_trials.csv")).unwrap();
    assert!(String::from_utf8_lossy(&summary).starts_with("n,trials,mean_estimate,bias,variance"));
    assert!(raw.starts_with("n,trial,estimate"));
    assert_eq!(raw.lines().count(), 1 + 3 * 40);

    let rerun = kldiv(
        &["experiment", "--config", "cfg.txt", "--out-dir", "out2"],
        &dir,
    );
    assert!(rerun.status.success());
    assert_eq!(
        summary,
        std::fs::read(dir.join("out2/summary.csv")).unwrap(),
        "summary.csv must be byte-identical across reruns"
    );
    assert_eq!(rates, std::fs::read(dir.join("out2/rates.csv")).unwrap());
}

#[test]
fn experiment_config_errors() {
    let dir = tempdir("experiment-errors");
    std::fs::write(
        dir.join("missing.txt"),
        "f_spec = uniform-box d=1 lo=0.5 hi=1.5\ng_spec = uniform-box d=1 lo=0 hi=2\n",
    )
    .unwrap();
    let missing = kldiv(
        &["experiment", "--config", "missing.txt", "--out-dir", "out"],
        &dir,
    );
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr_of(&missing).contains("trials"));

    // no analytic ground truth for a uniform/gaussian pair
    std::fs::write(
        dir.join("open.txt"),
        "f_spec = uniform-box d=1 lo=0.5 hi=1.5\ng_spec = gaussian d=1 mean=0 scale=1\ntrials = 10\nsizes = 100,164,268\n",
    )
    .unwrap();
    let open = kldiv(
        &["experiment", "--config", "open.txt", "--out-dir", "out"],
        &dir,
    );
    assert_eq!(open.status.code(), Some(1));
    assert!(stderr_of(&open).contains("analytic"));
}

const FIG1_DESK_CONFIG: &str = "\
f_spec = uniform-box d=1 lo=0.5 hi=1.5
g_spec = uniform-box d=1 lo=0 hi=2
trials = 2000
seed = 0
case = bounded
";

#[test]
fn experiment_desk_scale_fig1_bias_slope() {
    let dir = tempdir("desk-fig1");
    std::fs::write(dir.join("cfg.txt"), FIG1_DESK_CONFIG).unwrap();
    let run = kldiv(
        &["experiment", "--config", "cfg.txt", "--out-dir", "out"],
        &dir,
    );
    assert!(run.status.success(), "{}", stderr_of(&run));
    let rates = std::fs::read_to_string(dir.join("out/rates.csv")).unwrap();
    let bias_line = rates
        .lines()
        .find(|l| l.starts_with("bias,"))
        .expect("rates.csv must have a bias row");
    let slope: f64 = bias_line.split(',').nth(1).unwrap().parse().unwrap();
    assert!(
        (slope - 1.0).abs() <= 0.15,
        "desk-scale bias slope {slope} outside 1.00 +- 0.15"
    );
}

#[test]
fn help_documents_flags_and_headers() {
    let dir = tempdir("help");
    let sample = stdout_of(&kldiv(&["sample", "--help"], &dir));
    for flag in ["--dist", "--n", "--seed", "--stream", "--out"] {
        assert!(sample.contains(flag), "sample help missing {flag}");
    }
    assert!(sample.contains("x1,...,xd"));

    let estimate = stdout_of(&kldiv(&["estimate", "--help"], &dir));
    for flag in ["--x", "--y", "--k", "--norm", "--policy"] {
        assert!(estimate.contains(flag), "estimate help missing {flag}");
    }
    assert!(estimate.contains("kl_nats="));

    let experiment = stdout_of(&kldiv(&["experiment", "--help"], &dir));
    for flag in ["--config", "--out-dir", "--raw"] {
        assert!(experiment.contains(flag), "experiment help missing {flag}");
    }
    assert!(experiment.contains("n,trials,mean_estimate,bias,variance"));
    assert!(experiment.contains("metric,empirical_slope,theoretical_exponent,r_squared"));
    assert!(experiment.contains("n,trial,estimate"));

    let rates = stdout_of(&kldiv(&["rates", "--help"], &dir));
    for flag in ["--summary", "--case", "--d", "--gamma", "--ratio-bounded", "--out"] {
        assert!(rates.contains(flag), "rates help missing {flag}");
    }
    assert!(rates.contains("n,trials,mean_estimate,bias,variance"));
}

#[test]
fn rates_command_fits_and_validates() {
    let dir = tempdir("rates");
    // exact power law: slope 1, R^2 = 1
    std::fs::write(
        dir.join("power.csv"),
        "n,trials,mean_estimate,bias,variance\n\
         10,100,1.0,1.0,1.0\n\
         100,100,1.0,0.1,0.1\n\
         1000,100,1.0,0.01,0.01\n",
    )
    .unwrap();
    let fit = kldiv(&["rates", "--summary", "power.csv"], &dir);
    assert!(fit.status.success(), "{}", stderr_of(&fit));
    let out = stdout_of(&fit);
    assert!(out.contains("1.0000"), "table should show the unit slope: {out}");

    // two-row summaries cannot be fitted
    std::fs::write(
        dir.join("short.csv"),
        "n,trials,mean_estimate,bias,variance\n10,100,1.0,1.0,1.0\n100,100,1.0,0.1,0.1\n",
    )
    .unwrap();
    let short = kldiv(&["rates", "--summary", "short.csv"], &dir);
    assert_eq!(short.status.code(), Some(2));

    // malformed rows carry their line number
    std::fs::write(
        dir.join("bad.csv"),
        "n,trials,mean_estimate,bias,variance\n10,100,1.0,1.0,1.0\noops\n",
    )
    .unwrap();
    let bad = kldiv(&["rates", "--summary", "bad.csv"], &dir);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_of(&bad).contains("line 3"));

    // smooth-case flags print the 0.67 exponent
    let smooth = kldiv(
        &[
            "rates",
            "--summary",
            "power.csv",
            "--case",
            "smooth",
            "--gamma",
            "1",
            "--d",
            "1",
        ],
        &dir,
    );
    assert!(smooth.status.success());
    assert!(stdout_of(&smooth).contains("0.67"));

    // case without d is a usage error
    let no_d = kldiv(
        &["rates", "--summary", "power.csv", "--case", "bounded"],
        &dir,
    );
    assert_eq!(no_d.status.code(), Some(2));
}
