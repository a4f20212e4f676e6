use std::path::Path;
use std::process::{Command, Output};

fn dpnct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpnct")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dpnct(args);
    assert!(out.status.success(), "dpnct {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV with a `#` comment line and a header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn setup(dir: &Path, meters: usize, days: usize, config: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let trace = dir.join("trace.csv");
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    ok(&["gen-data", "--meters", &meters.to_string(), "--days", &days.to_string(), "--seed", "3", "--out", s(&trace)]);
    (trace, cfg)
}

#[test]
fn noiseless_bills_match_ground_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let (trace, cfg) = setup(
        tmp.path(),
        10,
        30,
        "n_meters = 10\nm_masters = 2\ninstants_per_period = 6\nn_periods = 1\nepsilon = 1.0\nseed = 5\nnoiseless = true\n\
         [tariff]\nunit_price = 10.0\nsurcharge_price = 20.0\nmax_allowed_units = 300.0\n",
    );
    let out = tmp.path().join("out");
    ok(&["simulate", "--config", s(&cfg), "--trace", s(&trace), "--out-dir", s(&out), "--no-transcript"]);

    let truth = dpnct_core::io::load_trace(&trace).unwrap();
    let tariff = dpnct_core::Tariff::new(10.0, 20.0, 300.0).unwrap();
    let bills = std::fs::read_to_string(out.join("bills.csv")).unwrap();
    assert!(bills.starts_with("# seed=5\nmeter_id,period,masked_total,base,surcharge,correction,total\n"));
    let bills = rows(&bills);
    assert_eq!(bills.len(), 10);
    for b in bills {
        let meter: usize = b[0].parse().unwrap();
        let total: f64 = b[6].parse().unwrap();
        let expected = tariff.price(truth.meter(meter).iter().sum());
        assert!((total - expected).abs() < 1e-6);
    }
    assert!(!out.join("transcript").exists());
    let report = ok(&["report", "--in-dir", s(&out)]);
    assert!(report.contains("relative MAE (energy)"));
}

#[test]
fn collusion_on_recorded_transcript() {
    let tmp = tempfile::tempdir().unwrap();
    let (trace, cfg) = setup(
        tmp.path(),
        200,
        30,
        "n_meters = 200\nm_masters = 1\ninstants_per_period = 6\nn_periods = 1\nepsilon = 1.0\nseed = 9\n",
    );
    let out = tmp.path().join("out");
    ok(&["simulate", "--config", s(&cfg), "--trace", s(&trace), "--out-dir", s(&out)]);
    let transcript = out.join("transcript");
    let csv = ok(&["attack-collusion", "--transcript", s(&transcript), "--malicious-count", "20"]);
    let records = rows(&csv);
    let leak: f64 = records.iter().find(|r| r[3] == "leak_fraction").unwrap()[4].parse().unwrap();
    assert!((leak - 0.10).abs() < 0.015, "leak {leak}");
    let max_err: f64 = records.iter().find(|r| r[3] == "max_reconstruction_error").unwrap()[4].parse().unwrap();
    assert!(max_err < 1e-6);

    let sweep_out = tmp.path().join("masters.csv");
    ok(&[
        "attack-collusion",
        "--transcript",
        s(&transcript),
        "--malicious-count",
        "100",
        "--sweep-masters",
        "1..3",
        "--out",
        s(&sweep_out),
    ]);
    let text = std::fs::read_to_string(&sweep_out).unwrap();
    assert!(text.starts_with("# seed=9\n"));
    let leaks: Vec<f64> =
        rows(&text).iter().filter(|r| r[3] == "leak_fraction").map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(leaks.len(), 3);
    assert!(leaks[0] > leaks[1] && leaks[1] > leaks[2], "{leaks:?}");
}

#[test]
fn sweep_leak_rises_with_colluders() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.toml");
    std::fs::write(
        &cfg,
        "n_meters = 100\nm_masters = 2\ninstants_per_period = 6\nn_periods = 1\nepsilon = 1.0\nseed = 4\n\
         instants_per_billing_period = 1440\nruns = 2\n",
    )
    .unwrap();
    let csv = ok(&["sweep", "--config", s(&cfg), "--vary", "malicious-count", "--values", "0,20,50,80"]);
    assert!(csv.contains("param,value,leak_fraction,analytic_leak"));
    let rows = rows(&csv);
    let leaks: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(leaks[0], 0.0);
    assert!(leaks.windows(2).all(|w| w[0] <= w[1]), "{leaks:?}");
    let analytic: f64 = rows[2][3].parse().unwrap();
    assert!((analytic - 50.0 * 49.0 / (100.0 * 99.0)).abs() < 1e-12);
}

#[test]
fn bad_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.toml");
    std::fs::write(&cfg, "n_meters = 10\nm_masters = 2\ninstants_per_period = 6\nn_periods = 1\nepsilon = 1.0\nseed = 1\nbogus_key = 3\n").unwrap();
    let trace = tmp.path().join("trace.csv");
    ok(&["gen-data", "--meters", "10", "--days", "1", "--out", s(&trace)]);
    let out = dpnct(&["simulate", "--config", s(&cfg), "--trace", s(&trace), "--out-dir", s(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));

    std::fs::write(&cfg, "n_meters = 10\nm_masters = 20\ninstants_per_period = 6\nn_periods = 1\nepsilon = 1.0\nseed = 1\n").unwrap();
    let out = dpnct(&["simulate", "--config", s(&cfg), "--trace", s(&trace), "--out-dir", s(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("m_masters"));

    std::fs::write(&cfg, "n_meters = 10\nm_masters = 2\ninstants_per_period = 6\nn_periods = 1\nepsilon = 1.0\nseed = 1\n").unwrap();
    let out = dpnct(&["sweep", "--config", s(&cfg), "--vary", "colour", "--values", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn filtering_rows_per_meter() {
    let tmp = tempfile::tempdir().unwrap();
    let (trace, cfg) = setup(
        tmp.path(),
        20,
        5,
        "n_meters = 20\nm_masters = 1\ninstants_per_period = 6\nn_periods = 1\nepsilon = 1.0\nseed = 2\ninstants_per_billing_period = 720\n",
    );
    let out = tmp.path().join("out");
    ok(&["simulate", "--config", s(&cfg), "--trace", s(&trace), "--out-dir", s(&out)]);
    let csv = ok(&["attack-filtering", "--transcript", s(&out.join("transcript")), "--meters", "0,5", "--clamp"]);
    let rows = rows(&csv);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[0] == "clamp+filtering"));
    let out_of_range = dpnct(&["attack-filtering", "--transcript", s(&out.join("transcript")), "--meters", "99"]);
    assert!(!out_of_range.status.success());
}
