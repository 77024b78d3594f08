use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use momvar::commands::{estimate_panel, SimulateSettings};
use momvar::config::MethodChoice;
use momvar_core::simulator::{synth_panel, Scheme, DAY_LENGTH};
use momvar_core::HestonParams64;
use tempfile::TempDir;

fn momvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momvar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

const TICKS: &str = "timestamp,price
2024-01-02 09:29:00,100.0
2024-01-02 09:33:10,100.5
2024-01-02 09:35:00,101.0
2024-01-02 09:38:00,100.2
2024-01-02 09:44:59,99.8
2024-01-02 09:50:00,100.4
2024-01-02 09:52:00,100.9
2024-01-02 10:30:00,105.0
2024-01-03T09:30:00Z,50.0
2024-01-03T09:31:00Z,50.2
2024-01-03T09:36:00Z,50.1
2024-01-03T09:41:00Z,49.7
2024-01-03T09:46:00Z,49.9
2024-01-03T09:51:00Z,50.3
2024-01-04 09:31:00,10.0
2024-01-04 09:52:00,10.1
";

/// Expanded forms with `R_i` the within-day cumulative log return:
/// tv = sum 2 R_{i-1} dR^2 + dR^3, fv = sum dR^2 (2 R_{i-1} + dR)^2.
fn oracle(prices: &[f64]) -> [f64; 4] {
    let r: Vec<f64> = prices.iter().map(|x| (x / prices[0]).ln()).collect();
    let (mut rv, mut tv, mut fv) = (0.0, 0.0, 0.0);
    for w in r.windows(2) {
        let d = w[1] - w[0];
        rv += d * d;
        tv += 2.0 * w[0] * d * d + d * d * d;
        fv += d * d * (2.0 * w[0] + d).powi(2);
    }
    [rv, tv, fv, r[r.len() - 1]]
}

#[test]
fn panel_golden_fixture() {
    let dir = TempDir::new().unwrap();
    let ticks = p(&dir, "ticks.csv");
    fs::write(&ticks, TICKS).unwrap();
    let out_path = p(&dir, "panel.csv");
    let out = momvar(&[
        "panel", "--input", &ticks, "--output", &out_path, "--open", "09:30", "--close", "09:55", "--bar-minutes", "5",
    ]);
    ok(&out);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("2024-01-04") && stderr.contains("dropped"), "{stderr}");

    let text = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "day_id,rv,tv,fv,tv15,fv15,r_close,r3,r4");
    assert_eq!(lines.len(), 3);
    let expected = [
        ("2024-01-02", [100.0, 101.0, 100.2, 99.8, 100.4, 100.9]),
        ("2024-01-03", [50.0, 50.2, 50.1, 49.7, 49.9, 50.3]),
    ];
    for (line, (day, prices)) in lines[1..].iter().zip(expected) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], day);
        let v: Vec<f64> = f[1..].iter().map(|s| s.parse().unwrap()).collect();
        let [rv, tv, fv, rc] = oracle(&prices);
        let want = [rv, tv, fv, 1.5 * tv, 1.5 * fv, rc, rc.powi(3), rc.powi(4)];
        for (got, want) in v.iter().zip(want) {
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "{day}: {got} vs {want}");
        }
    }
}

fn simulate(dir: &TempDir, tag: &str, seed: &str) -> (String, String) {
    let panel = p(dir, &format!("{tag}.csv"));
    let summary = p(dir, &format!("{tag}.json"));
    let args = vec![
        "simulate", "--preset", "model2", "--days", "300", "--seed", seed, "--output", &panel, "--summary", &summary,
    ];
    ok(&momvar(&args));
    (panel, summary)
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let (a, sa) = simulate(&dir, "a", "17");
    let (b, sb) = simulate(&dir, "b", "17");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&sa).unwrap(), fs::read(&sb).unwrap());
    let (c, _) = simulate(&dir, "c", "18");
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let est = |panel: &str, json: &str| {
        ok(&momvar(&["estimate", "--panel", panel, "--method", "gmm", "--json", json]));
        fs::read(json).unwrap()
    };
    assert_eq!(est(&a, &p(&dir, "ea.json")), est(&b, &p(&dir, "eb.json")));
    let test = |panel: &str| {
        let out = momvar(&["test", "--panel", panel]);
        ok(&out);
        out.stdout
    };
    assert_eq!(test(&a), test(&b));
}

#[test]
fn simulate_then_estimate_matches_in_process() {
    let dir = TempDir::new().unwrap();
    let (panel_path, summary_path) = simulate(&dir, "rt", "17");
    let settings = SimulateSettings {
        params: HestonParams64::new(15.0, 0.02, 0.7, 0.3),
        days: 300,
        bars: 78,
        steps_per_day: 390,
        seed: 17,
        scheme: Scheme::FullTruncationEuler,
    };
    let sp = synth_panel(&settings.sim_config(), 300, 78).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary_path).unwrap()).unwrap();
    assert_eq!(summary["truncated_fraction"].as_f64().unwrap(), sp.truncated_fraction);

    for (method, name) in [(MethodChoice::Simple, "simple"), (MethodChoice::Gmm, "gmm")] {
        let json_path = p(&dir, &format!("{name}.json"));
        let out = momvar(&["estimate", "--panel", &panel_path, "--method", name, "--json", &json_path]);
        ok(&out);
        assert!(String::from_utf8_lossy(&out.stdout).contains("kappa"));
        let cli: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
        let local = estimate_panel(&sp.panel, DAY_LENGTH, method, None).unwrap();
        let e = &cli["estimates"];
        assert_eq!(e["kappa"].as_f64().unwrap(), local.estimates.kappa, "{name}");
        assert_eq!(e["theta"].as_f64().unwrap(), local.estimates.theta, "{name}");
        assert_eq!(e["gamma"].as_f64().unwrap(), local.estimates.gamma, "{name}");
        assert_eq!(e["rho"].as_f64().unwrap(), local.estimates.rho, "{name}");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "run.toml");
    fs::write(&cfg, "[model]\npreset = \"model1\"\n[simulation]\ndays = 150\nbars = 39\nseed = 3\n").unwrap();
    let panel = p(&dir, "panel.csv");
    ok(&momvar(&["--config", &cfg, "simulate", "--days", "120", "--output", &panel]));
    let text = fs::read_to_string(&panel).unwrap();
    assert_eq!(text.lines().count(), 121);
    let panel2 = p(&dir, "panel2.csv");
    ok(&momvar(&["--config", &cfg, "simulate", "--output", &panel2]));
    assert_eq!(fs::read_to_string(&panel2).unwrap().lines().count(), 151);
}

fn write_panel(path: &Path, rows: impl Iterator<Item = (f64, f64, f64, f64)>) {
    let mut s = String::from("day_id,rv,tv,fv,tv15,fv15,r_close,r3,r4\n");
    for (i, (rv, tv, fv, rc)) in rows.enumerate() {
        s.push_str(&format!("{i},{rv},{tv},{fv},0,0,{rc},0,0\n"));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn zero_third_variation_column_gives_half_p_value() {
    let dir = TempDir::new().unwrap();
    let panel = dir.path().join("zero.csv");
    write_panel(&panel, (0..40).map(|i| (1e-4, 0.0, 1e-8, if i % 3 == 0 { 0.01 } else { -0.004 })));
    let out = momvar(&["test", "--panel", panel.to_str().unwrap()]);
    ok(&out);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tv15"]["t_test"]["p_value"].as_f64(), Some(0.5));
    assert_eq!(v["tv15"]["wilcoxon"]["p_value"].as_f64(), Some(1.0));
    assert_eq!(v["n_days"].as_u64(), Some(40));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = momvar(&["estimate", "--panel", &p(&dir, "nope.csv")]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "day_id,rv,tv,fv,tv15,fv15,r_close,r3,r4\n0,1e-4,0,1e-8,0,0,0.01,0,0\n1,abc,0,0,0,0,0,0,0\n").unwrap();
    let out = momvar(&["estimate", "--panel", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let ticks = dir.path().join("ticks.csv");
    fs::write(&ticks, "timestamp,price\n2024-01-02 09:31:00,-1\n").unwrap();
    let out = momvar(&["panel", "--input", ticks.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(momvar(&["simulate", "--theta", "-1"]).status.code(), Some(2));
    assert_eq!(momvar(&["estimate"]).status.code(), Some(2));

    // constant rv: the simple estimator is undefined, so GMM has no start
    let flat = dir.path().join("flat.csv");
    write_panel(&flat, (0..150).map(|i| (1e-4, if i % 2 == 0 { 1e-7 } else { -1e-7 }, 1e-8, 0.01)));
    let out = momvar(&["estimate", "--panel", flat.to_str().unwrap(), "--method", "gmm"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn converge_writes_running_means() {
    let dir = TempDir::new().unwrap();
    let out_path = p(&dir, "conv.csv");
    ok(&momvar(&[
        "converge", "--paths", "500", "--horizon", "0.0833333333333333", "--steps-per-day", "39", "--output", &out_path,
    ]));
    let text = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample_size,mean_tv15,mean_r3,theoretical_third_moment,se_tv15,se_r3");
    let sizes: Vec<usize> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(sizes, vec![10, 20, 50, 100, 200, 500]);
    let last: Vec<f64> = lines[lines.len() - 1].split(',').skip(1).map(|s| s.parse().unwrap()).collect();
    // Leverage makes the third moment negative; the tv15 running mean is far less noisy.
    assert!(last[2] < 0.0);
    assert!(last[3] < last[4]);
}
