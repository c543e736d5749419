use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

const REGEN_ENV: &str = "BOSEWALK_REGEN_GOLDEN";

fn bosewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosewalk"))
        .args(args)
        .env_remove("BOSEWALK_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_grid(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn simulate_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let run = bosewalk(&[
        "simulate", "--sites", "10", "--particles", "2", "--gamma", "3", "--starts", "4,5",
        "--time", "2", "--seed", "7", "--out", path_str(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    for name in ["energies.csv", "correlation.csv", "density.csv"] {
        let golden = golden_dir().join(name);
        if std::env::var_os(REGEN_ENV).is_some() {
            fs::copy(out.join(name), &golden).unwrap();
        }
        let got = read_grid(&out.join(name));
        let want = read_grid(&golden);
        assert_eq!(got.len(), want.len(), "{name}");
        for (a, b) in got.iter().flatten().zip(want.iter().flatten()) {
            assert!((a - b).abs() < 1e-12, "{name}: {a} vs {b}");
        }
    }
    let pairs: f64 = read_grid(&out.join("correlation.csv")).iter().flatten().sum();
    assert!((pairs - 2.0).abs() < 1e-10);
}

#[test]
fn oracle_check_gates_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("free");
    let free = bosewalk(&["simulate", "--gamma", "0", "--check-oracle", "--seed", "3", "--out", path_str(&out)]);
    assert_eq!(code(&free), 0, "{}", String::from_utf8_lossy(&free.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["oracle_deviation"].as_f64().unwrap() < 1e-8);

    let interacting = bosewalk(&["simulate", "--gamma", "3", "--check-oracle", "--out", path_str(&out)]);
    assert_eq!(code(&interacting), 2);
}

#[test]
fn three_boson_run_completes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n3");
    let run = bosewalk(&["simulate", "--particles", "3", "--gamma", "3", "--unitary", "--out", path_str(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let u = read_grid(&out.join("unitary_abs.csv"));
    assert_eq!((u.len(), u[0].len()), (220, 220));
    let n: f64 = read_grid(&out.join("density.csv"))[0].iter().sum();
    assert!((n - 3.0).abs() < 1e-10);
    let pairs: f64 = read_grid(&out.join("correlation.csv")).iter().flatten().sum();
    assert!((pairs - 6.0).abs() < 1e-10);
}

#[test]
fn smoke_corpus_verifies_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let started = Instant::now();
    let gen = bosewalk(&["gen-dataset", "--count", "100", "--gamma", "3", "--seed", "5", "--out", path_str(&corpus)]);
    let elapsed = started.elapsed();
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));
    assert!(elapsed < Duration::from_secs(5), "{elapsed:?}");
    assert!(String::from_utf8_lossy(&gen.stdout).contains("images/s"));

    let verify = bosewalk(&["verify", path_str(&corpus)]);
    assert_eq!(code(&verify), 0, "{}", String::from_utf8_lossy(&verify.stdout));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(corpus.join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed_count"], 100);
    assert!(report["kl"]["median"].as_f64().unwrap() < 0.005);
    assert_eq!(report["kl_log_base"], "e");
}

#[test]
fn corrupted_image_fails_alone() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert_eq!(code(&bosewalk(&["gen-dataset", "--count", "20", "--out", path_str(&corpus)])), 0);
    fs::write(corpus.join("bosewalk_000007.png"), b"not a png").unwrap();
    let verify = bosewalk(&["verify", path_str(&corpus), "--out", path_str(&dir.path().join("report"))]);
    assert_eq!(code(&verify), 1);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("report/verify_report.json")).unwrap()).unwrap();
    let samples = report["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 20);
    assert_eq!(report["passed_count"], 19);
    assert_eq!(report["errored_count"], 1);
    let bad: Vec<_> = samples.iter().filter(|s| s["passed"] == false).collect();
    assert_eq!(bad[0]["file"], "bosewalk_000007.png");
    assert!(bad[0]["error"].is_string());

    let lenient = bosewalk(&["verify", path_str(&corpus), "--min-pass-fraction", "0.9"]);
    assert_eq!(code(&lenient), 0);
}

#[test]
fn corpora_are_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut listings = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("w{workers}"));
        let run = Command::new(env!("CARGO_BIN_EXE_bosewalk"))
            .args(["gen-dataset", "--count", "300", "--gamma", "1000", "--seed", "9", "--out", path_str(&out)])
            .env("BOSEWALK_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(code(&run), 0);
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap())
            .filter(|e| e.file_name() != "run_config.toml")
            .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
            .collect();
        files.sort();
        listings.push(files);
    }
    assert_eq!(listings[0].len(), 302);
    assert!(listings[0] == listings[1]);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let config = dir.path().join("base.toml");
    fs::write(&config, "gamma = 1000.0\neta = 2.0\nseed = 11\nunitary = true\n").unwrap();
    let first = bosewalk(&["simulate", "--config", path_str(&config), "--gamma", "3", "--out", path_str(&out)]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let echo = fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(echo.contains("gamma = 3.0"), "flags must win: {echo}");
    assert!(echo.contains("eta = 2.0"));

    let saved = dir.path().join("saved.toml");
    fs::write(&saved, &echo).unwrap();
    let before: Vec<u8> = fs::read(out.join("unitary_re.csv")).unwrap();
    let correlation = fs::read(out.join("correlation.csv")).unwrap();
    fs::remove_dir_all(&out).unwrap();
    let replay = bosewalk(&["run", "--config", path_str(&saved)]);
    assert_eq!(code(&replay), 0, "{}", String::from_utf8_lossy(&replay.stderr));
    assert_eq!(fs::read(out.join("unitary_re.csv")).unwrap(), before);
    assert_eq!(fs::read(out.join("correlation.csv")).unwrap(), correlation);
}

#[test]
fn single_realization_average_equals_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let avg = dir.path().join("avg");
    assert_eq!(code(&bosewalk(&["simulate", "--gamma", "3", "--seed", "4", "--out", path_str(&sim)])), 0);
    assert_eq!(
        code(&bosewalk(&["average", "--gamma", "3", "--seed", "4", "--realizations", "1", "--out", path_str(&avg)])),
        0
    );
    assert_eq!(
        fs::read(sim.join("correlation.csv")).unwrap(),
        fs::read(avg.join("mean_correlation.csv")).unwrap()
    );
    assert_eq!(
        fs::read(sim.join("density.csv")).unwrap(),
        fs::read(avg.join("mean_density.csv")).unwrap()
    );
}

#[test]
fn average_sweeps_write_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let run = bosewalk(&[
        "average", "--gammas", "0,3,1000", "--etas", "0,3", "--realizations", "20", "--unitary",
        "--out", path_str(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let rows = read_grid(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 6);
    for name in ["gamma_0_eta_0", "gamma_3_eta_3", "gamma_1000_eta_0"] {
        let u = read_grid(&out.join(name).join("mean_abs_unitary.csv"));
        assert_eq!(u.len(), 55);
    }
    // hard-core bosons rarely share a site
    let hard = rows.iter().find(|r| r[0] == 1000.0 && r[1] == 3.0).unwrap();
    let free = rows.iter().find(|r| r[0] == 0.0 && r[1] == 3.0).unwrap();
    assert!(hard[3] < 1e-3 && free[3] > 0.05, "{hard:?} {free:?}");
}

#[test]
fn unitary_corpus_and_header_only_directory_verify() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("u");
    let gen = bosewalk(&["gen-dataset", "--layout", "unitary-v1", "--count", "6", "--resolution", "64", "--out", path_str(&corpus)]);
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));
    assert_eq!(code(&bosewalk(&["verify", path_str(&corpus)])), 0);

    let samples = dir.path().join("samples");
    assert_eq!(code(&bosewalk(&["gen-dataset", "--count", "4", "--out", path_str(&samples)])), 0);
    fs::remove_file(samples.join("manifest.jsonl")).unwrap();
    let verify = bosewalk(&["verify", path_str(&samples)]);
    assert_eq!(code(&verify), 0, "{}", String::from_utf8_lossy(&verify.stdout));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "gamma = 1.0\nbogus = 2\n").unwrap();
    let out = dir.path().join("x");
    assert_eq!(code(&bosewalk(&["simulate", "--config", path_str(&bad), "--out", path_str(&out)])), 2);
    assert_eq!(code(&bosewalk(&["simulate"])), 2);
    assert_eq!(code(&bosewalk(&["simulate", "--hopping", "1", "--out", path_str(&out)])), 2);
    assert_eq!(code(&bosewalk(&["simulate", "--starts", "4,40", "--out", path_str(&out)])), 2);
    assert_eq!(code(&bosewalk(&["gen-dataset", "--resolution", "48", "--out", path_str(&out)])), 2);
    assert_eq!(code(&bosewalk(&["verify", path_str(&dir.path().join("missing"))])), 2);
    assert_eq!(code(&bosewalk(&["frobnicate"])), 2);
}
