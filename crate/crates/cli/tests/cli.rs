use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use stain_core::dsp::AudioClip;
use stain_core::models::{Model, ModelConfig, ModelKind, TrainingMeta};

fn stain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stain")).args(args).output().expect("spawn stain")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "exit {}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn untrained_checkpoint(dir: &Path, kind: ModelKind) -> std::path::PathBuf {
    let path = dir.join(format!("{kind}.ckpt"));
    Model::new(ModelConfig::new(kind), 1).unwrap().save(&TrainingMeta::default(), &path).unwrap();
    path
}

fn noise_wav(dir: &Path, seconds: f64) -> std::path::PathBuf {
    let n = (seconds * 16_000.0) as usize;
    let samples = (0..n).map(|i| (((i * 7919) % 2003) as f64 / 2003.0 - 0.5) * 0.4).collect();
    let path = dir.join("noise.wav");
    AudioClip::new(samples, 16_000).unwrap().write(&path).unwrap();
    path
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&stain(&["--help"])), 0);
    assert_eq!(code(&stain(&["--version"])), 0);
    assert_eq!(code(&stain(&["frobnicate"])), 1);
    assert_eq!(code(&stain(&["train", "--data", "x"])), 1, "missing --out");
    assert_eq!(code(&stain(&["detect", "--checkpoint", "x", "--threshold", "1.5"])), 1);
}

#[test]
fn data_and_config_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = stain(&["eval", "--checkpoint", p(&dir.path().join("none.ckpt")), "--data", p(dir.path())]);
    assert_eq!(code(&missing), 2);

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[train]\nlearning_rate = 0.1\n").unwrap();
    let out = stain(&["--config", p(&cfg), "risk", "--no2", "50"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    let events = dir.path().join("events.csv");
    std::fs::write(&events, "0.0,0.9\nnot a line\n").unwrap();
    let out = stain(&["forecast", "--events", p(&events), "--env-pct", "0"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn risk_at_a_site() {
    let out = stdout(&stain(&["risk", "--no2", "50", "--pm25", "37"]));
    let mut lines = out.lines();
    let json: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(json["total"], 5.75);
    assert_eq!(lines.next(), Some("total risk increase: 5.75%"));

    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("s.csv");
    std::fs::write(&snap, "sensor_id,lat,lon,factor,value,timestamp\ns1,37.0,-122.0,NO2,50,1000\n").unwrap();
    let spec = format!("generic:{}", p(&snap));
    let out = stdout(&stain(&["risk", "--snapshot", &spec, "--lat", "37.0", "--lon", "-122.0"]));
    assert!(out.ends_with("total risk increase: 2%\n"), "{out}");
    assert_eq!(code(&stain(&["risk", "--snapshot", &spec])), 1, "site required");
}

#[test]
fn riskmap_text_output() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("s.csv");
    std::fs::write(&snap, "a,10.0,20.0,PM2_5,32,500\nb,10.0,20.0,PM2_5,1000,1\n").unwrap();
    let spec = format!("generic:{}", p(&snap));
    let args = ["riskmap", "--snapshot", &spec, "--bbox", "9.5,19.5,10.5,20.5"];
    let mut single = args.to_vec();
    single.extend(["--resolution", "1"]);
    let text = stdout(&stain(&single));
    // the second sample is older than the freshness window relative to the newest
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# bbox=9.5,19.5,10.5,20.5 resolution=1 timestamp=500");
    assert_eq!(lines[1], "lat,lon,total_pct,pm25_pct,pm10_pct,no2_pct,temp_pct");
    assert_eq!(lines[2], "10,20,3,3,NA,NA,NA");

    let out = dir.path().join("grid.csv");
    let mut with_out = args.to_vec();
    with_out.extend(["--out", p(&out), "--resolution", "3"]);
    assert!(stdout(&stain(&with_out)).is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2 + 9);
    assert_eq!(code(&stain(&["riskmap", "--snapshot", &spec, "--bbox", "1,2,0,3"])), 1);
}

#[test]
fn forecast_summary() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.csv");
    let mut text = String::from("timestamp_s,probability\n");
    // coughs per hour rise by one each hour for two days
    for h in 0..48u32 {
        for k in 0..(h / 4 + 2) {
            text.push_str(&format!("{},{}\n", h * 3600 + k * 60, 0.9));
        }
    }
    std::fs::write(&events, text).unwrap();
    let out = stdout(&stain(&["forecast", "--events", p(&events), "--env-pct", "5.75", "--horizon-days", "3"]));
    let mut lines = out.lines();
    let json: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(json["horizon_days"], 3);
    assert_eq!(json["env_risk_pct"], 5.75);
    assert!(json["trend"]["slope"].as_f64().unwrap() > 0.0);
    let summary = lines.next().unwrap();
    assert!(summary.starts_with("ALERT in 1 days") || summary == "no alert within horizon", "{summary}");
    assert_eq!(json["alert"].as_bool().unwrap(), summary.starts_with("ALERT"));
}

#[test]
fn detect_threshold_and_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = untrained_checkpoint(dir.path(), ModelKind::Stain);
    let wav = noise_wav(dir.path(), 9.5);
    let none = stdout(&stain(&["detect", "--checkpoint", p(&ckpt), "--input", p(&wav), "--threshold", "0.9999999"]));
    assert!(none.is_empty(), "{none}");

    let fire = |refractory: &str, origin: &str| -> Vec<f64> {
        let out = stdout(&stain(&[
            "detect", "--checkpoint", p(&ckpt), "--input", p(&wav), "--threshold", "1e-9", "--refractory-s", refractory,
            "--origin", origin,
        ]));
        out.lines().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect()
    };
    // every window fires at its first slice: starts 0..=5 s plus the end-aligned 5.5 s
    let times = fire("0.5", "0");
    assert_eq!(times, vec![0.1, 1.1, 2.1, 3.1, 4.1, 5.1, 5.6]);
    assert!(times.windows(2).all(|w| w[1] - w[0] >= 0.5 - 1e-6));
    let moved = fire("0.5", "1000");
    assert!(moved.iter().zip(&times).all(|(m, t)| (m - t - 1000.0).abs() < 1e-6));
    // the hold-off restarts at every detection, so continuous firing reports once
    assert_eq!(fire("1.5", "0"), vec![0.1]);
}

#[test]
fn raw_file_input_matches_wav_input() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = untrained_checkpoint(dir.path(), ModelKind::Cnn);
    let wav = noise_wav(dir.path(), 6.2);
    let clip = AudioClip::read(&wav).unwrap();
    let raw = dir.path().join("noise.raw");
    let bytes: Vec<u8> =
        clip.samples().iter().flat_map(|&v| ((v * 32768.0).round() as i16).to_le_bytes()).collect();
    std::fs::write(&raw, bytes).unwrap();
    let args = |input: &str, raw: bool| {
        let mut a = vec!["detect", "--checkpoint", p(&ckpt), "--threshold", "0.3", "--input"];
        a.push(input);
        if raw {
            a.push("--raw");
        }
        stdout(&stain(&a.iter().map(|s| &**s).collect::<Vec<_>>()))
    };
    let (a, b) = (args(p(&wav), false), args(p(&raw), true));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn bad_checkpoint_fails_before_reading_audio() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, b"RSPN1\nnot a checkpoint").unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_stain"))
        .args(["detect", "--checkpoint", p(&bad)])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // stdin stays open: the process must exit on its own
    let mut stdin = child.stdin.take().unwrap();
    let start = Instant::now();
    let status = loop {
        if let Some(s) = child.try_wait().unwrap() {
            break s;
        }
        assert!(start.elapsed() < Duration::from_secs(30), "detect waited for audio");
        std::thread::sleep(Duration::from_millis(20));
    };
    let _ = stdin.write_all(&[0; 4]);
    assert_eq!(status.code(), Some(2));
}

#[test]
fn small_pipeline_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, data) = (dir.path().join("corpus"), dir.path().join("data"));
    let out = stdout(&stain(&["--seed", "3", "fixtures", "--out", p(&corpus), "--cough-files", "3", "--other-files", "5"]));
    assert!(out.contains("3 cough and 5 other"), "{out}");
    let counts = ["--train-pos", "6", "--train-neg", "6", "--test-pos", "2", "--test-neg", "3"];
    let mut args = vec!["--seed", "3", "dataset", "--corpus", p(&corpus), "--out", p(&data)];
    args.extend(counts);
    stdout(&stain(&args));
    assert_eq!(std::fs::read_to_string(data.join("index.tsv")).unwrap().lines().count(), 17);

    let ckpt = dir.path().join("cnn.ckpt");
    stdout(&stain(&["train", "--data", p(&data), "--model", "cnn", "--out", p(&ckpt), "--epochs", "1"]));
    let eval = stdout(&stain(&["eval", "--checkpoint", p(&ckpt), "--data", p(&data)]));
    let json: serde_json::Value = serde_json::from_str(eval.trim()).unwrap();
    let cm = &json["confusion"];
    let total: u64 = ["tp", "fp", "tn", "fn"].iter().map(|k| cm[k].as_u64().unwrap()).sum();
    assert_eq!(total, 5);
    assert_eq!(json["split"], "test");

    let bench = dir.path().join("bench");
    let table = stdout(&stain(&[
        "bench", "--data", p(&data), "--out", p(&bench), "--models", "cnn,stain", "--epochs", "1",
    ]));
    assert_eq!(table.lines().count(), 3, "{table}");
    assert_eq!(std::fs::read_to_string(bench.join("records.jsonl")).unwrap().lines().count(), 2);
    assert!(bench.join("cnn.ckpt").exists() && bench.join("stain.ckpt").exists());
    assert_eq!(std::fs::read_to_string(bench.join("table.txt")).unwrap(), table);
}
