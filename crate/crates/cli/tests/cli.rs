use std::fs;
use std::process::{Command, Output};

fn otfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otfs")).args(args).output().unwrap()
}

const SMALL: &str = r#"
[frame]
m = 8
n = 8
delta_f = 1851.85
carrier_hz = 4e9

[channel]
delays_us = [0.0, 67.5]

[detector]
seed = 7

[sweep]
snr_db = [10.0]
doppler_hz = [200.0]
min_frames = 10
max_frames = 10
"#;

#[test]
fn selftest_passes() {
    let out = otfs(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn ber_to_stdout_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = otfs(&["ber", "--config", cfg, "--out", "-", "--no-timing"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 2);
    let b = otfs(&["ber", "--config", cfg, "--out", "-", "--no-timing", "--threads", "1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn mf_dump_header_and_size() {
    let out = otfs(&["mf-dump", "--r", "5", "--paths", "3:7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("delta,omega,abs,re,im"));
    assert_eq!(text.lines().count(), 1 + 31 * 31);
    assert!(text.contains("\n3,7,1"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, SMALL.replace("seed = 7", "seed = 7\nn_iters = 3")).unwrap();
    let out = otfs(&["ber", "--config", cfg.to_str().unwrap(), "--out", "-"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_iters"));
}
