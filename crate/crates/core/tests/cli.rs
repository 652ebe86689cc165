use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ecgforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecgforge")).args(args).output().unwrap()
}

fn tiny_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/tiny.cfg")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn count_files(dir: &Path, ext: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| if p.is_dir() { count_files(&p, ext) } else { usize::from(p.extension().is_some_and(|e| e == ext)) })
        .sum()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let o = ecgforge(&["synth-data", "--patients", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 1"), "{}", stderr(&o));

    let o = ecgforge(&["generate", "--model", dir.path().to_str().unwrap(), "--input", "x.csv", "--source-lead", "II", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("selection.csv"), "{}", stderr(&o));

    let o = ecgforge(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "train.epochs = 3\nno.such.key = 1\n").unwrap();
    let o = ecgforge(&["--config", bad.to_str().unwrap(), "--dump-config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no.such.key"), "{}", stderr(&o));
}

#[test]
fn dump_config_layers_file_and_flags() {
    let cfg = tiny_cfg();
    let o = ecgforge(&["--config", cfg.to_str().unwrap(), "--dump-config", "train", "--corpus", "c", "--out", "o", "--epochs", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("synth.patients = 4"));
    assert!(text.contains("train.epochs = 5"));
    assert!(text.contains("train.mode = advanced"));
}

#[test]
fn help_lists_every_command() {
    let o = ecgforge(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["synth-data", "preprocess", "train", "generate", "evaluate", "correlate", "report"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn synth_data_refuses_non_empty_out_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("raw");
    let args = |force: bool| {
        let mut a = vec!["synth-data", "--patients", "2", "--out", out.to_str().unwrap()];
        if force {
            a.push("--force");
        }
        a
    };
    let o = ecgforge(&args(false));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(count_files(&out, "ecgs"), 24);
    let first = std::fs::read(out.join("manifest.csv")).unwrap();

    let o = ecgforge(&args(false));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--force"));

    let o = ecgforge(&args(true));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(out.join("manifest.csv")).unwrap(), first);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 1, "staging left behind: {leftovers:?}");
}

#[test]
fn generate_writes_twelve_leads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_cfg();
    let cfg = cfg.to_str().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_owned();
    for args in [
        vec!["synth-data", "--out", &p("raw")],
        vec!["preprocess", "--in", &p("raw"), "--out", &p("corpus")],
        vec!["train", "--corpus", &p("corpus"), "--mode", "baseline", "--epochs", "1", "--out", &p("model")],
    ] {
        let o = ecgforge(&[&["--config", cfg][..], &args].concat());
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    let beat: String = (0..60).map(|i| format!("{},{}\n", i as f64 / 125.0, (i as f64 / 10.0).sin())).collect();
    std::fs::write(p("beat.csv"), format!("t_seconds,amplitude\n{beat}")).unwrap();
    let o = ecgforge(&["generate", "--model", &p("model"), "--input", &p("beat.csv"), "--source-lead", "V2", "--out", &p("gen")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(count_files(&dir.path().join("gen"), "csv"), 12);
}
