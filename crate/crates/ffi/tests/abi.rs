use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use ecgforge::config::RunConfig;
use ecgforge::data::{Corpus, RawDataset};
use ecgforge_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ecg_last_error()) }.to_string_lossy().into_owned()
}

fn tiny_model(dir: &Path) {
    let mut cfg = RunConfig::default();
    for (k, v) in [
        ("synth.patients", "3"),
        ("synth.duration_s", "5"),
        ("train.mode", "baseline"),
        ("train.epochs", "1"),
        ("train.batch_size", "8"),
        ("train.max_train_pairs", "16"),
        ("train.max_val_pairs", "4"),
        ("generator.hidden", "3"),
        ("discriminator.kernels", "2"),
        ("discriminator.fc_units", "4"),
    ] {
        cfg.set(k, v).unwrap();
    }
    let raw = RawDataset::synthetic(&cfg.synth).unwrap();
    let (segs, target_len) = raw.segments(&cfg.pipeline).unwrap();
    let corpus = Corpus::build(cfg.corpus_info(target_len), segs).unwrap();
    ecgforge::gan::train(&corpus, &cfg.train_config(), dir).unwrap();
}

#[test]
fn frechet_and_correlations() {
    let a = [0.0, 0.5, 1.0];
    let b = [0.0, 1.0];
    let mut d = f64::NAN;
    let st = unsafe { ecg_frechet_distance(a.as_ptr(), 3, b.as_ptr(), 2, EcgPointMetric::Amplitude, &mut d) };
    assert_eq!(st, EcgStatus::Ok);
    assert_eq!(d, 0.5);

    let mut r = 0.0;
    assert_eq!(unsafe { ecg_cross_correlation(a.as_ptr(), 3, b.as_ptr(), 2, false, &mut r) }, EcgStatus::InvalidArgument);
    assert!(last_error().contains("lengths"));
    assert_eq!(unsafe { ecg_cross_correlation(a.as_ptr(), 3, b.as_ptr(), 2, true, &mut r) }, EcgStatus::Ok);
    assert_eq!(r, 0.5);
    assert_eq!(unsafe { ecg_auto_correlation(a.as_ptr(), 3, 0, &mut r) }, EcgStatus::Ok);
    assert_eq!(r, 1.25);

    let neg = [1.0, 0.5, 0.0];
    assert_eq!(unsafe { ecg_pearson(a.as_ptr(), neg.as_ptr(), 3, &mut r) }, EcgStatus::Ok);
    assert!((r + 1.0).abs() < 1e-12);
    let flat = [2.0; 3];
    r = 42.0;
    assert_eq!(unsafe { ecg_pearson(a.as_ptr(), flat.as_ptr(), 3, &mut r) }, EcgStatus::Undefined);
    assert_eq!(r, 42.0);
}

#[test]
fn null_pointers_are_reported() {
    let mut d = 0.0;
    assert_eq!(
        unsafe { ecg_frechet_distance(ptr::null(), 3, [0.0].as_ptr(), 1, EcgPointMetric::Amplitude, &mut d) },
        EcgStatus::NullPointer
    );
    assert!(last_error().contains("null"));
    assert_eq!(unsafe { ecg_pearson([0.0, 1.0].as_ptr(), [1.0, 0.0].as_ptr(), 2, ptr::null_mut()) }, EcgStatus::NullPointer);
    unsafe {
        ecg_signal_free(ptr::null_mut());
        ecg_generator_free(ptr::null_mut());
    }
    assert_eq!(unsafe { ecg_signal_len(ptr::null()) }, 0);
}

#[test]
fn lead_names_and_version() {
    let name = |i| unsafe { CStr::from_ptr(ecg_lead_name(i)) }.to_str().unwrap().to_owned();
    assert_eq!(name(0), "I");
    assert_eq!(name(3), "aVR");
    assert_eq!(name(11), "V6");
    assert!(ecg_lead_name(12).is_null());
    let v = unsafe { CStr::from_ptr(ecg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn signal_lifecycle() {
    let rate = 250.0;
    let x: Vec<f64> = (0..2500)
        .map(|i| {
            let t = i as f64 / rate;
            let phase = t % 1.0;
            (-((phase - 0.5) / 0.01).powi(2)).exp() + 0.05 * (40.0 * t).sin()
        })
        .collect();
    let mut sig = ptr::null_mut();
    assert_eq!(unsafe { ecg_signal_new(1, rate, x.as_ptr(), x.len(), &mut sig) }, EcgStatus::Ok);
    assert_eq!(unsafe { ecg_signal_len(sig) }, 2500);

    let mut den = ptr::null_mut();
    assert_eq!(unsafe { ecg_signal_denoise(sig, 4, 4, &mut den) }, EcgStatus::Ok);
    assert_eq!(unsafe { ecg_signal_len(den) }, 2500);

    let mut n = 0;
    let mut small = [0usize; 2];
    assert_eq!(unsafe { ecg_signal_r_peaks(den, small.as_mut_ptr(), 2, &mut n) }, EcgStatus::BufferTooSmall);
    assert_eq!(n, 10);
    let mut peaks = vec![0usize; n];
    assert_eq!(unsafe { ecg_signal_r_peaks(den, peaks.as_mut_ptr(), n, &mut n) }, EcgStatus::Ok);
    for (k, p) in peaks.iter().enumerate() {
        assert!((*p as i64 - (125 + 250 * k) as i64).abs() <= 3, "peak {k} at {p}");
    }

    let mut back = vec![0.0; 2500];
    assert_eq!(unsafe { ecg_signal_samples(sig, back.as_mut_ptr(), 2500, &mut n) }, EcgStatus::Ok);
    assert_eq!(back, x);

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { ecg_signal_denoise(sig, 3, 4, &mut bad) }, EcgStatus::InvalidArgument);
    assert!(bad.is_null());
    assert_eq!(unsafe { ecg_signal_new(12, rate, x.as_ptr(), 1, &mut bad) }, EcgStatus::InvalidArgument);
    assert_eq!(unsafe { ecg_signal_new(0, -1.0, x.as_ptr(), 1, &mut bad) }, EcgStatus::InvalidArgument);
    assert!(bad.is_null());
    unsafe {
        ecg_signal_free(den);
        ecg_signal_free(sig);
    }
}

#[test]
fn missing_signal_file_is_io() {
    let p = CString::new("/nonexistent/x.ecgs").unwrap();
    let mut sig = ptr::null_mut();
    assert_eq!(unsafe { ecg_signal_read(p.as_ptr(), &mut sig) }, EcgStatus::Io);
    assert!(sig.is_null());
}

#[test]
fn generator_round_trip() {
    let empty = tempfile::tempdir().unwrap();
    let p = CString::new(empty.path().to_str().unwrap()).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { ecg_generator_load(p.as_ptr(), &mut g) }, EcgStatus::MissingModel);
    assert!(last_error().contains("selection.csv"));

    let dir = tempfile::tempdir().unwrap();
    tiny_model(dir.path());
    let p = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ecg_generator_load(p.as_ptr(), &mut g) }, EcgStatus::Ok);
    let len = unsafe { ecg_generator_beat_len(g) };
    assert!(len > 0);

    let beat: Vec<f64> = (0..len / 2).map(|i| i as f64 / len as f64).collect();
    let mut outbuf = vec![f64::NAN; len];
    let mut n = 0;
    let gen = |buf: &mut [f64], n: &mut usize, tgt| unsafe {
        ecg_generator_generate(g, 1, tgt, beat.as_ptr(), beat.len(), buf.as_mut_ptr(), buf.len(), n)
    };
    assert_eq!(gen(&mut outbuf, &mut n, 6), EcgStatus::Ok);
    assert_eq!(n, len);
    assert!(outbuf.iter().all(|v| (0.0..=1.0).contains(v)));
    let first = outbuf.clone();
    assert_eq!(gen(&mut outbuf, &mut n, 6), EcgStatus::Ok);
    assert_eq!(first, outbuf);

    assert_eq!(gen(&mut outbuf, &mut n, 1), EcgStatus::Ok);
    assert_eq!(&outbuf[..beat.len()], &beat[..]);
    assert!(outbuf[beat.len()..].iter().all(|&v| v == 0.0));

    assert_eq!(gen(&mut outbuf[..3], &mut n, 6), EcgStatus::BufferTooSmall);
    assert_eq!(n, len);
    assert_eq!(gen(&mut outbuf, &mut n, 12), EcgStatus::InvalidArgument);

    let long = vec![0.5; len + 1];
    let st = unsafe { ecg_generator_generate(g, 1, 6, long.as_ptr(), long.len(), outbuf.as_mut_ptr(), len, &mut n) };
    assert_eq!(st, EcgStatus::InvalidArgument);
    unsafe { ecg_generator_free(g) };
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ecgforge.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["ecg_frechet_distance", "ecg_generator_generate", "ECG_STATUS_MISSING_MODEL", "typedef struct EcgSignal EcgSignal"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
            .unwrap_or_else(|e| panic!("running {compiler}: {e}"));
        assert!(status.success(), "{compiler} rejected the header");
    }
}
