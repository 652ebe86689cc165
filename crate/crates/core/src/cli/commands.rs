use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{report, BeatFormat};
use crate::config::RunConfig;
use crate::data::{Corpus, RawDataset, RawPatient, SplitName};
use crate::gan::{self, control_beats, evaluate_split, generate_full_set, ModelSet};
use crate::metrics::plot::{self, Series};
use crate::metrics::{frechet_distance, pearson_matrix, FdReport, FdScore};
use crate::preprocess::{clean_patient, denoise_samples, normalize, HeartbeatSegment};
use crate::signal::{read_signal, read_signal_csv, write_signal, write_signal_csv};
use crate::{fsutil, EcgSignal, Error, LeadId, PatientId, Result};

const PREVIEW_S: f64 = 5.0;

pub(super) fn check_model(dir: &Path) -> Result<()> {
    ModelSet::load(dir).map(|_| ())
}

pub(super) fn synth_data(cfg: &RunConfig, out: &Path) -> Result<()> {
    RawDataset::synthetic(&cfg.synth)?.save(out)
}

/// Recorded vs denoised reference lead of one patient with the detected R
/// peaks marked.
fn preview(cfg: &RunConfig, p: &RawPatient) -> Result<String> {
    let lead = cfg.pipeline.reference_lead;
    let raw = p
        .signals
        .get(&lead)
        .ok_or_else(|| Error::InvalidArgument(format!("patient {} has no lead {lead}", p.id)))?;
    let clean = clean_patient(&p.id, &p.signals, &cfg.pipeline)?;
    let fs = raw.sampling_rate_hz;
    let n = ((PREVIEW_S * fs) as usize).min(raw.len());
    let timed = |x: &[f64], rate: f64| -> Vec<(f64, f64)> {
        x.iter().enumerate().map(|(i, &v)| (i as f64 / rate, v)).collect()
    };
    let recorded = normalize(&raw.samples);
    let denoised = normalize(&denoise_samples(&raw.samples, &cfg.pipeline.denoise)?);
    let cleaned = &clean.signals[&lead];
    let rate = cfg.pipeline.target_rate_hz;
    let peaks: Vec<(f64, f64)> = clean
        .r_peaks
        .iter()
        .map(|&k| (k as f64 / rate, cleaned.samples[k]))
        .filter(|(t, _)| *t < n as f64 / fs)
        .collect();
    let series = [
        Series::new("recorded", timed(&recorded[..n], fs)),
        Series::new("denoised", timed(&denoised[..n], fs)),
        Series::new("R peaks", peaks).dots(),
    ];
    Ok(plot::line_chart(&format!("Patient {} lead {lead}", p.id), "time (s)", "normalised amplitude", &series))
}

pub(super) fn preprocess(cfg: &RunConfig, input: &Path, out: &Path) -> Result<()> {
    let raw = RawDataset::load(input)?;
    let (segments, target_len) = raw.segments(&cfg.pipeline)?;
    let corpus = Corpus::build(cfg.corpus_info(target_len), segments)?;
    corpus.save(out)?;
    fsutil::atomic_write(&out.join("preview.svg"), preview(cfg, &raw.patients[0])?.as_bytes())
}

pub(super) fn train(cfg: &RunConfig, corpus: &Path, out: &Path) -> Result<()> {
    let corpus = Corpus::load(corpus)?;
    let outcome = gan::train(&corpus, &cfg.train_config(), out)?;
    fsutil::atomic_write(&out.join("val_fd.svg"), report::trace_chart("Validation FD per epoch", &outcome.trace).as_bytes())
}

fn read_beat(input: &Path, lead: LeadId) -> Result<EcgSignal> {
    let id = PatientId::from("input");
    if input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return read_signal_csv(input, lead, id);
    }
    let sig = read_signal(input, id)?;
    if sig.lead != lead {
        return Err(Error::InvalidArgument(format!(
            "{} holds lead {}, not --source-lead {lead}",
            input.display(),
            sig.lead
        )));
    }
    Ok(sig)
}

fn write_beat(dir: &Path, sig: &EcgSignal, format: BeatFormat) -> Result<()> {
    match format {
        BeatFormat::Csv => write_signal_csv(&dir.join(format!("{}.csv", sig.lead)), sig),
        BeatFormat::Ecgs => write_signal(&dir.join(format!("{}.ecgs", sig.lead)), sig),
    }
}

fn write_set(dir: &Path, set: &BTreeMap<LeadId, Vec<f64>>, rate: f64, id: &PatientId, format: BeatFormat) -> Result<()> {
    for (&lead, beat) in set {
        write_beat(dir, &EcgSignal::new(lead, beat.clone(), rate, id.clone())?, format)?;
    }
    Ok(())
}

/// Values outside `[0, 1]` are min-max normalised first; the beat must fit
/// the model's padded length.
pub(super) fn generate(model: &Path, input: &Path, lead: LeadId, format: BeatFormat, out: &Path) -> Result<()> {
    let mut models = ModelSet::load(model)?;
    let sig = read_beat(input, lead)?;
    let mut samples = sig.samples;
    if samples.iter().any(|v| !(0.0..=1.0).contains(v)) {
        samples = normalize(&samples);
    }
    let len = models.info.target_len;
    if samples.len() > len {
        return Err(Error::InvalidArgument(format!(
            "input beat has {} samples, the model takes at most {len}",
            samples.len()
        )));
    }
    let seg = HeartbeatSegment::new("input".into(), lead, 0, &samples, len, 0)?;
    let set = generate_full_set(&mut models, &seg)?;
    write_set(out, &set, models.info.sampling_rate_hz, &"generated".into(), format)
}

fn overlay(title: &str, source: &[f64], target: &[f64], generated: &[f64]) -> String {
    let series = [
        Series::from_samples("source", source),
        Series::from_samples("real", target),
        Series::from_samples("generated", generated),
    ];
    plot::line_chart(title, "sample", "normalised amplitude", &series)
}

pub(super) fn evaluate(
    cfg: &RunConfig,
    model: &Path,
    corpus_dir: &Path,
    split: SplitName,
    sets: usize,
    out: &Path,
) -> Result<()> {
    let mut models = ModelSet::load(model)?;
    let corpus = Corpus::load(corpus_dir)?;
    if corpus.info.target_len != models.info.target_len {
        return Err(Error::InvalidArgument(format!(
            "corpus beats have length {}, the model was trained on {}",
            corpus.info.target_len, models.info.target_len
        )));
    }
    let pairs = corpus.split(split);
    let evaluated = evaluate_split(&mut models, &corpus, pairs, cfg.eval.metric, cfg.eval.batch_size)?;
    let scores: Vec<FdScore> = evaluated.iter().map(|e| e.score).collect();
    FdReport::from_scores(&scores)?.write(out)?;

    let controls = control_beats(&corpus, pairs, cfg.eval.control_seed)?;
    let mut rows = String::from("pair,patient,beat,source,target,fd,control_fd\n");
    let mut by_lead: BTreeMap<LeadId, (usize, usize, f64, f64)> = BTreeMap::new();
    let mut overlays = BTreeSet::new();
    for (e, c) in evaluated.iter().zip(&controls) {
        let bp = corpus.resolve(&e.pair)?;
        let control = frechet_distance(c.valid(), bp.target.valid(), cfg.eval.metric)?;
        let p = &e.pair;
        let _ = writeln!(rows, "{},{},{},{},{},{},{}", p.id, p.patient, p.beat, p.source, p.target, e.score.value, control);
        let t = by_lead.entry(p.target).or_default();
        t.0 += 1;
        t.1 += usize::from(e.score.value < control);
        t.2 += e.score.value;
        t.3 += control;
        if overlays.insert(p.target) {
            let n = bp.target.valid_len();
            let title = format!("{} beat {}: {} from {}", p.patient, p.beat, p.target, p.source);
            let svg = overlay(&title, bp.source.valid(), bp.target.valid(), &e.generated[..n]);
            fsutil::atomic_write(&out.join(format!("overlay_{}.svg", p.target)), svg.as_bytes())?;
        }
    }
    fsutil::atomic_write(&out.join("fd_pairs.csv"), rows.as_bytes())?;
    let mut ctrl = String::from("lead,n,wins,win_rate,mean_fd,mean_control_fd\n");
    let mut all = (0, 0, 0.0, 0.0);
    for (lead, (n, w, fd, cf)) in &by_lead {
        let nf = *n as f64;
        let _ = writeln!(ctrl, "{lead},{n},{w},{},{},{}", *w as f64 / nf, fd / nf, cf / nf);
        all = (all.0 + n, all.1 + w, all.2 + fd, all.3 + cf);
    }
    let nf = all.0 as f64;
    let _ = writeln!(ctrl, "all,{},{},{},{},{}", all.0, all.1, all.1 as f64 / nf, all.2 / nf, all.3 / nf);
    fsutil::atomic_write(&out.join("control.csv"), ctrl.as_bytes())?;

    let source = cfg.pipeline.reference_lead;
    let mut seen = BTreeSet::new();
    for p in pairs {
        if seen.len() >= sets {
            break;
        }
        if !seen.insert((p.patient.clone(), p.beat)) {
            continue;
        }
        let seg = corpus
            .segment(&p.patient, p.beat, source)
            .ok_or_else(|| Error::InvalidArgument(format!("no lead {source} beat for {} #{}", p.patient, p.beat)))?;
        let set = generate_full_set(&mut models, seg)?;
        let dir = out.join("generated").join(format!("{}_b{}", p.patient, p.beat));
        write_set(&dir, &set, corpus.info.sampling_rate_hz, &p.patient, BeatFormat::Csv)?;
    }
    Ok(())
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Lead files (`<lead>.csv` or `<lead>.ecgs`) directly inside `dir`.
fn lead_files(dir: &Path) -> Result<BTreeMap<LeadId, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !path.is_file() || !(ext == "csv" || ext == "ecgs") {
            continue;
        }
        if let Some(lead) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<LeadId>().ok()) {
            out.insert(lead, path);
        }
    }
    Ok(out)
}

/// Every directory of lead files at `dir`, `dir/*` or `dir/generated/*`.
fn generated_sets(dir: &Path) -> Result<Vec<BTreeMap<LeadId, EcgSignal>>> {
    let mut candidates = vec![dir.to_path_buf()];
    candidates.extend(sorted_subdirs(dir)?);
    let nested = dir.join("generated");
    if nested.is_dir() {
        candidates.extend(sorted_subdirs(&nested)?);
    }
    let mut sets = Vec::new();
    for c in candidates {
        let files = lead_files(&c)?;
        if files.is_empty() {
            continue;
        }
        let id = PatientId(c.file_name().map_or("set".into(), |n| n.to_string_lossy().into_owned()));
        let mut set = BTreeMap::new();
        for (lead, path) in files {
            let sig = if path.extension().is_some_and(|e| e == "csv") {
                read_signal_csv(&path, lead, id.clone())?
            } else {
                read_signal(&path, id.clone())?
            };
            set.insert(lead, sig);
        }
        sets.push(set);
    }
    if sets.is_empty() {
        return Err(Error::InvalidArgument(format!("no lead files found under {}", dir.display())));
    }
    Ok(sets)
}

/// Each patient's beats joined (padding removed) into one signal per lead.
fn corpus_patients(corpus: &Corpus) -> Result<Vec<BTreeMap<LeadId, EcgSignal>>> {
    let mut joined: BTreeMap<(&PatientId, LeadId), Vec<f64>> = BTreeMap::new();
    for s in corpus.segments() {
        joined.entry((&s.patient_id, s.lead)).or_default().extend_from_slice(s.valid());
    }
    let mut patients: BTreeMap<&PatientId, BTreeMap<LeadId, EcgSignal>> = BTreeMap::new();
    for ((id, lead), samples) in joined {
        let sig = EcgSignal::new(lead, samples, corpus.info.sampling_rate_hz, id.clone())?;
        patients.entry(id).or_default().insert(lead, sig);
    }
    Ok(patients.into_values().collect())
}

pub(super) fn correlate(corpus: Option<&Path>, generated: Option<&Path>, out: &Path) -> Result<()> {
    let (patients, title) = match (corpus, generated) {
        (Some(c), _) => (corpus_patients(&Corpus::load(c)?)?, "Lead correlation (recorded)"),
        (None, Some(g)) => (generated_sets(g)?, "Lead correlation (generated)"),
        (None, None) => return Err(Error::InvalidArgument("pass --corpus or --generated".into())),
    };
    let m = pearson_matrix(&patients)?;
    m.write_csv(&out.join("corr_matrix.csv"))?;
    fsutil::atomic_write(&out.join("corr_matrix.svg"), m.heatmap(title).as_bytes())
}
