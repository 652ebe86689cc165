//! `report`: gathers the CSV and SVG artifacts of one or more runs into a
//! single directory with combined tables and a markdown summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::gan::{parse_trace_csv, EpochSelection, TraceRow};
use crate::metrics::plot::{self, Series};
use crate::metrics::{CorrelationMatrix, FdReport};
use crate::{fsutil, Error, LeadId, Result};

/// Published per-lead epoch choices and test FDs, shown next to local runs.
pub const REFERENCE_TABLE: &str = include_str!("../../fixtures/reference_lead_epochs.csv");

const ARTIFACTS: [&str; 4] = ["trace.csv", "selection.csv", "fd_by_lead.csv", "corr_matrix.csv"];

pub fn trace_chart(title: &str, trace: &[TraceRow]) -> String {
    let mut keys: Vec<_> = trace.iter().map(|r| r.model).collect();
    keys.dedup();
    keys.sort();
    keys.dedup();
    let series: Vec<Series> = keys
        .iter()
        .map(|k| {
            let pts = trace.iter().filter(|r| r.model == *k).map(|r| (r.epoch as f64, r.val_mean_fd)).collect();
            Series::new(k.to_string(), pts)
        })
        .collect();
    plot::line_chart(title, "epoch", "mean validation FD", &series)
}

fn is_run(dir: &Path) -> bool {
    ARTIFACTS.iter().any(|a| dir.join(a).is_file())
}

fn find_runs(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut runs = Vec::new();
    if is_run(root) {
        let name = root.file_name().map_or("run".into(), |n| n.to_string_lossy().into_owned());
        runs.push((name, root.to_path_buf()));
    }
    let mut subdirs = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.is_dir() && is_run(&path) {
            subdirs.push(path);
        }
    }
    subdirs.sort();
    for p in subdirs {
        let name = p.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned());
        runs.push((name, p));
    }
    if runs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no run artifacts ({}) under {}",
            ARTIFACTS.join(", "),
            root.display()
        )));
    }
    Ok(runs)
}

fn copy_svgs(dir: &Path, name: &str, out: &Path) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "svg") {
            files.push(path);
        }
    }
    files.sort();
    let mut copied = Vec::new();
    for f in files {
        let target = format!("{name}_{}", f.file_name().unwrap_or_default().to_string_lossy());
        fsutil::atomic_write(&out.join(&target), &fsutil::read(&f)?)?;
        copied.push(target);
    }
    Ok(copied)
}

pub fn report(runs_dir: &Path, out: &Path) -> Result<()> {
    let runs = find_runs(runs_dir)?;
    let mut summary = String::from("# ecgforge report\n");
    let mut selection_csv = String::from("run,lead,epoch,mean_fd\n");
    let mut test_csv = String::from("run,lead,mean_fd,std_fd,n\n");
    let mut corr_csv = String::from("run,lead,V1,V2,V3\n");
    for (name, dir) in &runs {
        let _ = writeln!(summary, "\n## {name}\n");
        let trace_path = dir.join("trace.csv");
        if trace_path.is_file() {
            let trace = parse_trace_csv(&fsutil::read_to_string(&trace_path)?, &trace_path)?;
            let svg = trace_chart(&format!("{name}: validation FD per epoch"), &trace);
            fsutil::atomic_write(&out.join(format!("{name}_val_fd_trace.svg")), svg.as_bytes())?;
            let _ = writeln!(summary, "Validation trace: `{name}_val_fd_trace.svg` ({} rows)\n", trace.len());
        }
        let sel_path = dir.join("selection.csv");
        if sel_path.is_file() {
            let sel = EpochSelection::load(&sel_path)?;
            summary.push_str("| model | selected epoch | validation FD |\n|---|---|---|\n");
            for (key, c) in &sel.choices {
                let _ = writeln!(selection_csv, "{name},{key},{},{}", c.epoch, c.mean_fd);
                let _ = writeln!(summary, "| {key} | {} | {:.4} |", c.epoch, c.mean_fd);
            }
            summary.push('\n');
        }
        let fd_path = dir.join("fd_by_lead.csv");
        if fd_path.is_file() {
            let leads = FdReport::parse_csv(&fsutil::read_to_string(&fd_path)?, &fd_path)?;
            summary.push_str("| lead | test FD mean | std | n |\n|---|---|---|---|\n");
            for l in &leads {
                let _ = writeln!(test_csv, "{name},{},{},{},{}", l.lead, l.mean, l.std, l.n);
                let _ = writeln!(summary, "| {} | {:.4} | {:.4} | {} |", l.lead, l.mean, l.std, l.n);
            }
            summary.push('\n');
            let control = dir.join("control.csv");
            if control.is_file() {
                let text = fsutil::read_to_string(&control)?;
                if let Some(all) = text.lines().find(|l| l.starts_with("all,")) {
                    let cells: Vec<&str> = all.split(',').collect();
                    if cells.len() == 6 {
                        let _ = writeln!(
                            summary,
                            "Beats closer to the true target than the permuted-patient control: {} of {} (rate {}).\n",
                            cells[2], cells[1], cells[3]
                        );
                    }
                }
            }
        }
        let corr_path = dir.join("corr_matrix.csv");
        if corr_path.is_file() {
            let m = CorrelationMatrix::parse_csv(&fsutil::read_to_string(&corr_path)?, &corr_path)?;
            let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |r| r.to_string());
            summary.push_str("| lead | V1 | V2 | V3 |\n|---|---|---|---|\n");
            for lead in LeadId::ALL {
                let cells = [LeadId::V1, LeadId::V2, LeadId::V3].map(|p| m.get(p, lead));
                let _ = writeln!(corr_csv, "{name},{lead},{},{},{}", fmt(cells[0]), fmt(cells[1]), fmt(cells[2]));
                let short = cells.map(|c| c.map_or("NA".to_string(), |r| format!("{r:.3}")));
                let _ = writeln!(summary, "| {lead} | {} | {} | {} |", short[0], short[1], short[2]);
            }
            summary.push('\n');
        }
        let figures = copy_svgs(dir, name, out)?;
        if !figures.is_empty() {
            let _ = writeln!(summary, "Figures: {}\n", figures.iter().map(|f| format!("`{f}`")).collect::<Vec<_>>().join(", "));
        }
    }
    summary.push_str("\n## Reference table\n\nPer-lead selected epoch and test FD reported for the original clinical dataset, for comparison only (`reference.csv`).\n\n");
    summary.push_str("| lead | epoch | mean FD |\n|---|---|---|\n");
    for line in REFERENCE_TABLE.lines().skip(1) {
        let c: Vec<&str> = line.split(',').collect();
        if c.len() == 3 {
            let _ = writeln!(summary, "| {} | {} | {} |", c[0], c[1], c[2]);
        }
    }
    fsutil::atomic_write(&out.join("selection.csv"), selection_csv.as_bytes())?;
    fsutil::atomic_write(&out.join("test_fd.csv"), test_csv.as_bytes())?;
    fsutil::atomic_write(&out.join("corr_precordial.csv"), corr_csv.as_bytes())?;
    fsutil::atomic_write(&out.join("reference.csv"), REFERENCE_TABLE.as_bytes())?;
    fsutil::atomic_write(&out.join("summary.md"), summary.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gan::ModelKey;

    #[test]
    fn reference_table_parses_as_selection() {
        let sel = EpochSelection::parse_csv(REFERENCE_TABLE, Path::new("reference")).unwrap();
        assert_eq!(sel.choices.len(), 12);
        assert_eq!(sel.epoch(ModelKey::Lead(LeadId::V3)), Some(8));
    }

    #[test]
    fn empty_runs_dir_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(matches!(report(dir.path(), out.path()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn trace_chart_has_one_series_per_model() {
        let rows: Vec<TraceRow> = [LeadId::I, LeadId::V2]
            .into_iter()
            .flat_map(|l| (1..=3).map(move |e| TraceRow { model: ModelKey::Lead(l), epoch: e, val_mean_fd: e as f64 }))
            .collect();
        let svg = trace_chart("t", &rows);
        assert_eq!(svg.matches("<path").count(), 2);
    }
}
