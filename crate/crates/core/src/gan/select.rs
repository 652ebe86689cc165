use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::{fsutil, Error, LeadId, Result};

/// Which generator a row refers to: the shared baseline model or one target
/// lead's model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKey {
    All,
    Lead(LeadId),
}

impl fmt::Display for ModelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKey::All => f.write_str("all"),
            ModelKey::Lead(l) => l.fmt(f),
        }
    }
}

impl FromStr for ModelKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            Ok(ModelKey::All)
        } else {
            s.parse().map(ModelKey::Lead)
        }
    }
}

/// One validation measurement; epochs count from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub model: ModelKey,
    pub epoch: usize,
    pub val_mean_fd: f64,
}

/// 1-based index of the smallest value, earliest on ties. NaN never wins.
pub fn select_epoch(fds: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in fds.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    pub epoch: usize,
    pub mean_fd: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochSelection {
    pub choices: BTreeMap<ModelKey, Choice>,
}

impl EpochSelection {
    pub fn from_trace(rows: &[TraceRow]) -> Result<Self> {
        let mut traces: BTreeMap<ModelKey, Vec<(usize, f64)>> = BTreeMap::new();
        for r in rows {
            traces.entry(r.model).or_default().push((r.epoch, r.val_mean_fd));
        }
        let mut choices = BTreeMap::new();
        for (key, mut t) in traces {
            t.sort_by_key(|(e, _)| *e);
            let fds: Vec<f64> = t.iter().map(|(_, v)| *v).collect();
            let k = select_epoch(&fds).ok_or_else(|| Error::InvalidArgument(format!("no finite FD for {key}")))?;
            choices.insert(key, Choice { epoch: t[k - 1].0, mean_fd: fds[k - 1] });
        }
        if choices.is_empty() {
            return Err(Error::Empty("validation trace"));
        }
        Ok(Self { choices })
    }

    pub fn epoch(&self, key: ModelKey) -> Option<usize> {
        self.choices.get(&key).map(|c| c.epoch)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lead,epoch,mean_fd\n");
        for (k, c) in &self.choices {
            out.push_str(&format!("{k},{},{}\n", c.epoch, c.mean_fd));
        }
        out
    }

    /// Reads a `lead,epoch,mean_fd` table.
    pub fn parse_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::format(origin, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["lead", "epoch", "mean_fd"] {
            return Err(Error::format(origin, "expected header lead,epoch,mean_fd"));
        }
        let mut choices = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::format(origin, e.to_string()))?;
            let bad = || Error::format(origin, format!("bad row {:?}", rec.iter().collect::<Vec<_>>()));
            let key: ModelKey = rec[0].parse().map_err(|_| bad())?;
            let epoch: usize = rec[1].parse().map_err(|_| bad())?;
            let mean_fd: f64 = rec[2].parse().map_err(|_| bad())?;
            if epoch == 0 || choices.insert(key, Choice { epoch, mean_fd }).is_some() {
                return Err(bad());
            }
        }
        Ok(Self { choices })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_csv(&fsutil::read_to_string(path)?, path)
    }
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("lead,epoch,val_mean_fd\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.model, r.epoch, r.val_mean_fd));
    }
    out
}

pub fn parse_trace_csv(text: &str, origin: &Path) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(origin, e.to_string()))?;
        let bad = || Error::format(origin, format!("bad trace row {:?}", rec.iter().collect::<Vec<_>>()));
        if rec.len() != 3 {
            return Err(bad());
        }
        out.push(TraceRow {
            model: rec[0].parse().map_err(|_| bad())?,
            epoch: rec[1].parse().map_err(|_| bad())?,
            val_mean_fd: rec[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}
