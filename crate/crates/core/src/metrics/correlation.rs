use std::collections::BTreeMap;
use std::path::Path;

use crate::{fsutil, EcgSignal, Error, LeadId, Result};

/// How [`cross_correlation`] treats inputs of different lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LengthPolicy {
    #[default]
    Exact,
    /// The shorter input is zero-padded at the end.
    ZeroPad,
}

/// Raw inner product `sum_j q_j s_j`.
pub fn cross_correlation(q: &[f64], s: &[f64], policy: LengthPolicy) -> Result<f64> {
    if q.len() != s.len() && policy == LengthPolicy::Exact {
        return Err(Error::Shape(format!(
            "cross-correlation of lengths {} and {} (zero-padding not requested)",
            q.len(),
            s.len()
        )));
    }
    // padding with zeros contributes nothing to the sum
    Ok(q.iter().zip(s).map(|(a, b)| a * b).sum())
}

/// `sum_{j >= i} q_j q_{j-i}`; shift 0 is the signal energy.
pub fn auto_correlation(q: &[f64], shift: usize) -> Result<f64> {
    if shift >= q.len() {
        return Err(Error::InvalidArgument(format!(
            "shift {shift} outside [0, {})",
            q.len()
        )));
    }
    Ok(q[shift..].iter().zip(q).map(|(a, b)| a * b).sum())
}

/// Auto-correlation at shifts `0..=max_shift` (clipped to the signal length).
pub fn auto_correlation_profile(q: &[f64], max_shift: usize) -> Vec<f64> {
    (0..=max_shift.min(q.len().saturating_sub(1)))
        .filter_map(|i| auto_correlation(q, i).ok())
        .collect()
}

/// Pearson's r; `None` when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("pearson of lengths {} and {}", a.len(), b.len())));
    }
    let constant = |x: &[f64]| x.iter().all(|&v| v == x[0]);
    if a.len() < 2 || constant(a) || constant(b) {
        return Ok(None);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some(sab / (saa.sqrt() * sbb.sqrt())))
}

/// Mean Pearson coefficient for every ordered lead pair, averaged over the
/// patients where it is defined. The diagonal is always missing.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: [[Option<f64>; 12]; 12],
    /// Patients contributing to each entry.
    pub counts: [[usize; 12]; 12],
}

impl CorrelationMatrix {
    pub fn get(&self, a: LeadId, b: LeadId) -> Option<f64> {
        self.values[a.index()][b.index()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lead");
        for l in LeadId::ALL {
            out.push(',');
            out.push_str(l.name());
        }
        out.push('\n');
        for a in LeadId::ALL {
            out.push_str(a.name());
            for b in LeadId::ALL {
                match self.get(a, b) {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fsutil::atomic_write(path, self.to_csv().as_bytes())
    }

    /// Reads the values written by [`CorrelationMatrix::to_csv`]; counts are
    /// not stored there and come back as 1 for every defined entry.
    pub fn parse_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
        let expected: Vec<&str> = std::iter::once("lead").chain(LeadId::ALL.iter().map(|l| l.name())).collect();
        if header != expected {
            return Err(Error::format(origin, "header must be lead followed by the twelve leads"));
        }
        let mut m = Self { values: [[None; 12]; 12], counts: [[0; 12]; 12] };
        let mut rows = 0;
        for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if i >= 12 || cells.len() != 13 || cells[0] != LeadId::ALL[i].name() {
                return Err(Error::format(origin, format!("bad row {}", i + 2)));
            }
            for (j, c) in cells[1..].iter().enumerate() {
                if *c != "NA" {
                    let v: f64 = c.parse().map_err(|_| Error::format(origin, format!("bad value {c:?}")))?;
                    m.values[i][j] = Some(v);
                    m.counts[i][j] = 1;
                }
            }
            rows += 1;
        }
        if rows != 12 {
            return Err(Error::format(origin, format!("expected 12 rows, found {rows}")));
        }
        Ok(m)
    }

    pub fn heatmap(&self, title: &str) -> String {
        let labels: Vec<&str> = LeadId::ALL.iter().map(|l| l.name()).collect();
        let rows: Vec<Vec<Option<f64>>> = self.values.iter().map(|r| r.to_vec()).collect();
        super::plot::heatmap(title, &labels, &rows)
    }
}

pub fn pearson_matrix(patients: &[BTreeMap<LeadId, EcgSignal>]) -> Result<CorrelationMatrix> {
    if patients.is_empty() {
        return Err(Error::Empty("pearson matrix over zero patients"));
    }
    let mut sums = [[0.0; 12]; 12];
    let mut counts = [[0usize; 12]; 12];
    for (k, leads) in patients.iter().enumerate() {
        let missing: Vec<LeadId> = LeadId::ALL.into_iter().filter(|l| !leads.contains_key(l)).collect();
        if !missing.is_empty() {
            let who = leads.values().next().map_or(format!("#{k}"), |s| s.patient_id.to_string());
            return Err(Error::InvalidArgument(format!("patient {who} lacks leads {missing:?}")));
        }
        for a in LeadId::ALL {
            for b in LeadId::ALL {
                if a == b {
                    continue;
                }
                if let Some(r) = pearson(&leads[&a].samples, &leads[&b].samples)? {
                    sums[a.index()][b.index()] += r;
                    counts[a.index()][b.index()] += 1;
                }
            }
        }
    }
    let mut values = [[None; 12]; 12];
    for i in 0..12 {
        for j in 0..12 {
            if counts[i][j] > 0 {
                values[i][j] = Some(sums[i][j] / counts[i][j] as f64);
            }
        }
    }
    Ok(CorrelationMatrix { values, counts })
}
