use std::path::Path;

use super::plot;
use super::FdScore;
use crate::{fsutil, Error, LeadId, Result};

/// Mean and population standard deviation of FD for one target lead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadFd {
    pub lead: LeadId,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    /// In lead order; leads without scores are omitted.
    pub per_lead: Vec<LeadFd>,
    pub overall_mean: f64,
    pub overall_std: f64,
    pub n: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl FdReport {
    /// Groups scores by target lead.
    pub fn from_scores(scores: &[FdScore]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Empty("fd report over zero test beats"));
        }
        let mut per_lead = Vec::new();
        for lead in LeadId::ALL {
            let vals: Vec<f64> = scores.iter().filter(|s| s.target_lead == lead).map(|s| s.value).collect();
            if !vals.is_empty() {
                let (mean, std) = mean_std(&vals);
                per_lead.push(LeadFd { lead, mean, std, n: vals.len() });
            }
        }
        let all: Vec<f64> = scores.iter().map(|s| s.value).collect();
        let (overall_mean, overall_std) = mean_std(&all);
        Ok(Self { per_lead, overall_mean, overall_std, n: all.len() })
    }

    pub fn lead(&self, lead: LeadId) -> Option<&LeadFd> {
        self.per_lead.iter().find(|l| l.lead == lead)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lead,mean_fd,std_fd,n\n");
        for l in &self.per_lead {
            out.push_str(&format!("{},{},{},{}\n", l.lead, l.mean, l.std, l.n));
        }
        out
    }

    pub fn parse_csv(text: &str, origin: &Path) -> Result<Vec<LeadFd>> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| Error::format(origin, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["lead", "mean_fd", "std_fd", "n"] {
            return Err(Error::format(origin, "expected header lead,mean_fd,std_fd,n"));
        }
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::format(origin, e.to_string()))?;
            let bad = |what: &str| Error::format(origin, format!("bad {what} in row {:?}", rec.iter().collect::<Vec<_>>()));
            out.push(LeadFd {
                lead: rec[0].parse().map_err(|_| bad("lead"))?,
                mean: rec[1].parse().map_err(|_| bad("mean_fd"))?,
                std: rec[2].parse().map_err(|_| bad("std_fd"))?,
                n: rec[3].parse().map_err(|_| bad("n"))?,
            });
        }
        Ok(out)
    }

    pub fn bar_chart(&self, title: &str) -> String {
        let bars: Vec<plot::Bar> = self
            .per_lead
            .iter()
            .map(|l| plot::Bar { label: l.lead.to_string(), value: l.mean, error: Some(l.std) })
            .collect();
        plot::bar_chart(title, "mean FD", &bars)
    }

    /// Writes `fd_by_lead.csv`, `fd_overall.csv` and `fd_by_lead.svg`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fsutil::atomic_write(&dir.join("fd_by_lead.csv"), self.to_csv().as_bytes())?;
        let overall = format!("mean_fd,std_fd,n\n{},{},{}\n", self.overall_mean, self.overall_std, self.n);
        fsutil::atomic_write(&dir.join("fd_overall.csv"), overall.as_bytes())?;
        fsutil::atomic_write(&dir.join("fd_by_lead.svg"), self.bar_chart("Test FD by lead").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(lead: LeadId, value: f64) -> FdScore {
        FdScore { value, source_lead: LeadId::II, target_lead: lead, n_points: 10 }
    }

    #[test]
    fn groups_by_target() {
        let r = FdReport::from_scores(&[score(LeadId::V1, 1.0), score(LeadId::V1, 3.0), score(LeadId::I, 2.0)]).unwrap();
        assert_eq!(r.per_lead.len(), 2);
        assert_eq!(r.per_lead[0], LeadFd { lead: LeadId::I, mean: 2.0, std: 0.0, n: 1 });
        assert_eq!(r.lead(LeadId::V1).unwrap().std, 1.0);
        assert_eq!(r.overall_mean, 2.0);
        assert!(FdReport::from_scores(&[]).is_err());
    }

    #[test]
    fn oracle_generator_scores_zero() {
        let scores: Vec<FdScore> = LeadId::ALL.into_iter().map(|l| score(l, 0.0)).collect();
        let r = FdReport::from_scores(&scores).unwrap();
        assert!(r.per_lead.iter().all(|l| l.mean == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let r = FdReport::from_scores(&[score(LeadId::AVR, 0.1), score(LeadId::V6, 0.3)]).unwrap();
        let back = FdReport::parse_csv(&r.to_csv(), Path::new("x")).unwrap();
        assert_eq!(back, r.per_lead);
        assert!(r.to_csv().contains("\naVR,0.1,0,1\n"));
        assert!(FdReport::parse_csv("a,b\n", Path::new("x")).is_err());
    }
}
