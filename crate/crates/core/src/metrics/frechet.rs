use crate::{Error, LeadId, Result};

/// Ground distance between aligned samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PointMetric {
    /// `|s_i - q_j|`.
    #[default]
    Amplitude,
    /// Euclidean on `(i / (n - 1), s_i)`, which makes time part of the point.
    TimeAmplitude,
}

fn points(s: &[f64], metric: PointMetric) -> Vec<(f64, f64)> {
    let span = (s.len().max(2) - 1) as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| match metric {
            PointMetric::Amplitude => (0.0, v),
            PointMetric::TimeAmplitude => (i as f64 / span, v),
        })
        .collect()
}

#[inline]
fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn check(s: &[f64], q: &[f64]) -> Result<()> {
    if s.is_empty() || q.is_empty() {
        return Err(Error::Empty("frechet distance input"));
    }
    if s.iter().chain(q).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("frechet distance of non-finite samples".into()));
    }
    Ok(())
}

/// Discrete Fréchet distance: the minimum over monotone couplings of the
/// largest coupled point distance. `O(len(s) * len(q))` time, `O(len(q))`
/// memory.
pub fn frechet_distance(s: &[f64], q: &[f64], metric: PointMetric) -> Result<f64> {
    check(s, q)?;
    let (a, b) = (points(s, metric), points(q, metric));
    let mut prev = vec![0.0; b.len()];
    let mut cur = vec![0.0; b.len()];
    for (i, &pa) in a.iter().enumerate() {
        for (j, &pb) in b.iter().enumerate() {
            let d = dist(pa, pb);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => d.max(cur[j - 1]),
                (_, 0) => d.max(prev[0]),
                _ => d.max(prev[j].min(prev[j - 1]).min(cur[j - 1])),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[b.len() - 1])
}

/// Reference implementation that walks every monotone coupling explicitly.
/// Branches whose running maximum already reaches the best complete coupling
/// are cut, which cannot change the minimum. Exponential; meant for short
/// inputs.
pub fn frechet_brute_force(s: &[f64], q: &[f64], metric: PointMetric) -> Result<f64> {
    check(s, q)?;
    let (a, b) = (points(s, metric), points(q, metric));
    let mut best = f64::INFINITY;
    walk(&a, &b, 0, 0, dist(a[0], b[0]), &mut best);
    Ok(best)
}

fn walk(a: &[(f64, f64)], b: &[(f64, f64)], i: usize, j: usize, worst: f64, best: &mut f64) {
    if worst >= *best {
        return;
    }
    if i + 1 == a.len() && j + 1 == b.len() {
        *best = worst;
        return;
    }
    for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
        let (ni, nj) = (i + di, j + dj);
        if ni < a.len() && nj < b.len() {
            walk(a, b, ni, nj, worst.max(dist(a[ni], b[nj])), best);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScore {
    pub value: f64,
    pub source_lead: LeadId,
    pub target_lead: LeadId,
    pub n_points: usize,
}

pub fn fd_score(
    generated: &[f64],
    truth: &[f64],
    source_lead: LeadId,
    target_lead: LeadId,
    metric: PointMetric,
) -> Result<FdScore> {
    Ok(FdScore {
        value: frechet_distance(generated, truth, metric)?,
        source_lead,
        target_lead,
        n_points: truth.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    const BOTH: [PointMetric; 2] = [PointMetric::Amplitude, PointMetric::TimeAmplitude];

    #[test]
    fn hand_examples() {
        let fd = |s: &[f64], q: &[f64]| frechet_distance(s, q, PointMetric::Amplitude).unwrap();
        assert_eq!(fd(&[0.3, 0.1], &[0.3, 0.1]), 0.0);
        assert_eq!(fd(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
        assert_eq!(fd(&[0.0, 1.0, 2.0], &[0.0, 2.0]), 1.0);
        assert_eq!(fd(&[5.0], &[1.0, 2.0, 9.0]), 4.0);
        let two = frechet_distance(&[0.0, 0.0], &[1.0, 1.0], PointMetric::TimeAmplitude).unwrap();
        assert_eq!(two, 1.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(frechet_distance(&[], &[1.0], PointMetric::Amplitude).is_err());
        assert!(frechet_brute_force(&[1.0], &[], PointMetric::Amplitude).is_err());
        assert!(frechet_distance(&[f64::NAN], &[1.0], PointMetric::Amplitude).is_err());
    }

    #[test]
    fn dp_equals_brute_force_on_random_short_inputs() {
        let mut r = rng::seeded(21, 0);
        for _ in 0..500 {
            let n = 1 + rng::below(&mut r, 7) as usize;
            let m = 1 + rng::below(&mut r, 7) as usize;
            let s: Vec<f64> = (0..n).map(|_| rng::unit(&mut r)).collect();
            let q: Vec<f64> = (0..m).map(|_| rng::unit(&mut r)).collect();
            for metric in BOTH {
                assert_eq!(
                    frechet_distance(&s, &q, metric).unwrap(),
                    frechet_brute_force(&s, &q, metric).unwrap()
                );
            }
        }
    }

    #[test]
    fn amplitude_mode_ignores_repeats() {
        // time-free ground distance cannot see run lengths
        let fd = frechet_distance(&[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0], PointMetric::Amplitude).unwrap();
        assert_eq!(fd, 0.0);
        let fd2 = frechet_distance(&[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0], PointMetric::TimeAmplitude).unwrap();
        assert!(fd2 > 0.0);
    }

    #[test]
    fn perturbation_bound() {
        let mut r = rng::seeded(4, 4);
        for _ in 0..200 {
            let s: Vec<f64> = (0..20).map(|_| rng::unit(&mut r)).collect();
            let q: Vec<f64> = (0..20).map(|_| rng::unit(&mut r)).collect();
            let delta: Vec<f64> = (0..20).map(|_| rng::uniform(&mut r, -1.0, 1.0)).collect();
            let eps = 1e-3;
            let max_d = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let qp: Vec<f64> = q.iter().zip(&delta).map(|(a, d)| a + eps * d).collect();
            for metric in BOTH {
                let base = frechet_distance(&s, &q, metric).unwrap();
                let moved = frechet_distance(&s, &qp, metric).unwrap();
                assert!(moved <= base + eps * max_d + 1e-12);
            }
        }
    }

    #[test]
    fn score_carries_leads() {
        let sc = fd_score(&[0.0, 1.0], &[0.5, 1.0], LeadId::II, LeadId::V1, PointMetric::Amplitude).unwrap();
        assert_eq!(sc.value, 0.5);
        assert_eq!((sc.source_lead, sc.target_lead, sc.n_points), (LeadId::II, LeadId::V1, 2));
    }
}
