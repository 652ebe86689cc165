//! Orthogonal Daubechies discrete wavelet transform with half-sample
//! symmetric boundary extension.
//!
//! One analysis step maps `n` samples to `floor((n + L - 1) / 2)`
//! approximation and detail coefficients, where `L` is the filter length
//! (the `L - 1` extra coefficients per step are the boundary overhead). The
//! synthesis step needs the original length back, so decompositions keep the
//! length of every level's input.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wavelet {
    Db2,
    Db4,
    Db8,
}

// Decomposition low-pass taps.
const DB2: [f64; 4] = [
    -0.12940952255126037,
    0.2241438680420134,
    0.8365163037378079,
    0.48296291314453416,
];

const DB4: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

const DB8: [f64; 16] = [
    -0.00011747678412476953,
    0.0006754494064505693,
    -0.00039174037337694705,
    -0.004870352993451574,
    0.008746094047405777,
    0.013981027917398282,
    -0.044088253930794755,
    -0.017369301001807547,
    0.12874742662047847,
    0.0004724845739132828,
    -0.2840155429615469,
    -0.015829105256349306,
    0.5853546836542067,
    0.6756307362972898,
    0.31287159091429995,
    0.05441584224310401,
];

impl Wavelet {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Wavelet::Db2),
            4 => Ok(Wavelet::Db4),
            8 => Ok(Wavelet::Db8),
            _ => Err(Error::InvalidArgument(format!(
                "unsupported Daubechies order {order}; expected 2, 4 or 8"
            ))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Wavelet::Db2 => 2,
            Wavelet::Db4 => 4,
            Wavelet::Db8 => 8,
        }
    }

    pub fn filter_len(self) -> usize {
        2 * self.order()
    }

    pub fn dec_lo(self) -> &'static [f64] {
        match self {
            Wavelet::Db2 => &DB2,
            Wavelet::Db4 => &DB4,
            Wavelet::Db8 => &DB8,
        }
    }

    /// Quadrature mirror of [`dec_lo`](Self::dec_lo):
    /// `g[j] = (-1)^(j+1) h[L-1-j]`.
    pub fn dec_hi(self) -> Vec<f64> {
        let h = self.dec_lo();
        let l = h.len();
        (0..l)
            .map(|j| if j % 2 == 0 { -h[l - 1 - j] } else { h[l - 1 - j] })
            .collect()
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "db{}", self.order())
    }
}

impl FromStr for Wavelet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches("db");
        let order = t
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad wavelet '{s}'")))?;
        Wavelet::from_order(order)
    }
}

/// Half-sample symmetric index: `x[-1] = x[0]`, `x[n] = x[n-1]`.
#[inline]
fn reflect(mut i: isize, n: isize) -> usize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

pub fn coeff_len(n: usize, wavelet: Wavelet) -> usize {
    (n + wavelet.filter_len() - 1) / 2
}

/// One analysis level: `(cA, cD)` with `c[k] = sum_j f[j] x[2k + 1 - j]`.
pub fn dwt_step(x: &[f64], wavelet: Wavelet) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = wavelet.dec_lo();
    let g = wavelet.dec_hi();
    let l = h.len();
    if x.len() < l {
        return Err(Error::TooShort { len: x.len(), min: l });
    }
    let n = x.len() as isize;
    let m = coeff_len(x.len(), wavelet);
    let mut ca = Vec::with_capacity(m);
    let mut cd = Vec::with_capacity(m);
    for k in 0..m {
        let base = 2 * k as isize + 1;
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..l {
            let xi = x[reflect(base - j as isize, n)];
            a += h[j] * xi;
            d += g[j] * xi;
        }
        ca.push(a);
        cd.push(d);
    }
    Ok((ca, cd))
}

/// One synthesis level, the adjoint of [`dwt_step`]:
/// `x[m] = sum_k cA[k] h[2k + 1 - m] + cD[k] g[2k + 1 - m]`, for `m < out_len`.
pub fn idwt_step(ca: &[f64], cd: &[f64], wavelet: Wavelet, out_len: usize) -> Result<Vec<f64>> {
    if ca.len() != cd.len() {
        return Err(Error::Shape(format!(
            "approximation has {} coefficients, detail has {}",
            ca.len(),
            cd.len()
        )));
    }
    if coeff_len(out_len, wavelet) != ca.len() {
        return Err(Error::Shape(format!(
            "{} coefficients cannot reconstruct {out_len} samples with {wavelet}",
            ca.len()
        )));
    }
    let h = wavelet.dec_lo();
    let g = wavelet.dec_hi();
    let l = h.len() as isize;
    let mut out = vec![0.0; out_len];
    for (m, o) in out.iter_mut().enumerate() {
        let m = m as isize;
        // 0 <= 2k + 1 - m <= L - 1
        let k_lo = (m - 1 + 1).div_euclid(2).max(0);
        let k_hi = ((m + l - 2).div_euclid(2)).min(ca.len() as isize - 1);
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            let j = (2 * k + 1 - m) as usize;
            acc += ca[k as usize] * h[j] + cd[k as usize] * g[j];
        }
        *o = acc;
    }
    Ok(out)
}

/// Multi-level decomposition: detail bands `details[0]` (finest, level 1)
/// through `details[n-1]`, plus the coarsest approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub details: Vec<Vec<f64>>,
    pub final_approx: Vec<f64>,
    pub wavelet: Wavelet,
    /// Input length at each level; `input_lens[0]` is the signal length.
    pub input_lens: Vec<usize>,
}

impl WaveletDecomposition {
    pub fn n_filters(&self) -> usize {
        self.details.len()
    }
}

/// Smallest signal length that survives `levels` analysis steps.
pub fn min_len_for(levels: usize, wavelet: Wavelet) -> usize {
    (1usize << levels) * wavelet.filter_len()
}

pub fn decompose(x: &[f64], wavelet: Wavelet, levels: usize) -> Result<WaveletDecomposition> {
    if levels == 0 {
        return Err(Error::InvalidArgument("at least one level required".into()));
    }
    let mut details = Vec::with_capacity(levels);
    let mut input_lens = Vec::with_capacity(levels);
    let mut current = x.to_vec();
    for _ in 0..levels {
        input_lens.push(current.len());
        let (ca, cd) = dwt_step(&current, wavelet)?;
        details.push(cd);
        current = ca;
    }
    Ok(WaveletDecomposition {
        details,
        final_approx: current,
        wavelet,
        input_lens,
    })
}

pub fn reconstruct(dec: &WaveletDecomposition) -> Result<Vec<f64>> {
    let mut current = dec.final_approx.clone();
    for level in (0..dec.details.len()).rev() {
        current = idwt_step(&current, &dec.details[level], dec.wavelet, dec.input_lens[level])?;
    }
    Ok(current)
}
