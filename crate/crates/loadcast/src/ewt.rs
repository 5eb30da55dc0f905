//! Empirical wavelet transform: data-driven spectrum segmentation plus a
//! Meyer-style band-pass filter bank applied in the Fourier domain.
//!
//! The filter family is a tight frame: squared magnitudes sum to one at every
//! frequency, so analysis and synthesis both use the real filters directly
//! and reconstruction is exact to rounding error.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Transition-shaping polynomial `x^4 (35 - 84x + 70x^2 - 20x^3)`, clamped to
/// `[0, 1]` outside its domain. Satisfies `beta(x) + beta(1 - x) = 1`.
pub fn beta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
    }
}

/// Segmentation of the half spectrum `(0, pi)` into bands: `num_bands - 1`
/// strictly increasing angular frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwtBoundaries {
    omegas: Vec<f64>,
    uniform_fallback: bool,
}

impl EwtBoundaries {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        for pair in omegas.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Config(format!(
                    "boundaries must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if omegas.iter().any(|&w| w <= 0.0 || w >= PI) {
            return Err(Error::Config("boundaries must lie strictly inside (0, pi)".into()));
        }
        Ok(Self { omegas, uniform_fallback: false })
    }

    /// Evenly spaced boundaries, used when boundary detection cannot find
    /// enough spectral maxima.
    pub fn uniform(num_components: usize) -> Self {
        let omegas = (1..num_components).map(|i| i as f64 * PI / num_components as f64).collect();
        Self { omegas, uniform_fallback: true }
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Number of sub-bands this segmentation produces.
    pub fn num_bands(&self) -> usize {
        self.omegas.len() + 1
    }

    /// True when the boundaries came from the uniform fallback rather than
    /// detected spectral maxima.
    pub fn uniform_fallback(&self) -> bool {
        self.uniform_fallback
    }

    /// Largest feasible transition half-width: `min_n (w_{n+1} - w_n) /
    /// (w_{n+1} + w_n)` with `pi` appended as the final boundary.
    pub fn max_feasible_gamma(&self) -> f64 {
        let mut gamma = 1.0f64;
        let mut prev = None;
        for &w in self.omegas.iter().chain(std::iter::once(&PI)) {
            if let Some(p) = prev {
                gamma = gamma.min((w - p) / (w + p));
            }
            prev = Some(w);
        }
        gamma
    }
}

/// Detects band boundaries from the magnitude spectrum of `window`: the
/// `num_components` largest local maxima over `(0, pi)` are retained and each
/// boundary is the midpoint between consecutive maxima (ties in magnitude
/// break toward lower frequency). When fewer maxima exist the segmentation
/// degrades to uniform and the result is flagged.
pub fn detect_boundaries(window: &[f64], num_components: usize) -> Result<EwtBoundaries> {
    if num_components == 0 {
        return Err(Error::Config("num_components must be at least 1".into()));
    }
    if window.len() < 2 * num_components {
        return Err(Error::Sizing(format!(
            "window of length {} cannot support {} components",
            window.len(),
            num_components
        )));
    }
    if let Some(i) = window.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite value at index {i}")));
    }
    if num_components == 1 {
        return EwtBoundaries::new(vec![]);
    }

    let n = window.len();
    let spectrum = fft_forward(window);
    // magnitudes on bins 0..=n/2; interior bins carry omega in (0, pi)
    let half = n / 2;
    let mags: Vec<f64> = (0..=half).map(|j| spectrum[j].norm()).collect();

    // interior bins; for odd n the last bin below pi mirrors itself
    let last = if n.is_multiple_of(2) { half.saturating_sub(1) } else { half };
    let mut peaks: Vec<usize> = Vec::new();
    for j in 1..=last {
        let left = mags[j - 1];
        let right = if j < half { mags[j + 1] } else { mags[j] };
        // first sample of a plateau counts as the maximum
        if mags[j] > left && mags[j] >= right {
            peaks.push(j);
        }
    }
    if peaks.len() < num_components {
        return Ok(EwtBoundaries::uniform(num_components));
    }
    peaks.sort_by(|&a, &b| {
        mags[b].partial_cmp(&mags[a]).expect("finite magnitudes").then(a.cmp(&b))
    });
    let mut retained: Vec<usize> = peaks[..num_components].to_vec();
    retained.sort_unstable();

    let omegas = retained
        .windows(2)
        .map(|pair| PI * (pair[0] + pair[1]) as f64 / n as f64)
        .collect();
    EwtBoundaries::new(omegas)
}

/// The sampled scaling + wavelet filters for one segmentation, together with
/// the transition parameter and the grid they were sampled on. Immutable and
/// cheap to share; `decompose`/`reconstruct` are pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EwtFilterBank {
    boundaries: EwtBoundaries,
    gamma: f64,
    grid_size: usize,
    scaling_filter: Vec<f64>,
    wavelet_filters: Vec<Vec<f64>>,
}

impl EwtFilterBank {
    /// Builds the bank. `gamma = None` picks half the feasible maximum, which
    /// is always strictly inside the constraint.
    pub fn new(boundaries: EwtBoundaries, gamma: Option<f64>, grid_size: usize) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::Config("grid_size must be at least 2".into()));
        }
        let max_gamma = boundaries.max_feasible_gamma();
        let gamma = match gamma {
            None => 0.5 * max_gamma,
            Some(g) => {
                if g <= 0.0 || g >= 1.0 {
                    return Err(Error::Config(format!("gamma must lie in (0, 1), got {g}")));
                }
                if g > max_gamma {
                    return Err(Error::Config(format!(
                        "gamma {g} exceeds the feasible bound {max_gamma} for these boundaries"
                    )));
                }
                g
            }
        };

        let mut bank = Self {
            boundaries,
            gamma,
            grid_size,
            scaling_filter: Vec::new(),
            wavelet_filters: Vec::new(),
        };
        let omegas: Vec<f64> =
            (0..grid_size).map(|g| PI * g as f64 / (grid_size - 1) as f64).collect();
        bank.scaling_filter = omegas.iter().map(|&w| bank.filter_value(0, w)).collect();
        bank.wavelet_filters = (1..bank.num_filters())
            .map(|idx| omegas.iter().map(|&w| bank.filter_value(idx, w)).collect())
            .collect();
        Ok(bank)
    }

    pub fn boundaries(&self) -> &EwtBoundaries {
        &self.boundaries
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Scaling filter plus one wavelet filter per remaining band.
    pub fn num_filters(&self) -> usize {
        self.boundaries.num_bands()
    }

    /// Sampled scaling filter over the uniform `[0, pi]` grid.
    pub fn scaling_filter(&self) -> &[f64] {
        &self.scaling_filter
    }

    /// Sampled wavelet filters, ascending in frequency.
    pub fn wavelet_filters(&self) -> &[Vec<f64>] {
        &self.wavelet_filters
    }

    /// Evaluates filter `idx` (0 = scaling) at angular frequency `omega`,
    /// taken modulo the spectrum's mirror symmetry.
    pub fn filter_value(&self, idx: usize, omega: f64) -> f64 {
        let w = omega.abs();
        let bounds = self.boundaries.omegas();
        let g = self.gamma;
        if bounds.is_empty() {
            // single-band bank passes everything
            return if idx == 0 { 1.0 } else { 0.0 };
        }
        if idx == 0 {
            let w1 = bounds[0];
            return if w <= (1.0 - g) * w1 {
                1.0
            } else if w <= (1.0 + g) * w1 {
                (0.5 * PI * beta((w - (1.0 - g) * w1) / (2.0 * g * w1))).cos()
            } else {
                0.0
            };
        }
        let band = idx - 1;
        let low = bounds[band];
        let high = bounds.get(band + 1).copied();
        if w < (1.0 - g) * low {
            0.0
        } else if w <= (1.0 + g) * low {
            (0.5 * PI * beta((w - (1.0 - g) * low) / (2.0 * g * low))).sin()
        } else {
            match high {
                // highest band stays flat up to pi
                None => 1.0,
                Some(h) => {
                    if w <= (1.0 - g) * h {
                        1.0
                    } else if w <= (1.0 + g) * h {
                        (0.5 * PI * beta((w - (1.0 - g) * h) / (2.0 * g * h))).cos()
                    } else {
                        0.0
                    }
                }
            }
        }
    }

    /// Largest deviation of `sum of squared filters` from 1 over the sampled
    /// grid. The tight-frame property keeps this at rounding error.
    pub fn partition_of_unity_error(&self) -> f64 {
        (0..self.grid_size)
            .map(|gidx| {
                let mut total = self.scaling_filter[gidx] * self.scaling_filter[gidx];
                for wf in &self.wavelet_filters {
                    total += wf[gidx] * wf[gidx];
                }
                (total - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Splits `window` into one sub-series per filter by pointwise spectral
    /// multiplication; each sub-series has the window's length. Components
    /// are real because the filters are even in frequency; the imaginary
    /// residual is checked against 1e-10 and discarded.
    pub fn decompose(&self, window: &[f64]) -> Result<EwtComponents> {
        if window.len() < 2 {
            return Err(Error::Sizing("decomposition window needs at least 2 samples".into()));
        }
        if let Some(i) = window.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at index {i}")));
        }
        let n = window.len();
        let spectrum = fft_forward(window);
        let scale = 1.0 + window.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let mut sub_series = Vec::with_capacity(self.num_filters());
        for idx in 0..self.num_filters() {
            let filtered: Vec<Complex<f64>> = spectrum
                .iter()
                .enumerate()
                .map(|(j, &c)| c * self.filter_value(idx, bin_omega(j, n)))
                .collect();
            let time = fft_inverse(&filtered);
            let worst_imag = time.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
            if worst_imag > 1e-10 * scale {
                return Err(Error::Numerical(format!(
                    "imaginary residual {worst_imag:.3e} after filtering band {idx}"
                )));
            }
            sub_series.push(time.iter().map(|c| c.re).collect());
        }
        Ok(EwtComponents { sub_series })
    }

    /// Synthesizes the original window from components produced by this bank:
    /// each component is filtered once more in frequency and the results are
    /// summed, which inverts [`EwtFilterBank::decompose`] exactly because the
    /// squared filters partition unity.
    pub fn reconstruct(&self, components: &EwtComponents) -> Result<Vec<f64>> {
        if components.sub_series.len() != self.num_filters() {
            return Err(Error::Shape(format!(
                "{} components for a bank of {} filters",
                components.sub_series.len(),
                self.num_filters()
            )));
        }
        let n = components.sub_series[0].len();
        if n < 2 {
            return Err(Error::Sizing("components need at least 2 samples".into()));
        }
        if components.sub_series.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("components have mismatched lengths".into()));
        }

        let mut acc = vec![Complex::new(0.0, 0.0); n];
        for (idx, comp) in components.sub_series.iter().enumerate() {
            let spectrum = fft_forward(comp);
            for (j, slot) in acc.iter_mut().enumerate() {
                *slot += spectrum[j] * self.filter_value(idx, bin_omega(j, n));
            }
        }
        let time = fft_inverse(&acc);
        Ok(time.iter().map(|c| c.re).collect())
    }

    /// Writes the sampled grid as CSV (`omega`, scaling filter, each wavelet
    /// filter) for offline plotting.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["omega".to_string(), "scaling".to_string()];
        for i in 0..self.wavelet_filters.len() {
            header.push(format!("wavelet{i}"));
        }
        w.write_record(&header)?;
        for gidx in 0..self.grid_size {
            let omega = PI * gidx as f64 / (self.grid_size - 1) as f64;
            let mut record = vec![omega.to_string(), self.scaling_filter[gidx].to_string()];
            for wf in &self.wavelet_filters {
                record.push(wf[gidx].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The sub-series produced by one decomposition: scaling component first,
/// then wavelet components in ascending frequency, each as long as the input
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct EwtComponents {
    pub sub_series: Vec<Vec<f64>>,
}

impl EwtComponents {
    pub fn num_components(&self) -> usize {
        self.sub_series.len()
    }
}

/// Angular frequency of DFT bin `j` for length `n`, folded onto `[0, pi]`.
fn bin_omega(j: usize, n: usize) -> f64 {
    let k = j.min(n - j);
    2.0 * PI * k as f64 / n as f64
}

fn fft_forward(window: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = window.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(window.len()).process(&mut buf);
    buf
}

fn fft_inverse(spectrum: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_inverse(spectrum.len()).process(&mut buf);
    let scale = 1.0 / spectrum.len() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}
