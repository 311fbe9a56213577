//! Delay and transparency-window extraction from complex spectra.

use serde::{Deserialize, Serialize};

use crate::bands::{DelayEstimate, DelayRegime, Validity};
use crate::error::{Error, Result};
use crate::spectrum::ComplexSpectrum;
use crate::units::{to_hz, TWO_PI};

/// Largest corrected phase step accepted between neighbouring samples.
///
/// Steps close to π cannot be told apart from a wrap in the opposite
/// direction, so the grid is required to keep them below π/2.
pub const UNWRAP_LIMIT: f64 = std::f64::consts::FRAC_PI_2;

/// Sequential unwrap keeping successive differences in `(−π, π]`.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let step = p - phases[i - 1];
            let corrected = step - TWO_PI * ((step - std::f64::consts::PI) / TWO_PI).ceil();
            offset += corrected - step;
        }
        out.push(p + offset);
    }
    out
}

/// Unwraps and rejects any corrected step larger than `limit` in magnitude.
pub fn unwrap_checked(phases: &[f64], limit: f64) -> Result<Vec<f64>> {
    let out = unwrap_phase(phases);
    if let Some(i) = out.windows(2).position(|w| (w[1] - w[0]).abs() > limit) {
        return Err(Error::Resolution {
            index: i,
            step: out[i + 1] - out[i],
        });
    }
    Ok(out)
}

/// Least-squares slope of `y` against `x`.
fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (sxy, sxx) = x.iter().zip(y).fold((0.0, 0.0), |(sxy, sxx), (a, b)| {
        (sxy + (a - mx) * (b - my), sxx + (a - mx) * (a - mx))
    });
    sxy / sxx
}

/// Group delay `dArg(S₂₁)/dω` around `omega_eval`.
///
/// With `averaging_bandwidth > 0` (rad/s) the unwrapped phase of all samples in
/// `|ω − ω_eval| ≤ bandwidth/2` is fitted by a straight line. A zero bandwidth,
/// or a window holding fewer than three samples, falls back to the central
/// difference around the nearest grid point. Only the samples entering the
/// estimate are unwrapped.
pub fn phase_gradient_delay(
    spectrum: &ComplexSpectrum,
    n: usize,
    spacing: f64,
    omega_eval: f64,
    averaging_bandwidth: f64,
) -> Result<DelayEstimate> {
    let tau = phase_slope(spectrum, omega_eval, averaging_bandwidth)?;
    DelayEstimate::new(tau, n, spacing, DelayRegime::Numeric, Validity::Valid)
}

/// The raw slope used by [`phase_gradient_delay`], in seconds.
pub fn phase_slope(spectrum: &ComplexSpectrum, omega_eval: f64, averaging_bandwidth: f64) -> Result<f64> {
    if !(averaging_bandwidth.is_finite() && averaging_bandwidth >= 0.0) {
        return Err(Error::InvalidParameter("averaging bandwidth must be >= 0".into()));
    }
    let w = spectrum.grid().as_slice();
    if omega_eval < w[0] || omega_eval > w[w.len() - 1] {
        return Err(Error::InsufficientStencil("evaluation frequency outside the spectrum".into()));
    }
    let half = 0.5 * averaging_bandwidth;
    let lo = w.partition_point(|&x| x < omega_eval - half);
    let hi = w.partition_point(|&x| x <= omega_eval + half);
    let central = hi - lo < 3;
    let (lo, hi) = if !central {
        (lo, hi)
    } else {
        let i = spectrum.grid().nearest_index(omega_eval);
        if i == 0 || i + 1 >= w.len() {
            return Err(Error::InsufficientStencil("no central stencil at the spectrum edge".into()));
        }
        (i - 1, i + 2)
    };
    let phases: Vec<f64> = spectrum.values()[lo..hi].iter().map(|v| v.arg()).collect();
    let unwrapped = unwrap_checked(&phases, UNWRAP_LIMIT).map_err(|e| match e {
        Error::Resolution { index, step } => Error::Resolution { index: index + lo, step },
        e => e,
    })?;
    if central {
        return Ok((unwrapped[2] - unwrapped[0]) / (w[lo + 2] - w[lo]));
    }
    Ok(ls_slope(&w[lo..hi], &unwrapped))
}

/// Transmission maximum between two dressed-state minima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "WindowRecord", from = "WindowRecord")]
pub struct TransparencyWindow {
    /// Midpoint of the two threshold crossings (rad/s).
    pub center: f64,
    /// Distance between the threshold crossings (rad/s).
    pub bandwidth: f64,
    pub peak_transmission: f64,
    /// Location of the maximum of |S₂₁| (rad/s).
    pub peak_frequency: f64,
    pub threshold_fraction: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct WindowRecord {
    #[serde(rename = "center_Hz")]
    center_hz: f64,
    #[serde(rename = "bandwidth_Hz")]
    bandwidth_hz: f64,
    peak_transmission: f64,
    #[serde(rename = "peak_frequency_Hz")]
    peak_frequency_hz: f64,
    threshold_fraction: f64,
}

impl From<TransparencyWindow> for WindowRecord {
    fn from(w: TransparencyWindow) -> Self {
        WindowRecord {
            center_hz: to_hz(w.center),
            bandwidth_hz: to_hz(w.bandwidth),
            peak_transmission: w.peak_transmission,
            peak_frequency_hz: to_hz(w.peak_frequency),
            threshold_fraction: w.threshold_fraction,
        }
    }
}

impl From<WindowRecord> for TransparencyWindow {
    fn from(r: WindowRecord) -> Self {
        TransparencyWindow {
            center: r.center_hz * TWO_PI,
            bandwidth: r.bandwidth_hz * TWO_PI,
            peak_transmission: r.peak_transmission,
            peak_frequency: r.peak_frequency_hz * TWO_PI,
            threshold_fraction: r.threshold_fraction,
        }
    }
}

impl TransparencyWindow {
    pub fn bandwidth_hz(&self) -> f64 {
        to_hz(self.bandwidth)
    }

    /// Whether the window is at least `required_hz` wide (cyclic units).
    pub fn supports_bandwidth(&self, required_hz: f64) -> bool {
        self.bandwidth_hz() >= required_hz
    }
}

/// Default threshold: half of the window's peak transmission.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Locates the most prominent interior maximum of |S₂₁| and measures where
/// it drops below `threshold_fraction` of its peak on both sides.
///
/// Prominence is the peak height above the higher of the two minima that
/// separate it from the span edges. Crossings are interpolated linearly in |S₂₁|.
pub fn window_metrics(spectrum: &ComplexSpectrum, threshold_fraction: f64) -> Result<TransparencyWindow> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::InvalidParameter("threshold fraction must lie in (0, 1)".into()));
    }
    let mag = spectrum.magnitudes();
    let w = spectrum.grid().as_slice();
    let n = mag.len();
    let scale = mag.iter().cloned().fold(0.0, f64::max);

    let mut best: Option<(usize, f64)> = None;
    for i in 1..n.saturating_sub(1) {
        if !(mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) {
            continue;
        }
        let left_min = mag[..i].iter().cloned().fold(f64::INFINITY, f64::min);
        let right_min = mag[i + 1..].iter().cloned().fold(f64::INFINITY, f64::min);
        let prominence = mag[i] - left_min.max(right_min);
        if best.is_none_or(|(_, p)| prominence > p) {
            best = Some((i, prominence));
        }
    }
    let Some((ip, prominence)) = best.filter(|&(_, p)| p > 1e-9 * scale.max(1e-300)) else {
        return Err(Error::StructureNotFound("no interior transmission maximum".into()));
    };
    let peak = mag[ip];
    let level = threshold_fraction * peak;
    let crossing = |a: usize, b: usize| w[a] + (level - mag[a]) / (mag[b] - mag[a]) * (w[b] - w[a]);

    let mut i = ip;
    while i > 0 && mag[i - 1] >= level {
        i -= 1;
    }
    if i == 0 {
        return Err(Error::StructureNotFound(format!(
            "window does not fall below {threshold_fraction} of its peak on the low side (prominence {prominence:.3e})"
        )));
    }
    let lower = crossing(i - 1, i);
    let mut j = ip;
    while j + 1 < n && mag[j + 1] >= level {
        j += 1;
    }
    if j + 1 == n {
        return Err(Error::StructureNotFound(format!(
            "window does not fall below {threshold_fraction} of its peak on the high side"
        )));
    }
    let upper = crossing(j + 1, j);
    Ok(TransparencyWindow {
        center: 0.5 * (lower + upper),
        bandwidth: upper - lower,
        peak_transmission: peak,
        peak_frequency: w[ip],
        threshold_fraction,
    })
}
