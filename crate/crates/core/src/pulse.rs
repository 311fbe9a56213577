//! Time-domain Gaussian pulses propagated through a chain spectrum.
//!
//! Waveforms are complex baseband envelopes `b(t)` of a physical field
//! `b(t)·e^{−iω_c t}`. With the `e^{−iωt}` convention, a baseband component at
//! cyclic offset `f` (the `e^{+2πift}` term of the DFT) sits at the physical
//! probe frequency `ω = ω_c − 2πf`. That mapping is what makes a spectrum
//! `e^{iωτ}` delay the envelope by `+τ`.
//!
//! Pulse bandwidth follows the cyclic convention `B = 1/σ` (Hz), so a 50 ns
//! pulse has B = 20 MHz and the delay-bandwidth product is `τ/σ`.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, FitOptions};
use crate::spectrum::ComplexSpectrum;
use crate::units::TWO_PI;

/// Largest fraction of pulse energy allowed to fall outside the spectrum grid.
pub const COVERAGE_TOLERANCE: f64 = 1e-9;

/// Zero-padding factor applied inside [`propagate`]; it refines the frequency
/// sampling of the response so the circular convolution does not wrap.
const PAD_FACTOR: usize = 4;

/// Uniformly sampled complex envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    /// Samples per second.
    pub sample_rate: f64,
    pub samples: Vec<Complex64>,
    /// Time of the first sample (s).
    pub start_time: f64,
    /// Physical carrier ω_c (rad/s) that baseband frequency zero corresponds to.
    pub carrier: f64,
}

#[derive(Serialize)]
struct WaveformRow {
    time_s: f64,
    re: f64,
    im: f64,
    abs: f64,
}

impl Waveform {
    pub fn new(sample_rate: f64, samples: Vec<Complex64>, start_time: f64, carrier: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("a waveform needs at least two samples".into()));
        }
        if !start_time.is_finite() || !carrier.is_finite() {
            return Err(Error::InvalidParameter("start time and carrier must be finite".into()));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidParameter("waveform samples must be finite".into()));
        }
        Ok(Waveform {
            sample_rate,
            samples,
            start_time,
            carrier,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn time(&self, index: usize) -> f64 {
        self.start_time + index as f64 / self.sample_rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// `∫|b|² dt` by the rectangle rule.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.sample_rate
    }

    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Waveform::new(self.sample_rate, samples, self.start_time, self.carrier)
    }

    /// CSV with columns `time_s, re, im, abs`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, s) in self.samples.iter().enumerate() {
            w.serialize(WaveformRow {
                time_s: self.time(i),
                re: s.re,
                im: s.im,
                abs: s.norm(),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Gaussian probe pulse `A·exp(−(t − t₀)²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Envelope width σ (s).
    pub sigma: f64,
    /// Carrier ω_c (rad/s).
    pub center_frequency: f64,
    pub amplitude: f64,
}

impl PulseSpec {
    pub fn new(sigma: f64, center_frequency: f64, amplitude: f64) -> Result<Self> {
        let s = PulseSpec {
            sigma,
            center_frequency,
            amplitude,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter("pulse sigma must be positive".into()));
        }
        if !self.center_frequency.is_finite() || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter("pulse carrier and amplitude must be finite".into()));
        }
        Ok(())
    }

    /// Pulse bandwidth `1/σ` in Hz.
    pub fn bandwidth_hz(&self) -> f64 {
        1.0 / self.sigma
    }

    /// Closed-form `∫|b|² dt = A²σ√π`.
    pub fn energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.sigma * std::f64::consts::PI.sqrt()
    }
}

/// Samples a Gaussian centred in a window of `duration` seconds starting at t = 0.
pub fn synthesize_pulse(spec: &PulseSpec, sample_rate: f64, duration: f64) -> Result<Waveform> {
    spec.validate()?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::InvalidParameter("sample rate must be positive".into()));
    }
    if !(duration.is_finite() && duration >= 8.0 * spec.sigma) {
        return Err(Error::Truncation(format!(
            "window of {:.3e} s is shorter than 8 sigma = {:.3e} s",
            duration,
            8.0 * spec.sigma
        )));
    }
    let n = (duration * sample_rate).round() as usize;
    let t0 = 0.5 * duration;
    let samples = (0..n)
        .map(|i| {
            let x = (i as f64 / sample_rate - t0) / spec.sigma;
            Complex64::new(spec.amplitude * (-0.5 * x * x).exp(), 0.0)
        })
        .collect();
    Waveform::new(sample_rate, samples, 0.0, spec.center_frequency)
}

/// Baseband frequency (Hz) of each DFT bin in standard FFT order.
pub fn bin_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let k = if k <= (n - 1) / 2 { k as f64 } else { k as f64 - n as f64 };
            k * sample_rate / n as f64
        })
        .collect()
}

/// Unnormalized forward DFT `X_k = Σ x_n e^{−2πikn/N}`.
pub fn forward(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse of [`forward`], including the `1/N` factor.
pub fn inverse(bins: &[Complex64]) -> Vec<Complex64> {
    let mut buf = bins.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Applies a transmission spectrum to a pulse in the frequency domain.
///
/// The response at each bin is interpolated linearly in Re and Im. Bins that
/// map outside the spectrum grid are dropped; if they hold more than
/// [`COVERAGE_TOLERANCE`] of the pulse energy the call fails instead.
pub fn propagate(pulse: &Waveform, spectrum: &ComplexSpectrum) -> Result<Waveform> {
    let n = pulse.len();
    let padded_len = n * PAD_FACTOR;
    let mut padded = pulse.samples.clone();
    padded.resize(padded_len, Complex64::new(0.0, 0.0));
    let mut bins = forward(&padded);
    let freqs = bin_frequencies(padded_len, pulse.sample_rate);

    let total: f64 = bins.iter().map(|b| b.norm_sqr()).sum();
    let mut outside = 0.0;
    for (b, f) in bins.iter_mut().zip(&freqs) {
        let omega = pulse.carrier - TWO_PI * f;
        match spectrum.interpolate(omega) {
            Some(h) => *b *= h,
            None => {
                outside += b.norm_sqr();
                *b = Complex64::new(0.0, 0.0);
            }
        }
    }
    if total > 0.0 && outside / total > COVERAGE_TOLERANCE {
        return Err(Error::Coverage(format!(
            "{:.3e} of the pulse energy lies outside [{:.6}, {:.6}] GHz",
            outside / total,
            crate::units::to_ghz(spectrum.grid().first()),
            crate::units::to_ghz(spectrum.grid().last())
        )));
    }
    let mut out = inverse(&bins);
    out.truncate(n);
    pulse.with_samples(out)
}

/// Gaussian fitted to the envelope magnitude `|b(t)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianFit {
    /// Centre time (s).
    pub center: f64,
    /// Width σ (s).
    pub sigma: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
}

/// Damped least-squares Gaussian fit of `|b(t)|`, with times in ns internally.
pub fn fit_gaussian(waveform: &Waveform) -> Result<GaussianFit> {
    let mags: Vec<f64> = waveform.samples.iter().map(|s| s.norm()).collect();
    let t_ns: Vec<f64> = waveform.times().iter().map(|t| t * 1e9).collect();
    let (imax, &peak) = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("waveforms hold at least two samples");
    if peak <= 0.0 {
        return Err(Error::FitFailure {
            reason: "envelope is identically zero".into(),
            best: vec![],
            cost: 0.0,
            iterations: 0,
        });
    }
    // Seed width from the second moment of |b|², whose σ is that of |b| over √2.
    let w: f64 = mags.iter().map(|m| m * m).sum();
    let mean = mags.iter().zip(&t_ns).map(|(m, t)| m * m * t).sum::<f64>() / w;
    let var = mags.iter().zip(&t_ns).map(|(m, t)| m * m * (t - mean).powi(2)).sum::<f64>() / w;
    let sigma0 = (2.0 * var).sqrt().max(waveform.dt() * 1e9);

    let residuals = |p: &[f64], out: &mut [f64]| {
        for ((o, &t), &m) in out.iter_mut().zip(&t_ns).zip(&mags) {
            let x = (t - p[1]) / p[2];
            *o = p[0] * (-0.5 * x * x).exp() - m;
        }
    };
    let report = least_squares(residuals, &[peak, t_ns[imax], sigma0], mags.len(), &FitOptions::default())?;
    let p = &report.params;
    Ok(GaussianFit {
        center: p[1] * 1e-9,
        sigma: p[2].abs() * 1e-9,
        amplitude: p[0],
        rms_residual: report.rms_residual(),
    })
}

/// Arrival, width and energy of a transmitted pulse relative to a reference pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseResult {
    #[serde(rename = "arrival_s")]
    pub arrival: f64,
    #[serde(rename = "sigma_fit_s")]
    pub sigma_fit: f64,
    #[serde(rename = "amplitude_fit")]
    pub amplitude: f64,
    #[serde(rename = "delay_s")]
    pub delay: f64,
    /// Energy ratio of transmitted and reference pulse.
    pub efficiency: f64,
    /// `τ/σ_ref`, the delay in units of the inverse cyclic pulse bandwidth.
    #[serde(rename = "dbp")]
    pub delay_bandwidth_product: f64,
}

/// Fits both envelopes and compares them.
pub fn fit_arrival(measured: &Waveform, reference: &Waveform) -> Result<PulseResult> {
    if (measured.sample_rate - reference.sample_rate).abs() > 1e-12 * reference.sample_rate {
        return Err(Error::Shape("measured and reference pulses use different sample rates".into()));
    }
    let m = fit_gaussian(measured)?;
    let r = fit_gaussian(reference)?;
    let e_ref = reference.energy();
    if e_ref <= 0.0 {
        return Err(Error::InvalidParameter("reference pulse carries no energy".into()));
    }
    let delay = m.center - r.center;
    Ok(PulseResult {
        arrival: m.center,
        sigma_fit: m.sigma,
        amplitude: m.amplitude,
        delay,
        efficiency: measured.energy() / e_ref,
        delay_bandwidth_product: delay / r.sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::FrequencyGrid;
    use crate::units::{ghz, mhz};
    use proptest::prelude::*;

    fn spec() -> PulseSpec {
        PulseSpec::new(50e-9, ghz(7.812), 1.0).unwrap()
    }

    fn pulse() -> Waveform {
        synthesize_pulse(&spec(), 1e9, 1e-6).unwrap()
    }

    fn probe_grid() -> FrequencyGrid {
        FrequencyGrid::centered(ghz(7.812), mhz(0.05), 1000).unwrap()
    }

    #[test]
    fn gaussian_geometry() {
        let p = pulse();
        assert_eq!(p.len(), 1000);
        let imax = p.samples.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
        assert_eq!(imax, 500);
        // Half-maximum crossings by linear interpolation.
        let m: Vec<f64> = p.samples.iter().map(|s| s.norm()).collect();
        let cross = |range: Vec<usize>| {
            for i in range {
                let (a, b) = (m[i] - 0.5, m[i + 1] - 0.5);
                if a.signum() != b.signum() {
                    return i as f64 + a / (a - b);
                }
            }
            unreachable!()
        };
        let lo = cross((0..500).collect());
        let hi = cross((500..999).collect());
        let fwhm_ns = hi - lo;
        assert!((fwhm_ns - 2.0 * (2.0 * 2f64.ln()).sqrt() * 50.0).abs() < 0.05, "{fwhm_ns}");
        assert!((p.energy() / spec().energy() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let p = synthesize_pulse(&PulseSpec::new(50e-9, 0.0, 0.0).unwrap(), 1e9, 1e-6).unwrap();
        assert!(p.samples.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn short_window_is_rejected() {
        assert!(matches!(synthesize_pulse(&spec(), 1e9, 399e-9), Err(Error::Truncation(_))));
    }

    #[test]
    fn spectral_width_matches_sigma() {
        // |X(ω)|² ∝ exp(−σ²ω²): the power spectrum falls to 1/e at ω = 1/σ.
        let p = synthesize_pulse(&spec(), 1e9, 8e-6).unwrap();
        let bins = forward(&p.samples);
        let f = bin_frequencies(p.len(), p.sample_rate);
        let p0 = bins[0].norm_sqr();
        let k = (1..p.len() / 2).find(|&k| bins[k].norm_sqr() < p0 / std::f64::consts::E).unwrap();
        let (fa, fb) = (f[k - 1], f[k]);
        let (pa, pb) = (bins[k - 1].norm_sqr().ln(), bins[k].norm_sqr().ln());
        let f_e = fa + (p0.ln() - 1.0 - pa) / (pb - pa) * (fb - fa);
        let omega_e = TWO_PI * f_e;
        assert!((omega_e * 50e-9 - 1.0).abs() < 1e-3, "{omega_e}");
        // Cyclic bandwidth convention.
        assert!((spec().bandwidth_hz() - 20e6).abs() < 1e-6);
    }

    #[test]
    fn unity_spectrum_is_identity() {
        let p = pulse();
        let out = propagate(&p, &ComplexSpectrum::unity(probe_grid())).unwrap();
        let err: f64 = out.samples.iter().zip(&p.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(err / p.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() < 1e-9);
    }

    #[test]
    fn linear_phase_shifts_the_pulse() {
        let tau0 = 12e-9;
        let s = ComplexSpectrum::from_fn(probe_grid(), |w| Complex64::from_polar(1.0, w * tau0)).unwrap();
        let out = propagate(&pulse(), &s).unwrap();
        let r = fit_arrival(&out, &pulse()).unwrap();
        assert!((r.delay - tau0).abs() < 1e-12, "{}", r.delay);
        assert!((r.efficiency - 1.0).abs() < 1e-9);
        assert!((r.sigma_fit - 50e-9).abs() < 1e-12);
        assert!((r.delay_bandwidth_product - 0.24).abs() < 1e-9);
    }

    #[test]
    fn narrow_grid_raises_coverage() {
        let g = FrequencyGrid::centered(ghz(7.812), mhz(0.05), 40).unwrap();
        assert!(matches!(propagate(&pulse(), &ComplexSpectrum::unity(g)), Err(Error::Coverage(_))));
    }

    #[test]
    fn constructed_arrival() {
        let p = pulse();
        let shifted = p
            .with_samples(
                (0..p.len())
                    .map(|i| {
                        let x = (p.time(i) - 512e-9) / 50e-9;
                        Complex64::new(0.4 * (-0.5 * x * x).exp(), 0.0)
                    })
                    .collect(),
            )
            .unwrap();
        let r = fit_arrival(&shifted, &p).unwrap();
        assert!((r.delay - 12e-9).abs() < 0.1e-9);
        assert!((r.efficiency - 0.16).abs() < 1e-3);
        let same = fit_arrival(&p, &p).unwrap();
        assert_eq!(same.delay, 0.0);
        assert_eq!(same.efficiency, 1.0);
    }

    #[test]
    fn zero_waveform_cannot_be_fitted() {
        let p = pulse();
        let z = p.with_samples(vec![Complex64::new(0.0, 0.0); p.len()]).unwrap();
        assert!(matches!(fit_arrival(&z, &p), Err(Error::FitFailure { .. })));
    }

    #[test]
    fn waveform_csv_header() {
        let mut buf = Vec::new();
        pulse().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time_s,re,im,abs\n"));
        assert_eq!(text.lines().count(), 1001);
    }

    fn random_waveform(values: Vec<(f64, f64)>) -> Waveform {
        Waveform::new(1e9, values.into_iter().map(|(a, b)| Complex64::new(a, b)).collect(), 0.0, ghz(7.8)).unwrap()
    }

    proptest! {
        #[test]
        fn transform_round_trip(values in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..300)) {
            let w = random_waveform(values);
            let back = inverse(&forward(&w.samples));
            let err: f64 = back.iter().zip(&w.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
            let e: f64 = w.samples.iter().map(|s| s.norm_sqr()).sum();
            prop_assert!(err <= 1e-10 * e.max(1e-300));
        }

        #[test]
        fn unimodular_spectra_conserve_energy(tau in -20e-9..20e-9f64, phase in -3.0..3.0f64) {
            let p = pulse();
            let c = ghz(7.812);
            let s = ComplexSpectrum::from_fn(probe_grid(), |w| {
                Complex64::from_polar(1.0, phase + w * tau + 1e-16 * (w - c).powi(2))
            })
            .unwrap();
            let out = propagate(&p, &s).unwrap();
            prop_assert!((out.energy() / p.energy() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn delay_additivity(ta in -10e-9..10e-9f64, tb in -10e-9..10e-9f64, damp in 0.0..0.5f64) {
            let g = probe_grid();
            let c = ghz(7.812);
            let sa = ComplexSpectrum::from_fn(g.clone(), |w| Complex64::from_polar(1.0, w * ta)).unwrap();
            let sb = ComplexSpectrum::from_fn(g, |w| {
                let x = (w - c) / mhz(5.0);
                Complex64::from_polar(1.0 - damp / (1.0 + x * x), w * tb)
            }).unwrap();
            let p = pulse();
            let two_step = propagate(&propagate(&p, &sa).unwrap(), &sb).unwrap();
            let one_step = propagate(&p, &sa.product(&sb).unwrap()).unwrap();
            let err: f64 = two_step.samples.iter().zip(&one_step.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
            let e: f64 = one_step.samples.iter().map(|s| s.norm_sqr()).sum();
            prop_assert!(err <= 1e-9 * e);
        }
    }
}
