//! Emulated heterodyne receiver: IF up/down-conversion and a digital
//! Butterworth low-pass designed by the bilinear transform.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::Waveform;
use crate::units::TWO_PI;

/// Second-order section `H(z) = (b₀ + b₁z⁻¹ + b₂z⁻²)/(1 + a₁z⁻¹ + a₂z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    /// Denominator with `a[0] = 1`.
    pub a: [f64; 3],
}

impl Biquad {
    pub fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = self.a[0] + z_inv * (self.a[1] + z_inv * self.a[2]);
        num / den
    }

    /// Group delay at DC in samples: `Σk·b_k/Σb_k − Σk·a_k/Σa_k`.
    pub fn dc_group_delay(&self) -> f64 {
        let centroid = |c: &[f64; 3]| (c[1] + 2.0 * c[2]) / (c[0] + c[1] + c[2]);
        centroid(&self.b) - centroid(&self.a)
    }

    /// Transposed direct form II, run causally over the input.
    fn filter(&self, x: &mut [Complex64]) {
        let (mut s1, mut s2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[1] * y + s2;
            s2 = self.b[2] * input - self.a[2] * y;
            *v = y;
        }
    }
}

/// Digital Butterworth low-pass as a cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    pub order: usize,
    /// −3 dB cutoff (Hz).
    pub cutoff: f64,
    pub sample_rate: f64,
    pub sections: Vec<Biquad>,
}

impl Butterworth {
    /// Designs an `order`-pole low-pass with the cutoff prewarped so that the
    /// digital response is exactly −3 dB at `cutoff`.
    pub fn lowpass(order: usize, cutoff: f64, sample_rate: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("filter order must be at least 1".into()));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if !(cutoff > 0.0 && cutoff < 0.5 * sample_rate) {
            return Err(Error::Sampling(format!(
                "cutoff {cutoff:.3e} Hz must lie in (0, fs/2 = {:.3e} Hz)",
                0.5 * sample_rate
            )));
        }
        let k = (std::f64::consts::PI * cutoff / sample_rate).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        // Analog poles e^{iθ} with θ = π(2m + n + 1)/(2n); conjugate pairs give
        // s² + c·s + 1 with c = −2cos θ.
        for m in 0..order / 2 {
            let theta = std::f64::consts::PI * (2 * m + order + 1) as f64 / (2 * order) as f64;
            let c = -2.0 * theta.cos();
            let a0 = 1.0 + c * k + k2;
            sections.push(Biquad {
                b: [k2 / a0, 2.0 * k2 / a0, k2 / a0],
                a: [1.0, (2.0 * k2 - 2.0) / a0, (1.0 - c * k + k2) / a0],
            });
        }
        if order % 2 == 1 {
            let a0 = 1.0 + k;
            sections.push(Biquad {
                b: [k / a0, k / a0, 0.0],
                a: [1.0, (k - 1.0) / a0, 0.0],
            });
        }
        Ok(Butterworth {
            order,
            cutoff,
            sample_rate,
            sections,
        })
    }

    /// Complex frequency response at `f` (Hz).
    pub fn response(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -TWO_PI * f / self.sample_rate);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Low-frequency group delay (s), the delay a narrowband envelope experiences.
    pub fn group_delay(&self) -> f64 {
        self.sections.iter().map(Biquad::dc_group_delay).sum::<f64>() / self.sample_rate
    }

    pub fn filter(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut out = samples.to_vec();
        for s in &self.sections {
            s.filter(&mut out);
        }
        out
    }
}

/// Receiver settings; defaults are a 115 MHz IF and a fifth-order 115 MHz low-pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneConfig {
    /// Intermediate frequency (Hz).
    pub if_frequency: f64,
    pub filter_order: usize,
    /// Low-pass cutoff (Hz).
    pub cutoff: f64,
}

impl Default for HeterodyneConfig {
    fn default() -> Self {
        HeterodyneConfig {
            if_frequency: 115e6,
            filter_order: 5,
            cutoff: 115e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeterodyneOutput {
    pub waveform: Waveform,
    /// Group delay of the low-pass (s), common to signal and reference.
    pub filter_delay: f64,
}

/// Upconverts the envelope to a real IF signal, mixes it back to baseband and
/// low-pass filters it.
///
/// The real IF record is `x(t) = Re(b(t)·e^{−iω_IF t})`; digital mixing gives
/// `2x·e^{iω_IF t} = b + b*·e^{2iω_IF t}` and the filter removes the image at
/// twice the IF.
pub fn heterodyne_chain(pulse: &Waveform, config: &HeterodyneConfig) -> Result<HeterodyneOutput> {
    if config.if_frequency.is_nan() || config.if_frequency <= 0.0 || pulse.sample_rate <= 4.0 * config.if_frequency {
        return Err(Error::Sampling(format!(
            "sample rate {:.3e} S/s must exceed four times the IF {:.3e} Hz",
            pulse.sample_rate, config.if_frequency
        )));
    }
    let filter = Butterworth::lowpass(config.filter_order, config.cutoff, pulse.sample_rate)?;
    let w_if = TWO_PI * config.if_frequency;
    let mixed: Vec<Complex64> = pulse
        .samples
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let t = pulse.time(i);
            let x = (b * Complex64::from_polar(1.0, -w_if * t)).re;
            2.0 * x * Complex64::from_polar(1.0, w_if * t)
        })
        .collect();
    Ok(HeterodyneOutput {
        waveform: pulse.with_samples(filter.filter(&mixed))?,
        filter_delay: filter.group_delay(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{fit_gaussian, synthesize_pulse, PulseSpec};

    /// Bilinear-transform Butterworth magnitude: `1/(1 + (tan(πf/fs)/tan(πf_c/fs))^{2n})`.
    fn closed_form_mag2(n: usize, fc: f64, fs: f64, f: f64) -> f64 {
        let r = (std::f64::consts::PI * f / fs).tan() / (std::f64::consts::PI * fc / fs).tan();
        1.0 / (1.0 + r.powi(2 * n as i32))
    }

    #[test]
    fn magnitude_matches_closed_form() {
        for order in 1..=6 {
            let f = Butterworth::lowpass(order, 115e6, 1e9).unwrap();
            for k in 0..50 {
                let freq = k as f64 * 9.7e6;
                let got = f.response(freq).norm_sqr();
                let want = closed_form_mag2(order, 115e6, 1e9, freq);
                assert!((got - want).abs() < 1e-12, "order {order} f {freq}: {got} vs {want}");
            }
            assert!((f.response(0.0).norm() - 1.0).abs() < 1e-12);
            assert!((f.response(115e6).norm_sqr() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn tone_at_twice_cutoff_is_suppressed() {
        let f = Butterworth::lowpass(5, 115e6, 1e9).unwrap();
        let db = 10.0 * f.response(230e6).norm_sqr().log10();
        assert!(db <= -30.0, "{db}");
        assert!((db - 10.0 * closed_form_mag2(5, 115e6, 1e9, 230e6).log10()).abs() < 1e-9);
        // Time-domain check on a steady tone after the transient has died out.
        let n = 4000;
        let tone: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, TWO_PI * 230e6 * i as f64 / 1e9)).collect();
        let out = f.filter(&tone);
        let tail = out[n - 500..].iter().map(|v| v.norm_sqr()).sum::<f64>() / 500.0;
        assert!(10.0 * tail.log10() <= -30.0);
    }

    #[test]
    fn dc_group_delay_matches_phase_slope() {
        let f = Butterworth::lowpass(5, 115e6, 1e9).unwrap();
        let df = 1e3;
        let slope = -(f.response(df).arg() - f.response(-df).arg()) / (TWO_PI * 2.0 * df);
        assert!((slope - f.group_delay()).abs() < 1e-6 * slope);
        // The analog fifth-order prototype has a DC group delay of 3.236/ω_c.
        assert!((f.group_delay() * TWO_PI * 115e6 - 3.236).abs() < 0.2);
    }

    #[test]
    fn zero_in_zero_out() {
        let p = synthesize_pulse(&PulseSpec::new(50e-9, 0.0, 0.0).unwrap(), 1e9, 1e-6).unwrap();
        let out = heterodyne_chain(&p, &HeterodyneConfig::default()).unwrap();
        assert!(out.waveform.samples.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn narrow_pulse_keeps_its_width() {
        let p = synthesize_pulse(&PulseSpec::new(50e-9, 0.0, 1.0).unwrap(), 1e9, 1e-6).unwrap();
        let out = heterodyne_chain(&p, &HeterodyneConfig::default()).unwrap();
        let a = fit_gaussian(&p).unwrap();
        let b = fit_gaussian(&out.waveform).unwrap();
        assert!((b.sigma / a.sigma - 1.0).abs() < 0.01, "{} vs {}", b.sigma, a.sigma);
        // The envelope is delayed by the filter's low-frequency group delay.
        assert!((b.center - a.center - out.filter_delay).abs() < 0.2e-9);
    }

    #[test]
    fn undersampled_if_is_rejected() {
        let p = synthesize_pulse(&PulseSpec::new(50e-9, 0.0, 1.0).unwrap(), 4.0e8, 1e-6).unwrap();
        assert!(matches!(heterodyne_chain(&p, &HeterodyneConfig::default()), Err(Error::Sampling(_))));
    }
}
