//! Absolute control-power calibration from the single-qubit Autler-Townes
//! splitting, and γ₂₀ extraction from the resonant transmission curve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{least_squares, FitOptions};
use crate::qubit::TransmonQubit;
use crate::units::HBAR;

/// Result of fitting `Ω = a·√P_appl` to measured splittings.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationFit {
    /// Slope `a` in rad/s per √W.
    pub a: f64,
    /// On-chip power per applied power, `α = a²ħω_c/(4Γ₁₀)`.
    pub alpha: f64,
    pub rms_residual: f64,
    /// RMS of the relative residuals `(Ω_fit − Ω)/Ω`.
    pub relative_rms: f64,
}

/// Least-squares fit of `Ω = a·√P_appl` to `(applied power [W], splitting [rad/s])` pairs.
///
/// Residuals are taken relative to the measured splitting, which matches a
/// multiplicative error model and keeps the low-power points from being
/// swamped by the strongest drive.
pub fn fit_calibration_factor(
    splitting_data: &[(f64, f64)],
    qubit: &TransmonQubit,
    omega_c: f64,
) -> Result<CalibrationFit> {
    if splitting_data.len() < 2 {
        return Err(Error::InvalidParameter("calibration needs at least two points".into()));
    }
    if splitting_data.iter().any(|&(p, _)| !(p.is_finite() && p > 0.0)) {
        return Err(Error::InvalidParameter("applied powers must be positive and finite".into()));
    }
    if splitting_data.iter().any(|&(_, s)| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidParameter("splittings must be positive and finite".into()));
    }
    let p0 = splitting_data[0].0;
    if splitting_data.iter().all(|&(p, _)| p == p0) {
        return Err(Error::FitFailure {
            reason: "all applied powers are equal".into(),
            best: vec![],
            cost: f64::NAN,
            iterations: 0,
        });
    }
    if qubit.radiative_rate <= 0.0 {
        return Err(Error::SingularModel("Gamma10 = 0 in power calibration".into()));
    }
    // Linear in a: minimize Σ((a√P − Ω)/Ω)² ⇒ a = Σ(√P/Ω) / Σ(P/Ω²).
    let num: f64 = splitting_data.iter().map(|&(p, s)| p.sqrt() / s).sum();
    let den: f64 = splitting_data.iter().map(|&(p, s)| p / (s * s)).sum();
    let a = num / den;
    let n = splitting_data.len() as f64;
    let (sq, rel_sq) = splitting_data.iter().fold((0.0, 0.0), |(sq, rel), &(p, s)| {
        let d = a * p.sqrt() - s;
        (sq + d * d, rel + (d / s).powi(2))
    });
    Ok(CalibrationFit {
        a,
        alpha: alpha_from_slope(a, qubit, omega_c),
        rms_residual: (sq / n).sqrt(),
        relative_rms: (rel_sq / n).sqrt(),
    })
}

/// `α = a²ħω_c/(4Γ₁₀)`.
pub fn alpha_from_slope(a: f64, qubit: &TransmonQubit, omega_c: f64) -> f64 {
    a * a * HBAR * omega_c / (4.0 * qubit.radiative_rate)
}

/// Slope `a` that produces a given calibration factor; inverse of [`alpha_from_slope`].
pub fn slope_from_alpha(alpha: f64, qubit: &TransmonQubit, omega_c: f64) -> f64 {
    (4.0 * qubit.radiative_rate * alpha / (HBAR * omega_c)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct Gamma20Fit {
    /// Fitted γ₂₀ (rad/s).
    pub dephasing_20: f64,
    /// One-sigma uncertainty of γ₂₀ (rad/s), when available.
    pub std_error: Option<f64>,
    pub rss: f64,
    pub iterations: usize,
}

/// Resonant transmission versus control power with Γ₁₀ and γ₁₀ held fixed.
pub fn resonant_transmission_model(qubit: &TransmonQubit, omega_c: f64, dephasing_20: f64, power: f64) -> f64 {
    let g10 = qubit.decoherence_10();
    let depth = qubit.radiative_rate / (2.0 * g10);
    1.0 - depth / (1.0 + qubit.radiative_rate * power / (dephasing_20 * g10 * HBAR * omega_c))
}

/// Upper bound on γ₂₀/γ₁₀ beyond which the fitted curve no longer depends on γ₂₀.
const DIVERGENCE_RATIO: f64 = 1e4;

/// Fits γ₂₀ to `(P_c [W], |t|)` samples of the resonant transmission.
pub fn extract_gamma20(
    curve: &[(f64, f64)],
    qubit: &TransmonQubit,
    omega_c: f64,
) -> Result<Gamma20Fit> {
    if curve.len() < 3 {
        return Err(Error::InvalidParameter("gamma20 fit needs at least three points".into()));
    }
    if curve.iter().any(|&(p, t)| !(p.is_finite() && p > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("control powers must be positive and finite".into()));
    }
    let (pmin, pmax) = curve
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(p, _)| (lo.min(p), hi.max(p)));
    if pmax < 10.0 * pmin {
        return Err(Error::InvalidParameter(
            "control-power span must cover at least a factor of 10".into(),
        ));
    }
    let g10 = qubit.decoherence_10();
    if g10 <= 0.0 || qubit.radiative_rate <= 0.0 {
        return Err(Error::SingularModel("gamma10 and Gamma10 must be positive".into()));
    }

    // Parametrize by u = ln(γ₂₀/γ₁₀) to keep γ₂₀ positive.
    let residuals = |p: &[f64], out: &mut [f64]| {
        let g20 = g10 * p[0].exp();
        for (o, &(power, t)) in out.iter_mut().zip(curve) {
            *o = resonant_transmission_model(qubit, omega_c, g20, power) - t;
        }
    };

    // Seed from the power where the dip is half recovered.
    let depth = qubit.radiative_rate / (2.0 * g10);
    let half = 1.0 - depth / 2.0;
    let seed_power = curve
        .iter()
        .min_by(|a, b| (a.1 - half).abs().total_cmp(&(b.1 - half).abs()))
        .map(|c| c.0)
        .unwrap_or(pmin);
    let seed = (qubit.radiative_rate * seed_power / (g10 * HBAR * omega_c) / g10).ln();

    let opts = FitOptions::default();
    let mut best: Option<crate::fit::FitReport> = None;
    for start in [seed, seed - 2.0, seed + 2.0, 0.0] {
        if !start.is_finite() {
            continue;
        }
        if let Ok(fit) = least_squares(residuals, &[start], curve.len(), &opts) {
            if best.as_ref().is_none_or(|b| fit.rss < b.rss) {
                best = Some(fit);
            }
        }
    }
    let fit = best.ok_or_else(|| Error::FitFailure {
        reason: "gamma20 fit did not converge from any start".into(),
        best: vec![g10 * seed.exp()],
        cost: f64::NAN,
        iterations: opts.max_iterations,
    })?;

    let u = fit.params[0];
    let g20 = g10 * u.exp();
    let rel_err = fit.std_errors.as_ref().map(|s| s[0]);
    if u.exp() > DIVERGENCE_RATIO || rel_err.is_some_and(|e| !e.is_finite() || e > 1.0) {
        return Err(Error::FitFailure {
            reason: "gamma20 diverges: the curve carries no control-power dependence".into(),
            best: vec![g20],
            cost: fit.rss,
            iterations: fit.iterations,
        });
    }
    Ok(Gamma20Fit {
        dephasing_20: g20,
        std_error: rel_err.map(|e| e * g20),
        rss: fit.rss,
        iterations: fit.iterations,
    })
}
