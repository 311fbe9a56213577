//! EIT versus Autler-Townes discrimination by Akaike's information criterion.
//!
//! Two candidate line shapes are fitted to a transmission magnitude trace:
//!
//! * ATS: two independent Lorentzian dips,
//!   `1 − A₁ L(x; x₁, w₁) − A₂ L(x; x₂, w₂)` (6 parameters);
//! * EIT: a broad dip with a narrow transparency peak at the same centre,
//!   `1 − A_b L(x; x₀, w_b) + A_n L(x; x₀, w_n)` (5 parameters),
//!
//! with `L(x; x₀, w) = 1/(1 + ((x − x₀)/w)²)`. Amplitudes are confined to
//! `[0, A_MAX]`. Without the sign constraint the ATS form would contain the EIT
//! form (a dip with negative amplitude is a peak) and could never lose on EIT
//! data. The upper bound stops the EIT form from chasing a double dip with two
//! huge, nearly cancelling Lorentzians. Each model is scored by
//! `AIC = n ln(RSS/n) + 2p` and the Akaike weights `exp(−ΔAIC/2)` are normalized
//! to sum to one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{least_squares, FitOptions};
use crate::spectrum::ComplexSpectrum;

/// Largest Lorentzian amplitude either model may use.
pub const A_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LineShapeModel {
    Ats,
    Eit,
}

impl LineShapeModel {
    pub fn n_params(self) -> usize {
        match self {
            LineShapeModel::Ats => 6,
            LineShapeModel::Eit => 5,
        }
    }

    /// Model value at normalized abscissa `x` for physical parameters
    /// (amplitudes at indices 0 and 3, which must be non-negative).
    pub fn eval(self, p: &[f64], x: f64) -> f64 {
        let lor = |x0: f64, w: f64| 1.0 / (1.0 + ((x - x0) / w).powi(2));
        match self {
            LineShapeModel::Ats => 1.0 - p[0] * lor(p[1], p[2]) - p[3] * lor(p[4], p[5]),
            LineShapeModel::Eit => 1.0 - p[0] * lor(p[1], p[2]) + p[3] * lor(p[1], p[4]),
        }
    }

    /// Fit-space parameters to physical ones; amplitudes are `A_MAX·sin²(u)`.
    fn to_physical(p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        q[0] = A_MAX * p[0].sin().powi(2);
        q[3] = A_MAX * p[3].sin().powi(2);
        for i in [2usize, 4, 5] {
            if let Some(v) = q.get_mut(i) {
                *v = v.abs();
            }
        }
        q
    }

    fn to_fit_space(p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        q[0] = (p[0] / A_MAX).clamp(0.0, 1.0).sqrt().asin();
        q[3] = (p[3] / A_MAX).clamp(0.0, 1.0).sqrt().asin();
        q
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelFit {
    pub model: LineShapeModel,
    /// Parameters in the normalized abscissa `x = (ω − ω_mid)/half_span`.
    pub params: Vec<f64>,
    pub rss: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelComparison {
    pub ats: ModelFit,
    pub eit: ModelFit,
    pub weight_ats: f64,
    pub weight_eit: f64,
    /// Both fits converged.
    pub valid: bool,
    pub diagnostics: Vec<String>,
    /// Abscissa normalization: centre and half-span in rad/s.
    pub omega_mid: f64,
    pub half_span: f64,
}

impl ModelComparison {
    pub fn preferred(&self) -> LineShapeModel {
        if self.weight_ats >= self.weight_eit {
            LineShapeModel::Ats
        } else {
            LineShapeModel::Eit
        }
    }
}

/// Floor on RSS/n, corresponding to a residual RMS of 1e-12.
const RSS_FLOOR_PER_POINT: f64 = 1e-24;

pub fn aic(rss: f64, n: usize, n_params: usize) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).max(RSS_FLOOR_PER_POINT).ln() + 2.0 * n_params as f64
}

/// Akaike weights for a list of AIC values.
pub fn akaike_weights(aics: &[f64]) -> Vec<f64> {
    let min = aics.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = aics.iter().map(|a| (-(a - min) / 2.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

/// Local minima of `y`, deepest first.
fn local_minima(y: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..y.len() - 1)
        .filter(|&i| y[i] < y[i - 1] && y[i] <= y[i + 1])
        .collect();
    idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    idx
}

fn ats_starts(x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let minima = local_minima(y);
    let (i1, i2) = match minima.as_slice() {
        [a, b, ..] => (*a.min(b), *a.max(b)),
        [a] => (a.saturating_sub(y.len() / 20), (a + y.len() / 20).min(y.len() - 1)),
        [] => (y.len() / 3, 2 * y.len() / 3),
    };
    let sep = (x[i2] - x[i1]).abs().max(1e-3);
    let mut out = Vec::new();
    for scale in [0.1, 0.25, 0.5] {
        out.push(vec![1.0 - y[i1], x[i1], sep * scale, 1.0 - y[i2], x[i2], sep * scale]);
    }
    out
}

fn eit_starts(x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let minima = local_minima(y);
    let (center, sep, depth) = match minima.as_slice() {
        [a, b, ..] => (0.5 * (x[*a] + x[*b]), (x[*a] - x[*b]).abs(), 1.0 - y[*a].min(y[*b])),
        [a] => (x[*a], 0.2, 1.0 - y[*a]),
        [] => (0.0, 0.2, 0.1),
    };
    let ic = x.partition_point(|&v| v < center).min(y.len() - 1);
    let at_center = 1.0 - y[ic];
    let mut out = Vec::new();
    for broad in [0.75, 1.0, 1.5] {
        for narrow in [0.25, 0.5] {
            let a_b = depth * 1.2;
            out.push(vec![a_b, center, sep * broad, (a_b - at_center).max(1e-3), sep * narrow]);
        }
    }
    out
}

fn fit_model(model: LineShapeModel, x: &[f64], y: &[f64], starts: Vec<Vec<f64>>) -> ModelFit {
    let opts = FitOptions::default();
    let mut best: Option<ModelFit> = None;
    for start in starts {
        let outcome = least_squares(
            |p, out| {
                let phys = LineShapeModel::to_physical(p);
                for (o, (&xi, &yi)) in out.iter_mut().zip(x.iter().zip(y)) {
                    *o = model.eval(&phys, xi) - yi;
                }
            },
            &LineShapeModel::to_fit_space(&start),
            x.len(),
            &opts,
        );
        let candidate = match outcome {
            Ok(rep) => ModelFit {
                model,
                params: LineShapeModel::to_physical(&rep.params),
                rss: rep.rss,
                aic: 0.0,
                converged: true,
                iterations: rep.iterations,
            },
            Err(Error::FitFailure {
                best, cost, iterations, ..
            }) if cost.is_finite() => ModelFit {
                model,
                params: LineShapeModel::to_physical(&best),
                rss: cost,
                aic: 0.0,
                converged: false,
                iterations,
            },
            Err(_) => continue,
        };
        let better = match &best {
            None => true,
            Some(b) => (candidate.converged && !b.converged) || (candidate.converged == b.converged && candidate.rss < b.rss),
        };
        if better {
            best = Some(candidate);
        }
    }
    let mut fit = best.unwrap_or(ModelFit {
        model,
        params: vec![f64::NAN; model.n_params()],
        rss: f64::INFINITY,
        aic: f64::INFINITY,
        converged: false,
        iterations: 0,
    });
    if fit.rss.is_finite() {
        fit.aic = aic(fit.rss, x.len(), model.n_params());
    }
    fit
}

/// Fits both candidate line shapes to `|S₂₁|` and compares them.
pub fn aic_discriminate(line_shape: &ComplexSpectrum) -> Result<ModelComparison> {
    let n = line_shape.len();
    if n < 12 {
        return Err(Error::InvalidParameter("line shape needs at least 12 samples".into()));
    }
    let w = line_shape.grid().as_slice();
    let omega_mid = 0.5 * (w[0] + w[n - 1]);
    let half_span = 0.5 * (w[n - 1] - w[0]);
    let x: Vec<f64> = w.iter().map(|v| (v - omega_mid) / half_span).collect();
    let y = line_shape.magnitudes();

    let ats = fit_model(LineShapeModel::Ats, &x, &y, ats_starts(&x, &y));
    let eit = fit_model(LineShapeModel::Eit, &x, &y, eit_starts(&x, &y));

    let mut diagnostics = Vec::new();
    for f in [&ats, &eit] {
        if !f.converged {
            diagnostics.push(format!(
                "{:?} fit did not converge (rss {:.3e}, {} iterations)",
                f.model, f.rss, f.iterations
            ));
        }
    }
    let (weight_ats, weight_eit) = if ats.aic.is_finite() && eit.aic.is_finite() {
        let wts = akaike_weights(&[ats.aic, eit.aic]);
        (wts[0], wts[1])
    } else {
        diagnostics.push("no finite AIC for at least one model".into());
        (0.5, 0.5)
    };
    Ok(ModelComparison {
        valid: ats.converged && eit.converged,
        ats,
        eit,
        weight_ats,
        weight_eit,
        diagnostics,
        omega_mid,
        half_span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{transmission, ControlDrive, FrequencyGrid, TransmonQubit};
    use crate::units::mhz;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid() -> FrequencyGrid {
        FrequencyGrid::linspace(-1.0, 1.0, 401).unwrap()
    }

    fn from_model(model: LineShapeModel, p: &[f64]) -> ComplexSpectrum {
        ComplexSpectrum::from_fn(grid(), |x| Complex64::new(model.eval(p, x), 0.0)).unwrap()
    }

    #[test]
    fn weights_normalize() {
        let w = akaike_weights(&[10.0, 12.0, 30.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w[0] > w[1] && w[1] > w[2]);
        assert!((w[0] / w[1] - 1.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn ats_self_consistency() {
        let s = from_model(LineShapeModel::Ats, &[0.6, -0.3, 0.08, 0.55, 0.32, 0.09]);
        let c = aic_discriminate(&s).unwrap();
        assert!(c.valid, "{:?}", c.diagnostics);
        assert!(c.weight_ats > 0.999, "{c:?}");
        assert!((c.weight_ats + c.weight_eit - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eit_self_consistency() {
        let s = from_model(LineShapeModel::Eit, &[0.9, 0.02, 0.3, 0.7, 0.05]);
        let c = aic_discriminate(&s).unwrap();
        assert!(c.valid, "{:?}", c.diagnostics);
        assert!(c.weight_eit > 0.999, "{c:?}");
    }

    #[test]
    fn single_qubit_ats_line_shape() {
        let q = TransmonQubit::averaged();
        let drive = ControlDrive::resonant(&q, mhz(40.0));
        let g = FrequencyGrid::centered(q.omega10, mhz(0.25), 240).unwrap();
        let s = ComplexSpectrum::from_fn(g, |w| transmission(&q, &drive, w).unwrap()).unwrap();
        let c = aic_discriminate(&s).unwrap();
        assert!(c.weight_ats > 0.99, "{c:?}");
    }

    #[test]
    fn noise_keeps_weights_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let values: Vec<Complex64> = grid().iter().map(|_| Complex64::new(1.0 + noise.sample(&mut rng), 0.0)).collect();
        let c = aic_discriminate(&ComplexSpectrum::new(grid(), values).unwrap()).unwrap();
        assert!((0.0..=1.0).contains(&c.weight_ats) && (0.0..=1.0).contains(&c.weight_eit));
        assert!((c.weight_ats + c.weight_eit - 1.0).abs() < 1e-9);
    }
}
