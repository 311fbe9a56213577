use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::FrequencyGrid;
use crate::units::to_hz;

/// Complex S₂₁ samples on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

#[derive(Serialize)]
struct CsvRow {
    #[serde(rename = "frequency_Hz")]
    frequency_hz: f64,
    #[serde(rename = "re_S21")]
    re: f64,
    #[serde(rename = "im_S21")]
    im: f64,
    #[serde(rename = "abs_S21")]
    abs: f64,
    #[serde(rename = "arg_S21_rad")]
    arg: f64,
}

impl ComplexSpectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Shape(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite S21 at index {i}")));
        }
        Ok(ComplexSpectrum { grid, values })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.iter().map(f).collect();
        Self::new(grid, values)
    }

    /// S₂₁ ≡ 1.
    pub fn unity(grid: FrequencyGrid) -> Self {
        let values = vec![Complex64::new(1.0, 0.0); grid.len()];
        ComplexSpectrum { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    fn check_grid(&self, other: &ComplexSpectrum) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape("spectra are sampled on different grids".into()));
        }
        Ok(())
    }

    /// Pointwise product.
    pub fn product(&self, other: &ComplexSpectrum) -> Result<ComplexSpectrum> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(ComplexSpectrum {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Pointwise quotient, guarding against vanishing denominators.
    pub fn quotient(&self, other: &ComplexSpectrum) -> Result<ComplexSpectrum> {
        self.check_grid(other)?;
        if let Some(index) = other.values.iter().position(|v| v.norm_sqr() == 0.0) {
            return Err(Error::DivisionGuard { index });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a / b).collect();
        Ok(ComplexSpectrum {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexSpectrum {
        ComplexSpectrum {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Linear interpolation of Re and Im separately; `None` outside the grid.
    pub fn interpolate(&self, omega: f64) -> Option<Complex64> {
        let w = self.grid.as_slice();
        if omega < w[0] || omega > w[w.len() - 1] {
            return None;
        }
        let hi = w.partition_point(|&x| x < omega);
        if hi < w.len() && w[hi] == omega {
            return Some(self.values[hi]);
        }
        let lo = hi - 1;
        let s = (omega - w[lo]) / (w[hi] - w[lo]);
        Some(self.values[lo] * (1.0 - s) + self.values[hi] * s)
    }

    /// CSV with columns `frequency_Hz, re_S21, im_S21, abs_S21, arg_S21_rad`.
    /// The phase is the principal value; unwrapping is left to the consumer.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (omega, v) in self.grid.iter().zip(&self.values) {
            w.serialize(CsvRow {
                frequency_hz: to_hz(omega),
                re: v.re,
                im: v.im,
                abs: v.norm(),
                arg: v.arg(),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_linear_in_re_im() {
        let grid = FrequencyGrid::new(vec![0.0, 1.0, 3.0]).unwrap();
        let s = ComplexSpectrum::new(
            grid,
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(s.interpolate(0.5), Some(Complex64::new(0.5, 0.5)));
        assert_eq!(s.interpolate(2.0), Some(Complex64::new(-0.5, 0.5)));
        assert_eq!(s.interpolate(3.0), Some(Complex64::new(-1.0, 0.0)));
        assert_eq!(s.interpolate(3.5), None);
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        let grid = FrequencyGrid::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            ComplexSpectrum::new(grid, vec![Complex64::new(1.0, 0.0)]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn csv_header_and_units() {
        let grid = FrequencyGrid::new(vec![crate::units::ghz(1.0)]).unwrap();
        let s = ComplexSpectrum::new(grid, vec![Complex64::new(0.0, 2.0)]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "frequency_Hz,re_S21,im_S21,abs_S21,arg_S21_rad");
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((row[0] - 1e9).abs() < 1e-3);
        assert_eq!(row[3], 2.0);
        assert!((row[4] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
