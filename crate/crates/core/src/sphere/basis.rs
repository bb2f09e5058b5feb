//! Explicit orthonormal real harmonics on S^1 and S^2.
//!
//! Only used where a spectral representation saves pairwise kernel sums
//! (the design-density fit); every other code path works through the
//! Addition Formula and is dimension-agnostic.

use super::{harmonic_dimension, SpherePoint};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Orthonormal basis (h_{k,l}) of the harmonics of degree <= `degree`, d in {2, 3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicBasis {
    d: usize,
    degree: usize,
}

impl HarmonicBasis {
    pub fn new(d: usize, degree: usize) -> Result<Self> {
        if !(2..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        super::check_degree(degree)?;
        Ok(Self { d, degree })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Total number of basis functions.
    pub fn len(&self) -> usize {
        (0..=self.degree).map(|k| harmonic_dimension(k, self.d) as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Offset of the first degree-k function in [`Self::eval_all`]'s output.
    pub fn offset(&self, k: usize) -> usize {
        (0..k).map(|m| harmonic_dimension(m, self.d) as usize).sum()
    }

    /// All basis functions at `x`, grouped by increasing degree.
    pub fn eval_all(&self, x: &SpherePoint) -> Vec<f64> {
        match self.d {
            2 => self.circle(x),
            _ => self.sphere(x),
        }
    }

    fn circle(&self, x: &SpherePoint) -> Vec<f64> {
        let c = x.coords();
        let th = c[1].atan2(c[0]);
        let mut out = Vec::with_capacity(2 * self.degree + 1);
        out.push(1.0 / (2.0 * PI).sqrt());
        let norm = 1.0 / PI.sqrt();
        for k in 1..=self.degree {
            let (s, co) = (k as f64 * th).sin_cos();
            out.push(norm * co);
            out.push(norm * s);
        }
        out
    }

    #[allow(clippy::needless_range_loop)]
    fn sphere(&self, x: &SpherePoint) -> Vec<f64> {
        let c = x.coords();
        let t = c[2].clamp(-1.0, 1.0);
        let s = (1.0 - t * t).max(0.0).sqrt();
        let phi = c[1].atan2(c[0]);
        let n = self.degree;
        // pbar[l][m]: associated Legendre functions orthonormal on [-1, 1]
        let mut pbar = vec![vec![0.0; n + 1]; n + 1];
        pbar[0][0] = std::f64::consts::FRAC_1_SQRT_2;
        for m in 1..=n {
            let mf = m as f64;
            pbar[m][m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * pbar[m - 1][m - 1];
        }
        for m in 0..n {
            pbar[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * t * pbar[m][m];
        }
        for m in 0..=n {
            for l in (m + 2)..=n {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lp = lf - 1.0;
                let b = ((lp * lp - mf * mf) / (4.0 * lp * lp - 1.0)).sqrt();
                pbar[l][m] = a * (t * pbar[l - 1][m] - b * pbar[l - 2][m]);
            }
        }
        let mut out = Vec::with_capacity((n + 1) * (n + 1));
        let azimuth_norm = 1.0 / PI.sqrt();
        for (l, row) in pbar.iter().enumerate() {
            out.push(row[0] / (2.0 * PI).sqrt());
            for (m, p) in row.iter().enumerate().take(l + 1).skip(1) {
                let (sm, cm) = (m as f64 * phi).sin_cos();
                out.push(azimuth_norm * p * cm);
                out.push(azimuth_norm * p * sm);
            }
        }
        out
    }
}

/// A band-limited function stored by its coefficients in a [`HarmonicBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicExpansion {
    basis: HarmonicBasis,
    coeffs: Vec<f64>,
}

impl HarmonicExpansion {
    pub fn new(basis: HarmonicBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::ShapeMismatch(format!(
                "basis has {} functions, got {} coefficients",
                basis.len(),
                coeffs.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> HarmonicBasis {
        self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        self.basis.eval_all(x).iter().zip(&self.coeffs).map(|(h, c)| h * c).sum()
    }
}
