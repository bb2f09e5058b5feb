//! First-stage estimate of the design density f_X on H^+.
//!
//! Each observation and its antipode get weight one in a delayed-means kernel
//! estimate, so only even degrees survive and the estimate has unit mass on
//! H^+. On S^1 and S^2 the sum is accumulated in an explicit harmonic basis,
//! which makes evaluation independent of the fit-sample size.

use crate::error::{invalid, Error, Result};
use crate::estimator::DesignWeight;
use crate::needlet::Window;
use crate::par;
use crate::sphere::{HarmonicBasis, HarmonicExpansion, SpherePoint, ZonalExpansion, ZonalSeries};

/// Default kernel level: largest J with 2^{J(d-1)} <= sqrt(n).
pub fn default_level(n: usize, d: usize) -> u32 {
    let bound = (n as f64).sqrt();
    let mut j = 0;
    while j < 10 && 2f64.powi(((j + 1) * (d as u32 - 1)) as i32) <= bound {
        j += 1;
    }
    j
}

/// Default trim t = (log n / n)^{1/4}.
pub fn default_trim(n: usize) -> f64 {
    let n = (n.max(2)) as f64;
    (n.ln() / n).powf(0.25)
}

#[derive(Debug, Clone)]
enum Repr {
    Harmonic(HarmonicExpansion),
    Zonal(ZonalExpansion),
}

/// f_X_hat(x) = (1/n) sum_i [K(x, x_i) + K(x, -x_i)], K the delayed-means kernel at level J_x.
#[derive(Debug, Clone)]
pub struct DesignDensityEstimate {
    d: usize,
    level: u32,
    n_fit: usize,
    repr: Repr,
}

/// Fits the reflected kernel estimate; `level = None` uses [`default_level`].
pub fn fit_design(xs: &[SpherePoint], level: Option<u32>, window: &Window) -> Result<DesignDensityEstimate> {
    let first = xs.first().ok_or(Error::SampleTooSmall { needed: 1, got: 0 })?;
    let d = first.dim();
    if let Some(p) = xs.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
    }
    let n = xs.len();
    let level = level.unwrap_or_else(|| default_level(n, d));
    let series = window.delayed_means_series(d, level)?;
    let even = series.map(|k, a| if k % 2 == 0 { a } else { 0.0 })?;
    let scale = 2.0 / n as f64;
    let repr = if d <= 3 {
        let basis = HarmonicBasis::new(d, even.coeffs().len() - 1)?;
        let rows = par::map_slice(xs, |x| basis.eval_all(x));
        let mut coeffs = vec![0.0; basis.len()];
        for row in &rows {
            for (c, h) in coeffs.iter_mut().zip(row) {
                *c += h;
            }
        }
        for (k, a) in even.coeffs().iter().enumerate() {
            for c in &mut coeffs[basis.offset(k)..basis.offset(k + 1)] {
                *c *= scale * a;
            }
        }
        Repr::Harmonic(HarmonicExpansion::new(basis, coeffs)?)
    } else {
        Repr::Zonal(ZonalExpansion::new(even, xs.to_vec(), vec![scale; n])?)
    };
    Ok(DesignDensityEstimate { d, level, n_fit: n, repr })
}

impl DesignDensityEstimate {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_fit(&self) -> usize {
        self.n_fit
    }

    /// Untrimmed estimate; an even function, meaningful on H^+. May be negative.
    pub fn eval(&self, x: &SpherePoint) -> f64 {
        match &self.repr {
            Repr::Harmonic(h) => h.eval(x),
            Repr::Zonal(z) => z.eval(x),
        }
    }

    /// max(f_X_hat, t); fails unless t > 0.
    pub fn trim(self, t: f64) -> Result<TrimmedEstimate> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("trim level must be positive, got {t}")));
        }
        Ok(TrimmedEstimate { estimate: self, t })
    }

    /// The same estimate summed directly over the (reflected) observations; used for cross-checks.
    pub fn direct_eval(xs: &[SpherePoint], level: u32, window: &Window, x: &SpherePoint) -> Result<f64> {
        let d = x.dim();
        let series: ZonalSeries = window.delayed_means_series(d, level)?;
        let n = xs.len() as f64;
        Ok(xs.iter().map(|c| series.eval(c.dot(x)) + series.eval(-c.dot(x))).sum::<f64>() / n)
    }
}

/// max(f_X_hat, t), with ||1/f|| reported as 1/t.
#[derive(Debug, Clone)]
pub struct TrimmedEstimate {
    estimate: DesignDensityEstimate,
    t: f64,
}

impl TrimmedEstimate {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn estimate(&self) -> &DesignDensityEstimate {
        &self.estimate
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        self.estimate.eval(x).max(self.t)
    }

    pub fn inv_sup(&self) -> f64 {
        1.0 / self.t
    }
}

impl DesignWeight for TrimmedEstimate {
    fn density(&self, x: &SpherePoint) -> f64 {
        self.eval(x)
    }

    fn inv_sup(&self) -> Option<f64> {
        Some(1.0 / self.t)
    }
}
