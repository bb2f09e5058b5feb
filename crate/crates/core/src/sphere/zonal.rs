use super::{check_dims, check_degree, gegenbauer_at_one, gegenbauer_index, harmonic_dimension, sphere_area, SpherePoint};
use crate::error::{Error, Result};
use crate::needlet::Window;

/// A zonal profile t -> sum_k c_k L_{k,d}(t), where L_{k,d} is the
/// Addition-Formula kernel of the projector onto H^{k,d}.
///
/// Evaluation runs the Gegenbauer recursion once per call, O(max degree).
/// On the circle (mu = 0) the normalized ratio C_k/C_k(1) is cos(k arccos t).
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalSeries {
    d: usize,
    coeffs: Vec<f64>,
    // coeffs[k] * L(k,d) / (|S^{d-1}| C_k(1)), ready for the raw recursion
    scaled: Vec<f64>,
}

impl ZonalSeries {
    pub fn new(d: usize, coeffs: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        if let Some(top) = coeffs.len().checked_sub(1) {
            check_degree(top)?;
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("zonal series coefficient".into()));
        }
        let area = sphere_area(d);
        let mu = gegenbauer_index(d);
        let scaled = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let dim = harmonic_dimension(k, d) as f64;
                if d == 2 {
                    c * dim / area
                } else {
                    c * dim / (area * gegenbauer_at_one(mu, k))
                }
            })
            .collect();
        Ok(Self { d, coeffs, scaled })
    }

    /// The single projector kernel L_{k,d}.
    pub fn single(d: usize, k: usize) -> Result<Self> {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self::new(d, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest degree with a nonzero coefficient (0 for the empty series).
    pub fn band_limit(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    /// A new series with c_k replaced by f(k, c_k).
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        Self::new(self.d, self.coeffs.iter().enumerate().map(|(k, c)| f(k, *c)).collect())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        let n = self.scaled.len();
        if n == 0 {
            return 0.0;
        }
        let mut acc = self.scaled[0];
        if n == 1 {
            return acc;
        }
        if self.d == 2 {
            let (mut prev, mut cur) = (1.0, t);
            acc += self.scaled[1] * cur;
            for s in &self.scaled[2..] {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
                acc += s * cur;
            }
            return acc;
        }
        let mu = gegenbauer_index(self.d);
        let (mut prev, mut cur) = (1.0, 2.0 * mu * t);
        acc += self.scaled[1] * cur;
        for (m, s) in self.scaled[2..].iter().enumerate() {
            let m = (m + 1) as f64;
            let next = (2.0 * (mu + m) * t * cur - (2.0 * mu + m - 1.0) * prev) / (m + 1.0);
            prev = cur;
            cur = next;
            acc += s * cur;
        }
        acc
    }

    /// Values L_{k,d}(t) for k = 0..=k_max, ignoring the coefficients.
    pub fn kernels_at(d: usize, k_max: usize, t: f64) -> Vec<f64> {
        let t = t.clamp(-1.0, 1.0);
        let area = sphere_area(d);
        let mu = gegenbauer_index(d);
        let mut out = Vec::with_capacity(k_max + 1);
        let (mut prev, mut cur) = (1.0, if d == 2 { t } else { 2.0 * mu * t });
        for k in 0..=k_max {
            let raw = match k {
                0 => 1.0,
                1 => cur,
                _ => {
                    let m = (k - 1) as f64;
                    let next = if d == 2 {
                        2.0 * t * cur - prev
                    } else {
                        (2.0 * (mu + m) * t * cur - (2.0 * mu + m - 1.0) * prev) / (m + 1.0)
                    };
                    prev = cur;
                    cur = next;
                    cur
                }
            };
            let norm = if d == 2 { 1.0 } else { gegenbauer_at_one(mu, k) };
            out.push(harmonic_dimension(k, d) as f64 * raw / (area * norm));
        }
        out
    }
}

/// L_{k,d}(x, y) = L(k,d) C_k^{mu(d)}(<x,y>) / (|S^{d-1}| C_k^{mu(d)}(1)).
///
/// On the circle the Chebyshev limit is used, so this is cos(k theta)/pi for k >= 1.
pub fn zonal_kernel(k: usize, d: usize, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    check_dims(x, y)?;
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.dim() });
    }
    Ok(ZonalSeries::single(d, k)?.eval(x.dot(y)))
}

/// Delayed-means kernel K^{a,J}(x,y) = sum_{k < 2^{J+1}} a(k/2^J) L_{k,d}(x,y).
pub fn delayed_means_kernel(window: &Window, level: u32, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    check_dims(x, y)?;
    Ok(window.delayed_means_series(x.dim(), level)?.eval(x.dot(y)))
}

/// A finite sum x -> sum_i w_i S(<c_i, x>) of one zonal profile S placed at
/// several centers. Quadrature-discretized operators, kernel density
/// estimates and linear estimators all take this form.
#[derive(Debug, Clone)]
pub struct ZonalExpansion {
    series: ZonalSeries,
    centers: Vec<SpherePoint>,
    weights: Vec<f64>,
}

impl ZonalExpansion {
    pub fn new(series: ZonalSeries, centers: Vec<SpherePoint>, weights: Vec<f64>) -> Result<Self> {
        if centers.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} centers but {} weights",
                centers.len(),
                weights.len()
            )));
        }
        if let Some(c) = centers.iter().find(|c| c.dim() != series.dim()) {
            return Err(Error::DimensionMismatch { expected: series.dim(), found: c.dim() });
        }
        Ok(Self { series, centers, weights })
    }

    pub fn series(&self) -> &ZonalSeries {
        &self.series
    }

    pub fn centers(&self) -> &[SpherePoint] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.series.dim()
    }

    /// Same centers and weights with a transformed profile.
    pub fn with_series(&self, series: ZonalSeries) -> Result<Self> {
        Self::new(series, self.centers.clone(), self.weights.clone())
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * self.series.eval(c.dot(x)))
            .sum()
    }
}
