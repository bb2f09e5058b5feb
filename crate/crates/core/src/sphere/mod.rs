//! Harmonic analysis on the unit sphere S^{d-1}.
//!
//! Points, surface areas, dimensions of the harmonic eigenspaces H^{k,d},
//! Gegenbauer polynomials and the zonal projector kernels built from them.

mod basis;
mod gegenbauer;
mod zonal;

pub use basis::{HarmonicBasis, HarmonicExpansion};
pub use gegenbauer::{gegenbauer_eval, gegenbauer_at_one};
pub use zonal::{delayed_means_kernel, zonal_kernel, ZonalExpansion, ZonalSeries};

use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Largest harmonic degree any evaluator accepts.
pub const DEGREE_CAP: usize = 4096;

const NORM_TOL: f64 = 1e-12;

/// A unit vector of R^d, d >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(Box<[f64]>);

impl SpherePoint {
    /// Wraps `coords`, which must already have unit norm (within 1e-12).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid(format!("sphere points need d >= 2, got {}", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("sphere point coordinate".into()));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("point has norm {norm}, expected 1")));
        }
        Ok(Self(coords.into_boxed_slice()))
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid(format!("sphere points need d >= 2, got {}", coords.len())));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self(coords.into_iter().map(|c| c / norm).collect()))
    }

    /// The point at angle `theta` on the circle S^1.
    pub fn from_angle(theta: f64) -> Self {
        Self(vec![theta.cos(), theta.sin()].into_boxed_slice())
    }

    /// Spherical coordinates on S^2: polar cosine `t` about the last axis and azimuth `phi`.
    pub fn from_polar(t: f64, phi: f64) -> Self {
        let t = t.clamp(-1.0, 1.0);
        let s = (1.0 - t * t).max(0.0).sqrt();
        Self(vec![s * phi.cos(), s * phi.sin(), t].into_boxed_slice())
    }

    /// The basis vector e_{axis+1} of R^d.
    pub fn basis(d: usize, axis: usize) -> Self {
        assert!(axis < d && d >= 2);
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        Self(v.into_boxed_slice())
    }

    /// The intercept axis e_1 = (1, 0, ..., 0) defining H^+.
    pub fn north(d: usize) -> Self {
        Self::basis(d, 0)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Inner product; callers guarantee matching dimensions.
    #[inline]
    pub fn dot(&self, other: &SpherePoint) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn checked_dot(&self, other: &SpherePoint) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self.dot(other))
    }

    pub fn antipode(&self) -> SpherePoint {
        Self(self.0.iter().map(|c| -c).collect())
    }

    /// Whether the point lies in the closed hemisphere H^+ = {x : x_1 >= 0}.
    #[inline]
    pub fn in_upper_hemisphere(&self) -> bool {
        self.0[0] >= 0.0
    }
}

pub(crate) fn check_dims(x: &SpherePoint, y: &SpherePoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    Ok(())
}

/// Gamma(m/2) for a positive integer m, exact up to rounding.
pub(crate) fn gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    let (mut value, mut arg) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// Surface area |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2) of the unit sphere in R^d.
///
/// `d = 1` gives |S^0| = 2 (two points), which the eigenvalue formulas use.
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "sphere_area needs d >= 1");
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// mu(d) = (d - 2) / 2, the Gegenbauer index of the zonal kernels.
#[inline]
pub fn gegenbauer_index(d: usize) -> f64 {
    (d as f64 - 2.0) / 2.0
}

/// Dimension L(k,d) of the space H^{k,d} of degree-k spherical harmonics.
pub fn harmonic_dimension(k: usize, d: usize) -> u64 {
    assert!(d >= 2);
    if k == 0 {
        return 1;
    }
    if d == 2 {
        return 2;
    }
    // (2k+d-2)/(k+d-2) * binom(k+d-2, k), kept in integers.
    let top = (k + d - 2) as u128;
    let mut binom: u128 = 1;
    for i in 1..=(d - 2) as u128 {
        binom = binom * (top - (d as u128 - 2) + i) / i;
    }
    let numer = (2 * k + d - 2) as u128 * binom;
    (numer / top) as u64
}

/// Degree bookkeeping for one harmonic eigenspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicDegreeInfo {
    pub k: usize,
    pub d: usize,
    pub dim: u64,
    pub mu: f64,
}

impl HarmonicDegreeInfo {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        check_degree(k)?;
        Ok(Self { k, d, dim: harmonic_dimension(k, d), mu: gegenbauer_index(d) })
    }
}

pub(crate) fn check_degree(k: usize) -> Result<()> {
    if k > DEGREE_CAP {
        return Err(Error::DegreeCap { degree: k, cap: DEGREE_CAP });
    }
    Ok(())
}

/// Great-circle distance arccos<x,y> in [0, pi].
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    Ok(x.checked_dot(y)?.clamp(-1.0, 1.0).acos())
}

/// Completes `x` to an orthonormal basis of R^d; the first vector returned is `x`.
pub(crate) fn orthonormal_frame(x: &SpherePoint) -> Vec<Vec<f64>> {
    let d = x.dim();
    let mut frame: Vec<Vec<f64>> = vec![x.coords().to_vec()];
    for axis in 0..d {
        if frame.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        for _ in 0..2 {
            for u in &frame {
                let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-8 {
            frame.push(v.into_iter().map(|c| c / norm).collect());
        }
    }
    frame
}
