//! The hemispherical transform H f(x) = integral of f over {b : <x, b> > 0}.
//!
//! H is self-adjoint and diagonal in spherical harmonics. It kills every even
//! degree k >= 2 and acts on odd degree k = 2p + 1 by
//! lambda_k = (-1)^p |S^{d-2}| (2p-1)!! / ((d-1)(d+1)...(d+2p-1)).

use crate::error::{invalid, Error, Result};
use crate::quadrature::{build_rule, hemisphere_rule, QuadratureRule};
use crate::sphere::{check_degree, sphere_area, SpherePoint, ZonalExpansion, ZonalSeries};

/// Eigenvalue of H on the degree-k harmonics of S^{d-1}. lambda_0 = |S^{d-1}|/2.
pub fn eigenvalue(k: usize, d: usize) -> f64 {
    assert!(d >= 2);
    if k == 0 {
        return sphere_area(d) / 2.0;
    }
    if k.is_multiple_of(2) {
        return 0.0;
    }
    let df = d as f64;
    let mut lambda = sphere_area(d - 1) / (df - 1.0);
    for p in 1..=(k - 1) / 2 {
        let pf = p as f64;
        lambda *= -(2.0 * pf - 1.0) / (df + 2.0 * pf - 1.0);
    }
    lambda
}

/// lambda_{k,d} for k = 0..=k_max.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueTable {
    d: usize,
    values: Vec<f64>,
}

impl EigenvalueTable {
    pub fn new(d: usize, k_max: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        check_degree(k_max)?;
        Ok(Self { d, values: (0..=k_max).map(|k| eigenvalue(k, d)).collect() })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// H f for f band-limited to `degree`, as the zonal sum
/// x -> sum_eta w_eta f(eta) sum_{k <= degree} lambda_k L_k(<x, eta>)
/// over a rule exact to 2 * degree.
pub fn forward_spectral<F>(d: usize, f: F, degree: usize) -> Result<ZonalExpansion>
where
    F: Fn(&SpherePoint) -> f64,
{
    let rule = build_rule(d, 2 * degree)?;
    let series = ZonalSeries::new(d, (0..=degree).map(|k| eigenvalue(k, d)).collect())?;
    let weights = weighted_values(&rule, f)?;
    ZonalExpansion::new(series, rule.nodes().to_vec(), weights)
}

fn weighted_values(rule: &QuadratureRule, f: impl Fn(&SpherePoint) -> f64) -> Result<Vec<f64>> {
    rule.nodes()
        .iter()
        .zip(rule.weights())
        .map(|(x, w)| {
            let v = f(x);
            if v.is_finite() {
                Ok(w * v)
            } else {
                Err(Error::NonFinite(format!("integrand at {:?}", x.coords())))
            }
        })
        .collect()
}

/// H f(x) by quadrature over the hemisphere around `x`, with a rule aligned
/// to the cut. `resolution` is the polynomial degree the rule resolves.
pub fn forward_direct<F>(f: F, x: &SpherePoint, resolution: usize) -> Result<f64>
where
    F: Fn(&SpherePoint) -> f64,
{
    hemisphere_rule(x, resolution)?.integrate(f)
}

/// An odd function band-limited to degree K, stored by its values on an
/// antipodally symmetric rule exact to degree 2K + 1.
#[derive(Debug, Clone)]
pub struct OddFunctionSpectrum {
    band: usize,
    rule: QuadratureRule,
    values: Vec<f64>,
}

/// Relative even-part energy above which input is rejected as not odd.
pub const EVEN_TOLERANCE: f64 = 1e-10;

impl OddFunctionSpectrum {
    pub fn from_fn<F>(d: usize, band: usize, f: F) -> Result<Self>
    where
        F: Fn(&SpherePoint) -> f64,
    {
        let rule = build_rule(d, 2 * band + 1)?;
        let values = rule.nodes().iter().map(f).collect();
        Self::from_values(rule, band, values)
    }

    /// `rule` must be antipodally symmetric and exact to at least 2 * band.
    pub fn from_values(rule: QuadratureRule, band: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::ShapeMismatch(format!("{} values for {} nodes", values.len(), rule.len())));
        }
        if rule.exact_degree() < 2 * band {
            return Err(invalid(format!("rule exact to {} cannot resolve band {band}", rule.exact_degree())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at node {i}")));
        }
        let anti = rule.antipodes().ok_or_else(|| invalid("rule is not antipodally symmetric"))?;
        let mut total = 0.0;
        let mut even = 0.0;
        for (i, w) in rule.weights().iter().enumerate() {
            let v = values[i];
            let e = 0.5 * (v + values[anti[i]]);
            total += w * v * v;
            even += w * e * e;
        }
        if total > 0.0 && even > EVEN_TOLERANCE * total {
            return Err(Error::EvenContent { fraction: even / total, tolerance: EVEN_TOLERANCE });
        }
        Ok(Self { band, rule, values })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn dim(&self) -> usize {
        self.rule.dim()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The function itself: its projection onto odd degrees <= K.
    pub fn evaluator(&self) -> Result<ZonalExpansion> {
        self.odd_expansion(|_| 1.0)
    }

    fn odd_expansion(&self, factor: impl Fn(usize) -> f64) -> Result<ZonalExpansion> {
        let d = self.dim();
        let coeffs = (0..=self.band).map(|k| if k % 2 == 1 { factor(k) } else { 0.0 }).collect();
        let weights = self.values.iter().zip(self.rule.weights()).map(|(v, w)| v * w).collect();
        ZonalExpansion::new(ZonalSeries::new(d, coeffs)?, self.rule.nodes().to_vec(), weights)
    }
}

/// H^{-1} R = sum_{k odd <= K} lambda_k^{-1} P_k R.
pub fn inverse_odd(r: &OddFunctionSpectrum) -> Result<ZonalExpansion> {
    let d = r.dim();
    r.odd_expansion(|k| 1.0 / eigenvalue(k, d))
}

/// ||H^{-1} P||_p / (K^{d/2} ||P||_p), norms by quadrature (grid max for p = inf).
pub fn bernstein_ratio(p_fn: &OddFunctionSpectrum, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("norm index must be >= 1, got {p}")));
    }
    let d = p_fn.dim();
    let k = p_fn.band();
    if k == 0 {
        return Err(invalid("band 0 has no odd content"));
    }
    let inv = inverse_odd(p_fn)?;
    let orig = p_fn.evaluator()?;
    let rule = if p == 2.0 { build_rule(d, 2 * k)? } else { build_rule(d, 8 * k + 16)? };
    let norm = |g: &ZonalExpansion| -> f64 {
        let vals = rule.nodes().iter().map(|x| g.eval(x).abs());
        if p.is_infinite() {
            vals.fold(0.0, f64::max)
        } else {
            vals.zip(rule.weights()).map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    };
    let base = norm(&orig);
    if base <= 1e-300 {
        return Err(invalid("ratio undefined for the zero function"));
    }
    Ok(norm(&inv) / ((k as f64).powf(d as f64 / 2.0) * base))
}

/// f_beta = 2 f^- 1{f^- > 0} at a single value.
#[inline]
pub fn identify_value(f_minus: f64) -> f64 {
    if f_minus > 0.0 {
        2.0 * f_minus
    } else {
        0.0
    }
}

/// x -> 2 f^-(x) 1{f^-(x) > 0}.
pub fn identify_density<F>(f_minus: F) -> impl Fn(&SpherePoint) -> f64
where
    F: Fn(&SpherePoint) -> f64,
{
    move |x| identify_value(f_minus(x))
}

/// Odd part (f(x) - f(-x)) / 2.
pub fn odd_part<F>(f: F) -> impl Fn(&SpherePoint) -> f64
where
    F: Fn(&SpherePoint) -> f64,
{
    move |x| 0.5 * (f(x) - f(&x.antipode()))
}

/// The odd extension R of r from H^+ = {x_1 >= 0}: R = r on H^+, R(x) = -r(-x)
/// otherwise. On the boundary x_1 = 0 the side is decided by the sign of the
/// first nonzero coordinate, so R stays exactly odd there too.
pub fn extend_regression<F>(r: F) -> impl Fn(&SpherePoint) -> f64
where
    F: Fn(&SpherePoint) -> f64,
{
    move |x| {
        if upper_side(x) {
            r(x)
        } else {
            -r(&x.antipode())
        }
    }
}

fn upper_side(x: &SpherePoint) -> bool {
    match x.coords().iter().find(|c| **c != 0.0) {
        Some(c) => *c > 0.0,
        None => true,
    }
}
