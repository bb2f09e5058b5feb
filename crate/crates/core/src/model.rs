//! Synthetic data from the random-coefficients binary choice model
//! Y = 2 * 1{<X, beta> > 0} - 1 with X independent of beta.

use crate::error::{invalid, Error, Result};
use crate::hemispherical::forward_direct;
use crate::quadrature::{gauss_legendre, hemisphere_rule_composite};
use crate::sphere::{gamma_half, sphere_area, SpherePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// RNG stream carrying the design draws.
pub const STREAM_DESIGN: u64 = 1;
/// RNG stream carrying the latent coefficient draws.
pub const STREAM_BETA: u64 = 2;
/// RNG stream for the first-stage design sample of the plug-in estimator.
pub const STREAM_FIRST_STAGE: u64 = 3;

/// A ChaCha8 generator on one of the documented streams.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of replication `index` derived from a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on the hemisphere {<x, axis> >= 0}.
pub fn uniform_hemisphere_point<R: Rng + ?Sized>(axis: &SpherePoint, rng: &mut R) -> SpherePoint {
    loop {
        let v: Vec<f64> = (0..axis.dim()).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(p) = SpherePoint::normalized(v) {
            return if axis.dot(&p) < 0.0 { p.antipode() } else { p };
        }
    }
}

// integral of t^m (1 - t^2)^{(d-3)/2} over [0, 1] = B((m+1)/2, (d-1)/2) / 2
fn polar_moment(m: usize, d: usize) -> f64 {
    0.5 * gamma_half(m + 1) * gamma_half(d - 1) / gamma_half(m + d)
}

/// |S^{d-2}| * integral_0^{pi/2} g(cos th) sin^{d-2}(th) dth, for zonal g on a hemisphere.
fn zonal_hemisphere_mass(d: usize, g: impl Fn(f64) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(16);
    let panels = 128;
    let h = PI / 2.0 / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        for (x, w) in gx.iter().zip(&gw) {
            let th = p as f64 * h + 0.5 * h * (x + 1.0);
            acc += w * g(th.cos()) * th.sin().powi(d as i32 - 2);
        }
    }
    sphere_area(d - 1) * 0.5 * h * acc
}

type DensityFn = Arc<dyn Fn(&SpherePoint) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DesignKind {
    UniformHemisphere,
    /// f proportional to <x, e_1>^alpha on H^+.
    BoundaryVanishing { alpha: u32 },
    Custom { name: String, f: DensityFn },
}

impl fmt::Debug for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformHemisphere => write!(f, "UniformHemisphere"),
            Self::BoundaryVanishing { alpha } => write!(f, "BoundaryVanishing {{ alpha: {alpha} }}"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Density f_X of the regressors, supported on H^+ = {x_1 >= 0}.
#[derive(Debug, Clone)]
pub struct DesignDensity {
    d: usize,
    kind: DesignKind,
    scale: f64,
    sup: f64,
    inf: f64,
}

impl DesignDensity {
    pub fn uniform_hemisphere(d: usize) -> Result<Self> {
        check_dim(d)?;
        let c = 2.0 / sphere_area(d);
        Ok(Self { d, kind: DesignKind::UniformHemisphere, scale: c, sup: c, inf: c })
    }

    pub fn boundary_vanishing(d: usize, alpha: u32) -> Result<Self> {
        check_dim(d)?;
        if alpha == 0 {
            return Err(invalid("boundary_vanishing needs alpha >= 1"));
        }
        let c = 1.0 / (sphere_area(d - 1) * polar_moment(alpha as usize, d));
        Ok(Self { d, kind: DesignKind::BoundaryVanishing { alpha }, scale: c, sup: c, inf: 0.0 })
    }

    /// A user density on H^+ with known bounds `inf <= f <= sup` there.
    pub fn custom<F>(d: usize, name: &str, f: F, inf: f64, sup: f64) -> Result<Self>
    where
        F: Fn(&SpherePoint) -> f64 + Send + Sync + 'static,
    {
        check_dim(d)?;
        if !(sup.is_finite() && sup > 0.0 && inf >= 0.0 && inf <= sup) {
            return Err(invalid(format!("custom design needs 0 <= inf <= sup < inf, got [{inf}, {sup}]")));
        }
        Ok(Self { d, kind: DesignKind::Custom { name: name.into(), f: Arc::new(f) }, scale: 1.0, sup, inf })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &DesignKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            DesignKind::UniformHemisphere => "uniform_hemisphere".into(),
            DesignKind::BoundaryVanishing { alpha } => format!("boundary_vanishing(alpha={alpha})"),
            DesignKind::Custom { name, .. } => name.clone(),
        }
    }

    /// f_X(x); zero off H^+.
    pub fn eval(&self, x: &SpherePoint) -> f64 {
        if !x.in_upper_hemisphere() {
            return 0.0;
        }
        match &self.kind {
            DesignKind::UniformHemisphere => self.scale,
            DesignKind::BoundaryVanishing { alpha } => self.scale * x.coords()[0].powi(*alpha as i32),
            DesignKind::Custom { f, .. } => f(x),
        }
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// Lower bound of f_X on H^+ (0 when it vanishes on the boundary).
    pub fn inf(&self) -> f64 {
        self.inf
    }

    /// ||1/f_X||_inf over H^+, `None` when unbounded.
    pub fn inv_sup(&self) -> Option<f64> {
        (self.inf > 0.0).then(|| 1.0 / self.inf)
    }

    /// Mass on H^+ by composite quadrature; should be 1.
    pub fn mass(&self) -> Result<f64> {
        let e1 = SpherePoint::north(self.d);
        hemisphere_rule_composite(&e1, 32, 16, 128)?.integrate(|x| self.eval(x))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
        sample_design(self, n, seed)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(())
}

/// i.i.d. draws from f_X on the design stream of `seed`.
pub fn sample_design(density: &DesignDensity, n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
    let mut rng = stream_rng(seed, STREAM_DESIGN);
    draw_design(density, n, &mut rng)
}

pub(crate) fn draw_design<R: Rng + ?Sized>(density: &DesignDensity, n: usize, rng: &mut R) -> Result<Vec<SpherePoint>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let e1 = SpherePoint::north(density.d);
    if let DesignKind::UniformHemisphere = density.kind {
        return Ok((0..n).map(|_| uniform_hemisphere_point(&e1, rng)).collect());
    }
    rejection(n, density.sup, rng, |r| uniform_hemisphere_point(&e1, r), |x| density.eval(x))
}

fn rejection<R: Rng + ?Sized>(
    n: usize,
    envelope: f64,
    rng: &mut R,
    propose: impl Fn(&mut R) -> SpherePoint,
    f: impl Fn(&SpherePoint) -> f64,
) -> Result<Vec<SpherePoint>> {
    if !(envelope.is_finite() && envelope > 0.0) {
        return Err(invalid("rejection sampling needs a finite positive envelope"));
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = propose(rng);
        let u: f64 = rng.random();
        if u * envelope < f(&x) {
            out.push(x);
        }
    }
    Ok(out)
}

/// A mixture component: weight, mean direction, vMF concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: SpherePoint,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    /// exp(-kappa / <x, mu>) on {<x, mu> > 0}.
    HemisphereBump { kappa: f64 },
    /// (t + alpha t^3)_+ with t = <x, mu>; the odd part is a cubic.
    BandLimitedPositive { alpha: f64 },
    /// sum_i w_i exp(kappa_i (<x, mu_i> - 1)) tapered by exp(1 - 1/<x, mu>) on {<x, mu> > 0}.
    Mixture { components: Vec<MixtureComponent> },
}

/// Density f_beta of the random coefficients, supported in the open
/// hemisphere {<x, mu> > 0}.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDensity {
    d: usize,
    mu: SpherePoint,
    kind: CoefficientKind,
    norm: f64,
    sup: f64,
}

impl CoefficientDensity {
    pub fn hemisphere_bump(mu: SpherePoint, kappa: f64) -> Result<Self> {
        let d = mu.dim();
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        // exp(kappa (1 - 1/t)) keeps the profile at O(1) for large kappa
        let mass = zonal_hemisphere_mass(d, |t| bump_profile(kappa, t));
        Ok(Self { d, mu, kind: CoefficientKind::HemisphereBump { kappa }, norm: 1.0 / mass, sup: 1.0 / mass })
    }

    pub fn band_limited_positive(mu: SpherePoint, alpha: f64) -> Result<Self> {
        let d = mu.dim();
        if !(alpha.is_finite() && alpha > -1.0) {
            return Err(invalid(format!("alpha must exceed -1, got {alpha}")));
        }
        let mass = sphere_area(d - 1) * (polar_moment(1, d) + alpha * polar_moment(3, d));
        let peak = if alpha >= -1.0 / 3.0 { 1.0 + alpha } else { (2.0 / 3.0) / (-3.0 * alpha).sqrt() };
        Ok(Self { d, mu, kind: CoefficientKind::BandLimitedPositive { alpha }, norm: 1.0 / mass, sup: peak / mass })
    }

    /// Components must share the support axis `mu`; their weights are normalized.
    pub fn mixture(mu: SpherePoint, components: Vec<MixtureComponent>) -> Result<Self> {
        let d = mu.dim();
        if components.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if components.iter().any(|c| !(c.weight > 0.0 && c.kappa >= 0.0) || c.mean.dim() != d) || !total.is_finite() {
            return Err(invalid("mixture components need positive weights, kappa >= 0 and matching dimension"));
        }
        let components: Vec<MixtureComponent> =
            components.into_iter().map(|c| MixtureComponent { weight: c.weight / total, ..c }).collect();
        let mut out = Self { d, mu: mu.clone(), kind: CoefficientKind::Mixture { components }, norm: 1.0, sup: 1.0 };
        let mass = hemisphere_rule_composite(&mu, 64, 16, 256)?.integrate(|x| out.unnormalized(x))?;
        out.norm = 1.0 / mass;
        out.sup = 1.0 / mass;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mean_direction(&self) -> &SpherePoint {
        &self.mu
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            CoefficientKind::HemisphereBump { kappa } => format!("hemisphere_bump(kappa={kappa})"),
            CoefficientKind::BandLimitedPositive { alpha } => format!("band_limited_positive(alpha={alpha})"),
            CoefficientKind::Mixture { components } => format!("mixture({} components)", components.len()),
        }
    }

    /// Upper bound of f_beta, used as rejection envelope.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    fn unnormalized(&self, x: &SpherePoint) -> f64 {
        let t = self.mu.dot(x);
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            CoefficientKind::HemisphereBump { kappa } => bump_profile(*kappa, t),
            CoefficientKind::BandLimitedPositive { alpha } => t + alpha * t * t * t,
            CoefficientKind::Mixture { components } => {
                let taper = bump_profile(1.0, t);
                taper * components.iter().map(|c| c.weight * (c.kappa * (c.mean.dot(x) - 1.0)).exp()).sum::<f64>()
            }
        }
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        self.norm * self.unnormalized(x)
    }

    /// Odd part f_beta^-(x) = (f(x) - f(-x)) / 2.
    pub fn odd_part(&self, x: &SpherePoint) -> f64 {
        0.5 * (self.eval(x) - self.eval(&x.antipode()))
    }

    /// Mass by composite quadrature on the supporting hemisphere.
    pub fn mass(&self) -> Result<f64> {
        hemisphere_rule_composite(&self.mu, 64, 16, 256)?.integrate(|x| self.eval(x))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
        sample_beta(self, n, seed)
    }
}

fn bump_profile(kappa: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (kappa * (1.0 - 1.0 / t)).exp()
    }
}

/// i.i.d. draws from f_beta on the coefficient stream of `seed`.
pub fn sample_beta(density: &CoefficientDensity, n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
    let mut rng = stream_rng(seed, STREAM_BETA);
    draw_beta(density, n, &mut rng)
}

fn draw_beta<R: Rng + ?Sized>(density: &CoefficientDensity, n: usize, rng: &mut R) -> Result<Vec<SpherePoint>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    rejection(n, density.sup, rng, |r| uniform_hemisphere_point(&density.mu, r), |x| density.eval(x))
}

/// Observations (x_i, y_i) with x_i in H^+ and y_i in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<SpherePoint>,
    pub y: Vec<i8>,
    pub seed: u64,
}

impl Sample {
    pub fn new(x: Vec<SpherePoint>, y: Vec<i8>, seed: u64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!("{} regressors, {} labels", x.len(), y.len())));
        }
        if let Some(first) = x.first() {
            let d = first.dim();
            if let Some(p) = x.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
            }
        }
        if let Some(i) = x.iter().position(|p| !p.in_upper_hemisphere()) {
            return Err(Error::OutOfRange(format!("observation {i} has x_1 < 0")));
        }
        if let Some(i) = y.iter().position(|v| *v != 1 && *v != -1) {
            return Err(Error::OutOfRange(format!("label {i} is {}, expected -1 or 1", y[i])));
        }
        Ok(Self { x, y, seed })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.x.first().map(SpherePoint::dim)
    }
}

/// The label rule: +1 iff <x, beta> > 0; ties give -1.
#[inline]
pub fn choice(x: &SpherePoint, beta: &SpherePoint) -> i8 {
    if x.dot(beta) > 0.0 {
        1
    } else {
        -1
    }
}

/// n observations with X and beta drawn on independent streams of `seed`.
pub fn generate(design: &DesignDensity, coeff: &CoefficientDensity, n: usize, seed: u64) -> Result<Sample> {
    if design.dim() != coeff.dim() {
        return Err(Error::DimensionMismatch { expected: design.dim(), found: coeff.dim() });
    }
    let x = sample_design(design, n, seed)?;
    let beta = sample_beta(coeff, n, seed)?;
    let y = x.iter().zip(&beta).map(|(x, b)| choice(x, b)).collect();
    Sample::new(x, y, seed)
}

/// Quadrature resolution of [`choice_probability`].
const CHOICE_PANELS: usize = 32;

/// P(Y = 1 | X = x) = H(f_beta)(x).
pub fn choice_probability(coeff: &CoefficientDensity, x: &SpherePoint) -> Result<f64> {
    if x.dim() != coeff.dim() {
        return Err(Error::DimensionMismatch { expected: coeff.dim(), found: x.dim() });
    }
    if let CoefficientKind::BandLimitedPositive { .. } = coeff.kind {
        // the kink of (t)_+ along <b, mu> = 0 needs finer panels
        let rule = hemisphere_rule_composite(x, 4 * CHOICE_PANELS, 12, 160)?;
        return rule.integrate(|b| coeff.eval(b));
    }
    let rule = hemisphere_rule_composite(x, CHOICE_PANELS, 12, 160)?;
    rule.integrate(|b| coeff.eval(b))
}

/// Choice probability of a smooth band-limited density by the aligned polynomial rule.
pub fn choice_probability_polynomial<F>(f: F, x: &SpherePoint, degree: usize) -> Result<f64>
where
    F: Fn(&SpherePoint) -> f64,
{
    forward_direct(f, x, degree)
}
