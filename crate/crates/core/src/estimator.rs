//! Needlet estimator of f_beta with data-driven hard thresholds.
//!
//! For each needlet, G_{j,xi}(x, y) = omega (y / f_X(x)) sum_{k odd} b(k/2^{j-1}) / lambda_k L_k(<x, xi>)
//! is an unbiased estimate of <f_beta^-, psi_{j,xi}>. Its sample mean is kept iff
//! it exceeds T = 2 sqrt(2 gamma) t_n sigma + (28/3) M gamma log n / (n - 1),
//! where sigma is the sample standard deviation of G and M bounds |G - E G|.

use crate::error::{invalid, Error, Result};
use crate::hemispherical::{eigenvalue, identify_value};
use crate::model::{DesignDensity, Sample};
use crate::needlet::{CoefficientPyramid, NeedletFrame, Synthesis, Window};
use crate::par;
use crate::sphere::{SpherePoint, ZonalExpansion, ZonalSeries, DEGREE_CAP};
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

/// Safety factor applied to the measured sup of the G profile.
pub const SUP_MARGIN: f64 = 1.1;
/// Default confidence exponent, max(p/2, z/2 + 1) + 0.1 at p = z = 2.
pub const DEFAULT_GAMMA: f64 = 2.1;

/// Divisor used for the design density inside G.
pub trait DesignWeight: Sync {
    /// Density value at an observation; must be positive there.
    fn density(&self, x: &SpherePoint) -> f64;
    /// ||1/f||_inf of the weight, `None` when unbounded.
    fn inv_sup(&self) -> Option<f64>;
}

impl DesignWeight for DesignDensity {
    fn density(&self, x: &SpherePoint) -> f64 {
        self.eval(x)
    }

    fn inv_sup(&self) -> Option<f64> {
        DesignDensity::inv_sup(self)
    }
}

/// A known design density trimmed from below: max(f_X, t).
#[derive(Debug, Clone, Copy)]
pub struct TrimmedDesign<'a> {
    design: &'a DesignDensity,
    t: f64,
}

impl<'a> TrimmedDesign<'a> {
    pub fn new(design: &'a DesignDensity, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) || (t == 0.0 && design.inf() == 0.0) {
            return Err(invalid(format!("trim level {t} leaves 1/f_X unbounded for {}", design.name())));
        }
        Ok(Self { design, t })
    }
}

impl DesignWeight for TrimmedDesign<'_> {
    fn density(&self, x: &SpherePoint) -> f64 {
        self.design.eval(x).max(self.t)
    }

    fn inv_sup(&self) -> Option<f64> {
        Some(1.0 / self.t.max(self.design.inf()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ideal,
    Plugin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub gamma: f64,
    /// Top level; `None` selects it from n, d and ||1/f_X||.
    pub j_max: Option<u32>,
    pub window: Window,
    pub mode: Mode,
    /// Trim level t; in ideal mode it only serves as surrogate for an unbounded 1/f_X.
    pub trim: f64,
    /// Loss index the defaults are tuned for.
    pub p: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { gamma: DEFAULT_GAMMA, j_max: None, window: Window::default(), mode: Mode::Ideal, trim: 0.0, p: 2.0 }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(invalid(format!("gamma must be >= 1, got {}", self.gamma)));
        }
        if !(self.trim >= 0.0 && self.trim.is_finite()) {
            return Err(invalid(format!("trim level must be >= 0, got {}", self.trim)));
        }
        if !(self.p >= 1.0) {
            return Err(invalid(format!("loss index must be >= 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// t_n = sqrt(log n / n).
pub fn rate_unit(n: usize) -> f64 {
    let n = n as f64;
    (n.ln() / n).sqrt()
}

/// Largest J >= 0 with 2^{J (nu + (d-1)/2)} sqrt(inv_fx_sup) <= 1/t_n, nu = d/2.
#[allow(non_snake_case)]
pub fn select_J(n: usize, d: usize, inv_fx_sup: f64) -> Result<u32> {
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    if !(inv_fx_sup.is_finite() && inv_fx_sup > 0.0) {
        return Err(invalid(format!("||1/f_X|| must be finite and positive, got {inv_fx_sup}")));
    }
    let exponent = d as f64 - 0.5;
    let bound = 1.0 / rate_unit(n);
    let max_level = DEGREE_CAP.ilog2();
    let mut j = 0;
    while j < max_level && 2f64.powf((j + 1) as f64 * exponent) * inv_fx_sup.sqrt() <= bound {
        j += 1;
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Dense,
    Sparse,
}

/// Minimax exponent mu of the risk t_n^mu over a Besov ball B^s_{r,q}, L^p loss.
pub fn rate_exponent(s: f64, r: f64, p: f64, d: usize) -> Result<(Zone, f64)> {
    if !(r >= 1.0) || !(p >= 1.0) || d < 2 {
        return Err(invalid(format!("need r, p >= 1 and d >= 2 (r={r}, p={p}, d={d})")));
    }
    let df = d as f64;
    let inv_r = 1.0 / r;
    let inv_p = 1.0 / p;
    if !(s > (df - 1.0) * inv_r) {
        return Err(invalid(format!("smoothness s={s} must exceed (d-1)/r = {}", (df - 1.0) * inv_r)));
    }
    let nu = df / 2.0;
    let gap = inv_r - inv_p;
    let boundary = if gap == 0.0 { 0.0 } else { p * (nu + (df - 1.0) / 2.0) * gap };
    if s >= boundary {
        Ok((Zone::Dense, s / (s + nu + (df - 1.0) / 2.0)))
    } else {
        let mu = (s - (df - 1.0) * gap) / (s + nu - (df - 1.0) * (inv_r - 0.5));
        Ok((Zone::Sparse, mu))
    }
}

/// Zonal profile of G at level j: b(k/2^{j-1}) / lambda_k on odd k < 2^j.
pub fn g_profile(window: &Window, d: usize, level: u32) -> Result<ZonalSeries> {
    if level == 0 {
        return ZonalSeries::new(d, vec![0.0]);
    }
    let b = window.needlet_series(d, level)?;
    b.map(|k, c| if k % 2 == 1 { c / eigenvalue(k, d) } else { 0.0 })
}

/// G_{j,xi}(x, y) for a single observation.
pub fn g_value(frame: &NeedletFrame, j: usize, xi: usize, x: &SpherePoint, y: i8, fx_at_x: f64) -> Result<f64> {
    if !(fx_at_x > 0.0 && fx_at_x.is_finite()) {
        return Err(invalid(format!("design density must be positive at the observation, got {fx_at_x}")));
    }
    if j > frame.j_max() as usize || xi >= frame.rule(j).len() {
        return Err(Error::OutOfRange(format!("needlet ({j}, {xi}) outside the frame")));
    }
    let profile = g_profile(frame.window(), frame.dim(), j as u32)?;
    Ok(frame.omega(j, xi) * (y as f64 / fx_at_x) * profile.eval(x.dot(frame.node(j, xi))))
}

/// Sample mean, standard deviation and sup bound of G for every needlet.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientStats {
    pub n: usize,
    pub beta_hat: CoefficientPyramid,
    pub sigma_hat: CoefficientPyramid,
    pub sup_bound: CoefficientPyramid,
}

/// Per-observation factors y_i / f(x_i), validated.
fn label_weights(sample: &Sample, weight: &dyn DesignWeight) -> Result<Vec<f64>> {
    sample
        .x
        .iter()
        .zip(&sample.y)
        .enumerate()
        .map(|(i, (x, y))| {
            let f = weight.density(x);
            if f > 0.0 && f.is_finite() {
                Ok(*y as f64 / f)
            } else {
                Err(invalid(format!("design weight {f} at observation {i} is not positive")))
            }
        })
        .collect()
}

/// max_t |profile(t)| over a grid of [-1, 1].
fn profile_sup(profile: &ZonalSeries) -> f64 {
    let m = 2048.max(64 * profile.coeffs().len());
    (0..=m).map(|i| profile.eval(-1.0 + 2.0 * i as f64 / m as f64).abs()).fold(0.0, f64::max)
}

/// beta_hat = mean of G, sigma_hat^2 = sum (G_i - mean)^2 / (n - 1) (one pass),
/// M = 2 * 1.1 * omega * sup|profile| * inv_sup.
pub fn estimate_coefficients(
    sample: &Sample,
    frame: &NeedletFrame,
    weight: &dyn DesignWeight,
    inv_sup: f64,
) -> Result<CoefficientStats> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    if sample.dim() != Some(frame.dim()) {
        return Err(Error::DimensionMismatch { expected: frame.dim(), found: sample.dim().unwrap_or(0) });
    }
    let factors = label_weights(sample, weight)?;
    let profiles: Vec<ZonalSeries> =
        (0..=frame.j_max()).map(|j| g_profile(frame.window(), frame.dim(), j)).collect::<Result<_>>()?;
    let sups: Vec<f64> = profiles.iter().map(profile_sup).collect();
    let index: Vec<(usize, usize)> = frame
        .shape()
        .iter()
        .enumerate()
        .flat_map(|(j, len)| (0..*len).map(move |xi| (j, xi)))
        .collect();
    let stats = par::map_slice(&index, |&(j, xi)| {
        let node = frame.node(j, xi);
        let omega = frame.omega(j, xi);
        let profile = &profiles[j];
        let (mut mean, mut m2) = (0.0, 0.0);
        for (i, (x, f)) in sample.x.iter().zip(&factors).enumerate() {
            let g = omega * f * profile.eval(x.dot(node));
            let delta = g - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (g - mean);
        }
        let sigma = (m2 / (n - 1) as f64).max(0.0).sqrt();
        (mean, sigma, 2.0 * SUP_MARGIN * omega * sups[j] * inv_sup)
    });
    let shape = frame.shape();
    let split = |pick: fn(&(f64, f64, f64)) -> f64| {
        let mut it = stats.iter().map(pick);
        CoefficientPyramid::new(shape.iter().map(|len| it.by_ref().take(*len).collect()).collect())
    };
    Ok(CoefficientStats { n, beta_hat: split(|s| s.0), sigma_hat: split(|s| s.1), sup_bound: split(|s| s.2) })
}

/// Threshold bookkeeping for one needlet coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRecord {
    pub j: usize,
    pub xi: usize,
    pub beta_hat: f64,
    pub sigma_hat: f64,
    pub sup_bound: f64,
    pub threshold: f64,
    /// Delta = T / 2.
    pub delta: f64,
    /// Phantom thresholds T^b = Delta and T^s = 3 Delta.
    pub t_b: f64,
    pub t_s: f64,
    pub kept: bool,
}

/// T = 2 sqrt(2 gamma) t_n sigma + (28/3) M gamma log n / (n - 1).
pub fn threshold(sigma_hat: f64, sup_bound: f64, gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    2.0 * (2.0 * gamma).sqrt() * rate_unit(n) * sigma_hat + (28.0 / 3.0) * sup_bound * gamma * nf.ln() / (nf - 1.0)
}

pub fn threshold_records(stats: &CoefficientStats, gamma: f64) -> Vec<ThresholdRecord> {
    stats
        .beta_hat
        .iter()
        .zip(stats.sigma_hat.iter())
        .zip(stats.sup_bound.iter())
        .map(|(((j, xi, beta_hat), (_, _, sigma_hat)), (_, _, sup_bound))| {
            let t = threshold(sigma_hat, sup_bound, gamma, stats.n);
            ThresholdRecord {
                j,
                xi,
                beta_hat,
                sigma_hat,
                sup_bound,
                threshold: t,
                delta: t / 2.0,
                t_b: t / 2.0,
                t_s: 1.5 * t,
                kept: false,
            }
        })
        .collect()
}

/// Hard thresholding: keep beta_hat iff |beta_hat| > T (strict). Sets `kept`.
pub fn apply_thresholds(raw: &CoefficientPyramid, records: &mut [ThresholdRecord]) -> Result<CoefficientPyramid> {
    if raw.len() != records.len() {
        return Err(Error::ShapeMismatch(format!("{} coefficients, {} thresholds", raw.len(), records.len())));
    }
    let mut out = raw.clone();
    for ((j, xi, v), rec) in raw.iter().zip(records.iter_mut()) {
        if (rec.j, rec.xi) != (j, xi) {
            return Err(Error::ShapeMismatch(format!("record ({}, {}) at position ({j}, {xi})", rec.j, rec.xi)));
        }
        rec.kept = v.abs() > rec.threshold;
        if !rec.kept {
            out.set(j, xi, 0.0)?;
        }
    }
    Ok(out)
}

/// Everything produced by one estimation run.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub n: usize,
    pub gamma: f64,
    pub j_max: u32,
    pub mode: Mode,
    /// ||1/f|| used in M and in the choice of J.
    pub inv_sup: f64,
    /// Whether `inv_sup` is the 1/t surrogate for an unbounded 1/f_X.
    pub inv_sup_surrogate: bool,
    pub frame: NeedletFrame,
    pub raw: CoefficientPyramid,
    pub thresholded: CoefficientPyramid,
    pub records: Vec<ThresholdRecord>,
    pub synthesis: Synthesis,
    pub elapsed: Duration,
}

impl EstimationReport {
    /// f_hat^-(x).
    pub fn f_minus(&self, x: &SpherePoint) -> f64 {
        self.synthesis.eval(x)
    }

    /// f_hat_beta(x) = 2 f_hat^- 1{f_hat^- > 0}.
    pub fn f_beta(&self, x: &SpherePoint) -> f64 {
        identify_value(self.f_minus(x))
    }

    pub fn f_beta_many(&self, xs: &[SpherePoint]) -> Vec<f64> {
        par::map_slice(xs, |x| self.f_beta(x))
    }

    pub fn kept_count(&self) -> usize {
        self.records.iter().filter(|r| r.kept).count()
    }
}

/// f_hat^- from a thresholded pyramid, with the positivity map applied on evaluation.
pub fn reconstruct(
    frame: &NeedletFrame,
    raw: CoefficientPyramid,
    mut records: Vec<ThresholdRecord>,
) -> Result<(CoefficientPyramid, Vec<ThresholdRecord>, Synthesis)> {
    let thresholded = apply_thresholds(&raw, &mut records)?;
    let synthesis = frame.synthesize(&thresholded)?;
    Ok((thresholded, records, synthesis))
}

fn resolve_inv_sup(weight: &dyn DesignWeight, config: &EstimatorConfig) -> Result<(f64, bool)> {
    match weight.inv_sup() {
        Some(v) if v.is_finite() && v > 0.0 => Ok((v, false)),
        _ if config.trim > 0.0 => Ok((1.0 / config.trim, true)),
        _ => Err(invalid("1/f_X is unbounded; set a positive trim level to use 1/t as surrogate")),
    }
}

/// Full pipeline with a given design weight.
pub fn estimate(sample: &Sample, weight: &dyn DesignWeight, config: &EstimatorConfig) -> Result<EstimationReport> {
    config.validate()?;
    let start = Instant::now();
    let n = sample.len();
    let d = sample.dim().ok_or(Error::SampleTooSmall { needed: 2, got: 0 })?;
    let (inv_sup, surrogate) = resolve_inv_sup(weight, config)?;
    let j_max = match config.j_max {
        Some(j) => j,
        None => select_J(n, d, inv_sup)?,
    };
    let frame = NeedletFrame::new(d, j_max, config.window.clone())?;
    let stats = estimate_coefficients(sample, &frame, weight, inv_sup)?;
    let records = threshold_records(&stats, config.gamma);
    let (thresholded, records, synthesis) = reconstruct(&frame, stats.beta_hat.clone(), records)?;
    Ok(EstimationReport {
        n,
        gamma: config.gamma,
        j_max,
        mode: config.mode,
        inv_sup,
        inv_sup_surrogate: surrogate,
        frame,
        raw: stats.beta_hat,
        thresholded,
        records,
        synthesis,
        elapsed: start.elapsed(),
    })
}

/// Ideal estimator with the true design density.
pub fn ideal_estimate(sample: &Sample, design: &DesignDensity, config: &EstimatorConfig) -> Result<EstimationReport> {
    estimate(sample, design, &EstimatorConfig { mode: Mode::Ideal, ..config.clone() })
}

/// Plug-in estimator: `fx_hat` must already be trimmed at level `t`
/// (its `inv_sup` reports 1/t); `t` must be positive whenever `fx_hat` can vanish.
pub fn plugin_estimate(
    sample: &Sample,
    fx_hat: &dyn DesignWeight,
    t: f64,
    config: &EstimatorConfig,
) -> Result<EstimationReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("trim level must be >= 0, got {t}")));
    }
    if t == 0.0 && fx_hat.inv_sup().is_none() {
        return Err(invalid("trim level 0 with a design estimate that can vanish"));
    }
    estimate(sample, fx_hat, &EstimatorConfig { mode: Mode::Plugin, trim: t, ..config.clone() })
}

/// The delayed-means estimator at level J - 1:
/// x -> (1/n) sum_i (y_i / f(x_i)) sum_{k odd} a(k/2^{J-1}) / lambda_k L_k(<x_i, x>).
/// With zero thresholds it coincides with the needlet estimator of top level J.
pub fn spectral_estimate(
    sample: &Sample,
    weight: &dyn DesignWeight,
    window: &Window,
    j_max: u32,
) -> Result<ZonalExpansion> {
    let d = sample.dim().ok_or(Error::SampleTooSmall { needed: 1, got: 0 })?;
    let n = sample.len() as f64;
    let series = if j_max == 0 {
        ZonalSeries::new(d, vec![0.0])?
    } else {
        window
            .delayed_means_series(d, j_max - 1)?
            .map(|k, a| if k % 2 == 1 { a / eigenvalue(k, d) } else { 0.0 })?
    };
    let weights = label_weights(sample, weight)?.into_iter().map(|f| f / n).collect();
    ZonalExpansion::new(series, sample.x.clone(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, CoefficientDensity};
    use approx::assert_relative_eq;

    fn frame(d: usize, j: u32) -> NeedletFrame {
        NeedletFrame::new(d, j, Window::default()).unwrap()
    }

    #[test]
    fn g_value_basics() {
        let fr = frame(2, 3);
        let x = SpherePoint::from_angle(0.3);
        assert_eq!(g_value(&fr, 0, 0, &x, 1, 0.3).unwrap(), 0.0);
        let a = g_value(&fr, 2, 1, &x, 1, 0.3).unwrap();
        assert_eq!(g_value(&fr, 2, 1, &x, -1, 0.3).unwrap(), -a);
        assert!(a != 0.0);
        assert!(g_value(&fr, 2, 1, &x, 1, 0.0).is_err());
        assert!(g_value(&fr, 4, 0, &x, 1, 0.3).is_err());
    }

    fn brute_force_sigma(g: &[f64]) -> f64 {
        // (1 / (2 n (n - 1))) sum_{i != l} (g_i - g_l)^2
        let n = g.len() as f64;
        let mut s = 0.0;
        for a in g {
            for b in g {
                s += (a - b).powi(2);
            }
        }
        (s / (2.0 * n * (n - 1.0))).sqrt()
    }

    #[test]
    fn variance_matches_pair_formula() {
        let design = DesignDensity::uniform_hemisphere(2).unwrap();
        let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::from_angle(0.2), 1.0).unwrap();
        let fr = frame(2, 3);
        for n in [2usize, 7, 50] {
            let sample = generate(&design, &coeff, n, n as u64).unwrap();
            let stats = estimate_coefficients(&sample, &fr, &design, 3.0).unwrap();
            for (j, xi, sigma) in stats.sigma_hat.iter() {
                let g: Vec<f64> = sample
                    .x
                    .iter()
                    .zip(&sample.y)
                    .map(|(x, y)| g_value(&fr, j, xi, x, *y, design.eval(x)).unwrap())
                    .collect();
                assert_relative_eq!(sigma, brute_force_sigma(&g), epsilon = 1e-12, max_relative = 1e-10);
                if n == 2 {
                    assert_relative_eq!(sigma * sigma, (g[0] - g[1]).powi(2) / 2.0, epsilon = 1e-12, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn degenerate_and_duplicated_samples() {
        let design = DesignDensity::uniform_hemisphere(2).unwrap();
        let fr = frame(2, 3);
        let x = SpherePoint::from_angle(0.4);
        let sample = Sample::new(vec![x.clone(); 10], vec![1; 10], 0).unwrap();
        let stats = estimate_coefficients(&sample, &fr, &design, 3.0).unwrap();
        assert!(stats.sigma_hat.iter().all(|(_, _, s)| s == 0.0));

        let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::from_angle(0.2), 1.0).unwrap();
        let base = generate(&design, &coeff, 20, 9).unwrap();
        let doubled = Sample::new(
            base.x.iter().chain(&base.x).cloned().collect(),
            base.y.iter().chain(&base.y).copied().collect(),
            0,
        )
        .unwrap();
        let s1 = estimate_coefficients(&base, &fr, &design, 3.0).unwrap();
        let s2 = estimate_coefficients(&doubled, &fr, &design, 3.0).unwrap();
        for ((_, _, a), (_, _, b)) in s1.beta_hat.iter().zip(s2.beta_hat.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        // same squared deviations counted twice: sigma2^2 = 2 (n-1) / (2n-1) sigma1^2
        for ((_, _, a), (_, _, b)) in s1.sigma_hat.iter().zip(s2.sigma_hat.iter()) {
            assert_relative_eq!(b * b, a * a * 2.0 * 19.0 / 39.0, epsilon = 1e-12, max_relative = 1e-9);
        }
        assert!(estimate_coefficients(&Sample::new(vec![x.clone()], vec![1], 0).unwrap(), &fr, &design, 3.0).is_err());
    }

    #[test]
    fn threshold_formula_and_ties() {
        let t = threshold(0.5, 2.0, 2.1, 1000);
        let tn = (1000f64.ln() / 1000.0).sqrt();
        let want = 2.0 * (4.2f64).sqrt() * tn * 0.5 + 28.0 / 3.0 * 2.0 * 2.1 * 1000f64.ln() / 999.0;
        assert_relative_eq!(t, want, epsilon = 1e-15);

        let raw = CoefficientPyramid::new(vec![vec![0.5, -1.0, 2.0]]);
        let rec = |xi, threshold| ThresholdRecord {
            j: 0,
            xi,
            beta_hat: 0.0,
            sigma_hat: 0.0,
            sup_bound: 1.0,
            threshold,
            delta: threshold / 2.0,
            t_b: threshold / 2.0,
            t_s: 1.5 * threshold,
            kept: false,
        };
        let mut zero: Vec<_> = (0..3).map(|i| rec(i, 0.0)).collect();
        assert_eq!(apply_thresholds(&raw, &mut zero).unwrap(), raw);
        let mut inf: Vec<_> = (0..3).map(|i| rec(i, f64::INFINITY)).collect();
        assert!(apply_thresholds(&raw, &mut inf).unwrap().iter().all(|(_, _, v)| v == 0.0));
        let mut tie = vec![rec(0, 0.5), rec(1, 0.5), rec(2, 2.0)];
        let out = apply_thresholds(&raw, &mut tie).unwrap();
        assert_eq!(out.level(0), &[0.0, -1.0, 0.0]);
        assert_eq!(tie.iter().map(|r| r.kept).collect::<Vec<_>>(), vec![false, true, false]);
    }

    #[test]
    fn select_j_examples() {
        assert_eq!(select_J(1000, 2, 1e12).unwrap(), 0);
        // uniform design on the half circle: ||1/f_X|| = pi
        let n = 4096usize;
        let bound = (n as f64 / (n as f64).ln()).sqrt();
        let mut want = 0;
        while 2f64.powf(1.5 * (want + 1) as f64) * std::f64::consts::PI.sqrt() <= bound {
            want += 1;
        }
        assert_eq!(select_J(n, 2, std::f64::consts::PI).unwrap(), want);
        let mut prev = 0;
        for e in 2..30 {
            let j = select_J(1 << e, 3, 4.0).unwrap();
            assert!(j >= prev);
            prev = j;
        }
        assert!(select_J(1, 2, 1.0).is_err());
        assert!(select_J(10, 2, f64::INFINITY).is_err());
    }

    #[test]
    fn rate_exponents() {
        let (zone, mu) = rate_exponent(2.0, 2.0, 2.0, 2).unwrap();
        assert_eq!(zone, Zone::Dense);
        assert_relative_eq!(mu, 4.0 / 7.0, epsilon = 1e-15);
        for r in [1.0, 1.5, 3.0] {
            assert_eq!(rate_exponent(5.0, r, r, 3).unwrap().0, Zone::Dense);
        }
        assert!(rate_exponent(0.5, 2.0, 2.0, 3).is_err());
        let (zone, mu) = rate_exponent(1.5, 1.0, f64::INFINITY, 2).unwrap();
        assert_eq!(zone, Zone::Sparse);
        assert_relative_eq!(mu, 0.5 / (1.5 + 1.0 - 0.5), epsilon = 1e-15);
    }

    #[test]
    fn needlet_and_spectral_estimates_coincide() {
        let design = DesignDensity::uniform_hemisphere(2).unwrap();
        let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::from_angle(0.2), 1.0).unwrap();
        let sample = generate(&design, &coeff, 300, 1).unwrap();
        let j = 4;
        let fr = frame(2, j);
        let stats = estimate_coefficients(&sample, &fr, &design, 1.0).unwrap();
        let needlet = fr.synthesize(&stats.beta_hat).unwrap();
        let spectral = spectral_estimate(&sample, &design, &Window::default(), j).unwrap();
        for i in 0..200 {
            let x = SpherePoint::from_angle(i as f64 * 0.0314);
            assert!((needlet.eval(&x) - spectral.eval(&x)).abs() <= 1e-10);
        }
    }

    #[test]
    fn report_is_nonnegative_and_identifies() {
        let design = DesignDensity::uniform_hemisphere(2).unwrap();
        let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::from_angle(0.2), 1.0).unwrap();
        let sample = generate(&design, &coeff, 2000, 3).unwrap();
        let report = ideal_estimate(&sample, &design, &EstimatorConfig { gamma: 1.0, ..Default::default() }).unwrap();
        for i in 0..1000 {
            let x = SpherePoint::from_angle(i as f64 * 0.00628);
            let f = report.f_beta(&x);
            assert!(f >= 0.0);
            assert_eq!(f, identify_value(report.f_minus(&x)));
        }
        assert_eq!(report.records.len(), report.raw.len());
    }

    #[test]
    fn plugin_guards_and_identity() {
        let design = DesignDensity::uniform_hemisphere(2).unwrap();
        let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::from_angle(0.2), 1.0).unwrap();
        let sample = generate(&design, &coeff, 500, 5).unwrap();
        let config = EstimatorConfig::default();
        let ideal = ideal_estimate(&sample, &design, &config).unwrap();
        let trimmed = TrimmedDesign::new(&design, 0.01).unwrap();
        let plug = plugin_estimate(&sample, &trimmed, 0.01, &config).unwrap();
        assert_eq!(ideal.raw, plug.raw);
        assert_eq!(ideal.records, plug.records);

        let vanishing = DesignDensity::boundary_vanishing(2, 1).unwrap();
        assert!(TrimmedDesign::new(&vanishing, 0.0).is_err());
        assert!(ideal_estimate(&sample, &vanishing, &config).is_err());
        let flagged = ideal_estimate(&sample, &vanishing, &EstimatorConfig { trim: 0.05, ..config.clone() }).unwrap();
        assert!(flagged.inv_sup_surrogate);
        assert_eq!(flagged.inv_sup, 20.0);
        let t = TrimmedDesign::new(&vanishing, 0.05).unwrap();
        let rep = plugin_estimate(&sample, &t, 0.05, &config).unwrap();
        assert!(rep.records.iter().all(|r| r.threshold.is_finite() && r.sigma_hat.is_finite()));
    }
}
