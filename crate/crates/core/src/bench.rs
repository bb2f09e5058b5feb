//! Monte Carlo risk study: simulate, estimate, measure ||f_hat - f||_p over a
//! grid of sample sizes and fit the log-log slope of the risk.

use crate::design_est::{default_trim, fit_design};
use crate::error::{invalid, Error, Result};
use crate::estimator::{ideal_estimate, plugin_estimate, rate_exponent, rate_unit, EstimatorConfig, Mode, Zone};
use crate::model::{
    derive_seed, draw_design, generate, stream_rng, CoefficientDensity, DesignDensity, MixtureComponent,
    STREAM_FIRST_STAGE,
};
use crate::needlet::{make_window, DEFAULT_SHARPNESS};
use crate::par;
use crate::quadrature::{build_rule, QuadratureRule};
use crate::sphere::SpherePoint;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    UniformHemisphere,
    BoundaryVanishing { alpha: u32 },
}

impl DesignSpec {
    pub fn build(&self, d: usize) -> Result<DesignDensity> {
        match self {
            Self::UniformHemisphere => DesignDensity::uniform_hemisphere(d),
            Self::BoundaryVanishing { alpha } => DesignDensity::boundary_vanishing(d, *alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    HemisphereBump { mean: Vec<f64>, kappa: f64 },
    BandLimitedPositive { mean: Vec<f64>, alpha: f64 },
    Mixture { mean: Vec<f64>, components: Vec<ComponentSpec> },
}

impl CoefficientSpec {
    pub fn build(&self, d: usize) -> Result<CoefficientDensity> {
        let point = |v: &[f64]| -> Result<SpherePoint> {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
            SpherePoint::normalized(v.to_vec())
        };
        match self {
            Self::HemisphereBump { mean, kappa } => CoefficientDensity::hemisphere_bump(point(mean)?, *kappa),
            Self::BandLimitedPositive { mean, alpha } => CoefficientDensity::band_limited_positive(point(mean)?, *alpha),
            Self::Mixture { mean, components } => {
                let comps = components
                    .iter()
                    .map(|c| Ok(MixtureComponent { weight: c.weight, mean: point(&c.mean)?, kappa: c.kappa }))
                    .collect::<Result<Vec<_>>>()?;
                CoefficientDensity::mixture(point(mean)?, comps)
            }
        }
    }
}

/// Settings of one risk study. Every field has a default so configs can be partial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub design: DesignSpec,
    pub coefficient: CoefficientSpec,
    pub mode: Mode,
    pub gamma: f64,
    /// Loss index; `inf` for the sup norm.
    pub p: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// Fixed top level; absent means automatic selection.
    pub j_max: Option<u32>,
    /// Trim level; absent means (log n / n)^{1/4} in plug-in mode and none in ideal mode.
    pub trim: Option<f64>,
    pub window_sharpness: f64,
    /// Nominal smoothness for the reference exponent.
    pub nominal_s: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            design: DesignSpec::UniformHemisphere,
            coefficient: CoefficientSpec::HemisphereBump { mean: vec![1.0, 0.0], kappa: 1.0 },
            mode: Mode::Ideal,
            gamma: crate::estimator::DEFAULT_GAMMA,
            p: 2.0,
            n_grid: vec![512, 2048, 8192, 32768],
            replications: 50,
            seed: 1,
            j_max: None,
            trim: None,
            window_sharpness: DEFAULT_SHARPNESS,
            nominal_s: 2.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid must be non-empty and strictly increasing"));
        }
        if self.n_grid[0] < 2 {
            return Err(invalid("sample sizes must be at least 2"));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if !(self.p >= 1.0) {
            return Err(invalid(format!("loss index p must be in [1, inf], got {}", self.p)));
        }
        if !(2..=3).contains(&self.d) {
            return Err(Error::UnsupportedDimension(self.d));
        }
        if let Some(t) = self.trim {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid(format!("trim must be >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

/// Quadrature (p < inf) or grid (p = inf) used to measure losses.
#[derive(Debug, Clone)]
pub struct LossRule {
    pub p: f64,
    pub rule: QuadratureRule,
}

/// Floor on the loss-rule degree: the positive part of f_hat^- is not band-limited.
const LOSS_FLOOR: [usize; 2] = [512, 96];
/// Points on the circle for the sup norm.
const SUP_GRID_CIRCLE: usize = 10_000;
/// Rule degree on S^2 giving at least 10^4 nodes.
const SUP_GRID_SPHERE: usize = 140;

impl LossRule {
    /// Degree max(4 * 2^{J+1}, floor) for p < inf; a >= 10^4 point grid for p = inf.
    pub fn new(d: usize, j_max: u32, p: f64) -> Result<Self> {
        if !(2..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        let band = 4 * (1usize << (j_max + 1));
        let rule = match (p.is_infinite(), d) {
            (true, 2) => {
                let m = SUP_GRID_CIRCLE.max(band + 1);
                let nodes = (0..m).map(|i| SpherePoint::from_angle(2.0 * PI * i as f64 / m as f64)).collect();
                QuadratureRule::from_parts(2, m - 1, nodes, vec![2.0 * PI / m as f64; m])?
            }
            (true, _) => build_rule(d, SUP_GRID_SPHERE.max(band))?,
            (false, _) => build_rule(d, LOSS_FLOOR[d - 2].max(band))?,
        };
        Ok(Self { p, rule })
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }
}

/// ||f_hat - f_true||_p on the rule's nodes (max over nodes for p = inf).
pub fn evaluate_loss<F, G>(f_hat: F, f_true: G, rule: &LossRule) -> f64
where
    F: Fn(&SpherePoint) -> f64,
    G: Fn(&SpherePoint) -> f64,
{
    let diffs = rule.rule.nodes().iter().map(|x| (f_hat(x) - f_true(x)).abs());
    loss_from_diffs(diffs, rule)
}

fn loss_from_diffs(diffs: impl Iterator<Item = f64>, rule: &LossRule) -> f64 {
    if rule.p.is_infinite() {
        diffs.fold(0.0, f64::max)
    } else {
        diffs.zip(rule.rule.weights()).map(|(v, w)| w * v.powf(rule.p)).sum::<f64>().powf(1.0 / rule.p)
    }
}

/// Aggregated losses at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskRow {
    pub n: usize,
    pub t_n: f64,
    pub mean: f64,
    pub median: f64,
    pub std_err: f64,
    pub mean_j: f64,
    pub mean_kept: f64,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskTable {
    pub config: ExperimentConfig,
    pub rows: Vec<RiskRow>,
    /// OLS slope of log(mean risk) on log(1/t_n); negative when risk decreases.
    pub slope: f64,
    pub slope_se: f64,
    pub nominal_mu: f64,
    pub zone: String,
}

impl RiskTable {
    /// Number of adjacent pairs where the median risk does not decrease.
    pub fn median_inversions(&self) -> usize {
        self.rows.windows(2).filter(|w| w[1].median >= w[0].median).count()
    }
}

/// Result of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub loss: f64,
    pub j_max: u32,
    pub kept: usize,
}

/// One replication at sample size `n` with the given seed.
pub fn run_replication(
    config: &ExperimentConfig,
    design: &DesignDensity,
    coeff: &CoefficientDensity,
    n: usize,
    seed: u64,
) -> Result<Replication> {
    let window = make_window(config.window_sharpness)?;
    let est_config = EstimatorConfig {
        gamma: config.gamma,
        j_max: config.j_max,
        window: window.clone(),
        mode: config.mode,
        trim: config.trim.unwrap_or(0.0),
        p: config.p,
    };
    let sample = generate(design, coeff, n, seed)?;
    let report = match config.mode {
        Mode::Ideal => ideal_estimate(&sample, design, &est_config)?,
        Mode::Plugin => {
            let mut rng = stream_rng(seed, STREAM_FIRST_STAGE);
            let first = draw_design(design, n, &mut rng)?;
            let t = config.trim.unwrap_or_else(|| default_trim(n));
            let fitted = fit_design(&first, None, &window)?;
            if t <= 0.0 {
                return Err(invalid("plug-in mode needs a positive trim level for a fitted design density"));
            }
            plugin_estimate(&sample, &fitted.trim(t)?, t, &est_config)?
        }
    };
    let rule = LossRule::new(config.d, report.j_max, config.p)?;
    let loss = evaluate_loss(|x| report.f_beta(x), |x| coeff.eval(x), &rule);
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    Ok(Replication { loss, j_max: report.j_max, kept: report.kept_count() })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// OLS fit of y on x: (slope, standard error of the slope).
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, f64::NAN);
    }
    let slope = sxy / sxx;
    if x.len() < 3 {
        return (slope, f64::NAN);
    }
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

/// Runs every (n, replication) pair; replications run in parallel with derived seeds.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RiskTable> {
    config.validate()?;
    let design = config.design.build(config.d)?;
    let coeff = config.coefficient.build(config.d)?;
    let reps = config.replications;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for (ni, &n) in config.n_grid.iter().enumerate() {
        let base = derive_seed(config.seed, ni as u64);
        let results = par::map_range(reps, |r| run_replication(config, &design, &coeff, n, derive_seed(base, r as u64)));
        let results = results
            .into_iter()
            .enumerate()
            .map(|(r, res)| res.map_err(|e| Error::Replication { replication: r, n, source: Box::new(e) }))
            .collect::<Result<Vec<_>>>()?;
        let losses: Vec<f64> = results.iter().map(|r| r.loss).collect();
        let mean = losses.iter().sum::<f64>() / reps as f64;
        let std_err = if reps > 1 {
            (losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (reps - 1) as f64 / reps as f64).sqrt()
        } else {
            0.0
        };
        rows.push(RiskRow {
            n,
            t_n: rate_unit(n),
            mean,
            median: median(&losses),
            std_err,
            mean_j: results.iter().map(|r| r.j_max as f64).sum::<f64>() / reps as f64,
            mean_kept: results.iter().map(|r| r.kept as f64).sum::<f64>() / reps as f64,
            losses,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.t_n).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, slope_se) = ols_slope(&xs, &ys);
    let (zone, mu) = rate_exponent(config.nominal_s, 2.0, config.p, config.d)?;
    Ok(RiskTable {
        config: config.clone(),
        rows,
        slope,
        slope_se,
        nominal_mu: mu,
        zone: match zone {
            Zone::Dense => "dense".into(),
            Zone::Sparse => "sparse".into(),
        },
    })
}

/// Format shared by the table writer and the plot annotations.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.6e}")
}

/// SVG plot of log(mean risk) against log n with a reference line of slope -mu
/// (in log(1/t_n) units) through the first point.
pub fn risk_plot_svg(table: &RiskTable) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let xs: Vec<f64> = table.rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r.mean.max(f64::MIN_POSITIVE).ln()).collect();
    let lx: Vec<f64> = table.rows.iter().map(|r| (1.0 / r.t_n).ln()).collect();
    let reference: Vec<f64> = lx.iter().map(|x| ys[0] - table.nominal_mu * (x - lx[0])).collect();
    let all_y: Vec<f64> = ys.iter().chain(&reference).copied().collect();
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&all_y);
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let path = |ys: &[f64]| {
        xs.iter()
            .zip(ys)
            .enumerate()
            .map(|(i, (x, y))| format!("{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, px(*x), py(*y)))
            .collect::<String>()
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{b}" stroke="black"/>"#,
        b = h - m,
        r = w - m
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">log n</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">log mean risk</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="#888" stroke-dasharray="6,4"/>"##, path(&reference));
    let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##, path(&ys));
    for (row, (x, y)) in table.rows.iter().zip(xs.iter().zip(&ys)) {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f5fa8"/>"##, px(*x), py(*y));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">n={} mean={}</text>"#,
            px(*x) + 6.0,
            py(*y) - 8.0,
            row.n,
            fmt_num(row.mean)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-size="12">slope={} (se {}), reference -mu={}</text>"#,
        m,
        fmt_num(table.slope),
        fmt_num(table.slope_se),
        fmt_num(-table.nominal_mu)
    );
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}
