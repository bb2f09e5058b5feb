//! Littlewood-Paley windows and the needlet tight frame.

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::quadrature::{build_rule, gauss_legendre, level_rule, QuadratureRule};
use crate::sphere::{check_degree, sphere_area, SpherePoint, ZonalExpansion, ZonalSeries};

/// Sharpness used by [`Window::default`]; gives c_b close to 0.31.
pub const DEFAULT_SHARPNESS: f64 = 0.15;

const PANELS: usize = 4;
const PANEL_NODES: usize = 32;

/// The window a: equal to 1 on [0, 1], 0 on [2, inf), with a smooth
/// monotone transition on [1, 2] given by the normalized integral of
/// u -> exp(-s / (u (1 - u))), s the sharpness.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    sharpness: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    half_mass: f64,
}

impl Default for Window {
    fn default() -> Self {
        make_window(DEFAULT_SHARPNESS).expect("default sharpness is valid")
    }
}

pub fn make_window(sharpness: f64) -> Result<Window> {
    if !(sharpness.is_finite() && sharpness > 0.0) {
        return Err(invalid(format!("window sharpness must be positive, got {sharpness}")));
    }
    let (nodes, weights) = gauss_legendre(PANEL_NODES);
    let mut w = Window { sharpness, nodes, weights, half_mass: 1.0 };
    w.half_mass = w.bump_integral(0.5);
    if !(w.half_mass > 0.0 && w.half_mass.is_finite()) {
        return Err(invalid(format!("window sharpness {sharpness} underflows")));
    }
    Ok(w)
}

impl Window {
    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    fn bump(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            (-self.sharpness / (u * (1.0 - u))).exp()
        }
    }

    // integral of the bump over [0, u], u <= 1/2
    fn bump_integral(&self, u: f64) -> f64 {
        let h = u / PANELS as f64;
        let mut acc = 0.0;
        for p in 0..PANELS {
            let lo = p as f64 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * self.bump(lo + 0.5 * h * (x + 1.0));
            }
        }
        0.5 * h * acc
    }

    /// Normalized cumulative bump on [0, 1], symmetric: Phi(1 - u) = 1 - Phi(u).
    fn cumulative(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else if u <= 0.5 {
            0.5 * self.bump_integral(u) / self.half_mass
        } else {
            1.0 - 0.5 * self.bump_integral(1.0 - u) / self.half_mass
        }
    }

    pub fn a(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            1.0 - self.cumulative(t - 1.0)
        }
    }

    /// b(t) = sqrt(a(t) - a(2t)), supported on [1/2, 2].
    pub fn b(&self, t: f64) -> f64 {
        (self.a(t) - self.a(2.0 * t)).max(0.0).sqrt()
    }

    pub fn b_squared(&self, t: f64) -> f64 {
        (self.a(t) - self.a(2.0 * t)).max(0.0)
    }

    /// min of b over [3/5, 5/3]. From the construction this is sqrt(Phi(1/5)).
    pub fn c_b(&self) -> f64 {
        self.cumulative(0.2).sqrt()
    }

    /// Profile of the delayed-means kernel: coefficient a(k/2^J) for k < 2^{J+1}.
    pub fn delayed_means_series(&self, d: usize, level: u32) -> Result<ZonalSeries> {
        let top = 1usize.checked_shl(level + 1).ok_or_else(|| invalid("level too large"))?;
        check_degree(top - 1)?;
        let scale = (1u64 << level) as f64;
        ZonalSeries::new(d, (0..top).map(|k| self.a(k as f64 / scale)).collect())
    }

    /// Profile of a level-j needlet without its weight: b(k/2^{j-1}) for
    /// k < 2^j, and the constant kernel at j = 0.
    pub fn needlet_series(&self, d: usize, level: u32) -> Result<ZonalSeries> {
        if level == 0 {
            return ZonalSeries::new(d, vec![1.0]);
        }
        let top = 1usize.checked_shl(level).ok_or_else(|| invalid("level too large"))?;
        check_degree(top - 1)?;
        let scale = (1u64 << (level - 1)) as f64;
        ZonalSeries::new(d, (0..top).map(|k| self.b(k as f64 / scale)).collect())
    }
}

/// Per-level, per-node real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPyramid {
    levels: Vec<Vec<f64>>,
}

impl CoefficientPyramid {
    pub fn new(levels: Vec<Vec<f64>>) -> Self {
        Self { levels }
    }

    pub fn zeros_like(frame: &NeedletFrame) -> Self {
        Self { levels: frame.rules.iter().map(|r| vec![0.0; r.len()]).collect() }
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    pub fn get(&self, j: usize, xi: usize) -> Option<f64> {
        self.levels.get(j).and_then(|l| l.get(xi)).copied()
    }

    pub fn set(&mut self, j: usize, xi: usize, value: f64) -> Result<()> {
        let slot = self
            .levels
            .get_mut(j)
            .and_then(|l| l.get_mut(xi))
            .ok_or_else(|| Error::OutOfRange(format!("coefficient ({j}, {xi})")))?;
        *slot = value;
        Ok(())
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Total coefficient count.
    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (j, xi, value) in level-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(j, l)| l.iter().enumerate().map(move |(xi, v)| (j, xi, *v)))
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        Self {
            levels: self
                .levels
                .iter()
                .enumerate()
                .map(|(j, l)| l.iter().enumerate().map(|(xi, v)| f(j, xi, *v)).collect())
                .collect(),
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.iter().map(|(_, _, v)| v * v).sum()
    }

    pub(crate) fn check_shape(&self, frame: &NeedletFrame) -> Result<()> {
        let ok = self.levels.len() == frame.rules.len()
            && self.levels.iter().zip(&frame.rules).all(|(l, r)| l.len() == r.len());
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "pyramid level sizes {:?} do not match the frame",
                self.levels.iter().map(Vec::len).collect::<Vec<_>>()
            )))
        }
    }
}

/// Needlets psi_{j,xi} for j = 0..=J on S^{d-1}.
///
/// Level j >= 1 uses the rule exact to degree 2^{j+1}; level 0 is a single
/// node with weight |S^{d-1}|, so psi_0 = 1/sqrt|S^{d-1}|.
#[derive(Debug, Clone)]
pub struct NeedletFrame {
    d: usize,
    j_max: u32,
    window: Window,
    rules: Vec<QuadratureRule>,
    profiles: Vec<ZonalSeries>,
}

impl NeedletFrame {
    pub fn new(d: usize, j_max: u32, window: Window) -> Result<Self> {
        let rules = (0..=j_max).map(|j| level_rule(d, j)).collect::<Result<Vec<_>>>()?;
        let profiles = (0..=j_max).map(|j| window.needlet_series(d, j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { d, j_max, window, rules, profiles })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn rule(&self, j: usize) -> &QuadratureRule {
        &self.rules[j]
    }

    pub fn rules(&self) -> &[QuadratureRule] {
        &self.rules
    }

    /// Zonal profile of level j (no weight).
    pub fn profile(&self, j: usize) -> &ZonalSeries {
        &self.profiles[j]
    }

    /// Largest degree of any needlet in the frame.
    pub fn band_limit(&self) -> usize {
        if self.j_max == 0 {
            0
        } else {
            (1usize << self.j_max) - 1
        }
    }

    /// omega(j, xi), the square root of the quadrature weight.
    pub fn omega(&self, j: usize, xi: usize) -> f64 {
        self.rules[j].weights()[xi].sqrt()
    }

    pub fn node(&self, j: usize, xi: usize) -> &SpherePoint {
        &self.rules[j].nodes()[xi]
    }

    fn check_index(&self, j: usize, xi: usize) -> Result<()> {
        if j > self.j_max as usize || xi >= self.rules[j].len() {
            return Err(Error::OutOfRange(format!("needlet ({j}, {xi}) outside the frame")));
        }
        Ok(())
    }

    pub fn needlet_eval(&self, j: usize, xi: usize, x: &SpherePoint) -> Result<f64> {
        self.check_index(j, xi)?;
        let node = self.node(j, xi);
        crate::sphere::check_dims(node, x)?;
        Ok(self.omega(j, xi) * self.profiles[j].eval(node.dot(x)))
    }

    /// Pyramid shape: number of nodes per level.
    pub fn shape(&self) -> Vec<usize> {
        self.rules.iter().map(QuadratureRule::len).collect()
    }

    fn flat_index(&self) -> Vec<(usize, usize)> {
        self.rules.iter().enumerate().flat_map(|(j, r)| (0..r.len()).map(move |xi| (j, xi))).collect()
    }

    fn unflatten(&self, flat: Vec<f64>) -> CoefficientPyramid {
        let mut it = flat.into_iter();
        CoefficientPyramid::new(self.rules.iter().map(|r| it.by_ref().take(r.len()).collect()).collect())
    }

    /// Coefficients <f, psi_{j,xi}>. For `Some(degree)` the integral uses a
    /// rule exact to degree + 2^{J+1}, which is exact for f band-limited to
    /// `degree`; otherwise a rule of degree 4 * 2^{J+1}.
    pub fn analyze<F>(&self, f: F, degree: Option<usize>) -> Result<CoefficientPyramid>
    where
        F: Fn(&SpherePoint) -> f64 + Sync,
    {
        let top = 1usize << (self.j_max + 1);
        let n = match degree {
            Some(k) => k + top,
            None => 4 * top,
        };
        let rule = build_rule(self.d, n)?;
        let values = par::map_slice(rule.nodes(), |x| f(x));
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("function value at analysis node {i}")));
        }
        self.analyze_values(&rule, &values)
    }

    /// Same as [`Self::analyze`] with function values already computed on `rule`'s nodes.
    pub fn analyze_values(&self, rule: &QuadratureRule, values: &[f64]) -> Result<CoefficientPyramid> {
        if rule.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: rule.dim() });
        }
        if values.len() != rule.len() {
            return Err(Error::ShapeMismatch(format!("{} values for {} nodes", values.len(), rule.len())));
        }
        let weighted: Vec<f64> = values.iter().zip(rule.weights()).map(|(v, w)| v * w).collect();
        let index = self.flat_index();
        let flat = par::map_slice(&index, |&(j, xi)| {
            let node = self.node(j, xi);
            let profile = &self.profiles[j];
            let s: f64 = rule.nodes().iter().zip(&weighted).map(|(eta, wv)| wv * profile.eval(node.dot(eta))).sum();
            self.omega(j, xi) * s
        });
        Ok(self.unflatten(flat))
    }

    /// x -> sum_{j,xi} c_{j,xi} psi_{j,xi}(x).
    pub fn synthesize(&self, coeffs: &CoefficientPyramid) -> Result<Synthesis> {
        coeffs.check_shape(self)?;
        let levels = self
            .rules
            .iter()
            .enumerate()
            .filter_map(|(j, rule)| {
                let (centers, weights): (Vec<SpherePoint>, Vec<f64>) = coeffs
                    .level(j)
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(xi, c)| (rule.nodes()[xi].clone(), c * rule.weights()[xi].sqrt()))
                    .unzip();
                (!centers.is_empty()).then(|| ZonalExpansion::new(self.profiles[j].clone(), centers, weights))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Synthesis { d: self.d, levels })
    }

    /// Frame constants measured on the rules: (min, max) of ||psi_{j,xi}||_2 over all j, xi.
    pub fn norm_range(&self) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for j in 0..=self.j_max as usize {
            let rule = build_rule(self.d, 1usize << (j + 1))?;
            // ||psi||^2 depends on xi only through the weight
            let node = self.node(j, 0);
            let sq = rule.integrate(|x| self.profiles[j].eval(node.dot(x)).powi(2))?;
            for w in self.rules[j].weights() {
                let norm = (w * sq).sqrt();
                lo = lo.min(norm);
                hi = hi.max(norm);
            }
        }
        Ok((lo, hi))
    }
}

/// Synthesized function: one weighted zonal sum per nonzero level.
#[derive(Debug, Clone)]
pub struct Synthesis {
    d: usize,
    levels: Vec<ZonalExpansion>,
}

impl Synthesis {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        self.levels.iter().map(|e| e.eval(x)).sum()
    }

    pub fn eval_many(&self, xs: &[SpherePoint]) -> Vec<f64> {
        par::map_slice(xs, |x| self.eval(x))
    }
}

/// Besov sequence norm: l^q over j of 2^{j(s + (d-1)(1/2 - 1/p))} ||c_{j,.}||_{l^p}.
/// `p` or `q` may be `f64::INFINITY`.
pub fn besov_seq_norm(coeffs: &CoefficientPyramid, d: usize, s: f64, p: f64, q: f64) -> Result<f64> {
    if !(s > 0.0) || !(p >= 1.0) || !(q >= 1.0) {
        return Err(invalid(format!("besov norm needs s > 0, p, q >= 1 (got s={s}, p={p}, q={q})")));
    }
    let lp = |level: &[f64]| -> f64 {
        if p.is_infinite() {
            level.iter().fold(0.0, |m: f64, c| m.max(c.abs()))
        } else {
            level.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    };
    let exponent = s + (d as f64 - 1.0) * (0.5 - 1.0 / p);
    let terms = coeffs.levels().iter().enumerate().map(|(j, l)| 2f64.powf(j as f64 * exponent) * lp(l));
    Ok(if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

/// |S^{d-1}|^{-1/2}: value of the level-0 needlet.
pub fn level_zero_value(d: usize) -> f64 {
    1.0 / sphere_area(d).sqrt()
}
