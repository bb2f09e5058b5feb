//! Positive-weight cubature on S^{d-1}.
//!
//! `build_rule(d, N)` integrates every spherical polynomial of degree <= N
//! exactly. On the circle it is the uniform (N+1)-point rule; on S^2 it is a
//! Gauss-Legendre rule in the polar cosine times N+1 equally spaced
//! azimuths. Weights stored in a rule are the squared needlet weights
//! omega(j, xi)^2.

use crate::error::{invalid, Error, Result};
use crate::sphere::{check_degree, orthonormal_frame, sphere_area, SpherePoint, ZonalSeries};
use std::f64::consts::PI;

/// Nodes and positive weights of a cubature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    d: usize,
    exact_degree: usize,
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
    antipodes: Option<Vec<usize>>,
}

impl QuadratureRule {
    /// Assembles a rule from raw parts (used when reading rules back from text).
    pub fn from_parts(d: usize, exact_degree: usize, nodes: Vec<SpherePoint>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::ShapeMismatch(format!("{} nodes, {} weights", nodes.len(), weights.len())));
        }
        if let Some(n) = nodes.iter().find(|n| n.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: n.dim() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("quadrature weights must be positive and finite"));
        }
        Ok(Self { d, exact_degree, nodes, weights, antipodes: None })
    }

    /// The one-node rule used at needlet level 0: node e_1, weight |S^{d-1}|.
    pub fn singleton(d: usize) -> Self {
        Self {
            d,
            exact_degree: 0,
            nodes: vec![SpherePoint::north(d)],
            weights: vec![sphere_area(d)],
            antipodes: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn exact_degree(&self) -> usize {
        self.exact_degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of -xi for every node xi, when the node set is antipodally symmetric.
    pub fn antipodes(&self) -> Option<&[usize]> {
        self.antipodes.as_deref()
    }

    /// sum_xi w_xi f(xi); fails on a non-finite node value.
    pub fn integrate(&self, f: impl Fn(&SpherePoint) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("integrand at node {:?}", x.coords())));
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Weighted sum of precomputed node values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Max deviation of quadrature Gram entries of zonal kernels,
    /// sum_eta w L_{k1}(x, eta) L_{k2}(y, eta), from delta_{k1 k2} L_{k1}(x, y),
    /// over a fixed set of probe pairs (x, y). Exactness is only guaranteed
    /// for `k_max <= exact_degree / 2`; larger probes expose aliasing.
    pub fn exactness_report(&self, k_max: usize) -> Result<Vec<ExactnessRow>> {
        check_degree(k_max)?;
        let probes = probe_points(self.d);
        let tables: Vec<Vec<Vec<f64>>> = probes
            .iter()
            .map(|p| self.nodes.iter().map(|eta| ZonalSeries::kernels_at(self.d, k_max, p.dot(eta))).collect())
            .collect();
        let mut rows: Vec<ExactnessRow> = (0..=k_max)
            .flat_map(|k1| (0..=k_max).map(move |k2| ExactnessRow { k1, k2, residual: 0.0 }))
            .collect();
        for a in 0..probes.len() {
            for b in a..probes.len() {
                let analytic = ZonalSeries::kernels_at(self.d, k_max, probes[a].dot(&probes[b]));
                for row in rows.iter_mut() {
                    let gram: f64 = tables[a]
                        .iter()
                        .zip(&tables[b])
                        .zip(&self.weights)
                        .map(|((ta, tb), w)| w * ta[row.k1] * tb[row.k2])
                        .sum();
                    let want = if row.k1 == row.k2 { analytic[row.k1] } else { 0.0 };
                    row.residual = row.residual.max((gram - want).abs());
                }
            }
        }
        Ok(rows)
    }
}

/// One entry of an exactness report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactnessRow {
    pub k1: usize,
    pub k2: usize,
    pub residual: f64,
}

fn probe_points(d: usize) -> Vec<SpherePoint> {
    let raw = [
        [0.31, -0.52, 0.77, 0.12, -0.4],
        [-0.83, 0.11, 0.36, -0.27, 0.05],
        [0.05, 0.94, -0.21, 0.33, 0.6],
    ];
    raw.iter()
        .map(|r| {
            let v: Vec<f64> = (0..d).map(|i| r[i % r.len()] + 0.01 * i as f64).collect();
            SpherePoint::normalized(v).expect("probe point")
        })
        .collect()
}

/// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on the
/// Legendre recursion.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(m, x);
            deriv = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, dp) = legendre_with_derivative(m, x);
                deriv = dp;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

/// A rule on S^{d-1} exact for all spherical polynomials of degree <= `exact_degree`.
pub fn build_rule(d: usize, exact_degree: usize) -> Result<QuadratureRule> {
    check_degree(exact_degree)?;
    match d {
        2 => Ok(circle_rule(exact_degree)),
        3 => Ok(sphere_rule(exact_degree)),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

fn circle_rule(n: usize) -> QuadratureRule {
    let m = n + 1;
    let nodes = (0..m).map(|i| SpherePoint::from_angle(2.0 * PI * i as f64 / m as f64)).collect();
    let antipodes = m.is_multiple_of(2).then(|| (0..m).map(|i| (i + m / 2) % m).collect());
    QuadratureRule { d: 2, exact_degree: n, nodes, weights: vec![2.0 * PI / m as f64; m], antipodes }
}

fn sphere_rule(n: usize) -> QuadratureRule {
    let polar = (n + 1).div_ceil(2);
    let az = n + 1;
    let (ts, ws) = gauss_legendre(polar);
    let mut nodes = Vec::with_capacity(polar * az);
    let mut weights = Vec::with_capacity(polar * az);
    for (t, w) in ts.iter().zip(&ws) {
        for a in 0..az {
            nodes.push(SpherePoint::from_polar(*t, 2.0 * PI * a as f64 / az as f64));
            weights.push(w * 2.0 * PI / az as f64);
        }
    }
    let antipodes = az.is_multiple_of(2).then(|| {
        (0..polar * az).map(|idx| (polar - 1 - idx / az) * az + (idx % az + az / 2) % az).collect()
    });
    QuadratureRule { d: 3, exact_degree: n, nodes, weights, antipodes }
}

/// A rule on the open hemisphere {b : <x, b> > 0} with its boundary aligned
/// to the cut, so zonal integrands about `x` keep polynomial exactness.
///
/// On S^2 the rule is exact for spherical polynomials of degree <= `degree`
/// restricted to the hemisphere; on the circle it is Gauss-Legendre in the
/// angle with `degree + 24` nodes, which is spectrally accurate for
/// trigonometric polynomials of that degree.
pub fn hemisphere_rule(x: &SpherePoint, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    match x.dim() {
        2 => Ok(hemi_circle(x, 1, degree + 24)),
        3 => Ok(hemi_sphere(x, 1, (degree + 1).div_ceil(2), degree + 1)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Composite hemisphere rule for integrands that are not polynomial: the
/// radial (or angular) direction is split into `panels` Gauss-Legendre panels
/// of `per_panel` nodes; on S^2 `azimuths` equally spaced azimuths are used.
pub fn hemisphere_rule_composite(x: &SpherePoint, panels: usize, per_panel: usize, azimuths: usize) -> Result<QuadratureRule> {
    if panels == 0 || per_panel == 0 || azimuths == 0 {
        return Err(invalid("composite hemisphere rule needs positive sizes"));
    }
    match x.dim() {
        2 => Ok(hemi_circle(x, panels, per_panel)),
        3 => Ok(hemi_sphere(x, panels, per_panel, azimuths)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn hemi_circle(x: &SpherePoint, panels: usize, per_panel: usize) -> QuadratureRule {
    let c = x.coords();
    let center = c[1].atan2(c[0]);
    let (gx, gw) = gauss_legendre(per_panel);
    let h = PI / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel);
    let mut weights = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let lo = center - PI / 2.0 + p as f64 * h;
        for (g, w) in gx.iter().zip(&gw) {
            nodes.push(SpherePoint::from_angle(lo + 0.5 * h * (g + 1.0)));
            weights.push(0.5 * h * w);
        }
    }
    QuadratureRule { d: 2, exact_degree: 0, nodes, weights, antipodes: None }
}

fn hemi_sphere(x: &SpherePoint, panels: usize, per_panel: usize, azimuths: usize) -> QuadratureRule {
    let frame = orthonormal_frame(x);
    let (gx, gw) = gauss_legendre(per_panel);
    let h = 1.0 / panels as f64;
    let mut nodes = Vec::with_capacity(panels * per_panel * azimuths);
    let mut weights = Vec::with_capacity(panels * per_panel * azimuths);
    for p in 0..panels {
        for (g, w) in gx.iter().zip(&gw) {
            let t = p as f64 * h + 0.5 * h * (g + 1.0);
            let s = (1.0 - t * t).max(0.0).sqrt();
            for a in 0..azimuths {
                let phi = 2.0 * PI * a as f64 / azimuths as f64;
                let (sp, cp) = phi.sin_cos();
                let v: Vec<f64> = (0..3).map(|i| t * frame[0][i] + s * (cp * frame[1][i] + sp * frame[2][i])).collect();
                nodes.push(SpherePoint::normalized(v).expect("unit vector"));
                weights.push(0.5 * h * w * 2.0 * PI / azimuths as f64);
            }
        }
    }
    QuadratureRule { d: 3, exact_degree: 0, nodes, weights, antipodes: None }
}

/// Constants C such that the level-j rules (exact to 2^{j+1}) satisfy
/// |Xi_j| in [2^{j(d-1)}/C, C 2^{j(d-1)}] and omega(j, xi) in
/// [2^{-j(d-1)/2}/C, C 2^{-j(d-1)/2}] for j = 1..=j_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleFamilyConstants {
    pub cardinality: f64,
    pub weight: f64,
}

pub fn level_rule(d: usize, level: u32) -> Result<QuadratureRule> {
    if level == 0 {
        return Ok(QuadratureRule::singleton(d));
    }
    build_rule(d, 1usize << (level + 1))
}

pub fn rule_family_constants(d: usize, j_max: u32) -> Result<RuleFamilyConstants> {
    let mut card: f64 = 1.0;
    let mut weight: f64 = 1.0;
    for j in 1..=j_max {
        let rule = level_rule(d, j)?;
        let scale = 2f64.powi((j as i32) * (d as i32 - 1));
        let r = rule.len() as f64 / scale;
        card = card.max(r).max(1.0 / r);
        for w in rule.weights() {
            let r = w.sqrt() * scale.sqrt();
            weight = weight.max(r).max(1.0 / r);
        }
    }
    Ok(RuleFamilyConstants { cardinality: card, weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for m in [1usize, 2, 5, 16, 33, 200] {
            let (x, w) = gauss_legendre(m);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for p in 0..(2 * m) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let want = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert_relative_eq!(got, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn circle_rule_example() {
        let rule = build_rule(2, 3).unwrap();
        assert_eq!(rule.len(), 4);
        for (i, x) in rule.nodes().iter().enumerate() {
            let th = PI / 2.0 * i as f64;
            assert_relative_eq!(x.coords()[0], th.cos(), epsilon = 1e-15);
            assert_relative_eq!(x.coords()[1], th.sin(), epsilon = 1e-15);
        }
        for w in rule.weights() {
            assert_relative_eq!(*w, PI / 2.0, epsilon = 1e-15);
        }
        assert_relative_eq!(rule.weights().iter().sum::<f64>(), 2.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn sphere_rule_small() {
        let rule = build_rule(3, 1).unwrap();
        assert_eq!(rule.len(), 2);
        assert_relative_eq!(rule.integrate(|_| 1.0).unwrap(), 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn gram_identity_degree_five() {
        // L_5^2 has degree 10, so the rule must be exact to 10
        let rule = build_rule(3, 10).unwrap();
        let x = SpherePoint::normalized(vec![0.2, 0.4, -0.7]).unwrap();
        let l5 = ZonalSeries::single(3, 5).unwrap();
        let got = rule.integrate(|y| l5.eval(x.dot(y)).powi(2)).unwrap();
        assert_relative_eq!(got, 11.0 / (4.0 * PI), epsilon = 1e-10);
    }

    #[test]
    fn integrate_constants_and_odd_functions() {
        for (d, n) in [(2, 7), (2, 8), (3, 5), (3, 12)] {
            let rule = build_rule(d, n).unwrap();
            assert_relative_eq!(rule.integrate(|_| 2.5).unwrap(), 2.5 * sphere_area(d), epsilon = 1e-12);
            let odd = |x: &SpherePoint| x.coords()[0].powi(3) - 0.3 * x.coords()[1];
            assert!(rule.integrate(odd).unwrap().abs() < 1e-10);
        }
        let rule = build_rule(2, 4).unwrap();
        assert!(rule.integrate(|_| f64::NAN).is_err());
    }

    /// Dense Romberg oracle on the circle: trapezoid refinement with Richardson extrapolation.
    fn romberg_circle(f: impl Fn(f64) -> f64) -> f64 {
        let mut table: Vec<Vec<f64>> = Vec::new();
        let mut n = 4usize;
        for level in 0..12 {
            let h = 2.0 * PI / n as f64;
            let trap: f64 = (0..n).map(|i| f(i as f64 * h)).sum::<f64>() * h;
            let mut row = vec![trap];
            for m in 1..=level {
                let fac = 4f64.powi(m as i32);
                let prev: f64 = table[level - 1][m - 1];
                row.push((fac * row[m - 1] - prev) / (fac - 1.0));
            }
            table.push(row);
            n *= 2;
        }
        *table.last().unwrap().last().unwrap()
    }

    /// Fine lat-long grid oracle on S^2 (midpoint in polar angle, uniform azimuth).
    fn latlong_sphere(f: impl Fn(&SpherePoint) -> f64) -> f64 {
        let (nt, np) = (2000usize, 400usize);
        let mut acc = 0.0;
        for i in 0..nt {
            let th = PI * (i as f64 + 0.5) / nt as f64;
            for j in 0..np {
                let ph = 2.0 * PI * j as f64 / np as f64;
                acc += f(&SpherePoint::from_polar(th.cos(), ph)) * th.sin();
            }
        }
        acc * (PI / nt as f64) * (2.0 * PI / np as f64)
    }

    #[test]
    fn squared_harmonics_match_dense_oracles() {
        // h = cos(3 th) + 0.4 sin(2 th) on the circle, degree 3 <= N/2
        let rule = build_rule(2, 8).unwrap();
        let h = |th: f64| (3.0 * th).cos() + 0.4 * (2.0 * th).sin();
        let got = rule.integrate(|x| h(x.coords()[1].atan2(x.coords()[0])).powi(2)).unwrap();
        assert_relative_eq!(got, romberg_circle(|th| h(th).powi(2)), epsilon = 1e-8);

        let rule = build_rule(3, 8).unwrap();
        let c = SpherePoint::normalized(vec![0.5, -0.1, 0.3]).unwrap();
        let l3 = ZonalSeries::single(3, 3).unwrap();
        let h = |x: &SpherePoint| l3.eval(c.dot(x)) + 0.2 * x.coords()[0] * x.coords()[1];
        let got = rule.integrate(|x| h(x).powi(2)).unwrap();
        let want = latlong_sphere(|x| h(x).powi(2));
        assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn exactness_reports() {
        for (d, n) in [(2usize, 8usize), (3, 8), (3, 16)] {
            let rule = build_rule(d, n).unwrap();
            let report = rule.exactness_report(n / 2).unwrap();
            assert_eq!(report.len(), (n / 2 + 1).pow(2));
            assert!(report.iter().all(|r| r.residual <= 1e-9));
        }
        let rule = build_rule(2, 8).unwrap();
        let report = rule.exactness_report(0).unwrap();
        assert_eq!(report.len(), 1);
        assert!(report[0].residual <= 1e-12);
        // probing degree N+2 on the uniform circle rule aliases cos((N+1) th)
        let report = rule.exactness_report(5).unwrap();
        assert!(report.iter().any(|r| r.residual > 1e-6));
    }

    #[test]
    fn antipode_tables() {
        for (d, n) in [(2usize, 7usize), (3, 9)] {
            let rule = build_rule(d, n).unwrap();
            let anti = rule.antipodes().expect("symmetric");
            for (i, j) in anti.iter().enumerate() {
                let a = &rule.nodes()[i];
                let b = &rule.nodes()[*j];
                assert!(a.coords().iter().zip(b.coords()).all(|(p, q)| (p + q).abs() < 1e-12));
            }
        }
        assert!(build_rule(2, 8).unwrap().antipodes().is_none());
    }

    #[test]
    fn hemisphere_rules() {
        for x in [SpherePoint::from_angle(0.7), SpherePoint::normalized(vec![0.2, -0.6, 0.5]).unwrap()] {
            let d = x.dim();
            let rule = hemisphere_rule(&x, 10).unwrap();
            assert_relative_eq!(rule.integrate(|_| 1.0).unwrap(), sphere_area(d) / 2.0, epsilon = 1e-12);
            assert!(rule.nodes().iter().all(|b| x.dot(b) > 0.0));
            let comp = hemisphere_rule_composite(&x, 8, 12, 40).unwrap();
            assert_relative_eq!(comp.integrate(|b| x.dot(b)).unwrap(), rule.integrate(|b| x.dot(b)).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn family_constants() {
        for d in [2usize, 3] {
            let c = rule_family_constants(d, 6).unwrap();
            assert!(c.cardinality <= 8.0, "d={d} {c:?}");
            assert!(c.weight.is_finite() && c.weight >= 1.0);
            for j in 0..=6u32 {
                let rule = level_rule(d, j).unwrap();
                assert_relative_eq!(rule.weights().iter().sum::<f64>(), sphere_area(d), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn unsupported() {
        assert!(build_rule(4, 3).is_err());
        assert!(build_rule(2, 5000).is_err());
    }
}
