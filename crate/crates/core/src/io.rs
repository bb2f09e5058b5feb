//! Delimited-text readers and writers.
//!
//! Samples are comma separated (`x1,...,xd,y`). Reports, pyramids, rules and
//! risk tables are tab separated. Lines starting with `#` carry metadata.

use crate::bench::{fmt_num, RiskTable};
use crate::error::{Error, Result};
use crate::estimator::EstimationReport;
use crate::hemispherical::EigenvalueTable;
use crate::model::Sample;
use crate::needlet::{CoefficientPyramid, NeedletFrame};
use crate::quadrature::QuadratureRule;
use crate::sphere::SpherePoint;
use std::io::{Read, Write};

/// Accepted deviation of a stored point from unit norm before renormalizing.
const READ_NORM_TOL: f64 = 1e-6;

fn tsv<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(w)
}

fn coord_headers(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

/// Writes `# seed=...` followed by the CSV body.
pub fn write_sample<W: Write>(mut w: W, sample: &Sample) -> Result<()> {
    writeln!(w, "# seed={}", sample.seed)?;
    let d = sample.dim().unwrap_or(0);
    let mut out = csv::Writer::from_writer(w);
    let mut header = coord_headers("x", d);
    header.push("y".into());
    out.write_record(&header)?;
    for (x, y) in sample.x.iter().zip(&sample.y) {
        let mut row: Vec<String> = x.coords().iter().map(|c| c.to_string()).collect();
        row.push(y.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sample<R: Read>(mut r: R) -> Result<Sample> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut seed = 0;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("seed=") {
            seed = v.trim().parse().map_err(|_| Error::Parse { line: 1, msg: format!("bad seed {v:?}") })?;
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let width = reader.headers()?.len();
    if width < 3 {
        return Err(Error::Parse { line: 1, msg: format!("expected at least 3 columns, got {width}") });
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("not a number: {s:?}") });
        let coords = rec.iter().take(width - 1).map(parse).collect::<Result<Vec<f64>>>()?;
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= READ_NORM_TOL) {
            return Err(Error::Parse { line, msg: format!("point has norm {norm}, expected 1") });
        }
        let y = parse(&rec[width - 1])?;
        if y != 1.0 && y != -1.0 {
            return Err(Error::Parse { line, msg: format!("label {y} is not -1 or 1") });
        }
        xs.push(SpherePoint::new(coords.clone()).or_else(|_| SpherePoint::normalized(coords))?);
        ys.push(y as i8);
    }
    Sample::new(xs, ys, seed)
}

/// Per-coefficient table: node, raw estimate, sigma, M, T and whether it was kept.
pub fn write_report<W: Write>(mut w: W, report: &EstimationReport) -> Result<()> {
    writeln!(
        w,
        "# n={} gamma={} J={} mode={:?} inv_sup={} inv_sup_surrogate={} kept={}",
        report.n,
        report.gamma,
        report.j_max,
        report.mode,
        report.inv_sup,
        report.inv_sup_surrogate,
        report.kept_count()
    )?;
    let d = report.frame.dim();
    let mut out = tsv(w);
    let mut header: Vec<String> = vec!["j".into(), "xi".into()];
    header.extend(coord_headers("node", d));
    header.extend(["beta_hat", "sigma_hat", "sup_bound", "threshold", "kept"].map(String::from));
    out.write_record(&header)?;
    for r in &report.records {
        let mut row = vec![r.j.to_string(), r.xi.to_string()];
        row.extend(report.frame.node(r.j, r.xi).coords().iter().map(|c| c.to_string()));
        row.extend([r.beta_hat, r.sigma_hat, r.sup_bound, r.threshold].map(|v| v.to_string()));
        row.push(u8::from(r.kept).to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// f_hat_beta on the given points.
pub fn write_density_grid<W: Write>(w: W, report: &EstimationReport, grid: &[SpherePoint]) -> Result<()> {
    let d = report.frame.dim();
    let mut out = tsv(w);
    let mut header = coord_headers("x", d);
    header.push("f_beta".into());
    out.write_record(&header)?;
    for (x, v) in grid.iter().zip(report.f_beta_many(grid)) {
        let mut row: Vec<String> = x.coords().iter().map(|c| c.to_string()).collect();
        row.push(v.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_pyramid<W: Write>(w: W, frame: &NeedletFrame, coeffs: &CoefficientPyramid) -> Result<()> {
    coeffs.check_shape(frame)?;
    let mut out = tsv(w);
    let mut header: Vec<String> = vec!["j".into(), "xi".into()];
    header.extend(coord_headers("node", frame.dim()));
    header.push("value".into());
    out.write_record(&header)?;
    for (j, xi, v) in coeffs.iter() {
        let mut row = vec![j.to_string(), xi.to_string()];
        row.extend(frame.node(j, xi).coords().iter().map(|c| c.to_string()));
        row.push(v.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rule<W: Write>(mut w: W, rule: &QuadratureRule) -> Result<()> {
    writeln!(w, "# d={} exact_degree={} nodes={}", rule.dim(), rule.exact_degree(), rule.len())?;
    let mut out = tsv(w);
    let mut header = coord_headers("x", rule.dim());
    header.push("weight".into());
    out.write_record(&header)?;
    for (x, wt) in rule.nodes().iter().zip(rule.weights()) {
        let mut row: Vec<String> = x.coords().iter().map(|c| c.to_string()).collect();
        row.push(wt.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_eigenvalues<W: Write>(w: W, table: &EigenvalueTable) -> Result<()> {
    let mut out = tsv(w);
    out.write_record(["k", "d", "lambda"])?;
    for (k, v) in table.values().iter().enumerate() {
        out.write_record([k.to_string(), table.dim().to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Risk table with the full config echoed as `#` lines; numbers use [`fmt_num`].
pub fn write_risk_table<W: Write>(mut w: W, table: &RiskTable) -> Result<()> {
    let c = &table.config;
    writeln!(w, "# d={} design={:?} coefficient={:?}", c.d, c.design, c.coefficient)?;
    writeln!(
        w,
        "# mode={:?} gamma={} p={} replications={} seed={} j_max={:?} trim={:?} window_sharpness={} nominal_s={}",
        c.mode, c.gamma, c.p, c.replications, c.seed, c.j_max, c.trim, c.window_sharpness, c.nominal_s
    )?;
    writeln!(
        w,
        "# slope={} slope_se={} nominal_mu={} zone={} comparison=indicative",
        fmt_num(table.slope),
        fmt_num(table.slope_se),
        fmt_num(table.nominal_mu),
        table.zone
    )?;
    let mut out = tsv(w);
    out.write_record(["n", "t_n", "mean", "median", "std_err", "mean_J", "mean_kept"])?;
    for r in &table.rows {
        out.write_record([
            r.n.to_string(),
            fmt_num(r.t_n),
            fmt_num(r.mean),
            fmt_num(r.median),
            fmt_num(r.std_err),
            fmt_num(r.mean_j),
            fmt_num(r.mean_kept),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, CoefficientDensity, DesignDensity};

    fn sample() -> Sample {
        let design = DesignDensity::uniform_hemisphere(3).unwrap();
        let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::north(3), 2.0).unwrap();
        generate(&design, &coeff, 50, 17).unwrap()
    }

    #[test]
    fn sample_roundtrip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        write_sample(&mut buf, &s).unwrap();
        let back = read_sample(buf.as_slice()).unwrap();
        assert_eq!(back.x, s.x);
        assert_eq!(back.y, s.y);
        assert_eq!(back.seed, 17);
    }

    #[test]
    fn malformed_samples_rejected() {
        assert!(matches!(read_sample("x1,x2,y\n1,0,2\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_sample("x1,x2,y\n0.5,0,1\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_sample("x1,x2,y\nabc,0,1\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(read_sample("x1,y\n1,1\n".as_bytes()).is_err());
        assert!(matches!(read_sample("x1,x2,y\n-1,0,1\n".as_bytes()), Err(Error::OutOfRange(_))));
        let ok = read_sample("# seed=4\nx1,x2,y\n0.6,0.8,-1\n".as_bytes()).unwrap();
        assert_eq!((ok.len(), ok.seed, ok.y[0]), (1, 4, -1));
    }

    #[test]
    fn rule_and_eigen_tables() {
        let rule = crate::quadrature::build_rule(2, 4).unwrap();
        let mut buf = Vec::new();
        write_rule(&mut buf, &rule).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2 + rule.len());
        let mut buf = Vec::new();
        write_eigenvalues(&mut buf, &EigenvalueTable::new(2, 3).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().any(|l| l == "1\t2\t2"));
    }
}
