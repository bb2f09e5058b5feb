use needlet_choice::bench::{run_experiment, ExperimentConfig};
use needlet_choice::design_est::{default_trim, fit_design};
use needlet_choice::estimator::{ideal_estimate, plugin_estimate, EstimatorConfig, Mode, TrimmedDesign};
use needlet_choice::io::{read_sample, write_report, write_risk_table, write_sample};
use needlet_choice::model::{generate, sample_design, CoefficientDensity, DesignDensity};
use needlet_choice::{SpherePoint, Window};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn report_text(threads: usize) -> Vec<u8> {
    pool(threads).install(|| {
        let design = DesignDensity::uniform_hemisphere(3).unwrap();
        let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::north(3), 2.0).unwrap();
        let sample = generate(&design, &coeff, 3000, 21).unwrap();
        let report = ideal_estimate(&sample, &design, &EstimatorConfig::default()).unwrap();
        let mut out = Vec::new();
        write_report(&mut out, &report).unwrap();
        out
    })
}

#[test]
fn estimation_independent_of_worker_count() {
    let one = report_text(1);
    assert_eq!(one, report_text(4));
    assert_eq!(one, report_text(4));
}

#[test]
fn experiment_independent_of_worker_count() {
    let config = ExperimentConfig { n_grid: vec![300, 600], replications: 4, ..Default::default() };
    let text = |threads| {
        pool(threads).install(|| {
            let mut out = Vec::new();
            write_risk_table(&mut out, &run_experiment(&config).unwrap()).unwrap();
            out
        })
    };
    assert_eq!(text(1), text(3));
}

#[test]
fn sample_file_roundtrip_gives_same_estimate() {
    let design = DesignDensity::uniform_hemisphere(2).unwrap();
    let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::north(2), 1.0).unwrap();
    let sample = generate(&design, &coeff, 1500, 5).unwrap();
    let mut buf = Vec::new();
    write_sample(&mut buf, &sample).unwrap();
    let back = read_sample(buf.as_slice()).unwrap();
    let config = EstimatorConfig::default();
    let (a, b) = (ideal_estimate(&sample, &design, &config).unwrap(), ideal_estimate(&back, &design, &config).unwrap());
    assert_eq!(a.raw, b.raw);
    assert_eq!(a.thresholded, b.thresholded);
}

#[test]
fn plugin_with_exact_density_matches_ideal() {
    let design = DesignDensity::uniform_hemisphere(2).unwrap();
    let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::north(2), 1.0).unwrap();
    let sample = generate(&design, &coeff, 2000, 6).unwrap();
    let config = EstimatorConfig::default();
    let ideal = ideal_estimate(&sample, &design, &config).unwrap();
    let trimmed = TrimmedDesign::new(&design, 0.1).unwrap();
    let plug = plugin_estimate(&sample, &trimmed, 0.1, &config).unwrap();
    assert_eq!(ideal.raw, plug.raw);
    assert_eq!(ideal.j_max, plug.j_max);
}

#[test]
fn plugin_pipeline_on_boundary_vanishing_design() {
    let design = DesignDensity::boundary_vanishing(3, 1).unwrap();
    let coeff = CoefficientDensity::hemisphere_bump(SpherePoint::north(3), 2.0).unwrap();
    let n = 2000;
    let sample = generate(&design, &coeff, n, 8).unwrap();
    let first = sample_design(&design, n, 9).unwrap();
    let t = default_trim(n);
    let fitted = fit_design(&first, None, &Window::default()).unwrap().trim(t).unwrap();
    let report = plugin_estimate(&sample, &fitted, t, &EstimatorConfig::default()).unwrap();
    assert_eq!(report.mode, Mode::Plugin);
    assert!((report.inv_sup - 1.0 / t).abs() <= 1e-12);
    let probes = needlet_choice::build_rule(3, 20).unwrap();
    assert!(report.f_beta_many(probes.nodes()).iter().all(|v| v.is_finite() && *v >= 0.0));

    // ideal mode on this design needs the 1/t surrogate
    assert!(ideal_estimate(&sample, &design, &EstimatorConfig::default()).is_err());
    let surrogate = ideal_estimate(&sample, &design, &EstimatorConfig { trim: t, ..Default::default() }).unwrap();
    assert!(surrogate.inv_sup_surrogate);
}
