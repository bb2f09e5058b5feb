use crate::error::{invalid, Error, Result};

/// Gegenbauer polynomial C_k^mu(t) by the upward three-term recursion
/// (k+2) C_{k+2} = 2(mu+k+1) t C_{k+1} - (2mu+k) C_k, seeded with
/// C_0 = 1 and C_1 = 2 mu t.
///
/// For mu = 0 the classical polynomials vanish identically for k >= 1; we
/// return the limit lim C_k^mu / mu = (2/k) T_k(t), which keeps C_1^0 = 2t
/// and makes C_k^0(t) / C_k^0(1) = cos(k arccos t).
pub fn gegenbauer_eval(mu: f64, k: usize, t: f64) -> Result<f64> {
    if !mu.is_finite() || mu < -0.5 {
        return Err(invalid(format!("gegenbauer index mu={mu} must be >= -1/2")));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("gegenbauer argument".into()));
    }
    if t.abs() > 1.0 + 1e-12 {
        return Err(invalid(format!("gegenbauer argument {t} outside [-1, 1]")));
    }
    super::check_degree(k)?;
    let t = t.clamp(-1.0, 1.0);
    if k == 0 {
        return Ok(1.0);
    }
    if mu == 0.0 {
        return Ok(2.0 / k as f64 * chebyshev_t(k, t));
    }
    Ok(upward(mu, k, t))
}

/// C_k^mu(1) = (2mu)_k / k!, with the same mu = 0 convention as [`gegenbauer_eval`].
pub fn gegenbauer_at_one(mu: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mu == 0.0 {
        return 2.0 / k as f64;
    }
    (0..k).fold(1.0, |acc, i| acc * (2.0 * mu + i as f64) / (i as f64 + 1.0))
}

fn upward(mu: f64, k: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    let mut cur = 2.0 * mu * t;
    for m in 1..k {
        let m = m as f64;
        let next = (2.0 * (mu + m) * t * cur - (2.0 * mu + m - 1.0) * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn chebyshev_t(k: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    let mut cur = t;
    for _ in 1..k {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    if k == 0 {
        prev
    } else {
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Hypergeometric-style power series
    /// C_k^mu(t) = sum_m (-1)^m Gamma(k-m+mu) / (Gamma(mu) m! (k-2m)!) (2t)^{k-2m}.
    fn power_series(mu: f64, k: usize, t: f64) -> f64 {
        let mut total = 0.0;
        for m in 0..=k / 2 {
            // Gamma(k-m+mu)/Gamma(mu) = (mu)_{k-m}
            let poch: f64 = (0..k - m).map(|i| mu + i as f64).product();
            let fm: f64 = (1..=m).map(|i| i as f64).product();
            let fr: f64 = (1..=k - 2 * m).map(|i| i as f64).product();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * poch / (fm * fr) * (2.0 * t).powi((k - 2 * m) as i32);
        }
        total
    }

    /// Cosine expansion C_k^mu(cos th) = sum_m (mu)_m (mu)_{k-m} / (m! (k-m)!) cos((k-2m) th).
    /// All terms are positive for mu > 0, so it stays accurate at high degree.
    /// Returns the value and the sum of absolute terms (the scale).
    fn cosine_series(mu: f64, k: usize, t: f64) -> (f64, f64) {
        let th = t.clamp(-1.0, 1.0).acos();
        let mut coef = vec![1.0; k + 1];
        for m in 1..=k {
            coef[m] = coef[m - 1] * (mu + m as f64 - 1.0) / m as f64;
        }
        let mut value = 0.0;
        let mut scale = 0.0;
        for m in 0..=k {
            let c = coef[m] * coef[k - m];
            value += c * ((k as f64 - 2.0 * m as f64) * th).cos();
            scale += c;
        }
        (value, scale)
    }

    #[test]
    fn low_degree_examples() {
        assert_eq!(gegenbauer_eval(1.7, 0, 0.7).unwrap(), 1.0);
        assert_relative_eq!(gegenbauer_eval(0.5, 1, 0.3).unwrap(), 0.3, epsilon = 1e-15);
        let want = power_series(0.5, 2, 0.3);
        assert_relative_eq!(gegenbauer_eval(0.5, 2, 0.3).unwrap(), want, epsilon = 1e-12);
        // Legendre P_2(0.3) = (3*0.09 - 1)/2
        assert_relative_eq!(want, -0.365, epsilon = 1e-14);
        assert_relative_eq!(gegenbauer_eval(0.0, 1, 0.4).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn matches_power_series_at_low_degree() {
        for &mu in &[0.5, 1.0, 1.5, 2.5] {
            for k in 0..12 {
                for &t in &[-1.0, -0.73, -0.1, 0.0, 0.42, 0.9, 1.0] {
                    let got = gegenbauer_eval(mu, k, t).unwrap();
                    let want = power_series(mu, k, t);
                    assert_relative_eq!(got, want, epsilon = 1e-11, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn recursion_stable_to_degree_256() {
        // d = 3, 4 via the positive cosine series; d = 2 via cos(k th).
        for &mu in &[0.5, 1.0] {
            for k in [1, 2, 17, 64, 127, 200, 256] {
                for i in 0..=40 {
                    let t = -1.0 + 2.0 * i as f64 / 40.0;
                    let got = gegenbauer_eval(mu, k, t).unwrap();
                    assert!(got.is_finite());
                    let (want, scale) = cosine_series(mu, k, t);
                    assert!((got - want).abs() <= 1e-9 * scale, "mu={mu} k={k} t={t}");
                }
            }
        }
        for k in [1, 5, 100, 256] {
            for i in 0..=40 {
                let t = -1.0 + 2.0 * i as f64 / 40.0;
                let ratio = gegenbauer_eval(0.0, k, t).unwrap() / gegenbauer_at_one(0.0, k);
                assert!((ratio - (k as f64 * t.acos()).cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn value_at_one() {
        for &mu in &[0.0, 0.5, 1.0, 2.0] {
            for k in 0..30 {
                assert_relative_eq!(
                    gegenbauer_eval(mu, k, 1.0).unwrap(),
                    gegenbauer_at_one(mu, k),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(gegenbauer_eval(-0.6, 3, 0.1).is_err());
        assert!(gegenbauer_eval(0.5, 3, f64::NAN).is_err());
        assert!(gegenbauer_eval(0.5, 3, 1.1).is_err());
        assert!(gegenbauer_eval(0.5, 5000, 0.1).is_err());
        assert!(gegenbauer_eval(0.5, 3, 1.0 + 1e-13).is_ok());
    }
}
