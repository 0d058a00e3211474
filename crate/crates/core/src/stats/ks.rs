//! Kolmogorov–Smirnov distances and the reference laws used in the tests.

use crate::error::{Error, Result};

/// CDF of the exponential law with the given rate.
pub fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |z| if z <= 0.0 { 0.0 } else { -(-rate * z).exp_m1() }
}

/// CDF of the Laplace law centred at 0 with the given scale
/// (density `exp(-|z|/scale) / (2 scale)`). Scale 2 is the law of the
/// difference of two independent rate-1/2 exponentials.
pub fn laplace_cdf(scale: f64) -> impl Fn(f64) -> f64 {
    move |z| {
        if z < 0.0 {
            0.5 * (z / scale).exp()
        } else {
            1.0 - 0.5 * (-z / scale).exp()
        }
    }
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: samples.len() });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &z) in sorted.iter().enumerate() {
        let f = cdf(z);
        d = d.max((k + 1) as f64 / n - f).max(f - k as f64 / n);
    }
    Ok(d)
}

/// Two-sample KS distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    for s in [a, b] {
        if s.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ia, mut ib) = (0, 0);
    let mut d: f64 = 0.0;
    while ia < a.len() && ib < b.len() {
        let z = a[ia].min(b[ib]);
        while ia < a.len() && a[ia] <= z {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= z {
            ib += 1;
        }
        d = d.max((ia as f64 / na - ib as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample critical distance at level `alpha`.
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
