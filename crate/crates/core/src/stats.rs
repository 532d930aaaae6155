//! Small statistical toolkit used by the experiment reports and test suites.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sample mean and standard deviation (n − 1 denominator; 0 for n < 2).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    // shifted by the first sample so that identical samples are exact
    let n = xs.len() as f64;
    let x0 = xs[0];
    let shift = xs.iter().map(|x| x - x0).sum::<f64>() / n;
    let mean = x0 + shift;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - x0 - shift).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pearson chi-square goodness of fit. Categories with zero expected
/// probability must have zero observations and are dropped from the
/// statistic. Returns `(statistic, p_value)`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != probs.len() {
        return Err(Error::Domain("observed and expected lengths differ".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientSamples("no observations".into()));
    }
    let mut stat = 0.0;
    let mut categories = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            if o > 0 {
                return Ok((f64::INFINITY, 0.0));
            }
            continue;
        }
        let e = p * total as f64;
        stat += (o as f64 - e).powi(2) / e;
        categories += 1;
    }
    if categories < 2 {
        return Ok((0.0, 1.0));
    }
    let dist = ChiSquared::new((categories - 1) as f64).expect("positive degrees of freedom");
    Ok((stat, dist.sf(stat)))
}

/// Asymptotic Kolmogorov survival function Q(λ) = 2 Σ (−1)^(k−1) exp(−2k²λ²).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test. Returns `(D, p_value)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples("both samples must be non-empty".into()));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sq = ne.sqrt();
    let p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
    Ok((d, p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value (normal approximation, tie and continuity corrected).
    pub p_value: f64,
    /// `U − n₁n₂/2`; positive when the first sample tends to be larger.
    pub shift: f64,
}

pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples("both samples must be non-empty".into()));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let n = pooled.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += pooled[i..=j].iter().filter(|x| x.1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let shift = u - n1 * n2 / 2.0;
    let nt = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    let p_value = if var <= 0.0 || shift == 0.0 {
        1.0
    } else {
        let z = (shift.abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(MannWhitney { u, p_value, shift })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Residual sum of squares.
    pub sse: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientSamples("need at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        sse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-12);
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
        assert_eq!(mean_std(&[0.7168; 30]), (0.7168, 0.0));
    }

    #[test]
    fn chi_square_known_value() {
        // 2 categories, observed 60/40 vs 0.5/0.5: stat = 4, p = 0.0455
        let (stat, p) = chi_square_gof(&[60, 40], &[0.5, 0.5]).unwrap();
        assert!((stat - 4.0).abs() < 1e-12);
        assert!((p - 0.045500263896358).abs() < 1e-9);
    }

    #[test]
    fn mann_whitney_identical_and_disjoint() {
        let a = [3.0; 10];
        let r = mann_whitney(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.shift, 0.0);

        let low: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let high: Vec<f64> = (0..8).map(|i| 100.0 + i as f64).collect();
        let r = mann_whitney(&low, &high).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.shift < 0.0);
        assert!(r.p_value < 0.01, "{}", r.p_value);
    }

    #[test]
    fn mann_whitney_matches_reference() {
        // scipy.stats.mannwhitneyu([1,2,3,4,5],[3,4,5,6,7,8], alternative='two-sided',
        // method='asymptotic', use_continuity=True) -> U = 4.5, p = 0.066015...
        let r = mann_whitney(&[1.0, 2.0, 3.0, 4.0, 5.0], &[3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(r.u, 4.5);
        assert!((r.p_value - 0.066015431521231).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn ks_detects_shift_and_accepts_equal() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let (d, p) = ks_two_sample(&a, &a).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
        let b: Vec<f64> = (0..200).map(|i| i as f64 + 100.0).collect();
        let (d, p) = ks_two_sample(&a, &b).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!(p < 1e-10);
    }

    #[test]
    fn linear_fit_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }
}
