//! Small statistical toolkit shared by the experiments: moment summaries,
//! quantiles, least squares, Kolmogorov–Smirnov and chi-square tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};
use crate::numeric::CompensatedSum;

/// Sample mean, unbiased variance, and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { count: 0, mean: f64::NAN, variance: f64::NAN, stderr: f64::NAN };
        }
        let mut s = CompensatedSum::new();
        xs.iter().for_each(|&x| s.add(x));
        let mean = s.value() / n as f64;
        let mut ss = CompensatedSum::new();
        xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
        let variance = if n > 1 { ss.value() / (n - 1) as f64 } else { 0.0 };
        Self { count: n as u64, mean, variance, stderr: (variance / n as f64).sqrt() }
    }

    /// Summary of a Bernoulli sample with `hits` successes in `count` trials.
    pub fn of_proportion(hits: u64, count: u64) -> Self {
        if count == 0 {
            return Self { count: 0, mean: f64::NAN, variance: f64::NAN, stderr: f64::NAN };
        }
        let p = hits as f64 / count as f64;
        let variance = if count > 1 { p * (1.0 - p) * count as f64 / (count - 1) as f64 } else { 0.0 };
        Self { count, mean: p, variance, stderr: (variance / count as f64).sqrt() }
    }
}

/// Linear-interpolation quantile of an ascending sample.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("least squares needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("least squares needs distinct abscissae"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    Ok(LineFit { slope, intercept, residuals })
}

/// Asymptotic Kolmogorov distribution tail `P(K > λ)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powi(j as i32 - 1) * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF. Returns the
/// statistic `D` and the p-value from the Stephens-corrected asymptotic
/// distribution.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    (d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d))
}

/// Pearson chi-square test result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of categories after pooling sparse ones.
    pub categories: usize,
}

/// Two-sample chi-square test of homogeneity on paired category counts.
///
/// Categories whose smaller expected count falls below 5 are pooled into a
/// single bin; if that bin is itself too sparse it absorbs the next
/// sparsest category until it is not.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() {
        return Err(invalid("category counts must be paired"));
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(invalid("both samples must be nonempty"));
    }
    let total = (na + nb) as f64;
    let (fa, fb) = (na as f64 / total, nb as f64 / total);
    let min_expected = |col: u64| (col as f64 * fa).min(col as f64 * fb);

    let mut cols: Vec<(u64, u64)> = a.iter().zip(b).map(|(&x, &y)| (x, y)).filter(|(x, y)| x + y > 0).collect();
    cols.sort_by_key(|(x, y)| x + y);
    let mut pooled = (0u64, 0u64);
    let mut kept = Vec::new();
    let mut pooled_any = false;
    for (x, y) in cols {
        if min_expected(x + y) < 5.0 || (pooled_any && min_expected(pooled.0 + pooled.1) < 5.0) {
            pooled.0 += x;
            pooled.1 += y;
            pooled_any = true;
        } else {
            kept.push((x, y));
        }
    }
    if pooled_any {
        kept.push(pooled);
    }
    let k = kept.len();
    if k < 2 {
        return Ok(ChiSquare { statistic: 0.0, dof: 0, p_value: 1.0, categories: k });
    }
    let mut stat = 0.0;
    for (x, y) in &kept {
        let col = (x + y) as f64;
        let (ea, eb) = (col * fa, col * fb);
        stat += (*x as f64 - ea).powi(2) / ea + (*y as f64 - eb).powi(2) / eb;
    }
    let dof = k - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(ChiSquare { statistic: stat, dof, p_value: dist.sf(stat), categories: k })
}

/// Pearson goodness-of-fit test of counts against expected probabilities.
pub fn chi_square_goodness(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(invalid("need at least two paired categories"));
    }
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        stat += (c as f64 - e).powi(2) / e;
    }
    let dof = counts.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(ChiSquare { statistic: stat, dof, p_value: dist.sf(stat), categories: counts.len() })
}
