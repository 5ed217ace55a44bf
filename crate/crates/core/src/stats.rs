//! Empirical distribution functions, Kolmogorov–Smirnov distances,
//! bootstrap intervals and a few small regression helpers.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }

    /// Normal-approximation interval at `z` standard errors.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.value - z * self.se, self.value + z * self.se)
    }

    /// |self - other| measured in joint standard errors of two independent estimates.
    pub fn joint_z(&self, other: &Estimate) -> f64 {
        let se = self.se.hypot(other.se);
        let d = (self.value - other.value).abs();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }
}

pub fn mean_se(values: &[f64]) -> Result<Estimate> {
    if values.is_empty() {
        return Err(Error::EmptyInput("mean of no values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok(Estimate::new(mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Estimate::new(mean, (var / n).sqrt()))
}

/// Running sums for a mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn estimate(&self) -> Estimate {
        if self.n == 0.0 {
            return Estimate::new(f64::NAN, f64::NAN);
        }
        let mean = self.sum / self.n;
        if self.n < 2.0 {
            return Estimate::new(mean, 0.0);
        }
        let var = ((self.sum_sq - self.n * mean * mean) / (self.n - 1.0)).max(0.0);
        Estimate::new(mean, (var / self.n).sqrt())
    }
}

/// Self-normalised weighted mean `Σ w f / Σ w` with its delta-method SE.
pub fn weighted_mean_se(values: &[f64], weights: &[f64]) -> Result<Estimate> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::EmptyInput("weighted mean needs matching non-empty inputs".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyInput("all weights are zero".into()));
    }
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values.iter().zip(weights).map(|(v, w)| (w * (v - mean)).powi(2)).sum::<f64>() / (total * total);
    Ok(Estimate::new(mean, var.sqrt()))
}

/// Right-continuous, possibly weighted, empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    cumulative: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        Self::weighted(values, &vec![1.0; values.len()])
    }

    pub fn weighted(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("empirical CDF of no samples".into()));
        }
        if values.len() != weights.len() {
            return Err(Error::InvalidParameter("values and weights differ in length".into()));
        }
        if values.iter().any(|v| v.is_nan()) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("NaN sample or negative weight".into()));
        }
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if total <= 0.0 {
            return Err(Error::EmptyInput("all weights are zero".into()));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(pairs.len());
        for p in &pairs {
            acc += p.1;
            cumulative.push((acc / total).min(1.0));
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            values: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            cumulative,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Kish effective sample size.
    pub fn effective_size(&self) -> f64 {
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        self.total * self.total / sq
    }

    /// F(x) = mass of samples ≤ x.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|v| *v <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// F(x−) = mass of samples < x.
    pub fn eval_left(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|v| *v < x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// P(Y ≥ x) = 1 − F(x−).
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.eval_left(x)
    }

    /// Distinct sample points with F just below and at each point.
    fn jumps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= self.values.len() {
                return None;
            }
            let v = self.values[i];
            let before = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
            while i + 1 < self.values.len() && self.values[i + 1] == v {
                i += 1;
            }
            let at = self.cumulative[i];
            i += 1;
            Some((v, before, at))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub sample_size: usize,
    pub reference: String,
    pub threshold: f64,
    pub passed: bool,
    pub ci: Option<(f64, f64)>,
}

/// Sup-distance between an empirical CDF and a reference CDF, taken over both
/// sides of every sample jump and over the supplied reference grid.
pub fn ks_statistic<R: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, reference: R, grid: &[f64]) -> f64 {
    let mut d: f64 = 0.0;
    for (v, before, at) in ecdf.jumps() {
        let r = reference(v);
        d = d.max((before - r).abs()).max((at - r).abs());
    }
    for &g in grid {
        let r = reference(g);
        d = d.max((ecdf.eval(g) - r).abs());
    }
    d.min(1.0)
}

pub fn ks_distance<R: Fn(f64) -> f64>(
    ecdf: &EmpiricalCdf,
    reference: R,
    reference_name: &str,
    grid: &[f64],
    threshold: f64,
) -> KsResult {
    let statistic = ks_statistic(ecdf, reference, grid);
    KsResult {
        statistic,
        sample_size: ecdf.len(),
        reference: reference_name.to_string(),
        threshold,
        passed: statistic <= threshold,
        ci: None,
    }
}

/// Two-sample KS distance sup |F₁ − F₂|.
pub fn ks_two_sample(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let mut d: f64 = 0.0;
    for x in a.values().iter().chain(b.values()) {
        d = d.max((a.eval(*x) - b.eval(*x)).abs());
        d = d.max((a.eval_left(*x) - b.eval_left(*x)).abs());
    }
    d
}

/// Percentile bootstrap interval of `statistic`. When `clusters` is given,
/// whole clusters (e.g. all replicas sharing one environment) are resampled.
pub fn bootstrap_ci<S, R>(
    values: &[f64],
    clusters: Option<&[u64]>,
    statistic: S,
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> Result<(f64, f64)>
where
    S: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if values.is_empty() {
        return Err(Error::EmptyInput("bootstrap of no values".into()));
    }
    let groups: Vec<Vec<f64>> = match clusters {
        Some(labels) => {
            if labels.len() != values.len() {
                return Err(Error::InvalidParameter("cluster labels differ in length".into()));
            }
            let mut map: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for (v, l) in values.iter().zip(labels) {
                map.entry(*l).or_default().push(*v);
            }
            map.into_values().collect()
        }
        None => values.iter().map(|v| vec![*v]).collect(),
    };
    let k = groups.len();
    let mut stats = Vec::with_capacity(resamples);
    let mut buf = Vec::with_capacity(values.len());
    for _ in 0..resamples.max(1) {
        buf.clear();
        for _ in 0..k {
            buf.extend_from_slice(&groups[rng.random_range(0..k)]);
        }
        stats.push(statistic(&buf));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let q = |p: f64| {
        let idx = ((stats.len() - 1) as f64 * p).round() as usize;
        stats[idx.min(stats.len() - 1)]
    };
    Ok((q(alpha), q(1.0 - alpha)))
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, se(b))`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::EmptyInput("linear fit needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((intercept, slope, se))
}

/// Weighted pool-adjacent-violators projection onto nondecreasing sequences.
pub fn isotonic_nondecreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (v, w) in values.iter().zip(weights) {
        let w = w.max(1e-300);
        blocks.push((*v, w, 1));
        while blocks.len() > 1 {
            let (v2, w2, n2) = blocks[blocks.len() - 1];
            let (v1, w1, n1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().expect("nonempty");
            *last = ((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, n1 + n2);
        }
    }
    blocks.iter().flat_map(|(v, _, n)| std::iter::repeat_n(*v, *n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeeder;

    #[test]
    fn ecdf_is_right_continuous() {
        let e = EmpiricalCdf::new(&[0.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(e.eval(-1.0), 0.0);
        assert_eq!(e.eval(1.0), 0.75);
        assert_eq!(e.eval_left(1.0), 0.25);
        assert_eq!(e.survival(1.0), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
        assert!(EmpiricalCdf::new(&[]).is_err());
    }

    #[test]
    fn ks_of_own_quantiles_is_small() {
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let e = EmpiricalCdf::new(&xs).unwrap();
        let r = ks_distance(&e, |x| x.clamp(0.0, 1.0), "uniform", &[], 0.01);
        assert!(r.passed && r.statistic <= 0.01);
    }

    #[test]
    fn disjoint_samples_have_ks_one() {
        let a = EmpiricalCdf::new(&[0.0, 0.1, 0.2]).unwrap();
        let b = EmpiricalCdf::new(&[1.0, 1.5]).unwrap();
        assert_eq!(ks_two_sample(&a, &b), 1.0);
        let r = ks_statistic(&a, |x| if x >= 1.0 { 1.0 } else { 0.0 }, &[]);
        assert_eq!(r, 1.0);
    }

    #[test]
    fn bootstrap_width_matches_binomial_se() {
        let p = 0.3;
        let n = 2000;
        let mut rng = StreamSeeder::new(11).replicate(0);
        let xs: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 }).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let (lo, hi) =
            bootstrap_ci(&xs, None, |v| v.iter().sum::<f64>() / v.len() as f64, 1000, 0.95, &mut rng).unwrap();
        let se_boot = (hi - lo) / (2.0 * 1.959_964);
        let se_exact = (mean * (1.0 - mean) / n as f64).sqrt();
        assert!((se_boot / se_exact - 1.0).abs() < 0.2, "{se_boot} vs {se_exact}");
    }

    #[test]
    fn cluster_bootstrap_resamples_groups() {
        let vals = [1.0, 1.0, 5.0, 5.0];
        let labels = [0, 0, 1, 1];
        let mut rng = StreamSeeder::new(3).replicate(0);
        let (lo, hi) = bootstrap_ci(&vals, Some(&labels), |v| v.len() as f64, 50, 0.9, &mut rng).unwrap();
        assert_eq!((lo, hi), (4.0, 4.0));
    }

    #[test]
    fn pava_projects_to_monotone() {
        let v = isotonic_nondecreasing(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4]);
        assert_eq!(v, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b, se) = linear_fit(&x, &y).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12 && se < 1e-12);
    }

    #[test]
    fn weighted_mean() {
        let e = weighted_mean_se(&[1.0, 3.0], &[1.0, 3.0]).unwrap();
        assert!((e.value - 2.5).abs() < 1e-12);
        assert!(weighted_mean_se(&[1.0], &[0.0]).is_err());
    }
}
