//! Offspring laws, their generating functions and the environment models
//! that produce an i.i.d. sequence of such laws.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamSeeder;
use crate::scalar::Real;
use crate::stats::{bootstrap_ci, Estimate};
use crate::walk::IncrementLaw;

/// Above this many parents a generation total is drawn from the exact law
/// of the sum (negative binomial, Poisson, binomial mixtures) instead of
/// parent by parent.
pub const SUM_SHORTCUT: f64 = 32.0;
/// Above this many parents the total is drawn from a moment-matched normal.
pub const NORMAL_APPROX: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub enum OffspringKind<T> {
    /// P(k) = (1/(1+m)) (m/(1+m))^k.
    Geometric,
    Poisson,
    /// f(s) = 1 - m(1-s)/(1 + b(1-s)) with b = eta m / 2.
    LinearFractional {
        eta: T,
    },
    /// P(k) = probs[k]. `heavy_tail` marks a truncated stand-in for a law
    /// whose second moment is treated as divergent.
    Explicit {
        probs: Vec<T>,
        heavy_tail: bool,
    },
}

/// One reproduction law Q with its cached moments.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw<T> {
    kind: OffspringKind<T>,
    mean: T,
    log_mean: T,
    second_factorial: T,
}

impl<T: Real> OffspringLaw<T> {
    pub fn geometric(mean: T) -> Result<Self> {
        check_mean(mean)?;
        Ok(Self::geometric_unchecked(mean, mean.ln()))
    }

    /// Geometric law with P(0) = `q` (success probability of the trial).
    pub fn geometric_with_zero_prob(q: T) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::InvalidParameter(format!("geometric P(0) = {q} not in (0,1)")));
        }
        Self::geometric((T::one() - q) / q)
    }

    fn geometric_unchecked(mean: T, log_mean: T) -> Self {
        Self { kind: OffspringKind::Geometric, mean, log_mean, second_factorial: T::lit(2.0) * mean * mean }
    }

    pub fn poisson(mean: T) -> Result<Self> {
        check_mean(mean)?;
        Ok(Self::poisson_unchecked(mean, mean.ln()))
    }

    fn poisson_unchecked(mean: T, log_mean: T) -> Self {
        Self { kind: OffspringKind::Poisson, mean, log_mean, second_factorial: mean * mean }
    }

    /// Linear-fractional law with mean `m` and `eta = f''(1)/m^2`.
    /// Requires `m <= 1 + eta m / 2` so that P(0) >= 0.
    pub fn linear_fractional(mean: T, eta: T) -> Result<Self> {
        check_mean(mean)?;
        Self::linear_fractional_unchecked(mean, mean.ln(), eta)
    }

    fn linear_fractional_unchecked(mean: T, log_mean: T, eta: T) -> Result<Self> {
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("linear-fractional eta = {eta} must be positive")));
        }
        let b = eta * mean / T::lit(2.0);
        if mean > T::one() + b {
            return Err(Error::InvalidParameter(format!(
                "linear-fractional law with mean {mean} and eta {eta} has negative P(0)"
            )));
        }
        Ok(Self { kind: OffspringKind::LinearFractional { eta }, mean, log_mean, second_factorial: eta * mean * mean })
    }

    pub fn explicit(probs: Vec<T>) -> Result<Self> {
        Self::explicit_inner(probs, false)
    }

    pub fn explicit_heavy_tailed(probs: Vec<T>) -> Result<Self> {
        Self::explicit_inner(probs, true)
    }

    pub fn point_mass(k: usize) -> Self {
        let mut probs = vec![T::zero(); k + 1];
        probs[k] = T::one();
        Self::explicit(probs).expect("point mass is a valid law")
    }

    fn explicit_inner(probs: Vec<T>, heavy_tail: bool) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(*p >= T::zero())) {
            return Err(Error::InvalidParameter("explicit law needs nonnegative probabilities".into()));
        }
        let total: f64 = probs.iter().map(|p| p.f64()).sum();
        if (total - 1.0).abs() > 1e-12_f64.max(4.0 * T::epsilon().f64()) {
            return Err(Error::InvalidParameter(format!("explicit probabilities sum to {total}")));
        }
        let (mut m, mut f2) = (0.0, 0.0);
        for (k, p) in probs.iter().enumerate() {
            let k = k as f64;
            m += k * p.f64();
            f2 += k * (k - 1.0) * p.f64();
        }
        let mean = T::lit(m);
        Ok(Self {
            kind: OffspringKind::Explicit { probs, heavy_tail },
            mean,
            log_mean: mean.ln(),
            second_factorial: T::lit(f2),
        })
    }

    pub fn kind(&self) -> &OffspringKind<T> {
        &self.kind
    }

    /// m = f'(1).
    pub fn mean(&self) -> T {
        self.mean
    }

    /// X = log f'(1).
    pub fn log_mean(&self) -> T {
        self.log_mean
    }

    /// f''(1).
    pub fn second_factorial(&self) -> T {
        self.second_factorial
    }

    /// eta = f''(1)/f'(1)^2.
    pub fn eta(&self) -> T {
        match &self.kind {
            OffspringKind::LinearFractional { eta } => *eta,
            OffspringKind::Geometric => T::lit(2.0),
            OffspringKind::Poisson => T::one(),
            OffspringKind::Explicit { .. } => {
                if self.mean > T::zero() {
                    self.second_factorial / (self.mean * self.mean)
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn variance(&self) -> T {
        self.second_factorial + self.mean - self.mean * self.mean
    }

    /// f(s); errors outside [0, 1].
    pub fn gf_eval(&self, s: T) -> Result<T> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(Error::Domain(format!("generating function argument {s} outside [0,1]")));
        }
        Ok(self.gf(s))
    }

    /// f(s) without the domain check.
    pub fn gf(&self, s: T) -> T {
        let one = T::one();
        let m = self.mean;
        match &self.kind {
            OffspringKind::Geometric => one / (one + m * (one - s)),
            OffspringKind::Poisson => (m * (s - one)).exp(),
            OffspringKind::LinearFractional { eta } => {
                let b = *eta * m / T::lit(2.0);
                let t = one - s;
                one - m * t / (one + b * t)
            }
            OffspringKind::Explicit { probs, .. } => probs.iter().rev().fold(T::zero(), |acc, p| acc * s + *p),
        }
    }

    /// 1 - f(1 - t), evaluated without cancellation for small t.
    pub fn gf_complement(&self, t: T) -> T {
        let one = T::one();
        let m = self.mean;
        match &self.kind {
            OffspringKind::Geometric => m * t / (one + m * t),
            OffspringKind::Poisson => -(-(m * t)).exp_m1(),
            OffspringKind::LinearFractional { eta } => m * t / (one + *eta * m / T::lit(2.0) * t),
            OffspringKind::Explicit { probs, .. } => {
                let l = (-t).ln_1p();
                let mut acc = T::zero();
                for (k, p) in probs.iter().enumerate().skip(1) {
                    if *p > T::zero() {
                        acc -= *p * (T::lit(k as f64) * l).exp_m1();
                    }
                }
                acc.min(one)
            }
        }
    }

    /// ln Q({k}); `-inf` for impossible values.
    pub fn ln_pmf(&self, k: u64) -> f64 {
        let m = self.mean.f64();
        let kf = k as f64;
        match &self.kind {
            OffspringKind::Geometric => -m.ln_1p() + kf * (m / (1.0 + m)).ln(),
            OffspringKind::Poisson => {
                if m == 0.0 {
                    if k == 0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    -m + kf * m.ln() - libm::lgamma(kf + 1.0)
                }
            }
            OffspringKind::LinearFractional { eta } => {
                let (p0, r) = lf_parts(m, eta.f64());
                if k == 0 {
                    p0.ln()
                } else {
                    (1.0 - p0).ln() + (1.0 - r).ln() + (kf - 1.0) * r.ln()
                }
            }
            OffspringKind::Explicit { probs, .. } => probs.get(k as usize).map_or(f64::NEG_INFINITY, |p| p.f64().ln()),
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// One draw from Q.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let m = self.mean.f64();
        match &self.kind {
            OffspringKind::Geometric => geometric_failures(1.0 / (1.0 + m), rng),
            OffspringKind::Poisson => {
                if m <= 0.0 {
                    0
                } else {
                    Poisson::new(m).map_or(0, |d| d.sample(rng) as u64)
                }
            }
            OffspringKind::LinearFractional { eta } => {
                let (p0, r) = lf_parts(m, eta.f64());
                if rng.random::<f64>() < p0 {
                    0
                } else {
                    1 + geometric_failures(1.0 - r, rng)
                }
            }
            OffspringKind::Explicit { probs, .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut last = 0;
                for (k, p) in probs.iter().enumerate() {
                    let p = p.f64();
                    if p > 0.0 {
                        last = k;
                    }
                    acc += p;
                    if u < acc {
                        return k as u64;
                    }
                }
                last as u64
            }
        }
    }

    /// Total offspring of `parents` independent individuals. Counts are
    /// carried as `f64`: exact integers up to [`NORMAL_APPROX`], a
    /// moment-matched normal draw above it.
    pub fn sample_sum<R: Rng + ?Sized>(&self, parents: f64, rng: &mut R) -> f64 {
        if parents <= 0.0 {
            return 0.0;
        }
        if parents > NORMAL_APPROX {
            let mu = parents * self.mean.f64();
            let sd = (parents * self.variance().f64().max(0.0)).sqrt();
            let draw = Normal::new(mu, sd).map_or(mu, |d| d.sample(rng));
            return draw.round().max(0.0);
        }
        if parents <= SUM_SHORTCUT {
            let n = parents as u64;
            return (0..n).map(|_| self.sample(rng)).sum::<u64>() as f64;
        }
        let m = self.mean.f64();
        match &self.kind {
            OffspringKind::Geometric => negative_binomial(parents, m, rng),
            OffspringKind::Poisson => poisson(parents * m, rng),
            OffspringKind::LinearFractional { eta } => {
                let (p0, r) = lf_parts(m, eta.f64());
                let positive = binomial(parents, 1.0 - p0, rng);
                positive + negative_binomial(positive, r / (1.0 - r), rng)
            }
            OffspringKind::Explicit { probs, .. } => {
                let mut remaining = parents;
                let mut mass = 1.0;
                let mut total = 0.0;
                for (k, p) in probs.iter().enumerate() {
                    if remaining <= 0.0 || mass <= 0.0 {
                        break;
                    }
                    let p = p.f64();
                    let count = if p >= mass { remaining } else { binomial(remaining, p / mass, rng) };
                    total += count * k as f64;
                    remaining -= count;
                    mass -= p;
                }
                total
            }
        }
    }

    /// zeta(a) = sum_{k >= a} k^2 Q({k}) / m^2.
    pub fn zeta(&self, a: u64) -> Result<f64> {
        if let OffspringKind::Explicit { heavy_tail: true, .. } = self.kind {
            return Err(Error::UnsupportedLaw("second moment treated as divergent".into()));
        }
        let m = self.mean.f64();
        if m <= 0.0 {
            return Ok(0.0);
        }
        let m2 = m * m;
        let full = (self.second_factorial.f64() + m) / m2;
        if a == 0 {
            return Ok(full);
        }
        if let OffspringKind::Explicit { probs, .. } = &self.kind {
            let s: f64 = probs.iter().enumerate().skip(a as usize).map(|(k, p)| (k * k) as f64 * p.f64()).sum();
            return Ok(s / m2);
        }
        let mode = self.mode();
        if a <= mode {
            let head: f64 = (1..a).map(|k| (k * k) as f64 * self.pmf(k)).sum();
            return Ok((full - head / m2).max(0.0));
        }
        // Terms decrease past the mode; sum the tail until negligible.
        let mut sum = 0.0;
        let mut k = a;
        loop {
            let term = (k as f64).powi(2) * self.pmf(k);
            sum += term;
            if term == 0.0 || term < 1e-15 * sum {
                break;
            }
            k += 1;
        }
        Ok(sum / m2)
    }

    /// Smallest k with k^2 Q({k}) nonincreasing beyond it (upper bound).
    fn mode(&self) -> u64 {
        let m = self.mean.f64();
        match &self.kind {
            OffspringKind::Geometric | OffspringKind::LinearFractional { .. } => (2.0 * (1.0 + m) + 2.0).ceil() as u64,
            OffspringKind::Poisson => (m + 2.0 * m.sqrt() + 3.0).ceil() as u64,
            OffspringKind::Explicit { probs, .. } => probs.len() as u64,
        }
    }
}

fn check_mean<T: Real>(mean: T) -> Result<()> {
    if mean > T::zero() && mean.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("offspring mean {mean} must be in (0, inf)")))
    }
}

/// (P(0), ratio r) for the linear-fractional law: P(k) = (1-P(0))(1-r) r^(k-1).
fn lf_parts(m: f64, eta: f64) -> (f64, f64) {
    let b = eta * m / 2.0;
    ((1.0 - m / (1.0 + b)).max(0.0), b / (1.0 + b))
}

fn geometric_failures<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    Geometric::new(p).map_or(0, |d| d.sample(rng))
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda > 1e15 {
        let d = Normal::new(lambda, lambda.sqrt()).expect("finite normal");
        return d.sample(rng).round().max(0.0);
    }
    Poisson::new(lambda).map_or(0.0, |d| d.sample(rng))
}

/// Number of failures before `r` successes, mean `r * odds`, via the
/// gamma-Poisson mixture.
fn negative_binomial<R: Rng + ?Sized>(r: f64, odds: f64, rng: &mut R) -> f64 {
    if r <= 0.0 || odds <= 0.0 {
        return 0.0;
    }
    let lambda = Gamma::new(r, odds).map_or(r * odds, |d| d.sample(rng));
    poisson(lambda, rng)
}

fn binomial<R: Rng + ?Sized>(n: f64, p: f64, rng: &mut R) -> f64 {
    if n <= 0.0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return n;
    }
    if n < 1e15 {
        return Binomial::new(n as u64, p).map_or(0.0, |d| d.sample(rng) as f64);
    }
    let d = Normal::new(n * p, (n * p * (1.0 - p)).sqrt()).expect("finite normal");
    d.sample(rng).round().clamp(0.0, n)
}

pub(crate) fn binomial_count<R: Rng + ?Sized>(n: f64, p: f64, rng: &mut R) -> f64 {
    binomial(n, p, rng)
}

/// How a law Q is built from a drawn log-mean X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OffspringFamily<T> {
    Geometric,
    Poisson,
    LinearFractional { eta: T },
}

impl<T: Real> OffspringFamily<T> {
    /// Law with mean e^x; its `log_mean` is `x` bit for bit.
    pub fn build(&self, x: T) -> Result<OffspringLaw<T>> {
        let mean = x.exp();
        check_mean(mean)?;
        match *self {
            OffspringFamily::Geometric => Ok(OffspringLaw::geometric_unchecked(mean, x)),
            OffspringFamily::Poisson => Ok(OffspringLaw::poisson_unchecked(mean, x)),
            OffspringFamily::LinearFractional { eta } => OffspringLaw::linear_fractional_unchecked(mean, x, eta),
        }
    }
}

/// Source of the i.i.d. laws Q_1, Q_2, ...
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentModel<T> {
    Iid { increments: IncrementLaw<T>, family: OffspringFamily<T> },
    Constant(OffspringLaw<T>),
}

impl<T: Real> EnvironmentModel<T> {
    pub fn iid(increments: IncrementLaw<T>, family: OffspringFamily<T>) -> Self {
        EnvironmentModel::Iid { increments, family }
    }

    /// Draws one law together with its log-mean.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OffspringLaw<T>> {
        match self {
            EnvironmentModel::Iid { increments, family } => family.build(increments.sample(rng)),
            EnvironmentModel::Constant(law) => Ok(law.clone()),
        }
    }

    /// Draws only the log-mean (cheaper when the law itself is not needed).
    pub fn draw_log_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            EnvironmentModel::Iid { increments, .. } => increments.sample(rng),
            EnvironmentModel::Constant(law) => law.log_mean(),
        }
    }

    /// The law this model attaches to a drawn log-mean `x`.
    pub fn law_for_log_mean(&self, x: T) -> Result<OffspringLaw<T>> {
        match self {
            EnvironmentModel::Iid { family, .. } => family.build(x),
            EnvironmentModel::Constant(law) => Ok(law.clone()),
        }
    }

    /// The common eta when every law is linear-fractional (geometric
    /// included), so that extinction probabilities have the exact
    /// J-functional form.
    pub fn linear_fractional_eta(&self) -> Option<T> {
        match self {
            EnvironmentModel::Iid { family: OffspringFamily::Geometric, .. } => Some(T::lit(2.0)),
            EnvironmentModel::Iid { family: OffspringFamily::LinearFractional { eta }, .. } => Some(*eta),
            EnvironmentModel::Iid { .. } => None,
            EnvironmentModel::Constant(law) => match law.kind() {
                OffspringKind::Geometric | OffspringKind::LinearFractional { .. } => Some(law.eta()),
                _ => None,
            },
        }
    }

    pub fn is_linear_fractional(&self) -> bool {
        self.linear_fractional_eta().is_some()
    }

    pub fn increments(&self) -> Option<&IncrementLaw<T>> {
        match self {
            EnvironmentModel::Iid { increments, .. } => Some(increments),
            EnvironmentModel::Constant(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Finite,
    Suspect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDiagnostic {
    pub estimate: Estimate,
    pub ci: (f64, f64),
    pub running_max: f64,
    pub verdict: Verdict,
}

/// Monte Carlo estimate of E (log+ zeta(a))^(alpha + eps) over the
/// environment, with a heuristic finiteness verdict.
///
/// The verdict is "suspect" when a single draw carries more than a quarter
/// of the total, or when the running maximum grows faster than twice the
/// logarithmic rate between n/16 and n draws. It is a diagnostic only.
pub fn check_condition_a2<T: Real>(
    env: &EnvironmentModel<T>,
    a: u64,
    alpha: f64,
    eps: f64,
    n_samples: usize,
    seeder: &StreamSeeder,
) -> Result<MomentDiagnostic> {
    if n_samples < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 samples, got {n_samples}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let power = alpha + eps;
    let mut rng = seeder.replicate(0);
    let mut values = Vec::with_capacity(n_samples);
    let mut running = Vec::with_capacity(n_samples);
    let mut max = 0.0_f64;
    for _ in 0..n_samples {
        let law = env.draw(&mut rng)?;
        let z = law.zeta(a)?;
        let g = if z > 1.0 { z.ln().powf(power) } else { 0.0 };
        max = max.max(g);
        values.push(g);
        running.push(max);
    }
    let estimate = crate::stats::mean_se(&values)?;
    let mut boot_rng = seeder.replicate(1);
    let ci = bootstrap_ci(&values, None, |v| v.iter().sum::<f64>() / v.len() as f64, 1000, 0.95, &mut boot_rng)?;
    let total: f64 = values.iter().sum();
    let early = running[n_samples / 16 - 1];
    let log_bound = (n_samples as f64).ln() / ((n_samples / 16) as f64).ln();
    let dominated = total > 0.0 && max / total > 0.25;
    let fast = early > 0.0 && max / early > 2.0 * log_bound;
    let verdict = if dominated || fast { Verdict::Suspect } else { Verdict::Finite };
    Ok(MomentDiagnostic { estimate, ci, running_max: max, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf_basics() {
        let g = OffspringLaw::<f64>::geometric_with_zero_prob(0.25).unwrap();
        assert!((g.gf_eval(0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((g.gf_eval(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(g.gf_eval(1.5).is_err());
        let p = OffspringLaw::<f64>::poisson(1.0).unwrap();
        let series: f64 = (0..40).map(|k| p.pmf(k)).sum::<f64>();
        assert!((series - 1.0).abs() < 1e-12);
        assert!((p.gf_eval(0.0).unwrap() - p.pmf(0)).abs() < 1e-15);
    }

    #[test]
    fn complement_matches_difference() {
        let laws = [
            OffspringLaw::<f64>::geometric(1.7).unwrap(),
            OffspringLaw::poisson(0.6).unwrap(),
            OffspringLaw::linear_fractional(1.3, 2.5).unwrap(),
            OffspringLaw::explicit(vec![0.2, 0.3, 0.5]).unwrap(),
        ];
        for law in &laws {
            for &t in &[0.9, 0.3, 1e-3] {
                let direct = 1.0 - law.gf(1.0 - t);
                assert!((law.gf_complement(t) - direct).abs() < 1e-12, "{law:?} t={t}");
            }
        }
    }

    #[test]
    fn lf_pmf_matches_gf() {
        let law = OffspringLaw::<f64>::linear_fractional(1.4, 3.0).unwrap();
        let s: f64 = 0.37;
        let series: f64 = (0..400).map(|k| law.pmf(k) * s.powi(k as i32)).sum();
        assert!((series - law.gf(s)).abs() < 1e-12);
        assert!(OffspringLaw::<f64>::linear_fractional(5.0, 0.1).is_err());
    }

    #[test]
    fn zeta_values() {
        let two = OffspringLaw::<f64>::point_mass(2);
        assert_eq!(two.zeta(0).unwrap(), 1.0);
        assert_eq!(two.zeta(3).unwrap(), 0.0);
        let g = OffspringLaw::<f64>::geometric_with_zero_prob(0.5).unwrap();
        assert!((g.zeta(0).unwrap() - 3.0).abs() < 1e-12);
        // zeta(a) against a brute-force series.
        for a in [1, 3, 10, 40] {
            let brute: f64 = (a..2000).map(|k| (k * k) as f64 * 0.5_f64.powi(k as i32 + 1)).sum();
            assert!((g.zeta(a).unwrap() - brute).abs() < 1e-12 * brute.max(1.0), "a={a}");
        }
        let heavy = OffspringLaw::<f64>::explicit_heavy_tailed(vec![0.5, 0.5]).unwrap();
        assert!(matches!(heavy.zeta(0), Err(Error::UnsupportedLaw(_))));
    }

    #[test]
    fn family_recovers_log_mean() {
        for x in [-1.3_f64, 0.0, 0.7] {
            let law = OffspringFamily::Geometric.build(x).unwrap();
            assert_eq!(law.log_mean(), x);
            assert!((law.mean().ln() - x).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_over_f32() {
        let law = OffspringLaw::<f32>::geometric(1.0).unwrap();
        assert!((law.gf(0.0) - 0.5).abs() < 1e-6);
        assert_eq!(law.eta(), 2.0);
    }
}
