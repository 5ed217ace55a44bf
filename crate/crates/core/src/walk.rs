//! The associated random walk: increment laws, stable parameters, the
//! norming sequence c_n and path statistics.

use std::f64::consts::{FRAC_PI_2, PI};

use libm::{erf, erfc, tgamma as gamma};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;

/// Parameters of a strictly stable law with characteristic exponent
/// `c |t|^alpha (1 - i beta sgn(t) tan(pi alpha / 2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams<T> {
    pub alpha: T,
    pub beta: T,
    pub scale: T,
}

/// Checks membership in the admissible parameter set.
pub fn check_admissible(alpha: f64, beta: f64) -> Result<()> {
    let ok = if alpha == 1.0 || alpha == 2.0 { beta == 0.0 } else { alpha > 0.0 && alpha < 2.0 && beta.abs() < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("(alpha, beta) = ({alpha}, {beta}) is not admissible")))
    }
}

/// Positivity parameter rho = lim P(S_n > 0).
pub fn rho(alpha: f64, beta: f64) -> Result<f64> {
    check_admissible(alpha, beta)?;
    if alpha == 1.0 || alpha == 2.0 {
        return Ok(0.5);
    }
    Ok(0.5 + (beta * (PI * alpha / 2.0).tan()).atan() / (PI * alpha))
}

impl<T: Real> StableParams<T> {
    pub fn new(alpha: T, beta: T, scale: T) -> Result<Self> {
        check_admissible(alpha.f64(), beta.f64())?;
        if !(scale > T::zero()) {
            return Err(Error::InvalidParameter(format!("stable scale {scale} must be positive")));
        }
        Ok(Self { alpha, beta, scale })
    }

    /// Default scale 1/2, which makes the alpha = 2 law standard normal.
    pub fn standard(alpha: T, beta: T) -> Result<Self> {
        Self::new(alpha, beta, T::lit(0.5))
    }

    pub fn rho(&self) -> f64 {
        rho(self.alpha.f64(), self.beta.f64()).expect("validated at construction")
    }

    /// Exponent alpha (1 - rho) of V.
    pub fn v_exponent(&self) -> f64 {
        self.alpha.f64() * (1.0 - self.rho())
    }

    /// Exponent alpha rho of U.
    pub fn u_exponent(&self) -> f64 {
        self.alpha.f64() * self.rho()
    }

    /// sigma = c^(1/alpha).
    pub fn sigma(&self) -> f64 {
        self.scale.f64().powf(1.0 / self.alpha.f64())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::lit(sample_stable_f64(self.alpha.f64(), self.beta.f64(), self.sigma(), rng))
    }

    /// Distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        stable_cdf(self.alpha.f64(), self.beta.f64(), x / self.sigma())
    }

    /// Characteristic function E exp(itX) as (re, im).
    pub fn char_fn(&self, t: f64) -> (f64, f64) {
        let a = self.alpha.f64();
        let c = self.scale.f64();
        let modulus = (-c * t.abs().powf(a)).exp();
        let phase = if a == 1.0 || a == 2.0 {
            0.0
        } else {
            c * t.abs().powf(a) * self.beta.f64() * t.signum() * (PI * a / 2.0).tan()
        };
        (modulus * phase.cos(), modulus * phase.sin())
    }
}

/// Chambers–Mallows–Stuck draw with scale `sigma`.
fn sample_stable_f64<R: Rng + ?Sized>(alpha: f64, beta: f64, sigma: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let z: f64 = rng.sample(StandardNormal);
        return sigma * std::f64::consts::SQRT_2 * z;
    }
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return sigma * v.tan();
    }
    let w: f64 = rng.sample(Exp1);
    let t = beta * (PI * alpha / 2.0).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
    let x = s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
        * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
    sigma * x
}

/// Free-function form of [`StableParams::sample`].
pub fn sample_stable<T: Real, R: Rng + ?Sized>(params: &StableParams<T>, rng: &mut R) -> T {
    params.sample(rng)
}

/// CDF of the unit-scale law (sigma = 1) by Nolan's integral representation.
pub fn stable_cdf(alpha: f64, beta: f64, x: f64) -> f64 {
    if alpha == 2.0 {
        return 0.5 * erfc(-x / 2.0);
    }
    if alpha == 1.0 {
        return 0.5 + x.atan() / PI;
    }
    if x < 0.0 {
        return 1.0 - stable_cdf(alpha, -beta, -x);
    }
    let theta0 = (beta * (PI * alpha / 2.0).tan()).atan() / alpha;
    if x == 0.0 {
        return 0.5 - theta0 / PI;
    }
    let am1 = alpha - 1.0;
    let lead = (alpha * theta0).cos().powf(1.0 / am1);
    let xp = x.powf(alpha / am1);
    let integrand = |th: f64| {
        let v = lead * (th.cos() / (alpha * (theta0 + th)).sin()).powf(alpha / am1) * (alpha * theta0 + am1 * th).cos()
            / th.cos();
        let e = (-xp * v).exp();
        if e.is_nan() {
            0.0
        } else {
            e
        }
    };
    let integral = quad::integrate(integrand, -theta0, FRAC_PI_2, 1e-13, 1e-12);
    if alpha < 1.0 {
        ((FRAC_PI_2 - theta0) / PI + integral / PI).clamp(0.0, 1.0)
    } else {
        (1.0 - integral / PI).clamp(0.0, 1.0)
    }
}

/// Law of the increments X = log f'(1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IncrementLaw<T> {
    /// +-1 with probability 1/2 each.
    LatticeSsrw,
    Gaussian {
        sigma: T,
    },
    ExactStable(StableParams<T>),
    /// |Y| Pareto with P(|Y| > x) = x^(-alpha), x >= 1; positive with
    /// probability `right_weight`; centred when alpha > 1.
    TwoSidedPareto {
        alpha: T,
        right_weight: T,
    },
}

impl<T: Real> IncrementLaw<T> {
    pub fn gaussian(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
        }
        Ok(IncrementLaw::Gaussian { sigma })
    }

    pub fn exact_stable(params: StableParams<T>) -> Self {
        IncrementLaw::ExactStable(params)
    }

    pub fn two_sided_pareto(alpha: T, right_weight: T) -> Result<Self> {
        let beta = T::lit(2.0) * right_weight - T::one();
        if !(alpha > T::zero() && alpha < T::lit(2.0)) || !(right_weight >= T::zero() && right_weight <= T::one()) {
            return Err(Error::InvalidParameter("pareto needs 0 < alpha < 2 and weight in [0,1]".into()));
        }
        check_admissible(alpha.f64(), beta.f64())?;
        Ok(IncrementLaw::TwoSidedPareto { alpha, right_weight })
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, IncrementLaw::LatticeSsrw)
    }

    /// Whether E X exists (and is zero by construction).
    pub fn has_mean(&self) -> bool {
        match self {
            IncrementLaw::LatticeSsrw | IncrementLaw::Gaussian { .. } => true,
            IncrementLaw::ExactStable(p) => p.alpha.f64() > 1.0,
            IncrementLaw::TwoSidedPareto { alpha, .. } => alpha.f64() > 1.0,
        }
    }

    /// Leftmost point with G > 0.
    pub fn u_star(&self) -> f64 {
        match self {
            IncrementLaw::LatticeSsrw => 1.0,
            _ => 0.0,
        }
    }

    fn pareto_shift(alpha: f64, p: f64) -> f64 {
        if alpha > 1.0 {
            (2.0 * p - 1.0) * alpha / (alpha - 1.0)
        } else {
            0.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            IncrementLaw::LatticeSsrw => {
                if rng.random::<bool>() {
                    T::one()
                } else {
                    -T::one()
                }
            }
            IncrementLaw::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                *sigma * T::lit(z)
            }
            IncrementLaw::ExactStable(p) => p.sample(rng),
            IncrementLaw::TwoSidedPareto { alpha, right_weight } => {
                let (a, p) = (alpha.f64(), right_weight.f64());
                let u: f64 = 1.0 - rng.random::<f64>();
                let y = u.powf(-1.0 / a);
                let signed = if rng.random::<f64>() < p { y } else { -y };
                T::lit(signed - Self::pareto_shift(a, p))
            }
        }
    }

    /// Parameters (alpha, beta) of the attracting stable law, with the scale
    /// of the limit of S_n / c_n.
    pub fn limit_params(&self) -> StableParams<T> {
        let (alpha, beta) = match self {
            IncrementLaw::LatticeSsrw | IncrementLaw::Gaussian { .. } => (2.0, 0.0),
            IncrementLaw::ExactStable(p) => (p.alpha.f64(), p.beta.f64()),
            IncrementLaw::TwoSidedPareto { alpha, right_weight } => (alpha.f64(), 2.0 * right_weight.f64() - 1.0),
        };
        let scale = if alpha == 2.0 { 0.5 } else { (2.0 - alpha) / (alpha * tail_constant(alpha)) };
        StableParams::new(T::lit(alpha), T::lit(beta), T::lit(scale)).expect("admissible by construction")
    }

    /// G(u) = u^-2 E[X^2; |X| <= u].
    pub fn truncated_second_moment(&self, u: f64) -> f64 {
        if !(u > 0.0) {
            return 0.0;
        }
        match self {
            IncrementLaw::LatticeSsrw => {
                if u >= 1.0 {
                    1.0 / (u * u)
                } else {
                    0.0
                }
            }
            IncrementLaw::Gaussian { sigma } => gaussian_g(sigma.f64(), u),
            IncrementLaw::ExactStable(p) => {
                let (a, b, s) = (p.alpha.f64(), p.beta.f64(), p.sigma());
                if a == 2.0 {
                    gaussian_g(s * std::f64::consts::SQRT_2, u)
                } else if a == 1.0 {
                    2.0 * s / PI * (u - s * (u / s).atan()) / (u * u)
                } else {
                    let tail = |x: f64| {
                        let z = x / s;
                        1.0 - stable_cdf(a, b, z) + stable_cdf(a, b, -z)
                    };
                    let inner = quad::integrate(|x| x * tail(x), 0.0, u, 1e-10 * u * u, 1e-10);
                    (2.0 * inner / (u * u) - tail(u)).max(0.0)
                }
            }
            IncrementLaw::TwoSidedPareto { alpha, right_weight } => {
                let (a, p) = (alpha.f64(), right_weight.f64());
                let mu = Self::pareto_shift(a, p);
                // Right branch: X = y - mu with y >= 1.
                let right = p * pareto_piece(a, mu, (mu - u).max(1.0), mu + u);
                // Left branch: X = -w - mu with w >= 1, so X^2 = (w + mu)^2.
                let left = (1.0 - p) * pareto_piece(a, -mu, (-u - mu).max(1.0), u - mu);
                (right + left) / (u * u)
            }
        }
    }

    /// c_n = inf{u >= u* : G(v) <= 1/n for all v >= u}, by bisection.
    pub fn norming_cn(&self, n: u64) -> f64 {
        let target = 1.0 / n.max(1) as f64;
        let g = |u: f64| self.truncated_second_moment(u);
        let star = self.u_star();
        let mut hi = (n.max(1) as f64).sqrt().max(1.0);
        while g(hi) > target {
            hi *= 2.0;
        }
        // Walk down until G exceeds the level (or the support edge is hit).
        let mut lo = hi;
        let mut steps = 0;
        loop {
            let next = (lo / 2.0).max(star);
            if next == lo || steps > 80 {
                return lo;
            }
            if g(next) > target {
                lo = next;
                break;
            }
            hi = next;
            lo = next;
            steps += 1;
        }
        if lo == hi {
            return hi;
        }
        while (hi - lo) > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if g(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Stable tail constant: P(|X| > x) ~ C_alpha c x^(-alpha) for scale c.
fn tail_constant(alpha: f64) -> f64 {
    if alpha == 1.0 {
        2.0 / PI
    } else {
        (1.0 - alpha) / (gamma(2.0 - alpha) * (PI * alpha / 2.0).cos())
    }
}

fn gaussian_g(sigma: f64, u: f64) -> f64 {
    let z = u / sigma;
    let mass = erf(z / std::f64::consts::SQRT_2);
    let phi = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    sigma * sigma * (mass - 2.0 * z * phi) / (u * u)
}

/// int_lo^hi y^e dy.
fn power_integral(e: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if (e + 1.0).abs() < 1e-14 {
        (hi / lo).ln()
    } else {
        (hi.powf(e + 1.0) - lo.powf(e + 1.0)) / (e + 1.0)
    }
}

/// int_lo^hi (y - c)^2 alpha y^(-alpha-1) dy.
fn pareto_piece(alpha: f64, c: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    alpha
        * (power_integral(1.0 - alpha, lo, hi) - 2.0 * c * power_integral(-alpha, lo, hi)
            + c * c * power_integral(-alpha - 1.0, lo, hi))
}

/// Summary statistics of a path S_0, ..., S_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStatistics<T> {
    /// L_n = min_{0 <= j <= n} S_j.
    pub min: T,
    /// M_n = max_{1 <= j <= n} S_j (0 for the empty walk).
    pub max: T,
    /// First index attaining L_n.
    pub argmin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath<T> {
    values: Vec<T>,
}

impl<T: Real> WalkPath<T> {
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        match values.first() {
            Some(v) if *v == T::zero() => Ok(Self { values }),
            _ => Err(Error::InvalidParameter("path must start at S_0 = 0".into())),
        }
    }

    /// Path started at an arbitrary point (used by conditioned samplers).
    pub fn from_values_at(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("empty path".into()));
        }
        Ok(Self { values })
    }

    pub fn from_increments(increments: &[T]) -> Self {
        Self::from_increments_at(T::zero(), increments)
    }

    pub fn from_increments_at(start: T, increments: &[T]) -> Self {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut s = start;
        values.push(s);
        for x in increments {
            s += *x;
            values.push(s);
        }
        Self { values }
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn end(&self) -> T {
        *self.values.last().expect("nonempty path")
    }

    pub fn statistics(&self) -> PathStatistics<T> {
        path_statistics(&self.values)
    }

    /// L_{k,n} = min_{k <= j <= n} S_j.
    pub fn min_from(&self, k: usize) -> T {
        self.values[k..].iter().copied().fold(T::infinity(), T::min)
    }

    /// Post-k minimum L̂_{k,n} = min_{0 <= j <= n-k} (S_{k+j} - S_k).
    pub fn post_min(&self, k: usize) -> T {
        self.min_from(k) - self.values[k]
    }

    /// First index j >= k with S_j - S_k = L̂_{k,n}.
    pub fn post_argmin(&self, k: usize) -> usize {
        let mut best = k;
        for j in k + 1..self.values.len() {
            if self.values[j] < self.values[best] {
                best = j;
            }
        }
        best
    }
}

/// Single left-to-right scan; ties in the minimum go to the first index.
pub fn path_statistics<T: Real>(values: &[T]) -> PathStatistics<T> {
    let mut min = values[0];
    let mut argmin = 0;
    let mut max = if values.len() > 1 { T::neg_infinity() } else { T::zero() };
    for (j, v) in values.iter().enumerate().skip(1) {
        if *v < min {
            min = *v;
            argmin = j;
        }
        if *v > max {
            max = *v;
        }
    }
    PathStatistics { min, max, argmin }
}

pub fn simulate_walk<T: Real, R: Rng + ?Sized>(law: &IncrementLaw<T>, n: usize, rng: &mut R) -> WalkPath<T> {
    let mut values = Vec::with_capacity(n + 1);
    let mut s = T::zero();
    values.push(s);
    for _ in 0..n {
        s += law.sample(rng);
        values.push(s);
    }
    WalkPath { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeeder;

    #[test]
    fn rho_values() {
        assert_eq!(rho(2.0, 0.0).unwrap(), 0.5);
        assert_eq!(rho(1.5, 0.0).unwrap(), 0.5);
        assert!((rho(1.5, 0.5).unwrap() - 0.4016).abs() < 1e-4);
        assert!(rho(1.0, 0.3).is_err());
        assert!(rho(2.5, 0.0).is_err());
        assert!(rho(1.5, 1.0).is_err());
    }

    #[test]
    fn lattice_g_and_cn() {
        let law = IncrementLaw::<f64>::LatticeSsrw;
        assert_eq!(law.truncated_second_moment(2.0), 0.25);
        assert_eq!(law.truncated_second_moment(0.5), 0.0);
        assert!((law.norming_cn(100) - 10.0).abs() < 1e-7);
        assert!((law.norming_cn(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_g_matches_quadrature() {
        let law = IncrementLaw::gaussian(1.0).unwrap();
        let oracle = quad::integrate(|x| x * x * (-0.5 * x * x).exp() / (2.0 * PI).sqrt(), -1.0, 1.0, 1e-14, 1e-14);
        let g1 = law.truncated_second_moment(1.0);
        assert!((g1 - oracle).abs() < 1e-12, "{g1} vs {oracle}");
        assert!((law.truncated_second_moment(1.0) - 0.198_748).abs() < 1e-5);
        let c = law.norming_cn(10_000);
        assert!((c / 100.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn pareto_g_matches_quadrature() {
        let law = IncrementLaw::<f64>::two_sided_pareto(1.5, 0.7).unwrap();
        let mu = (2.0 * 0.7 - 1.0) * 1.5 / 0.5;
        for u in [0.5, 2.0, 7.0, 40.0] {
            let dens = |y: f64| 1.5 * y.powf(-2.5);
            let right = quad::integrate(
                |y| {
                    if (y - mu).abs() <= u {
                        (y - mu).powi(2) * dens(y)
                    } else {
                        0.0
                    }
                },
                1.0,
                mu + u + 1.0,
                1e-12,
                1e-12,
            );
            let left = quad::integrate(
                |w| {
                    if (w + mu).abs() <= u {
                        (w + mu).powi(2) * dens(w)
                    } else {
                        0.0
                    }
                },
                1.0,
                u + mu.abs() + 1.0,
                1e-12,
                1e-12,
            );
            let oracle = (0.7 * right + 0.3 * left) / (u * u);
            let g = law.truncated_second_moment(u);
            assert!((g - oracle).abs() < 1e-6 * oracle.max(1e-3), "u={u}: {g} vs {oracle}");
        }
    }

    #[test]
    fn stable_cdf_edges() {
        for &(a, b) in &[(1.5, 0.5), (0.8, -0.3), (1.2, 0.0)] {
            let r = rho(a, b).unwrap();
            assert!((stable_cdf(a, b, 0.0) - (1.0 - r)).abs() < 1e-12);
            assert!((stable_cdf(a, b, 1e-6) - (1.0 - r)).abs() < 1e-3);
            assert!(stable_cdf(a, b, 1e4) > 0.99);
            assert!(stable_cdf(a, b, -1e4) < 0.01);
            let mut prev = 0.0;
            for i in -40..=40 {
                let f = stable_cdf(a, b, i as f64 * 0.25);
                assert!(f >= prev - 1e-9);
                prev = f;
            }
        }
    }

    #[test]
    fn stable_cdf_matches_sampler() {
        let p = StableParams::<f64>::standard(1.5, 0.5).unwrap();
        let mut rng = StreamSeeder::new(5).replicate(0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
        for x in [-2.0, -0.5, 0.3, 1.0, 3.0] {
            let emp = xs.iter().filter(|v| **v <= x).count() as f64 / n as f64;
            assert!((emp - p.cdf(x)).abs() < 0.005, "x={x}: {emp} vs {}", p.cdf(x));
        }
    }

    #[test]
    fn path_statistics_examples() {
        let p = WalkPath::from_values(vec![0.0, 1.0, -1.0, -1.0]).unwrap();
        let s = p.statistics();
        assert_eq!((s.min, s.max, s.argmin), (-1.0, 1.0, 2));
        let q = WalkPath::from_values(vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!((q.statistics().min, q.statistics().argmin), (0.0, 0));
        let e = WalkPath::from_values(vec![0.0_f64]).unwrap();
        assert_eq!((e.statistics().min, e.statistics().max, e.statistics().argmin), (0.0, 0.0, 0));
        assert_eq!(p.post_min(1), -2.0);
        assert_eq!(p.post_argmin(1), 2);
    }

    #[test]
    fn cn_is_monotone() {
        let laws = [
            IncrementLaw::<f64>::LatticeSsrw,
            IncrementLaw::gaussian(1.3).unwrap(),
            IncrementLaw::two_sided_pareto(1.5, 0.5).unwrap(),
        ];
        for law in &laws {
            let mut prev = 0.0;
            for k in 0..12 {
                let c = law.norming_cn(1 << k);
                assert!(c >= prev, "{law:?}");
                prev = c;
            }
        }
    }
}
