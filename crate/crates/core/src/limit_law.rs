//! The limit law D(x) of the scaled log reduced-population size and the
//! endpoint law of the walk under P+, by closed form and by Monte Carlo.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conditioned::{sample_pplus, sample_pplus_endpoint, Renewal, WeightedPoint};
use crate::error::{Error, Result};
use crate::parallel::{map_chunks, CHUNK};
use crate::quad;
use crate::rng::StreamSeeder;
use crate::stats::{mean_se, weighted_mean_se, Estimate};
use crate::walk::{rho, IncrementLaw};

pub const DEFAULT_X_GRID: [f64; 8] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitRoute {
    ClosedFormBrownian,
    MeanderMc,
    PplusMc,
    Infimum,
}

impl LimitRoute {
    pub fn name(&self) -> &'static str {
        match self {
            LimitRoute::ClosedFormBrownian => "closed-form-brownian",
            LimitRoute::MeanderMc => "meander-mc",
            LimitRoute::PplusMc => "pplus-mc",
            LimitRoute::Infimum => "infimum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawSpec {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub c0: Option<Estimate>,
    pub route: LimitRoute,
}

impl LimitLawSpec {
    pub fn new(alpha: f64, beta: f64, route: LimitRoute) -> Result<Self> {
        if route == LimitRoute::ClosedFormBrownian && alpha != 2.0 {
            return Err(Error::UnsupportedLaw("the closed form needs alpha = 2".into()));
        }
        let rho = rho(alpha, beta)?;
        Ok(Self { alpha, beta, rho, c0: None, route })
    }

    /// alpha (1 - rho).
    pub fn exponent(&self) -> f64 {
        self.alpha * (1.0 - self.rho)
    }
}

/// D(x) for alpha = 2: 2 (1 - Phi(x)).
pub fn d_brownian(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("D is defined for x >= 0, got {x}")));
    }
    Ok(libm::erfc(x / std::f64::consts::SQRT_2))
}

/// C0 int_x^inf (z - x) z e^{-z^2/2} dz with C0 = sqrt(2/pi): the meander
/// form of D for alpha = 2 evaluated by quadrature.
pub fn d_brownian_quadrature(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("D is defined for x >= 0, got {x}")));
    }
    let f = |z: f64| (z - x) * z * (-0.5 * z * z).exp();
    Ok(SQRT_2_OVER_PI * quad::integrate_to_infinity(f, x, 1e-14, 1e-13))
}

/// P(|N(0, I_3)| <= z), the endpoint law of the Bessel(3) process at time 1.
pub fn maxwell_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    libm::erf(z / std::f64::consts::SQRT_2) - SQRT_2_OVER_PI * z * (-0.5 * z * z).exp()
}

/// |N(0, I_3)|.
pub fn sample_bessel3_endpoint<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let c: f64 = rng.sample(StandardNormal);
    (a * a + b * b + c * c).sqrt()
}

fn meander_term(b: f64, x: f64, gamma: f64) -> f64 {
    if b >= x {
        (b - x).powf(gamma)
    } else {
        0.0
    }
}

fn pplus_term(b: f64, x: f64, gamma: f64) -> f64 {
    if b >= x && b > 0.0 {
        (1.0 - x / b).powf(gamma)
    } else {
        0.0
    }
}

/// C0 E[(B - x)^gamma; B >= x] over scaled meander endpoints.
pub fn d_mc_meander(x: f64, endpoints: &[f64], c0: Estimate, gamma: f64) -> Result<Estimate> {
    if endpoints.is_empty() {
        return Err(Error::EmptyInput("no meander endpoints".into()));
    }
    let terms: Vec<f64> = endpoints.iter().map(|&b| meander_term(b, x, gamma)).collect();
    let m = mean_se(&terms)?;
    if m.value == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    let value = c0.value * m.value;
    let se = ((c0.value * m.se).powi(2) + (m.value * c0.se).powi(2)).sqrt();
    Ok(Estimate::new(value, se))
}

/// The meander route with C0 = 1 / E[B^gamma] taken from the same sample:
/// E[(B - x)^gamma; B >= x] / E[B^gamma] with the ratio delta-method SE.
pub fn d_mc_meander_ratio(x: f64, endpoints: &[f64], gamma: f64) -> Result<Estimate> {
    if endpoints.is_empty() {
        return Err(Error::EmptyInput("no meander endpoints".into()));
    }
    let den: Vec<f64> = endpoints.iter().map(|&b| b.max(0.0).powf(gamma)).collect();
    let num: Vec<f64> = endpoints.iter().map(|&b| meander_term(b, x, gamma)).collect();
    let dsum: f64 = den.iter().sum();
    if dsum <= 0.0 {
        return Err(Error::EmptyInput("all meander endpoints are zero".into()));
    }
    if num.iter().all(|v| *v == 0.0) {
        return Ok(Estimate::exact(0.0));
    }
    let ratio = num.iter().sum::<f64>() / dsum;
    let n = endpoints.len() as f64;
    let var = num.iter().zip(&den).map(|(a, b)| (a - ratio * b).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let mean_den = dsum / n;
    Ok(Estimate::new(ratio, (var / n).sqrt() / mean_den))
}

/// Self-normalised weighted mean of (1 - x/b)^gamma 1{b >= x} over scaled
/// P+ endpoints.
pub fn d_mc_pplus(x: f64, points: &[WeightedPoint], gamma: f64) -> Result<Estimate> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no P+ endpoints".into()));
    }
    let values: Vec<f64> = points.iter().map(|p| pplus_term(p.value, x, gamma)).collect();
    let weights: Vec<f64> = points.iter().map(|p| p.weight).collect();
    weighted_mean_se(&values, &weights)
}

/// Weighted empirical CDF of the scaled P+ endpoint at z.
pub fn t_small_cdf(z: f64, points: &[WeightedPoint]) -> Result<Estimate> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no P+ endpoints".into()));
    }
    let values: Vec<f64> = points.iter().map(|p| if p.value <= z { 1.0 } else { 0.0 }).collect();
    let weights: Vec<f64> = points.iter().map(|p| p.weight).collect();
    weighted_mean_se(&values, &weights)
}

/// `count` P+ endpoints after `p` steps from 0, divided by `scale`.
pub fn pplus_endpoints(
    law: &IncrementLaw<f64>,
    renewal: &dyn Renewal,
    p: usize,
    scale: f64,
    count: u64,
    seeder: &StreamSeeder,
) -> Result<Vec<WeightedPoint>> {
    let parts = map_chunks(count, CHUNK, |range| -> Result<Vec<WeightedPoint>> {
        let mut rng = seeder.replicate(range.start / CHUNK);
        range
            .map(|_| {
                let w = sample_pplus_endpoint(0.0, p, law, renewal, &mut rng)?;
                Ok(WeightedPoint { value: w.value / scale, weight: w.weight })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(count as usize);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// D(x) through the infimum: the fraction of P+ paths whose minimum over
/// steps p..=2p stays at or above x c_p. With `exact_tail` (simple walk
/// only) each path is further weighted by the exact probability
/// 1 - a/(S_2p + 1), a = ceil(x c_p), that the chain never goes below a
/// afterwards, which renders the infimum over the whole future.
pub fn d_mc_infimum(
    x_grid: &[f64],
    law: &IncrementLaw<f64>,
    renewal: &dyn Renewal,
    p: usize,
    c_p: f64,
    count: u64,
    exact_tail: bool,
    seeder: &StreamSeeder,
) -> Result<Vec<Estimate>> {
    if exact_tail && !law.is_lattice() {
        return Err(Error::UnsupportedLaw("the exact infimum tail needs the simple walk".into()));
    }
    if x_grid.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::Domain("x must be nonnegative".into()));
    }
    let parts = map_chunks(count, CHUNK, |range| -> Result<Vec<(Vec<f64>, f64)>> {
        let mut rng = seeder.replicate(range.start / CHUNK);
        range
            .map(|_| {
                let first = sample_pplus_endpoint(0.0, p, law, renewal, &mut rng)?;
                if first.weight == 0.0 {
                    return Ok((vec![0.0; x_grid.len()], 0.0));
                }
                let cont = sample_pplus(first.value, p, law, renewal, &mut rng)?;
                let weight = first.weight * cont.weight;
                let min = cont.path.statistics().min;
                let end = cont.path.end();
                let values = x_grid
                    .iter()
                    .map(|&x| {
                        let level = x * c_p;
                        if min < level {
                            0.0
                        } else if exact_tail {
                            (1.0 - level.ceil() / (end + 1.0)).max(0.0)
                        } else {
                            1.0
                        }
                    })
                    .collect();
                Ok((values, weight))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(count as usize);
    for part in parts {
        rows.extend(part?);
    }
    let weights: Vec<f64> = rows.iter().map(|r| r.1).collect();
    (0..x_grid.len())
        .map(|i| {
            let v: Vec<f64> = rows.iter().map(|r| r.0[i]).collect();
            weighted_mean_se(&v, &weights)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioned::LatticeV;

    #[test]
    fn brownian_closed_form_matches_quadrature() {
        for x in [0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0] {
            let a = d_brownian(x).unwrap();
            let b = d_brownian_quadrature(x).unwrap();
            assert!((a - b).abs() < 1e-10, "x={x}: {a} vs {b}");
        }
        assert_eq!(d_brownian(0.0).unwrap(), 1.0);
        assert!((d_brownian(1.0).unwrap() - 0.31731).abs() < 1e-5);
        assert!((d_brownian(2.0).unwrap() - 0.04550).abs() < 1e-5);
        assert!(d_brownian(-0.1).is_err());
    }

    #[test]
    fn maxwell_values() {
        assert_eq!(maxwell_cdf(0.0), 0.0);
        assert!((maxwell_cdf(1.0) - 0.198_748).abs() < 1e-5);
        assert!(maxwell_cdf(12.0) > 1.0 - 1e-12);
    }

    #[test]
    fn meander_route_edges() {
        let e = [0.5, 1.0, 2.0];
        assert_eq!(d_mc_meander(5.0, &e, Estimate::exact(0.8), 1.0).unwrap(), Estimate::exact(0.0));
        let r = d_mc_meander_ratio(0.0, &e, 1.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(d_mc_meander(1.0, &[], Estimate::exact(1.0), 1.0).is_err());
    }

    #[test]
    fn pplus_route_is_one_at_zero() {
        let pts: Vec<WeightedPoint> =
            [0.3, 1.2, 2.5].iter().map(|&v| WeightedPoint { value: v, weight: 0.5 + v }).collect();
        assert_eq!(d_mc_pplus(0.0, &pts, 1.5).unwrap().value, 1.0);
        assert_eq!(t_small_cdf(100.0, &pts).unwrap().value, 1.0);
    }

    #[test]
    fn lattice_infimum_with_tail_is_one_at_zero() {
        let law = IncrementLaw::LatticeSsrw;
        let est = d_mc_infimum(&[0.0, 1.0], &law, &LatticeV, 64, 8.0, 200, true, &StreamSeeder::new(3)).unwrap();
        assert_eq!(est[0].value, 1.0);
        assert!(est[1].value > 0.0 && est[1].value < 1.0);
    }
}
