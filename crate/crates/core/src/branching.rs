//! Forward simulation of the branching process in a random environment,
//! backward composition of generating functions, reduced-process counts and
//! the J-functionals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offspring::{binomial_count, EnvironmentModel, OffspringLaw};
use crate::scalar::Real;
use crate::walk::WalkPath;

/// Default saturation level for population counts.
pub const DEFAULT_CAP: f64 = 1e300;

/// A realised environment Q_1, ..., Q_n with its associated walk.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentPath<T> {
    laws: Vec<OffspringLaw<T>>,
    walk: Vec<T>,
}

impl<T: Real> EnvironmentPath<T> {
    pub fn from_laws(laws: Vec<OffspringLaw<T>>) -> Self {
        let mut walk = Vec::with_capacity(laws.len() + 1);
        let mut s = T::zero();
        walk.push(s);
        for law in &laws {
            s += law.log_mean();
            walk.push(s);
        }
        Self { laws, walk }
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }

    /// Q_k for k = 1..=n.
    pub fn law(&self, k: usize) -> &OffspringLaw<T> {
        &self.laws[k - 1]
    }

    pub fn laws(&self) -> &[OffspringLaw<T>] {
        &self.laws
    }

    /// S_0, ..., S_n.
    pub fn walk(&self) -> &[T] {
        &self.walk
    }

    /// eta_1, ..., eta_n (index k - 1 holds eta_k).
    pub fn eta(&self) -> Vec<T> {
        self.laws.iter().map(|l| l.eta()).collect()
    }

    pub fn path(&self) -> WalkPath<T> {
        WalkPath::from_values(self.walk.clone()).expect("walk starts at 0")
    }
}

pub fn simulate_environment<T: Real, R: Rng + ?Sized>(
    model: &EnvironmentModel<T>,
    n: usize,
    rng: &mut R,
) -> Result<EnvironmentPath<T>> {
    let laws = (0..n).map(|_| model.draw(rng)).collect::<Result<Vec<_>>>()?;
    Ok(EnvironmentPath::from_laws(laws))
}

/// q_p = f_{p,n}(0) for p = 0..=n with q_n = 0, and the complements
/// t_p = 1 - q_p computed without cancellation. Prefer `t`: once some q_k
/// is within rounding of 1, later supercritical steps amplify the lost
/// digits and q_p + t_p - 1 can reach 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionSchedule<T> {
    pub q: Vec<T>,
    pub t: Vec<T>,
}

impl<T: Real> ExtinctionSchedule<T> {
    pub fn horizon(&self) -> usize {
        self.q.len() - 1
    }
}

/// Single backward pass q_p = f_{p+1}(q_{p+1}).
pub fn extinction_schedule<T: Real>(env: &EnvironmentPath<T>) -> ExtinctionSchedule<T> {
    let n = env.n();
    let mut q = vec![T::zero(); n + 1];
    let mut t = vec![T::one(); n + 1];
    for p in (0..n).rev() {
        let law = env.law(p + 1);
        q[p] = law.gf(q[p + 1]);
        t[p] = law.gf_complement(t[p + 1]);
    }
    ExtinctionSchedule { q, t }
}

/// P(Z_n > 0 | environment, Z_0 = z0) = 1 - q_0^z0.
pub fn survival_probability<T: Real>(schedule: &ExtinctionSchedule<T>, z0: u64) -> T {
    let t0 = schedule.t[0];
    -(T::lit(z0 as f64) * (-t0).ln_1p()).exp_m1()
}

/// Generation sizes Z_0..Z_p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrajectory {
    pub counts: Vec<f64>,
    pub extinct_at: Option<usize>,
    /// Some generation total was drawn from the normal approximation.
    pub approximated: bool,
    /// Some generation hit the saturation cap.
    pub saturated: bool,
}

impl PopulationTrajectory {
    pub fn last(&self) -> f64 {
        *self.counts.last().expect("nonempty")
    }

    /// Z_k, zero after extinction.
    pub fn at(&self, k: usize) -> f64 {
        self.counts.get(k).copied().unwrap_or(0.0)
    }
}

/// Runs the branching process in `env` from `z0` ancestors to generation `p`.
pub fn simulate_population<T: Real, R: Rng + ?Sized>(
    env: &EnvironmentPath<T>,
    z0: u64,
    p: usize,
    rng: &mut R,
    cap: f64,
) -> Result<PopulationTrajectory> {
    if p > env.n() {
        return Err(Error::InvalidParameter(format!("p = {p} exceeds the horizon {}", env.n())));
    }
    if !(cap >= 1e6) {
        return Err(Error::InvalidParameter("cap must be at least 1e6".into()));
    }
    let mut traj =
        PopulationTrajectory { counts: vec![z0 as f64], extinct_at: None, approximated: false, saturated: false };
    let mut z = z0 as f64;
    for k in 1..=p {
        if z == 0.0 {
            traj.counts.push(0.0);
            continue;
        }
        if z > crate::offspring::NORMAL_APPROX {
            traj.approximated = true;
        }
        z = env.law(k).sample_sum(z, rng);
        if z >= cap {
            z = cap;
            traj.saturated = true;
        }
        if z == 0.0 {
            traj.extinct_at = Some(k);
        }
        traj.counts.push(z);
    }
    Ok(traj)
}

/// Z_{p,n} given Z_p and q = f_{p,n}(0): Binomial(Z_p, 1 - q).
pub fn reduced_count<R: Rng + ?Sized>(z_p: u64, q: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("extinction probability {q} outside [0,1]")));
    }
    Ok(binomial_count(z_p as f64, 1.0 - q, rng) as u64)
}

/// [`reduced_count`] for population sizes held as `f64` (beyond u64 range
/// or above the normal-approximation threshold).
pub fn reduced_count_f64<R: Rng + ?Sized>(z_p: f64, q: f64, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("extinction probability {q} outside [0,1]")));
    }
    if !(z_p >= 0.0) {
        return Err(Error::Domain(format!("population size {z_p} is negative")));
    }
    Ok(binomial_count(z_p, 1.0 - q, rng))
}

/// Z_{p,n} conditioned on Z_{p,n} >= 1, driven by the survival uniform `u`
/// (which must satisfy u < 1 - (1-t)^z). The first surviving line is found
/// by inversion, the remaining z - j lines survive independently.
pub fn reduced_count_given_survival<R: Rng + ?Sized>(z: f64, t: f64, u: f64, rng: &mut R) -> f64 {
    let j = if t >= 1.0 { 1.0 } else { ((-u).ln_1p() / (-t).ln_1p()).ceil().clamp(1.0, z) };
    1.0 + binomial_count(z - j, t, rng)
}

/// J-functionals of an environment at a fixed p. `weight` multiplies the
/// eta terms: 1 gives the functionals as defined (a lower bound for the
/// survival probability), 1/2 gives the exact linear-fractional identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JFunctionals<T> {
    pub p: usize,
    /// First post-p argmin τ_{p,n}.
    pub tau: usize,
    /// L̂_{p,n} = S_τ - S_p.
    pub post_min: T,
    /// J⁻(p, τ).
    pub j_minus: T,
    /// J⁺(τ, n).
    pub j_plus: T,
    /// Ĵ⁻(0, p).
    pub j_hat_minus: T,
    pub weight: T,
}

impl<T: Real> JFunctionals<T> {
    /// e^{L̂_{p,n}} / (J⁻ + J⁺).
    pub fn survival_bound(&self) -> T {
        self.post_min.exp() / (self.j_minus + self.j_plus)
    }
}

/// J⁺(a, r) = sum_{l=a}^{r-1} w eta_{l+1} e^{S_a - S_l} + e^{S_a - S_r}.
pub fn j_plus<T: Real>(env: &EnvironmentPath<T>, a: usize, r: usize, weight: T) -> T {
    let s = env.walk();
    let mut acc = T::zero();
    for l in a..r {
        acc += weight * env.law(l + 1).eta() * (s[a] - s[l]).exp();
    }
    acc + (s[a] - s[r]).exp()
}

/// J⁻(p, r) = sum_{l=p}^{r-1} w eta_{l+1} e^{S_r - S_l}.
pub fn j_minus<T: Real>(env: &EnvironmentPath<T>, p: usize, r: usize, weight: T) -> T {
    let s = env.walk();
    let mut acc = T::zero();
    for l in p..r {
        acc += weight * env.law(l + 1).eta() * (s[r] - s[l]).exp();
    }
    acc
}

/// Ĵ⁻(0, r) = sum_{l=0}^{r-1} w eta_{l+1} e^{S_{l+1}}.
pub fn j_hat_minus<T: Real>(env: &EnvironmentPath<T>, r: usize, weight: T) -> T {
    let s = env.walk();
    let mut acc = T::zero();
    for l in 0..r {
        acc += weight * env.law(l + 1).eta() * s[l + 1].exp();
    }
    acc
}

pub fn j_functionals<T: Real>(env: &EnvironmentPath<T>, p: usize, weight: T) -> Result<JFunctionals<T>> {
    let n = env.n();
    if p > n {
        return Err(Error::InvalidParameter(format!("p = {p} exceeds the horizon {n}")));
    }
    let s = env.walk();
    let mut tau = p;
    for j in p + 1..=n {
        if s[j] < s[tau] {
            tau = j;
        }
    }
    Ok(JFunctionals {
        p,
        tau,
        post_min: s[tau] - s[p],
        j_minus: j_minus(env, p, tau, weight),
        j_plus: j_plus(env, tau, n, weight),
        j_hat_minus: j_hat_minus(env, p, weight),
        weight,
    })
}

/// W_u = e^{-S_m} Z_m with m(u) = min(q + floor(u (p - q)), n).
pub fn w_observable<T: Real>(
    env: &EnvironmentPath<T>,
    trajectory: &PopulationTrajectory,
    u_grid: &[f64],
    q: usize,
    p: usize,
) -> Result<Vec<f64>> {
    let n = env.n();
    if !(q <= p && p <= n) {
        return Err(Error::InvalidParameter(format!("need q <= p <= n, got {q}, {p}, {n}")));
    }
    u_grid
        .iter()
        .map(|&u| {
            if u < 0.0 {
                return Err(Error::Domain("u must be nonnegative".into()));
            }
            let m = (q + (u * (p - q) as f64).floor() as usize).min(n);
            if m >= trajectory.counts.len() && trajectory.extinct_at.is_none() {
                return Err(Error::InvalidParameter(format!("trajectory ends before generation {m}")));
            }
            Ok((-env.walk()[m].f64()).exp() * trajectory.at(m))
        })
        .collect()
}

/// One replicate of the reduced process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedObservation {
    pub replicate: u64,
    pub n: usize,
    pub p: usize,
    pub z_p: f64,
    /// f_{p,n}(0); absent when the replicate was settled before the
    /// environment was completed.
    pub q_pn: Option<f64>,
    pub z_pn: f64,
    pub survived: bool,
    /// log(Z_{p,n}) / c_p on survival.
    pub scaled_value: Option<f64>,
    /// log(Z_p) / c_p on survival.
    pub scaled_z_p: Option<f64>,
    pub saturated: bool,
}

/// Where a coupled replicate stopped drawing its environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Settlement {
    ExtinctBeforeP,
    /// Killed by the bound 1 - q^Z <= Z e^{L̂_{p,k}} at generation k.
    BoundedAt(usize),
    Complete,
}

/// Simulates (Z_p, Z_{p,n}) in a fresh environment from one ancestor.
///
/// A single uniform U decides survival, {U < 1 - q_p^{Z_p}}. Because
/// 1 - q_p^{Z_p} <= Z_p e^{L̂_{p,k}} for every k <= n, the environment scan
/// beyond p stops as soon as ln Z_p + L̂_{p,k} <= ln U; replicates that reach n
/// get the exact q_p from a backward pass and Z_{p,n} drawn conditionally.
pub fn simulate_reduced<T: Real, R: Rng + ?Sized>(
    model: &EnvironmentModel<T>,
    n: usize,
    p: usize,
    c_p: f64,
    replicate: u64,
    rng: &mut R,
) -> Result<(ReducedObservation, Settlement)> {
    if p > n {
        return Err(Error::InvalidParameter(format!("p = {p} exceeds n = {n}")));
    }
    let mut obs = ReducedObservation {
        replicate,
        n,
        p,
        z_p: 0.0,
        q_pn: None,
        z_pn: 0.0,
        survived: false,
        scaled_value: None,
        scaled_z_p: None,
        saturated: false,
    };
    let mut z = 1.0_f64;
    for _ in 1..=p {
        let law = model.draw(rng)?;
        z = law.sample_sum(z, rng);
        if z >= DEFAULT_CAP {
            z = DEFAULT_CAP;
            obs.saturated = true;
        }
        if z == 0.0 {
            return Ok((obs, Settlement::ExtinctBeforeP));
        }
    }
    obs.z_p = z;
    match scan_survival(model, z, n - p, rng)? {
        ScanOutcome::Killed(k) => Ok((obs, Settlement::BoundedAt(p + k))),
        ScanOutcome::Complete { u, t } => {
            obs.q_pn = Some(1.0 - t);
            if u < survival_of(z, t) {
                obs.survived = true;
                obs.z_pn = reduced_count_given_survival(z, t, u, rng);
                obs.scaled_value = Some(obs.z_pn.ln() / c_p);
                obs.scaled_z_p = Some(z.ln() / c_p);
            }
            Ok((obs, Settlement::Complete))
        }
    }
}

/// 1 - (1 - t)^z.
pub fn survival_of(z: f64, t: f64) -> f64 {
    -(z * (-t).ln_1p()).exp_m1()
}

/// Result of [`scan_survival`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanOutcome {
    /// The bound z e^{L̂} fell below the uniform after this many steps.
    Killed(usize),
    /// The whole horizon was drawn: survival uniform `u` and the exact
    /// single-line survival probability `t`.
    Complete { u: f64, t: f64 },
}

/// Draws a fresh environment of `steps` generations for `z` individuals and
/// a uniform U, stopping as soon as ln z + L̂ <= ln U (then the population
/// certainly dies out under the coupling {U < 1 - (1-t)^z}). Linear-fractional
/// models accumulate 1/t forward; others store the log-means and compose the
/// complements backward.
pub fn scan_survival<T: Real, R: Rng + ?Sized>(
    model: &EnvironmentModel<T>,
    z: f64,
    steps: usize,
    rng: &mut R,
) -> Result<ScanOutcome> {
    let u: f64 = rng.random();
    let bound = u.ln() - z.ln();
    let lf_eta = model.linear_fractional_eta().map(|e| 0.5 * e.f64());
    let mut xs: Vec<T> = Vec::new();
    let (mut s, mut post_min, mut inv_t) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 1..=steps {
        let x = model.draw_log_mean(rng);
        match lf_eta {
            Some(h) => inv_t += h * (-s).exp(),
            None => xs.push(x),
        }
        s += x.f64();
        post_min = post_min.min(s);
        if post_min <= bound {
            return Ok(ScanOutcome::Killed(k));
        }
    }
    let t = match lf_eta {
        Some(_) => 1.0 / (inv_t + (-s).exp()),
        None => {
            let mut t = T::one();
            for x in xs.iter().rev() {
                t = model.law_for_log_mean(*x)?.gf_complement(t);
            }
            t.f64()
        }
    };
    Ok(ScanOutcome::Complete { u, t })
}

/// Output of [`survival_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub survival: Vec<f64>,
    pub min_nonneg: Vec<bool>,
    /// Generation at which the scan stopped early, if it did.
    pub stopped_at: Option<usize>,
}

/// 1 - f_{0,n}(0) for every n in an increasing grid, from one environment
/// drawn to the largest n, together with the indicators {L_n >= 0}.
/// Linear-fractional models use the forward formula; other models compose
/// backward per grid point. Once the walk falls below `stop_level` the
/// remaining survival probabilities are set to 0 (their true values are at
/// most e^{stop_level}).
pub fn survival_curve<T: Real, R: Rng + ?Sized>(
    model: &EnvironmentModel<T>,
    n_grid: &[usize],
    stop_level: f64,
    rng: &mut R,
) -> Result<SurvivalCurve> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n grid must be nonempty and increasing".into()));
    }
    let lf_eta = model.linear_fractional_eta().map(|e| 0.5 * e.f64());
    let mut curve =
        SurvivalCurve { survival: vec![0.0; n_grid.len()], min_nonneg: vec![false; n_grid.len()], stopped_at: None };
    let mut xs: Vec<T> = Vec::new();
    let (mut s, mut min, mut inv_t) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut next = 0;
    let n_max = *n_grid.last().expect("nonempty");
    for k in 1..=n_max {
        let x = model.draw_log_mean(rng);
        match lf_eta {
            Some(h) => inv_t += h * (-s).exp(),
            None => xs.push(x),
        }
        s += x.f64();
        min = min.min(s);
        if min < stop_level {
            curve.stopped_at = Some(k);
            return Ok(curve);
        }
        if k == n_grid[next] {
            curve.survival[next] = match lf_eta {
                Some(_) => 1.0 / (inv_t + (-s).exp()),
                None => {
                    let mut t = T::one();
                    for x in xs.iter().rev() {
                        t = model.law_for_log_mean(*x)?.gf_complement(t);
                    }
                    t.f64()
                }
            };
            curve.min_nonneg[next] = min >= 0.0;
            next += 1;
        }
    }
    Ok(curve)
}

/// W at two generations m1 < m2 of a replicate surviving to n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WPair {
    pub w1: f64,
    pub w2: f64,
    pub approximated: bool,
}

/// One replicate for the W-constancy check: the population is simulated to
/// m2, W = e^{-S_m} Z_m is read at m1 and m2, and survival to n is decided by
/// [`scan_survival`]. Returns `None` unless the population survives to n.
pub fn simulate_w_pair<T: Real, R: Rng + ?Sized>(
    model: &EnvironmentModel<T>,
    n: usize,
    m1: usize,
    m2: usize,
    rng: &mut R,
) -> Result<Option<WPair>> {
    if !(m1 <= m2 && m2 <= n) {
        return Err(Error::InvalidParameter(format!("need m1 <= m2 <= n, got {m1}, {m2}, {n}")));
    }
    let (mut z, mut s) = (1.0_f64, 0.0_f64);
    let mut w1 = if m1 == 0 { 1.0 } else { 0.0 };
    let mut approximated = false;
    for k in 1..=m2 {
        let law = model.draw(rng)?;
        approximated |= z > crate::offspring::NORMAL_APPROX;
        z = law.sample_sum(z, rng).min(DEFAULT_CAP);
        s += law.log_mean().f64();
        if z == 0.0 {
            return Ok(None);
        }
        if k == m1 {
            w1 = (-s).exp() * z;
        }
    }
    let w2 = (-s).exp() * z;
    Ok(match scan_survival(model, z, n - m2, rng)? {
        ScanOutcome::Complete { u, t } if u < survival_of(z, t) => Some(WPair { w1, w2, approximated }),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeeder;

    #[test]
    fn deterministic_schedules() {
        let ones = EnvironmentPath::<f64>::from_laws(vec![OffspringLaw::point_mass(1); 5]);
        let sched = extinction_schedule(&ones);
        assert!(sched.q.iter().all(|q| *q == 0.0));
        let mut laws = vec![OffspringLaw::<f64>::geometric(1.0).unwrap(); 6];
        laws[3] = OffspringLaw::point_mass(0);
        let env = EnvironmentPath::from_laws(laws);
        let sched = extinction_schedule(&env);
        for p in 0..3 {
            assert_eq!(sched.q[p], 1.0);
        }
        assert_eq!(sched.q[6], 0.0);
    }

    #[test]
    fn survival_probability_examples() {
        let s = ExtinctionSchedule { q: vec![0.75_f64, 0.0], t: vec![0.25, 1.0] };
        assert!((survival_probability(&s, 1) - 0.25).abs() < 1e-15);
        let s = ExtinctionSchedule { q: vec![0.5_f64, 0.0], t: vec![0.5, 1.0] };
        assert!((survival_probability(&s, 2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn population_edge_cases() {
        let mut rng = StreamSeeder::new(4).replicate(0);
        let env = EnvironmentPath::<f64>::from_laws(vec![OffspringLaw::point_mass(0), OffspringLaw::point_mass(2)]);
        let t = simulate_population(&env, 1, 2, &mut rng, 1e6).unwrap();
        assert_eq!(t.extinct_at, Some(1));
        assert_eq!(t.counts, vec![1.0, 0.0, 0.0]);
        let dbl = EnvironmentPath::<f64>::from_laws(vec![OffspringLaw::point_mass(2); 10]);
        let t = simulate_population(&dbl, 3, 10, &mut rng, 1e6).unwrap();
        for (k, z) in t.counts.iter().enumerate() {
            assert_eq!(*z, 3.0 * 2f64.powi(k as i32));
        }
        let w = w_observable(&dbl, &t, &[0.0, 0.5, 1.0], 2, 10).unwrap();
        assert!(w.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn reduced_count_edges() {
        let mut rng = StreamSeeder::new(5).replicate(0);
        assert_eq!(reduced_count(7, 0.0, &mut rng).unwrap(), 7);
        assert_eq!(reduced_count(7, 1.0, &mut rng).unwrap(), 0);
        assert!(reduced_count(7, 1.5, &mut rng).is_err());
    }

    #[test]
    fn j_functionals_flat_environment() {
        let env = EnvironmentPath::<f64>::from_laws(vec![OffspringLaw::poisson(1.0).unwrap(); 8]);
        assert!((j_plus(&env, 0, 8, 1.0) - 9.0).abs() < 1e-12);
        let j = j_functionals(&env, 8, 1.0).unwrap();
        assert_eq!((j.tau, j.j_plus, j.j_minus), (8, 1.0, 0.0));
    }
}
