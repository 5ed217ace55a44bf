//! Renewal functions V and U, harmonicity checks, samplers for the walk
//! conditioned to stay positive (P+) or negative (P-) or to keep its minimum
//! above a level, and the constant C0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice;
use crate::parallel::{map_chunks, CHUNK};
use crate::rng::StreamSeeder;
use crate::stats::{isotonic_nondecreasing, linear_fit, mean_se, Estimate, Moments};
use crate::walk::{IncrementLaw, WalkPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenewalKind {
    /// V on [0, inf): harmonic for the walk killed on entering (-inf, 0).
    V,
    /// U on (-inf, 0]: harmonic for the walk killed on entering [0, inf).
    U,
}

/// A renewal function, exact or estimated.
pub trait Renewal: Sync {
    fn kind(&self) -> RenewalKind;

    /// Value at `x`; zero outside the half-line of the kind.
    fn eval(&self, x: f64) -> f64;

    /// Standard error of [`Renewal::eval`] (zero for exact functions).
    fn eval_se(&self, _x: f64) -> f64 {
        0.0
    }

    /// Largest |x| covered by tabulated values, if any.
    fn grid_extent(&self) -> Option<f64> {
        None
    }
}

/// V(x) = floor(x) + 1 for the simple walk.
#[derive(Debug, Clone, Copy, Default)]
pub struct LatticeV;

/// U(x) = 1 at 0 and 2 ceil(|x|) below 0 for the simple walk.
#[derive(Debug, Clone, Copy, Default)]
pub struct LatticeU;

impl Renewal for LatticeV {
    fn kind(&self) -> RenewalKind {
        RenewalKind::V
    }
    fn eval(&self, x: f64) -> f64 {
        lattice::renewal_v(x)
    }
}

impl Renewal for LatticeU {
    fn kind(&self) -> RenewalKind {
        RenewalKind::U
    }
    fn eval(&self, x: f64) -> f64 {
        lattice::renewal_u(x)
    }
}

/// Tabulated Monte Carlo estimate of V or U.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEstimate {
    pub kind: RenewalKind,
    /// Grid points ordered by distance from 0 (ascending for V, descending
    /// for U).
    pub grid: Vec<f64>,
    /// Values after isotonic projection.
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    /// Values before the projection.
    pub raw_values: Vec<f64>,
    /// Series truncation depth K.
    pub truncation: u64,
    pub n_mc: u64,
    /// Share of V̂ - 1 contributed by k in (K/10, K].
    pub last_decade_share: Vec<f64>,
    /// Whether the k > K remainder was extrapolated from the last decade.
    pub tail_corrected: bool,
    /// Exponent of the power law used beyond the grid.
    pub exponent: f64,
    /// Amplitude of the power law used beyond the grid.
    pub amplitude: f64,
    /// Largest raw monotonicity violation in units of SE.
    pub max_violation_z: f64,
}

/// One CSV row of a [`HarmonicEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicRow {
    pub x: f64,
    pub value: f64,
    pub se: f64,
    #[serde(rename = "K")]
    pub k: u64,
    pub n_mc: u64,
}

impl HarmonicEstimate {
    pub fn rows(&self) -> Vec<HarmonicRow> {
        self.grid
            .iter()
            .zip(&self.values)
            .zip(&self.se)
            .map(|((x, v), s)| HarmonicRow { x: *x, value: *v, se: *s, k: self.truncation, n_mc: self.n_mc })
            .collect()
    }

    /// Distance from the boundary: x for V, -x for U.
    fn depth(&self, x: f64) -> Option<f64> {
        match self.kind {
            RenewalKind::V if x >= 0.0 => Some(x),
            RenewalKind::U if x <= 0.0 => Some(-x),
            _ => None,
        }
    }

    /// Grid depths |x| (ascending).
    fn depths(&self) -> Vec<f64> {
        self.grid.iter().map(|x| x.abs()).collect()
    }

    /// Linear interpolation inside the grid; anchored power law beyond it.
    fn interpolate(&self, d: f64) -> (f64, f64) {
        let depths = self.depths();
        let (values, se) = (&self.values, &self.se);
        let last = depths.len() - 1;
        if d >= depths[last] {
            let scale = if depths[last] > 0.0 { d / depths[last] } else { 1.0 };
            return (self.amplitude * d.powf(self.exponent), se[last] * scale.powf(self.exponent));
        }
        if d <= depths[0] {
            return (values[0], se[0]);
        }
        let i = depths.partition_point(|g| *g <= d);
        let (d0, d1) = (depths[i - 1], depths[i]);
        let w = (d - d0) / (d1 - d0);
        (values[i - 1] * (1.0 - w) + values[i] * w, (se[i - 1] * (1.0 - w)).hypot(se[i] * w))
    }
}

impl Renewal for HarmonicEstimate {
    fn kind(&self) -> RenewalKind {
        self.kind
    }

    fn eval(&self, x: f64) -> f64 {
        match self.depth(x) {
            Some(d) => self.interpolate(d).0,
            None => 0.0,
        }
    }

    fn eval_se(&self, x: f64) -> f64 {
        match self.depth(x) {
            Some(d) => self.interpolate(d).1,
            None => 0.0,
        }
    }

    fn grid_extent(&self) -> Option<f64> {
        self.depths().last().copied()
    }
}

/// Settings shared by [`estimate_v`] and [`estimate_u`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenewalOptions {
    /// Series truncation depth K.
    pub truncation: u64,
    /// Number of independent paths.
    pub n_mc: u64,
    /// Extrapolate the k > K remainder from the last decade, assuming the
    /// summands decay like k^(-1 - 1/alpha).
    pub tail_correction: bool,
}

impl Default for RenewalOptions {
    fn default() -> Self {
        Self { truncation: 10_000, n_mc: 100_000, tail_correction: true }
    }
}

/// V̂(x) = 1 + sum_{k=1}^{K} P̂(-S_k <= x, M_k < 0) on a grid of x >= 0.
pub fn estimate_v(
    law: &IncrementLaw<f64>,
    grid: &[f64],
    opts: &RenewalOptions,
    seeder: &StreamSeeder,
) -> Result<HarmonicEstimate> {
    if grid.iter().any(|x| *x < 0.0) {
        return Err(Error::Domain("V is estimated on x >= 0".into()));
    }
    estimate_renewal(law, RenewalKind::V, grid, opts, seeder)
}

/// Û(x) = 1 + sum_{k=1}^{K} P̂(-S_k > x, L_k >= 0) on a grid of x <= 0.
pub fn estimate_u(
    law: &IncrementLaw<f64>,
    grid: &[f64],
    opts: &RenewalOptions,
    seeder: &StreamSeeder,
) -> Result<HarmonicEstimate> {
    if grid.iter().any(|x| *x > 0.0) {
        return Err(Error::Domain("U is estimated on x <= 0".into()));
    }
    estimate_renewal(law, RenewalKind::U, grid, opts, seeder)
}

struct RenewalSums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    late: Vec<f64>,
}

fn estimate_renewal(
    law: &IncrementLaw<f64>,
    kind: RenewalKind,
    grid: &[f64],
    opts: &RenewalOptions,
    seeder: &StreamSeeder,
) -> Result<HarmonicEstimate> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("empty grid".into()));
    }
    if opts.truncation < 1 || opts.n_mc < 1000 {
        return Err(Error::InvalidParameter("need K >= 1 and at least 1000 paths".into()));
    }
    // Work with depths d = |x| in ascending order.
    let mut depths: Vec<f64> = grid.iter().map(|x| x.abs()).collect();
    let ascending = depths.windows(2).all(|w| w[0] < w[1]);
    let descending = depths.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return Err(Error::InvalidParameter("grid must be strictly monotone".into()));
    }
    if !ascending {
        depths.reverse();
    }
    let m = depths.len();
    let k_max = opts.truncation;
    let late_from = k_max / 10;
    let limit = law.limit_params();
    let alpha = limit.alpha;
    let ratio = if opts.tail_correction {
        let r = 10f64.powf(-1.0 / alpha);
        r / (1.0 - r)
    } else {
        0.0
    };

    let parts = map_chunks(opts.n_mc, CHUNK, |range| {
        let mut acc = RenewalSums { sum: vec![0.0; m], sum_sq: vec![0.0; m], late: vec![0.0; m] };
        let mut rng = seeder.replicate(range.start / CHUNK);
        let mut diff = vec![0.0_f64; m + 1];
        let mut late_diff = vec![0.0_f64; m + 1];
        for _ in range {
            let mut s = 0.0_f64;
            let mut touched = false;
            for k in 1..=k_max {
                s += law.sample(&mut rng);
                // d = distance into the killed half-line.
                let (alive, d) = match kind {
                    RenewalKind::V => (s < 0.0, -s),
                    RenewalKind::U => (s >= 0.0, s),
                };
                if !alive {
                    break;
                }
                let i = match kind {
                    RenewalKind::V => depths.partition_point(|g| *g < d),
                    RenewalKind::U => depths.partition_point(|g| *g <= d),
                };
                if i < m {
                    diff[i] += 1.0;
                    if k > late_from {
                        late_diff[i] += 1.0;
                    }
                    touched = true;
                }
            }
            if touched {
                let (mut c, mut l) = (0.0, 0.0);
                for i in 0..m {
                    c += diff[i];
                    l += late_diff[i];
                    let v = c + ratio * l;
                    acc.sum[i] += v;
                    acc.sum_sq[i] += v * v;
                    acc.late[i] += l;
                }
                diff.iter_mut().for_each(|d| *d = 0.0);
                late_diff.iter_mut().for_each(|d| *d = 0.0);
            }
        }
        acc
    });
    let mut total = RenewalSums { sum: vec![0.0; m], sum_sq: vec![0.0; m], late: vec![0.0; m] };
    for p in &parts {
        for i in 0..m {
            total.sum[i] += p.sum[i];
            total.sum_sq[i] += p.sum_sq[i];
            total.late[i] += p.late[i];
        }
    }
    let n = opts.n_mc as f64;
    let mut raw = Vec::with_capacity(m);
    let mut se = Vec::with_capacity(m);
    let mut share = Vec::with_capacity(m);
    for i in 0..m {
        let mean = total.sum[i] / n;
        let var = ((total.sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0);
        let anchor = depths[i] == 0.0;
        raw.push(if anchor { 1.0 } else { 1.0 + mean });
        se.push(if anchor { 0.0 } else { (var / n).sqrt() });
        let series = total.sum[i] - ratio * total.late[i];
        share.push(if series > 0.0 { total.late[i] / series } else { 0.0 });
    }
    let weights: Vec<f64> = se.iter().map(|s| if *s > 0.0 { 1.0 / (s * s) } else { 1e12 }).collect();
    let mut values = isotonic_nondecreasing(&raw, &weights);
    for i in 0..m {
        if depths[i] == 0.0 {
            values[i] = 1.0;
        }
    }
    let mut max_violation_z: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let gap = raw[i] - raw[j];
            if gap > 0.0 {
                let s = se[i].hypot(se[j]);
                max_violation_z = max_violation_z.max(if s > 0.0 { gap / s } else { f64::INFINITY });
            }
        }
    }
    let exponent = match kind {
        RenewalKind::V => limit.v_exponent(),
        RenewalKind::U => limit.u_exponent(),
    };
    let d_last = depths[m - 1];
    let amplitude = if d_last > 0.0 { values[m - 1] / d_last.powf(exponent) } else { values[m - 1] };
    let grid = match kind {
        RenewalKind::V => depths,
        RenewalKind::U => depths.iter().map(|d| -d).collect(),
    };
    Ok(HarmonicEstimate {
        kind,
        grid,
        values,
        se,
        raw_values: raw,
        truncation: k_max,
        n_mc: opts.n_mc,
        last_decade_share: share,
        tail_corrected: opts.tail_correction,
        exponent,
        amplitude,
        max_violation_z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityResidual {
    pub x: f64,
    /// E[R(x + X); x + X in the half-line] - R(x).
    pub residual: f64,
    pub se: f64,
}

impl HarmonicityResidual {
    pub fn within(&self, z: f64) -> bool {
        self.residual.abs() <= z * self.se || self.residual.abs() < 1e-12
    }
}

/// Residuals of the harmonicity identity at the given points. For the
/// lattice walk the expectation over X is exact; otherwise it is a Monte
/// Carlo average over `n_mc` increments.
pub fn verify_harmonicity(
    renewal: &dyn Renewal,
    law: &IncrementLaw<f64>,
    points: &[f64],
    n_mc: u64,
    seeder: &StreamSeeder,
) -> Result<Vec<HarmonicityResidual>> {
    let kind = renewal.kind();
    let inside = |y: f64| match kind {
        RenewalKind::V => y >= 0.0,
        RenewalKind::U => y < 0.0,
    };
    let h = |y: f64| if inside(y) { renewal.eval(y) } else { 0.0 };
    let h_se = |y: f64| if inside(y) { renewal.eval_se(y) } else { 0.0 };
    if law.is_lattice() {
        return Ok(points
            .iter()
            .map(|&x| {
                let residual = 0.5 * h(x + 1.0) + 0.5 * h(x - 1.0) - renewal.eval(x);
                let se =
                    (0.25 * h_se(x + 1.0).powi(2) + 0.25 * h_se(x - 1.0).powi(2) + renewal.eval_se(x).powi(2)).sqrt();
                HarmonicityResidual { x, residual, se }
            })
            .collect());
    }
    if n_mc < 2 {
        return Err(Error::InvalidParameter("need at least two increments".into()));
    }
    let mut rng = seeder.replicate(0);
    let xs: Vec<f64> = (0..n_mc).map(|_| law.sample(&mut rng)).collect();
    if let Some(extent) = renewal.grid_extent() {
        let mut abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let q99 = abs[((abs.len() as f64) * 0.99) as usize];
        for &x in points {
            if x.abs() + q99 > extent {
                return Err(Error::Coverage(format!("grid extent {extent} < |x| + q99(|X|) = {}", x.abs() + q99)));
            }
        }
    }
    Ok(points
        .iter()
        .map(|&x| {
            let mut mom = Moments::default();
            let mut interp_se = 0.0;
            for dx in &xs {
                mom.push(h(x + dx));
                interp_se += h_se(x + dx);
            }
            let e = mom.estimate();
            let interp_se = interp_se / n_mc as f64;
            let se = (e.se.powi(2) + interp_se.powi(2) + renewal.eval_se(x).powi(2)).sqrt();
            HarmonicityResidual { x, residual: e.value - renewal.eval(x), se }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Conditioning {
    PPlus { x0: f64 },
    PMinus { x0: f64 },
    MinAtLeast { r: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedPathSample {
    pub path: WalkPath<f64>,
    /// Importance weight; 1 for exact samplers, 0 for killed proposals.
    pub weight: f64,
    pub conditioning: Conditioning,
}

/// Endpoint of a conditioned path with its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub value: f64,
    pub weight: f64,
}

fn h_transform<R: Rng + ?Sized>(
    x0: f64,
    n: usize,
    law: &IncrementLaw<f64>,
    renewal: &dyn Renewal,
    rng: &mut R,
    mut record: Option<&mut Vec<f64>>,
) -> Result<(f64, f64)> {
    let kind = renewal.kind();
    let inside = |y: f64| match kind {
        RenewalKind::V => y >= 0.0,
        RenewalKind::U => y < 0.0,
    };
    let h = |y: f64| if inside(y) { renewal.eval(y) } else { 0.0 };
    let start = renewal.eval(x0);
    if !(start > 0.0) {
        return Err(Error::EstimateQuality { x: x0 });
    }
    if let Some(r) = record.as_deref_mut() {
        r.push(x0);
    }
    let mut x = x0;
    let mut weight = 1.0;
    if law.is_lattice() {
        let mut hx = start;
        for _ in 0..n {
            let up = 0.5 * h(x + 1.0);
            let down = 0.5 * h(x - 1.0);
            let total = up + down;
            if !(total > 0.0) {
                return Err(Error::EstimateQuality { x });
            }
            weight *= total / hx;
            if rng.random::<f64>() * total < up {
                x += 1.0;
                hx = 2.0 * up;
            } else {
                x -= 1.0;
                hx = 2.0 * down;
            }
            if let Some(r) = record.as_deref_mut() {
                r.push(x);
            }
        }
        return Ok((x, weight));
    }
    for _ in 0..n {
        x += law.sample(rng);
        if let Some(r) = record.as_deref_mut() {
            r.push(x);
        }
        if !inside(x) {
            return Ok((x, 0.0));
        }
        let hx = renewal.eval(x);
        if !(hx > 0.0) {
            return Err(Error::EstimateQuality { x });
        }
    }
    weight *= h(x) / start;
    Ok((x, weight))
}

fn check_start(kind: RenewalKind, expected: RenewalKind, x0: f64) -> Result<()> {
    if kind != expected {
        return Err(Error::InvalidParameter(format!("sampler needs a {expected:?} renewal function")));
    }
    let ok = match kind {
        RenewalKind::V => x0 >= 0.0,
        RenewalKind::U => x0 <= 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("start {x0} outside the half-line")))
    }
}

/// Walk under P+ from `x0 >= 0`: the Doob transform of the walk killed on
/// entering (-inf, 0) by V. The lattice walk uses the exact kernel (weight
/// is the product of the kernel normalisers, 1 for the exact V); other laws
/// use free proposals with weight V(S_n) 1{L_n >= 0} / V(x0). Killed
/// proposals are cut at the exit step.
pub fn sample_pplus<R: Rng + ?Sized>(
    x0: f64,
    n: usize,
    law: &IncrementLaw<f64>,
    renewal: &dyn Renewal,
    rng: &mut R,
) -> Result<ConditionedPathSample> {
    check_start(renewal.kind(), RenewalKind::V, x0)?;
    let mut values = Vec::with_capacity(n + 1);
    let (_, weight) = h_transform(x0, n, law, renewal, rng, Some(&mut values))?;
    Ok(ConditionedPathSample {
        path: WalkPath::from_values_at(values)?,
        weight,
        conditioning: Conditioning::PPlus { x0 },
    })
}

/// Endpoint-only form of [`sample_pplus`].
pub fn sample_pplus_endpoint<R: Rng + ?Sized>(
    x0: f64,
    n: usize,
    law: &IncrementLaw<f64>,
    renewal: &dyn Renewal,
    rng: &mut R,
) -> Result<WeightedPoint> {
    check_start(renewal.kind(), RenewalKind::V, x0)?;
    let (value, weight) = h_transform(x0, n, law, renewal, rng, None)?;
    Ok(WeightedPoint { value, weight })
}

/// Walk under P- from `x0 <= 0`, transformed by U; never enters [0, inf)
/// after step 0.
pub fn sample_pminus<R: Rng + ?Sized>(
    x0: f64,
    n: usize,
    law: &IncrementLaw<f64>,
    renewal: &dyn Renewal,
    rng: &mut R,
) -> Result<ConditionedPathSample> {
    check_start(renewal.kind(), RenewalKind::U, x0)?;
    let mut values = Vec::with_capacity(n + 1);
    let (_, weight) = h_transform(x0, n, law, renewal, rng, Some(&mut values))?;
    Ok(ConditionedPathSample {
        path: WalkPath::from_values_at(values)?,
        weight,
        conditioning: Conditioning::PMinus { x0 },
    })
}

/// Result of the rejection sampler for {L_n >= -r}.
#[derive(Debug, Clone, PartialEq)]
pub struct MinConditioned<S> {
    pub samples: Vec<S>,
    pub proposals: u64,
    /// Acceptance rate, an unbiased estimate of P(L_n >= -r).
    pub rate: Estimate,
}

fn run_rejection<S, F>(
    n: usize,
    r: f64,
    law: &IncrementLaw<f64>,
    seeder: &StreamSeeder,
    budget: u64,
    keep: F,
) -> Result<MinConditioned<S>>
where
    S: Send,
    F: Fn(&[f64]) -> S + Sync,
{
    if !(r >= 0.0) {
        return Err(Error::Domain("r must be nonnegative".into()));
    }
    let parts = map_chunks(budget, CHUNK, |range| {
        let mut rng = seeder.replicate(range.start / CHUNK);
        let mut out = Vec::new();
        let mut path = Vec::with_capacity(n + 1);
        for _ in range {
            path.clear();
            path.push(0.0);
            let mut s = 0.0;
            let mut ok = true;
            for _ in 0..n {
                s += law.sample(&mut rng);
                path.push(s);
                if s < -r {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(keep(&path));
            }
        }
        out
    });
    let samples: Vec<S> = parts.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(Error::BudgetExhausted { budget, rate_upper_bound: 3.0 / budget.max(1) as f64 });
    }
    let p = samples.len() as f64 / budget as f64;
    Ok(MinConditioned { samples, proposals: budget, rate: Estimate::new(p, (p * (1.0 - p) / budget as f64).sqrt()) })
}

/// Rejection sampler for paths with L_n >= -r using exactly `budget`
/// proposals (each abandoned at its first step below -r).
pub fn sample_conditioned_min(
    n: usize,
    r: f64,
    law: &IncrementLaw<f64>,
    seeder: &StreamSeeder,
    budget: u64,
) -> Result<MinConditioned<WalkPath<f64>>> {
    run_rejection(n, r, law, seeder, budget, |p| WalkPath::from_values(p.to_vec()).expect("starts at 0"))
}

/// As [`sample_conditioned_min`], keeping only the endpoints S_n.
pub fn sample_conditioned_endpoints(
    n: usize,
    r: f64,
    law: &IncrementLaw<f64>,
    seeder: &StreamSeeder,
    budget: u64,
) -> Result<MinConditioned<f64>> {
    run_rejection(n, r, law, seeder, budget, |p| *p.last().expect("nonempty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Point {
    pub n: u64,
    pub c_n: f64,
    pub prob_min_nonneg: Estimate,
    pub v_at_cn: Estimate,
    /// V(c_n) P(L_n >= 0).
    pub route1: Estimate,
    /// 1 / E[(S_n / c_n)^(alpha(1-rho)) | L_n >= 0].
    pub route2: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Estimate {
    pub points: Vec<C0Point>,
    /// Route values at the largest n.
    pub route1: Estimate,
    pub route2: Estimate,
    /// Intercepts of a + b n^(-1/2) fits over the n grid (three or more n).
    pub route1_plateau: Option<f64>,
    pub route2_plateau: Option<f64>,
    pub consistent: bool,
    pub warning: Option<String>,
}

/// C0 by two routes. The simple walk uses exact reflection formulas and the
/// exact V; other laws use the rejection sampler with `budget` proposals per
/// n and the supplied V.
pub fn estimate_c0(
    law: &IncrementLaw<f64>,
    n_grid: &[u64],
    renewal: &dyn Renewal,
    seeder: &StreamSeeder,
    budget: u64,
) -> Result<C0Estimate> {
    if n_grid.is_empty() {
        return Err(Error::EmptyInput("empty n grid".into()));
    }
    let gamma = law.limit_params().v_exponent();
    let mut points = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let c_n = law.norming_cn(n);
        let v = Estimate::new(renewal.eval(c_n), renewal.eval_se(c_n));
        let (prob, moment) = if law.is_lattice() {
            let p = lattice::prob_min_at_least(n, 0);
            let mom =
                (0..=n as i64).map(|y| (y as f64 / c_n).powf(gamma) * lattice::pmf_min_at_least(n, y, 0)).sum::<f64>()
                    / p;
            (Estimate::exact(p), Estimate::exact(mom))
        } else {
            let sample = sample_conditioned_endpoints(n as usize, 0.0, law, &seeder.child_index(i as u64), budget)?;
            let scaled: Vec<f64> = sample.samples.iter().map(|s| (s / c_n).max(0.0).powf(gamma)).collect();
            (sample.rate, mean_se(&scaled)?)
        };
        let r1 = v.value * prob.value;
        let r1_se = r1 * ((v.se / v.value).powi(2) + (prob.se / prob.value).powi(2)).sqrt();
        let r2 = 1.0 / moment.value;
        let r2_se = moment.se / (moment.value * moment.value);
        points.push(C0Point {
            n,
            c_n,
            prob_min_nonneg: prob,
            v_at_cn: v,
            route1: Estimate::new(r1, r1_se),
            route2: Estimate::new(r2, r2_se),
        });
    }
    let plateau = |f: &dyn Fn(&C0Point) -> f64| -> Option<f64> {
        if points.len() < 3 {
            return None;
        }
        let x: Vec<f64> = points.iter().map(|p| (p.n as f64).powf(-0.5)).collect();
        let y: Vec<f64> = points.iter().map(f).collect();
        linear_fit(&x, &y).ok().map(|(a, _, _)| a)
    };
    let route1_plateau = plateau(&|p| p.route1.value);
    let route2_plateau = plateau(&|p| p.route2.value);
    let last = points.last().expect("nonempty");
    let (route1, route2) = (last.route1, last.route2);
    let z = route1.joint_z(&route2);
    let consistent = z <= 3.0 || (route1.se == 0.0 && route2.se == 0.0);
    let warning = if z > 3.0 {
        Some(format!("routes differ by {z:.1} joint SE ({:.4} vs {:.4})", route1.value, route2.value))
    } else {
        None
    };
    Ok(C0Estimate { points, route1, route2, route1_plateau, route2_plateau, consistent, warning })
}

/// x-profile of P(L_{p,n} >= x c_p | L_n >= -r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinCondProfile {
    pub n: u64,
    pub p: u64,
    pub r: f64,
    pub c_p: f64,
    pub x: Vec<f64>,
    pub values: Vec<Estimate>,
    /// P(L_n >= -r).
    pub normalizer: Estimate,
}

fn check_profile_args(n: u64, p: u64, r: f64, x_grid: &[f64]) -> Result<()> {
    if p > n {
        return Err(Error::InvalidParameter(format!("p = {p} exceeds n = {n}")));
    }
    if !(r >= 0.0) || x_grid.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::Domain("r and x must be nonnegative".into()));
    }
    if x_grid.is_empty() {
        return Err(Error::EmptyInput("empty x grid".into()));
    }
    Ok(())
}

/// Simple-walk profile summed exactly over S_p:
/// sum_y P(S_p = y, L_p >= -r) P_y(L_{n-p} >= x c_p) / P(L_n >= -r).
pub fn min_cond_profile_exact(n: u64, p: u64, r: u64, x_grid: &[f64], c_p: f64) -> Result<MinCondProfile> {
    check_profile_args(n, p, r as f64, x_grid)?;
    let norm = lattice::prob_min_at_least(n, r);
    let values = x_grid
        .iter()
        .map(|&x| {
            let a = x * c_p;
            let total: f64 = (-(r as i64)..=p as i64)
                .filter(|&y| y as f64 >= a)
                .map(|y| lattice::pmf_min_at_least(p, y, r) * lattice::prob_min_at_least_real(n - p, y as f64 - a))
                .sum();
            Estimate::exact(total / norm)
        })
        .collect();
    Ok(MinCondProfile { n, p, r: r as f64, c_p, x: x_grid.to_vec(), values, normalizer: Estimate::exact(norm) })
}

/// Monte Carlo profile from `samples` walks. For the simple walk only the
/// first p steps are simulated; each path is weighted by the exact
/// probability that the remaining n - p steps stay above x c_p, and the
/// result is normalised by the exact P(L_n >= -r). Other laws run whole
/// paths (abandoned below -r) and form the ratio of counts.
pub fn min_cond_profile_mc(
    law: &IncrementLaw<f64>,
    n: u64,
    p: u64,
    r: f64,
    x_grid: &[f64],
    c_p: f64,
    samples: u64,
    seeder: &StreamSeeder,
) -> Result<MinCondProfile> {
    check_profile_args(n, p, r, x_grid)?;
    let m = x_grid.len();
    let lattice_walk = law.is_lattice();
    let parts = map_chunks(samples, CHUNK, |range| {
        let mut rng = seeder.replicate(range.start / CHUNK);
        let mut acc = vec![Moments::default(); m];
        let mut accepted = 0u64;
        for _ in range {
            let mut s = 0.0;
            let mut ok = true;
            let horizon = if lattice_walk { p } else { n };
            let mut post_min = f64::INFINITY;
            for k in 1..=horizon {
                s += law.sample(&mut rng);
                if s < -r {
                    ok = false;
                    break;
                }
                if k >= p {
                    post_min = post_min.min(s);
                }
            }
            if p == 0 {
                post_min = post_min.min(0.0);
            }
            if ok {
                accepted += 1;
            }
            for (i, &x) in x_grid.iter().enumerate() {
                let a = x * c_p;
                let v = if !ok {
                    0.0
                } else if lattice_walk {
                    if s >= a {
                        lattice::prob_min_at_least_real(n - p, s - a)
                    } else {
                        0.0
                    }
                } else if post_min >= a {
                    1.0
                } else {
                    0.0
                };
                acc[i].push(v);
            }
        }
        (acc, accepted)
    });
    let mut total = vec![Moments::default(); m];
    let mut accepted = 0u64;
    for (acc, a) in &parts {
        for i in 0..m {
            total[i].merge(&acc[i]);
        }
        accepted += a;
    }
    let normalizer = if lattice_walk {
        Estimate::exact(lattice::prob_min_at_least_real(n, r))
    } else {
        let q = accepted as f64 / samples as f64;
        Estimate::new(q, (q * (1.0 - q) / samples as f64).sqrt())
    };
    if !(normalizer.value > 0.0) {
        return Err(Error::BudgetExhausted { budget: samples, rate_upper_bound: 3.0 / samples.max(1) as f64 });
    }
    let values = total
        .iter()
        .map(|mom| {
            let e = mom.estimate();
            if lattice_walk {
                Estimate::new(e.value / normalizer.value, e.se / normalizer.value)
            } else {
                // ratio of two means over the same draws; the SE of a
                // conditional frequency among the accepted paths
                let v = e.value / normalizer.value;
                Estimate::new(v, (v * (1.0 - v) / accepted as f64).sqrt())
            }
        })
        .collect();
    Ok(MinCondProfile { n, p, r, c_p, x: x_grid.to_vec(), values, normalizer })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_kernels_leave_boundary() {
        let law = IncrementLaw::LatticeSsrw;
        let mut rng = StreamSeeder::new(1).replicate(0);
        for _ in 0..100 {
            let s = sample_pplus(0.0, 1, &law, &LatticeV, &mut rng).unwrap();
            assert_eq!(s.path.values(), &[0.0, 1.0]);
            assert_eq!(s.weight, 1.0);
            let m = sample_pminus(0.0, 1, &law, &LatticeU, &mut rng).unwrap();
            assert_eq!(m.path.values(), &[0.0, -1.0]);
        }
        assert!(sample_pplus(-1.0, 3, &law, &LatticeV, &mut rng).is_err());
        assert!(sample_pplus(0.0, 3, &law, &LatticeU, &mut rng).is_err());
    }

    #[test]
    fn lattice_residuals_vanish() {
        let law = IncrementLaw::LatticeSsrw;
        let s = StreamSeeder::new(0);
        let v = verify_harmonicity(&LatticeV, &law, &[0.0, 1.0, 5.0], 10, &s).unwrap();
        assert!(v.iter().all(|r| r.residual == 0.0));
        let u = verify_harmonicity(&LatticeU, &law, &[0.0, -1.0, -5.0], 10, &s).unwrap();
        assert!(u.iter().all(|r| r.residual == 0.0));
    }

    #[test]
    fn rejection_edge_cases() {
        let law = IncrementLaw::LatticeSsrw;
        let s = StreamSeeder::new(2);
        let one = sample_conditioned_endpoints(1, 0.0, &law, &s, 20_000).unwrap();
        assert!((one.rate.value - 0.5).abs() < 4.0 * one.rate.se);
        let all = sample_conditioned_endpoints(10, 10.0, &law, &s, 1000).unwrap();
        assert_eq!(all.rate.value, 1.0);
        let none = sample_conditioned_endpoints(200, 0.0, &law, &s, 1);
        assert!(matches!(none, Err(Error::BudgetExhausted { .. })) || none.unwrap().rate.value == 1.0);
    }

    #[test]
    fn v_at_zero_is_anchor() {
        let law = IncrementLaw::gaussian(1.0).unwrap();
        let opts = RenewalOptions { truncation: 100, n_mc: 2000, tail_correction: false };
        let e = estimate_v(&law, &[0.0, 1.0, 2.0], &opts, &StreamSeeder::new(3)).unwrap();
        assert_eq!(e.values[0], 1.0);
        assert_eq!(e.se[0], 0.0);
        assert!(e.values[1] > 1.0 && e.values[2] >= e.values[1]);
        assert_eq!(e.rows().len(), 3);
        let u = estimate_u(&law, &[0.0, -1.0, -2.0], &opts, &StreamSeeder::new(3)).unwrap();
        assert_eq!(u.values[0], 1.0);
        assert!(u.eval(-1.5) > 1.0);
        assert_eq!(u.eval(0.5), 0.0);
    }

    #[test]
    fn min_cond_profile_routes_agree() {
        let x = [0.0, 0.5, 1.0];
        let exact = min_cond_profile_exact(400, 16, 0, &x, 4.0).unwrap();
        assert!((exact.values[0].value - 1.0).abs() < 1e-12);
        let law = IncrementLaw::LatticeSsrw;
        let mc = min_cond_profile_mc(&law, 400, 16, 0.0, &x, 4.0, 50_000, &StreamSeeder::new(8)).unwrap();
        for (a, b) in exact.values.iter().zip(&mc.values) {
            assert!((a.value - b.value).abs() <= 4.0 * b.se + 1e-12, "{a:?} vs {b:?}");
        }
    }
}
