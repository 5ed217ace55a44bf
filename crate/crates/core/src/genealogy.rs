//! Individual-level genealogy on short environments: every individual of
//! generation p is followed to generation n and the lines that survive are
//! counted directly. Used as the oracle for the binomial reduced count.

use std::collections::BTreeMap;

use rand::Rng;

use crate::branching::{extinction_schedule, reduced_count, simulate_population, EnvironmentPath};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Joint law of (Z_p, Z_{p,n}) as a map from pairs to frequencies.
pub type JointLaw = BTreeMap<(u64, u64), f64>;

/// (Z_p, Z_{p,n}) by tracking each individual's ancestor at generation p.
/// Fails when some generation exceeds `max_individuals`.
pub fn genealogy_counts<T: Real, R: Rng + ?Sized>(
    env: &EnvironmentPath<T>,
    p: usize,
    rng: &mut R,
    max_individuals: usize,
) -> Result<(u64, u64)> {
    let n = env.n();
    if p > n {
        return Err(Error::InvalidParameter(format!("p = {p} exceeds n = {n}")));
    }
    let mut size = 1usize;
    for k in 1..=p {
        let law = env.law(k);
        size = (0..size).map(|_| law.sample(rng) as usize).sum();
        if size > max_individuals {
            return Err(Error::InvalidParameter(format!("generation {k} exceeds {max_individuals} individuals")));
        }
    }
    let z_p = size as u64;
    // ancestors[i] is the generation-p ancestor of the i-th living individual
    let mut ancestors: Vec<usize> = (0..size).collect();
    for k in p + 1..=n {
        let law = env.law(k);
        let mut next = Vec::new();
        for &a in &ancestors {
            let kids = law.sample(rng) as usize;
            next.extend(std::iter::repeat_n(a, kids));
        }
        if next.len() > max_individuals {
            return Err(Error::InvalidParameter(format!("generation {k} exceeds {max_individuals} individuals")));
        }
        ancestors = next;
    }
    let mut alive = vec![false; size];
    for a in ancestors {
        alive[a] = true;
    }
    Ok((z_p, alive.iter().filter(|b| **b).count() as u64))
}

/// (Z_p, Z_{p,n}) by forward simulation to p and a Binomial(Z_p, 1 - q_p) draw.
pub fn binomial_counts<T: Real, R: Rng + ?Sized>(
    env: &EnvironmentPath<T>,
    p: usize,
    rng: &mut R,
) -> Result<(u64, u64)> {
    let schedule = extinction_schedule(env);
    let traj = simulate_population(env, 1, p, rng, 1e6)?;
    let z_p = traj.last() as u64;
    let q = (1.0 - schedule.t[p].f64()).clamp(0.0, 1.0);
    Ok((z_p, reduced_count(z_p, q, rng)?))
}

pub fn joint_law(pairs: &[(u64, u64)]) -> JointLaw {
    let mut law = JointLaw::new();
    let w = 1.0 / pairs.len() as f64;
    for &pair in pairs {
        *law.entry(pair).or_insert(0.0) += w;
    }
    law
}

pub fn total_variation(a: &JointLaw, b: &JointLaw) -> f64 {
    let mut keys: Vec<&(u64, u64)> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys.iter().map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::OffspringLaw;
    use crate::rng::StreamSeeder;

    #[test]
    fn deterministic_genealogy() {
        let env = EnvironmentPath::<f64>::from_laws(vec![OffspringLaw::point_mass(2); 4]);
        let mut rng = StreamSeeder::new(1).replicate(0);
        assert_eq!(genealogy_counts(&env, 2, &mut rng, 100).unwrap(), (4, 4));
        assert_eq!(binomial_counts(&env, 2, &mut rng).unwrap(), (4, 4));
        let dead = EnvironmentPath::<f64>::from_laws(vec![OffspringLaw::point_mass(2), OffspringLaw::point_mass(0)]);
        assert_eq!(genealogy_counts(&dead, 1, &mut rng, 100).unwrap(), (2, 0));
    }

    #[test]
    fn total_variation_basics() {
        let a = joint_law(&[(1, 1), (2, 1)]);
        let b = joint_law(&[(3, 0)]);
        assert_eq!(total_variation(&a, &a), 0.0);
        assert_eq!(total_variation(&a, &b), 1.0);
    }
}
