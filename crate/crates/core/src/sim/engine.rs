//! Event-driven simulation of one replicate.
//!
//! Particles are independent given their birth point, so each line of
//! descent is followed to the horizon before the next one starts; siblings
//! wait on a stack. A path is advanced by exact Gaussian increments to the
//! next of: a multiple of `dt`, its branching time, a checkpoint, the horizon.
//! Occupation is the trapezoid rule over those nodes.
//!
//! Away from where σ and φ live, nothing observable happens: φ is zero and
//! every branching has one child. There a particle at distance `d` jumps
//! `(d/8)²` in time in one increment (an 8-standard-deviation step), and
//! clock rings inside the jump are skipped.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use super::profile::Support;
use super::{branch_outcome, init_poisson_field, ReplicateResult, SimConfig};
use crate::error::Result;
use crate::Error;

/// Jumps cover at most `(d / FAR_SIGMAS)²` time units.
const FAR_SIGMAS: f64 = 8.0;

struct Clock(Option<Exp<f64>>);

impl Clock {
    fn next<R: Rng + ?Sized>(&self, now: f64, rng: &mut R) -> f64 {
        match &self.0 {
            Some(exp) => now + exp.sample(rng),
            None => f64::INFINITY,
        }
    }
}

/// Simulates replicate `index` of `config` with the given stream.
pub fn simulate_replicate<R: Rng + ?Sized>(config: &SimConfig, index: u64, rng: &mut R) -> Result<ReplicateResult> {
    config.validate()?;
    let horizon = config.horizon;
    let stops: Vec<f64> = config.checkpoints.iter().map(|t| t * horizon).collect();
    let end = stops[stops.len() - 1];
    let dt = config.step();
    let cap = config.population_cap;
    let sigma = &config.sigma;
    let phi = &config.phi;
    let (pa, pb) = phi.support();
    let active = sigma.support().union(Support::Interval(pa, pb));
    let clock = Clock(if sigma.gamma > 0.0 {
        Some(Exp::new(sigma.gamma).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    });

    let bins = (end / dt).ceil() as usize + 2;
    let grid_index = |t: f64| ((t / dt).ceil() as usize).min(bins - 1);
    let mut alive = vec![0i64; bins];
    let mut occupation = vec![0.0; stops.len()];
    let mut branch_events = 0u64;
    let mut offspring = [0u64; 3];

    let mut stack: Vec<(f64, f64)> = init_poisson_field(config.window(), rng)?
        .into_iter()
        .map(|x| (0.0, x))
        .collect();
    if stack.len() > cap {
        return Err(Error::PopulationBlowUp { replicate: index, population: stack.len(), cap });
    }

    while let Some((born, x0)) = stack.pop() {
        alive[grid_index(born)] += 1;
        let (mut t, mut x) = (born, x0);
        let mut fx = phi.value(x);
        let mut ring = clock.next(t, rng);
        let mut k = stops.partition_point(|&s| s <= t);
        let mut died = false;
        while k < stops.len() {
            let stop = stops[k];
            let reach = active.distance(x) / FAR_SIGMAS;
            let far = reach * reach;
            let (target, branching) = if far >= dt {
                (stop.min(t + far), false)
            } else {
                let mut node = ((t / dt).floor() + 1.0) * dt;
                if node <= t {
                    node += dt;
                }
                let node = node.min(stop);
                if ring <= node {
                    (ring, true)
                } else {
                    (node, false)
                }
            };
            let h = target - t;
            let z: f64 = StandardNormal.sample(rng);
            x += h.sqrt() * z;
            let fx_new = phi.value(x);
            occupation[k] += 0.5 * h * (fx + fx_new);
            fx = fx_new;
            t = target;
            if far >= dt && ring <= t {
                // rings in a region where σ is zero: one child, fresh clock
                ring = clock.next(t, rng);
            }
            if branching {
                branch_events += 1;
                let u: f64 = rng.random();
                let children = branch_outcome(sigma.sigma(x), u)?;
                offspring[children] += 1;
                match children {
                    0 => {
                        died = true;
                    }
                    2 => {
                        stack.push((t, x));
                        if stack.len() > cap {
                            return Err(Error::PopulationBlowUp { replicate: index, population: stack.len(), cap });
                        }
                    }
                    _ => {}
                }
                ring = clock.next(t, rng);
            }
            if t >= stop {
                k += 1;
            }
            if died {
                break;
            }
        }
        if died {
            alive[grid_index(t)] -= 1;
        }
    }

    let mut running = 0i64;
    let mut peak = 0i64;
    for change in &alive {
        running += change;
        peak = peak.max(running);
    }
    let peak_population = peak as usize;
    if peak_population > cap {
        return Err(Error::PopulationBlowUp { replicate: index, population: peak_population, cap });
    }

    let mut values = Vec::with_capacity(stops.len());
    let mut total = 0.0;
    for part in occupation {
        total += part / horizon;
        values.push(total);
    }
    Ok(ReplicateResult {
        replicate: index,
        times: config.checkpoints.clone(),
        values,
        mass: phi.mass(),
        peak_population,
        branch_events,
        offspring,
    })
}
