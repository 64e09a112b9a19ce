//! Differential evolution (rand/1/bin) over a box, maximising the objective.
//!
//! Each generation draws all trial vectors first and then evaluates them, so the
//! result does not depend on evaluation order. Mutant components that leave the
//! box are re-drawn uniformly inside it. The differential weight is dithered
//! once per generation, uniform in `[f_min, f_max]`.

use rand::Rng;

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DeSettings {
    pub pop_size: usize,
    pub generations: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub cr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best value after initialisation (index 0) and after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

impl DeSettings {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 {
            return Err(Error::Config("differential evolution needs at least 4 individuals".into()));
        }
        if !(self.cr > 0.0 && self.cr <= 1.0) {
            return Err(Error::Config(format!("crossover rate {} outside (0, 1]", self.cr)));
        }
        if !(self.f_min > 0.0 && self.f_min <= self.f_max && self.f_max < 2.0) {
            return Err(Error::Config("differential weight must satisfy 0 < f_min <= f_max < 2".into()));
        }
        Ok(())
    }
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Index of the maximum, ties going to the lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn maximize<F>(objective: F, bounds: &[(f64, f64)], s: &DeSettings) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64,
{
    s.validate()?;
    if bounds.is_empty() || bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::Config("invalid search bounds".into()));
    }
    let dim = bounds.len();
    let np = s.pop_size;
    let mut rng = rng::stream(s.seed, 0xDE);

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| lerp(lo, hi, rng.random())).collect())
        .collect();
    let mut fit: Vec<f64> = pop.iter().map(|x| score(objective(x))).collect();
    let mut evaluations = np;
    let mut history = Vec::with_capacity(s.generations + 1);
    history.push(fit[argmax(&fit)]);

    for _ in 0..s.generations {
        let f_weight = lerp(s.f_min, s.f_max, rng.random());
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let [r1, r2, r3] = pick_three(&mut rng, np, i);
                let j_rand = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let (lo, hi) = bounds[j];
                        let cross = j == j_rand || rng.random::<f64>() < s.cr;
                        if !cross {
                            return pop[i][j];
                        }
                        let m = pop[r1][j] + f_weight * (pop[r2][j] - pop[r3][j]);
                        if m < lo || m > hi {
                            lerp(lo, hi, rng.random())
                        } else {
                            m
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fit: Vec<f64> = trials.iter().map(|x| score(objective(x))).collect();
        evaluations += np;
        for (i, (trial, tf)) in trials.into_iter().zip(trial_fit).enumerate() {
            if tf >= fit[i] {
                pop[i] = trial;
                fit[i] = tf;
            }
        }
        history.push(fit[argmax(&fit)]);
    }

    let b = argmax(&fit);
    Ok(DeResult {
        best: pop[b].clone(),
        value: fit[b],
        history,
        evaluations,
    })
}

fn lerp(lo: f64, hi: f64, t: f64) -> f64 {
    lo + (hi - lo) * t
}

fn pick_three<R: Rng>(rng: &mut R, np: usize, exclude: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut n = 0;
    while n < 3 {
        let c = rng.random_range(0..np);
        if c != exclude && !out[..n].contains(&c) {
            out[n] = c;
            n += 1;
        }
    }
    out
}
