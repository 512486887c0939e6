//! Differential evolution (best/1/bin with dithered mutation).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_into, evaluation_seed, Direction, EvalLedger, Objective, OptRunResult, SearchSpace};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeSettings {
    pub population: usize,
    /// Mutation factor drawn uniformly from this range once per generation.
    pub mutation: (f64, f64),
    pub crossover: f64,
    pub max_generations: usize,
    /// Relative stagnation tolerance on the population's cost spread.
    pub tol: f64,
    /// Absolute stagnation tolerance.
    pub atol: f64,
}

impl Default for DeSettings {
    fn default() -> Self {
        Self { population: 40, mutation: (0.5, 1.0), crossover: 0.9, max_generations: 200, tol: 1e-6, atol: 0.0 }
    }
}

impl DeSettings {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.mutation;
        if self.population < 4 {
            return Err(Error::InvalidArgument("differential evolution needs a population of at least 4".into()));
        }
        if !(0.0 <= lo && lo <= hi && hi <= 2.0) || !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::InvalidArgument("mutation must lie in [0, 2] and crossover in [0, 1]".into()));
        }
        if !(self.tol >= 0.0 && self.atol >= 0.0) {
            return Err(Error::InvalidArgument("stagnation tolerances must be non-negative".into()));
        }
        Ok(())
    }

    /// Upper bound on cost evaluations.
    pub fn max_evaluations(&self) -> usize {
        self.population * (self.max_generations + 1)
    }
}

/// Minimizes `f` over the box `bounds`. Returns the best point and value;
/// ties keep the earlier point. `f` sees raw population members.
pub(crate) fn minimize_box<F>(mut f: F, bounds: &[(f64, f64)], settings: &DeSettings, rng: &mut StreamRng) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    settings.validate()?;
    let d = bounds.len();
    let np = settings.population;
    let uniform = |rng: &mut StreamRng, j: usize| {
        let (lo, hi) = bounds[j];
        rng.random_range(lo..=hi)
    };

    let mut pop: Vec<Vec<f64>> = (0..np).map(|_| (0..d).map(|j| uniform(rng, j)).collect()).collect();
    let mut cost = Vec::with_capacity(np);
    for x in &pop {
        cost.push(f(x)?);
    }
    let mut best = argmin(&cost);

    let mut trial = vec![0.0; d];
    for _ in 0..settings.max_generations {
        if stagnated(&cost, settings) {
            break;
        }
        let (flo, fhi) = settings.mutation;
        let scale = if fhi > flo { rng.random_range(flo..fhi) } else { flo };
        for i in 0..np {
            let (r1, r2) = distinct_pair(rng, np, i);
            let forced = rng.random_range(0..d);
            for j in 0..d {
                trial[j] = if j == forced || rng.random::<f64>() < settings.crossover {
                    let v = pop[best][j] + scale * (pop[r1][j] - pop[r2][j]);
                    let (lo, hi) = bounds[j];
                    if (lo..=hi).contains(&v) {
                        v
                    } else {
                        uniform(rng, j)
                    }
                } else {
                    pop[i][j]
                };
            }
            let c = f(&trial)?;
            if c <= cost[i] {
                pop[i].copy_from_slice(&trial);
                cost[i] = c;
                if c < cost[best] {
                    best = i;
                }
            }
        }
    }
    Ok((pop[best].clone(), cost[best]))
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &c) in v.iter().enumerate() {
        if c < v[best] {
            best = i;
        }
    }
    best
}

fn stagnated(cost: &[f64], settings: &DeSettings) -> bool {
    let n = cost.len() as f64;
    let mean = cost.iter().sum::<f64>() / n;
    let var = cost.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
    var.sqrt() <= settings.atol + settings.tol * mean.abs()
}

fn distinct_pair(rng: &mut StreamRng, n: usize, exclude: usize) -> (usize, usize) {
    let pick = |rng: &mut StreamRng, avoid: &[usize]| loop {
        let k = rng.random_range(0..n);
        if !avoid.contains(&k) {
            return k;
        }
    };
    let a = pick(rng, &[exclude]);
    let b = pick(rng, &[exclude, a]);
    (a, b)
}

/// Differential evolution over `space`. Integer coordinates are rounded
/// before each evaluation, and the ledger records the rounded point.
/// Evaluation `k` receives [`evaluation_seed`]`(seed, k)`.
pub fn differential_evolution(
    objective: &mut dyn Objective,
    space: &SearchSpace,
    direction: Direction,
    settings: &DeSettings,
    seed: u64,
) -> Result<OptRunResult> {
    let mut ledger = EvalLedger::new();
    let mut rng = stream(seed, &[0x6465]);
    let bounds = space.bounds();
    let outcome = minimize_box(
        |x| {
            let k = ledger.len();
            let v = evaluate_into(objective, &mut ledger, space.snap(x), evaluation_seed(seed, k), direction)?;
            Ok(direction.to_min(v))
        },
        &bounds,
        settings,
        &mut rng,
    );
    outcome?;
    OptRunResult::from_ledger(ledger, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> SearchSpace {
        SearchSpace::new(vec![SearchSpace::continuous("x", 0.0, 5.0)]).unwrap()
    }

    #[test]
    fn convex_1d() {
        let mut f = |x: &[f64], _| Ok((x[0] - 2.0).powi(2));
        let r = differential_evolution(&mut f, &line(), Direction::Minimize, &DeSettings::default(), 3).unwrap();
        assert!((r.best_params[0] - 2.0).abs() < 1e-4, "{:?}", r.best_params);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.trace.len(), r.evaluations());
        assert_eq!(*r.trace.last().unwrap(), r.best_value);
    }

    #[test]
    fn rosenbrock() {
        let space = SearchSpace::new(vec![SearchSpace::continuous("x", -2.0, 2.0), SearchSpace::continuous("y", -2.0, 2.0)])
            .unwrap();
        let mut f = |p: &[f64], _| Ok((1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2));
        let r = differential_evolution(&mut f, &space, Direction::Minimize, &DeSettings::default(), 11).unwrap();
        // brute force on a 0.001 grid: the minimum is at the grid point (1, 1)
        let mut grid_best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for j in 0..=400 {
                let (x, y) = (-2.0 + 0.01 * i as f64, -2.0 + 0.01 * j as f64);
                let v = (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2);
                if v < grid_best.0 {
                    grid_best = (v, x, y);
                }
            }
        }
        assert!((grid_best.1 - 1.0).abs() < 1e-9 && (grid_best.2 - 1.0).abs() < 1e-9);
        assert!((r.best_params[0] - grid_best.1).abs() < 1e-2, "{:?}", r.best_params);
        assert!((r.best_params[1] - grid_best.2).abs() < 1e-2, "{:?}", r.best_params);
    }

    #[test]
    fn constant_cost_stops_with_flat_trace() {
        let mut f = |_: &[f64], _| Ok(1.5);
        let r = differential_evolution(&mut f, &line(), Direction::Minimize, &DeSettings::default(), 0).unwrap();
        assert!(line().contains(&r.best_params));
        assert!(r.trace.iter().all(|&v| v == 1.5));
        // stagnation is detected before the first generation
        assert_eq!(r.evaluations(), 40);
        // earliest evaluation wins the tie
        assert_eq!(r.best_params, r.ledger.records()[0].params);
    }

    #[test]
    fn deterministic_per_seed_and_respects_integers() {
        let space = SearchSpace::new(vec![SearchSpace::continuous("a", 0.0, 1.0), SearchSpace::integer("n", 4, 10)]).unwrap();
        let run = |seed| {
            let mut f = |p: &[f64], s: u64| Ok((p[0] - 0.3).powi(2) + (p[1] - 6.0).powi(2) / 36.0 + (s % 7) as f64 * 1e-3);
            differential_evolution(&mut f, &space, Direction::Minimize, &DeSettings { max_generations: 20, ..Default::default() }, seed)
                .unwrap()
        };
        let (a, b) = (run(5), run(5));
        assert_eq!(a, b);
        assert!(a.ledger.records().iter().all(|r| space.contains(&r.params)));
        assert_ne!(a.ledger.records()[0].seed, a.ledger.records()[1].seed);
    }

    #[test]
    fn maximize_negates() {
        let mut f = |x: &[f64], _| Ok(-(x[0] - 1.0).powi(2));
        let r = differential_evolution(&mut f, &line(), Direction::Maximize, &DeSettings::default(), 2).unwrap();
        assert!((r.best_params[0] - 1.0).abs() < 1e-4);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn failure_aborts_with_partial_trace() {
        let mut calls = 0;
        let mut f = |x: &[f64], _| {
            calls += 1;
            if calls > 50 {
                Err(Error::Objective("boom".into()))
            } else {
                Ok(x[0])
            }
        };
        match differential_evolution(&mut f, &line(), Direction::Minimize, &DeSettings::default(), 1) {
            Err(Error::OptimizationAborted { trace, .. }) => assert_eq!(trace.len(), 50),
            other => panic!("{other:?}"),
        }
    }
}
