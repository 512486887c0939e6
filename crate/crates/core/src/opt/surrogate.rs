//! Surrogate-assisted optimization: random initial design, then rounds of
//! RBF fit, surrogate minimization, rounding and one true evaluation.

use serde::{Deserialize, Serialize};

use super::de::minimize_box;
use super::{
    evaluate_into, evaluation_seed, DeSettings, Direction, Dim, EvalLedger, HyperParams, Objective,
    OptRunResult, SearchSpace, ThinPlateRbf,
};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

/// Thin-plate interpolant of ledger values over the unit-scaled search box.
/// Integer coordinates are treated as continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub space: SearchSpace,
    pub rbf: ThinPlateRbf<f64>,
}

impl SurrogateModel {
    pub fn evaluate(&self, params: &[f64]) -> f64 {
        self.rbf.evaluate(&self.space.to_unit(params))
    }
}

/// Unit-cube distance below which two evaluated points share one center.
pub const MERGE_RADIUS: f64 = 1e-6;

fn unit_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Fits the surrogate to every ledger record. Records within
/// [`MERGE_RADIUS`] of an earlier record's point join its center, which
/// carries the mean value of its members.
pub fn fit_surrogate(ledger: &EvalLedger, space: &SearchSpace) -> Result<SurrogateModel> {
    let mut clusters: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    for r in ledger.records() {
        let u = space.to_unit(&r.params);
        match clusters.iter_mut().find(|c| unit_dist(&c.0, &u) < MERGE_RADIUS) {
            Some(c) => {
                c.1 += r.value;
                c.2 += 1;
            }
            None => clusters.push((u, r.value, 1)),
        }
    }
    if clusters.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: clusters.len() });
    }
    let (pts, vals): (Vec<_>, Vec<_>) = clusters.into_iter().map(|(u, sum, n)| (u, sum / n as f64)).unzip();
    Ok(SurrogateModel { space: space.clone(), rbf: ThinPlateRbf::fit(&pts, &vals)? })
}

fn near_evaluated(p: &[f64], ledger: &EvalLedger, space: &SearchSpace) -> bool {
    let u = space.to_unit(p);
    ledger.records().iter().any(|r| unit_dist(&space.to_unit(&r.params), &u) < MERGE_RADIUS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSettings {
    pub m_init: usize,
    pub m_iter: usize,
    /// Inner optimizer applied to the surrogate.
    pub de: DeSettings,
    /// Step, as a fraction of the coordinate range, used to move a proposal
    /// off an already evaluated point. Must exceed [`MERGE_RADIUS`].
    pub jitter: f64,
}

impl Default for SurrogateSettings {
    fn default() -> Self {
        Self { m_init: 10, m_iter: 20, de: DeSettings::default(), jitter: 1e-4 }
    }
}

/// The `m_init` random feasible points evaluated first.
pub fn initial_design(space: &SearchSpace, m_init: usize, seed: u64) -> Vec<HyperParams> {
    (0..m_init).map(|i| space.sample(&mut stream(seed, &[0x696e6974, i as u64]))).collect()
}

fn evaluate_design(
    objective: &mut dyn Objective,
    space: &SearchSpace,
    direction: Direction,
    m: usize,
    seed: u64,
) -> Result<EvalLedger> {
    let mut ledger = EvalLedger::new();
    for p in initial_design(space, m, seed) {
        let k = ledger.len();
        evaluate_into(objective, &mut ledger, p, evaluation_seed(seed, k), direction)?;
    }
    Ok(ledger)
}

/// Evaluates only the initial design of [`surrogate_optimize`] with the same
/// seed, i.e. a run with zero adaptive rounds.
pub fn random_search(
    objective: &mut dyn Objective,
    space: &SearchSpace,
    direction: Direction,
    m: usize,
    seed: u64,
) -> Result<OptRunResult> {
    if m == 0 {
        return Err(Error::InvalidArgument("random search needs at least one point".into()));
    }
    OptRunResult::from_ledger(evaluate_design(objective, space, direction, m, seed)?, direction)
}

/// Moves `p` away from every evaluated point by stepping its first
/// continuous coordinate towards the interior. Returns `None` for purely
/// integer spaces.
fn jitter_off(p: &HyperParams, ledger: &EvalLedger, space: &SearchSpace, frac: f64) -> Option<HyperParams> {
    let (j, lo, hi) = space.dims().iter().enumerate().find_map(|(j, d)| match d.dim {
        Dim::Continuous { lo, hi } => Some((j, lo, hi)),
        Dim::Integer { .. } => None,
    })?;
    let step = frac * (hi - lo);
    let dir = if p[j] - lo < hi - p[j] { 1.0 } else { -1.0 };
    (1..).map(|k| {
        let mut q = p.clone();
        q[j] = (p[j] + dir * step * k as f64).clamp(lo, hi);
        q
    })
    .take_while(|q| (lo..=hi).contains(&q[j]))
    .find(|q| !near_evaluated(q, ledger, space))
}

/// Surrogate minimum on each slice where one integer coordinate of `p` moves
/// by one step, skipping slices whose minimum repeats an evaluated point.
/// Returns the slice minimum with the best surrogate value.
fn neighbor_slice(
    p: &HyperParams,
    model: &SurrogateModel,
    ledger: &EvalLedger,
    space: &SearchSpace,
    direction: Direction,
    de: &DeSettings,
    rng: &mut StreamRng,
) -> Result<Option<HyperParams>> {
    let mut best: Option<(f64, HyperParams)> = None;
    for (j, d) in space.dims().iter().enumerate() {
        let Dim::Integer { lo, hi } = d.dim else { continue };
        for step in [-1.0, 1.0] {
            let v = p[j] + step;
            if v < lo as f64 || v > hi as f64 {
                continue;
            }
            let mut bounds = space.bounds();
            bounds[j] = (v, v);
            let (x, _) = minimize_box(|x| Ok(direction.to_min(model.evaluate(x))), &bounds, de, rng)?;
            let q = space.snap(&x);
            if near_evaluated(&q, ledger, space) {
                continue;
            }
            let value = direction.to_min(model.evaluate(&q));
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, q));
            }
        }
    }
    Ok(best.map(|(_, q)| q))
}

/// Runs exactly `m_init + m_iter` evaluations of `objective` and returns the
/// best. Each adaptive round minimizes the current surrogate with
/// differential evolution, rounds integer coordinates and clamps into bounds.
/// A proposal that repeats an evaluated point moves to the best neighboring
/// integer slice, or failing that is jittered along a continuous coordinate.
pub fn surrogate_optimize(
    objective: &mut dyn Objective,
    space: &SearchSpace,
    direction: Direction,
    settings: &SurrogateSettings,
    seed: u64,
) -> Result<OptRunResult> {
    if settings.m_init < 3 || settings.m_iter < 1 {
        return Err(Error::InvalidArgument("surrogate optimization needs m_init >= 3 and m_iter >= 1".into()));
    }
    let mut ledger = evaluate_design(objective, space, direction, settings.m_init, seed)?;
    let bounds = space.bounds();
    let (mut jittered, mut stepped) = (0, 0);
    for round in 0..settings.m_iter {
        let model = fit_surrogate(&ledger, space)
            .map_err(|e| Error::OptimizationAborted { message: e.to_string(), trace: ledger.trace(direction) })?;
        let mut rng = stream(seed, &[0x7375_7272, round as u64]);
        let (x, _) = minimize_box(|x| Ok(direction.to_min(model.evaluate(x))), &bounds, &settings.de, &mut rng)?;
        let mut proposal = space.snap(&x);
        if near_evaluated(&proposal, &ledger, space) {
            if let Some(q) = neighbor_slice(&proposal, &model, &ledger, space, direction, &settings.de, &mut rng)? {
                proposal = q;
                stepped += 1;
            } else if let Some(q) = jitter_off(&proposal, &ledger, space, settings.jitter) {
                proposal = q;
                jittered += 1;
            }
        }
        let k = ledger.len();
        evaluate_into(objective, &mut ledger, proposal, evaluation_seed(seed, k), direction)?;
    }
    let mut result = OptRunResult::from_ledger(ledger, direction)?;
    result.jittered = jittered;
    result.stepped = stepped;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::params_key;

    fn alpha_n() -> SearchSpace {
        SearchSpace::new(vec![SearchSpace::continuous("alpha", 0.0, 1.0), SearchSpace::integer("n", 4, 10)]).unwrap()
    }

    fn bowl(p: &[f64]) -> f64 {
        (p[0] - 0.3).powi(2) + (p[1] - 6.0).powi(2) / 36.0
    }

    #[test]
    fn finds_bowl_minimum_with_thirty_evaluations() {
        // brute force over a 0.001 alpha grid and the integer set
        let mut brute = (f64::INFINITY, vec![]);
        for i in 0..=1000 {
            for n in 4..=10 {
                let p = vec![i as f64 / 1000.0, n as f64];
                if bowl(&p) < brute.0 {
                    brute = (bowl(&p), p);
                }
            }
        }
        let mut calls = 0;
        let mut f = |p: &[f64], _| {
            calls += 1;
            Ok(bowl(p))
        };
        let r = surrogate_optimize(&mut f, &alpha_n(), Direction::Minimize, &SurrogateSettings::default(), 4).unwrap();
        assert_eq!(calls, 30);
        assert_eq!(r.evaluations(), 30);
        assert!((r.best_params[0] - brute.1[0]).abs() < 0.05, "{:?}", r.best_params);
        assert_eq!(r.best_params[1], brute.1[1]);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.ledger.records().iter().all(|rec| alpha_n().contains(&rec.params)));
    }

    #[test]
    fn flat_trace_when_an_initial_point_is_optimal() {
        let space = alpha_n();
        let p0 = initial_design(&space, 10, 9)[0].clone();
        let mut f = |p: &[f64], _| Ok((p[0] - p0[0]).powi(2) + (p[1] - p0[1]).powi(2));
        let r = surrogate_optimize(&mut f, &space, Direction::Minimize, &SurrogateSettings::default(), 9).unwrap();
        assert_eq!(r.ledger.records()[0].params, p0);
        assert!(r.trace.iter().all(|&v| v == 0.0));
        assert_eq!(r.best_params, p0);
    }

    #[test]
    fn surrogate_interpolates_ledger() {
        let space = alpha_n();
        let mut ledger = EvalLedger::new();
        for (k, p) in initial_design(&space, 10, 1).into_iter().enumerate() {
            let v = bowl(&p);
            ledger.push(super::super::EvalRecord { params: p, value: v, sample_size: 0, seed: k as u64 }).unwrap();
        }
        let m = fit_surrogate(&ledger, &space).unwrap();
        for r in ledger.records() {
            assert!((m.evaluate(&r.params) - r.value).abs() < 1e-8);
        }
    }

    #[test]
    fn bowl_surrogate_minimum_near_true_minimum() {
        let space = SearchSpace::new(vec![SearchSpace::continuous("x", -1.0, 1.0), SearchSpace::continuous("y", -1.0, 1.0)])
            .unwrap();
        let f = |p: &[f64]| (p[0] - 0.2).powi(2) + (p[1] + 0.1).powi(2);
        let mut ledger = EvalLedger::new();
        for (k, p) in initial_design(&space, 10, 2).into_iter().enumerate() {
            let v = f(&p);
            ledger.push(super::super::EvalRecord { params: p, value: v, sample_size: 0, seed: k as u64 }).unwrap();
        }
        let m = fit_surrogate(&ledger, &space).unwrap();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=200 {
            for j in 0..=200 {
                let (x, y) = (-1.0 + 0.01 * i as f64, -1.0 + 0.01 * j as f64);
                let v = m.evaluate(&[x, y]);
                if v < best.0 {
                    best = (v, x, y);
                }
            }
        }
        assert!(((best.1 - 0.2).powi(2) + (best.2 + 0.1).powi(2)).sqrt() < 0.2, "{best:?}");
    }

    #[test]
    fn duplicate_params_merge_into_one_center() {
        let space = alpha_n();
        let mut ledger = EvalLedger::new();
        let rec = |p: Vec<f64>, v, seed| super::super::EvalRecord { params: p, value: v, sample_size: 0, seed };
        ledger.push(rec(vec![0.1, 4.0], 1.0, 0)).unwrap();
        ledger.push(rec(vec![0.9, 5.0], 2.0, 1)).unwrap();
        ledger.push(rec(vec![0.5, 9.0], 3.0, 2)).unwrap();
        ledger.push(rec(vec![0.1, 4.0], 2.0, 3)).unwrap();
        let m = fit_surrogate(&ledger, &space).unwrap();
        assert_eq!(m.rbf.centers().len(), 3);
        assert!((m.evaluate(&[0.1, 4.0]) - 1.5).abs() < 1e-8);
    }

    #[test]
    fn repeated_proposals_step_then_jitter() {
        // a cost whose surrogate minimum sits on a corner evaluated early
        let space = alpha_n();
        let mut f = |p: &[f64], _| Ok(p[0] + p[1]);
        let r = surrogate_optimize(
            &mut f,
            &space,
            Direction::Minimize,
            &SurrogateSettings { m_init: 5, m_iter: 6, ..Default::default() },
            3,
        )
        .unwrap();
        assert_eq!(r.evaluations(), 11);
        let mut keys: Vec<_> = r.ledger.records().iter().map(|x| params_key(&x.params)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 11);
        assert!(r.stepped > 0 && r.jittered > 0, "{} {}", r.stepped, r.jittered);
        assert!(r.best_params[0] < 0.01 && r.best_params[1] == 4.0);
    }

    #[test]
    fn random_search_is_the_initial_design() {
        let mut f = |p: &[f64], _| Ok(bowl(p));
        let a = random_search(&mut f, &alpha_n(), Direction::Minimize, 10, 4).unwrap();
        let b = surrogate_optimize(&mut f, &alpha_n(), Direction::Minimize, &SurrogateSettings::default(), 4).unwrap();
        assert_eq!(a.ledger.records(), &b.ledger.records()[..10]);
    }

    #[test]
    fn rejects_small_budgets() {
        let mut f = |_: &[f64], _| Ok(0.0);
        let s = SurrogateSettings { m_init: 2, ..Default::default() };
        assert!(surrogate_optimize(&mut f, &alpha_n(), Direction::Minimize, &s, 0).is_err());
    }
}
