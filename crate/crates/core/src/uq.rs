//! Sampling-based uncertainty quantification of mitigated values: the
//! relative error η, order-statistic risk estimators and boxplot summaries.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::scalar::Real;

/// Denominator floor of [`relative_error`].
pub const ETA_GUARD: f64 = 1e-15;

/// `η = 2|e − m| / |e + m|`, with the denominator floored at [`ETA_GUARD`].
pub fn relative_error(exact: f64, mitigated: f64) -> f64 {
    relative_error_guarded(exact, mitigated).0
}

/// [`relative_error`] plus whether the guard was hit.
pub fn relative_error_guarded(exact: f64, mitigated: f64) -> (f64, bool) {
    let den = (exact + mitigated).abs();
    let guarded = den < ETA_GUARD;
    (2.0 * (exact - mitigated).abs() / den.max(ETA_GUARD), guarded)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EtaMeta {
    pub seed: u64,
    pub size: usize,
    /// Indices of draws whose denominator hit the guard.
    pub guarded: Vec<usize>,
    /// Free-form hyperparameter tag of the mitigator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSample {
    pub values: Vec<f64>,
    pub meta: EtaMeta,
}

impl EtaSample {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("relative error {v} is not finite and non-negative")));
        }
        let meta = EtaMeta { size: values.len(), ..EtaMeta::default() };
        Ok(Self { values, meta })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Draws `n` mitigated values, draw `i` from stream `(seed, [i])`, and maps
/// each through [`relative_error`].
pub fn sample_eta<F>(mut mitigator: F, exact: f64, n: usize, seed: u64) -> Result<EtaSample>
where
    F: FnMut(&mut StreamRng) -> Result<f64>,
{
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut values = Vec::with_capacity(n);
    let mut guarded = Vec::new();
    for i in 0..n {
        let m = mitigator(&mut stream(seed, &[i as u64]))?;
        let (eta, hit) = relative_error_guarded(exact, m);
        if hit {
            guarded.push(i);
        }
        values.push(eta);
    }
    Ok(EtaSample { values, meta: EtaMeta { seed, size: n, guarded, params: None } })
}

/// `⌈βN⌉` as a 1-based rank, with `βN` snapped to an integer when it is one
/// up to rounding (so `0.9 · 10` gives 9).
fn tail_rank(beta: f64, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidProbability { name: "beta", value: beta });
    }
    let x = beta * n as f64;
    let r = x.round();
    let rank = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    Ok((rank as usize).clamp(1, n))
}

/// The `⌈βN⌉`-th smallest element of an ascending slice.
pub fn quantile_sorted<T: Real>(sorted: &[T], beta: f64) -> Result<T> {
    Ok(sorted[tail_rank(beta, sorted.len())? - 1])
}

/// Mean of the elements of an ascending slice that are `≥` the β-quantile.
pub fn tvar_sorted<T: Real>(sorted: &[T], beta: f64) -> Result<T> {
    let q = quantile_sorted(sorted, beta)?;
    let start = sorted.partition_point(|&v| v < q);
    let tail = &sorted[start..];
    Ok(tail.iter().copied().sum::<T>() / T::of_usize(tail.len()))
}

pub fn quantile_estimate(sample: &EtaSample, beta: f64) -> Result<f64> {
    quantile_sorted(&sample.sorted(), beta)
}

pub fn tvar_estimate(sample: &EtaSample, beta: f64) -> Result<f64> {
    tvar_sorted(&sample.sorted(), beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimates {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub quantile: f64,
    pub tvar: f64,
    pub beta: f64,
}

impl RiskEstimates {
    pub fn from_values(values: &[f64], beta: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let quantile = quantile_sorted(&s, beta)?;
        Ok(Self {
            // summation rounding can push the mean a hair outside [min, max]
            mean: mean.clamp(s[0], s[s.len() - 1]),
            min: s[0],
            max: s[s.len() - 1],
            quantile,
            tvar: tvar_sorted(&s, beta)?.clamp(quantile, s[s.len() - 1]),
            beta,
        })
    }

    pub fn of(sample: &EtaSample, beta: f64) -> Result<Self> {
        Self::from_values(&sample.values, beta)
    }

    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Mean => self.mean,
            Statistic::Min => self.min,
            Statistic::Max => self.max,
            Statistic::Quantile => self.quantile,
            Statistic::Tvar => self.tvar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Min,
    Max,
    Quantile,
    Tvar,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [Self::Mean, Self::Min, Self::Max, Self::Quantile, Self::Tvar];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Min => "min",
            Self::Max => "max",
            Self::Quantile => "quantile",
            Self::Tvar => "tvar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Linear interpolation between order statistics at fraction `p` (the
/// "linear" method of common numerical libraries).
pub fn interpolated_quantile<T: Real>(sorted: &[T], p: f64) -> T {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let f = T::of(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * f
}

/// Quartiles, 1.5·IQR whiskers and outliers.
pub fn boxplot_summary(values: &[f64]) -> Result<BoxplotSummary> {
    if values.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: values.len() });
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, median, q3) = (
        interpolated_quantile(&s, 0.25),
        interpolated_quantile(&s, 0.5),
        interpolated_quantile(&s, 0.75),
    );
    let reach = 1.5 * (q3 - q1).abs();
    let (lo, hi) = (q1 - reach, q3 + reach);
    let inside = |v: &f64| *v >= lo && *v <= hi;
    let whisker_low = s.iter().copied().find(inside).unwrap_or(q1);
    let whisker_high = s.iter().rev().copied().find(inside).unwrap_or(q3);
    let outliers = s.iter().copied().filter(|v| !inside(v)).collect();
    Ok(BoxplotSummary { median, q1, q3, whisker_low, whisker_high, outliers })
}

/// Replica estimates for every sample size `N`.
pub type ConvergenceTable = BTreeMap<usize, Vec<RiskEstimates>>;

/// For each `N` in `sizes`, draws `replicas` independent η-samples of size
/// `N`; replica `r` of size `N` uses seed `derive_seed(seed, [N, r])`.
pub fn convergence_study<F>(
    mut mitigator: F,
    exact: f64,
    sizes: &[usize],
    replicas: usize,
    beta: f64,
    seed: u64,
) -> Result<ConvergenceTable>
where
    F: FnMut(&mut StreamRng) -> Result<f64>,
{
    convergence_study_eta(
        |rng| mitigator(rng).map(|m| relative_error(exact, m)),
        sizes,
        replicas,
        beta,
        seed,
    )
}

/// [`convergence_study`] over a sampler that yields η directly.
pub fn convergence_study_eta<F>(
    mut eta: F,
    sizes: &[usize],
    replicas: usize,
    beta: f64,
    seed: u64,
) -> Result<ConvergenceTable>
where
    F: FnMut(&mut StreamRng) -> Result<f64>,
{
    if sizes.is_empty() || replicas == 0 || sizes.contains(&0) {
        return Err(Error::InvalidArgument("convergence study needs sizes ≥ 1 and replicas ≥ 1".into()));
    }
    let mut table = ConvergenceTable::new();
    let mut buf = Vec::new();
    for &n in sizes {
        let mut row = Vec::with_capacity(replicas);
        for r in 0..replicas {
            let rs = crate::rng::derive_seed(seed, &[n as u64, r as u64]);
            buf.clear();
            for i in 0..n {
                buf.push(eta(&mut stream(rs, &[i as u64]))?);
            }
            row.push(RiskEstimates::from_values(&buf, beta)?);
        }
        table.insert(n, row);
    }
    Ok(table)
}

/// Writes `statistic,N,replica,value` rows.
pub fn write_convergence_csv<W: Write>(table: &ConvergenceTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["statistic", "N", "replica", "value"])?;
    for stat in Statistic::ALL {
        for (n, row) in table {
            for (r, est) in row.iter().enumerate() {
                w.write_record([stat.name().to_string(), n.to_string(), r.to_string(), est.get(stat).to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
