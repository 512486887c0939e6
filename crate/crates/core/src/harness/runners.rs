//! One entry point per experiment kind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::artifact::{OutputDir, RunArtifact, ShotAccount};
use super::config::{CostPath, ExperimentConfig, ExperimentKind};
use super::context::{
    run_optimizer, Context, Problem, RiskObjective, TAG_FAMILY, TAG_MODEL, TAG_REEVAL, TAG_RUN, TAG_STUDY,
};
use crate::bootstrap::{estimate_shot_model, ShotModel};
use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::opt::{Objective, OptRunResult, SearchSpace};
use crate::rng::derive_seed;
use crate::stateprep::{transfer_family, FamilyMember};
use crate::uq::{boxplot_summary, convergence_study, write_convergence_csv, Statistic};
use crate::zne::ZneProblem;

/// Runs `kind` with `config`, writing into `out`.
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig, out: &Path) -> Result<RunArtifact> {
    match kind {
        ExperimentKind::PrepareState => run_prepare_state(config, out),
        ExperimentKind::GenTrainingPool => run_gen_training_pool(config, out),
        ExperimentKind::Convergence => run_convergence(config, out),
        ExperimentKind::Optimize => run_robust_design(config, out),
        ExperimentKind::Transfer => run_transfer(config, out),
        ExperimentKind::BootstrapCompare => run_bootstrap_compare(config, out),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub index: usize,
    pub file: String,
    pub exact: f64,
    pub seed: u64,
    pub scale: f64,
}

/// Writes member circuits and `manifest.csv` into `dir`.
pub fn save_family(dir: &Path, members: &[FamilyMember]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for (i, m) in members.iter().enumerate() {
        let file = format!("{i:02}.json");
        m.circuit.save(dir.join(&file))?;
        w.serialize(FamilyEntry { index: i, file, exact: m.exact, seed: m.seed, scale: m.scale })?;
    }
    w.flush()?;
    Ok(path)
}

/// Reads a family from its manifest; circuit files resolve relative to it.
pub fn load_family(manifest: &Path) -> Result<Vec<FamilyMember>> {
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut r = csv::Reader::from_path(manifest)?;
    r.deserialize::<FamilyEntry>()
        .map(|e| {
            let e = e?;
            Ok(FamilyMember { circuit: Circuit::load(dir.join(&e.file))?, exact: e.exact, seed: e.seed, scale: e.scale })
        })
        .collect()
}

/// Prepares the circuit of interest and, when `transfer.count ≥ 2`, its
/// transfer family.
pub fn run_prepare_state(config: &ExperimentConfig, out: &Path) -> Result<RunArtifact> {
    let kind = ExperimentKind::PrepareState;
    config.validate(kind)?;
    let mut dir = OutputDir::create(out)?;
    let ctx = Context::prepare(config)?;
    dir.mark("ground_state");
    ctx.circuit.save(dir.record("circuit.json"))?;
    if let Some(g) = &ctx.ground_state {
        dir.write_json("ground_state.json", g)?;
    }
    let mut family_summary = serde_json::Value::Null;
    if config.transfer.count >= 2 {
        let members = transfer_family(
            &ctx.circuit,
            &ctx.observable,
            config.transfer.count,
            config.transfer.tol,
            derive_seed(config.seed, &[TAG_FAMILY]),
        )?;
        save_family(&dir.record("family"), &members)?;
        family_summary = json!({
            "manifest": "family/manifest.csv",
            "exact": members.iter().map(|m| m.exact).collect::<Vec<_>>(),
        });
        dir.mark("family");
    }
    let summary = json!({
        "observable": ctx.observable.to_string(),
        "exact": ctx.exact,
        "cnot_count": ctx.circuit.count(GateKind::Cnot),
        "rz_count": ctx.circuit.count(GateKind::Rz),
        "sx_count": ctx.circuit.count(GateKind::SqrtX),
        "ground_state": ctx.ground_state.as_ref().map(|g| json!({
            "energy": g.energy,
            "exact_energy": g.exact_energy,
            "residual": g.residual,
            "restarts": g.restarts,
        })),
        "family": family_summary,
    });
    dir.finish(kind, config, ShotAccount::default(), summary)
}

/// Generates the CDR training pool into `out/pool` (or `pool.path`).
pub fn run_gen_training_pool(config: &ExperimentConfig, out: &Path) -> Result<RunArtifact> {
    let kind = ExperimentKind::GenTrainingPool;
    config.validate(kind)?;
    let mut dir = OutputDir::create(out)?;
    let ctx = Context::prepare(config)?;
    let (pool_dir, shown) = match &config.pool.path {
        Some(p) => (p.clone(), p.clone()),
        None => (dir.record("pool"), PathBuf::from("pool")),
    };
    if pool_dir.join("pool.json").is_file() {
        return Err(Error::InvalidArgument(format!("a pool already exists at {}", pool_dir.display())));
    }
    let mut cfg = config.clone();
    cfg.pool.path = Some(pool_dir.clone());
    let pool = super::context::load_or_generate_pool(&cfg, &ctx, &pool_dir)?;
    dir.mark("pool");
    let exact: Vec<f64> = pool.entries().iter().map(|e| e.exact).collect();
    let summary = json!({
        "path": shown,
        "size": pool.len(),
        "unreached": pool.unreached(),
        "tol": pool.tol(),
        "exact_min": exact.first(),
        "exact_max": exact.last(),
    });
    dir.finish(kind, config, ShotAccount::default(), summary)
}

/// Replica risk estimates at every configured sample size.
pub fn run_convergence(config: &ExperimentConfig, out: &Path) -> Result<RunArtifact> {
    let kind = ExperimentKind::Convergence;
    config.validate(kind)?;
    let mut dir = OutputDir::create(out)?;
    let ctx = Context::prepare(config)?;
    let problem = Problem::build(config, &ctx, &out.join("pool"))?;
    dir.mark("setup");
    let mitigator = problem.mitigator(None);
    let mut shots = ShotAccount::default();
    let uq = &config.uq;
    let table = convergence_study(
        |rng| {
            let m = mitigator.mitigate(&config.mitigation, uq.shot_noise, rng)?;
            shots += ShotAccount { quantum: m.quantum_shots, resampled: m.resampled_shots };
            Ok(m.value)
        },
        ctx.exact,
        &uq.sizes,
        uq.replicas,
        uq.beta,
        derive_seed(config.seed, &[TAG_STUDY]),
    )?;
    dir.mark("study");
    write_convergence_csv(&table, std::fs::File::create(dir.record("convergence.csv"))?)?;

    let mut w = dir.csv("boxplot.csv")?;
    w.write_record(["statistic", "N", "whisker_low", "q1", "median", "q3", "whisker_high", "outliers"])?;
    let mut medians: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    for stat in Statistic::ALL {
        for (&n, row) in &table {
            let values: Vec<f64> = row.iter().map(|r| r.get(stat)).collect();
            let b = if values.len() >= 2 {
                boxplot_summary(&values)?
            } else {
                let v = values[0];
                crate::uq::BoxplotSummary { median: v, q1: v, q3: v, whisker_low: v, whisker_high: v, outliers: vec![] }
            };
            w.write_record([
                stat.name().to_string(),
                n.to_string(),
                b.whisker_low.to_string(),
                b.q1.to_string(),
                b.median.to_string(),
                b.q3.to_string(),
                b.whisker_high.to_string(),
                b.outliers.len().to_string(),
            ])?;
            medians.entry(stat.name()).or_default().insert(n, b.median);
        }
    }
    w.flush()?;
    let summary = json!({ "exact": ctx.exact, "replica_medians": medians });
    dir.finish(kind, config, shots, summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub best_params: BTreeMap<String, f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub jittered: usize,
    pub stepped: usize,
    pub shots: ShotAccount,
}

#[derive(Serialize)]
struct LedgerRow<'a> {
    run: usize,
    eval: usize,
    params: BTreeMap<String, f64>,
    value: f64,
    sample_size: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    arm: Option<&'a str>,
}

struct Arm {
    records: Vec<RunRecord>,
    results: Vec<OptRunResult>,
    /// Shot model of each bootstrap run.
    models: Vec<Option<ShotModel>>,
    shots: ShotAccount,
}

/// Independently seeded optimizer runs; run `r` is seeded identically for
/// either cost path.
fn optimize_arm(config: &ExperimentConfig, exact: f64, problem: &Problem, cost: CostPath) -> Result<Arm> {
    let space = config.space();
    let mut arm = Arm { records: Vec::new(), results: Vec::new(), models: Vec::new(), shots: ShotAccount::default() };
    for r in 0..config.optimizer.runs {
        let seed = derive_seed(config.seed, &[TAG_RUN, r as u64]);
        let model = match cost {
            CostPath::Direct => None,
            CostPath::Bootstrap => {
                let zne = problem.zne().ok_or_else(|| Error::InvalidArgument("bootstrap needs ZNE".into()))?;
                let b = &config.bootstrap;
                Some(estimate_shot_model(zne, b.levels, b.budget, derive_seed(seed, &[TAG_MODEL]))?)
            }
        };
        let mut objective =
            RiskObjective::new(problem.mitigator(model.as_ref()), config.mitigation, space.clone(), exact, config.uq.clone());
        let result = run_optimizer(&mut objective, &space, &config.optimizer, seed)?;
        let shots = ShotAccount {
            quantum: model.as_ref().map_or(0, |m| m.source_shots()) + objective.quantum_shots,
            resampled: objective.resampled_shots,
        };
        arm.shots += shots;
        arm.records.push(RunRecord {
            run: r,
            seed,
            best_params: space.named(&result.best_params),
            best_value: result.best_value,
            evaluations: result.evaluations(),
            jittered: result.jittered,
            stepped: result.stepped,
            shots,
        });
        arm.results.push(result);
        arm.models.push(model);
    }
    Ok(arm)
}

fn ledger_rows<'a>(space: &'a SearchSpace, arm: &'a Arm, label: Option<&'a str>) -> impl Iterator<Item = LedgerRow<'a>> + 'a {
    arm.results.iter().enumerate().flat_map(move |(run, res)| {
        res.ledger.records().iter().enumerate().map(move |(eval, rec)| LedgerRow {
            run,
            eval,
            params: space.named(&rec.params),
            value: rec.value,
            sample_size: rec.sample_size,
            seed: rec.seed,
            arm: label,
        })
    })
}

fn write_scatter(dir: &mut OutputDir, name: &str, space: &SearchSpace, records: &[RunRecord]) -> Result<()> {
    let mut w = dir.csv(name)?;
    let mut header = vec!["run".to_string()];
    header.extend(space.dims().iter().map(|d| d.name.clone()));
    header.push("value".into());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.run.to_string()];
        row.extend(space.dims().iter().map(|d| r.best_params[&d.name].to_string()));
        row.push(r.best_value.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn arm_summary(config: &ExperimentConfig, arm: &Arm) -> serde_json::Value {
    let values: Vec<f64> = arm.records.iter().map(|r| r.best_value).collect();
    let dir = config.optimizer.direction;
    let best = arm
        .records
        .iter()
        .fold(None::<&RunRecord>, |b, r| match b {
            Some(b) if !dir.better(r.best_value, b.best_value) => Some(b),
            _ => Some(r),
        })
        .expect("at least one run");
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({
        "runs": values.len(),
        "best_run": best.run,
        "best_params": best.best_params,
        "best_value": best.best_value,
        "best_values": { "min": min, "max": max, "mean": values.iter().sum::<f64>() / values.len() as f64, "spread": max - min },
        "quantum_shots_per_run": arm.records.iter().map(|r| r.shots.quantum).collect::<Vec<_>>(),
    })
}

/// Repeated optimizer runs over the mitigation hyperparameters.
pub fn run_robust_design(config: &ExperimentConfig, out: &Path) -> Result<RunArtifact> {
    let kind = ExperimentKind::Optimize;
    config.validate(kind)?;
    let mut dir = OutputDir::create(out)?;
    let ctx = Context::prepare(config)?;
    let problem = Problem::build(config, &ctx, &out.join("pool"))?;
    dir.mark("setup");
    let space = config.space();
    let arm = optimize_arm(config, ctx.exact, &problem, config.optimizer.cost)?;
    dir.mark("optimize");
    dir.write_jsonl("runs.jsonl", &arm.records)?;
    dir.write_jsonl("ledger.jsonl", ledger_rows(&space, &arm, None))?;
    write_scatter(&mut dir, "scatter.csv", &space, &arm.records)?;
    let mut summary = arm_summary(config, &arm);
    summary["exact"] = json!(ctx.exact);
    summary["statistic"] = json!(config.uq.statistic);
    summary["direction"] = json!(config.optimizer.direction);
    let shots = arm.shots;
    dir.finish(kind, config, shots, summary)
}

/// Matched direct and bootstrap optimizer runs.
pub fn run_bootstrap_compare(config: &ExperimentConfig, out: &Path) -> Result<RunArtifact> {
    let kind = ExperimentKind::BootstrapCompare;
    config.validate(kind)?;
    let mut dir = OutputDir::create(out)?;
    let ctx = Context::prepare(config)?;
    let problem = Problem::build(config, &ctx, &out.join("pool"))?;
    dir.mark("setup");
    let space = config.space();
    let direct = optimize_arm(config, ctx.exact, &problem, CostPath::Direct)?;
    dir.mark("direct");
    let boot = optimize_arm(config, ctx.exact, &problem, CostPath::Bootstrap)?;
    dir.mark("bootstrap");
    dir.write_jsonl("runs_direct.jsonl", &direct.records)?;
    dir.write_jsonl("runs_bootstrap.jsonl", &boot.records)?;
    dir.write_jsonl(
        "ledger.jsonl",
        ledger_rows(&space, &direct, Some("direct")).chain(ledger_rows(&space, &boot, Some("bootstrap"))),
    )?;
    write_scatter(&mut dir, "scatter_direct.csv", &space, &direct.records)?;
    write_scatter(&mut dir, "scatter_bootstrap.csv", &space, &boot.records)?;
    let mean = |a: &Arm| a.records.iter().map(|r| r.best_value).sum::<f64>() / a.records.len() as f64;
    let summary = json!({
        "exact": ctx.exact,
        "direct": arm_summary(config, &direct),
        "bootstrap": arm_summary(config, &boot),
        "mean_best_difference": mean(&boot) - mean(&direct),
        "quantum_shots": { "direct": direct.shots.quantum, "bootstrap": boot.shots.quantum },
        "shot_ratio": direct.shots.quantum as f64 / boot.shots.quantum.max(1) as f64,
    });
    let mut shots = direct.shots;
    shots += boot.shots;
    dir.finish(kind, config, shots, summary)
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub index: usize,
    pub exact: f64,
    /// Best parameters of every optimizer run on this member.
    pub optimized_params: Vec<BTreeMap<String, f64>>,
    pub optimized_mean: f64,
    pub optimized_sd: f64,
    pub transferred_mean: f64,
    pub transferred_sd: f64,
    /// `sqrt((s_opt² + s_tr²)/2)`.
    pub pooled_sd: f64,
    /// `|mean_tr − mean_opt| < 2·pooled_sd`, or both means equal.
    pub agree: bool,
}

/// Repeats the optimizer runs on every family member. Each member is then
/// re-evaluated at the best parameters of its own runs and at those of the
/// base circuit's runs; run `r` of both sets shares one fresh seed, so the
/// base member's two sets coincide.
pub fn run_transfer(config: &ExperimentConfig, out: &Path) -> Result<RunArtifact> {
    let kind = ExperimentKind::Transfer;
    config.validate(kind)?;
    let mut dir = OutputDir::create(out)?;
    let ctx = Context::prepare(config)?;
    let t = &config.transfer;
    let members = match &t.family {
        Some(p) => load_family(p)?,
        None => transfer_family(&ctx.circuit, &ctx.observable, t.count, t.tol, derive_seed(config.seed, &[TAG_FAMILY]))?,
    };
    if members.first().map(|m| &m.circuit) != Some(&ctx.circuit) {
        return Err(Error::InvalidArgument("family member 0 must be the circuit of interest".into()));
    }
    dir.mark("family");
    let space = config.space();
    let mut shots = ShotAccount::default();
    let mut problems = Vec::with_capacity(members.len());
    let mut arms = Vec::with_capacity(members.len());
    for m in &members {
        let problem = Problem::Zne(ZneProblem::new(m.circuit.clone(), ctx.observable.clone(), config.noise)?);
        let arm = optimize_arm(config, m.exact, &problem, config.optimizer.cost)?;
        shots += arm.shots;
        problems.push(problem);
        arms.push(arm);
    }
    dir.mark("optimize");

    let mut rows = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        let (mut opt, mut tr) = (Vec::new(), Vec::new());
        for r in 0..config.optimizer.runs {
            let mut obj = RiskObjective::new(
                problems[i].mitigator(arms[i].models[r].as_ref()),
                config.mitigation,
                space.clone(),
                m.exact,
                config.uq.clone(),
            );
            let seed = derive_seed(config.seed, &[TAG_REEVAL, i as u64, r as u64]);
            opt.push(Objective::evaluate(&mut obj, &arms[i].results[r].best_params, seed)?);
            tr.push(Objective::evaluate(&mut obj, &arms[0].results[r].best_params, seed)?);
            shots += ShotAccount { quantum: obj.quantum_shots, resampled: obj.resampled_shots };
        }
        let ((om, os), (tm, ts)) = (mean_sd(&opt), mean_sd(&tr));
        let pooled = ((os * os + ts * ts) / 2.0).sqrt();
        rows.push(TransferRow {
            index: i,
            exact: m.exact,
            optimized_params: arms[i].records.iter().map(|r| r.best_params.clone()).collect(),
            optimized_mean: om,
            optimized_sd: os,
            transferred_mean: tm,
            transferred_sd: ts,
            pooled_sd: pooled,
            agree: tm == om || (tm - om).abs() < 2.0 * pooled,
        });
    }
    dir.mark("reevaluate");
    dir.write_jsonl("transfer.jsonl", &rows)?;
    let mut w = dir.csv("transfer.csv")?;
    let mut header: Vec<String> = ["index", "exact"].map(String::from).to_vec();
    header.extend(
        ["optimized_mean", "optimized_sd", "transferred_mean", "transferred_sd", "pooled_sd", "agree"].map(String::from),
    );
    w.write_record(&header)?;
    for r in &rows {
        let mut rec = vec![r.index.to_string(), r.exact.to_string()];
        rec.extend([
            r.optimized_mean.to_string(),
            r.optimized_sd.to_string(),
            r.transferred_mean.to_string(),
            r.transferred_sd.to_string(),
            r.pooled_sd.to_string(),
            r.agree.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    let large: Vec<&TransferRow> = rows.iter().filter(|r| r.exact.abs() >= t.min_abs_exact).collect();
    let summary = json!({
        "transferred_params": arms[0].records.iter().map(|r| &r.best_params).collect::<Vec<_>>(),
        "members": rows.len(),
        "large_members": large.len(),
        "large_agreeing": large.iter().filter(|r| r.agree).count(),
        "smallest_abs_exact": rows.iter().min_by(|a, b| a.exact.abs().total_cmp(&b.exact.abs())).map(|r| json!({
            "index": r.index,
            "exact": r.exact,
            "optimized_mean": r.optimized_mean,
            "transferred_mean": r.transferred_mean,
        })),
    });
    dir.finish(kind, config, shots, summary)
}
