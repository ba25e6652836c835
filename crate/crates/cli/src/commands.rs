//! Subcommand implementations. Every command reads its inputs from the
//! output directory (or from paths named in the config), derives stage seeds
//! from the master seed, and writes its artifacts atomically, so rerunning a
//! stage in isolation reproduces exactly what a full pipeline run produced.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use pgdro_core::data::{self, Dataset, SyntheticParams};
use pgdro_core::grouping::{
    self, env_to_group_probs, floor_env_probs, predict_env_probs, train_env_classifier,
    zero_shot_env_probs, EnvClassifierConfig, EnvProbabilities, GroupProbabilities, GroupSpace,
};
use pgdro_core::model;
use pgdro_core::objectives::Objective;
use pgdro_core::seeds::{self, Stage};
use pgdro_core::training::{
    self, decision_boundary_grid, evaluate, evaluate_env_probs, synthesize_benchmark,
    MetricsReport, TrainConfig, TrainHistory,
};

use crate::config::{ExperimentConfig, LabelingMode};
use crate::output::{metrics_header, metrics_row, to_json_bytes, write_atomic, write_atomic_with};

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub master_seed: u64,
}

impl Ctx {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create output dir {}", self.out_dir.display()))
    }

    fn space(&self) -> Result<GroupSpace> {
        self.cfg.group_space()
    }

    fn load_dataset(&self, name: &str) -> Result<Dataset> {
        let path = self.path(name);
        data::load_csv(&path, &self.cfg.schema())
            .with_context(|| format!("cannot load dataset {}", path.display()))
    }

    /// All objectives share one derived training seed: comparisons are
    /// paired (same initialization and batch order, only the objective
    /// changes), and sweep runs differ only in the constant under study.
    fn train_seed(&self) -> u64 {
        seeds::derive(self.master_seed, Stage::RobustTraining)
    }

    fn save_dataset(&self, ds: &Dataset, name: &str) -> Result<()> {
        write_atomic_with(&self.path(name), |tmp| {
            data::save_csv(ds, tmp).map_err(Into::into)
        })
    }
}

fn parse_objective(raw: &str) -> Result<Objective> {
    raw.parse::<Objective>().map_err(|e| anyhow!("{e}"))
}

fn selected_objectives(ctx: &Ctx, flag: &Option<String>) -> Result<Vec<Objective>> {
    match flag {
        Some(raw) => Ok(vec![parse_objective(raw)?]),
        None => Ok(ctx.cfg.train.objectives.clone()),
    }
}

// ---------------------------------------------------------------------------
// gen-data

pub fn cmd_gen_data(ctx: &Ctx) -> Result<()> {
    ctx.ensure_out_dir()?;
    let params = ctx.cfg.synthetic_params(ctx.master_seed);
    let (train, val, test) = synthesize_benchmark(
        &params,
        ctx.cfg.data.val_per_group,
        ctx.cfg.data.test_per_group,
    )?;
    ctx.save_dataset(&train, "train.csv")?;
    ctx.save_dataset(&val, "val.csv")?;
    ctx.save_dataset(&test, "test.csv")?;
    println!(
        "wrote train.csv ({} rows), val.csv ({} rows), test.csv ({} rows) to {}",
        train.len(),
        val.len(),
        test.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// pseudo-label

#[derive(Serialize)]
struct LabelerReport {
    mode: &'static str,
    m: Option<usize>,
    temperature: Option<f64>,
    epsilon_floor: f64,
    metrics: Option<MetricsReport>,
}

pub fn cmd_pseudo_label(ctx: &Ctx) -> Result<()> {
    ctx.ensure_out_dir()?;
    let space = ctx.space()?;
    let train = ctx.load_dataset("train.csv")?;
    let labeling = &ctx.cfg.labeling;

    let (mode_name, env_probs, m_used): (&'static str, EnvProbabilities, Option<usize>) =
        match labeling.mode {
            LabelingMode::Supervised => {
                let subset = data::subsample_labeled(
                    &train,
                    labeling.m,
                    seeds::derive(ctx.master_seed, Stage::LabeledSubset),
                )?;
                let cfg = EnvClassifierConfig {
                    seed: seeds::derive(ctx.master_seed, Stage::EnvClassifier),
                    ..labeling.train.clone()
                };
                let net = train_env_classifier(&subset, &train, &cfg, &space)?;
                let probs = predict_env_probs(&net, train.features())?;
                ("supervised", probs, Some(labeling.m))
            }
            LabelingMode::ZeroShot => {
                let emb_path = labeling
                    .embeddings
                    .as_ref()
                    .ok_or_else(|| anyhow!("zero-shot labeling needs an embeddings file"))?;
                let proto_path = labeling
                    .prototypes
                    .as_ref()
                    .ok_or_else(|| anyhow!("zero-shot labeling needs a prototypes file"))?;
                let emb = grouping::load_embeddings(emb_path, proto_path, labeling.temperature)?;
                if emb.num_inputs() != train.len() {
                    bail!(
                        "embeddings file has {} rows but the training set has {}",
                        emb.num_inputs(),
                        train.len()
                    );
                }
                if emb.num_envs() != space.num_envs() {
                    bail!(
                        "prototypes file has {} environments but the space declares {}",
                        emb.num_envs(),
                        space.num_envs()
                    );
                }
                ("zero-shot", zero_shot_env_probs(&emb)?, None)
            }
            LabelingMode::GivenFile => {
                let path = labeling
                    .probabilities
                    .as_ref()
                    .ok_or_else(|| anyhow!("given-file labeling needs a probabilities file"))?;
                let q = grouping::load_group_probs(path)?;
                if q.rows() != train.len() || q.num_groups() != space.num_groups() {
                    bail!(
                        "probabilities file is {}x{} but the training set needs {}x{}",
                        q.rows(),
                        q.num_groups(),
                        train.len(),
                        space.num_groups()
                    );
                }
                ("given-file", extract_env_block(&q, &train, &space)?, None)
            }
        };

    let env_probs = floor_env_probs(&env_probs, labeling.epsilon_floor)?;
    let q = env_to_group_probs(&env_probs, train.labels(), &space)?;
    write_atomic_with(&ctx.path("group_probs.csv"), |tmp| {
        grouping::save_group_probs(&q, tmp).map_err(Into::into)
    })?;

    // Group-wise labeler accuracy, when ground truth is available.
    let metrics = if train.env().is_some() {
        Some(evaluate_env_probs(&env_probs, &train, &space)?)
    } else {
        None
    };
    let report = LabelerReport {
        mode: mode_name,
        m: m_used,
        temperature: (labeling.mode == LabelingMode::ZeroShot).then_some(labeling.temperature),
        epsilon_floor: labeling.epsilon_floor,
        metrics: metrics.clone(),
    };
    write_atomic(&ctx.path("labeler_report.json"), &to_json_bytes(&report)?)?;

    println!("wrote group_probs.csv ({} rows)", q.rows());
    if let Some(metrics) = metrics {
        println!("{}", metrics_header());
        println!("{}", metrics_row("labeler", &metrics));
    }
    Ok(())
}

/// Per-environment probabilities recovered from each row's class block.
fn extract_env_block(
    q: &GroupProbabilities,
    train: &Dataset,
    space: &GroupSpace,
) -> Result<EnvProbabilities> {
    let mut m = pgdro_core::numerics::Matrix::zeros(q.rows(), space.num_envs());
    for (i, &y) in train.labels().iter().enumerate() {
        let base = y * space.num_envs();
        for e in 0..space.num_envs() {
            m.set(i, e, q.row(i)[base + e]);
        }
    }
    EnvProbabilities::from_matrix(m)
        .map_err(|e| anyhow!("probabilities file puts mass outside the class blocks: {e}"))
}

// ---------------------------------------------------------------------------
// train

#[derive(Serialize)]
struct TrainReport {
    objective: Objective,
    config: TrainConfig,
    history: TrainHistory,
}

pub fn cmd_train(ctx: &Ctx, objective_flag: &Option<String>) -> Result<()> {
    ctx.ensure_out_dir()?;
    let space = ctx.space()?;
    let train_ds = ctx.load_dataset("train.csv")?;
    let val_ds = ctx.load_dataset("val.csv")?;
    let probs_path = ctx.path("group_probs.csv");

    for objective in selected_objectives(ctx, objective_flag)? {
        let q = match objective {
            Objective::Erm => {
                if probs_path.exists() {
                    eprintln!("warning: erm ignores the group-probabilities file");
                }
                None
            }
            _ => Some(grouping::load_group_probs(&probs_path).with_context(|| {
                format!(
                    "objective {objective} needs {} (run pseudo-label first)",
                    probs_path.display()
                )
            })?),
        };
        let cfg = TrainConfig {
            seed: ctx.train_seed(),
            ..ctx.cfg.train_config(objective)
        };
        let (net, history) = training::train(&train_ds, q.as_ref(), &val_ds, &space, &cfg)?;

        write_atomic(
            &ctx.path(&format!("model_{objective}.json")),
            model::model_to_json(&net)?.as_bytes(),
        )?;
        let report = TrainReport {
            objective,
            config: cfg,
            history,
        };
        write_atomic(
            &ctx.path(&format!("train_report_{objective}.json")),
            &to_json_bytes(&report)?,
        )?;
        let selected = report
            .history
            .selected_epoch
            .map_or("-".to_string(), |e| e.to_string());
        println!(
            "trained {objective}: model_{objective}.json, train_report_{objective}.json (selected epoch {selected})"
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Serialize)]
struct EvalReport {
    objective: Objective,
    dataset: String,
    metrics: MetricsReport,
}

fn write_eval_csv(path: &Path, metrics: &MetricsReport, space: &GroupSpace) -> Result<()> {
    write_atomic_with(path, |tmp| {
        let mut w = csv::Writer::from_path(tmp)?;
        w.write_record(["group", "y", "env", "count", "accuracy"])?;
        for g in 0..space.num_groups() {
            let (y, e) = space.group_components(g)?;
            w.write_record(&[
                g.to_string(),
                y.to_string(),
                e.to_string(),
                metrics.group_counts[g].to_string(),
                format!("{}", metrics.per_group_acc[g]),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn cmd_eval(ctx: &Ctx, objective_flag: &Option<String>) -> Result<()> {
    ctx.ensure_out_dir()?;
    let space = ctx.space()?;
    let test_ds = ctx.load_dataset("test.csv")?;
    println!("{}", metrics_header());
    for objective in selected_objectives(ctx, objective_flag)? {
        let model_path = ctx.path(&format!("model_{objective}.json"));
        let net = model::load_model(&model_path)
            .with_context(|| format!("cannot load {}", model_path.display()))?;
        let metrics = evaluate(&net, &test_ds, &space)?;
        let report = EvalReport {
            objective,
            dataset: "test.csv".into(),
            metrics: metrics.clone(),
        };
        write_atomic(
            &ctx.path(&format!("eval_{objective}.json")),
            &to_json_bytes(&report)?,
        )?;
        write_eval_csv(&ctx.path(&format!("eval_{objective}.csv")), &metrics, &space)?;
        println!("{}", metrics_row(objective.as_str(), &metrics));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep-c

pub fn cmd_sweep_c(ctx: &Ctx, values_flag: &Option<Vec<f64>>) -> Result<()> {
    ctx.ensure_out_dir()?;
    let values = values_flag
        .clone()
        .unwrap_or_else(|| ctx.cfg.sweep.c_values.clone());
    if values.iter().any(|&c| c < 0.0) {
        bail!("sweep adjustment values must be non-negative");
    }
    let space = ctx.space()?;
    let train_ds = ctx.load_dataset("train.csv")?;
    let val_ds = ctx.load_dataset("val.csv")?;
    let test_ds = ctx.load_dataset("test.csv")?;
    let q = grouping::load_group_probs(&ctx.path("group_probs.csv"))
        .context("the sweep needs group_probs.csv (run pseudo-label first)")?;

    for &objective in &ctx.cfg.sweep.objectives {
        if objective == Objective::Erm {
            eprintln!("warning: erm does not use the adjustment constant; rows will repeat");
        }
        let mut rows: Vec<(f64, MetricsReport)> = Vec::new();
        for &c in &values {
            // Shared seed across the sweep: only the constant changes.
            let cfg = TrainConfig {
                c,
                seed: ctx.train_seed(),
                ..ctx.cfg.train_config(objective)
            };
            let q_opt = (objective != Objective::Erm).then_some(&q);
            let (net, _) = training::train(&train_ds, q_opt, &val_ds, &space, &cfg)?;
            rows.push((c, evaluate(&net, &test_ds, &space)?));
        }
        let path = ctx.path(&format!("sweep_{objective}.csv"));
        write_atomic_with(&path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["C", "avg_acc", "worst_group_acc"])?;
            for (c, metrics) in &rows {
                w.write_record(&[
                    format!("{c}"),
                    format!("{}", metrics.avg_acc),
                    format!("{}", metrics.worst_group_acc),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        println!("wrote sweep_{objective}.csv ({} rows)", rows.len());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// boundary

pub fn cmd_boundary(
    ctx: &Ctx,
    objective_flag: &Option<String>,
    resolution_flag: Option<usize>,
) -> Result<()> {
    ctx.ensure_out_dir()?;
    let b = &ctx.cfg.boundary;
    let resolution = resolution_flag.unwrap_or(b.resolution);
    for objective in selected_objectives(ctx, objective_flag)? {
        let model_path = ctx.path(&format!("model_{objective}.json"));
        let net = model::load_model(&model_path)
            .with_context(|| format!("cannot load {}", model_path.display()))?;
        let grid =
            decision_boundary_grid(&net, (b.x_min, b.x_max), (b.y_min, b.y_max), resolution)?;
        let path = ctx.path(&format!("boundary_{objective}.csv"));
        write_atomic_with(&path, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["x1", "x2", "pred", "confidence"])?;
            for p in &grid {
                w.write_record(&[
                    format!("{}", p.x1),
                    format!("{}", p.x2),
                    p.pred.to_string(),
                    format!("{}", p.confidence),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        println!("wrote boundary_{objective}.csv ({} rows)", grid.len());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// pipeline

#[derive(Serialize)]
struct PipelineRunSummary {
    objective: Objective,
    selected_epoch: Option<usize>,
    val_worst_group_acc: Option<f64>,
    test: MetricsReport,
}

#[derive(Serialize)]
struct PipelineReport {
    master_seed: u64,
    params: SyntheticParams,
    m: usize,
    labeler: MetricsReport,
    runs: Vec<PipelineRunSummary>,
}

pub fn cmd_pipeline(ctx: &Ctx) -> Result<()> {
    ctx.ensure_out_dir()?;
    let space = ctx.space()?;
    if ctx.cfg.labeling.mode != LabelingMode::Supervised {
        bail!("the pipeline command uses supervised labeling; run the stages individually for other modes");
    }
    let params = ctx.cfg.synthetic_params(ctx.master_seed);
    let stages = ctx.cfg.pipeline_stages();
    let out = training::run_pipeline(&params, ctx.cfg.labeling.m, &stages)?;

    ctx.save_dataset(&out.train, "train.csv")?;
    ctx.save_dataset(&out.val, "val.csv")?;
    ctx.save_dataset(&out.test, "test.csv")?;
    write_atomic_with(&ctx.path("group_probs.csv"), |tmp| {
        grouping::save_group_probs(&out.group_probs, tmp).map_err(Into::into)
    })?;
    let labeler_report = LabelerReport {
        mode: "supervised",
        m: Some(ctx.cfg.labeling.m),
        temperature: None,
        epsilon_floor: ctx.cfg.labeling.epsilon_floor,
        metrics: Some(out.labeler_metrics.clone()),
    };
    write_atomic(
        &ctx.path("labeler_report.json"),
        &to_json_bytes(&labeler_report)?,
    )?;

    let mut summaries = Vec::new();
    let mut text = String::new();
    text.push_str(&format!(
        "benchmark: n = {}, p = {}, m = {}, master seed {}\n\n",
        params.n, params.p, ctx.cfg.labeling.m, ctx.master_seed
    ));
    text.push_str(&metrics_header());
    text.push('\n');
    text.push_str(&metrics_row("labeler", &out.labeler_metrics));
    text.push('\n');
    for run in &out.runs {
        let name = format!("{}", run.objective);
        write_atomic(
            &ctx.path(&format!("model_{name}.json")),
            model::model_to_json(&run.network)?.as_bytes(),
        )?;
        let train_report = TrainReport {
            objective: run.objective,
            config: TrainConfig {
                objective: run.objective,
                seed: ctx.train_seed(),
                ..ctx.cfg.train_config(run.objective)
            },
            history: run.history.clone(),
        };
        write_atomic(
            &ctx.path(&format!("train_report_{name}.json")),
            &to_json_bytes(&train_report)?,
        )?;
        let eval_report = EvalReport {
            objective: run.objective,
            dataset: "test.csv".into(),
            metrics: run.test_metrics.clone(),
        };
        write_atomic(
            &ctx.path(&format!("eval_{name}.json")),
            &to_json_bytes(&eval_report)?,
        )?;
        write_eval_csv(
            &ctx.path(&format!("eval_{name}.csv")),
            &run.test_metrics,
            &space,
        )?;

        let val_worst = run
            .history
            .selected_epoch
            .map(|e| run.history.records[e].val.worst_group_acc);
        text.push_str(&metrics_row(&name, &run.test_metrics));
        text.push('\n');
        summaries.push(PipelineRunSummary {
            objective: run.objective,
            selected_epoch: run.history.selected_epoch,
            val_worst_group_acc: val_worst,
            test: run.test_metrics.clone(),
        });
    }

    let report = PipelineReport {
        master_seed: ctx.master_seed,
        params,
        m: ctx.cfg.labeling.m,
        labeler: out.labeler_metrics.clone(),
        runs: summaries,
    };
    write_atomic(&ctx.path("pipeline_report.json"), &to_json_bytes(&report)?)?;
    write_atomic(&ctx.path("pipeline_report.txt"), text.as_bytes())?;
    print!("{text}");
    println!("\nwrote pipeline artifacts to {}", ctx.out_dir.display());
    Ok(())
}
