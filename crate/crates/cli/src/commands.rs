use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use gravrank::baselines::{BaselineKind, BaselineRanker, SvdDnnConfig};
use gravrank::coldstart::{write_ranked_tsv, CandidatePolicy, CatalogEmbedding, RankedList};
use gravrank::eval::{
    evaluate, mass_correlations, node_measures, popularity_bias_profile, write_profile_tsv, EvalReport, PathLength,
};
use gravrank::graph::{load_dataset, make_split, mask_cold, read_split, write_dataset, write_id_table, write_split};
use gravrank::models::{train, Checkpoint, TrainData};
use gravrank::synthetic::{planted_dataset, PlantedConfig};
use gravrank::{DataSplit, Dataset, MaskedGraphView, ModelKind, NodeId, TrainConfig};
use serde_json::json;

use crate::config::{hex_digest, RunConfig, TRAINING_KEYS};
use crate::CliError;

/// Dataset, split and masked view, loaded once per command.
struct Inputs {
    ds: Dataset,
    split: DataSplit,
    masked: MaskedGraphView,
}

fn load_dataset_only(cfg: &RunConfig) -> Result<Dataset, CliError> {
    Ok(load_dataset(&cfg.data_path("nodes"), &cfg.data_path("edges"), &cfg.data_path("features"))?)
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs, CliError> {
    let ds = load_dataset_only(cfg)?;
    let split = read_split(&cfg.data_path("split"), &ds)?;
    let masked = mask_cold(&ds.graph, &split)?;
    Ok(Inputs { ds, split, masked })
}

fn out_file(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Records the exact configuration next to the command's outputs.
fn write_config(cfg: &RunConfig) -> Result<(), CliError> {
    let text = format!("# config_hash={}\n{}", cfg.hash(), cfg.canonical());
    write_text(&out_file(cfg, "config.txt")?, &text)
}

/// Digest of the training settings and of the data and split files a model
/// is trained on. Stored in checkpoints and rechecked before they are used.
fn training_fingerprint(cfg: &RunConfig, model: ModelKind, train: &TrainConfig) -> Result<String, CliError> {
    let mut text = serde_json::to_string(&json!({ "model": model, "config": train }))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for key in ["nodes", "edges", "features", "split"] {
        let path = cfg.data_path(key);
        let bytes = fs::read(&path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        text.push_str(&format!("\n{key}={}", hex_digest(&bytes)));
    }
    Ok(hex_digest(text.as_bytes()))
}

fn load_checkpoint(cfg: &RunConfig) -> Result<Checkpoint, CliError> {
    let path = cfg.checkpoint_path();
    let ck = Checkpoint::load(&path)?;
    let mut problems = Vec::new();
    if training_fingerprint(cfg, ck.model, &ck.config)? != ck.config_hash {
        problems.push("data or split files changed since training".to_string());
    }
    // explicitly requested training settings must agree with the checkpoint
    let wanted = serde_json::to_value(cfg.train_config(0)?).map_err(|e| CliError::Runtime(e.to_string()))?;
    let stored = serde_json::to_value(&ck.config).map_err(|e| CliError::Runtime(e.to_string()))?;
    for &key in TRAINING_KEYS {
        if !cfg.is_explicit(key) {
            continue;
        }
        let agrees = if key == "model" {
            cfg.model()? == ck.model
        } else {
            wanted.get(key) == stored.get(key)
        };
        if !agrees {
            problems.push(format!("`{key}={}` differs from the checkpoint", cfg.get(key)));
        }
    }
    if !problems.is_empty() {
        let msg = format!("checkpoint {} does not match this run: {}", path.display(), problems.join("; "));
        if cfg.force {
            eprintln!("warning: {msg} (continuing because of --force)");
        } else {
            return Err(CliError::Input(format!("{msg}; pass --force to use it anyway")));
        }
    }
    Ok(ck)
}

fn train_model(cfg: &RunConfig, inputs: &Inputs, run: usize) -> Result<Checkpoint, CliError> {
    let model = cfg.model()?;
    let config = cfg.train_config(run)?;
    let decoder = model.decoder(config.lambda, config.eps_dist);
    let data = TrainData { masked: &inputs.masked, attrs: &inputs.ds.attrs, meta: Some(&inputs.ds.meta) };
    let fingerprint = training_fingerprint(cfg, model, &config)?;
    let out = train(&data, decoder, &config)?;
    Ok(Checkpoint::from_training(model, config, fingerprint, out))
}

fn queries<'a>(cfg: &RunConfig, inputs: &'a Inputs) -> Result<&'a [NodeId], CliError> {
    match cfg.get("part") {
        "test" => Ok(&inputs.split.test),
        "valid" => Ok(&inputs.split.valid),
        v => Err(CliError::Input(format!("bad value `{v}` for `part`: expected test or valid"))),
    }
}

fn ks(cfg: &RunConfig) -> Result<Vec<usize>, CliError> {
    let ks: Vec<usize> = cfg.list("ks")?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::Input("`ks` must list positive integers".into()));
    }
    Ok(ks)
}

fn svd_config(cfg: &RunConfig, run: usize) -> Result<SvdDnnConfig, CliError> {
    Ok(SvdDnnConfig {
        dim: cfg.parse("svd_dim")?,
        hidden: cfg.list("svd_hidden")?,
        epochs: cfg.parse("svd_epochs")?,
        lr: cfg.parse("svd_lr")?,
        seed: cfg.parse::<u64>("seed")? + run as u64,
        ..SvdDnnConfig::default()
    })
}

fn rank_checkpoint(cfg: &RunConfig, inputs: &Inputs, ck: &Checkpoint, k: usize) -> Result<Vec<RankedList>, CliError> {
    let policy: CandidatePolicy = cfg.parse("candidates")?;
    let cat = CatalogEmbedding::from_checkpoint(ck, &inputs.masked, &inputs.ds.attrs, &inputs.split.cold())?;
    Ok(cat.rank_queries(queries(cfg, inputs)?, policy, k)?)
}

fn rank_baseline(
    cfg: &RunConfig,
    inputs: &Inputs,
    kind: BaselineKind,
    run: usize,
    k: usize,
) -> Result<Vec<RankedList>, CliError> {
    let ranker = BaselineRanker::build(kind, &inputs.masked, &inputs.ds.attrs, &inputs.ds.meta, &svd_config(cfg, run)?)?;
    Ok(ranker.rank_queries(&inputs.ds.attrs, &inputs.ds.meta, queries(cfg, inputs)?, k)?)
}

fn baseline(cfg: &RunConfig) -> Result<Option<BaselineKind>, CliError> {
    match cfg.get("baseline") {
        "" | "none" => Ok(None),
        v => Ok(Some(v.parse().map_err(|e: gravrank::Error| CliError::Input(e.to_string()))?)),
    }
}

/// What produced a set of rankings.
enum Source {
    Baseline(BaselineKind),
    Checkpoint(Box<Checkpoint>),
    Train,
}

fn source(cfg: &RunConfig) -> Result<Source, CliError> {
    if let Some(kind) = baseline(cfg)? {
        Ok(Source::Baseline(kind))
    } else if cfg.is_explicit("checkpoint") {
        Ok(Source::Checkpoint(Box::new(load_checkpoint(cfg)?)))
    } else {
        Ok(Source::Train)
    }
}

// ---------------------------------------------------------------- commands

pub fn make_sample(cfg: &RunConfig) -> Result<(), CliError> {
    let seed: u64 = cfg.parse("seed")?;
    let ds = planted_dataset(&PlantedConfig {
        nodes: cfg.parse("sample_nodes")?,
        k: cfg.parse("sample_k")?,
        seed,
        ..PlantedConfig::default()
    })?;
    let ratios = split_ratios(cfg)?;
    let split = make_split(ds.len(), ratios, seed)?;
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    write_dataset(&ds, &dir.join("nodes.tsv"), &dir.join("edges.tsv"), &dir.join("features.tsv"))?;
    write_split(&dir.join("split.tsv"), &ds.ids, &split)?;
    println!(
        "wrote {} nodes, {} edges, {} attribute columns to {}",
        ds.len(),
        ds.graph.edge_count(),
        ds.attrs.dim(),
        dir.display()
    );
    Ok(())
}

fn split_ratios(cfg: &RunConfig) -> Result<[f64; 3], CliError> {
    let r: Vec<f64> = cfg.list("ratios")?;
    r.try_into()
        .map_err(|_| CliError::Input("`ratios` needs three comma-separated fractions".into()))
}

pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset_only(cfg)?;
    write_id_table(&out_file(cfg, "ids.tsv")?, &ds.ids)?;
    let ranked = ds.meta.popularity_rank.iter().filter(|r| r.is_some()).count();
    let with_country = ds.meta.country.iter().filter(|c| c.is_some()).count();
    let summary = json!({
        "config_hash": cfg.hash(),
        "nodes": ds.len(),
        "edges": ds.graph.edge_count(),
        "feature_dim": ds.attrs.dim(),
        "nodes_with_rank": ranked,
        "nodes_with_country": with_country,
    });
    write_json(&out_file(cfg, "ingest.json")?, &summary)?;
    write_config(cfg)?;
    println!(
        "{} nodes, {} edges, {} attribute columns; {ranked} ranked, {with_country} with a country",
        ds.len(),
        ds.graph.edge_count(),
        ds.attrs.dim()
    );
    Ok(())
}

pub fn split(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset_only(cfg)?;
    let split = make_split(ds.len(), split_ratios(cfg)?, cfg.parse("seed")?)?;
    let path = cfg.data_path("split");
    write_split(&path, &ds.ids, &split)?;
    println!(
        "{} train, {} valid, {} test nodes written to {}",
        split.warm.len(),
        split.valid.len(),
        split.test.len(),
        path.display()
    );
    Ok(())
}

pub fn train_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ck = train_model(cfg, &inputs, 0)?;
    let path = cfg.checkpoint_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    ck.save(&path)?;
    let mut trace = format!("# config_hash={}\nepoch\ttotal\treconstruction\tkl\n", cfg.hash());
    for e in 0..ck.trace.len() {
        let kl = ck.trace.kl.get(e).map_or("NA".to_string(), |v| v.to_string());
        trace.push_str(&format!("{}\t{}\t{}\t{kl}\n", e + 1, ck.trace.total[e], ck.trace.reconstruction[e]));
    }
    write_text(&out_file(cfg, "trace.tsv")?, &trace)?;
    write_config(cfg)?;
    println!(
        "trained {} for {} epochs on {} warm nodes; final loss {:.6}; checkpoint {}",
        ck.model,
        ck.trace.len(),
        ck.warm_ids.len(),
        ck.trace.total.last().copied().unwrap_or(f64::NAN),
        path.display()
    );
    Ok(())
}

fn write_embedding_rows(
    path: &Path,
    cfg: &RunConfig,
    ids: &[String],
    rows: impl Iterator<Item = (NodeId, &'static str, Vec<f64>)>,
) -> Result<(), CliError> {
    let mut text = format!("# config_hash={}\n", cfg.hash());
    for (id, part, values) in rows {
        text.push_str(&ids[id]);
        text.push('\t');
        text.push_str(part);
        for v in values {
            text.push_str(&format!("\t{v}"));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn project(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ck = load_checkpoint(cfg)?;
    let cold = inputs.split.cold();
    let cat = CatalogEmbedding::from_checkpoint(&ck, &inputs.masked, &inputs.ds.attrs, &cold)?;
    let path = out_file(cfg, "cold_embedding.tsv")?;
    let rows = cold.iter().map(|&c| {
        let r = cat.row(c).expect("cold node in catalog");
        (c, "cold", cat.embedding.raw.row(r).to_vec())
    });
    write_embedding_rows(&path, cfg, &inputs.ds.ids, rows)?;
    write_config(cfg)?;
    println!("projected {} cold nodes to {}", cold.len(), path.display());
    Ok(())
}

pub fn export_embedding(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ck = load_checkpoint(cfg)?;
    let cold = inputs.split.cold();
    let cat = CatalogEmbedding::from_checkpoint(&ck, &inputs.masked, &inputs.ds.attrs, &cold)?;
    let path = out_file(cfg, "embedding.tsv")?;
    let warm = ck.warm_ids.iter().map(|&w| (w, "warm"));
    let rows = warm.chain(cold.iter().map(|&c| (c, "cold"))).map(|(id, part)| {
        let r = cat.row(id).expect("node in catalog");
        (id, part, cat.embedding.raw.row(r).to_vec())
    });
    write_embedding_rows(&path, cfg, &inputs.ds.ids, rows)?;
    write_config(cfg)?;
    println!("wrote {} embedding rows to {}", inputs.ds.len(), path.display());
    Ok(())
}

pub fn rank(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let k = *ks(cfg)?.iter().max().expect("nonempty");
    let lists = match baseline(cfg)? {
        Some(kind) => rank_baseline(cfg, &inputs, kind, 0, k)?,
        None => rank_checkpoint(cfg, &inputs, &load_checkpoint(cfg)?, k)?,
    };
    let path = out_file(cfg, "ranked.tsv")?;
    write_ranked_tsv(&path, &lists, &inputs.ds.ids, &cfg.hash())?;
    write_config(cfg)?;
    println!("ranked {} queries (top {k}) to {}", lists.len(), path.display());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// Evaluation of one method: the report, the first run's rankings, the run
/// seeds, and the checkpoint fingerprint when a stored model was used.
struct Evaluation {
    method: String,
    report: EvalReport,
    first_run: Vec<RankedList>,
    seeds: Vec<u64>,
    checkpoint: Option<String>,
}

fn run_evaluation(cfg: &RunConfig, inputs: &Inputs) -> Result<Evaluation, CliError> {
    let ks = ks(cfg)?;
    let k = *ks.iter().max().expect("nonempty");
    let base_seed: u64 = cfg.parse("seed")?;
    let mut runs: usize = cfg.parse("runs")?;
    let queries = queries(cfg, inputs)?;
    let mut first_run = None;
    let mut keep = |r: usize, lists: Vec<RankedList>| -> gravrank::Result<Vec<RankedList>> {
        if r == 0 {
            first_run = Some(lists.clone());
        }
        Ok(lists)
    };
    let (method, checkpoint, seeds, report) = match source(cfg)? {
        Source::Baseline(kind) => {
            let fixed = if kind.is_stochastic() { None } else { Some(rank_baseline(cfg, inputs, kind, 0, k)?) };
            let report = evaluate(
                |r| match &fixed {
                    Some(lists) => keep(r, lists.clone()),
                    None => keep(r, rank_baseline(cfg, inputs, kind, r, k).map_err(to_core)?),
                },
                &inputs.masked.ground_truth,
                queries,
                &ks,
                runs,
            )?;
            let seeds = (0..runs as u64).map(|r| base_seed + r).collect();
            (kind.name().to_string(), None, seeds, report)
        }
        Source::Checkpoint(ck) => {
            if runs != 1 {
                eprintln!("note: a stored checkpoint is a single run; ignoring runs={runs}");
                runs = 1;
            }
            let lists = rank_checkpoint(cfg, inputs, &ck, k)?;
            let report = evaluate(|r| keep(r, lists.clone()), &inputs.masked.ground_truth, queries, &ks, runs)?;
            (ck.model.name().to_string(), Some(ck.config_hash.clone()), vec![ck.config.seed], report)
        }
        Source::Train => {
            let model = cfg.model()?;
            let report = evaluate(
                |r| {
                    eprintln!("run {}/{runs}: training {model} with seed {}", r + 1, base_seed + r as u64);
                    let ck = train_model(cfg, inputs, r).map_err(to_core)?;
                    keep(r, rank_checkpoint(cfg, inputs, &ck, k).map_err(to_core)?)
                },
                &inputs.masked.ground_truth,
                queries,
                &ks,
                runs,
            )?;
            let seeds = (0..runs as u64).map(|r| base_seed + r).collect();
            (model.name().to_string(), None, seeds, report)
        }
    };
    Ok(Evaluation {
        method,
        report,
        first_run: first_run.expect("at least one run"),
        seeds,
        checkpoint,
    })
}

fn to_core(e: CliError) -> gravrank::Error {
    gravrank::Error::Invalid(e.to_string())
}

fn report_json(cfg: &RunConfig, ev: &Evaluation) -> serde_json::Value {
    json!({
        "method": ev.method,
        "config_hash": cfg.hash(),
        "checkpoint_fingerprint": ev.checkpoint,
        "seeds": ev.seeds,
        "part": cfg.get("part"),
        "candidates": cfg.get("candidates"),
        "config": cfg.to_json(),
        "report": ev.report,
    })
}

fn write_evaluation(cfg: &RunConfig, inputs: &Inputs, ev: &Evaluation, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    write_json(&dir.join("report.json"), &report_json(cfg, ev))?;
    write_ranked_tsv(&dir.join("ranked.tsv"), &ev.first_run, &inputs.ds.ids, &cfg.hash())?;
    let profile = popularity_bias_profile(&ev.first_run, &inputs.ds.meta, cfg.parse("profile_top")?);
    write_profile_tsv(&dir.join("profile.tsv"), &profile, &inputs.ds.ids, &cfg.hash())?;
    Ok(())
}

fn print_report(method: &str, report: &EvalReport) {
    println!(
        "{method}: {} queries ({} without ground truth), {} run(s)",
        report.queries, report.excluded, report.runs
    );
    println!("K\tRecall\tMAP\tNDCG");
    for c in &report.cells {
        println!(
            "{}\t{:.2} ± {:.2}\t{:.2} ± {:.2}\t{:.2} ± {:.2}",
            c.k, c.recall.mean, c.recall.std, c.map.mean, c.map.std, c.ndcg.mean, c.ndcg.std
        );
    }
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ev = run_evaluation(cfg, &inputs)?;
    write_evaluation(cfg, &inputs, &ev, &cfg.out_dir())?;
    write_config(cfg)?;
    print_report(&ev.method, &ev.report);
    Ok(())
}

pub fn sweep_lambda(cfg: &RunConfig) -> Result<(), CliError> {
    if baseline(cfg)?.is_some() || cfg.is_explicit("checkpoint") {
        return Err(CliError::Input("sweep-lambda trains its own models; drop `baseline` and `checkpoint`".into()));
    }
    let lambdas: Vec<f64> = cfg.list("lambdas")?;
    if lambdas.is_empty() {
        return Err(CliError::Input("`lambdas` is empty".into()));
    }
    let inputs = load_inputs(cfg)?;
    let mut table = format!(
        "# config_hash={}\nlambda\tk\trecall_mean\trecall_std\tmap_mean\tmap_std\tndcg_mean\tndcg_std\tbias_q1\tbias_median\tbias_q3\n",
        cfg.hash()
    );
    for &lambda in &lambdas {
        let mut run_cfg = cfg.clone();
        run_cfg.set("lambda", &lambda.to_string())?;
        let ev = run_evaluation(&run_cfg, &inputs)?;
        write_evaluation(&run_cfg, &inputs, &ev, &cfg.out_dir().join(format!("lambda_{lambda}")))?;
        let profile = popularity_bias_profile(&ev.first_run, &inputs.ds.meta, cfg.parse("profile_top")?);
        let q = profile.quartiles.map_or(["NA".to_string(), "NA".to_string(), "NA".to_string()], |q| {
            q.map(|v| v.to_string())
        });
        for c in &ev.report.cells {
            table.push_str(&format!(
                "{lambda}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                c.k, c.recall.mean, c.recall.std, c.map.mean, c.map.std, c.ndcg.mean, c.ndcg.std, q[0], q[1], q[2]
            ));
        }
        print_report(&format!("{} λ={lambda}", ev.method), &ev.report);
    }
    write_text(&out_file(cfg, "sweep.tsv")?, &table)?;
    write_config(cfg)?;
    Ok(())
}

pub fn analyze_masses(cfg: &RunConfig) -> Result<(), CliError> {
    let inputs = load_inputs(cfg)?;
    let ck = load_checkpoint(cfg)?;
    let masses = match &ck.fixed_mass {
        Some(m) => m.clone(),
        None => {
            ck.warm_embedding()?
                .gravity()
                .ok_or_else(|| CliError::Input(format!("{} has no masses: it is not a gravity model", ck.model)))?
                .masses
        }
    };
    let lengths: PathLength = cfg.parse("path_length")?;
    let measures = node_measures(&inputs.masked.warm_subgraph(), &ck.warm_ids, &inputs.ds.meta, lengths)?;
    let table = mass_correlations(&masses, &measures)?;
    let path = out_file(cfg, "correlations.tsv")?;
    write_text(&path, &format!("# config_hash={}\n{}", cfg.hash(), table.to_tsv()))?;
    write_config(cfg)?;
    print!("{}", table.to_tsv());
    std::io::stdout().flush().ok();
    Ok(())
}
