//! Acceptance suite: one PASS / FAIL / SKIP line per criterion.
//!
//! Criteria 1-7 need no external data. Criteria 8-11 run only when
//! `GRAVRANK_DATA_DIR` points at a directory holding `nodes.tsv`,
//! `edges.tsv` and `features.tsv` for the full music-artist graph; with
//! `GRAVRANK_SUBSAMPLE=<n>` they run on a uniformly sampled induced
//! subgraph and keep only the ordering claims.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::process::ExitCode;

use gravrank::baselines::{BaselineKind, BaselineRanker, SvdDnnConfig};
use gravrank::coldstart::{CandidatePolicy, CatalogEmbedding, RankedList};
use gravrank::eval::{
    betweenness, evaluate, mass_correlations, node_measures, pagerank, popularity_bias_profile, recall_at_k,
    EvalReport, PageRankConfig, PathLength,
};
use gravrank::graph::{load_dataset, make_split, mask_cold, DataSplit, SplitPart};
use gravrank::models::{
    decode_gravity, decode_inner, loss_kl, loss_weighted_bce, reconstruction_loss_and_grad, sigmoid, train,
    Checkpoint, ModelProblem, ReconstructionTargets, TrainData,
};
use gravrank::numerics::{grad_check, seeded_rng, Rng};
use gravrank::synthetic::{planted_dataset, PlantedConfig};
use gravrank::{
    AttributeTable, Dataset, DecoderKind, DenseMatrix, DirectedWeightedGraph, GravityEmbedding, MaskedGraphView,
    ModelKind, NodeId, NodeMeta, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------- 1

fn random_graph(rng: &mut Rng, n: usize, p: f64) -> DirectedWeightedGraph {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random::<f64>() < p {
                edges.push((s, t, rng.random_range(0.05..=1.0)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 1.0));
    }
    DirectedWeightedGraph::from_edges(n, edges).unwrap()
}

fn gradient_correctness() -> Outcome {
    let mut worst: Vec<String> = Vec::new();
    let mut ok = true;
    for model in ModelKind::ALL {
        let mut rng = seeded_rng(1000);
        let g = random_graph(&mut rng, 12, 0.3);
        let x = DenseMatrix::from_fn(12, 4, |_, _| rng.random_range(-1.0..1.0));
        let decoder = model.decoder(5.0, 1e-10);
        // odd widths cannot be split into source and target halves
        let dim = if decoder == DecoderKind::SourceTarget { 4 } else { 3 };
        let out = decoder.output_dim(dim);
        let problem = ModelProblem::new(&g, &x, decoder, model.variational(), None).unwrap();
        let params = problem.init_params(6, out, &mut rng);
        let noise = model
            .variational()
            .then(|| DenseMatrix::from_fn(12, out, |_, _| StandardNormal.sample(&mut rng)));
        let err = grad_check(
            |p| {
                let (l, g) = problem.loss_and_grad(p, noise.as_ref()).unwrap();
                (l.total, g)
            },
            &params,
            usize::MAX,
            1e-5,
            &mut rng,
        );
        ok &= err < 1e-5;
        worst.push(format!("{model}={err:.1e}"));
    }
    verdict(ok, format!("max relative error per model: {}", worst.join(", ")))
}

// ---------------------------------------------------------------- 2

fn decoder_laws() -> Outcome {
    let mut rng = seeded_rng(2000);
    let probes = 1000;
    let mut violations = [0usize; 5];
    let rand_emb = |rng: &mut Rng, n: usize| GravityEmbedding {
        positions: DenseMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0)),
        masses: (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
    };
    for _ in 0..probes {
        // asymmetry witness
        let e = rand_emb(&mut rng, 2);
        let lambda = rng.random_range(0.5..5.0);
        if e.masses[0] != e.masses[1] && decode_gravity(&e, lambda, 1e-10, 0, 1) == decode_gravity(&e, lambda, 1e-10, 1, 0)
        {
            violations[0] += 1;
        }
        // inner-product symmetry
        let z = DenseMatrix::from_fn(2, 5, |_, _| rng.random_range(-2.0..2.0));
        if decode_inner(&z, 0, 1) != decode_inner(&z, 1, 0) {
            violations[1] += 1;
        }
        // λ = 0: the score depends on the target only
        let e = rand_emb(&mut rng, 4);
        let j = rng.random_range(0..4);
        let col: Vec<f64> = (0..4).map(|i| decode_gravity(&e, 0.0, 1e-10, i, j)).collect();
        if col.iter().any(|&v| v != col[0]) {
            violations[2] += 1;
        }
        // mass and distance monotonicity, away from the distance clamp
        let mut e = rand_emb(&mut rng, 2);
        while gravrank::numerics::sq_dist(e.positions.row(0), e.positions.row(1)) < 1e-2 {
            e = rand_emb(&mut rng, 2);
        }
        let lambda = rng.random_range(0.5..5.0);
        let before = decode_gravity(&e, lambda, 1e-10, 0, 1);
        let mut heavier = e.clone();
        heavier.masses[1] += rng.random_range(0.01..1.0);
        if decode_gravity(&heavier, lambda, 1e-10, 0, 1) <= before {
            violations[3] += 1;
        }
        let s = rng.random_range(1.1..3.0);
        let mut farther = e.clone();
        for c in 0..3 {
            let (zi, zj) = (e.positions.get(0, c), e.positions.get(1, c));
            farther.positions.set(0, c, zj + s * (zi - zj));
        }
        if decode_gravity(&farther, lambda, 1e-10, 0, 1) >= before {
            violations[4] += 1;
        }
    }
    verdict(
        violations.iter().all(|&v| v == 0),
        format!(
            "{probes} probes each; violations asymmetry={} inner-symmetry={} column-constancy={} mass-monotone={} distance-monotone={}",
            violations[0], violations[1], violations[2], violations[3], violations[4]
        ),
    )
}

// ---------------------------------------------------------------- 3

fn oracle_recall(ranked: &[NodeId], truth: &[(NodeId, f64)], k: usize) -> f64 {
    let top: HashSet<NodeId> = ranked.iter().take(k).copied().collect();
    let t: HashSet<NodeId> = truth.iter().map(|p| p.0).collect();
    top.intersection(&t).count() as f64 / t.len() as f64
}

fn oracle_map(ranked: &[NodeId], truth: &[(NodeId, f64)], k: usize) -> f64 {
    let rel = |c: NodeId| truth.iter().any(|p| p.0 == c);
    let mut total = 0.0;
    for r in 1..=k.min(ranked.len()) {
        if rel(ranked[r - 1]) {
            let mut hits = 0;
            for q in 1..=r {
                if rel(ranked[q - 1]) {
                    hits += 1;
                }
            }
            total += hits as f64 / r as f64;
        }
    }
    total / k.min(truth.len()) as f64
}

fn oracle_ndcg(ranked: &[NodeId], truth: &[(NodeId, f64)], k: usize) -> f64 {
    let mut dcg = 0.0;
    for r in 1..=k.min(ranked.len()) {
        if let Some(&(_, w)) = truth.iter().find(|p| p.0 == ranked[r - 1]) {
            dcg += (2f64.powf(w) - 1.0) / ((r + 1) as f64).ln() * std::f64::consts::LN_2;
        }
    }
    let mut ws: Vec<f64> = truth.iter().map(|p| p.1).collect();
    ws.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut idcg = 0.0;
    for (r, w) in ws.iter().take(k).enumerate() {
        idcg += (2f64.powf(*w) - 1.0) / ((r + 2) as f64).ln() * std::f64::consts::LN_2;
    }
    dcg / idcg
}

fn metric_oracles() -> Outcome {
    let mut rng = seeded_rng(3000);
    let (mut recall_bad, mut map_err, mut ndcg_err) = (0usize, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let mut pool: Vec<NodeId> = (0..60).collect();
        pool.shuffle(&mut rng);
        let len = rng.random_range(0..=50);
        let ranked = pool[..len].to_vec();
        pool.shuffle(&mut rng);
        let tlen = rng.random_range(1..=20);
        let truth: Vec<(NodeId, f64)> = pool[..tlen].iter().map(|&c| (c, rng.random_range(0.01..=1.0))).collect();
        let k = rng.random_range(1..=60);
        if gravrank::eval::recall_at_k(&ranked, &truth, k).unwrap() != oracle_recall(&ranked, &truth, k) {
            recall_bad += 1;
        }
        map_err = map_err.max((gravrank::eval::map_at_k(&ranked, &truth, k).unwrap() - oracle_map(&ranked, &truth, k)).abs());
        ndcg_err =
            ndcg_err.max((gravrank::eval::ndcg_at_k(&ranked, &truth, k).unwrap() - oracle_ndcg(&ranked, &truth, k)).abs());
    }
    verdict(
        recall_bad == 0 && map_err <= 1e-12 && ndcg_err <= 1e-12,
        format!("1000 instances; recall mismatches={recall_bad}, max |MAP diff|={map_err:.1e}, max |NDCG diff|={ndcg_err:.1e}"),
    )
}

// ---------------------------------------------------------------- 4

fn naive_bce(p: &DenseMatrix, a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let n2 = (n * n) as f64;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a.get(i, j);
        }
    }
    let w = (n2 - s) / s;
    let norm = n2 / (2.0 * (n2 - s));
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (pij, aij) = (p.get(i, j), a.get(i, j));
            total += -(w * aij * pij.ln() + (1.0 - aij) * (1.0 - pij).ln());
        }
    }
    norm / n2 * total
}

fn naive_kl(mu: &DenseMatrix, ls: &DenseMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..mu.rows() {
        for j in 0..mu.cols() {
            let (m, l) = (mu.get(i, j), ls.get(i, j));
            s += 1.0 + 2.0 * l - m * m - (2.0 * l).exp();
        }
    }
    -s / (2.0 * mu.rows() as f64)
}

fn loss_oracle() -> Outcome {
    let mut rng = seeded_rng(4000);
    let (mut bce_err, mut fused_err, mut kl_err) = (0.0f64, 0.0f64, 0.0f64);
    for inst in 0..50 {
        let n = rng.random_range(2..10);
        let g = random_graph(&mut rng, n, 0.4);
        let a = g.to_sparse().to_dense();
        let p = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(0.01..0.99));
        bce_err = bce_err.max((loss_weighted_bce(&p, &a).unwrap() - naive_bce(&p, &a)).abs());

        // the training loss, decoded pair by pair
        let decoder = match inst % 3 {
            0 => DecoderKind::gravity(rng.random_range(0.1..0.5)),
            1 => DecoderKind::InnerProduct,
            _ => DecoderKind::SourceTarget,
        };
        let z = DenseMatrix::from_fn(n, 4, |_, _| rng.random_range(-1.0..1.0));
        let probs = DenseMatrix::from_fn(n, n, |i, j| sigmoid(decoder.logit(z.row(i), z.row(j))));
        let targets = ReconstructionTargets::new(g.to_sparse()).unwrap();
        let (fused, _) = reconstruction_loss_and_grad(&z, &targets, &decoder).unwrap();
        // a different summation order over n² terms: compare relatively
        let naive = naive_bce(&probs, &a);
        fused_err = fused_err.max((fused - naive).abs() / naive.abs().max(1.0));

        let mu = DenseMatrix::from_fn(n, 3, |_, _| rng.random_range(-2.0..2.0));
        let ls = DenseMatrix::from_fn(n, 3, |_, _| rng.random_range(-2.0..1.0));
        kl_err = kl_err.max((loss_kl(&mu, &ls).unwrap() - naive_kl(&mu, &ls)).abs());
    }
    let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let half = DenseMatrix::from_fn(2, 2, |_, _| 0.5);
    let hand = loss_weighted_bce(&half, &a).unwrap();
    let hand_ok = (hand - 2f64.ln()).abs() < 1e-15;
    verdict(
        bce_err <= 1e-12 && fused_err <= 1e-12 && kl_err <= 1e-12 && hand_ok,
        format!(
            "50 instances; max diff BCE={bce_err:.1e}, KL={kl_err:.1e}, training loss (relative)={fused_err:.1e}; hand case {hand} vs ln 2"
        ),
    )
}

// ---------------------------------------------------------------- 5

fn train_recall(ds: &Dataset, masked: &MaskedGraphView, config: &TrainConfig) -> f64 {
    let data = TrainData { masked, attrs: &ds.attrs, meta: None };
    let out = train(&data, DecoderKind::gravity(config.lambda), config).unwrap();
    let width = out.embedding.raw.cols();
    let cat = CatalogEmbedding::new(out.embedding, &masked.warm_ids, DenseMatrix::zeros(0, width), &[]).unwrap();
    let ids = &masked.warm_ids;
    let mut total = 0.0;
    for &q in ids {
        let list = cat.rank_top_k(q, ids, 20).unwrap();
        total += recall_at_k(&list.ids(), ds.graph.out_edges(q), 20).unwrap();
    }
    total / ids.len() as f64
}

fn overfit_sanity() -> Outcome {
    let ds = planted_dataset(&PlantedConfig { nodes: 100, ..PlantedConfig::default() }).unwrap();
    let split = DataSplit::new(100, (0..100).collect(), vec![], vec![]).unwrap();
    let masked = mask_cold(&ds.graph, &split).unwrap();
    let config = TrainConfig { epochs: 1000, ..TrainConfig::default() };
    let r = train_recall(&ds, &masked, &config);
    verdict(r >= 0.9, format!("train Recall@20 = {r:.4} after 1000 epochs (threshold 0.9)"))
}

// ---------------------------------------------------------------- 6

struct PipelineRun {
    checkpoint: Vec<u8>,
    lists: Vec<RankedList>,
    report: String,
    baseline_lists: Vec<RankedList>,
}

fn pipeline(seed: u64) -> PipelineRun {
    let ds = planted_dataset(&PlantedConfig { nodes: 80, ..PlantedConfig::default() }).unwrap();
    let split = make_split(80, [0.8, 0.1, 0.1], seed).unwrap();
    let masked = mask_cold(&ds.graph, &split).unwrap();
    let config = TrainConfig { epochs: 40, variational: true, seed, ..TrainConfig::default() };
    let model = ModelKind::GravityVae;
    let decoder = model.decoder(config.lambda, config.eps_dist);
    let data = TrainData { masked: &masked, attrs: &ds.attrs, meta: Some(&ds.meta) };
    let out = train(&data, decoder, &config).unwrap();
    let ck = Checkpoint::from_training(model, config, "h".into(), out);
    let cat = CatalogEmbedding::from_checkpoint(&ck, &masked, &ds.attrs, &split.cold()).unwrap();
    let lists = cat.rank_queries(&split.test, CandidatePolicy::All, 20).unwrap();
    let report = evaluate(|_| Ok(lists.clone()), &masked.ground_truth, &split.test, &[5, 20], 2).unwrap();
    let svd = SvdDnnConfig { dim: 8, epochs: 30, seed, ..SvdDnnConfig::default() };
    let b = BaselineRanker::build(BaselineKind::SvdDnn, &masked, &ds.attrs, &ds.meta, &svd).unwrap();
    PipelineRun {
        checkpoint: ck.to_bytes().unwrap(),
        lists,
        report: serde_json::to_string(&report).unwrap(),
        baseline_lists: b.rank_queries(&ds.attrs, &ds.meta, &split.test, 20).unwrap(),
    }
}

fn determinism() -> Outcome {
    let (a, b) = (pipeline(3), pipeline(3));
    let same = a.checkpoint == b.checkpoint
        && a.lists == b.lists
        && a.report == b.report
        && a.baseline_lists == b.baseline_lists;
    let c = pipeline(4);
    let differs = c.checkpoint != a.checkpoint;
    verdict(
        same && differs,
        format!(
            "gravity VAE + SVD baseline twice with seed 3: checkpoint bytes {}, rankings {}, reports {}; seed 4 differs: {differs}",
            if a.checkpoint == b.checkpoint { "identical" } else { "DIFFER" },
            if a.lists == b.lists && a.baseline_lists == b.baseline_lists { "identical" } else { "DIFFER" },
            if a.report == b.report { "identical" } else { "DIFFER" },
        ),
    )
}

// ---------------------------------------------------------------- 7

fn pagerank_oracle(g: &DirectedWeightedGraph, alpha: f64) -> Vec<f64> {
    let n = g.node_count();
    let mut p = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let out: f64 = g.out_edges(i).iter().map(|e| e.1).sum();
        if out > 0.0 {
            for &(j, w) in g.out_edges(i) {
                p[(i, j)] = w / out;
            }
        } else {
            for j in 0..n {
                p[(i, j)] = 1.0 / n as f64;
            }
        }
    }
    let m = nalgebra::DMatrix::<f64>::identity(n, n) - p.transpose() * alpha;
    let rhs = nalgebra::DVector::<f64>::from_element(n, (1.0 - alpha) / n as f64);
    m.lu().solve(&rhs).unwrap().iter().copied().collect()
}

/// Betweenness from every simple path: for each ordered pair, the share
/// of shortest paths through each intermediate node.
fn betweenness_oracle(g: &DirectedWeightedGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut out = vec![0.0; n];
    fn walk(g: &DirectedWeightedGraph, path: &mut Vec<usize>, len: f64, t: usize, found: &mut Vec<(f64, Vec<usize>)>) {
        let v = *path.last().unwrap();
        if v == t {
            found.push((len, path.clone()));
            return;
        }
        for &(w, weight) in g.out_edges(v) {
            if weight > 0.0 && !path.contains(&w) {
                path.push(w);
                walk(g, path, len + 1.0 / weight, t, found);
                path.pop();
            }
        }
    }
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut found = Vec::new();
            walk(g, &mut vec![s], 0.0, t, &mut found);
            let Some(best) = found.iter().map(|p| p.0).min_by(|a, b| a.partial_cmp(b).unwrap()) else {
                continue;
            };
            let shortest: Vec<&Vec<usize>> = found.iter().filter(|p| p.0 == best).map(|p| &p.1).collect();
            for v in 0..n {
                if v != s && v != t {
                    let through = shortest.iter().filter(|p| p.contains(&v)).count();
                    out[v] += through as f64 / shortest.len() as f64;
                }
            }
        }
    }
    out
}

fn centrality_oracles() -> Outcome {
    let mut rng = seeded_rng(7000);
    let cfg = PageRankConfig::default();
    let mut pr_err = 0.0f64;
    for _ in 0..20 {
        let g = random_graph(&mut rng, 10, 0.25);
        let got = pagerank(&g, cfg).unwrap();
        let want = pagerank_oracle(&g, cfg.damping);
        for (a, b) in got.iter().zip(&want) {
            pr_err = pr_err.max((a - b).abs());
        }
    }
    let mut bc_err = 0.0f64;
    for _ in 0..20 {
        // weights 1, 1/2, 1/4 give exactly representable path lengths
        let mut edges = Vec::new();
        for s in 0..8 {
            for t in 0..8 {
                if s != t && rng.random::<f64>() < 0.3 {
                    edges.push((s, t, [1.0, 0.5, 0.25][rng.random_range(0..3)]));
                }
            }
        }
        let g = DirectedWeightedGraph::from_edges(8, edges).unwrap();
        let got = betweenness(&g, PathLength::InverseWeight);
        let want = betweenness_oracle(&g);
        for (a, b) in got.iter().zip(&want) {
            bc_err = bc_err.max((a - b).abs());
        }
    }
    verdict(
        pr_err < 10.0 * cfg.tol && bc_err <= 1e-12,
        format!(
            "PageRank max |diff| vs dense solve = {pr_err:.1e} (bound {:.0e}) on 20 graphs; betweenness max |diff| vs path enumeration = {bc_err:.1e} on 20 graphs",
            10.0 * cfg.tol
        ),
    )
}

// ---------------------------------------------------------------- 8-11

struct Reproduction {
    ds: Dataset,
    split: DataSplit,
    masked: MaskedGraphView,
    full: bool,
}

fn subsample(ds: &Dataset, size: usize, seed: u64) -> Dataset {
    let mut nodes: Vec<NodeId> = (0..ds.len()).collect();
    nodes.shuffle(&mut seeded_rng(seed));
    nodes.truncate(size);
    nodes.sort_unstable();
    let meta = NodeMeta {
        popularity_rank: nodes.iter().map(|&i| ds.meta.popularity_rank[i]).collect(),
        country: nodes.iter().map(|&i| ds.meta.country[i].clone()).collect(),
    };
    // re-densify ranks within the sample
    let mut ranked: Vec<(u32, usize)> =
        meta.popularity_rank.iter().enumerate().filter_map(|(k, r)| r.map(|r| (r, k))).collect();
    ranked.sort_unstable();
    let mut meta = meta;
    for (pos, (_, k)) in ranked.into_iter().enumerate() {
        meta.popularity_rank[k] = Some(pos as u32 + 1);
    }
    Dataset::new(
        nodes.iter().map(|&i| ds.ids[i].clone()).collect(),
        ds.graph.induced_subgraph(&nodes),
        AttributeTable::new(ds.attrs.select(&nodes)).unwrap(),
        meta,
    )
    .unwrap()
}

fn reproduction_data() -> Option<Result<Reproduction, String>> {
    let dir = PathBuf::from(std::env::var_os("GRAVRANK_DATA_DIR")?);
    let load = || -> Result<Reproduction, String> {
        let mut ds = load_dataset(&dir.join("nodes.tsv"), &dir.join("edges.tsv"), &dir.join("features.tsv"))
            .map_err(|e| e.to_string())?;
        let mut full = true;
        if let Some(size) = std::env::var("GRAVRANK_SUBSAMPLE").ok().and_then(|s| s.parse().ok()) {
            ds = subsample(&ds, size, 0);
            full = false;
        }
        let split = make_split(ds.len(), [0.8, 0.1, 0.1], 0).map_err(|e| e.to_string())?;
        let masked = mask_cold(&ds.graph, &split).map_err(|e| e.to_string())?;
        Ok(Reproduction { ds, split, masked, full })
    };
    Some(load())
}

const RUNS: usize = 5;

fn model_report(r: &Reproduction, model: ModelKind, lambda: f64) -> (EvalReport, Vec<Checkpoint>, Vec<Vec<RankedList>>) {
    let mut cks = Vec::new();
    let mut all_lists = Vec::new();
    let report = evaluate(
        |run| {
            let config = TrainConfig {
                lambda,
                variational: model.variational(),
                seed: run as u64,
                ..TrainConfig::default()
            };
            let decoder = model.decoder(lambda, config.eps_dist);
            let data = TrainData { masked: &r.masked, attrs: &r.ds.attrs, meta: Some(&r.ds.meta) };
            let out = train(&data, decoder, &config)?;
            let ck = Checkpoint::from_training(model, config, String::new(), out);
            let cat = CatalogEmbedding::from_checkpoint(&ck, &r.masked, &r.ds.attrs, &r.split.cold())?;
            let lists = cat.rank_queries(r.split.part(SplitPart::Test), CandidatePolicy::All, 200)?;
            cks.push(ck);
            all_lists.push(lists.clone());
            Ok(lists)
        },
        &r.masked.ground_truth,
        &r.split.test,
        &[20, 100, 200],
        RUNS,
    )
    .unwrap();
    (report, cks, all_lists)
}

fn baseline_report(r: &Reproduction, kind: BaselineKind) -> EvalReport {
    let ranker = BaselineRanker::build(kind, &r.masked, &r.ds.attrs, &r.ds.meta, &SvdDnnConfig::default()).unwrap();
    let lists = ranker.rank_queries(&r.ds.attrs, &r.ds.meta, &r.split.test, 200).unwrap();
    evaluate(|_| Ok(lists.clone()), &r.masked.ground_truth, &r.split.test, &[20, 100, 200], 1).unwrap()
}

fn reproduction(outcomes: &mut Vec<(usize, &'static str, Outcome)>) {
    let names = [
        (8, "Full-data accuracy of the gravity AE"),
        (9, "Method ordering"),
        (10, "Mass correlations"),
        (11, "Lambda sweep"),
    ];
    let r = match reproduction_data() {
        None => {
            for (id, name) in names {
                outcomes.push((
                    id,
                    name,
                    Outcome::Skip("set GRAVRANK_DATA_DIR to the converted music-artist graph to run".into()),
                ));
            }
            return;
        }
        Some(Err(e)) => {
            for (id, name) in names {
                outcomes.push((id, name, Outcome::Fail(format!("cannot load data: {e}"))));
            }
            return;
        }
        Some(Ok(r)) => r,
    };
    let ndcg200 = |rep: &EvalReport| rep.cell(200).unwrap().ndcg.mean;

    let (gravity, gravity_cks, _) = model_report(&r, ModelKind::GravityAe, 5.0);
    if r.full {
        let rec = gravity.cell(20).unwrap().recall.mean;
        let nd = ndcg200(&gravity);
        outcomes.push((
            8,
            names[0].1,
            verdict(
                (rec - 18.33).abs() <= 2.0 && (nd - 41.42).abs() <= 2.0,
                format!("Recall@20 = {rec:.2} (target 18.33 ± 2), NDCG@200 = {nd:.2} (target 41.42 ± 2)"),
            ),
        ));
    } else {
        outcomes.push((8, names[0].1, Outcome::Skip("absolute values are not checked on a subsample".into())));
    }

    let mut nd = BTreeMap::new();
    nd.insert("gravity_ae", ndcg200(&gravity));
    for m in [
        ModelKind::GravityVae,
        ModelKind::SourceTargetAe,
        ModelKind::SourceTargetVae,
        ModelKind::StandardAe,
        ModelKind::StandardVae,
    ] {
        nd.insert(m.name(), ndcg200(&model_report(&r, m, 5.0).0));
    }
    let pop = baseline_report(&r, BaselineKind::Popularity).cell(100).unwrap().recall.mean;
    let pop_c = baseline_report(&r, BaselineKind::PopularityByCountry).cell(100).unwrap().recall.mean;
    let grav_min = nd["gravity_ae"].min(nd["gravity_vae"]);
    let st_min = nd["source_target_ae"].min(nd["source_target_vae"]);
    let st_max = nd["source_target_ae"].max(nd["source_target_vae"]);
    let std_max = nd["standard_ae"].max(nd["standard_vae"]);
    outcomes.push((
        9,
        names[1].1,
        verdict(
            grav_min > st_max && st_min > std_max && pop_c > pop,
            format!("NDCG@200 {nd:?}; Recall@100 popularity-by-country {pop_c:.2} vs popularity {pop:.2}"),
        ),
    ));

    if r.full {
        let ck = &gravity_cks[0];
        let masses = ck.warm_embedding().unwrap().gravity().unwrap().masses;
        let measures =
            node_measures(&r.masked.warm_subgraph(), &r.masked.warm_ids, &r.ds.meta, PathLength::InverseWeight).unwrap();
        let table = mass_correlations(&masses, &measures).unwrap();
        let all_positive = table
            .rows
            .iter()
            .all(|row| row.pearson.is_some_and(|p| p > 0.0) && row.spearman.is_some_and(|s| s > 0.0));
        let pop_pearson = table.row("popularity").and_then(|row| row.pearson).unwrap_or(f64::NAN);
        outcomes.push((
            10,
            names[2].1,
            verdict(
                all_positive && (pop_pearson - 0.208).abs() <= 0.10,
                format!("all positive: {all_positive}; popularity Pearson = {pop_pearson:.3} (target 0.208 ± 0.10)"),
            ),
        ));
    } else {
        outcomes.push((10, names[2].1, Outcome::Skip("absolute values are not checked on a subsample".into())));
    }

    let (l1, _, lists1) = model_report(&r, ModelKind::GravityAe, 1.0);
    let (l20, _, lists20) = model_report(&r, ModelKind::GravityAe, 20.0);
    let (n1, n5, n20) = (ndcg200(&l1), ndcg200(&gravity), ndcg200(&l20));
    let median = |lists: &[RankedList]| popularity_bias_profile(lists, &r.ds.meta, 20).quartiles.map(|q| q[1]);
    let (m1, m20) = (median(&lists1[0]), median(&lists20[0]));
    let bias_ok = matches!((m1, m20), (Some(a), Some(b)) if a < b);
    outcomes.push((
        11,
        names[3].1,
        verdict(
            n5 > n20 && n20 > n1 && bias_ok,
            format!("NDCG@200 λ=1: {n1:.2}, λ=5: {n5:.2}, λ=20: {n20:.2}; bias median λ=1 {m1:?} vs λ=20 {m20:?}"),
        ),
    ));
}

fn main() -> ExitCode {
    let started = std::time::Instant::now();
    let mut outcomes: Vec<(usize, &'static str, Outcome)> = vec![
        (1, "Gradient correctness", gradient_correctness()),
        (2, "Decoder laws", decoder_laws()),
        (3, "Metric oracles", metric_oracles()),
        (4, "Loss oracle", loss_oracle()),
        (5, "Overfit sanity", overfit_sanity()),
        (6, "Determinism", determinism()),
        (7, "Centrality oracles", centrality_oracles()),
    ];
    reproduction(&mut outcomes);

    let mut failed = 0;
    for (id, name, outcome) in &outcomes {
        match outcome {
            Outcome::Pass(d) => println!("PASS criterion {id} ({name}): {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {d}");
            }
            Outcome::Skip(d) => println!("SKIP criterion {id} ({name}): {d}"),
        }
    }
    println!("acceptance finished in {:.1}s", started.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
