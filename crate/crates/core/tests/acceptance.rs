//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sagefin::cli::{RunConfig, EXPLANATIONS_DIR, METRICS_FILE, METRICS_JSON_FILE};
use sagefin::conv::Dims;
use sagefin::data::{generate_synthetic, GroundTruth, SyntheticConfig};
use sagefin::explain::{candidate_edges, explain, score_edges, select_subgraph, ExplainConfig};
use sagefin::graph::{BipartiteGraph, Label, NodeRef, Partition};
use sagefin::model::{sample_negative_edges, LossInputs, SageFinConfig, SageFinModel};
use sagefin::train::{baseline_report, fit, train, EvalReport, LogisticConfig, Metrics, Split, SplitMasks, TrainConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradients() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_name = "";
    for seed in 0..20 {
        let mut errs = common::op_gradient_errors(seed);
        errs.push(("composite", common::composite_gradient_error(seed)));
        for (name, err) in errs {
            if err > worst {
                worst = err;
                worst_name = name;
            }
        }
    }
    check(
        worst < common::GRAD_TOL,
        format!("20 seeds, max rel err {worst:.2e} ({worst_name}), tolerance {:.0e}", common::GRAD_TOL),
    )
}

fn explainer_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut edges_checked = 0;
    let mut graphs = 0;
    let mut seed = 0;
    while graphs < 10 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = common::random_graph(&mut rng, 16, Dims { u: 3, v: 2, e: 2 });
        if graph.n_e() > 30 {
            continue;
        }
        graphs += 1;
        let config = SageFinConfig {
            hidden_dim: 8,
            latent_dim: 6,
            seed,
            ..SageFinConfig::default()
        };
        let model = common::quick_train(&graph, config, 15);
        let explain_config = ExplainConfig::default();
        for target in (0..graph.n_u()).map(NodeRef::u).chain((0..graph.n_v()).map(NodeRef::v)) {
            let scores = score_edges(&model, &graph, target, &explain_config).map_err(|e| e.to_string())?;
            let mut by_edge = vec![0.0; graph.n_e()];
            for s in &scores {
                by_edge[s.edge] = s.score;
            }
            for (e, &score) in by_edge.iter().enumerate() {
                let brute = common::brute_force_score(&model, &graph, target, e, &explain_config);
                worst = worst.max((score - brute).abs());
                edges_checked += 1;
            }
            let selection = select_subgraph(&scores, &graph, target, explain_config.top_k).map_err(|e| e.to_string())?;
            let edges: Vec<usize> = selection.edges.iter().map(|e| e.edge).collect();
            if !common::connected_with_target(&graph, target, &edges) || selection.nodes[0] != target {
                return Err(format!("graph {seed}, {target}: selection is not connected to the target"));
            }
        }
    }
    check(
        worst <= 1e-10,
        format!("10 graphs, {edges_checked} (target, edge) pairs, max |score - brute force| {worst:.2e}; selections connected"),
    )
}

fn locality() -> Outcome {
    let mut outside = 0;
    for seed in 0..5u64 {
        let (raw, _) = generate_synthetic(&SyntheticConfig {
            n_u: 150,
            n_v: 150,
            communities: 20,
            clusters: 2,
            seed,
            ..SyntheticConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let model_config = SageFinConfig {
            seed,
            ..SageFinConfig::default()
        };
        let (graph, _, outcome) =
            fit(&raw, &model_config, &TrainConfig { epochs: 30, ..TrainConfig::default() }).map_err(|e| e.to_string())?;
        let model = outcome.model;
        if model.config.layers != 4 {
            return Err("model is not P=4".into());
        }
        let config = ExplainConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..3 {
            let target = if rng.gen() {
                NodeRef::u(rng.gen_range(0..graph.n_u()))
            } else {
                NodeRef::v(rng.gen_range(0..graph.n_v()))
            };
            let candidates = candidate_edges(&graph, target, config.hops).map_err(|e| e.to_string())?;
            let scores = score_edges(&model, &graph, target, &config).map_err(|e| e.to_string())?;
            if scores.iter().any(|s| candidates.binary_search(&s.edge).is_err()) {
                return Err(format!("graph {seed}, {target}: scored an edge outside the 4-hop field"));
            }
            for e in (0..graph.n_e()).filter(|e| candidates.binary_search(e).is_err()) {
                let c = common::brute_force_score(&model, &graph, target, e, &config);
                if c != 0.0 {
                    return Err(format!("graph {seed}, {target}: edge {e} outside the field has C = {c:e}"));
                }
                outside += 1;
            }
        }
    }
    check(outside > 0, format!("5 graphs x 3 targets, {outside} outside edges all with C = 0 exactly"))
}

struct Trained {
    graph: BipartiteGraph,
    truth: GroundTruth,
    model: SageFinModel,
    test: EvalReport,
}

fn train_default(seed: u64) -> Result<Trained, String> {
    let (raw, truth) = generate_synthetic(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let model_config = SageFinConfig {
        seed,
        ..SageFinConfig::default()
    };
    let (graph, _, outcome) = fit(&raw, &model_config, &TrainConfig::default()).map_err(|e| e.to_string())?;
    Ok(Trained {
        graph,
        truth,
        model: outcome.model,
        test: outcome.report.test.expect("fit scores the test split"),
    })
}

fn recovery(runs: &[Trained]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (seed, run) in runs.iter().enumerate() {
        let t = &run.test;
        ok &= t.u.f1 >= 0.9 && t.v.f1 >= 0.9 && t.edges.f1 >= 0.9;
        parts.push(format!("seed {seed}: tx {:.3} wallet {:.3} edge {:.3}", t.u.f1, t.v.f1, t.edges.f1));
    }
    check(ok, parts.join("; "))
}

fn fidelity(runs: &[Trained]) -> Outcome {
    let config = ExplainConfig::default();
    let mut gaps = Vec::new();
    for run in runs {
        let u = run.truth.fraud_nodes(Partition::U);
        let v = run.truth.fraud_nodes(Partition::V);
        let targets = (0..4).map(|i| NodeRef::u(u[i * 7])).chain((0..3).map(|i| NodeRef::v(v[i * 7 + 3])));
        for target in targets {
            let ex = explain(&run.model, &run.graph, target, &config).map_err(|e| e.to_string())?;
            gaps.push(ex.fidelity_gap);
        }
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    let median = if n % 2 == 1 {
        gaps[n / 2]
    } else {
        0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
    };
    check(
        n >= 20 && median < 0.15,
        format!("{n} planted targets, K=10, median gap {median:.4}, max {:.4}", gaps[n - 1]),
    )
}

fn semi_supervision() -> Outcome {
    let (raw, _) = generate_synthetic(&SyntheticConfig {
        n_u: 120,
        n_v: 120,
        communities: 15,
        clusters: 2,
        known_fraction: 0.5,
        ..SyntheticConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let (graph, splits) = sagefin::train::prepare(&raw, Default::default(), 0).map_err(|e| e.to_string())?;
    let flipped = flip_unknown(&graph);
    let flips = (0..graph.n_u()).filter(|&i| graph.labels(Partition::U)[i] != flipped.labels(Partition::U)[i]).count()
        + (0..graph.n_v()).filter(|&i| graph.labels(Partition::V)[i] != flipped.labels(Partition::V)[i]).count();

    let config = SageFinConfig::default();
    let model = SageFinModel::for_graph(config.clone(), &graph).map_err(|e| e.to_string())?;
    let train_edges = splits.edge_indices(Split::Train);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let negatives = sample_negative_edges(&graph, 5, &mut rng).map_err(|e| e.to_string())?;
    let inputs = loss_inputs(&splits, &train_edges, &negatives);
    let (a, ga, _) = model.loss_and_gradients(&graph.view(), &inputs).map_err(|e| e.to_string())?;
    let (b, gb, _) = model.loss_and_gradients(&flipped.view(), &inputs).map_err(|e| e.to_string())?;
    if a.total.to_bits() != b.total.to_bits() || ga != gb {
        return Err(format!("loss {} vs {}", a.total, b.total));
    }

    let tc = TrainConfig {
        epochs: 25,
        ..TrainConfig::default()
    };
    let ta = train(&graph, &splits, &config, &tc).map_err(|e| e.to_string())?;
    let tb = train(&flipped, &splits, &config, &tc).map_err(|e| e.to_string())?;
    let same = ta.report.epochs.len() == tb.report.epochs.len()
        && ta.report.epochs.iter().zip(&tb.report.epochs).all(|(x, y)| x.loss.total.to_bits() == y.loss.total.to_bits())
        && ta.model == tb.model;
    check(
        same && flips > 0,
        format!("{flips} unknown labels flipped; loss delta bitwise 0; 25-epoch trajectories identical: {same}"),
    )
}

fn loss_inputs<'a>(splits: &'a SplitMasks, positives: &'a [usize], negatives: &'a [(usize, usize)]) -> LossInputs<'a> {
    LossInputs {
        u_mask: splits.mask(Partition::U, Split::Train),
        v_mask: splits.mask(Partition::V, Split::Train),
        positive_edges: positives,
        negatives,
    }
}

fn flip_unknown(graph: &BipartiteGraph) -> BipartiteGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut flip = |labels: &[Label]| -> Vec<Label> {
        labels
            .iter()
            .map(|&l| match l {
                Label::Unknown if rng.gen() => Label::Fraud,
                Label::Unknown => Label::NonFraud,
                known => known,
            })
            .collect()
    };
    let u = flip(graph.labels(Partition::U));
    let v = flip(graph.labels(Partition::V));
    graph.with_labels(u, v).expect("same shapes")
}

fn determinism() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = RunConfig {
        seed: 3,
        ..RunConfig::default()
    };
    config.train.epochs = 40;
    let snapshot = |dir: &std::path::Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        let run = dir.join("run");
        let mut files = vec![
            (METRICS_FILE.to_string(), std::fs::read(run.join(METRICS_FILE)).map_err(|e| e.to_string())?),
            (METRICS_JSON_FILE.to_string(), std::fs::read(run.join(METRICS_JSON_FILE)).map_err(|e| e.to_string())?),
            ("manifest.json".to_string(), std::fs::read(run.join("manifest.json")).map_err(|e| e.to_string())?),
        ];
        let mut names: Vec<_> = std::fs::read_dir(run.join(EXPLANATIONS_DIR))
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        names.sort();
        for p in names {
            files.push((p.display().to_string(), std::fs::read(&p).map_err(|e| e.to_string())?));
        }
        Ok(files)
    };
    common::run_pipeline(work.path(), config.clone());
    let first = snapshot(work.path())?;
    std::fs::remove_dir_all(work.path().join("run")).map_err(|e| e.to_string())?;
    std::fs::remove_dir_all(work.path().join("data")).map_err(|e| e.to_string())?;
    common::run_pipeline(work.path(), config);
    let second = snapshot(work.path())?;
    let explanations = first.len() - 3;
    check(
        first == second && explanations > 0,
        format!("metrics table, metrics JSON, manifest and {explanations} explanation JSON files byte-identical"),
    )
}

fn pooled(reports: &[EvalReport]) -> Metrics {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for r in reports {
        for m in [&r.u, &r.v] {
            tp += m.tp;
            fp += m.fp;
            fn_ += m.fn_;
            tn += m.tn;
        }
    }
    Metrics::from_counts(tp, fp, fn_, tn)
}

fn baseline_ordering() -> Outcome {
    let mut ours = Vec::new();
    let mut theirs = Vec::new();
    for seed in 0..5u64 {
        let (raw, _) = generate_synthetic(&SyntheticConfig {
            shift: 0.5,
            seed,
            ..SyntheticConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let model_config = SageFinConfig {
            seed,
            ..SageFinConfig::default()
        };
        let (graph, splits, outcome) = fit(&raw, &model_config, &TrainConfig::default()).map_err(|e| e.to_string())?;
        ours.push(outcome.report.test.expect("fit scores the test split"));
        theirs.push(baseline_report(&graph, &splits, Split::Test, &LogisticConfig::default()).map_err(|e| e.to_string())?);
    }
    let (a, b) = (pooled(&ours), pooled(&theirs));
    check(
        a.f1 - b.f1 >= 0.1,
        format!(
            "shift 0.5, 5 seeds, pooled node F1 sagefin {:.3} vs logistic {:.3} (gap {:.3})",
            a.f1,
            b.f1,
            a.f1 - b.f1
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {n} {name}: {detail} [{secs:.1}s]");
            }
        }
    };

    let t = Instant::now();
    report(1, "gradient correctness", t, gradients());
    let t = Instant::now();
    report(2, "explainer oracle equivalence", t, explainer_oracle());
    let t = Instant::now();
    report(3, "locality", t, locality());

    let t = Instant::now();
    let runs: Result<Vec<Trained>, String> = (0..3).map(train_default).collect();
    match runs {
        Ok(runs) => {
            report(4, "planted-anomaly recovery", t, recovery(&runs));
            let t = Instant::now();
            report(5, "fidelity", t, fidelity(&runs));
        }
        Err(e) => {
            report(4, "planted-anomaly recovery", t, Err(e.clone()));
            report(5, "fidelity", t, Err(e));
        }
    }

    let t = Instant::now();
    report(6, "semi-supervision invariant", t, semi_supervision());
    let t = Instant::now();
    report(7, "determinism", t, determinism());
    let t = Instant::now();
    report(8, "baseline ordering", t, baseline_ordering());

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
