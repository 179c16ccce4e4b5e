//! Oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sagefin::conv::{bean_conv_backward, bean_conv_forward, Aggregator, BeanConvParams, Dims, LayerState};
use sagefin::explain::ExplainConfig;
use sagefin::graph::{BipartiteGraph, Label, NodeRef, Partition};
use sagefin::model::{LossInputs, Mlp, SageFinConfig, SageFinModel};
use sagefin::tensor::{
    batchnorm_backward, batchnorm_forward, bce_logit, bce_with_logits, bce_with_logits_backward, linear_backward,
    linear_forward, mse, mse_backward, relu, relu_backward, sigmoid, BatchNormParams, Dense, LinearParams, Mode, Param,
};

pub const FD_STEP: f64 = 1e-6;
pub const GRAD_TOL: f64 = 1e-4;
/// Denominator floor of the relative error, so that gradients that are zero
/// up to rounding are compared absolutely.
pub const REL_FLOOR: f64 = 1e-3;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Moves every row-vector parameter (biases, scales, shifts) off its
/// initial value so no pre-activation sits exactly on a ReLU kink.
pub fn jitter_vectors(params: Vec<&mut Param>, rng: &mut ChaCha8Rng) {
    for p in params {
        if p.value.rows() == 1 {
            for x in p.value.data_mut() {
                *x += rng.gen_range(-0.5..0.5);
            }
        }
    }
}

pub fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Dense {
    Dense::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Max relative error between `grads` and central differences of `loss`
/// over every entry of every parameter exposed by `params`.
pub fn check_params<M>(
    model: &mut M,
    params: impl Fn(&mut M) -> Vec<&mut Param>,
    grads: &[Dense],
    loss: impl Fn(&M) -> f64,
) -> f64 {
    let count = params(model).len();
    assert_eq!(count, grads.len(), "parameter/gradient count");
    let mut worst: f64 = 0.0;
    for p in 0..count {
        let len = params(model)[p].value.data().len();
        assert_eq!(len, grads[p].data().len());
        for i in 0..len {
            let orig = params(model)[p].value.data()[i];
            params(model)[p].value.data_mut()[i] = orig + FD_STEP;
            let plus = loss(model);
            params(model)[p].value.data_mut()[i] = orig - FD_STEP;
            let minus = loss(model);
            params(model)[p].value.data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            if std::env::var("FD_DEBUG").is_ok() && rel_err(grads[p].data()[i], numeric) > 1e-5 {
                eprintln!("param {p}[{i}]: analytic {:e} numeric {:e}", grads[p].data()[i], numeric);
            }
            worst = worst.max(rel_err(grads[p].data()[i], numeric));
        }
    }
    worst
}

/// Same as [`check_params`] for an input matrix.
pub fn check_input(x: &Dense, grad: &Dense, loss: impl Fn(&Dense) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.data().len() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + FD_STEP;
        let plus = loss(&probe);
        probe.data_mut()[i] = orig - FD_STEP;
        let minus = loss(&probe);
        probe.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        if std::env::var("FD_DEBUG").is_ok() && rel_err(grad.data()[i], numeric) > 1e-5 {
            eprintln!("input [{i}]: analytic {:e} numeric {:e}", grad.data()[i], numeric);
        }
        worst = worst.max(rel_err(grad.data()[i], numeric));
    }
    worst
}

fn weighted_sum(y: &Dense, r: &Dense) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Random graph with at most `max_nodes` nodes in total and random labels.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, dims: Dims) -> BipartiteGraph {
    let n_u = rng.gen_range(2..=max_nodes / 2);
    let n_v = rng.gen_range(2..=max_nodes - n_u);
    let mut edges = Vec::new();
    for u in 0..n_u {
        for v in 0..n_v {
            if rng.gen::<f64>() < 0.45 {
                edges.push((u, v));
            }
        }
    }
    for (u, v) in [(0, 0), (1, 1)] {
        if !edges.contains(&(u, v)) {
            edges.push((u, v));
        }
    }
    let label = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => Label::Fraud,
        1 => Label::NonFraud,
        _ => Label::Unknown,
    };
    let u_labels = (0..n_u).map(|_| label(rng)).collect();
    let v_labels = (0..n_v).map(|_| label(rng)).collect();
    let m = edges.len();
    BipartiteGraph::new(
        random_dense(rng, n_u, dims.u),
        random_dense(rng, n_v, dims.v),
        edges,
        random_dense(rng, m, dims.e),
        u_labels,
        v_labels,
    )
    .unwrap()
}

/// Per-op gradient checks for one seed. Returns `(name, max rel err)`.
pub fn op_gradient_errors(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let (n, din, dout) = (rng.gen_range(2..6), rng.gen_range(1..5), rng.gen_range(1..5));

    // linear
    let x = random_dense(&mut rng, n, din);
    let r = random_dense(&mut rng, n, dout);
    let mut lin = LinearParams::glorot(din, dout, &mut rng);
    lin.bias.value = random_dense(&mut rng, 1, dout);
    let (dx, g) = linear_backward(&x, &lin, &r).unwrap();
    let mut flat = Vec::new();
    g.flatten_into(&mut flat);
    let e1 = check_params(
        &mut lin,
        |p| {
            let mut v = Vec::new();
            p.params_mut(&mut v);
            v
        },
        &flat,
        |p| weighted_sum(&linear_forward(&x, p).unwrap(), &r),
    );
    let e2 = check_input(&x, &dx, |xx| weighted_sum(&linear_forward(xx, &lin).unwrap(), &r));
    out.push(("linear", e1.max(e2)));

    // batch norm, training mode
    let xb = random_dense(&mut rng, n.max(2), dout);
    let rb = random_dense(&mut rng, n.max(2), dout);
    let mut bn = BatchNormParams::new(dout);
    bn.gamma.value = random_dense(&mut rng, 1, dout);
    bn.beta.value = random_dense(&mut rng, 1, dout);
    let (_, cache) = batchnorm_forward(&xb, &bn, Mode::Train).unwrap();
    let (dxb, gb) = batchnorm_backward(&cache, &bn, &rb).unwrap();
    let mut flat = Vec::new();
    gb.flatten_into(&mut flat);
    let bn_loss = |p: &BatchNormParams, xx: &Dense| weighted_sum(&batchnorm_forward(xx, p, Mode::Train).unwrap().0, &rb);
    let e1 = check_params(
        &mut bn,
        |p| {
            let mut v = Vec::new();
            p.params_mut(&mut v);
            v
        },
        &flat,
        |p| bn_loss(p, &xb),
    );
    let e2 = check_input(&xb, &dxb, |xx| bn_loss(&bn, xx));
    out.push(("batchnorm", e1.max(e2)));

    // relu, inputs kept away from the kink
    let mut xr = random_dense(&mut rng, n, din);
    for v in xr.data_mut() {
        if v.abs() < 1e-3 {
            *v += 0.01;
        }
    }
    let rr = random_dense(&mut rng, n, din);
    let dxr = relu_backward(&xr, &rr).unwrap();
    out.push(("relu", check_input(&xr, &dxr, |xx| weighted_sum(&relu(xx), &rr))));

    // bce with logits
    let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
    let dl = bce_with_logits_backward(&logits, &targets).unwrap();
    let lx = Dense::from_vec(n, 1, logits).unwrap();
    let dlx = Dense::from_vec(n, 1, dl).unwrap();
    out.push(("bce", check_input(&lx, &dlx, |xx| bce_with_logits(xx.data(), &targets).unwrap())));

    // mse
    let xm = random_dense(&mut rng, n, din);
    let tm = random_dense(&mut rng, n, din);
    let dm = mse_backward(&xm, &tm).unwrap();
    out.push(("mse", check_input(&xm, &dm, |xx| mse(xx, &tm).unwrap())));

    // linear -> batch norm -> relu
    let xc = random_dense(&mut rng, n.max(2), din);
    let rc = random_dense(&mut rng, n.max(2), dout);
    let lin_c = LinearParams::glorot(din, dout, &mut rng);
    let bn_c = BatchNormParams::new(dout);
    let chain = |xx: &Dense| {
        let z = linear_forward(xx, &lin_c).unwrap();
        let (y, _) = batchnorm_forward(&z, &bn_c, Mode::Train).unwrap();
        weighted_sum(&relu(&y), &rc)
    };
    let z = linear_forward(&xc, &lin_c).unwrap();
    let (y, bc) = batchnorm_forward(&z, &bn_c, Mode::Train).unwrap();
    let dy = relu_backward(&y, &rc).unwrap();
    let (dz, _) = batchnorm_backward(&bc, &bn_c, &dy).unwrap();
    let (dxc, _) = linear_backward(&xc, &lin_c, &dz).unwrap();
    out.push(("linear-bn-relu", check_input(&xc, &dxc, chain)));

    // mlp head
    let mut mlp = Mlp::new(din, 4, 4, &mut rng);
    let mut all = Vec::new();
    mlp.params_mut(&mut all);
    jitter_vectors(all, &mut rng);
    let xh = random_dense(&mut rng, n, din);
    let rh = random_dense(&mut rng, n, 1);
    let (_, mc) = mlp.forward(&xh).unwrap();
    let (dxh, mg) = mlp.backward(&mc, &rh).unwrap();
    let mut flat = Vec::new();
    for g in mg {
        g.flatten_into(&mut flat);
    }
    let e1 = check_params(
        &mut mlp,
        |m| {
            let mut v = Vec::new();
            m.params_mut(&mut v);
            v
        },
        &flat,
        |m| weighted_sum(&m.forward(&xh).unwrap().0, &rh),
    );
    let e2 = check_input(&xh, &dxh, |xx| weighted_sum(&mlp.forward(xx).unwrap().0, &rh));
    out.push(("mlp", e1.max(e2)));

    for (name, agg) in [("bean_conv mean", Aggregator::Mean), ("bean_conv mean+max", Aggregator::MeanMax)] {
        out.push((name, conv_gradient_error(&mut rng, agg)));
    }
    out
}

fn conv_gradient_error(rng: &mut ChaCha8Rng, agg: Aggregator) -> f64 {
    let dims = Dims { u: 3, v: 2, e: 2 };
    let g = loop {
        let g = random_graph(rng, 6, dims);
        if g.n_e() >= 2 {
            break g;
        }
    };
    let view = g.view();
    let out_dims = Dims { u: 3, v: 2, e: 2 };
    let mut params = BeanConvParams::new(dims, out_dims, agg, true, rng);
    let mut all = Vec::new();
    params.params_mut(&mut all);
    jitter_vectors(all, rng);
    let state = LayerState::from_graph(&view);
    let up = LayerState {
        u: random_dense(rng, g.n_u(), out_dims.u),
        v: random_dense(rng, g.n_v(), out_dims.v),
        e: random_dense(rng, g.n_e(), out_dims.e),
    };
    let loss = |p: &BeanConvParams, s: &LayerState| {
        let (o, _) = bean_conv_forward(&view, s, p, Mode::Train).unwrap();
        weighted_sum(&o.u, &up.u) + weighted_sum(&o.v, &up.v) + weighted_sum(&o.e, &up.e)
    };
    let (_, cache) = bean_conv_forward(&view, &state, &params, Mode::Train).unwrap();
    let (ds, grads) = bean_conv_backward(&view, &cache, &params, &up).unwrap();
    let mut flat = Vec::new();
    grads.flatten_into(&mut flat);
    let e_params = check_params(
        &mut params,
        |p| {
            let mut v = Vec::new();
            p.params_mut(&mut v);
            v
        },
        &flat,
        |p| loss(p, &state),
    );
    let mut worst = e_params;
    for (which, grad) in [(0, &ds.u), (1, &ds.v), (2, &ds.e)] {
        let base = match which {
            0 => &state.u,
            1 => &state.v,
            _ => &state.e,
        };
        worst = worst.max(check_input(base, grad, |xx| {
            let mut s = state.clone();
            match which {
                0 => s.u = xx.clone(),
                1 => s.v = xx.clone(),
                _ => s.e = xx.clone(),
            }
            loss(&params, &s)
        }));
    }
    worst
}

/// Full composite-loss gradient check on a random graph of at most 10 nodes.
pub fn composite_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = Dims { u: 3, v: 2, e: 2 };
    let g = random_graph(&mut rng, 10, dims);
    let config = SageFinConfig {
        hidden_dim: 4,
        latent_dim: 3,
        seed,
        aggregator: if seed % 2 == 0 { Aggregator::Mean } else { Aggregator::MeanMax },
        ..SageFinConfig::default()
    };
    let mut model = SageFinModel::for_graph(config, &g).unwrap();
    jitter_vectors(model.params_mut(), &mut rng);
    let u_mask: Vec<bool> = (0..g.n_u()).map(|_| rng.gen()).collect();
    let v_mask: Vec<bool> = (0..g.n_v()).map(|_| rng.gen()).collect();
    let positives: Vec<usize> = (0..g.n_e()).collect();
    let existing: std::collections::HashSet<_> = g.edges().iter().copied().collect();
    let negatives: Vec<(usize, usize)> = (0..g.n_u())
        .flat_map(|u| (0..g.n_v()).map(move |v| (u, v)))
        .filter(|p| !existing.contains(p))
        .collect();
    let inputs = LossInputs {
        u_mask: &u_mask,
        v_mask: &v_mask,
        positive_edges: &positives,
        negatives: &negatives,
    };
    let view = g.view();
    let (_, grads, _) = model.loss_and_gradients(&view, &inputs).unwrap();
    check_params(
        &mut model,
        |m| m.params_mut(),
        &grads.0,
        |m| m.loss(&view, &inputs, Mode::Train).unwrap().total,
    )
}

/// Independent reference for an edge score: a full-graph forward pass with
/// the edge removed, against the reference label of the intact graph.
pub fn brute_force_score(model: &SageFinModel, graph: &BipartiteGraph, target: NodeRef, edge: usize, config: &ExplainConfig) -> f64 {
    let logit = |view: &sagefin::graph::GraphView<'_>| {
        let z = model.encode(view, Mode::Eval).unwrap();
        let row = match target.partition {
            Partition::U => z.u.row(target.index).to_vec(),
            Partition::V => z.v.row(target.index).to_vec(),
        };
        model.predict_node(&row, target.partition).unwrap()
    };
    let full = logit(&graph.view());
    let reference = if sigmoid(full) >= config.threshold { 1.0 } else { 0.0 };
    let ablated = logit(&graph.remove_edge_view(edge).unwrap());
    bce_logit(ablated, reference) - bce_logit(full, reference)
}

/// True if the edges form one connected component that contains `target`
/// (an empty edge set counts as the target alone).
pub fn connected_with_target(graph: &BipartiteGraph, target: NodeRef, edges: &[usize]) -> bool {
    let mut reached = std::collections::HashSet::from([target]);
    let mut left: Vec<usize> = edges.to_vec();
    loop {
        let before = left.len();
        left.retain(|&e| {
            let (u, v) = graph.edge(e).unwrap();
            let (a, b) = (NodeRef::u(u), NodeRef::v(v));
            if reached.contains(&a) || reached.contains(&b) {
                reached.insert(a);
                reached.insert(b);
                false
            } else {
                true
            }
        });
        if left.is_empty() {
            return true;
        }
        if left.len() == before {
            return false;
        }
    }
}

/// Plain full-batch training loop with every label visible, used to get a
/// model with non-trivial weights and running statistics.
pub fn quick_train(graph: &BipartiteGraph, config: SageFinConfig, epochs: usize) -> SageFinModel {
    use sagefin::model::sample_negative_pairs;
    use sagefin::tensor::{adam_step, AdamState};
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut model = SageFinModel::for_graph(config, graph).unwrap();
    let mut adam = AdamState::new(0.01);
    let u_mask = vec![true; graph.n_u()];
    let v_mask = vec![true; graph.n_v()];
    let positives: Vec<usize> = (0..graph.n_e()).collect();
    let available = graph.n_u() * graph.n_v() - graph.n_e();
    let view = graph.view();
    for _ in 0..epochs {
        let negatives = sample_negative_pairs(graph, graph.n_e().min(available), &mut rng).unwrap();
        let inputs = LossInputs {
            u_mask: &u_mask,
            v_mask: &v_mask,
            positive_edges: &positives,
            negatives: &negatives,
        };
        let (_, grads, caches) = model.loss_and_gradients(&view, &inputs).unwrap();
        adam_step(&mut model.params_mut(), &grads.0, &mut adam).unwrap();
        model.absorb(&caches);
        model.mark_trained(1);
    }
    model
}

/// generate -> train -> evaluate -> explain under `work`, data in
/// `work/data` and run artifacts in `work/run`.
pub fn run_pipeline(work: &std::path::Path, mut config: sagefin::cli::RunConfig) -> sagefin::cli::RunConfig {
    use sagefin::cli::{run, Command};
    config.model.seed = config.seed;
    config.synthetic.seed = config.seed;
    config.out_dir = work.join("data");
    run(Command::Generate, &config).unwrap();
    config.data_dir = work.join("data");
    config.out_dir = work.join("run");
    for command in [Command::Train, Command::Evaluate, Command::Explain] {
        run(command, &config).unwrap();
    }
    config
}
