//! Compares the analytic gradient of the composite loss with central finite
//! differences on a small random graph.
//!
//! ```text
//! cargo run --example gradient_check -- [seed]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sagefin::graph::{BipartiteGraph, Label};
use sagefin::model::{LossInputs, SageFinConfig, SageFinModel};
use sagefin::tensor::{Dense, Mode};

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Dense {
    Dense::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn main() -> sagefin::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = vec![(0, 0), (0, 1), (1, 1), (2, 1), (2, 2), (3, 0)];
    let graph = BipartiteGraph::new(
        random(&mut rng, 4, 3),
        random(&mut rng, 3, 2),
        edges.clone(),
        random(&mut rng, edges.len(), 2),
        vec![Label::Fraud, Label::NonFraud, Label::Unknown, Label::NonFraud],
        vec![Label::NonFraud, Label::Fraud, Label::Unknown],
    )?;
    let config = SageFinConfig {
        hidden_dim: 4,
        latent_dim: 3,
        seed,
        ..SageFinConfig::default()
    };
    let mut model = SageFinModel::for_graph(config, &graph)?;
    for p in model.params_mut() {
        if p.value.rows() == 1 {
            p.value.data_mut().iter_mut().for_each(|x| *x += rng.gen_range(-0.5..0.5));
        }
    }
    let u_mask = vec![true; graph.n_u()];
    let v_mask = vec![true; graph.n_v()];
    let positives: Vec<usize> = (0..graph.n_e()).collect();
    let negatives = [(0, 2), (1, 0), (3, 2)];
    let inputs = LossInputs {
        u_mask: &u_mask,
        v_mask: &v_mask,
        positive_edges: &positives,
        negatives: &negatives,
    };
    let view = graph.view();
    let (loss, grads, _) = model.loss_and_gradients(&view, &inputs)?;
    println!("loss {:.6} over {} parameter tensors", loss.total, grads.0.len());

    let h = 1e-6;
    let mut worst = 0.0f64;
    for (p, grad) in grads.0.iter().enumerate() {
        let mut tensor_worst = 0.0f64;
        for i in 0..grad.data().len() {
            let orig = model.params_mut()[p].value.data()[i];
            model.params_mut()[p].value.data_mut()[i] = orig + h;
            let plus = model.loss(&view, &inputs, Mode::Train)?.total;
            model.params_mut()[p].value.data_mut()[i] = orig - h;
            let minus = model.loss(&view, &inputs, Mode::Train)?.total;
            model.params_mut()[p].value.data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = grad.data()[i];
            tensor_worst = tensor_worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
        }
        println!("tensor {p:>2} {:>3}x{:<3} max rel err {tensor_worst:.2e}", grad.rows(), grad.cols());
        worst = worst.max(tensor_worst);
    }
    println!("overall max rel err {worst:.2e}");
    Ok(())
}
