//! Trains SAGE-FIN on a synthetic planted-fraud graph and prints the loss
//! curve and test metrics.
//!
//! ```text
//! cargo run --release --example train_and_evaluate -- [seed] [epochs]
//! ```

use sagefin::data::{generate_synthetic, SyntheticConfig};
use sagefin::model::SageFinConfig;
use sagefin::train::{fit, format_table, TrainConfig};

fn main() -> sagefin::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().and_then(|s| s.parse().ok()).unwrap_or(0);
    let epochs = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);

    let (raw, _) = generate_synthetic(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })?;
    let model_config = SageFinConfig {
        seed,
        ..SageFinConfig::default()
    };
    let train_config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let start = std::time::Instant::now();
    let (_, _, outcome) = fit(&raw, &model_config, &train_config)?;

    println!("epoch      total    feature  structure      class  val node F1  val edge F1");
    let step = (epochs / 10).max(1);
    for r in outcome.report.epochs.iter().filter(|r| r.epoch % step == 0 || r.epoch + 1 == epochs) {
        println!(
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>12.3} {:>12.3}",
            r.epoch,
            r.loss.total,
            r.loss.feature(),
            r.loss.edge_prediction,
            r.loss.classification(),
            r.val.node_f1(),
            r.val.edges.f1
        );
    }
    let best = outcome.report.best();
    println!(
        "\n{epochs} epochs in {:.1}s, best epoch {}\n",
        start.elapsed().as_secs_f64(),
        best.epoch
    );
    let test = outcome.report.test.expect("fit scores the test split");
    print!("{}", format_table(&[("sagefin", &test, true)]));
    Ok(())
}
