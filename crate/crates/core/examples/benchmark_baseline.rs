//! SAGE-FIN against a feature-only logistic regression on the same splits,
//! pooled over several seeds. A small `shift` makes the fraud signal mostly
//! structural.
//!
//! ```text
//! cargo run --release --example benchmark_baseline -- [shift] [seeds]
//! ```

use sagefin::data::{generate_synthetic, SyntheticConfig};
use sagefin::model::SageFinConfig;
use sagefin::train::{baseline_report, fit, format_table, EvalReport, LogisticConfig, Metrics, Split, TrainConfig};

fn pooled(reports: &[EvalReport]) -> Metrics {
    let mut c = [0usize; 4];
    for m in reports.iter().flat_map(|r| [&r.u, &r.v]) {
        c[0] += m.tp;
        c[1] += m.fp;
        c[2] += m.fn_;
        c[3] += m.tn;
    }
    Metrics::from_counts(c[0], c[1], c[2], c[3])
}

fn main() -> sagefin::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let shift = args.first().and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);

    let mut ours = Vec::new();
    let mut theirs = Vec::new();
    for seed in 0..seeds {
        let (raw, _) = generate_synthetic(&SyntheticConfig {
            shift,
            seed,
            ..SyntheticConfig::default()
        })?;
        let model_config = SageFinConfig {
            seed,
            ..SageFinConfig::default()
        };
        let (graph, splits, outcome) = fit(&raw, &model_config, &TrainConfig::default())?;
        let test = outcome.report.test.expect("fit scores the test split");
        let baseline = baseline_report(&graph, &splits, Split::Test, &LogisticConfig::default())?;
        println!("seed {seed}");
        print!("{}", format_table(&[("sagefin", &test, true), ("logistic", &baseline, false)]));
        println!();
        ours.push(test);
        theirs.push(baseline);
    }
    let (a, b) = (pooled(&ours), pooled(&theirs));
    println!("pooled node F1 over {seeds} seeds: sagefin {:.3}, logistic {:.3}", a.f1, b.f1);
    Ok(())
}
