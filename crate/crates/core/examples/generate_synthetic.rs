//! Generates a planted-fraud bipartite graph, prints its summary and degree
//! distribution, and optionally writes it in the Elliptic++ CSV layout.
//!
//! ```text
//! cargo run --example generate_synthetic -- [out_dir] [seed]
//! ```

use sagefin::data::{export_csv, export_ground_truth, generate_synthetic, summarize_degrees, DatasetSummary, SyntheticConfig};
use sagefin::graph::Partition;

fn main() -> sagefin::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let config = SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    };
    let (graph, truth) = generate_synthetic(&config)?;

    print!("{}", DatasetSummary::of(&graph).to_table());
    for (i, (u, v)) in truth.clusters.iter().enumerate() {
        println!("cluster {i}: transactions {u:?}");
        println!("           wallets      {v:?}");
    }
    let degrees = summarize_degrees(&graph);
    for (p, name) in [(Partition::U, "transactions"), (Partition::V, "wallets")] {
        let hist = degrees.histogram(p);
        let max = hist.keys().next_back().copied().unwrap_or(0);
        let isolated = hist.get(&0).copied().unwrap_or(0);
        println!("{name}: max degree {max}, isolated {isolated}");
    }

    if let Some(dir) = args.first() {
        let dir = std::path::Path::new(dir);
        export_csv(&graph, dir)?;
        export_ground_truth(&truth, &dir.join("ground_truth.json"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
