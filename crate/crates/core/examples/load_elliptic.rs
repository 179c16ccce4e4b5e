//! Loads a dataset in the Elliptic++ CSV layout and prints its summary.
//! Without an argument a synthetic graph is exported to a temporary
//! directory first and loaded back.
//!
//! ```text
//! cargo run --example load_elliptic -- [data_dir]
//! ```

use std::path::PathBuf;

use sagefin::data::{export_csv, generate_synthetic, load_elliptic, DatasetSummary, EllipticSchema, SyntheticConfig};

fn main() -> sagefin::Result<()> {
    env_logger::init();
    let dir = match std::env::args().nth(1) {
        Some(d) => PathBuf::from(d),
        None => {
            let dir = std::env::temp_dir().join("sagefin-elliptic-example");
            let (graph, _) = generate_synthetic(&SyntheticConfig::default())?;
            export_csv(&graph, &dir)?;
            println!("exported a synthetic graph to {}", dir.display());
            dir
        }
    };
    let schema = EllipticSchema::for_dir(&dir)?;
    let graph = load_elliptic(&dir, &schema)?;
    print!("{}", DatasetSummary::of(&graph).to_table());
    println!(
        "feature widths: transactions {}, wallets {}, edges {}",
        graph.u_features().cols(),
        graph.v_features().cols(),
        graph.e_features().cols()
    );
    Ok(())
}
