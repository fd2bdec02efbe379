//! FedAvg on Adult under the three client layouts, followed by the PID audit
//! of each trained model.
//!
//! `cargo run --release --example fedavg_audit [path/to/adult.data]`

use fedpid::data::{self, PartitionSpec, Scenario};
use fedpid::fl::{self, ClientDataset, TrainingConfig};
use fedpid::pid::{self, SolverOptions};

fn main() -> fedpid::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/adult.data").to_string());
    let adult = data::adult_ingest(path)?.subsample(10_000, 0)?;
    let (train, holdout) = adult.split(0.5, 0)?;
    let holdout = [ClientDataset::from_rows(0, &holdout)?];
    let layouts = [
        ("iid", Scenario::Iid),
        ("heterogeneity 0.9", Scenario::Heterogeneity { alpha: 0.9 }),
        ("synergy 0.9", Scenario::Synergy { lambda: 0.9 }),
    ];
    let mut rows = Vec::new();
    for (name, scenario) in layouts {
        let clients = data::partition(&train, &PartitionSpec { scenario, k: 2, seed: 0 })?;
        let run = fl::train(&clients, &TrainingConfig::default())?;
        let d = pid::decompose(&run.joint, &SolverOptions::default())?;
        println!(
            "{name:<18} rounds {:>2}  train accuracy {:.4}  holdout accuracy {:.4}",
            run.history.len(),
            run.accuracy,
            fl::evaluate(&run.params, &holdout)
        );
        rows.push((name, d));
    }
    let refs: Vec<(&str, &pid::PidDecomposition)> = rows.iter().map(|(n, d)| (*n, d)).collect();
    print!("{}", pid::render_table(&refs));
    Ok(())
}
