//! Accuracy frontier of the synthetic Gaussian mixture under three client
//! layouts, as a coarse text heat map.
//!
//! `cargo run --release --example pareto_frontier`

use fedpid::aglfop::{self, AglfopOptions, FixedMarginal};
use fedpid::data::{self, PartitionSpec, Scenario};

fn main() -> fedpid::Result<()> {
    let ds = data::synth_generate(100_000, 0.5, 0)?;
    let axis = [0.0, 0.01, 0.02, 0.05, 0.1, f64::INFINITY];
    for scenario in [
        Scenario::Iid,
        Scenario::Heterogeneity { alpha: 0.9 },
        Scenario::Synergy { lambda: 1.0 },
    ] {
        let clients = data::partition(&ds, &PartitionSpec { scenario: scenario.clone(), k: 2, seed: 0 })?;
        let m = FixedMarginal::new(&data::empirical_zsy(&clients)?)?;
        let grid = aglfop::pareto_sweep(&m, &axis, &axis, &AglfopOptions::default())?;
        println!("{scenario:?}  P(z,s,y) = {:.4?}", m.dist().probs());
        print!("{:>10}", "g \\ l");
        for l in &axis {
            print!("{l:>8}");
        }
        println!();
        for (g, row) in axis.iter().zip(&grid.accuracy) {
            print!("{g:>10}");
            for a in row {
                print!("{a:>8.4}");
            }
            println!();
        }
        println!("monotonicity gap {:.1e}\n", grid.monotonicity_gap());
    }
    Ok(())
}
