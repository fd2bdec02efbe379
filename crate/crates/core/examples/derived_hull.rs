//! Frontier reachable by post-processing one trained federated classifier,
//! compared with the frontier over all classifiers.

use fedpid::aglfop::{self, AglfopOptions, DerivedClassifierHull, FixedMarginal, HullGrouping};
use fedpid::data::{self, PartitionSpec, Scenario};
use fedpid::fl::{self, TrainingConfig};

fn main() -> fedpid::Result<()> {
    let ds = data::synth_generate(20_000, 0.5, 1)?;
    let clients = data::partition(&ds, &PartitionSpec { scenario: Scenario::Heterogeneity { alpha: 0.9 }, k: 2, seed: 1 })?;
    let run = fl::train(&clients, &TrainingConfig { rounds: 10, ..TrainingConfig::default() })?;
    println!("trained accuracy {:.4}", run.accuracy);

    let m = FixedMarginal::new(&run.joint)?;
    let axis = [0.0, 0.005, 0.02, f64::INFINITY];
    let opts = AglfopOptions::default();
    let free = aglfop::pareto_sweep(&m, &axis, &axis, &opts)?;
    let hull = DerivedClassifierHull::from_predictions(&run.joint, HullGrouping::ZS)?;
    for ((group, client), vertices) in &hull.groups {
        println!("z={group} s={client:?} hull {vertices:.3?}");
    }
    let derived = aglfop::pareto_sweep_in_hull(&m, &hull, &axis, &axis, &opts)?;
    println!("{:>8} {:>8} {:>10} {:>10}", "eps_g", "eps_l", "any", "derived");
    for (i, g) in axis.iter().enumerate() {
        for (j, l) in axis.iter().enumerate() {
            println!("{g:>8} {l:>8} {:>10.4} {:>10.4}", free.accuracy[i][j], derived.accuracy[i][j]);
        }
    }
    Ok(())
}
