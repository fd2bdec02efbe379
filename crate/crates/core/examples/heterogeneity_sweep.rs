//! Unique and redundant disparity as the sensitive attribute concentrates
//! on one client.

use clap::Parser;
use fedpid::cli::{self, Cli, Command};
use rayon::prelude::*;

fn main() -> fedpid::Result<()> {
    let alphas = ["0.1", "0.2", "0.3", "0.33", "0.4", "0.5", "0.6", "0.66"];
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/adult.data");
    let rows: Vec<fedpid::Result<cli::Audit>> = alphas
        .par_iter()
        .map(|a| {
            let argv = ["fedpid", "fl", "--data", data, "--scenario", "heterogeneity", "--alpha", a];
            let Command::Fl(args) = Cli::try_parse_from(argv).expect("valid flags").command else {
                unreachable!()
            };
            cli::audit(&args.data, &args.train)
        })
        .collect();
    println!("{:>6} {:>8} {:>8} {:>8} {:>8} {:>8}", "alpha", "I(Z;S)", "global", "local", "unique", "redund");
    for (a, r) in alphas.iter().zip(rows) {
        let r = r?;
        println!(
            "{a:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.i_zs, r.pid.global_disparity, r.pid.local_disparity, r.pid.uni, r.pid.red
        );
    }
    Ok(())
}
