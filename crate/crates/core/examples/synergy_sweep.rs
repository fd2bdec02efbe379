//! Masked disparity as labels align with the parity of the sensitive
//! attribute and the client index.

use clap::Parser;
use fedpid::cli::{self, Cli, Command};
use rayon::prelude::*;

fn main() -> fedpid::Result<()> {
    let lambdas = ["0", "0.25", "0.5", "0.75", "1"];
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/adult.data");
    let rows: Vec<fedpid::Result<cli::Audit>> = lambdas
        .par_iter()
        .map(|a| {
            let argv = ["fedpid", "fl", "--data", data, "--scenario", "synergy", "--lambda", a];
            let Command::Fl(args) = Cli::try_parse_from(argv).expect("valid flags").command else {
                unreachable!()
            };
            cli::audit(&args.data, &args.train)
        })
        .collect();
    println!("{:>6} {:>8} {:>8} {:>8} {:>8} {:>8}", "lambda", "I(Z;S)", "global", "local", "redund", "masked");
    for (a, r) in lambdas.iter().zip(rows) {
        let r = r?;
        println!(
            "{a:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.i_zs, r.pid.global_disparity, r.pid.local_disparity, r.pid.red, r.pid.syn
        );
    }
    Ok(())
}
