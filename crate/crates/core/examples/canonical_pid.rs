//! Decomposes the three canonical two-client joints into unique, redundant
//! and masked disparity.

use fedpid::pid::{self, canonical, SolverOptions};

fn main() -> fedpid::Result<()> {
    let opts = SolverOptions::default();
    let uniqueness = pid::decompose(&canonical::pure_uniqueness(), &opts)?;
    let redundancy = pid::decompose(&canonical::pure_redundancy(0.9), &opts)?;
    let synergy = pid::decompose(&canonical::pure_synergy(), &opts)?;
    print!(
        "{}",
        pid::render_table(&[
            ("Yhat = Z", &uniqueness),
            ("Yhat = S, P(Z=S)=0.9", &redundancy),
            ("Yhat = Z xor S", &synergy),
        ])
    );
    Ok(())
}
