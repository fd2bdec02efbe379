//! Classical group-fairness metrics and their information-theoretic bounds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dist::{JointDist, S, Y, YHAT, Z};
use crate::error::{Error, Result};

/// `|P(Yhat=1 | Z=1) - P(Yhat=1 | Z=0)|`, optionally within client `S = s`.
///
/// Needs binary `Z` and `Yhat`; fails when either `Z` group has no mass.
pub fn statistical_parity_gap(d: &JointDist, client: Option<usize>) -> Result<f64> {
    let rates = approval_rates(d, client)?;
    Ok((rates[1] - rates[0]).abs())
}

/// `P(Yhat=1 | Z=z [, S=s])` for `z = 0, 1`.
pub fn approval_rates(d: &JointDist, client: Option<usize>) -> Result<[f64; 2]> {
    for name in [Z, YHAT] {
        if d.schema().card(name)? != 2 {
            return Err(Error::InvalidArgument(format!("`{name}` must be binary")));
        }
    }
    let (table, offset) = match client {
        None => (d.marginal_ordered(&[Z, YHAT])?, 0),
        Some(s) => {
            let ns = d.schema().card(S)?;
            if s >= ns {
                return Err(Error::InvalidArgument(format!("client {s} out of range (|S| = {ns})")));
            }
            (d.marginal_ordered(&[S, Z, YHAT])?, s * 4)
        }
    };
    let p = &table.probs()[offset..offset + 4];
    let mut rates = [0.0; 2];
    for z in 0..2 {
        let mass = p[2 * z] + p[2 * z + 1];
        if mass <= 0.0 {
            let group = match client {
                None => format!("Z={z}"),
                Some(s) => format!("Z={z}, S={s}"),
            };
            return Err(Error::ZeroMassGroup { group });
        }
        rates[z] = p[2 * z + 1] / mass;
    }
    Ok(rates)
}

/// Upper bound on the statistical parity gap from a mutual information in
/// bits and the group prior `alpha = P(Z=0)`:
/// `sqrt(0.5 * mi * ln 2) / (2 alpha (1 - alpha))`.
pub fn pinsker_bound(mi_bits: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(mi_bits >= -1e-12) {
        return Err(Error::InvalidArgument(format!("mutual information must be non-negative, got {mi_bits}")));
    }
    let nats = mi_bits.max(0.0) * std::f64::consts::LN_2;
    Ok((0.5 * nats).sqrt() / (2.0 * alpha * (1.0 - alpha)))
}

/// `I(Z;Yhat|Y)`, or `I(Z;Yhat|Y,S)` when `local`.
pub fn equalized_odds_mi(d: &JointDist, local: bool) -> Result<f64> {
    if local {
        d.conditional_mutual_information(&[Z], &[YHAT], &[Y, S])
    } else {
        d.conditional_mutual_information(&[Z], &[YHAT], &[Y])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub sp_global: f64,
    /// `None` for a client holding only one `Z` group.
    pub sp_per_client: BTreeMap<usize, Option<f64>>,
    pub pinsker_bound_global: f64,
    pub pinsker_bounds_local: BTreeMap<usize, Option<f64>>,
    /// `None` when the joint has no `Y`.
    pub eo_global: Option<f64>,
    pub eo_local: Option<f64>,
    pub alpha_global: f64,
    pub alpha_per_client: BTreeMap<usize, f64>,
}

/// Every metric above for a joint over `(Z, S, [Y,] Yhat)`.
pub fn fairness_report(d: &JointDist) -> Result<FairnessReport> {
    let sp_global = statistical_parity_gap(d, None)?;
    let pz = d.marginal(&[Z])?;
    let alpha_global = pz.probs()[0];
    let pinsker_bound_global = pinsker_bound(d.mutual_information(&[Z], &[YHAT])?, alpha_global)?;

    let zs = d.marginal_ordered(&[S, Z])?;
    let local_terms: BTreeMap<usize, f64> = d
        .conditional_mi_terms(&[Z], &[YHAT], &[S])?
        .into_iter()
        .map(|t| (t.condition, t.value))
        .collect();
    let mut sp_per_client = BTreeMap::new();
    let mut pinsker_bounds_local = BTreeMap::new();
    let mut alpha_per_client = BTreeMap::new();
    for s in 0..d.schema().card(S)? {
        let (p0, p1) = (zs.probs()[2 * s], zs.probs()[2 * s + 1]);
        if p0 + p1 <= 0.0 {
            continue;
        }
        let alpha = p0 / (p0 + p1);
        alpha_per_client.insert(s, alpha);
        if alpha > 0.0 && alpha < 1.0 {
            sp_per_client.insert(s, Some(statistical_parity_gap(d, Some(s))?));
            let mi = local_terms.get(&s).copied().unwrap_or(0.0);
            pinsker_bounds_local.insert(s, Some(pinsker_bound(mi, alpha)?));
        } else {
            sp_per_client.insert(s, None);
            pinsker_bounds_local.insert(s, None);
        }
    }

    let has_y = d.schema().contains(Y);
    Ok(FairnessReport {
        sp_global,
        sp_per_client,
        pinsker_bound_global,
        pinsker_bounds_local,
        eo_global: has_y.then(|| equalized_odds_mi(d, false)).transpose()?,
        eo_local: has_y.then(|| equalized_odds_mi(d, true)).transpose()?,
        alpha_global,
        alpha_per_client,
    })
}

impl FairnessReport {
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>10} {:>12} {:>10}", "scope", "SP gap", "Pinsker bnd", "P(Z=0)");
        let _ = writeln!(
            out,
            "{:<8} {:>10.4} {:>12.4} {:>10.4}",
            "global", self.sp_global, self.pinsker_bound_global, self.alpha_global
        );
        for (s, alpha) in &self.alpha_per_client {
            let _ = writeln!(
                out,
                "{:<8} {:>10} {:>12} {:>10.4}",
                format!("S={s}"),
                fmt(self.sp_per_client.get(s).copied().flatten()),
                fmt(self.pinsker_bounds_local.get(s).copied().flatten()),
                alpha
            );
        }
        let _ = writeln!(out, "EO global (bits): {}", fmt(self.eo_global));
        let _ = writeln!(out, "EO local  (bits): {}", fmt(self.eo_local));
        out
    }
}
