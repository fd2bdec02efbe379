//! Accuracy / global-local fairness optimality.
//!
//! Given a fixed `P(Z,S,Y)`, find the channel `Q(Yhat=1 | z,s,y)` with the
//! smallest classification error subject to `I(Z;Yhat) <= eps_global` and
//! `I(Z;Yhat|S) <= eps_local`. The problem is convex in the channel, so the
//! augmented-Lagrangian solver below reaches the global optimum.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dist::{ConditionalTable, JointDist, VariableSchema, S, Y, YHAT, Z};
use crate::error::{Error, Result};

/// The fixed `(Z, S, Y)` marginal. `Y` must be binary.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedMarginal {
    dist: JointDist,
    nz: usize,
    ns: usize,
}

impl FixedMarginal {
    pub fn new(d: &JointDist) -> Result<Self> {
        let dist = d.marginal_ordered(&[Z, S, Y])?;
        if dist.schema().card(Y)? != 2 {
            return Err(Error::InvalidArgument("`Y` must be binary".into()));
        }
        let nz = dist.schema().card(Z)?;
        let ns = dist.schema().card(S)?;
        Ok(Self { dist, nz, ns })
    }

    pub fn dist(&self) -> &JointDist {
        &self.dist
    }

    pub fn num_cells(&self) -> usize {
        self.nz * self.ns * 2
    }

    /// Flat index of cell `(z, s, y)`.
    pub fn cell(&self, z: usize, s: usize, y: usize) -> usize {
        (z * self.ns + s) * 2 + y
    }

    fn p(&self) -> &[f64] {
        self.dist.probs()
    }

    /// `P(Y = 1)`.
    pub fn positive_rate(&self) -> f64 {
        self.p().iter().skip(1).step_by(2).sum()
    }

    /// Classification error of the channel `q[cell] = Q(Yhat=1 | cell)`.
    pub fn error(&self, q: &[f64]) -> f64 {
        self.p()
            .chunks(2)
            .zip(q.chunks(2))
            .map(|(p, q)| p[0] * q[0] + p[1] * (1.0 - q[1]))
            .sum()
    }

    /// `m[z, s] = P(Yhat = 1, z, s)`.
    fn approvals(&self, q: &[f64]) -> Vec<f64> {
        self.p().chunks(2).zip(q.chunks(2)).map(|(p, q)| p[0] * q[0] + p[1] * q[1]).collect()
    }

    fn group_mass(&self) -> Vec<f64> {
        self.p().chunks(2).map(|p| p[0] + p[1]).collect()
    }

    /// `I(Z;Yhat)` in bits.
    pub fn global_mi(&self, q: &[f64]) -> f64 {
        let m = self.approvals(q);
        let pzs = self.group_mass();
        let mut total_rate = 0.0;
        let mut inner = 0.0;
        for z in 0..self.nz {
            let pz: f64 = pzs[z * self.ns..(z + 1) * self.ns].iter().sum();
            let mz: f64 = m[z * self.ns..(z + 1) * self.ns].iter().sum();
            total_rate += mz;
            if pz > 0.0 {
                inner += pz * hb(mz / pz);
            }
        }
        (hb(total_rate) - inner).max(0.0)
    }

    /// `I(Z;Yhat|S)` in bits.
    pub fn local_mi(&self, q: &[f64]) -> f64 {
        let m = self.approvals(q);
        let pzs = self.group_mass();
        let mut value = 0.0;
        for s in 0..self.ns {
            let (mut ps, mut ms, mut inner) = (0.0, 0.0, 0.0);
            for z in 0..self.nz {
                let i = z * self.ns + s;
                ps += pzs[i];
                ms += m[i];
                if pzs[i] > 0.0 {
                    inner += pzs[i] * hb(m[i] / pzs[i]);
                }
            }
            if ps > 0.0 {
                value += ps * hb(ms / ps) - inner;
            }
        }
        value.max(0.0)
    }

    fn global_gradient(&self, q: &[f64]) -> Vec<f64> {
        let m = self.approvals(q);
        let pzs = self.group_mass();
        let total: f64 = m.iter().sum();
        let mut g = vec![0.0; q.len()];
        for z in 0..self.nz {
            let pz: f64 = pzs[z * self.ns..(z + 1) * self.ns].iter().sum();
            if pz <= 0.0 {
                continue;
            }
            let mz: f64 = m[z * self.ns..(z + 1) * self.ns].iter().sum();
            let slope = (logit(mz / pz) - logit(total)) / LN_2;
            for s in 0..self.ns {
                for y in 0..2 {
                    let c = self.cell(z, s, y);
                    g[c] = self.p()[c] * slope;
                }
            }
        }
        g
    }

    /// Adds `w` times the Hessian of the global or local MI to `h`.
    fn add_mi_hessian(&self, q: &[f64], local: bool, w: f64, h: &mut DMatrix<f64>) {
        let p = self.p();
        let mut add = |cells: &[usize], sign: f64| {
            let mass: f64 = cells.iter().map(|&c| p[c]).sum();
            if mass <= 0.0 {
                return;
            }
            let rate = (cells.iter().map(|&c| p[c] * q[c]).sum::<f64>() / mass).clamp(1e-12, 1.0 - 1e-12);
            let k = sign * w / (mass * rate * (1.0 - rate) * LN_2);
            for &a in cells {
                for &b in cells {
                    h[(a, b)] += k * p[a] * p[b];
                }
            }
        };
        let group = |z: usize, s: usize| [self.cell(z, s, 0), self.cell(z, s, 1)];
        if local {
            for s in 0..self.ns {
                let all: Vec<usize> = (0..self.nz).flat_map(|z| group(z, s)).collect();
                add(&all, -1.0);
                for z in 0..self.nz {
                    add(&group(z, s), 1.0);
                }
            }
        } else {
            let all: Vec<usize> = (0..self.num_cells()).collect();
            add(&all, -1.0);
            for z in 0..self.nz {
                let cells: Vec<usize> = (0..self.ns).flat_map(|s| group(z, s)).collect();
                add(&cells, 1.0);
            }
        }
    }

    fn local_gradient(&self, q: &[f64]) -> Vec<f64> {
        let m = self.approvals(q);
        let pzs = self.group_mass();
        let mut g = vec![0.0; q.len()];
        for s in 0..self.ns {
            let ps: f64 = (0..self.nz).map(|z| pzs[z * self.ns + s]).sum();
            let ms: f64 = (0..self.nz).map(|z| m[z * self.ns + s]).sum();
            if ps <= 0.0 {
                continue;
            }
            for z in 0..self.nz {
                let i = z * self.ns + s;
                if pzs[i] <= 0.0 {
                    continue;
                }
                let slope = (logit(m[i] / pzs[i]) - logit(ms / ps)) / LN_2;
                for y in 0..2 {
                    let c = self.cell(z, s, y);
                    g[c] = self.p()[c] * slope;
                }
            }
        }
        g
    }

    /// Joint over `(Z, S, Y, Yhat)` induced by the channel.
    pub fn joint_with(&self, q: &[f64]) -> Result<JointDist> {
        let schema = VariableSchema::new([(Z, self.nz), (S, self.ns), (Y, 2), (YHAT, 2)])?;
        let mut w = Vec::with_capacity(self.num_cells() * 2);
        for (p, qc) in self.p().iter().zip(q) {
            w.push(p * (1.0 - qc));
            w.push(p * qc);
        }
        JointDist::new(schema, w)
    }

    fn channel_table(&self, q: &[f64]) -> Result<ConditionalTable> {
        let target = VariableSchema::new([(YHAT, 2)])?;
        let given = VariableSchema::new([(Z, self.nz), (S, self.ns), (Y, 2)])?;
        let entries = q.iter().flat_map(|&v| [1.0 - v, v]).collect();
        ConditionalTable::new(target, given, entries, self.p().to_vec())
    }
}

fn hb(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}

/// Budgets in bits. `f64::INFINITY` disables a constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessBudget {
    pub eps_global: f64,
    pub eps_local: f64,
}

impl FairnessBudget {
    pub fn new(eps_global: f64, eps_local: f64) -> Result<Self> {
        for (name, v) in [("eps_global", eps_global), ("eps_local", eps_local)] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(Self { eps_global, eps_local })
    }

    pub fn unconstrained() -> Self {
        Self {
            eps_global: f64::INFINITY,
            eps_local: f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    InfeasibleNumerics,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::MaxIters => "max_iters",
            Self::InfeasibleNumerics => "infeasible_numerics",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AglfopOptions {
    /// Allowed constraint violation (bits for the MI budgets).
    pub tolerance: f64,
    pub inner_tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub mu_start: f64,
    pub mu_growth: f64,
    pub mu_max: f64,
}

impl Default for AglfopOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            inner_tolerance: 1e-12,
            max_outer: 80,
            max_inner: 20_000,
            mu_start: 10.0,
            mu_growth: 2.0,
            mu_max: 1e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AglfopSolution {
    /// `Q(Yhat | z, s, y)`.
    pub channel: ConditionalTable,
    pub err: f64,
    pub accuracy: f64,
    pub achieved_global: f64,
    pub achieved_local: f64,
    pub status: SolveStatus,
    /// Multipliers of the global and local budgets.
    pub multipliers: [f64; 2],
    pub outer_iters: usize,
}

impl AglfopSolution {
    /// `Q(Yhat = 1 | cell)` for every `(z, s, y)` cell.
    pub fn approval_channel(&self) -> Vec<f64> {
        self.channel.entries().chunks(2).map(|r| r[1]).collect()
    }
}

/// `sum coeffs[i].1 * q[coeffs[i].0] (<= | ==) rhs`.
#[derive(Clone, Debug, PartialEq)]
struct Linear {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
    equality: bool,
}

impl Linear {
    fn value(&self, q: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * q[i]).sum::<f64>() - self.rhs
    }
}

/// All constraints of one instance.
#[derive(Clone, Debug)]
struct Problem<'a> {
    m: &'a FixedMarginal,
    lo: Vec<f64>,
    hi: Vec<f64>,
    eps_global: Option<f64>,
    eps_local: Option<f64>,
    linear: Vec<Linear>,
}

#[derive(Clone, Debug, Default)]
struct Multipliers {
    global: f64,
    local: f64,
    linear: Vec<f64>,
}

/// State carried between neighbouring Pareto cells.
#[derive(Clone, Debug)]
struct WarmStart {
    q: Vec<f64>,
    multipliers: Multipliers,
}

impl<'a> Problem<'a> {
    fn new(m: &'a FixedMarginal, b: FairnessBudget) -> Self {
        let n = m.num_cells();
        let mut p = Self {
            m,
            lo: vec![0.0; n],
            hi: vec![1.0; n],
            eps_global: None,
            eps_local: None,
            linear: Vec::new(),
        };
        let pzs = m.group_mass();
        if b.eps_global == 0.0 {
            // I(Z;Yhat) = 0  <=>  P(Yhat=1 | z) is the same for every z
            let groups: Vec<(usize, f64)> = (0..m.nz)
                .map(|z| (z, pzs[z * m.ns..(z + 1) * m.ns].iter().sum::<f64>()))
                .filter(|&(_, mass)| mass > 0.0)
                .collect();
            if let Some(&(z0, p0)) = groups.first() {
                for &(z, pz) in &groups[1..] {
                    let mut coeffs = Vec::new();
                    for s in 0..m.ns {
                        for y in 0..2 {
                            coeffs.push((m.cell(z, s, y), m.p()[m.cell(z, s, y)] / pz));
                            coeffs.push((m.cell(z0, s, y), -m.p()[m.cell(z0, s, y)] / p0));
                        }
                    }
                    p.linear.push(Linear { coeffs, rhs: 0.0, equality: true });
                }
            }
        } else if b.eps_global.is_finite() {
            p.eps_global = Some(b.eps_global);
        }
        if b.eps_local == 0.0 {
            for s in 0..m.ns {
                let groups: Vec<(usize, f64)> = (0..m.nz)
                    .map(|z| (z, pzs[z * m.ns + s]))
                    .filter(|&(_, mass)| mass > 0.0)
                    .collect();
                if let Some(&(z0, p0)) = groups.first() {
                    for &(z, pz) in &groups[1..] {
                        let mut coeffs = Vec::new();
                        for y in 0..2 {
                            coeffs.push((m.cell(z, s, y), m.p()[m.cell(z, s, y)] / pz));
                            coeffs.push((m.cell(z0, s, y), -m.p()[m.cell(z0, s, y)] / p0));
                        }
                        p.linear.push(Linear { coeffs, rhs: 0.0, equality: true });
                    }
                }
            }
        } else if b.eps_local.is_finite() {
            p.eps_local = Some(b.eps_local);
        }
        p
    }

    fn clip(&self, q: &mut [f64]) {
        for ((v, lo), hi) in q.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Largest violation over every constraint, MI budgets in bits.
    fn violation(&self, q: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        if let Some(e) = self.eps_global {
            worst = worst.max(self.m.global_mi(q) - e);
        }
        if let Some(e) = self.eps_local {
            worst = worst.max(self.m.local_mi(q) - e);
        }
        for c in &self.linear {
            let v = c.value(q);
            worst = worst.max(if c.equality { v.abs() } else { v });
        }
        for ((v, lo), hi) in q.iter().zip(&self.lo).zip(&self.hi) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    fn lagrangian(&self, q: &[f64], mult: &Multipliers, mu: f64) -> f64 {
        let ineq = |c: f64, lambda: f64| {
            let t = (lambda + mu * c).max(0.0);
            (t * t - lambda * lambda) / (2.0 * mu)
        };
        let mut f = self.m.error(q);
        if let Some(e) = self.eps_global {
            f += ineq(self.m.global_mi(q) - e, mult.global);
        }
        if let Some(e) = self.eps_local {
            f += ineq(self.m.local_mi(q) - e, mult.local);
        }
        for (c, &lambda) in self.linear.iter().zip(&mult.linear) {
            let v = c.value(q);
            f += if c.equality { lambda * v + 0.5 * mu * v * v } else { ineq(v, lambda) };
        }
        f
    }

    fn lagrangian_gradient(&self, q: &[f64], mult: &Multipliers, mu: f64) -> Vec<f64> {
        let mut g: Vec<f64> = self
            .m
            .p()
            .chunks(2)
            .flat_map(|p| [p[0], -p[1]])
            .collect();
        if let Some(e) = self.eps_global {
            let w = (mult.global + mu * (self.m.global_mi(q) - e)).max(0.0);
            if w > 0.0 {
                for (gi, di) in g.iter_mut().zip(self.m.global_gradient(q)) {
                    *gi += w * di;
                }
            }
        }
        if let Some(e) = self.eps_local {
            let w = (mult.local + mu * (self.m.local_mi(q) - e)).max(0.0);
            if w > 0.0 {
                for (gi, di) in g.iter_mut().zip(self.m.local_gradient(q)) {
                    *gi += w * di;
                }
            }
        }
        for (c, &lambda) in self.linear.iter().zip(&mult.linear) {
            let v = c.value(q);
            let w = if c.equality { lambda + mu * v } else { (lambda + mu * v).max(0.0) };
            if w != 0.0 {
                for &(i, a) in &c.coeffs {
                    g[i] += w * a;
                }
            }
        }
        g
    }

    fn lagrangian_hessian(&self, q: &[f64], mult: &Multipliers, mu: f64) -> DMatrix<f64> {
        let n = q.len();
        let mut h = DMatrix::zeros(n, n);
        let rank_one = |h: &mut DMatrix<f64>, v: &[(usize, f64)]| {
            for &(i, a) in v {
                for &(j, b) in v {
                    h[(i, j)] += mu * a * b;
                }
            }
        };
        for (local, eps, lambda) in [(false, self.eps_global, mult.global), (true, self.eps_local, mult.local)] {
            let Some(e) = eps else { continue };
            let value = if local { self.m.local_mi(q) } else { self.m.global_mi(q) };
            let w = lambda + mu * (value - e);
            if w > 0.0 {
                self.m.add_mi_hessian(q, local, w, &mut h);
                let grad = if local { self.m.local_gradient(q) } else { self.m.global_gradient(q) };
                let dense: Vec<(usize, f64)> = grad.into_iter().enumerate().collect();
                rank_one(&mut h, &dense);
            }
        }
        for (c, &lambda) in self.linear.iter().zip(&mult.linear) {
            if c.equality || lambda + mu * c.value(q) > 0.0 {
                rank_one(&mut h, &c.coeffs);
            }
        }
        h
    }

    /// Armijo search along the projection arc `clip(q + t d)`.
    fn arc_search(&self, q: &[f64], g: &[f64], d: &[f64], f: f64, mult: &Multipliers, mu: f64) -> Option<(Vec<f64>, f64)> {
        let mut t = 1.0;
        for _ in 0..60 {
            let mut trial: Vec<f64> = q.iter().zip(d).map(|(v, di)| v + t * di).collect();
            self.clip(&mut trial);
            let descent: f64 = trial.iter().zip(q).zip(g).map(|((a, b), gi)| gi * (a - b)).sum();
            if descent == 0.0 && trial == q {
                return None;
            }
            if descent < 0.0 {
                let ft = self.lagrangian(&trial, mult, mu);
                if ft <= f + 1e-4 * descent {
                    return Some((trial, ft));
                }
            }
            t *= 0.5;
        }
        None
    }

    /// Projected Newton on the box. Free variables take a damped Newton step,
    /// variables held at a bound take a gradient step, and an Armijo search
    /// runs along the projection arc. Returns whether it converged.
    fn minimize_inner(&self, q: &mut Vec<f64>, mult: &Multipliers, mu: f64, opts: &AglfopOptions) -> bool {
        let n = q.len();
        let mut f = self.lagrangian(q, mult, mu);
        let mut quiet = 0;
        for _ in 0..opts.max_inner {
            let g = self.lagrangian_gradient(q, mult, mu);
            let pg = q
                .iter()
                .zip(&g)
                .enumerate()
                .map(|(i, (v, gi))| (v - (v - gi).clamp(self.lo[i], self.hi[i])).abs())
                .fold(0.0, f64::max);
            if pg < 1e-13 {
                return true;
            }
            let band = pg.min(1e-8);
            let free: Vec<usize> = (0..n)
                .filter(|&i| !((q[i] <= self.lo[i] + band && g[i] > 0.0) || (q[i] >= self.hi[i] - band && g[i] < 0.0)))
                .collect();
            let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
            if !free.is_empty() {
                let h = self.lagrangian_hessian(q, mult, mu);
                let k = free.len();
                let gf = DVector::from_iterator(k, free.iter().map(|&i| g[i]));
                let mut damping = pg.max(1e-12);
                while damping < 1e12 {
                    let hf = DMatrix::from_fn(k, k, |a, b| h[(free[a], free[b])] + if a == b { damping } else { 0.0 });
                    if let Some(chol) = hf.cholesky() {
                        let step = chol.solve(&gf);
                        for (a, &i) in free.iter().enumerate() {
                            d[i] = -step[a];
                        }
                        break;
                    }
                    damping *= 100.0;
                }
            }
            let accepted = self
                .arc_search(q, &g, &d, f, mult, mu)
                .or_else(|| self.arc_search(q, &g, &g.iter().map(|v| -v).collect::<Vec<_>>(), f, mult, mu));
            let Some((next, fn_)) = accepted else {
                return true;
            };
            let decrease = f - fn_;
            *q = next;
            if decrease <= opts.inner_tolerance * f.abs().max(1e-3) {
                quiet += 1;
                if quiet >= 3 {
                    return true;
                }
            } else {
                quiet = 0;
            }
            f = fn_;
        }
        false
    }

    fn default_start(&self) -> Vec<f64> {
        let mut q: Vec<f64> = (0..self.m.num_cells()).map(|c| if c % 2 == 1 { 0.75 } else { 0.25 }).collect();
        self.clip(&mut q);
        q
    }

    fn solve(&self, opts: &AglfopOptions, warm: Option<&WarmStart>) -> (Vec<f64>, Multipliers, SolveStatus, usize) {
        let mut q = warm.map_or_else(|| self.default_start(), |w| w.q.clone());
        self.clip(&mut q);
        let mut mult = warm.map_or_else(Multipliers::default, |w| w.multipliers.clone());
        mult.linear.resize(self.linear.len(), 0.0);
        if self.eps_global.is_none() {
            mult.global = 0.0;
        }
        if self.eps_local.is_none() {
            mult.local = 0.0;
        }
        let mut mu = opts.mu_start;
        let mut prev_violation = f64::INFINITY;
        let mut prev_err = f64::INFINITY;
        let mut converged = false;
        let mut outer = 0;
        let mut best: Option<(f64, Vec<f64>)> = None;
        let target = (opts.tolerance * 1e-2).max(1e-12);
        while outer < opts.max_outer {
            outer += 1;
            let inner_ok = self.minimize_inner(&mut q, &mult, mu, opts);
            let violation = self.violation(&q);
            let err = self.m.error(&q);
            if violation <= opts.tolerance && best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, q.clone()));
            }
            if let Some(e) = self.eps_global {
                mult.global = (mult.global + mu * (self.m.global_mi(&q) - e)).max(0.0);
            }
            if let Some(e) = self.eps_local {
                mult.local = (mult.local + mu * (self.m.local_mi(&q) - e)).max(0.0);
            }
            for (c, lambda) in self.linear.iter().zip(mult.linear.iter_mut()) {
                let v = c.value(&q);
                *lambda = if c.equality { *lambda + mu * v } else { (*lambda + mu * v).max(0.0) };
            }
            if inner_ok && violation <= target && (err - prev_err).abs() <= 1e-9 * err.max(1e-3) {
                converged = true;
                best = Some((err, q.clone()));
                break;
            }
            if violation > 0.25 * prev_violation {
                mu = (mu * opts.mu_growth).min(opts.mu_max);
            }
            prev_violation = violation;
            prev_err = err;
        }
        let result = match best {
            Some((_, b)) => b,
            None => self.repair(&q, opts.tolerance),
        };
        let status = if self.violation(&result) > opts.tolerance {
            SolveStatus::InfeasibleNumerics
        } else if converged {
            SolveStatus::Optimal
        } else {
            SolveStatus::MaxIters
        };
        (result, mult, status, outer)
    }

    /// Mixes `q` with the best admissible constant channel just enough to
    /// restore feasibility. Constant channels carry no information about `Z`,
    /// so by convexity the mixture meets any budget for a large enough weight.
    fn repair(&self, q: &[f64], slack: f64) -> Vec<f64> {
        if self.violation(q) <= slack {
            return q.to_vec();
        }
        let rate: f64 = self.m.approvals(q).iter().sum();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for kappa in [0.0, 1.0, rate] {
            let constant = vec![kappa; q.len()];
            if self.violation(&constant) > slack {
                continue;
            }
            let mix = |t: f64| -> Vec<f64> { q.iter().map(|v| (1.0 - t) * v + t * kappa).collect() };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.violation(&mix(mid)) <= slack {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let candidate = mix(hi);
            let err = self.m.error(&candidate);
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, candidate));
            }
        }
        best.map_or_else(|| q.to_vec(), |(_, c)| c)
    }
}

fn finish(m: &FixedMarginal, q: Vec<f64>, mult: &Multipliers, status: SolveStatus, outer: usize) -> Result<AglfopSolution> {
    let err = m.error(&q);
    Ok(AglfopSolution {
        channel: m.channel_table(&q)?,
        err,
        accuracy: 1.0 - err,
        achieved_global: m.global_mi(&q),
        achieved_local: m.local_mi(&q),
        status,
        multipliers: [mult.global, mult.local],
        outer_iters: outer,
    })
}

/// Minimum-error channel under the two budgets.
pub fn solve(m: &FixedMarginal, b: FairnessBudget, opts: &AglfopOptions) -> Result<AglfopSolution> {
    let problem = Problem::new(m, b);
    let (q, mult, status, outer) = problem.solve(opts, None);
    finish(m, q, &mult, status, outer)
}

fn solve_warm(
    m: &FixedMarginal,
    b: FairnessBudget,
    extra: &[Linear],
    bounds: Option<(&[f64], &[f64])>,
    opts: &AglfopOptions,
    warm: Option<&WarmStart>,
) -> Result<(AglfopSolution, WarmStart)> {
    let mut problem = Problem::new(m, b);
    problem.linear.extend_from_slice(extra);
    if let Some((lo, hi)) = bounds {
        problem.lo = lo.to_vec();
        problem.hi = hi.to_vec();
    }
    let (q, mult, status, outer) = problem.solve(opts, warm);
    let warm = WarmStart {
        q: q.clone(),
        multipliers: mult.clone(),
    };
    Ok((finish(m, q, &mult, status, outer)?, warm))
}

/// Accuracy over a grid of budgets.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoGrid {
    pub eps_global: Vec<f64>,
    pub eps_local: Vec<f64>,
    /// `accuracy[i][j]` for `eps_global[i]`, `eps_local[j]`.
    pub accuracy: Vec<Vec<f64>>,
    pub status: Vec<Vec<SolveStatus>>,
}

fn fmt_eps(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

impl ParetoGrid {
    /// One row per cell: `eps_global,eps_local,accuracy,status`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["eps_global", "eps_local", "accuracy", "status"])?;
        for (i, g) in self.eps_global.iter().enumerate() {
            for (j, l) in self.eps_local.iter().enumerate() {
                w.write_record([
                    fmt_eps(*g),
                    fmt_eps(*l),
                    format!("{:.10}", self.accuracy[i][j]),
                    self.status[i][j].as_str().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Axes and matrix; infinite budgets are written as the string `"inf"`.
    pub fn to_json(&self) -> serde_json::Value {
        let axis = |v: &[f64]| -> Vec<serde_json::Value> {
            v.iter()
                .map(|x| if x.is_finite() { json!(x) } else { json!("inf") })
                .collect()
        };
        json!({
            "eps_global": axis(&self.eps_global),
            "eps_local": axis(&self.eps_local),
            "accuracy": self.accuracy,
            "status": self.status,
            "units": {"eps_global": "bits", "eps_local": "bits", "accuracy": "probability"},
        })
    }

    /// Largest decrease of accuracy when either budget grows (0 if monotone).
    pub fn monotonicity_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.eps_global.len() {
            for j in 0..self.eps_local.len() {
                let a = self.accuracy[i][j];
                if i + 1 < self.eps_global.len() {
                    worst = worst.max(a - self.accuracy[i + 1][j]);
                }
                if j + 1 < self.eps_local.len() {
                    worst = worst.max(a - self.accuracy[i][j + 1]);
                }
            }
        }
        worst
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidArgument(format!("{name} axis needs at least 2 points")));
    }
    if axis.iter().any(|v| v.is_nan() || *v < 0.0) || axis.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(format!("{name} axis must be sorted and non-negative")));
    }
    Ok(())
}

/// Solves every cell of `g_axis x l_axis`. Rows run in parallel; along a
/// row the local budget is tightened step by step from a warm start.
pub fn pareto_sweep(m: &FixedMarginal, g_axis: &[f64], l_axis: &[f64], opts: &AglfopOptions) -> Result<ParetoGrid> {
    sweep_with(m, g_axis, l_axis, &[], None, opts)
}

fn sweep_with(
    m: &FixedMarginal,
    g_axis: &[f64],
    l_axis: &[f64],
    extra: &[Linear],
    bounds: Option<(&[f64], &[f64])>,
    opts: &AglfopOptions,
) -> Result<ParetoGrid> {
    check_axis("eps_global", g_axis)?;
    check_axis("eps_local", l_axis)?;
    let rows: Vec<Result<Vec<(f64, SolveStatus)>>> = g_axis
        .par_iter()
        .map(|&g| {
            let mut warm: Option<WarmStart> = None;
            let mut row = vec![(0.0, SolveStatus::InfeasibleNumerics); l_axis.len()];
            for j in (0..l_axis.len()).rev() {
                let b = FairnessBudget::new(g, l_axis[j])?;
                let (sol, w) = solve_warm(m, b, extra, bounds, opts, warm.as_ref())?;
                row[j] = (sol.accuracy, sol.status);
                warm = Some(w);
            }
            Ok(row)
        })
        .collect();
    let mut accuracy = Vec::with_capacity(g_axis.len());
    let mut status = Vec::with_capacity(g_axis.len());
    for row in rows {
        let row = row?;
        accuracy.push(row.iter().map(|r| r.0).collect());
        status.push(row.iter().map(|r| r.1).collect());
    }
    Ok(ParetoGrid {
        eps_global: g_axis.to_vec(),
        eps_local: l_axis.to_vec(),
        accuracy,
        status,
    })
}

/// Smallest error over a grid of channels, as an independent check on
/// [`solve`]. For fixed approval masses `m(z,s) = P(Yhat=1, z, s)` the best
/// error is `sum |m(z,s) - P(z,s,Y=1)|` and both budgets depend on the
/// channel only through `m`, so the grid runs over the per-group approval
/// rates `k / resolution`.
pub fn brute_force_solve(m: &FixedMarginal, b: FairnessBudget, resolution: usize) -> Result<f64> {
    const MAX_CELLS: usize = 8;
    if m.num_cells() > MAX_CELLS {
        return Err(Error::DimensionTooLarge {
            dim: m.num_cells(),
            max: MAX_CELLS,
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let (nz, ns) = (m.nz, m.ns);
    let p = m.p();
    let groups: Vec<(usize, usize, f64, f64)> = (0..nz)
        .flat_map(|z| (0..ns).map(move |s| (z, s)))
        .map(|(z, s)| {
            let c0 = m.cell(z, s, 0);
            (z, s, p[c0] + p[c0 + 1], p[c0 + 1])
        })
        .filter(|g| g.2 > 0.0)
        .collect();
    let points = resolution + 1;
    let total = points.pow(groups.len() as u32);
    let mut counter = vec![0usize; groups.len()];
    let mut best = f64::INFINITY;
    let mut joint = vec![0.0; nz * ns * 2];
    for _ in 0..total {
        let mut err = 0.0;
        for (k, &(z, s, mass, pos)) in groups.iter().enumerate() {
            let approve = mass * counter[k] as f64 / resolution as f64;
            err += (approve - pos).abs();
            joint[(z * ns + s) * 2 + 1] = approve;
            joint[(z * ns + s) * 2] = mass - approve;
        }
        if err < best {
            let tol = 1e-9;
            let ok_g = b.eps_global.is_infinite() || mi_zyhat(&joint, nz, ns, None) <= b.eps_global + tol;
            let ok_l = b.eps_local.is_infinite()
                || (0..ns).map(|s| mi_zyhat(&joint, nz, ns, Some(s))).sum::<f64>() <= b.eps_local + tol;
            if ok_g && ok_l {
                best = err;
            }
        }
        for c in counter.iter_mut() {
            *c += 1;
            if *c < points {
                break;
            }
            *c = 0;
        }
    }
    Ok(best)
}

/// `sum P(z, yhat) log P(z, yhat) / (P(z) P(yhat))` over the pooled table, or
/// the `P(S=s)`-weighted term for client `s`.
fn mi_zyhat(joint: &[f64], nz: usize, ns: usize, client: Option<usize>) -> f64 {
    let mut pzy = vec![[0.0; 2]; nz];
    for (z, row) in pzy.iter_mut().enumerate() {
        for s in 0..ns {
            if client.is_some_and(|c| c != s) {
                continue;
            }
            row[0] += joint[(z * ns + s) * 2];
            row[1] += joint[(z * ns + s) * 2 + 1];
        }
    }
    let total: f64 = pzy.iter().map(|r| r[0] + r[1]).sum();
    let py = [pzy.iter().map(|r| r[0]).sum::<f64>(), pzy.iter().map(|r| r[1]).sum::<f64>()];
    let mut mi = 0.0;
    for r in &pzy {
        let pz = r[0] + r[1];
        for y in 0..2 {
            if r[y] > 0.0 {
                mi += r[y] * (r[y] * total / (pz * py[y])).log2();
            }
        }
    }
    mi
}

/// Whether hull groups are `(z, s)` strata or `z` alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HullGrouping {
    ZS,
    Z,
}

/// Per-group convex polygon of achievable `(FPR, TPR)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedClassifierHull {
    pub grouping: HullGrouping,
    /// Keyed by `(z, s)`; `s` is `None` under [`HullGrouping::Z`]. Vertices
    /// run counter-clockwise.
    pub groups: BTreeMap<(usize, Option<usize>), Vec<(f64, f64)>>,
}

impl DerivedClassifierHull {
    /// Hull of post-processings of a fixed classifier with joint over
    /// `(Z, S, Y, Yhat)`: each group spans `(0,0)`, `(FPR,TPR)`,
    /// `(1-FPR,1-TPR)` and `(1,1)`. A group without both labels gets the
    /// full square.
    pub fn from_predictions(d: &JointDist, grouping: HullGrouping) -> Result<Self> {
        let t = d.marginal_ordered(&[Z, S, Y, YHAT])?;
        let (nz, ns) = (t.schema().card(Z)?, t.schema().card(S)?);
        if t.schema().card(Y)? != 2 || t.schema().card(YHAT)? != 2 {
            return Err(Error::InvalidArgument("`Y` and `Yhat` must be binary".into()));
        }
        let p = t.probs();
        let at = |z: usize, s: usize, y: usize, yh: usize| p[((z * ns + s) * 2 + y) * 2 + yh];
        let mut groups = BTreeMap::new();
        for z in 0..nz {
            let clients: Vec<Option<usize>> = match grouping {
                HullGrouping::ZS => (0..ns).map(Some).collect(),
                HullGrouping::Z => vec![None],
            };
            for key in clients {
                let members: Vec<usize> = key.map_or_else(|| (0..ns).collect(), |s| vec![s]);
                let mut rate = [0.0; 2];
                let mut present = true;
                for (y, r) in rate.iter_mut().enumerate() {
                    let pos: f64 = members.iter().map(|&s| at(z, s, y, 1)).sum();
                    let all: f64 = members.iter().map(|&s| at(z, s, y, 0) + at(z, s, y, 1)).sum();
                    if all <= 0.0 {
                        present = false;
                    } else {
                        *r = pos / all;
                    }
                }
                let total: f64 = members.iter().map(|&s| (0..2).map(|y| at(z, s, y, 0) + at(z, s, y, 1)).sum::<f64>()).sum();
                if total <= 0.0 {
                    continue;
                }
                let pts = if present {
                    let (fpr, tpr) = (rate[0], rate[1]);
                    vec![(0.0, 0.0), (fpr, tpr), (1.0 - fpr, 1.0 - tpr), (1.0, 1.0)]
                } else {
                    vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
                };
                groups.insert((z, key), convex_hull(&pts));
            }
        }
        Ok(Self { grouping, groups })
    }

    /// Hull of arbitrary points per group.
    pub fn from_points(grouping: HullGrouping, points: BTreeMap<(usize, Option<usize>), Vec<(f64, f64)>>) -> Result<Self> {
        let mut groups = BTreeMap::new();
        for (key, pts) in points {
            if pts.is_empty() {
                return Err(Error::InvalidArgument(format!("group {key:?} has no points")));
            }
            if pts.iter().any(|&(x, y)| !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y)) {
                return Err(Error::InvalidArgument(format!("group {key:?} has points outside [0,1]^2")));
            }
            groups.insert(key, convex_hull(&pts));
        }
        Ok(Self { grouping, groups })
    }

    /// The unit square for every group present in `m`.
    pub fn full_square(m: &FixedMarginal, grouping: HullGrouping) -> Self {
        let square = vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let mut groups = BTreeMap::new();
        for z in 0..m.nz {
            match grouping {
                HullGrouping::ZS => {
                    for s in 0..m.ns {
                        groups.insert((z, Some(s)), square.clone());
                    }
                }
                HullGrouping::Z => {
                    groups.insert((z, None), square.clone());
                }
            }
        }
        Self { grouping, groups }
    }
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-15 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-15 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Linear pieces of the hull restriction, plus tightened box bounds for
/// single-point `(z, s)` hulls.
fn hull_constraints(m: &FixedMarginal, hull: &DerivedClassifierHull) -> Result<(Vec<Linear>, Vec<f64>, Vec<f64>)> {
    let n = m.num_cells();
    let (mut lo, mut hi) = (vec![0.0; n], vec![1.0; n]);
    let mut out = Vec::new();
    let p = m.p();
    for z in 0..m.nz {
        let keys: Vec<Option<usize>> = match hull.grouping {
            HullGrouping::ZS => (0..m.ns).map(Some).collect(),
            HullGrouping::Z => vec![None],
        };
        for key in keys {
            let members: Vec<usize> = key.map_or_else(|| (0..m.ns).collect(), |s| vec![s]);
            let mass: f64 = members.iter().map(|&s| p[m.cell(z, s, 0)] + p[m.cell(z, s, 1)]).sum();
            if mass <= 0.0 {
                continue;
            }
            let vertices = hull.groups.get(&(z, key)).ok_or_else(|| {
                Error::InvalidArgument(format!("hull has no group for z={z}, s={key:?}"))
            })?;
            // the group's (FPR, TPR) as linear forms in q
            let axis = |y: usize| -> Vec<(usize, f64)> {
                let total: f64 = members.iter().map(|&s| p[m.cell(z, s, y)]).sum();
                if members.len() == 1 {
                    vec![(m.cell(z, members[0], y), 1.0)]
                } else if total > 0.0 {
                    members.iter().map(|&s| (m.cell(z, s, y), p[m.cell(z, s, y)] / total)).collect()
                } else {
                    Vec::new()
                }
            };
            let (fx, fy) = (axis(0), axis(1));
            let combine = |a: f64, b: f64| -> Vec<(usize, f64)> {
                fx.iter().map(|&(i, c)| (i, a * c)).chain(fy.iter().map(|&(i, c)| (i, b * c))).collect()
            };
            match vertices.len() {
                0 => return Err(Error::InvalidArgument("empty hull".into())),
                1 => {
                    let (px, py) = vertices[0];
                    if members.len() == 1 {
                        let s = members[0];
                        for (y, v) in [(0, px), (1, py)] {
                            lo[m.cell(z, s, y)] = v;
                            hi[m.cell(z, s, y)] = v;
                        }
                    } else {
                        out.push(Linear { coeffs: combine(1.0, 0.0), rhs: px, equality: true });
                        out.push(Linear { coeffs: combine(0.0, 1.0), rhs: py, equality: true });
                    }
                }
                2 => {
                    let ((ax, ay), (bx, by)) = (vertices[0], vertices[1]);
                    let (dx, dy) = (bx - ax, by - ay);
                    // on the line through a and b
                    out.push(Linear { coeffs: combine(-dy, dx), rhs: -dy * ax + dx * ay, equality: true });
                    // between a and b along it
                    out.push(Linear { coeffs: combine(-dx, -dy), rhs: -(dx * ax + dy * ay), equality: false });
                    out.push(Linear { coeffs: combine(dx, dy), rhs: dx * bx + dy * by, equality: false });
                }
                k => {
                    for i in 0..k {
                        let (a, b) = (vertices[i], vertices[(i + 1) % k]);
                        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                        // inside means cross(b - a, x - a) >= 0
                        out.push(Linear {
                            coeffs: combine(dy, -dx),
                            rhs: dy * a.0 - dx * a.1,
                            equality: false,
                        });
                    }
                }
            }
        }
    }
    Ok((out, lo, hi))
}

/// [`solve`] restricted to channels whose per-group `(FPR, TPR)` lies in the
/// hull.
pub fn restrict_to_hull(
    m: &FixedMarginal,
    hull: &DerivedClassifierHull,
    b: FairnessBudget,
    opts: &AglfopOptions,
) -> Result<AglfopSolution> {
    let (extra, lo, hi) = hull_constraints(m, hull)?;
    Ok(solve_warm(m, b, &extra, Some((&lo, &hi)), opts, None)?.0)
}

/// [`pareto_sweep`] with the hull restriction.
pub fn pareto_sweep_in_hull(
    m: &FixedMarginal,
    hull: &DerivedClassifierHull,
    g_axis: &[f64],
    l_axis: &[f64],
    opts: &AglfopOptions,
) -> Result<ParetoGrid> {
    let (extra, lo, hi) = hull_constraints(m, hull)?;
    sweep_with(m, g_axis, l_axis, &extra, Some((&lo, &hi)), opts)
}
