//! Partial information decomposition of disparity.
//!
//! The unique information `Unq(Z:A|B)` is the minimum of `I_Q(Z;A|B)` over
//! every joint `Q` that shares the pairwise marginals `P(Z,A)` and `P(Z,B)`
//! with the input. Redundant and masked (synergistic) information follow from
//! the two mutual informations once the unique part is known.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dist::{JointDist, S, YHAT, Z};
use crate::error::{Error, Result};

/// Entries below this are treated as exact zeros by the objective.
const FLOOR: f64 = 1e-15;

/// Objective values below this are optimal for all practical purposes.
const VALUE_FLOOR: f64 = 1e-13;

/// Added to the iterate to form the diagonal metric of the descent steps.
const METRIC_FLOOR: f64 = 1e-12;

/// Largest marginal violation tolerated in an accepted iterate.
const ACCEPT_RESIDUAL: f64 = 1e-9;

/// Decomposition terms in `(-NEGATIVE_FLOOR, 0)` are clamped to zero.
pub const NEGATIVE_FLOOR: f64 = 1e-7;

/// Variable groups playing the target and the two source roles.
#[derive(Clone, Copy, Debug)]
pub struct Sources<'a> {
    pub target: &'a [&'a str],
    pub first: &'a [&'a str],
    pub second: &'a [&'a str],
}

impl Sources<'static> {
    /// Target `Z`, sources `Yhat` and `S`.
    pub fn fairness() -> Self {
        Sources {
            target: &[Z],
            first: &[YHAT],
            second: &[S],
        }
    }
}

impl<'a> Sources<'a> {
    fn order(&self) -> Vec<&'a str> {
        self.target
            .iter()
            .chain(self.first)
            .chain(self.second)
            .copied()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Relative objective decrease counted as negligible.
    pub tolerance: f64,
    /// Consecutive negligible steps before stopping.
    pub patience: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub projection_tol: f64,
    pub projection_cycles: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            tolerance: 1e-10,
            patience: 10,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            projection_tol: 1e-11,
            projection_cycles: 10_000,
        }
    }
}

/// The polytope of joints over `(Z, A, B)` matching `P(Z,A)` and `P(Z,B)`.
///
/// Points are flat vectors laid out `z`-major, then `a`, then `b`. Entries
/// whose `P(z,a)` or `P(z,b)` vanishes are fixed at zero, so the constraints
/// split into one transportation table per value of `z`.
#[derive(Clone, Debug)]
pub struct AdmissibleSet {
    base: JointDist,
    nz: usize,
    na: usize,
    nb: usize,
    pza: Vec<f64>,
    pzb: Vec<f64>,
    active: Vec<bool>,
    fibers: Vec<Fiber>,
}

/// Support of one `z` slice: the rows `a` and columns `b` with positive mass.
#[derive(Clone, Debug)]
struct Fiber {
    index: Vec<usize>,
    rows: usize,
    cols: usize,
    row_targets: Vec<f64>,
    col_targets: Vec<f64>,
}

impl AdmissibleSet {
    pub fn new(d: &JointDist, sources: Sources<'_>) -> Result<Self> {
        if sources.target.is_empty() || sources.first.is_empty() || sources.second.is_empty() {
            return Err(Error::InvalidArgument("every role needs at least one variable".into()));
        }
        let base = d.marginal_ordered(&sources.order())?;
        let card = |names: &[&str]| -> Result<usize> {
            names.iter().map(|n| d.schema().card(n)).product()
        };
        let (nz, na, nb) = (card(sources.target)?, card(sources.first)?, card(sources.second)?);
        let p = base.probs();
        let mut pza = vec![0.0; nz * na];
        let mut pzb = vec![0.0; nz * nb];
        for z in 0..nz {
            for a in 0..na {
                for b in 0..nb {
                    let v = p[(z * na + a) * nb + b];
                    pza[z * na + a] += v;
                    pzb[z * nb + b] += v;
                }
            }
        }
        let mut active = vec![false; nz * na * nb];
        let mut fibers = Vec::new();
        for z in 0..nz {
            let rows: Vec<usize> = (0..na).filter(|&a| pza[z * na + a] > 0.0).collect();
            let cols: Vec<usize> = (0..nb).filter(|&b| pzb[z * nb + b] > 0.0).collect();
            if rows.is_empty() || cols.is_empty() {
                continue;
            }
            let mut index = Vec::with_capacity(rows.len() * cols.len());
            for &a in &rows {
                for &b in &cols {
                    let i = (z * na + a) * nb + b;
                    active[i] = true;
                    index.push(i);
                }
            }
            fibers.push(Fiber {
                index,
                rows: rows.len(),
                cols: cols.len(),
                row_targets: rows.iter().map(|&a| pza[z * na + a]).collect(),
                col_targets: cols.iter().map(|&b| pzb[z * nb + b]).collect(),
            });
        }
        Ok(Self {
            base,
            nz,
            na,
            nb,
            pza,
            pzb,
            active,
            fibers,
        })
    }

    /// The input distribution, reordered to `(Z, A, B)`.
    pub fn base(&self) -> &JointDist {
        &self.base
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nz, self.na, self.nb)
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.active[index]
    }

    /// `Q0(z,a,b) = P(z,a) P(z,b) / P(z)`, always a member.
    pub fn product_point(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.active.len()];
        for f in &self.fibers {
            let pz: f64 = f.row_targets.iter().sum();
            for i in 0..f.rows {
                for j in 0..f.cols {
                    q[f.index[i * f.cols + j]] = f.row_targets[i] * f.col_targets[j] / pz;
                }
            }
        }
        q
    }

    /// Largest violation of either marginal family or of non-negativity.
    pub fn residual(&self, q: &[f64]) -> f64 {
        let (nz, na, nb) = self.dims();
        let mut worst: f64 = 0.0;
        for z in 0..nz {
            for a in 0..na {
                let s: f64 = (0..nb).map(|b| q[(z * na + a) * nb + b]).sum();
                worst = worst.max((s - self.pza[z * na + a]).abs());
            }
            for b in 0..nb {
                let s: f64 = (0..na).map(|a| q[(z * na + a) * nb + b]).sum();
                worst = worst.max((s - self.pzb[z * nb + b]).abs());
            }
        }
        for (v, &act) in q.iter().zip(&self.active) {
            if act {
                worst = worst.max(-v);
            } else {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        q.len() == self.active.len() && self.residual(q) <= tol
    }

    /// Euclidean projection onto the polytope. Returns the point and its
    /// residual.
    pub fn project(&self, x: &[f64], tol: f64, max_cycles: usize) -> (Vec<f64>, f64) {
        self.project_scaled(x, &vec![1.0; x.len()], tol, max_cycles)
    }

    /// Projection in the metric `sum_i (y_i - x_i)^2 / w_i` with positive
    /// weights `w`. Slices whose support has at most two rows or two columns
    /// are projected exactly; larger ones by cyclic Dykstra iterations over
    /// the two marginal families and the orthant, capped at `max_cycles`.
    pub fn project_scaled(&self, x: &[f64], w: &[f64], tol: f64, max_cycles: usize) -> (Vec<f64>, f64) {
        let mut y = vec![0.0; x.len()];
        for f in &self.fibers {
            let xs: Vec<f64> = f.index.iter().map(|&i| x[i]).collect();
            let ws: Vec<f64> = f.index.iter().map(|&i| w[i]).collect();
            let ys = match (f.rows, f.cols) {
                (_, 1) => f.row_targets.clone(),
                (1, _) => f.col_targets.clone(),
                (2, k) => two_row_projection(&xs, &ws, k, f.row_targets[0], &f.col_targets),
                (m, 2) => {
                    let xt = transpose(&xs, m, 2);
                    let wt = transpose(&ws, m, 2);
                    let yt = two_row_projection(&xt, &wt, m, f.col_targets[0], &f.row_targets);
                    transpose(&yt, 2, m)
                }
                (m, k) => dykstra(&xs, &ws, m, k, &f.row_targets, &f.col_targets, tol, max_cycles),
            };
            for (&i, v) in f.index.iter().zip(ys) {
                y[i] = v;
            }
        }
        let r = self.residual(&y);
        (y, r)
    }

    fn shift_rows(&self, q: &mut [f64]) {
        let (nz, na, nb) = self.dims();
        for z in 0..nz {
            for a in 0..na {
                let row = (z * na + a) * nb;
                let count = (0..nb).filter(|b| self.active[row + b]).count();
                if count == 0 {
                    continue;
                }
                let sum: f64 = (0..nb).filter(|b| self.active[row + b]).map(|b| q[row + b]).sum();
                let shift = sum / count as f64;
                for b in 0..nb {
                    if self.active[row + b] {
                        q[row + b] -= shift;
                    }
                }
            }
        }
    }

    fn shift_cols(&self, q: &mut [f64]) {
        let (nz, na, nb) = self.dims();
        for z in 0..nz {
            for b in 0..nb {
                let cells: Vec<usize> = (0..na)
                    .map(|a| (z * na + a) * nb + b)
                    .filter(|&i| self.active[i])
                    .collect();
                if cells.is_empty() {
                    continue;
                }
                let shift = cells.iter().map(|&i| q[i]).sum::<f64>() / cells.len() as f64;
                for i in cells {
                    q[i] -= shift;
                }
            }
        }
    }

    /// Projection of a direction onto the tangent space of the marginal
    /// constraints (the orthant is ignored).
    pub fn tangent_projection(&self, g: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = g
            .iter()
            .zip(&self.active)
            .map(|(&v, &a)| if a { v } else { 0.0 })
            .collect();
        let (nz, na, nb) = self.dims();
        for _ in 0..10_000 {
            self.shift_rows(&mut d);
            self.shift_cols(&mut d);
            let mut worst: f64 = 0.0;
            for z in 0..nz {
                for a in 0..na {
                    let s: f64 = (0..nb).map(|b| d[(z * na + a) * nb + b]).sum();
                    worst = worst.max(s.abs());
                }
            }
            if worst < 1e-15 {
                break;
            }
        }
        d
    }

    /// Free dimension of the polytope ignoring the orthant.
    pub fn free_dimension(&self) -> usize {
        self.fibers.iter().map(|f| (f.rows - 1) * (f.cols - 1)).sum()
    }

    fn to_dist(&self, q: &[f64]) -> Result<JointDist> {
        JointDist::new(self.base.schema().clone(), q.iter().map(|v| v.max(0.0)).collect())
    }
}

fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; x.len()];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = x[i * cols + j];
        }
    }
    t
}

/// Exact weighted projection of a `2 x k` table onto `{row 0 sums to top,
/// column j sums to cols[j], entries >= 0}`. Eliminating row 1 leaves a
/// capped simplex, solved through its scalar multiplier.
fn two_row_projection(x: &[f64], w: &[f64], k: usize, top: f64, cols: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; k];
    let mut centre = vec![0.0; k];
    for j in 0..k {
        let (w0, w1) = (w[j], w[k + j]);
        h[j] = 1.0 / w0 + 1.0 / w1;
        centre[j] = (x[j] / w0 + (cols[j] - x[k + j]) / w1) / h[j];
    }
    let at = |nu: f64, j: usize| (centre[j] - nu / h[j]).clamp(0.0, cols[j]);
    let total = |nu: f64| (0..k).map(|j| at(nu, j)).sum::<f64>();

    let mut lo = (0..k).map(|j| (centre[j] - cols[j]) * h[j]).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|j| centre[j] * h[j]).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > top {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut nu = 0.5 * (lo + hi);
    // solve the linear piece exactly on the unclamped coordinates
    let (mut free_centre, mut free_inv, mut clamped) = (0.0, 0.0, 0.0);
    for j in 0..k {
        let v = centre[j] - nu / h[j];
        if v > 0.0 && v < cols[j] {
            free_centre += centre[j];
            free_inv += 1.0 / h[j];
        } else {
            clamped += v.clamp(0.0, cols[j]);
        }
    }
    if free_inv > 0.0 {
        nu = (free_centre - (top - clamped)) / free_inv;
    }
    let mut y = vec![0.0; 2 * k];
    for j in 0..k {
        y[j] = at(nu, j);
        y[k + j] = cols[j] - y[j];
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn dykstra(
    x: &[f64],
    w: &[f64],
    m: usize,
    k: usize,
    rows: &[f64],
    cols: &[f64],
    tol: f64,
    max_cycles: usize,
) -> Vec<f64> {
    let residual = |y: &[f64]| -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..m {
            worst = worst.max((y[i * k..(i + 1) * k].iter().sum::<f64>() - rows[i]).abs());
        }
        for j in 0..k {
            worst = worst.max(((0..m).map(|i| y[i * k + j]).sum::<f64>() - cols[j]).abs());
        }
        worst
    };
    let mut y = x.to_vec();
    let mut corr = vec![0.0; y.len()];
    for _ in 0..max_cycles {
        for i in 0..m {
            let r = &mut y[i * k..(i + 1) * k];
            let mass: f64 = w[i * k..(i + 1) * k].iter().sum();
            let shift = (rows[i] - r.iter().sum::<f64>()) / mass;
            r.iter_mut().zip(&w[i * k..(i + 1) * k]).for_each(|(v, wi)| *v += shift * wi);
        }
        for j in 0..k {
            let mass: f64 = (0..m).map(|i| w[i * k + j]).sum();
            let shift = (cols[j] - (0..m).map(|i| y[i * k + j]).sum::<f64>()) / mass;
            (0..m).for_each(|i| y[i * k + j] += shift * w[i * k + j]);
        }
        for (v, c) in y.iter_mut().zip(corr.iter_mut()) {
            let u = *v + *c;
            let clipped = u.max(0.0);
            *c = u - clipped;
            *v = clipped;
        }
        if residual(&y) < tol {
            return y;
        }
    }
    // proportional rescaling closes what is left without leaving the orthant
    for _ in 0..200 {
        for i in 0..m {
            let s: f64 = y[i * k..(i + 1) * k].iter().sum();
            if s > 0.0 {
                y[i * k..(i + 1) * k].iter_mut().for_each(|v| *v *= rows[i] / s);
            }
        }
        for j in 0..k {
            let s: f64 = (0..m).map(|i| y[i * k + j]).sum();
            if s > 0.0 {
                (0..m).for_each(|i| y[i * k + j] *= cols[j] / s);
            }
        }
        if residual(&y) < tol {
            break;
        }
    }
    y
}

/// `I_Q(Z;A|B)` in bits for a flat `(z, a, b)` table.
fn objective(q: &[f64], nz: usize, na: usize, nb: usize) -> f64 {
    let (qzb, qab, qb) = side_marginals(q, nz, na, nb);
    let mut f = 0.0;
    for z in 0..nz {
        for a in 0..na {
            for b in 0..nb {
                let v = q[(z * na + a) * nb + b];
                if v > FLOOR {
                    f += v * (v * qb[b] / (qzb[z * nb + b] * qab[a * nb + b])).log2();
                }
            }
        }
    }
    f
}

fn side_marginals(q: &[f64], nz: usize, na: usize, nb: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut qzb = vec![0.0; nz * nb];
    let mut qab = vec![0.0; na * nb];
    let mut qb = vec![0.0; nb];
    for z in 0..nz {
        for a in 0..na {
            for b in 0..nb {
                let v = q[(z * na + a) * nb + b];
                qzb[z * nb + b] += v;
                qab[a * nb + b] += v;
                qb[b] += v;
            }
        }
    }
    (qzb, qab, qb)
}

fn gradient(q: &[f64], nz: usize, na: usize, nb: usize) -> Vec<f64> {
    let (qzb, qab, qb) = side_marginals(q, nz, na, nb);
    let mut g = vec![0.0; q.len()];
    for z in 0..nz {
        for a in 0..na {
            for b in 0..nb {
                let i = (z * na + a) * nb + b;
                g[i] = (q[i].max(FLOOR) * qb[b].max(FLOOR)
                    / (qzb[z * nb + b].max(FLOOR) * qab[a * nb + b].max(FLOOR)))
                .log2();
            }
        }
    }
    g
}

/// Analytic gradient of `Q -> I_Q(Z;A|B)` in the joint coordinates, laid out
/// like `q.marginal_ordered(target ++ first ++ second)`. Zero entries use a
/// floor of `1e-15` inside the logarithm.
pub fn gradient_of_objective(q: &JointDist, sources: Sources<'_>) -> Result<Vec<f64>> {
    let set = AdmissibleSet::new(q, sources)?;
    let (nz, na, nb) = set.dims();
    Ok(gradient(set.base.probs(), nz, na, nb))
}

#[derive(Clone, Debug)]
pub struct UniqueInformation {
    pub value: f64,
    /// Joint over `(target, first, second)` attaining `value`.
    pub argmin: JointDist,
    pub iters: usize,
    pub residual: f64,
    /// Objective after every accepted step, starting at the product point.
    pub history: Vec<f64>,
}

/// `Unq(target : first | second)` in bits.
pub fn unique_information(
    d: &JointDist,
    sources: Sources<'_>,
    opts: &SolverOptions,
) -> Result<UniqueInformation> {
    let set = AdmissibleSet::new(d, sources)?;
    let (nz, na, nb) = set.dims();
    let mut x = set.product_point();
    let mut fx = objective(&x, nz, na, nb);
    let mut history = vec![fx];
    let mut residual = set.residual(&x);
    let mut step = opts.initial_step;
    let mut quiet = 0;
    let mut iters = 0;
    let mut converged = fx <= VALUE_FLOOR;

    // Steps alternate between a metric scaled by the iterate, which handles
    // entries heading to zero, and the plain Euclidean metric, which can
    // revive entries sitting at zero. Convergence needs both to stall.
    let mut g = gradient(&x, nz, na, nb);
    let mut scaled = true;
    let mut euclid_progress = 0;
    while !converged && iters < opts.max_iters {
        iters += 1;
        let w: Vec<f64> = if scaled {
            x.iter().map(|v| v + METRIC_FLOOR).collect()
        } else {
            vec![1.0; x.len()]
        };
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..x.len()).map(|i| x[i] - t * w[i] * g[i]).collect();
            let (y, r) = set.project_scaled(&trial, &w, opts.projection_tol, opts.projection_cycles);
            if r <= ACCEPT_RESIDUAL {
                let ft = objective(&y, nz, na, nb);
                let descent: f64 = (0..x.len()).map(|i| g[i] * (y[i] - x[i])).sum();
                if ft <= fx + opts.armijo * descent && ft <= fx {
                    accepted = Some((y, ft, r));
                    break;
                }
            }
            t *= opts.shrink;
        }
        let stalled = match accepted {
            None => true,
            Some((y, fy, r)) => {
                let moved = y.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let decrease = fx - fy;
                let g_new = gradient(&y, nz, na, nb);
                // Barzilai-Borwein trial step for the next iteration
                let (mut ss, mut sy) = (0.0, 0.0);
                for i in 0..x.len() {
                    let si = y[i] - x[i];
                    ss += si * si / w[i];
                    sy += si * (g_new[i] - g[i]);
                }
                step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (t * 2.0).min(1e12) };
                x = y;
                g = g_new;
                residual = r;
                history.push(fy);
                fx = fy;
                if decrease <= opts.tolerance * fx.abs() || moved < 1e-15 {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
                quiet >= opts.patience
            }
        };
        if fx <= VALUE_FLOOR {
            converged = true;
        } else if stalled {
            if scaled {
                scaled = false;
                euclid_progress = 0;
            } else {
                converged = true;
            }
            quiet = 0;
            step = opts.initial_step;
        } else if !scaled && quiet == 0 {
            euclid_progress += 1;
            if euclid_progress >= 20 {
                scaled = true;
                step = opts.initial_step;
            }
        }
    }

    if !converged {
        return Err(Error::NonConvergence {
            iters,
            best: fx,
            residual,
        });
    }

    // The input itself lies in the polytope; keep it when it does better.
    let at_input = objective(set.base.probs(), nz, na, nb);
    if at_input < fx {
        return Ok(UniqueInformation {
            value: at_input.max(0.0),
            argmin: set.base.clone(),
            iters,
            residual: 0.0,
            history,
        });
    }
    Ok(UniqueInformation {
        value: fx.max(0.0),
        argmin: set.to_dist(&x)?,
        iters,
        residual,
        history,
    })
}

/// Brute-force `Unq(target : first | second)` over a uniform grid on the
/// free coordinates of the polytope. Cost grows as `resolution^dim`.
pub fn oracle_unique_information(d: &JointDist, sources: Sources<'_>, resolution: usize) -> Result<f64> {
    const MAX_DIM: usize = 4;
    if resolution == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let set = AdmissibleSet::new(d, sources)?;
    let dim = set.free_dimension();
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
    }
    let (nz, na, nb) = set.dims();
    let schema = set.base.schema().clone();

    // free cells: the support rows/cols of each z fiber minus the last of each
    let mut free: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
    let mut fibers = Vec::new();
    for z in 0..nz {
        let rows: Vec<usize> = (0..na).filter(|&a| set.pza[z * na + a] > 0.0).collect();
        let cols: Vec<usize> = (0..nb).filter(|&b| set.pzb[z * nb + b] > 0.0).collect();
        let pz: f64 = rows.iter().map(|&a| set.pza[z * na + a]).sum();
        for &a in rows.iter().take(rows.len().saturating_sub(1)) {
            for &b in cols.iter().take(cols.len().saturating_sub(1)) {
                let lo = (set.pza[z * na + a] + set.pzb[z * nb + b] - pz).max(0.0);
                let hi = set.pza[z * na + a].min(set.pzb[z * nb + b]);
                free.push((z, a, b, lo, hi));
            }
        }
        fibers.push((z, rows, cols));
    }

    let points = resolution + 1;
    let total = points.pow(dim as u32);
    let mut best = f64::INFINITY;
    let mut q = vec![0.0; nz * na * nb];
    let mut counter = vec![0usize; dim];
    for _ in 0..total {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (k, &(z, a, b, lo, hi)) in free.iter().enumerate() {
            q[(z * na + a) * nb + b] = lo + (hi - lo) * counter[k] as f64 / resolution as f64;
        }
        let mut feasible = true;
        for (z, rows, cols) in &fibers {
            let (Some(&la), Some(&lb)) = (rows.last(), cols.last()) else {
                continue;
            };
            for &a in &rows[..rows.len() - 1] {
                let s: f64 = cols[..cols.len() - 1].iter().map(|&b| q[(z * na + a) * nb + b]).sum();
                q[(z * na + a) * nb + lb] = set.pza[z * na + a] - s;
            }
            for &b in cols {
                let s: f64 = rows[..rows.len() - 1].iter().map(|&a| q[(z * na + a) * nb + b]).sum();
                q[(z * na + la) * nb + b] = set.pzb[z * nb + b] - s;
            }
            for &a in rows {
                for &b in cols {
                    let v = &mut q[(z * na + a) * nb + b];
                    if *v < -1e-12 {
                        feasible = false;
                    }
                    *v = v.max(0.0);
                }
            }
        }
        if feasible {
            let candidate = JointDist::new(schema.clone(), q.clone())?;
            let value =
                candidate.conditional_mutual_information(sources.target, sources.first, sources.second)?;
            best = best.min(value);
        }
        for c in counter.iter_mut() {
            *c += 1;
            if *c < points {
                break;
            }
            *c = 0;
        }
    }
    if !best.is_finite() {
        return Err(Error::InvalidDistribution("no feasible grid point".into()));
    }
    Ok(best)
}

/// Decomposition terms before clamping, kept when any clamp fired.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawTerms {
    pub uni: f64,
    pub red: f64,
    pub syn: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PidDecomposition {
    pub uni: f64,
    pub red: f64,
    pub syn: f64,
    #[serde(rename = "global")]
    pub global_disparity: f64,
    #[serde(rename = "local")]
    pub local_disparity: f64,
    /// `I(Z;Yhat|S=s)` for every client with positive mass.
    pub per_client: BTreeMap<usize, f64>,
    pub iters: usize,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawTerms>,
}

/// PID of the global disparity `I(Z;Yhat)` and local disparity `I(Z;Yhat|S)`.
pub fn decompose(d: &JointDist, opts: &SolverOptions) -> Result<PidDecomposition> {
    let mut out = decompose_sources(d, Sources::fairness(), opts)?;
    out.per_client = d
        .conditional_mi_terms(&[Z], &[YHAT], &[S])?
        .into_iter()
        .map(|t| (t.condition, t.value))
        .collect();
    Ok(out)
}

/// PID of `I(target; first)` and `I(target; first | second)` for arbitrary
/// variable groups. `per_client` is left empty.
pub fn decompose_sources(
    d: &JointDist,
    sources: Sources<'_>,
    opts: &SolverOptions,
) -> Result<PidDecomposition> {
    let unique = unique_information(d, sources, opts)?;
    let global = d.mutual_information(sources.target, sources.first)?;
    let local = d.conditional_mutual_information(sources.target, sources.first, sources.second)?;
    let raw = RawTerms {
        uni: unique.value,
        red: global - unique.value,
        syn: local - unique.value,
    };
    let clamp = |term: &'static str, v: f64| -> Result<f64> {
        if v < -NEGATIVE_FLOOR {
            Err(Error::NegativeTerm { term, value: v })
        } else {
            Ok(v.max(0.0))
        }
    };
    let (uni, red, syn) = (clamp("uni", raw.uni)?, clamp("red", raw.red)?, clamp("syn", raw.syn)?);
    let clamped = uni != raw.uni || red != raw.red || syn != raw.syn;
    Ok(PidDecomposition {
        uni,
        red,
        syn,
        global_disparity: global,
        local_disparity: local,
        per_client: BTreeMap::new(),
        iters: unique.iters,
        residual: unique.residual,
        raw: clamped.then_some(raw),
    })
}

impl PidDecomposition {
    pub fn interaction_information(&self) -> f64 {
        self.red - self.syn
    }

    /// Single-row fixed-width table.
    pub fn table(&self) -> String {
        render_table(&[("", self)])
    }
}

/// Fixed-width table with columns Local, Global, Unique, Redundant, Masked
/// (all in bits), one row per labelled decomposition.
pub fn render_table(rows: &[(&str, &PidDecomposition)]) -> String {
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let mut out = String::new();
    if label_width > 0 {
        let _ = write!(out, "{:<label_width$}  ", "");
    }
    let _ = writeln!(
        out,
        "{:>10} {:>10} {:>10} {:>10} {:>10}",
        "Local", "Global", "Unique", "Redundant", "Masked"
    );
    for (label, p) in rows {
        if label_width > 0 {
            let _ = write!(out, "{label:<label_width$}  ");
        }
        let _ = writeln!(
            out,
            "{:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            p.local_disparity, p.global_disparity, p.uni, p.red, p.syn
        );
    }
    out
}

/// Small joints with known decompositions.
pub mod canonical {
    use crate::dist::{JointDist, VariableSchema, S, YHAT, Z};

    fn fairness_joint(f: impl Fn(usize, usize, usize) -> f64) -> JointDist {
        let schema = VariableSchema::new([(Z, 2), (S, 2), (YHAT, 2)]).expect("valid schema");
        let mut w = vec![0.0; 8];
        let mut state = [0; 3];
        for (i, slot) in w.iter_mut().enumerate() {
            schema.decode(i, &mut state);
            *slot = f(state[0], state[1], state[2]);
        }
        JointDist::new(schema, w).expect("valid weights")
    }

    /// `Yhat = Z`, with `Z` and `S` independent fair coins.
    pub fn pure_uniqueness() -> JointDist {
        fairness_joint(|z, _, y| if y == z { 0.25 } else { 0.0 })
    }

    /// `Yhat = S`, `S` a fair coin and `P(Z = S) = agreement`.
    pub fn pure_redundancy(agreement: f64) -> JointDist {
        fairness_joint(|z, s, y| {
            if y != s {
                0.0
            } else if z == s {
                0.5 * agreement
            } else {
                0.5 * (1.0 - agreement)
            }
        })
    }

    /// `Yhat = Z xor S` with `Z` and `S` independent fair coins.
    pub fn pure_synergy() -> JointDist {
        fairness_joint(|z, s, y| if y == z ^ s { 0.25 } else { 0.0 })
    }

    /// Three uniform bits `Z = (Z1, Z2, Z3)` and a noise bit `N`, with
    /// `A = (Z1, Z2, Z3 xor N)` and `B = (Z2, N)`. Each of unique, redundant
    /// and synergistic information about `Z` equals one bit.
    pub fn three_bit_copy() -> JointDist {
        let schema = VariableSchema::new([("Z", 8), ("A", 8), ("B", 4)]).expect("valid schema");
        let mut w = vec![0.0; schema.num_states()];
        for z in 0..8 {
            let (z1, z2, z3) = (z >> 2 & 1, z >> 1 & 1, z & 1);
            for n in 0..2 {
                let a = z1 << 2 | z2 << 1 | (z3 ^ n);
                let b = z2 << 1 | n;
                w[schema.index(&[z, a, b])] += 1.0 / 16.0;
            }
        }
        JointDist::new(schema, w).expect("valid weights")
    }
}
