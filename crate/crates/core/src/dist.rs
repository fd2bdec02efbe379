//! Dense joint distributions over small discrete alphabets and the
//! information measures computed from them.
//!
//! Every measure is reported in bits. Probabilities are stored row-major
//! with the last variable of the schema varying fastest.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the sensitive attribute.
pub const Z: &str = "Z";
/// Name of the client identity.
pub const S: &str = "S";
/// Name of the true label.
pub const Y: &str = "Y";
/// Name of the model prediction.
pub const YHAT: &str = "Yhat";

/// Largest joint state space a schema may describe.
pub const MAX_STATES: usize = 10_000_000;

/// Tolerance on the total mass of a freshly constructed distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub card: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableSchema {
    vars: Vec<Variable>,
    strides: Vec<usize>,
    states: usize,
}

impl VariableSchema {
    pub fn new<I, N>(vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (N, usize)>,
        N: Into<String>,
    {
        let vars: Vec<Variable> = vars
            .into_iter()
            .map(|(name, card)| Variable {
                name: name.into(),
                card,
            })
            .collect();
        Self::from_variables(vars)
    }

    pub fn from_variables(vars: Vec<Variable>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut states: u128 = 1;
        for v in &vars {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            if v.card == 0 {
                return Err(Error::ZeroCardinality {
                    name: v.name.clone(),
                });
            }
            states = states.saturating_mul(v.card as u128);
        }
        if states > MAX_STATES as u128 {
            return Err(Error::TooManyStates {
                states,
                limit: MAX_STATES,
            });
        }
        let mut strides = vec![1; vars.len()];
        for i in (0..vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * vars[i + 1].card;
        }
        Ok(Self {
            vars,
            strides,
            states: states as usize,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn card(&self, name: &str) -> Result<usize> {
        Ok(self.vars[self.index_of(name)?].card)
    }

    /// True when some variable has a single-letter alphabet.
    pub fn is_degenerate(&self) -> bool {
        self.vars.iter().any(|v| v.card < 2)
    }

    /// Flat index of a joint state.
    pub fn index(&self, state: &[usize]) -> usize {
        debug_assert_eq!(state.len(), self.vars.len());
        state.iter().zip(&self.strides).map(|(s, st)| s * st).sum()
    }

    /// Inverse of [`index`](Self::index).
    pub fn decode(&self, mut index: usize, state: &mut [usize]) {
        for (slot, stride) in state.iter_mut().zip(&self.strides) {
            *slot = index / stride;
            index %= stride;
        }
    }

    fn select(&self, positions: &[usize]) -> VariableSchema {
        let vars = positions.iter().map(|&i| self.vars[i].clone()).collect();
        VariableSchema::from_variables(vars).expect("sub-schema of a valid schema")
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let i = self.index_of(name)?;
            if out.contains(&i) {
                return Err(Error::DuplicateVariable(name.to_string()));
            }
            out.push(i);
        }
        Ok(out)
    }
}

/// A probability table over every joint state of a [`VariableSchema`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointDistRepr", into = "JointDistRepr")]
pub struct JointDist {
    schema: VariableSchema,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointDistRepr {
    schema: Vec<Variable>,
    probs: Vec<f64>,
}

impl TryFrom<JointDistRepr> for JointDist {
    type Error = Error;

    fn try_from(repr: JointDistRepr) -> Result<Self> {
        let schema = VariableSchema::from_variables(repr.schema)?;
        let total: f64 = repr.probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        JointDist::new(schema, repr.probs)
    }
}

impl From<JointDist> for JointDistRepr {
    fn from(d: JointDist) -> Self {
        Self {
            schema: d.schema.vars,
            probs: d.probs,
        }
    }
}

impl JointDist {
    /// Builds a distribution from non-negative weights, normalizing them.
    pub fn new(schema: VariableSchema, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != schema.num_states() {
            return Err(Error::ShapeMismatch {
                expected: schema.num_states(),
                got: weights.len(),
            });
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "entry {bad} is negative or not finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySample);
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { schema, probs })
    }

    /// Empirical distribution with additive smoothing:
    /// `(count + smoothing) / (total + smoothing * states)`.
    pub fn from_counts(schema: VariableSchema, counts: &[u64], smoothing: f64) -> Result<Self> {
        if counts.len() != schema.num_states() {
            return Err(Error::ShapeMismatch {
                expected: schema.num_states(),
                got: counts.len(),
            });
        }
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "smoothing must be a finite non-negative number, got {smoothing}"
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptySample);
        }
        let denom = total as f64 + smoothing * counts.len() as f64;
        let probs = counts
            .iter()
            .map(|&c| (c as f64 + smoothing) / denom)
            .collect();
        Ok(Self { schema, probs })
    }

    /// Empirical distribution of observed joint states.
    pub fn from_observations<I, T>(schema: VariableSchema, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[usize]>,
    {
        let mut counts = vec![0u64; schema.num_states()];
        for row in rows {
            let row = row.as_ref();
            if row.len() != schema.len() {
                return Err(Error::ShapeMismatch {
                    expected: schema.len(),
                    got: row.len(),
                });
            }
            for (v, var) in row.iter().zip(schema.variables()) {
                if *v >= var.card {
                    return Err(Error::InvalidArgument(format!(
                        "value {v} out of range for `{}` (cardinality {})",
                        var.name, var.card
                    )));
                }
            }
            counts[schema.index(row)] += 1;
        }
        Self::from_counts(schema, &counts, 0.0)
    }

    pub fn uniform(schema: VariableSchema) -> Self {
        let n = schema.num_states();
        Self {
            schema,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(schema: VariableSchema, state: &[usize]) -> Result<Self> {
        let mut w = vec![0.0; schema.num_states()];
        w[schema.index(state)] = 1.0;
        Self::new(schema, w)
    }

    pub fn schema(&self) -> &VariableSchema {
        &self.schema
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn prob(&self, state: &[usize]) -> f64 {
        self.probs[self.schema.index(state)]
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums out every variable not in `keep`. The result lists the kept
    /// variables in the order they appear in this schema.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointDist> {
        let mut positions = self.schema.positions(keep)?;
        positions.sort_unstable();
        Ok(self.sum_onto(&positions))
    }

    /// Like [`marginal`](Self::marginal), but the result lists the variables
    /// in exactly the order given.
    pub fn marginal_ordered(&self, order: &[&str]) -> Result<JointDist> {
        let positions = self.schema.positions(order)?;
        Ok(self.sum_onto(&positions))
    }

    fn sum_onto(&self, positions: &[usize]) -> JointDist {
        let target = self.schema.select(positions);
        if positions.len() == self.schema.len() && positions.iter().enumerate().all(|(i, &p)| i == p)
        {
            return self.clone();
        }
        // stride in the target table of each source variable (0 if summed out)
        let mut weight = vec![0usize; self.schema.len()];
        for (k, &p) in positions.iter().enumerate() {
            weight[p] = target.strides[k];
        }
        let mut out = vec![0.0; target.num_states()];
        let cards: Vec<usize> = self.schema.vars.iter().map(|v| v.card).collect();
        let mut state = vec![0usize; cards.len()];
        let mut offset = 0usize;
        for &p in &self.probs {
            out[offset] += p;
            // odometer increment
            for i in (0..cards.len()).rev() {
                state[i] += 1;
                offset += weight[i];
                if state[i] < cards[i] {
                    break;
                }
                offset -= weight[i] * cards[i];
                state[i] = 0;
            }
        }
        JointDist {
            schema: target,
            probs: out,
        }
    }

    /// Shannon entropy (bits) of the marginal on `vars`.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        Ok(entropy_bits(self.marginal(vars)?.probs()))
    }

    /// `I(A;B) = H(A) + H(B) - H(A,B)` in bits.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        check_disjoint(&[a, b])?;
        let ab: Vec<&str> = a.iter().chain(b).copied().collect();
        let value = self.entropy(a)? + self.entropy(b)? - self.entropy(&ab)?;
        Ok(value.max(0.0))
    }

    /// `I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)` in bits.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        check_disjoint(&[a, b, c])?;
        if c.is_empty() {
            return self.mutual_information(a, b);
        }
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        let value = self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?;
        Ok(value.max(0.0))
    }

    /// Per-condition view of `I(A;B|C)`: one term `I(A;B|C=c)` for every
    /// state `c` of the conditioning set that carries positive mass, in
    /// row-major order of `c` (as listed).
    pub fn conditional_mi_terms(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<Vec<ConditionTerm>> {
        check_disjoint(&[a, b, c])?;
        let order: Vec<&str> = c.iter().chain(a).chain(b).copied().collect();
        let m = self.marginal_ordered(&order)?;
        let c_states: usize = c.iter().map(|n| self.schema.card(n)).product::<Result<usize>>()?;
        let a_states: usize = a.iter().map(|n| self.schema.card(n)).product::<Result<usize>>()?;
        let b_states: usize = b.iter().map(|n| self.schema.card(n)).product::<Result<usize>>()?;
        let block = a_states * b_states;
        let mut out = Vec::new();
        for cs in 0..c_states {
            let slice = &m.probs[cs * block..(cs + 1) * block];
            let weight: f64 = slice.iter().sum();
            if weight <= 0.0 {
                continue;
            }
            let cond: Vec<f64> = slice.iter().map(|p| p / weight).collect();
            out.push(ConditionTerm {
                condition: cs,
                weight,
                value: table_mi(&cond, a_states, b_states),
            });
        }
        Ok(out)
    }

    /// Conditional table `P(target | given)`. Rows for given-states with no
    /// mass are filled uniformly and flagged through `given_mass`.
    pub fn conditional(&self, target: &[&str], given: &[&str]) -> Result<ConditionalTable> {
        check_disjoint(&[target, given])?;
        let order: Vec<&str> = given.iter().chain(target).copied().collect();
        let m = self.marginal_ordered(&order)?;
        let given_schema = self.schema.select(&self.schema.positions(given)?);
        let target_schema = self.schema.select(&self.schema.positions(target)?);
        let t = target_schema.num_states();
        let mut entries = m.probs;
        let mut given_mass = Vec::with_capacity(given_schema.num_states());
        for row in entries.chunks_mut(t) {
            let mass: f64 = row.iter().sum();
            given_mass.push(mass);
            if mass > 0.0 {
                row.iter_mut().for_each(|p| *p /= mass);
            } else {
                row.iter_mut().for_each(|p| *p = 1.0 / t as f64);
            }
        }
        Ok(ConditionalTable {
            target: target_schema,
            given: given_schema,
            entries,
            given_mass,
        })
    }

    /// Half the L1 distance between two distributions on the same schema.
    pub fn total_variation(&self, other: &JointDist) -> Result<f64> {
        if self.schema != other.schema {
            return Err(Error::SchemaMismatch(
                "total variation needs identical schemas".into(),
            ));
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(p, q)| (p - q).abs()).sum::<f64>())
    }

    /// Product of the marginals on `a` and `b`, laid out on the schema of the
    /// marginal on `a ∪ b` (in schema order).
    pub fn product_of_marginals(&self, a: &[&str], b: &[&str]) -> Result<JointDist> {
        check_disjoint(&[a, b])?;
        let ab: Vec<&str> = a.iter().chain(b).copied().collect();
        let joint = self.marginal(&ab)?;
        let pa = self.marginal(a)?;
        let pb = self.marginal(b)?;
        let a_pos: Vec<usize> = pa.schema.names().map(|n| joint.schema.index_of(n)).collect::<Result<_>>()?;
        let b_pos: Vec<usize> = pb.schema.names().map(|n| joint.schema.index_of(n)).collect::<Result<_>>()?;
        let mut state = vec![0; joint.schema.len()];
        let mut probs = vec![0.0; joint.schema.num_states()];
        let mut sa = vec![0; a_pos.len()];
        let mut sb = vec![0; b_pos.len()];
        for (i, slot) in probs.iter_mut().enumerate() {
            joint.schema.decode(i, &mut state);
            a_pos.iter().zip(sa.iter_mut()).for_each(|(&p, s)| *s = state[p]);
            b_pos.iter().zip(sb.iter_mut()).for_each(|(&p, s)| *s = state[p]);
            *slot = pa.prob(&sa) * pb.prob(&sb);
        }
        Ok(JointDist {
            schema: joint.schema,
            probs,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Reads a CSV whose header names the variables. When the last column is
    /// `p`, `prob` or `probability` each row is an atom (state + weight);
    /// otherwise each row is one observation. Cardinalities are inferred as
    /// `max value + 1`, at least 2.
    pub fn from_atom_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(Error::EmptySample);
        }
        let weighted = matches!(
            headers.last().map(|h| h.to_ascii_lowercase()).as_deref(),
            Some("p" | "prob" | "probability")
        );
        let n_vars = if weighted { headers.len() - 1 } else { headers.len() };
        if n_vars == 0 {
            return Err(Error::InvalidArgument("CSV has no variable columns".into()));
        }
        let mut atoms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut maxima = vec![0usize; n_vars];
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != headers.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    record.len(),
                    headers.len()
                )));
            }
            let mut state = Vec::with_capacity(n_vars);
            for (k, field) in record.iter().take(n_vars).enumerate() {
                let v: usize = field.parse().map_err(|_| {
                    Error::InvalidArgument(format!("row {}: `{field}` is not a state index", line + 2))
                })?;
                maxima[k] = maxima[k].max(v);
                state.push(v);
            }
            let w = if weighted {
                let field = &record[n_vars];
                field.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("row {}: `{field}` is not a probability", line + 2))
                })?
            } else {
                1.0
            };
            *atoms.entry(state).or_insert(0.0) += w;
        }
        if atoms.is_empty() {
            return Err(Error::EmptySample);
        }
        let schema = VariableSchema::new(
            headers
                .iter()
                .take(n_vars)
                .zip(&maxima)
                .map(|(h, m)| (h.clone(), (m + 1).max(2))),
        )?;
        let mut weights = vec![0.0; schema.num_states()];
        for (state, w) in atoms {
            weights[schema.index(&state)] += w;
        }
        Self::new(schema, weights)
    }

    /// Writes the support as an atom list with a trailing `p` column.
    pub fn write_atom_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = self.schema.names().map(str::to_string).collect();
        header.push("p".into());
        w.write_record(&header)?;
        let mut state = vec![0; self.schema.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            self.schema.decode(i, &mut state);
            let mut row: Vec<String> = state.iter().map(|s| s.to_string()).collect();
            row.push(format!("{p:.17}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One summand of a conditional mutual information.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionTerm {
    /// Flat index of the conditioning state.
    pub condition: usize,
    /// `P(C = c)`.
    pub weight: f64,
    /// `I(A;B | C = c)` in bits.
    pub value: f64,
}

/// `P(target | given)` laid out given-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable {
    target: VariableSchema,
    given: VariableSchema,
    entries: Vec<f64>,
    given_mass: Vec<f64>,
}

impl ConditionalTable {
    /// Builds a table from explicit rows; `given_mass` marks which rows carry
    /// probability (rows without mass are not checked).
    pub fn new(
        target: VariableSchema,
        given: VariableSchema,
        entries: Vec<f64>,
        given_mass: Vec<f64>,
    ) -> Result<Self> {
        let expected = target.num_states() * given.num_states();
        if entries.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: entries.len(),
            });
        }
        if given_mass.len() != given.num_states() {
            return Err(Error::ShapeMismatch {
                expected: given.num_states(),
                got: given_mass.len(),
            });
        }
        let table = Self {
            target,
            given,
            entries,
            given_mass,
        };
        table.check(NORMALIZATION_TOL)?;
        Ok(table)
    }

    pub fn target(&self) -> &VariableSchema {
        &self.target
    }

    pub fn given(&self) -> &VariableSchema {
        &self.given
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn given_mass(&self) -> &[f64] {
        &self.given_mass
    }

    pub fn row(&self, given_state: usize) -> &[f64] {
        let t = self.target.num_states();
        &self.entries[given_state * t..(given_state + 1) * t]
    }

    pub fn prob(&self, target_state: usize, given_state: usize) -> f64 {
        self.row(given_state)[target_state]
    }

    /// Verifies that every row with positive mass is a distribution.
    pub fn check(&self, tol: f64) -> Result<()> {
        for g in 0..self.given.num_states() {
            if self.given_mass[g] <= 0.0 {
                continue;
            }
            let row = self.row(g);
            if row.iter().any(|p| !p.is_finite() || *p < -tol) {
                return Err(Error::InvalidDistribution(format!("row {g} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidDistribution(format!("row {g} sums to {s}")));
            }
        }
        Ok(())
    }
}

/// Signed interaction information `I(Z;Yhat) - I(Z;Yhat|S)`.
pub fn interaction_information(d: &JointDist) -> Result<f64> {
    Ok(d.mutual_information(&[Z], &[YHAT])? - d.conditional_mutual_information(&[Z], &[YHAT], &[S])?)
}

pub fn total_variation(p: &JointDist, q: &JointDist) -> Result<f64> {
    p.total_variation(q)
}

/// Entropy in bits of a probability vector, with `0 log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

/// Mutual information (bits) of a row-major `rows x cols` joint table.
pub(crate) fn table_mi(table: &[f64], rows: usize, cols: usize) -> f64 {
    let mut row_m = vec![0.0; rows];
    let mut col_m = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let p = table[r * cols + c];
            row_m[r] += p;
            col_m[c] += p;
        }
    }
    let mut mi = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let p = table[r * cols + c];
            if p > 0.0 {
                mi += p * (p / (row_m[r] * col_m[c])).log2();
            }
        }
    }
    mi.max(0.0)
}

fn check_disjoint(sets: &[&[&str]]) -> Result<()> {
    let mut seen = HashSet::new();
    for set in sets {
        for name in *set {
            if !seen.insert(*name) {
                return Err(Error::OverlappingVariables(name.to_string()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn binary(names: &[&str]) -> VariableSchema {
        VariableSchema::new(names.iter().map(|n| (*n, 2))).unwrap()
    }

    /// Example 2: Yhat = S, P(Z = S) = 0.9, S uniform.
    fn pure_redundancy() -> JointDist {
        let schema = binary(&[Z, S, YHAT]);
        let mut w = vec![0.0; 8];
        for z in 0..2 {
            for s in 0..2 {
                w[schema.index(&[z, s, s])] = 0.5 * if z == s { 0.9 } else { 0.1 };
            }
        }
        JointDist::new(schema, w).unwrap()
    }

    /// Example 3: Yhat = Z xor S with Z, S iid uniform.
    fn pure_synergy() -> JointDist {
        let schema = binary(&[Z, S, YHAT]);
        let mut w = vec![0.0; 8];
        for z in 0..2 {
            for s in 0..2 {
                w[schema.index(&[z, s, z ^ s])] = 0.25;
            }
        }
        JointDist::new(schema, w).unwrap()
    }

    #[test]
    fn from_counts_normalizes() {
        let d = JointDist::from_counts(binary(&["A", "B"]), &[1, 1, 1, 1], 0.0).unwrap();
        assert!(d.probs().iter().all(|&p| p == 0.25));

        let d = JointDist::from_counts(binary(&["A", "B"]), &[9, 1, 1, 9], 0.0).unwrap();
        for (p, e) in d.probs().iter().zip([0.45, 0.05, 0.05, 0.45]) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-15);
        }

        let err = JointDist::from_counts(binary(&["A", "B"]), &[0, 0, 0, 0], 0.0).unwrap_err();
        assert!(matches!(err, Error::EmptySample));
    }

    #[test]
    fn smoothing_adds_pseudocounts() {
        let d = JointDist::from_counts(binary(&["A"]), &[3, 0], 1.0).unwrap();
        assert_abs_diff_eq!(d.probs()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probs()[1], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn schema_validation() {
        assert!(matches!(
            VariableSchema::new([("A", 2), ("A", 3)]),
            Err(Error::DuplicateVariable(_))
        ));
        assert!(matches!(
            VariableSchema::new([("A", 10_000), ("B", 10_000)]),
            Err(Error::TooManyStates { .. })
        ));
        let s = VariableSchema::new([("A", 1), ("B", 2)]).unwrap();
        assert!(s.is_degenerate());
    }

    #[test]
    fn marginal_examples() {
        let u = JointDist::uniform(binary(&[Z, S]));
        let m = u.marginal(&[Z]).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.5]);

        let m = pure_redundancy().marginal(&[Z]).unwrap();
        assert_abs_diff_eq!(m.probs()[0], 0.5, epsilon = 1e-15);

        let d = pure_synergy();
        assert_eq!(d.marginal(&[Z, S, YHAT]).unwrap(), d);
        assert!(matches!(d.marginal(&["W"]), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn marginal_ordered_permutes() {
        let d = pure_redundancy();
        let m = d.marginal_ordered(&[YHAT, Z]).unwrap();
        let names: Vec<&str> = m.schema().names().collect();
        assert_eq!(names, vec![YHAT, Z]);
        // P(Yhat = 0, Z = 1) = P(S = 0, Z = 1) = 0.05
        assert_abs_diff_eq!(m.prob(&[0, 1]), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn entropy_examples() {
        let schema = binary(&["A"]);
        let half = JointDist::new(schema.clone(), vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(half.entropy(&["A"]).unwrap(), 1.0, epsilon = 1e-15);
        let skew = JointDist::new(schema.clone(), vec![0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(skew.entropy(&["A"]).unwrap(), 0.4690, epsilon = 1e-4);
        let point = JointDist::point_mass(schema, &[1]).unwrap();
        assert_eq!(point.entropy(&["A"]).unwrap(), 0.0);
    }

    #[test]
    fn mutual_information_examples() {
        let u = JointDist::uniform(binary(&["A", "B"]));
        assert_abs_diff_eq!(u.mutual_information(&["A"], &["B"]).unwrap(), 0.0, epsilon = 1e-15);

        let red = pure_redundancy();
        let expected = 1.0 - binary_entropy(0.9);
        assert_abs_diff_eq!(red.mutual_information(&[Z], &[YHAT]).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.5310, epsilon = 1e-4);

        // Yhat = Z, Z uniform
        let schema = binary(&[Z, YHAT]);
        let d = JointDist::new(schema, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(d.mutual_information(&[Z], &[YHAT]).unwrap(), 1.0, epsilon = 1e-15);

        assert!(matches!(
            d.mutual_information(&[Z], &[Z]),
            Err(Error::OverlappingVariables(_))
        ));
    }

    #[test]
    fn conditional_mutual_information_examples() {
        let red = pure_redundancy();
        assert_abs_diff_eq!(
            red.conditional_mutual_information(&[Z], &[YHAT], &[S]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let syn = pure_synergy();
        assert_abs_diff_eq!(
            syn.conditional_mutual_information(&[Z], &[YHAT], &[S]).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        // C independent of (A, B): I(A;B|C) = I(A;B)
        let ab = JointDist::new(binary(&["A", "B"]), vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let c = [0.7, 0.3];
        let schema = binary(&["A", "B", "C"]);
        let mut w = vec![0.0; 8];
        for i in 0..8 {
            let mut st = [0; 3];
            schema.decode(i, &mut st);
            w[i] = ab.prob(&st[..2]) * c[st[2]];
        }
        let d = JointDist::new(schema, w).unwrap();
        assert_abs_diff_eq!(
            d.conditional_mutual_information(&["A"], &["B"], &["C"]).unwrap(),
            ab.mutual_information(&["A"], &["B"]).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn conditional_terms_average_to_cmi() {
        let syn = pure_synergy();
        let terms = syn.conditional_mi_terms(&[Z], &[YHAT], &[S]).unwrap();
        assert_eq!(terms.len(), 2);
        for t in &terms {
            assert_abs_diff_eq!(t.weight, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(t.value, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn interaction_information_examples() {
        let expected = 1.0 - binary_entropy(0.9);
        assert_abs_diff_eq!(interaction_information(&pure_redundancy()).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(interaction_information(&pure_synergy()).unwrap(), -1.0, epsilon = 1e-12);
        let indep = JointDist::uniform(binary(&[Z, S, YHAT]));
        assert_abs_diff_eq!(interaction_information(&indep).unwrap(), 0.0, epsilon = 1e-12);
        let missing = JointDist::uniform(binary(&[Z, YHAT]));
        assert!(interaction_information(&missing).is_err());
    }

    #[test]
    fn total_variation_examples() {
        let schema = binary(&["A", "B"]);
        let p = JointDist::new(schema.clone(), vec![0.45, 0.05, 0.05, 0.45]).unwrap();
        assert_eq!(p.total_variation(&p).unwrap(), 0.0);
        let prod = p.product_of_marginals(&["A"], &["B"]).unwrap();
        for &q in prod.probs() {
            assert_abs_diff_eq!(q, 0.25, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.total_variation(&prod).unwrap(), 0.4, epsilon = 1e-15);

        let a = JointDist::point_mass(schema.clone(), &[0, 0]).unwrap();
        let b = JointDist::point_mass(schema, &[1, 1]).unwrap();
        assert_eq!(a.total_variation(&b).unwrap(), 1.0);

        let other = JointDist::uniform(binary(&["A"]));
        assert!(matches!(p.total_variation(&other), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn conditional_table_rows_sum_to_one() {
        let d = pure_redundancy();
        let t = d.conditional(&[YHAT], &[Z, S]).unwrap();
        t.check(1e-12).unwrap();
        // Yhat = S deterministically
        assert_eq!(t.prob(1, 1), 1.0);
        assert_eq!(t.prob(0, 2), 1.0);
    }

    #[test]
    fn json_roundtrip_and_layout() {
        let d = pure_synergy();
        let s = d.to_json_string().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"][0]["name"], "Z");
        assert_eq!(v["schema"][2]["card"], 2);
        assert_eq!(v["probs"].as_array().unwrap().len(), 8);
        assert_eq!(JointDist::from_json_str(&s).unwrap(), d);

        let bad = r#"{"schema":[{"name":"A","card":2}],"probs":[0.2,0.2]}"#;
        assert!(JointDist::from_json_str(bad).is_err());
    }

    #[test]
    fn atom_csv_import() {
        let csv = "Z,S,Yhat,p\n0,0,0,0.45\n1,0,0,0.05\n0,1,1,0.05\n1,1,1,0.45\n";
        let d = JointDist::from_atom_csv(csv.as_bytes()).unwrap();
        assert_abs_diff_eq!(
            d.mutual_information(&[Z], &[YHAT]).unwrap(),
            1.0 - binary_entropy(0.9),
            epsilon = 1e-12
        );

        let obs = "Z,S\n0,0\n1,1\n1,1\n0,0\n";
        let d = JointDist::from_atom_csv(obs.as_bytes()).unwrap();
        assert_eq!(d.prob(&[1, 1]), 0.5);

        assert!(JointDist::from_atom_csv("".as_bytes()).is_err());
        assert!(JointDist::from_atom_csv("Z,S,p\n".as_bytes()).is_err());
    }
}
