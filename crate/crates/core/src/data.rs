//! Synthetic and Adult datasets, and the client-partitioning scenarios.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dist::{JointDist, VariableSchema, S, Y, Z};
use crate::error::{Error, Result};
use crate::fl::ClientDataset;

/// Identifies the preprocessing applied by [`adult_ingest`].
pub const ADULT_PREPROCESSING: &str = "adult-onehot-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    Adult,
}

/// Row-major feature matrix with binary group and label columns.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularDataset {
    pub features: Vec<f64>,
    pub dim: usize,
    pub z: Vec<u8>,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
    pub provenance: Provenance,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut features = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        Self {
            features,
            dim: self.dim,
            z: idx.iter().map(|&i| self.z[i]).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            provenance: self.provenance,
        }
    }

    /// `n` rows drawn without replacement, kept in file order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot subsample {n} rows from {}",
                self.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, self.len(), n).into_vec();
        idx.sort_unstable();
        Ok(self.select(&idx))
    }

    /// Random `(train, holdout)` split with `holdout_fraction` of the rows held out.
    pub fn split(&self, holdout_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&holdout_fraction) {
            return Err(Error::InvalidArgument("holdout fraction must be in [0, 1)".into()));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((self.len() as f64) * holdout_fraction).round() as usize;
        let (mut test, mut train) = (idx[..cut].to_vec(), idx[cut..].to_vec());
        test.sort_unstable();
        train.sort_unstable();
        Ok((self.select(&train), self.select(&test)))
    }
}

/// Two-dimensional Gaussian mixture: `X | Y=1 ~ N((2,2), [[5,1],[1,5]])`,
/// `X | Y=0 ~ N((-2,-2), [[10,1],[1,3]])`, `Z = 1{X_0 > 0}`.
pub fn synth_generate(n: usize, p_y: f64, seed: u64) -> Result<TabularDataset> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p_y) {
        return Err(Error::InvalidArgument(format!("p_y must be in [0, 1], got {p_y}")));
    }
    let chol = |a: f64, b: f64, c: f64| {
        let l00 = a.sqrt();
        let l10 = b / l00;
        [l00, l10, (c - l10 * l10).sqrt()]
    };
    let comps = [
        ([-2.0, -2.0], chol(10.0, 1.0, 3.0)),
        ([2.0, 2.0], chol(5.0, 1.0, 5.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(2 * n);
    let (mut z, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let label = u8::from(rng.random::<f64>() < p_y);
        let (mean, l) = comps[label as usize];
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let x0 = mean[0] + l[0] * e0;
        let x1 = mean[1] + l[1] * e0 + l[2] * e1;
        features.extend([x0, x1]);
        z.push(u8::from(x0 > 0.0));
        y.push(label);
    }
    Ok(TabularDataset {
        features,
        dim: 2,
        z,
        y,
        feature_names: vec!["x0".into(), "x1".into()],
        provenance: Provenance::Synthetic,
    })
}

const ADULT_COLUMNS: [(&str, bool); 14] = [
    ("age", true),
    ("workclass", false),
    ("fnlwgt", true),
    ("education", false),
    ("education-num", true),
    ("marital-status", false),
    ("occupation", false),
    ("relationship", false),
    ("race", false),
    ("sex", false),
    ("capital-gain", true),
    ("capital-loss", true),
    ("hours-per-week", true),
    ("native-country", false),
];
const SEX: usize = 9;

/// Reads the UCI Adult layout (14 attributes then income, comma separated).
/// Rows with a `?` are dropped; categorical columns are one-hot encoded in
/// sorted category order; `z = 1` is male and `y = 1` is income `>50K`.
/// More than 1% malformed rows is an error.
pub fn adult_ingest(path: impl AsRef<Path>) -> Result<TabularDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut records: Vec<(Vec<String>, u8)> = Vec::new();
    let (mut raw, mut bad) = (0usize, 0usize);
    let mut first_bad = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('|') {
            continue;
        }
        raw += 1;
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.iter().any(|f| f == "?") {
            continue;
        }
        let parsed = (|| {
            if fields.len() != 15 {
                return Err(format!("expected 15 fields, got {}", fields.len()));
            }
            for (i, (name, continuous)) in ADULT_COLUMNS.iter().enumerate() {
                if *continuous && fields[i].parse::<f64>().is_err() {
                    return Err(format!("`{name}` is not numeric: {:?}", fields[i]));
                }
            }
            if !matches!(fields[SEX].as_str(), "Male" | "Female") {
                return Err(format!("unknown sex {:?}", fields[SEX]));
            }
            match fields[14].trim_end_matches('.') {
                ">50K" => Ok(1),
                "<=50K" => Ok(0),
                other => Err(format!("unknown income {other:?}")),
            }
        })();
        match parsed {
            Ok(label) => records.push((fields, label)),
            Err(reason) => {
                bad += 1;
                first_bad.get_or_insert(format!("line {}: {reason}", line_no + 1));
            }
        }
    }
    if raw == 0 {
        return Err(malformed("no data rows".into()));
    }
    if bad as f64 > 0.01 * raw as f64 {
        return Err(malformed(format!(
            "{bad} of {raw} rows malformed (first: {})",
            first_bad.unwrap_or_default()
        )));
    }
    if records.is_empty() {
        return Err(Error::EmptySample);
    }

    let categories: Vec<BTreeSet<&str>> = ADULT_COLUMNS
        .iter()
        .enumerate()
        .map(|(i, (_, continuous))| {
            if *continuous {
                BTreeSet::new()
            } else {
                records.iter().map(|(f, _)| f[i].as_str()).collect()
            }
        })
        .collect();
    let mut feature_names = Vec::new();
    let mut offsets = Vec::new();
    for (i, (name, continuous)) in ADULT_COLUMNS.iter().enumerate() {
        offsets.push(feature_names.len());
        if *continuous {
            feature_names.push((*name).to_string());
        } else {
            feature_names.extend(categories[i].iter().map(|c| format!("{name}={c}")));
        }
    }
    let index: Vec<BTreeMap<&str, usize>> = categories
        .iter()
        .map(|set| set.iter().enumerate().map(|(k, c)| (*c, k)).collect())
        .collect();
    let dim = feature_names.len();
    let mut features = vec![0.0; records.len() * dim];
    let (mut z, mut y) = (Vec::with_capacity(records.len()), Vec::with_capacity(records.len()));
    for (r, (fields, label)) in records.iter().enumerate() {
        let row = &mut features[r * dim..(r + 1) * dim];
        for (i, (_, continuous)) in ADULT_COLUMNS.iter().enumerate() {
            if *continuous {
                row[offsets[i]] = fields[i].parse().expect("validated above");
            } else {
                row[offsets[i] + index[i][fields[i].as_str()]] = 1.0;
            }
        }
        z.push(u8::from(fields[SEX] == "Male"));
        y.push(*label);
    }
    Ok(TabularDataset {
        features,
        dim,
        z,
        y,
        feature_names,
        provenance: Provenance::Adult,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    Iid,
    /// `alpha = Pr(Z=0 | S=0)`.
    Heterogeneity { alpha: f64 },
    /// `lambda = Pr(Y = Z xor parity(S))`.
    Synergy { lambda: f64 },
    Custom { assignment: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(flatten)]
    pub scenario: Scenario,
    pub k: usize,
    pub seed: u64,
}

/// Client id to row indices, for exact replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub spec: PartitionSpec,
    pub rows: usize,
    pub clients: BTreeMap<usize, Vec<usize>>,
}

impl PartitionManifest {
    pub fn to_clients(&self, ds: &TabularDataset) -> Result<Vec<ClientDataset>> {
        if ds.len() != self.rows {
            return Err(Error::ShapeMismatch {
                expected: self.rows,
                got: ds.len(),
            });
        }
        self.clients
            .iter()
            .map(|(&id, idx)| ClientDataset::from_rows(id, &ds.select(idx)))
            .collect()
    }
}

fn parity(s: usize) -> u8 {
    (s.count_ones() % 2) as u8
}

fn shuffled(mut v: Vec<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    v.shuffle(rng);
    v
}

/// Row indices per client.
pub fn assign(ds: &TabularDataset, spec: &PartitionSpec) -> Result<PartitionManifest> {
    let n = ds.len();
    let k = spec.k;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 clients, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!("{n} rows cannot fill {k} clients")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut owner = vec![0usize; n];
    match &spec.scenario {
        Scenario::Iid => {
            let perm = shuffled((0..n).collect(), &mut rng);
            for (i, &r) in perm.iter().enumerate() {
                owner[r] = i % k;
            }
        }
        Scenario::Heterogeneity { alpha } => {
            heterogeneity(ds, *alpha, k, &mut rng, &mut owner)?;
        }
        Scenario::Synergy { lambda } => {
            synergy(ds, *lambda, k, &mut rng, &mut owner)?;
        }
        Scenario::Custom { assignment } => {
            if assignment.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: assignment.len(),
                });
            }
            if let Some(&bad) = assignment.iter().find(|&&s| s >= k) {
                return Err(Error::InvalidArgument(format!("client id {bad} out of range for k={k}")));
            }
            owner.copy_from_slice(assignment);
        }
    }
    let mut clients: BTreeMap<usize, Vec<usize>> = (0..k).map(|s| (s, Vec::new())).collect();
    for (r, &s) in owner.iter().enumerate() {
        clients.get_mut(&s).expect("id < k").push(r);
    }
    if let Some((s, _)) = clients.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::InvalidArgument(format!("client {s} would be empty")));
    }
    Ok(PartitionManifest {
        spec: spec.clone(),
        rows: n,
        clients,
    })
}

/// [`assign`] followed by materializing each client.
pub fn partition(ds: &TabularDataset, spec: &PartitionSpec) -> Result<Vec<ClientDataset>> {
    assign(ds, spec)?.to_clients(ds)
}

fn heterogeneity(ds: &TabularDataset, alpha: f64, k: usize, rng: &mut ChaCha8Rng, owner: &mut [usize]) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let n = ds.len();
    let women = shuffled((0..n).filter(|&i| ds.z[i] == 0).collect(), rng);
    let men = shuffled((0..n).filter(|&i| ds.z[i] == 1).collect(), rng);
    let (w, m) = (women.len() as f64, men.len() as f64);
    let cap = |count: f64, share: f64| if share > 0.0 { count / share } else { f64::INFINITY };
    // first block: as large as possible up to half the data at the requested mix
    let n0 = (n as f64 / 2.0).min(cap(w, alpha)).min(cap(m, 1.0 - alpha)).floor() as usize;
    let (k0, k1) = (k.div_ceil(2), k / 2);
    if n0 < k0 || n - n0 < k1 {
        return Err(Error::UnreachableTarget(format!(
            "alpha={alpha} leaves a client empty ({} women, {} men)",
            women.len(),
            men.len()
        )));
    }
    let w0 = ((alpha * n0 as f64).round() as usize).min(women.len());
    let m0 = n0 - w0;
    if m0 > men.len() {
        return Err(Error::UnreachableTarget(format!("alpha={alpha} needs more men than available")));
    }
    let mut first: Vec<usize> = women[..w0].iter().chain(&men[..m0]).copied().collect();
    let mut second: Vec<usize> = women[w0..].iter().chain(&men[m0..]).copied().collect();
    first.shuffle(rng);
    second.shuffle(rng);
    for (i, &r) in first.iter().enumerate() {
        owner[r] = i % k0;
    }
    for (i, &r) in second.iter().enumerate() {
        owner[r] = k0 + i % k1;
    }
    Ok(())
}

fn synergy(ds: &TabularDataset, lambda: f64, k: usize, rng: &mut ChaCha8Rng, owner: &mut [usize]) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda must be in [0, 1], got {lambda}")));
    }
    let n = ds.len();
    let even: Vec<usize> = (0..k).filter(|&s| parity(s) == 0).collect();
    let odd: Vec<usize> = (0..k).filter(|&s| parity(s) == 1).collect();
    // perfect XOR: rows with y = z go to even-parity clients, the rest to odd
    let agree = shuffled((0..n).filter(|&i| ds.z[i] == ds.y[i]).collect(), rng);
    let differ = shuffled((0..n).filter(|&i| ds.z[i] != ds.y[i]).collect(), rng);
    // misplace rows in cross-parity pairs while both kinds remain, then singly
    let misplaced = ((1.0 - lambda) * n as f64).round() as usize;
    let from_agree = agree.len().min(misplaced.div_ceil(2).max(misplaced.saturating_sub(differ.len())));
    let from_differ = misplaced - from_agree;
    let (to_odd, stay_even) = agree.split_at(from_agree);
    let (to_even, stay_odd) = differ.split_at(from_differ);
    let even_rows: Vec<usize> = stay_even.iter().chain(to_even).copied().collect();
    let odd_rows: Vec<usize> = stay_odd.iter().chain(to_odd).copied().collect();
    for (rows, ids) in [(even_rows, &even), (odd_rows, &odd)] {
        if rows.len() < ids.len() {
            return Err(Error::UnreachableTarget(format!(
                "lambda={lambda} leaves a client empty ({} rows with y = z, {} with y != z)",
                agree.len(),
                differ.len()
            )));
        }
        for (i, &r) in shuffled(rows, rng).iter().enumerate() {
            owner[r] = ids[i % ids.len()];
        }
    }
    Ok(())
}

/// Empirical `Pr(Y = Z xor parity(S))` over the union of clients.
pub fn measured_synergy_level(clients: &[ClientDataset]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for c in clients {
        let p = parity(c.id);
        hit += c.z.iter().zip(&c.y).filter(|(z, y)| **y == *z ^ p).count();
        total += c.len();
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Empirical joint over `(Z, S, Y)` of the union of clients.
pub fn empirical_zsy(clients: &[ClientDataset]) -> Result<JointDist> {
    let k = clients.iter().map(|c| c.id + 1).max().ok_or(Error::EmptySample)?;
    let schema = VariableSchema::new([(Z, 2), (S, k), (Y, 2)])?;
    let mut counts = vec![0u64; schema.num_states()];
    for c in clients {
        for (z, y) in c.z.iter().zip(&c.y) {
            counts[schema.index(&[*z as usize, c.id, *y as usize])] += 1;
        }
    }
    JointDist::from_counts(schema, &counts, 0.0)
}

/// Empirical `Pr(Z=0 | S=s)` for client `s`.
pub fn measured_alpha(clients: &[ClientDataset], s: usize) -> Option<f64> {
    let c = clients.iter().find(|c| c.id == s)?;
    Some(c.z.iter().filter(|&&z| z == 0).count() as f64 / c.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn zs_joint(clients: &[ClientDataset]) -> JointDist {
        let k = clients.len();
        let schema = VariableSchema::new([(Z, 2), (S, k)]).unwrap();
        let mut counts = vec![0u64; 2 * k];
        for c in clients {
            for &z in &c.z {
                counts[z as usize * k + c.id] += 1;
            }
        }
        JointDist::from_counts(schema, &counts, 0.0).unwrap()
    }

    #[test]
    fn synthetic_matches_mixture() {
        let ds = synth_generate(100_000, 0.5, 3).unwrap();
        let pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == 1).collect();
        let mean = |j: usize| pos.iter().map(|&i| ds.row(i)[j]).sum::<f64>() / pos.len() as f64;
        assert!((mean(0) - 2.0).abs() < 0.05 && (mean(1) - 2.0).abs() < 0.05);
        assert!((0..ds.len()).all(|i| ds.z[i] == u8::from(ds.row(i)[0] > 0.0)));
        // P(X0 > 0 | Y=1) = Phi(2 / sqrt 5), with Phi from a direct series
        let phi = 0.5 * (1.0 + erf(2.0 / 5f64.sqrt() / 2f64.sqrt()));
        let rate = pos.iter().filter(|&&i| ds.z[i] == 1).count() as f64 / pos.len() as f64;
        assert!((rate - phi).abs() < 0.01, "{rate} vs {phi}");
        assert!((phi - 0.814).abs() < 1e-3);
        assert_eq!(ds, synth_generate(100_000, 0.5, 3).unwrap());
    }

    fn erf(x: f64) -> f64 {
        // Maclaurin series, fine for |x| < 2
        let mut term = x;
        let mut sum = x;
        for n in 1..60 {
            term *= -x * x / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn iid_split_is_nearly_independent() {
        let ds = synth_generate(50_000, 0.5, 1).unwrap();
        let spec = PartitionSpec { scenario: Scenario::Iid, k: 2, seed: 4 };
        let clients = partition(&ds, &spec).unwrap();
        assert!(zs_joint(&clients).mutual_information(&[Z], &[S]).unwrap() < 0.002);
        assert!((measured_synergy_level(&clients) - 0.5).abs() < 0.02);
    }

    #[test]
    fn heterogeneity_hits_alpha() {
        let ds = synth_generate(20_000, 0.5, 2).unwrap();
        for alpha in [0.1, 0.33, 0.5, 0.9] {
            let spec = PartitionSpec { scenario: Scenario::Heterogeneity { alpha }, k: 2, seed: 5 };
            let clients = partition(&ds, &spec).unwrap();
            let n0 = clients[0].len() as f64;
            assert!((measured_alpha(&clients, 0).unwrap() - alpha).abs() <= 1.0 / n0 + 1e-12);
        }
    }

    #[test]
    fn synergy_levels() {
        let ds = synth_generate(10_000, 0.5, 2).unwrap();
        for k in [2, 4] {
            for lambda in [1.0, 0.9, 0.5, 0.25, 0.0] {
                let spec = PartitionSpec { scenario: Scenario::Synergy { lambda }, k, seed: 6 };
                let clients = partition(&ds, &spec).unwrap();
                assert!((measured_synergy_level(&clients) - lambda).abs() <= 0.01, "{k} {lambda}");
            }
        }
        let spec = PartitionSpec { scenario: Scenario::Synergy { lambda: 1.0 }, k: 2, seed: 0 };
        let mut clients = partition(&ds, &spec).unwrap();
        assert_eq!(measured_synergy_level(&clients), 1.0);
        for c in &mut clients {
            c.y.iter_mut().for_each(|y| *y ^= 1);
        }
        assert_eq!(measured_synergy_level(&clients), 0.0);
    }

    #[test]
    fn unreachable_synergy_is_reported() {
        // every row has y = z, so a perfect split leaves the odd client empty
        let mut ds = synth_generate(1_000, 0.5, 2).unwrap();
        ds.y = ds.z.clone();
        let spec = PartitionSpec { scenario: Scenario::Synergy { lambda: 1.0 }, k: 2, seed: 0 };
        match assign(&ds, &spec) {
            Err(Error::UnreachableTarget(msg)) => assert!(msg.contains("1000 rows with y = z")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partitions_keep_every_row_once() {
        let ds = synth_generate(3_001, 0.5, 9).unwrap();
        let assignment: Vec<usize> = (0..ds.len()).map(|i| i % 3).collect();
        for scenario in [
            Scenario::Iid,
            Scenario::Heterogeneity { alpha: 0.7 },
            Scenario::Synergy { lambda: 0.8 },
            Scenario::Custom { assignment },
        ] {
            let manifest = assign(&ds, &PartitionSpec { scenario, k: 3, seed: 1 }).unwrap();
            let mut all: Vec<usize> = manifest.clients.values().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
            let json = serde_json::to_string(&manifest).unwrap();
            assert_eq!(serde_json::from_str::<PartitionManifest>(&json).unwrap(), manifest);
        }
    }

    #[test]
    fn adult_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("adult.data");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, "39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, United-States, <=50K").unwrap();
        writeln!(f, "50, ?, 83311, Bachelors, 13, Married-civ-spouse, Exec-managerial, Husband, White, Male, 0, 0, 13, United-States, <=50K").unwrap();
        writeln!(f, "38, Private, 215646, HS-grad, 9, Divorced, Handlers-cleaners, Not-in-family, Black, Female, 0, 0, 40, Cuba, >50K.").unwrap();
        drop(f);
        let ds = adult_ingest(&path).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.z, vec![1, 0]);
        assert_eq!(ds.y, vec![0, 1]);
        // relationship has a single category here
        assert_eq!(ds.dim, 6 + 2 * 7 + 1);
        assert!(ds.feature_names.contains(&"workclass=State-gov".to_string()));

        fs::write(&path, "").unwrap();
        assert!(adult_ingest(&path).is_err());
        fs::write(&path, "1,2,3\n").unwrap();
        assert!(matches!(adult_ingest(&path), Err(Error::Malformed { .. })));
    }

    #[test]
    fn adult_training_file() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/adult.data");
        let ds = adult_ingest(path).unwrap();
        let women = ds.z.iter().filter(|&&z| z == 0).count() as f64 / ds.len() as f64;
        assert!((women - 0.33).abs() <= 0.01, "{women}");
        assert_eq!(ds.len(), 30_162);
    }
}
