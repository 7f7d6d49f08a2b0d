//! Reproducible problem instances: a JSON-serializable [`InstanceSpec`] and
//! the generator that turns it into an objective and a constraint.

use std::path::PathBuf;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use subopt_core::constraints::{
    GroupCapSystem, Matroid, MatroidIntersection, PartitionMatroid, Unconstrained, UniformMatroid,
};
use subopt_core::objectives::{
    CovarianceMatrix, CoverageInstance, CutGraph, EntropyObjective, KernelMatrix, LogDetObjective, ModularWeights,
    SymmetricMatrix, ENTROPY_CONSTANT,
};
use subopt_core::{IndependenceSystem, SubmodularFn};

use crate::error::{BenchError, Result};
use crate::stations::{ingest_stations, StationData};

/// Smallest eigenvalue that keeps every Gaussian entropy marginal non-negative.
pub const MONOTONE_EIGEN_FLOOR: f64 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Ground-set size; taken from the file for station data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub objective: ObjectiveSpec,
    pub constraint: ConstraintSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `ln det L_S` plus a per-element shift (default: the smallest shift
    /// that makes the function non-negative).
    Logdet {
        kernel: KernelSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<f64>,
    },
    /// Gaussian entropy over independent clusters of equicorrelated variables.
    Entropy {
        clusters: usize,
        #[serde(default = "default_rho_min")]
        rho_min: f64,
        #[serde(default = "default_rho_max")]
        rho_max: f64,
    },
    /// Gaussian entropy of station temperature variations.
    Stations {
        path: PathBuf,
        #[serde(default = "default_station_jitter")]
        jitter: f64,
    },
    /// Weighted cut of an Erdős–Rényi graph with weights in `[0.1, 1)`.
    Cut {
        #[serde(default = "default_density")]
        density: f64,
    },
    /// Each element covers `set_size` random items of a unit-weight universe.
    Coverage {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        universe: Option<usize>,
        #[serde(default = "default_set_size")]
        set_size: usize,
    },
    /// Random weights in `[0, 1)` unless given.
    Modular {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Identity,
    /// `GᵀG/d + jitter·I` for a `d × n` standard Gaussian `G` (`d = n` by default).
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<usize>,
        #[serde(default = "default_kernel_jitter")]
        jitter: f64,
    },
    Explicit {
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Free,
    Uniform {
        k: usize,
    },
    Partition(PartitionSpec),
    Intersection {
        members: Vec<MatroidSpec>,
    },
    GroupCap {
        groups: GroupSpec,
    },
    /// Per-group caps from the station file, optionally with a total cap.
    StationGroups {
        cap: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        total: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub caps: Vec<usize>,
    #[serde(default)]
    pub layout: Layout,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layout {
    /// Element `i` in block `⌊i·B/n⌋`.
    #[default]
    Contiguous,
    /// Element `i` in block `i mod B`.
    Strided,
    /// Uniformly random block per element.
    Random,
    Explicit {
        block_of: Vec<Option<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatroidSpec {
    Uniform { k: usize },
    Partition(PartitionSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    /// `count` groups, each of `size` distinct random elements, all capped at `cap`.
    Random {
        count: usize,
        size: usize,
        cap: usize,
    },
    Explicit {
        groups: Vec<Vec<usize>>,
        caps: Vec<usize>,
    },
}

fn default_rho_min() -> f64 {
    0.5
}
fn default_rho_max() -> f64 {
    0.95
}
fn default_station_jitter() -> f64 {
    1e-6
}
fn default_density() -> f64 {
    0.3
}
fn default_set_size() -> usize {
    8
}
fn default_kernel_jitter() -> f64 {
    1e-3
}

/// A generated instance.
pub struct Instance {
    pub id: String,
    pub n: usize,
    pub objective: Box<dyn SubmodularFn>,
    pub system: Box<dyn IndependenceSystem>,
    /// Adjustments made while building (for example covariance rescaling).
    pub notes: Vec<String>,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("id", &self.id)
            .field("n", &self.n)
            .field("p", &self.system.p())
            .field("rank_bound", &self.system.rank_bound())
            .field("notes", &self.notes)
            .finish()
    }
}

/// Stream ids that keep objective and constraint randomness independent.
const OBJECTIVE_STREAM: u64 = 1;
const CONSTRAINT_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(BenchError::config(path, message()))
    }
}

impl InstanceSpec {
    /// Parses JSON, reporting the field path of any type error. Errors inside
    /// an objective or constraint are reported at that object.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| BenchError::config(e.path().to_string(), e.inner().to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance spec serializes")
    }

    /// Identifier used in result records.
    pub fn instance_id(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        let obj = match &self.objective {
            ObjectiveSpec::Logdet { .. } => "logdet",
            ObjectiveSpec::Entropy { .. } => "entropy",
            ObjectiveSpec::Stations { .. } => "stations",
            ObjectiveSpec::Cut { .. } => "cut",
            ObjectiveSpec::Coverage { .. } => "coverage",
            ObjectiveSpec::Modular { .. } => "modular",
        };
        let cons = match &self.constraint {
            ConstraintSpec::Free => "free",
            ConstraintSpec::Uniform { .. } => "uniform",
            ConstraintSpec::Partition(_) => "partition",
            ConstraintSpec::Intersection { .. } => "intersection",
            ConstraintSpec::GroupCap { .. } => "groupcap",
            ConstraintSpec::StationGroups { .. } => "stationgroups",
        };
        match self.n {
            Some(n) => format!("{obj}-{cons}-n{n}-s{}", self.seed),
            None => format!("{obj}-{cons}-s{}", self.seed),
        }
    }

    /// Checks everything that can be checked without reading files.
    pub fn validate(&self) -> Result<()> {
        let stations = matches!(self.objective, ObjectiveSpec::Stations { .. });
        if !stations {
            check(self.n.is_some(), "n", || "required for generated objectives".into())?;
        }
        if let Some(n) = self.n {
            check(n >= 1, "n", || "must be at least 1".into())?;
        }
        let n = self.n.unwrap_or(usize::MAX);
        match &self.objective {
            ObjectiveSpec::Logdet { kernel, shift } => {
                if let Some(s) = shift {
                    check(s.is_finite(), "objective.shift", || format!("{s} is not finite"))?;
                }
                match kernel {
                    KernelSpec::Identity => {}
                    KernelSpec::Random { features, jitter } => {
                        if let Some(d) = features {
                            check(*d >= 1, "objective.kernel.features", || "must be at least 1".into())?;
                        }
                        check(jitter.is_finite() && *jitter >= 0.0, "objective.kernel.jitter", || {
                            format!("{jitter} must be finite and non-negative")
                        })?;
                    }
                    KernelSpec::Explicit { rows } => {
                        check(rows.len() == n, "objective.kernel.rows", || {
                            format!("{} rows for n = {n}", rows.len())
                        })?;
                        for (i, r) in rows.iter().enumerate() {
                            check(r.len() == n, &format!("objective.kernel.rows[{i}]"), || {
                                format!("{} entries for n = {n}", r.len())
                            })?;
                        }
                    }
                }
            }
            ObjectiveSpec::Entropy {
                clusters,
                rho_min,
                rho_max,
            } => {
                check(*clusters >= 1 && *clusters <= n, "objective.clusters", || {
                    format!("{clusters} not in 1..={n}")
                })?;
                check((0.0..1.0).contains(rho_min), "objective.rho_min", || {
                    format!("{rho_min} not in [0, 1)")
                })?;
                check(
                    (0.0..1.0).contains(rho_max) && rho_min <= rho_max,
                    "objective.rho_max",
                    || format!("{rho_max} not in [rho_min, 1)"),
                )?;
            }
            ObjectiveSpec::Stations { jitter, .. } => {
                check(jitter.is_finite() && *jitter >= 0.0, "objective.jitter", || {
                    format!("{jitter} must be finite and non-negative")
                })?;
            }
            ObjectiveSpec::Cut { density } => {
                check((0.0..=1.0).contains(density), "objective.density", || {
                    format!("{density} not in [0, 1]")
                })?;
            }
            ObjectiveSpec::Coverage { universe, set_size } => {
                if let Some(u) = universe {
                    check(*u >= 1, "objective.universe", || "must be at least 1".into())?;
                }
                check(*set_size >= 1, "objective.set_size", || "must be at least 1".into())?;
            }
            ObjectiveSpec::Modular { weights } => {
                if let Some(w) = weights {
                    check(w.len() == n, "objective.weights", || {
                        format!("{} weights for n = {n}", w.len())
                    })?;
                    if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                        return Err(BenchError::config(
                            format!("objective.weights[{i}]"),
                            format!("{} must be finite and non-negative", w[i]),
                        ));
                    }
                }
            }
        }
        match &self.constraint {
            ConstraintSpec::Free | ConstraintSpec::Uniform { .. } => {}
            ConstraintSpec::Partition(p) => validate_partition(p, n, "constraint")?,
            ConstraintSpec::Intersection { members } => {
                check(!members.is_empty(), "constraint.members", || {
                    "needs at least one matroid".into()
                })?;
                for (i, m) in members.iter().enumerate() {
                    if let MatroidSpec::Partition(p) = m {
                        validate_partition(p, n, &format!("constraint.members[{i}]"))?;
                    }
                }
            }
            ConstraintSpec::GroupCap { groups } => match groups {
                GroupSpec::Random { count, size, .. } => {
                    check(*count >= 1, "constraint.groups.count", || "must be at least 1".into())?;
                    check(*size >= 1 && *size <= n, "constraint.groups.size", || {
                        format!("{size} not in 1..={n}")
                    })?;
                }
                GroupSpec::Explicit { groups, caps } => {
                    check(groups.len() == caps.len(), "constraint.groups.caps", || {
                        format!("{} caps for {} groups", caps.len(), groups.len())
                    })?;
                    for (g, members) in groups.iter().enumerate() {
                        if let Some(e) = members.iter().find(|&&e| e >= n) {
                            return Err(BenchError::config(
                                format!("constraint.groups.groups[{g}]"),
                                format!("element {e} outside 0..{n}"),
                            ));
                        }
                    }
                }
            },
            ConstraintSpec::StationGroups { .. } => {
                check(stations, "constraint", || {
                    "station_groups requires the stations objective".into()
                })?;
            }
        }
        Ok(())
    }

    /// Builds the instance. Station files are read here.
    pub fn build(&self) -> Result<Instance> {
        self.validate()?;
        let mut notes = Vec::new();
        let mut obj_rng = rng_for(self.seed, OBJECTIVE_STREAM);
        let mut stations: Option<StationData> = None;

        let objective: Box<dyn SubmodularFn> = match &self.objective {
            ObjectiveSpec::Stations { path, jitter } => {
                let data = ingest_stations(path, *jitter)?;
                if let Some(n) = self.n {
                    check(n == data.len(), "n", || {
                        format!("{n} but the file has {} stations", data.len())
                    })?;
                }
                let (cov, note) = monotone_scaled(data.covariance.clone())?;
                notes.extend(note);
                stations = Some(data);
                Box::new(EntropyObjective::new(cov))
            }
            other => build_objective(other, self.n.unwrap_or_default(), &mut obj_rng)?,
        };
        let n = objective.ground_size();

        let mut cons_rng = rng_for(self.seed, CONSTRAINT_STREAM);
        let system: Box<dyn IndependenceSystem> = match &self.constraint {
            ConstraintSpec::StationGroups { cap, total } => {
                let data = stations.as_ref().expect("validated: station groups need station data");
                let groups = PartitionMatroid::from_blocks(n, &data.blocks(), vec![*cap; data.group_labels.len()])?;
                match total {
                    None => Box::new(groups),
                    Some(k) => Box::new(MatroidIntersection::new(vec![
                        Matroid::from(groups),
                        Matroid::from(UniformMatroid::new(n, *k)?),
                    ])?),
                }
            }
            other => build_constraint(other, n, &mut cons_rng)?,
        };
        Ok(Instance {
            id: self.instance_id(),
            n,
            objective,
            system,
            notes,
        })
    }
}

fn validate_partition(p: &PartitionSpec, n: usize, prefix: &str) -> Result<()> {
    check(!p.caps.is_empty(), &format!("{prefix}.caps"), || {
        "needs at least one block".into()
    })?;
    if let Layout::Explicit { block_of } = &p.layout {
        check(block_of.len() == n, &format!("{prefix}.layout.block_of"), || {
            format!("{} entries for n = {n}", block_of.len())
        })?;
        if let Some(i) = block_of.iter().position(|b| b.is_some_and(|b| b >= p.caps.len())) {
            return Err(BenchError::config(
                format!("{prefix}.layout.block_of[{i}]"),
                format!("block {:?} but only {} caps", block_of[i], p.caps.len()),
            ));
        }
    }
    Ok(())
}

/// Rescales a covariance so that its smallest eigenvalue is at least
/// [`MONOTONE_EIGEN_FLOOR`], which keeps every entropy value non-negative.
fn monotone_scaled(cov: CovarianceMatrix) -> Result<(CovarianceMatrix, Option<String>)> {
    let lmin = cov.min_eigenvalue();
    if lmin >= MONOTONE_EIGEN_FLOOR {
        return Ok((cov, None));
    }
    let factor = MONOTONE_EIGEN_FLOOR / lmin;
    let note = format!("covariance scaled by {factor:.6e} (smallest eigenvalue {lmin:.6e})");
    Ok((cov.scaled(factor)?, Some(note)))
}

fn build_objective(spec: &ObjectiveSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Box<dyn SubmodularFn>> {
    Ok(match spec {
        ObjectiveSpec::Logdet { kernel, shift } => {
            let matrix = match kernel {
                KernelSpec::Identity => SymmetricMatrix::identity(n),
                KernelSpec::Random { features, jitter } => random_gram(n, features.unwrap_or(n), *jitter, rng)?,
                KernelSpec::Explicit { rows } => SymmetricMatrix::from_rows(rows)?,
            };
            let kernel = KernelMatrix::new(matrix)?;
            match shift {
                Some(s) => Box::new(LogDetObjective::with_shift(kernel, *s)?),
                None => Box::new(LogDetObjective::new(kernel)?),
            }
        }
        ObjectiveSpec::Entropy {
            clusters,
            rho_min,
            rho_max,
        } => Box::new(EntropyObjective::new(clustered_covariance(
            n, *clusters, *rho_min, *rho_max, rng,
        )?)),
        ObjectiveSpec::Cut { density } => {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random::<f64>() < *density {
                        edges.push((u, v, rng.random_range(0.1..1.0)));
                    }
                }
            }
            Box::new(CutGraph::new(n, &edges)?)
        }
        ObjectiveSpec::Coverage { universe, set_size } => {
            let u = universe.unwrap_or(4 * n);
            let sets = (0..n)
                .map(|_| (0..*set_size).map(|_| rng.random_range(0..u)).collect())
                .collect();
            Box::new(CoverageInstance::new(sets, vec![1.0; u])?)
        }
        ObjectiveSpec::Modular { weights } => {
            let w = match weights {
                Some(w) => w.clone(),
                None => (0..n).map(|_| rng.random::<f64>()).collect(),
            };
            Box::new(ModularWeights::new(w)?)
        }
        ObjectiveSpec::Stations { .. } => unreachable!("station data is built by the caller"),
    })
}

/// `GᵀG/d + jitter·I` for a seeded `d × n` Gaussian `G`.
pub fn random_gram(n: usize, d: usize, jitter: f64, rng: &mut ChaCha8Rng) -> Result<SymmetricMatrix> {
    let g: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for row in &g {
                s += row[i] * row[j];
            }
            let v = s / d as f64 + if i == j { jitter } else { 0.0 };
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(SymmetricMatrix::from_row_major(n, data)?)
}

/// Entropy of `s` variables from one equicorrelated cluster with unit
/// variance and correlation `rho`, before variance scaling.
fn cluster_entropy(s: usize, rho: f64, log_var: f64) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let s_f = s as f64;
    let log_det = s_f * log_var + (s_f - 1.0) * (1.0 - rho).ln() + (1.0 + (s_f - 1.0) * rho).ln();
    ENTROPY_CONSTANT * s_f + 0.5 * log_det
}

/// Smallest log-variance for which every subset of a cluster of `size`
/// variables with correlation `rho` has non-negative entropy.
fn cluster_log_variance(size: usize, rho: f64) -> f64 {
    (1..=size)
        .map(|s| {
            let s_f = s as f64;
            let rest = (s_f - 1.0) * (1.0 - rho).ln() + (1.0 + (s_f - 1.0) * rho).ln();
            (-2.0 * ENTROPY_CONSTANT * s_f - rest) / s_f
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Block-diagonal covariance: `clusters` groups of equicorrelated variables
/// with correlation drawn from `[rho_min, rho_max]`. Each block's variance is
/// the smallest that keeps every subset entropy non-negative, so large
/// subsets of one block have negative marginals.
pub fn clustered_covariance(
    n: usize,
    clusters: usize,
    rho_min: f64,
    rho_max: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CovarianceMatrix> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut data = vec![0.0; n * n];
    for c in 0..clusters {
        let members = &order[c * n / clusters..(c + 1) * n / clusters];
        let rho = if rho_max > rho_min {
            rng.random_range(rho_min..=rho_max)
        } else {
            rho_min
        };
        // slight headroom so rounding cannot push a subset below zero
        let log_var = cluster_log_variance(members.len(), rho) + 1e-9;
        debug_assert!((0..=members.len()).all(|s| cluster_entropy(s, rho, log_var) >= 0.0));
        let var = log_var.exp();
        for &i in members {
            for &j in members {
                data[i * n + j] = if i == j { var } else { rho * var };
            }
        }
    }
    let matrix = SymmetricMatrix::from_row_major(n, data)?;
    Ok(CovarianceMatrix::new(matrix, 0.0)?)
}

fn build_partition(spec: &PartitionSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<PartitionMatroid> {
    let blocks = spec.caps.len();
    let block_of: Vec<Option<usize>> = match &spec.layout {
        Layout::Contiguous => (0..n).map(|i| Some(i * blocks / n)).collect(),
        Layout::Strided => (0..n).map(|i| Some(i % blocks)).collect(),
        Layout::Random => (0..n).map(|_| Some(rng.random_range(0..blocks))).collect(),
        Layout::Explicit { block_of } => block_of.clone(),
    };
    Ok(PartitionMatroid::new(n, block_of, spec.caps.clone())?)
}

fn build_matroid(spec: &MatroidSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Matroid> {
    Ok(match spec {
        MatroidSpec::Uniform { k } => UniformMatroid::new(n, *k)?.into(),
        MatroidSpec::Partition(p) => build_partition(p, n, rng)?.into(),
    })
}

fn build_constraint(spec: &ConstraintSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<Box<dyn IndependenceSystem>> {
    Ok(match spec {
        ConstraintSpec::Free => Box::new(Unconstrained::new(n)),
        ConstraintSpec::Uniform { k } => Box::new(UniformMatroid::new(n, *k)?),
        ConstraintSpec::Partition(p) => Box::new(build_partition(p, n, rng)?),
        ConstraintSpec::Intersection { members } => {
            let ms = members
                .iter()
                .map(|m| build_matroid(m, n, rng))
                .collect::<Result<Vec<_>>>()?;
            Box::new(MatroidIntersection::new(ms)?)
        }
        ConstraintSpec::GroupCap { groups } => match groups {
            GroupSpec::Random { count, size, cap } => {
                let all: Vec<usize> = (0..n).collect();
                let gs: Vec<Vec<usize>> = (0..*count)
                    .map(|_| {
                        let mut g: Vec<usize> = all.choose_multiple(rng, *size).copied().collect();
                        g.sort_unstable();
                        g
                    })
                    .collect();
                Box::new(GroupCapSystem::new(n, gs, vec![*cap; *count])?)
            }
            GroupSpec::Explicit { groups, caps } => Box::new(GroupCapSystem::new(n, groups.clone(), caps.clone())?),
        },
        ConstraintSpec::StationGroups { .. } => unreachable!("station groups are built by the caller"),
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, path: &str) -> Result<T> {
    s.parse()
        .map_err(|_| BenchError::config(path, format!("`{s}` is not a valid number")))
}

/// Parses the compact objective syntax used on the command line:
/// `logdet[:identity|:random[:D]]`, `entropy:C`, `stations:PATH`,
/// `cut[:DENSITY]`, `coverage[:UNIVERSE[:SET_SIZE]]`, `modular`.
pub fn parse_objective(text: &str) -> Result<ObjectiveSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let path = "--objective";
    Ok(match parts.as_slice() {
        ["logdet"] | ["logdet", "random"] => ObjectiveSpec::Logdet {
            kernel: KernelSpec::Random {
                features: None,
                jitter: default_kernel_jitter(),
            },
            shift: None,
        },
        ["logdet", "random", d] => ObjectiveSpec::Logdet {
            kernel: KernelSpec::Random {
                features: Some(parse_num(d, path)?),
                jitter: default_kernel_jitter(),
            },
            shift: None,
        },
        ["logdet", "identity"] => ObjectiveSpec::Logdet {
            kernel: KernelSpec::Identity,
            shift: None,
        },
        ["entropy", c] => ObjectiveSpec::Entropy {
            clusters: parse_num(c, path)?,
            rho_min: default_rho_min(),
            rho_max: default_rho_max(),
        },
        ["stations", rest @ ..] if !rest.is_empty() => ObjectiveSpec::Stations {
            path: PathBuf::from(rest.join(":")),
            jitter: default_station_jitter(),
        },
        ["cut"] => ObjectiveSpec::Cut {
            density: default_density(),
        },
        ["cut", d] => ObjectiveSpec::Cut {
            density: parse_num(d, path)?,
        },
        ["coverage"] => ObjectiveSpec::Coverage {
            universe: None,
            set_size: default_set_size(),
        },
        ["coverage", u] => ObjectiveSpec::Coverage {
            universe: Some(parse_num(u, path)?),
            set_size: default_set_size(),
        },
        ["coverage", u, s] => ObjectiveSpec::Coverage {
            universe: Some(parse_num(u, path)?),
            set_size: parse_num(s, path)?,
        },
        ["modular"] => ObjectiveSpec::Modular { weights: None },
        _ => return Err(BenchError::config(path, format!("unrecognized objective `{text}`"))),
    })
}

/// Parses the compact constraint syntax used on the command line:
/// `free`, `uniform:K`, `partition:B:CAP`, `intersection:P:B:CAP`,
/// `group-cap:G:SIZE:CAP`, `station-groups:CAP[:TOTAL]`.
///
/// The members of `intersection` use contiguous, strided, then random layouts.
pub fn parse_constraint(text: &str) -> Result<ConstraintSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let path = "--constraint";
    Ok(match parts.as_slice() {
        ["free"] => ConstraintSpec::Free,
        ["uniform", k] => ConstraintSpec::Uniform { k: parse_num(k, path)? },
        ["partition", b, cap] => ConstraintSpec::Partition(PartitionSpec {
            caps: vec![parse_num(cap, path)?; parse_num(b, path)?],
            layout: Layout::Contiguous,
        }),
        ["intersection", p, b, cap] => {
            let p: usize = parse_num(p, path)?;
            let caps = vec![parse_num::<usize>(cap, path)?; parse_num(b, path)?];
            let members = (0..p)
                .map(|i| {
                    let layout = match i {
                        0 => Layout::Contiguous,
                        1 => Layout::Strided,
                        _ => Layout::Random,
                    };
                    MatroidSpec::Partition(PartitionSpec {
                        caps: caps.clone(),
                        layout,
                    })
                })
                .collect();
            ConstraintSpec::Intersection { members }
        }
        ["group-cap", g, size, cap] => ConstraintSpec::GroupCap {
            groups: GroupSpec::Random {
                count: parse_num(g, path)?,
                size: parse_num(size, path)?,
                cap: parse_num(cap, path)?,
            },
        },
        ["station-groups", cap] => ConstraintSpec::StationGroups {
            cap: parse_num(cap, path)?,
            total: None,
        },
        ["station-groups", cap, total] => ConstraintSpec::StationGroups {
            cap: parse_num(cap, path)?,
            total: Some(parse_num(total, path)?),
        },
        _ => return Err(BenchError::config(path, format!("unrecognized constraint `{text}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use subopt_core::ElementId;

    fn spec(n: usize, seed: u64, objective: ObjectiveSpec, constraint: ConstraintSpec) -> InstanceSpec {
        InstanceSpec {
            id: None,
            n: Some(n),
            seed,
            objective,
            constraint,
        }
    }

    fn all(n: usize) -> Vec<ElementId> {
        (0..n).map(ElementId::from).collect()
    }

    #[test]
    fn random_kernels_are_reproducible() {
        let s = spec(
            8,
            7,
            parse_objective("logdet").unwrap(),
            ConstraintSpec::Uniform { k: 3 },
        );
        let mut a = rng_for(7, OBJECTIVE_STREAM);
        let mut b = rng_for(7, OBJECTIVE_STREAM);
        assert_eq!(
            random_gram(8, 8, 1e-3, &mut a).unwrap(),
            random_gram(8, 8, 1e-3, &mut b).unwrap()
        );
        let (x, y) = (s.build().unwrap(), s.build().unwrap());
        for mask in 0u32..256 {
            let set: Vec<ElementId> = (0..8).filter(|i| mask >> i & 1 == 1).map(ElementId::from).collect();
            assert_eq!(x.objective.value(&set).to_bits(), y.objective.value(&set).to_bits());
        }
    }

    #[test]
    fn identity_kernel_is_zero_everywhere() {
        let s = spec(6, 0, parse_objective("logdet:identity").unwrap(), ConstraintSpec::Free);
        let inst = s.build().unwrap();
        assert_eq!(inst.objective.value(&all(6)), 0.0);
        assert_eq!(inst.objective.value(&all(3)), 0.0);
    }

    #[test]
    fn entropy_partition_rank() {
        let s = spec(
            10,
            3,
            parse_objective("entropy:2").unwrap(),
            ConstraintSpec::Partition(PartitionSpec {
                caps: vec![2, 2],
                layout: Layout::Contiguous,
            }),
        );
        assert_eq!(s.build().unwrap().system.rank_bound(), 4);
    }

    #[test]
    fn clustered_entropy_is_non_negative_and_non_monotone() {
        for seed in 0..10 {
            let s = spec(10, seed, parse_objective("entropy:2").unwrap(), ConstraintSpec::Free);
            let inst = s.build().unwrap();
            let mut negative_gain = false;
            for mask in 0u32..1024 {
                let set: Vec<ElementId> = (0..10).filter(|i| mask >> i & 1 == 1).map(ElementId::from).collect();
                let v = inst.objective.value(&set);
                assert!(v >= -1e-9, "seed {seed}: f = {v}");
                for e in 0..10 {
                    if mask >> e & 1 == 0 {
                        let mut with = set.clone();
                        with.push(ElementId::from(e));
                        negative_gain |= inst.objective.value(&with) < v - 1e-9;
                    }
                }
            }
            assert!(negative_gain, "seed {seed}: expected a negative marginal");
        }
    }

    #[test]
    fn cluster_variance_is_tight() {
        for rho in [0.0, 0.3, 0.9] {
            let lv = cluster_log_variance(5, rho);
            let min = (1..=5)
                .map(|s| cluster_entropy(s, rho, lv))
                .fold(f64::INFINITY, f64::min);
            assert!(min.abs() < 1e-9, "rho {rho}: min {min}");
        }
    }

    #[test]
    fn json_round_trip_and_field_paths() {
        let s = spec(
            12,
            4,
            ObjectiveSpec::Coverage {
                universe: Some(30),
                set_size: 3,
            },
            parse_constraint("intersection:2:3:1").unwrap(),
        );
        assert_eq!(InstanceSpec::from_json(&s.to_json()).unwrap(), s);

        let bad = r#"{"n": 5, "objective": {"kind": "cut", "density": "high"}, "constraint": {"kind": "free"}}"#;
        match InstanceSpec::from_json(bad).unwrap_err() {
            BenchError::Config { path, message } => {
                assert_eq!(path, "objective");
                assert!(message.contains("expected f64"), "{message}");
            }
            e => panic!("{e}"),
        }
        let bad = spec(
            4,
            0,
            parse_objective("cut").unwrap(),
            parse_constraint("group-cap:2:9:1").unwrap(),
        );
        match bad.build().unwrap_err() {
            BenchError::Config { path, .. } => assert_eq!(path, "constraint.groups.size"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn compact_syntax() {
        assert_eq!(parse_constraint("uniform:5").unwrap(), ConstraintSpec::Uniform { k: 5 });
        assert!(matches!(
            parse_objective("stations:a/b.csv").unwrap(),
            ObjectiveSpec::Stations { .. }
        ));
        assert!(parse_constraint("uniform").is_err());
        assert!(parse_objective("cut:x").is_err());
        let g = spec(
            20,
            1,
            parse_objective("cut").unwrap(),
            parse_constraint("group-cap:3:8:2").unwrap(),
        );
        let inst = g.build().unwrap();
        assert_eq!(inst.system.p(), 3);
    }
}
