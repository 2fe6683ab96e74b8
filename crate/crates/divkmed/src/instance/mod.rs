//! Problem instances: clients, facilities, group structure, and distances.
//!
//! An [`Instance`] couples a client set, a facility set, a list of facility
//! groups with per-group lower bounds, and a distance source (explicit matrix
//! or point coordinates). Construction normalizes groups and materializes a
//! flat distance matrix when it fits a configurable size limit; larger
//! point-based instances compute distances on demand.

mod csv_ingest;
mod generators;
mod graph;

pub use csv_ingest::{load_csv, load_csv_reader, CsvInstance, CsvSchema, GroupMode};
pub use generators::{
    fig2_counterexample, from_domset, from_vertexcover, random_metric, RandomMetricParams,
};
pub use graph::Graph;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entry cap under which point-based distances are materialized up front.
pub const DEFAULT_MATERIALIZE_LIMIT: usize = 4_000_000;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] ::csv::Error),
}

/// Distance metric for point-based instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    L2,
}

/// Client and facility coordinates plus the metric used between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSet {
    pub clients: Vec<Vec<f64>>,
    pub facilities: Vec<Vec<f64>>,
    pub metric: Metric,
}

/// Where distances come from: an explicit client-by-facility matrix, or
/// coordinates evaluated under a metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceSource {
    Matrix(Vec<Vec<f64>>),
    Points(PointSet),
}

pub(crate) fn metric_dist(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        Metric::L2 => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

/// A diversity-aware k-median instance.
///
/// Groups are lists of facility ids; they may overlap. `lower_bounds[i]` is
/// the minimum number of centers the solution must take from `groups[i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    n_clients: usize,
    n_facilities: usize,
    k: usize,
    groups: Vec<Vec<usize>>,
    lower_bounds: Vec<usize>,
    distances: DistanceSource,
    #[serde(skip)]
    dist_matrix: Option<Vec<f64>>,
    #[serde(skip)]
    facility_groups: Vec<Vec<usize>>,
    #[serde(skip)]
    disjoint: bool,
}

impl Instance {
    /// Builds an instance, normalizing groups (sorted, deduplicated) and
    /// checking structural consistency. Value-level problems (negative
    /// distances, undersized groups, out-of-range `k`) are reported by
    /// [`Instance::validate`], not here.
    pub fn new(
        n_clients: usize,
        n_facilities: usize,
        k: usize,
        groups: Vec<Vec<usize>>,
        lower_bounds: Vec<usize>,
        distances: DistanceSource,
    ) -> Result<Self, InstanceError> {
        let mut inst = Instance {
            n_clients,
            n_facilities,
            k,
            groups,
            lower_bounds,
            distances,
            dist_matrix: None,
            facility_groups: Vec::new(),
            disjoint: true,
        };
        inst.finalize(DEFAULT_MATERIALIZE_LIMIT)?;
        Ok(inst)
    }

    /// Re-runs cache construction with a custom materialization limit.
    pub fn with_materialize_limit(mut self, limit: usize) -> Result<Self, InstanceError> {
        self.dist_matrix = None;
        self.finalize(limit)?;
        Ok(self)
    }

    fn finalize(&mut self, materialize_limit: usize) -> Result<(), InstanceError> {
        if self.n_clients == 0 {
            return Err(InstanceError::Schema("instance has no clients".into()));
        }
        if self.n_facilities == 0 {
            return Err(InstanceError::Schema("instance has no facilities".into()));
        }
        if self.lower_bounds.len() != self.groups.len() {
            return Err(InstanceError::Schema(format!(
                "{} lower bounds for {} groups",
                self.lower_bounds.len(),
                self.groups.len()
            )));
        }
        for (i, g) in self.groups.iter_mut().enumerate() {
            g.sort_unstable();
            g.dedup();
            if let Some(&id) = g.last() {
                if id >= self.n_facilities {
                    return Err(InstanceError::Schema(format!(
                        "group {} references facility {} but there are only {} facilities",
                        i, id, self.n_facilities
                    )));
                }
            }
        }
        match &self.distances {
            DistanceSource::Matrix(rows) => {
                if rows.len() != self.n_clients {
                    return Err(InstanceError::Schema(format!(
                        "distance matrix has {} rows for {} clients",
                        rows.len(),
                        self.n_clients
                    )));
                }
                for (c, row) in rows.iter().enumerate() {
                    if row.len() != self.n_facilities {
                        return Err(InstanceError::Schema(format!(
                            "distance row {} has {} entries for {} facilities",
                            c,
                            row.len(),
                            self.n_facilities
                        )));
                    }
                }
            }
            DistanceSource::Points(p) => {
                if p.clients.len() != self.n_clients {
                    return Err(InstanceError::Schema(format!(
                        "{} client points for {} clients",
                        p.clients.len(),
                        self.n_clients
                    )));
                }
                if p.facilities.len() != self.n_facilities {
                    return Err(InstanceError::Schema(format!(
                        "{} facility points for {} facilities",
                        p.facilities.len(),
                        self.n_facilities
                    )));
                }
                let dim = p.clients[0].len();
                if p.clients.iter().any(|q| q.len() != dim)
                    || p.facilities.iter().any(|q| q.len() != dim)
                {
                    return Err(InstanceError::Schema(
                        "point dimensions are inconsistent".into(),
                    ));
                }
            }
        }

        self.facility_groups = vec![Vec::new(); self.n_facilities];
        for (i, g) in self.groups.iter().enumerate() {
            for &f in g {
                self.facility_groups[f].push(i);
            }
        }
        self.disjoint = self.facility_groups.iter().all(|gs| gs.len() <= 1);

        let entries = self.n_clients.saturating_mul(self.n_facilities);
        let materialize = match &self.distances {
            DistanceSource::Matrix(_) => true,
            DistanceSource::Points(_) => entries <= materialize_limit,
        };
        if materialize {
            let mut flat = Vec::with_capacity(entries);
            match &self.distances {
                DistanceSource::Matrix(rows) => {
                    for row in rows {
                        flat.extend_from_slice(row);
                    }
                }
                DistanceSource::Points(p) => {
                    for c in &p.clients {
                        for f in &p.facilities {
                            flat.push(metric_dist(c, f, p.metric));
                        }
                    }
                }
            }
            self.dist_matrix = Some(flat);
        }
        Ok(())
    }

    pub fn n_clients(&self) -> usize {
        self.n_clients
    }

    pub fn n_facilities(&self) -> usize {
        self.n_facilities
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of groups.
    pub fn t(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &[usize] {
        &self.groups[i]
    }

    pub fn lower_bounds(&self) -> &[usize] {
        &self.lower_bounds
    }

    /// Groups that facility `f` belongs to.
    pub fn groups_of(&self, f: usize) -> &[usize] {
        &self.facility_groups[f]
    }

    /// True when no facility belongs to more than one group.
    pub fn disjoint(&self) -> bool {
        self.disjoint
    }

    pub fn distances(&self) -> &DistanceSource {
        &self.distances
    }

    /// Distance from client `c` to facility `f`.
    #[inline]
    pub fn distance(&self, c: usize, f: usize) -> f64 {
        debug_assert!(c < self.n_clients && f < self.n_facilities);
        if let Some(m) = &self.dist_matrix {
            return m[c * self.n_facilities + f];
        }
        match &self.distances {
            DistanceSource::Points(p) => metric_dist(&p.clients[c], &p.facilities[f], p.metric),
            DistanceSource::Matrix(_) => unreachable!("matrix sources are always materialized"),
        }
    }

    /// Per-group counts `|S ∩ F_i|` for a center set given as distinct ids.
    pub fn group_counts(&self, centers: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.groups.len()];
        for &f in centers {
            for &g in &self.facility_groups[f] {
                counts[g] += 1;
            }
        }
        counts
    }

    /// Same instance with replaced lower bounds.
    pub fn with_lower_bounds(&self, lower_bounds: Vec<usize>) -> Result<Self, InstanceError> {
        if lower_bounds.len() != self.groups.len() {
            return Err(InstanceError::Param(format!(
                "{} lower bounds for {} groups",
                lower_bounds.len(),
                self.groups.len()
            )));
        }
        let mut inst = self.clone();
        inst.lower_bounds = lower_bounds;
        Ok(inst)
    }

    /// Same instance with a replaced center budget.
    pub fn with_k(&self, k: usize) -> Self {
        let mut inst = self.clone();
        inst.k = k;
        inst
    }

    pub fn from_json_str(s: &str) -> Result<Self, InstanceError> {
        let mut inst: Instance = serde_json::from_str(s)?;
        inst.finalize(DEFAULT_MATERIALIZE_LIMIT)?;
        Ok(inst)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self, InstanceError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    /// Checks value-level invariants and classifies the instance.
    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        if self.k == 0 {
            findings.push(Finding::error("k must be at least 1"));
        }
        if self.k > self.n_facilities {
            findings.push(Finding::error(format!(
                "k = {} exceeds the {} available facilities",
                self.k, self.n_facilities
            )));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                findings.push(Finding::warning(format!("group {} is empty", i)));
            }
            if self.lower_bounds[i] > g.len() {
                findings.push(Finding::error(format!(
                    "group {} has {} members but lower bound {}",
                    i,
                    g.len(),
                    self.lower_bounds[i]
                )));
            }
        }
        let mut negatives = 0usize;
        let mut non_finite = 0usize;
        let mut first_bad = None;
        for c in 0..self.n_clients {
            for f in 0..self.n_facilities {
                let d = self.distance(c, f);
                if !d.is_finite() {
                    non_finite += 1;
                    first_bad.get_or_insert((c, f));
                } else if d < 0.0 {
                    negatives += 1;
                    first_bad.get_or_insert((c, f));
                }
            }
        }
        if negatives > 0 || non_finite > 0 {
            let (c, f) = first_bad.unwrap();
            findings.push(Finding::error(format!(
                "{} negative and {} non-finite distance entries (first at client {}, facility {})",
                negatives, non_finite, c, f
            )));
        }
        let sum_r: usize = self.lower_bounds.iter().sum();
        let budget_class = match sum_r.cmp(&self.k) {
            std::cmp::Ordering::Less => BudgetClass::UnderK,
            std::cmp::Ordering::Equal => BudgetClass::ExactK,
            std::cmp::Ordering::Greater => BudgetClass::OverK,
        };
        ValidationReport {
            findings,
            disjoint: self.disjoint,
            budget_class,
        }
    }
}

/// How the lower-bound budget `Σ r_i` compares to `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetClass {
    UnderK,
    ExactK,
    OverK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    fn error(msg: impl Into<String>) -> Self {
        Finding {
            severity: Severity::Error,
            message: msg.into(),
        }
    }

    fn warning(msg: impl Into<String>) -> Self {
        Finding {
            severity: Severity::Warning,
            message: msg.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
    pub disjoint: bool,
    pub budget_class: BudgetClass,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.findings
            .iter()
            .any(|f| f.severity == Severity::Error)
    }
}

/// A center set with its per-group counts and k-median cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Sorted, distinct facility ids.
    pub centers: Vec<usize>,
    pub per_group_counts: Vec<usize>,
    pub cost: f64,
}

impl Solution {
    pub fn new(inst: &Instance, mut centers: Vec<usize>) -> Result<Self, InstanceError> {
        if centers.is_empty() {
            return Err(InstanceError::Param("solution has no centers".into()));
        }
        centers.sort_unstable();
        if centers.windows(2).any(|w| w[0] == w[1]) {
            return Err(InstanceError::Param("duplicate center id".into()));
        }
        if *centers.last().unwrap() >= inst.n_facilities() {
            return Err(InstanceError::Param(format!(
                "center id {} out of range",
                centers.last().unwrap()
            )));
        }
        let per_group_counts = inst.group_counts(&centers);
        let cost = crate::metricspace::kmedian_cost(inst, &centers)
            .expect("non-empty center set always has a cost");
        Ok(Solution {
            centers,
            per_group_counts,
            cost,
        })
    }
}
