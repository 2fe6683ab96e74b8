//! CSV ingestion: rows become both clients and facilities, numeric columns
//! are scaled to unit L2 norm, and protected categorical columns define the
//! facility groups.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use super::{DistanceSource, Instance, InstanceError, Metric, PointSet};

/// How protected columns turn into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupMode {
    /// One attribute; its distinct values partition the rows.
    Disjoint,
    /// One group per (attribute, value) pair; groups overlap across
    /// attributes.
    Intersect,
}

/// Column roles for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// Categorical columns that define groups.
    pub protected: Vec<String>,
    /// Numeric feature columns; `None` takes every non-protected column.
    pub features: Option<Vec<String>>,
    pub group_mode: GroupMode,
}

/// Ingestion result: the instance plus human-readable group labels and any
/// non-fatal warnings.
#[derive(Debug)]
pub struct CsvInstance {
    pub instance: Instance,
    /// `column=value` per group, in group order.
    pub group_labels: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn load_csv(
    path: &Path,
    schema: &CsvSchema,
    k: usize,
    lower_bounds: Option<Vec<usize>>,
) -> Result<CsvInstance, InstanceError> {
    load_csv_reader(std::fs::File::open(path)?, schema, k, lower_bounds)
}

pub fn load_csv_reader<R: Read>(
    reader: R,
    schema: &CsvSchema,
    k: usize,
    lower_bounds: Option<Vec<usize>>,
) -> Result<CsvInstance, InstanceError> {
    if schema.group_mode == GroupMode::Disjoint && schema.protected.len() != 1 {
        return Err(InstanceError::Schema(format!(
            "disjoint group mode takes exactly one protected column, got {}",
            schema.protected.len()
        )));
    }
    let mut rdr = ::csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let col = |name: &str| -> Result<usize, InstanceError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| InstanceError::Schema(format!("column {:?} not found", name)))
    };

    let protected_idx: Vec<usize> = schema
        .protected
        .iter()
        .map(|p| col(p))
        .collect::<Result<_, _>>()?;
    let feature_idx: Vec<usize> = match &schema.features {
        Some(names) => {
            let idx: Vec<usize> = names.iter().map(|f| col(f)).collect::<Result<_, _>>()?;
            if let Some(&clash) = idx.iter().find(|i| protected_idx.contains(i)) {
                return Err(InstanceError::Schema(format!(
                    "column {:?} is both protected and a feature",
                    headers[clash]
                )));
            }
            idx
        }
        None => (0..headers.len())
            .filter(|i| !protected_idx.contains(i))
            .collect(),
    };
    if feature_idx.is_empty() {
        return Err(InstanceError::Schema("no feature columns".into()));
    }

    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut protected_vals: Vec<Vec<String>> = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let cell = record.get(i).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| {
                InstanceError::Parse(format!(
                    "row {}, column {:?}: {:?} is not numeric",
                    row_no + 1,
                    headers[i],
                    cell
                ))
            })?;
            row.push(value);
        }
        features.push(row);
        protected_vals.push(
            protected_idx
                .iter()
                .map(|&i| record.get(i).unwrap_or("").trim().to_string())
                .collect(),
        );
    }
    let n = features.len();
    if n == 0 {
        return Err(InstanceError::Schema("no data rows".into()));
    }

    let mut warnings = Vec::new();
    for (j, &i) in feature_idx.iter().enumerate() {
        let norm = features.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
        if norm > 0.0 {
            for row in &mut features {
                row[j] /= norm;
            }
        } else {
            warnings.push(format!(
                "column {:?} is all zeros; left unnormalized",
                headers[i]
            ));
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_labels: Vec<String> = Vec::new();
    for (a, &i) in protected_idx.iter().enumerate() {
        let mut by_value: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (row, vals) in protected_vals.iter().enumerate() {
            by_value.entry(vals[a].as_str()).or_default().push(row);
        }
        for (value, members) in by_value {
            group_labels.push(format!("{}={}", headers[i], value));
            groups.push(members);
        }
    }
    for (label, group) in group_labels.iter().zip(&groups) {
        if group.is_empty() {
            warnings.push(format!("group {} is empty; kept", label));
        }
    }

    let t = groups.len();
    let lower_bounds = match lower_bounds {
        Some(r) => {
            if r.len() != t {
                return Err(InstanceError::Schema(format!(
                    "{} lower bounds for {} groups",
                    r.len(),
                    t
                )));
            }
            r
        }
        None => vec![0; t],
    };

    let points = PointSet {
        clients: features.clone(),
        facilities: features,
        metric: Metric::L1,
    };
    let instance = Instance::new(n, n, k, groups, lower_bounds, DistanceSource::Points(points))?;
    Ok(CsvInstance {
        instance,
        group_labels,
        warnings,
    })
}
