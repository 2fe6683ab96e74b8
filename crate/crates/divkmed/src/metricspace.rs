//! k-median cost evaluation and the nearest/second-nearest center cache.
//!
//! The cache stores, per client, the nearest and second-nearest center with
//! ties broken toward the lowest facility id. That makes single-swap deltas
//! an O(n) scan instead of a full re-evaluation, and keeps every comparison
//! deterministic.

use thiserror::Error;

use crate::instance::Instance;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("center set is empty")]
    EmptyCenterSet,
    #[error("facility id {0} out of range")]
    BadFacility(usize),
    #[error("duplicate center id {0}")]
    DuplicateCenter(usize),
    #[error("cache needs at least two centers, got {0}")]
    CacheTooSmall(usize),
    #[error("swap does not match cached centers: {0}")]
    StaleSwap(String),
}

/// `(distance, facility)` order with ties toward the lower facility id.
#[inline]
pub(crate) fn closer(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn check_centers(inst: &Instance, centers: &[usize]) -> Result<(), MetricError> {
    if centers.is_empty() {
        return Err(MetricError::EmptyCenterSet);
    }
    let mut sorted = centers.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(MetricError::DuplicateCenter(w[0]));
        }
    }
    if *sorted.last().unwrap() >= inst.n_facilities() {
        return Err(MetricError::BadFacility(*sorted.last().unwrap()));
    }
    Ok(())
}

/// Sum over clients of the distance to the nearest center.
pub fn kmedian_cost(inst: &Instance, centers: &[usize]) -> Result<f64, MetricError> {
    check_centers(inst, centers)?;
    let mut total = 0.0;
    for c in 0..inst.n_clients() {
        let mut best = f64::INFINITY;
        for &f in centers {
            let d = inst.distance(c, f);
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    Ok(total)
}

/// Per-client nearest and second-nearest center bookkeeping for a fixed
/// center set.
#[derive(Debug, Clone)]
pub struct CostCache {
    centers: Vec<usize>,
    nearest: Vec<(f64, usize)>,
    second: Vec<(f64, usize)>,
    total: f64,
}

impl CostCache {
    /// Builds the cache for `centers` (at least two, distinct, in range).
    pub fn build(inst: &Instance, centers: &[usize]) -> Result<Self, MetricError> {
        check_centers(inst, centers)?;
        if centers.len() < 2 {
            return Err(MetricError::CacheTooSmall(centers.len()));
        }
        let mut sorted = centers.to_vec();
        sorted.sort_unstable();
        let n = inst.n_clients();
        let mut nearest = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for c in 0..n {
            let (n1, n2) = best_two(inst, c, &sorted);
            nearest.push(n1);
            second.push(n2);
        }
        let total = nearest.iter().map(|p| p.0).sum();
        Ok(CostCache {
            centers: sorted,
            nearest,
            second,
            total,
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Cached centers, sorted ascending.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn contains(&self, f: usize) -> bool {
        self.centers.binary_search(&f).is_ok()
    }

    /// `(distance, facility)` of the nearest center for client `c`.
    pub fn nearest(&self, c: usize) -> (f64, usize) {
        self.nearest[c]
    }

    /// `(distance, facility)` of the second-nearest center for client `c`.
    pub fn second(&self, c: usize) -> (f64, usize) {
        self.second[c]
    }

    fn check_swap(&self, inst: &Instance, out: usize, inc: usize) -> Result<(), MetricError> {
        if inc >= inst.n_facilities() {
            return Err(MetricError::BadFacility(inc));
        }
        if !self.contains(out) {
            return Err(MetricError::StaleSwap(format!(
                "facility {} is not a cached center",
                out
            )));
        }
        if self.contains(inc) {
            return Err(MetricError::StaleSwap(format!(
                "facility {} is already a cached center",
                inc
            )));
        }
        Ok(())
    }

    /// Cost change of replacing center `out` with facility `inc`, in O(n).
    pub fn swap_delta(&self, inst: &Instance, out: usize, inc: usize) -> Result<f64, MetricError> {
        self.check_swap(inst, out, inc)?;
        let mut delta = 0.0;
        for c in 0..inst.n_clients() {
            let cand = (inst.distance(c, inc), inc);
            let old = self.nearest[c];
            let surviving = if old.1 == out { self.second[c] } else { old };
            let new = if closer(cand, surviving) { cand } else { surviving };
            delta += new.0 - old.0;
        }
        Ok(delta)
    }

    /// Applies the swap, updating nearest/second-nearest incrementally.
    ///
    /// Clients whose cached pair involves `out` are rescanned against the new
    /// center set; everyone else only compares against `inc`.
    pub fn apply_swap(&mut self, inst: &Instance, out: usize, inc: usize) -> Result<(), MetricError> {
        self.check_swap(inst, out, inc)?;
        let pos = self.centers.binary_search(&out).unwrap();
        self.centers.remove(pos);
        let ins = self.centers.binary_search(&inc).unwrap_err();
        self.centers.insert(ins, inc);
        for c in 0..inst.n_clients() {
            if self.nearest[c].1 == out || self.second[c].1 == out {
                let (n1, n2) = best_two(inst, c, &self.centers);
                self.nearest[c] = n1;
                self.second[c] = n2;
            } else {
                let cand = (inst.distance(c, inc), inc);
                if closer(cand, self.nearest[c]) {
                    self.second[c] = self.nearest[c];
                    self.nearest[c] = cand;
                } else if closer(cand, self.second[c]) {
                    self.second[c] = cand;
                }
            }
        }
        self.total = self.nearest.iter().map(|p| p.0).sum();
        Ok(())
    }
}

fn best_two(inst: &Instance, client: usize, centers: &[usize]) -> ((f64, usize), (f64, usize)) {
    debug_assert!(centers.len() >= 2);
    let mut n1 = (f64::INFINITY, usize::MAX);
    let mut n2 = (f64::INFINITY, usize::MAX);
    for &f in centers {
        let cand = (inst.distance(client, f), f);
        if closer(cand, n1) {
            n2 = n1;
            n1 = cand;
        } else if closer(cand, n2) {
            n2 = cand;
        }
    }
    (n1, n2)
}
