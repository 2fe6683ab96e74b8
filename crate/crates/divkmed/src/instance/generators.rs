//! Instance generators: hardness reductions, the swap-gap construction, and
//! seeded random geometric instances.

use rand::Rng;

use super::{DistanceSource, Graph, Instance, InstanceError, Metric, PointSet};
use crate::rng::rng_from_seed;

/// Dominating-set reduction: clients and facilities are the vertices, every
/// distance is 1, and vertex `u` contributes the group `{u} ∪ N(u)` with
/// lower bound 1. A feasible set of size `k` exists iff the graph has a
/// dominating set of size at most `k`.
pub fn from_domset(g: &Graph, k: usize) -> Result<Instance, InstanceError> {
    if g.n() == 0 {
        return Err(InstanceError::Param("graph has no vertices".into()));
    }
    if k == 0 {
        return Err(InstanceError::Param("k must be at least 1".into()));
    }
    let n = g.n();
    let groups = (0..n)
        .map(|u| {
            let mut grp = vec![u];
            grp.extend_from_slice(g.neighbors(u));
            grp
        })
        .collect();
    Instance::new(
        n,
        n,
        k,
        groups,
        vec![1; n],
        DistanceSource::Matrix(vec![vec![1.0; n]; n]),
    )
}

/// Vertex-cover reduction: one group `{u, v}` per edge, unit distances,
/// all lower bounds 1. A feasible set of size `k` exists iff the graph has a
/// vertex cover of size at most `k`.
pub fn from_vertexcover(g: &Graph, k: usize) -> Result<Instance, InstanceError> {
    if g.n_edges() == 0 {
        return Err(InstanceError::Param("graph has no edges".into()));
    }
    if k == 0 {
        return Err(InstanceError::Param("k must be at least 1".into()));
    }
    let n = g.n();
    let groups = g.edges().into_iter().map(|(u, v)| vec![u, v]).collect();
    let m = g.n_edges();
    Instance::new(
        n,
        n,
        k,
        groups,
        vec![1; m],
        DistanceSource::Matrix(vec![vec![1.0; n]; n]),
    )
}

/// Two-client, four-facility instance on which single-swap search can be
/// stuck at cost `2c` while the feasible optimum costs 2.
///
/// Facilities 0 and 1 sit at distance `c` from both clients, facilities 2
/// and 3 at distance 1. The four groups `{0,2}`, `{1,3}`, `{0,3}`, `{1,2}`
/// each demand one center and `k = 2`, so the only feasible pairs are
/// `{0,1}` and `{2,3}`: every single swap out of `{0,1}` breaks a group.
pub fn fig2_counterexample(c: f64) -> Result<Instance, InstanceError> {
    if !c.is_finite() || c <= 1.0 {
        return Err(InstanceError::Param(format!(
            "gap parameter must be finite and > 1, got {}",
            c
        )));
    }
    Instance::new(
        2,
        4,
        2,
        vec![vec![0, 2], vec![1, 3], vec![0, 3], vec![1, 2]],
        vec![1, 1, 1, 1],
        DistanceSource::Matrix(vec![vec![c, c, 1.0, 1.0], vec![c, c, 1.0, 1.0]]),
    )
}

/// Parameters for [`random_metric`].
#[derive(Debug, Clone)]
pub struct RandomMetricParams {
    pub n_clients: usize,
    pub n_facilities: usize,
    /// Number of groups.
    pub t: usize,
    pub k: usize,
    pub lower_bounds: Vec<usize>,
    /// Probability that a facility also joins each non-base group.
    pub overlap: f64,
    /// Point dimension.
    pub dim: usize,
    pub seed: u64,
}

impl RandomMetricParams {
    /// `n` clients and facilities, `t` groups with lower bound 1 each,
    /// disjoint groups, points in the unit square.
    pub fn new(n: usize, t: usize, k: usize, seed: u64) -> Self {
        RandomMetricParams {
            n_clients: n,
            n_facilities: n,
            t,
            k,
            lower_bounds: vec![1; t],
            overlap: 0.0,
            dim: 2,
            seed,
        }
    }
}

const GROUP_RETRIES: usize = 100;

/// Seeded random instance: client and facility points uniform in
/// `[0,1]^dim` under the L1 metric; each facility gets a base group uniformly
/// at random and joins every other group independently with probability
/// `overlap`.
///
/// Base assignments are redrawn (up to a bounded retry count) until every
/// group's base membership covers its lower bound and no group is empty, so
/// generated instances are always feasible.
pub fn random_metric(params: &RandomMetricParams) -> Result<Instance, InstanceError> {
    let p = params;
    if p.n_clients == 0 || p.n_facilities == 0 {
        return Err(InstanceError::Param("need at least one point".into()));
    }
    if p.t == 0 {
        return Err(InstanceError::Param("need at least one group".into()));
    }
    if p.k == 0 || p.k > p.n_facilities {
        return Err(InstanceError::Param(format!(
            "k = {} out of range 1..={}",
            p.k, p.n_facilities
        )));
    }
    if p.lower_bounds.len() != p.t {
        return Err(InstanceError::Param(format!(
            "{} lower bounds for {} groups",
            p.lower_bounds.len(),
            p.t
        )));
    }
    // Disjoint groups cannot share centers, so the bounds must fit in k;
    // overlapping groups may legitimately demand more than k in total.
    let sum_r: usize = p.lower_bounds.iter().sum();
    if p.overlap == 0.0 && sum_r > p.k {
        return Err(InstanceError::Param(format!(
            "lower bounds sum to {} which exceeds k = {}",
            sum_r, p.k
        )));
    }
    if !(0.0..1.0).contains(&p.overlap) {
        return Err(InstanceError::Param(format!(
            "overlap must be in [0, 1), got {}",
            p.overlap
        )));
    }
    if p.dim == 0 {
        return Err(InstanceError::Param("dimension must be at least 1".into()));
    }

    let mut rng = rng_from_seed(p.seed);
    let draw_points = |rng: &mut rand_chacha::ChaCha8Rng, count: usize| -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..p.dim).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect()
    };
    let clients = draw_points(&mut rng, p.n_clients);
    let facilities = draw_points(&mut rng, p.n_facilities);

    let mut base = None;
    for _ in 0..GROUP_RETRIES {
        let assignment: Vec<usize> = (0..p.n_facilities)
            .map(|_| rng.gen_range(0..p.t))
            .collect();
        let mut sizes = vec![0usize; p.t];
        for &g in &assignment {
            sizes[g] += 1;
        }
        let ok = (0..p.t).all(|i| sizes[i] >= p.lower_bounds[i].max(1));
        if ok {
            base = Some(assignment);
            break;
        }
    }
    let base = base.ok_or_else(|| {
        InstanceError::Param(format!(
            "could not draw base groups covering lower bounds {:?} with {} facilities",
            p.lower_bounds, p.n_facilities
        ))
    })?;

    let mut groups = vec![Vec::new(); p.t];
    for (f, &b) in base.iter().enumerate() {
        groups[b].push(f);
        for (g, group) in groups.iter_mut().enumerate() {
            if g != b && p.overlap > 0.0 && rng.gen_bool(p.overlap) {
                group.push(f);
            }
        }
    }

    Instance::new(
        p.n_clients,
        p.n_facilities,
        p.k,
        groups,
        p.lower_bounds.clone(),
        DistanceSource::Points(PointSet {
            clients,
            facilities,
            metric: Metric::L1,
        }),
    )
}
