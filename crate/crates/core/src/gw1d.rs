//! One-dimensional GW₂ between equal-size projected samples.
//!
//! For sorted projections `a` and `b` the solver evaluates
//!
//! ```text
//! cost(σ) = (1/n²) Σ_{i,j} ((a_i − a_j)² − (b_σ(i) − b_σ(j))²)²
//! ```
//!
//! for the identity and anti-identity assignments and keeps the smaller
//! one. [`gw2_1d`] evaluates the double sum directly; [`gw2_1d_fast`] uses
//! the factorisation `(a_i−a_j)² − (b_i−b_j)² = (p_i−p_j)(q_i−q_j)` with
//! `p = a − b`, `q = a + b`, whose double sum reduces to power sums:
//!
//! ```text
//! Σ_{i,j} (p_i−p_j)²(q_i−q_j)² = 2nΣp²q² + 2Σp²Σq² + 4(Σpq)²
//!                              − 4Σp²q·Σq − 4Σpq²·Σp
//! ```
//!
//! After centering `p` and `q` the last two terms vanish and the remaining
//! ones are nonnegative, so the O(n) evaluation does not cancel.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::sphere::UnitDirection;

/// Largest `n` accepted by [`gw2_1d_bruteforce`].
pub const BRUTEFORCE_1D_MAX_N: usize = 9;
/// Largest `n` accepted by [`gw2_cloud_bruteforce`].
pub const BRUTEFORCE_CLOUD_MAX_N: usize = 8;
/// Mean magnitude accepted as centered by [`s1_diagnostic`].
pub const CENTERED_TOL: f64 = 1e-10;

/// Projected values sorted ascending, with the argsort that produced them:
/// `values[k] == original[order[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedProjection {
    pub values: Vec<f64>,
    pub order: Vec<usize>,
}

impl SortedProjection {
    pub fn from_values(original: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..original.len()).collect();
        order.sort_by(|&i, &j| original[i].total_cmp(&original[j]));
        let values = order.iter().map(|&i| original[i]).collect();
        Self { values, order }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Assignment {
    /// k-th smallest to k-th smallest.
    Identity,
    /// k-th smallest to k-th largest.
    AntiIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gw1dResult {
    pub value: f64,
    pub assignment: Assignment,
    /// Coupling-independent term of the centered decomposition; logging only.
    pub s1: f64,
}

pub fn project(cloud: &PointCloud, theta: &UnitDirection) -> Result<SortedProjection> {
    if theta.dim() != cloud.d() {
        return Err(Error::domain(format!(
            "direction has dimension {}, cloud has {}",
            theta.dim(),
            cloud.d()
        )));
    }
    Ok(SortedProjection::from_values(&cloud.project(theta.as_slice())))
}

fn check_lengths(n_x: usize, n_y: usize) -> Result<()> {
    if n_x != n_y {
        return Err(Error::domain(format!(
            "1D GW needs equal sample counts, got {n_x} and {n_y}"
        )));
    }
    if n_x < 2 {
        return Err(Error::domain("1D GW needs at least 2 samples"));
    }
    Ok(())
}

/// Direct O(n²) evaluation of `cost` for `a_i` paired with `b_i`.
pub fn paired_cost_naive(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            let r = da * da - db * db;
            total += r * r;
        }
    }
    total / (n * n) as f64
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

/// O(n) evaluation of `cost` for `a_i` paired with `b_i`.
pub fn paired_cost_fast(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let p = centered(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
    let q = centered(&a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>());
    let (mut sp, mut sq, mut sp2, mut sq2, mut spq, mut sp2q2, mut sp2q, mut spq2) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&pi, &qi) in p.iter().zip(&q) {
        let p2 = pi * pi;
        let q2 = qi * qi;
        sp += pi;
        sq += qi;
        sp2 += p2;
        sq2 += q2;
        spq += pi * qi;
        sp2q2 += p2 * q2;
        sp2q += p2 * qi;
        spq2 += pi * q2;
    }
    let nf = n as f64;
    let total = 2.0 * nf * sp2q2 + 2.0 * sp2 * sq2 + 4.0 * spq * spq - 4.0 * sp2q * sq - 4.0 * spq2 * sp;
    (total / (nf * nf)).max(0.0)
}

fn reversed(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

fn pick(id: f64, anti: f64) -> (f64, Assignment) {
    if anti < id {
        (anti, Assignment::AntiIdentity)
    } else {
        (id, Assignment::Identity)
    }
}

fn s1_of_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    s1_moments(&centered(xs), &centered(ys))
}

/// Identity vs anti-identity by direct O(n²) double sums.
pub fn gw2_1d(xs: &SortedProjection, ys: &SortedProjection) -> Result<Gw1dResult> {
    check_lengths(xs.len(), ys.len())?;
    let id = paired_cost_naive(&xs.values, &ys.values);
    let anti = paired_cost_naive(&xs.values, &reversed(&ys.values));
    let (value, assignment) = pick(id, anti);
    Ok(Gw1dResult {
        value,
        assignment,
        s1: s1_of_sorted(&xs.values, &ys.values),
    })
}

/// Same as [`gw2_1d`] with O(n) cost evaluation after sorting.
pub fn gw2_1d_fast(xs: &SortedProjection, ys: &SortedProjection) -> Result<Gw1dResult> {
    check_lengths(xs.len(), ys.len())?;
    let (value, assignment) = gw2_1d_sorted_values(&xs.values, &ys.values);
    Ok(Gw1dResult {
        value,
        assignment,
        s1: s1_of_sorted(&xs.values, &ys.values),
    })
}

/// The hot path used by the estimators: sorted values in, cost and winning
/// assignment out, no S₁.
pub fn gw2_1d_sorted_values(a: &[f64], b: &[f64]) -> (f64, Assignment) {
    let id = paired_cost_fast(a, b);
    let anti = paired_cost_fast(a, &reversed(b));
    pick(id, anti)
}

/// Exact minimum of `cost(σ)` over all `n!` permutations (Heap's algorithm).
pub fn gw2_1d_bruteforce(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_lengths(xs.len(), ys.len())?;
    let n = xs.len();
    if n > BRUTEFORCE_1D_MAX_N {
        return Err(Error::domain(format!(
            "brute force limited to n <= {BRUTEFORCE_1D_MAX_N}, got {n}"
        )));
    }
    let dx: Vec<f64> = pairwise(n, |i, j| (xs[i] - xs[j]).powi(2));
    let dy: Vec<f64> = pairwise(n, |i, j| (ys[i] - ys[j]).powi(2));
    Ok(min_over_permutations(n, &dx, &dy))
}

/// Permutation-restricted GW₂² between clouds using ambient squared
/// distances. An upper bound on the GW infimum over all couplings.
pub fn gw2_cloud_bruteforce(mu: &PointCloud, nu: &PointCloud) -> Result<f64> {
    check_lengths(mu.n(), nu.n())?;
    let n = mu.n();
    if n > BRUTEFORCE_CLOUD_MAX_N {
        return Err(Error::domain(format!(
            "brute force limited to n <= {BRUTEFORCE_CLOUD_MAX_N}, got {n}"
        )));
    }
    Ok(min_over_permutations(
        n,
        &mu.squared_distance_matrix(),
        &nu.squared_distance_matrix(),
    ))
}

fn pairwise(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = f(i, j);
        }
    }
    out
}

fn perm_cost(n: usize, dx: &[f64], dy: &[f64], perm: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let pi = perm[i];
        for j in 0..n {
            let r = dx[i * n + j] - dy[pi * n + perm[j]];
            total += r * r;
        }
    }
    total
}

fn min_over_permutations(n: usize, dx: &[f64], dy: &[f64]) -> f64 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm_cost(n, dx, dy, &perm);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(perm_cost(n, dx, dy, &perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best / (n * n) as f64
}

fn s1_moments(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let quartic = |v: &[f64]| {
        let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
        for &t in v {
            let t2 = t * t;
            s1 += t;
            s2 += t2;
            s3 += t2 * t;
            s4 += t2 * t2;
        }
        (2.0 * n * s4 - 8.0 * s3 * s1 + 6.0 * s2 * s2, s2)
    };
    let (qx, sx2) = quartic(x);
    let (qy, sy2) = quartic(y);
    qx / (n * n) + qy / (n * n) - 4.0 * (sx2 / n) * (sy2 / n)
}

/// `∫(x−x′)⁴dμ⊗μ + ∫(y−y′)⁴dν⊗ν − 4∫x²y²dμ⊗ν` for centered empirical inputs.
pub fn s1_diagnostic(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_lengths(xs.len(), ys.len())?;
    for (name, v) in [("xs", xs), ("ys", ys)] {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        if m.abs() > CENTERED_TOL {
            return Err(Error::domain(format!(
                "{name} has mean {m:e}; center the inputs before computing S1"
            )));
        }
    }
    Ok(s1_moments(xs, ys))
}
