//! The seven sliced-GW estimators.
//!
//! Every estimator reduces to evaluating [`slice_cost`] along sampled or
//! optimised directions. Per-direction work runs on the rayon pool; each
//! direction draws from its own [`RngStream`] and all reductions are done
//! sequentially in index order, so results do not depend on the number of
//! threads.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::gw1d::{self, Assignment};
use crate::linalg::{norm, normalized, tangent_part};
use crate::rapd::{normalize_irp, sample_rasd_one, DEFAULT_IRP_CONSTANT};
use crate::rng::RngStream;
use crate::spec::{Energy, EstimatorSpec, Method, ScaleFamily};
use crate::sphere::{householder_to, sample_e1_frame, sample_scale_family, sample_uniform, UnitDirection};

/// Step of the central finite differences used by Max-SGW and DSGW.
pub const FD_STEP: f64 = 1e-5;
/// Backtracking in Max-SGW gives up once the step falls below this.
pub const MIN_ASCENT_STEP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub direction: UnitDirection,
    pub cost: f64,
    /// Contribution of `cost` to `raw_mean`: `raw_mean = Σ weight·cost`.
    pub weight: f64,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    /// `raw_mean.sqrt()`.
    pub value: f64,
    pub raw_mean: f64,
    pub per_projection: Vec<ProjectionRecord>,
    /// Seconds.
    pub wall_time: f64,
    pub spec: EstimatorSpec,
    pub seed: u64,
    pub stream_index: u64,
}

impl EstimateResult {
    fn finish(
        raw_mean: f64,
        per_projection: Vec<ProjectionRecord>,
        started: Instant,
        spec: EstimatorSpec,
        stream: RngStream,
    ) -> Result<Self> {
        if !raw_mean.is_finite() {
            return Err(Error::Numeric(format!(
                "{} produced a non-finite aggregate cost",
                spec.method
            )));
        }
        let raw_mean = raw_mean.max(0.0);
        Ok(Self {
            value: raw_mean.sqrt(),
            raw_mean,
            per_projection,
            wall_time: started.elapsed().as_secs_f64(),
            spec,
            seed: stream.seed,
            stream_index: stream.stream_index,
        })
    }

    pub fn costs(&self) -> Vec<f64> {
        self.per_projection.iter().map(|r| r.cost).collect()
    }
}

fn check_pair(mu: &PointCloud, nu: &PointCloud) -> Result<()> {
    if mu.n() != nu.n() {
        return Err(Error::domain(format!(
            "clouds have {} and {} points; subsample to a common size first",
            mu.n(),
            nu.n()
        )));
    }
    if mu.d() != nu.d() {
        return Err(Error::domain(format!(
            "clouds have dimensions {} and {}; pad the lower-dimensional one first",
            mu.d(),
            nu.d()
        )));
    }
    Ok(())
}

fn sorted_projection(cloud: &PointCloud, theta: &[f64]) -> Vec<f64> {
    let mut v = cloud.project(theta);
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// `GW₂²(θ♯μ, θ♯ν)` and the winning assignment. `theta` need not be unit.
pub fn slice_cost(mu: &PointCloud, nu: &PointCloud, theta: &[f64]) -> (f64, Assignment) {
    gw1d::gw2_1d_sorted_values(&sorted_projection(mu, theta), &sorted_projection(nu, theta))
}

/// [`slice_cost`] along each direction, in order.
pub fn sliced_costs(mu: &PointCloud, nu: &PointCloud, directions: &[UnitDirection]) -> Result<Vec<(f64, Assignment)>> {
    check_pair(mu, nu)?;
    if let Some(bad) = directions.iter().find(|t| t.dim() != mu.d()) {
        return Err(Error::domain(format!(
            "direction has dimension {}, clouds have {}",
            bad.dim(),
            mu.d()
        )));
    }
    Ok(directions
        .par_iter()
        .map(|t| slice_cost(mu, nu, t.as_slice()))
        .collect())
}

/// Normalised weights `f(c_l)/Σf(c_j)`. Exp is shifted by the maximum cost;
/// an all-zero Identity energy falls back to uniform weights.
pub fn energy_weights(costs: &[f64], energy: Energy) -> Vec<f64> {
    let raw: Vec<f64> = match energy {
        Energy::Exp => {
            let m = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            costs.iter().map(|c| (c - m).exp()).collect()
        }
        Energy::Identity => costs.to_vec(),
    };
    let s: f64 = raw.iter().sum();
    if s > 0.0 && s.is_finite() {
        raw.iter().map(|w| w / s).collect()
    } else {
        vec![1.0 / costs.len() as f64; costs.len()]
    }
}

/// Draws `count` directions with `draw(l, rng)` on stream `offset(l)` and
/// evaluates them in parallel.
fn sample_and_evaluate<F>(
    mu: &PointCloud,
    nu: &PointCloud,
    count: usize,
    stream: RngStream,
    draw: F,
) -> Result<Vec<(UnitDirection, f64, Assignment)>>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<UnitDirection> + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|l| {
            let theta = draw(&mut stream.offset(l).rng())?;
            let (cost, assignment) = slice_cost(mu, nu, theta.as_slice());
            Ok((theta, cost, assignment))
        })
        .collect()
}

fn unweighted(
    draws: Vec<(UnitDirection, f64, Assignment)>,
    started: Instant,
    spec: EstimatorSpec,
    stream: RngStream,
) -> Result<EstimateResult> {
    let m = draws.len() as f64;
    let mut total = 0.0;
    for (_, c, _) in &draws {
        total += c;
    }
    let records = draws
        .into_iter()
        .map(|(direction, cost, assignment)| ProjectionRecord {
            direction,
            cost,
            weight: 1.0 / m,
            assignment,
        })
        .collect();
    EstimateResult::finish(total / m, records, started, spec, stream)
}

fn require_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::domain(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Runs the estimator selected by `spec.method`.
pub fn estimate(mu: &PointCloud, nu: &PointCloud, spec: &EstimatorSpec, stream: RngStream) -> Result<EstimateResult> {
    spec.validate()?;
    let mut res = match spec.method {
        Method::Sgw => estimate_sgw(mu, nu, spec.projections, stream),
        Method::Rasgw => estimate_rasgw(mu, nu, &spec.scale, spec.projections, stream),
        Method::Iwrasgw => estimate_iwrasgw(mu, nu, &spec.scale, spec.inner, spec.outer, spec.energy, stream),
        Method::MaxSgw => estimate_max_sgw(mu, nu, spec.opt_iters, spec.step_size, spec.restarts, stream),
        Method::Dsgw => estimate_dsgw(mu, nu, &spec.scale, spec.inner, spec.opt_iters, spec.step_size, stream),
        Method::Ebsgw => estimate_ebsgw(mu, nu, spec.inner, spec.energy, stream),
        Method::Rpsgw => estimate_rpsgw(mu, nu, &spec.scale, spec.projections, stream),
    }?;
    res.spec = spec.clone();
    Ok(res)
}

/// Uniform directions, plain mean.
pub fn estimate_sgw(mu: &PointCloud, nu: &PointCloud, m: usize, stream: RngStream) -> Result<EstimateResult> {
    let started = Instant::now();
    check_pair(mu, nu)?;
    require_positive("projections", m)?;
    let d = mu.d();
    let draws = sample_and_evaluate(mu, nu, m, stream, |r| sample_uniform(d, r))?;
    unweighted(
        draws,
        started,
        EstimatorSpec::new(Method::Sgw).with_projections(m),
        stream,
    )
}

/// Directions from the relation-aware slicing distribution, plain mean.
pub fn estimate_rasgw(
    mu: &PointCloud,
    nu: &PointCloud,
    scale: &ScaleFamily,
    m: usize,
    stream: RngStream,
) -> Result<EstimateResult> {
    let started = Instant::now();
    check_pair(mu, nu)?;
    require_positive("projections", m)?;
    ScaleFamily::new(scale.family, scale.kappa)?;
    let draws = sample_and_evaluate(mu, nu, m, stream, |r| sample_rasd_one(mu, nu, scale, r))?;
    unweighted(
        draws,
        started,
        EstimatorSpec::new(Method::Rasgw).with_projections(m).with_scale(*scale),
        stream,
    )
}

/// `H` groups of `L` relation-aware directions, each group reweighted by
/// `f(cost)`. Direction `l` of group `h` uses stream `offset(h·L + l)`, so
/// `L = 1` reproduces [`estimate_rasgw`] with `M = H`.
pub fn estimate_iwrasgw(
    mu: &PointCloud,
    nu: &PointCloud,
    scale: &ScaleFamily,
    l: usize,
    h: usize,
    energy: Energy,
    stream: RngStream,
) -> Result<EstimateResult> {
    let started = Instant::now();
    check_pair(mu, nu)?;
    require_positive("inner", l)?;
    require_positive("outer", h)?;
    ScaleFamily::new(scale.family, scale.kappa)?;
    let draws = sample_and_evaluate(mu, nu, l * h, stream, |r| sample_rasd_one(mu, nu, scale, r))?;
    let mut total = 0.0;
    let mut records = Vec::with_capacity(draws.len());
    let mut it = draws.into_iter();
    for _ in 0..h {
        let group: Vec<_> = it.by_ref().take(l).collect();
        let costs: Vec<f64> = group.iter().map(|g| g.1).collect();
        let w = energy_weights(&costs, energy);
        let mut acc = 0.0;
        for (c, wi) in costs.iter().zip(&w) {
            acc += c * wi;
        }
        total += acc;
        for ((direction, cost, assignment), wi) in group.into_iter().zip(w) {
            records.push(ProjectionRecord {
                direction,
                cost,
                weight: wi / h as f64,
                assignment,
            });
        }
    }
    let spec = EstimatorSpec::new(Method::Iwrasgw)
        .with_inner(l)
        .with_outer(h)
        .with_scale(*scale)
        .with_energy(energy);
    EstimateResult::finish(total / h as f64, records, started, spec, stream)
}

/// `L` uniform directions with self-normalised weights `f(cost)`.
pub fn estimate_ebsgw(
    mu: &PointCloud,
    nu: &PointCloud,
    l: usize,
    energy: Energy,
    stream: RngStream,
) -> Result<EstimateResult> {
    let started = Instant::now();
    check_pair(mu, nu)?;
    require_positive("inner", l)?;
    let d = mu.d();
    let draws = sample_and_evaluate(mu, nu, l, stream, |r| sample_uniform(d, r))?;
    let costs: Vec<f64> = draws.iter().map(|g| g.1).collect();
    let w = energy_weights(&costs, energy);
    let mut total = 0.0;
    for (c, wi) in costs.iter().zip(&w) {
        total += c * wi;
    }
    let records = draws
        .into_iter()
        .zip(w)
        .map(|((direction, cost, assignment), weight)| ProjectionRecord {
            direction,
            cost,
            weight,
            assignment,
        })
        .collect();
    let spec = EstimatorSpec::new(Method::Ebsgw).with_inner(l).with_energy(energy);
    EstimateResult::finish(total, records, started, spec, stream)
}

/// Cross-pair directions: `x ∼ μ`, `y ∼ ν`, location `(x − y)/‖x − y‖`.
pub fn estimate_rpsgw(
    mu: &PointCloud,
    nu: &PointCloud,
    scale: &ScaleFamily,
    m: usize,
    stream: RngStream,
) -> Result<EstimateResult> {
    let started = Instant::now();
    check_pair(mu, nu)?;
    require_positive("projections", m)?;
    ScaleFamily::new(scale.family, scale.kappa)?;
    let draws = sample_and_evaluate(mu, nu, m, stream, |r| {
        let x = mu.row(r.random_range(0..mu.n()));
        let y = nu.row(r.random_range(0..nu.n()));
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let loc = normalize_irp(&diff, DEFAULT_IRP_CONSTANT);
        sample_scale_family(scale, &loc, r)
    })?;
    unweighted(
        draws,
        started,
        EstimatorSpec::new(Method::Rpsgw).with_projections(m).with_scale(*scale),
        stream,
    )
}

/// Central-difference gradient of `f` at `x`, projected onto the tangent
/// space of the sphere at `x`.
fn fd_tangent_gradient(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + FD_STEP;
        let up = f(&probe);
        probe[k] = x[k] - FD_STEP;
        let down = f(&probe);
        probe[k] = x[k];
        g[k] = (up - down) / (2.0 * FD_STEP);
    }
    tangent_part(&g, x)
}

fn ascend_restart(
    mu: &PointCloud,
    nu: &PointCloud,
    t: usize,
    step: f64,
    stream: RngStream,
) -> Result<(UnitDirection, f64, Assignment)> {
    let d = mu.d();
    let mut theta = sample_uniform(d, &mut stream.rng())?.into_vec();
    let (mut cost, mut assignment) = slice_cost(mu, nu, &theta);
    if d == 1 {
        return Ok((UnitDirection::new(theta)?, cost, assignment));
    }
    for _ in 0..t {
        let g = fd_tangent_gradient(&theta, |p| slice_cost(mu, nu, p).0);
        let Some(dir) = normalized(&g, 0.0) else {
            break;
        };
        let mut eta = step;
        let mut moved = false;
        while eta >= MIN_ASCENT_STEP {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(a, b)| a + eta * b).collect();
            let cand = normalized(&cand, 0.0).expect("unit plus tangent step is nonzero");
            let (c, a) = slice_cost(mu, nu, &cand);
            if c > cost {
                theta = cand;
                cost = c;
                assignment = a;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((UnitDirection::normalize(&theta).expect("unit"), cost, assignment))
}

/// Best of `restarts` projected ascents on `θ ↦ GW₂²(θ♯μ, θ♯ν)`, each
/// taking up to `t` normalised-gradient steps of length `step` with
/// backtracking. Restart `r` uses stream `offset(r)`.
pub fn estimate_max_sgw(
    mu: &PointCloud,
    nu: &PointCloud,
    t: usize,
    step: f64,
    restarts: usize,
    stream: RngStream,
) -> Result<EstimateResult> {
    let started = Instant::now();
    check_pair(mu, nu)?;
    require_positive("opt_iters", t)?;
    require_positive("restarts", restarts)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain("step size must be positive"));
    }
    let runs: Vec<_> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| ascend_restart(mu, nu, t, step, stream.offset(r)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = i;
        }
    }
    let raw = runs[best].1;
    let records = runs
        .into_iter()
        .enumerate()
        .map(|(i, (direction, cost, assignment))| ProjectionRecord {
            direction,
            cost,
            weight: if i == best { 1.0 } else { 0.0 },
            assignment,
        })
        .collect();
    let spec = EstimatorSpec::new(Method::MaxSgw)
        .with_opt_iters(t)
        .with_step_size(step)
        .with_restarts(restarts);
    EstimateResult::finish(raw, records, started, spec, stream)
}

fn mean_cost_at(mu: &PointCloud, nu: &PointCloud, location: &[f64], frame: &[Vec<f64>]) -> f64 {
    let loc = match UnitDirection::normalize(location) {
        Some(l) => l,
        None => return 0.0,
    };
    let mut total = 0.0;
    for v in frame {
        total += slice_cost(mu, nu, householder_to(&loc, v).as_slice()).0;
    }
    total / frame.len() as f64
}

/// Optimises the location `ε` of `σ_κ(·; ε)` by `t` stochastic ascent
/// steps, each using `l` common draws in the `e₁` frame and a central
/// finite-difference gradient in `ε`; the value is the mean cost over `l`
/// fresh draws at the final location.
pub fn estimate_dsgw(
    mu: &PointCloud,
    nu: &PointCloud,
    scale: &ScaleFamily,
    l: usize,
    t: usize,
    step: f64,
    stream: RngStream,
) -> Result<EstimateResult> {
    let started = Instant::now();
    check_pair(mu, nu)?;
    require_positive("inner", l)?;
    require_positive("opt_iters", t)?;
    ScaleFamily::new(scale.family, scale.kappa)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain("step size must be positive"));
    }
    let d = mu.d();
    let mut eps = sample_uniform(d, &mut stream.child(0).rng())?.into_vec();
    if d > 1 {
        for it in 0..t as u64 {
            let base = stream.child(1).offset(it * l as u64);
            let frame: Vec<Vec<f64>> = (0..l as u64)
                .map(|j| sample_e1_frame(scale, d, &mut base.offset(j).rng()))
                .collect();
            let g = fd_tangent_gradient(&eps, |p| mean_cost_at(mu, nu, p, &frame));
            if norm(&g) == 0.0 || !norm(&g).is_finite() {
                continue;
            }
            let g = normalized(&g, 0.0).expect("nonzero gradient");
            let cand: Vec<f64> = eps.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            eps = normalized(&cand, 0.0).expect("unit plus tangent step is nonzero");
        }
    }
    let location = UnitDirection::normalize(&eps).expect("unit");
    let draws = sample_and_evaluate(mu, nu, l, stream.child(2), |r| sample_scale_family(scale, &location, r))?;
    let spec = EstimatorSpec::new(Method::Dsgw)
        .with_inner(l)
        .with_opt_iters(t)
        .with_step_size(step)
        .with_scale(*scale);
    unweighted(draws, started, spec, stream)
}
