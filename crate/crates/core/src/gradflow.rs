//! Frozen-assignment gradients of sliced GW objectives and gradient flows
//! of a source cloud towards a target cloud.
//!
//! For a direction θ, write `a_i = θᵀx_i` and `b_i = θᵀy_π(i)`, where π
//! sends the i-th source point to the target point it is coupled with by the
//! winning 1D assignment. With θ and π held fixed,
//!
//! ```text
//! C = (1/n²) Σ_{i,j} (a_ij² − b_ij²)²,     a_ij = a_i − a_j,  b_ij = b_i − b_j
//! ∂C/∂x_i = (8/n²) Σ_j (a_ij² − b_ij²) a_ij · θ
//! ```
//!
//! The sum over `j` is evaluated in O(n) from power sums.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{pad_to_common, PointCloud};
use crate::error::{Error, Result};
use crate::estimators::{self, energy_weights};
use crate::gw1d::{self, Assignment};
use crate::rapd::sample_rasd_one;
use crate::rng::RngStream;
use crate::spec::{Energy, EstimatorSpec, Method, ScaleFamily};
use crate::sphere::{sample_uniform, UnitDirection};

/// Points per subsample of the permutation-GW reference.
pub const PERM_GW_SUBSAMPLE: usize = 8;
/// Subsample draws averaged by the permutation-GW reference.
pub const PERM_GW_DRAWS: usize = 16;
/// Directions used by the RASGW probe reference.
pub const PROBE_PROJECTIONS: usize = 500;

/// A direction with its sorting-induced coupling frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenSlice {
    pub theta: UnitDirection,
    /// `target_of[i]` is the target row coupled with source row `i`.
    pub target_of: Vec<usize>,
    pub assignment: Assignment,
    pub cost: f64,
}

/// Sorts both projections along `theta` and freezes the winning coupling.
pub fn freeze_slice(source: &PointCloud, target: &PointCloud, theta: UnitDirection) -> FrozenSlice {
    let xs = gw1d::SortedProjection::from_values(&source.project(theta.as_slice()));
    let ys = gw1d::SortedProjection::from_values(&target.project(theta.as_slice()));
    let (cost, assignment) = gw1d::gw2_1d_sorted_values(&xs.values, &ys.values);
    let n = xs.len();
    let mut target_of = vec![0; n];
    for (rank, &i) in xs.order.iter().enumerate() {
        let pos = match assignment {
            Assignment::Identity => rank,
            Assignment::AntiIdentity => n - 1 - rank,
        };
        target_of[i] = ys.order[pos];
    }
    FrozenSlice {
        theta,
        target_of,
        assignment,
        cost,
    }
}

fn paired_projections(source: &PointCloud, target: &PointCloud, slice: &FrozenSlice) -> (Vec<f64>, Vec<f64>) {
    let a = source.project(slice.theta.as_slice());
    let tb = target.project(slice.theta.as_slice());
    let b = slice.target_of.iter().map(|&j| tb[j]).collect();
    (a, b)
}

/// The frozen objective `C` at the current source positions.
pub fn frozen_slice_cost(source: &PointCloud, target: &PointCloud, slice: &FrozenSlice) -> f64 {
    let (a, b) = paired_projections(source, target, slice);
    gw1d::paired_cost_fast(&a, &b)
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

/// `∂C/∂a_i` for every source point; the gradient in `x_i` is this times θ.
pub fn frozen_slice_coefficients(source: &PointCloud, target: &PointCloud, slice: &FrozenSlice) -> Vec<f64> {
    let (a, b) = paired_projections(source, target, slice);
    let a = centered(&a);
    let b = centered(&b);
    let n = a.len();
    let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let q: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let (mut sa, mut sp, mut sq, mut spq, mut spa, mut sqa, mut spqa) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        sa += a[i];
        sp += p[i];
        sq += q[i];
        spq += p[i] * q[i];
        spa += p[i] * a[i];
        sqa += q[i] * a[i];
        spqa += p[i] * q[i] * a[i];
    }
    let nf = n as f64;
    let k = 8.0 / (nf * nf);
    (0..n)
        .map(|i| {
            // Σ_j (p_i−p_j)(q_i−q_j)(a_i−a_j)
            let s = nf * p[i] * q[i] * a[i] - p[i] * q[i] * sa - p[i] * a[i] * sq - q[i] * a[i] * sp
                + p[i] * sqa
                + q[i] * spa
                + a[i] * spq
                - spqa;
            k * s
        })
        .collect()
}

/// Row-major n×d gradient of [`frozen_slice_cost`] in the source points.
pub fn frozen_slice_gradient(source: &PointCloud, target: &PointCloud, slice: &FrozenSlice) -> Vec<f64> {
    let coef = frozen_slice_coefficients(source, target, slice);
    let t = slice.theta.as_slice();
    coef.iter().flat_map(|c| t.iter().map(move |x| c * x)).collect()
}

/// Direct O(n²) evaluation of [`frozen_slice_gradient`].
pub fn frozen_slice_gradient_naive(source: &PointCloud, target: &PointCloud, slice: &FrozenSlice) -> Vec<f64> {
    let (a, b) = paired_projections(source, target, slice);
    let n = a.len();
    let k = 8.0 / (n * n) as f64;
    let t = slice.theta.as_slice();
    let mut out = Vec::with_capacity(n * t.len());
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            s += (da * da - db * db) * da;
        }
        out.extend(t.iter().map(|x| k * s * x));
    }
    out
}

/// Aggregated objective and gradient over a set of frozen slices.
#[derive(Debug, Clone)]
pub struct GradientEstimate {
    /// The aggregated p-th-power cost (the estimator's `raw_mean`).
    pub raw: f64,
    /// Row-major n×d.
    pub grad: Vec<f64>,
    pub slices: Vec<FrozenSlice>,
    /// `d raw / d cost_l` for each slice.
    pub slice_weights: Vec<f64>,
}

/// Sensitivities `∂R/∂c_l` of `R = Σ c_l w_l` with self-normalised
/// `w_l = f(c_l)/Σ f(c_k)`; equal to `[f(c_l) + (c_l − R) f′(c_l)] / Σ f`.
pub fn weighted_sensitivities(costs: &[f64], energy: Energy) -> (f64, Vec<f64>) {
    let w = energy_weights(costs, energy);
    let r: f64 = costs.iter().zip(&w).map(|(c, wi)| c * wi).sum();
    let sens = match energy {
        Energy::Exp => costs.iter().zip(&w).map(|(c, wi)| wi * (1.0 + c - r)).collect(),
        Energy::Identity => {
            let s: f64 = costs.iter().sum();
            if s > 0.0 && s.is_finite() {
                costs.iter().map(|c| (2.0 * c - r) / s).collect()
            } else {
                w
            }
        }
    };
    (r, sens)
}

fn sample_directions(
    source: &PointCloud,
    target: &PointCloud,
    spec: &EstimatorSpec,
    stream: RngStream,
) -> Result<Vec<UnitDirection>> {
    let d = source.d();
    let count = spec.direction_budget();
    let scale: ScaleFamily = spec.scale;
    (0..count as u64)
        .into_par_iter()
        .map(|l| {
            let mut r = stream.offset(l).rng();
            match spec.method {
                Method::Sgw => sample_uniform(d, &mut r),
                _ => sample_rasd_one(source, target, &scale, &mut r),
            }
        })
        .collect()
}

/// Gradients for an already frozen set of slices weighted by
/// `slice_weights`.
pub fn gradient_for_slices(
    source: &PointCloud,
    target: &PointCloud,
    slices: &[FrozenSlice],
    slice_weights: &[f64],
) -> Vec<f64> {
    let coefs: Vec<Vec<f64>> = slices
        .par_iter()
        .map(|s| frozen_slice_coefficients(source, target, s))
        .collect();
    let d = source.d();
    let mut grad = vec![0.0; source.n() * d];
    for ((s, c), w) in slices.iter().zip(&coefs).zip(slice_weights) {
        let t = s.theta.as_slice();
        for (i, ci) in c.iter().enumerate() {
            let f = w * ci;
            for k in 0..d {
                grad[i * d + k] += f * t[k];
            }
        }
    }
    grad
}

/// Samples directions as `spec` prescribes, freezes their couplings and
/// returns the estimator's p-th-power value with its gradient in the
/// source points. Streams match [`estimators::estimate`].
pub fn rasgw_gradient(
    source: &PointCloud,
    target: &PointCloud,
    spec: &EstimatorSpec,
    stream: RngStream,
) -> Result<GradientEstimate> {
    spec.validate()?;
    if !matches!(spec.method, Method::Sgw | Method::Rasgw | Method::Iwrasgw) {
        return Err(Error::domain(format!(
            "gradients are available for sgw, rasgw and iwrasgw, not {}",
            spec.method
        )));
    }
    if source.n() != target.n() {
        return Err(Error::domain(format!(
            "source has {} points and target {}",
            source.n(),
            target.n()
        )));
    }
    if source.d() != target.d() {
        return Err(Error::domain(format!(
            "source has dimension {} and target {}; pad first",
            source.d(),
            target.d()
        )));
    }
    let directions = sample_directions(source, target, spec, stream)?;
    let slices: Vec<FrozenSlice> = directions
        .into_par_iter()
        .map(|t| freeze_slice(source, target, t))
        .collect();
    let costs: Vec<f64> = slices.iter().map(|s| s.cost).collect();
    let (raw, slice_weights) = match spec.method {
        Method::Iwrasgw => {
            let h = spec.outer as f64;
            let mut raw = 0.0;
            let mut sens = Vec::with_capacity(costs.len());
            for group in costs.chunks(spec.inner) {
                let (r, s) = weighted_sensitivities(group, spec.energy);
                raw += r;
                sens.extend(s.into_iter().map(|x| x / h));
            }
            (raw / h, sens)
        }
        _ => {
            let m = costs.len() as f64;
            (costs.iter().sum::<f64>() / m, vec![1.0 / m; costs.len()])
        }
    };
    let grad = gradient_for_slices(source, target, &slices, &slice_weights);
    Ok(GradientEstimate {
        raw,
        grad,
        slices,
        slice_weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMetric {
    /// Mean permutation-GW over fixed n = 8 subsample pairs.
    PermGw,
    /// RASGW₂² (the raw mean, on the same squared scale as `PermGw`) with
    /// default concentration on a fixed stream.
    RasgwProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub estimator: EstimatorSpec,
    pub steps: usize,
    pub learning_rate: f64,
    pub eval_every: usize,
    pub reference_metric: ReferenceMetric,
}

impl FlowConfig {
    pub fn new(estimator: EstimatorSpec, steps: usize, learning_rate: f64) -> Self {
        Self {
            estimator,
            steps,
            learning_rate,
            eval_every: 1,
            reference_metric: ReferenceMetric::PermGw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.steps == 0 {
            return Err(Error::domain("steps must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(Error::domain("eval_every must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub step: usize,
    pub value: f64,
    #[serde(rename = "ref")]
    pub reference: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
}

impl FlowTrace {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn first(&self) -> Option<&FlowRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&FlowRecord> {
        self.records.last()
    }
}

/// The reference score between two clouds of equal size and dimension.
/// Uses fixed streams derived from `stream`, so repeated calls along a flow
/// compare the same subsample indices.
pub fn reference_score(
    metric: ReferenceMetric,
    source: &PointCloud,
    target: &PointCloud,
    stream: RngStream,
) -> Result<f64> {
    match metric {
        ReferenceMetric::PermGw => {
            let k = PERM_GW_SUBSAMPLE.min(source.n()).min(target.n());
            let mut total = 0.0;
            for draw in 0..PERM_GW_DRAWS as u64 {
                let s = source.subsample(k, stream.child(2 * draw))?;
                let t = target.subsample(k, stream.child(2 * draw + 1))?;
                total += gw1d::gw2_cloud_bruteforce(&s, &t)?;
            }
            Ok(total / PERM_GW_DRAWS as f64)
        }
        ReferenceMetric::RasgwProbe => {
            let scale = ScaleFamily::vmf(EstimatorSpec::DEFAULT_KAPPA)?;
            Ok(estimators::estimate_rasgw(source, target, &scale, PROBE_PROJECTIONS, stream)?.raw_mean)
        }
    }
}

const REFERENCE_TAG: u64 = 0x7265_6600;
const STEP_TAG: u64 = 0x7374_6570;

/// Plain gradient descent of the source points on the estimator's p-th-power
/// value. Each point carries mass `1/n` and moves with the per-unit-mass
/// velocity, `x_i ← x_i − lr · n · ∂F/∂x_i`, so `lr` does not depend on `n`.
/// The clouds are padded to a common dimension; only the source's own
/// coordinates move and the final cloud keeps the source's dimension.
/// Step `s` draws its directions from `stream.child(STEP_TAG).child(s)`.
pub fn run_flow(
    source_init: &PointCloud,
    target: &PointCloud,
    cfg: &FlowConfig,
    stream: RngStream,
) -> Result<(PointCloud, FlowTrace)> {
    cfg.validate()?;
    if source_init.n() != target.n() {
        return Err(Error::domain(format!(
            "source has {} points and target {}; subsample first",
            source_init.n(),
            target.n()
        )));
    }
    let started = Instant::now();
    let native_d = source_init.d();
    let (mut src, tgt) = pad_to_common(source_init, target);
    let d = src.d();
    let n = src.n();
    let step_root = stream.child(STEP_TAG);
    let ref_stream = stream.child(REFERENCE_TAG);
    let mut trace = FlowTrace::default();
    for s in 0..=cfg.steps {
        let step_stream = step_root.child(s as u64);
        let evaluate = s % cfg.eval_every == 0;
        if s == cfg.steps {
            if evaluate {
                let value = estimators::estimate(&src, &tgt, &cfg.estimator, step_stream)?.value;
                let reference = reference_score(cfg.reference_metric, &src, &tgt, ref_stream)?;
                trace.records.push(FlowRecord {
                    step: s,
                    value,
                    reference,
                    t: started.elapsed().as_secs_f64(),
                });
            }
            break;
        }
        let g = rasgw_gradient(&src, &tgt, &cfg.estimator, step_stream)?;
        if evaluate {
            let reference = reference_score(cfg.reference_metric, &src, &tgt, ref_stream)?;
            trace.records.push(FlowRecord {
                step: s,
                value: g.raw.max(0.0).sqrt(),
                reference,
                t: started.elapsed().as_secs_f64(),
            });
        }
        if let Some(pos) = g.grad.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient at step {s} (point {}, coordinate {})",
                pos / d,
                pos % d
            )));
        }
        let mut pts = src.into_vec();
        let step = cfg.learning_rate * n as f64;
        for i in 0..n {
            for k in 0..native_d {
                pts[i * d + k] -= step * g.grad[i * d + k];
            }
        }
        src = PointCloud::new(pts, n, d)
            .map_err(|_| Error::Numeric(format!("source points became non-finite at step {s}")))?;
    }
    let final_pts: Vec<f64> = src.rows().flat_map(|r| r[..native_d].to_vec()).collect();
    Ok((PointCloud::new(final_pts, n, native_d)?, trace))
}
