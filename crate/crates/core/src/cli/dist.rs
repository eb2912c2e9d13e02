use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;

use super::manifest::{write_json, RunManifest};
use super::{CliResult, EstimatorArgs};
use crate::cloud::{equalize_counts, pad_to_common, PointCloud};
use crate::estimators;
use crate::rng::RngStream;
use crate::spec::{Energy, Family};

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON result file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct DistOutput {
    pub value: f64,
    pub raw_mean: f64,
    pub method: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "H")]
    pub h: usize,
    pub kappa: f64,
    pub family: Family,
    pub energy: Energy,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub wall_time_s: f64,
    pub manifest: RunManifest,
}

/// Stream driving the estimator for `seed`.
pub fn estimator_stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}

/// Stream used to subsample clouds of unequal size.
pub fn subsample_stream(seed: u64) -> RngStream {
    RngStream::new(seed, 1)
}

/// Pads both clouds to a common dimension and subsamples the larger one.
pub fn prepare_pair(a: &PointCloud, b: &PointCloud, seed: u64) -> CliResult<(PointCloud, PointCloud)> {
    let (a, b) = equalize_counts(a, b, subsample_stream(seed))?;
    Ok(pad_to_common(&a, &b))
}

pub fn run(args: &DistArgs, recorded: Vec<String>) -> CliResult<()> {
    let started = Instant::now();
    let spec = args.estimator.to_spec()?;
    let a = PointCloud::load_csv(&args.a)?;
    let b = PointCloud::load_csv(&args.b)?;
    let (a, b) = prepare_pair(&a, &b, args.seed)?;
    let res = estimators::estimate(&a, &b, &spec, estimator_stream(args.seed))?;
    println!("{:.11e}", res.value);
    if let Some(out) = &args.out {
        let mut manifest = RunManifest::new(recorded, spec.clone(), args.seed);
        manifest.outputs.push(out.display().to_string());
        manifest.wall_time_s = started.elapsed().as_secs_f64();
        let output = DistOutput {
            value: res.value,
            raw_mean: res.raw_mean,
            method: spec.method.to_string(),
            m: spec.direction_budget(),
            l: spec.inner,
            h: spec.outer,
            kappa: spec.scale.kappa,
            family: spec.scale.family,
            energy: spec.energy,
            n: a.n(),
            d: a.d(),
            seed: args.seed,
            wall_time_s: res.wall_time,
            manifest,
        };
        write_json(out, &output)?;
    }
    Ok(())
}
