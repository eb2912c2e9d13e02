//! Gaussian mixture point clouds: Gaussian-4 (2D or 3D) and Gaussian-8 (2D).
//!
//! Centers are multiplied by `scale` and then isotropic noise of standard
//! deviation `noise_sigma` is added; the noise itself is not scaled.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const DEFAULT_NOISE_SIGMA: f64 = 0.1;
pub const DEFAULT_SCALE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    /// k unscaled centers, all of the same dimension.
    pub centers: Vec<Vec<f64>>,
    pub noise_sigma: f64,
    pub scale: f64,
    pub n: usize,
}

impl MixtureSpec {
    pub fn new(centers: Vec<Vec<f64>>, noise_sigma: f64, scale: f64, n: usize) -> Result<Self> {
        let d = centers.first().map(Vec::len).unwrap_or(0);
        if d == 0 || centers.iter().any(|c| c.len() != d) {
            return Err(Error::domain(
                "mixture needs at least one center, all of equal positive dimension",
            ));
        }
        if !(noise_sigma > 0.0 && noise_sigma.is_finite()) {
            return Err(Error::domain("noise sigma must be positive"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain("scale must be positive"));
        }
        if n < 2 {
            return Err(Error::domain("a point cloud needs at least 2 points"));
        }
        Ok(Self {
            centers,
            noise_sigma,
            scale,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn scaled_centers(&self) -> Vec<Vec<f64>> {
        self.centers
            .iter()
            .map(|c| c.iter().map(|x| x * self.scale).collect())
            .collect()
    }

    /// Samples the cloud together with each point's generating center.
    pub fn sample_labeled(&self, stream: RngStream) -> Result<(PointCloud, Vec<usize>)> {
        let mut rng = stream.rng();
        let centers = self.scaled_centers();
        let d = self.dim();
        let mut pts = Vec::with_capacity(self.n * d);
        let mut labels = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let k = rng.random_range(0..centers.len());
            labels.push(k);
            for &c in &centers[k] {
                let z: f64 = rng.sample(StandardNormal);
                pts.push(c + self.noise_sigma * z);
            }
        }
        Ok((PointCloud::new(pts, self.n, d)?, labels))
    }

    pub fn sample(&self, stream: RngStream) -> Result<PointCloud> {
        Ok(self.sample_labeled(stream)?.0)
    }
}

pub fn gaussian4_spec(d: usize, n: usize) -> Result<MixtureSpec> {
    if d != 2 && d != 3 {
        return Err(Error::domain(format!("gaussian4 supports d = 2 or 3, got {d}")));
    }
    if n < 4 {
        return Err(Error::domain(format!("gaussian4 needs n >= 4, got {n}")));
    }
    let base = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]];
    let centers = base.iter().map(|c| c[..d].to_vec()).collect();
    MixtureSpec::new(centers, DEFAULT_NOISE_SIGMA, DEFAULT_SCALE, n)
}

pub fn gaussian8_spec(n: usize) -> Result<MixtureSpec> {
    if n < 8 {
        return Err(Error::domain(format!("gaussian8 needs n >= 8, got {n}")));
    }
    let r = FRAC_1_SQRT_2;
    let centers = vec![
        vec![1.0, 0.0],
        vec![-1.0, 0.0],
        vec![0.0, 1.0],
        vec![0.0, -1.0],
        vec![r, r],
        vec![r, -r],
        vec![-r, r],
        vec![-r, -r],
    ];
    MixtureSpec::new(centers, DEFAULT_NOISE_SIGMA, DEFAULT_SCALE, n)
}

/// Four clusters at `±2e₁`, `±2e₂`; in 2D the third coordinate is dropped.
pub fn gaussian4(d: usize, n: usize, stream: RngStream) -> Result<PointCloud> {
    gaussian4_spec(d, n)?.sample(stream)
}

/// Eight clusters on the circle of radius 2 at multiples of 45°.
pub fn gaussian8(n: usize, stream: RngStream) -> Result<PointCloud> {
    gaussian8_spec(n)?.sample(stream)
}

/// `n` i.i.d. standard normal points in `R^d`.
pub fn standard_normal(n: usize, d: usize, stream: RngStream) -> Result<PointCloud> {
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    let mut rng = stream.rng();
    let pts = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    PointCloud::new(pts, n, d)
}
