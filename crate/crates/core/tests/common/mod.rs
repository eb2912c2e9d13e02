#![allow(dead_code)]

use rand_distr::{Distribution, Normal};
use rasgw::gradflow::FrozenSlice;
use rasgw::{PointCloud, RngStream};
use statrs::function::gamma::ln_gamma;

/// Anisotropic Gaussian cloud with per-axis scales in `[0.3s, ∞)`.
pub fn random_cloud(seed: u64, n: usize, d: usize, s: f64) -> PointCloud {
    let mut r = RngStream::new(seed, 77).rng();
    let nd = Normal::<f64>::new(0.0, 1.0).unwrap();
    let scales: Vec<f64> = (0..d).map(|_| s * (0.3 + nd.sample(&mut r).abs())).collect();
    let pts = (0..n * d).map(|k| scales[k % d] * nd.sample(&mut r)).collect();
    PointCloud::new(pts, n, d).unwrap()
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Least-squares slope of `ys` on `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn ln_bessel_i(nu: f64, x: f64) -> f64 {
    // Power series Σ (x/2)^{2k+ν} / (k! Γ(k+ν+1)), summed in log space.
    let lx = (0.5 * x).ln();
    let terms: Vec<f64> = (0..400)
        .map(|k| {
            let k = k as f64;
            (2.0 * k + nu) * lx - ln_gamma(k + 1.0) - ln_gamma(k + nu + 1.0)
        })
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Mean resultant length of vMF(κ) on `S^{d-1}`: `I_{d/2}(κ)/I_{d/2−1}(κ)`.
pub fn bessel_ratio(d: usize, kappa: f64) -> f64 {
    let nu = d as f64 / 2.0;
    (ln_bessel_i(nu, kappa) - ln_bessel_i(nu - 1.0, kappa)).exp()
}

/// One-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (d, p.clamp(0.0, 1.0))
}

/// Finite-difference step.
pub const H: f64 = 1e-6;

pub fn has_near_ties(cloud: &PointCloud, slices: &[FrozenSlice]) -> bool {
    slices.iter().any(|s| {
        let mut p = cloud.project(s.theta.as_slice());
        p.sort_by(f64::total_cmp);
        p.windows(2).any(|w| w[1] - w[0] < 1e-7)
    })
}

pub fn perturbed(cloud: &PointCloud, k: usize, delta: f64) -> PointCloud {
    let mut v = cloud.as_slice().to_vec();
    v[k] += delta;
    PointCloud::new(v, cloud.n(), cloud.d()).unwrap()
}

pub fn central_difference(cloud: &PointCloud, f: impl Fn(&PointCloud) -> f64) -> Vec<f64> {
    (0..cloud.n() * cloud.d())
        .map(|k| (f(&perturbed(cloud, k, H)) - f(&perturbed(cloud, k, -H))) / (2.0 * H))
        .collect()
}

/// Largest absolute deviation relative to the largest entry of `g`.
pub fn max_rel_error(g: &[f64], fd: &[f64]) -> f64 {
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = g.iter().zip(fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    err / scale
}

pub fn assert_close(g: &[f64], fd: &[f64], what: &str) {
    let rel = max_rel_error(g, fd);
    assert!(rel <= 1e-4, "{what}: relative error {rel}");
}
