//! Samplers on the unit hypersphere `S^{d-1}`.
//!
//! Both location-scale families are sampled in the frame where the location
//! is `e₁` and then carried to the requested location by the Householder
//! reflection `U = I − 2uuᵀ`, `u = (e₁ − ε)/‖e₁ − ε‖`, which maps `e₁` to `ε`.
//!
//! * von Mises-Fisher: Wood-style rejection on the `e₁` component with a
//!   `Beta((d−1)/2, (d−1)/2)` proposal and acceptance test
//!   `(d−1)·ln t − t + m ≥ ln u`.
//! * Power Spherical: `z ~ Beta((d−1)/2 + κ, (d−1)/2)`, `w = 2z − 1`, no
//!   rejection.
//!
//! Beta variates are ratios of two Gamma variates.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::spec::{Family, ScaleFamily};

/// Tolerance on `‖coords‖₂ − 1` accepted by [`UnitDirection::new`].
pub const UNIT_TOL: f64 = 1e-12;

/// Below this distance from `e₁` the reflection is replaced by the identity.
pub const HOUSEHOLDER_EPS: f64 = 1e-14;

/// A point on `S^{d-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitDirection(Vec<f64>);

impl UnitDirection {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let nrm = norm(&coords);
        if coords.is_empty() || nrm.is_nan() || (nrm - 1.0).abs() > UNIT_TOL {
            return Err(Error::domain(format!("direction is not unit length (norm = {nrm})")));
        }
        Ok(Self(coords))
    }

    /// Scales `v` to unit length; `None` for (near-)zero or non-finite input.
    pub fn normalize(v: &[f64]) -> Option<Self> {
        let nrm = norm(v);
        if !nrm.is_finite() || nrm <= 0.0 {
            return None;
        }
        let mut out: Vec<f64> = v.iter().map(|x| x / nrm).collect();
        // A second pass pulls the norm to within an ulp or two of 1.
        let n2 = norm(&out);
        out.iter_mut().for_each(|x| *x /= n2);
        Some(Self(out))
    }

    /// The basis vector `e_k` in `R^d`.
    pub fn basis(d: usize, k: usize) -> Self {
        assert!(k < d);
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        Self(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }
}

impl AsRef<[f64]> for UnitDirection {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Uniform direction on `S^{d-1}` (normalized standard Gaussian vector).
pub fn sample_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitDirection> {
    if d < 1 {
        return Err(Error::domain("sphere dimension must be at least 1"));
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if norm(&v) > 1e-100 {
            if let Some(u) = UnitDirection::normalize(&v) {
                return Ok(u);
            }
        }
    }
}

/// Applies the reflection that maps `e₁` to `location` to the vector `v`.
pub fn householder_to(location: &UnitDirection, v: &[f64]) -> UnitDirection {
    let eps = location.as_slice();
    assert_eq!(eps.len(), v.len(), "dimension mismatch in householder_to");
    let mut u: Vec<f64> = eps.iter().map(|x| -x).collect();
    u[0] += 1.0;
    let nu = norm(&u);
    if nu <= HOUSEHOLDER_EPS {
        return UnitDirection::normalize(v).expect("unit input");
    }
    u.iter_mut().for_each(|x| *x /= nu);
    let proj = 2.0 * dot(&u, v);
    let out: Vec<f64> = v.iter().zip(&u).map(|(vi, ui)| vi - proj * ui).collect();
    UnitDirection::normalize(&out).expect("reflection preserves norm")
}

fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("gamma shape is positive and finite")
        .sample(rng)
}

/// `Beta(a, b)` as `X/(X+Y)` with `X ~ Gamma(a)`, `Y ~ Gamma(b)`.
pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    loop {
        let x = sample_gamma(a, rng);
        let y = sample_gamma(b, rng);
        let s = x + y;
        if s > 0.0 && s.is_finite() {
            return x / s;
        }
    }
}

/// Assembles `(w, √(1−w²)·v)` with `v` uniform on `S^{d-2}`.
fn lift_from_e1<R: Rng + ?Sized>(w: f64, d: usize, rng: &mut R) -> Vec<f64> {
    let v = sample_uniform(d - 1, rng).expect("d >= 2");
    let r = (1.0 - w * w).max(0.0).sqrt();
    let mut h = Vec::with_capacity(d);
    h.push(w);
    h.extend(v.as_slice().iter().map(|x| r * x));
    h
}

fn check_location(location: &UnitDirection, kappa: f64) -> Result<()> {
    if location.dim() < 2 {
        return Err(Error::domain("location-scale samplers need d >= 2"));
    }
    if (norm(location.as_slice()) - 1.0).abs() > UNIT_TOL {
        return Err(Error::domain("location is not a unit vector"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("kappa must be positive and finite, got {kappa}")));
    }
    Ok(())
}

/// The `e₁` component of a vMF draw, by rejection, and the number of
/// proposals it took.
pub fn vmf_e1_component<R: Rng + ?Sized>(d: usize, kappa: f64, rng: &mut R) -> (f64, usize) {
    let dm1 = (d - 1) as f64;
    let root = (4.0 * kappa * kappa + dm1 * dm1).sqrt();
    // (−2κ + root)/(d−1), rewritten to avoid cancellation at large κ.
    let b = dm1 / (2.0 * kappa + root);
    let a = (dm1 + 2.0 * kappa + root) / 4.0;
    let m = 4.0 * a * b / (1.0 + b) - dm1 * dm1.ln();
    let mut trials = 0;
    loop {
        trials += 1;
        let psi = sample_beta(0.5 * dm1, 0.5 * dm1, rng);
        let denom = 1.0 - (1.0 - b) * psi;
        let w = (1.0 - (1.0 + b) * psi) / denom;
        let t = 2.0 * a * b / denom;
        let u: f64 = rng.random();
        if dm1 * t.ln() - t + m >= u.ln() {
            return (w.clamp(-1.0, 1.0), trials);
        }
    }
}

/// A vMF(e₁, κ) draw in `R^d`.
pub fn vmf_e1_frame<R: Rng + ?Sized>(d: usize, kappa: f64, rng: &mut R) -> Vec<f64> {
    let (w, _) = vmf_e1_component(d, kappa, rng);
    lift_from_e1(w, d, rng)
}

/// A PS(e₁, κ) draw in `R^d`.
pub fn power_spherical_e1_frame<R: Rng + ?Sized>(d: usize, kappa: f64, rng: &mut R) -> Vec<f64> {
    let half = 0.5 * (d - 1) as f64;
    let z = sample_beta(half + kappa, half, rng);
    let w = 2.0 * z - 1.0;
    lift_from_e1(w, d, rng)
}

pub fn sample_vmf<R: Rng + ?Sized>(location: &UnitDirection, kappa: f64, rng: &mut R) -> Result<UnitDirection> {
    check_location(location, kappa)?;
    let h = vmf_e1_frame(location.dim(), kappa, rng);
    Ok(householder_to(location, &h))
}

pub fn sample_power_spherical<R: Rng + ?Sized>(
    location: &UnitDirection,
    kappa: f64,
    rng: &mut R,
) -> Result<UnitDirection> {
    check_location(location, kappa)?;
    let h = power_spherical_e1_frame(location.dim(), kappa, rng);
    Ok(householder_to(location, &h))
}

/// Draws from `scale` in the `e₁` frame.
pub fn sample_e1_frame<R: Rng + ?Sized>(scale: &ScaleFamily, d: usize, rng: &mut R) -> Vec<f64> {
    match scale.family {
        Family::VonMisesFisher => vmf_e1_frame(d, scale.kappa, rng),
        Family::PowerSpherical => power_spherical_e1_frame(d, scale.kappa, rng),
    }
}

/// Draws from `scale` centred at `location`. In `d = 1` the sphere is
/// `{−1, +1}` and the location is returned unchanged.
pub fn sample_scale_family<R: Rng + ?Sized>(
    scale: &ScaleFamily,
    location: &UnitDirection,
    rng: &mut R,
) -> Result<UnitDirection> {
    if location.dim() == 1 {
        return Ok(location.clone());
    }
    match scale.family {
        Family::VonMisesFisher => sample_vmf(location, scale.kappa, rng),
        Family::PowerSpherical => sample_power_spherical(location, scale.kappa, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        RngStream::new(seed, 0).rng()
    }

    fn unit_ok(u: &UnitDirection) -> bool {
        (norm(u.as_slice()) - 1.0).abs() <= 1e-12
    }

    #[test]
    fn uniform_d1_is_fair_sign() {
        let mut r = rng(1);
        let n = 10_000;
        let pos = (0..n)
            .filter(|_| sample_uniform(1, &mut r).unwrap().as_slice()[0] > 0.0)
            .count();
        let f = pos as f64 / n as f64;
        assert!((f - 0.5).abs() <= 0.02, "{f}");
        assert!(sample_uniform(0, &mut r).is_err());
    }

    #[test]
    fn uniform_mean_and_isotropy() {
        let mut r = rng(2);
        let n = 100_000;
        let mut mean = [0.0; 5];
        for _ in 0..n {
            let u = sample_uniform(5, &mut r).unwrap();
            for (m, x) in mean.iter_mut().zip(u.as_slice()) {
                *m += x / n as f64;
            }
        }
        assert!(norm(&mean) <= 0.02);

        let mut second = [[0.0; 3]; 3];
        for _ in 0..n {
            let u = sample_uniform(3, &mut r).unwrap();
            let s = u.as_slice();
            for i in 0..3 {
                for j in 0..3 {
                    second[i][j] += s[i] * s[j] / n as f64;
                }
            }
        }
        for (i, row) in second.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert!((v - target).abs() <= 0.01, "{i},{j}: {v}");
            }
        }
    }

    #[test]
    fn householder_identity_and_mapping() {
        let e1 = UnitDirection::basis(4, 0);
        let v = UnitDirection::normalize(&[0.3, -0.2, 0.9, 0.1]).unwrap();
        assert_eq!(householder_to(&e1, v.as_slice()), v);
        let loc = UnitDirection::normalize(&[-0.5, 0.5, 0.5, 0.5]).unwrap();
        let mapped = householder_to(&loc, e1.as_slice());
        for (a, b) in mapped.as_slice().iter().zip(loc.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        let neg = householder_to(&e1.neg(), e1.as_slice());
        assert!((neg.as_slice()[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn householder_preserves_norm() {
        let mut r = rng(3);
        for _ in 0..1000 {
            let loc = sample_uniform(6, &mut r).unwrap();
            let v = sample_uniform(6, &mut r).unwrap();
            assert!(unit_ok(&householder_to(&loc, v.as_slice())));
        }
    }

    #[test]
    fn vmf_near_dirac() {
        let mut r = rng(4);
        let loc = UnitDirection::normalize(&[1.0, 2.0, -1.0]).unwrap();
        for _ in 0..1000 {
            let th = sample_vmf(&loc, 1e6, &mut r).unwrap();
            assert!(dot(th.as_slice(), loc.as_slice()) >= 0.999);
            assert!(unit_ok(&th));
        }
    }

    #[test]
    fn vmf_at_e1_location_is_valid() {
        let mut r = rng(5);
        let e1 = UnitDirection::basis(3, 0);
        for _ in 0..100 {
            assert!(unit_ok(&sample_vmf(&e1, 3.0, &mut r).unwrap()));
        }
    }

    #[test]
    fn samplers_reject_bad_input() {
        let mut r = rng(6);
        let bad = UnitDirection(vec![1.0, 1.0]);
        assert!(sample_vmf(&bad, 1.0, &mut r).is_err());
        assert!(sample_power_spherical(&bad, 1.0, &mut r).is_err());
        let e1 = UnitDirection::basis(2, 0);
        assert!(sample_vmf(&e1, 0.0, &mut r).is_err());
        assert!(UnitDirection::new(vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn power_spherical_mean_cosine() {
        // E[εᵀθ] = 2a/(a+b) − 1 with a = (d−1)/2 + κ, b = (d−1)/2.
        let mut r = rng(7);
        let loc = UnitDirection::normalize(&[0.2, 0.3, -0.9]).unwrap();
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            let th = sample_power_spherical(&loc, 2.0, &mut r).unwrap();
            assert!(unit_ok(&th));
            s += dot(th.as_slice(), loc.as_slice());
        }
        let (a, b): (f64, f64) = (1.0 + 2.0, 1.0);
        let expected = 2.0 * a / (a + b) - 1.0;
        assert!((expected - 0.5).abs() < 1e-15);
        assert!((s / n as f64 - expected).abs() <= 0.01);
    }

    #[test]
    fn power_spherical_small_kappa_is_uniform() {
        let mut r = rng(8);
        let loc = UnitDirection::basis(3, 2);
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let th = sample_power_spherical(&loc, 1e-6, &mut r).unwrap();
            for (m, x) in mean.iter_mut().zip(th.as_slice()) {
                *m += x / n as f64;
            }
        }
        assert!(norm(&mean) <= 0.02);
    }

    #[test]
    fn vmf_mean_trials_small() {
        let mut r = rng(10);
        for d in [2usize, 3, 8, 32, 64] {
            for kappa in [1e-3, 0.1, 1.0, 10.0, 100.0, 1e4, 1e6] {
                let n = 2000;
                let total: usize = (0..n).map(|_| vmf_e1_component(d, kappa, &mut r).1).sum();
                let mean = total as f64 / n as f64;
                assert!(mean <= 3.0, "d={d} kappa={kappa}: {mean}");
            }
        }
    }

    #[test]
    fn vmf_terminates_over_kappa_range() {
        let mut r = rng(9);
        for d in [2usize, 3, 10, 64] {
            for kappa in [1e-3, 1.0, 50.0, 1e3, 1e6] {
                let loc = sample_uniform(d, &mut r).unwrap();
                for _ in 0..200 {
                    assert!(unit_ok(&sample_vmf(&loc, kappa, &mut r).unwrap()));
                }
            }
        }
    }
}
