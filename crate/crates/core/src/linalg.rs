//! Small dense-vector helpers shared by the samplers and estimators.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Returns `a / ‖a‖`, or `None` when `‖a‖ ≤ tol`.
pub fn normalized(a: &[f64], tol: f64) -> Option<Vec<f64>> {
    let nrm = norm(a);
    if nrm > tol && nrm.is_finite() {
        Some(scale(a, 1.0 / nrm))
    } else {
        None
    }
}

/// Removes the component of `g` along the unit vector `x`.
pub fn tangent_part(g: &[f64], x: &[f64]) -> Vec<f64> {
    let r = dot(g, x);
    g.iter().zip(x).map(|(gi, xi)| gi - r * xi).collect()
}

pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
