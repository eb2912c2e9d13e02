//! Relation-aware projecting directions (RAPD) and the relation-aware
//! slicing distribution (RASD).
//!
//! For a quartet `x, x′ ~ μ`, `y, y′ ~ ν` the two intra-relational paths
//! `x − x′` and `y − y′` are normalized to `z̄ₓ`, `z̄ᵧ`. Their normalized sum
//! and difference are the two bisectors; a direction is drawn from the fair
//! mixture `½σ_κ(·; z₊) + ½σ_κ(·; z₋)`.

use rand::Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{add, norm, sub};
use crate::rng::RngStream;
use crate::spec::ScaleFamily;
use crate::sphere::{sample_scale_family, UnitDirection};

/// Additive constant used when an intra-relational path vanishes.
pub const DEFAULT_IRP_CONSTANT: f64 = 1e-8;

/// Paths shorter than this are treated as degenerate.
pub const IRP_DEGENERATE_NORM: f64 = 1e-12;

/// A bisector exists when the sum (difference) has norm above this.
pub const BISECTOR_TOL: f64 = 1e-10;

/// Two samples from each measure, in a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationQuartet {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub y: Vec<f64>,
    pub y_prime: Vec<f64>,
}

impl RelationQuartet {
    pub fn new(x: Vec<f64>, x_prime: Vec<f64>, y: Vec<f64>, y_prime: Vec<f64>) -> Result<Self> {
        let d = x.len();
        if d == 0 || [x_prime.len(), y.len(), y_prime.len()].iter().any(|&l| l != d) {
            return Err(Error::domain("quartet vectors must share a positive dimension"));
        }
        if x.iter()
            .chain(&x_prime)
            .chain(&y)
            .chain(&y_prime)
            .any(|v| !v.is_finite())
        {
            return Err(Error::domain("quartet vectors must be finite"));
        }
        Ok(Self { x, x_prime, y, y_prime })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Normalized sum (`z_plus`) and difference (`z_minus`) of two unit
/// vectors; a side is `None` when its norm is below [`BISECTOR_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct BisectorPair {
    pub z_plus: Option<UnitDirection>,
    pub z_minus: Option<UnitDirection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// `x − x′`.
pub fn intra_relational_path(x: &[f64], x_prime: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), x_prime.len(), "dimension mismatch");
    sub(x, x_prime)
}

/// `z/‖z‖`, or `(z + c·1)/‖z + c·1‖` when `‖z‖ ≤ 1e−12`.
pub fn normalize_irp(z: &[f64], c: f64) -> UnitDirection {
    if norm(z) > IRP_DEGENERATE_NORM {
        if let Some(u) = UnitDirection::normalize(z) {
            return u;
        }
    }
    let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
    UnitDirection::normalize(&shifted).expect("additive constant yields a non-zero path")
}

pub fn bisector_pair(zx: &UnitDirection, zy: &UnitDirection) -> BisectorPair {
    let side = |v: Vec<f64>| {
        if norm(&v) > BISECTOR_TOL {
            UnitDirection::normalize(&v)
        } else {
            None
        }
    };
    BisectorPair {
        z_plus: side(add(zx.as_slice(), zy.as_slice())),
        z_minus: side(sub(zx.as_slice(), zy.as_slice())),
    }
}

impl BisectorPair {
    /// The location for a coin outcome; falls back to the other side when
    /// the chosen one is undefined.
    pub fn pick(&self, branch: Branch) -> &UnitDirection {
        let (first, second) = match branch {
            Branch::Plus => (&self.z_plus, &self.z_minus),
            Branch::Minus => (&self.z_minus, &self.z_plus),
        };
        first
            .as_ref()
            .or(second.as_ref())
            .expect("sum and difference of unit vectors cannot both vanish")
    }
}

/// The mixture location for `q` after the fair coin, and the coin outcome.
pub fn rapd_location<R: Rng + ?Sized>(q: &RelationQuartet, rng: &mut R) -> (UnitDirection, Branch) {
    let zx = normalize_irp(&intra_relational_path(&q.x, &q.x_prime), DEFAULT_IRP_CONSTANT);
    let zy = normalize_irp(&intra_relational_path(&q.y, &q.y_prime), DEFAULT_IRP_CONSTANT);
    let pair = bisector_pair(&zx, &zy);
    let branch = if rng.random::<bool>() {
        Branch::Plus
    } else {
        Branch::Minus
    };
    (pair.pick(branch).clone(), branch)
}

/// One draw from `D_κ(x, x′, y, y′)`.
pub fn sample_rapd<R: Rng + ?Sized>(q: &RelationQuartet, scale: &ScaleFamily, rng: &mut R) -> Result<UnitDirection> {
    let (loc, _) = rapd_location(q, rng);
    sample_scale_family(scale, &loc, rng)
}

/// Draws a quartet by four independent uniform row indices (with
/// replacement) and then a direction from it.
pub fn sample_rasd_one<R: Rng + ?Sized>(
    mu: &PointCloud,
    nu: &PointCloud,
    scale: &ScaleFamily,
    rng: &mut R,
) -> Result<UnitDirection> {
    let i = rng.random_range(0..mu.n());
    let i2 = rng.random_range(0..mu.n());
    let j = rng.random_range(0..nu.n());
    let j2 = rng.random_range(0..nu.n());
    let q = RelationQuartet {
        x: mu.row(i).to_vec(),
        x_prime: mu.row(i2).to_vec(),
        y: nu.row(j).to_vec(),
        y_prime: nu.row(j2).to_vec(),
    };
    sample_rapd(&q, scale, rng)
}

/// `m` directions from the relation-aware slicing distribution; direction
/// `l` uses the stream `stream.offset(l)`.
pub fn sample_rasd(
    mu: &PointCloud,
    nu: &PointCloud,
    scale: &ScaleFamily,
    m: usize,
    stream: RngStream,
) -> Result<Vec<UnitDirection>> {
    if m == 0 {
        return Err(Error::domain("number of directions must be at least 1"));
    }
    if mu.d() != nu.d() {
        return Err(Error::domain(format!(
            "clouds have dimensions {} and {}; pad the lower-dimensional one first",
            mu.d(),
            nu.d()
        )));
    }
    (0..m as u64)
        .map(|l| sample_rasd_one(mu, nu, scale, &mut stream.offset(l).rng()))
        .collect()
}
