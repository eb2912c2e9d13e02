//! Empirical point clouds with uniform mass, their CSV format, and the
//! distance-preserving transforms used to build isomorphic test pairs.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::rng::RngStream;

/// `n` samples in `R^d`, each carrying mass `1/n`. Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointCloud {
    /// Builds a cloud from a row-major buffer of `n * d` coordinates.
    pub fn new(points: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::domain("point cloud dimension must be at least 1"));
        }
        if n < 2 {
            return Err(Error::domain(format!("point cloud needs at least 2 samples, got {n}")));
        }
        if points.len() != n * d {
            return Err(Error::domain(format!(
                "buffer of length {} does not hold {n}x{d} coordinates",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite coordinate at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { points, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::domain(format!(
                    "row {i} has {} coordinates, expected {d}",
                    r.len()
                )));
            }
            points.extend_from_slice(r);
        }
        Self::new(points, rows.len(), d)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.points
    }

    /// Inner products `θᵀx_i` in row order.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.d, "direction dimension mismatch");
        self.rows().map(|r| dot(r, theta)).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (acc, v) in m.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// Row-major `n×n` matrix of Euclidean distances.
    pub fn distance_matrix(&self) -> Vec<f64> {
        self.squared_distance_matrix().into_iter().map(f64::sqrt).collect()
    }

    /// Row-major `n×n` matrix of squared Euclidean distances.
    pub fn squared_distance_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let s: f64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        out
    }

    /// Appends `target_d - d` zero coordinates to every point.
    pub fn pad_uplift(&self, target_d: usize) -> Result<Self> {
        if target_d < self.d {
            return Err(Error::domain(format!(
                "cannot pad a {}-dimensional cloud down to {target_d} dimensions",
                self.d
            )));
        }
        if target_d == self.d {
            return Ok(self.clone());
        }
        let mut points = Vec::with_capacity(self.n * target_d);
        for r in self.rows() {
            points.extend_from_slice(r);
            points.extend(std::iter::repeat_n(0.0, target_d - self.d));
        }
        Ok(Self {
            points,
            n: self.n,
            d: target_d,
        })
    }

    /// Subtracts the column means.
    pub fn center(&self) -> Self {
        let m = self.column_means();
        let neg: Vec<f64> = m.iter().map(|v| -v).collect();
        self.shifted(&neg)
    }

    pub fn translate(&self, t: &[f64]) -> Result<Self> {
        if t.len() != self.d {
            return Err(Error::domain(format!(
                "translation has dimension {}, cloud has {}",
                t.len(),
                self.d
            )));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("translation must be finite"));
        }
        Ok(self.shifted(t))
    }

    pub fn negate(&self) -> Self {
        Self {
            points: self.points.iter().map(|v| -v).collect(),
            n: self.n,
            d: self.d,
        }
    }

    fn shifted(&self, t: &[f64]) -> Self {
        let points = self
            .points
            .chunks_exact(self.d)
            .flat_map(|r| r.iter().zip(t).map(|(a, b)| a + b))
            .collect();
        Self {
            points,
            n: self.n,
            d: self.d,
        }
    }

    /// Keeps only the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(rows.len() * self.d);
        for &i in rows {
            if i >= self.n {
                return Err(Error::domain(format!("row {i} out of range")));
            }
            points.extend_from_slice(self.row(i));
        }
        Self::new(points, rows.len(), self.d)
    }

    /// Uniform choice of `k` rows without replacement. Row order of the
    /// result follows the order in which the rows were drawn.
    pub fn subsample(&self, k: usize, stream: RngStream) -> Result<Self> {
        if k > self.n {
            return Err(Error::domain(format!("cannot subsample {k} rows from {}", self.n)));
        }
        if k == self.n {
            return Ok(self.clone());
        }
        let mut rng = stream.rng();
        let idx = index::sample(&mut rng, self.n, k).into_vec();
        self.select(&idx)
    }

    /// Repeats every row `k` times. The empirical measure is unchanged; only
    /// the support count grows to `k * n`.
    pub fn repeat_each(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("repeat count must be positive"));
        }
        let mut points = Vec::with_capacity(self.points.len() * k);
        for r in self.rows() {
            for _ in 0..k {
                points.extend_from_slice(r);
            }
        }
        Self::new(points, self.n * k, self.d)
    }

    /// Parses the CSV format: a header of `d` column names followed by rows of
    /// `d` decimal fields.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let d = loop {
            match lines.next() {
                None => {
                    return Err(Error::Parse {
                        line: 1,
                        msg: "missing header row".into(),
                    })
                }
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    })?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break line.split(',').count();
                }
            }
        };
        let mut points = Vec::new();
        let mut n = 0usize;
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != d {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected {d} fields, found {}", fields.len()),
                });
            }
            for f in fields {
                let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("invalid number {f:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("non-finite value {f:?}"),
                    });
                }
                points.push(v);
            }
            n += 1;
        }
        Self::new(points, n, d)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(file))
    }

    /// Writes the header `x0,...,x{d-1}` and one row per point, every value
    /// with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.d).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for r in self.rows() {
            line.clear();
            for (j, v) in r.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{}", fmt17(*v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Scientific notation with 17 significant digits; round-trips any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pads the lower-dimensional cloud so both share `max(d_a, d_b)`.
pub fn pad_to_common(a: &PointCloud, b: &PointCloud) -> (PointCloud, PointCloud) {
    let d = a.d().max(b.d());
    (a.pad_uplift(d).expect("d >= a.d"), b.pad_uplift(d).expect("d >= b.d"))
}

/// Subsamples the larger cloud (without replacement) so both have
/// `min(n_a, n_b)` rows.
pub fn equalize_counts(a: &PointCloud, b: &PointCloud, stream: RngStream) -> Result<(PointCloud, PointCloud)> {
    let k = a.n().min(b.n());
    Ok((a.subsample(k, stream.child(0))?, b.subsample(k, stream.child(1))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn random_cloud(seed: u64, n: usize, d: usize) -> PointCloud {
        use rand::Rng;
        let mut rng = RngStream::new(seed, 0).rng();
        let pts = (0..n * d).map(|_| rng.random_range(-5.0..5.0)).collect();
        PointCloud::new(pts, n, d).unwrap()
    }

    #[test]
    fn parses_minimal_csv() {
        let c = PointCloud::read_csv("x0,x1\n0,0\n1,0\n".as_bytes()).unwrap();
        assert_eq!((c.n(), c.d()), (2, 2));
        assert_eq!(c.as_slice(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn arity_mismatch_names_line() {
        let err = PointCloud::read_csv("x0,x1,x2\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn bad_number_names_line() {
        let err = PointCloud::read_csv("x0\n1\n2\nabc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn too_few_rows_is_domain_error() {
        let err = PointCloud::read_csv("x0\n1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn pad_appends_zeros() {
        let c = PointCloud::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let p = c.pad_uplift(3).unwrap();
        assert_eq!(p.row(0), &[1.0, 2.0, 0.0]);
        assert_eq!(c.pad_uplift(2).unwrap(), c);
        assert!(c.pad_uplift(1).is_err());
    }

    #[test]
    fn pad_preserves_distances() {
        for seed in 0..20 {
            let c = random_cloud(seed, 12, 2);
            let p = c.pad_uplift(5).unwrap();
            assert!(max_abs_diff(&c.distance_matrix(), &p.distance_matrix()) <= 1e-15);
        }
    }

    #[test]
    fn center_examples() {
        let c = PointCloud::from_rows(&[[0.0], [2.0]]).unwrap();
        assert_eq!(c.center().as_slice(), &[-1.0, 1.0]);
        let cc = c.center();
        assert!(max_abs_diff(cc.center().as_slice(), cc.as_slice()) <= 1e-15);
    }

    #[test]
    fn center_zero_mean_and_distances() {
        for seed in 0..500 {
            let c = random_cloud(100 + seed, 10, 3);
            let cc = c.center();
            assert!(cc.column_means().iter().all(|m| m.abs() <= 1e-12));
            let dm = c.distance_matrix();
            let scale = dm.iter().cloned().fold(1.0, f64::max);
            assert!(max_abs_diff(&dm, &cc.distance_matrix()) <= 1e-15 * scale);
        }
    }

    #[test]
    fn isometries() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 3.0]]).unwrap();
        assert_eq!(c.translate(&[1.0, 1.0]).unwrap().row(0), &[1.0, 1.0]);
        assert_eq!(c.negate().negate(), c);
        assert!(c.translate(&[1.0]).is_err());
        let r = random_cloud(5, 15, 4);
        let t = r.translate(&[0.5, -2.0, 3.0, 1.0]).unwrap().negate();
        assert!(max_abs_diff(&r.distance_matrix(), &t.distance_matrix()) <= 1e-14);
        assert_eq!(r.distance_matrix(), r.negate().distance_matrix());
    }

    #[test]
    fn subsample_and_repeat() {
        let c = random_cloud(3, 20, 2);
        let s = c.subsample(7, RngStream::new(1, 0)).unwrap();
        assert_eq!(s.n(), 7);
        assert_eq!(s, c.subsample(7, RngStream::new(1, 0)).unwrap());
        assert!(c.subsample(21, RngStream::new(1, 0)).is_err());
        let r = c.repeat_each(3).unwrap();
        assert_eq!(r.n(), 60);
        assert_eq!(r.row(4), c.row(1));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bitwise(seed in any::<u64>(), n in 2usize..20, d in 1usize..5) {
            use rand::Rng;
            let mut rng = RngStream::new(seed, 0).rng();
            let pts: Vec<f64> = (0..n * d)
                .map(|_| rng.random::<f64>() * 10f64.powi(rng.random_range(-12..12)) - 0.5)
                .collect();
            let c = PointCloud::new(pts, n, d).unwrap();
            let mut buf = Vec::new();
            c.write_csv(&mut buf).unwrap();
            let back = PointCloud::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(
                c.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
