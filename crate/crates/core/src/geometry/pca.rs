//! Dominant principal axis by power iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::dot;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;
/// Squarings applied before iterating, so the effective gap ratio is
/// `(λ2/λ1)^(2^SQUARINGS)`.
const SQUARINGS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcaError {
    #[error("zero_variance: all points coincide")]
    ZeroVariance,
    #[error("power_iteration_stalled: no convergence after {iterations} iterations (near-degenerate top eigenvalues)")]
    Stalled { iterations: usize },
    #[error("insufficient_points: need at least 2 points, got {0}")]
    InsufficientPoints(usize),
    #[error("dim_mismatch: point {index} has dimension {found}, expected {expected}")]
    DimMismatch { index: usize, expected: usize, found: usize },
}

impl PcaError {
    pub fn code(&self) -> &'static str {
        match self {
            PcaError::ZeroVariance => "zero_variance",
            PcaError::Stalled { .. } => "power_iteration_stalled",
            PcaError::InsufficientPoints(_) => "insufficient_points",
            PcaError::DimMismatch { .. } => "dim_mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionAxis {
    /// Unit vector; its largest-magnitude coordinate is positive.
    pub axis: Vec<f64>,
    pub mean: Vec<f64>,
    /// Variance along the axis.
    pub eigenvalue: f64,
    /// `(x_i - mean) · axis` for every input row, in input order.
    pub projections: Vec<f64>,
}

impl OpinionAxis {
    pub fn project(&self, point: &[f64]) -> f64 {
        point
            .iter()
            .zip(&self.mean)
            .zip(&self.axis)
            .map(|((x, m), a)| (x - m) * a)
            .sum()
    }
}

/// Row-major symmetric matrix.
struct Sym {
    n: usize,
    a: Vec<f64>,
}

impl Sym {
    fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.a.chunks_exact(self.n).map(|row| dot(row, v)).collect()
    }

    fn squared(&self) -> Sym {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&self.a[i * n..(i + 1) * n], &self.a[j * n..(j + 1) * n]);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        let mut s = Sym { n, a: out };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let frob = self.a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if frob > 0.0 {
            self.a.iter_mut().for_each(|v| *v /= frob);
        }
    }
}

fn unit(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = dot(&v, &v).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Dominant unit eigenvector of a positive semi-definite matrix.
fn dominant_eigenvector(m: &Sym) -> Result<Vec<f64>, PcaError> {
    let mut b = Sym { n: m.n, a: m.a.clone() };
    b.normalize();
    for _ in 0..SQUARINGS {
        b = b.squared();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start: Vec<f64> = (0..m.n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut v = unit(start).ok_or(PcaError::ZeroVariance)?;
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut next = unit(b.mul_vec(&v)).ok_or(PcaError::ZeroVariance)?;
        fix_sign(&mut next);
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        v = next;
        if delta < POWER_TOLERANCE {
            return Ok(v);
        }
    }
    Err(PcaError::Stalled {
        iterations: POWER_MAX_ITERATIONS,
    })
}

/// First principal component of `rows`. Works on the `d × d` covariance or
/// the `n × n` Gram matrix, whichever is smaller.
pub fn opinion_axis(rows: &[&[f64]]) -> Result<OpinionAxis, PcaError> {
    let n = rows.len();
    if n < 2 {
        return Err(PcaError::InsufficientPoints(n));
    }
    let d = rows[0].len();
    if let Some((index, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(PcaError::DimMismatch {
            index,
            expected: d,
            found: row.len(),
        });
    }
    let mut mean = vec![0.0; d];
    for row in rows {
        mean.iter_mut().zip(row.iter()).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    if centered.iter().all(|r| r.iter().all(|&x| x == 0.0)) {
        return Err(PcaError::ZeroVariance);
    }

    let mut axis = if d <= n {
        let mut cov = vec![0.0; d * d];
        for r in &centered {
            for i in 0..d {
                if r[i] == 0.0 {
                    continue;
                }
                for j in i..d {
                    cov[i * d + j] += r[i] * r[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                cov[i * d + j] = cov[j * d + i];
            }
        }
        dominant_eigenvector(&Sym { n: d, a: cov })?
    } else {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&centered[i], &centered[j]);
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        let u = dominant_eigenvector(&Sym { n, a: gram })?;
        let mut back = vec![0.0; d];
        for (r, w) in centered.iter().zip(&u) {
            back.iter_mut().zip(r).for_each(|(b, x)| *b += w * x);
        }
        unit(back).ok_or(PcaError::ZeroVariance)?
    };
    fix_sign(&mut axis);
    let projections: Vec<f64> = centered.iter().map(|r| dot(r, &axis)).collect();
    let eigenvalue = projections.iter().map(|p| p * p).sum::<f64>() / (n - 1) as f64;
    Ok(OpinionAxis {
        axis,
        mean,
        eigenvalue,
        projections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_recovers_first_axis() {
        let pts: Vec<Vec<f64>> = (0..6).map(|t| vec![t as f64, 0.0, 0.0]).collect();
        let rows: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let ax = opinion_axis(&rows).unwrap();
        assert!((ax.axis[0] - 1.0).abs() < 1e-12);
        assert!(ax.axis[1].abs() < 1e-12 && ax.axis[2].abs() < 1e-12);
        for (t, p) in ax.projections.iter().enumerate() {
            assert!((p - (t as f64 - 2.5)).abs() < 1e-9);
        }
        assert!(ax.projections.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn wide_data_uses_gram_path() {
        // 3 points in 8 dimensions, all along one direction.
        let dir = [1.0, -2.0, 0.5, 0.0, 3.0, 0.0, 0.0, 1.0];
        let pts: Vec<Vec<f64>> = [-1.0, 0.0, 2.0].iter().map(|s| dir.iter().map(|d| d * s).collect()).collect();
        let rows: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let ax = opinion_axis(&rows).unwrap();
        let norm = dot(&dir, &dir).sqrt();
        for (a, d) in ax.axis.iter().zip(dir) {
            assert!((a - d / norm).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let same = [vec![1.0, 2.0], vec![1.0, 2.0]];
        let rows: Vec<&[f64]> = same.iter().map(Vec::as_slice).collect();
        assert_eq!(opinion_axis(&rows).unwrap_err().code(), "zero_variance");
        assert_eq!(opinion_axis(&rows[..1]).unwrap_err().code(), "insufficient_points");
        // Isotropic square: the top two eigenvalues are equal.
        let square = [vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let rows: Vec<&[f64]> = square.iter().map(Vec::as_slice).collect();
        assert!(opinion_axis(&rows).is_ok_and(|a| (dot(&a.axis, &a.axis) - 1.0).abs() < 1e-12)
            || opinion_axis(&rows).unwrap_err().code() == "power_iteration_stalled");
    }
}
