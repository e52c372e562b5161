// SPDX-License-Identifier: MIT OR Apache-2.0

//! Principal components of delta vectors via one-sided Jacobi SVD.

use serde::{Deserialize, Serialize};

use super::{Category, DeltaVector};
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

const MAX_SWEEPS: usize = 80;

/// Principal axes of a centered data matrix.
///
/// Each component is a unit vector whose largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult<T> {
    /// `k` rows of length `d`.
    pub components: Vec<Vec<T>>,
    pub singular_values: Vec<T>,
    /// `sigma^2 / (N - 1)` per component.
    pub explained_variance: Vec<T>,
    /// Share of the total variance per component.
    pub explained_variance_ratio: Vec<T>,
    /// `N` rows of length `k`.
    pub projections: Vec<Vec<T>>,
    /// Column means removed before the decomposition.
    pub mean: Vec<T>,
    /// Number of components with non-negligible variance.
    pub rank: usize,
    /// Set when `k` exceeds the numerical rank; the missing axes are
    /// completed to an orthonormal basis and carry zero variance.
    pub rank_deficient: bool,
}

/// PCA of labelled deltas, projections in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPca<T> {
    pub pair_ids: Vec<String>,
    pub categories: Vec<Category>,
    pub pca: PcaResult<T>,
}

/// One-sided (Hestenes) Jacobi: orthogonalizes `cols` in place by plane
/// rotations and returns the accumulated right rotation (column-major).
fn jacobi<T: Scalar>(cols: &mut [Vec<T>]) -> Vec<Vec<T>> {
    let n = cols.len();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let tol = T::epsilon() * T::from_count(cols.first().map_or(1, Vec::len)).sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .fold((T::zero(), T::zero(), T::zero()), |(a, b, g), (&x, &y)| {
                        (a + x * x, b + y * y, g + x * y)
                    });
                if alpha == T::zero() || beta == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(q);
    for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

fn unit<T: Scalar>(v: &[T]) -> Vec<T> {
    let n = compensated_sum(v.iter().map(|&x| x * x)).sqrt();
    v.iter().map(|&x| x / n).collect()
}

/// Index of the largest-magnitude entry, first one on ties.
fn dominant_index<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Top-`k` principal components of `rows` (`N x d`).
pub fn pca<T: Scalar, R: AsRef<[T]>>(rows: &[R], k: usize) -> Result<PcaResult<T>> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid(format!("pca needs at least two rows, got {n}")));
    }
    let d = rows[0].as_ref().len();
    if let Some(i) = rows.iter().position(|r| r.as_ref().len() != d) {
        return Err(Error::invalid(format!(
            "row {i} has dimension {} (expected {d})",
            rows[i].as_ref().len()
        )));
    }
    if k == 0 || k > d {
        return Err(Error::invalid(format!("component count must lie in 1..={d}, got {k}")));
    }
    if n < k + 1 {
        return Err(Error::invalid(format!(
            "{k} components need at least {} rows, got {n}",
            k + 1
        )));
    }
    if rows.iter().flat_map(|r| r.as_ref()).any(|x| !x.is_finite()) {
        return Err(Error::domain("pca input contains non-finite values"));
    }
    let mean: Vec<T> = (0..d)
        .map(|j| compensated_sum(rows.iter().map(|r| r.as_ref()[j])) / T::from_count(n))
        .collect();
    let centered: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.as_ref().iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();

    // (sigma, axis in R^d) pairs. Rotate over the smaller dimension.
    let mut spectrum: Vec<(T, Vec<T>)> = if d <= n {
        let mut cols: Vec<Vec<T>> = (0..d).map(|j| centered.iter().map(|r| r[j]).collect()).collect();
        let v = jacobi(&mut cols);
        cols.iter()
            .zip(v)
            .map(|(c, axis)| (compensated_sum(c.iter().map(|&x| x * x)).sqrt(), axis))
            .collect()
    } else {
        let mut cols = centered.clone();
        jacobi(&mut cols);
        cols.into_iter()
            .map(|c| (compensated_sum(c.iter().map(|&x| x * x)).sqrt(), c))
            .collect()
    };
    spectrum.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));

    let sigma_max = spectrum.first().map_or(T::zero(), |s| s.0);
    let cutoff = sigma_max * T::epsilon() * T::from_count(n.max(d)) * T::lit(10.0);
    let rank = spectrum.iter().take_while(|s| s.0 > cutoff && s.0 > T::zero()).count();
    let rank_deficient = k > rank;

    let mut components: Vec<Vec<T>> = spectrum.iter().take(k.min(rank)).map(|(_, axis)| unit(axis)).collect();
    let mut singular_values: Vec<T> = spectrum.iter().take(k.min(rank)).map(|s| s.0).collect();
    // Complete with Gram-Schmidt over the standard basis.
    let mut e = 0;
    while components.len() < k {
        let mut candidate: Vec<T> = (0..d).map(|j| if j == e { T::one() } else { T::zero() }).collect();
        e += 1;
        for _ in 0..2 {
            for c in &components {
                let proj = compensated_sum(candidate.iter().zip(c).map(|(&x, &y)| x * y));
                candidate.iter_mut().zip(c).for_each(|(x, &y)| *x = *x - proj * y);
            }
        }
        let len = compensated_sum(candidate.iter().map(|&x| x * x)).sqrt();
        if len > T::lit(1e-3) {
            components.push(candidate.into_iter().map(|x| x / len).collect());
            singular_values.push(T::zero());
        }
    }
    for c in &mut components {
        if c[dominant_index(c)] < T::zero() {
            c.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let denom = T::from_count(n - 1);
    let explained_variance: Vec<T> = singular_values.iter().map(|&s| s * s / denom).collect();
    let total = compensated_sum(spectrum.iter().map(|s| s.0 * s.0));
    let explained_variance_ratio = singular_values
        .iter()
        .map(|&s| if total > T::zero() { s * s / total } else { T::zero() })
        .collect();
    let projections = centered
        .iter()
        .map(|r| {
            components
                .iter()
                .map(|c| compensated_sum(r.iter().zip(c).map(|(&x, &y)| x * y)))
                .collect()
        })
        .collect();
    Ok(PcaResult {
        components,
        singular_values,
        explained_variance,
        explained_variance_ratio,
        projections,
        mean,
        rank,
        rank_deficient,
    })
}

pub fn pca_deltas<T: Scalar>(deltas: &[DeltaVector<T>], k: usize) -> Result<DeltaPca<T>> {
    let rows: Vec<&[T]> = deltas.iter().map(|d| d.delta.as_slice()).collect();
    Ok(DeltaPca {
        pair_ids: deltas.iter().map(|d| d.pair_id.clone()).collect(),
        categories: deltas.iter().map(|d| d.category).collect(),
        pca: pca(&rows, k)?,
    })
}
