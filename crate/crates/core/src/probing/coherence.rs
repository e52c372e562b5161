// SPDX-License-Identifier: MIT OR Apache-2.0

//! Delta vectors and the metrics computed over them.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Axis, Category, SwapPair};
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, dot, norm, CompensatedSum, Scalar};

/// Norms below this are treated as zero in cosine computations.
pub const MIN_NORM: f64 = 1e-12;

/// Hidden-state displacement `h_swapped - h_original` of one swap pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaVector<T> {
    pub pair_id: String,
    pub category: Category,
    pub delta: Vec<T>,
}

/// Componentwise `h_swapped - h_original`.
pub fn delta<T: Scalar>(h_swapped: &[T], h_original: &[T]) -> Result<Vec<T>> {
    if h_swapped.len() != h_original.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            h_swapped.len(),
            h_original.len()
        )));
    }
    Ok(h_swapped.iter().zip(h_original).map(|(&a, &b)| a - b).collect())
}

/// Builds the delta of every pair from one layer's hidden states.
pub fn pair_deltas<T: Scalar, V: AsRef<[T]>>(
    pairs: &[SwapPair],
    states: &HashMap<String, V>,
) -> Result<Vec<DeltaVector<T>>> {
    let lookup = |id: &String| {
        states.get(id).map(AsRef::as_ref).ok_or_else(|| Error::Dangling {
            kind: "swap-pair question",
            id: id.clone(),
            target: "hidden state",
        })
    };
    pairs
        .iter()
        .map(|p| {
            let d = delta(lookup(&p.q_swapped)?, lookup(&p.q_original)?)
                .map_err(|e| Error::invalid(format!("pair `{}`: {e}", p.pair_id)))?;
            Ok(DeltaVector {
                pair_id: p.pair_id.clone(),
                category: p.category,
                delta: d,
            })
        })
        .collect()
}

/// Cosine similarity; errors when either vector is (numerically) zero.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na < T::lit(MIN_NORM) || nb < T::lit(MIN_NORM) {
        return Err(Error::domain("cosine of a zero-norm vector"));
    }
    Ok((dot(a, b) / (na * nb)).max(-T::one()).min(T::one()))
}

/// Mean pairwise cosine over the sign-corrected deltas of one axis.
///
/// Deltas of the opposite category are negated first. Returns `None` when
/// fewer than two deltas fall on the axis. Evaluated in `O(N d)` through
/// `sum_{i<j} u_i . u_j = (|sum u_i|^2 - N) / 2` over unit vectors.
pub fn axis_coherence<T: Scalar>(deltas: &[DeltaVector<T>], axis: Axis) -> Result<Option<T>> {
    let members: Vec<&DeltaVector<T>> = deltas.iter().filter(|d| d.category.axis() == axis).collect();
    let n = members.len();
    if n < 2 {
        return Ok(None);
    }
    let dim = members[0].delta.len();
    let mut sums: Vec<CompensatedSum<T>> = vec![CompensatedSum::new(); dim];
    let mut self_terms = CompensatedSum::new();
    for d in &members {
        if d.delta.len() != dim {
            return Err(Error::invalid(format!(
                "pair `{}` has dimension {} (expected {dim})",
                d.pair_id,
                d.delta.len()
            )));
        }
        let len = norm(&d.delta);
        if len < T::lit(MIN_NORM) {
            return Err(Error::domain(format!("pair `{}` has a zero-norm delta", d.pair_id)));
        }
        let scale = if d.category.is_canonical() { T::one() } else { -T::one() } / len;
        let mut unit_sq = CompensatedSum::new();
        for (acc, &x) in sums.iter_mut().zip(&d.delta) {
            let u = x * scale;
            acc.add(u);
            unit_sq.add(u * u);
        }
        self_terms.add(unit_sq.total());
    }
    let total_sq = compensated_sum(sums.iter().map(|s| {
        let t = s.total();
        t * t
    }));
    let pair_sum = (total_sq - self_terms.total()) / T::lit(2.0);
    let pairs = T::from_count(n * (n - 1) / 2);
    Ok(Some((pair_sum / pairs).max(-T::one()).min(T::one())))
}

/// Mean delta of one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats<T> {
    pub category: Category,
    pub mean: Vec<T>,
    pub count: usize,
}

/// Per-category means of the supplied deltas (categories without deltas are
/// absent).
pub fn category_stats<T: Scalar>(deltas: &[DeltaVector<T>]) -> Result<BTreeMap<Category, CategoryStats<T>>> {
    let mut grouped: BTreeMap<Category, Vec<&DeltaVector<T>>> = BTreeMap::new();
    for d in deltas {
        grouped.entry(d.category).or_default().push(d);
    }
    grouped
        .into_iter()
        .map(|(category, members)| {
            let dim = members[0].delta.len();
            if let Some(bad) = members.iter().find(|m| m.delta.len() != dim) {
                return Err(Error::invalid(format!(
                    "pair `{}` has mismatched dimension",
                    bad.pair_id
                )));
            }
            let count = members.len();
            let mean = (0..dim)
                .map(|k| compensated_sum(members.iter().map(|m| m.delta[k])) / T::from_count(count))
                .collect();
            Ok((category, CategoryStats { category, mean, count }))
        })
        .collect()
}

fn mean_of<T: Scalar>(stats: &BTreeMap<Category, CategoryStats<T>>, c: Category) -> Result<&[T]> {
    stats
        .get(&c)
        .map(|s| s.mean.as_slice())
        .ok_or_else(|| Error::invalid(format!("no deltas for category `{c}`")))
}

fn category_cosine<T: Scalar>(stats: &BTreeMap<Category, CategoryStats<T>>, a: Category, b: Category) -> Result<T> {
    cosine(mean_of(stats, a)?, mean_of(stats, b)?)
        .map_err(|_| Error::domain(format!("zero mean delta in `{a}` or `{b}`")))
}

/// VD-Entanglement Index: how much the vertical category means point along
/// the distance category means in the perspective-aligned way
/// (above with far, below with close).
pub fn vd_ei<T: Scalar>(stats: &BTreeMap<Category, CategoryStats<T>>) -> Result<T> {
    use Category::{Above, Below, Close, Far};
    let aligned = category_cosine(stats, Above, Far)? + category_cosine(stats, Below, Close)?;
    let opposing = category_cosine(stats, Above, Close)? + category_cosine(stats, Below, Far)?;
    Ok((aligned - opposing) / T::lit(4.0))
}

/// Cosine similarity between category means, rows and columns in
/// [`Category::ALL`] order.
pub fn similarity_matrix<T: Scalar>(stats: &BTreeMap<Category, CategoryStats<T>>) -> Result<[[T; 6]; 6]> {
    let mut m = [[T::one(); 6]; 6];
    for (i, a) in Category::ALL.into_iter().enumerate() {
        mean_of(stats, a)?;
        for (j, b) in Category::ALL.into_iter().enumerate().skip(i + 1) {
            let c = category_cosine(stats, a, b)?;
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    Ok(m)
}

/// VD-EI read off a similarity matrix.
pub fn vd_ei_from_matrix<T: Scalar>(m: &[[T; 6]; 6]) -> T {
    let at = |a: Category, b: Category| m[a.index()][b.index()];
    use Category::{Above, Below, Close, Far};
    (at(Above, Far) + at(Below, Close) - (at(Above, Close) + at(Below, Far))) / T::lit(4.0)
}

/// Axis coherences and VD-EI at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceReport<T> {
    pub layer: u32,
    pub coh_horizontal: Option<T>,
    pub coh_vertical: Option<T>,
    pub coh_distance: Option<T>,
    /// `None` when one of above/below/far/close has no deltas.
    pub vd_ei: Option<T>,
    pub n_horizontal: usize,
    pub n_vertical: usize,
    pub n_distance: usize,
}

impl<T: Scalar> CoherenceReport<T> {
    pub fn coherence(&self, axis: Axis) -> Option<T> {
        match axis {
            Axis::Horizontal => self.coh_horizontal,
            Axis::Vertical => self.coh_vertical,
            Axis::Distance => self.coh_distance,
        }
    }
}

pub fn coherence_report<T: Scalar>(deltas: &[DeltaVector<T>], layer: u32) -> Result<CoherenceReport<T>> {
    let count = |axis: Axis| deltas.iter().filter(|d| d.category.axis() == axis).count();
    let stats = category_stats(deltas)?;
    let vertical_and_distance = [Category::Above, Category::Below, Category::Far, Category::Close];
    let vd = if vertical_and_distance.iter().all(|c| stats.contains_key(c)) {
        Some(vd_ei(&stats)?)
    } else {
        None
    };
    Ok(CoherenceReport {
        layer,
        coh_horizontal: axis_coherence(deltas, Axis::Horizontal)?,
        coh_vertical: axis_coherence(deltas, Axis::Vertical)?,
        coh_distance: axis_coherence(deltas, Axis::Distance)?,
        vd_ei: vd,
        n_horizontal: count(Axis::Horizontal),
        n_vertical: count(Axis::Vertical),
        n_distance: count(Axis::Distance),
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dv(c: Category, v: &[f64]) -> DeltaVector<f64> {
        DeltaVector {
            pair_id: format!("{c}-{v:?}"),
            category: c,
            delta: v.to_vec(),
        }
    }

    fn stats_of(means: &[(Category, [f64; 2])]) -> BTreeMap<Category, CategoryStats<f64>> {
        means
            .iter()
            .map(|(c, m)| {
                (
                    *c,
                    CategoryStats {
                        category: *c,
                        mean: m.to_vec(),
                        count: 1,
                    },
                )
            })
            .collect()
    }

    /// Direct O(N^2) evaluation of the mean pairwise cosine.
    fn brute_force(deltas: &[DeltaVector<f64>], axis: Axis) -> Option<f64> {
        let v: Vec<Vec<f64>> = deltas
            .iter()
            .filter(|d| d.category.axis() == axis)
            .map(|d| {
                let s = if d.category.is_canonical() { 1.0 } else { -1.0 };
                d.delta.iter().map(|x| s * x).collect()
            })
            .collect();
        let n = v.len();
        if n < 2 {
            return None;
        }
        let cos = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            d / (na * nb)
        };
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                total += cos(&v[i], &v[j]);
            }
        }
        Some(2.0 * total / (n * (n - 1)) as f64)
    }

    #[test]
    fn delta_basics() {
        assert_eq!(delta(&[1.0, 2.0], &[0.0, 2.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(delta(&[3.0, 2.0], &[3.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        let a = [0.5, -1.0, 2.0];
        let b = [1.5, 1.0, -2.0];
        let ab = delta(&a, &b).unwrap();
        let ba = delta(&b, &a).unwrap();
        assert!(ab.iter().zip(&ba).all(|(x, y)| *x == -*y));
        assert!(delta(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn coherence_fixtures() {
        let same = [dv(Category::Far, &[1.0, 0.0]), dv(Category::Far, &[1.0, 0.0])];
        assert_eq!(axis_coherence(&same, Axis::Distance).unwrap(), Some(1.0));
        let anti = [dv(Category::Far, &[1.0, 0.0]), dv(Category::Close, &[-1.0, 0.0])];
        assert_eq!(axis_coherence(&anti, Axis::Distance).unwrap(), Some(1.0));
        // cos pairs: (1,0)·(0.8,0.6) = 0.8, (1,0)·(1,0) = 1, (0.8,0.6)·(1,0) = 0.8
        let three = [
            dv(Category::Left, &[1.0, 0.0]),
            dv(Category::Left, &[0.8, 0.6]),
            dv(Category::Right, &[-1.0, 0.0]),
        ];
        let c = axis_coherence(&three, Axis::Horizontal).unwrap().unwrap();
        assert!((c - 2.6 / 3.0).abs() < 1e-12, "{c}");
        assert!((c - 0.866_666_7).abs() < 1e-7);
    }

    #[test]
    fn coherence_edge_cases() {
        let one = [dv(Category::Left, &[1.0, 0.0])];
        assert_eq!(axis_coherence(&one, Axis::Horizontal).unwrap(), None);
        assert_eq!(axis_coherence(&one, Axis::Vertical).unwrap(), None);
        let zero = [dv(Category::Left, &[1.0, 0.0]), dv(Category::Right, &[0.0, 0.0])];
        let err = axis_coherence(&zero, Axis::Horizontal).unwrap_err();
        assert!(err.to_string().contains("right"), "{err}");
    }

    #[test]
    fn vd_ei_fixtures() {
        use Category::*;
        let entangled = stats_of(&[
            (Above, [1.0, 0.0]),
            (Far, [1.0, 0.0]),
            (Below, [-1.0, 0.0]),
            (Close, [-1.0, 0.0]),
        ]);
        assert!((vd_ei(&entangled).unwrap() - 1.0).abs() < 1e-12);
        let orthogonal = stats_of(&[
            (Above, [1.0, 0.0]),
            (Below, [-1.0, 0.0]),
            (Far, [0.0, 1.0]),
            (Close, [0.0, -1.0]),
        ]);
        assert!(vd_ei(&orthogonal).unwrap().abs() < 1e-12);
        // Each aligned cosine is cos 45°, each opposing one -cos 45°.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let diag = stats_of(&[
            (Above, [1.0, 0.0]),
            (Below, [-1.0, 0.0]),
            (Far, [h, h]),
            (Close, [-h, -h]),
        ]);
        assert!((vd_ei(&diag).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn vd_ei_errors() {
        use Category::*;
        let missing = stats_of(&[(Above, [1.0, 0.0]), (Below, [-1.0, 0.0]), (Far, [0.0, 1.0])]);
        assert!(vd_ei(&missing).is_err());
        let zero = stats_of(&[
            (Above, [0.0, 0.0]),
            (Below, [-1.0, 0.0]),
            (Far, [0.0, 1.0]),
            (Close, [0.0, -1.0]),
        ]);
        assert!(vd_ei(&zero).is_err());
    }

    #[test]
    fn similarity_matrix_properties() {
        use Category::*;
        let stats = stats_of(&[
            (Left, [0.3, 1.0]),
            (Right, [-0.3, -1.0]),
            (Above, [1.0, 0.2]),
            (Below, [-0.9, 0.1]),
            (Far, [0.5, 0.5]),
            (Close, [-0.2, -0.7]),
        ]);
        let m = similarity_matrix(&stats).unwrap();
        for i in 0..6 {
            assert_eq!(m[i][i], 1.0);
            for j in 0..6 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert!((m[0][1] + 1.0).abs() < 1e-12);
        assert_eq!(vd_ei_from_matrix(&m), vd_ei(&stats).unwrap());
    }

    #[test]
    fn category_means() {
        let d = [
            dv(Category::Far, &[1.0, 2.0]),
            dv(Category::Far, &[3.0, 0.0]),
            dv(Category::Close, &[0.0, 1.0]),
        ];
        let s = category_stats(&d).unwrap();
        assert_eq!(s[&Category::Far].mean, vec![2.0, 1.0]);
        assert_eq!(s[&Category::Far].count, 2);
        assert_eq!(s[&Category::Close].count, 1);
        assert!(!s.contains_key(&Category::Left));
    }

    #[test]
    fn isotropic_noise_has_near_zero_coherence() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let deltas: Vec<DeltaVector<f64>> = (0..240)
            .map(|i| {
                let v: Vec<f64> = (0..64).map(|_| rng.gen::<f64>() - 0.5).collect();
                let c = if i % 2 == 0 { Category::Above } else { Category::Below };
                DeltaVector {
                    pair_id: i.to_string(),
                    category: c,
                    delta: v,
                }
            })
            .collect();
        let c = axis_coherence(&deltas, Axis::Vertical).unwrap().unwrap();
        assert!(c.abs() < 0.05, "{c}");
    }

    #[test]
    fn single_precision_coherence() {
        let d = [
            DeltaVector {
                pair_id: "a".into(),
                category: Category::Far,
                delta: vec![1.0f32, 0.0],
            },
            DeltaVector {
                pair_id: "b".into(),
                category: Category::Close,
                delta: vec![-1.0f32, 0.0],
            },
        ];
        assert_eq!(axis_coherence(&d, Axis::Distance).unwrap(), Some(1.0f32));
    }

    fn arb_deltas() -> impl Strategy<Value = Vec<DeltaVector<f64>>> {
        (2usize..30, 1usize..12).prop_flat_map(|(n, d)| {
            prop::collection::vec((prop::bool::ANY, prop::collection::vec(-3.0f64..3.0, d)), n).prop_map(|rows| {
                rows.into_iter()
                    .enumerate()
                    .map(|(i, (canon, mut v))| {
                        v[0] += if v[0] >= 0.0 { 0.1 } else { -0.1 };
                        DeltaVector {
                            pair_id: i.to_string(),
                            category: if canon { Category::Far } else { Category::Close },
                            delta: v,
                        }
                    })
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(deltas in arb_deltas()) {
            let fast = axis_coherence(&deltas, Axis::Distance).unwrap().unwrap();
            let slow = brute_force(&deltas, Axis::Distance).unwrap();
            prop_assert!((fast - slow).abs() < 1e-10);
            prop_assert!((-1.0..=1.0).contains(&fast));
        }

        #[test]
        fn invariant_to_rescaling_and_sign_correction(deltas in arb_deltas(), k in 0.01f64..100.0) {
            let base = axis_coherence(&deltas, Axis::Distance).unwrap().unwrap();
            let mut scaled = deltas.clone();
            scaled[0].delta.iter_mut().for_each(|x| *x *= k);
            prop_assert!((axis_coherence(&scaled, Axis::Distance).unwrap().unwrap() - base).abs() < 1e-10);
            let mut flipped = deltas.clone();
            let d = &mut flipped[0];
            d.category = d.category.opposite();
            d.delta.iter_mut().for_each(|x| *x = -*x);
            prop_assert!((axis_coherence(&flipped, Axis::Distance).unwrap().unwrap() - base).abs() < 1e-10);
        }

        #[test]
        fn copies_of_one_vector_are_fully_coherent(v in prop::collection::vec(0.1f64..3.0, 1..10), n in 2usize..20) {
            let deltas: Vec<_> = (0..n).map(|i| DeltaVector { pair_id: i.to_string(), category: Category::Above, delta: v.clone() }).collect();
            prop_assert!((axis_coherence(&deltas, Axis::Vertical).unwrap().unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn vd_ei_scale_and_sign(a in prop::array::uniform2(0.1f64..2.0), b in prop::array::uniform2(-2.0f64..-0.1),
                                f in prop::array::uniform2(-2.0f64..2.0), c in prop::array::uniform2(-2.0f64..2.0),
                                k in prop::array::uniform4(0.1f64..10.0)) {
            use Category::*;
            prop_assume!(f[0].abs() + f[1].abs() > 0.1 && c[0].abs() + c[1].abs() > 0.1);
            let base = stats_of(&[(Above, a), (Below, b), (Far, f), (Close, c)]);
            let v = vd_ei(&base).unwrap();
            prop_assert!((-1.0..=1.0).contains(&v));
            let s = |x: [f64; 2], k: f64| [x[0] * k, x[1] * k];
            let scaled = stats_of(&[(Above, s(a, k[0])), (Below, s(b, k[1])), (Far, s(f, k[2])), (Close, s(c, k[3]))]);
            prop_assert!((vd_ei(&scaled).unwrap() - v).abs() < 1e-12);
            let negated = stats_of(&[(Above, s(a, -1.0)), (Below, s(b, -1.0)), (Far, f), (Close, c)]);
            prop_assert!((vd_ei(&negated).unwrap() + v).abs() < 1e-12);
        }
    }
}
