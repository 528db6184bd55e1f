use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Synthetic Minority Over-sampling.
///
/// Minority points are visited round-robin in dataset order. Each synthetic
/// sample interpolates `x_i + u (x_j - x_i)` with `x_j` drawn uniformly from
/// the `k` nearest minority neighbours of `x_i` (Euclidean, ties by index)
/// and `u ~ U[0, 1)`. Samples are appended until both classes have the same
/// count; the input rows are kept unchanged as a prefix.
pub fn smote(train: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    let [n0, n1] = train.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::Data("SMOTE needs both classes present".into()));
    }
    if n0 == n1 {
        return Ok(train.clone());
    }
    let (minority, needed) = if n1 < n0 { (1u8, n0 - n1) } else { (0u8, n1 - n0) };
    let members: Vec<usize> = (0..train.len()).filter(|&i| train.labels()[i] == minority).collect();
    if members.len() < 2 {
        return Err(Error::Data(format!(
            "minority class {minority} has {} sample; SMOTE needs at least 2",
            members.len()
        )));
    }
    if k == 0 {
        return Err(Error::Config("SMOTE needs k >= 1".into()));
    }
    let k = k.min(members.len() - 1);

    let neighbours: Vec<Vec<usize>> = members
        .iter()
        .map(|&i| {
            let mut d: Vec<(f64, usize)> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (sq_dist(train.row(i), train.row(j)), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(needed * train.feature_count());
    for s in 0..needed {
        let slot = s % members.len();
        let base = train.row(members[slot]);
        let other = train.row(neighbours[slot][rng.gen_range(0..k)]);
        let u: f64 = rng.gen();
        rows.extend(base.iter().zip(other).map(|(&a, &b)| a + u * (b - a)));
    }
    train.extended(rows, vec![minority; needed])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetSchema;
    use crate::tensor::Tensor;

    fn make(points: &[[f64; 2]], labels: &[u8]) -> Dataset {
        let data = points.iter().flatten().copied().collect();
        Dataset::new(
            Tensor::new(&[points.len(), 2], data).unwrap(),
            labels.to_vec(),
            DatasetSchema::numeric(vec!["a".into(), "b".into()], "y"),
        )
        .unwrap()
    }

    #[test]
    fn two_minority_points_stay_on_the_diagonal() {
        let mut pts = vec![[5.0, -5.0]; 6];
        pts.push([0.0, 0.0]);
        pts.push([1.0, 1.0]);
        let mut labels = vec![0u8; 6];
        labels.extend([1, 1]);
        let out = smote(&make(&pts, &labels), 5, 1).unwrap();
        assert_eq!(out.class_counts(), [6, 6]);
        for i in 8..12 {
            let r = out.row(i);
            assert_eq!(r[0], r[1]);
            assert!((0.0..=1.0).contains(&r[0]));
            assert_eq!(out.labels()[i], 1);
        }
    }

    #[test]
    fn eighty_twenty_becomes_exact_parity() {
        let pts: Vec<[f64; 2]> = (0..100).map(|i| [i as f64, (i * 7 % 13) as f64]).collect();
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 5 == 0)).collect();
        let ds = make(&pts, &labels);
        let out = smote(&ds, 5, 2).unwrap();
        assert_eq!(out.class_counts(), [80, 80]);
        assert_eq!(out.subset(&(0..100).collect::<Vec<_>>()).unwrap().features(), ds.features());
    }

    #[test]
    fn majority_of_anomalies_oversamples_normals() {
        let pts: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 0.0]).collect();
        let labels = [1, 1, 1, 1, 1, 1, 1, 0, 0, 0];
        let out = smote(&make(&pts, &labels), 5, 3).unwrap();
        assert_eq!(out.class_counts(), [7, 7]);
        assert!(out.labels()[10..].iter().all(|&y| y == 0));
    }

    #[test]
    fn degenerate_inputs() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(matches!(smote(&make(&pts, &[0, 0, 0]), 5, 1), Err(Error::Data(_))));
        assert!(matches!(smote(&make(&pts, &[0, 0, 1]), 5, 1), Err(Error::Data(_))));
        let balanced = make(&[[0.0, 0.0], [1.0, 1.0]], &[0, 1]);
        assert_eq!(smote(&balanced, 5, 1).unwrap(), balanced);
    }

    #[test]
    fn deterministic() {
        let pts: Vec<[f64; 2]> = (0..30).map(|i| [(i * 3 % 7) as f64, (i * 5 % 11) as f64]).collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 4 == 0)).collect();
        let ds = make(&pts, &labels);
        assert_eq!(smote(&ds, 5, 7).unwrap(), smote(&ds, 5, 7).unwrap());
    }
}
