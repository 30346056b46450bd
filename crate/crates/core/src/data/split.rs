use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{group_indices, RecordSet};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<RecordSet>,
    pub val: Vec<RecordSet>,
    pub test: Vec<RecordSet>,
}

impl DatasetSplit {
    /// Set ids of each partition.
    pub fn ids(&self) -> [Vec<usize>; 3] {
        let ids = |v: &[RecordSet]| v.iter().map(|s| s.id).collect();
        [ids(&self.train), ids(&self.val), ids(&self.test)]
    }
}

/// 70/10/20 split over gait-parameter groups.
///
/// Every set of one gait, whatever its flow speed (measured or interpolated),
/// lands in the same partition. Group counts are `round(0.7 n)`,
/// `round(0.1 n)` and the remainder; with one set per gait this is a split of
/// sets. Deterministic in `seed`; sets keep their input order inside each
/// partition.
pub fn split_dataset(sets: &[RecordSet], seed: u64) -> DatasetSplit {
    let mut groups = group_indices(sets);
    let n = groups.len();
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = (0.7 * n as f64).round() as usize;
    let n_val = ((0.1 * n as f64).round() as usize).min(n - n_train);

    let mut part = vec![2u8; sets.len()];
    for (rank, g) in groups.iter().enumerate() {
        let p = if rank < n_train {
            0
        } else if rank < n_train + n_val {
            1
        } else {
            2
        };
        for &i in g {
            part[i] = p;
        }
    }
    let mut out = DatasetSplit::default();
    for (rs, p) in sets.iter().zip(part) {
        match p {
            0 => out.train.push(rs.clone()),
            1 => out.val.push(rs.clone()),
            _ => out.test.push(rs.clone()),
        }
    }
    out
}
