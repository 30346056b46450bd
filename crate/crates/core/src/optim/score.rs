//! Weighted scalar ranking of evaluated individuals.

use serde::{Deserialize, Serialize};

use super::nsga::{Individual, Objectives};

/// Weighted sum of objectives; lower is better.
pub fn score(f: &Objectives, w: &[f64; 3]) -> f64 {
    f[0] * w[0] + f[1] * w[1] + f[2] * w[2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSolution {
    pub genes: Vec<f64>,
    pub objectives: Objectives,
    pub score: f64,
}

/// The `k` lowest-scoring individuals, ascending, ties in input order.
/// Individuals with identical genes are reported once.
pub fn score_and_rank(individuals: &[Individual], weights: &[f64; 3], k: usize) -> Vec<RankedSolution> {
    let mut order: Vec<(f64, usize)> =
        individuals.iter().enumerate().map(|(i, p)| (score(&p.objectives, weights), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<RankedSolution> = Vec::with_capacity(k);
    for (s, i) in order {
        if out.len() == k {
            break;
        }
        let p = &individuals[i];
        let dup = out.iter().any(|r| r.genes.iter().map(|g| g.to_bits()).eq(p.genes.iter().map(|g| g.to_bits())));
        if !dup {
            out.push(RankedSolution { genes: p.genes.clone(), objectives: p.objectives, score: s });
        }
    }
    out
}
