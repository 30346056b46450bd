//! Elitist non-dominated sorting GA over a box-bounded real search space.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::score::score;
use crate::dynamics::Mode;

pub type Objectives = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub objectives: Objectives,
    /// Front index, 0 for the non-dominated front.
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    fn unevaluated(genes: Vec<f64>) -> Self {
        Self { genes, objectives: [f64::INFINITY; 3], rank: usize::MAX, crowding: 0.0 }
    }
}

/// A minimization problem evaluated a population at a time.
pub trait Problem {
    fn bounds(&self) -> &[(f64, f64)];
    /// One objective vector per gene vector; non-finite entries mark failures.
    fn evaluate(&self, population: &[Vec<f64>]) -> Vec<Objectives>;
}

/// Variation and selection controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptConfig {
    /// Which motion the objectives describe; ignored by generic problems.
    pub mode: Mode,
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    pub sbx_eta: f64,
    pub pm_eta: f64,
    pub seed: u64,
    /// Weights of the scalar score used for the archive summary.
    pub weights: [f64; 3],
    /// Size of the ranked report.
    pub retain_k: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Straight,
            population: 100,
            generations: 50,
            crossover_prob: 0.9,
            mutation_prob: 1.0 / 7.0,
            sbx_eta: 15.0,
            pm_eta: 20.0,
            seed: 0,
            weights: [1.0, 4.0, 2.0],
            retain_k: 8,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: String| Err(crate::Error::InvalidParameter(m));
        if self.population < 2 || !self.population.is_multiple_of(2) {
            return bad(format!("population must be even and at least 2, got {}", self.population));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) || !(0.0..=1.0).contains(&self.mutation_prob) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("score weights must be positive".into());
        }
        if self.retain_k == 0 {
            return bad("retain_k must be at least 1".into());
        }
        if !(self.sbx_eta >= 0.0 && self.pm_eta >= 0.0) {
            return bad("distribution indices must be non-negative".into());
        }
        Ok(())
    }
}

/// `a` dominates `b`: no worse everywhere, better somewhere.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Pareto fronts as index lists, best first, indices ascending within a front.
pub fn nondominated_sort(objs: &[Objectives]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&objs[i], &objs[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&objs[j], &objs[i]) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front. Extremes per objective are
/// infinite; an objective with zero or non-finite range adds nothing.
pub fn crowding_distance(front: &[Objectives]) -> Vec<f64> {
    let n = front.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in 0..3 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| front[a][m].total_cmp(&front[b][m]).then(a.cmp(&b)));
        let lo = front[idx[0]][m];
        let hi = front[idx[n - 1]][m];
        let range = hi - lo;
        d[idx[0]] = f64::INFINITY;
        d[idx[n - 1]] = f64::INFINITY;
        if !(range > 0.0 && range.is_finite()) {
            continue;
        }
        for k in 1..n - 1 {
            let gap = (front[idx[k + 1]][m] - front[idx[k - 1]][m]) / range;
            if gap.is_finite() {
                d[idx[k]] += gap;
            }
        }
    }
    d
}

/// Assigns rank and crowding to every individual.
pub fn rank_and_crowd(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let objs: Vec<Objectives> = pop.iter().map(|p| p.objectives).collect();
    let fronts = nondominated_sort(&objs);
    for (r, front) in fronts.iter().enumerate() {
        let fo: Vec<Objectives> = front.iter().map(|&i| objs[i]).collect();
        for (&i, c) in front.iter().zip(crowding_distance(&fo)) {
            pop[i].rank = r;
            pop[i].crowding = c;
        }
    }
    fronts
}

/// Lower rank wins, then larger crowding; ties keep the first.
fn better(a: &Individual, b: &Individual) -> bool {
    match a.rank.cmp(&b.rank) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => !(b.crowding > a.crowding),
    }
}

fn tournament<'p>(pop: &'p [Individual], rng: &mut impl Rng) -> &'p Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if better(a, b) { a } else { b }
}

/// Bounded simulated binary crossover of one gene pair.
fn sbx_gene(y1: f64, y2: f64, (lo, hi): (f64, f64), eta: f64, rng: &mut impl Rng) -> (f64, f64) {
    if (y1 - y2).abs() <= 1e-14 {
        return (y1, y2);
    }
    let (a, b) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
    let u: f64 = rng.random();
    let spread = |beta: f64| {
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let bq1 = spread(1.0 + 2.0 * (a - lo) / (b - a));
    let bq2 = spread(1.0 + 2.0 * (hi - b) / (b - a));
    let c1 = (0.5 * ((a + b) - bq1 * (b - a))).clamp(lo, hi);
    let c2 = (0.5 * ((a + b) + bq2 * (b - a))).clamp(lo, hi);
    if rng.random::<f64>() < 0.5 { (c2, c1) } else { (c1, c2) }
}

/// Bounded polynomial mutation of one gene.
fn mutate_gene(y: f64, (lo, hi): (f64, f64), eta: f64, rng: &mut impl Rng) -> f64 {
    let span = hi - lo;
    if !(span > 0.0) {
        return y;
    }
    let d1 = (y - lo) / span;
    let d2 = (hi - y) / span;
    let u: f64 = rng.random();
    let pow = 1.0 / (eta + 1.0);
    let dq = if u <= 0.5 {
        let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
        v.powf(pow) - 1.0
    } else {
        let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - v.powf(pow)
    };
    (y + dq * span).clamp(lo, hi)
}

/// Tournament selection, crossover, mutation; one child per parent slot.
/// Genes are always clipped into `bounds`.
pub fn make_offspring(
    parents: &[Individual],
    bounds: &[(f64, f64)],
    cfg: &OptConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let n = parents.len();
    let pm = cfg.mutation_prob;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut c1 = tournament(parents, rng).genes.clone();
        let mut c2 = tournament(parents, rng).genes.clone();
        if rng.random::<f64>() < cfg.crossover_prob {
            for (g, &b) in bounds.iter().enumerate() {
                if rng.random::<f64>() < 0.5 {
                    (c1[g], c2[g]) = sbx_gene(c1[g], c2[g], b, cfg.sbx_eta, rng);
                }
            }
        }
        for child in [&mut c1, &mut c2] {
            for (g, &b) in bounds.iter().enumerate() {
                if rng.random::<f64>() < pm {
                    child[g] = mutate_gene(child[g], b, cfg.pm_eta, rng);
                }
                child[g] = child[g].clamp(b.0, b.1);
            }
        }
        out.push(c1);
        if out.len() < n {
            out.push(c2);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    pub evaluations: usize,
    pub front_size: usize,
    /// Componentwise minimum over the first front.
    pub front_min: Objectives,
    /// Lowest weighted score seen so far, over every evaluated individual.
    pub archive_best_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsgaResult {
    /// Final population, ranked and crowded.
    pub population: Vec<Individual>,
    /// First front of the final population.
    pub front: Vec<Individual>,
    /// Every evaluated individual in evaluation order.
    pub archive: Vec<Individual>,
    pub history: Vec<GenerationSummary>,
}

fn evaluate_into(problem: &dyn Problem, genes: Vec<Vec<f64>>) -> Vec<Individual> {
    let objs = problem.evaluate(&genes);
    assert_eq!(objs.len(), genes.len(), "one objective vector per individual");
    genes
        .into_iter()
        .zip(objs)
        .map(|(g, o)| {
            let mut ind = Individual::unevaluated(g);
            ind.objectives = o.map(|v| if v.is_nan() { f64::INFINITY } else { v });
            ind
        })
        .collect()
}

/// Keeps the best `n` of `pool` by front, then crowding within the cut front.
fn environmental_selection(mut pool: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = rank_and_crowd(&mut pool);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
        } else {
            let mut f = front;
            f.sort_by(|&a, &b| pool[b].crowding.total_cmp(&pool[a].crowding).then(a.cmp(&b)));
            keep.extend(f.into_iter().take(n - keep.len()));
        }
        if keep.len() == n {
            break;
        }
    }
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    let mut next: Vec<Individual> = keep.iter().map(|&i| slots[i].take().expect("distinct indices")).collect();
    rank_and_crowd(&mut next);
    next
}

fn summarize(generation: usize, pop: &[Individual], archive: &[Individual], weights: &[f64; 3]) -> GenerationSummary {
    let front: Vec<&Individual> = pop.iter().filter(|p| p.rank == 0).collect();
    let mut front_min = [f64::INFINITY; 3];
    for p in &front {
        for m in 0..3 {
            front_min[m] = front_min[m].min(p.objectives[m]);
        }
    }
    GenerationSummary {
        generation,
        evaluations: archive.len(),
        front_size: front.len(),
        front_min,
        archive_best_score: archive.iter().map(|p| score(&p.objectives, weights)).fold(f64::INFINITY, f64::min),
    }
}

/// Generational loop: uniform random start, then `generations` rounds of
/// variation and elitist selection from parents plus offspring.
pub fn nsga2_run(problem: &dyn Problem, cfg: &OptConfig) -> crate::Result<NsgaResult> {
    nsga2_run_from(problem, cfg, &[])
}

/// As [`nsga2_run`], with the first members of the initial population taken
/// from `seeds` (clipped into bounds, at most `population` of them) and the
/// rest drawn uniformly.
pub fn nsga2_run_from(problem: &dyn Problem, cfg: &OptConfig, seeds: &[Vec<f64>]) -> crate::Result<NsgaResult> {
    cfg.validate()?;
    let bounds = problem.bounds().to_vec();
    if bounds.iter().any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(crate::Error::InvalidParameter("gene bounds must be finite with lo <= hi".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if seeds.iter().any(|g| g.len() != bounds.len()) {
        return Err(crate::Error::InvalidParameter(format!("seed individuals need {} genes", bounds.len())));
    }
    let mut initial: Vec<Vec<f64>> = seeds
        .iter()
        .take(cfg.population)
        .map(|g| g.iter().zip(&bounds).map(|(v, &(lo, hi))| v.clamp(lo, hi)).collect())
        .collect();
    while initial.len() < cfg.population {
        initial.push(bounds.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect());
    }
    let mut pop = evaluate_into(problem, initial);
    rank_and_crowd(&mut pop);
    let mut archive = pop.clone();
    let mut history = vec![summarize(0, &pop, &archive, &cfg.weights)];

    for gen in 1..=cfg.generations {
        let children = make_offspring(&pop, &bounds, cfg, &mut rng);
        let children = evaluate_into(problem, children);
        archive.extend(children.iter().cloned());
        let mut pool = pop;
        pool.extend(children);
        pop = environmental_selection(pool, cfg.population);
        history.push(summarize(gen, &pop, &archive, &cfg.weights));
    }
    let front: Vec<Individual> = pop.iter().filter(|p| p.rank == 0).cloned().collect();
    debug_assert!(front.iter().all(|a| front.iter().all(|b| !dominates(&a.objectives, &b.objectives))));
    Ok(NsgaResult { population: pop, front, archive, history })
}

/// Three-objective DTLZ2: the Pareto front is the positive octant of the unit
/// sphere and `g` (the squared distance of the tail genes from 0.5) is the
/// radial excess over it.
#[derive(Debug, Clone)]
pub struct Dtlz2 {
    bounds: Vec<(f64, f64)>,
}

impl Dtlz2 {
    pub fn new(genes: usize) -> Self {
        assert!(genes >= 3, "DTLZ2 with three objectives needs at least three genes");
        Self { bounds: vec![(0.0, 1.0); genes] }
    }

    pub fn objectives(x: &[f64]) -> Objectives {
        use std::f64::consts::FRAC_PI_2;
        let g: f64 = x[2..].iter().map(|v| (v - 0.5).powi(2)).sum();
        let r = 1.0 + g;
        let (a, b) = (x[0] * FRAC_PI_2, x[1] * FRAC_PI_2);
        [r * a.cos() * b.cos(), r * a.cos() * b.sin(), r * a.sin()]
    }

    /// Distance of an objective vector from the true front.
    pub fn front_distance(f: &Objectives) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs()
    }
}

impl Problem for Dtlz2 {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, population: &[Vec<f64>]) -> Vec<Objectives> {
        population.iter().map(|x| Self::objectives(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Front of each point by repeated peeling with pairwise checks.
    fn brute_force_fronts(objs: &[Objectives]) -> Vec<Vec<usize>> {
        let mut left: Vec<usize> = (0..objs.len()).collect();
        let mut fronts = Vec::new();
        while !left.is_empty() {
            let front: Vec<usize> = left
                .iter()
                .copied()
                .filter(|&i| !left.iter().any(|&j| j != i && dominates(&objs[j], &objs[i])))
                .collect();
            left.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    fn random_objs(n: usize, seed: u64) -> Vec<Objectives> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // coarse grid so ties and duplicates occur
        (0..n).map(|_| std::array::from_fn(|_| f64::from(rng.random_range(0..6u8)))).collect()
    }

    #[test]
    fn strict_domination_gives_two_fronts() {
        assert_eq!(nondominated_sort(&[[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]), vec![vec![0], vec![1]]);
    }

    #[test]
    fn trade_off_is_one_front() {
        assert_eq!(nondominated_sort(&[[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]]), vec![vec![0, 1]]);
    }

    #[test]
    fn sort_matches_brute_force() {
        for seed in 0..50 {
            let objs = random_objs(50, seed);
            assert_eq!(nondominated_sort(&objs), brute_force_fronts(&objs));
        }
    }

    #[test]
    fn crowding_cases() {
        assert_eq!(crowding_distance(&[[0.0; 3], [1.0; 3]]), vec![f64::INFINITY; 2]);
        let d = crowding_distance(&[[0.0, 5.0, 5.0], [1.0, 5.0, 5.0], [2.0, 5.0, 5.0]]);
        // one objective varies: gap 2 of range 2
        assert_eq!(d[1], 1.0);
        let d = crowding_distance(&[[0.0, 0.0, 4.0], [1.0, 1.0, 2.0], [2.0, 2.0, 0.0]]);
        assert_eq!(d[1], 3.0);
        let d = crowding_distance(&[[1.0; 3]; 5]);
        assert_eq!(d.iter().filter(|v| v.is_infinite()).count(), 2);
        assert!(d.iter().filter(|v| v.is_finite()).all(|v| *v == 0.0));
    }

    #[test]
    fn no_variation_copies_tournament_winners() {
        let bounds = vec![(0.0, 1.0); 3];
        let mut pop: Vec<Individual> = (0..6)
            .map(|i| {
                let mut ind = Individual::unevaluated(vec![i as f64 / 10.0; 3]);
                ind.objectives = [i as f64, 0.0, 0.0];
                ind
            })
            .collect();
        rank_and_crowd(&mut pop);
        let cfg = OptConfig { crossover_prob: 0.0, mutation_prob: 0.0, ..OptConfig::default() };
        let kids = make_offspring(&pop, &bounds, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(kids.len(), 6);
        assert!(kids.iter().all(|k| pop.iter().any(|p| &p.genes == k)));
    }

    #[test]
    fn heavy_mutation_respects_bounds() {
        let bounds = vec![(-1.0, 0.0), (2.0, 2.5), (0.0, 6.3)];
        let mut pop: Vec<Individual> = [[-1.0, 2.0, 0.0], [0.0, 2.5, 6.3], [-1.0, 2.5, 6.3], [0.0, 2.0, 0.0]]
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut ind = Individual::unevaluated(g.to_vec());
                ind.objectives = [i as f64, 3.0 - i as f64, 0.0];
                ind
            })
            .collect();
        rank_and_crowd(&mut pop);
        let cfg = OptConfig { mutation_prob: 1.0, pm_eta: 0.0, sbx_eta: 0.0, ..OptConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            for k in make_offspring(&pop, &bounds, &cfg, &mut rng) {
                for (g, (lo, hi)) in k.iter().zip(&bounds) {
                    assert!(g >= lo && g <= hi);
                }
            }
        }
    }

    #[test]
    fn offspring_deterministic_under_seed() {
        let p = Dtlz2::new(5);
        let mut pop = evaluate_into(&p, vec![vec![0.2; 5], vec![0.9; 5], vec![0.4; 5], vec![0.6; 5]]);
        rank_and_crowd(&mut pop);
        let cfg = OptConfig::default();
        let a = make_offspring(&pop, p.bounds(), &cfg, &mut ChaCha8Rng::seed_from_u64(8));
        let b = make_offspring(&pop, p.bounds(), &cfg, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_generations_returns_initial_front() {
        let cfg = OptConfig { population: 4, generations: 0, ..OptConfig::default() };
        let r = nsga2_run(&Dtlz2::new(4), &cfg).unwrap();
        assert_eq!(r.archive.len(), 4);
        let fronts = nondominated_sort(&r.archive.iter().map(|p| p.objectives).collect::<Vec<_>>());
        assert_eq!(r.front.len(), fronts[0].len());
    }

    #[test]
    fn converges_towards_the_dtlz2_front() {
        let cfg = OptConfig { population: 40, generations: 30, seed: 2, ..OptConfig::default() };
        let r = nsga2_run(&Dtlz2::new(8), &cfg).unwrap();
        let mean = |v: &[Individual]| v.iter().map(|p| Dtlz2::front_distance(&p.objectives)).sum::<f64>() / v.len() as f64;
        let start = mean(&r.archive[..40]);
        let end = mean(&r.population);
        assert!(end < 0.25 * start, "start {start}, end {end}");
        assert_eq!(r, nsga2_run(&Dtlz2::new(8), &cfg).unwrap());
    }

    #[test]
    fn seeds_fill_the_initial_population() {
        let cfg = OptConfig { population: 4, generations: 0, ..OptConfig::default() };
        let seeds = vec![vec![0.5; 4], vec![2.0, -1.0, 0.5, 0.5]];
        let r = nsga2_run_from(&Dtlz2::new(4), &cfg, &seeds).unwrap();
        assert_eq!(r.archive[0].genes, seeds[0]);
        assert_eq!(r.archive[1].genes, vec![1.0, 0.0, 0.5, 0.5]);
        assert!(nsga2_run_from(&Dtlz2::new(4), &cfg, &[vec![0.5; 3]]).is_err());
    }

    #[test]
    fn odd_population_rejected() {
        let cfg = OptConfig { population: 5, ..OptConfig::default() };
        assert!(nsga2_run(&Dtlz2::new(4), &cfg).is_err());
    }

    proptest! {
        #[test]
        fn every_point_in_exactly_one_front(n in 1usize..64, seed in any::<u64>()) {
            let objs = random_objs(n, seed);
            let fronts = nondominated_sort(&objs);
            let mut seen = vec![0; n];
            for f in &fronts {
                for &i in f {
                    seen[i] += 1;
                }
                for &i in f {
                    for &j in f {
                        prop_assert!(!dominates(&objs[i], &objs[j]));
                    }
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
