//! Multi-objective gait search and weighted ranking of its results.

mod gait;
mod nsga;
mod score;

pub use gait::{
    evaluate_objectives, gait_bounds, gait_from_genes, genes_from_gait, random_gaits, GaitProblem, GENES,
};
pub use nsga::{
    crowding_distance, dominates, make_offspring, nondominated_sort, nsga2_run, nsga2_run_from, rank_and_crowd, Dtlz2,
    GenerationSummary, Individual, NsgaResult, Objectives, OptConfig, Problem,
};
pub use score::{score, score_and_rank, RankedSolution};
