//! The score vector through the n×n system and through the Tp×Tp Woodbury
//! form, which is cheaper when samples outnumber features.

use std::time::Instant;

use mtssl::bench::{generate, ScenarioSpec, TaskSpec};
use mtssl::classifier::{solve_scores_with_norm, spectral_norm_wtilde};
use mtssl::data::{ModelConfig, SolverPath};
use nalgebra::DMatrix;

fn main() -> mtssl::Result<()> {
    let mut spec = ScenarioSpec::beta(0.7, 1);
    spec.p = 40;
    spec.tasks = vec![
        TaskSpec { labeled: [100, 100], unlabeled: [300, 300] },
        TaskSpec { labeled: [200, 200], unlabeled: [300, 300] },
    ];
    let dataset = generate(&spec)?.dataset.center_taskwise();
    let lambda = DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.7, 1.0]);
    let norm = spectral_norm_wtilde(&dataset, &lambda)?;
    println!("n = {}, Tp = {}, weight norm = {norm:.4}", dataset.n_total(), 2 * dataset.feature_dim());

    let mut results = Vec::new();
    for solver in [SolverPath::DirectN, SolverPath::WoodburyTp] {
        let config = ModelConfig {
            solver,
            ..ModelConfig::naive(3.0 * norm, lambda.clone())
        };
        let clock = Instant::now();
        let scores = solve_scores_with_norm(&dataset, &config, norm)?;
        println!("{solver:?}: {:.1} ms", clock.elapsed().as_secs_f64() * 1e3);
        results.push(scores.scores);
    }
    let gap = (&results[0] - &results[1]).norm() / results[0].norm();
    println!("relative difference: {gap:.2e}");
    Ok(())
}
