//! Checks the predicted Gaussian score statistics against repeated draws.

use mtssl::bench::{moment_agreement, pooled_std, run_trials, ScenarioSpec};
use mtssl::calibration::CalibrationOptions;

fn main() {
    let beta = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let trials = 20;
    let summary = run_trials(&ScenarioSpec::beta(beta, 3), 0, &CalibrationOptions::default(), trials);

    println!("beta = {beta}, {trials} trials");
    println!("{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "trial", "mean1", "theory1", "mean2", "theory2", "std", "theory");
    let mut agree = 0;
    for t in &summary.trials {
        let Some(c) = &t.calibrated else { continue };
        let Some(th) = &c.oracle else { continue };
        println!(
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            t.trial,
            c.score_mean[0],
            th.m[0],
            c.score_mean[1],
            th.m[1],
            pooled_std(c),
            th.sigma
        );
        if let Some(([m1, m2], s)) = moment_agreement(c) {
            agree += usize::from(m1 && m2 && s);
        }
    }
    println!("trials within tolerance: {agree}/{trials}");
    println!(
        "calibrated error {:.4} ± {:.4}, predicted {:.4}",
        summary.calibrated.empirical_error.mean, summary.calibrated.empirical_error.se, summary.epsilon_star.mean
    );
    println!(
        "naive error      {:.4} ± {:.4}, predicted {:.4}",
        summary.naive.empirical_error.mean, summary.naive.empirical_error.se, summary.naive.oracle_error.mean
    );
}
