//! Two related tasks: calibrate, classify the unlabeled samples, and compare
//! the self-predicted error with the measured one.

use mtssl::bench::{generate, ScenarioSpec};
use mtssl::calibration::{calibrate, CalibrationOptions};
use mtssl::classifier::{classify, empirical_errors, solve_scores};

fn main() -> mtssl::Result<()> {
    let generated = generate(&ScenarioSpec::beta(0.5, 11))?;
    let dataset = generated.dataset;

    let (calibration, estimate) = calibrate(&dataset, 0, &CalibrationOptions::default())?;
    println!("estimated task relatedness:\n{}", calibration.config.lambda);
    println!("sample sizes behind the mean estimates: {:?}", estimate.sample_sizes);
    println!(
        "alpha = {:.3} ({:.2} x weight norm)",
        calibration.config.alpha,
        calibration.config.alpha / calibration.wtilde_norm
    );
    println!("optimal labels: {:?}", calibration.config.y_tilde.as_slice());

    let centered = dataset.center_taskwise();
    let scores = solve_scores(&centered, &calibration.config)?;
    let prediction = classify(&scores, &calibration.config.thresholds);
    let truth = dataset.task(0).unlabeled_truth().expect("synthetic data carries truth");
    let [e1, e2] = empirical_errors(&prediction, &scores, 0, truth);

    println!("predicted error per class: {:.4} {:.4}", calibration.predicted[0], calibration.predicted[1]);
    println!("measured error per class:  {e1:.4} {e2:.4}");
    Ok(())
}
