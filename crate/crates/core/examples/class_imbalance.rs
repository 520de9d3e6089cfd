//! One task with unbalanced labeled classes: the optimal labels grow for the
//! rarer class and the threshold moves to compensate.

use mtssl::bench::imbalance_sweep;
use mtssl::calibration::CalibrationOptions;

fn main() {
    let n_l1s = [100, 300, 500, 700, 900];
    let points = imbalance_sweep(&n_l1s, 9, 10, &CalibrationOptions::default());
    println!("{:>5} {:>8} {:>8} {:>8} {:>9} {:>9}", "n_l1", "y1", "y2", "zeta", "naive", "optimal");
    for p in &points {
        let (y1, y2) = p.labels.as_ref().map_or((f64::NAN, f64::NAN), |y| (y[0], y[1]));
        println!(
            "{:>5} {:>8.3} {:>8.3} {:>8.4} {:>9.4} {:>9.4}",
            p.n_l1,
            y1,
            y2,
            p.zeta.unwrap_or(f64::NAN),
            p.summary.naive.empirical_error.mean,
            p.summary.calibrated.empirical_error.mean
        );
    }
}
