//! Negative transfer: naive ±1 labels against calibrated labels as the
//! source task turns from aligned (β = 1) to reversed (β = −1).

use mtssl::bench::{beta_sweep, linspace, write_dat, BETA_COLUMNS};
use mtssl::calibration::CalibrationOptions;

fn main() -> std::io::Result<()> {
    let points = beta_sweep(&linspace(-1.0, 1.0, 9), 5, 10, &CalibrationOptions::default());
    println!("{:>6} {:>8} {:>8} {:>9} {:>9} {:>9}", "beta", "y21", "y22", "naive", "optimal", "theory");
    for p in &points {
        let y = p.summary.oracle_labels.as_ref().map(|y| (y[2], y[3])).unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{:>6.2} {:>8.3} {:>8.3} {:>9.4} {:>9.4} {:>9.4}",
            p.beta,
            y.0,
            y.1,
            p.summary.naive.empirical_error.mean,
            p.summary.calibrated.empirical_error.mean,
            p.summary.oracle_epsilon_star.mean
        );
    }
    let path = std::env::temp_dir().join("beta_sweep.dat");
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.row()).collect();
    write_dat(&path, "none", &BETA_COLUMNS, &rows)?;
    println!("table written to {}", path.display());
    Ok(())
}
