//! How many imprecise labels of reliability r are worth n_r reliable ones.

use mtssl::bench::{equivalent_reliable_count, linear_fit_r2, UncertainSetting};

fn main() {
    let setting = UncertainSetting::default();
    let n_rs = [50usize, 100, 200, 400];
    for r in [0.6, 0.75, 0.9, 1.0] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        print!("r = {r:<4}");
        for &n_r in &n_rs {
            match equivalent_reliable_count(&setting, r, n_r) {
                Ok((n_i, ratio)) => {
                    print!("  {n_r:>3} -> {n_i:>5} ({ratio:.3})");
                    xs.push(n_r as f64);
                    ys.push(n_i as f64);
                }
                Err(e) => print!("  {n_r:>3} -> {e}"),
            }
        }
        println!("  R² = {:.4}", linear_fit_r2(&xs, &ys));
    }
    match equivalent_reliable_count(&setting, 0.5, 100) {
        Ok(v) => println!("r = 0.5 unexpectedly reachable: {v:?}"),
        Err(e) => println!("r = 0.5: {e}"),
    }
}
