//! The univariate slice sampler on a bimodal target, checking that both
//! modes get their share of visits.

use recsurv::sampler::{chain_rng, slice_sample};

fn main() -> recsurv::Result<()> {
    // Equal mixture of N(-2, 0.5^2) and N(2, 0.5^2).
    let log_target = |x: f64| {
        let a = -0.5 * ((x + 2.0) / 0.5).powi(2);
        let b = -0.5 * ((x - 2.0) / 0.5).powi(2);
        a.max(b) + ((a - a.max(b)).exp() + (b - a.max(b)).exp()).ln()
    };

    let mut rng = chain_rng(123, 0);
    let mut x = 0.0;
    let mut left = 0u32;
    let mut sum = 0.0;
    let iterations = 20_000;
    for _ in 0..iterations {
        x = slice_sample(log_target, x, 1.0, 50, "mixture", &mut rng)?;
        left += u32::from(x < 0.0);
        sum += x;
    }
    println!(
        "visited the left mode {:.1}% of the time (target 50%)",
        100.0 * left as f64 / iterations as f64
    );
    println!("mean {:+.3} (target 0)", sum / iterations as f64);
    Ok(())
}
