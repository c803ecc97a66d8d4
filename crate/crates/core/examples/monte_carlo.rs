//! Draw bi-signals from a state's covariance and estimate a correlation and
//! a renormalized mean by Monte Carlo.
//!
//! Run with `PCSFT_THREADS=1` or any other count: the batch is the same.

use pcsft::covariance::{build_covariance, epsilon_min};
use pcsft::hilbert::marginal_average;
use pcsft::quadratic::{mc_cov_against, mc_renormalized_mean, QuadraticForm};
use pcsft::sampler::{draw, thread_pool_from_env};
use pcsft::{random, Side};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

fn main() -> pcsft::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let psi = random::state(&mut rng, 3, 3);
    let a1 = random::hermitian(&mut rng, 3);
    let a2 = random::hermitian(&mut rng, 3);
    let d = build_covariance(&psi, epsilon_min(&psi) + 0.05)?;
    let f1 = QuadraticForm::new(a1.clone(), Side::One)?;
    let f2 = QuadraticForm::new(a2, Side::Two)?;

    let pool = thread_pool_from_env()?;
    let batch = pool.install(|| draw(&d, 42, 200_000))?;

    let cov = mc_cov_against(&batch, &d, &f1, &f2)?;
    println!(
        "cov:  mc {:+.5} +- {:.5}  analytic {:+.5}  z = {:.2}",
        cov.value,
        cov.std_error,
        cov.analytic.unwrap(),
        cov.z_score().unwrap()
    );

    let mean = mc_renormalized_mean(&batch, &d, &f1)?;
    println!(
        "mean: mc {:+.5} +- {:.5}  quantum {:+.5}",
        mean.value,
        mean.std_error,
        marginal_average(&psi, &a1, Side::One)?
    );
    Ok(())
}
