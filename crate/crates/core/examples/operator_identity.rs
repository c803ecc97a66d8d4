//! The quantum average of `A1 (x) A2` computed three ways: by tensor
//! contraction, through the coefficient matrix, and as a covariance of
//! classical quadratic forms.

use pcsft::covariance::{build_covariance, epsilon_min};
use pcsft::hilbert::{quantum_average_tensor, quantum_average_trace};
use pcsft::quadratic::{analytic_cov, QuadraticForm};
use pcsft::{random, Side};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

fn main() -> pcsft::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    for (d1, d2) in [(2, 2), (2, 3), (4, 5)] {
        let psi = random::state(&mut rng, d1, d2);
        let a1 = random::hermitian(&mut rng, d1);
        let a2 = random::hermitian(&mut rng, d2);

        let tensor = quantum_average_tensor(&psi, &a1, &a2)?;
        let trace = quantum_average_trace(&psi, &a1, &a2)?;
        let d = build_covariance(&psi, epsilon_min(&psi) + 0.05)?;
        let cov = analytic_cov(&d, &QuadraticForm::new(a1, Side::One)?, &QuadraticForm::new(a2, Side::Two)?)?;

        println!("{d1}x{d2}: tensor {tensor:+.12}  trace {trace:+.12}  classical cov {cov:+.12}");
    }
    Ok(())
}
