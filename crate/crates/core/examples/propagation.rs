//! Evolve a state and its classical covariance under a local Hamiltonian and
//! check that both routes describe the same correlations.

use pcsft::channels::{propagate, Hamiltonian};
use pcsft::covariance::{build_covariance, epsilon_min};
use pcsft::hilbert::quantum_average_tensor;
use pcsft::quadratic::{analytic_cov, QuadraticForm};
use pcsft::{random, Operator, Side};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

fn main() -> pcsft::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let psi = random::state(&mut rng, 2, 3);
    let h = Hamiltonian::new(random::hermitian(&mut rng, 2), random::hermitian(&mut rng, 3), 1.0)?;
    let d = build_covariance(&psi, epsilon_min(&psi) + 0.05)?;
    let a1 = Operator::basis_projector(2, 0);
    let a2 = Operator::basis_projector(3, 2);
    let f1 = QuadraticForm::new(a1.clone(), Side::One)?;
    let f2 = QuadraticForm::new(a2.clone(), Side::Two)?;

    println!("{:>5}  {:>12}  {:>12}", "t", "quantum", "classical");
    for k in 0..=8 {
        let t = 0.25 * k as f64;
        let q = quantum_average_tensor(&propagate(&h, t, &psi)?, &a1, &a2)?;
        let c = analytic_cov(&propagate(&h, t, &d)?, &f1, &f2)?;
        println!("{t:>5.2}  {q:>12.9}  {c:>12.9}");
    }

    let ch = h.channel(1.0);
    let back = h.channel(-1.0);
    let round_trip = ch.then(&back)?;
    let drift = (round_trip.u1() - nalgebra::DMatrix::identity(2, 2)).norm();
    println!("forward then backward, |U1 - I| = {drift:.1e}");
    Ok(())
}
