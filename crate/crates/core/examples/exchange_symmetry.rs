//! Bosonic and fermionic bi-signals: classification from the coefficient
//! matrix, and the permutation-with-conjugation acting on the covariance.

use pcsft::covariance::{build_covariance, classify_symmetry, epsilon_min, permutation_transform, Permutation};
use pcsft::experiments::{input_state, Statistics};
use pcsft::{random, BipartiteState};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

fn report(name: &str, psi: &BipartiteState) -> pcsft::Result<()> {
    let class = classify_symmetry(psi, 1e-10)?;
    let d = build_covariance(psi, epsilon_min(psi) + 0.05)?;
    let gap = |variant| -> pcsft::Result<f64> {
        let p = permutation_transform(&d, variant)?;
        Ok((p.assembled() - d.assembled()).iter().map(|z| z.norm()).fold(0.0, f64::max))
    };
    println!(
        "{name:<22} {:<10} residual {:.1e}  |sigma* D - D| {:.1e}  |sigma*- D - D| {:.1e}",
        class.tag.to_string(),
        class.residual,
        gap(Permutation::SigmaStar)?,
        gap(Permutation::SigmaStarMinus)?
    );
    Ok(())
}

fn main() -> pcsft::Result<()> {
    let boson = input_state(Statistics::Boson);
    let fermion = input_state(Statistics::Fermion);
    report("boson", &boson)?;
    report("fermion", &fermion)?;
    report("boson, phase 1.3", &boson.with_phase(1.3))?;
    report("fermion, phase -0.4", &fermion.with_phase(-0.4))?;
    report("random", &random::state(&mut ChaCha20Rng::seed_from_u64(3), 2, 2))?;
    Ok(())
}
