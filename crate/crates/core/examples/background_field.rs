//! Smallest background noise that makes a state's covariance positive, and
//! how the lowest eigenvalue moves as the noise grows.

use std::f64::consts::FRAC_1_SQRT_2;

use pcsft::covariance::{build_covariance, epsilon_min};
use pcsft::{BipartiteState, C64};

fn main() -> pcsft::Result<()> {
    let s = FRAC_1_SQRT_2;
    let states = [
        ("product |00>", [1.0, 0.0, 0.0, 0.0]),
        ("singlet", [0.0, s, -s, 0.0]),
        ("partially entangled", [0.8, 0.0, 0.0, 0.6]),
    ];
    for (name, amps) in states {
        let v: Vec<C64> = amps.iter().map(|&x| C64::new(x, 0.0)).collect();
        let psi = BipartiteState::from_vector(2, 2, &v, false)?;
        let e = epsilon_min(&psi);
        println!("{name}: eps_min = {e:.6}");
        for extra in [0.0, 0.05, 0.25] {
            let d = build_covariance(&psi, e + extra)?;
            println!("  eps = {:.4}  min eigenvalue = {:+.3e}", d.epsilon(), d.min_eigenvalue());
        }
        if e > 1e-9 {
            let err = build_covariance(&psi, 0.5 * e).unwrap_err();
            println!("  eps = {:.4}  rejected: {err}", 0.5 * e);
        }
    }
    Ok(())
}
