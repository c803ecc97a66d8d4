//! Beam splitter on spin-1/2 bi-signals. The spin singlet makes the spatial
//! part antisymmetric for an overall symmetric state, so it behaves like the
//! spinless antisymmetric case, and the other way round.

use pcsft::experiments::{run_beamsplitter, BeamSplitterConfig, Spin, Statistics};

fn main() -> pcsft::Result<()> {
    for statistics in [Statistics::Boson, Statistics::Fermion] {
        let r = run_beamsplitter(&BeamSplitterConfig { statistics, spin: Spin::Half, seed: 5, ..Default::default() })?;
        println!(
            "{statistics:?}: input {}, spatial part {:?}, eps = {:.4}",
            r.symmetry.classified,
            r.state.expect("spin-1/2 run"),
            r.epsilon
        );
        println!("{}", r.to_csv());
    }
    Ok(())
}
