//! Two bi-signals through a 50/50 beam splitter. Symmetric inputs bunch at one
//! output port; antisymmetric inputs never meet at the same port.

use pcsft::experiments::{run_beamsplitter, BeamSplitterConfig, Spin, Statistics};

fn main() -> pcsft::Result<()> {
    for statistics in [Statistics::Boson, Statistics::Fermion] {
        let report = run_beamsplitter(&BeamSplitterConfig { statistics, spin: Spin::Zero, ..Default::default() })?;
        println!("{statistics:?} (eps = {:.4}, n = {})", report.epsilon, report.n_samples);
        for (x, y, g) in report.g.iter() {
            println!(
                "  g_{x:?}{y:?}: analytic {:.4}  mc {:+.4} +- {:.4}  {}",
                g.analytic,
                g.estimate.value,
                g.estimate.std_error,
                if g.pass { "ok" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
