//! Beam-splitter bunching and anti-bunching of classical bi-signals.
//!
//! Two ports `[R, L]` map to basis indices `[0, 1]`. A 50/50 beam splitter is
//! the rotation `(1/sqrt 2) [[1, -1], [1, 1]]` applied to the spatial index of
//! each component; for spin-1/2 signals the internal index passes through.
//! The output-port intensity covariances `g_xy` are compared analytically and
//! by Monte Carlo.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::channels::{apply_to_batch, apply_to_covariance, apply_to_state, UnitaryChannel};
use crate::covariance::{build_covariance, classify_symmetry, epsilon_min};
use crate::error::{Error, Result};
use crate::hilbert::{quantum_average_tensor, BipartiteState, CMatrix, Operator, Side, C64};
use crate::quadratic::{analytic_cov, mc_cov, Estimate, Pairing, QuadraticForm};
use crate::rng::PRNG_ID;
use crate::sampler::draw;

/// Margin added to the minimal background level when `epsilon` is `auto`.
pub const AUTO_EPSILON_MARGIN: f64 = 0.05;
/// Monte Carlo agreement band in standard errors.
pub const SE_BAND: f64 = 5.0;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Port {
    R,
    L,
}

impl Port {
    pub const ALL: [Port; 2] = [Port::R, Port::L];

    pub fn index(self) -> usize {
        match self {
            Port::R => 0,
            Port::L => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Spin {
    #[serde(rename = "0")]
    #[value(name = "0")]
    Zero,
    #[serde(rename = "half")]
    #[value(name = "half")]
    Half,
}

/// `C^m (x) C^n` flattened space-major: index `space * n + internal`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexLayout {
    pub space_dim: usize,
    pub internal_dim: usize,
}

impl IndexLayout {
    pub const SPINLESS: IndexLayout = IndexLayout { space_dim: 2, internal_dim: 1 };
    pub const SPIN_HALF: IndexLayout = IndexLayout { space_dim: 2, internal_dim: 2 };

    pub fn for_spin(spin: Spin) -> Self {
        match spin {
            Spin::Zero => Self::SPINLESS,
            Spin::Half => Self::SPIN_HALF,
        }
    }

    pub fn dim(&self) -> usize {
        self.space_dim * self.internal_dim
    }
}

fn real(m: &[f64], rows: usize) -> CMatrix {
    CMatrix::from_row_slice(rows, m.len() / rows, &m.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
}

/// The 50/50 beam splitter in the `[R, L]` basis.
pub fn beamsplitter_unitary() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    real(&[s, -s, s, s], 2)
}

/// Beam splitter on the spatial index of both components of the layout.
pub fn beamsplitter_channel(layout: IndexLayout) -> UnitaryChannel {
    let u = beamsplitter_unitary().kronecker(&CMatrix::identity(layout.internal_dim, layout.internal_dim));
    UnitaryChannel::new(u.clone(), u).expect("beam splitter is unitary")
}

/// `(|RL> + |LR>) / sqrt 2` for bosons, `(|RL> - |LR>) / sqrt 2` for fermions.
pub fn input_state(statistics: Statistics) -> BipartiteState {
    let s = FRAC_1_SQRT_2;
    let sign = match statistics {
        Statistics::Boson => 1.0,
        Statistics::Fermion => -1.0,
    };
    BipartiteState::matricize(real(&[0.0, s, sign * s, 0.0], 2), false).expect("normalized")
}

/// Spin-1/2 two-signal states: a spatial pair state times the spin singlet
/// `(|+-> - |-+>) / sqrt 2`, expanded into the `(space (x) spin) (x) (space (x) spin)`
/// layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinState {
    /// Antisymmetric spatial part: permutation-symmetric overall.
    SpaceAntisymmetric,
    /// Symmetric spatial part: permutation-antisymmetric overall.
    SpaceSymmetric,
}

impl SpinState {
    pub fn for_statistics(statistics: Statistics) -> Self {
        match statistics {
            Statistics::Boson => SpinState::SpaceAntisymmetric,
            Statistics::Fermion => SpinState::SpaceSymmetric,
        }
    }

    pub fn spatial(self) -> BipartiteState {
        match self {
            SpinState::SpaceAntisymmetric => input_state(Statistics::Fermion),
            SpinState::SpaceSymmetric => input_state(Statistics::Boson),
        }
    }

    pub fn spin_singlet() -> BipartiteState {
        input_state(Statistics::Fermion)
    }
}

/// The 4x4 coefficient matrix `S (x) T` of spatial part `S` and spin singlet
/// `T`, with rows `(x, s)` and columns `(y, t)` flattened space-major.
pub fn spin_state(variant: SpinState) -> BipartiteState {
    let m = variant.spatial().operator().kronecker(SpinState::spin_singlet().operator());
    BipartiteState::matricize(m, false).expect("product of normalized states")
}

/// Output-port intensity `I_x = sum_s |phi(x, s)|^2` as the quadratic form of
/// `|x><x| (x) I_internal`.
pub fn intensity_observable(x: Port, layout: IndexLayout, side: Side) -> QuadraticForm {
    let proj = Operator::basis_projector(layout.space_dim, x.index()).kron(&Operator::identity(layout.internal_dim));
    QuadraticForm::new(proj, side).expect("projectors are self-adjoint")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonChoice {
    /// `epsilon_min + AUTO_EPSILON_MARGIN`.
    Auto,
    Fixed(f64),
}

impl EpsilonChoice {
    pub fn resolve(self, psi: &BipartiteState) -> f64 {
        match self {
            EpsilonChoice::Auto => epsilon_min(psi) + AUTO_EPSILON_MARGIN,
            EpsilonChoice::Fixed(e) => e,
        }
    }
}

impl std::str::FromStr for EpsilonChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(EpsilonChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(e) if e >= 0.0 && e.is_finite() => Ok(EpsilonChoice::Fixed(e)),
            _ => Err(format!("epsilon must be \"auto\" or a nonnegative number, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamSplitterConfig {
    pub statistics: Statistics,
    pub spin: Spin,
    pub epsilon: EpsilonChoice,
    pub seed: u64,
    pub n_samples: usize,
}

impl Default for BeamSplitterConfig {
    fn default() -> Self {
        BeamSplitterConfig {
            statistics: Statistics::Fermion,
            spin: Spin::Zero,
            epsilon: EpsilonChoice::Auto,
            seed: 0,
            n_samples: 200_000,
        }
    }
}

/// One `g_xy` entry: analytic value, Monte Carlo estimate, and agreement flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GEntry {
    pub analytic: f64,
    /// `<A_x (x) A_y Psi_out, Psi_out>` by direct tensor contraction.
    pub quantum: f64,
    pub estimate: Estimate,
    pub pass: bool,
}

/// Intensity covariances indexed by output ports `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GMatrix {
    entries: [[GEntry; 2]; 2],
}

impl GMatrix {
    pub fn get(&self, x: Port, y: Port) -> &GEntry {
        &self.entries[x.index()][y.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Port, Port, &GEntry)> {
        Port::ALL.into_iter().flat_map(move |x| Port::ALL.into_iter().map(move |y| (x, y, self.get(x, y))))
    }

    pub fn all_pass(&self) -> bool {
        self.iter().all(|(_, _, e)| e.pass)
    }
}

impl Serialize for GMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, &GEntry> = self.iter().map(|(x, y, e)| (format!("{x:?}{y:?}"), e)).collect();
        map.serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Statistics the input was built for.
    pub label: Statistics,
    /// Output of the transpose-symmetry classifier on the input state.
    pub classified: String,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: &'static str,
    pub statistics: Statistics,
    pub spin: Spin,
    pub state: Option<SpinState>,
    pub symmetry: SymmetryReport,
    pub epsilon: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub g: GMatrix,
    pub pass: bool,
    pub prng_id: &'static str,
    pub version: &'static str,
}

impl ExperimentReport {
    /// One row per `(x, y)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,analytic,value,std_error,n,pass\n");
        for (x, y, e) in self.g.iter() {
            out.push_str(&format!(
                "{x:?},{y:?},{},{},{},{},{}\n",
                e.analytic, e.estimate.value, e.estimate.std_error, e.estimate.n, e.pass
            ));
        }
        out
    }
}

/// Prepares the input bi-signal, sends both components through the beam
/// splitter, and measures the four output intensity covariances.
pub fn run_beamsplitter(cfg: &BeamSplitterConfig) -> Result<ExperimentReport> {
    if cfg.n_samples < MIN_SAMPLES {
        return Err(Error::Invalid(format!("need at least {MIN_SAMPLES} samples, got {}", cfg.n_samples)));
    }
    let layout = IndexLayout::for_spin(cfg.spin);
    let (psi_in, state) = match cfg.spin {
        Spin::Zero => (input_state(cfg.statistics), None),
        Spin::Half => {
            let v = SpinState::for_statistics(cfg.statistics);
            (spin_state(v), Some(v))
        }
    };
    let class = classify_symmetry(&psi_in, 1e-12)?;
    let epsilon = cfg.epsilon.resolve(&psi_in);
    let d_in = build_covariance(&psi_in, epsilon)?;

    let bs = beamsplitter_channel(layout);
    let psi_out = apply_to_state(&bs, &psi_in)?;
    let d_out = apply_to_covariance(&bs, &d_in)?;
    let batch = apply_to_batch(&bs, &draw(&d_in, cfg.seed, cfg.n_samples)?)?;

    let entry = |x: Port, y: Port| -> Result<GEntry> {
        let f1 = intensity_observable(x, layout, Side::One);
        let f2 = intensity_observable(y, layout, Side::Two);
        let analytic = analytic_cov(&d_out, &f1, &f2)?;
        let quantum = quantum_average_tensor(&psi_out, f1.operator(), f2.operator())?;
        let estimate = mc_cov(&batch, &f1, &f2, Pairing::Conjugated)?.with_analytic(analytic);
        let pass = estimate.agrees_within(SE_BAND);
        Ok(GEntry { analytic, quantum, estimate, pass })
    };
    let g = GMatrix {
        entries: [
            [entry(Port::R, Port::R)?, entry(Port::R, Port::L)?],
            [entry(Port::L, Port::R)?, entry(Port::L, Port::L)?],
        ],
    };
    let pass = g.all_pass();
    Ok(ExperimentReport {
        experiment: "beamsplitter",
        statistics: cfg.statistics,
        spin: cfg.spin,
        state,
        symmetry: SymmetryReport { label: cfg.statistics, classified: class.tag.to_string(), residual: class.residual },
        epsilon,
        seed: cfg.seed,
        n_samples: cfg.n_samples,
        g,
        pass,
        prng_id: PRNG_ID,
        version: env!("CARGO_PKG_VERSION"),
    })
}
