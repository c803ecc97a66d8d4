//! Quadratic-form observables `f_A(phi) = <A phi, phi>` of bi-signals.
//!
//! Correlations use the conjugated pairing: the second form is read at
//! `conj(phi2)`, i.e. `f-bar_A(phi2) = f_A(conj phi2) = f_{A-bar}(phi2)`.
//! Under a circular Gaussian with off-diagonal block `D12` Wick's theorem gives
//! `cov(f_A1(phi1), f-bar_A2(phi2)) = Tr[A1 D12 A2-bar D12*]`, which equals
//! `<A1 (x) A2 Psi, Psi>` when `D12 = Psi-hat`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::BlockCovariance;
use crate::error::{Error, Result};
use crate::hilbert::{conj, to_real, trace, Operator, Side, C64};
use crate::sampler::{BiSignalRef, SampleBatch};

const SUM_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    operator: Operator,
    side: Side,
}

impl QuadraticForm {
    pub fn new(operator: Operator, side: Side) -> Result<Self> {
        operator.ensure_self_adjoint("quadratic form operator")?;
        Ok(QuadraticForm { operator, side })
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.operator.rows()
    }

    /// `<A phi, phi>`, real for self-adjoint `A`.
    pub fn eval(&self, phi: &[C64]) -> Result<f64> {
        to_real(self.operator.quadratic_form(phi)?)
    }

    /// The same form with its operator conjugated: `f_{A-bar}`.
    pub fn conj(&self) -> QuadraticForm {
        QuadraticForm { operator: self.operator.conj(), side: self.side }
    }
}

/// Evaluates `f` on the component it reads.
pub fn eval_form(f: &QuadraticForm, s: BiSignalRef<'_>) -> Result<f64> {
    match f.side {
        Side::One => f.eval(s.phi1),
        Side::Two => f.eval(s.phi2),
    }
}

/// How the second component enters a correlation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pairing {
    /// `f(conj phi2)`.
    #[default]
    Conjugated,
    /// `f(phi2)`; diagnostics only.
    Plain,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
    pub analytic: Option<f64>,
    pub seed: u64,
    pub prng_id: String,
}

impl Estimate {
    pub fn with_analytic(mut self, analytic: f64) -> Self {
        self.analytic = Some(analytic);
        self
    }

    /// `|value - analytic| / std_error`.
    pub fn z_score(&self) -> Option<f64> {
        self.analytic.map(|a| {
            let dev = (self.value - a).abs();
            if self.std_error > 0.0 {
                dev / self.std_error
            } else if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
    }

    /// True when the analytic value lies within `k` standard errors.
    pub fn agrees_within(&self, k: f64) -> bool {
        self.z_score().is_some_and(|z| z <= k)
    }
}

fn block_for(d: &BlockCovariance, side: Side, dim: usize) -> Result<&nalgebra::DMatrix<C64>> {
    let block = match side {
        Side::One => d.d11(),
        Side::Two => d.d22(),
    };
    if block.nrows() != dim {
        return Err(Error::Dimension(format!(
            "form of dimension {dim} does not match component {side:?} of dimension {}",
            block.nrows()
        )));
    }
    Ok(block)
}

/// Side one: `E f_A(phi1) = Tr[D11 A]`. Side two: `E f-bar_A(phi2) = Tr[D22 A-bar]`.
pub fn analytic_mean(d: &BlockCovariance, f: &QuadraticForm) -> Result<f64> {
    let block = block_for(d, f.side, f.dim())?;
    let a = f.operator.matrix();
    let prod = match f.side {
        Side::One => block * a,
        Side::Two => block * conj(a),
    };
    to_real(trace(&prod))
}

/// Mean with the background contribution `epsilon Tr A` removed; for a
/// covariance built from `Psi` this is the quantum average of `A`.
pub fn renormalized_mean(d: &BlockCovariance, f: &QuadraticForm) -> Result<f64> {
    Ok(analytic_mean(d, f)? - d.epsilon() * background_trace(f)?)
}

fn background_trace(f: &QuadraticForm) -> Result<f64> {
    let tr = f.operator.trace();
    to_real(match f.side {
        Side::One => tr,
        Side::Two => tr.conj(),
    })
}

fn check_cov_pair(d: &BlockCovariance, f1: &QuadraticForm, f2: &QuadraticForm) -> Result<()> {
    if f1.side != Side::One || f2.side != Side::Two {
        return Err(Error::Invalid("covariance pairs a side-1 form with a side-2 form".into()));
    }
    if f1.dim() != d.d1() || f2.dim() != d.d2() {
        return Err(Error::Dimension(format!(
            "forms of dimensions {} and {} do not match a {}x{} covariance",
            f1.dim(),
            f2.dim(),
            d.d1(),
            d.d2()
        )));
    }
    Ok(())
}

/// `Tr[A1 D12 A2-bar D12*]`; independent of the background level.
pub fn analytic_cov(d: &BlockCovariance, f1: &QuadraticForm, f2: &QuadraticForm) -> Result<f64> {
    check_cov_pair(d, f1, f2)?;
    let prod = f1.operator.matrix() * d.d12() * conj(f2.operator.matrix()) * d.d21();
    to_real(trace(&prod))
}

/// Sum in fixed-size chunks merged in order; the result does not depend on
/// how the chunks are scheduled.
fn ordered_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values.par_chunks(SUM_CHUNK).map(pairwise_sum).collect();
    pairwise_sum(&partials)
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn form_values(batch: &SampleBatch, f: &QuadraticForm, pairing: Pairing) -> Result<Vec<f64>> {
    let dim = match f.side {
        Side::One => batch.d1(),
        Side::Two => batch.d2(),
    };
    if dim != f.dim() {
        return Err(Error::Dimension(format!(
            "form of dimension {} does not match component {:?} of dimension {dim}",
            f.dim(),
            f.side
        )));
    }
    let form = match (f.side, pairing) {
        (Side::Two, Pairing::Conjugated) => f.conj(),
        _ => f.clone(),
    };
    (0..batch.len()).into_par_iter().map(|k| eval_form(&form, batch.get(k))).collect()
}

fn mean_estimate(values: &[f64], batch: &SampleBatch) -> Result<Estimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let nf = n as f64;
    let mean = ordered_sum(values) / nf;
    let dev: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = ordered_sum(&dev) / (nf - 1.0);
    Ok(Estimate {
        value: mean,
        std_error: (var / nf).sqrt(),
        n,
        analytic: None,
        seed: batch.seed(),
        prng_id: batch.prng_id().to_string(),
    })
}

/// Sample mean of `f` with its standard error.
pub fn mc_mean(batch: &SampleBatch, f: &QuadraticForm, pairing: Pairing) -> Result<Estimate> {
    mean_estimate(&form_values(batch, f, pairing)?, batch)
}

/// Sample mean minus `epsilon Tr A`, with the analytic quantum average
/// attached from `d`.
pub fn mc_renormalized_mean(batch: &SampleBatch, d: &BlockCovariance, f: &QuadraticForm) -> Result<Estimate> {
    let mut est = mc_mean(batch, f, Pairing::Conjugated)?;
    est.value -= d.epsilon() * background_trace(f)?;
    Ok(est.with_analytic(renormalized_mean(d, f)?))
}

/// Sample covariance of `X_k = f1(phi1_k)` and `Y_k = f2(phi2_k)` (or
/// `f2(conj phi2_k)` under the conjugated pairing), with Bessel correction.
/// The standard error is the sample deviation of the centred products over
/// `sqrt(n)`.
pub fn mc_cov(batch: &SampleBatch, f1: &QuadraticForm, f2: &QuadraticForm, pairing: Pairing) -> Result<Estimate> {
    if f1.side != Side::One || f2.side != Side::Two {
        return Err(Error::Invalid("covariance pairs a side-1 form with a side-2 form".into()));
    }
    let n = batch.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let x = form_values(batch, f1, Pairing::Plain)?;
    let y = form_values(batch, f2, pairing)?;
    let nf = n as f64;
    let (mx, my) = (ordered_sum(&x) / nf, ordered_sum(&y) / nf);
    let prods: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let value = ordered_sum(&prods) / (nf - 1.0);
    let mean_prod = ordered_sum(&prods) / nf;
    let spread: Vec<f64> = prods.iter().map(|p| (p - mean_prod) * (p - mean_prod)).collect();
    let var = ordered_sum(&spread) / (nf - 1.0);
    Ok(Estimate {
        value,
        std_error: (var / nf).sqrt(),
        n,
        analytic: None,
        seed: batch.seed(),
        prng_id: batch.prng_id().to_string(),
    })
}

/// [`mc_cov`] under the conjugated pairing with `analytic_cov(d, ..)` attached.
pub fn mc_cov_against(
    batch: &SampleBatch,
    d: &BlockCovariance,
    f1: &QuadraticForm,
    f2: &QuadraticForm,
) -> Result<Estimate> {
    let analytic = analytic_cov(d, f1, f2)?;
    Ok(mc_cov(batch, f1, f2, Pairing::Conjugated)?.with_analytic(analytic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{build_covariance, epsilon_min, phase_transform, PhasePair};
    use crate::hilbert::{marginal_average, quantum_average_tensor, BipartiteState};
    use crate::random;
    use crate::sampler::{draw, BiSignalSample};
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn singlet() -> BipartiteState {
        BipartiteState::from_vector(2, 2, &[c(0.0), c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2), c(0.0)], false).unwrap()
    }

    fn port(k: usize, side: Side) -> QuadraticForm {
        QuadraticForm::new(Operator::basis_projector(2, k), side).unwrap()
    }

    #[test]
    fn eval_form_examples() {
        let id = QuadraticForm::new(Operator::identity(3), Side::One).unwrap();
        assert_eq!(id.eval(&[c(0.0), c(1.0), c(0.0)]).unwrap(), 1.0);
        let r = port(0, Side::Two);
        let s = BiSignalSample { phi1: vec![c(9.0)], phi2: vec![C64::new(0.6, 0.8), c(3.0)] };
        assert!((eval_form(&r, s.as_ref()).unwrap() - 1.0).abs() < 1e-15);

        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a = random::hermitian(&mut rng, 3);
            let phi = random::vector(&mut rng, 3);
            let bar: Vec<C64> = phi.iter().map(|z| z.conj()).collect();
            let f = QuadraticForm::new(a.clone(), Side::One).unwrap();
            assert!((f.conj().eval(&phi).unwrap() - f.eval(&bar).unwrap()).abs() < 1e-12);
        }
        let n = Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(QuadraticForm::new(n, Side::One).is_err());
        assert!(id.eval(&[c(1.0)]).is_err());
    }

    #[test]
    fn means_and_renormalization() {
        let d = build_covariance(&singlet(), 0.25).unwrap();
        let r1 = port(0, Side::One);
        assert!((analytic_mean(&d, &r1).unwrap() - 0.75).abs() < 1e-15);
        assert!((renormalized_mean(&d, &r1).unwrap() - 0.5).abs() < 1e-15);
        let id = QuadraticForm::new(Operator::identity(2), Side::One).unwrap();
        assert!((analytic_mean(&d, &id).unwrap() - trace(d.d11()).re).abs() < 1e-15);

        let traceless =
            QuadraticForm::new(Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap(), Side::Two).unwrap();
        assert_eq!(renormalized_mean(&d, &traceless).unwrap(), analytic_mean(&d, &traceless).unwrap());

        let mut rng = ChaCha20Rng::seed_from_u64(12);
        for _ in 0..50 {
            let psi = random::state(&mut rng, 3, 2);
            let e = epsilon_min(&psi);
            let d = build_covariance(&psi, e + 0.1).unwrap();
            let d0 = build_covariance(&psi, e).unwrap();
            for side in [Side::One, Side::Two] {
                let dim = if side == Side::One { 3 } else { 2 };
                let a = random::hermitian(&mut rng, dim);
                let f = QuadraticForm::new(a.clone(), side).unwrap();
                let q = marginal_average(&psi, &a, side).unwrap();
                assert!((renormalized_mean(&d, &f).unwrap() - q).abs() < 1e-10);
                assert!((renormalized_mean(&d0, &f).unwrap() - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn analytic_cov_matches_tensor_average() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for &(d1, d2) in [(2, 2), (2, 3), (3, 3), (4, 2)].iter().cycle().take(100) {
            let psi = random::state(&mut rng, d1, d2);
            let d = build_covariance(&psi, epsilon_min(&psi) + 0.05).unwrap();
            let a1 = random::hermitian(&mut rng, d1);
            let a2 = random::hermitian(&mut rng, d2);
            let f1 = QuadraticForm::new(a1.clone(), Side::One).unwrap();
            let f2 = QuadraticForm::new(a2.clone(), Side::Two).unwrap();
            let q = quantum_average_tensor(&psi, &a1, &a2).unwrap();
            assert!((analytic_cov(&d, &f1, &f2).unwrap() - q).abs() <= 1e-10);
            // phase invisibility
            let shifted = phase_transform(&d, PhasePair::new(1.3, -0.4));
            assert!((analytic_cov(&shifted, &f1, &f2).unwrap() - q).abs() <= 1e-10);
        }
    }

    #[test]
    fn analytic_cov_is_bilinear_and_factorizes_on_products() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let psi = random::state(&mut rng, 3, 3);
        let d = build_covariance(&psi, epsilon_min(&psi) + 0.01).unwrap();
        let (a, b, h2) =
            (random::hermitian(&mut rng, 3), random::hermitian(&mut rng, 3), random::hermitian(&mut rng, 3));
        let combo = Operator::new(a.matrix() * c(2.0) - b.matrix() * c(0.5)).unwrap();
        let cov = |x: &Operator| {
            analytic_cov(
                &d,
                &QuadraticForm::new(x.clone(), Side::One).unwrap(),
                &QuadraticForm::new(h2.clone(), Side::Two).unwrap(),
            )
            .unwrap()
        };
        assert!((cov(&combo) - (2.0 * cov(&a) - 0.5 * cov(&b))).abs() < 1e-12);

        let u = random::vector(&mut rng, 3);
        let v = random::vector(&mut rng, 2);
        let prod = BipartiteState::product(&u, &v).unwrap();
        let d = build_covariance(&prod, 0.0).unwrap();
        let a1 = random::hermitian(&mut rng, 3);
        let a2 = random::hermitian(&mut rng, 2);
        let g = analytic_cov(
            &d,
            &QuadraticForm::new(a1.clone(), Side::One).unwrap(),
            &QuadraticForm::new(a2.clone(), Side::Two).unwrap(),
        )
        .unwrap();
        let unit = |x: &[C64]| {
            let n = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            x.iter().map(|z| z / n).collect::<Vec<_>>()
        };
        let m1 = a1.quadratic_form(&unit(&u)).unwrap().re;
        let m2 = a2.quadratic_form(&unit(&v)).unwrap().re;
        assert!((g - m1 * m2).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_agrees_with_analytic() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let psi = random::state(&mut rng, 2, 3);
        let d = build_covariance(&psi, epsilon_min(&psi) + 0.1).unwrap();
        let f1 = QuadraticForm::new(random::hermitian(&mut rng, 2), Side::One).unwrap();
        let f2 = QuadraticForm::new(random::hermitian(&mut rng, 3), Side::Two).unwrap();
        let batch = draw(&d, 5, 100_000).unwrap();
        let est = mc_cov_against(&batch, &d, &f1, &f2).unwrap();
        assert!(est.agrees_within(5.0), "{est:?}");
        assert_eq!(est.n, 100_000);
        assert_eq!(est.seed, 5);
        let m1 = mc_mean(&batch, &f1, Pairing::Conjugated).unwrap().with_analytic(analytic_mean(&d, &f1).unwrap());
        assert!(m1.agrees_within(5.0), "{m1:?}");
        let m2 = mc_mean(&batch, &f2, Pairing::Conjugated).unwrap().with_analytic(analytic_mean(&d, &f2).unwrap());
        assert!(m2.agrees_within(5.0), "{m2:?}");
        let r2 = mc_renormalized_mean(&batch, &d, &f2).unwrap();
        assert!(r2.agrees_within(5.0), "{r2:?}");
    }

    #[test]
    fn fermionic_pair_has_no_same_port_correlation() {
        let d = build_covariance(&singlet(), epsilon_min(&singlet()) + 0.05).unwrap();
        let batch = draw(&d, 1, 200_000).unwrap();
        let est = mc_cov_against(&batch, &d, &port(0, Side::One), &port(0, Side::Two)).unwrap();
        assert_eq!(est.analytic, Some(0.0));
        assert!(est.agrees_within(5.0), "{est:?}");
        let est = mc_cov_against(&batch, &d, &port(0, Side::One), &port(1, Side::Two)).unwrap();
        assert!((est.analytic.unwrap() - 0.5).abs() < 1e-15);
        assert!(est.agrees_within(5.0), "{est:?}");
    }

    #[test]
    fn estimator_errors() {
        let d = build_covariance(&singlet(), 0.3).unwrap();
        let batch = draw(&d, 1, 1).unwrap();
        assert!(matches!(
            mc_cov(&batch, &port(0, Side::One), &port(0, Side::Two), Pairing::Conjugated),
            Err(Error::TooFewSamples(1))
        ));
        let batch = draw(&d, 1, 10).unwrap();
        assert!(mc_cov(&batch, &port(0, Side::Two), &port(0, Side::Two), Pairing::Conjugated).is_err());
        let big = QuadraticForm::new(Operator::identity(3), Side::One).unwrap();
        assert!(mc_cov(&batch, &big, &port(0, Side::Two), Pairing::Conjugated).is_err());
        assert!(analytic_cov(&d, &big, &port(0, Side::Two)).is_err());
    }

    #[test]
    fn ordered_sum_is_exact_on_integers() {
        let v: Vec<f64> = (0..100_000).map(|k| k as f64).collect();
        assert_eq!(ordered_sum(&v), 4_999_950_000.0);
    }
}
