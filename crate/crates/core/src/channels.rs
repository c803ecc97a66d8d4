//! Classical channels for factorized unitary quantum channels `U1 (x) U2`.
//!
//! The state transforms as `Psi-hat -> U1 Psi-hat U2^T`. The second field
//! component carries `conj(rho2)` in its covariance, so it is transformed by
//! the entrywise conjugate of `U2`:
//!
//! ```text
//! (phi1, phi2) -> (U1 phi1, conj(U2) phi2)
//! D11 -> U1 D11 U1*,  D12 -> U1 D12 U2^T,  D22 -> conj(U2) D22 U2^T
//! ```
//!
//! For real `U2` (the beam splitter, for example) this is plain componentwise
//! application of `U1` and `U2`.

use std::sync::OnceLock;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use crate::covariance::BlockCovariance;
use crate::error::{Error, Result};
use crate::hilbert::{conj, max_abs, BipartiteState, CMatrix, Operator, C64};
use crate::sampler::{BiSignalRef, BiSignalSample, SampleBatch};

pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryChannel {
    u1: CMatrix,
    u2: CMatrix,
}

fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(u.adjoint() * u - CMatrix::identity(u.nrows(), u.nrows())))
}

impl UnitaryChannel {
    pub fn new(u1: CMatrix, u2: CMatrix) -> Result<Self> {
        for (what, u) in [("U1", &u1), ("U2", &u2)] {
            let defect = unitarity_defect(u);
            if defect.is_nan() || defect > UNITARY_TOL {
                return Err(Error::NotUnitary { what, defect });
            }
        }
        Ok(UnitaryChannel { u1, u2 })
    }

    pub fn identity(d1: usize, d2: usize) -> Self {
        UnitaryChannel { u1: CMatrix::identity(d1, d1), u2: CMatrix::identity(d2, d2) }
    }

    pub fn u1(&self) -> &CMatrix {
        &self.u1
    }

    pub fn u2(&self) -> &CMatrix {
        &self.u2
    }

    pub fn d1(&self) -> usize {
        self.u1.nrows()
    }

    pub fn d2(&self) -> usize {
        self.u2.nrows()
    }

    /// Channel `V1 U1 (x) V2 U2`: apply `self` first, then `next`.
    pub fn then(&self, next: &UnitaryChannel) -> Result<UnitaryChannel> {
        if next.d1() != self.d1() || next.d2() != self.d2() {
            return Err(Error::Dimension("cannot compose channels of different dimensions".into()));
        }
        Ok(UnitaryChannel { u1: &next.u1 * &self.u1, u2: &next.u2 * &self.u2 })
    }

    fn check_dims(&self, d1: usize, d2: usize) -> Result<()> {
        if d1 != self.d1() || d2 != self.d2() {
            return Err(Error::Dimension(format!("channel acts on {}x{}, input is {d1}x{d2}", self.d1(), self.d2())));
        }
        Ok(())
    }

    fn apply_into(&self, s: BiSignalRef<'_>, out1: &mut [C64], out2: &mut [C64]) {
        matvec(&self.u1, s.phi1, out1, false);
        matvec(&self.u2, s.phi2, out2, true);
    }
}

fn matvec(m: &CMatrix, v: &[C64], out: &mut [C64], conjugate: bool) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..v.len())
            .map(|j| {
                let a = m[(i, j)];
                if conjugate {
                    a.conj() * v[j]
                } else {
                    a * v[j]
                }
            })
            .sum();
    }
}

/// Transforms one realization.
pub fn apply_to_sample(ch: &UnitaryChannel, s: BiSignalRef<'_>) -> Result<BiSignalSample> {
    ch.check_dims(s.phi1.len(), s.phi2.len())?;
    let mut out = BiSignalSample { phi1: vec![C64::new(0.0, 0.0); ch.d1()], phi2: vec![C64::new(0.0, 0.0); ch.d2()] };
    ch.apply_into(s, &mut out.phi1, &mut out.phi2);
    Ok(out)
}

/// Transforms every realization of a batch; seed and order are kept.
pub fn apply_to_batch(ch: &UnitaryChannel, batch: &SampleBatch) -> Result<SampleBatch> {
    let (d1, d2) = (batch.d1(), batch.d2());
    ch.check_dims(d1, d2)?;
    let n = d1 + d2;
    let mut data = vec![C64::new(0.0, 0.0); batch.as_slice().len()];
    data.par_chunks_mut(n).enumerate().for_each(|(k, out)| {
        let (o1, o2) = out.split_at_mut(d1);
        ch.apply_into(batch.get(k), o1, o2);
    });
    Ok(SampleBatch::from_raw(d1, d2, batch.seed(), data))
}

/// `(U1 (x) U2) Psi`, i.e. `U1 Psi-hat U2^T`.
pub fn apply_to_state(ch: &UnitaryChannel, psi: &BipartiteState) -> Result<BipartiteState> {
    transpose_convention_self_test();
    ch.check_dims(psi.d1(), psi.d2())?;
    Ok(BipartiteState::from_matrix_unchecked(&ch.u1 * psi.operator() * ch.u2.transpose()))
}

/// Covariance of the transformed bi-signal.
pub fn apply_to_covariance(ch: &UnitaryChannel, d: &BlockCovariance) -> Result<BlockCovariance> {
    ch.check_dims(d.d1(), d.d2())?;
    let u2bar = conj(&ch.u2);
    Ok(d.map_blocks(
        |m| &ch.u1 * m * ch.u1.adjoint(),
        |m| &ch.u1 * m * ch.u2.transpose(),
        |m| &u2bar * m * u2bar.adjoint(),
    ))
}

/// Checks once per process that `U1 Psi-hat U2^T` agrees with the explicit
/// action of `U1 (x) U2` on the amplitude vector. Panics on disagreement.
pub fn transpose_convention_self_test() {
    static CHECKED: OnceLock<()> = OnceLock::new();
    CHECKED.get_or_init(|| {
        let (d1, d2) = (2, 3);
        let entry = |k: usize, salt: f64| C64::new((k as f64 * 0.7 + salt).sin(), (k as f64 * 1.3 - salt).cos());
        let u1 = CMatrix::from_fn(d1, d1, |i, j| entry(i * d1 + j, 0.1));
        let u2 = CMatrix::from_fn(d2, d2, |i, j| entry(i * d2 + j, 0.2));
        let psi = CMatrix::from_fn(d1, d2, |i, j| entry(i * d2 + j, 0.3));
        let matricized = &u1 * &psi * u2.transpose();
        let vec: Vec<C64> = (0..d1 * d2).map(|k| psi[(k / d2, k % d2)]).collect();
        let kron = u1.kronecker(&u2);
        let mut worst: f64 = 0.0;
        for row in 0..d1 * d2 {
            let image: C64 = (0..d1 * d2).map(|col| kron[(row, col)] * vec[col]).sum();
            worst = worst.max((image - matricized[(row / d2, row % d2)]).norm());
        }
        assert!(worst < 1e-12, "coefficient-matrix channel convention is broken (residual {worst:e})");
    });
}

/// Factorized Hamiltonian `H1 (x) I + I (x) H2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    h1: Operator,
    h2: Operator,
    hbar: f64,
}

impl Hamiltonian {
    pub fn new(h1: Operator, h2: Operator, hbar: f64) -> Result<Self> {
        h1.ensure_self_adjoint("H1")?;
        h2.ensure_self_adjoint("H2")?;
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Hamiltonian { h1, h2, hbar })
    }

    /// Splits a joint Hamiltonian on `C^d1 (x) C^d2` into its local parts.
    /// Anything that does not decompose as `H1 (x) I + I (x) H2` is an
    /// interaction and is rejected.
    pub fn from_joint(h: &Operator, d1: usize, d2: usize, hbar: f64) -> Result<Self> {
        h.ensure_self_adjoint("H")?;
        if h.rows() != d1 * d2 {
            return Err(Error::Dimension(format!("joint Hamiltonian of dimension {} is not {d1}x{d2}", h.rows())));
        }
        let m = h.matrix();
        let at = |i: usize, k: usize, j: usize, l: usize| m[(i * d2 + k, j * d2 + l)];
        // H1' = Tr_2 H / d2 = H1 + (Tr H2 / d2) I, likewise for H2'.
        let h1 = CMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| at(i, k, j, k)).sum::<C64>() / d2 as f64);
        let mut h2 = CMatrix::from_fn(d2, d2, |k, l| (0..d1).map(|i| at(i, k, i, l)).sum::<C64>() / d1 as f64);
        let shift = h.trace() / (d1 * d2) as f64;
        for k in 0..d2 {
            h2[(k, k)] -= shift;
        }
        let rebuilt = h1.kronecker(&CMatrix::identity(d2, d2)) + CMatrix::identity(d1, d1).kronecker(&h2);
        let residual = max_abs(&(&rebuilt - m));
        if residual > 1e-10 * max_abs(m).max(1.0) {
            return Err(Error::Interaction { residual });
        }
        Hamiltonian::new(Operator::new(h1)?, Operator::new(h2)?, hbar)
    }

    pub fn h1(&self) -> &Operator {
        &self.h1
    }

    pub fn h2(&self) -> &Operator {
        &self.h2
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `exp(-i t H1 / hbar) (x) exp(-i t H2 / hbar)`.
    pub fn channel(&self, t: f64) -> UnitaryChannel {
        UnitaryChannel {
            u1: expm_hermitian(self.h1.matrix(), t / self.hbar),
            u2: expm_hermitian(self.h2.matrix(), t / self.hbar),
        }
    }
}

/// `exp(-i t H)` for Hermitian `H` through `H = V L V*`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, -t * l));
    &eig.eigenvectors * CMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Anything a factorized channel can act on.
pub trait Evolve: Sized {
    fn evolve(&self, ch: &UnitaryChannel) -> Result<Self>;
}

impl Evolve for BipartiteState {
    fn evolve(&self, ch: &UnitaryChannel) -> Result<Self> {
        apply_to_state(ch, self)
    }
}

impl Evolve for BlockCovariance {
    fn evolve(&self, ch: &UnitaryChannel) -> Result<Self> {
        apply_to_covariance(ch, self)
    }
}

impl Evolve for BiSignalSample {
    fn evolve(&self, ch: &UnitaryChannel) -> Result<Self> {
        apply_to_sample(ch, self.as_ref())
    }
}

impl Evolve for SampleBatch {
    fn evolve(&self, ch: &UnitaryChannel) -> Result<Self> {
        apply_to_batch(ch, self)
    }
}

/// Schrödinger propagation of a state, covariance, or field realization
/// over time `t`.
pub fn propagate<T: Evolve>(h: &Hamiltonian, t: f64, x: &T) -> Result<T> {
    x.evolve(&h.channel(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{build_covariance, epsilon_min};
    use crate::hilbert::quantum_average_tensor;
    use crate::hilbert::Side;
    use crate::quadratic::{analytic_cov, QuadraticForm};
    use crate::random;
    use crate::sampler::draw;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn singlet() -> BipartiteState {
        BipartiteState::from_vector(2, 2, &[c(0.0), c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2), c(0.0)], false).unwrap()
    }

    fn sigma_z() -> Operator {
        Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }

    #[test]
    fn identity_channel_is_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let psi = random::state(&mut rng, 2, 3);
        let id = UnitaryChannel::identity(2, 3);
        assert_eq!(apply_to_state(&id, &psi).unwrap(), psi);
        let d = build_covariance(&psi, 0.3).unwrap();
        assert!(max_abs(&(apply_to_covariance(&id, &d).unwrap().assembled() - d.assembled())) < 1e-15);
        let s = BiSignalSample { phi1: random::vector(&mut rng, 2), phi2: random::vector(&mut rng, 3) };
        assert_eq!(apply_to_sample(&id, s.as_ref()).unwrap(), s);
    }

    #[test]
    fn rejects_non_unitary_and_mismatched() {
        let m = CMatrix::identity(2, 2) * c(2.0);
        assert!(matches!(UnitaryChannel::new(m, CMatrix::identity(2, 2)), Err(Error::NotUnitary { .. })));
        let ch = UnitaryChannel::identity(2, 2);
        let s = BiSignalSample { phi1: vec![c(1.0)], phi2: vec![c(1.0), c(0.0)] };
        assert!(apply_to_sample(&ch, s.as_ref()).is_err());
    }

    #[test]
    fn samples_keep_their_norms() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..50 {
            let ch = random::channel(&mut rng, 3, 4);
            let s = BiSignalSample { phi1: random::vector(&mut rng, 3), phi2: random::vector(&mut rng, 4) };
            let out = apply_to_sample(&ch, s.as_ref()).unwrap();
            let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            assert!((norm(&out.phi1) - norm(&s.phi1)).abs() < 1e-10);
            assert!((norm(&out.phi2) - norm(&s.phi2)).abs() < 1e-10);
        }
    }

    #[test]
    fn state_and_covariance_paths_commute() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for k in 0..100 {
            let (d1, d2) = (2 + k % 3, 2 + (k / 3) % 3);
            let psi = random::state(&mut rng, d1, d2);
            let ch = random::channel(&mut rng, d1, d2);
            let eps = epsilon_min(&psi) + 0.05;
            let via_cov = apply_to_covariance(&ch, &build_covariance(&psi, eps).unwrap()).unwrap();
            let via_state = build_covariance(&apply_to_state(&ch, &psi).unwrap(), eps).unwrap();
            assert!(max_abs(&(via_cov.assembled() - via_state.assembled())) <= 1e-10);
            assert!(via_cov.min_eigenvalue() >= -1e-10);
        }
    }

    #[test]
    fn transformed_batch_has_transformed_covariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let psi = random::state(&mut rng, 2, 2);
        let d = build_covariance(&psi, epsilon_min(&psi) + 0.1).unwrap();
        let ch = random::channel(&mut rng, 2, 2);
        let out = apply_to_batch(&ch, &draw(&d, 9, 200_000).unwrap()).unwrap();
        let target = apply_to_covariance(&ch, &d).unwrap().assembled();
        let nf = out.len() as f64;
        let mut emp = CMatrix::zeros(4, 4);
        for s in out.as_slice().chunks_exact(4) {
            for a in 0..4 {
                for b in 0..4 {
                    emp[(a, b)] += s[a] * s[b].conj();
                }
            }
        }
        let emp = emp.unscale(nf);
        for a in 0..4 {
            for b in 0..4 {
                let se = (target[(a, a)].re * target[(b, b)].re / nf).sqrt();
                assert!((emp[(a, b)] - target[(a, b)]).norm() <= 5.0 * se);
            }
        }
        assert!(max_abs(&(emp.view((0, 2), (2, 2)) - &ch.u1 * d.d12() * ch.u2.transpose())) < 0.05);
    }

    #[test]
    fn expm_is_unitary_and_a_group() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for k in 0..50 {
            let h = random::hermitian(&mut rng, 2 + k % 4);
            let t = -10.0 + 20.0 * (k as f64 / 49.0);
            let u = expm_hermitian(h.matrix(), t);
            assert!(unitarity_defect(&u) <= 1e-10);
        }
        let h = Hamiltonian::new(random::hermitian(&mut rng, 2), random::hermitian(&mut rng, 3), 1.0).unwrap();
        let psi = random::state(&mut rng, 2, 3);
        let zero = propagate(&h, 0.0, &psi).unwrap();
        assert!(max_abs(&(zero.operator() - psi.operator())) < 1e-14);
        let stepwise = propagate(&h, 0.4, &propagate(&h, 1.1, &psi).unwrap()).unwrap();
        let direct = propagate(&h, 1.5, &psi).unwrap();
        assert!(max_abs(&(stepwise.operator() - direct.operator())) <= 1e-10);
    }

    #[test]
    fn singlet_is_stationary_under_equal_local_hamiltonians() {
        let h = Hamiltonian::new(sigma_z(), sigma_z(), 1.0).unwrap();
        let psi = singlet();
        let d = build_covariance(&psi, 0.3).unwrap();
        let r1 = QuadraticForm::new(Operator::basis_projector(2, 0), Side::One).unwrap();
        let l2 = QuadraticForm::new(Operator::basis_projector(2, 1), Side::Two).unwrap();
        for t in [0.0, 0.3, 1.7, 5.0] {
            let out = propagate(&h, t, &psi).unwrap();
            // U (x) U on the singlet multiplies it by det U = 1 here
            let overlap: C64 = out.to_vector().iter().zip(psi.to_vector()).map(|(a, b)| a * b.conj()).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
            let dt = propagate(&h, t, &d).unwrap();
            assert!((analytic_cov(&dt, &r1, &l2).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_dynamics_follow_the_state() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for _ in 0..30 {
            let psi = random::state(&mut rng, 3, 2);
            let ch = random::channel(&mut rng, 3, 2);
            let d = apply_to_covariance(&ch, &build_covariance(&psi, epsilon_min(&psi) + 0.05).unwrap()).unwrap();
            let (a1, a2) = (random::hermitian(&mut rng, 3), random::hermitian(&mut rng, 2));
            let q = quantum_average_tensor(&apply_to_state(&ch, &psi).unwrap(), &a1, &a2).unwrap();
            let g = analytic_cov(
                &d,
                &QuadraticForm::new(a1, Side::One).unwrap(),
                &QuadraticForm::new(a2, Side::Two).unwrap(),
            )
            .unwrap();
            assert!((g - q).abs() <= 1e-10);
        }
    }

    #[test]
    fn joint_hamiltonians() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (h1, h2) = (random::hermitian(&mut rng, 2), random::hermitian(&mut rng, 3));
        let joint = Operator::new(
            h1.matrix().kronecker(&CMatrix::identity(3, 3)) + CMatrix::identity(2, 2).kronecker(h2.matrix()),
        )
        .unwrap();
        let split = Hamiltonian::from_joint(&joint, 2, 3, 1.0).unwrap();
        let psi = random::state(&mut rng, 2, 3);
        let a = propagate(&split, 0.8, &psi).unwrap();
        let b = propagate(&Hamiltonian::new(h1, h2, 1.0).unwrap(), 0.8, &psi).unwrap();
        assert!(max_abs(&(a.operator() - b.operator())) < 1e-10);

        let interacting = sigma_z().kron(&sigma_z());
        assert!(matches!(Hamiltonian::from_joint(&interacting, 2, 2, 1.0), Err(Error::Interaction { .. })));
    }

    #[test]
    fn hbar_rescales_time() {
        let h = Hamiltonian::new(sigma_z(), sigma_z(), 2.0).unwrap();
        let h1 = Hamiltonian::new(sigma_z(), sigma_z(), 1.0).unwrap();
        let a = h.channel(2.0);
        let b = h1.channel(1.0);
        assert!(max_abs(&(a.u1() - b.u1())) < 1e-14);
    }

    #[test]
    fn self_test_passes() {
        transpose_convention_self_test();
    }
}
