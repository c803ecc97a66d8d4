//! Block covariance operators of prequantum bi-signals.
//!
//! For a state `Psi` and background level `epsilon` the covariance of the
//! bi-signal `(phi1, phi2)` is
//!
//! ```text
//! D = | Psi Psi* + eps I      Psi          |
//!     | Psi*                  Psi* Psi + eps I |
//! ```
//!
//! with blocks `D_ab = E[phi_a phi_b*]`. The assembled matrix is positive
//! semidefinite iff `eps >= max_i s_i (1 - s_i)` over the singular values
//! `s_i` of `Psi`: in a singular-vector basis each pair of modes carries the
//! block `[[s^2, s], [s, s^2]]`, whose eigenvalues are `s^2 +- s`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::hilbert::{conj, max_abs, min_eigenvalue, trace, BipartiteState, CMatrix, C64};

/// Tolerance for the Hermitian block-structure invariants.
pub const BLOCK_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are treated as zero.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockCovariance {
    d11: CMatrix,
    d12: CMatrix,
    d21: CMatrix,
    d22: CMatrix,
    epsilon: f64,
}

impl BlockCovariance {
    /// Validates block shapes, Hermitian structure, and positivity.
    pub fn from_blocks(d11: CMatrix, d12: CMatrix, d21: CMatrix, d22: CMatrix, epsilon: f64) -> Result<Self> {
        let (d1, d2) = (d11.nrows(), d22.nrows());
        if d1 == 0 || d2 == 0 {
            return Err(Error::Dimension("covariance blocks must be non-empty".into()));
        }
        if d11.shape() != (d1, d1) || d22.shape() != (d2, d2) || d12.shape() != (d1, d2) || d21.shape() != (d2, d1) {
            return Err(Error::Dimension(format!(
                "inconsistent block shapes D11 {:?}, D12 {:?}, D21 {:?}, D22 {:?}",
                d11.shape(),
                d12.shape(),
                d21.shape(),
                d22.shape()
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Invalid(format!("epsilon must be a nonnegative number, got {epsilon}")));
        }
        for (what, defect) in [
            ("D11", max_abs(&(&d11 - d11.adjoint()))),
            ("D22", max_abs(&(&d22 - d22.adjoint()))),
            ("D21 vs D12*", max_abs(&(&d21 - d12.adjoint()))),
        ] {
            if defect.is_nan() || defect > BLOCK_TOL {
                return Err(Error::SelfAdjointness { what, defect });
            }
        }
        let cov = BlockCovariance { d11, d12, d21, d22, epsilon };
        cov.check_positive()?;
        Ok(cov)
    }

    pub fn d1(&self) -> usize {
        self.d11.nrows()
    }

    pub fn d2(&self) -> usize {
        self.d22.nrows()
    }

    pub fn dim(&self) -> usize {
        self.d1() + self.d2()
    }

    pub fn d11(&self) -> &CMatrix {
        &self.d11
    }

    pub fn d12(&self) -> &CMatrix {
        &self.d12
    }

    pub fn d21(&self) -> &CMatrix {
        &self.d21
    }

    pub fn d22(&self) -> &CMatrix {
        &self.d22
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The full `(d1 + d2) x (d1 + d2)` matrix.
    pub fn assembled(&self) -> CMatrix {
        let (d1, d2) = (self.d1(), self.d2());
        let mut m = CMatrix::zeros(d1 + d2, d1 + d2);
        m.view_mut((0, 0), (d1, d1)).copy_from(&self.d11);
        m.view_mut((0, d1), (d1, d2)).copy_from(&self.d12);
        m.view_mut((d1, 0), (d2, d1)).copy_from(&self.d21);
        m.view_mut((d1, d1), (d2, d2)).copy_from(&self.d22);
        m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.assembled())
    }

    fn check_positive(&self) -> Result<()> {
        let min_eig = self.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: min_eig, min_epsilon: self.epsilon - min_eig });
        }
        Ok(())
    }

    /// Rebuilds from transformed blocks; `D21` is always recomputed as `D12*`.
    fn with_blocks(&self, d11: CMatrix, d12: CMatrix, d22: CMatrix, epsilon: f64) -> BlockCovariance {
        let d21 = d12.adjoint();
        BlockCovariance { d11, d12, d21, d22, epsilon }
    }

    pub(crate) fn map_blocks(
        &self,
        d11: impl FnOnce(&CMatrix) -> CMatrix,
        d12: impl FnOnce(&CMatrix) -> CMatrix,
        d22: impl FnOnce(&CMatrix) -> CMatrix,
    ) -> BlockCovariance {
        self.with_blocks(d11(&self.d11), d12(&self.d12), d22(&self.d22), self.epsilon)
    }
}

/// Smallest background level making the covariance of `psi` positive
/// semidefinite: `max_i s_i (1 - s_i)`, never above `1/4`.
pub fn epsilon_min(psi: &BipartiteState) -> f64 {
    psi.operator().clone().singular_values().iter().map(|&s| s * (1.0 - s)).fold(0.0, f64::max)
}

/// The covariance of the bi-signal representing `psi` on a white-noise
/// background of level `epsilon`.
pub fn build_covariance(psi: &BipartiteState, epsilon: f64) -> Result<BlockCovariance> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Invalid(format!("epsilon must be a nonnegative number, got {epsilon}")));
    }
    let eps_min = epsilon_min(psi);
    if epsilon < eps_min - 1e-12 {
        let min_eigenvalue = epsilon - eps_min;
        return Err(Error::NotPositive { min_eigenvalue, min_epsilon: eps_min });
    }
    let p = psi.operator();
    let (d1, d2) = (psi.d1(), psi.d2());
    let eps = C64::new(epsilon, 0.0);
    let d11 = p * p.adjoint() + CMatrix::identity(d1, d1) * eps;
    let d22 = p.adjoint() * p + CMatrix::identity(d2, d2) * eps;
    let cov = BlockCovariance { d11, d12: p.clone(), d21: p.adjoint(), d22, epsilon };
    cov.check_positive()?;
    Ok(cov)
}

/// Phases `(gamma1, gamma2)` applied to the components, reduced mod `2 pi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePair {
    gamma1: f64,
    gamma2: f64,
}

impl PhasePair {
    pub fn new(gamma1: f64, gamma2: f64) -> Self {
        PhasePair { gamma1: gamma1.rem_euclid(TAU), gamma2: gamma2.rem_euclid(TAU) }
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn relative(&self) -> f64 {
        self.gamma1 - self.gamma2
    }
}

/// Covariance of `(e^{i g1} phi1, e^{i g2} phi2)`: only the off-diagonal
/// blocks pick up the relative phase.
pub fn phase_transform(d: &BlockCovariance, gamma: PhasePair) -> BlockCovariance {
    let rel = gamma.relative();
    if rel == 0.0 {
        return d.clone();
    }
    let factor = C64::from_polar(1.0, rel);
    d.map_blocks(Clone::clone, |m| m * factor, Clone::clone)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Permutation {
    /// `(phi1, phi2) -> (conj phi2, conj phi1)`
    SigmaStar,
    /// `(phi1, phi2) -> (-conj phi2, conj phi1)`
    SigmaStarMinus,
}

/// Covariance of the permuted-and-conjugated bi-signal. In a real basis the
/// new off-diagonal block is the transpose of the old one.
pub fn permutation_transform(d: &BlockCovariance, variant: Permutation) -> Result<BlockCovariance> {
    if d.d1() != d.d2() {
        return Err(Error::Dimension(format!(
            "permutation needs equal component dimensions, got {} and {}",
            d.d1(),
            d.d2()
        )));
    }
    let sign = match variant {
        Permutation::SigmaStar => 1.0,
        Permutation::SigmaStarMinus => -1.0,
    };
    let d12 = d.d12.transpose() * C64::new(sign, 0.0);
    Ok(d.with_blocks(conj(&d.d22), d12, conj(&d.d11), d.epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SymmetryTag {
    Bosonic,
    Fermionic,
    /// `Psi-hat = e^{i theta} Psi-hat^T` with `theta` in `[0, 2 pi)`.
    Anyonic {
        theta: f64,
    },
    NoSymmetry,
}

impl std::fmt::Display for SymmetryTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymmetryTag::Bosonic => f.write_str("Bosonic"),
            SymmetryTag::Fermionic => f.write_str("Fermionic"),
            SymmetryTag::Anyonic { theta } => write!(f, "Anyonic({theta})"),
            SymmetryTag::NoSymmetry => f.write_str("None"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryClass {
    pub tag: SymmetryTag,
    /// Max-norm defect of the best-fitting condition.
    pub residual: f64,
}

/// Exchange-symmetry class of a state from its coefficient matrix.
///
/// Applying `Psi = e^{i theta} Psi^T` twice gives `e^{2 i theta} = 1` for any
/// nonzero `Psi`, so only `theta` in `{0, pi}` can fit. The anyonic branch
/// reports the fitted phase when it is within `tol` but neither sign is.
pub fn classify_symmetry(psi: &BipartiteState, tol: f64) -> Result<SymmetryClass> {
    if psi.d1() != psi.d2() {
        return Err(Error::Dimension(format!(
            "symmetry classification needs a square state, got {}x{}",
            psi.d1(),
            psi.d2()
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let p = psi.operator();
    let pt = p.transpose();
    let bosonic = max_abs(&(p - &pt));
    let fermionic = max_abs(&(p + &pt));
    if bosonic <= tol || fermionic <= tol {
        let class = if bosonic <= fermionic {
            SymmetryClass { tag: SymmetryTag::Bosonic, residual: bosonic }
        } else {
            SymmetryClass { tag: SymmetryTag::Fermionic, residual: fermionic }
        };
        return Ok(class);
    }
    // Least-squares phase aligning Psi with Psi^T.
    let overlap: C64 = p.iter().zip(pt.iter()).map(|(a, b)| a * b.conj()).sum();
    let theta = overlap.arg().rem_euclid(TAU);
    let anyonic = max_abs(&(p - &pt * C64::from_polar(1.0, theta)));
    if anyonic <= tol {
        return Ok(SymmetryClass { tag: SymmetryTag::Anyonic { theta }, residual: anyonic });
    }
    Ok(SymmetryClass { tag: SymmetryTag::NoSymmetry, residual: bosonic.min(fermionic).min(anyonic) })
}

/// `E |phi|^2 = Tr D11 + Tr D22`.
pub fn dispersion(d: &BlockCovariance) -> f64 {
    trace(&d.d11).re + trace(&d.d22).re
}

/// Covariance of `factor * phi`.
pub fn scale_field(d: &BlockCovariance, factor: f64) -> Result<BlockCovariance> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Invalid(format!("scale factor must be positive, got {factor}")));
    }
    let f2 = C64::new(factor * factor, 0.0);
    Ok(d.with_blocks(&d.d11 * f2, &d.d12 * f2, &d.d22 * f2, d.epsilon * factor * factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn state(rows: &[f64], d: usize) -> BipartiteState {
        let v: Vec<C64> = rows.iter().map(|&x| C64::new(x, 0.0)).collect();
        BipartiteState::from_vector(d, rows.len() / d, &v, false).unwrap()
    }

    fn singlet() -> BipartiteState {
        state(&[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0], 2)
    }

    fn boson() -> BipartiteState {
        state(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0], 2)
    }

    /// Smallest eps with lambda_min(D(eps)) >= 0, by bisection on the
    /// assembled matrix. Independent of the singular-value formula.
    fn bisect_epsilon(psi: &BipartiteState) -> f64 {
        let base = BlockCovariance {
            d11: psi.operator() * psi.operator().adjoint(),
            d12: psi.operator().clone(),
            d21: psi.operator().adjoint(),
            d22: psi.operator().adjoint() * psi.operator(),
            epsilon: 0.0,
        }
        .assembled();
        let n = base.nrows();
        let lam = |eps: f64| min_eigenvalue(&(&base + CMatrix::identity(n, n) * C64::new(eps, 0.0)));
        if lam(0.0) >= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if lam(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn build_covariance_product_state() {
        let psi = state(&[1.0, 0.0, 0.0, 0.0], 2);
        let d = build_covariance(&psi, 0.0).unwrap();
        let expected = [[1.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0]];
        let m = d.assembled();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[(i, j)], C64::new(expected[i][j], 0.0));
            }
        }
        assert!(d.min_eigenvalue() >= -PSD_TOL);
    }

    #[test]
    fn build_covariance_singlet_positivity() {
        let err = build_covariance(&singlet(), 0.0).unwrap_err();
        match err {
            Error::NotPositive { min_epsilon, .. } => assert!((min_epsilon - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-12),
            e => panic!("unexpected {e:?}"),
        }
        // eigenvalue oracle at eps = 0: 1/2 - 1/sqrt(2)
        let raw = BlockCovariance {
            d11: CMatrix::identity(2, 2) * C64::new(0.5, 0.0),
            d12: singlet().operator().clone(),
            d21: singlet().operator().adjoint(),
            d22: CMatrix::identity(2, 2) * C64::new(0.5, 0.0),
            epsilon: 0.0,
        };
        assert!((raw.min_eigenvalue() - (0.5 - FRAC_1_SQRT_2)).abs() < 1e-12);
        let d = build_covariance(&singlet(), 0.25).unwrap();
        assert!(d.min_eigenvalue() > 0.0);
    }

    #[test]
    fn epsilon_min_examples() {
        assert!(epsilon_min(&state(&[1.0, 0.0, 0.0, 0.0], 2)).abs() < 1e-15);
        assert!(bisect_epsilon(&state(&[1.0, 0.0, 0.0, 0.0], 2)) < 1e-12);
        let e = epsilon_min(&singlet());
        assert!((e - 0.207_106_781_186_547_5).abs() < 1e-12);
        assert!((bisect_epsilon(&singlet()) - e).abs() < 1e-9);
    }

    #[test]
    fn epsilon_min_matches_bisection_and_is_admissible() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        for k in 0..100 {
            let (d1, d2) = (1 + k % 5, 1 + (k / 5) % 5);
            let psi = random::state(&mut rng, d1, d2);
            let e = epsilon_min(&psi);
            assert!(e <= 0.25);
            assert!((e - bisect_epsilon(&psi)).abs() < 1e-8);
            let d = build_covariance(&psi, e).unwrap();
            assert!(d.min_eigenvalue() >= -PSD_TOL);
        }
    }

    #[test]
    fn phase_transform_examples() {
        let d = build_covariance(&boson(), 0.25).unwrap();
        assert_eq!(phase_transform(&d, PhasePair::new(PI, PI)), d);
        assert_eq!(phase_transform(&d, PhasePair::new(TAU, 0.0)), d);
        let flipped = phase_transform(&d, PhasePair::new(PI, 0.0));
        assert!(max_abs(&(flipped.d12() + d.d12())) < 1e-15);
        assert_eq!(flipped.d11(), d.d11());
        assert_eq!(flipped.d22(), d.d22());
    }

    #[test]
    fn permutation_examples() {
        let bos = build_covariance(&boson(), 0.25).unwrap();
        let p = permutation_transform(&bos, Permutation::SigmaStar).unwrap();
        assert!(max_abs(&(p.assembled() - bos.assembled())) < 1e-15);

        let fer = build_covariance(&singlet(), 0.25).unwrap();
        let p = permutation_transform(&fer, Permutation::SigmaStar).unwrap();
        assert!(max_abs(&(p.d12() + fer.d12())) < 1e-15);
        assert!(max_abs(&(p.d21() + fer.d21())) < 1e-15);
        assert!(max_abs(&(p.d11() - fer.d11())) < 1e-15);
        let p = permutation_transform(&fer, Permutation::SigmaStarMinus).unwrap();
        assert!(max_abs(&(p.assembled() - fer.assembled())) < 1e-15);

        let rect = build_covariance(&state(&[1.0, 0.0, 0.0], 1), 0.0).unwrap();
        assert!(matches!(permutation_transform(&rect, Permutation::SigmaStar), Err(Error::Dimension(_))));
    }

    #[test]
    fn permutation_is_an_involution() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        for _ in 0..50 {
            let psi = random::state(&mut rng, 3, 3);
            let d = build_covariance(&psi, epsilon_min(&psi) + 0.1).unwrap();
            let twice = permutation_transform(
                &permutation_transform(&d, Permutation::SigmaStar).unwrap(),
                Permutation::SigmaStar,
            )
            .unwrap();
            assert!(max_abs(&(twice.assembled() - d.assembled())) < 1e-15);
        }
    }

    #[test]
    fn classify_examples() {
        let c = classify_symmetry(&boson(), 1e-12).unwrap();
        assert_eq!(c.tag, SymmetryTag::Bosonic);
        assert!(c.residual <= 1e-12);
        let c = classify_symmetry(&singlet(), 1e-12).unwrap();
        assert_eq!(c.tag, SymmetryTag::Fermionic);
        assert!(c.residual <= 1e-12);
        let c = classify_symmetry(&state(&[1.0, 0.0, 0.0, 0.0], 2), 1e-12).unwrap();
        assert_eq!(c.tag, SymmetryTag::Bosonic);

        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let c = classify_symmetry(&random::state(&mut rng, 3, 3), 1e-8).unwrap();
        assert_eq!(c.tag, SymmetryTag::NoSymmetry);
        assert!(c.residual > 1e-8);

        assert!(classify_symmetry(&state(&[1.0, 0.0, 0.0], 1), 1e-12).is_err());
    }

    #[test]
    fn classification_survives_global_phase() {
        for theta in [0.3, 1.0, PI, 4.0] {
            assert_eq!(classify_symmetry(&boson().with_phase(theta), 1e-12).unwrap().tag, SymmetryTag::Bosonic);
            assert_eq!(classify_symmetry(&singlet().with_phase(theta), 1e-12).unwrap().tag, SymmetryTag::Fermionic);
        }
    }

    #[test]
    fn dispersion_and_scaling() {
        let prod = build_covariance(&state(&[1.0, 0.0, 0.0, 0.0], 2), 0.0).unwrap();
        assert!((dispersion(&prod) - 2.0).abs() < 1e-15);
        let d = build_covariance(&singlet(), 0.25).unwrap();
        assert!((dispersion(&d) - 3.0).abs() < 1e-14);
        let d2 = build_covariance(&singlet(), 0.5).unwrap();
        assert!((dispersion(&d2) - dispersion(&d) - 0.25 * 4.0).abs() < 1e-14);

        assert_eq!(scale_field(&d, 1.0).unwrap(), d);
        let unit = scale_field(&d, 1.0 / dispersion(&d).sqrt()).unwrap();
        assert!((dispersion(&unit) - 1.0).abs() < 1e-14);
        assert!((unit.epsilon() - 0.25 / 3.0).abs() < 1e-15);
        assert!(scale_field(&d, 0.0).is_err());
    }

    #[test]
    fn from_blocks_rejects_broken_structure() {
        let d = build_covariance(&singlet(), 0.25).unwrap();
        let bad21 = d.d21() * C64::new(2.0, 0.0);
        assert!(matches!(
            BlockCovariance::from_blocks(d.d11().clone(), d.d12().clone(), bad21, d.d22().clone(), 0.25),
            Err(Error::SelfAdjointness { .. })
        ));
        let small = CMatrix::identity(2, 2) * C64::new(0.1, 0.0);
        assert!(matches!(
            BlockCovariance::from_blocks(small.clone(), d.d12().clone(), d.d21().clone(), small, 0.0),
            Err(Error::NotPositive { .. })
        ));
    }
}
