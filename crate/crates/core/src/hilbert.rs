//! Finite-dimensional Hilbert-space core.
//!
//! All bases are the canonical coordinate bases of `C^d`, which are real.
//! Under that convention the complex conjugate of an operator is the entrywise
//! conjugate of its matrix, and the operator representation of a bipartite
//! state `Psi = sum_ij Psi_ij e_i (x) f_j` is the coefficient matrix `Psi_ij`
//! itself, viewed as a map `H2 -> H1`.
//!
//! The inner product is linear in its first argument:
//! `<u, v> = sum_k u_k * conj(v_k)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Max-norm tolerance for self-adjointness checks.
pub const SELF_ADJOINT_TOL: f64 = 1e-12;
/// Tolerance on `|Psi|^2 - 1` accepted by [`BipartiteState::matricize`].
pub const NORM_TOL: f64 = 1e-9;
/// Relative tolerance for treating a complex scalar as real.
pub const REALITY_TOL: f64 = 1e-10;
/// Invariant tolerance for density operators.
pub const DENSITY_TOL: f64 = 1e-12;

/// Which component of a bipartite system an object refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }
}

/// `<u, v> = sum_k u_k conj(v_k)`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

/// Converts `z` to a real number, failing when the imaginary part exceeds
/// `REALITY_TOL * max(1, |re|)`.
pub fn to_real(z: C64) -> Result<f64> {
    if z.im.abs() <= REALITY_TOL * z.re.abs().max(1.0) {
        Ok(z.re)
    } else {
        Err(Error::NonReal { re: z.re, im: z.im })
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Entrywise complex conjugate (no transpose).
pub(crate) fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

/// A linear map between coordinate spaces, stored as a dense complex matrix
/// (row = output basis index, column = input basis index).
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    entries: CMatrix,
}

impl Operator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("operator has non-finite entries".into()));
        }
        Ok(Operator { entries })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Operator::new(CMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        Operator { entries: CMatrix::identity(dim, dim) }
    }

    /// Rank-one projector `|k><k|` onto basis vector `k` of `C^dim`.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut entries = CMatrix::zeros(dim, dim);
        entries[(k, k)] = C64::new(1.0, 0.0);
        Operator { entries }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// The complex conjugate operator `A-bar`: in a real basis its matrix
    /// elements are the conjugates of those of `A`, which gives
    /// `<A-bar u, v> = <conj v, A conj u>`.
    pub fn conj(&self) -> Operator {
        Operator { entries: conj(&self.entries) }
    }

    /// Hermitian adjoint `A*`.
    pub fn adjoint(&self) -> Operator {
        Operator { entries: self.entries.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        trace(&self.entries)
    }

    /// `max |A - A*|`, or infinity for non-square operators.
    pub fn self_adjoint_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        max_abs(&(&self.entries - self.entries.adjoint()))
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint_defect() <= SELF_ADJOINT_TOL
    }

    pub(crate) fn ensure_self_adjoint(&self, what: &'static str) -> Result<()> {
        let defect = self.self_adjoint_defect();
        if defect <= SELF_ADJOINT_TOL {
            Ok(())
        } else {
            Err(Error::SelfAdjointness { what, defect })
        }
    }

    /// `<A phi, phi>`, the value of the quadratic form of `A` at `phi`.
    pub fn quadratic_form(&self, phi: &[C64]) -> Result<C64> {
        if !self.is_square() || self.cols() != phi.len() {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, field has {} modes",
                self.rows(),
                self.cols(),
                phi.len()
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (i, pi) in phi.iter().enumerate() {
            let row: C64 = phi.iter().enumerate().map(|(j, pj)| self.entries[(i, j)] * pj).sum();
            acc += row * pi.conj();
        }
        Ok(acc)
    }

    /// Kronecker product `self (x) other` in row-major index order.
    pub fn kron(&self, other: &Operator) -> Operator {
        Operator { entries: self.entries.kronecker(&other.entries) }
    }
}

/// A normalized vector of `H1 (x) H2` stored as its `d1 x d2` coefficient
/// matrix, which is also its operator representation `Psi-hat: H2 -> H1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    amplitudes: CMatrix,
}

impl BipartiteState {
    /// Wraps a coefficient matrix as a state. Row `i` indexes the `H1` basis,
    /// column `j` the `H2` basis. With `renormalize` the matrix is scaled to
    /// unit Frobenius norm; otherwise it must already be normalized.
    pub fn matricize(coeffs: CMatrix, renormalize: bool) -> Result<Self> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "state dimensions must be positive, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("amplitudes contain non-finite entries".into()));
        }
        let norm_sq = coeffs.norm_squared();
        if renormalize {
            if norm_sq == 0.0 {
                return Err(Error::Normalization { norm_sq });
            }
            return Ok(BipartiteState { amplitudes: coeffs.unscale(norm_sq.sqrt()) });
        }
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { norm_sq });
        }
        Ok(BipartiteState { amplitudes: coeffs })
    }

    /// Builds a state from its vector in `H1 (x) H2`, index `i * d2 + j`.
    pub fn from_vector(d1: usize, d2: usize, v: &[C64], renormalize: bool) -> Result<Self> {
        if v.len() != d1 * d2 {
            return Err(Error::Dimension(format!("vector of length {} does not match {d1}x{d2}", v.len())));
        }
        BipartiteState::matricize(CMatrix::from_row_slice(d1, d2, v), renormalize)
    }

    /// `u (x) v`, normalized.
    pub fn product(u: &[C64], v: &[C64]) -> Result<Self> {
        let m = CMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j]);
        BipartiteState::matricize(m, true)
    }

    pub fn d1(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn d2(&self) -> usize {
        self.amplitudes.ncols()
    }

    /// The coefficient matrix `Psi_ij`, i.e. the operator `Psi-hat`.
    pub fn operator(&self) -> &CMatrix {
        &self.amplitudes
    }

    pub fn to_vector(&self) -> Vec<C64> {
        let (d1, d2) = (self.d1(), self.d2());
        (0..d1 * d2).map(|k| self.amplitudes[(k / d2, k % d2)]).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `e^{i theta} Psi`.
    pub fn with_phase(&self, theta: f64) -> BipartiteState {
        let phase = C64::from_polar(1.0, theta);
        BipartiteState { amplitudes: self.amplitudes.map(|z| z * phase) }
    }

    pub(crate) fn from_matrix_unchecked(amplitudes: CMatrix) -> Self {
        BipartiteState { amplitudes }
    }

    fn dim(&self, side: Side) -> usize {
        match side {
            Side::One => self.d1(),
            Side::Two => self.d2(),
        }
    }
}

/// A validated density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    entries: CMatrix,
}

impl DensityOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Dimension("density operator must be square and non-empty".into()));
        }
        let defect = max_abs(&(&entries - entries.adjoint()));
        if defect > DENSITY_TOL {
            return Err(Error::SelfAdjointness { what: "density operator", defect });
        }
        let tr = trace(&entries);
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::Invalid(format!("density operator has trace {tr}")));
        }
        let min_eig = min_eigenvalue(&entries);
        if min_eig < -DENSITY_TOL {
            return Err(Error::Invalid(format!("density operator has negative eigenvalue {min_eig:e}")));
        }
        Ok(DensityOperator { entries })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `Tr[rho A]`.
    pub fn expectation(&self, a: &Operator) -> Result<f64> {
        if a.rows() != self.dim() || !a.is_square() {
            return Err(Error::Dimension(format!(
                "operator {}x{} vs density of dimension {}",
                a.rows(),
                a.cols(),
                self.dim()
            )));
        }
        to_real(trace(&(&self.entries * a.matrix())))
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Reduced density operator of one component. Side one is
/// `Psi-hat Psi-hat*`; side two is the conjugate of `Psi-hat* Psi-hat`,
/// because `Psi-hat* Psi-hat` itself equals `conj(rho_2)`.
pub fn reduced_density(psi: &BipartiteState, side: Side) -> Result<DensityOperator> {
    let p = psi.operator();
    let m = match side {
        Side::One => p * p.adjoint(),
        Side::Two => conj(&(p.adjoint() * p)),
    };
    DensityOperator::new(m)
}

fn check_pair(psi: &BipartiteState, a1: &Operator, a2: &Operator) -> Result<()> {
    a1.ensure_self_adjoint("A1")?;
    a2.ensure_self_adjoint("A2")?;
    if a1.rows() != psi.d1() || a2.rows() != psi.d2() {
        return Err(Error::Dimension(format!(
            "operators {}x{} and {}x{} do not act on a {}x{} state",
            a1.rows(),
            a1.cols(),
            a2.rows(),
            a2.cols(),
            psi.d1(),
            psi.d2()
        )));
    }
    Ok(())
}

/// `<(A1 (x) A2) Psi, Psi>` by explicit contraction over the amplitudes:
/// `sum conj(Psi_ik) A1_ij A2_kl Psi_jl`.
pub fn quantum_average_tensor(psi: &BipartiteState, a1: &Operator, a2: &Operator) -> Result<f64> {
    check_pair(psi, a1, a2)?;
    let (d1, d2) = (psi.d1(), psi.d2());
    let p = psi.operator();
    let (m1, m2) = (a1.matrix(), a2.matrix());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d1 {
        for k in 0..d2 {
            // ((A1 (x) A2) Psi)_{ik}
            let mut image = C64::new(0.0, 0.0);
            for j in 0..d1 {
                for l in 0..d2 {
                    image += m1[(i, j)] * m2[(k, l)] * p[(j, l)];
                }
            }
            acc += image * p[(i, k)].conj();
        }
    }
    to_real(acc)
}

/// `Tr[Psi-hat A2-bar Psi-hat* A1]`.
pub fn quantum_average_trace(psi: &BipartiteState, a1: &Operator, a2: &Operator) -> Result<f64> {
    check_pair(psi, a1, a2)?;
    let p = psi.operator();
    let prod = p * conj(a2.matrix()) * p.adjoint() * a1.matrix();
    to_real(trace(&prod))
}

/// Quantum average of an observable of one component: `Tr[Psi-hat Psi-hat* A]`
/// on side one, `Tr[Psi-hat* Psi-hat A-bar]` on side two.
pub fn marginal_average(psi: &BipartiteState, a: &Operator, side: Side) -> Result<f64> {
    a.ensure_self_adjoint("A")?;
    if !a.is_square() || a.rows() != psi.dim(side) {
        return Err(Error::Dimension(format!(
            "operator {}x{} does not act on component {:?} of dimension {}",
            a.rows(),
            a.cols(),
            side,
            psi.dim(side)
        )));
    }
    let p = psi.operator();
    let prod = match side {
        Side::One => p * p.adjoint() * a.matrix(),
        Side::Two => p.adjoint() * p * conj(a.matrix()),
    };
    to_real(trace(&prod))
}
