//! Random test objects: states, Hermitian operators, unitaries.

use rand_core::RngCore;

use crate::channels::UnitaryChannel;
use crate::hilbert::{BipartiteState, CMatrix, Operator, C64};
use crate::rng::complex_normal;

pub fn vector<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_normal(rng)).collect()
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn ginibre<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let v = vector(rng, rows * cols);
    CMatrix::from_row_slice(rows, cols, &v)
}

pub fn operator<R: RngCore + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Operator {
    Operator::new(ginibre(rng, rows, cols)).expect("finite entries")
}

/// Haar-distributed pure state of `C^d1 (x) C^d2`.
pub fn state<R: RngCore + ?Sized>(rng: &mut R, d1: usize, d2: usize) -> BipartiteState {
    BipartiteState::matricize(ginibre(rng, d1, d2), true).expect("nonzero Gaussian matrix")
}

/// Random self-adjoint operator `(G + G*) / 2`.
pub fn hermitian<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Operator {
    let g = ginibre(rng, n, n);
    let h = (&g + g.adjoint()).unscale(2.0);
    // Exact symmetry: copy the upper triangle onto the lower one.
    let h = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(h[(i, i)].re, 0.0)
        } else if i < j {
            h[(i, j)]
        } else {
            h[(j, i)].conj()
        }
    });
    Operator::new(h).expect("finite entries")
}

/// Haar-random unitary from the QR factorization of a Ginibre matrix.
pub fn unitary<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_diagonal(&r.diagonal().map(|z| {
        let n = z.norm();
        if n == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            z / n
        }
    }));
    q * phases
}

pub fn channel<R: RngCore + ?Sized>(rng: &mut R, d1: usize, d2: usize) -> UnitaryChannel {
    UnitaryChannel::new(unitary(rng, d1), unitary(rng, d2)).expect("QR factor is unitary")
}
