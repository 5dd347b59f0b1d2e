//! Complex linear algebra for 2x2 and 4x4 two-qubit problems.

mod density;
mod eig;
mod ket;
mod mat4;

pub use density::{fidelity_pure, DensityMatrix, Tolerance};
pub use eig::{eig_general, eig_hermitian, eigh_hermitian, HermitianEigen};
pub use ket::{tensor, Ket2, Ket4};
pub use mat4::{Mat2, Mat4, MatrixJson};

pub use num_complex::Complex64 as Cplx;

pub(crate) const ZERO: Cplx = Cplx::new(0.0, 0.0);
pub(crate) const ONE: Cplx = Cplx::new(1.0, 0.0);
pub(crate) const I: Cplx = Cplx::new(0.0, 1.0);

/// Pauli matrices in the order I, X, Y, Z.
pub fn pauli(k: usize) -> Mat2 {
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("pauli index {k} out of range"),
    }
}

#[cfg(test)]
pub(crate) use density::tests::printed_reference as density_tests_reference;
