use serde::{Deserialize, Serialize};

use crate::coincidence::ProjectionRecord;
use crate::qcore::{pauli, Mat4};
use crate::util::lstsq_min_norm;

/// Unconstrained least-squares estimate; may have negative eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEstimate {
    /// Hermitian, unit trace when `scale > 0`.
    pub rho: Mat4,
    /// Fitted overall count scale `N`.
    pub scale: f64,
    /// Number of independent operators the records determine (16 = full).
    pub rank: usize,
    pub warnings: Vec<String>,
}

fn pauli_basis() -> [Mat4; 16] {
    std::array::from_fn(|k| Mat4::kron(&pauli(k / 4), &pauli(k % 4)))
}

/// Solves `N w_v <psi_v|rho|psi_v> = n_v` for `rho` expanded in the
/// two-qubit Pauli basis, unknowns `N c_k`. The trace coefficient then gives
/// `N`. Rank-deficient record sets get the minimum-norm solution.
pub fn linear_reconstruct(records: &[ProjectionRecord]) -> LinearEstimate {
    let basis = pauli_basis();
    let m = records.len();
    let mut a = vec![0.0; m * 16];
    let mut b = vec![0.0; m];
    for (i, r) in records.iter().enumerate() {
        let psi = &r.projector.0;
        for (k, s) in basis.iter().enumerate() {
            a[i * 16 + k] = r.normalization * s.sandwich(psi, psi).re / 4.0;
        }
        b[i] = r.count as f64;
    }
    let (x, rank) = lstsq_min_norm(&a, m, 16, &b);
    let mut warnings = Vec::new();
    if rank < 16 {
        warnings.push(format!("projector set has rank {rank} < 16; minimum-norm solution returned"));
    }
    let scale = x[0];
    let rho = if scale.abs() > 0.0 && b.iter().any(|&n| n > 0.0) {
        let mut rho = Mat4::zeros();
        for (k, s) in basis.iter().enumerate() {
            rho = rho + s.scale((x[k] / (4.0 * scale)).into());
        }
        rho.hermitian_part()
    } else {
        warnings.push("no counts; zero matrix returned".into());
        Mat4::zeros()
    };
    LinearEstimate { rho, scale, rank, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coincidence::AssemblyOptions;
    use crate::qcore::{eig_hermitian, Cplx, Ket4};
    use crate::tomography::testutil::{template, template_with};
    use crate::tomography::{expected_counts, with_counts};

    #[test]
    fn exact_counts_recover_phi_plus() {
        let rho = Ket4::phi_plus().projector();
        let recs = template();
        let counts = expected_counts(&rho, &recs, 6400.0);
        let recs = with_counts(&recs, counts.iter().map(|c| c.round() as u64));
        let est = linear_reconstruct(&recs);
        assert_eq!(est.rank, 16);
        assert!(est.warnings.is_empty());
        assert!((est.rho - rho).frobenius_norm() < 1e-10);
        assert!((est.scale - 6400.0).abs() < 1e-8);
    }

    #[test]
    fn exact_counts_recover_mixed_state() {
        // non-trivial mixed state with complex coherences
        let mut m = Mat4::from_diag([0.4, 0.1, 0.2, 0.3]);
        m.0[0][3] = Cplx::new(0.2, 0.1);
        m.0[3][0] = m.0[0][3].conj();
        m.0[1][2] = Cplx::new(0.0, -0.05);
        m.0[2][1] = m.0[1][2].conj();
        let recs = template();
        let counts = expected_counts(&m, &recs, 1.0);
        // fractional counts are fine for the linear solve; scale up to integers
        let recs = with_counts(&recs, counts.iter().map(|c| (c * 1e9).round() as u64));
        let est = linear_reconstruct(&recs);
        assert!((est.rho - m).frobenius_norm() < 1e-8);
    }

    #[test]
    fn forbidden_cells_off_is_rank_deficient() {
        let recs = template_with(AssemblyOptions { include_forbidden_cells: false });
        let counts = expected_counts(&Ket4::phi_plus().projector(), &recs, 6400.0);
        let est = linear_reconstruct(&with_counts(&recs, counts.iter().map(|c| c.round() as u64)));
        assert_eq!(est.rank, 14);
        assert_eq!(est.warnings.len(), 1);
    }

    #[test]
    fn zero_counts_give_zero_matrix() {
        let est = linear_reconstruct(&template());
        assert_eq!(est.rho, Mat4::zeros());
        assert!(!est.warnings.is_empty());
    }

    #[test]
    fn output_is_hermitian_even_when_unphysical() {
        // exact pure-state counts with one projector under-counted
        let recs = template();
        let mut counts: Vec<u64> = expected_counts(&Ket4::phi_plus().projector(), &recs, 6400.0)
            .iter()
            .map(|c| c.round() as u64)
            .collect();
        let i = recs.iter().position(|r| r.source.cell == (0, 0)).unwrap();
        counts[i] -= 300;
        let est = linear_reconstruct(&with_counts(&recs, counts));
        assert!(est.rho.hermitian_deviation() < 1e-15);
        assert!((est.rho.trace().re - 1.0).abs() < 1e-10);
        assert!(eig_hermitian(&est.rho).unwrap()[3] < 0.0);
    }
}
