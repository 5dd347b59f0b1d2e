use serde::{Deserialize, Serialize};

use super::{eig_hermitian, Ket4, Mat4};
use crate::{Error, Result};

/// Acceptance thresholds for the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub hermitian: f64,
    pub trace: f64,
    /// Most negative eigenvalue accepted (as a positive number).
    pub negative_eigenvalue: f64,
}

impl Tolerance {
    /// Matrices built in exact arithmetic (projectors, mixtures).
    pub const EXACT: Tolerance = Tolerance {
        hermitian: 1e-10,
        trace: 1e-10,
        negative_eigenvalue: 1e-8,
    };

    /// Output of a numerical reconstruction.
    pub const RECONSTRUCTED: Tolerance = Tolerance {
        hermitian: 1e-8,
        trace: 1e-10,
        negative_eigenvalue: 1e-8,
    };

    /// Matrices whose entries were rounded to `decimals` places. Each entry
    /// carries up to half a unit in the last place in both parts, so the
    /// trace can be off by `4 * ulp/2` and the spectrum by the spectral norm
    /// of the rounding error (at most `4 * sqrt2 * ulp/2`).
    pub fn printed(decimals: u32) -> Tolerance {
        let half_ulp = 0.5 * 10f64.powi(-(decimals as i32));
        Tolerance {
            hermitian: 1e-10,
            trace: 4.0 * half_ulp + 1e-12,
            negative_eigenvalue: 4.0 * std::f64::consts::SQRT_2 * half_ulp,
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite 4x4 operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix(Mat4);

impl DensityMatrix {
    pub fn new(m: Mat4) -> Result<Self> {
        Self::with_tolerance(m, Tolerance::EXACT)
    }

    pub fn with_tolerance(m: Mat4, tol: Tolerance) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let deviation = m.hermitian_deviation();
        if deviation > tol.hermitian {
            return Err(Error::NotHermitian {
                deviation,
                tolerance: tol.hermitian,
            });
        }
        let trace = m.trace().re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::TraceNotUnit {
                trace,
                tolerance: tol.trace,
            });
        }
        let min = eig_hermitian(&m)?[3];
        if min < -tol.negative_eigenvalue {
            return Err(Error::NegativeEigenvalue {
                min,
                tolerance: tol.negative_eigenvalue,
            });
        }
        Ok(DensityMatrix(m))
    }

    pub fn pure(psi: &Ket4) -> Self {
        DensityMatrix(psi.normalized().projector())
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Mat4::from_diag([0.25; 4]))
    }

    /// `p |Phi+><Phi+| + (1 - p) I/4`
    pub fn werner(p: f64) -> Result<Self> {
        let m = Ket4::phi_plus().projector().scale(p.into())
            + Mat4::from_diag([0.25 * (1.0 - p); 4]);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        eig_hermitian(&self.0).expect("density matrix is Hermitian")
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = Mat4::deserialize(d)?;
        DensityMatrix::with_tolerance(m, Tolerance::RECONSTRUCTED).map_err(serde::de::Error::custom)
    }
}

/// `<psi| rho |psi>`. Rejects non-Hermitian matrices; the state should be
/// normalized.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &Ket4) -> Result<f64> {
    let m = rho.matrix();
    let deviation = m.hermitian_deviation();
    if deviation > Tolerance::RECONSTRUCTED.hermitian {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: Tolerance::RECONSTRUCTED.hermitian,
        });
    }
    Ok(m.sandwich(&psi.0, &psi.0).re)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::qcore::{tensor, Cplx, Ket2};
    use proptest::prelude::*;

    /// Matrix printed to four decimals for a reconstructed near-|Phi+> state.
    pub(crate) fn printed_reference() -> Mat4 {
        let c = Cplx::new;
        Mat4([
            [c(0.4961, 0.0), c(0.1235, 0.0004), c(0.0211, 0.0480), c(0.4765, -0.0703)],
            [c(0.1235, -0.0004), c(0.0307, 0.0), c(0.0053, 0.0119), c(0.1185, -0.0179)],
            [c(0.0211, -0.0480), c(0.0053, -0.0119), c(0.0055, 0.0), c(0.0135, -0.0491)],
            [c(0.4765, 0.0703), c(0.1185, 0.0179), c(0.0135, 0.0491), c(0.4676, 0.0)],
        ])
    }

    #[test]
    fn bundled_reference_file_matches() {
        let m: Mat4 = serde_json::from_str(include_str!("../../data/reference_rho.json")).unwrap();
        assert_eq!(m, printed_reference());
    }

    #[test]
    fn projector_on_itself() {
        let rho = DensityMatrix::pure(&Ket4::phi_plus());
        assert!((fidelity_pure(&rho, &Ket4::phi_plus()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_fidelity() {
        let f = fidelity_pure(&DensityMatrix::maximally_mixed(), &Ket4::phi_plus()).unwrap();
        assert!((f - 0.25).abs() < 1e-15);
    }

    #[test]
    fn printed_reference_fidelity() {
        // (rho11 + rho44)/2 + Re rho14 from the printed entries
        let oracle = (0.4961 + 0.4676) / 2.0 + 0.4765;
        let rho = DensityMatrix::with_tolerance(printed_reference(), Tolerance::printed(4)).unwrap();
        let f = fidelity_pure(&rho, &Ket4::phi_plus()).unwrap();
        assert!((f - oracle).abs() < 1e-12);
        assert!((f - 0.9584).abs() < 5e-4);
    }

    #[test]
    fn printed_reference_needs_printed_tolerance() {
        let err = DensityMatrix::new(printed_reference()).unwrap_err();
        assert!(matches!(err, Error::TraceNotUnit { .. }));
        assert!(err.to_string().contains("unit_trace"));
    }

    #[test]
    fn printed_reference_spectrum() {
        // Oracle values from an independent LAPACK evaluation of the printed
        // entries; the rounding to four decimals moves the three small
        // eigenvalues to O(1e-4).
        let e = eig_hermitian(&printed_reference()).unwrap();
        let want = [
            9.999902300204204e-01,
            3.425812486795965e-05,
            -4.054800922768711e-05,
            -8.394013606081523e-05,
        ];
        for i in 0..4 {
            assert!((e[i] - want[i]).abs() < 1e-11, "{e:?}");
        }
        // leading eigenvalue agrees with the full-precision value at the
        // rounding scale
        assert!((e[0] - 9.99999910e-01).abs() < 1e-4);
    }

    #[test]
    fn rejects_non_psd() {
        let m = Mat4::from_diag([0.6, 0.6, -0.2, 0.0]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NegativeEigenvalue { .. })));
    }

    #[test]
    fn fidelity_rejects_non_hermitian() {
        let mut m = Mat4::from_diag([0.25; 4]);
        m.0[0][1] = Cplx::new(0.1, 0.0);
        // bypass constructor validation
        let rho = DensityMatrix(m);
        assert!(fidelity_pure(&rho, &Ket4::phi_plus()).is_err());
    }

    proptest! {
        #[test]
        fn fidelity_equals_trace_with_projector(
            w in prop::collection::vec(0.0..1.0f64, 4),
            amps in prop::collection::vec(-1.0..1.0f64, 8),
        ) {
            let total: f64 = w.iter().sum::<f64>() + 1e-9;
            let kets = [
                tensor(&Ket2::plus(), &Ket2::left()),
                Ket4::phi_plus(),
                Ket4::basis(1),
                tensor(&Ket2::late(), &Ket2::plus()),
            ];
            let mut m = Mat4::zeros();
            for (k, wk) in kets.iter().zip(&w) {
                m = m + k.projector().scale((wk / total).into());
            }
            m = m + Mat4::from_diag([1e-9 / total / 4.0; 4]);
            let rho = DensityMatrix::new(m).unwrap();
            let psi = Ket4([
                Cplx::new(amps[0], amps[1]), Cplx::new(amps[2], amps[3]),
                Cplx::new(amps[4], amps[5]), Cplx::new(amps[6], amps[7]),
            ]);
            prop_assume!(psi.norm() > 1e-3);
            let psi = psi.normalized();
            let f = fidelity_pure(&rho, &psi).unwrap();
            let tr = (*rho.matrix() * psi.projector()).trace().re;
            prop_assert!((f - tr).abs() < 1e-12);
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(&f));
        }
    }
}
