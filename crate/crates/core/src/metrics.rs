//! Entanglement and nonlocality figures of merit for two-qubit states.

use serde::{Deserialize, Serialize};

use crate::qcore::{eig_general, fidelity_pure, pauli, DensityMatrix, Ket4, Mat4};
use crate::{Error, Result};

/// Spin-flip eigenvalues down to this (negative) value are treated as zero.
const SPIN_FLIP_CLAMP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricIntervals {
    pub concurrence: Interval,
    pub fidelity_phi_plus: Interval,
    pub chsh_s: Interval,
    pub purity: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub concurrence: f64,
    pub fidelity_phi_plus: f64,
    pub chsh_s: f64,
    pub purity: f64,
    #[serde(flatten, with = "flat_intervals", default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<MetricIntervals>,
}

impl MetricsReport {
    pub fn compute(rho: &DensityMatrix) -> Result<Self> {
        Ok(MetricsReport {
            concurrence: concurrence(rho)?,
            fidelity_phi_plus: fidelity_pure(rho, &Ket4::phi_plus())?,
            chsh_s: chsh_s(rho),
            purity: purity(rho),
            intervals: None,
        })
    }
}

/// Intervals flattened next to the point values as `<metric>_lower` / `<metric>_upper`.
mod flat_intervals {
    use super::{Interval, MetricIntervals};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Flat {
        concurrence_lower: f64,
        concurrence_upper: f64,
        fidelity_phi_plus_lower: f64,
        fidelity_phi_plus_upper: f64,
        chsh_s_lower: f64,
        chsh_s_upper: f64,
        purity_lower: f64,
        purity_upper: f64,
    }

    pub fn serialize<S: Serializer>(v: &Option<MetricIntervals>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(i) => Flat {
                concurrence_lower: i.concurrence.lower,
                concurrence_upper: i.concurrence.upper,
                fidelity_phi_plus_lower: i.fidelity_phi_plus.lower,
                fidelity_phi_plus_upper: i.fidelity_phi_plus.upper,
                chsh_s_lower: i.chsh_s.lower,
                chsh_s_upper: i.chsh_s.upper,
                purity_lower: i.purity.lower,
                purity_upper: i.purity.upper,
            }
            .serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<MetricIntervals>, D::Error> {
        let f = Option::<Flat>::deserialize(d)?;
        Ok(f.map(|f| MetricIntervals {
            concurrence: Interval { lower: f.concurrence_lower, upper: f.concurrence_upper },
            fidelity_phi_plus: Interval { lower: f.fidelity_phi_plus_lower, upper: f.fidelity_phi_plus_upper },
            chsh_s: Interval { lower: f.chsh_s_lower, upper: f.chsh_s_upper },
            purity: Interval { lower: f.purity_lower, upper: f.purity_upper },
        }))
    }
}

/// Wootters concurrence `max(0, s1 - s2 - s3 - s4)` with `s_i` the square
/// roots of the descending eigenvalues of `rho (Y(x)Y) rho* (Y(x)Y)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let m = rho.matrix();
    let yy = Mat4::kron(&pauli(2), &pauli(2));
    let flipped = yy * m.conj() * yy;
    let eig = eig_general(&(*m * flipped))?;
    let mut lambdas = [0.0; 4];
    for (l, e) in lambdas.iter_mut().zip(eig) {
        if e.re < -SPIN_FLIP_CLAMP {
            return Err(Error::InvalidState(format!(
                "spin-flip product has eigenvalue {:.3e} < 0",
                e.re
            )));
        }
        *l = e.re.max(0.0);
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let s = lambdas.map(f64::sqrt);
    Ok((s[0] - s[1] - s[2] - s[3]).max(0.0))
}

/// `T_ij = tr(rho sigma_i (x) sigma_j)` for `i, j` in `{x, y, z}`.
pub fn correlation_matrix(rho: &DensityMatrix) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let op = Mat4::kron(&pauli(i + 1), &pauli(j + 1));
            t[i][j] = (*rho.matrix() * op).trace().re;
        }
    }
    t
}

/// Maximal CHSH value over analyzer settings in the equatorial plane, i.e.
/// the settings an unbalanced interferometer reaches by tuning its phase.
///
/// For settings restricted to the x-y plane the maximum is
/// `2 sqrt(s1^2 + s2^2)` with `s_i` the singular values of the x-y block of
/// the correlation matrix, which is twice its Frobenius norm.
pub fn chsh_s(rho: &DensityMatrix) -> f64 {
    let t = correlation_matrix(rho);
    let frob2 = t[0][0].powi(2) + t[0][1].powi(2) + t[1][0].powi(2) + t[1][1].powi(2);
    (2.0 * frob2.sqrt()).min(2.0 * std::f64::consts::SQRT_2)
}

/// Maximal CHSH value over arbitrary local projective settings:
/// `2 sqrt(m1 + m2)` with `m1, m2` the two largest eigenvalues of `T^T T`.
pub fn chsh_s_unrestricted(rho: &DensityMatrix) -> f64 {
    let t = correlation_matrix(rho);
    let mut tt = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            tt[i * 3 + j] = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let (mut vals, _) = crate::util::jacobi_symmetric(&tt, 3);
    vals.sort_by(|a, b| b.total_cmp(a));
    (2.0 * (vals[0] + vals[1]).max(0.0).sqrt()).min(2.0 * std::f64::consts::SQRT_2)
}

/// `tr(rho^2)`
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    (*m * *m).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{tensor, Cplx, Ket2, Mat2, Tolerance};
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn printed() -> DensityMatrix {
        DensityMatrix::with_tolerance(
            crate::qcore::density_tests_reference(),
            Tolerance::printed(4),
        )
        .unwrap()
    }

    #[test]
    fn bell_state_metrics() {
        let rho = DensityMatrix::pure(&Ket4::phi_plus());
        assert!((concurrence(&rho).unwrap() - 1.0).abs() < 1e-7);
        assert!((chsh_s(&rho) - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((chsh_s_unrestricted(&rho) - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((purity(&rho) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_state_has_no_concurrence() {
        let rho = DensityMatrix::pure(&Ket4::basis(0));
        assert!(concurrence(&rho).unwrap().abs() < 1e-7);
    }

    #[test]
    fn maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed();
        assert_eq!(concurrence(&rho).unwrap(), 0.0);
        assert!(chsh_s(&rho).abs() < 1e-15);
        assert!((purity(&rho) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn printed_reference_metrics() {
        let rho = printed();
        let c = concurrence(&rho).unwrap();
        assert!((c - 0.96).abs() < 0.02, "{c}");
        // frozen from the printed entries: T_xx = 0.9636, T_yy = -0.9424,
        // T_xy = 0.1644, T_yx = 0.1168
        let t = correlation_matrix(&rho);
        assert!((t[0][0] - 0.9636).abs() < 1e-12);
        assert!((t[1][1] + 0.9424).abs() < 1e-12);
        assert!((t[0][1] - 0.1644).abs() < 1e-12);
        assert!((t[1][0] - 0.1168).abs() < 1e-12);
        let s = chsh_s(&rho);
        let oracle = 2.0 * (0.9636f64.powi(2) + 0.9424f64.powi(2) + 0.1644f64.powi(2) + 0.1168f64.powi(2)).sqrt();
        assert!((s - oracle).abs() < 1e-12);
        assert!((s - 2.70).abs() < 0.05, "{s}");
        // all-settings maximum is larger (uses the z axis as well)
        assert!(chsh_s_unrestricted(&rho) > s);
        // printed rounding leaves the purity 2e-5 below one
        assert!((purity(&rho) - 0.99998047).abs() < 1e-8);
        assert!((purity(&rho) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn werner_closed_forms() {
        for p in [0.0, 0.3, 0.5, 0.8, 1.0] {
            let rho = DensityMatrix::werner(p).unwrap();
            let c = concurrence(&rho).unwrap();
            assert!((c - ((3.0 * p - 1.0) / 2.0).max(0.0)).abs() < 1e-8, "p={p} c={c}");
            assert!((chsh_s(&rho) - 2.0 * SQRT_2 * p).abs() < 1e-8);
            assert!((chsh_s_unrestricted(&rho) - 2.0 * SQRT_2 * p).abs() < 1e-8);
        }
    }

    #[test]
    fn report_json_is_flat() {
        let mut r = MetricsReport::compute(&DensityMatrix::pure(&Ket4::phi_plus())).unwrap();
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 4);
        r.intervals = Some(MetricIntervals {
            concurrence: Interval { lower: 0.9, upper: 1.0 },
            fidelity_phi_plus: Interval { lower: 0.9, upper: 1.0 },
            chsh_s: Interval { lower: 2.5, upper: 2.8 },
            purity: Interval { lower: 0.9, upper: 1.0 },
        });
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v["chsh_s_lower"], 2.5);
        let back: MetricsReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    // ---- random states and local unitaries ----

    fn unitary2(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        // e^{i a} [[e^{i b} cos c, e^{i d} sin c], [-e^{-i d} sin c, e^{-i b} cos c]]
        let g = Cplx::from_polar(1.0, a);
        [
            [g * Cplx::from_polar(c.cos(), b), g * Cplx::from_polar(c.sin(), d)],
            [-g * Cplx::from_polar(c.sin(), -d), g * Cplx::from_polar(c.cos(), -b)],
        ]
    }

    fn phase2(theta: f64) -> Mat2 {
        unitary2(0.0, -theta / 2.0, 0.0, 0.0)
    }

    fn random_state(w: &[f64], amps: &[f64]) -> DensityMatrix {
        let mut m = Mat4::zeros();
        for k in 0..3 {
            let psi = Ket4([0, 1, 2, 3].map(|i| Cplx::new(amps[8 * k + 2 * i], amps[8 * k + 2 * i + 1])));
            m = m + psi.normalized().projector().scale(w[k].into());
        }
        m = m + Mat4::from_diag([w[3]; 4]);
        let tr = m.trace().re;
        DensityMatrix::new(m.scale((1.0 / tr).into()).hermitian_part()).unwrap()
    }

    fn rotate(rho: &DensityMatrix, u: &Mat4) -> DensityMatrix {
        DensityMatrix::new((*u * *rho.matrix() * u.adjoint()).hermitian_part()).unwrap()
    }

    fn state_strategy() -> impl Strategy<Value = DensityMatrix> {
        (
            prop::collection::vec(0.05..1.0f64, 4),
            prop::collection::vec(-1.0..1.0f64, 24),
        )
            .prop_filter_map("degenerate ket", |(w, a)| {
                let ok = (0..3).all(|k| a[8 * k..8 * k + 8].iter().map(|x| x * x).sum::<f64>() > 1e-2);
                ok.then(|| random_state(&w, &a))
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn concurrence_local_unitary_invariant(rho in state_strategy(), angles in prop::collection::vec(-3.2..3.2f64, 8)) {
            let u = Mat4::kron(
                &unitary2(angles[0], angles[1], angles[2], angles[3]),
                &unitary2(angles[4], angles[5], angles[6], angles[7]),
            );
            let c0 = concurrence(&rho).unwrap();
            let c1 = concurrence(&rotate(&rho, &u)).unwrap();
            prop_assert!((c0 - c1).abs() < 1e-8, "{c0} vs {c1}");
            let s0 = chsh_s_unrestricted(&rho);
            let s1 = chsh_s_unrestricted(&rotate(&rho, &u));
            prop_assert!((s0 - s1).abs() < 1e-8);
        }

        #[test]
        fn chsh_invariant_under_local_phases(rho in state_strategy(), a in -3.2..3.2f64, b in -3.2..3.2f64) {
            let u = Mat4::kron(&phase2(a), &phase2(b));
            prop_assert!((chsh_s(&rho) - chsh_s(&rotate(&rho, &u))).abs() < 1e-8);
        }

        #[test]
        fn transpose_symmetry(rho in state_strategy()) {
            let t = DensityMatrix::new(rho.matrix().transpose()).unwrap();
            prop_assert!((concurrence(&rho).unwrap() - concurrence(&t).unwrap()).abs() < 1e-8);
            prop_assert!((chsh_s(&rho) - chsh_s(&t)).abs() < 1e-8);
            prop_assert!((chsh_s_unrestricted(&rho) - chsh_s_unrestricted(&t)).abs() < 1e-8);
        }

        #[test]
        fn report_ranges(rho in state_strategy()) {
            let r = MetricsReport::compute(&rho).unwrap();
            prop_assert!((-1e-8..=1.0 + 1e-8).contains(&r.concurrence));
            prop_assert!((-1e-8..=1.0 + 1e-8).contains(&r.fidelity_phi_plus));
            prop_assert!((-1e-8..=2.0 * SQRT_2 + 1e-8).contains(&r.chsh_s));
            prop_assert!((0.25 - 1e-8..=1.0 + 1e-8).contains(&r.purity));
            prop_assert!(r.chsh_s <= chsh_s_unrestricted(&rho) + 1e-12);
        }
    }

    #[test]
    fn product_of_equator_states_has_no_violation() {
        let rho = DensityMatrix::pure(&tensor(&Ket2::plus(), &Ket2::left()));
        assert!(concurrence(&rho).unwrap() < 1e-7);
        assert!(chsh_s(&rho) <= 2.0 + 1e-12);
    }
}
