use super::{Cplx, Mat4, ONE, ZERO};
use crate::{Error, Result};

/// Hermiticity accepted by the Hermitian eigensolver, relative to `max(1, |M|_F)`.
const HERMITIAN_TOL: f64 = 1e-8;
const MAX_QR_ITERATIONS: usize = 400;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen {
    /// Descending.
    pub values: [f64; 4],
    /// `vectors[k]` is the normalized eigenvector for `values[k]`.
    pub vectors: [[Cplx; 4]; 4],
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for k in 0..4 {
            let v = &self.vectors[k];
            for i in 0..4 {
                for j in 0..4 {
                    m.0[i][j] += v[i] * v[j].conj() * self.values[k];
                }
            }
        }
        m
    }
}

fn check_hermitian(m: &Mat4) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let tolerance = HERMITIAN_TOL * m.frobenius_norm().max(1.0);
    let deviation = m.hermitian_deviation();
    if deviation > tolerance {
        return Err(Error::NotHermitian { deviation, tolerance });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn eig_hermitian(m: &Mat4) -> Result<[f64; 4]> {
    Ok(eigh_hermitian(m)?.values)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix by cyclic complex
/// Jacobi rotations.
pub fn eigh_hermitian(m: &Mat4) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let mut a = m.hermitian_part();
    let mut v = Mat4::identity();
    let scale = a.frobenius_norm();
    if scale > 0.0 {
        for _sweep in 0..60 {
            let off: f64 = (0..4)
                .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a.0[i][j].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-16 * scale {
                break;
            }
            for p in 0..3 {
                for q in p + 1..4 {
                    let apq = a.0[p][q];
                    let r = apq.norm();
                    if r <= 1e-300 {
                        continue;
                    }
                    // Phase rotation makes the pivot real, then a real Jacobi
                    // rotation annihilates it.
                    let phase = apq / r;
                    let theta = (a.0[q][q].re - a.0[p][p].re) / (2.0 * r);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let mut g = Mat4::identity();
                    g.0[p][p] = Cplx::new(c, 0.0);
                    g.0[p][q] = Cplx::new(s, 0.0);
                    g.0[q][p] = -phase.conj() * s;
                    g.0[q][q] = phase.conj() * c;
                    a = g.adjoint() * a * g;
                    a.0[p][q] = ZERO;
                    a.0[q][p] = ZERO;
                    v = v * g;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&x, &y| a.0[y][y].re.total_cmp(&a.0[x][x].re));
    let mut values = [0.0; 4];
    let mut vectors = [[ZERO; 4]; 4];
    for (k, &idx) in order.iter().enumerate() {
        values[k] = a.0[idx][idx].re;
        for i in 0..4 {
            vectors[k][i] = v.0[i][idx];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a general complex matrix: Householder reduction to
/// Hessenberg form followed by Wilkinson-shifted complex QR with deflation.
/// Sorted by descending real part.
pub fn eig_general(m: &Mat4) -> Result<[Cplx; 4]> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut h = hessenberg(m).0;
    let n = 4;
    let mut eig = [ZERO; 4];
    let mut hi = n - 1;
    let mut iterations = 0;
    let mut since_deflation = 0;
    let eps = f64::EPSILON;
    let tiny = f64::MIN_POSITIVE / eps;
    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[l][l - 1].norm();
            if s <= eps * (h[l][l].norm() + h[l - 1][l - 1].norm()) || s < tiny {
                h[l][l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iterations += 1;
        since_deflation += 1;
        if iterations > MAX_QR_ITERATIONS {
            return Err(Error::NoConvergence { iterations });
        }
        let mu = if since_deflation % 11 == 0 {
            // exceptional shift
            h[hi][hi] + Cplx::new(0.75 * h[hi][hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        for k in l..=hi {
            h[k][k] -= mu;
        }
        let mut rotations = [(0.0, ZERO); 3];
        for k in l..hi {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            rotations[k] = (c, s);
            for j in k..=hi {
                let x = h[k][j];
                let y = h[k + 1][j];
                h[k][j] = x * c + s * y;
                h[k + 1][j] = -s.conj() * x + y * c;
            }
        }
        for k in l..hi {
            let (c, s) = rotations[k];
            for i in l..=(k + 2).min(hi) {
                let x = h[i][k];
                let y = h[i][k + 1];
                h[i][k] = x * c + y * s.conj();
                h[i][k + 1] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[k][k] += mu;
        }
    }
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eig)
}

fn wilkinson_shift(a: Cplx, b: Cplx, c: Cplx, d: Cplx) -> Cplx {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Cplx, y: Cplx) -> (f64, Cplx) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn hessenberg(m: &Mat4) -> Mat4 {
    let mut h = *m;
    for k in 0..2 {
        let x: Vec<Cplx> = (k + 1..4).map(|i| h.0[i][k]).collect();
        let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * norm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for c in v.iter_mut() {
            *c /= vn;
        }
        // H <- (I - 2vv^dag) H (I - 2vv^dag), v living on rows/cols k+1..4
        for j in 0..4 {
            let dot: Cplx = (0..v.len()).map(|i| v[i].conj() * h.0[k + 1 + i][j]).sum();
            for i in 0..v.len() {
                h.0[k + 1 + i][j] -= v[i] * dot * 2.0;
            }
        }
        for i in 0..4 {
            let dot: Cplx = (0..v.len()).map(|j| h.0[i][k + 1 + j] * v[j]).sum();
            for j in 0..v.len() {
                h.0[i][k + 1 + j] -= dot * v[j].conj() * 2.0;
            }
        }
        for i in k + 2..4 {
            h.0[i][k] = ZERO;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli, Ket4};
    use proptest::prelude::*;

    // ---- independent oracle: characteristic polynomial + polynomial roots ----

    /// Monic characteristic polynomial coefficients `[c0, c1, c2, c3]` of
    /// `det(lambda I - M) = lambda^4 + c3 lambda^3 + ... + c0` (Faddeev-LeVerrier).
    fn char_poly(m: &Mat4) -> [Cplx; 4] {
        let mut coeffs = [ZERO; 5];
        coeffs[4] = ONE;
        let mut mk = Mat4::zeros();
        for k in 1..=4 {
            let mut prev = mk;
            for i in 0..4 {
                prev.0[i][i] += coeffs[5 - k];
            }
            mk = *m * prev;
            coeffs[4 - k] = -mk.trace() / k as f64;
        }
        [coeffs[0], coeffs[1], coeffs[2], coeffs[3]]
    }

    fn poly_roots(c: [Cplx; 4]) -> [Cplx; 4] {
        // Aberth-Ehrlich on the monic quartic.
        let p = |z: Cplx| c[0] + z * (c[1] + z * (c[2] + z * (c[3] + z)));
        let dp = |z: Cplx| c[1] + z * (c[2] * 2.0 + z * (c[3] * 3.0 + z * 4.0));
        let radius = 1.0 + c.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let mut z: Vec<Cplx> = (0..4)
            .map(|k| Cplx::from_polar(radius * 0.7, 0.4 + k as f64 * std::f64::consts::TAU / 4.0))
            .collect();
        for _ in 0..500 {
            for i in 0..4 {
                let ratio = p(z[i]) / dp(z[i]);
                let sum: Cplx = (0..4).filter(|&j| j != i).map(|j| ONE / (z[i] - z[j])).sum();
                let w = ratio / (ONE - ratio * sum);
                if w.is_finite() {
                    z[i] -= w;
                }
            }
        }
        [z[0], z[1], z[2], z[3]]
    }

    fn match_sets(a: &[Cplx; 4], b: &[Cplx; 4]) -> f64 {
        // greedy matching is enough for 4 well-separated or degenerate roots
        let mut used = [false; 4];
        let mut worst = 0.0_f64;
        for x in a {
            let (j, d) = (0..4)
                .filter(|&j| !used[j])
                .map(|j| (j, (b[j] - x).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    fn random_mat(vals: &[f64]) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = Cplx::new(vals[2 * (4 * i + j)], vals[2 * (4 * i + j) + 1]);
            }
        }
        m
    }

    #[test]
    fn hermitian_identity_quarter() {
        let v = eig_hermitian(&Mat4::identity().scale(Cplx::new(0.25, 0.0))).unwrap();
        for x in v {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn hermitian_diagonal_sorted() {
        let v = eig_hermitian(&Mat4::from_diag([0.2, 0.4, 0.1, 0.3])).unwrap();
        let want = [0.4, 0.3, 0.2, 0.1];
        for i in 0..4 {
            assert!((v[i] - want[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn hermitian_rejects_non_hermitian() {
        let mut m = Mat4::identity();
        m.0[0][1] = Cplx::new(0.1, 0.0);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn hermitian_vectors_reconstruct() {
        let m = Mat4::kron(&pauli(1), &pauli(2)) + Mat4::kron(&pauli(3), &pauli(0)).scale(Cplx::new(0.3, 0.0));
        let e = eigh_hermitian(&m).unwrap();
        assert!((e.reconstruct() - m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn general_diagonal() {
        let mut m = Mat4::from_diag([1.0, -2.0, 0.5, 3.0]);
        m.0[2][2] = Cplx::new(0.5, 1.5);
        let e = eig_general(&m).unwrap();
        assert!((e[0] - Cplx::new(3.0, 0.0)).norm() < 1e-14);
        assert!((e[1] - ONE).norm() < 1e-14);
        assert!((e[2] - Cplx::new(0.5, 1.5)).norm() < 1e-14);
        assert!((e[3] - Cplx::new(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn general_nilpotent() {
        let mut m = Mat4::zeros();
        m.0[0][1] = ONE;
        m.0[0][3] = Cplx::new(2.0, -1.0);
        m.0[1][2] = Cplx::new(-0.5, 0.0);
        m.0[2][3] = ONE;
        for e in eig_general(&m).unwrap() {
            assert!(e.norm() < 1e-12);
        }
    }

    #[test]
    fn general_spin_flip_product_of_bell_state() {
        // rho * (YY) rho* (YY) for |Phi+> is the projector itself: spectrum (1,0,0,0)
        let rho = Ket4::phi_plus().projector();
        let yy = Mat4::kron(&pauli(2), &pauli(2));
        let r = rho * (yy * rho.conj() * yy);
        let e = eig_general(&r).unwrap();
        assert!((e[0] - ONE).norm() < 1e-12);
        for x in &e[1..] {
            assert!(x.norm() < 1e-12);
        }
    }

    #[test]
    fn general_rotation_block_complex_pair() {
        let mut m = Mat4::from_diag([0.0, 0.0, 2.0, 5.0]);
        m.0[0][1] = Cplx::new(-1.0, 0.0);
        m.0[1][0] = ONE;
        let e = eig_general(&m).unwrap();
        let want = [Cplx::new(5.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.0, 1.0), Cplx::new(0.0, -1.0)];
        assert!(match_sets(&e, &want) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn general_matches_char_poly_oracle(vals in prop::collection::vec(-1.0..1.0f64, 32)) {
            let m = random_mat(&vals);
            let e = eig_general(&m).unwrap();
            let roots = poly_roots(char_poly(&m));
            prop_assert!(match_sets(&e, &roots) < 1e-8, "{:?} vs {:?}", e, roots);
            let norm = m.frobenius_norm();
            for lambda in e {
                let shifted = m - Mat4::identity().scale(lambda);
                prop_assert!(shifted.det().norm() < 1e-6 * norm.powi(4));
            }
        }

        #[test]
        fn hermitian_matches_char_poly_oracle(vals in prop::collection::vec(-1.0..1.0f64, 32)) {
            let a = random_mat(&vals);
            let h = a + a.adjoint();
            let e = eig_hermitian(&h).unwrap();
            let mut roots: Vec<f64> = poly_roots(char_poly(&h)).iter().map(|z| z.re).collect();
            roots.sort_by(|x, y| y.total_cmp(x));
            for i in 0..4 {
                let scale = e[i].abs().max(1.0);
                prop_assert!((e[i] - roots[i]).abs() < 1e-9 * scale, "{:?} vs {:?}", e, roots);
            }
            prop_assert!(e.windows(2).all(|w| w[0] >= w[1]));
            let trace: f64 = e.iter().sum();
            prop_assert!((trace - h.trace().re).abs() < 1e-10);
        }
    }
}
