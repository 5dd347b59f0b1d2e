use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::{Cplx, Mat4, I, ONE, ZERO};

/// Single time-bin qubit in the basis `{|1>, |2>}` (early, late).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket2(pub [Cplx; 2]);

impl Ket2 {
    pub fn early() -> Self {
        Ket2([ONE, ZERO])
    }

    pub fn late() -> Self {
        Ket2([ZERO, ONE])
    }

    /// `(|1> + |2>)/sqrt2`
    pub fn plus() -> Self {
        Self::equator(0.0)
    }

    /// `(|1> + i|2>)/sqrt2`
    pub fn left() -> Self {
        Ket2([ONE * FRAC_1_SQRT_2, I * FRAC_1_SQRT_2])
    }

    /// `(|1> + e^{i phase}|2>)/sqrt2`, the state selected by the central time
    /// bin of an analysis interferometer with phase `phase`.
    pub fn equator(phase: f64) -> Self {
        Ket2([ONE * FRAC_1_SQRT_2, Cplx::from_polar(FRAC_1_SQRT_2, phase)])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Ket2([self.0[0] / n, self.0[1] / n])
    }
}

impl Mul<Ket2> for Cplx {
    type Output = Ket2;
    fn mul(self, k: Ket2) -> Ket2 {
        Ket2([self * k.0[0], self * k.0[1]])
    }
}

/// Two-qubit ket in the basis `{|11>, |12>, |21>, |22>}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "KetJson", try_from = "KetJson")]
pub struct Ket4(pub [Cplx; 4]);

impl Ket4 {
    pub fn basis(index: usize) -> Self {
        let mut a = [ZERO; 4];
        a[index] = ONE;
        Ket4(a)
    }

    /// `(|11> + |22>)/sqrt2`
    pub fn phi_plus() -> Self {
        let h = ONE * FRAC_1_SQRT_2;
        Ket4([h, ZERO, ZERO, h])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Ket4(self.0.map(|c| c / n))
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Ket4) -> Cplx {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|self><self|`
    pub fn projector(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[i] * self.0[j].conj();
            }
        }
        m
    }

    /// Entry-wise comparison up to a global phase.
    pub fn same_ray(&self, other: &Ket4, tol: f64) -> bool {
        (self.inner(other).norm() - self.norm() * other.norm()).abs() <= tol
    }
}

/// Kronecker product `a (x) b` in the fixed basis order.
pub fn tensor(a: &Ket2, b: &Ket2) -> Ket4 {
    Ket4([
        a.0[0] * b.0[0],
        a.0[0] * b.0[1],
        a.0[1] * b.0[0],
        a.0[1] * b.0[1],
    ])
}

#[derive(Serialize, Deserialize)]
struct KetJson {
    re: [f64; 4],
    im: [f64; 4],
}

impl From<Ket4> for KetJson {
    fn from(k: Ket4) -> Self {
        KetJson {
            re: k.0.map(|c| c.re),
            im: k.0.map(|c| c.im),
        }
    }
}

impl TryFrom<KetJson> for Ket4 {
    type Error = String;
    fn try_from(j: KetJson) -> Result<Self, String> {
        let mut a = [ZERO; 4];
        for i in 0..4 {
            if !j.re[i].is_finite() || !j.im[i].is_finite() {
                return Err("non-finite ket amplitude".into());
            }
            a[i] = Cplx::new(j.re[i], j.im[i]);
        }
        Ok(Ket4(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &Ket4, b: [Cplx; 4]) -> bool {
        a.0.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-15)
    }

    #[test]
    fn basis_product() {
        let k = tensor(&Ket2::early(), &Ket2::early());
        assert!(close(&k, [ONE, ZERO, ZERO, ZERO]));
    }

    #[test]
    fn plus_plus() {
        let k = tensor(&Ket2::plus(), &Ket2::plus());
        assert!(close(&k, [ONE * 0.5; 4]));
        assert!((k.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_left_hand_expansion() {
        // (|1>+|2>)(|1>+i|2>)/2 = (|11> + i|12> + |21> + i|22>)/2
        let k = tensor(&Ket2::plus(), &Ket2::left());
        let h = 0.5;
        assert!(close(&k, [ONE * h, I * h, ONE * h, I * h]));
    }

    #[test]
    fn equator_matches_named_states() {
        let l = Ket2::equator(std::f64::consts::FRAC_PI_2);
        assert!((l.0[1] - Ket2::left().0[1]).norm() < 1e-15);
    }

    #[test]
    fn ket_json_shape() {
        let s = serde_json::to_string(&Ket4::basis(3)).unwrap();
        assert_eq!(s, r#"{"re":[0.0,0.0,0.0,1.0],"im":[0.0,0.0,0.0,0.0]}"#);
        let back: Ket4 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Ket4::basis(3));
    }

    fn ket2() -> impl Strategy<Value = Ket2> {
        prop::array::uniform4(-1.0..1.0f64)
            .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|a| Ket2([Cplx::new(a[0], a[1]), Cplx::new(a[2], a[3])]).normalized())
    }

    proptest! {
        #[test]
        fn tensor_is_bilinear(a in ket2(), b in ket2(), re in -3.0..3.0f64, im in -3.0..3.0f64) {
            let alpha = Cplx::new(re, im);
            let lhs = tensor(&(alpha * a), &b);
            let rhs = tensor(&a, &b).0.map(|c| alpha * c);
            for i in 0..4 {
                prop_assert!((lhs.0[i] - rhs[i]).norm() < 1e-12);
            }
            let lhs = tensor(&a, &(alpha * b));
            for i in 0..4 {
                prop_assert!((lhs.0[i] - rhs[i]).norm() < 1e-12);
            }
        }

        #[test]
        fn tensor_of_normalized_is_normalized(a in ket2(), b in ket2()) {
            prop_assert!((tensor(&a, &b).norm() - 1.0).abs() < 1e-12);
        }
    }
}
