use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use super::{Cplx, ONE, ZERO};
use crate::{Error, Result};

pub type Mat2 = [[Cplx; 2]; 2];

/// General complex 4x4 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixJson", try_from = "MatrixJson")]
pub struct Mat4(pub [[Cplx; 4]; 4]);

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::from_diag([1.0; 4])
    }

    pub fn from_diag(d: [f64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = Cplx::new(d[i], 0.0);
        }
        m
    }

    pub fn from_parts(re: [[f64; 4]; 4], im: [[f64; 4]; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = Cplx::new(re[i][j], im[i][j]);
            }
        }
        m
    }

    pub fn kron(a: &Mat2, b: &Mat2) -> Self {
        let mut m = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m.0[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Mat4(self.0.map(|row| row.map(|c| c.conj())))
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn scale(&self, s: Cplx) -> Self {
        Mat4(self.0.map(|row| row.map(|c| c * s)))
    }

    pub fn trace(&self) -> Cplx {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `max_ij |m_ij - conj(m_ji)|`
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0_f64;
        for i in 0..4 {
            for j in i..4 {
                dev = dev.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        dev
    }

    /// `(M + M^dag)/2`
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(Cplx::new(0.5, 0.0))
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> Cplx {
        let mut a = self.0;
        let mut det = ONE;
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
                .unwrap();
            if a[pivot][col].norm() == 0.0 {
                return ZERO;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..4 {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
        det
    }

    /// `<u| M |v>`
    pub fn sandwich(&self, u: &[Cplx; 4], v: &[Cplx; 4]) -> Cplx {
        let mut acc = ZERO;
        for i in 0..4 {
            let mut row = ZERO;
            for j in 0..4 {
                row += self.0[i][j] * v[j];
            }
            acc += u[i].conj() * row;
        }
        acc
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                for j in 0..4 {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(self, rhs: Mat4) -> Mat4 {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }
}

impl Sub for Mat4 {
    type Output = Mat4;
    fn sub(self, rhs: Mat4) -> Mat4 {
        self + rhs.scale(-ONE)
    }
}

/// On-disk matrix format: separate real and imaginary 4x4 arrays, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

impl From<Mat4> for MatrixJson {
    fn from(m: Mat4) -> Self {
        MatrixJson {
            re: m.0.map(|row| row.map(|c| c.re)),
            im: m.0.map(|row| row.map(|c| c.im)),
        }
    }
}

impl TryFrom<MatrixJson> for Mat4 {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        let m = Mat4::from_parts(j.re, j.im);
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}
