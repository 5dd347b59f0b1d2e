use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::linear_reconstruct;
use crate::coincidence::ProjectionRecord;
use crate::qcore::{eigh_hermitian, Cplx, DensityMatrix, Mat4, Tolerance};
use crate::{Error, Result};

/// Real parameters of the lower-triangular factor `T`: four real diagonal
/// entries, then real/imaginary parts of the six sub-diagonal entries.
pub const N_PARAMS: usize = 16;

const OFF_DIAG: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];
const RANDOM_START_SEED: u64 = 0x7b1d_5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// `sum (m - n)^2 / (2 max(m, eps))`
    Gaussian,
    /// Negative Poisson log-likelihood `sum (m - n ln m)`.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    pub cost: CostKind,
    /// Count floor in the Gaussian cost denominator.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Relative cost decrease per iteration below which the run stops.
    pub tolerance: f64,
    /// Random starts in addition to the identity and linear-estimate starts.
    pub random_starts: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { cost: CostKind::Gaussian, epsilon: 0.5, max_iterations: 2000, tolerance: 1e-10, random_starts: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    /// Cost at the returned point, in count units.
    pub final_cost: f64,
    pub converged: bool,
    pub starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Optimum in normalized-count units (total count 1); usable as a warm start.
    pub params: Vec<f64>,
    pub report: OptimizerReport,
}

fn unpack(t: &[f64]) -> [[Cplx; 4]; 4] {
    let mut m = [[Cplx::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        m[i][i] = Cplx::new(t[i], 0.0);
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        m[i][j] = Cplx::new(t[4 + 2 * k], t[5 + 2 * k]);
    }
    m
}

fn gram(t: &[f64]) -> Mat4 {
    let tm = unpack(t);
    let mut x = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            x.0[i][j] = (0..4).map(|k| tm[k][i].conj() * tm[k][j]).sum();
        }
    }
    x
}

/// `rho = T^dag T / tr(T^dag T)`; `None` when `T` vanishes.
pub fn rho_from_params(t: &[f64]) -> Option<Mat4> {
    assert_eq!(t.len(), N_PARAMS);
    let x = gram(t);
    let tr = x.trace().re;
    (tr > 0.0 && tr.is_finite()).then(|| x.scale((1.0 / tr).into()))
}

/// Records prepared for repeated cost evaluation, in canonical order and
/// with counts normalized to unit total.
struct Problem {
    kets: Vec<[Cplx; 4]>,
    weights: Vec<f64>,
    counts: Vec<f64>,
    total: f64,
    epsilon: f64,
    kind: CostKind,
}

fn canonical_cmp(a: &ProjectionRecord, b: &ProjectionRecord) -> Ordering {
    let key = |r: &ProjectionRecord| {
        let amps: Vec<u64> = r.projector.0.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect();
        (r.setting, r.source, amps, r.count, r.normalization.to_bits())
    };
    key(a).cmp(&key(b))
}

impl Problem {
    fn new(records: &[ProjectionRecord], opts: &MleOptions) -> Result<Self> {
        let mut sorted: Vec<&ProjectionRecord> = records.iter().collect();
        sorted.sort_by(|a, b| canonical_cmp(a, b));
        let total: f64 = sorted.iter().map(|r| r.count as f64).sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("MLE needs at least one nonzero count".into()));
        }
        Ok(Problem {
            kets: sorted.iter().map(|r| r.projector.0).collect(),
            weights: sorted.iter().map(|r| r.normalization).collect(),
            counts: sorted.iter().map(|r| r.count as f64 / total).collect(),
            total,
            epsilon: opts.epsilon / total,
            kind: opts.cost,
        })
    }

    /// Cost and gradient. With `v = T psi`, the model is `m = w |v|^2` and
    /// `d|v|^2 / dT_ij = 2 conj(v_i) psi_j` split into real/imaginary parts.
    fn eval(&self, t: &[f64], grad: &mut [f64]) -> f64 {
        let tm = unpack(t);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut cost = 0.0;
        for ((psi, &w), &n) in self.kets.iter().zip(&self.weights).zip(&self.counts) {
            let v: [Cplx; 4] = std::array::from_fn(|i| (0..=i).map(|j| tm[i][j] * psi[j]).sum());
            let m = w * v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let dm = match self.kind {
                CostKind::Gaussian => {
                    if m > self.epsilon {
                        cost += (m - n).powi(2) / (2.0 * m);
                        (m * m - n * n) / (2.0 * m * m)
                    } else {
                        cost += (m - n).powi(2) / (2.0 * self.epsilon);
                        (m - n) / self.epsilon
                    }
                }
                CostKind::Poisson => {
                    let ms = m.max(1e-300);
                    cost += m - if n > 0.0 { n * ms.ln() } else { 0.0 };
                    1.0 - n / ms
                }
            };
            let f = dm * w * 2.0;
            for i in 0..4 {
                grad[i] += f * (v[i].conj() * psi[i]).re;
            }
            for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
                let z = v[i].conj() * psi[j];
                grad[4 + 2 * k] += f * z.re;
                grad[5 + 2 * k] -= f * z.im;
            }
        }
        cost
    }
}

struct Run {
    t: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

/// BFGS on the inverse Hessian with a backtracking Armijo line search.
fn bfgs(p: &Problem, start: Vec<f64>, opts: &MleOptions) -> Run {
    let n = N_PARAMS;
    let mut x = start;
    let mut g = vec![0.0; n];
    let mut f = p.eval(&x, &mut g);
    let mut h = vec![0.0; n * n];
    let reset = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    reset(&mut h);
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut quiet = 0;
    for it in 1..=opts.max_iterations {
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            reset(&mut h);
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        if slope == 0.0 {
            return Run { t: x, cost: f, iterations: it, converged: true };
        }
        let mut step = 1.0;
        let mut fnew;
        loop {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            fnew = p.eval(&xn, &mut gn);
            if fnew.is_finite() && fnew <= f + 1e-4 * step * slope {
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Run { t: x, cost: f, iterations: it, converged: true };
            }
        }
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let decrease = f - fnew;
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        f = fnew;
        // floor keeps the relative test meaningful when the cost goes to zero
        quiet = if decrease <= opts.tolerance * f.max(1e-12) { quiet + 1 } else { 0 };
        if quiet >= 2 {
            return Run { t: x, cost: f, iterations: it, converged: true };
        }
    }
    Run { t: x, cost: f, iterations: opts.max_iterations, converged: false }
}

/// Parameters of `T` with `T^dag T = x` for a positive definite `x`:
/// reverse-order Cholesky `J x J = L L^dag`, then `T = J L^dag J`.
fn params_from_gram(x: &Mat4) -> Option<Vec<f64>> {
    let r = |i: usize| 3 - i;
    let mut a = [[Cplx::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = x.0[r(i)][r(j)];
        }
    }
    let mut l = [[Cplx::new(0.0, 0.0); 4]; 4];
    for j in 0..4 {
        let d = a[j][j].re - (0..j).map(|k| l[j][k].norm_sqr()).sum::<f64>();
        if !(d > 0.0) {
            return None;
        }
        l[j][j] = Cplx::new(d.sqrt(), 0.0);
        for i in j + 1..4 {
            let s: Cplx = (0..j).map(|k| l[i][k] * l[j][k].conj()).sum();
            l[i][j] = (a[i][j] - s) / l[j][j].re;
        }
    }
    // T[i][j] = conj(L[r(j)][r(i)])
    let t_at = |i: usize, j: usize| l[r(j)][r(i)].conj();
    let mut t = vec![0.0; N_PARAMS];
    for i in 0..4 {
        t[i] = t_at(i, i).re;
    }
    for (k, &(i, j)) in OFF_DIAG.iter().enumerate() {
        let z = t_at(i, j);
        t[4 + 2 * k] = z.re;
        t[5 + 2 * k] = z.im;
    }
    Some(t)
}

fn starts(p: &Problem, records: &[ProjectionRecord], opts: &MleOptions) -> Vec<Vec<f64>> {
    // `X = c I` reproduces the total count when c = 1 / sum(w)
    let c = 1.0 / p.weights.iter().sum::<f64>();
    let mut out = Vec::new();
    let mut id = vec![0.0; N_PARAMS];
    id[..4].iter_mut().for_each(|v| *v = c.sqrt());
    out.push(id);

    let lin = linear_reconstruct(records);
    if lin.rank == 16 {
        if let Ok(e) = eigh_hermitian(&lin.rho) {
            // clip to PSD and mix in a little identity so the factor exists
            let mut x = Mat4::zeros();
            for (val, vec) in e.values.iter().zip(&e.vectors) {
                let psi = crate::qcore::Ket4(*vec);
                x = x + psi.projector().scale((val.max(0.0) + 1e-3).into());
            }
            let x = x.scale((c / x.trace().re * 4.0).into());
            if let Some(t) = params_from_gram(&x) {
                out.push(t);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_START_SEED);
    for _ in 0..opts.random_starts {
        let t: Vec<f64> = (0..N_PARAMS)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * c.sqrt()
            })
            .collect();
        out.push(t);
    }
    out
}

fn finish(p: &Problem, best: Run, starts: usize) -> Result<MleResult> {
    let rho = rho_from_params(&best.t).ok_or_else(|| Error::InvalidState("MLE collapsed to T = 0".into()))?;
    Ok(MleResult {
        rho: DensityMatrix::with_tolerance(rho, Tolerance::RECONSTRUCTED)?,
        params: best.t,
        report: OptimizerReport {
            iterations: best.iterations,
            // costs were evaluated on counts divided by the total
            final_cost: best.cost * p.total,
            converged: best.converged,
            starts,
        },
    })
}

/// Maximum-likelihood density matrix over `rho = T^dag T / tr(T^dag T)`.
///
/// The count scale is absorbed into `T`, so rescaling all counts leaves the
/// estimate unchanged. Records are put in canonical order first, making the
/// result independent of record order. Non-convergence is reported in the
/// optimizer report and the best point found is returned.
pub fn mle_reconstruct(records: &[ProjectionRecord], opts: &MleOptions) -> Result<MleResult> {
    let p = Problem::new(records, opts)?;
    let starts = starts(&p, records, opts);
    let n = starts.len();
    let best = starts
        .into_iter()
        .map(|s| bfgs(&p, s, opts))
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("at least one start");
    finish(&p, best, n)
}

/// Single BFGS run from `warm` (normalized-count parameters), as used for
/// Monte Carlo resamples around a known optimum.
pub(crate) fn mle_from(records: &[ProjectionRecord], opts: &MleOptions, warm: &[f64]) -> Result<MleResult> {
    let p = Problem::new(records, opts)?;
    let run = bfgs(&p, warm.to_vec(), opts);
    finish(&p, run, 1)
}
