//! Krylov approximations of `exp(tA) v` and `phi1(tA) v`.
//!
//! The Arnoldi basis is grown until the a-posteriori residual estimate meets
//! the tolerance for the whole remaining interval; only when the subspace
//! limit is hit is the interval split into sub-steps. `phi1` is obtained from
//! the exponential of the operator augmented by one column, so no inverse of
//! `A` is ever formed.

use super::dense::{expm, DenseMatrix};
use super::sparse::{norm2, CsrMatrix};
use crate::error::{invalid, Error, Result};

/// A linear map given only through its action on vectors.
pub trait OperatorAction: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Any upper bound-ish estimate of the operator norm; used to pick the
    /// first sub-step when the subspace limit is reached.
    fn norm_estimate(&self) -> f64;
    fn symmetric_hint(&self) -> bool {
        false
    }
}

impl OperatorAction for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y)
    }
    fn norm_estimate(&self) -> f64 {
        self.norm_inf()
    }
}

impl OperatorAction for DenseMatrix {
    fn dim(&self) -> usize {
        DenseMatrix::dim(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.mul_vec(x));
    }
    fn norm_estimate(&self) -> f64 {
        self.norm_inf()
    }
}

/// `x -> -M_L^{-1} K x + diag(shift) x`: the lumped-mass semidiscrete
/// generator, optionally perturbed by a diagonal Jacobian.
#[derive(Debug, Clone, Copy)]
pub struct LumpedGenerator<'a> {
    pub stiffness: &'a CsrMatrix,
    pub inv_mass: &'a [f64],
    pub shift: Option<&'a [f64]>,
}

impl OperatorAction for LumpedGenerator<'_> {
    fn dim(&self) -> usize {
        self.inv_mass.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.stiffness.mul_vec_into(x, y);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi *= -self.inv_mass[i];
        }
        if let Some(s) = self.shift {
            for ((yi, si), xi) in y.iter_mut().zip(s).zip(x) {
                *yi += si * xi;
            }
        }
    }

    fn norm_estimate(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.dim() {
            let row: f64 = self.stiffness.row(i).map(|(_, v)| v.abs()).sum();
            let extra = self.shift.map_or(0.0, |s| s[i].abs());
            best = best.max(row * self.inv_mass[i] + extra);
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    pub max_subspace: usize,
    pub tolerance: f64,
    /// Upper bound on rejected or accepted sub-steps before giving up.
    pub max_restarts: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            max_subspace: 64,
            tolerance: 1e-8,
            max_restarts: 10_000,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("krylov.tolerance", "must be positive"));
        }
        if self.max_subspace < 2 {
            return Err(invalid("krylov.max_subspace", "must be at least 2"));
        }
        Ok(())
    }
}

/// `A` bordered by the column `w / eta`: `[x; s] -> [A x + s w / eta; 0]`.
struct Augmented<'a> {
    inner: &'a dyn OperatorAction,
    column: Vec<f64>,
}

impl OperatorAction for Augmented<'_> {
    fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.inner.dim();
        self.inner.apply(&x[..n], &mut y[..n]);
        let s = x[n];
        for (yi, ci) in y[..n].iter_mut().zip(&self.column) {
            *yi += s * ci;
        }
        y[n] = 0.0;
    }

    fn norm_estimate(&self) -> f64 {
        self.inner.norm_estimate() + self.column.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// `exp(t A) v`
pub fn expm_action(op: &dyn OperatorAction, t: f64, v: &[f64], cfg: &KrylovConfig) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(invalid("t", "must be nonnegative"));
    }
    krylov_exp(op, t, v, v.len(), cfg)
}

/// `phi1(t A) v` with `phi1(z) = (e^z - 1) / z`.
pub fn phi1_action(op: &dyn OperatorAction, t: f64, v: &[f64], cfg: &KrylovConfig) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let zero = vec![0.0; v.len()];
    let mut out = exp_affine_action(op, t, &zero, v, cfg)?;
    for x in &mut out {
        *x /= t;
    }
    Ok(out)
}

/// `exp(t A) v + t phi1(t A) w`: the exact flow of `u' = A u + w` over time `t`,
/// computed with a single augmented Krylov exponential.
pub fn exp_affine_action(
    op: &dyn OperatorAction,
    t: f64,
    v: &[f64],
    w: &[f64],
    cfg: &KrylovConfig,
) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(invalid("t", "must be nonnegative"));
    }
    let wnorm = norm2(w);
    if wnorm == 0.0 || t == 0.0 {
        return krylov_exp(op, t, v, v.len(), cfg);
    }
    // Balance the extra coordinate against the size of the forcing response.
    let eta = t * wnorm;
    let aug = Augmented {
        inner: op,
        column: w.iter().map(|x| x / eta).collect(),
    };
    let mut start = Vec::with_capacity(v.len() + 1);
    start.extend_from_slice(v);
    start.push(eta);
    let mut out = krylov_exp(&aug, t, &start, v.len(), cfg)?;
    out.pop();
    Ok(out)
}

const GAMMA: f64 = 0.9;

fn checkpoint(j: usize) -> bool {
    j <= 12 || j % 4 == 0
}

fn krylov_exp(op: &dyn OperatorAction, t: f64, v: &[f64], measured: usize, cfg: &KrylovConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = op.dim();
    assert_eq!(v.len(), n, "vector length must match operator dimension");
    let vnorm = norm2(v);
    if t == 0.0 || vnorm == 0.0 || n == 0 {
        return Ok(v.to_vec());
    }
    let m_max = cfg.max_subspace.min(n);
    // Error budget per unit time, relative to the size of the current iterate
    // restricted to its first `measured` coordinates.
    let budget = |basis: &[Vec<f64>], beta: f64, coef: &[f64], tau: f64| {
        0.5 * cfg.tolerance * beta * iterate_norm(basis, coef, measured).max(1e-300) * tau / t
    };
    let breakdown = 1e-14 * op.norm_estimate().max(f64::MIN_POSITIVE);

    let mut w = v.to_vec();
    let mut t_now = 0.0;
    let mut tau_next = t;
    let mut restarts = 0usize;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    let mut hess = vec![vec![0.0; m_max]; m_max + 1];
    let mut work = vec![0.0; n];

    while t_now < t {
        let beta = norm2(&w);
        if beta == 0.0 {
            break;
        }
        let remaining = t - t_now;
        let mut tau = tau_next.min(remaining);
        basis.clear();
        basis.push(w.iter().map(|x| x / beta).collect());
        for row in hess.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }

        let mut accepted: Option<(Vec<f64>, f64, f64)> = None;
        let mut dim_used = 0usize;
        for j in 0..m_max {
            op.apply(&basis[j], &mut work);
            for (i, b) in basis.iter().enumerate() {
                let h: f64 = b.iter().zip(&work).map(|(a, b)| a * b).sum();
                hess[i][j] = h;
                for (wk, bk) in work.iter_mut().zip(b) {
                    *wk -= h * bk;
                }
            }
            let h_next = norm2(&work);
            hess[j + 1][j] = h_next;
            let k = j + 1;
            if h_next <= breakdown {
                // Invariant subspace: the projection is exact for any step.
                tau = remaining;
                let f = expm(&hessenberg(&hess, k, None).scaled(tau));
                accepted = Some((f.column(0)[..k].to_vec(), tau, 0.0));
                dim_used = k;
                break;
            }
            basis.push(work.iter().map(|x| x / h_next).collect());
            if k == m_max || (k >= 2 && checkpoint(k)) {
                let f = expm(&hessenberg(&hess, k, Some(h_next)).scaled(tau));
                let err = beta * f[(k, 0)].abs();
                let mut allowed = budget(&basis, beta, &f.column(0)[..k], tau);
                if err <= allowed {
                    accepted = Some((f.column(0)[..k].to_vec(), tau, err));
                    dim_used = k;
                    break;
                }
                if k == m_max {
                    // Shrink the step on the fixed basis until the estimate passes.
                    let mut err = err;
                    loop {
                        restarts += 1;
                        if restarts > cfg.max_restarts || tau < 1e-14 * t {
                            return Err(Error::KrylovStagnation {
                                t_reached: t_now,
                                t_target: t,
                            });
                        }
                        let ratio = (allowed / err).max(1e-4);
                        tau *= (GAMMA * ratio.powf(1.0 / k as f64)).min(0.5);
                        let f = expm(&hessenberg(&hess, k, Some(h_next)).scaled(tau));
                        err = beta * f[(k, 0)].abs();
                        allowed = budget(&basis, beta, &f.column(0)[..k], tau);
                        if err <= allowed {
                            accepted = Some((f.column(0)[..k].to_vec(), tau, err));
                            dim_used = k;
                            break;
                        }
                    }
                    break;
                }
            }
        }

        let (coef, tau_done, err) = accepted.expect("Krylov step either accepts or returns");
        let step_budget = budget(&basis, beta, &coef, tau_done);
        let mut next = vec![0.0; n];
        for (c, b) in coef.iter().zip(&basis[..dim_used]) {
            let s = beta * c;
            for (x, bi) in next.iter_mut().zip(b) {
                *x += s * bi;
            }
        }
        w = next;
        t_now += tau_done;
        if remaining - tau_done <= 1e-15 * t {
            t_now = t;
        }
        tau_next = if err > 0.0 {
            let grow = GAMMA * (step_budget / err).powf(1.0 / dim_used.max(1) as f64);
            tau_done * grow.clamp(0.2, 10.0)
        } else {
            t
        };
        restarts += 1;
        if restarts > cfg.max_restarts {
            return Err(Error::KrylovStagnation {
                t_reached: t_now,
                t_target: t,
            });
        }
    }
    Ok(w)
}

/// Norm of the first `measured` entries of `sum_i coef_i basis_i`.
fn iterate_norm(basis: &[Vec<f64>], coef: &[f64], measured: usize) -> f64 {
    if basis.first().is_none_or(|b| b.len() == measured) {
        return norm2(coef);
    }
    let mut x = vec![0.0; measured];
    for (c, b) in coef.iter().zip(basis) {
        for (xi, bi) in x.iter_mut().zip(&b[..measured]) {
            *xi += c * bi;
        }
    }
    norm2(&x)
}

/// Leading `k x k` Hessenberg block, optionally bordered for the error estimate:
/// row `k` carries `h_{k+1,k}` and entry `(k+1, k)` is 1.
fn hessenberg(hess: &[Vec<f64>], k: usize, border: Option<f64>) -> DenseMatrix {
    let size = if border.is_some() { k + 2 } else { k };
    let mut m = DenseMatrix::zeros(size);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = hess[i][j];
        }
    }
    if let Some(h) = border {
        m[(k, k - 1)] = h;
        m[(k + 1, k)] = 1.0;
    }
    m
}
