//! Jacobi-preconditioned Krylov solvers for the implicit resolvent.

use super::sparse::{axpy, dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 5000,
        }
    }
}

fn jacobi(a: &CsrMatrix) -> Vec<f64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// Preconditioned conjugate gradients for symmetric positive definite `a`.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: SolverConfig,
) -> Result<Vec<f64>> {
    let inv_diag = jacobi(a);
    pcg(a, &inv_diag, b, x0, cfg)
}

fn pcg(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x0: Option<&[f64]>, cfg: SolverConfig) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let target = cfg.tolerance * bnorm;
    if norm2(&r) <= target {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..cfg.max_iterations {
        a.mul_vec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if norm2(&r) <= target {
            return Ok(x);
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::SolverDiverged {
        iterations: cfg.max_iterations,
        residual: norm2(&r) / bnorm,
    })
}

/// Right-preconditioned BiCGStab for general nonsingular `a`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, cfg: SolverConfig) -> Result<Vec<f64>> {
    let inv_diag = jacobi(a);
    pbicgstab(a, &inv_diag, b, x0, cfg)
}

fn pbicgstab(
    a: &CsrMatrix,
    inv_diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: SolverConfig,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let target = cfg.tolerance * bnorm;
    if norm2(&r) <= target {
        return Ok(x);
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 0..cfg.max_iterations {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::SolverDiverged {
                iterations: it,
                residual: norm2(&r) / bnorm,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            ph[i] = p[i] * inv_diag[i];
        }
        a.mul_vec_into(&ph, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= target {
            axpy(alpha, &ph, &mut x);
            return Ok(x);
        }
        for i in 0..n {
            sh[i] = s[i] * inv_diag[i];
        }
        a.mul_vec_into(&sh, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= target {
            return Ok(x);
        }
    }
    Err(Error::SolverDiverged {
        iterations: cfg.max_iterations,
        residual: norm2(&r) / bnorm,
    })
}

/// The FEM resolvent `(M + dt K)^{-1} M`, assembled once for a fixed step.
#[derive(Debug, Clone)]
pub struct ShiftedSystem {
    mass: CsrMatrix,
    system: CsrMatrix,
    inv_diag: Vec<f64>,
    symmetric: bool,
    cfg: SolverConfig,
}

impl ShiftedSystem {
    pub fn new(mass: &CsrMatrix, stiffness: &CsrMatrix, dt: f64, cfg: SolverConfig) -> Self {
        let system = mass.linear_combination(1.0, stiffness, dt);
        let symmetric = system.is_symmetric(1e-14);
        let inv_diag = jacobi(&system);
        Self {
            mass: mass.clone(),
            system,
            inv_diag,
            symmetric,
            cfg,
        }
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Solves `(M + dt K) x = load`, where `load` is already in weak form.
    pub fn solve_load(&self, load: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        if self.symmetric {
            pcg(&self.system, &self.inv_diag, load, guess, self.cfg)
        } else {
            pbicgstab(&self.system, &self.inv_diag, load, guess, self.cfg)
        }
    }

    /// `(M + dt K)^{-1} M rhs`
    pub fn apply(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        self.solve_load(&self.mass.mul_vec(rhs), guess)
    }
}

/// Solves `(M + dt K) x = M rhs` to relative residual `tol`.
pub fn solve_shifted(
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
    dt: f64,
    rhs: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    let cfg = SolverConfig {
        tolerance: tol,
        ..SolverConfig::default()
    };
    ShiftedSystem::new(mass, stiffness, dt, cfg).apply(rhs, None)
}
