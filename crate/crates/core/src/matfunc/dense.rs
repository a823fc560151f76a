//! Small dense kernels: the projected Hessenberg exponential inside the
//! Krylov routines and banded Cholesky for coercivity checks.

use super::sparse::CsrMatrix;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks_exact(self.n.max(1))
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let (orow, brow) = (&mut out.data[i * n..(i + 1) * n], &other.data[k * n..(k + 1) * n]);
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n.max(1))
            .take(self.n)
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Solves `self * X = rhs` for a square right-hand side matrix by LU with
    /// partial pivoting. Returns `None` for a singular matrix.
    pub fn solve_matrix(&self, rhs: &Self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap();
            if a[piv * n + col] == 0.0 {
                return None;
            }
            if piv != col {
                for k in 0..n {
                    a.swap(piv * n + k, col * n + k);
                    b.swap(piv * n + k, col * n + k);
                }
            }
            let d = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[i * n + k] -= f * a[col * n + k];
                }
                for k in 0..n {
                    b[i * n + k] -= f * b[col * n + k];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for k in 0..n {
                b[col * n + k] /= d;
            }
            for i in 0..col {
                let f = a[i * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        b[i * n + k] -= f * b[col * n + k];
                    }
                }
            }
        }
        Some(Self { n, data: b })
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

const PADE_DEGREE: usize = 6;

/// Matrix exponential by diagonal Padé(6,6) with scaling and squaring.
pub fn expm(a: &DenseMatrix) -> DenseMatrix {
    let n = a.dim();
    if n == 0 {
        return DenseMatrix::zeros(0);
    }
    let norm = a.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scaled(0.5f64.powi(squarings as i32));

    let mut coef = [1.0f64; PADE_DEGREE + 1];
    let p = PADE_DEGREE as f64;
    for k in 1..=PADE_DEGREE {
        let kf = k as f64;
        coef[k] = coef[k - 1] * (p + 1.0 - kf) / (kf * (2.0 * p + 1.0 - kf));
    }

    let mut num = DenseMatrix::identity(n);
    let mut den = DenseMatrix::identity(n);
    let mut power = DenseMatrix::identity(n);
    for (k, &c) in coef.iter().enumerate().skip(1) {
        power = power.matmul(&scaled);
        num.add_scaled(&power, c);
        den.add_scaled(&power, if k % 2 == 0 { c } else { -c });
    }
    let mut r = den
        .solve_matrix(&num)
        .expect("Pade denominator is nonsingular for scaled norm <= 1/2");
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

/// Attempts a banded Cholesky factorization of the symmetric matrix
/// `a - shift * b`; success certifies positive definiteness.
pub fn banded_cholesky_succeeds(a: &CsrMatrix, b: Option<(&CsrMatrix, f64)>) -> bool {
    let n = a.nrows();
    let bw = match b {
        Some((m, _)) => a.bandwidth().max(m.bandwidth()),
        None => a.bandwidth(),
    };
    let w = bw + 1;
    // band[i][k] holds entry (i, i - bw + k) for the lower triangle.
    let mut band = vec![0.0; n * w];
    let mut put = |i: usize, j: usize, v: f64| {
        if j <= i {
            band[i * w + (j + bw - i)] += v;
        }
    };
    for (i, j, v) in a.triplets() {
        put(i, j, v);
    }
    if let Some((m, shift)) = b {
        for (i, j, v) in m.triplets() {
            put(i, j, -shift * v);
        }
    }
    let scale = (0..n).map(|i| band[i * w + bw].abs()).fold(0.0, f64::max);
    let floor = 1e-10 * scale;
    for i in 0..n {
        let j0 = i.saturating_sub(bw);
        for j in j0..=i {
            let mut s = band[i * w + (j + bw - i)];
            let k0 = j0.max(j.saturating_sub(bw));
            for k in k0..j {
                s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
            }
            if i == j {
                if s <= floor || !s.is_finite() {
                    return false;
                }
                band[i * w + bw] = s.sqrt();
            } else {
                band[i * w + (j + bw - i)] = s / band[j * w + bw];
            }
        }
    }
    true
}
