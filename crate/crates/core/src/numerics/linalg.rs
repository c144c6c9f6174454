//! Dense LU factorization with partial pivoting.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Relative threshold under which a pivot counts as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Row-major square matrix stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match t.shape() {
            [r, c] if r == c => Ok(Matrix {
                n: *r,
                data: t.data().to_vec(),
            }),
            s => Err(Error::Shape(format!("expected a square matrix, got shape {s:?}"))),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        out
    }
}

/// `PA = LU` with unit-diagonal `L`, both packed into one matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Lu {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let scale = a.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = PIVOT_TOLERANCE * scale;
        let mut singular = scale == 0.0 && n > 0;

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|r| (r, lu.at(r, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= tol {
                singular = true;
                continue;
            }
            if p != k {
                for c in 0..n {
                    lu.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let d = lu.at(k, k);
            for r in k + 1..n {
                let f = lu.at(r, k) / d;
                *lu.at_mut(r, k) = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        let u = lu.at(k, c);
                        *lu.at_mut(r, c) -= f * u;
                    }
                }
            }
        }
        Lu {
            lu,
            perm,
            sign,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// `(sign, log|det|)`; `(0, -inf)` when singular.
    pub fn signed_log_det(&self) -> (i8, f64) {
        if self.singular {
            return (0, f64::NEG_INFINITY);
        }
        let mut sign = self.sign;
        let mut logdet = 0.0;
        for i in 0..self.lu.n {
            let d = self.lu.at(i, i);
            if d < 0.0 {
                sign = -sign;
            }
            logdet += d.abs().ln();
        }
        (if sign > 0.0 { 1 } else { -1 }, logdet)
    }

    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        if self.singular {
            return None;
        }
        let n = self.lu.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.at(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu.at(i, j) * x[j];
            }
            x[i] = s / self.lu.at(i, i);
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if self.singular {
            return None;
        }
        let n = self.lu.n;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[c] = 1.0;
            let col = self.solve(&e)?;
            for r in 0..n {
                *inv.at_mut(r, c) = col[r];
            }
        }
        Some(inv)
    }
}

/// Sign and log-magnitude of the determinant of a square matrix.
pub fn signed_log_det(matrix: &Tensor) -> Result<(i8, f64)> {
    let m = Matrix::from_tensor(matrix)?;
    if m.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Shape("determinant input must be finite".into()));
    }
    Ok(Lu::factor(&m).signed_log_det())
}
