//! Small fixed-size matrices: general 2x2, symmetric 2x2 and symmetric 4x4.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Matrix2 {
    pub m: [[f64; 2]; 2],
}

impl Matrix2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Matrix2 { m: [[a, b], [c, d]] }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    /// Companion matrix `[[0, 1], [-k1, -k2]]` of the double integrator.
    pub const fn companion(k1: f64, k2: f64) -> Self {
        Self::new(0.0, 1.0, -k1, -k2)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        let f2 = self.m.iter().flatten().map(|x| x * x).sum::<f64>();
        let det = self.det().abs();
        // sigma_max^2 = (f2 + sqrt(f2^2 - 4 det^2)) / 2
        let disc = ((f2 - 2.0 * det) * (f2 + 2.0 * det)).max(0.0);
        (0.5 * (f2 + disc.sqrt())).sqrt()
    }

    pub fn symmetric_part(&self) -> SymMatrix2 {
        SymMatrix2::new(self.m[0][0], 0.5 * (self.m[0][1] + self.m[1][0]), self.m[1][1])
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn asymmetry(&self) -> f64 {
        (self.m[0][1] - self.m[1][0]).abs()
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.m[1][1], -self.m[0][1], -self.m[1][0], self.m[0][0]).scale(1.0 / det))
    }
}

impl Add for Matrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl Sub for Matrix2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Matrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Matrix2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Symmetric 2x2 matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMatrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SymMatrix2 {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        SymMatrix2 { a, b, c }
    }

    pub fn to_matrix(&self) -> Matrix2 {
        Matrix2::new(self.a, self.b, self.b, self.c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn trace(&self) -> f64 {
        self.a + self.c
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.a + self.c);
        let r = (0.5 * (self.a - self.c)).hypot(self.b);
        let hi = mean + r;
        // Product form keeps the small eigenvalue accurate when |det| << hi^2.
        let lo = if hi != 0.0 { self.det() / hi } else { mean - r };
        if mean >= 0.0 {
            [lo, hi]
        } else {
            let lo = mean - r;
            let hi = if lo != 0.0 { self.det() / lo } else { mean + r };
            [lo, hi]
        }
    }

    /// Positive definiteness by leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        self.a > 0.0 && self.det() > 0.0
    }

    pub fn quad(&self, v: [f64; 2]) -> f64 {
        self.a * v[0] * v[0] + 2.0 * self.b * v[0] * v[1] + self.c * v[1] * v[1]
    }
}

/// Symmetric 4x4 matrix storing the upper triangle row by row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMatrix4 {
    upper: [f64; 10],
}

const fn upper_index(i: usize, j: usize) -> usize {
    // row offsets of the packed upper triangle: 0, 4, 7, 9
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    let off = [0, 4, 7, 9][i];
    off + (j - i)
}

impl SymMatrix4 {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::from_diag([1.0; 4])
    }

    pub fn from_diag(d: [f64; 4]) -> Self {
        let mut s = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            s.set(i, i, v);
        }
        s
    }

    /// Symmetric part `(M + M^T) / 2` of a full matrix.
    pub fn from_full_symmetrized(m: &[[f64; 4]; 4]) -> Self {
        let mut s = Self::zeros();
        for i in 0..4 {
            for j in i..4 {
                s.set(i, j, 0.5 * (m[i][j] + m[j][i]));
            }
        }
        s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[upper_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.upper[upper_index(i, j)] = v;
    }

    pub fn to_full(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        m
    }

    pub fn quad(&self, z: [f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            acc += self.get(i, i) * z[i] * z[i];
            for j in i + 1..4 {
                acc += 2.0 * self.get(i, j) * z[i] * z[j];
            }
        }
        acc
    }

    pub fn apply(&self, z: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.get(i, j) * z[j]).sum();
        }
        out
    }

    /// Congruence `D Q D` with a diagonal `D`.
    pub fn scaled(&self, d: [f64; 4]) -> Self {
        let mut s = *self;
        for i in 0..4 {
            for j in i..4 {
                s.set(i, j, self.get(i, j) * d[i] * d[j]);
            }
        }
        s
    }

    /// Eigenvalues in ascending order by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut a = self.to_full();
        for _sweep in 0..64 {
            let off: f64 = (0..4)
                .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            let diag: f64 = (0..4).map(|i| a[i][i] * a[i][i]).sum();
            if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
                break;
            }
            for p in 0..4 {
                for q in p + 1..4 {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / t.hypot(1.0);
                    let s = t * c;
                    for k in 0..4 {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..4 {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2], a[3][3]];
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Real 4x4 product `A B`.
pub fn mat4_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
pub fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
