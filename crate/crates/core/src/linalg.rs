//! Small complex linear algebra used by the closure algebra and the banded
//! solvers: 2x2 matrices over the probe indices, two-excitation pair
//! amplitudes, and 4x4 matrices over pair indices.
//!
//! Pair indices (j, l) in {1, 2}^2 are flattened in the fixed order
//! (1,1), (1,2), (2,1), (2,2), i.e. `idx = 2*j + l` with zero-based j, l.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// 2x2 complex matrix over probe indices (Rabi matrix, group-velocity matrix).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub e: [[C64; 2]; 2],
}

impl Mat2 {
    pub fn new(e11: C64, e12: C64, e21: C64, e22: C64) -> Self {
        Mat2 {
            e: [[e11, e12], [e21, e22]],
        }
    }

    pub fn zeros() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Mat2::new(a, ZERO, ZERO, b)
    }

    pub fn get(&self, j: usize, l: usize) -> C64 {
        self.e[j][l]
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2::new(
            self.e[0][0].conj(),
            self.e[1][0].conj(),
            self.e[0][1].conj(),
            self.e[1][1].conj(),
        )
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let mut out = Mat2::zeros();
        for j in 0..2 {
            for l in 0..2 {
                out.e[j][l] = self.e[j][0] * rhs.e[0][l] + self.e[j][1] * rhs.e[1][l];
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        let mut out = *self;
        for row in out.e.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1]
    }

    /// Largest entry magnitude of `self - self^dagger`, relative to the
    /// largest entry magnitude of `self`.
    pub fn hermiticity_error(&self) -> f64 {
        let adj = self.adjoint();
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for j in 0..2 {
            for l in 0..2 {
                num = num.max((self.e[j][l] - adj.e[j][l]).norm());
                den = den.max(self.e[j][l].norm());
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Eigenvalues of a 2x2 matrix by the quadratic formula.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let tr = self.trace();
        let det = self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0];
        let disc = (tr * tr - det.scale(4.0)).sqrt();
        [(tr + disc).scale(0.5), (tr - disc).scale(0.5)]
    }
}

/// Two-excitation pair amplitude: one complex value per probe pair (j, l).
///
/// Used for every field evolved on a grid (Phi_EE, Phi_Es, Phi_sE, Phi_ss and
/// the symmetric/antisymmetric combinations), with the role given by context.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairField {
    pub e: [[C64; 2]; 2],
}

impl PairField {
    pub fn zeros() -> Self {
        PairField::default()
    }

    /// Field with a single nonzero component.
    pub fn component(j: usize, l: usize, value: C64) -> Self {
        let mut f = PairField::zeros();
        f.e[j][l] = value;
        f
    }

    /// Same value in all four components.
    pub fn uniform(value: C64) -> Self {
        PairField { e: [[value; 2]; 2] }
    }

    pub fn get(&self, j: usize, l: usize) -> C64 {
        self.e[j][l]
    }

    pub fn set(&mut self, j: usize, l: usize, value: C64) {
        self.e[j][l] = value;
    }

    /// Flattened pair-index view, order (1,1), (1,2), (2,1), (2,2).
    pub fn to_vec4(&self) -> [C64; 4] {
        [self.e[0][0], self.e[0][1], self.e[1][0], self.e[1][1]]
    }

    pub fn from_vec4(v: [C64; 4]) -> Self {
        PairField {
            e: [[v[0], v[1]], [v[2], v[3]]],
        }
    }

    /// Matrix product W * Phi over probe indices.
    pub fn left_mul(&self, w: &Mat2) -> PairField {
        let mut out = PairField::zeros();
        for j in 0..2 {
            for l in 0..2 {
                out.e[j][l] = w.e[j][0] * self.e[0][l] + w.e[j][1] * self.e[1][l];
            }
        }
        out
    }

    /// Matrix product Phi * W^T over probe indices.
    pub fn right_mul_transpose(&self, w: &Mat2) -> PairField {
        let mut out = PairField::zeros();
        for j in 0..2 {
            for l in 0..2 {
                out.e[j][l] = self.e[j][0] * w.e[l][0] + self.e[j][1] * w.e[l][1];
            }
        }
        out
    }

    /// Transpose over probe indices (exchange of the two excitations).
    pub fn transpose(&self) -> PairField {
        PairField {
            e: [[self.e[0][0], self.e[1][0]], [self.e[0][1], self.e[1][1]]],
        }
    }

    pub fn scale(&self, s: C64) -> PairField {
        let mut out = *self;
        for row in out.e.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    /// Largest component magnitude.
    pub fn norm_max(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Sum of squared component magnitudes.
    pub fn norm_sqr(&self) -> f64 {
        self.e.iter().flatten().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .flatten()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl Add for PairField {
    type Output = PairField;
    fn add(self, rhs: PairField) -> PairField {
        let mut out = self;
        for j in 0..2 {
            for l in 0..2 {
                out.e[j][l] += rhs.e[j][l];
            }
        }
        out
    }
}

impl Sub for PairField {
    type Output = PairField;
    fn sub(self, rhs: PairField) -> PairField {
        let mut out = self;
        for j in 0..2 {
            for l in 0..2 {
                out.e[j][l] -= rhs.e[j][l];
            }
        }
        out
    }
}

impl Neg for PairField {
    type Output = PairField;
    fn neg(self) -> PairField {
        self.scale(-ONE)
    }
}

impl Mul<C64> for PairField {
    type Output = PairField;
    fn mul(self, s: C64) -> PairField {
        self.scale(s)
    }
}

impl Mul<f64> for PairField {
    type Output = PairField;
    fn mul(self, s: f64) -> PairField {
        self.scale(C64::new(s, 0.0))
    }
}

/// 4x4 complex matrix over flattened pair indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4 {
    pub e: [[C64; 4]; 4],
}

impl Mat4 {
    pub fn zeros() -> Self {
        Mat4 { e: [[ZERO; 4]; 4] }
    }

    pub fn identity() -> Self {
        let mut m = Mat4::zeros();
        for k in 0..4 {
            m.e[k][k] = ONE;
        }
        m
    }

    pub fn apply(&self, phi: &PairField) -> PairField {
        let v = phi.to_vec4();
        let mut out = [ZERO; 4];
        for (r, row) in self.e.iter().enumerate() {
            out[r] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        PairField::from_vec4(out)
    }

    pub fn sub(&self, rhs: &Mat4) -> Mat4 {
        let mut out = *self;
        for r in 0..4 {
            for c in 0..4 {
                out.e[r][c] -= rhs.e[r][c];
            }
        }
        out
    }

    /// Row-sum (infinity) norm.
    pub fn norm_inf(&self) -> f64 {
        self.e
            .iter()
            .map(|row| row.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Solves `self * X = B` for the 4 columns of `B`, returning `X`.
    ///
    /// Fails when a pivot is smaller than `1e-14` times the matrix norm.
    pub fn solve_matrix(&self, b: &Mat4) -> Result<Mat4> {
        let mut a = self.e;
        let mut x = b.e;
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        for col in 0..4 {
            let mut piv = col;
            let mut piv_mag = a[col][col].norm();
            for r in col + 1..4 {
                let mag = a[r][col].norm();
                if mag > piv_mag {
                    piv = r;
                    piv_mag = mag;
                }
            }
            if piv_mag < 1e-14 * scale {
                return Err(Error::SingularPivot { row: col });
            }
            a.swap(col, piv);
            x.swap(col, piv);
            let inv = ONE / a[col][col];
            for r in 0..4 {
                if r == col {
                    continue;
                }
                let f = a[r][col] * inv;
                for c in col..4 {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
                for c in 0..4 {
                    let v = x[col][c];
                    x[r][c] -= f * v;
                }
            }
        }
        for r in 0..4 {
            let inv = ONE / a[r][r];
            for c in 0..4 {
                x[r][c] *= inv;
            }
        }
        Ok(Mat4 { e: x })
    }
}

/// LU factorization with partial pivoting of a dense complex block, stored in
/// row-major order.  `dim` is small (1 or 4 in this crate).
#[derive(Debug, Clone)]
pub struct BlockLu {
    pub dim: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl BlockLu {
    pub fn factor(block: &[C64], dim: usize) -> Result<Self> {
        debug_assert_eq!(block.len(), dim * dim);
        let mut lu = block.to_vec();
        let mut perm: Vec<usize> = (0..dim).collect();
        let scale = lu
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for col in 0..dim {
            let mut piv = col;
            let mut piv_mag = lu[col * dim + col].norm();
            for r in col + 1..dim {
                let mag = lu[r * dim + col].norm();
                if mag > piv_mag {
                    piv = r;
                    piv_mag = mag;
                }
            }
            if piv_mag < 1e-300_f64.max(1e-15 * scale) {
                return Err(Error::SingularPivot { row: col });
            }
            if piv != col {
                for c in 0..dim {
                    lu.swap(col * dim + c, piv * dim + c);
                }
                perm.swap(col, piv);
            }
            let inv = ONE / lu[col * dim + col];
            for r in col + 1..dim {
                let f = lu[r * dim + col] * inv;
                lu[r * dim + col] = f;
                for c in col + 1..dim {
                    let v = lu[col * dim + c];
                    lu[r * dim + c] -= f * v;
                }
            }
        }
        Ok(BlockLu { dim, lu, perm })
    }

    /// Solves in place: `x` holds the right-hand side on entry, the solution
    /// on return.
    pub fn solve(&self, x: &mut [C64]) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        let mut y = vec![ZERO; n];
        for r in 0..n {
            let mut acc = x[self.perm[r]];
            for c in 0..r {
                acc -= self.lu[r * n + c] * y[c];
            }
            y[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in r + 1..n {
                acc -= self.lu[r * n + c] * x[c];
            }
            x[r] = acc / self.lu[r * n + r];
        }
    }
}
