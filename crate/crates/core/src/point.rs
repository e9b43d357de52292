//! Points of C^3 and small dense 3x3 complex matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of C^3. The universal argument/return value of every map in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C3Point {
    pub z1: Complex64,
    pub z2: Complex64,
    pub z3: Complex64,
}

impl C3Point {
    pub const ZERO: C3Point = C3Point {
        z1: Complex64::new(0.0, 0.0),
        z2: Complex64::new(0.0, 0.0),
        z3: Complex64::new(0.0, 0.0),
    };

    pub fn new(z1: Complex64, z2: Complex64, z3: Complex64) -> Self {
        Self { z1, z2, z3 }
    }

    pub fn from_re(x1: f64, x2: f64, x3: f64) -> Self {
        Self::new(
            Complex64::new(x1, 0.0),
            Complex64::new(x2, 0.0),
            Complex64::new(x3, 0.0),
        )
    }

    /// Build from six real coordinates (re1, im1, re2, im2, re3, im3).
    pub fn from_reals(c: [f64; 6]) -> Self {
        Self::new(
            Complex64::new(c[0], c[1]),
            Complex64::new(c[2], c[3]),
            Complex64::new(c[4], c[5]),
        )
    }

    pub fn to_reals(self) -> [f64; 6] {
        [
            self.z1.re, self.z1.im, self.z2.re, self.z2.im, self.z3.re, self.z3.im,
        ]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr() + self.z3.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn dist(&self, other: &C3Point) -> f64 {
        self.sub(other).norm()
    }

    pub fn add(&self, other: &C3Point) -> C3Point {
        C3Point::new(self.z1 + other.z1, self.z2 + other.z2, self.z3 + other.z3)
    }

    pub fn sub(&self, other: &C3Point) -> C3Point {
        C3Point::new(self.z1 - other.z1, self.z2 - other.z2, self.z3 - other.z3)
    }

    pub fn scale(&self, s: Complex64) -> C3Point {
        C3Point::new(self.z1 * s, self.z2 * s, self.z3 * s)
    }

    pub fn is_finite(&self) -> bool {
        self.z1.re.is_finite()
            && self.z1.im.is_finite()
            && self.z2.re.is_finite()
            && self.z2.im.is_finite()
            && self.z3.re.is_finite()
            && self.z3.im.is_finite()
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }
}

/// Column-major 3x3 complex matrix; enough linear algebra for Jacobians and Newton steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3 {
    /// `m[i][j]` is row i, column j.
    pub m: [[Complex64; 3]; 3],
}

impl Mat3 {
    pub fn zero() -> Self {
        Self {
            m: [[Complex64::new(0.0, 0.0); 3]; 3],
        }
    }

    pub fn identity() -> Self {
        let mut a = Self::zero();
        for i in 0..3 {
            a.m[i][i] = Complex64::new(1.0, 0.0);
        }
        a
    }

    pub fn diag(d1: Complex64, d2: Complex64, d3: Complex64) -> Self {
        let mut a = Self::zero();
        a.m[0][0] = d1;
        a.m[1][1] = d2;
        a.m[2][2] = d3;
        a
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..3 {
                    s += self.m[i][k] * other.m[k][j];
                }
                out.m[i][j] = s;
            }
        }
        out
    }

    pub fn apply(&self, v: &C3Point) -> C3Point {
        let col = [v.z1, v.z2, v.z3];
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for i in 0..3 {
            for (k, c) in col.iter().enumerate() {
                out[i] += self.m[i][k] * c;
            }
        }
        C3Point::new(out[0], out[1], out[2])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Solve A x = b by partial-pivot Gaussian elimination.
    pub fn solve(&self, b: &C3Point) -> Result<C3Point> {
        let mut a = self.m;
        let mut rhs = [b.z1, b.z2, b.z3];
        for col in 0..3 {
            let mut piv = col;
            for r in col + 1..3 {
                if a[r][col].norm() > a[piv][col].norm() {
                    piv = r;
                }
            }
            if a[piv][col].norm() < 1e-300 {
                return Err(Error::Inversion("singular Jacobian in Newton solve".into()));
            }
            a.swap(col, piv);
            rhs.swap(col, piv);
            for r in col + 1..3 {
                let f = a[r][col] / a[col][col];
                for c in col..3 {
                    let above = a[col][c];
                    a[r][c] -= f * above;
                }
                let above = rhs[col];
                rhs[r] -= f * above;
            }
        }
        let mut x = [Complex64::new(0.0, 0.0); 3];
        for row in (0..3).rev() {
            let mut s = rhs[row];
            for c in row + 1..3 {
                s -= a[row][c] * x[c];
            }
            x[row] = s / a[row][row];
        }
        Ok(C3Point::new(x[0], x[1], x[2]))
    }

    /// Max relative entrywise deviation against another matrix.
    pub fn rel_dev(&self, other: &Mat3) -> f64 {
        let mut scale: f64 = 1e-300;
        for i in 0..3 {
            for j in 0..3 {
                scale = scale.max(self.m[i][j].norm()).max(other.m[i][j].norm());
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_rhs() {
        let a = Mat3 {
            m: [
                [
                    Complex64::new(2.0, 0.0),
                    Complex64::new(1.0, 1.0),
                    Complex64::new(0.0, 0.0),
                ],
                [
                    Complex64::new(0.0, -1.0),
                    Complex64::new(3.0, 0.0),
                    Complex64::new(0.5, 0.0),
                ],
                [
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, -2.0),
                ],
            ],
        };
        let x = C3Point::new(
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.25),
            Complex64::new(0.0, -1.0),
        );
        let b = a.apply(&x);
        let got = a.solve(&b).unwrap();
        assert!(got.dist(&x) < 1e-12);
    }
}
