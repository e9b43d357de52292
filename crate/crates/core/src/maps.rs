//! The elementary self-maps F1, F2, F3, the base cubic map phi, and the exact
//! fiber solver for phi.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{Classification, DomainSpec};
use crate::error::{Error, Result};
use crate::point::{C3Point, Mat3};
use crate::scalar::{f_n, h_delta_n, validate_scalar_params, TAU_DIV};

fn guard_div(num: Complex64, den: Complex64, what: &str) -> Result<Complex64> {
    if den.norm() <= TAU_DIV * (1.0 + num.norm()) {
        return Err(Error::DivisionGuard {
            what: what.to_string(),
            magnitude: den.norm(),
        });
    }
    Ok(num / den)
}

/// F1^delta(z) = (delta z1, delta z2, z3).
pub fn f1(z: &C3Point, delta: f64) -> Result<C3Point> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "F1 requires delta > 0, got {delta}"
        )));
    }
    let d = Complex64::new(delta, 0.0);
    Ok(C3Point::new(z.z1 * d, z.z2 * d, z.z3))
}

pub fn f1_inv(z: &C3Point, delta: f64) -> Result<C3Point> {
    if delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "F1 requires delta > 0, got {delta}"
        )));
    }
    let d = Complex64::new(delta, 0.0);
    Ok(C3Point::new(z.z1 / d, z.z2 / d, z.z3))
}

/// F2^N(z) = (z1, z2 f_N(z3), z3).
pub fn f2(z: &C3Point, n: u32) -> Result<C3Point> {
    validate_scalar_params(n, 0.5)?;
    Ok(C3Point::new(z.z1, z.z2 * f_n(z.z3, n), z.z3))
}

/// Inverse of F2 where f_N(z3) != 0; division-guarded near numerical zeros.
pub fn f2_inv(z: &C3Point, n: u32) -> Result<C3Point> {
    validate_scalar_params(n, 0.5)?;
    let f = f_n(z.z3, n);
    Ok(C3Point::new(z.z1, guard_div(z.z2, f, "f_N(z3)")?, z.z3))
}

/// F3^{N,delta}(z) = (z1 h(z3), z2 h(z3), z3).
pub fn f3(z: &C3Point, n: u32, delta: f64) -> Result<C3Point> {
    let h = h_delta_n(z.z3, n, delta)?;
    Ok(C3Point::new(z.z1 * h, z.z2 * h, z.z3))
}

pub fn f3_inv(z: &C3Point, n: u32, delta: f64) -> Result<C3Point> {
    let h = h_delta_n(z.z3, n, delta)?;
    Ok(C3Point::new(
        guard_div(z.z1, h, "h(z3)")?,
        guard_div(z.z2, h, "h(z3)")?,
        z.z3,
    ))
}

/// The base cubic map phi(z) = (z1, z1 z2^2 + 2 z3 z2, z1 z2 + z3).
pub fn phi(z: &C3Point) -> C3Point {
    C3Point::new(
        z.z1,
        z.z1 * z.z2 * z.z2 + 2.0 * z.z3 * z.z2,
        z.z1 * z.z2 + z.z3,
    )
}

pub fn phi_jacobian(z: &C3Point) -> Mat3 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Mat3 {
        m: [
            [one, zero, zero],
            [z.z2 * z.z2, 2.0 * z.z1 * z.z2 + 2.0 * z.z3, 2.0 * z.z2],
            [z.z2, z.z1, one],
        ],
    }
}

/// Structure of the phi-fiber over a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberKind {
    /// w1 != 0: two quadratic roots (possibly coincident).
    Quadratic,
    /// w1 = 0, w3 != 0: one linear root.
    Linear,
    /// w1 = w3 = 0, w2 = 0: a whole line of preimages.
    Degenerate,
    /// w1 = w3 = 0, w2 != 0: empty fiber.
    Empty,
}

/// Fiber of phi over a query point: the full candidate list and the sublist
/// lying in a chosen domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreimageSet {
    pub kind: FiberKind,
    pub candidates: Vec<C3Point>,
    pub filtered: Vec<C3Point>,
    pub residual_tol: f64,
}

/// Solve phi(z) = w exactly: z1 = w1, z2 from w2 = 2 w3 z2 - w1 z2^2
/// (stable root pairing), z3 = w3 - z1 z2. Candidates failing the forward
/// residual check are dropped; `filtered` keeps those inside `domain`.
pub fn phi_preimages(w: &C3Point, domain: &DomainSpec, residual_tol: f64) -> Result<PreimageSet> {
    domain.validate()?;
    w.check_finite("phi_preimages query")?;
    let mut kind;
    let mut roots: Vec<Complex64> = Vec::new();
    if w.z1.norm() > 0.0 {
        kind = FiberKind::Quadratic;
        // w1 z^2 - 2 w3 z + w2 = 0. Larger-magnitude root by the standard
        // formula, companion via the product identity to dodge cancellation.
        let disc = w.z3 * w.z3 - w.z1 * w.z2;
        let sq = disc.sqrt();
        let s = if (w.z3.conj() * sq).re >= 0.0 { sq } else { -sq };
        let q = w.z3 + s;
        if q.norm() > TAU_DIV * (1.0 + w.z3.norm()) {
            roots.push(q / w.z1);
            roots.push(w.z2 / q);
        } else {
            // both roots vanish (w3 ~ 0 and w2 ~ 0)
            roots.push(Complex64::new(0.0, 0.0));
        }
    } else if w.z3.norm() > 0.0 {
        kind = FiberKind::Linear;
        roots.push(w.z2 / (2.0 * w.z3));
    } else if w.z2.norm() == 0.0 {
        kind = FiberKind::Degenerate;
    } else {
        kind = FiberKind::Empty;
    }

    let mut candidates = Vec::new();
    let scale = 1.0 + w.norm();
    for z2 in roots {
        let z1 = w.z1;
        let z3 = w.z3 - z1 * z2;
        let cand = C3Point::new(z1, z2, z3);
        if !cand.is_finite() {
            continue;
        }
        let res = phi(&cand).dist(w);
        if res <= residual_tol * scale {
            candidates.push(cand);
        }
    }
    // Deduplicate coincident quadratic roots.
    if candidates.len() == 2 && candidates[0].dist(&candidates[1]) < 1e-14 * scale {
        candidates.pop();
    }
    if kind == FiberKind::Quadratic && candidates.is_empty() {
        kind = FiberKind::Empty;
    }
    let filtered = candidates
        .iter()
        .filter(|z| matches!(domain.contains(z, 0.0), Ok(Classification::Interior)))
        .copied()
        .collect();
    Ok(PreimageSet {
        kind,
        candidates,
        filtered,
        residual_tol,
    })
}
