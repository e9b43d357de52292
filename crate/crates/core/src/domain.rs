//! Region descriptions of C^3 through real defining functions.
//!
//! Every domain is the sublevel set {rho < 0} of a real-valued defining
//! function; membership, boundaries and margins are read off sign(rho) with
//! an explicit tolerance band.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::C3Point;

/// Classification of a point against a domain at a given tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Interior,
    Boundary,
    Exterior,
}

/// The domain kinds used throughout. Interiors are {rho < 0}.
///
/// * `HalfSpaceH`: Re(z3) < 0.
/// * `WermerDp`: 2 Re(z3) + |z3|^2 + p(|z1|^2 + |z2|^2) < 0, 0 < p < 1/4.
/// * `ShiftedBallB`: 2 Re(z3) + ||z||^2 < 0 (unit ball tangent to 0 from the left).
/// * `ScaledBallBPrime`: 2 Re(z3) + ||z||^2 / 2 < 0 (radius-2 ball, same tangency).
/// * `EuclideanBall`: ||z - center|| < radius.
/// * `OmegaRegion`: ball of radius 1+delta minus the complements of the balls
///   B(j, R) internally tangent to the unit sphere at each alpha_j; rho is the
///   max of the member defining functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum DomainSpec {
    HalfSpaceH,
    WermerDp { p: f64 },
    ShiftedBallB,
    ScaledBallBPrime,
    EuclideanBall { center: C3Point, radius: f64 },
    OmegaRegion { r: f64, n: usize, delta: f64, alphas: Vec<C3Point> },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::HalfSpaceH | DomainSpec::ShiftedBallB | DomainSpec::ScaledBallBPrime => {
                Ok(())
            }
            DomainSpec::WermerDp { p } => {
                if *p > 0.0 && *p < 0.25 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "WermerDp requires 0 < p < 1/4, got p = {p}"
                    )))
                }
            }
            DomainSpec::EuclideanBall { radius, .. } => {
                if *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "EuclideanBall requires radius > 0, got {radius}"
                    )))
                }
            }
            DomainSpec::OmegaRegion { r, n, delta, alphas } => {
                if *r <= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "OmegaRegion requires R > 1, got {r}"
                    )));
                }
                if *delta <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "OmegaRegion requires delta > 0, got {delta}"
                    )));
                }
                if alphas.len() < *n {
                    return Err(Error::InvalidParameter(format!(
                        "OmegaRegion needs {n} boundary points, got {}",
                        alphas.len()
                    )));
                }
                Ok(())
            }
        }
    }

    /// The defining function rho; interior is {rho < 0}.
    pub fn rho(&self, z: &C3Point) -> f64 {
        match self {
            DomainSpec::HalfSpaceH => z.z3.re,
            DomainSpec::WermerDp { p } => {
                2.0 * z.z3.re + z.z3.norm_sqr() + p * (z.z1.norm_sqr() + z.z2.norm_sqr())
            }
            DomainSpec::ShiftedBallB => 2.0 * z.z3.re + z.norm_sqr(),
            DomainSpec::ScaledBallBPrime => 2.0 * z.z3.re + 0.5 * z.norm_sqr(),
            DomainSpec::EuclideanBall { center, radius } => {
                z.sub(center).norm_sqr() - radius * radius
            }
            DomainSpec::OmegaRegion { r, n, delta, alphas } => {
                let outer = 1.0 + delta;
                let mut worst = z.norm_sqr() - outer * outer;
                for alpha in alphas.iter().take(*n) {
                    // B(j,R): ball of radius R centered at alpha*(1-R); kept region
                    // is its interior, so its defining function joins the max.
                    let c = alpha.scale(Complex64::new(1.0 - r, 0.0));
                    let rj = z.sub(&c).norm_sqr() - r * r;
                    worst = worst.max(rj);
                }
                worst
            }
        }
    }

    /// Gradient of rho with respect to the six real coordinates.
    pub fn rho_grad(&self, z: &C3Point) -> [f64; 6] {
        match self {
            DomainSpec::HalfSpaceH => [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            DomainSpec::WermerDp { p } => [
                2.0 * p * z.z1.re,
                2.0 * p * z.z1.im,
                2.0 * p * z.z2.re,
                2.0 * p * z.z2.im,
                2.0 + 2.0 * z.z3.re,
                2.0 * z.z3.im,
            ],
            DomainSpec::ShiftedBallB => [
                2.0 * z.z1.re,
                2.0 * z.z1.im,
                2.0 * z.z2.re,
                2.0 * z.z2.im,
                2.0 + 2.0 * z.z3.re,
                2.0 * z.z3.im,
            ],
            DomainSpec::ScaledBallBPrime => [
                z.z1.re,
                z.z1.im,
                z.z2.re,
                z.z2.im,
                2.0 + z.z3.re,
                z.z3.im,
            ],
            DomainSpec::EuclideanBall { center, .. } => {
                let d = z.sub(center);
                [
                    2.0 * d.z1.re,
                    2.0 * d.z1.im,
                    2.0 * d.z2.re,
                    2.0 * d.z2.im,
                    2.0 * d.z3.re,
                    2.0 * d.z3.im,
                ]
            }
            DomainSpec::OmegaRegion { .. } => {
                let d = self.omega_active_center(z);
                [
                    2.0 * d.z1.re,
                    2.0 * d.z1.im,
                    2.0 * d.z2.re,
                    2.0 * d.z2.im,
                    2.0 * d.z3.re,
                    2.0 * d.z3.im,
                ]
            }
        }
    }

    /// For OmegaRegion: offset from the active (argmax) constraint's center.
    fn omega_active_center(&self, z: &C3Point) -> C3Point {
        if let DomainSpec::OmegaRegion { r, n, delta, alphas } = self {
            let outer = 1.0 + delta;
            let mut best = z.norm_sqr() - outer * outer;
            let mut off = *z;
            for alpha in alphas.iter().take(*n) {
                let c = alpha.scale(Complex64::new(1.0 - r, 0.0));
                let rj = z.sub(&c).norm_sqr() - r * r;
                if rj > best {
                    best = rj;
                    off = z.sub(&c);
                }
            }
            off
        } else {
            unreachable!()
        }
    }

    /// Classify a point: Interior iff rho < -tol, Boundary iff |rho| <= tol.
    pub fn contains(&self, z: &C3Point, tol: f64) -> Result<Classification> {
        self.validate()?;
        z.check_finite("domain membership")?;
        if tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be >= 0, got {tol}"
            )));
        }
        let r = self.rho(z);
        Ok(if r < -tol {
            Classification::Interior
        } else if r.abs() <= tol {
            Classification::Boundary
        } else {
            Classification::Exterior
        })
    }

    /// Interior margin -rho(z); positive inside.
    pub fn margin(&self, z: &C3Point) -> f64 {
        -self.rho(z)
    }

    /// Bounding box of the six real coordinates used for rejection sampling.
    /// Unbounded kinds use the documented default box.
    pub fn sampling_box(&self) -> [(f64, f64); 6] {
        match self {
            // Default box for the unbounded half space: |z1|, |z2| <= 4,
            // -4 <= Re z3 < 0, |Im z3| <= 4.
            DomainSpec::HalfSpaceH => [
                (-4.0, 4.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
                (-4.0, 0.0),
                (-4.0, 4.0),
            ],
            DomainSpec::WermerDp { p } => {
                let s = (1.0 / p).sqrt();
                [
                    (-s, s),
                    (-s, s),
                    (-s, s),
                    (-s, s),
                    (-2.0, 0.0),
                    (-1.0, 1.0),
                ]
            }
            DomainSpec::ShiftedBallB => [
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-2.0, 0.0),
                (-1.0, 1.0),
            ],
            DomainSpec::ScaledBallBPrime => [
                (-2.0, 2.0),
                (-2.0, 2.0),
                (-2.0, 2.0),
                (-2.0, 2.0),
                (-4.0, 0.0),
                (-2.0, 2.0),
            ],
            DomainSpec::EuclideanBall { center, radius } => {
                let c = center.to_reals();
                let mut b = [(0.0, 0.0); 6];
                for i in 0..6 {
                    b[i] = (c[i] - radius, c[i] + radius);
                }
                b
            }
            DomainSpec::OmegaRegion { delta, .. } => {
                let s = 1.0 + delta;
                [(-s, s); 6]
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: DomainSpec = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }
}
