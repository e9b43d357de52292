//! Reproducible sampling of domain interiors and boundaries.
//!
//! All sampling is deterministic given (domain, count, seed). Ball-shaped
//! domains are sampled exactly (direction + radius); the rest fall back to
//! rejection inside the domain's sampling box. Boundary samples are interior
//! samples projected onto {rho = 0} along the gradient of rho.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{Classification, DomainSpec};
use crate::error::{Error, Result};
use crate::point::C3Point;

const REJECTION_BUDGET_PER_POINT: u64 = 100_000;
pub const BOUNDARY_TOL: f64 = 1e-12;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform point of the unit ball of R^d (d <= 8) via normalized Gaussian
/// direction and radius u^(1/d).
fn unit_ball_point<const D: usize>(rng: &mut ChaCha8Rng) -> [f64; D] {
    loop {
        let mut g = [0.0; D];
        let mut n2 = 0.0;
        for gi in g.iter_mut() {
            // Box-Muller
            let u1: f64 = rng.gen_range(1e-300..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            *gi = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            n2 += *gi * *gi;
        }
        if n2 > 1e-30 {
            let u: f64 = rng.gen_range(0.0..1.0);
            let r = u.powf(1.0 / D as f64) / n2.sqrt();
            for gi in g.iter_mut() {
                *gi *= r;
            }
            return g;
        }
    }
}

/// Uniform point on the unit sphere of R^d.
pub fn unit_sphere_point<const D: usize>(rng: &mut ChaCha8Rng) -> [f64; D] {
    loop {
        let mut g = [0.0; D];
        let mut n2 = 0.0;
        for gi in g.iter_mut() {
            let u1: f64 = rng.gen_range(1e-300..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            *gi = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            n2 += *gi * *gi;
        }
        if n2 > 1e-30 {
            let inv = 1.0 / n2.sqrt();
            for gi in g.iter_mut() {
                *gi *= inv;
            }
            return g;
        }
    }
}

fn sample_one_interior(domain: &DomainSpec, rng: &mut ChaCha8Rng) -> Result<C3Point> {
    match domain {
        DomainSpec::EuclideanBall { center, radius } => loop {
            let b: [f64; 6] = unit_ball_point(rng);
            let mut c = center.to_reals();
            for i in 0..6 {
                c[i] += radius * b[i];
            }
            let z = C3Point::from_reals(c);
            if domain.rho(&z) < 0.0 {
                return Ok(z);
            }
        },
        DomainSpec::ShiftedBallB => loop {
            // 2 Re z3 + ||z||^2 < 0  <=>  ||z - (0,0,-1)|| < 1
            let b: [f64; 6] = unit_ball_point(rng);
            let z = C3Point::from_reals([b[0], b[1], b[2], b[3], b[4] - 1.0, b[5]]);
            if domain.rho(&z) < 0.0 {
                return Ok(z);
            }
        },
        DomainSpec::ScaledBallBPrime => loop {
            let b: [f64; 6] = unit_ball_point(rng);
            let z = C3Point::from_reals([
                2.0 * b[0],
                2.0 * b[1],
                2.0 * b[2],
                2.0 * b[3],
                2.0 * b[4] - 2.0,
                2.0 * b[5],
            ]);
            if domain.rho(&z) < 0.0 {
                return Ok(z);
            }
        },
        DomainSpec::WermerDp { p } => loop {
            // |z3+1|^2 + p(|z1|^2+|z2|^2) < 1: an ellipsoid, sampled exactly.
            let b: [f64; 6] = unit_ball_point(rng);
            let s = 1.0 / p.sqrt();
            let z = C3Point::from_reals([
                s * b[0],
                s * b[1],
                s * b[2],
                s * b[3],
                b[4] - 1.0,
                b[5],
            ]);
            if domain.rho(&z) < 0.0 {
                return Ok(z);
            }
        },
        _ => {
            let bx = domain.sampling_box();
            for _ in 0..REJECTION_BUDGET_PER_POINT {
                let mut c = [0.0; 6];
                for i in 0..6 {
                    c[i] = rng.gen_range(bx[i].0..bx[i].1);
                }
                let z = C3Point::from_reals(c);
                if domain.rho(&z) < 0.0 {
                    return Ok(z);
                }
            }
            Err(Error::SamplingBudget {
                domain: format!("{domain:?}"),
                attempts: REJECTION_BUDGET_PER_POINT,
            })
        }
    }
}

/// Deterministic interior samples; every returned point classifies Interior at tol = 0.
pub fn sample_interior(domain: &DomainSpec, count: usize, seed: u64) -> Result<Vec<C3Point>> {
    domain.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let mut rng = rng_for(seed, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        out.push(sample_one_interior(domain, &mut rng)?);
    }
    Ok(out)
}

/// Project a point onto {rho = 0} along grad rho, to |rho| <= tol.
pub fn project_to_boundary(domain: &DomainSpec, z: &C3Point, tol: f64) -> Result<C3Point> {
    match domain {
        DomainSpec::HalfSpaceH => {
            let mut c = z.to_reals();
            c[4] = 0.0;
            return Ok(C3Point::from_reals(c));
        }
        DomainSpec::EuclideanBall { center, radius } => {
            let d = z.sub(center);
            let n = d.norm();
            if n < 1e-14 {
                return Err(Error::InvalidParameter(
                    "cannot project the ball center to the boundary".into(),
                ));
            }
            let s = Complex64::new(radius / n, 0.0);
            return Ok(center.add(&d.scale(s)));
        }
        DomainSpec::ShiftedBallB => {
            let c = C3Point::from_re(0.0, 0.0, -1.0);
            let d = z.sub(&c);
            let n = d.norm();
            if n < 1e-14 {
                return Err(Error::InvalidParameter("cannot project the center".into()));
            }
            return Ok(c.add(&d.scale(Complex64::new(1.0 / n, 0.0))));
        }
        _ => {}
    }
    // Newton along the gradient.
    let mut cur = *z;
    for _ in 0..60 {
        let r = domain.rho(&cur);
        if r.abs() <= tol {
            return Ok(cur);
        }
        let g = domain.rho_grad(&cur);
        let g2: f64 = g.iter().map(|x| x * x).sum();
        if g2 < 1e-28 {
            break;
        }
        let mut c = cur.to_reals();
        for i in 0..6 {
            c[i] -= r * g[i] / g2;
        }
        cur = C3Point::from_reals(c);
    }
    let r = domain.rho(&cur);
    if r.abs() <= tol {
        Ok(cur)
    } else {
        Err(Error::SamplingBudget {
            domain: format!("boundary projection on {domain:?}"),
            attempts: 60,
        })
    }
}

/// Deterministic boundary samples with |rho| <= 1e-12.
pub fn sample_boundary(domain: &DomainSpec, count: usize, seed: u64) -> Result<Vec<C3Point>> {
    domain.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let mut rng = rng_for(seed, 1);
    let mut out = Vec::with_capacity(count);
    let mut attempts: u64 = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > REJECTION_BUDGET_PER_POINT {
            return Err(Error::SamplingBudget {
                domain: format!("{domain:?}"),
                attempts,
            });
        }
        let z = sample_one_interior(domain, &mut rng)?;
        if let Ok(b) = project_to_boundary(domain, &z, BOUNDARY_TOL) {
            if matches!(
                domain.contains(&b, BOUNDARY_TOL)?,
                Classification::Boundary
            ) {
                out.push(b);
            }
        }
    }
    Ok(out)
}

/// Boundary samples nudged inward by `depth` along the gradient.
pub fn boundary_offset_samples(
    domain: &DomainSpec,
    count: usize,
    seed: u64,
    depth: f64,
) -> Result<Vec<C3Point>> {
    let pts = sample_boundary(domain, count, seed)?;
    let mut out = Vec::with_capacity(pts.len());
    for b in pts {
        let g = domain.rho_grad(&b);
        let gn: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn < 1e-14 {
            continue;
        }
        let mut c = b.to_reals();
        for i in 0..6 {
            c[i] -= depth * g[i] / gn;
        }
        let z = C3Point::from_reals(c);
        if domain.rho(&z) < 0.0 {
            out.push(z);
        }
    }
    Ok(out)
}

/// Halton sequence in the given base, skipping index 0.
fn halton(index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Deterministic low-discrepancy interior grid (rejection against the domain).
/// Used for sup-norm style measurements where reproducible coverage matters.
pub fn low_discrepancy_interior(
    domain: &DomainSpec,
    count: usize,
    offset: u64,
) -> Result<Vec<C3Point>> {
    domain.validate()?;
    let bx = domain.sampling_box();
    let mut out = Vec::with_capacity(count);
    let mut idx: u64 = offset + 1;
    let mut tried: u64 = 0;
    while out.len() < count {
        tried += 1;
        if tried > (count as u64) * REJECTION_BUDGET_PER_POINT {
            return Err(Error::SamplingBudget {
                domain: format!("{domain:?}"),
                attempts: tried,
            });
        }
        let mut c = [0.0; 6];
        for i in 0..6 {
            let u = halton(idx, HALTON_BASES[i]);
            c[i] = bx[i].0 + u * (bx[i].1 - bx[i].0);
        }
        idx += 1;
        let z = C3Point::from_reals(c);
        if domain.rho(&z) < 0.0 {
            out.push(z);
        }
    }
    Ok(out)
}

/// Interior + boundary measurement grid: low-discrepancy interior points plus
/// projected boundary points derived from them.
pub fn measurement_grid(
    domain: &DomainSpec,
    interior: usize,
    boundary: usize,
) -> Result<Vec<C3Point>> {
    let mut pts = low_discrepancy_interior(domain, interior, 0)?;
    let more = low_discrepancy_interior(domain, boundary, 7919)?;
    for z in more {
        if let Ok(b) = project_to_boundary(domain, &z, BOUNDARY_TOL) {
            pts.push(b);
        }
    }
    Ok(pts)
}
