//! Numerical certification: argument-principle zero counting, inclusion
//! reports, witness circles for W-degenerate boundary points, and the
//! maximum-principle hull certificate behind the non-Runge obstruction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::composite::MapExpr;
use crate::domain::{Classification, DomainSpec};
use crate::error::{Error, Result};
use crate::point::C3Point;
use crate::poly::{random_poly, seeded_rng, Poly3};
use crate::sampling;
use crate::scalar::ScalarMap;

/// 16-point Gauss-Legendre nodes and weights on [-1, 1].
const GL16_X: [f64; 16] = [
    -0.9894009349916499,
    -0.9445750230732326,
    -0.8656312023878318,
    -0.755404408355003,
    -0.6178762444026438,
    -0.4580167776572274,
    -0.2816035507792589,
    -0.0950125098376374,
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.755404408355003,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 16] = [
    0.0271524594117541,
    0.0622535239386479,
    0.0951585116824928,
    0.1246289712555339,
    0.1495959888165767,
    0.1691565193950025,
    0.1826034150449236,
    0.1894506104550685,
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// Closed rectangle contour in the z3 plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle {self:?}"
            )));
        }
        Ok(())
    }
}

const CONTOUR_MIN_MODULUS: f64 = 1e-8;
const MAX_PANELS_PER_EDGE: usize = 1 << 15;

fn contour_integral(map: &ScalarMap, rect: &Rectangle, panels: usize) -> Result<(Complex64, f64)> {
    let corners = rect.corners();
    let mut total = Complex64::new(0.0, 0.0);
    let mut min_mod = f64::INFINITY;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let d = b - a;
        for p in 0..panels {
            let t0 = p as f64 / panels as f64;
            let t1 = (p + 1) as f64 / panels as f64;
            let mid = 0.5 * (t0 + t1);
            let half = 0.5 * (t1 - t0);
            for k in 0..16 {
                let t = mid + half * GL16_X[k];
                let z = a + d * t;
                let v = map.eval(z)?;
                let m = v.norm();
                if m < min_mod {
                    min_mod = m;
                }
                if m <= CONTOUR_MIN_MODULUS {
                    return Err(Error::Contour(format!(
                        "contour passes within {m:.3e} of a zero at z3 = {z}"
                    )));
                }
                total += GL16_W[k] * half * map.deriv(z)? / v * d;
            }
        }
    }
    Ok((total / Complex64::new(0.0, 2.0 * std::f64::consts::PI), min_mod))
}

/// Result of the argument-principle count with its convergence evidence.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WindingResult {
    pub winding: i64,
    pub quadrature_points: usize,
    pub pre_rounding_residue: f64,
    pub doubling_delta: f64,
    pub min_modulus_on_contour: f64,
}

/// Nearest integer to (1/2 pi i) * contour integral of f'/f over the
/// rectangle; convergence certified by panel doubling (delta < 0.25 before
/// rounding). The contour is rejected if |f| dips to 1e-8 anywhere on it.
pub fn winding_number(
    map: &ScalarMap,
    rect: &Rectangle,
    quadrature_points: usize,
) -> Result<WindingResult> {
    rect.validate()?;
    // dense modulus pre-scan of the contour
    let corners = rect.corners();
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        for i in 0..4096 {
            let z = a + (b - a) * (i as f64 / 4096.0);
            let m = map.eval(z)?.norm();
            if m <= CONTOUR_MIN_MODULUS {
                return Err(Error::Contour(format!(
                    "pre-scan found |f| = {m:.3e} <= {CONTOUR_MIN_MODULUS:.0e} at z3 = {z}"
                )));
            }
        }
    }
    let mut panels = (quadrature_points / (4 * 16)).max(1);
    let (mut prev, mut min_mod) = contour_integral(map, rect, panels)?;
    loop {
        let next_panels = panels * 2;
        if next_panels > MAX_PANELS_PER_EDGE {
            return Err(Error::Quadrature(format!(
                "no convergence below delta 0.25 at {panels} panels/edge"
            )));
        }
        let (cur, mm) = contour_integral(map, rect, next_panels)?;
        min_mod = min_mod.min(mm);
        let delta = (cur - prev).norm();
        if delta < 0.25 {
            let nearest = cur.re.round();
            let residue = (cur - nearest).norm();
            if residue >= 0.25 {
                return Err(Error::Quadrature(format!(
                    "integral {cur} is not within 0.25 of an integer"
                )));
            }
            return Ok(WindingResult {
                winding: nearest as i64,
                quadrature_points: next_panels * 4 * 16,
                pre_rounding_residue: residue,
                doubling_delta: delta,
                min_modulus_on_contour: min_mod,
            });
        }
        prev = cur;
        panels = next_panels;
    }
}

/// Zero-freeness certificate for f_N on a rectangle with re_max < 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroFreeCertificate {
    pub schema: String,
    pub n: u32,
    pub rectangle: Rectangle,
    pub winding: i64,
    pub quadrature_points: usize,
    pub pre_rounding_residue: f64,
    pub doubling_delta: f64,
    pub min_modulus_on_contour: f64,
    pub valid: bool,
}

pub fn certify_zero_free(n: u32, rect: &Rectangle) -> Result<ZeroFreeCertificate> {
    rect.validate()?;
    if rect.re_max >= 0.0 {
        return Err(Error::Contour(format!(
            "zero-free rectangles must satisfy re_max < 0 (the zeros of f_N accumulate on the \
             imaginary axis); got re_max = {}",
            rect.re_max
        )));
    }
    let w = winding_number(&ScalarMap::FN { n }, rect, 4 * 16 * 8)?;
    Ok(ZeroFreeCertificate {
        schema: crate::SCHEMA.to_string(),
        n,
        rectangle: *rect,
        winding: w.winding,
        quadrature_points: w.quadrature_points,
        pre_rounding_residue: w.pre_rounding_residue,
        doubling_delta: w.doubling_delta,
        min_modulus_on_contour: w.min_modulus_on_contour,
        valid: w.winding == 0,
    })
}

/// Min |map| over an nx x ny grid on the rectangle; the independent scan used
/// to cross-check zero-freeness certificates.
pub fn min_modulus_scan(map: &ScalarMap, rect: &Rectangle, nx: usize, ny: usize) -> Result<f64> {
    let mut min_mod = f64::INFINITY;
    for i in 0..nx {
        for j in 0..ny {
            let x = rect.re_min + (rect.re_max - rect.re_min) * i as f64 / (nx - 1) as f64;
            let y = rect.im_min + (rect.im_max - rect.im_min) * j as f64 / (ny - 1) as f64;
            let m = map.eval(Complex64::new(x, y))?.norm();
            if m < min_mod {
                min_mod = m;
            }
        }
    }
    Ok(min_mod)
}

/// Sampled inclusion certificate: every sample of `inner` (optionally
/// restricted to |z3| <= window) must pull back into `outer` under the map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InclusionReport {
    pub schema: String,
    pub inner: DomainSpec,
    pub outer: DomainSpec,
    pub nsamples: usize,
    pub seed: u64,
    pub violations: usize,
    pub worst_margin: f64,
    /// Restriction |z3| <= radius applied to the inner sampling, when the
    /// certified inclusion is local to the distinguished boundary point 0.
    pub window_z3_radius: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl InclusionReport {
    pub fn valid(&self) -> bool {
        self.violations == 0
    }
}

/// Samples of D_p restricted to |z3| <= radius, by rejection in the scaled box.
pub fn sample_dp_near_origin(
    p: f64,
    z3_radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<C3Point>> {
    let dom = DomainSpec::WermerDp { p };
    dom.validate()?;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let s12 = (2.0 * z3_radius / p).sqrt();
    let mut out = Vec::with_capacity(count);
    let mut attempts: u64 = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 50_000_000 {
            return Err(Error::SamplingBudget {
                domain: format!("D_p window |z3| <= {z3_radius}"),
                attempts,
            });
        }
        let z = C3Point::from_reals([
            rng.gen_range(-s12..s12),
            rng.gen_range(-s12..s12),
            rng.gen_range(-s12..s12),
            rng.gen_range(-s12..s12),
            rng.gen_range(-z3_radius..0.0),
            rng.gen_range(-z3_radius..z3_radius),
        ]);
        if z.z3.norm() <= z3_radius && dom.rho(&z) < 0.0 {
            out.push(z);
        }
    }
    Ok(out)
}

pub fn check_inclusion(
    inner: &DomainSpec,
    map: &MapExpr,
    outer: &DomainSpec,
    nsamples: usize,
    seed: u64,
    window_z3_radius: Option<f64>,
) -> Result<InclusionReport> {
    inner.validate()?;
    outer.validate()?;
    if nsamples == 0 {
        return Err(Error::InvalidParameter("nsamples must be >= 1".into()));
    }
    let n_int = (nsamples * 3) / 4;
    let n_bnd = nsamples - n_int;
    let mut pts: Vec<C3Point>;
    match window_z3_radius {
        None => {
            pts = sampling::sample_interior(inner, n_int, seed)?;
            pts.extend(sampling::boundary_offset_samples(inner, n_bnd, seed + 1, 1e-6)?);
        }
        Some(radius) => {
            let p = match inner {
                DomainSpec::WermerDp { p } => *p,
                _ => {
                    return Err(Error::InvalidParameter(
                        "windowed inclusion is defined for the D_p inner domain".into(),
                    ))
                }
            };
            pts = sample_dp_near_origin(p, radius, n_int, seed)?;
            // boundary-offset inside the window: project and nudge inward
            let more = sample_dp_near_origin(p, radius, n_bnd, seed + 1)?;
            for z in more {
                if let Ok(b) = sampling::project_to_boundary(inner, &z, 1e-12) {
                    let g = inner.rho_grad(&b);
                    let gn: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if gn < 1e-14 {
                        continue;
                    }
                    let mut c = b.to_reals();
                    for i in 0..6 {
                        c[i] -= 1e-9 * g[i] / gn;
                    }
                    let nudged = C3Point::from_reals(c);
                    if inner.rho(&nudged) < 0.0 && nudged.z3.norm() <= radius {
                        pts.push(nudged);
                    }
                }
            }
        }
    }
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    let mut diagnostics = Vec::new();
    for x in &pts {
        match map.invert(x) {
            Ok(pre) => {
                let margin = outer.margin(&pre);
                if margin <= 0.0 {
                    violations += 1;
                    if diagnostics.len() < 5 {
                        diagnostics.push(format!(
                            "preimage of ({:.6e},{:.6e},{:.6e}) has outer margin {margin:.3e}",
                            x.z1, x.z2, x.z3
                        ));
                    }
                }
                if margin < worst {
                    worst = margin;
                }
            }
            Err(e) => {
                violations += 1;
                if diagnostics.len() < 5 {
                    diagnostics.push(format!("inversion failed: {e}"));
                }
            }
        }
    }
    Ok(InclusionReport {
        schema: crate::SCHEMA.to_string(),
        inner: inner.clone(),
        outer: outer.clone(),
        nsamples: pts.len(),
        seed,
        violations,
        worst_margin: worst,
        window_z3_radius,
        diagnostics,
    })
}

/// A witness circle S_{r,alpha} + q together with its certified exclusion
/// margin (distance from the would-be hole to the sampled image).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WitnessCircle {
    pub r: f64,
    pub alpha: f64,
    pub center: C3Point,
    pub margin: f64,
}

impl WitnessCircle {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < self.r) {
            return Err(Error::InvalidParameter(format!(
                "witness needs 0 < alpha < r, got alpha = {}, r = {}",
                self.alpha, self.r
            )));
        }
        Ok(())
    }
}

/// Search grid for (r, alpha) pairs; first pair passing all checks wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchGrid {
    /// Radii tried in order.
    pub r_values: Vec<f64>,
    /// alpha = r * factor, tried in order for each r.
    pub alpha_factors: Vec<f64>,
    pub n_theta: usize,
    /// Interior-margin threshold for circle preimages.
    pub mu_min: f64,
}

impl SearchGrid {
    /// Decade grid, alpha ascending from r*1e-6: reproduces the base-map
    /// example pair (0.1, 1e-3) on D_p at delta_ball = 0.2.
    pub fn default_for(delta_ball: f64) -> Self {
        let r_values = (1..=6).map(|k| delta_ball * 0.5f64.powi(k)).collect();
        let alpha_factors = (1..=6).rev().map(|m| 10f64.powi(-m)).collect();
        SearchGrid {
            r_values,
            alpha_factors,
            n_theta: 64,
            mu_min: 1e-6,
        }
    }

    /// Factor-2 grid with alpha descending: the first accepted pair sits near
    /// the margin optimum. Used by the chain builder.
    pub fn margin_greedy(delta_ball: f64) -> Self {
        let r_values = (1..=8).map(|k| delta_ball * 0.5f64.powi(k)).collect();
        let alpha_factors = (1..=26).map(|m| 0.5f64.powi(m)).collect();
        SearchGrid {
            r_values,
            alpha_factors,
            n_theta: 64,
            mu_min: 1e-6,
        }
    }
}

/// Evidence gathered for an accepted witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessSearchResult {
    pub witness: WitnessCircle,
    pub n_theta: usize,
    pub min_interior_margin: f64,
    /// Circle preimages in the domain, one per boundary angle.
    pub preimages: Vec<C3Point>,
    pub exclusion: ExclusionEvidence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExclusionEvidence {
    /// True when stagewise inversion of the center provably finds no preimage
    /// in the filter domain (the phi-fiber case analysis).
    pub algebraic: bool,
    /// Min distance from the center to the forward image of the sample cloud.
    pub sampled_distance: f64,
    pub cloud_size: usize,
}

fn circle_point(q: &C3Point, r: f64, alpha: f64, theta: f64) -> C3Point {
    C3Point::new(
        q.z1 + Complex64::from_polar(r, theta),
        q.z2,
        q.z3 + Complex64::new(alpha, 0.0),
    )
}

/// Try one (r, alpha) cell: every circle point must pull back into the domain
/// interior with margin >= mu_min.
fn try_circle(
    map: &MapExpr,
    domain: &DomainSpec,
    q: &C3Point,
    r: f64,
    alpha: f64,
    n_theta: usize,
    mu_min: f64,
) -> Option<(f64, Vec<C3Point>)> {
    let mut min_margin = f64::INFINITY;
    let mut preimages = Vec::with_capacity(n_theta);
    for j in 0..n_theta {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64;
        let w = circle_point(q, r, alpha, theta);
        let pre = match map.invert(&w) {
            Ok(p) => p,
            Err(_) => return None,
        };
        // forward residual sanity
        match map.eval(&pre) {
            Ok(v) if v.dist(&w) <= 1e-8 * (1.0 + w.norm()) => {}
            _ => return None,
        }
        let margin = domain.margin(&pre);
        if margin < mu_min {
            return None;
        }
        if margin < min_margin {
            min_margin = margin;
        }
        preimages.push(pre);
    }
    Some((min_margin, preimages))
}

/// Center-exclusion evidence: stagewise inversion of the center plus a
/// sampled forward-distance lower bound over a boundary-neighborhood cloud.
fn exclusion_evidence(
    map: &MapExpr,
    domain: &DomainSpec,
    center: &C3Point,
    seed: u64,
) -> Result<(bool, ExclusionEvidence)> {
    let algebraic = match map.invert(center) {
        Err(_) => true,
        Ok(pre) => {
            // a preimage exists; the witness fails only if it lies in the domain
            if matches!(domain.contains(&pre, 0.0)?, Classification::Interior) {
                return Ok((
                    false,
                    ExclusionEvidence {
                        algebraic: false,
                        sampled_distance: 0.0,
                        cloud_size: 0,
                    },
                ));
            }
            false
        }
    };
    let mut cloud = sampling::sample_interior(domain, 1500, seed)?;
    for depth in [1e-6, 1e-4, 1e-2] {
        cloud.extend(sampling::boundary_offset_samples(domain, 1000, seed + 3, depth)?);
    }
    let mut dist = f64::INFINITY;
    for z in &cloud {
        if let Ok(w) = map.eval(z) {
            let d = w.dist(center);
            if d < dist {
                dist = d;
            }
        }
    }
    let pass = dist > 0.0;
    Ok((
        pass,
        ExclusionEvidence {
            algebraic,
            sampled_distance: dist,
            cloud_size: cloud.len(),
        },
    ))
}

/// Search the grid for a witness circle at the boundary point q: boundary
/// preimages inside the domain with margin >= mu_min, center excluded.
pub fn find_witness_circle(
    map: &MapExpr,
    domain: &DomainSpec,
    q: &C3Point,
    delta_ball: f64,
    grid: &SearchGrid,
) -> Result<WitnessSearchResult> {
    domain.validate()?;
    if delta_ball <= 0.0 {
        return Err(Error::InvalidParameter("delta_ball must be > 0".into()));
    }
    let mut cells_tried = 0usize;
    for &r in &grid.r_values {
        if r >= delta_ball {
            continue;
        }
        for &fac in &grid.alpha_factors {
            let alpha = r * fac;
            if !(alpha > 0.0 && alpha < r) {
                continue;
            }
            cells_tried += 1;
            if let Some((min_margin, preimages)) =
                try_circle(map, domain, q, r, alpha, grid.n_theta, grid.mu_min)
            {
                let center = C3Point::new(q.z1, q.z2, q.z3 + Complex64::new(alpha, 0.0));
                let (pass, ev) = exclusion_evidence(map, domain, &center, 1000 + cells_tried as u64)?;
                if !pass || ev.sampled_distance <= 0.0 {
                    continue;
                }
                return Ok(WitnessSearchResult {
                    witness: WitnessCircle {
                        r,
                        alpha,
                        center,
                        margin: ev.sampled_distance,
                    },
                    n_theta: grid.n_theta,
                    min_interior_margin: min_margin,
                    preimages,
                    exclusion: ev,
                });
            }
        }
    }
    Err(Error::NoWitness(format!(
        "search exhausted after {cells_tried} grid cells (delta_ball = {delta_ball}); \
         parameters are not in the degenerate regime"
    )))
}

/// Maximum-principle certificate on an analytic disk: max over random
/// polynomials of |P(center)| / max_boundary |P|.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HullReport {
    pub npolys: usize,
    pub max_degree: u16,
    pub seed: u64,
    pub n_boundary: usize,
    pub max_ratio: f64,
}

pub const HULL_RATIO_BOUND: f64 = 1.0 + 1e-10;

/// Hull test on a general analytic disk zeta |-> disk(zeta), |zeta| <= 1;
/// the center is disk(0). Coefficients are standard complex normal and every
/// polynomial is renormalized so its max boundary modulus is 1.
pub fn hull_test_on_disk<F>(
    disk: F,
    npolys: usize,
    max_degree: u16,
    seed: u64,
    n_boundary: usize,
) -> Result<HullReport>
where
    F: Fn(Complex64) -> Result<C3Point>,
{
    if n_boundary <= max_degree as usize {
        return Err(Error::InvalidParameter(
            "need more boundary samples than the polynomial degree".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let center = disk(Complex64::new(0.0, 0.0))?;
    let mut boundary = Vec::with_capacity(n_boundary);
    for j in 0..n_boundary {
        let t = 2.0 * std::f64::consts::PI * j as f64 / n_boundary as f64;
        boundary.push(disk(Complex64::from_polar(1.0, t))?);
    }
    let mut max_ratio: f64 = 0.0;
    for _ in 0..npolys {
        let p: Poly3 = random_poly(max_degree, &mut rng);
        let bmax = boundary
            .iter()
            .map(|z| p.eval(z).norm())
            .fold(0.0, f64::max);
        if bmax <= 1e-300 {
            continue;
        }
        // renormalize so the boundary max is 1; the ratio is scale invariant
        let ratio = p.eval(&center).norm() / bmax;
        if ratio > max_ratio {
            max_ratio = ratio;
        }
    }
    Ok(HullReport {
        npolys,
        max_degree,
        seed,
        n_boundary,
        max_ratio,
    })
}

/// Hull test on the flat witness disk {center + (r zeta, 0, 0)}.
pub fn hull_obstruction_test(
    witness: &WitnessCircle,
    npolys: usize,
    max_degree: u16,
    seed: u64,
) -> Result<HullReport> {
    witness.validate()?;
    let c = witness.center;
    let r = witness.r;
    hull_test_on_disk(
        move |zeta| {
            Ok(C3Point::new(
                c.z1 + Complex64::new(r, 0.0) * zeta,
                c.z2,
                c.z3,
            ))
        },
        npolys,
        max_degree,
        seed,
        256,
    )
}

/// The bundled non-Runge obstruction certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionCertificate {
    pub schema: String,
    pub witness: WitnessCircle,
    pub q: C3Point,
    pub boundary_in_domain: bool,
    pub min_interior_margin: f64,
    pub n_theta: usize,
    pub center_excluded: bool,
    pub exclusion: ExclusionEvidence,
    pub hull: HullReport,
    /// Interior-margin threshold the witness search applied.
    pub mu_min: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonRungeConfig {
    pub grid: SearchGrid,
    pub npolys: usize,
    pub max_degree: u16,
    pub seed: u64,
}

impl NonRungeConfig {
    pub fn default_for(delta_ball: f64) -> Self {
        Self {
            grid: SearchGrid::default_for(delta_ball),
            npolys: 200,
            max_degree: 5,
            seed: 42,
        }
    }
}

pub fn nonrunge_certificate(
    map: &MapExpr,
    domain: &DomainSpec,
    q: &C3Point,
    delta_ball: f64,
    config: &NonRungeConfig,
) -> Result<ObstructionCertificate> {
    let found = find_witness_circle(map, domain, q, delta_ball, &config.grid)?;
    let hull = hull_obstruction_test(&found.witness, config.npolys, config.max_degree, config.seed)?;
    let boundary_ok = found.min_interior_margin >= config.grid.mu_min;
    let excluded = found.exclusion.sampled_distance > 0.0;
    let valid = boundary_ok && excluded && hull.max_ratio <= HULL_RATIO_BOUND;
    Ok(ObstructionCertificate {
        schema: crate::SCHEMA.to_string(),
        witness: found.witness,
        q: *q,
        boundary_in_domain: boundary_ok,
        min_interior_margin: found.min_interior_margin,
        n_theta: found.n_theta,
        center_excluded: excluded,
        exclusion: found.exclusion,
        hull,
        mu_min: config.grid.mu_min,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{build_f, CompositeMap, MapExpr, WermerParams};

    #[test]
    fn winding_counts_the_simple_zero_of_identity() {
        let rect = Rectangle::new(-1.0, 1.0, -1.0, 1.0);
        let w = winding_number(&ScalarMap::Identity, &rect, 512).unwrap();
        assert_eq!(w.winding, 1);
        assert!(w.pre_rounding_residue < 0.25);
    }

    #[test]
    fn winding_of_exp_is_zero() {
        let rect = Rectangle::new(-2.0, 3.0, -1.5, 2.5);
        let w = winding_number(&ScalarMap::Exp, &rect, 512).unwrap();
        assert_eq!(w.winding, 0);
    }

    #[test]
    fn f50_rectangle_winding_matches_the_newton_verified_zero_count() {
        // Independent oracle: Newton polishing from the 2 pi i k branch seeds
        // locates 24 distinct zeros (12 conjugate pairs, Im ~ 1.27..1.97)
        // strictly inside the rectangle; the argument principle must agree.
        let rect = Rectangle::new(-2.0, -0.01, -2.0, 2.0);
        let w = winding_number(&ScalarMap::FN { n: 50 }, &rect, 4096).unwrap();
        assert_eq!(w.winding, 24);
    }

    #[test]
    fn f100_f200_rectangles_are_zero_free() {
        let rect = Rectangle::new(-2.0, -0.01, -2.0, 2.0);
        for n in [100u32, 200] {
            let cert = certify_zero_free(n, &rect).unwrap();
            assert!(cert.valid, "N={n}: winding {}", cert.winding);
            assert!(cert.pre_rounding_residue < 0.25);
            // cross-check: a dense scan stays away from zero
            let scan = min_modulus_scan(&ScalarMap::FN { n }, &rect, 100, 100).unwrap();
            assert!(scan > 0.0);
        }
    }

    #[test]
    fn f50_certificate_honestly_reports_invalid() {
        // the rectangle contains 24 zeros of f_50; the certificate must carry
        // the true winding and refuse to validate
        let rect = Rectangle::new(-2.0, -0.01, -2.0, 2.0);
        let cert = certify_zero_free(50, &rect).unwrap();
        assert_eq!(cert.winding, 24);
        assert!(!cert.valid);
        assert!(cert.pre_rounding_residue < 0.25);
    }

    #[test]
    fn principal_branch_auxiliary_map_is_zero_free_where_f50_is_not() {
        // 2w + Log(1-2w)/N sees only the k = 0 branch of the zero set of f_N,
        // and that branch stays outside the rectangle for every N here; the
        // 24 zeros of f_50 all live on the k != 0 branches
        let rect = Rectangle::new(-2.0, -0.01, -2.0, 2.0);
        for n in [50u32, 100, 200] {
            let w = winding_number(&ScalarMap::AuxLog { n }, &rect, 1024).unwrap();
            assert_eq!(w.winding, 0, "aux map winding for N={n}");
            let scan = min_modulus_scan(&ScalarMap::AuxLog { n }, &rect, 100, 100).unwrap();
            assert!(scan > 0.0);
        }
    }

    #[test]
    fn zero_free_rejects_rectangles_touching_the_axis() {
        let rect = Rectangle::new(-1.0, 0.0, -2.0, 2.0);
        assert!(matches!(
            certify_zero_free(50, &rect),
            Err(Error::Contour(_))
        ));
    }

    #[test]
    fn identity_inclusion_has_no_violations() {
        let b = DomainSpec::ShiftedBallB;
        let rep =
            check_inclusion(&b, &MapExpr::Identity, &b, 2000, 3, None).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.valid());
        assert!(rep.worst_margin > 0.0);
    }

    #[test]
    fn coarse_delta2_breaks_the_local_inclusion() {
        // c1 = (delta2/delta1)^2 >> p: violations appear even in the window.
        let params = WermerParams {
            n1: 40,
            n2: 10,
            delta1: 1e-3,
            delta2: 0.5,
            p: 0.1,
        };
        let g = MapExpr::Pipeline(crate::composite::build_g(&params).unwrap());
        let rep = check_inclusion(
            &DomainSpec::WermerDp { p: 0.1 },
            &g,
            &DomainSpec::ShiftedBallB,
            2000,
            5,
            Some(1e-4),
        )
        .unwrap();
        assert!(rep.violations > 0, "expected violations, got {rep:?}");
    }

    #[test]
    fn base_map_witness_matches_the_hand_computed_pair() {
        let dom = DomainSpec::WermerDp { p: 0.1 };
        let phi = MapExpr::Pipeline(CompositeMap::new(vec![crate::composite::Stage::Phi]));
        let grid = SearchGrid::default_for(0.2);
        let res = find_witness_circle(&phi, &dom, &C3Point::ZERO, 0.2, &grid).unwrap();
        assert!((res.witness.r - 0.1).abs() < 1e-15);
        assert!((res.witness.alpha - 1e-3).abs() < 1e-15);
        // every preimage is (0.1 e^{i t}, 0.02 e^{-i t}, -0.001) with margin 9.59e-4
        assert!((res.min_interior_margin - 9.59e-4).abs() < 1e-9);
        assert!(res.exclusion.algebraic);
    }

    #[test]
    fn identity_map_has_no_witness_on_the_ball() {
        let dom = DomainSpec::ShiftedBallB;
        let grid = SearchGrid::default_for(0.2);
        let err = find_witness_circle(&MapExpr::Identity, &dom, &C3Point::ZERO, 0.2, &grid);
        assert!(matches!(err, Err(Error::NoWitness(_))));
    }

    #[test]
    fn hull_ratio_is_one_for_constants_and_z3() {
        let w = WitnessCircle {
            r: 0.1,
            alpha: 1e-3,
            center: C3Point::from_re(0.0, 0.0, 1e-3),
            margin: 1.0,
        };
        // P == 1
        let rep = hull_test_on_disk(
            |zeta| {
                Ok(C3Point::new(
                    w.center.z1 + Complex64::new(w.r, 0.0) * zeta,
                    w.center.z2,
                    w.center.z3,
                ))
            },
            1,
            0,
            1,
            64,
        )
        .unwrap();
        assert!((rep.max_ratio - 1.0).abs() < 1e-14);
        // P = z3 is constant on the disk: handled by the general test through
        // a degree-1 draw is random, so check it directly instead.
        let p3 = Poly3::var(2);
        let center_val = p3.eval(&w.center).norm();
        let boundary_val = p3
            .eval(&C3Point::new(
                w.center.z1 + Complex64::new(w.r, 0.0),
                w.center.z2,
                w.center.z3,
            ))
            .norm();
        assert_eq!(center_val, boundary_val);
    }

    #[test]
    fn hull_max_ratio_bounded_for_random_polynomials() {
        let w = WitnessCircle {
            r: 0.1,
            alpha: 1e-3,
            center: C3Point::from_re(0.0, 0.0, 1e-3),
            margin: 1.0,
        };
        let rep = hull_obstruction_test(&w, 200, 5, 42).unwrap();
        assert!(
            rep.max_ratio <= HULL_RATIO_BOUND,
            "maximum principle violated: {}",
            rep.max_ratio
        );
        // richer boundary sampling never invalidates the certificate
        let rep2 = hull_test_on_disk(
            |zeta| {
                Ok(C3Point::new(
                    w.center.z1 + Complex64::new(w.r, 0.0) * zeta,
                    w.center.z2,
                    w.center.z3,
                ))
            },
            200,
            5,
            42,
            1024,
        )
        .unwrap();
        assert!(rep2.max_ratio <= HULL_RATIO_BOUND);
    }

    #[test]
    fn nonrunge_certificate_for_the_base_map() {
        let dom = DomainSpec::WermerDp { p: 0.1 };
        let phi = MapExpr::Pipeline(CompositeMap::new(vec![crate::composite::Stage::Phi]));
        let cfg = NonRungeConfig::default_for(0.2);
        let cert = nonrunge_certificate(&phi, &dom, &C3Point::ZERO, 0.2, &cfg).unwrap();
        assert!(cert.valid);
        assert!(cert.exclusion.algebraic);
        assert!(cert.hull.max_ratio <= HULL_RATIO_BOUND);
    }

    #[test]
    fn nonrunge_certificate_rejects_the_identity() {
        let cfg = NonRungeConfig::default_for(0.2);
        let err = nonrunge_certificate(
            &MapExpr::Identity,
            &DomainSpec::ShiftedBallB,
            &C3Point::ZERO,
            0.2,
            &cfg,
        );
        assert!(matches!(err, Err(Error::NoWitness(_))));
    }

    #[test]
    fn tuned_f_admits_a_witness() {
        let params = WermerParams {
            n1: 160,
            n2: 160,
            delta1: 0.1,
            delta2: 0.015625,
            p: 0.1,
        };
        let f = MapExpr::Pipeline(build_f(&params).unwrap());
        let grid = SearchGrid::default_for(0.2);
        let res =
            find_witness_circle(&f, &DomainSpec::ShiftedBallB, &C3Point::ZERO, 0.2, &grid)
                .unwrap();
        assert!(res.min_interior_margin >= 1e-6);
        assert!(res.exclusion.algebraic);
        assert!(res.witness.margin > 0.0);
    }
}
