//! Composition pipelines: the modified Wermer maps G and F, affine
//! conjugations, polynomial-corrected maps, deviation measurement and the
//! quadratic fit of the G(B) defining function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::maps;
use crate::point::{C3Point, Mat3};
use crate::poly::PolyMap3;
use crate::sampling;
use crate::scalar::{f_n, f_n_deriv, h_delta_n, h_delta_n_deriv};

/// The parameter quadruple of the modified Wermer map plus the exponent p of
/// the target domain D_p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WermerParams {
    pub n1: u32,
    pub n2: u32,
    pub delta1: f64,
    pub delta2: f64,
    pub p: f64,
}

impl WermerParams {
    pub fn validate(&self) -> Result<()> {
        if self.n1 < 1 || self.n2 < 1 {
            return Err(Error::InvalidParameter(format!(
                "N1, N2 must be >= 1, got ({}, {})",
                self.n1, self.n2
            )));
        }
        if self.delta1 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta1 must be > 0, got {}",
                self.delta1
            )));
        }
        if !(self.delta2 > 0.0 && self.delta2 <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "delta2 must lie in (0, 1/2], got {}",
                self.delta2
            )));
        }
        if !(self.p > 0.0 && self.p < 0.25) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 1/4), got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// One elementary stage of a pipeline, in application order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stage {
    F1 { delta: f64 },
    F1Inv { delta: f64 },
    F2 { n: u32 },
    F3 { n: u32, delta: f64 },
    Phi,
}

impl Stage {
    fn eval(&self, z: &C3Point) -> Result<C3Point> {
        match self {
            Stage::F1 { delta } => maps::f1(z, *delta),
            Stage::F1Inv { delta } => maps::f1_inv(z, *delta),
            Stage::F2 { n } => maps::f2(z, *n),
            Stage::F3 { n, delta } => maps::f3(z, *n, *delta),
            Stage::Phi => Ok(maps::phi(z)),
        }
    }

    fn invert(&self, w: &C3Point, phi_filter: &DomainSpec) -> Result<C3Point> {
        match self {
            Stage::F1 { delta } => maps::f1_inv(w, *delta),
            Stage::F1Inv { delta } => maps::f1(w, *delta),
            Stage::F2 { n } => maps::f2_inv(w, *n),
            Stage::F3 { n, delta } => maps::f3_inv(w, *n, *delta),
            Stage::Phi => {
                let pre = maps::phi_preimages(w, phi_filter, 1e-9)?;
                match pre.filtered.len() {
                    1 => Ok(pre.filtered[0]),
                    0 => Err(Error::Inversion(format!(
                        "phi stage: no preimage of ({:.6e},{:.6e},{:.6e}) in the filter domain",
                        w.z1, w.z2, w.z3
                    ))),
                    k => Err(Error::CertificateViolation(format!(
                        "phi stage: {k} preimages survived the injectivity filter at \
                         ({:.6e},{:.6e},{:.6e}); numerics left the certified regime",
                        w.z1, w.z2, w.z3
                    ))),
                }
            }
        }
    }

    fn jacobian(&self, z: &C3Point) -> Result<Mat3> {
        let one = Complex64::new(1.0, 0.0);
        Ok(match self {
            Stage::F1 { delta } => {
                let d = Complex64::new(*delta, 0.0);
                Mat3::diag(d, d, one)
            }
            Stage::F1Inv { delta } => {
                let d = Complex64::new(1.0 / *delta, 0.0);
                Mat3::diag(d, d, one)
            }
            Stage::F2 { n } => {
                let f = f_n(z.z3, *n);
                let fp = f_n_deriv(z.z3, *n);
                let mut m = Mat3::diag(one, f, one);
                m.m[1][2] = z.z2 * fp;
                m
            }
            Stage::F3 { n, delta } => {
                let h = h_delta_n(z.z3, *n, *delta)?;
                let hp = h_delta_n_deriv(z.z3, *n, *delta)?;
                let mut m = Mat3::diag(h, h, one);
                m.m[0][2] = z.z1 * hp;
                m.m[1][2] = z.z2 * hp;
                m
            }
            Stage::Phi => maps::phi_jacobian(z),
        })
    }
}

/// A pipeline of elementary stages, applied left to right. Inversion walks
/// the stages right to left; the phi stage selects the unique preimage inside
/// `phi_filter` (the half space H unless stated otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeMap {
    pub stages: Vec<Stage>,
    pub phi_filter: DomainSpec,
}

impl CompositeMap {
    pub fn new(stages: Vec<Stage>) -> Self {
        Self {
            stages,
            phi_filter: DomainSpec::HalfSpaceH,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vec::new())
    }

    pub fn forward(&self, z: &C3Point) -> Result<C3Point> {
        let mut cur = *z;
        for s in &self.stages {
            cur = s.eval(&cur)?;
        }
        Ok(cur)
    }

    pub fn inverse(&self, w: &C3Point) -> Result<C3Point> {
        let mut cur = *w;
        for s in self.stages.iter().rev() {
            cur = s.invert(&cur, &self.phi_filter)?;
        }
        Ok(cur)
    }

    /// Chain-rule Jacobian of the whole pipeline.
    pub fn jacobian(&self, z: &C3Point) -> Result<Mat3> {
        let mut cur = *z;
        let mut j = Mat3::identity();
        for s in &self.stages {
            j = s.jacobian(&cur)?.mul(&j);
            cur = s.eval(&cur)?;
        }
        Ok(j)
    }

    /// Flatten nested stage lists; composition is associative by construction.
    pub fn then(&self, other: &CompositeMap) -> CompositeMap {
        let mut stages = self.stages.clone();
        stages.extend(other.stages.iter().cloned());
        CompositeMap {
            stages,
            phi_filter: self.phi_filter.clone(),
        }
    }
}

/// G = F2^{N1} o F3^{N2,delta2} o F1^{delta1} as a pipeline (F1 applied first).
pub fn build_g(params: &WermerParams) -> Result<CompositeMap> {
    params.validate()?;
    Ok(CompositeMap::new(vec![
        Stage::F1 { delta: params.delta1 },
        Stage::F3 {
            n: params.n2,
            delta: params.delta2,
        },
        Stage::F2 { n: params.n1 },
    ]))
}

/// F = (F1^{delta1})^{-1} o phi o G as a pipeline.
pub fn build_f(params: &WermerParams) -> Result<CompositeMap> {
    params.validate()?;
    Ok(CompositeMap::new(vec![
        Stage::F1 { delta: params.delta1 },
        Stage::F3 {
            n: params.n2,
            delta: params.delta2,
        },
        Stage::F2 { n: params.n1 },
        Stage::Phi,
        Stage::F1Inv { delta: params.delta1 },
    ]))
}

/// Closed form of G: (d1 z1 h, d1 z2 h f, z3).
pub fn g_closed_form(params: &WermerParams, z: &C3Point) -> Result<C3Point> {
    let h = h_delta_n(z.z3, params.n2, params.delta2)?;
    let f = f_n(z.z3, params.n1);
    let d1 = Complex64::new(params.delta1, 0.0);
    Ok(C3Point::new(d1 * z.z1 * h, d1 * z.z2 * h * f, z.z3))
}

/// Closed form of F: expanding (F1)^{-1} o phi o G gives
/// (z1 h, d1^2 z1 z2^2 h^3 f^2 + z2 h f (2 z3), d1^2 z1 z2 h^2 f + z3).
/// The third coordinate carries d1^2: (F1)^{-1} does not touch z3, so it
/// inherits the phi(G(z)) coefficient unchanged.
pub fn f_closed_form(params: &WermerParams, z: &C3Point) -> Result<C3Point> {
    let h = h_delta_n(z.z3, params.n2, params.delta2)?;
    let f = f_n(z.z3, params.n1);
    let d1 = params.delta1;
    let d1sq = Complex64::new(d1 * d1, 0.0);
    Ok(C3Point::new(
        z.z1 * h,
        d1sq * z.z1 * z.z2 * z.z2 * h * h * h * f * f + z.z2 * h * f * 2.0 * z.z3,
        d1sq * z.z1 * z.z2 * h * h * f + z.z3,
    ))
}

/// Unitary-plus-translation map z |-> U z + t with exact inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub u: Mat3,
    pub t: C3Point,
}

impl AffineMap {
    pub fn identity() -> Self {
        Self {
            u: Mat3::identity(),
            t: C3Point::ZERO,
        }
    }

    pub fn eval(&self, z: &C3Point) -> C3Point {
        self.u.apply(z).add(&self.t)
    }

    fn u_adjoint(&self) -> Mat3 {
        let mut a = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                a.m[i][j] = self.u.m[j][i].conj();
            }
        }
        a
    }

    pub fn inverse_map(&self) -> AffineMap {
        let uh = self.u_adjoint();
        AffineMap {
            u: uh,
            t: uh.apply(&self.t).scale(Complex64::new(-1.0, 0.0)),
        }
    }

    pub fn invert(&self, w: &C3Point) -> C3Point {
        self.u_adjoint().apply(&w.sub(&self.t))
    }
}

fn hdot(a: &C3Point, b: &C3Point) -> Complex64 {
    a.z1.conj() * b.z1 + a.z2.conj() * b.z2 + a.z3.conj() * b.z3
}

/// Rigid motion taking the model ball B = {2 Re z3 + ||z||^2 < 0} onto the
/// unit ball with the model boundary point 0 mapped to `alpha`: A(z) = U(z + e3)
/// with U unitary, U e3 = alpha. Hence A(0,0,-1) = 0 and A(0) = alpha.
pub fn conjugation_to(alpha: &C3Point) -> Result<AffineMap> {
    let n = alpha.norm();
    if (n - 1.0).abs() >= 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "conjugation_to requires a unit vector, got norm {n}"
        )));
    }
    let a = alpha.scale(Complex64::new(1.0 / n, 0.0));
    // complete {a} to an orthonormal basis by Gram-Schmidt over the standard basis
    let e = [
        C3Point::from_re(1.0, 0.0, 0.0),
        C3Point::from_re(0.0, 1.0, 0.0),
        C3Point::from_re(0.0, 0.0, 1.0),
    ];
    let mut basis: Vec<C3Point> = Vec::new();
    for cand in e.iter() {
        if basis.len() == 2 {
            break;
        }
        let mut v = *cand;
        let pa = hdot(&a, &v);
        v = v.sub(&a.scale(pa));
        for b in &basis {
            let pb = hdot(b, &v);
            v = v.sub(&b.scale(pb));
        }
        let vn = v.norm();
        if vn > 1e-6 {
            basis.push(v.scale(Complex64::new(1.0 / vn, 0.0)));
        }
    }
    if basis.len() != 2 {
        return Err(Error::InvalidParameter(
            "failed to complete alpha to an orthonormal basis".into(),
        ));
    }
    let cols = [basis[0], basis[1], a];
    let mut u = Mat3::zero();
    for (j, col) in cols.iter().enumerate() {
        u.m[0][j] = col.z1;
        u.m[1][j] = col.z2;
        u.m[2][j] = col.z3;
    }
    Ok(AffineMap {
        u,
        t: *alpha,
    })
}

/// A holomorphic map expression: pipelines, rigid motions, polynomial-corrected
/// maps and compositions, with forward / Jacobian / inverse evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MapExpr {
    Identity,
    Pipeline(CompositeMap),
    Affine(AffineMap),
    /// base(z) - correction(z); inverse via Newton seeded by the base inverse.
    Corrected {
        base: Box<MapExpr>,
        correction: PolyMap3,
    },
    /// Applied in list order: Seq([a, b]) evaluates b(a(z)).
    Seq(Vec<MapExpr>),
}

impl MapExpr {
    pub fn eval(&self, z: &C3Point) -> Result<C3Point> {
        match self {
            MapExpr::Identity => Ok(*z),
            MapExpr::Pipeline(p) => p.forward(z),
            MapExpr::Affine(a) => Ok(a.eval(z)),
            MapExpr::Corrected { base, correction } => {
                Ok(base.eval(z)?.sub(&correction.eval(z)))
            }
            MapExpr::Seq(list) => {
                let mut cur = *z;
                for m in list {
                    cur = m.eval(&cur)?;
                }
                Ok(cur)
            }
        }
    }

    pub fn jacobian(&self, z: &C3Point) -> Result<Mat3> {
        match self {
            MapExpr::Identity => Ok(Mat3::identity()),
            MapExpr::Pipeline(p) => p.jacobian(z),
            MapExpr::Affine(a) => Ok(a.u),
            MapExpr::Corrected { base, correction } => {
                let jb = base.jacobian(z)?;
                let jc = correction.jacobian(z);
                let mut m = Mat3::zero();
                for i in 0..3 {
                    for j in 0..3 {
                        m.m[i][j] = jb.m[i][j] - jc.m[i][j];
                    }
                }
                Ok(m)
            }
            MapExpr::Seq(list) => {
                let mut cur = *z;
                let mut j = Mat3::identity();
                for m in list {
                    j = m.jacobian(&cur)?.mul(&j);
                    cur = m.eval(&cur)?;
                }
                Ok(j)
            }
        }
    }

    pub fn invert(&self, w: &C3Point) -> Result<C3Point> {
        match self {
            MapExpr::Identity => Ok(*w),
            MapExpr::Pipeline(p) => p.inverse(w),
            MapExpr::Affine(a) => Ok(a.invert(w)),
            MapExpr::Corrected { base, correction } => {
                let seed = base.invert(w)?;
                if correction.is_zero() {
                    return Ok(seed);
                }
                newton_invert(self, w, &seed, 60, 1e-12)
            }
            MapExpr::Seq(list) => {
                let mut cur = *w;
                for m in list.iter().rev() {
                    cur = m.invert(&cur)?;
                }
                Ok(cur)
            }
        }
    }
}

/// Damped Newton solve of map(z) = w from a seed; tolerance is relative to
/// 1 + |w|.
pub fn newton_invert(
    map: &MapExpr,
    w: &C3Point,
    seed: &C3Point,
    max_iter: usize,
    rel_tol: f64,
) -> Result<C3Point> {
    let scale = 1.0 + w.norm();
    let mut z = *seed;
    let mut resid = map.eval(&z)?.sub(w);
    for _ in 0..max_iter {
        if resid.norm() <= rel_tol * scale {
            return Ok(z);
        }
        let j = map.jacobian(&z)?;
        let step = j.solve(&resid)?;
        let mut lambda = 1.0;
        loop {
            let cand = z.sub(&step.scale(Complex64::new(lambda, 0.0)));
            match map.eval(&cand) {
                Ok(v) => {
                    let r = v.sub(w);
                    if r.norm() < resid.norm() || lambda < 1.0 / 64.0 {
                        z = cand;
                        resid = r;
                        break;
                    }
                }
                Err(_) => {}
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::Inversion(
                    "Newton line search stalled while inverting a corrected map".into(),
                ));
            }
        }
    }
    if resid.norm() <= rel_tol * scale {
        Ok(z)
    } else {
        Err(Error::Inversion(format!(
            "Newton inversion did not converge: residual {:.3e}",
            resid.norm()
        )))
    }
}

/// Sampled sup of ||map(z) - z|| over a deterministic interior + boundary grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeviationReport {
    pub sup: f64,
    pub nsamples: usize,
}

pub fn deviation_sup(
    map: &MapExpr,
    domain: &DomainSpec,
    nsamples: usize,
    seed: u64,
) -> Result<DeviationReport> {
    if nsamples == 0 {
        return Err(Error::InvalidParameter("nsamples must be >= 1".into()));
    }
    let interior = (nsamples * 4) / 5;
    let boundary = nsamples - interior;
    let mut pts = sampling::low_discrepancy_interior(domain, interior.max(1), seed)?;
    let extra = sampling::low_discrepancy_interior(domain, boundary.max(1), seed + 7919)?;
    for z in extra {
        if let Ok(b) = sampling::project_to_boundary(domain, &z, 1e-12) {
            pts.push(b);
        }
    }
    deviation_sup_over(map, &pts)
}

/// Same measurement over an explicit point set.
pub fn deviation_sup_over(map: &MapExpr, pts: &[C3Point]) -> Result<DeviationReport> {
    let mut sup: f64 = 0.0;
    for z in pts {
        let w = map.eval(z)?;
        sup = sup.max(w.sub(z).norm());
    }
    Ok(DeviationReport {
        sup,
        nsamples: pts.len(),
    })
}

/// Exact coefficient of |w1|^2 in the defining function of G(B) at height w3:
/// 1 / (delta1 |h(w3)|)^2.
pub fn gb_coefficient_c1(params: &WermerParams, w3: Complex64) -> Result<f64> {
    let h = h_delta_n(w3, params.n2, params.delta2)?;
    let d = params.delta1 * h.norm();
    Ok(1.0 / (d * d))
}

/// Exact coefficient of |w2|^2: 1 / (delta1 |h(w3) f(w3)|)^2.
pub fn gb_coefficient_c2(params: &WermerParams, w3: Complex64) -> Result<f64> {
    let h = h_delta_n(w3, params.n2, params.delta2)?;
    let f = f_n(w3, params.n1);
    let d = params.delta1 * (h * f).norm();
    if d == 0.0 {
        return Err(Error::Fit("f vanished at the fit height".into()));
    }
    Ok(1.0 / (d * d))
}

/// Quadratic coefficients of the G(B) defining function at the origin,
/// numerically fitted from boundary points of B pushed through G, reported
/// next to the paper's printed coefficients.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GbQuadraticCoeffs {
    pub c1_fitted: f64,
    pub c2_fitted: f64,
    /// delta2/delta1 and delta2^2/((N1-1)^2 delta1), as printed.
    pub c1_printed: f64,
    pub c2_printed: f64,
    pub fit_radius: f64,
    pub fit_points: usize,
    pub fit_residual: f64,
}

pub fn gb_quadratic_coeffs(params: &WermerParams) -> Result<GbQuadraticCoeffs> {
    params.validate()?;
    if params.n1 < 2 {
        return Err(Error::InvalidParameter(
            "gb_quadratic_coeffs requires N1 >= 2".into(),
        ));
    }
    let g = build_g(params)?;
    // keep the fit window well inside the h-decay scale delta2/N2 so the
    // coefficient functions are effectively constant over it
    let fit_radius = (params.delta2 / (40.0 * params.n2 as f64)).min(1e-3);
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    // boundary points of B with z3 = -t real, t log-spaced, and (z1,z2) on the
    // sphere slice |z1|^2 + |z2|^2 = 2t - t^2, mixing pure-z1, pure-z2 and
    // diagonal directions so the normal equations stay well conditioned.
    let depths = 8;
    for i in 0..depths {
        let t = fit_radius * 0.5f64.powi(i);
        let s2 = 2.0 * t - t * t;
        if s2 <= 0.0 {
            continue;
        }
        let s = s2.sqrt();
        for (c1w, c2w) in [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (0.8, 0.2)] {
            for theta in [0.0, 1.0, 2.3] {
                let z = C3Point::new(
                    Complex64::from_polar(s * f64::sqrt(c1w), theta),
                    Complex64::from_polar(s * f64::sqrt(c2w), -theta * 0.7),
                    Complex64::new(-t, 0.0),
                );
                let w = g.forward(&z)?;
                let target = -(2.0 * w.z3.re + w.z3.norm_sqr());
                rows.push((w.z1.norm_sqr(), w.z2.norm_sqr(), target));
            }
        }
    }
    // 2x2 least squares for (c1, c2)
    let (mut saa, mut sab, mut sbb, mut sat, mut sbt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, b, t) in &rows {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sat += a * t;
        sbt += b * t;
    }
    let det = saa * sbb - sab * sab;
    if det.abs() <= 1e-24 * (saa * sbb).max(1e-300) {
        return Err(Error::Fit(format!(
            "normal equations ill-conditioned: det = {det:.3e}"
        )));
    }
    let c1 = (sat * sbb - sbt * sab) / det;
    let c2 = (sbt * saa - sat * sab) / det;
    let mut resid: f64 = 0.0;
    for (a, b, t) in &rows {
        resid = resid.max((c1 * a + c2 * b - t).abs() / t.abs().max(1e-300));
    }
    let nm1 = (params.n1 - 1) as f64;
    Ok(GbQuadraticCoeffs {
        c1_fitted: c1,
        c2_fitted: c2,
        c1_printed: params.delta2 / params.delta1,
        c2_printed: params.delta2 * params.delta2 / (nm1 * nm1 * params.delta1),
        fit_radius,
        fit_points: rows.len(),
        fit_residual: resid,
    })
}
