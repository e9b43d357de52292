//! Finite-depth inductive chain: plant W-degenerate points at boundary points
//! alpha_0, ..., alpha_{n-1} of the unit ball by conjugated Wermer
//! modifications with Hermite-type interpolation corrections, tracking the
//! per-stage conditions (a)-(e) in an explicit ledger.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certify::{find_witness_circle, hull_test_on_disk, SearchGrid, HULL_RATIO_BOUND};
use crate::composite::{
    build_f, conjugation_to, newton_invert, AffineMap, MapExpr, WermerParams,
};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::point::C3Point;
use crate::poly::{Poly3, PolyMap3};
use crate::sampling;
use crate::tuner::{tune, TuningTargets};

/// Minimum pairwise separation of interpolation points.
pub const SIGMA_MIN: f64 = 1e-3;
const JET_RADIUS: f64 = 0.05;
const JET_CIRCLE_POINTS: usize = 16;
const VALUE_MATCH_TOL: f64 = 1e-10;

/// Quasi-uniform distinct points on the unit sphere of C^3 (the real
/// 5-sphere), deterministic given the seed.
pub fn dense_boundary_points(n: usize, seed: u64) -> Result<Vec<C3Point>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1 points".into()));
    }
    let mut rng = crate::poly::seeded_rng(seed ^ 0x5b0a_11ce);
    let mut out: Vec<C3Point> = Vec::with_capacity(n);
    while out.len() < n {
        let s: [f64; 6] = sampling::unit_sphere_point(&mut rng);
        let p = C3Point::from_reals(s);
        if out.iter().all(|q| q.dist(&p) > 1e-6) {
            out.push(p);
        }
    }
    Ok(out)
}

/// A polynomial correction pinned to interpolation data: the corrected map is
/// base - correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionMap {
    pub correction: PolyMap3,
    pub order3_points: Vec<C3Point>,
    pub value_points: Vec<(C3Point, C3Point)>,
    /// Sup of ||correction|| over the check region.
    pub sup_norm: f64,
}

/// 2-jet of a map component set at beta via Cauchy circles of radius rho in
/// the coordinate and polarization directions. Returns the jet of (map - id)
/// as a polynomial map exact at beta.
fn two_jet_of_deviation(
    map: &MapExpr,
    beta: &C3Point,
    rho: f64,
) -> Result<(C3Point, [[Complex64; 3]; 3], [[[Complex64; 3]; 3]; 3])> {
    // value
    let value = map.eval(beta)?.sub(beta);
    // directions: e1, e2, e3 and the pair sums
    let dirs: [[Complex64; 3]; 6] = {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        [
            [l, o, o],
            [o, l, o],
            [o, o, l],
            [l, l, o],
            [l, o, l],
            [o, l, l],
        ]
    };
    // Taylor coefficients a1, a2 of t -> (map - id)(beta + t dir) per direction
    let mut a1 = [[Complex64::new(0.0, 0.0); 3]; 6];
    let mut a2 = [[Complex64::new(0.0, 0.0); 3]; 6];
    for (d, dir) in dirs.iter().enumerate() {
        for k in 0..JET_CIRCLE_POINTS {
            let th = 2.0 * std::f64::consts::PI * k as f64 / JET_CIRCLE_POINTS as f64;
            let t = Complex64::from_polar(rho, th);
            let z = C3Point::new(
                beta.z1 + t * dir[0],
                beta.z2 + t * dir[1],
                beta.z3 + t * dir[2],
            );
            let v = map.eval(&z)?.sub(&z);
            let comps = [v.z1, v.z2, v.z3];
            for c in 0..3 {
                let e1 = Complex64::from_polar(1.0, -th);
                let e2 = Complex64::from_polar(1.0, -2.0 * th);
                a1[d][c] += comps[c] * e1;
                a2[d][c] += comps[c] * e2;
            }
        }
        for c in 0..3 {
            a1[d][c] /= Complex64::new(JET_CIRCLE_POINTS as f64 * rho, 0.0);
            a2[d][c] /= Complex64::new(JET_CIRCLE_POINTS as f64 * rho * rho, 0.0);
        }
    }
    // first partials: directions 0..3
    let mut grad = [[Complex64::new(0.0, 0.0); 3]; 3];
    for c in 0..3 {
        for j in 0..3 {
            grad[c][j] = a1[j][c];
        }
    }
    // second partials: hess[c][i][j] = d^2 (comp c) / dz_i dz_j
    let mut hess = [[[Complex64::new(0.0, 0.0); 3]; 3]; 3];
    let pair_index = |i: usize, j: usize| match (i, j) {
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        (1, 2) | (2, 1) => 5,
        _ => unreachable!(),
    };
    for c in 0..3 {
        for i in 0..3 {
            hess[c][i][i] = 2.0 * a2[i][c];
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let m = a2[pair_index(i, j)][c] - a2[i][c] - a2[j][c];
                hess[c][i][j] = m;
                hess[c][j][i] = m;
            }
        }
    }
    Ok((value, grad, hess))
}

/// Jet as a PolyMap3 in ambient coordinates: value + grad.(z-beta) +
/// (1/2)(z-beta)^T hess (z-beta).
fn jet_polynomial(
    beta: &C3Point,
    value: &C3Point,
    grad: &[[Complex64; 3]; 3],
    hess: &[[[Complex64; 3]; 3]; 3],
) -> PolyMap3 {
    let centered: Vec<Poly3> = (0..3)
        .map(|k| {
            let b = [beta.z1, beta.z2, beta.z3][k];
            Poly3::var(k).sub(&Poly3::constant(b))
        })
        .collect();
    let vals = [value.z1, value.z2, value.z3];
    let mut comps: [Poly3; 3] = Default::default();
    for c in 0..3 {
        let mut p = Poly3::constant(vals[c]);
        for j in 0..3 {
            p = p.add(&centered[j].scale(grad[c][j]));
        }
        for i in 0..3 {
            for j in 0..3 {
                let coeff = hess[c][i][j] * Complex64::new(0.5, 0.0);
                if coeff.norm() > 0.0 {
                    p = p.add(&centered[i].mul(&centered[j]).scale(coeff));
                }
            }
        }
        comps[c] = p;
    }
    PolyMap3 { comps }
}

/// Normalized linear form vanishing at `at` and equal to 1 at `one`.
fn linear_form(one: &C3Point, at: &C3Point) -> Poly3 {
    let d = one.sub(at);
    let n2 = d.norm_sqr();
    let coeffs = [d.z1.conj(), d.z2.conj(), d.z3.conj()];
    let ats = [at.z1, at.z2, at.z3];
    let mut p = Poly3::zero();
    for k in 0..3 {
        let c = coeffs[k] / n2;
        p = p.add(&Poly3::var(k).scale(c));
        p = p.add(&Poly3::constant(-c * ats[k]));
    }
    p
}

/// Hermite bump for point i: 1 + O(||z - b_i||^3) at b_i and O(||z - b_j||^3)
/// at every other point.
fn hermite_bump(points: &[C3Point], i: usize) -> Poly3 {
    let mut p = Poly3::constant(Complex64::new(1.0, 0.0));
    for (j, bj) in points.iter().enumerate() {
        if j == i {
            continue;
        }
        p = p.mul(&linear_form(&points[i], bj).pow(3));
    }
    // flatten the 2-jet of p at b_i: multiply by the degree-2 truncation of 1/p
    let beta = &points[i];
    let p0 = p.eval(beta);
    let p_norm = p.scale(Complex64::new(1.0, 0.0) / p0);
    // jets of p_norm at beta (analytic partials)
    let centered: Vec<Poly3> = (0..3)
        .map(|k| {
            let b = [beta.z1, beta.z2, beta.z3][k];
            Poly3::var(k).sub(&Poly3::constant(b))
        })
        .collect();
    let mut a = Poly3::zero(); // linear part of (p_norm - 1) at beta
    for k in 0..3 {
        a = a.add(&centered[k].scale(p_norm.partial(k).eval(beta)));
    }
    let mut bq = Poly3::zero(); // quadratic part
    for k in 0..3 {
        for l in 0..3 {
            let coeff = p_norm.partial(k).partial(l).eval(beta) * Complex64::new(0.5, 0.0);
            if coeff.norm() > 0.0 {
                bq = bq.add(&centered[k].mul(&centered[l]).scale(coeff));
            }
        }
    }
    // q = 1 - a - b + a^2 so that p_norm * q = 1 + O^3 at beta
    let one = Poly3::constant(Complex64::new(1.0, 0.0));
    let q = one.sub(&a).sub(&bq).add(&a.mul(&a));
    p_norm.mul(&q)
}

/// Bump for a value point: 1 at the point, vanishing to order 3 at every
/// order-3 point and to order 1 at the other value points.
fn value_bump(point: &C3Point, order3: &[C3Point], others: &[C3Point]) -> Poly3 {
    let mut p = Poly3::constant(Complex64::new(1.0, 0.0));
    for b in order3 {
        p = p.mul(&linear_form(point, b).pow(3));
    }
    for b in others {
        p = p.mul(&linear_form(point, b));
    }
    let p0 = p.eval(point);
    p.scale(Complex64::new(1.0, 0.0) / p0)
}

/// Subtract from (base - id) its 2-jet at each order-3 point and pin values
/// at the value points. Fails when points collide or the correction's
/// sup-norm over `check_pts` exceeds `budget`.
pub fn build_correction(
    base: &MapExpr,
    order3_points: &[C3Point],
    value_points: &[(C3Point, C3Point)],
    budget: f64,
    check_pts: &[C3Point],
) -> Result<CorrectionMap> {
    let mut all: Vec<C3Point> = order3_points.to_vec();
    all.extend(value_points.iter().map(|(p, _)| *p));
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let d = all[i].dist(&all[j]);
            if d < SIGMA_MIN {
                return Err(Error::Conditioning {
                    min_sep: d,
                    required: SIGMA_MIN,
                });
            }
        }
    }
    let mut correction = PolyMap3::zero();
    for (i, beta) in order3_points.iter().enumerate() {
        let (value, grad, hess) = two_jet_of_deviation(base, beta, JET_RADIUS)?;
        let jet = jet_polynomial(beta, &value, &grad, &hess);
        let bump = hermite_bump(order3_points, i);
        let comps = [
            jet.comps[0].mul(&bump),
            jet.comps[1].mul(&bump),
            jet.comps[2].mul(&bump),
        ];
        correction = correction.add(&PolyMap3 { comps });
    }
    for (k, (point, target)) in value_points.iter().enumerate() {
        let others: Vec<C3Point> = value_points
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, (p, _))| *p)
            .collect();
        let bump = value_bump(point, order3_points, &others);
        let want = base.eval(point)?.sub(target).sub(&correction.eval(point));
        let comps = [
            bump.scale(want.z1),
            bump.scale(want.z2),
            bump.scale(want.z3),
        ];
        correction = correction.add(&PolyMap3 { comps });
    }
    let sup_norm = correction.sup_on(check_pts);
    if sup_norm > budget {
        return Err(Error::CorrectionBudget {
            sup: sup_norm,
            budget,
        });
    }
    Ok(CorrectionMap {
        correction,
        order3_points: order3_points.to_vec(),
        value_points: value_points.to_vec(),
        sup_norm,
    })
}

/// One chain stage: the new boundary point, its tuned parameters, the rigid
/// conjugation, and the interpolation correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub alpha: C3Point,
    pub params: WermerParams,
    pub tuner_eps: f64,
    pub tuner_accepted: bool,
    pub conjugation: AffineMap,
    pub correction: PolyMap3,
    pub correction_sup: f64,
    /// Sampled containment diagnostics of psi_j over the stage Omega region
    /// (violations / samples); informational, not a lettered condition.
    pub omega_containment_violations: usize,
    pub omega_containment_samples: usize,
}

/// Witness disk of stage j: flat model disk (r, alpha) pushed forward by
/// phi_{j-1} o A_j, with its current certification state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub stage: usize,
    pub r: f64,
    pub alpha_offset: f64,
    pub disk_center: C3Point,
    pub n_theta: usize,
    /// Current ball preimages of the disk boundary under phi_n.
    pub preimages: Vec<C3Point>,
    pub interior_margin: f64,
    pub exclusion_margin: f64,
    pub original_interior_margin: f64,
    pub original_exclusion_margin: f64,
    pub hull_max_ratio: f64,
    pub algebraic_exclusion: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub stage: usize,
    pub condition: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainState {
    pub schema: String,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub alphas: Vec<C3Point>,
    pub eps_schedule: Vec<f64>,
    pub delta_schedule: Vec<f64>,
    pub stages: Vec<StageRecord>,
    pub witnesses: Vec<WitnessRecord>,
    pub ledger: Vec<ConditionEntry>,
    /// Sampled sup of ||phi_n - id|| over the fixed unit-ball grid.
    pub grid_sup_deviation: f64,
    /// Budget shrinks applied when a re-validated witness margin was
    /// threatened (stage, new budgets); empty in the usual run.
    pub shrink_events: Vec<String>,
}

impl ChainState {
    pub fn stage_map(&self, j: usize) -> Result<MapExpr> {
        let s = &self.stages[j];
        let a = MapExpr::Affine(s.conjugation.clone());
        let a_inv = MapExpr::Affine(s.conjugation.inverse_map());
        let f = MapExpr::Pipeline(build_f(&s.params)?);
        let base = MapExpr::Seq(vec![a_inv, f, a]);
        Ok(if s.correction.is_zero() {
            base
        } else {
            MapExpr::Corrected {
                base: Box::new(base),
                correction: s.correction.clone(),
            }
        })
    }

    /// phi_j = psi_1 o ... o psi_j (psi_j applied first), j in 1..=stages.
    pub fn phi(&self, j: usize) -> Result<MapExpr> {
        let mut list = Vec::with_capacity(j);
        for i in (0..j).rev() {
            list.push(self.stage_map(i)?);
        }
        Ok(if list.is_empty() {
            MapExpr::Identity
        } else {
            MapExpr::Seq(list)
        })
    }

    pub fn all_conditions_pass(&self) -> bool {
        !self.ledger.is_empty() && self.ledger.iter().all(|e| e.pass)
    }
}

/// Deterministic unit-ball grid: Halton interior points plus sphere points.
pub fn unit_ball_grid(n_interior: usize, n_boundary: usize) -> Vec<C3Point> {
    let mut pts = Vec::with_capacity(n_interior + n_boundary);
    let bases = [2u64, 3, 5, 7, 11, 13];
    let halton = |index: u64, base: u64| -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        let mut i = index;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    };
    let mut idx = 1u64;
    while pts.len() < n_interior {
        let mut c = [0.0; 6];
        for k in 0..6 {
            c[k] = 2.0 * halton(idx, bases[k]) - 1.0;
        }
        idx += 1;
        let z = C3Point::from_reals(c);
        if z.norm_sqr() < 1.0 {
            pts.push(z);
        }
    }
    let mut idx = 1u64;
    let mut added = 0usize;
    while added < n_boundary {
        let mut c = [0.0; 6];
        let mut n2 = 0.0;
        for k in 0..6 {
            c[k] = 2.0 * halton(idx, bases[k]) - 1.0;
            n2 += c[k] * c[k];
        }
        idx += 1;
        if n2 > 1e-12 {
            let inv = 1.0 / n2.sqrt();
            for ck in c.iter_mut() {
                *ck *= inv;
            }
            pts.push(C3Point::from_reals(c));
            added += 1;
        }
    }
    pts
}

fn unit_ball() -> DomainSpec {
    DomainSpec::EuclideanBall {
        center: C3Point::ZERO,
        radius: 1.0,
    }
}

/// Exclusion cloud for (e): interior + boundary-offset samples of the ball.
fn exclusion_cloud(seed: u64) -> Result<Vec<C3Point>> {
    let ball = unit_ball();
    let mut cloud = sampling::sample_interior(&ball, 1500, seed)?;
    for (i, depth) in [1e-6, 1e-4, 1e-2].iter().enumerate() {
        cloud.extend(sampling::boundary_offset_samples(
            &ball,
            700,
            seed + 31 * (i as u64 + 1),
            *depth,
        )?);
    }
    Ok(cloud)
}

struct Revalidation {
    interior_margin: f64,
    exclusion_margin: f64,
    preimages: Vec<C3Point>,
}

/// Re-validate one witness against phi_n: Newton re-solve for each boundary
/// point with the stored preimages as seeds ((d): boundary in the image), and
/// sampled exclusion distance for the disk center ((e)).
fn revalidate_witness(
    state: &ChainState,
    w: &WitnessRecord,
    phi_n: &MapExpr,
    cloud_images: &[C3Point],
) -> Result<Revalidation> {
    let ball = unit_ball();
    // the analytic disk of stage j is parametrized through phi_{j-1} o A_j
    let j = w.stage;
    let phi_prev = state.phi(j - 1)?;
    let a = &state.stages[j - 1].conjugation;
    let mut min_margin = f64::INFINITY;
    let mut preimages = Vec::with_capacity(w.n_theta);
    for (k, seed_pt) in w.preimages.iter().enumerate() {
        let th = 2.0 * std::f64::consts::PI * k as f64 / w.n_theta as f64;
        let s = C3Point::new(
            Complex64::from_polar(w.r, th),
            Complex64::new(0.0, 0.0),
            Complex64::new(w.alpha_offset, 0.0),
        );
        let target = phi_prev.eval(&a.eval(&s))?;
        let y = newton_invert(phi_n, &target, seed_pt, 40, 1e-10)?;
        let margin = ball.margin(&y);
        if margin <= 0.0 {
            return Err(Error::Chain {
                stage: j,
                condition: "d".into(),
                reason: format!("boundary preimage left the ball (margin {margin:.3e})"),
            });
        }
        min_margin = min_margin.min(margin);
        preimages.push(y);
    }
    let mut dist = f64::INFINITY;
    for img in cloud_images {
        let d = img.dist(&w.disk_center);
        if d < dist {
            dist = d;
        }
    }
    Ok(Revalidation {
        interior_margin: min_margin,
        exclusion_margin: dist,
        preimages,
    })
}

/// Build the chain to depth n. Stage j tunes a Wermer modification at
/// alpha_{j-1} (conjugated into the unit ball), corrects it at the earlier
/// alphas, composes, finds a witness disk inside the 2^{-j} ball, and
/// re-validates every previous witness.
pub fn build_chain(n: usize, eps: f64, seed: u64) -> Result<ChainState> {
    build_chain_with(n, eps, seed, None)
}

pub fn build_chain_with(
    n: usize,
    eps: f64,
    seed: u64,
    resume: Option<ChainState>,
) -> Result<ChainState> {
    if n == 0 {
        return Err(Error::InvalidParameter("chain depth must be >= 1".into()));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be > 0".into()));
    }
    let mut state = match resume {
        Some(s) => {
            if s.n >= n {
                return Err(Error::InvalidParameter(format!(
                    "resume state already has {} stages >= requested {n}",
                    s.n
                )));
            }
            if s.eps != eps || s.seed != seed {
                return Err(Error::InvalidParameter(format!(
                    "resume state was built with (eps, seed) = ({}, {}), got ({eps}, {seed})",
                    s.eps, s.seed
                )));
            }
            let mut s = s;
            // extend the alpha list and schedules deterministically
            let alphas = dense_boundary_points(n, s.seed)?;
            if alphas[..s.alphas.len()] != s.alphas[..] {
                return Err(Error::InvalidParameter(
                    "resume state alphas disagree with the seed".into(),
                ));
            }
            s.alphas = alphas;
            for j in s.eps_schedule.len() + 1..=n {
                s.eps_schedule.push(s.eps * 0.5f64.powi(j as i32 + 1));
                s.delta_schedule.push(0.5 * 0.5f64.powi(j as i32));
            }
            s
        }
        None => {
            let alphas = dense_boundary_points(n, seed)?;
            ChainState {
                schema: crate::SCHEMA.to_string(),
                n: 0,
                eps,
                seed,
                alphas,
                eps_schedule: (1..=n).map(|j| eps * 0.5f64.powi(j as i32 + 1)).collect(),
                delta_schedule: (1..=n).map(|j| 0.5 * 0.5f64.powi(j as i32)).collect(),
                stages: Vec::new(),
                witnesses: Vec::new(),
                ledger: Vec::new(),
                grid_sup_deviation: 0.0,
                shrink_events: Vec::new(),
            }
        }
    };
    let grid = unit_ball_grid(8000, 2000);
    let ball = unit_ball();

    for j in state.stages.len() + 1..=n {
        let alpha = state.alphas[j - 1];
        let eps_j = state.eps_schedule[j - 1];
        let phi_prev = state.phi(j - 1)?;

        // tune the model map for this stage: half the budget for the map,
        // half reserved for the correction
        let mut targets = TuningTargets::new(eps_j / 2.0, 0.1);
        targets.budgets.seed = seed.wrapping_add(j as u64 * 997);
        let tuning = tune(&targets)?;
        if !tuning.accepted {
            return Err(Error::Chain {
                stage: j,
                condition: "tuning".into(),
                reason: tuning.failure.unwrap_or_else(|| "tuner rejected".into()),
            });
        }
        let params = tuning.params.unwrap();
        let conj = conjugation_to(&alpha)?;
        let base = MapExpr::Seq(vec![
            MapExpr::Affine(conj.inverse_map()),
            MapExpr::Pipeline(build_f(&params)?),
            MapExpr::Affine(conj.clone()),
        ]);

        // correction at the earlier alphas: order-3 flattening implies the
        // value pinning required by condition (b)
        let earlier: Vec<C3Point> = state.alphas[..j - 1].to_vec();
        let correction = if earlier.is_empty() {
            CorrectionMap {
                correction: PolyMap3::zero(),
                order3_points: Vec::new(),
                value_points: Vec::new(),
                sup_norm: 0.0,
            }
        } else {
            build_correction(&base, &earlier, &[], eps_j / 2.0, &grid)?
        };
        let psi_j = if correction.correction.is_zero() {
            base.clone()
        } else {
            MapExpr::Corrected {
                base: Box::new(base.clone()),
                correction: correction.correction.clone(),
            }
        };

        // Omega containment diagnostics (psi_j over its stage region)
        let (omega_viol, omega_n) = omega_containment(&state, j, &psi_j)?;

        state.stages.push(StageRecord {
            alpha,
            params,
            tuner_eps: eps_j / 2.0,
            tuner_accepted: true,
            conjugation: conj.clone(),
            correction: correction.correction.clone(),
            correction_sup: correction.sup_norm,
            omega_containment_violations: omega_viol,
            omega_containment_samples: omega_n,
        });
        state.n = j;
        let phi_j = state.phi(j)?;

        // (a_j): sampled sup on the closed unit ball
        let mut sup_a: f64 = 0.0;
        for x in &grid {
            let d = phi_j.eval(x)?.dist(&phi_prev.eval(x)?);
            if d > sup_a {
                sup_a = d;
            }
        }
        push_condition(&mut state, j, "a", sup_a, eps_j, sup_a < eps_j)?;

        // (b_j): earlier alphas stay pinned
        let mut worst_b: f64 = 0.0;
        for alpha_k in &state.alphas[..j - 1] {
            let d = phi_j.eval(alpha_k)?.dist(&phi_prev.eval(alpha_k)?);
            worst_b = worst_b.max(d);
        }
        push_condition(&mut state, j, "b", worst_b, VALUE_MATCH_TOL, worst_b < VALUE_MATCH_TOL)?;

        // witness disk for the new point: search in the model frame
        let model_map = MapExpr::Seq(vec![
            MapExpr::Affine(conj.clone()),
            psi_j.clone(),
            MapExpr::Affine(conj.inverse_map()),
        ]);
        let delta_ball = 0.8 * 0.5f64.powi(j as i32);
        let grid_search = SearchGrid::margin_greedy(delta_ball);
        let found = find_witness_circle(
            &model_map,
            &DomainSpec::ShiftedBallB,
            &C3Point::ZERO,
            delta_ball,
            &grid_search,
        )
        .map_err(|e| Error::Chain {
            stage: j,
            condition: "c".into(),
            reason: e.to_string(),
        })?;

        // the analytic disk in image space: zeta -> phi_{j-1}(A(r zeta, 0, a))
        let (r_w, a_w) = (found.witness.r, found.witness.alpha);

        // exact fiber analysis on the bare model pipeline, where the disk
        // center hits the phi stage with w1 = 0 exactly (the conjugated
        // expression only certifies exclusion at sample scale)
        let bare_f = MapExpr::Pipeline(build_f(&params)?);
        let model_center = C3Point::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(a_w, 0.0),
        );
        let algebraic_exclusion = bare_f.invert(&model_center).is_err();
        let disk = |zeta: Complex64| -> Result<C3Point> {
            let s = C3Point::new(
                Complex64::new(r_w, 0.0) * zeta,
                Complex64::new(0.0, 0.0),
                Complex64::new(a_w, 0.0),
            );
            phi_prev.eval(&conj.eval(&s))
        };
        let disk_center = disk(Complex64::new(0.0, 0.0))?;

        // (c_j): the disk sits inside the 2^-j ball around alpha_{j-1}
        let mut max_dist: f64 = 0.0;
        for k in 0..64 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            for rho in [0.25, 0.5, 0.75, 1.0] {
                let p = disk(Complex64::from_polar(rho, th))?;
                max_dist = max_dist.max(p.dist(&alpha));
            }
        }
        let thr_c = 0.5f64.powi(j as i32);
        push_condition(&mut state, j, "c", max_dist, thr_c, max_dist < thr_c)?;

        // ball preimages of the disk boundary under phi_j (exact by
        // construction: psi_j(A(model preimage)) = A(model circle point))
        let mut preimages = Vec::with_capacity(found.preimages.len());
        let mut min_margin = f64::INFINITY;
        for pre in &found.preimages {
            let y = conj.eval(pre);
            min_margin = min_margin.min(ball.margin(&y));
            preimages.push(y);
        }

        // hull certificate on the curved disk
        let hull = hull_test_on_disk(disk, 200, 5, 42, 1024)?;
        if hull.max_ratio > HULL_RATIO_BOUND {
            return Err(Error::Chain {
                stage: j,
                condition: "hull".into(),
                reason: format!("max ratio {} broke the maximum principle", hull.max_ratio),
            });
        }

        state.witnesses.push(WitnessRecord {
            stage: j,
            r: r_w,
            alpha_offset: a_w,
            disk_center,
            n_theta: found.n_theta,
            preimages,
            interior_margin: min_margin,
            exclusion_margin: f64::INFINITY, // set by the validation below
            original_interior_margin: min_margin,
            original_exclusion_margin: found.witness.margin,
            hull_max_ratio: hull.max_ratio,
            algebraic_exclusion,
        });

        // (d_j)/(e_j): validate ALL witnesses (including the new one) under phi_j
        let cloud = exclusion_cloud(seed.wrapping_add(901 * j as u64))?;
        let mut cloud_images = Vec::with_capacity(cloud.len());
        for z in &cloud {
            cloud_images.push(phi_j.eval(z)?);
        }
        let mut min_d = f64::INFINITY;
        let mut min_e = f64::INFINITY;
        let mut threatened = false;
        for wi in 0..state.witnesses.len() {
            let rv = revalidate_witness(&state, &state.witnesses[wi], &phi_j, &cloud_images)?;
            let w = &mut state.witnesses[wi];
            w.interior_margin = rv.interior_margin;
            w.exclusion_margin = rv.exclusion_margin;
            w.preimages = rv.preimages;
            if w.stage == j {
                w.original_exclusion_margin = rv.exclusion_margin;
            }
            min_d = min_d.min(w.interior_margin);
            min_e = min_e.min(w.exclusion_margin);
            if w.interior_margin < 0.5 * w.original_interior_margin
                || w.exclusion_margin < 0.5 * w.original_exclusion_margin
            {
                threatened = true;
            }
        }
        push_condition(&mut state, j, "d", min_d, 0.0, min_d > 0.0)?;
        push_condition(&mut state, j, "e", min_e, 0.0, min_e > 0.0)?;

        // shrink remaining budgets only when a margin is actually threatened
        if threatened {
            let m_min = state
                .witnesses
                .iter()
                .map(|w| w.interior_margin.min(w.exclusion_margin))
                .fold(f64::INFINITY, f64::min);
            for k in j + 1..=n {
                let cap = 0.5 * m_min * 0.5f64.powi((k - j) as i32);
                if state.eps_schedule[k - 1] > cap {
                    state.eps_schedule[k - 1] = cap;
                }
            }
            state
                .shrink_events
                .push(format!("stage {j}: margins threatened, capped remaining budgets at {m_min:.3e}/2"));
        }
    }

    // telescoping deviation over the fixed grid
    let phi_n = state.phi(state.n)?;
    let mut sup: f64 = 0.0;
    for x in &grid {
        sup = sup.max(phi_n.eval(x)?.dist(x));
    }
    state.grid_sup_deviation = sup;
    Ok(state)
}

fn push_condition(
    state: &mut ChainState,
    stage: usize,
    cond: &str,
    value: f64,
    threshold: f64,
    pass: bool,
) -> Result<()> {
    state.ledger.push(ConditionEntry {
        stage,
        condition: cond.to_string(),
        pass,
        value,
        threshold,
    });
    if !pass {
        return Err(Error::Chain {
            stage,
            condition: cond.to_string(),
            reason: format!("value {value:.6e} vs threshold {threshold:.6e}"),
        });
    }
    Ok(())
}

/// Sampled containment of psi_j(Omega_j) in the closure of Omega_{j-1}
/// (diagnostic; for j = 1 the reference region is the delta_0 ball).
fn omega_containment(state: &ChainState, j: usize, psi: &MapExpr) -> Result<(usize, usize)> {
    let alphas = state.alphas.clone();
    let inner = DomainSpec::OmegaRegion {
        r: 1.0 + 1.0 / j as f64,
        n: j,
        delta: state.delta_schedule[j - 1],
        alphas: alphas.clone(),
    };
    let outer = if j >= 2 {
        DomainSpec::OmegaRegion {
            r: 1.0 + 1.0 / (j as f64 - 1.0),
            n: j - 1,
            delta: state.delta_schedule[j - 2],
            alphas,
        }
    } else {
        DomainSpec::EuclideanBall {
            center: C3Point::ZERO,
            radius: 1.0 + 0.5,
        }
    };
    let samples = sampling::sample_interior(&inner, 400, state.seed.wrapping_add(47 * j as u64))?;
    let mut violations = 0usize;
    let total = samples.len();
    for z in &samples {
        match psi.eval(z) {
            Ok(w) => {
                if outer.rho(&w) > 1e-9 {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    Ok((violations, total))
}
