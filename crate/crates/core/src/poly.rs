//! Sparse polynomials in three complex variables.
//!
//! Just enough algebra for the Hermite-type interpolation corrections and the
//! random polynomials of the hull certificates: evaluation, arithmetic,
//! holomorphic partials.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::point::{C3Point, Mat3};

/// Monomial exponents (e1, e2, e3) -> coefficient, kept sorted for
/// reproducible iteration. Serialized as a list of (exponents, coefficient)
/// pairs since JSON map keys must be strings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly3 {
    #[serde(with = "term_pairs")]
    pub terms: BTreeMap<[u16; 3], Complex64>,
}

mod term_pairs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        terms: &BTreeMap<[u16; 3], Complex64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let pairs: Vec<([u16; 3], Complex64)> = terms.iter().map(|(k, v)| (*k, *v)).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<[u16; 3], Complex64>, D::Error> {
        let pairs: Vec<([u16; 3], Complex64)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}

impl Poly3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut p = Self::zero();
        if c.norm() > 0.0 {
            p.terms.insert([0, 0, 0], c);
        }
        p
    }

    pub fn monomial(e: [u16; 3], c: Complex64) -> Self {
        let mut p = Self::zero();
        if c.norm() > 0.0 {
            p.terms.insert(e, c);
        }
        p
    }

    /// z_k as a polynomial, k in 0..3.
    pub fn var(k: usize) -> Self {
        let mut e = [0u16; 3];
        e[k] = 1;
        Self::monomial(e, Complex64::new(1.0, 0.0))
    }

    pub fn add_term(&mut self, e: [u16; 3], c: Complex64) {
        let entry = self.terms.entry(e).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly3) -> Poly3 {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, -*c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Poly3 {
        let mut out = Poly3::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, *c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly3) -> Poly3 {
        let mut out = Poly3::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.add_term(e, *ca * *cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly3 {
        let mut out = Poly3::constant(Complex64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, z: &C3Point) -> Complex64 {
        let vars = [z.z1, z.z2, z.z3];
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for (k, &v) in vars.iter().enumerate() {
                for _ in 0..e[k] {
                    m *= v;
                }
            }
            acc += m;
        }
        acc
    }

    /// Holomorphic partial with respect to variable k.
    pub fn partial(&self, k: usize) -> Poly3 {
        let mut out = Poly3::zero();
        for (e, c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut en = *e;
            en[k] -= 1;
            out.add_term(en, *c * Complex64::new(e[k] as f64, 0.0));
        }
        out
    }

    pub fn total_degree(&self) -> u16 {
        self.terms
            .keys()
            .map(|e| e[0] + e[1] + e[2])
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A polynomial map C^3 -> C^3 (one Poly3 per output coordinate).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolyMap3 {
    pub comps: [Poly3; 3],
}

impl PolyMap3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, z: &C3Point) -> C3Point {
        C3Point::new(
            self.comps[0].eval(z),
            self.comps[1].eval(z),
            self.comps[2].eval(z),
        )
    }

    pub fn jacobian(&self, z: &C3Point) -> Mat3 {
        let mut m = Mat3::zero();
        for (i, comp) in self.comps.iter().enumerate() {
            for j in 0..3 {
                m.m[i][j] = comp.partial(j).eval(z);
            }
        }
        m
    }

    pub fn add(&self, other: &PolyMap3) -> PolyMap3 {
        PolyMap3 {
            comps: [
                self.comps[0].add(&other.comps[0]),
                self.comps[1].add(&other.comps[1]),
                self.comps[2].add(&other.comps[2]),
            ],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|p| p.is_zero())
    }

    /// Max of ||eval|| over a point set.
    pub fn sup_on(&self, pts: &[C3Point]) -> f64 {
        pts.iter()
            .map(|z| self.eval(z).norm())
            .fold(0.0, f64::max)
    }
}

/// Random polynomial with standard complex normal coefficients on all
/// monomials of total degree <= max_degree.
pub fn random_poly(max_degree: u16, rng: &mut ChaCha8Rng) -> Poly3 {
    let mut p = Poly3::zero();
    for e1 in 0..=max_degree {
        for e2 in 0..=(max_degree - e1) {
            for e3 in 0..=(max_degree - e1 - e2) {
                let re = gaussian(rng);
                let im = gaussian(rng);
                p.add_term([e1, e2, e3], Complex64::new(re, im));
            }
        }
    }
    p
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-300..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
