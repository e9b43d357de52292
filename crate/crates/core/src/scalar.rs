//! The scalar building blocks f_N and h^delta_N and their derivatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Switch radius below which f_N is evaluated through the cancellation-free
/// rearrangement instead of the raw closed form.
pub const TAU_SERIES: f64 = 1e-3;

/// Relative division guard: denominators below this times the operand scale
/// are treated as zeros, never divided through.
pub const TAU_DIV: f64 = 1e-30;

/// (e^w - 1) with the complex argument, stable for small |w|.
pub fn expm1_c(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        // Taylor series; converges to machine precision in <= 20 terms.
        let mut term = w;
        let mut sum = term;
        let mut k = 2.0;
        for _ in 0..40 {
            term = term * w / k;
            sum += term;
            if term.norm() <= f64::EPSILON * sum.norm() {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        w.exp() - 1.0
    }
}

/// (e^w - 1)/w, the stable primitive behind the removable singularity of f_N;
/// equals 1 at w = 0.
pub fn expm1_over(w: Complex64) -> Complex64 {
    if w.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        expm1_c(w) / w
    }
}

/// d/dw [(e^w - 1)/w] = (e^w (w - 1) + 1)/w^2, equals 1/2 at w = 0.
fn expm1_over_deriv(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        // sum_{k>=1} k w^{k-1} / (k+1)!
        let mut sum = Complex64::new(0.5, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        let mut fact = 2.0; // (k+1)! running value, k = 1 gives 2!
        for k in 2..40u32 {
            pw *= w;
            fact *= (k + 1) as f64;
            let term = pw * (k as f64) / fact;
            sum += term;
            if term.norm() <= f64::EPSILON * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (w.exp() * (w - 1.0) + 1.0) / (w * w)
    }
}

/// f_N(z3) = 1/(2 z3) + e^{2 N z3} (1 - 1/(2 z3)).
///
/// The singularity at 0 is removable; for |z3| < TAU_SERIES the value is
/// computed as 1 + N * ((e^w - 1)/w) * (2 z3 - 1) with w = 2 N z3, which gives
/// f_N(0) = 1 - N exactly.
pub fn f_n(z3: Complex64, n: u32) -> Complex64 {
    let nn = n as f64;
    if z3.norm() < TAU_SERIES {
        let w = 2.0 * nn * z3;
        Complex64::new(1.0, 0.0) + nn * expm1_over(w) * (2.0 * z3 - 1.0)
    } else {
        let inv = 1.0 / (2.0 * z3);
        inv + (2.0 * nn * z3).exp() * (1.0 - inv)
    }
}

/// Derivative of f_N.
pub fn f_n_deriv(z3: Complex64, n: u32) -> Complex64 {
    let nn = n as f64;
    if z3.norm() < TAU_SERIES {
        // f = 1 + N g(w) (2 z3 - 1), w = 2 N z3
        // f' = 2 N^2 g'(w) (2 z3 - 1) + 2 N g(w)
        let w = 2.0 * nn * z3;
        2.0 * nn * nn * expm1_over_deriv(w) * (2.0 * z3 - 1.0) + 2.0 * nn * expm1_over(w)
    } else {
        let z2 = z3 * z3;
        -1.0 / (2.0 * z2)
            + (2.0 * nn * z3).exp() * (2.0 * nn * (1.0 - 1.0 / (2.0 * z3)) + 1.0 / (2.0 * z2))
    }
}

/// f_N(z3) * 2 z3 - 1 evaluated through its product form e^{2Nz3} (2 z3 - 1),
/// which has no rounding floor (the quantity underflows gracefully on deep
/// compacts instead of saturating at machine epsilon).
pub fn f_times_2z_minus_1(z3: Complex64, n: u32) -> Complex64 {
    (2.0 * (n as f64) * z3).exp() * (2.0 * z3 - 1.0)
}

/// h^delta_N(z3) - 1 through its product form 2 u (1 - delta) / (1 + a u).
pub fn h_minus_1(z3: Complex64, n: u32, delta: f64) -> Result<Complex64> {
    validate_scalar_params(n, delta)?;
    let u = (2.0 * (n as f64) * z3).exp();
    let a = 2.0 * delta - 1.0;
    let den = 1.0 + a * u;
    if den.norm() <= TAU_DIV * (1.0 + u.norm()) {
        return Err(Error::PoleEncountered { z3 });
    }
    Ok(2.0 * u * (1.0 - delta) / den)
}

/// h^delta_N(z3): the Blaschke-type factor written in its reduced form
/// (1 + u)/(1 + (2 delta - 1) u) with u = e^{2 N z3}. Maps {Re z3 < 0} onto
/// the disk of radius 1/(2 delta) centred at 1/(2 delta); h(0) = 1/delta and
/// h -> 1 as Re z3 -> -inf.
pub fn h_delta_n(z3: Complex64, n: u32, delta: f64) -> Result<Complex64> {
    validate_scalar_params(n, delta)?;
    let u = (2.0 * (n as f64) * z3).exp();
    let a = 2.0 * delta - 1.0;
    let den = 1.0 + a * u;
    if den.norm() <= TAU_DIV * (1.0 + u.norm()) {
        return Err(Error::PoleEncountered { z3 });
    }
    Ok((1.0 + u) / den)
}

/// Derivative of h^delta_N.
pub fn h_delta_n_deriv(z3: Complex64, n: u32, delta: f64) -> Result<Complex64> {
    validate_scalar_params(n, delta)?;
    let nn = n as f64;
    let u = (2.0 * nn * z3).exp();
    let a = 2.0 * delta - 1.0;
    let den = 1.0 + a * u;
    if den.norm() <= TAU_DIV * (1.0 + u.norm()) {
        return Err(Error::PoleEncountered { z3 });
    }
    // d/du [(1+u)/(1+au)] = (1 - a)/(1+au)^2, du/dz3 = 2 N u
    Ok((1.0 - a) / (den * den) * 2.0 * nn * u)
}

pub fn validate_scalar_params(n: u32, delta: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1/2], got {delta}"
        )));
    }
    Ok(())
}

/// Scalar holomorphic maps fed to the argument-principle machinery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ScalarMap {
    /// w |-> w (single simple zero at 0).
    Identity,
    /// w |-> e^w (nonvanishing entire).
    Exp,
    /// w |-> f_N(w).
    FN { n: u32 },
    /// w |-> h^delta_N(w).
    H { n: u32, delta: f64 },
    /// w |-> 2w + Log(1 - 2w)/N with the principal log: the auxiliary map
    /// whose zeros are the k = 0 branch of the zeros of f_N. Analytic on
    /// {Re w < 1/2}; the branches k != 0 of f_N's zero set (at heights
    /// Im w ~ pi k / N) are invisible to it.
    AuxLog { n: u32 },
}

impl ScalarMap {
    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        match self {
            ScalarMap::Identity => Ok(w),
            ScalarMap::Exp => Ok(w.exp()),
            ScalarMap::FN { n } => Ok(f_n(w, *n)),
            ScalarMap::H { n, delta } => h_delta_n(w, *n, *delta),
            ScalarMap::AuxLog { n } => {
                let arg = 1.0 - 2.0 * w;
                if arg.re <= 0.0 && arg.im == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "principal log branch cut hit at w = {w}"
                    )));
                }
                Ok(2.0 * w + arg.ln() / (*n as f64))
            }
        }
    }

    pub fn deriv(&self, w: Complex64) -> Result<Complex64> {
        match self {
            ScalarMap::Identity => Ok(Complex64::new(1.0, 0.0)),
            ScalarMap::Exp => Ok(w.exp()),
            ScalarMap::FN { n } => Ok(f_n_deriv(w, *n)),
            ScalarMap::H { n, delta } => h_delta_n_deriv(w, *n, *delta),
            ScalarMap::AuxLog { n } => {
                Ok(Complex64::new(2.0, 0.0) - 2.0 / ((*n as f64) * (1.0 - 2.0 * w)))
            }
        }
    }
}
