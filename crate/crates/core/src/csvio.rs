//! CSV exchange format for point lists: columns
//! re_z1,im_z1,re_z2,im_z2,re_z3,im_z3 in full double precision.

use crate::composite::MapExpr;
use crate::error::{Error, Result};
use crate::point::C3Point;

pub const CSV_HEADER: &str = "re_z1,im_z1,re_z2,im_z2,re_z3,im_z3";

pub fn points_to_csv(pts: &[C3Point]) -> String {
    let mut out = String::with_capacity(pts.len() * 120 + 64);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in pts {
        let c = p.to_reals();
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            c[0], c[1], c[2], c[3], c[4], c[5]
        ));
    }
    out
}

pub fn points_from_csv(text: &str) -> Result<Vec<C3Point>> {
    let mut pts = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("re_z1") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Serde(format!(
                "line {}: expected 6 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut c = [0.0; 6];
        for (k, f) in fields.iter().enumerate() {
            c[k] = f.trim().parse::<f64>().map_err(|e| {
                Error::Serde(format!("line {}: bad float {f:?}: {e}", lineno + 1))
            })?;
        }
        pts.push(C3Point::from_reals(c));
    }
    Ok(pts)
}

/// Forward-evaluate a map over a point list; per-point failures surface as
/// errors with the offending index.
pub fn eval_batch(map: &MapExpr, pts: &[C3Point]) -> Result<Vec<C3Point>> {
    let mut out = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        out.push(
            map.eval(p)
                .map_err(|e| Error::Inversion(format!("point {i}: {e}")))?,
        );
    }
    Ok(out)
}
