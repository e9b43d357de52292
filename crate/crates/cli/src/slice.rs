//! Slice grids: evaluate membership / image-membership / deviation over a
//! 2-D coordinate plane and emit CSV for external plotting.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use wermer_forge::domain::{Classification, DomainSpec};
use wermer_forge::point::C3Point;

use crate::MapSpecJson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceMode {
    Membership,
    ImageMembership,
    Deviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Z1,
    Z2,
    Z3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceRequest {
    pub mode: SliceMode,
    /// The complex coordinate that runs over the grid.
    pub vary: Axis,
    /// Values of the two frozen coordinates.
    #[serde(default)]
    pub fixed_z1: Option<Complex64>,
    #[serde(default)]
    pub fixed_z2: Option<Complex64>,
    #[serde(default)]
    pub fixed_z3: Option<Complex64>,
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub map: Option<MapSpecJson>,
    pub domain: DomainSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-12
}

impl SliceRequest {
    fn validate(&self) -> Result<(), String> {
        if self.nx < 2 || self.ny < 2 {
            return Err("resolution must be >= 2 in each axis".into());
        }
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err("degenerate grid ranges".into());
        }
        // the plane spec must reference exactly the free coordinates
        let fixed_for_vary = match self.vary {
            Axis::Z1 => self.fixed_z1.is_none() && self.fixed_z2.is_some() && self.fixed_z3.is_some(),
            Axis::Z2 => self.fixed_z2.is_none() && self.fixed_z1.is_some() && self.fixed_z3.is_some(),
            Axis::Z3 => self.fixed_z3.is_none() && self.fixed_z1.is_some() && self.fixed_z2.is_some(),
        };
        if !fixed_for_vary {
            return Err(
                "plane spec must fix exactly the two coordinates other than \"vary\"".into(),
            );
        }
        if matches!(self.mode, SliceMode::ImageMembership | SliceMode::Deviation)
            && self.map.is_none()
        {
            return Err("image-membership and deviation slices need a \"map\"".into());
        }
        Ok(())
    }

    fn point_at(&self, w: Complex64) -> C3Point {
        let z = Complex64::new(0.0, 0.0);
        match self.vary {
            Axis::Z1 => C3Point::new(w, self.fixed_z2.unwrap_or(z), self.fixed_z3.unwrap_or(z)),
            Axis::Z2 => C3Point::new(self.fixed_z1.unwrap_or(z), w, self.fixed_z3.unwrap_or(z)),
            Axis::Z3 => C3Point::new(self.fixed_z1.unwrap_or(z), self.fixed_z2.unwrap_or(z), w),
        }
    }
}

enum Cell {
    Code(u8),
    Value(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Code(c) => c.to_string(),
            // 17 significant digits round-trips doubles exactly
            Cell::Value(v) => format!("{v:.16e}"),
        }
    }
}

fn classify_code(c: Classification) -> u8 {
    match c {
        Classification::Exterior => 0,
        Classification::Interior => 1,
        Classification::Boundary => 2,
    }
}

pub fn cmd_slice(config: PathBuf, out: Option<PathBuf>, threads: usize) -> ExitCode {
    let req: SliceRequest = match crate::read_json(&config) {
        Ok(r) => r,
        Err(e) => return crate::usage_err(&e),
    };
    if let Err(e) = req.validate() {
        return crate::usage_err(&e);
    }
    if req.domain.validate().is_err() {
        return crate::usage_err("invalid domain in slice request");
    }
    let map = match &req.map {
        Some(spec) => match spec.build() {
            Ok(m) => Some(m),
            Err(e) => return crate::domain_err(&e),
        },
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    let cells: Vec<Cell> = pool.install(|| {
        (0..req.nx * req.ny)
            .into_par_iter()
            .map(|idx| {
                let i = idx / req.nx; // im row
                let j = idx % req.nx; // re column
                let re = req.re_min + (req.re_max - req.re_min) * j as f64 / (req.nx - 1) as f64;
                let im = req.im_min + (req.im_max - req.im_min) * i as f64 / (req.ny - 1) as f64;
                let p = req.point_at(Complex64::new(re, im));
                match req.mode {
                    SliceMode::Membership => Cell::Code(
                        req.domain
                            .contains(&p, req.tol)
                            .map(classify_code)
                            .unwrap_or(3),
                    ),
                    SliceMode::ImageMembership => {
                        let m = map.as_ref().unwrap();
                        match m.invert(&p) {
                            Ok(pre) => Cell::Code(
                                req.domain
                                    .contains(&pre, req.tol)
                                    .map(classify_code)
                                    .unwrap_or(3),
                            ),
                            Err(_) => Cell::Code(3),
                        }
                    }
                    SliceMode::Deviation => {
                        let m = map.as_ref().unwrap();
                        match m.eval(&p) {
                            Ok(w) => Cell::Value(w.dist(&p)),
                            Err(_) => Cell::Value(f64::NAN),
                        }
                    }
                }
            })
            .collect()
    });

    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = String::new();
    text.push_str(&format!("# schema: {}\n", wermer_forge::SCHEMA));
    text.push_str(&format!("# generated: {ts}\n"));
    text.push_str("# codes: 0 exterior, 1 interior, 2 boundary-band, 3 inversion-failed\n");
    text.push_str(&format!(
        "# mode: {:?} vary: {:?} nx: {} ny: {} re: [{:.16e}, {:.16e}] im: [{:.16e}, {:.16e}]\n",
        req.mode, req.vary, req.nx, req.ny, req.re_min, req.re_max, req.im_min, req.im_max
    ));
    for i in 0..req.ny {
        let row: Vec<String> = (0..req.nx)
            .map(|j| cells[i * req.nx + j].render())
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    match crate::write_out(out.as_deref(), "slice.csv", &text) {
        Ok(path) => {
            println!("slice written to {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => crate::usage_err(&e),
    }
}
