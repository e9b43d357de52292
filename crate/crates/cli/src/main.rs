//! Command-line front end: tuning runs, certification, chain building, slice
//! grids and report summaries over the wermer-forge library.
//!
//! Exit codes: 0 success / certificate valid, 1 certified-negative or
//! failure-to-certify, 2 usage or configuration errors.

mod slice;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wermer_forge::certify::{
    certify_zero_free, check_inclusion, nonrunge_certificate, NonRungeConfig, Rectangle,
};
use wermer_forge::chain::{build_chain_with, ChainState};
use wermer_forge::composite::{build_f, build_g, CompositeMap, MapExpr, Stage, WermerParams};
use wermer_forge::domain::DomainSpec;
use wermer_forge::error::Error;
use wermer_forge::point::C3Point;
use wermer_forge::tuner::{tune, verify, TuningTargets};

#[derive(Parser)]
#[command(name = "wermer-forge", version, about = "Wermer-embedding certification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for per-pixel work (slice); other commands are
    /// single-threaded for bit reproducibility.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the staged parameter search and write the tuning report.
    Tune {
        /// TuningTargets JSON; defaults used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the sampling seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-certify externally supplied parameters against targets.
    Verify {
        /// JSON file with {"params": WermerParams, "targets": TuningTargets}.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce a certificate: zero-freeness, inclusion, or the non-Runge
    /// obstruction.
    Certify {
        /// Certification request JSON.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum)]
        what: What,
        /// Output file, or a directory for content-addressed naming.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build (or extend) the finite inductive chain.
    Chain {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Saved ChainState JSON to extend by more stages.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a 2-D slice grid to CSV.
    Slice {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize report/certificate JSON files.
    Report {
        /// Input JSON files.
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    ZeroFree,
    Inclusion,
    Obstruction,
}

/// Map description accepted by certify/slice configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MapSpecJson {
    Identity,
    Phi,
    WermerF { params: WermerParams },
    WermerG { params: WermerParams },
}

impl MapSpecJson {
    pub fn build(&self) -> Result<MapExpr, Error> {
        Ok(match self {
            MapSpecJson::Identity => MapExpr::Identity,
            MapSpecJson::Phi => MapExpr::Pipeline(CompositeMap::new(vec![Stage::Phi])),
            MapSpecJson::WermerF { params } => MapExpr::Pipeline(build_f(params)?),
            MapSpecJson::WermerG { params } => MapExpr::Pipeline(build_g(params)?),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CertifyRequest {
    #[serde(default)]
    map: Option<MapSpecJson>,
    #[serde(default)]
    domain: Option<DomainSpec>,
    /// zero-free options
    #[serde(default)]
    n: Option<u32>,
    #[serde(default)]
    rectangle: Option<Rectangle>,
    /// inclusion options
    #[serde(default)]
    inner: Option<DomainSpec>,
    #[serde(default)]
    outer: Option<DomainSpec>,
    #[serde(default)]
    nsamples: Option<usize>,
    #[serde(default)]
    window_z3_radius: Option<f64>,
    /// obstruction options
    #[serde(default)]
    q: Option<C3Point>,
    #[serde(default)]
    delta_ball: Option<f64>,
    #[serde(default)]
    npolys: Option<usize>,
    #[serde(default)]
    max_degree: Option<u16>,
    #[serde(default)]
    seed: Option<u64>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid JSON in {}: {e}", path.display()))
}

fn write_out(out: Option<&Path>, default_name: &str, content: &str) -> Result<PathBuf, String> {
    let path = match out {
        Some(p) if p.is_dir() => p.join(default_name),
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(default_name),
    };
    fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn content_name(kind: &str, payload: &str) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_bytes());
    h.update(payload.as_bytes());
    let digest = h.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("{kind}-{hex}.json")
}

fn usage_err(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

/// Parameter errors are usage (2); numeric/certification failures are 1.
fn domain_err(e: &Error) -> ExitCode {
    match e {
        Error::InvalidParameter(_) | Error::Serde(_) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        _ => {
            eprintln!("certification failure: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_tune(config: Option<PathBuf>, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let mut targets: TuningTargets = match config {
        Some(p) => match read_json(&p) {
            Ok(t) => t,
            Err(e) => return usage_err(&e),
        },
        None => TuningTargets::new(0.5, 0.1),
    };
    if let Some(s) = seed {
        targets.budgets.seed = s;
    }
    let report = match tune(&targets) {
        Ok(r) => r,
        Err(e) => return domain_err(&e),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match write_out(out.as_deref(), "tuning-report.json", &json) {
        Ok(path) => {
            if report.accepted {
                println!("ACCEPTED: report written to {}", path.display());
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "tuning failed: {}",
                    report.failure.as_deref().unwrap_or("unknown stage")
                );
                println!("report written to {}", path.display());
                ExitCode::from(1)
            }
        }
        Err(e) => usage_err(&e),
    }
}

#[derive(Deserialize)]
struct VerifyRequest {
    params: WermerParams,
    targets: TuningTargets,
}

fn cmd_verify(params: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let req: VerifyRequest = match read_json(&params) {
        Ok(r) => r,
        Err(e) => return usage_err(&e),
    };
    let report = match verify(&req.params, &req.targets) {
        Ok(r) => r,
        Err(e) => return domain_err(&e),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match write_out(out.as_deref(), "verify-report.json", &json) {
        Ok(_) => {
            if report.accepted {
                println!("ACCEPTED");
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "verification failed: {}",
                    report.failure.as_deref().unwrap_or("unknown")
                );
                ExitCode::from(1)
            }
        }
        Err(e) => usage_err(&e),
    }
}

fn cmd_certify(
    params: PathBuf,
    what: What,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> ExitCode {
    let raw = match fs::read_to_string(&params) {
        Ok(t) => t,
        Err(e) => return usage_err(&format!("cannot read {}: {e}", params.display())),
    };
    let req: CertifyRequest = match serde_json::from_str(&raw) {
        Ok(r) => r,
        Err(e) => return usage_err(&format!("invalid JSON: {e}")),
    };
    match what {
        What::ZeroFree => {
            let n = match req.n {
                Some(n) => n,
                None => return usage_err("zero-free certification needs \"n\""),
            };
            let rect = req
                .rectangle
                .unwrap_or(Rectangle::new(-2.0, -0.01, -2.0, 2.0));
            match certify_zero_free(n, &rect) {
                Ok(cert) => {
                    let json = serde_json::to_string_pretty(&cert).unwrap();
                    let name = content_name("zero-free", &raw);
                    match write_out(out.as_deref(), &name, &json) {
                        Ok(path) => {
                            println!(
                                "winding {} ({}): {}",
                                cert.winding,
                                if cert.valid { "valid" } else { "invalid" },
                                path.display()
                            );
                            if cert.valid {
                                ExitCode::SUCCESS
                            } else {
                                ExitCode::from(1)
                            }
                        }
                        Err(e) => usage_err(&e),
                    }
                }
                Err(e) => domain_err(&e),
            }
        }
        What::Inclusion => {
            let (Some(inner), Some(outer), Some(map_spec)) =
                (req.inner.clone(), req.outer.clone(), req.map.clone())
            else {
                return usage_err("inclusion certification needs \"inner\", \"outer\", \"map\"");
            };
            let map = match map_spec.build() {
                Ok(m) => m,
                Err(e) => return domain_err(&e),
            };
            let rep = match check_inclusion(
                &inner,
                &map,
                &outer,
                req.nsamples.unwrap_or(10_000),
                seed.or(req.seed).unwrap_or(0),
                req.window_z3_radius,
            ) {
                Ok(r) => r,
                Err(e) => return domain_err(&e),
            };
            let json = serde_json::to_string_pretty(&rep).unwrap();
            let name = content_name("inclusion", &raw);
            match write_out(out.as_deref(), &name, &json) {
                Ok(path) => {
                    println!(
                        "violations {} / {} samples: {}",
                        rep.violations,
                        rep.nsamples,
                        path.display()
                    );
                    if rep.valid() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => usage_err(&e),
            }
        }
        What::Obstruction => {
            let Some(map_spec) = req.map.clone() else {
                return usage_err("obstruction certification needs \"map\"");
            };
            let map = match map_spec.build() {
                Ok(m) => m,
                Err(e) => return domain_err(&e),
            };
            let domain = req.domain.clone().unwrap_or(match &map_spec {
                MapSpecJson::Phi => DomainSpec::WermerDp { p: 0.1 },
                _ => DomainSpec::ShiftedBallB,
            });
            let q = req.q.unwrap_or(C3Point::ZERO);
            let delta_ball = req.delta_ball.unwrap_or(0.2);
            let mut config = NonRungeConfig::default_for(delta_ball);
            if let Some(np) = req.npolys {
                config.npolys = np;
            }
            if let Some(d) = req.max_degree {
                config.max_degree = d;
            }
            if let Some(s) = seed.or(req.seed) {
                config.seed = s;
            }
            match nonrunge_certificate(&map, &domain, &q, delta_ball, &config) {
                Ok(cert) => {
                    let json = serde_json::to_string_pretty(&cert).unwrap();
                    let name = content_name("obstruction", &raw);
                    match write_out(out.as_deref(), &name, &json) {
                        Ok(path) => {
                            println!(
                                "witness (r, alpha) = ({:.6e}, {:.6e}), valid = {}: {}",
                                cert.witness.r,
                                cert.witness.alpha,
                                cert.valid,
                                path.display()
                            );
                            if cert.valid {
                                ExitCode::SUCCESS
                            } else {
                                ExitCode::from(1)
                            }
                        }
                        Err(e) => usage_err(&e),
                    }
                }
                Err(e) => domain_err(&e),
            }
        }
    }
}

fn cmd_chain(
    n: usize,
    eps: f64,
    seed: u64,
    out: Option<PathBuf>,
    resume: Option<PathBuf>,
) -> ExitCode {
    let prior: Option<ChainState> = match resume {
        Some(p) => match read_json(&p) {
            Ok(s) => Some(s),
            Err(e) => return usage_err(&e),
        },
        None => None,
    };
    match build_chain_with(n, eps, seed, prior) {
        Ok(state) => {
            let json = serde_json::to_string_pretty(&state).expect("state serializes");
            match write_out(out.as_deref(), "chain-state.json", &json) {
                Ok(path) => {
                    println!(
                        "chain depth {} complete: {} conditions pass, sup deviation {:.6e}: {}",
                        state.n,
                        state.ledger.len(),
                        state.grid_sup_deviation,
                        path.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => usage_err(&e),
            }
        }
        Err(e) => domain_err(&e),
    }
}

fn cmd_report(inputs: Vec<PathBuf>, out: Option<PathBuf>) -> ExitCode {
    #[derive(Serialize)]
    struct Item {
        file: String,
        kind: String,
        ok: Option<bool>,
    }
    let mut items = Vec::new();
    for p in &inputs {
        let v: serde_json::Value = match read_json(p) {
            Ok(v) => v,
            Err(e) => return usage_err(&e),
        };
        let (kind, ok) = if v.get("accepted").is_some() {
            ("tuning-report", v["accepted"].as_bool())
        } else if v.get("winding").is_some() {
            ("zero-free", v["valid"].as_bool())
        } else if v.get("witness").is_some() {
            ("obstruction", v["valid"].as_bool())
        } else if v.get("ledger").is_some() {
            (
                "chain-state",
                Some(
                    v["ledger"]
                        .as_array()
                        .map(|a| a.iter().all(|e| e["pass"].as_bool() == Some(true)))
                        .unwrap_or(false),
                ),
            )
        } else if v.get("violations").is_some() {
            ("inclusion", v["violations"].as_u64().map(|n| n == 0))
        } else {
            ("unknown", None)
        };
        items.push(Item {
            file: p.display().to_string(),
            kind: kind.to_string(),
            ok,
        });
    }
    let summary = serde_json::json!({
        "schema": wermer_forge::SCHEMA,
        "items": items,
    });
    let json = serde_json::to_string_pretty(&summary).unwrap();
    match write_out(out.as_deref(), "summary.json", &json) {
        Ok(path) => {
            println!("summary written to {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => usage_err(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Tune { config, out, seed } => cmd_tune(config, out, seed),
        Command::Verify { params, out } => cmd_verify(params, out),
        Command::Certify {
            params,
            what,
            out,
            seed,
        } => cmd_certify(params, what, out, seed),
        Command::Chain {
            n,
            eps,
            seed,
            out,
            resume,
        } => cmd_chain(n, eps, seed, out, resume),
        Command::Slice { config, out } => slice::cmd_slice(config, out, cli.threads),
        Command::Report { inputs, out } => cmd_report(inputs, out),
    }
}
