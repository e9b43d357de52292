//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with its measured quantities and elapsed time (visible with --nocapture).
//!
//! Criterion 3 is asserted exactly as stated; its N = 50 case is known to
//! fail against the certified truth (the winding on that rectangle is 24, not
//! 0 — twelve conjugate pairs of zeros of f_50 sit strictly inside it). The
//! test prints the evidence and fails honestly rather than weakening the
//! assertion.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use wermer_forge::certify::{
    certify_zero_free, hull_obstruction_test, min_modulus_scan, nonrunge_certificate,
    winding_number, NonRungeConfig, Rectangle, SearchGrid, WitnessCircle, HULL_RATIO_BOUND,
};
use wermer_forge::chain::build_chain;
use wermer_forge::composite::{build_f, MapExpr};
use wermer_forge::domain::DomainSpec;
use wermer_forge::maps::{phi_preimages, FiberKind};
use wermer_forge::point::C3Point;
use wermer_forge::sampling::sample_interior;
use wermer_forge::scalar::{f_times_2z_minus_1, h_minus_1, ScalarMap};
use wermer_forge::tuner::{tune, TuningTargets};

fn report_line(criterion: &str, pass: bool, detail: &str, t0: Instant) {
    println!(
        "criterion {criterion}: {} ({detail}; {:.2?})",
        if pass { "PASS" } else { "FAIL" },
        t0.elapsed()
    );
}

/// Criterion 1 payload, reused by the determinism criterion.
#[derive(Serialize, PartialEq)]
struct HoleReport {
    margins: Vec<f64>,
    center_fiber: String,
    center_candidates: usize,
    center_filtered: usize,
}

fn run_criterion_1() -> HoleReport {
    let dp = DomainSpec::WermerDp { p: 0.1 };
    let (r, alpha) = (0.1, 1e-3);
    let mut margins = Vec::with_capacity(64);
    for k in 0..64 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
        let w = C3Point::new(
            Complex64::from_polar(r, th),
            Complex64::new(0.0, 0.0),
            Complex64::new(alpha, 0.0),
        );
        let pre = phi_preimages(&w, &dp, 1e-9).expect("fiber solve");
        assert_eq!(
            pre.filtered.len(),
            1,
            "circle point {k} must have exactly one D_p preimage"
        );
        margins.push(dp.margin(&pre.filtered[0]));
    }
    let center = C3Point::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(alpha, 0.0),
    );
    let pre = phi_preimages(&center, &DomainSpec::HalfSpaceH, 1e-9).expect("fiber solve");
    HoleReport {
        margins,
        center_fiber: format!("{:?}", pre.kind),
        center_candidates: pre.candidates.len(),
        center_filtered: pre.filtered.len(),
    }
}

#[test]
fn criterion_1_wermer_hole_base_case() {
    let t0 = Instant::now();
    let rep = run_criterion_1();
    let min_margin = rep.margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = rep.margins.len() == 64
        && min_margin >= 9e-4
        && rep.center_fiber == format!("{:?}", FiberKind::Linear)
        && rep.center_candidates == 1
        && rep.center_filtered == 0;
    report_line(
        "1",
        pass,
        &format!(
            "min margin {min_margin:.6e} >= 9e-4; center fiber {} with {} candidate(s), none in H",
            rep.center_fiber, rep.center_candidates
        ),
        t0,
    );
    assert!(pass);
    assert!(t0.elapsed().as_secs_f64() < 1.0, "runtime bound 1 s exceeded");
}

fn base_witness() -> WitnessCircle {
    WitnessCircle {
        r: 0.1,
        alpha: 1e-3,
        center: C3Point::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1e-3, 0.0),
        ),
        margin: 1e-3,
    }
}

#[test]
fn criterion_2_maximum_principle_certificate() {
    let t0 = Instant::now();
    let hull = hull_obstruction_test(&base_witness(), 200, 5, 42).expect("hull test");
    let pass = hull.max_ratio <= HULL_RATIO_BOUND;
    report_line(
        "2",
        pass,
        &format!("max ratio {:.12} <= 1 + 1e-10 over 200 degree-5 polynomials", hull.max_ratio),
        t0,
    );
    assert!(pass);
    assert!(t0.elapsed().as_secs_f64() < 5.0, "runtime bound 5 s exceeded");
}

#[test]
fn criterion_3_zero_freeness_windings() {
    let t0 = Instant::now();
    let rect = Rectangle::new(-2.0, -0.01, -2.0, 2.0);
    let mut all_pass = true;
    let mut details = Vec::new();
    for n in [50u32, 100, 200] {
        let w = winding_number(&ScalarMap::FN { n }, &rect, 4096).expect("winding converges");
        let ok = w.winding == 0 && w.doubling_delta < 0.25;
        all_pass &= ok;
        details.push(format!(
            "N={n}: winding {} (doubling delta {:.3e})",
            w.winding, w.doubling_delta
        ));
        if !ok {
            // cross-check the failure with the independent modulus scan at a
            // resolution fine enough to resolve the zero cluster
            let coarse = min_modulus_scan(&ScalarMap::FN { n }, &rect, 100, 100).unwrap();
            let fine = min_modulus_scan(&ScalarMap::FN { n }, &rect, 1400, 1400).unwrap();
            details.push(format!(
                "N={n}: min|f| on 100x100 grid {coarse:.3e} but {fine:.3e} on 1400x1400 \
                 (the zeros at Re ~ -0.010..-0.014, |Im| ~ 1.27..1.97 are real)"
            ));
        }
    }
    report_line("3", all_pass, &details.join("; "), t0);
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(
        all_pass,
        "winding of f_N must be 0 for N in {{50, 100, 200}}: {}",
        details.join("; ")
    );
    assert!(elapsed < 5.0, "runtime bound 5 s exceeded");
}

#[derive(Serialize, PartialEq)]
struct RatesReport {
    sup_f: Vec<f64>,
    sup_h: Vec<f64>,
}

fn run_criterion_4() -> RatesReport {
    let mut sup_f = Vec::new();
    let mut sup_h = Vec::new();
    for n in [20u32, 50, 100, 200] {
        let mut wf: f64 = 0.0;
        let mut wh: f64 = 0.0;
        for i in 0..120 {
            for j in 0..120 {
                let x = -2.0 + 1.9 * i as f64 / 119.0;
                let y = -2.0 + 4.0 * j as f64 / 119.0;
                let z = Complex64::new(x, y);
                wf = wf.max(f_times_2z_minus_1(z, n).norm());
                wh = wh.max(h_minus_1(z, n, 0.1).unwrap().norm());
            }
        }
        sup_f.push(wf);
        sup_h.push(wh);
    }
    RatesReport { sup_f, sup_h }
}

#[test]
fn criterion_4_convergence_rates() {
    let t0 = Instant::now();
    let rep = run_criterion_4();
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, n) in [20u32, 50, 100, 200].iter().enumerate() {
        let bound = 5.0 * (-0.2 * *n as f64).exp();
        pass &= rep.sup_f[k] <= bound && rep.sup_h[k] <= bound;
        detail.push(format!(
            "N={n}: sup|f*2z-1|={:.3e}, sup|h-1|={:.3e} <= {bound:.3e}",
            rep.sup_f[k], rep.sup_h[k]
        ));
    }
    report_line("4", pass, &detail.join("; "), t0);
    assert!(pass);
    assert!(t0.elapsed().as_secs_f64() < 5.0, "runtime bound 5 s exceeded");
}

#[test]
fn criterion_5_tuner_end_to_end() {
    let t0 = Instant::now();
    let targets = TuningTargets::new(0.5, 0.1);
    let report = tune(&targets).expect("tuner runs");
    let params = report.params.expect("accepted report has params");
    let inclusion = report.inclusion.as_ref().expect("inclusion report");
    let dev = report.deviation_core.expect("deviation report");
    let pass = report.accepted
        && params.n1 <= 1 << 14
        && params.n2 <= 1 << 14
        && params.delta1 >= 1e-8
        && params.delta2 >= 1e-8
        && inclusion.nsamples >= 10_000
        && inclusion.violations == 0
        && dev.sup < 0.5;
    report_line(
        "5",
        pass,
        &format!(
            "ACCEPTED with (N1, N2, d1, d2) = ({}, {}, {}, {}); inclusion {}/{} violations; \
             deviation {:.4e} < 0.5",
            params.n1,
            params.n2,
            params.delta1,
            params.delta2,
            inclusion.violations,
            inclusion.nsamples,
            dev.sup
        ),
        t0,
    );
    assert!(pass, "failure: {:?}", report.failure);
    assert!(t0.elapsed().as_secs_f64() < 120.0, "runtime bound 2 min exceeded");
}

#[test]
fn criterion_6_nonrunge_certificate_for_tuned_f() {
    let t0 = Instant::now();
    let targets = TuningTargets::new(0.5, 0.1);
    let report = tune(&targets).expect("tuner runs");
    assert!(report.accepted);
    let params = report.params.unwrap();
    let f = MapExpr::Pipeline(build_f(&params).expect("build F"));
    let config = NonRungeConfig::default_for(0.2);
    let cert = nonrunge_certificate(
        &f,
        &DomainSpec::ShiftedBallB,
        &C3Point::ZERO,
        0.2,
        &config,
    )
    .expect("witness search succeeds");
    let pass = cert.valid && cert.exclusion.sampled_distance > 0.0 && cert.center_excluded;
    report_line(
        "6",
        pass,
        &format!(
            "witness (r, alpha) = ({:.3e}, {:.3e}), interior margin {:.3e}, exclusion margin \
             {:.3e} (algebraic: {}), hull ratio {:.12}",
            cert.witness.r,
            cert.witness.alpha,
            cert.min_interior_margin,
            cert.exclusion.sampled_distance,
            cert.exclusion.algebraic,
            cert.hull.max_ratio
        ),
        t0,
    );
    assert!(pass);
    assert!(t0.elapsed().as_secs_f64() < 60.0, "runtime bound 1 min exceeded");
}

#[derive(Serialize, PartialEq)]
struct InversionReport {
    worst_rel: f64,
    nsamples: usize,
}

fn run_criterion_7(params: &wermer_forge::composite::WermerParams) -> InversionReport {
    let f = build_f(params).expect("build F");
    let pts: Vec<C3Point> = sample_interior(&DomainSpec::ShiftedBallB, 40_000, 5)
        .expect("samples")
        .into_iter()
        .filter(|z| z.z3.re <= -1e-3)
        .take(10_000)
        .collect();
    assert_eq!(pts.len(), 10_000);
    let mut worst: f64 = 0.0;
    for z in &pts {
        let w = f.forward(z).expect("forward");
        let back = f.inverse(&w).expect("inverse");
        worst = worst.max(back.dist(z) / (1.0 + z.norm()));
    }
    InversionReport {
        worst_rel: worst,
        nsamples: pts.len(),
    }
}

#[test]
fn criterion_7_inversion_fidelity() {
    let t0 = Instant::now();
    let targets = TuningTargets::new(0.5, 0.1);
    let report = tune(&targets).expect("tuner runs");
    let params = report.params.unwrap();
    let rep = run_criterion_7(&params);
    let pass = rep.worst_rel < 1e-8;
    report_line(
        "7",
        pass,
        &format!(
            "max relative F^-1(F(z)) error {:.3e} over {} samples of B with Re z3 <= -1e-3",
            rep.worst_rel, rep.nsamples
        ),
        t0,
    );
    assert!(pass);
    assert!(t0.elapsed().as_secs_f64() < 10.0, "runtime bound 10 s exceeded");
}

#[test]
fn criterion_8_chain_depth_three() {
    let t0 = Instant::now();
    let state = build_chain(3, 0.5, 7).expect("chain builds");
    let mut pass = state.ledger.len() == 15 && state.all_conditions_pass();
    pass &= state.grid_sup_deviation < 0.25;
    // condition (b_2) at the pinned alpha_0, directly
    let phi1 = state.phi(1).unwrap();
    let phi2 = state.phi(2).unwrap();
    let b2 = phi2
        .eval(&state.alphas[0])
        .unwrap()
        .dist(&phi1.eval(&state.alphas[0]).unwrap());
    pass &= b2 < 1e-10;
    // all three witnesses re-validated under phi_3 with positive margins
    for w in &state.witnesses {
        pass &= w.interior_margin > 0.0 && w.exclusion_margin > 0.0;
        pass &= w.hull_max_ratio <= HULL_RATIO_BOUND;
    }
    report_line(
        "8",
        pass,
        &format!(
            "15/15 conditions pass: {}; ||phi3 - id|| = {:.4e} < 0.25; ||phi2(a0) - phi1(a0)|| = \
             {:.3e} < 1e-10; witness margins {:?}",
            state.all_conditions_pass(),
            state.grid_sup_deviation,
            b2,
            state
                .witnesses
                .iter()
                .map(|w| (w.interior_margin, w.exclusion_margin))
                .collect::<Vec<_>>()
        ),
        t0,
    );
    assert!(pass);
    assert!(t0.elapsed().as_secs_f64() < 300.0, "runtime bound 5 min exceeded");
}

/// Everything criteria 1-8 measure, bundled for the byte-identity comparison.
#[derive(Serialize)]
struct FullRun {
    hole: HoleReport,
    hull_ratio: f64,
    windings: Vec<i64>,
    rates: RatesReport,
    tuning: wermer_forge::tuner::TuningReport,
    obstruction: wermer_forge::certify::ObstructionCertificate,
    inversion: InversionReport,
    chain: wermer_forge::chain::ChainState,
}

fn full_run() -> FullRun {
    let hole = run_criterion_1();
    let hull = hull_obstruction_test(&base_witness(), 200, 5, 42).unwrap();
    let rect = Rectangle::new(-2.0, -0.01, -2.0, 2.0);
    let windings = [50u32, 100, 200]
        .iter()
        .map(|&n| {
            winding_number(&ScalarMap::FN { n }, &rect, 4096)
                .unwrap()
                .winding
        })
        .collect();
    let rates = run_criterion_4();
    let targets = TuningTargets::new(0.5, 0.1);
    let tuning = tune(&targets).unwrap();
    let params = tuning.params.unwrap();
    let f = MapExpr::Pipeline(build_f(&params).unwrap());
    let obstruction = nonrunge_certificate(
        &f,
        &DomainSpec::ShiftedBallB,
        &C3Point::ZERO,
        0.2,
        &NonRungeConfig::default_for(0.2),
    )
    .unwrap();
    let inversion = run_criterion_7(&params);
    let chain = build_chain(3, 0.5, 7).unwrap();
    FullRun {
        hole,
        hull_ratio: hull.max_ratio,
        windings,
        rates,
        tuning,
        obstruction,
        inversion,
        chain,
    }
}

#[test]
fn criterion_9_determinism() {
    let t0 = Instant::now();
    let a = serde_json::to_string(&full_run()).expect("serialize run 1");
    let b = serde_json::to_string(&full_run()).expect("serialize run 2");
    let pass = a == b;
    report_line(
        "9",
        pass,
        &format!("two full reruns serialize to {} identical bytes", a.len()),
        t0,
    );
    assert!(pass, "reruns with identical seeds must be byte-identical");
}
