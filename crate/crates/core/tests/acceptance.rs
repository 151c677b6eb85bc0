//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recurrence_core::approximation::{delta_estimate_plane, delta_estimate_rose, rose_pipeline, RosePipelineConfig, RosePipelineReport};
use recurrence_core::cli::plane_agreement;
use recurrence_core::counterexample::{
    approximability_check, candidate_loops, local_geodesy_check, non_recurrence_certificate, XConfig,
};
use recurrence_core::cylinder::CylinderConfig;
use recurrence_core::error::GeomError;
use recurrence_core::flow::{LocalGeodesic, SpaceHandle, SpacePoint};
use recurrence_core::metric::MetricSpace;
use recurrence_core::model_plane::{cat_inequality_check, geodesic_through, project_to_geodesic, PlaneGeodesic, PlaneSpace};
use recurrence_core::rose::{path_point, tree_distance, EdgeWord, Letter, RoseConfig, TreePos};
use recurrence_core::search::is_unimodal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let cfg = XConfig::new(2.0, 4.0, None, -1.0).unwrap();
    let started = Instant::now();
    let cert = non_recurrence_certificate(0.4, 0.0, 30.0, 0.005, &cfg, false).unwrap();
    let secs = started.elapsed().as_secs_f64();
    outcome(
        cert.pass && secs <= 120.0,
        format!(
            "counterexample certificate over s in (0, 30], step 0.005: min max = {:.6} at s = {}, certified bound = {:.6} (need >= 0.4), \
             branch violations = {}, {:.1} s",
            cert.min_max, cert.argmin_s, cert.certified_lower_bound, cert.branch_violations, secs
        ),
    )
}

fn criterion_2() -> Outcome {
    let cfg = XConfig::new(2.0, 4.0, None, -1.0).unwrap();
    let base: Vec<f64> = (0..20).map(|k| -4.0 + 0.5 * k as f64).collect();
    // no mixed loops: the candidates are c₂ and c₁
    assert_eq!(candidate_loops(0).len(), 2);
    let report = approximability_check(&cfg, &[0.2, 0.1], &base, 0, 0.01).unwrap();
    let failing: Vec<String> = report
        .results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("(eps {}, t_x {})", r.eps, r.t_x))
        .collect();
    outcome(
        report.pass,
        format!("approximability by c1 or c2 at 20 base points, eps in {{0.2, 0.1}}: {} of 40 fail {}", report.failures, failing.join(" ")),
    )
}

fn criterion_3(rep: &RosePipelineReport) -> Outcome {
    let max_eps = rep.levels.iter().map(|l| l.report.eps_n).fold(0.0, f64::max);
    let kappa_ok = (rep.kappa - (2.0 * max_eps + 0.01)).abs() < 1e-15;
    let i = rep.levels.iter().all(|l| l.nontriviality.pass && l.nontriviality.bound_holds);
    let ii = kappa_ok && rep.levels.iter().all(|l| l.quasi.pass && l.quasi.params.lambda == 1.0);
    let iii = rep.levels.iter().all(|l| l.report.consistent());
    let iv = rep.eventually_below.iter().all(|e| e.from_level.is_some()) && rep.eventually_below.iter().any(|e| e.eps <= 0.02);
    let last = rep.levels.last().map(|l| l.report.sup).unwrap_or(f64::NAN);
    outcome(
        i && ii && iii && iv,
        format!(
            "rose pipeline, {} levels: nontriviality {i}, quasi-geodesic (kappa {:.4}) {ii}, budget and (final) {iii}, eventually below 0.02 {iv}; last sup {last:.2e}",
            rep.levels.len(),
            rep.kappa
        ),
    )
}

fn criterion_4() -> Outcome {
    let cyl = CylinderConfig::new(2.0, -1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut done, mut resampled, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    while done < 1000 {
        let tri = cyl.sample_triangle(&mut rng, 0.4, 1.0);
        match cat_inequality_check(&cyl, &tri, 20, -1.0, done as u64) {
            Ok(v) => {
                worst = worst.max(v);
                done += 1;
            }
            Err(GeomError::AboveLiftingThreshold { .. }) => resampled += 1,
            Err(e) => return outcome(false, format!("cylinder triangle {done}: {e}")),
        }
    }
    let plane = PlaneSpace::unit();
    let mut agree = 0.0f64;
    for i in 0..1000 {
        let tri = [(); 3].map(|_| plane.sample_ball(&mut rng, 3.0));
        agree = agree.max(plane_agreement(&plane, &tri, 20, i).unwrap());
    }
    outcome(
        worst <= 1e-8 && agree <= 1e-9,
        format!("1000 cylinder triangles x 20 pairs: max excess {worst:.2e} ({resampled} resampled); plane agreement {agree:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let plane = PlaneSpace::unit();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut unimodal, mut unique, mut worst_foot) = (0usize, 0usize, 0.0f64);
    for k in 0..1000 {
        // every other pair uses the imaginary axis itself
        let g: PlaneGeodesic = if k % 2 == 0 {
            PlaneGeodesic::imaginary_axis(-1.0).unwrap()
        } else {
            loop {
                let (a, b) = (plane.sample_ball(&mut rng, 3.0), plane.sample_ball(&mut rng, 3.0));
                if plane.distance(&a, &b) > 1e-3 {
                    break geodesic_through(&a, &b, -1.0).unwrap();
                }
            }
        };
        let p = plane.sample_ball(&mut rng, 4.0);
        let proj = project_to_geodesic(&p, &g).unwrap();
        let w = g.frame().inverse().apply(&p);
        let closed = w.x().hypot(w.y()).ln();
        worst_foot = worst_foot.max((proj.s - closed).abs());

        let h = 10.0 / 999.0;
        let grid: Vec<f64> = (0..1000).map(|i| proj.s - 5.0 + i as f64 * h).collect();
        let profile: Vec<f64> = grid.iter().map(|&s| plane.distance(&p, &g.eval(s))).collect();
        unimodal += is_unimodal(&profile, 1e-12) as usize;
        let min = profile.iter().copied().fold(f64::INFINITY, f64::min);
        let lonely = grid.iter().zip(&profile).all(|(s, d)| (s - proj.s).abs() <= 2.0 * h || *d > min + 1e-9);
        unique += lonely as usize;
    }
    outcome(
        unimodal == 1000 && unique == 1000 && worst_foot <= 1e-9,
        format!("1000 projections: unimodal {unimodal}, unique minimiser {unique}, foot error vs closed form {worst_foot:.2e}"),
    )
}

fn criterion_6(rep: &RosePipelineReport) -> Outcome {
    let rose = delta_estimate_rose(RoseConfig::golden(), 10.0, 100_000, 6);
    let plane = delta_estimate_plane(-1.0, 5.0, 10_000, 6).unwrap();
    outcome(
        rose <= 1e-12 && plane.is_finite() && plane <= 1.5 && rep.kappa > 16.0 * rose,
        format!("rose tree delta {rose:.2e} over 1e5 quadruples; plane ball radius 5 delta {plane:.4} over 1e4; kappa {:.4}", rep.kappa),
    )
}

fn criterion_7(rep: &RosePipelineReport) -> Outcome {
    let b = &rep.boundary;
    let chain = b.rows.iter().all(|r| r.chain_pass);
    let products: Vec<String> = b.rows.iter().map(|r| format!("{:.3}", r.product)).collect();
    outcome(
        chain && b.increasing,
        format!("Gromov products >= t_n - (eps_n + C) {chain}, strictly increasing {}: [{}]", b.increasing, products.join(", ")),
    )
}

const ALPHABET: [Letter; 4] = [Letter::A, Letter::A_INV, Letter::B, Letter::B_INV];

fn random_reduced(rng: &mut ChaCha8Rng, len: usize) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(len);
    while out.len() < len {
        let l = ALPHABET[rng.gen_range(0..4)];
        if !out.last().is_some_and(|x| x.cancels(l)) {
            out.push(l);
        }
    }
    out
}

/// The edge path spelled by `letters`, pushed down to the rose.
fn rose_path(letters: Vec<Letter>, cfg: RoseConfig) -> LocalGeodesic {
    LocalGeodesic::new(SpaceHandle::Rose(cfg), move |t| SpacePoint::Rose(path_point(&letters, t, &cfg).project(&cfg)))
}

fn criterion_8() -> Outcome {
    let cfg = RoseConfig::golden();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut exact = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let letters = random_reduced(&mut rng, n);
        let len = EdgeWord::from_letters(letters.clone()).length(&cfg);
        let end = path_point(&letters, len, &cfg);
        if tree_distance(&TreePos::base(), &end, &cfg).unwrap() == len {
            exact += 1;
        }
    }
    let u = 0.25 * cfg.shortest_petal();
    let mut rejected = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let mut letters = random_reduced(&mut rng, n);
        let m = rng.gen_range(0..=5);
        let tail = random_reduced(&mut rng, m);
        // glue the inverse of the last letter on, then continue reduced
        let junction = EdgeWord::from_letters(letters.clone()).length(&cfg);
        let back = letters.last().unwrap().inv();
        letters.push(back);
        for l in tail {
            if !letters.last().unwrap().cancels(l) {
                letters.push(l);
            }
        }
        let checks = local_geodesy_check(&rose_path(letters, cfg), &[junction], u).unwrap();
        if !checks[0].pass {
            rejected += 1;
        }
    }
    outcome(
        exact == 100 && rejected == 100,
        format!("reduced words with path length = tree distance: {exact}/100; backtracking concatenations rejected: {rejected}/100"),
    )
}

fn main() -> ExitCode {
    let pipeline = rose_pipeline(&RosePipelineConfig::default()).expect("rose pipeline runs");
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(&pipeline),
        criterion_4(),
        criterion_5(),
        criterion_6(&pipeline),
        criterion_7(&pipeline),
        criterion_8(),
    ];
    for (i, r) in results.iter().enumerate() {
        println!("criterion {}: {} - {}", i + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
