//! Acceptance criteria 1 to 11. Each test prints one `criterion N: PASS|FAIL`
//! line with the measured quantities before asserting.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lerwlab::curve::{
    dist_rho, dist_sup, embed_lerw, map_s, map_t, Curve, SpeedFunction, DEFAULT_SUPPORT_TOLERANCE,
};
use lerwlab::estimators::*;
use lerwlab::lattice::{grid_approximation, DomainSpec, LatticePoint};
use lerwlab::loewner::{DrivingFunction, LoewnerChain, StartAngle};
use lerwlab::measure::{levy_prokhorov, OccupationMeasure, TestFamily};
use lerwlab::stats::{chi_square_homogeneity, least_squares};
use lerwlab::walk::{loop_erase, reverse_loop_erase, sample_lerw, sample_srw_to_radius, LatticePath, LerwTarget, RngStream};

fn report(id: u32, pass: bool, detail: String, started: Instant) {
    println!(
        "criterion {id}: {} ({detail}; {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
}

fn runner(seed: u64) -> Runner {
    Runner::new(seed, 1).unwrap()
}

fn path(pts: &[(i32, i32)]) -> LatticePath {
    LatticePath::new(pts.iter().map(|&(x, y)| LatticePoint::new(x, y)).collect()).unwrap()
}

fn pts(p: &LatticePath) -> Vec<(i32, i32)> {
    p.points().iter().map(|q| (q.x, q.y)).collect()
}

/// `max/min − 1` of positive values.
fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::MIN, f64::max);
    let min = xs.iter().cloned().fold(f64::MAX, f64::min);
    max / min - 1.0
}

#[test]
fn criterion_01_micro_oracles() {
    let started = Instant::now();
    let mut notes = Vec::new();

    let m1 = estimate_mn(1, 10_000, &runner(1)).unwrap();
    let mn_ok = m1.report.estimate == 1.0 && m1.report.stderr == 0.0;
    notes.push(format!("M_1 mean {} stderr {}", m1.report.estimate, m1.report.stderr));

    // Both objects are one uniform edge out of the origin; with the origin
    // excluded they are disjoint exactly when the endpoints differ.
    let nbrs = LatticePoint::ORIGIN.neighbors();
    let disjoint = nbrs.iter().flat_map(|a| nbrs.iter().map(move |b| a != b)).filter(|&d| d).count();
    let exact = disjoint as f64 / 16.0;
    let es = estimate_es(1, 100_000, &runner(2)).unwrap();
    let sigma = (exact * (1.0 - exact) / 1e5).sqrt();
    let es_ok = exact == 0.75 && (es.estimate - exact).abs() <= 3.0 * sigma;
    notes.push(format!("Es(1) {:.5} vs {exact} (3σ = {:.5})", es.estimate, 3.0 * sigma));

    let a = path(&[(0, 0), (1, 0), (0, 0), (0, 1)]);
    let b = path(&[(0, 0), (1, 0), (1, 1), (0, 1), (0, 0), (0, 1)]);
    let hand_ok = pts(&loop_erase(&a)) == [(0, 0), (0, 1)]
        && pts(&loop_erase(&b)) == [(0, 0), (0, 1)]
        && pts(&reverse_loop_erase(&b)) == [(0, 0), (1, 0), (1, 1), (0, 1)]
        && pts(&reverse_loop_erase(&a)) == [(0, 0), (0, 1)];
    notes.push(format!("hand cases {}", if hand_ok { "exact" } else { "mismatch" }));

    let pass = mn_ok && es_ok && hand_ok;
    report(1, pass, notes.join(", "), started);
    assert!(pass);
}

#[test]
fn criterion_02_loop_erasure_reversal_law() {
    let started = Instant::now();
    const SAMPLES: u64 = 100_000;
    let mut counts: BTreeMap<Vec<(i32, i32)>, (u64, u64)> = BTreeMap::new();
    for i in 0..SAMPLES {
        let s = sample_srw_to_radius(2, RngStream::derive(2024, 1, i)).unwrap();
        counts.entry(pts(&loop_erase(&s))).or_default().0 += 1;
        let s = sample_srw_to_radius(2, RngStream::derive(2024, 2, i)).unwrap();
        counts.entry(pts(&reverse_loop_erase(&s))).or_default().1 += 1;
    }
    let a: Vec<u64> = counts.values().map(|c| c.0).collect();
    let b: Vec<u64> = counts.values().map(|c| c.1).collect();
    let t = chi_square_homogeneity(&a, &b).unwrap();
    let pass = t.p_value > 0.01;
    report(
        2,
        pass,
        format!("{} outcomes, χ² = {:.1} on {} dof, p = {:.3}", counts.len(), t.statistic, t.dof, t.p_value),
        started,
    );
    assert!(pass);
}

const GROWTH_SCALES: [u32; 5] = [16, 32, 64, 128, 256];

#[test]
fn criterion_03_growth_exponent() {
    let started = Instant::now();
    let r = runner(3);
    let reports: Vec<EstimateReport> =
        GROWTH_SCALES.iter().map(|&n| estimate_mn(n, 10_000, &r).unwrap().report).collect();
    let fit = fit_growth_exponent(&GROWTH_SCALES, &reports, 3).unwrap();
    let pass = (1.18..=1.32).contains(&fit.slope);
    let means: Vec<String> = reports.iter().map(|r| format!("{:.1}", r.estimate)).collect();
    report(
        3,
        pass,
        format!("slope {:.4} ± {:.4}, means [{}]", fit.slope, fit.half_width, means.join(", ")),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_04_tightness() {
    let started = Instant::now();
    let r = runner(4);
    let tables: Vec<Vec<(f64, f64)>> = [32, 64, 128].iter().map(|&n| estimate_mn(n, 10_000, &r).unwrap().quantiles).collect();
    let mut pass = true;
    let mut notes = Vec::new();
    for level in [0.9, 0.99] {
        let qs: Vec<f64> = tables.iter().map(|t| t.iter().find(|q| q.0 == level).unwrap().1).collect();
        let s = spread(&qs);
        pass &= s < 0.15;
        notes.push(format!("q{level}: {:.3}/{:.3}/{:.3} spread {:.3}", qs[0], qs[1], qs[2], s));
    }
    report(4, pass, notes.join(", "), started);
    assert!(pass);
}

#[test]
fn criterion_05_green_field_stability() {
    let started = Instant::now();
    let field = estimate_edge_probability(&EdgeConfig::new(128, 100_000), &runner(5)).unwrap();
    let ratios: Vec<f64> = field.bins.iter().map(|b| b.ratio).collect();
    let s = spread(&ratios);
    let pass = s <= 0.15;
    let bins: Vec<String> = field
        .bins
        .iter()
        .map(|b| format!("|z|={} ratio {:.4}±{:.4}", b.radius, b.ratio, b.ratio_stderr))
        .collect();
    report(5, pass, format!("{}, spread {:.3}, c_n {:.1}", bins.join(", "), s, field.c_n), started);
    assert!(pass);
}

#[test]
fn criterion_06_occupation_bound() {
    let started = Instant::now();
    let r = runner(6);
    let mut quotients = Vec::new();
    let mut notes = Vec::new();
    for eps in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
        let cfg = OccupationConfig {
            z: [0.4, 0.0],
            eps,
            n: 256,
            samples: 20_000,
            mn_samples: 10_000,
            speed: SpeedChoice::Empirical,
        };
        let e = estimate_conditional_occupation(&cfg, &r).unwrap();
        quotients.push(e.bound_quotient);
        notes.push(format!("ε={eps}: C {:.4} ({} hits, ratio (c) {:.3})", e.bound_quotient, e.hits, e.ratio_scaled));
    }
    let mean = quotients.iter().sum::<f64>() / 3.0;
    let max = quotients.iter().cloned().fold(f64::MIN, f64::max);
    let min = quotients.iter().cloned().fold(f64::MAX, f64::min);
    let variation = (max - min) / mean;
    let pass = variation < 0.5;
    report(6, pass, format!("{}, variation {:.3}", notes.join(", "), variation), started);
    assert!(pass);
}

#[test]
fn criterion_07_escape_exponent() {
    let started = Instant::now();
    let n = 256;
    let ms = [64, 32, 16];
    let reps = estimate_es_profile(&ms, n, 10_000, &runner(7)).unwrap();
    let x: Vec<f64> = ms.iter().map(|&m| (m as f64 / n as f64).ln()).collect();
    let y: Vec<f64> = reps.iter().map(|r| r.estimate.ln()).collect();
    let fit = least_squares(&x, &y).unwrap();
    let pass = (0.55..=0.95).contains(&fit.slope);
    let vals: Vec<String> = reps.iter().map(|r| format!("{:.4}±{:.4}", r.estimate, r.stderr)).collect();
    report(7, pass, format!("Es(εn, n) = [{}], exponent {:.4}", vals.join(", "), fit.slope), started);
    assert!(pass);
}

#[test]
fn criterion_08_loewner_normalization() {
    let started = Instant::now();
    let r = 1e-4;
    let expected = 1f64.exp();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = DrivingFunction::brownian(2.0, 1.0, 1e-4, StartAngle::Uniform, RngStream::derive(8, 1, i)).unwrap();
        let chain = LoewnerChain::new(&d);
        let plus = chain.solve(Complex64::new(r, 0.0)).unwrap();
        let minus = chain.solve(Complex64::new(-r, 0.0)).unwrap();
        assert!(plus.blow_up.is_none() && minus.blow_up.is_none());
        let deriv = (plus.values.last().unwrap() - minus.values.last().unwrap()) / (2.0 * r);
        worst = worst.max((deriv.norm() / expected - 1.0).abs());
    }
    let pass = worst < 1e-3;
    report(8, pass, format!("max relative error of |g_1'(0)| vs e: {worst:.2e}"), started);
    assert!(pass);
}

#[test]
fn criterion_09_martingale_observable() {
    let started = Instant::now();
    let rep = martingale_check(&MartingaleConfig::new(2.0, [0.5, 0.0], 10_000), &runner(9)).unwrap();
    let score = rep.max_drift_score();
    let pass = score <= 3.0;
    let pts: Vec<String> =
        rep.points.iter().map(|p| format!("t={}: {:.4}±{:.4} drift {:+.4}±{:.4}", p.t, p.mean, p.stderr, p.drift, p.drift_stderr)).collect();
    report(
        9,
        pass,
        format!("M_0 = {:.4}, {}, max |drift|/σ {:.2}", rep.initial, pts.join(", "), score),
        started,
    );
    assert!(pass);
}

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

/// Random polyline in the unit square with random, occasionally repeated,
/// positions and increasing times.
fn random_curve(rng: &mut ChaCha8Rng) -> Curve {
    let k = rng.random_range(2..12);
    let mut v = vec![c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))];
    let mut t = vec![0.0];
    for _ in 1..k {
        let last = *v.last().unwrap();
        let next = if rng.random_bool(0.1) {
            last
        } else {
            c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
        };
        v.push(next);
        t.push(t.last().unwrap() + rng.random_range(0.01..0.5));
    }
    Curve::new(v, t).unwrap()
}

/// Small perturbation of `g`: vertices jittered, times warped.
fn perturbed(g: &Curve, rng: &mut ChaCha8Rng) -> Curve {
    let amp = rng.random_range(0.0..0.05);
    let v = g.vertices().iter().map(|p| p + c(rng.random_range(-amp..=amp), rng.random_range(-amp..=amp))).collect();
    let mut t = vec![0.0];
    for w in g.times().windows(2) {
        t.push(t.last().unwrap() + (w[1] - w[0]) * rng.random_range(0.8..1.25));
    }
    Curve::new(v, t).unwrap()
}

/// `g` followed by a pause up to time `until`; same class, longer lifetime.
fn padded(g: &Curve, until: f64) -> Curve {
    if until <= g.lifetime() {
        return g.clone();
    }
    let mut v = g.vertices().to_vec();
    let mut t = g.times().to_vec();
    v.push(g.end());
    t.push(until);
    Curve::new(v, t).unwrap()
}

/// Simple curve: strictly increasing abscissa.
fn random_simple_curve(rng: &mut ChaCha8Rng) -> Curve {
    let k = rng.random_range(1..15);
    let (mut x, mut t) = (-0.9, 0.0);
    let mut v = vec![c(x, 0.0)];
    let mut ts = vec![0.0];
    for _ in 0..k {
        x += rng.random_range(0.01..0.12);
        t += rng.random_range(0.01..1.0);
        v.push(c(x, rng.random_range(-0.5..0.5)));
        ts.push(t);
    }
    Curve::new(v, ts).unwrap()
}

#[test]
fn criterion_10_topology_machinery() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let family = TestFamily::default();
    let res = 0.01;

    // T is 2-Lipschitz: ρ(γ̃₁, γ̃₂) + d_LP(ν₁, ν₂) ≤ 2 d(γ₁, γ₂). The Fréchet
    // value is taken on common-time refinements, where it bounds ρ from above.
    let mut lipschitz_worst = f64::MIN;
    for i in 0..1000 {
        let g1 = random_curve(&mut rng);
        let g2 = if i % 2 == 0 { perturbed(&g1, &mut rng) } else { random_curve(&mut rng) };
        let d = dist_sup(&g1, &g2);
        let life = g1.lifetime().max(g2.lifetime());
        let (p1, p2) = (padded(&g1, life), padded(&g2, life));
        let mut grid: Vec<f64> = p1.times().iter().chain(p2.times()).copied().collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let fine: Vec<f64> = (0..=2000).map(|k| life * k as f64 / 2000.0).collect();
        grid.extend(fine);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let rho = dist_rho(&p1.refined_at(&grid), &p2.refined_at(&grid)).value;
        let (_, nu1) = map_t(&g1, res).unwrap();
        let (_, nu2) = map_t(&g2, res).unwrap();
        let lp = levy_prokhorov(&nu1, &nu2, family);
        lipschitz_worst = lipschitz_worst.max(rho + lp.estimate - 2.0 * d - lp.resolution);
    }
    let lipschitz_ok = lipschitz_worst <= 1e-9;

    // S ∘ T on simple curves: half random polylines, half rescaled LERW.
    let mut round_trip_worst: f64 = 0.0;
    for i in 0..1000u64 {
        let g = if i % 2 == 0 {
            random_simple_curve(&mut rng)
        } else {
            let s = sample_lerw(LerwTarget::Ball(16), RngStream::derive(10, 1, i)).unwrap();
            embed_lerw(&s, 16, SpeedFunction::growth(16)).unwrap()
        };
        let (cls, mu) = map_t(&g, 0.05).unwrap();
        let h = map_s(&cls, &mu, DEFAULT_SUPPORT_TOLERANCE).unwrap();
        round_trip_worst = round_trip_worst.max(dist_sup(&g, &h));
    }
    let round_trip_ok = round_trip_worst < 1e-9;

    // Point-mass distances derived by hand from the definition.
    let dirac = |x: f64, y: f64, m: f64| OccupationMeasure::dirac(c(x, y), m).unwrap();
    let pair = |a: OccupationMeasure, b: OccupationMeasure| {
        OccupationMeasure::new(a.atoms().iter().chain(b.atoms()).cloned().collect()).unwrap()
    };
    let cases = [
        (dirac(0.0, 0.0, 1.0), dirac(0.3, 0.0, 1.0), 0.3),
        (dirac(0.0, 0.0, 1.0), dirac(0.0, 2.0, 1.0), 1.0),
        (dirac(0.1, 0.1, 1.0), dirac(0.1, 0.1, 0.5), 0.5),
        (pair(dirac(0.0, 0.0, 0.5), dirac(0.6, 0.0, 0.5)), dirac(0.0, 0.0, 1.0), 0.5),
        (dirac(0.0, 0.0, 0.2), dirac(0.0, 0.7, 0.2), 0.2),
        (dirac(0.0, 0.0, 3.0), dirac(0.0, 0.4, 3.0), 0.4),
    ];
    let mut lp_worst: f64 = 0.0;
    let mut lp_res: f64 = 0.0;
    let mut lp_ok = true;
    for (mu, nu, exact) in &cases {
        let d = levy_prokhorov(mu, nu, family);
        lp_ok &= d.lower <= exact + 1e-9 && *exact <= d.upper + 1e-9;
        lp_ok &= (d.estimate - exact).abs() <= d.resolution + 1e-6;
        lp_worst = lp_worst.max((d.estimate - exact).abs());
        lp_res = lp_res.max(d.resolution);
    }

    let pass = lipschitz_ok && round_trip_ok && lp_ok;
    report(
        10,
        pass,
        format!(
            "Lipschitz excess {lipschitz_worst:.2e}, S∘T error {round_trip_worst:.2e}, LP oracle error {lp_worst:.2e} (resolution {lp_res:.2e})"
        ),
        started,
    );
    assert!(pass);
}

fn json<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_string(x).unwrap()
}

/// Serialized output of every experiment at a fixed seed.
fn all_experiments(workers: usize) -> Vec<(&'static str, String)> {
    let r = Runner::new(11, workers).unwrap();
    let mut out = Vec::new();
    let mn: Vec<MnEstimate> = [8, 16, 32].iter().map(|&n| estimate_mn(n, 500, &r).unwrap()).collect();
    out.push(("estimate-mn", json(&mn)));
    out.push(("steps", json(&sample_step_counts(16, 3000, &r).unwrap())));
    let reports: Vec<EstimateReport> = mn.iter().map(|m| m.report.clone()).collect();
    out.push(("fit-exponent", json(&fit_growth_exponent(&[8, 16, 32], &reports, 11).unwrap())));
    out.push(("edge-prob", json(&estimate_edge_probability(&EdgeConfig::new(32, 2500), &r).unwrap())));
    let occ = OccupationConfig { z: [0.4, 0.0], eps: 0.25, n: 32, samples: 2000, mn_samples: 500, speed: SpeedChoice::Empirical };
    out.push(("occupation", json(&estimate_conditional_occupation(&occ, &r).unwrap())));
    out.push(("es", json(&estimate_es_profile(&[0, 4, 8], 32, 2000, &r).unwrap())));
    out.push(("hit-prob", json(&estimate_hit_probability([0.5, 0.0], 0.1, 32, 2000, &r).unwrap())));
    let sle = SleHitConfig { t_max: 1.0, dt: 1e-2, ..Default::default() };
    out.push(("hit-prob-sle", json(&estimate_sle_hit_probability([0.5, 0.0], 0.1, 200, &sle, &r).unwrap())));
    let dom = grid_approximation(&DomainSpec::Square { side: 4.0, center: [0.0, 0.0] }, 1).unwrap();
    out.push(("domain-markov", json(&domain_markov_test(&dom, 1, 20_000, Comparator::SlitDomain, &r).unwrap())));
    let mut mart = MartingaleConfig::new(2.0, [0.5, 0.0], 300);
    mart.times = vec![0.05, 0.1];
    out.push(("martingale-check", json(&martingale_check(&mart, &r).unwrap())));
    out
}

#[test]
fn criterion_11_determinism_across_workers() {
    let started = Instant::now();
    let one = all_experiments(1);
    let mut differing = Vec::new();
    for workers in [2, 5] {
        for ((name, a), (_, b)) in one.iter().zip(all_experiments(workers)) {
            if *a != b {
                differing.push(format!("{name}@{workers}"));
            }
        }
    }
    let pass = differing.is_empty();
    report(
        11,
        pass,
        format!("{} experiments at workers 1/2/5, differing: [{}]", one.len(), differing.join(", ")),
        started,
    );
    assert!(pass);
}
