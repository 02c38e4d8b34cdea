use std::collections::BTreeMap;

use lerwlab::estimators::*;
use lerwlab::lattice::{grid_approximation, DomainSpec};
use lerwlab::stats::chi_square_goodness;
use lerwlab::walk::{LerwSampler, LerwTarget, RngStream};

type P = (i32, i32);

fn inside(p: P) -> bool {
    p.0 * p.0 + p.1 * p.1 < 4
}

fn nbrs(p: P) -> [P; 4] {
    [(p.0 + 1, p.1), (p.0, p.1 + 1), (p.0 - 1, p.1), (p.0, p.1 - 1)]
}

/// Expected visits to `x` before leaving `set`, from `x`: solves
/// `(I − P) g = e_x` by Gaussian elimination.
fn green_diag(set: &[P], x: P) -> f64 {
    let m = set.len();
    let idx = |p: P| set.iter().position(|&q| q == p);
    let mut a = vec![vec![0.0f64; m + 1]; m];
    for (i, &p) in set.iter().enumerate() {
        a[i][i] = 1.0;
        for q in nbrs(p) {
            if let Some(j) = idx(q) {
                a[i][j] -= 0.25;
            }
        }
        a[i][m] = if p == x { 1.0 } else { 0.0 };
    }
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..m {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=m {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let i = idx(x).unwrap();
    a[i][m] / a[i][i]
}

/// Law of the loop erasure of a walk from the origin stopped on leaving
/// `{|x| < 2}`: a self-avoiding path `η` of `k` steps has probability
/// `4^{−k} Π_i G_{A_i}(η_i, η_i)` with `A_i` the interior minus `η_0..η_{i−1}`.
fn exact_law() -> BTreeMap<Vec<P>, f64> {
    let interior: Vec<P> = (-1..=1).flat_map(|x| (-1..=1).map(move |y| (x, y))).filter(|&p| inside(p)).collect();
    assert_eq!(interior.len(), 9);
    let mut law = BTreeMap::new();
    let mut stack = vec![(vec![(0, 0)], 1.0)];
    while let Some((path, weight)) = stack.pop() {
        let tip = *path.last().unwrap();
        let avail: Vec<P> = interior.iter().copied().filter(|p| !path[..path.len() - 1].contains(p)).collect();
        let w = weight * green_diag(&avail, tip) / 4.0;
        for q in nbrs(tip) {
            if path.contains(&q) {
                continue;
            }
            let mut next = path.clone();
            next.push(q);
            if inside(q) {
                stack.push((next, w));
            } else {
                law.insert(next, w);
            }
        }
    }
    law
}

#[test]
fn lerw_law_at_radius_two_matches_enumeration() {
    let law = exact_law();
    let total: f64 = law.values().sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
    let mean: f64 = law.iter().map(|(k, v)| (k.len() - 1) as f64 * v).sum();

    let samples = 100_000u64;
    let mut s = LerwSampler::new(LerwTarget::Ball(2)).unwrap();
    let mut counts: BTreeMap<Vec<P>, u64> = BTreeMap::new();
    for i in 0..samples {
        s.run(RngStream::derive(77, 1, i)).unwrap();
        let path: Vec<P> = s.lerw().iter().rev().map(|p| (p.x, p.y)).collect();
        assert!(law.contains_key(&path), "{path:?}");
        *counts.entry(path).or_default() += 1;
    }
    let keys: Vec<&Vec<P>> = law.keys().collect();
    let observed: Vec<u64> = keys.iter().map(|k| counts.get(*k).copied().unwrap_or(0)).collect();
    let probs: Vec<f64> = keys.iter().map(|k| law[*k]).collect();
    let t = chi_square_goodness(&observed, &probs).unwrap();
    assert!(t.p_value > 0.01, "{t:?}");

    let r = estimate_mn(2, samples, &Runner::new(78, 1).unwrap()).unwrap().report;
    assert!((r.estimate - mean).abs() < 3.0 * r.stderr, "Ê[M_2] = {} ± {}, exact {mean}", r.estimate, r.stderr);
}

#[test]
fn hit_probability_is_stable_across_scales() {
    let r = Runner::new(21, 1).unwrap();
    let reps: Vec<EstimateReport> =
        [64, 128, 256].iter().map(|&n| estimate_hit_probability([0.5, 0.0], 0.1, n, 10_000, &r).unwrap()).collect();
    for a in &reps {
        for b in &reps {
            let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            assert!((a.estimate - b.estimate).abs() <= 3.0 * se, "{reps:?}");
        }
    }
}

#[test]
fn lerw_and_sle_hit_probabilities_agree() {
    let r = Runner::new(22, 1).unwrap();
    let lerw = estimate_hit_probability([0.5, 0.0], 0.1, 256, 10_000, &r).unwrap();
    let sle = estimate_sle_hit_probability([0.5, 0.0], 0.1, 4_000, &SleHitConfig::default(), &r).unwrap();
    let se = (lerw.stderr.powi(2) + sle.stderr.powi(2)).sqrt();
    assert!(
        (lerw.estimate - sle.estimate).abs() <= 5.0 * se,
        "lerw {} ± {}, sle {} ± {}",
        lerw.estimate,
        lerw.stderr,
        sle.estimate,
        sle.stderr
    );
}

#[test]
fn domain_markov_property_and_negative_control() {
    let dom = grid_approximation(&DomainSpec::Square { side: 4.0, center: [0.0, 0.0] }, 1).unwrap();
    let r = Runner::new(23, 1).unwrap();
    let slit = domain_markov_test(&dom, 1, 1_000_000, Comparator::SlitDomain, &r).unwrap();
    assert!(slit.p_value > 0.01, "{slit:?}");
    assert_eq!(slit.prefix.len(), 2);
    assert!(!dom.vertices().contains(&slit.prefix[0]));
    // X(0) lies outside the domain, so ignoring the prefix only changes the
    // comparator law once the prefix has an interior point besides the tip.
    let control = domain_markov_test(&dom, 2, 1_000_000, Comparator::FullDomain, &r).unwrap();
    assert!(control.p_value < 0.01, "{control:?}");
    let slit = domain_markov_test(&dom, 2, 1_000_000, Comparator::SlitDomain, &r).unwrap();
    assert!(slit.p_value > 0.01, "{slit:?}");
}

#[test]
fn edge_visits_sum_to_step_count() {
    let f = estimate_edge_probability(&EdgeConfig::new(24, 4000), &Runner::new(24, 1).unwrap()).unwrap();
    assert_eq!(f.total_visits, f.total_steps);
    assert!((f.mean_total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn escape_probability_decreases_with_scale() {
    let r = Runner::new(25, 1).unwrap();
    let es: Vec<EstimateReport> = [4, 8, 16, 32].iter().map(|&n| estimate_es(n, 20_000, &r).unwrap()).collect();
    for w in es.windows(2) {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].estimate <= w[0].estimate + 3.0 * se, "{es:?}");
    }
}

#[test]
fn standard_errors_shrink_with_samples() {
    let r = Runner::new(26, 1).unwrap();
    let a = estimate_mn(16, 4000, &r).unwrap().report.stderr;
    let b = estimate_mn(16, 16_000, &r).unwrap().report.stderr;
    assert!((a / b - 2.0).abs() < 0.3, "{a} {b}");
}
