use super::{require_samples, tags, EstimateReport, Runner};
use crate::error::{invalid, Result};
use crate::stats::Summary;
use crate::walk::{sample_srw_to_radius, LerwSampler, LerwTarget};

/// Non-intersection probabilities for several inner radii at once, sharing
/// the same walk pairs. `ms[k] = 0` gives `Es(n)`; `ms[k] = m ≥ 1` gives
/// `Es(m, n)`, where the LERW is cut to its part from the first point with
/// `|L| ≥ m` on. Both paths exclude their common starting point.
pub fn estimate_es_profile(ms: &[u32], n: u32, samples: u64, runner: &Runner) -> Result<Vec<EstimateReport>> {
    require_samples(samples)?;
    if n == 0 {
        return Err(invalid("scale must be at least 1"));
    }
    if let Some(m) = ms.iter().find(|&&m| m >= n) {
        return Err(invalid(format!("inner radius {m} must be below n = {n}")));
    }
    let disjoint: Vec<Vec<bool>> = runner.chunks(samples, |range| {
        let mut lerw = LerwSampler::new(LerwTarget::Ball(n))?;
        range
            .map(|i| {
                let walk = sample_srw_to_radius(n, runner.stream(tags::ES_WALK, i))?;
                lerw.run(runner.stream(tags::ES_LERW, i))?;
                // X runs exit → origin; L = reverse(X) and L[k] = X[last − k]
                let x = lerw.lerw();
                let last = x.len() - 1;
                let cut = |m: u32| -> usize {
                    if m == 0 {
                        return 1;
                    }
                    let r2 = m as i64 * m as i64;
                    (0..=last).find(|&k| x[last - k].norm2() >= r2).unwrap_or(last + 1)
                };
                let mut deepest = 0usize;
                for &p in &walk.points()[1..] {
                    if let Some(pos) = lerw.position(p) {
                        deepest = deepest.max(last - pos);
                    }
                }
                Ok(ms.iter().map(|&m| deepest < cut(m)).collect())
            })
            .collect()
    })?;
    Ok(ms
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let hits = disjoint.iter().filter(|d| d[k]).count() as u64;
            let s = Summary::of_proportion(hits, samples);
            let r = EstimateReport::new(s.mean, s.stderr, samples, runner.seed())
                .with("n", n)
                .with("convention", "both paths exclude the origin");
            if m == 0 {
                r.with("quantity", "Es(n)")
            } else {
                r.with("m", m).with("quantity", "Es(m,n)")
            }
        })
        .collect())
}

/// `Es(n)`: probability that a walk to `∂B_n` and an independent LERW to
/// `∂B_n` share no point besides the origin.
pub fn estimate_es(n: u32, samples: u64, runner: &Runner) -> Result<EstimateReport> {
    Ok(estimate_es_profile(&[0], n, samples, runner)?.remove(0))
}

/// `Es(m, n)`: as [`estimate_es`] with the LERW replaced by its terminal
/// part after first leaving `B_m`.
pub fn estimate_es2(m: u32, n: u32, samples: u64, runner: &Runner) -> Result<EstimateReport> {
    if m == 0 {
        return Err(invalid("inner radius must be at least 1"));
    }
    Ok(estimate_es_profile(&[m], n, samples, runner)?.remove(0))
}
