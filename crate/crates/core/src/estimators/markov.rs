use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{require_samples, tags, Runner};
use crate::error::{invalid, Error, Result};
use crate::lattice::{GridDomain, LatticePoint};
use crate::stats::{chi_square_homogeneity, ChiSquare};
use crate::walk::{LerwSampler, LerwTarget};

/// Occurrences of the conditioning prefix required before testing.
pub const PREFIX_MIN_COUNT: u64 = 500;

/// Law the conditioned remainders are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    /// LERW in `dom ∖ α` from the prefix tip `X(j)` to the origin: a walk from
    /// the origin in the slit domain, kept when it leaves through `X(j)`.
    #[default]
    SlitDomain,
    /// Negative control: the walk ignores `α` and is only stopped at `X(j)`
    /// or `∂dom`. Since `X(0)` lies outside `dom`, this coincides with
    /// [`Comparator::SlitDomain`] for `j = 1`.
    FullDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub j: usize,
    pub comparator: Comparator,
    pub prefix: Vec<LatticePoint>,
    pub prefix_count: u64,
    pub samples: u64,
    pub comparator_accepted: u64,
    pub outcomes: usize,
    pub test: ChiSquare,
    pub p_value: f64,
}

/// Chi-square test of the domain Markov property: remainders `X[j, ℓ]` of
/// LERW samples in `dom` whose first `j` steps equal the most frequent prefix
/// `α`, against fresh samples from the comparator law. Both sides use
/// `samples` walks.
pub fn domain_markov_test(
    dom: &GridDomain,
    j: usize,
    samples: u64,
    comparator: Comparator,
    runner: &Runner,
) -> Result<MarkovReport> {
    require_samples(samples)?;
    let mut prefixes: BTreeMap<Vec<LatticePoint>, u64> = BTreeMap::new();
    let parts: Vec<BTreeMap<Vec<LatticePoint>, u64>> = runner.chunks(samples, |range| {
        let mut s = LerwSampler::new(LerwTarget::Domain(dom))?;
        let mut local: BTreeMap<Vec<LatticePoint>, u64> = BTreeMap::new();
        for i in range {
            s.run(runner.stream(tags::MARKOV_FULL, i))?;
            let x = s.lerw();
            if x.len() > j + 1 {
                *local.entry(x[..=j].to_vec()).or_default() += 1;
            }
        }
        Ok(vec![local])
    })?;
    for part in parts {
        for (k, v) in part {
            *prefixes.entry(k).or_default() += v;
        }
    }
    let (prefix, count) = prefixes
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(k, v)| (k.clone(), *v))
        .ok_or_else(|| invalid(format!("no sample has more than {j} steps")))?;
    if count < PREFIX_MIN_COUNT {
        return Err(Error::PrefixTooRare { count, needed: PREFIX_MIN_COUNT });
    }

    let conditioned: Vec<Vec<LatticePoint>> = runner.chunks(samples, |range| {
        let mut s = LerwSampler::new(LerwTarget::Domain(dom))?;
        let mut out = Vec::new();
        for i in range {
            s.run(runner.stream(tags::MARKOV_FULL, i))?;
            let x = s.lerw();
            if x.len() > j + 1 && x[..=j] == prefix[..] {
                out.push(x[j..].to_vec());
            }
        }
        Ok(out)
    })?;

    let tip = prefix[j];
    let removed: &[LatticePoint] = match comparator {
        Comparator::SlitDomain => &prefix[1..],
        Comparator::FullDomain => &prefix[j..],
    };
    let fresh_dom = if removed.is_empty() { dom.clone() } else { dom.without(removed)? };
    let fresh: Vec<Vec<LatticePoint>> = runner.chunks(samples, |range| {
        let mut s = LerwSampler::new(LerwTarget::Domain(&fresh_dom))?;
        let mut out = Vec::new();
        for i in range {
            s.run(runner.stream(tags::MARKOV_FRESH, i))?;
            if s.walk().last() == Some(&tip) {
                out.push(s.lerw().to_vec());
            }
        }
        Ok(out)
    })?;

    let mut table: BTreeMap<&[LatticePoint], (u64, u64)> = BTreeMap::new();
    for r in &conditioned {
        table.entry(r).or_default().0 += 1;
    }
    for r in &fresh {
        table.entry(r).or_default().1 += 1;
    }
    let a: Vec<u64> = table.values().map(|v| v.0).collect();
    let b: Vec<u64> = table.values().map(|v| v.1).collect();
    let test = chi_square_homogeneity(&a, &b)?;
    Ok(MarkovReport {
        j,
        comparator,
        prefix,
        prefix_count: count,
        samples,
        comparator_accepted: fresh.len() as u64,
        outcomes: table.len(),
        p_value: test.p_value,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{grid_approximation, DomainSpec};

    fn square(side: f64) -> GridDomain {
        grid_approximation(&DomainSpec::Square { side, center: [0.0, 0.0] }, 1).unwrap()
    }

    #[test]
    fn prefix_of_length_zero_matches() {
        let dom = square(2.0);
        let r = domain_markov_test(&dom, 0, 20_000, Comparator::SlitDomain, &Runner::new(3, 1).unwrap()).unwrap();
        assert_eq!(r.prefix.len(), 1);
        assert!(r.p_value > 1e-3, "{r:?}");
    }

    #[test]
    fn rare_prefix_is_refused() {
        let dom = square(2.0);
        assert!(matches!(
            domain_markov_test(&dom, 1, 300, Comparator::SlitDomain, &Runner::new(3, 1).unwrap()),
            Err(Error::PrefixTooRare { .. })
        ));
    }
}
