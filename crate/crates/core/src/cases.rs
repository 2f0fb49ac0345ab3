//! Seeded random samples and the oracle cross-checks run on them.
//!
//! Every case draws from its own ChaCha stream keyed by `(seed, case)`, so a
//! batch gives the same cases whether it is run serially or in parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::classes::FrontierKind;
use crate::dyadic::{GMode, IntegerInterval, PrefixSums, Transform};
use crate::error::{Error, Result};
use crate::oracle::{self, OracleTarget, MAX_ORACLE_LEN};
use crate::orbit::OrbitSample;

pub const FRONTIER_RTOL: f64 = 1e-9;
pub const LAMBDA_RTOL: f64 = 1e-6;

pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

/// Log-normal `omega` (sigma 1). With `weighted`, `g` is log-normal with sigma
/// 0.5, otherwise `g = 1`.
pub fn random_sample<R: Rng>(rng: &mut R, n: usize, weighted: bool) -> Result<OrbitSample> {
    let omega_dist = LogNormal::new(0.0, 1.0).expect("valid log-normal");
    let g_dist = LogNormal::new(0.0, 0.5).expect("valid log-normal");
    let omega: Vec<f64> = (0..n).map(|_| omega_dist.sample(rng)).collect();
    if weighted {
        let g = (0..n).map(|_| g_dist.sample(rng)).collect();
        OrbitSample::new(omega, g)
    } else {
        OrbitSample::unweighted(omega)
    }
}

/// Uniform window of length `1..=min(k_max, n)`.
pub fn random_window<R: Rng>(rng: &mut R, n: usize, k_max: usize) -> IntegerInterval {
    let len = rng.random_range(1..=k_max.min(n).max(1));
    let start = rng.random_range(0..=n - len);
    IntegerInterval { start, len }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub target: OracleTarget,
    pub window: IntegerInterval,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares every estimator against exhaustive enumeration on one window.
pub fn oracle_checks(sample: &OrbitSample, window: IntegerInterval, beta: f64) -> Result<Vec<OracleCheck>> {
    if window.len > MAX_ORACLE_LEN {
        return Err(Error::Size {
            len: window.len,
            max: MAX_ORACLE_LEN,
        });
    }
    let ps = PrefixSums::build(sample, &[Transform::Identity], GMode::Weighted)?;
    let mut out = Vec::with_capacity(4);
    for (target, kind) in [
        (OracleTarget::Cf, FrontierKind::Cf),
        (OracleTarget::Am, FrontierKind::Am),
        (OracleTarget::Amhat, FrontierKind::Amhat),
    ] {
        let d = oracle::frontier_discrepancy(&ps, window, kind)?;
        out.push(OracleCheck {
            target,
            window,
            discrepancy: d,
            tolerance: FRONTIER_RTOL,
            passed: d <= FRONTIER_RTOL,
        });
    }
    let d = oracle::lambda_discrepancy(&ps, window, beta)?;
    out.push(OracleCheck {
        target: OracleTarget::Lambda,
        window,
        discrepancy: d,
        tolerance: LAMBDA_RTOL,
        passed: d <= LAMBDA_RTOL,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_of_order() {
        let a = random_sample(&mut case_rng(7, 3), 5, true).unwrap();
        let _ = random_sample(&mut case_rng(7, 2), 5, true).unwrap();
        let b = random_sample(&mut case_rng(7, 3), 5, true).unwrap();
        assert_eq!(a.omega(), b.omega());
        assert_eq!(a.g(), b.g());
        let c = random_sample(&mut case_rng(7, 4), 5, true).unwrap();
        assert_ne!(a.omega(), c.omega());
    }

    #[test]
    fn windows_fit() {
        let mut rng = case_rng(1, 0);
        for _ in 0..200 {
            let w = random_window(&mut rng, 20, 14);
            assert!(w.len >= 1 && w.len <= 14 && w.end() <= 20);
        }
    }

    #[test]
    fn oracle_checks_pass_on_a_small_case() {
        let s = random_sample(&mut case_rng(5, 0), 8, true).unwrap();
        let checks = oracle_checks(&s, IntegerInterval { start: 0, len: 8 }, 0.5).unwrap();
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }
}
