//! Independent brute-force references for the frontier and level-set
//! estimators, and the duality identity between `Â^M` and `A^M(omega)`.

use serde::{Deserialize, Serialize};

use crate::classes::{self, FrontierKind, WindowFamily};
use crate::dyadic::{compensated_sum, GMode, IntegerInterval, PrefixSums, Transform};
use crate::error::{Error, Result};
use crate::orbit::OrbitSample;

/// Largest window the exhaustive oracles accept (16384 subsets).
pub const MAX_ORACLE_LEN: usize = 14;

/// Points of the geometric lambda grid.
pub const LAMBDA_GRID_POINTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleTarget {
    Cf,
    Am,
    Amhat,
    Lambda,
}

impl std::str::FromStr for OracleTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cf" => Ok(OracleTarget::Cf),
            "am" => Ok(OracleTarget::Am),
            "amhat" => Ok(OracleTarget::Amhat),
            "lambda" => Ok(OracleTarget::Lambda),
            other => Err(Error::validation("target", format!("unknown oracle target {other:?}"))),
        }
    }
}

/// Upper staircase of all subset points `(t_A, v_A)` of a window, sorted by `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetFrontier {
    pub target: OracleTarget,
    pub window: IntegerInterval,
    /// Pareto-maximal subset points: `t` and `v` strictly increasing.
    pub staircase: Vec<[f64; 2]>,
    pub subsets: usize,
}

impl SubsetFrontier {
    /// Largest `v` over subsets whose `t` does not exceed `t` (up to `rtol`).
    pub fn max_v_within(&self, t: f64, rtol: f64) -> f64 {
        let limit = t * (1.0 + rtol);
        self.staircase
            .iter()
            .take_while(|p| p[0] <= limit)
            .last()
            .map_or(0.0, |p| p[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaOracle {
    pub window: IntegerInterval,
    pub beta: f64,
    pub value: f64,
    pub lambda: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleResult {
    Frontier(SubsetFrontier),
    Lambda(LambdaOracle),
}

fn check_window(ps: &PrefixSums, window: IntegerInterval) -> Result<()> {
    window.check_bounds(ps.len())?;
    if window.len > MAX_ORACLE_LEN {
        return Err(Error::Size {
            len: window.len,
            max: MAX_ORACLE_LEN,
        });
    }
    Ok(())
}

/// Enumerates all `2^k` subsets of the window.
pub fn subset_frontier(ps: &PrefixSums, window: IntegerInterval, kind: FrontierKind) -> Result<SubsetFrontier> {
    check_window(ps, window)?;
    let k = window.len;
    let omega = &ps.omega()[window.start..window.end()];
    let g = &ps.g()[window.start..window.end()];
    let g_total = compensated_sum(g.iter().copied());
    let w_total = compensated_sum(omega.iter().zip(g).map(|(w, g)| w * g));
    let mut points = Vec::with_capacity(1 << k);
    for mask in 0u32..(1u32 << k) {
        let members = || (0..k).filter(move |i| mask >> i & 1 == 1);
        let gm = compensated_sum(members().map(|i| g[i])) / g_total;
        let wm = compensated_sum(members().map(|i| omega[i] * g[i])) / w_total;
        points.push(match kind {
            FrontierKind::Cf | FrontierKind::Am => [gm, wm],
            FrontierKind::Amhat => [wm, gm],
        });
    }
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(b[1].total_cmp(&a[1])));
    let mut staircase: Vec<[f64; 2]> = Vec::new();
    for p in &points {
        if p[0] == 0.0 {
            continue;
        }
        if staircase.last().is_none_or(|last| p[1] > last[1]) {
            if staircase.last().is_some_and(|last| last[0] == p[0]) {
                staircase.pop();
            }
            staircase.push(*p);
        }
    }
    let target = match kind {
        FrontierKind::Cf => OracleTarget::Cf,
        FrontierKind::Am => OracleTarget::Am,
        FrontierKind::Amhat => OracleTarget::Amhat,
    };
    Ok(SubsetFrontier {
        target,
        window,
        staircase,
        subsets: points.len(),
    })
}

/// Right limit of the level-set ratio at `lambda`, by direct counting.
fn lambda_ratio(omega: &[f64], g: &[f64], lambda: f64, beta: f64) -> f64 {
    let n = compensated_sum(omega.iter().zip(g).filter(|(w, _)| **w > lambda).map(|(w, g)| w * g));
    let d = compensated_sum(omega.iter().zip(g).filter(|(w, _)| **w > beta * lambda).map(|(_, g)| *g));
    if d == 0.0 {
        0.0
    } else {
        n / (lambda * d)
    }
}

fn signature(omega: &[f64], lambda: f64, beta: f64) -> (usize, usize) {
    (
        omega.iter().filter(|&&w| w > lambda).count(),
        omega.iter().filter(|&&w| w > beta * lambda).count(),
    )
}

/// Scans a geometric grid of lambda values over `(avg, 2 max]`. Grid cells
/// where a level set changes are bisected down to a relative width of 1e-15
/// and evaluated at their right end, so jump points are resolved as well.
pub fn lambda_oracle(ps: &PrefixSums, window: IntegerInterval, beta: f64) -> Result<LambdaOracle> {
    check_window(ps, window)?;
    classes::lambda_window(ps, window, beta)?;
    let omega = &ps.omega()[window.start..window.end()];
    let g = &ps.g()[window.start..window.end()];
    let avg = ps.average(window);
    let top = 2.0 * omega.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best = (0.0f64, avg);
    let mut evaluations = 0usize;
    let mut eval = |lambda: f64, best: &mut (f64, f64)| {
        evaluations += 1;
        let r = lambda_ratio(omega, g, lambda, beta);
        if r > best.0 {
            *best = (r, lambda);
        }
    };
    if !(top > avg) {
        return Ok(LambdaOracle { window, beta, value: 0.0, lambda: avg, evaluations: 0 });
    }
    let start = avg * (1.0 + 1e-15);
    let ratio = (top / start).powf(1.0 / (LAMBDA_GRID_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..LAMBDA_GRID_POINTS).map(|i| start * ratio.powi(i as i32)).collect();
    eval(start, &mut best);
    let mut stack = Vec::new();
    for pair in grid.windows(2) {
        eval(pair[1], &mut best);
        if signature(omega, pair[0], beta) != signature(omega, pair[1], beta) {
            stack.push((pair[0], pair[1]));
        }
    }
    while let Some((lo, hi)) = stack.pop() {
        if hi - lo <= 1e-15 * hi {
            eval(hi, &mut best);
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let s_mid = signature(omega, mid, beta);
        if signature(omega, lo, beta) != s_mid {
            stack.push((lo, mid));
        }
        if s_mid != signature(omega, hi, beta) {
            stack.push((mid, hi));
        }
        eval(mid, &mut best);
    }
    Ok(LambdaOracle {
        window,
        beta,
        value: best.0,
        lambda: best.1,
        evaluations,
    })
}

pub fn brute_force_oracle(ps: &PrefixSums, window: IntegerInterval, target: OracleTarget, beta: f64) -> Result<OracleResult> {
    Ok(match target {
        OracleTarget::Cf => OracleResult::Frontier(subset_frontier(ps, window, FrontierKind::Cf)?),
        OracleTarget::Am => OracleResult::Frontier(subset_frontier(ps, window, FrontierKind::Am)?),
        OracleTarget::Amhat => OracleResult::Frontier(subset_frontier(ps, window, FrontierKind::Amhat)?),
        OracleTarget::Lambda => OracleResult::Lambda(lambda_oracle(ps, window, beta)?),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualityOutcome {
    /// `Â^M(alpha, beta)` for `omega` with `g = 1`, on every window.
    pub p1: bool,
    /// `A^M(alpha, beta)` for `omega^{-1}` with `g = omega`, on every window.
    pub p2: bool,
    /// First window where the two predicates disagree window by window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disagreement: Option<IntegerInterval>,
}

impl DualityOutcome {
    pub fn agree(&self) -> bool {
        self.p1 == self.p2 && self.disagreement.is_none()
    }
}

/// Evaluates both sides of `omega in Â^M  <=>  omega^{-1} in A^M(omega)` on
/// every window of the sample.
pub fn duality_check(sample: &OrbitSample, alpha: f64, beta: f64) -> Result<DualityOutcome> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Parameter { name, value: v, expected: "in (0, 1)" });
        }
    }
    let unit = PrefixSums::build(&sample.with_unit_g(), &[Transform::Identity], GMode::Unweighted)?;
    let dual = PrefixSums::build(&sample.dual(), &[Transform::Identity], GMode::Weighted)?;
    let family = WindowFamily::all(sample.len());
    let (mut p1, mut p2, mut disagreement) = (true, true, None);
    for w in family.windows(sample.len()) {
        let a = classes::amhat_envelope(&unit, w, alpha) <= beta;
        let b = classes::am_envelope(&dual, w, alpha) <= beta;
        p1 &= a;
        p2 &= b;
        if a != b && disagreement.is_none() {
            disagreement = Some(w);
        }
    }
    Ok(DualityOutcome { p1, p2, disagreement })
}

/// Largest relative disagreement between the estimator's frontier and the
/// exhaustive one: breakpoint ordinates versus the best subset within the same
/// budget, plus any subset point lying above the envelope.
pub fn frontier_discrepancy(ps: &PrefixSums, window: IntegerInterval, kind: FrontierKind) -> Result<f64> {
    let exact = subset_frontier(ps, window, kind)?;
    let estimate = classes::frontier_curve(ps, kind, window)?;
    let mut worst = 0.0f64;
    for p in &estimate.points {
        let v = exact.max_v_within(p[0], 1e-12);
        worst = worst.max((p[1] - v).abs() / v.max(f64::MIN_POSITIVE));
    }
    for p in &exact.staircase {
        let env = estimate.value_at(p[0]);
        worst = worst.max((p[1] - env).max(0.0) / p[1]);
    }
    Ok(worst)
}

/// Relative disagreement between the critical-set estimator and the grid oracle.
pub fn lambda_discrepancy(ps: &PrefixSums, window: IntegerInterval, beta: f64) -> Result<f64> {
    let (estimate, _) = classes::lambda_window(ps, window, beta)?;
    let exact = lambda_oracle(ps, window, beta)?.value;
    if estimate == exact {
        return Ok(0.0);
    }
    Ok((estimate - exact).abs() / exact.abs().max(estimate.abs()))
}
