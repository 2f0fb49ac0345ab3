//! Weighted Calderón–Zygmund decomposition on the dyadic grid of a window.
//!
//! Starting from a window whose `g`-average of omega is below `lambda`, the
//! window is split with [`IntegerInterval::split`]. A child whose average
//! exceeds `lambda` is selected; otherwise it is split again, and singletons
//! at or below `lambda` become residual points. The selected family is the
//! set of maximal grid intervals with average `> lambda`, and for each of them
//!
//! ```text
//! lambda < T^g_I omega <= C(I) * lambda,   C(I) = sum_{parent(I)} g / sum_I g,
//! ```
//!
//! while every residual point satisfies `omega_j <= lambda`.

use serde::Serialize;

use crate::dyadic::{compensated_sum, IntegerInterval, PrefixSums};
use crate::error::{Error, Result};

/// Relative tolerance for comparisons between two summation routes.
pub const VERIFY_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectedInterval {
    pub interval: IntegerInterval,
    #[serde(rename = "avg")]
    pub average: f64,
    pub expansion: f64,
    #[serde(skip)]
    pub parent: IntegerInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzSelection {
    pub lambda: f64,
    pub window: IntegerInterval,
    pub selected: Vec<SelectedInterval>,
    pub residual: Vec<usize>,
}

impl CzSelection {
    pub fn to_json_bytes(&self) -> Vec<u8> {
        crate::canonical::to_json_bytes(self)
    }
}

pub fn decompose(ps: &PrefixSums, window: IntegerInterval, lambda: f64) -> Result<CzSelection> {
    window.check_bounds(ps.len())?;
    if window.len < 2 {
        return Err(Error::Threshold(format!(
            "window {window} has length {}; at least 2 is required",
            window.len
        )));
    }
    let root_avg = ps.average(window);
    if !(lambda.is_finite() && lambda > root_avg) {
        return Err(Error::Threshold(format!(
            "lambda = {lambda} must exceed the window average {root_avg}"
        )));
    }

    let mut selected = Vec::new();
    let mut residual = Vec::new();
    // Explicit stack, right child pushed first so the left subtree is visited first.
    let mut stack = vec![window];
    while let Some(parent) = stack.pop() {
        let (left, right) = parent.split()?;
        let parent_g = ps.g_sum(parent);
        let mut recurse = Vec::with_capacity(2);
        for child in [left, right] {
            let avg = ps.average(child);
            if avg > lambda {
                selected.push(SelectedInterval {
                    interval: child,
                    average: avg,
                    expansion: parent_g / ps.g_sum(child),
                    parent,
                });
            } else if child.len >= 2 {
                recurse.push(child);
            } else {
                residual.push(child.start);
            }
        }
        stack.extend(recurse.into_iter().rev());
    }
    selected.sort_by_key(|s| s.interval.start);
    residual.sort_unstable();
    Ok(CzSelection {
        lambda,
        window,
        selected,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCheck {
    DisjointContained,
    ResidualComplement,
    AverageBounds,
    ResidualBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: SelectionCheck,
    pub passed: bool,
    /// First counterexample, when the check failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn outcome(&self, check: SelectionCheck) -> &CheckOutcome {
        self.checks
            .iter()
            .find(|c| c.check == check)
            .expect("every check is always reported")
    }
}

/// Re-checks a selection by direct summation over `omega` and `g`.
pub fn verify_selection(ps: &PrefixSums, sel: &CzSelection) -> VerificationReport {
    let omega = ps.omega();
    let g = ps.g();
    let window = sel.window;
    let lambda = sel.lambda;
    let direct_avg = |i: IntegerInterval| {
        if i.len == 1 {
            return omega[i.start];
        }
        compensated_sum(i.indices().map(|j| omega[j] * g[j]))
            / compensated_sum(i.indices().map(|j| g[j]))
    };
    let in_bounds = window.end() <= omega.len();

    let mut disjoint = None;
    let mut covered = vec![false; if in_bounds { window.len } else { 0 }];
    for s in &sel.selected {
        if !window.contains_interval(&s.interval) || !in_bounds {
            disjoint = Some(format!("interval {} lies outside window {window}", s.interval));
            break;
        }
        if let Some(j) = s.interval.indices().find(|&j| covered[j - window.start]) {
            disjoint = Some(format!("index {j} is covered twice (interval {})", s.interval));
            break;
        }
        for j in s.interval.indices() {
            covered[j - window.start] = true;
        }
    }

    let mut complement = None;
    if disjoint.is_none() {
        let expected: Vec<usize> = window.indices().filter(|j| !covered[j - window.start]).collect();
        if expected != sel.residual {
            let j = expected
                .iter()
                .zip(&sel.residual)
                .find(|(a, b)| a != b)
                .map(|(a, _)| *a)
                .or_else(|| expected.get(sel.residual.len()).copied())
                .or_else(|| sel.residual.get(expected.len()).copied())
                .unwrap_or(window.start);
            complement = Some(format!("residual set differs from the uncovered indices at {j}"));
        }
    } else {
        complement = Some("not checked: selected intervals are not a disjoint family".into());
    }

    let mut bounds = None;
    if in_bounds {
        for s in &sel.selected {
            if !window.contains_interval(&s.interval) {
                continue;
            }
            let avg = direct_avg(s.interval);
            let parent_g = compensated_sum(s.parent.indices().map(|j| g[j]));
            let child_g = compensated_sum(s.interval.indices().map(|j| g[j]));
            let expansion = parent_g / child_g;
            if !(avg > lambda * (1.0 - VERIFY_RTOL)) {
                bounds = Some(format!(
                    "interval {}: average {avg} is not above lambda {lambda}",
                    s.interval
                ));
                break;
            }
            if !(avg <= expansion * lambda * (1.0 + VERIFY_RTOL))
                || (expansion - s.expansion).abs() > VERIFY_RTOL * expansion
            {
                bounds = Some(format!(
                    "interval {}: average {avg} exceeds expansion {expansion} times lambda",
                    s.interval
                ));
                break;
            }
        }
    }

    let residual_bound = sel
        .residual
        .iter()
        .find(|&&j| j >= omega.len() || omega[j] > lambda)
        .map(|j| format!("residual index {j} has omega above lambda {lambda}"));

    let outcome = |check, counterexample: Option<String>| CheckOutcome {
        check,
        passed: counterexample.is_none(),
        counterexample,
    };
    VerificationReport {
        checks: vec![
            outcome(SelectionCheck::DisjointContained, disjoint),
            outcome(SelectionCheck::ResidualComplement, complement),
            outcome(SelectionCheck::AverageBounds, bounds),
            outcome(SelectionCheck::ResidualBound, residual_bound),
        ],
    }
}
