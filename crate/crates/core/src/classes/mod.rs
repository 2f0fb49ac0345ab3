//! Best constants of the discrete `A_infinity`-type weight classes, taken as
//! suprema over a family of sample windows.
//!
//! Every estimator has a per-window evaluation (`*_window`) and a scan over a
//! [`WindowFamily`]. Scans run in parallel over window starts; the reduction
//! keeps the largest value and breaks ties by the smallest `(start, len)`, so
//! results do not depend on the thread count.

mod frontier;
mod lambda;
mod means;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::IntegerInterval;
use crate::error::{Error, Result};

pub use frontier::{
    am_curve, am_envelope, am_value, amhat_curve, amhat_envelope, amhat_value, cf_check,
    cf_constant, cf_feasibility_curve, frontier_curve, CfCheckReport, FrontierKind,
};
pub use lambda::{lambda_constant, lambda_window};
pub use means::{
    ap_constant, ap_window, avg_delta_curve, delta_at, delta_window, doubling_constant,
    doubling_window, exp_constant, exp_window, geometric_mean, log_constant, log_window,
    med_constant, med_window, median, power_mean, rh_constant, rh_window, sw_constant, sw_window,
    WeightRole,
};

/// Default `s` grid for the Strömberg–Wheeden class.
pub const DEFAULT_S_GRID: [f64; 5] = [0.5, 0.25, 0.1, 0.01, 1e-3];

/// Default `gamma` grid `{0.05 j : j = 1..19}`.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=19).map(|j| 0.05 * j as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    /// Every contiguous window `{j, ..., j+k-1}`.
    All,
    /// Only windows starting at 0.
    Anchored,
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(WindowMode::All),
            "anchored" => Ok(WindowMode::Anchored),
            other => Err(Error::validation("windows", format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowFamily {
    pub mode: WindowMode,
    pub k_min: usize,
    pub k_max: usize,
}

impl WindowFamily {
    /// All windows of a sample of length `n`.
    pub fn all(n: usize) -> Self {
        WindowFamily {
            mode: WindowMode::All,
            k_min: 1,
            k_max: n,
        }
    }

    pub fn anchored(n: usize) -> Self {
        WindowFamily {
            mode: WindowMode::Anchored,
            k_min: 1,
            k_max: n,
        }
    }

    pub fn new(mode: WindowMode, k_min: usize, k_max: usize) -> Self {
        WindowFamily { mode, k_min, k_max }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k_min < 1 || self.k_min > self.k_max || self.k_max > n {
            return Err(Error::validation(
                "window family",
                format!(
                    "need 1 <= kmin <= kmax <= N (kmin = {}, kmax = {}, N = {n})",
                    self.k_min, self.k_max
                ),
            ));
        }
        Ok(())
    }

    fn starts(&self, n: usize) -> usize {
        match self.mode {
            WindowMode::All => n.saturating_sub(self.k_min) + 1,
            WindowMode::Anchored => 1,
        }
    }

    /// Every window of the family, ordered by `(start, len)`.
    pub fn windows(&self, n: usize) -> Vec<IntegerInterval> {
        let mut out = Vec::new();
        for start in 0..self.starts(n) {
            for len in self.k_min..=self.k_max.min(n - start) {
                out.push(IntegerInterval { start, len });
            }
        }
        out
    }

    pub fn window_count(&self, n: usize) -> usize {
        (0..self.starts(n))
            .map(|start| (self.k_max.min(n - start) + 1).saturating_sub(self.k_min))
            .sum()
    }
}

/// Window values sorted ascending by omega, kept alongside their `g`.
#[derive(Clone, Debug, Default)]
pub(crate) struct SortedWindow {
    pub omega: Vec<f64>,
    pub g: Vec<f64>,
}

impl SortedWindow {
    fn insert(&mut self, omega: f64, g: f64) {
        let at = self.omega.partition_point(|&w| w <= omega);
        self.omega.insert(at, omega);
        self.g.insert(at, g);
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn from_window(omega: &[f64], g: &[f64], window: IntegerInterval) -> Self {
        let mut s = SortedWindow::default();
        for i in window.indices() {
            s.insert(omega[i], g[i]);
        }
        s
    }
}

/// Running maximum with deterministic tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Best {
    pub value: f64,
    pub window: Option<IntegerInterval>,
    pub detail: f64,
}

impl Best {
    pub const EMPTY: Best = Best {
        value: f64::NEG_INFINITY,
        window: None,
        detail: f64::NAN,
    };

    #[inline]
    pub fn offer(&mut self, value: f64, window: IntegerInterval, detail: f64) {
        let better = match self.window {
            None => true,
            Some(w) => value > self.value || (value == self.value && window < w),
        };
        if better {
            *self = Best {
                value,
                window: Some(window),
                detail,
            };
        }
    }

    pub fn merge(mut self, other: Best) -> Best {
        if let Some(w) = other.window {
            self.offer(other.value, w, other.detail);
        }
        self
    }
}

fn merge_vec(a: Vec<Best>, b: Vec<Best>) -> Vec<Best> {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()
}

/// Parallel fold over the windows of `family`. `visit` receives each window,
/// plus the sorted window contents when `sorted` is set.
pub(crate) fn fold_windows<F>(
    family: &WindowFamily,
    omega: &[f64],
    g: &[f64],
    sorted: bool,
    slots: usize,
    visit: F,
) -> Vec<Best>
where
    F: Fn(&mut [Best], IntegerInterval, &SortedWindow) + Sync,
{
    let n = omega.len();
    (0..family.starts(n))
        .into_par_iter()
        .fold(
            || vec![Best::EMPTY; slots],
            |mut acc, start| {
                let mut window = SortedWindow::default();
                let max_len = family.k_max.min(n - start);
                for len in 1..=max_len {
                    let i = start + len - 1;
                    if sorted {
                        window.insert(omega[i], g[i]);
                    }
                    if len >= family.k_min {
                        visit(&mut acc, IntegerInterval { start, len }, &window);
                    }
                }
                acc
            },
        )
        .reduce(Vec::new, merge_vec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassId {
    Ap,
    Rh,
    Exp,
    Sw,
    Avg,
    Lambda,
    Cf,
    Am,
    Amhat,
    Log,
    Med,
    DoublingG,
    DoublingOmega,
}

impl ClassId {
    /// Parses `all` or a comma separated list of class names.
    pub fn parse_list(list: &str) -> Result<Vec<ClassId>> {
        if list.trim() == "all" {
            return Ok(ClassId::ALL.to_vec());
        }
        list.split(',').map(|c| c.trim().parse()).collect()
    }

    pub const ALL: [ClassId; 13] = [
        ClassId::Ap,
        ClassId::Rh,
        ClassId::Exp,
        ClassId::Sw,
        ClassId::Avg,
        ClassId::Lambda,
        ClassId::Cf,
        ClassId::Am,
        ClassId::Amhat,
        ClassId::Log,
        ClassId::Med,
        ClassId::DoublingG,
        ClassId::DoublingOmega,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassId::Ap => "ap",
            ClassId::Rh => "rh",
            ClassId::Exp => "exp",
            ClassId::Sw => "sw",
            ClassId::Avg => "avg",
            ClassId::Lambda => "lambda",
            ClassId::Cf => "cf",
            ClassId::Am => "am",
            ClassId::Amhat => "amhat",
            ClassId::Log => "log",
            ClassId::Med => "med",
            ClassId::DoublingG => "doubling_g",
            ClassId::DoublingOmega => "doubling_omega",
        }
    }

    /// Analytic lower bound of the constant, where the class has one.
    pub fn floor(&self) -> Option<f64> {
        match self {
            ClassId::Ap
            | ClassId::Rh
            | ClassId::Exp
            | ClassId::Sw
            | ClassId::Med
            | ClassId::Cf
            | ClassId::DoublingG
            | ClassId::DoublingOmega => Some(1.0),
            ClassId::Log | ClassId::Lambda => Some(0.0),
            ClassId::Avg | ClassId::Am | ClassId::Amhat => None,
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::validation("classes", format!("unknown class {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    List(Vec<f64>),
    Text(String),
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Num(v)
    }
}

impl From<&[f64]> for ParamValue {
    fn from(v: &[f64]) -> Self {
        ParamValue::List(v.to_vec())
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    CfFrontier,
    AmCurve,
    AmhatCurve,
    AvgDeltaCurve,
    /// `(eps, smallest feasible C)` pairs of the Coifman–Fefferman condition.
    CfFeasibility,
    /// `(s, constant at s)` of the Strömberg–Wheeden condition.
    SwProfile,
}

impl CurveKind {
    pub fn labels(&self) -> (&'static str, &'static str) {
        match self {
            CurveKind::CfFrontier => ("t", "v"),
            CurveKind::AmCurve => ("alpha", "beta"),
            CurveKind::AmhatCurve => ("alpha_hat", "beta_hat"),
            CurveKind::AvgDeltaCurve => ("gamma", "delta"),
            CurveKind::CfFeasibility => ("eps", "c"),
            CurveKind::SwProfile => ("s", "constant"),
        }
    }

    fn is_mass_curve(&self) -> bool {
        matches!(
            self,
            CurveKind::CfFrontier | CurveKind::AmCurve | CurveKind::AmhatCurve | CurveKind::AvgDeltaCurve
        )
    }
}

/// Breakpoint list `(t, v)` of an envelope or a parameterized constant curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<[f64; 2]>,
    /// Window attaining each point, for curves that are suprema over windows.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<IntegerInterval>,
}

pub type FrontierCurve = Curve;

impl Curve {
    pub fn new(kind: CurveKind, points: Vec<[f64; 2]>) -> Self {
        Curve {
            kind,
            points,
            witnesses: Vec::new(),
        }
    }

    /// Linear interpolation through the implicit origin, clamped at the ends.
    pub fn value_at(&self, t: f64) -> f64 {
        let mut prev = [0.0, 0.0];
        for p in &self.points {
            if t <= p[0] {
                let span = p[0] - prev[0];
                if span <= 0.0 {
                    return p[1];
                }
                return prev[1] + (t - prev[0]) / span * (p[1] - prev[1]);
            }
            prev = *p;
        }
        prev[1]
    }

    /// Checks abscissae strictly increase and, for mass curves, that ordinates
    /// are nondecreasing and lie in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::validation(format!("{:?} curve", self.kind), reason);
        for w in self.points.windows(2) {
            if !(w[1][0] > w[0][0]) {
                return Err(bad(format!("abscissae {} and {} not increasing", w[0][0], w[1][0])));
            }
            if self.kind.is_mass_curve() && w[1][1] < w[0][1] {
                return Err(bad(format!("ordinate decreases at t = {}", w[1][0])));
            }
        }
        if self.kind.is_mass_curve() {
            if let Some(p) = self.points.iter().find(|p| !(0.0..=1.0).contains(&p[1])) {
                return Err(bad(format!("ordinate {} outside [0, 1]", p[1])));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub window: IntegerInterval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoint: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<IntegerInterval>,
}

impl Witness {
    pub fn window(window: IntegerInterval) -> Self {
        Witness {
            window,
            lambda: None,
            s: None,
            breakpoint: None,
            child: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassConstantReport {
    pub class: ClassId,
    pub params: BTreeMap<String, ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Curve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub finite: bool,
}

impl ClassConstantReport {
    pub(crate) fn constant(class: ClassId, best: Best) -> Self {
        let value = best.window.map(|_| best.value);
        ClassConstantReport {
            class,
            params: BTreeMap::new(),
            value,
            curve: None,
            witness: best.window.map(Witness::window),
            finite: value.is_some_and(f64::is_finite),
        }
    }

    pub(crate) fn curve(class: ClassId, kind: CurveKind, grid: &[f64], best: &[Best]) -> Self {
        let points: Vec<[f64; 2]> = grid
            .iter()
            .zip(best)
            .map(|(&x, b)| [x, if b.window.is_some() { b.value } else { 0.0 }])
            .collect();
        let finite = points.iter().all(|p| p[1].is_finite());
        ClassConstantReport {
            class,
            params: BTreeMap::new(),
            value: None,
            curve: Some(Curve {
                kind,
                points,
                witnesses: best.iter().filter_map(|b| b.window).collect(),
            }),
            witness: None,
            finite,
        }
    }

    pub(crate) fn param(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    /// The scalar constant; curves report their largest ordinate.
    pub fn value_or_max(&self) -> f64 {
        match (&self.value, &self.curve) {
            (Some(v), _) => *v,
            (None, Some(c)) => c.points.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            _ => f64::NAN,
        }
    }
}

pub(crate) fn check_open_unit(name: &'static str, values: &[f64]) -> Result<()> {
    for &v in values {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Parameter {
                name,
                value: v,
                expected: "in (0, 1)",
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_family_enumeration() {
        let fam = WindowFamily::all(4);
        assert_eq!(fam.windows(4).len(), 10);
        assert_eq!(fam.window_count(4), 10);
        let fam = WindowFamily::new(WindowMode::All, 2, 3);
        let w = fam.windows(4);
        assert_eq!(w.len(), 5);
        assert!(w.iter().all(|i| (2..=3).contains(&i.len) && i.end() <= 4));
        assert_eq!(fam.window_count(4), 5);
        let fam = WindowFamily::anchored(4);
        assert_eq!(fam.windows(4).iter().map(|w| w.len).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert!(WindowFamily::new(WindowMode::All, 1, 5).validate(4).is_err());
        assert!(WindowFamily::new(WindowMode::All, 0, 2).validate(4).is_err());
    }

    #[test]
    fn best_breaks_ties_by_window() {
        let mut b = Best::EMPTY;
        b.offer(2.0, IntegerInterval { start: 3, len: 1 }, 0.0);
        b.offer(2.0, IntegerInterval { start: 1, len: 4 }, 0.0);
        b.offer(1.0, IntegerInterval { start: 0, len: 1 }, 0.0);
        assert_eq!(b.window, Some(IntegerInterval { start: 1, len: 4 }));
        let mut c = Best::EMPTY;
        c.offer(2.0, IntegerInterval { start: 1, len: 2 }, 0.0);
        assert_eq!(b.merge(c).window, c.merge(b).window);
    }

    #[test]
    fn curve_interpolation() {
        let c = Curve::new(CurveKind::CfFrontier, vec![[0.5, 0.8], [1.0, 1.0]]);
        assert_eq!(c.value_at(0.25), 0.4);
        assert!((c.value_at(0.75) - 0.9).abs() < 1e-15);
        assert_eq!(c.value_at(1.0), 1.0);
        c.validate().unwrap();
        let bad = Curve::new(CurveKind::AmCurve, vec![[0.5, 0.8], [0.5, 1.0]]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn class_names_round_trip() {
        for c in ClassId::ALL {
            assert_eq!(c.name().parse::<ClassId>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
    }
}
