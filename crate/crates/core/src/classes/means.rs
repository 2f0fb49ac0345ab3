//! Constants built from window means: `A_p`, reverse Hölder, `A^exp`,
//! Strömberg–Wheeden, `A^avg`, `A^log`, median and doubling.

use serde::{Deserialize, Serialize};

use super::{
    check_open_unit, fold_windows, Best, ClassConstantReport, ClassId, CurveKind,
    SortedWindow, WindowFamily,
};
use crate::dyadic::{compensated_sum, GMode, IntegerInterval, PrefixSums, Transform};
use crate::error::{Error, Result};

fn require_unweighted(ps: &PrefixSums, what: &'static str) -> Result<()> {
    match ps.mode() {
        GMode::Unweighted => Ok(()),
        GMode::Weighted => Err(Error::UnsupportedMode(what)),
    }
}

pub(crate) fn require(ps: &PrefixSums, transform: Transform) -> Result<()> {
    if ps.has(transform) {
        Ok(())
    } else {
        Err(Error::MissingTransform(transform.to_string()))
    }
}

fn check_exponent(name: &'static str, value: f64) -> Result<()> {
    if !(value > 1.0 && value.is_finite()) {
        return Err(Error::Parameter {
            name,
            value,
            expected: "a finite real > 1",
        });
    }
    Ok(())
}

/// Scalar sup over the family; `f` is evaluated once per window.
fn scan_scalar<F>(ps: &PrefixSums, family: &WindowFamily, f: F) -> Result<Best>
where
    F: Fn(IntegerInterval) -> f64 + Sync,
{
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), false, 1, |acc, w, _| {
        acc[0].offer(f(w), w, f64::NAN);
    });
    Ok(best.into_iter().next().unwrap_or(Best::EMPTY))
}

/// `avg(omega) * avg(omega^{-1/(p-1)})^{p-1}`; needs `Identity` and `ApDual(p)`.
pub fn ap_window(ps: &PrefixSums, window: IntegerInterval, p: f64) -> Result<f64> {
    if window.len == 1 {
        return Ok(1.0);
    }
    let dual = ps.weighted_average(window, Transform::ApDual(p))?;
    Ok(ps.average(window) * dual.powf(p - 1.0))
}

pub fn ap_constant(ps: &PrefixSums, family: &WindowFamily, p: f64) -> Result<ClassConstantReport> {
    check_exponent("p", p)?;
    require(ps, Transform::ApDual(p))?;
    let best = scan_scalar(ps, family, |w| ap_window(ps, w, p).unwrap_or(f64::NAN))?;
    Ok(ClassConstantReport::constant(ClassId::Ap, best).param("p", p))
}

/// `avg(omega^q)^{1/q} / avg(omega)`; needs `Power(q)`.
pub fn rh_window(ps: &PrefixSums, window: IntegerInterval, q: f64) -> Result<f64> {
    if window.len == 1 {
        return Ok(1.0);
    }
    let m = ps.weighted_average(window, Transform::Power(q))?;
    Ok(m.powf(1.0 / q) / ps.average(window))
}

pub fn rh_constant(ps: &PrefixSums, family: &WindowFamily, q: f64) -> Result<ClassConstantReport> {
    check_exponent("q", q)?;
    require(ps, Transform::Power(q))?;
    let best = scan_scalar(ps, family, |w| rh_window(ps, w, q).unwrap_or(f64::NAN))?;
    Ok(ClassConstantReport::constant(ClassId::Rh, best).param("q", q))
}

/// `exp(avg(log omega))`; needs `Log`.
pub fn geometric_mean(ps: &PrefixSums, window: IntegerInterval) -> Result<f64> {
    Ok(ps.weighted_average(window, Transform::Log)?.exp())
}

/// `avg(omega^s)^{1/s}`, evaluated as `exp(log1p(avg(omega^s - 1)) / s)` so the
/// result stays accurate as `s` approaches 0; needs `PowerExcess(s)`.
pub fn power_mean(ps: &PrefixSums, window: IntegerInterval, s: f64) -> Result<f64> {
    let excess = ps.weighted_average(window, Transform::PowerExcess(s))?;
    Ok((excess.ln_1p() / s).exp())
}

/// Arithmetic over geometric mean; needs `Log`.
pub fn exp_window(ps: &PrefixSums, window: IntegerInterval) -> Result<f64> {
    if window.len == 1 {
        return Ok(1.0);
    }
    Ok(ps.average(window) / geometric_mean(ps, window)?)
}

pub fn exp_constant(ps: &PrefixSums, family: &WindowFamily) -> Result<ClassConstantReport> {
    require_unweighted(ps, "exp")?;
    require(ps, Transform::Log)?;
    let best = scan_scalar(ps, family, |w| exp_window(ps, w).unwrap_or(f64::NAN))?;
    Ok(ClassConstantReport::constant(ClassId::Exp, best))
}

/// Arithmetic mean over the power mean of order `s`.
pub fn sw_window(ps: &PrefixSums, window: IntegerInterval, s: f64) -> Result<f64> {
    if window.len == 1 {
        return Ok(1.0);
    }
    Ok(ps.average(window) / power_mean(ps, window, s)?)
}

fn sorted_grid(name: &'static str, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::validation(name, "grid is empty"));
    }
    check_open_unit(name, grid)?;
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// Sup over windows and `s` in the grid; the curve holds the constant at each `s`.
pub fn sw_constant(ps: &PrefixSums, family: &WindowFamily, s_grid: &[f64]) -> Result<ClassConstantReport> {
    require_unweighted(ps, "sw")?;
    let grid = sorted_grid("s", s_grid)?;
    for &s in &grid {
        require(ps, Transform::PowerExcess(s))?;
    }
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), false, grid.len(), |acc, w, _| {
        for (slot, &s) in acc.iter_mut().zip(&grid) {
            slot.offer(sw_window(ps, w, s).unwrap_or(f64::NAN), w, s);
        }
    });
    let mut overall = Best::EMPTY;
    for b in &best {
        if let Some(w) = b.window {
            // Ties across s go to the smaller window, then the first s listed.
            if b.value > overall.value || (b.value == overall.value && Some(w) < overall.window) {
                overall = *b;
            }
        }
    }
    let mut report = ClassConstantReport::constant(ClassId::Sw, overall);
    if let Some(w) = report.witness.as_mut() {
        w.s = Some(overall.detail);
    }
    let profile = ClassConstantReport::curve(ClassId::Sw, CurveKind::SwProfile, &grid, &best);
    report.curve = profile.curve;
    Ok(report.param("s_grid", grid.as_slice()))
}

/// g-mass fraction of `{j : omega_j <= gamma * avg}` in one window.
pub fn delta_window(ps: &PrefixSums, window: IntegerInterval, gamma: f64) -> f64 {
    let sorted = SortedWindow::from_window(ps.omega(), ps.g(), window);
    delta_profile(&sorted, ps.average(window), &[gamma])[0]
}

fn delta_profile(sorted: &SortedWindow, avg: f64, gammas: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(sorted.len() + 1);
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    cum.push(0.0);
    for &g in &sorted.g {
        let s = hi + g;
        let bb = s - hi;
        lo += (hi - (s - bb)) + (g - bb);
        hi = s;
        cum.push(hi + lo);
    }
    let total = cum[sorted.len()];
    gammas
        .iter()
        .map(|&gamma| {
            let threshold = gamma * avg;
            let m = sorted.omega.partition_point(|&w| w <= threshold);
            cum[m] / total
        })
        .collect()
}

/// `delta(gamma)` for each gamma in the grid; the curve is nondecreasing.
pub fn avg_delta_curve(ps: &PrefixSums, family: &WindowFamily, gamma_grid: &[f64]) -> Result<ClassConstantReport> {
    let grid = sorted_grid("gamma", gamma_grid)?;
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), true, grid.len(), |acc, w, sorted| {
        let deltas = delta_profile(sorted, ps.average(w), &grid);
        for (slot, d) in acc.iter_mut().zip(deltas) {
            slot.offer(d, w, f64::NAN);
        }
    });
    Ok(ClassConstantReport::curve(ClassId::Avg, CurveKind::AvgDeltaCurve, &grid, &best)
        .param("gamma_grid", grid.as_slice()))
}

/// `delta(gamma)` at a single gamma, with its witness window.
pub fn delta_at(ps: &PrefixSums, family: &WindowFamily, gamma: f64) -> Result<ClassConstantReport> {
    check_open_unit("gamma", &[gamma])?;
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), true, 1, |acc, w, sorted| {
        acc[0].offer(delta_profile(sorted, ps.average(w), &[gamma])[0], w, f64::NAN);
    });
    Ok(ClassConstantReport::constant(ClassId::Avg, best[0]).param("gamma", gamma))
}

/// `(sum g)^{-1} sum r log+(r) g` with `r = omega / avg`.
pub fn log_window(ps: &PrefixSums, window: IntegerInterval) -> f64 {
    if window.len == 1 {
        return 0.0;
    }
    let avg = ps.average(window);
    let (omega, g) = (ps.omega(), ps.g());
    let num = compensated_sum(window.indices().filter_map(|i| {
        let r = omega[i] / avg;
        (r > 1.0).then(|| r * r.ln() * g[i])
    }));
    num / ps.g_sum(window)
}

pub fn log_constant(ps: &PrefixSums, family: &WindowFamily) -> Result<ClassConstantReport> {
    let best = scan_scalar(ps, family, |w| log_window(ps, w))?;
    Ok(ClassConstantReport::constant(ClassId::Log, best))
}

/// Lower median: the `ceil(k/2)`-th smallest value of the window.
pub fn median(omega: &[f64], window: IntegerInterval) -> f64 {
    let mut values = omega[window.start..window.end()].to_vec();
    values.sort_by(f64::total_cmp);
    values[window.len.div_ceil(2) - 1]
}

pub fn med_window(ps: &PrefixSums, window: IntegerInterval) -> f64 {
    if window.len == 1 {
        return 1.0;
    }
    ps.average(window) / median(ps.omega(), window)
}

pub fn med_constant(ps: &PrefixSums, family: &WindowFamily) -> Result<ClassConstantReport> {
    require_unweighted(ps, "med")?;
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), true, 1, |acc, w, sorted| {
        let value = if w.len == 1 {
            1.0
        } else {
            ps.average(w) / sorted.omega[w.len.div_ceil(2) - 1]
        };
        acc[0].offer(value, w, f64::NAN);
    });
    Ok(ClassConstantReport::constant(ClassId::Med, best[0]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightRole {
    G,
    Omega,
}

impl WeightRole {
    fn class(&self) -> ClassId {
        match self {
            WeightRole::G => ClassId::DoublingG,
            WeightRole::Omega => ClassId::DoublingOmega,
        }
    }
}

/// Largest ratio of the window mass to a child's mass, with that child.
pub fn doubling_window(ps: &PrefixSums, window: IntegerInterval, role: WeightRole) -> Result<(f64, IntegerInterval)> {
    let (left, right) = window.split()?;
    let mass = |i: IntegerInterval| match role {
        WeightRole::G => ps.g_sum(i),
        WeightRole::Omega => ps.omega_sum(i),
    };
    let total = mass(window);
    let (l, r) = (total / mass(left), total / mass(right));
    Ok(if r > l { (r, right) } else { (l, left) })
}

pub fn doubling_constant(ps: &PrefixSums, family: &WindowFamily, role: WeightRole) -> Result<ClassConstantReport> {
    family.validate(ps.len())?;
    if family.k_max < 2 {
        return Err(Error::validation("window family", "doubling needs windows of length at least 2"));
    }
    let best = fold_windows(family, ps.omega(), ps.g(), false, 1, |acc, w, _| {
        if w.len >= 2 {
            if let Ok((value, _)) = doubling_window(ps, w, role) {
                acc[0].offer(value, w, f64::NAN);
            }
        }
    });
    let mut report = ClassConstantReport::constant(role.class(), best[0]);
    if let Some(w) = report.witness.as_mut() {
        w.child = Some(doubling_window(ps, w.window, role)?.1);
    }
    Ok(report.param("role", match role {
        WeightRole::G => "g",
        WeightRole::Omega => "omega",
    }))
}
