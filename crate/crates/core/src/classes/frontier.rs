//! Subset-mass frontiers behind the Coifman–Fefferman and `A^M`-type classes.
//!
//! Maximizing `sum_A omega g` under a budget on `sum_A g` is a fractional
//! knapsack whose value-to-weight ratio is `omega`, so the upper envelope of
//! all subset points is the chord through the sorted prefixes. At each
//! breakpoint the envelope is attained by an actual subset.

use serde::{Deserialize, Serialize};

use super::{
    check_open_unit, fold_windows, Best, ClassConstantReport, ClassId, Curve, CurveKind,
    SortedWindow, WindowFamily, Witness,
};
use crate::dyadic::{IntegerInterval, PrefixSums};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontierKind {
    /// Largest `omega g`-mass fraction for a given `g`-mass fraction.
    Cf,
    /// Same envelope as `Cf`, read as the `A^M` constraint.
    Am,
    /// Largest `g`-mass fraction for a given `omega g`-mass fraction.
    Amhat,
}

impl FrontierKind {
    fn curve_kind(&self) -> CurveKind {
        match self {
            FrontierKind::Cf => CurveKind::CfFrontier,
            FrontierKind::Am => CurveKind::AmCurve,
            FrontierKind::Amhat => CurveKind::AmhatCurve,
        }
    }
}

/// Compensated running sums of `values`, starting at 0.
fn running(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    let mut out = vec![0.0];
    for x in values {
        let s = hi + x;
        let bb = s - hi;
        lo += (hi - (s - bb)) + (x - bb);
        hi = s;
        out.push(hi + lo);
    }
    out
}

pub(crate) fn breakpoints(sorted: &SortedWindow, kind: FrontierKind) -> Vec<[f64; 2]> {
    let k = sorted.len();
    let pairs = (0..k).map(|i| (sorted.omega[i], sorted.g[i]));
    let (abscissa, ordinate) = match kind {
        FrontierKind::Cf | FrontierKind::Am => {
            let desc: Vec<(f64, f64)> = pairs.rev().collect();
            (
                running(desc.iter().map(|&(_, g)| g)),
                running(desc.iter().map(|&(w, g)| w * g)),
            )
        }
        FrontierKind::Amhat => {
            let asc: Vec<(f64, f64)> = pairs.collect();
            (
                running(asc.iter().map(|&(w, g)| w * g)),
                running(asc.iter().map(|&(_, g)| g)),
            )
        }
    };
    let (tx, ty) = (abscissa[k], ordinate[k]);
    (1..=k).map(|m| [abscissa[m] / tx, ordinate[m] / ty]).collect()
}

/// Breakpoints of one window's envelope. The origin is implicit and the last
/// breakpoint is `(1, 1)`.
pub fn frontier_curve(ps: &PrefixSums, kind: FrontierKind, window: IntegerInterval) -> Result<Curve> {
    window.check_bounds(ps.len())?;
    let sorted = SortedWindow::from_window(ps.omega(), ps.g(), window);
    Ok(Curve::new(kind.curve_kind(), breakpoints(&sorted, kind)))
}

fn envelope_at(points: &[[f64; 2]], t: f64) -> f64 {
    let mut prev = [0.0, 0.0];
    for p in points {
        if t <= p[0] {
            return prev[1] + (t - prev[0]) / (p[0] - prev[0]) * (p[1] - prev[1]);
        }
        prev = *p;
    }
    1.0
}

/// Largest `omega g`-mass fraction of a fractional subset with `g`-mass at most `alpha`.
pub fn am_envelope(ps: &PrefixSums, window: IntegerInterval, alpha: f64) -> f64 {
    let sorted = SortedWindow::from_window(ps.omega(), ps.g(), window);
    envelope_at(&breakpoints(&sorted, FrontierKind::Am), alpha)
}

/// Largest `g`-mass fraction of a fractional subset with `omega g`-mass at most `alpha`.
pub fn amhat_envelope(ps: &PrefixSums, window: IntegerInterval, alpha: f64) -> f64 {
    let sorted = SortedWindow::from_window(ps.omega(), ps.g(), window);
    envelope_at(&breakpoints(&sorted, FrontierKind::Amhat), alpha)
}

fn envelope_scan(ps: &PrefixSums, family: &WindowFamily, kind: FrontierKind, grid: &[f64]) -> Result<Vec<Best>> {
    check_open_unit("alpha", grid)?;
    family.validate(ps.len())?;
    Ok(fold_windows(family, ps.omega(), ps.g(), true, grid.len(), |acc, w, sorted| {
        let pts = breakpoints(sorted, kind);
        for (slot, &a) in acc.iter_mut().zip(grid) {
            slot.offer(envelope_at(&pts, a), w, f64::NAN);
        }
    }))
}

fn sorted_mass_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::validation("mass grid", "grid is empty"));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// Smallest `beta` such that the `A^M` implication holds with this `alpha` on
/// every window of the family (fractional subsets included).
pub fn am_value(ps: &PrefixSums, family: &WindowFamily, alpha: f64) -> Result<ClassConstantReport> {
    let best = envelope_scan(ps, family, FrontierKind::Am, &[alpha])?;
    Ok(ClassConstantReport::constant(ClassId::Am, best[0]).param("alpha", alpha))
}

pub fn amhat_value(ps: &PrefixSums, family: &WindowFamily, alpha: f64) -> Result<ClassConstantReport> {
    let best = envelope_scan(ps, family, FrontierKind::Amhat, &[alpha])?;
    Ok(ClassConstantReport::constant(ClassId::Amhat, best[0]).param("alpha_hat", alpha))
}

pub fn am_curve(ps: &PrefixSums, family: &WindowFamily, grid: &[f64]) -> Result<ClassConstantReport> {
    let grid = sorted_mass_grid(grid)?;
    let best = envelope_scan(ps, family, FrontierKind::Am, &grid)?;
    Ok(ClassConstantReport::curve(ClassId::Am, CurveKind::AmCurve, &grid, &best).param("alpha_grid", grid.as_slice()))
}

pub fn amhat_curve(ps: &PrefixSums, family: &WindowFamily, grid: &[f64]) -> Result<ClassConstantReport> {
    let grid = sorted_mass_grid(grid)?;
    let best = envelope_scan(ps, family, FrontierKind::Amhat, &grid)?;
    Ok(ClassConstantReport::curve(ClassId::Amhat, CurveKind::AmhatCurve, &grid, &best)
        .param("alpha_hat_grid", grid.as_slice()))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter {
            name: "eps",
            value: eps,
            expected: "in (0, 1)",
        });
    }
    Ok(())
}

/// Largest `v / t^eps` over one window's breakpoints, with the breakpoint.
fn cf_ratio(points: &[[f64; 2]], eps: f64) -> (f64, [f64; 2]) {
    let mut best = (f64::NEG_INFINITY, [1.0, 1.0]);
    for p in points {
        let r = p[1] / p[0].powf(eps);
        if r > best.0 {
            best = (r, *p);
        }
    }
    best
}

/// Smallest `C` with `v <= C t^eps` at every breakpoint of every window.
/// Since `t^eps` is concave and the envelope is piecewise linear, the
/// breakpoints decide the inequality for all subsets. The curve is the
/// frontier of the witness window.
pub fn cf_constant(ps: &PrefixSums, family: &WindowFamily, eps: f64) -> Result<ClassConstantReport> {
    check_eps(eps)?;
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), true, 1, |acc, w, sorted| {
        let (r, _) = cf_ratio(&breakpoints(sorted, FrontierKind::Cf), eps);
        acc[0].offer(r, w, f64::NAN);
    });
    let mut report = ClassConstantReport::constant(ClassId::Cf, best[0]).param("eps", eps);
    if let Some(window) = best[0].window {
        let curve = frontier_curve(ps, FrontierKind::Cf, window)?;
        let (_, at) = cf_ratio(&curve.points, eps);
        report.witness = Some(Witness {
            breakpoint: Some(at),
            ..Witness::window(window)
        });
        report.curve = Some(curve);
    }
    Ok(report)
}

/// `(eps, cf_constant(eps))` over a grid of exponents.
pub fn cf_feasibility_curve(ps: &PrefixSums, family: &WindowFamily, eps_grid: &[f64]) -> Result<Curve> {
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for &e in &grid {
        check_eps(e)?;
    }
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), true, grid.len(), |acc, w, sorted| {
        let pts = breakpoints(sorted, FrontierKind::Cf);
        for (slot, &e) in acc.iter_mut().zip(&grid) {
            slot.offer(cf_ratio(&pts, e).0, w, f64::NAN);
        }
    });
    Ok(Curve {
        kind: CurveKind::CfFeasibility,
        points: grid.iter().zip(&best).map(|(&e, b)| [e, b.value]).collect(),
        witnesses: best.iter().filter_map(|b| b.window).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfCheckReport {
    pub c: f64,
    pub eps: f64,
    pub passed: bool,
    /// Smallest constant that would pass at this `eps`.
    pub required_c: f64,
    /// Worst window and breakpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Passes iff every breakpoint of every window satisfies `v <= C t^eps`.
/// `C = 1` is accepted as a boundary value.
pub fn cf_check(ps: &PrefixSums, family: &WindowFamily, c: f64, eps: f64) -> Result<CfCheckReport> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::Parameter {
            name: "c",
            value: c,
            expected: "a finite real >= 1",
        });
    }
    check_eps(eps)?;
    family.validate(ps.len())?;
    let worst = fold_windows(family, ps.omega(), ps.g(), true, 1, |acc, w, sorted| {
        let pts = breakpoints(sorted, FrontierKind::Cf);
        // Largest excess v - C t^eps, so the verdict uses the direct inequality.
        let mut excess = f64::NEG_INFINITY;
        for p in &pts {
            excess = excess.max(p[1] - c * p[0].powf(eps));
        }
        acc[0].offer(excess, w, f64::NAN);
    })[0];
    let report = cf_constant(ps, family, eps)?;
    Ok(CfCheckReport {
        c,
        eps,
        passed: worst.value <= 0.0,
        required_c: report.value.unwrap_or(f64::NAN),
        witness: report.witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{GMode, Transform};
    use crate::orbit::OrbitSample;

    fn ps(omega: &[f64], g: &[f64]) -> PrefixSums {
        let s = OrbitSample::new(omega.to_vec(), g.to_vec()).unwrap();
        PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn cf_breakpoints_of_421() {
        let p = ps(&[4.0, 2.0, 1.0], &[1.0; 3]);
        let c = frontier_curve(&p, FrontierKind::Cf, IntegerInterval { start: 0, len: 3 }).unwrap();
        let want = [[1.0 / 3.0, 4.0 / 7.0], [2.0 / 3.0, 6.0 / 7.0], [1.0, 1.0]];
        for (got, want) in c.points.iter().zip(want) {
            assert!(close(got[0], want[0]) && close(got[1], want[1]), "{got:?} vs {want:?}");
        }
        assert_eq!(c.points[2], [1.0, 1.0]);
    }

    #[test]
    fn constant_weight_gives_diagonal() {
        let p = ps(&[2.5; 5], &[1.0; 5]);
        for kind in [FrontierKind::Cf, FrontierKind::Amhat] {
            let c = frontier_curve(&p, kind, IntegerInterval { start: 0, len: 5 }).unwrap();
            for (m, pt) in c.points.iter().enumerate() {
                let d = (m + 1) as f64 / 5.0;
                assert!(close(pt[0], d) && close(pt[1], d));
            }
        }
    }

    #[test]
    fn cf_feasibility_of_421_at_unit_constant() {
        let p = ps(&[4.0, 2.0, 1.0], &[1.0; 3]);
        let fam = WindowFamily::new(super::super::WindowMode::All, 3, 3);
        // (1/3, 4/7) alone would allow eps up to log(7/4)/log(3), but
        // (2/3, 6/7) binds first.
        let edge = (7.0f64 / 6.0).ln() / 1.5f64.ln();
        assert!(edge < (7.0f64 / 4.0).ln() / 3.0f64.ln());
        assert!(cf_check(&p, &fam, 1.0, edge - 1e-6).unwrap().passed);
        let fail = cf_check(&p, &fam, 1.0, edge + 1e-6).unwrap();
        assert!(!fail.passed);
        let w = fail.witness.unwrap();
        let bp = w.breakpoint.unwrap();
        assert!(close(bp[0], 2.0 / 3.0) && close(bp[1], 6.0 / 7.0));
        assert!(cf_check(&p, &fam, 0.5, 0.5).is_err());
        assert!(cf_check(&p, &fam, 2.0, 1.0).is_err());
    }

    #[test]
    fn am_and_amhat_envelopes() {
        let p = ps(&[4.0, 2.0, 1.0], &[1.0; 3]);
        let w = IntegerInterval { start: 0, len: 3 };
        assert!(close(am_envelope(&p, w, 0.5), 4.0 / 7.0 + 0.5 * 2.0 / 7.0));
        // Ascending: (1/7, 1/3), (3/7, 2/3), (1, 1).
        assert!(close(amhat_envelope(&p, w, 3.0 / 7.0), 2.0 / 3.0));
        let fam = WindowFamily::all(3);
        let curve = am_curve(&p, &fam, &[0.25, 0.5, 0.75]).unwrap();
        let c = curve.curve.unwrap();
        c.validate().unwrap();
        assert_eq!(c.witnesses.len(), 3);
    }

    #[test]
    fn cf_constant_reports_witness_frontier() {
        let p = ps(&[4.0, 2.0, 1.0], &[1.0; 3]);
        let r = cf_constant(&p, &WindowFamily::all(3), 0.5).unwrap();
        assert_eq!(r.witness.as_ref().unwrap().window, IntegerInterval { start: 0, len: 3 });
        assert_eq!(r.curve.as_ref().unwrap().points.len(), 3);
        let v = r.value.unwrap();
        assert!(close(v, (6.0 / 7.0) / (2.0f64 / 3.0).sqrt()));
    }
}
