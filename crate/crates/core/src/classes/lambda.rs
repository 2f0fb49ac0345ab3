//! The level-set constant
//! `sup_{lambda > avg} sum_{omega > lambda} omega g / (lambda sum_{omega > beta lambda} g)`.
//!
//! As a function of `lambda` the ratio is `N / (lambda D)` with `N` and `D`
//! piecewise constant and right-continuous, jumping only where `lambda` or
//! `beta lambda` crosses a sample value. Between jumps it decreases, so the
//! supremum is the right limit at `avg`, at some `omega_i` or at some
//! `omega_i / beta`.

use super::{check_open_unit, fold_windows, ClassConstantReport, ClassId, SortedWindow, WindowFamily};
use crate::dyadic::{IntegerInterval, PrefixSums};
use crate::error::Result;

/// Suffix sums over the ascending window: `w[i] = sum_{j>=i} omega_j g_j`, `g[i] = sum_{j>=i} g_j`.
struct Tails {
    w: Vec<f64>,
    g: Vec<f64>,
}

impl Tails {
    fn new(sorted: &SortedWindow) -> Self {
        let k = sorted.len();
        let mut w = vec![0.0; k + 1];
        let mut g = vec![0.0; k + 1];
        let (mut wh, mut wl, mut gh, mut gl) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in (0..k).rev() {
            let x = sorted.omega[i] * sorted.g[i];
            let s = wh + x;
            let bb = s - wh;
            wl += (wh - (s - bb)) + (x - bb);
            wh = s;
            w[i] = wh + wl;

            let x = sorted.g[i];
            let s = gh + x;
            let bb = s - gh;
            gl += (gh - (s - bb)) + (x - bb);
            gh = s;
            g[i] = gh + gl;
        }
        Tails { w, g }
    }
}

/// Best ratio within one window and the `lambda` (right limit) attaining it.
fn window_sup(sorted: &SortedWindow, avg: f64, beta: f64) -> (f64, f64) {
    let tails = Tails::new(sorted);
    let above = |t: f64| sorted.omega.partition_point(|&w| w <= t);
    let ratio = |c: f64, n_at: usize, d_at: usize| {
        let d = tails.g[d_at];
        if d == 0.0 {
            0.0
        } else {
            tails.w[n_at] / (c * d)
        }
    };
    let mut best = (ratio(avg, above(avg), above(beta * avg)), avg);
    let mut consider = |r: f64, c: f64| {
        if r > best.0 {
            best = (r, c);
        }
    };
    let k = sorted.len();
    for i in 0..k {
        let wi = sorted.omega[i];
        if i + 1 < k && sorted.omega[i + 1] == wi {
            continue;
        }
        if wi > avg {
            // lambda just above omega_i; the numerator counts values above omega_i.
            consider(ratio(wi, i + 1, above(beta * wi)), wi);
        }
        let c = wi / beta;
        if c > avg {
            // beta lambda just above omega_i; the denominator counts values above omega_i.
            consider(ratio(c, above(c), i + 1), c);
        }
    }
    best
}

/// Sup over `lambda > avg` for a single window, returned with the maximizing `lambda`.
pub fn lambda_window(ps: &PrefixSums, window: IntegerInterval, beta: f64) -> Result<(f64, f64)> {
    check_open_unit("beta", &[beta])?;
    window.check_bounds(ps.len())?;
    let sorted = SortedWindow::from_window(ps.omega(), ps.g(), window);
    Ok(window_sup(&sorted, ps.average(window), beta))
}

pub fn lambda_constant(ps: &PrefixSums, family: &WindowFamily, beta: f64) -> Result<ClassConstantReport> {
    check_open_unit("beta", &[beta])?;
    family.validate(ps.len())?;
    let best = fold_windows(family, ps.omega(), ps.g(), true, 1, |acc, w, sorted| {
        let (r, at) = window_sup(sorted, ps.average(w), beta);
        acc[0].offer(r, w, at);
    })[0];
    let mut report = ClassConstantReport::constant(ClassId::Lambda, best).param("beta", beta);
    if let Some(w) = report.witness.as_mut() {
        w.lambda = Some(best.detail);
    }
    Ok(report)
}
