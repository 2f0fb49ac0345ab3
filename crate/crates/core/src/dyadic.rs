//! Integer intervals on the dyadic grid and prefix sums for O(1) weighted
//! averages `T^g_I phi(omega) = sum_I phi(omega_i) g_i / sum_I g_i`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::OrbitSample;

/// The index set `{start, ..., start + len - 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntegerInterval {
    pub start: usize,
    pub len: usize,
}

impl IntegerInterval {
    pub fn new(start: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::validation("interval", "length must be at least 1"));
        }
        Ok(IntegerInterval { start, len })
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices().contains(&i)
    }

    pub fn contains_interval(&self, other: &IntegerInterval) -> bool {
        other.start >= self.start && other.end() <= self.end()
    }

    pub fn check_bounds(&self, n: usize) -> Result<()> {
        if self.len == 0 || self.end() > n {
            return Err(Error::OutOfBounds {
                start: self.start,
                len: self.len,
                n,
            });
        }
        Ok(())
    }

    /// Left child `{0, ..., floor((k-1)/2)}` and right child of the rest,
    /// shifted by `start`.
    pub fn split(&self) -> Result<(IntegerInterval, IntegerInterval)> {
        if self.len < 2 {
            return Err(Error::CannotSplit { len: self.len });
        }
        let left_len = (self.len - 1) / 2 + 1;
        Ok((
            IntegerInterval {
                start: self.start,
                len: left_len,
            },
            IntegerInterval {
                start: self.start + left_len,
                len: self.len - left_len,
            },
        ))
    }
}

impl fmt::Display for IntegerInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}..{}}}", self.start, self.end() - 1)
    }
}

impl Serialize for IntegerInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.start, self.len].serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntegerInterval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [start, len] = <[usize; 2]>::deserialize(d)?;
        IntegerInterval::new(start, len).map_err(serde::de::Error::custom)
    }
}

pub fn split_interval(interval: IntegerInterval) -> Result<(IntegerInterval, IntegerInterval)> {
    interval.split()
}

/// Pointwise transforms `phi` applied to omega before weighting by `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    Identity,
    /// `x^q`
    Power(f64),
    /// `x^s - 1`, evaluated as `expm1(s ln x)` so small `s` keeps full precision.
    PowerExcess(f64),
    /// `x^{-1/(p-1)}`
    ApDual(f64),
    /// `ln x`
    Log,
}

impl Transform {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Transform::Identity | Transform::Log => Ok(()),
            Transform::Power(q) if q.is_finite() => Ok(()),
            Transform::PowerExcess(s) if s.is_finite() && s != 0.0 => Ok(()),
            Transform::ApDual(p) if p.is_finite() && p > 1.0 => Ok(()),
            Transform::Power(q) => Err(Error::Parameter {
                name: "q",
                value: q,
                expected: "finite",
            }),
            Transform::PowerExcess(s) => Err(Error::Parameter {
                name: "s",
                value: s,
                expected: "finite and nonzero",
            }),
            Transform::ApDual(p) => Err(Error::Parameter {
                name: "p",
                value: p,
                expected: "p > 1",
            }),
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => x,
            Transform::Power(q) => x.powf(q),
            Transform::PowerExcess(s) => (s * x.ln()).exp_m1(),
            Transform::ApDual(p) => x.powf(-1.0 / (p - 1.0)),
            Transform::Log => x.ln(),
        }
    }

    fn same(&self, other: &Transform) -> bool {
        use Transform::*;
        match (self, other) {
            (Identity, Identity) | (Log, Log) => true,
            (Power(a), Power(b)) | (PowerExcess(a), PowerExcess(b)) | (ApDual(a), ApDual(b)) => {
                a.to_bits() == b.to_bits()
            }
            _ => false,
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity => write!(f, "x"),
            Transform::Power(q) => write!(f, "x^{q}"),
            Transform::PowerExcess(s) => write!(f, "x^{s} - 1"),
            Transform::ApDual(p) => write!(f, "x^(-1/({p}-1))"),
            Transform::Log => write!(f, "ln x"),
        }
    }
}

/// Whether averages are taken against the sample's `g` or against `g = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GMode {
    Weighted,
    Unweighted,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Compensated (two-sum) summation; error is independent of the length.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut hi, mut lo) = (0.0, 0.0);
    for x in values {
        let (s, e) = two_sum(hi, x);
        hi = s;
        lo += e;
    }
    hi + lo
}

/// Running sums kept as an unevaluated pair `hi + lo`.
#[derive(Clone, Debug)]
struct Cumulative {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl Cumulative {
    fn build(terms: impl ExactSizeIterator<Item = f64>) -> Self {
        let mut hi = Vec::with_capacity(terms.len() + 1);
        let mut lo = Vec::with_capacity(terms.len() + 1);
        let (mut h, mut l) = (0.0, 0.0);
        hi.push(h);
        lo.push(l);
        for x in terms {
            let (s, e) = two_sum(h, x);
            h = s;
            l += e;
            hi.push(h);
            lo.push(l);
        }
        Cumulative { hi, lo }
    }

    #[inline]
    fn at(&self, j: usize) -> f64 {
        self.hi[j] + self.lo[j]
    }

    #[inline]
    fn range(&self, interval: IntegerInterval) -> f64 {
        let (a, b) = (interval.start, interval.end());
        (self.hi[b] - self.hi[a]) + (self.lo[b] - self.lo[a])
    }
}

/// Cumulative sums `S_phi[j] = sum_{i<j} phi(omega_i) g_i` for each registered
/// transform, plus cumulative sums of `g` and of plain `omega`.
#[derive(Clone, Debug)]
pub struct PrefixSums {
    omega: Vec<f64>,
    g: Vec<f64>,
    mode: GMode,
    g_sums: Cumulative,
    omega_sums: Cumulative,
    transforms: Vec<(Transform, Cumulative)>,
}

impl PrefixSums {
    pub fn build(sample: &OrbitSample, transforms: &[Transform], mode: GMode) -> Result<Self> {
        for t in transforms {
            t.validate()?;
        }
        let omega = sample.omega().to_vec();
        let g = match mode {
            GMode::Weighted => sample.g().to_vec(),
            GMode::Unweighted => vec![1.0; omega.len()],
        };
        let g_sums = Cumulative::build(g.iter().copied());
        let omega_sums = Cumulative::build(omega.iter().copied());
        let mut registered: Vec<(Transform, Cumulative)> = Vec::new();
        for t in transforms {
            if registered.iter().any(|(r, _)| r.same(t)) {
                continue;
            }
            let sums = Cumulative::build(omega.iter().zip(&g).map(|(w, g)| t.apply(*w) * g));
            registered.push((*t, sums));
        }
        Ok(PrefixSums {
            omega,
            g,
            mode,
            g_sums,
            omega_sums,
            transforms: registered,
        })
    }

    /// A copy with `extra` transforms registered as well.
    pub fn with_transforms(&self, extra: &[Transform]) -> Result<PrefixSums> {
        let mut out = self.clone();
        for t in extra {
            t.validate()?;
            if out.has(*t) {
                continue;
            }
            let sums = Cumulative::build(out.omega.iter().zip(&out.g).map(|(w, g)| t.apply(*w) * g));
            out.transforms.push((*t, sums));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn mode(&self) -> GMode {
        self.mode
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// The reference weight in use (all ones in unweighted mode).
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn has(&self, transform: Transform) -> bool {
        self.transforms.iter().any(|(t, _)| t.same(&transform))
    }

    fn cumulative(&self, transform: Transform) -> Result<&Cumulative> {
        self.transforms
            .iter()
            .find(|(t, _)| t.same(&transform))
            .map(|(_, c)| c)
            .ok_or_else(|| Error::MissingTransform(transform.to_string()))
    }

    /// `S_phi[j]` as a single float.
    pub fn prefix(&self, transform: Transform, j: usize) -> Result<f64> {
        Ok(self.cumulative(transform)?.at(j))
    }

    pub fn g_prefix(&self, j: usize) -> f64 {
        self.g_sums.at(j)
    }

    /// `sum_{i in I} phi(omega_i) g_i`.
    pub fn sum(&self, interval: IntegerInterval, transform: Transform) -> Result<f64> {
        Ok(self.cumulative(transform)?.range(interval))
    }

    /// `sum_{i in I} g_i`.
    pub fn g_sum(&self, interval: IntegerInterval) -> f64 {
        if interval.len == 1 {
            return self.g[interval.start];
        }
        self.g_sums.range(interval)
    }

    /// `sum_{i in I} omega_i`, never weighted by `g`.
    pub fn omega_sum(&self, interval: IntegerInterval) -> f64 {
        if interval.len == 1 {
            return self.omega[interval.start];
        }
        self.omega_sums.range(interval)
    }

    /// `T^g_I phi(omega)`. Singletons return `phi(omega_j)` exactly.
    pub fn weighted_average(&self, interval: IntegerInterval, transform: Transform) -> Result<f64> {
        let sums = self.cumulative(transform)?;
        if interval.len == 1 {
            return Ok(transform.apply(self.omega[interval.start]));
        }
        Ok(sums.range(interval) / self.g_sums.range(interval))
    }

    /// `T^g_I omega`; the identity transform is always available.
    pub fn average(&self, interval: IntegerInterval) -> f64 {
        if interval.len == 1 {
            return self.omega[interval.start];
        }
        match self.cumulative(Transform::Identity) {
            Ok(c) => c.range(interval) / self.g_sums.range(interval),
            Err(_) => {
                let num = compensated_sum(interval.indices().map(|i| self.omega[i] * self.g[i]));
                num / self.g_sums.range(interval)
            }
        }
    }
}

pub fn build_prefix_sums(
    sample: &OrbitSample,
    transforms: &[Transform],
    mode: GMode,
) -> Result<PrefixSums> {
    PrefixSums::build(sample, transforms, mode)
}

pub fn weighted_average(
    ps: &PrefixSums,
    interval: IntegerInterval,
    transform: Transform,
) -> Result<f64> {
    ps.weighted_average(interval, transform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(start: usize, len: usize) -> IntegerInterval {
        IntegerInterval::new(start, len).unwrap()
    }

    #[test]
    fn split_examples() {
        assert_eq!(iv(0, 5).split().unwrap(), (iv(0, 3), iv(3, 2)));
        assert_eq!(iv(0, 2).split().unwrap(), (iv(0, 1), iv(1, 1)));
        assert_eq!(iv(7, 6).split().unwrap(), (iv(7, 3), iv(10, 3)));
        assert!(matches!(iv(4, 1).split(), Err(Error::CannotSplit { len: 1 })));
    }

    #[test]
    fn child_ratio_bound_is_three_and_attained() {
        let mut max_ratio: f64 = 0.0;
        for len in 2..=10_000usize {
            let (l, r) = iv(0, len).split().unwrap();
            assert!(l.len >= r.len && r.len >= 1);
            assert_eq!(l.len + r.len, len);
            let ratio = (len as f64 / l.len as f64).max(len as f64 / r.len as f64);
            assert!(ratio <= 3.0, "len {len}");
            max_ratio = max_ratio.max(ratio);
        }
        assert_eq!(max_ratio, 3.0);
        let (_, r) = iv(0, 3).split().unwrap();
        assert_eq!(r.len, 1);
    }

    #[test]
    fn recursive_splitting_depth() {
        fn depth(i: IntegerInterval) -> usize {
            match i.split() {
                Ok((l, r)) => {
                    assert!(l.len < i.len && r.len < i.len);
                    1 + depth(l).max(depth(r))
                }
                Err(_) => 0,
            }
        }
        for len in 1..=2000usize {
            let bound = (len as f64).log2().ceil() as usize + 1;
            assert!(depth(iv(0, len)) <= bound, "len {len}");
        }
    }

    #[test]
    fn weighted_average_examples() {
        let s = OrbitSample::new(vec![1.0, 3.0], vec![1.0, 1.0]).unwrap();
        let ps = PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap();
        assert_eq!(ps.weighted_average(iv(0, 2), Transform::Identity).unwrap(), 2.0);

        let s = OrbitSample::new(vec![1.0, 3.0], vec![1.0, 3.0]).unwrap();
        let ps = PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap();
        assert_eq!(ps.weighted_average(iv(0, 2), Transform::Identity).unwrap(), 2.5);

        let s = OrbitSample::new(vec![1.0, 4.0], vec![1.0, 1.0]).unwrap();
        let ps = PrefixSums::build(&s, &[Transform::Log], GMode::Weighted).unwrap();
        let v = ps.weighted_average(iv(0, 2), Transform::Log).unwrap();
        assert!((v - 4f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn prefix_examples() {
        let s = OrbitSample::new(vec![2.0, 2.0], vec![1.0, 1.0]).unwrap();
        let ps = PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap();
        let sums: Vec<f64> = (0..=2).map(|j| ps.prefix(Transform::Identity, j).unwrap()).collect();
        assert_eq!(sums, vec![0.0, 2.0, 4.0]);

        let s = OrbitSample::unweighted(vec![1.0, 2.0, 4.0]).unwrap();
        let ps = PrefixSums::build(&s, &[Transform::Power(2.0)], GMode::Weighted).unwrap();
        let sums: Vec<f64> = (0..=3).map(|j| ps.prefix(Transform::Power(2.0), j).unwrap()).collect();
        assert_eq!(sums, vec![0.0, 1.0, 5.0, 21.0]);

        let ps = PrefixSums::build(&s, &[], GMode::Weighted).unwrap();
        assert_eq!(ps.g_prefix(3), 3.0);
        assert!(matches!(
            ps.prefix(Transform::Identity, 1),
            Err(Error::MissingTransform(_))
        ));
    }

    #[test]
    fn ap_dual_requires_p_above_one() {
        let s = OrbitSample::unweighted(vec![1.0]).unwrap();
        let err = PrefixSums::build(&s, &[Transform::ApDual(1.0)], GMode::Weighted).unwrap_err();
        assert!(matches!(err, Error::Parameter { name: "p", .. }));
    }

    #[test]
    fn prefix_sums_are_accurate_for_long_inputs() {
        // 0.1 is not representable; compare against an exact rational total.
        let n = 1_000_000;
        let s = OrbitSample::unweighted(vec![0.1; n]).unwrap();
        let ps = PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap();
        let exact = 0.1f64 * n as f64; // representable neighbour of 100000
        let total = ps.prefix(Transform::Identity, n).unwrap();
        let bound = 2f64.powi(-40) * n as f64 * exact;
        assert!((total - exact).abs() <= bound);
        assert!((total - 100_000.0).abs() < 1e-9);
    }

    fn sample_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(-4.0f64..4.0, n),
                prop::collection::vec(-2.0f64..2.0, n),
            )
                .prop_map(|(a, b)| {
                    (
                        a.into_iter().map(f64::exp).collect(),
                        b.into_iter().map(f64::exp).collect(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn average_lies_between_min_and_max((omega, g) in sample_strategy(), a in 0usize..60, b in 0usize..60) {
            let n = omega.len();
            let (a, b) = (a % n, b % n);
            let (lo, hi) = (a.min(b), a.max(b));
            let s = OrbitSample::new(omega.clone(), g).unwrap();
            let ps = PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap();
            let i = iv(lo, hi - lo + 1);
            let avg = ps.weighted_average(i, Transform::Identity).unwrap();
            let min = omega[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
            let max = omega[lo..=hi].iter().cloned().fold(0.0, f64::max);
            prop_assert!(avg >= min * (1.0 - 1e-14) && avg <= max * (1.0 + 1e-14));
        }

        #[test]
        fn unit_g_average_matches_direct_mean((omega, _g) in sample_strategy(), a in 0usize..60, b in 0usize..60) {
            let n = omega.len();
            let (a, b) = (a % n, b % n);
            let (lo, hi) = (a.min(b), a.max(b));
            let s = OrbitSample::unweighted(omega.clone()).unwrap();
            let ps = PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap();
            let avg = ps.weighted_average(iv(lo, hi - lo + 1), Transform::Identity).unwrap();
            let direct: f64 = omega[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            prop_assert!((avg - direct).abs() <= 1e-12 * direct);
        }

        #[test]
        fn increments_match_terms((omega, g) in sample_strategy()) {
            let s = OrbitSample::new(omega.clone(), g.clone()).unwrap();
            let ps = PrefixSums::build(&s, &[Transform::Identity], GMode::Weighted).unwrap();
            prop_assert_eq!(ps.prefix(Transform::Identity, 0).unwrap(), 0.0);
            let mut prev = 0.0;
            for j in 0..omega.len() {
                let next = ps.prefix(Transform::Identity, j + 1).unwrap();
                let term = omega[j] * g[j];
                prop_assert!(next >= prev);
                prop_assert!((ps.sum(iv(j, 1), Transform::Identity).unwrap() - term).abs() <= 1e-15 * term);
                prev = next;
            }
        }
    }
}
