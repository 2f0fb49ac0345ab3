//! Quantitative checks of the implications between the weight classes.
//!
//! Each edge turns measured constants of its source class into constants of
//! its target class, following the constant bookkeeping of the corresponding
//! proof, and then measures the target class on the same sample. A failing
//! edge means an estimator or a transfer formula is wrong.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classes::{self, ClassConstantReport, WeightRole, WindowFamily};
use crate::dyadic::{GMode, PrefixSums, Transform};
use crate::error::{Error, Result};
use crate::orbit::OrbitSample;

/// Free choices inside the proofs are resolved over these 64 log-spaced
/// points `10^(-12 + 12 i / 64)`, `i = 0..63`, all inside `(0, 1)`.
pub fn proof_grid() -> Vec<f64> {
    (0..64).map(|i| 10f64.powf(-12.0 + 12.0 * i as f64 / 64.0)).collect()
}

/// Relative slack allowed when comparing a measured constant with its bound.
pub const VERDICT_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    T12,
    T13,
    T14,
    T15,
}

impl EdgeId {
    /// Parses `all` or a comma separated list such as `T1,t7`.
    pub fn parse_list(list: &str) -> Result<Vec<EdgeId>> {
        if list.trim() == "all" {
            return Ok(EdgeId::ALL.to_vec());
        }
        list.split(',').map(|c| c.trim().parse()).collect()
    }

    pub const ALL: [EdgeId; 15] = [
        EdgeId::T1,
        EdgeId::T2,
        EdgeId::T3,
        EdgeId::T4,
        EdgeId::T5,
        EdgeId::T6,
        EdgeId::T7,
        EdgeId::T8,
        EdgeId::T9,
        EdgeId::T10,
        EdgeId::T11,
        EdgeId::T12,
        EdgeId::T13,
        EdgeId::T14,
        EdgeId::T15,
    ];

    /// Short `source => target` description.
    pub fn describe(&self) -> &'static str {
        match self {
            EdgeId::T1 => "avg => lambda",
            EdgeId::T2 => "lambda => rh",
            EdgeId::T3 => "rh => cf",
            EdgeId::T4 => "cf => amhat",
            EdgeId::T5 => "amhat => am",
            EdgeId::T6 => "am => avg",
            EdgeId::T7 => "rh => log",
            EdgeId::T8 => "log => am",
            EdgeId::T9 => "ap => exp",
            EdgeId::T10 => "exp => avg",
            EdgeId::T11 => "exp => sw",
            EdgeId::T12 => "sw => med",
            EdgeId::T13 => "med => am",
            EdgeId::T14 => "rh of the dual weight => ap",
            EdgeId::T15 => "ap => doubling of omega",
        }
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for EdgeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeId::ALL
            .into_iter()
            .find(|e| e.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation("edges", format!("unknown edge {s:?}")))
    }
}

/// Constants of one class condition, as consumed or produced by a transfer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ClassConstants {
    /// `delta(gamma) <= delta`.
    AvgDelta { gamma: f64, delta: f64 },
    Lambda { c: f64, beta: f64 },
    ReverseHolder { c: f64, q: f64 },
    CoifmanFefferman { c: f64, eps: f64 },
    /// `omega g`-mass at most `alpha` forces `g`-mass at most `beta`.
    MuckenhouptHat { alpha: f64, beta: f64 },
    /// `g`-mass at most `alpha` forces `omega g`-mass at most `beta`.
    Muckenhoupt { alpha: f64, beta: f64 },
    /// `delta(gamma) <= C / log(1 + 1 / (gamma C))` for every gamma.
    AvgDeltaProfile { exp_c: f64 },
    Log { c: f64 },
    Ap { c: f64, p: f64 },
    Exp { c: f64 },
    /// Strömberg–Wheeden constant, valid for every `s` in `[s_min, 1)`.
    StrombergWheeden { c: f64, s_min: f64 },
    Median { c: f64 },
    Doubling { c: f64 },
}

impl ClassConstants {
    fn name(&self) -> &'static str {
        match self {
            ClassConstants::AvgDelta { .. } => "avg",
            ClassConstants::Lambda { .. } => "lambda",
            ClassConstants::ReverseHolder { .. } => "rh",
            ClassConstants::CoifmanFefferman { .. } => "cf",
            ClassConstants::MuckenhouptHat { .. } => "amhat",
            ClassConstants::Muckenhoupt { .. } => "am",
            ClassConstants::AvgDeltaProfile { .. } => "avg",
            ClassConstants::Log { .. } => "log",
            ClassConstants::Ap { .. } => "ap",
            ClassConstants::Exp { .. } => "exp",
            ClassConstants::StrombergWheeden { .. } => "sw",
            ClassConstants::Median { .. } => "med",
            ClassConstants::Doubling { .. } => "doubling",
        }
    }

    /// Whether the constants lie in the class's admissible region.
    pub fn admissible(&self) -> bool {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        let ge1 = |x: f64| x.is_finite() && x >= 1.0;
        match *self {
            ClassConstants::AvgDelta { gamma, delta } => unit(gamma) && unit(delta),
            ClassConstants::Lambda { c, beta } => c.is_finite() && c > 0.0 && unit(beta),
            ClassConstants::ReverseHolder { c, q } => ge1(c) && q > 1.0 && q.is_finite(),
            ClassConstants::CoifmanFefferman { c, eps } => ge1(c) && unit(eps),
            ClassConstants::MuckenhouptHat { alpha, beta } | ClassConstants::Muckenhoupt { alpha, beta } => {
                unit(alpha) && unit(beta)
            }
            ClassConstants::AvgDeltaProfile { exp_c } => ge1(exp_c),
            ClassConstants::Log { c } => c.is_finite() && c >= 0.0,
            ClassConstants::Ap { c, p } => ge1(c) && p > 1.0 && p.is_finite(),
            ClassConstants::Exp { c } | ClassConstants::Median { c } | ClassConstants::Doubling { c } => ge1(c),
            ClassConstants::StrombergWheeden { c, s_min } => ge1(c) && (0.0..1.0).contains(&s_min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TransferOutcome {
    Feasible { constants: ClassConstants },
    Infeasible { reason: String },
}

fn infeasible(reason: impl Into<String>) -> Result<TransferOutcome> {
    Ok(TransferOutcome::Infeasible { reason: reason.into() })
}

fn feasible(constants: ClassConstants) -> Result<TransferOutcome> {
    if !constants.admissible() {
        return infeasible(format!("transferred constants {constants:?} are outside the admissible region"));
    }
    Ok(TransferOutcome::Feasible { constants })
}

fn mismatch(edge: EdgeId, source: &ClassConstants) -> Error {
    Error::validation(
        format!("{edge} source"),
        format!("edge {edge} ({}) cannot start from {} constants", edge.describe(), source.name()),
    )
}

/// Maps measured source constants to target constants along `edge`. `aux` is
/// the doubling constant of `g`, required by T1.
pub fn transfer_constants(edge: EdgeId, source: &ClassConstants, aux: Option<f64>) -> Result<TransferOutcome> {
    use ClassConstants as K;
    let grid = proof_grid();
    match (edge, source) {
        (EdgeId::T1, &K::AvgDelta { gamma, delta }) => {
            let dg = aux.ok_or_else(|| Error::Dependency(vec!["doubling_g".into()]))?;
            if !dg.is_finite() {
                return infeasible("doubling constant of g is not finite");
            }
            if !(delta < 1.0) {
                return infeasible("delta is not below 1");
            }
            feasible(K::Lambda {
                c: dg / (1.0 - delta),
                beta: gamma,
            })
        }
        (EdgeId::T2, &K::Lambda { c, beta }) => {
            let pick = grid
                .iter()
                .rev()
                .find(|&&d| c * d / ((1.0 + d) * beta.powf(1.0 + d)) < 0.5);
            match pick {
                Some(&d) => {
                    let q = 1.0 + d;
                    feasible(K::ReverseHolder { c: 2f64.powf(1.0 / q), q })
                }
                None => infeasible("no grid delta satisfies C delta / ((1 + delta) beta^(1 + delta)) < 1/2"),
            }
        }
        (EdgeId::T3, &K::ReverseHolder { c, q }) => feasible(K::CoifmanFefferman { c, eps: (q - 1.0) / q }),
        (EdgeId::T4, &K::CoifmanFefferman { c, eps }) => {
            let mut best: Option<(f64, f64, f64)> = None;
            for &a in &grid {
                let b = c * a.powf(eps);
                if b < 1.0 {
                    let score = a.min(1.0 - b);
                    if best.is_none_or(|(s, _, _)| score > s) {
                        best = Some((score, a, b));
                    }
                }
            }
            match best {
                Some((_, a2, b2)) => feasible(K::MuckenhouptHat {
                    alpha: 1.0 - b2,
                    beta: 1.0 - a2,
                }),
                None => infeasible("no grid alpha'' gives C alpha''^eps < 1"),
            }
        }
        (EdgeId::T5, &K::MuckenhouptHat { alpha: a1, beta: b1 }) => {
            if !(b1 < 1.0) {
                return infeasible("beta' is not below 1");
            }
            let mut best: Option<(f64, f64, f64)> = None;
            for &u in &grid {
                let alpha = u * (1.0 - b1);
                let beta = 1.0 - a1 * (1.0 - alpha - b1);
                if alpha > 0.0 && beta < 1.0 {
                    let score = alpha.min(1.0 - beta);
                    if best.is_none_or(|(s, _, _)| score > s) {
                        best = Some((score, alpha, beta));
                    }
                }
            }
            match best {
                Some((_, alpha, beta)) => feasible(K::Muckenhoupt { alpha, beta }),
                None => infeasible("no grid alpha leaves beta below 1"),
            }
        }
        (EdgeId::T6, &K::Muckenhoupt { alpha, beta }) => feasible(K::AvgDelta {
            gamma: 1.0 - beta,
            delta: 1.0 - alpha,
        }),
        (EdgeId::T7, &K::ReverseHolder { c, q }) => {
            let x = 2f64.powf(1.0 - q);
            feasible(K::Log {
                c: c.powf(q) * 2.0 / ((1.0 - x) * (1.0 - x)),
            })
        }
        (EdgeId::T8, &K::Log { c }) => {
            // The proof needs b = 2C - 1 >= 0; a smaller measured constant is
            // raised to 1/2, which keeps the condition true.
            let b = 2.0 * c.max(0.5) - 1.0;
            let factor = 1.0 + b.exp() / (b + 1.0);
            match grid.iter().rev().find(|&&a| a * factor <= 0.25) {
                Some(&alpha) => feasible(K::Muckenhoupt { alpha, beta: 0.75 }),
                None => infeasible("no grid alpha satisfies alpha (1 + e^b / (b + 1)) <= 1/4"),
            }
        }
        (EdgeId::T9, &K::Ap { c, .. }) => feasible(K::Exp { c }),
        (EdgeId::T10, &K::Exp { c }) => feasible(K::AvgDeltaProfile { exp_c: c }),
        (EdgeId::T11, &K::Exp { c }) => feasible(K::StrombergWheeden { c, s_min: 0.0 }),
        (EdgeId::T12, &K::StrombergWheeden { c, s_min }) => {
            let pick = grid
                .iter()
                .rev()
                .find(|&&s| s >= s_min && 2f64.powf(s - 1.0) * c.powf(s) < 0.75);
            match pick {
                Some(&s) => feasible(K::Median { c: 4f64.powf(1.0 / s) * c }),
                None => infeasible("no grid s satisfies 2^(s-1) C^s < 3/4"),
            }
        }
        (EdgeId::T13, &K::Median { c }) => {
            let alpha = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max) * 0.25;
            feasible(K::Muckenhoupt {
                alpha,
                beta: 1.0 - 1.0 / (4.0 * c),
            })
        }
        (EdgeId::T14, &K::ReverseHolder { c, q }) => {
            let p = q / (q - 1.0);
            feasible(K::Ap { c: c.powf(p), p })
        }
        (EdgeId::T15, &K::Ap { c, p }) => feasible(K::Doubling { c: 3f64.powf(p) * c }),
        (edge, source) => Err(mismatch(edge, source)),
    }
}

/// Parameters shared by all edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    /// `g`-mass fraction for the `A^M` source of T6.
    pub alpha: f64,
    /// `omega g`-mass fraction for the `Â^M` source of T5.
    pub alpha_hat: f64,
    pub s_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            p: 2.0,
            q: 2.0,
            beta: 0.5,
            alpha: 0.25,
            alpha_hat: 0.5,
            s_grid: classes::DEFAULT_S_GRID.to_vec(),
            gamma_grid: classes::default_gamma_grid(),
        }
    }
}

/// Measured source reports. Fields left `None` are reported as missing
/// dependencies by [`verify_edges`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceReports {
    pub delta: Option<ClassConstantReport>,
    pub doubling_g: Option<ClassConstantReport>,
    pub lambda: Option<ClassConstantReport>,
    pub rh: Option<ClassConstantReport>,
    pub cf: Option<ClassConstantReport>,
    pub amhat: Option<ClassConstantReport>,
    pub am: Option<ClassConstantReport>,
    pub log: Option<ClassConstantReport>,
    pub ap_unweighted: Option<ClassConstantReport>,
    pub exp_unweighted: Option<ClassConstantReport>,
    pub sw_unweighted: Option<ClassConstantReport>,
    pub med_unweighted: Option<ClassConstantReport>,
    pub rh_dual: Option<ClassConstantReport>,
}

/// Names of the source reports each edge reads.
fn needs(edge: EdgeId) -> &'static [&'static str] {
    match edge {
        EdgeId::T1 => &["delta", "doubling_g"],
        EdgeId::T2 => &["lambda"],
        EdgeId::T3 | EdgeId::T7 => &["rh"],
        EdgeId::T4 => &["cf"],
        EdgeId::T5 => &["amhat"],
        EdgeId::T6 => &["am"],
        EdgeId::T8 => &["log"],
        EdgeId::T9 | EdgeId::T15 => &["ap_unweighted"],
        EdgeId::T10 | EdgeId::T11 => &["exp_unweighted"],
        EdgeId::T12 => &["sw_unweighted"],
        EdgeId::T13 => &["med_unweighted"],
        EdgeId::T14 => &["rh_dual"],
    }
}

/// The three views of a sample the edges are measured on.
pub struct Views {
    pub weighted: PrefixSums,
    pub unit: PrefixSums,
    pub dual: PrefixSums,
    pub family: WindowFamily,
}

impl Views {
    pub fn new(sample: &OrbitSample, config: &HarnessConfig) -> Result<Views> {
        let weighted_t = [Transform::Identity, Transform::Power(config.q)];
        let mut unit_t = vec![Transform::Identity, Transform::Log, Transform::ApDual(config.p)];
        unit_t.extend(config.s_grid.iter().map(|&s| Transform::PowerExcess(s)));
        let unit_sample = sample.with_unit_g();
        Ok(Views {
            weighted: PrefixSums::build(sample, &weighted_t, GMode::Weighted)?,
            unit: PrefixSums::build(&unit_sample, &unit_t, GMode::Unweighted)?,
            dual: PrefixSums::build(&sample.dual(), &[Transform::Identity, Transform::Power(config.q)], GMode::Weighted)?,
            family: WindowFamily::all(sample.len()),
        })
    }
}

impl SourceReports {
    /// Measures every source report the listed edges need.
    pub fn measure(views: &Views, config: &HarnessConfig, edges: &[EdgeId]) -> Result<SourceReports> {
        let want = |name: &str| edges.iter().any(|e| needs(*e).contains(&name));
        let fam = &views.family;
        let (w, u) = (&views.weighted, &views.unit);
        let opt = |flag: bool, f: &dyn Fn() -> Result<ClassConstantReport>| -> Result<Option<ClassConstantReport>> {
            if flag {
                f().map(Some)
            } else {
                Ok(None)
            }
        };
        let eps = (config.q - 1.0) / config.q;
        Ok(SourceReports {
            delta: opt(want("delta"), &|| classes::delta_at(w, fam, config.beta))?,
            doubling_g: opt(want("doubling_g"), &|| classes::doubling_constant(w, fam, WeightRole::G))?,
            lambda: opt(want("lambda"), &|| classes::lambda_constant(w, fam, config.beta))?,
            rh: opt(want("rh"), &|| classes::rh_constant(w, fam, config.q))?,
            cf: opt(want("cf"), &|| classes::cf_constant(w, fam, eps))?,
            amhat: opt(want("amhat"), &|| classes::amhat_value(w, fam, config.alpha_hat))?,
            am: opt(want("am"), &|| classes::am_value(w, fam, config.alpha))?,
            log: opt(want("log"), &|| classes::log_constant(w, fam))?,
            ap_unweighted: opt(want("ap_unweighted"), &|| classes::ap_constant(u, fam, config.p))?,
            exp_unweighted: opt(want("exp_unweighted"), &|| classes::exp_constant(u, fam))?,
            sw_unweighted: opt(want("sw_unweighted"), &|| classes::sw_constant(u, fam, &config.s_grid))?,
            med_unweighted: opt(want("med_unweighted"), &|| classes::med_constant(u, fam))?,
            rh_dual: opt(want("rh_dual"), &|| classes::rh_constant(&views.dual, fam, config.q))?,
        })
    }

    fn get(&self, name: &str) -> Option<&ClassConstantReport> {
        match name {
            "delta" => self.delta.as_ref(),
            "doubling_g" => self.doubling_g.as_ref(),
            "lambda" => self.lambda.as_ref(),
            "rh" => self.rh.as_ref(),
            "cf" => self.cf.as_ref(),
            "amhat" => self.amhat.as_ref(),
            "am" => self.am.as_ref(),
            "log" => self.log.as_ref(),
            "ap_unweighted" => self.ap_unweighted.as_ref(),
            "exp_unweighted" => self.exp_unweighted.as_ref(),
            "sw_unweighted" => self.sw_unweighted.as_ref(),
            "med_unweighted" => self.med_unweighted.as_ref(),
            "rh_dual" => self.rh_dual.as_ref(),
            _ => None,
        }
    }

    fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, ClassConstantReport::value_or_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictStatus {
    Pass,
    Fail,
    /// No admissible transfer, or the source constant is not finite. Not a failure.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeVerdict {
    pub edge: EdgeId,
    pub source: ClassConstants,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transferred: Option<ClassConstants>,
    /// Measured target constant; for curve targets, at the tightest grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_measured: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Grid point where a curve target is tightest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
    pub status: VerdictStatus,
    /// `bound - target_measured`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EdgeVerdict {
    pub fn passed(&self) -> bool {
        self.status != VerdictStatus::Fail
    }
}

pub fn within_bound(target: f64, bound: f64) -> bool {
    target <= bound + VERDICT_RTOL * bound.abs().max(1.0)
}

fn source_constants(edge: EdgeId, src: &SourceReports, config: &HarnessConfig) -> ClassConstants {
    use ClassConstants as K;
    let q = config.q;
    match edge {
        EdgeId::T1 => K::AvgDelta {
            gamma: config.beta,
            delta: src.value("delta"),
        },
        EdgeId::T2 => K::Lambda {
            c: src.value("lambda"),
            beta: config.beta,
        },
        EdgeId::T3 | EdgeId::T7 => K::ReverseHolder { c: src.value("rh"), q },
        EdgeId::T4 => K::CoifmanFefferman {
            c: src.value("cf"),
            eps: (q - 1.0) / q,
        },
        EdgeId::T5 => K::MuckenhouptHat {
            alpha: config.alpha_hat,
            beta: src.value("amhat"),
        },
        EdgeId::T6 => K::Muckenhoupt {
            alpha: config.alpha,
            beta: src.value("am"),
        },
        EdgeId::T8 => K::Log { c: src.value("log") },
        EdgeId::T9 | EdgeId::T15 => K::Ap {
            c: src.value("ap_unweighted"),
            p: config.p,
        },
        EdgeId::T10 | EdgeId::T11 => K::Exp {
            c: src.value("exp_unweighted"),
        },
        EdgeId::T12 => K::StrombergWheeden {
            c: src.value("sw_unweighted"),
            s_min: config.s_grid.iter().copied().fold(f64::INFINITY, f64::min),
        },
        EdgeId::T13 => K::Median {
            c: src.value("med_unweighted"),
        },
        EdgeId::T14 => K::ReverseHolder {
            c: src.value("rh_dual"),
            q,
        },
    }
}

fn source_is_finite(c: &ClassConstants) -> bool {
    use ClassConstants as K;
    let values: &[f64] = match c {
        K::AvgDelta { gamma, delta } => &[*gamma, *delta],
        K::Lambda { c, beta } => &[*c, *beta],
        K::ReverseHolder { c, q } => &[*c, *q],
        K::CoifmanFefferman { c, eps } => &[*c, *eps],
        K::MuckenhouptHat { alpha, beta } | K::Muckenhoupt { alpha, beta } => &[*alpha, *beta],
        K::AvgDeltaProfile { exp_c } => &[*exp_c],
        K::Ap { c, p } => &[*c, *p],
        K::StrombergWheeden { c, s_min } => &[*c, *s_min],
        K::Log { c } | K::Exp { c } | K::Median { c } | K::Doubling { c } => &[*c],
    };
    values.iter().all(|v| v.is_finite())
}

/// Scalar measurement of the target condition along `edge`: `(measured, bound, at)`.
fn measure_target(edge: EdgeId, t: &ClassConstants, views: &Views, config: &HarnessConfig) -> Result<(f64, f64, Option<f64>)> {
    use ClassConstants as K;
    let fam = &views.family;
    let (w, u) = (&views.weighted, &views.unit);
    let value = |r: ClassConstantReport| r.value_or_max();
    Ok(match (edge, t) {
        (EdgeId::T1, &K::Lambda { c, beta }) => (value(classes::lambda_constant(w, fam, beta)?), c, None),
        (EdgeId::T2, &K::ReverseHolder { c, q }) => {
            let ps = w.with_transforms(&[Transform::Power(q)])?;
            (value(classes::rh_constant(&ps, fam, q)?), c, None)
        }
        (EdgeId::T3, &K::CoifmanFefferman { c, eps }) => (value(classes::cf_constant(w, fam, eps)?), c, None),
        (EdgeId::T4, &K::MuckenhouptHat { alpha, beta }) => (value(classes::amhat_value(w, fam, alpha)?), beta, None),
        (EdgeId::T5 | EdgeId::T8, &K::Muckenhoupt { alpha, beta }) => (value(classes::am_value(w, fam, alpha)?), beta, None),
        (EdgeId::T6, &K::AvgDelta { gamma, delta }) => (value(classes::delta_at(w, fam, gamma)?), delta, None),
        (EdgeId::T7, &K::Log { c }) => (value(classes::log_constant(w, fam)?), c, None),
        (EdgeId::T9, &K::Exp { c }) => (value(classes::exp_constant(u, fam)?), c, None),
        (EdgeId::T10, &K::AvgDeltaProfile { exp_c }) => {
            let report = classes::avg_delta_curve(u, fam, &config.gamma_grid)?;
            let curve = report.curve.expect("avg_delta_curve returns a curve");
            let mut tightest: Option<(f64, f64, f64)> = None;
            for p in &curve.points {
                let bound = exp_c / (1.0 / (p[0] * exp_c)).ln_1p();
                if tightest.is_none_or(|(m, b, _)| bound - p[1] < b - m) {
                    tightest = Some((p[1], bound, p[0]));
                }
            }
            let (m, b, at) = tightest.expect("gamma grid is nonempty");
            (m, b, Some(at))
        }
        (EdgeId::T11, &K::StrombergWheeden { c, .. }) => (value(classes::sw_constant(u, fam, &config.s_grid)?), c, None),
        (EdgeId::T12, &K::Median { c }) => (value(classes::med_constant(u, fam)?), c, None),
        (EdgeId::T13, &K::Muckenhoupt { alpha, beta }) => (value(classes::am_value(u, fam, alpha)?), beta, None),
        (EdgeId::T14, &K::Ap { c, p }) => {
            let ps = u.with_transforms(&[Transform::ApDual(p)])?;
            (value(classes::ap_constant(&ps, fam, p)?), c, None)
        }
        (EdgeId::T15, &K::Doubling { c }) => (value(classes::doubling_constant(u, fam, WeightRole::Omega)?), c, None),
        (edge, t) => return Err(mismatch(edge, t)),
    })
}

/// Transfers the measured source constants along each edge and checks the
/// target condition on the sample.
pub fn verify_edges(views: &Views, sources: &SourceReports, config: &HarnessConfig, edges: &[EdgeId]) -> Result<Vec<EdgeVerdict>> {
    let mut missing: Vec<String> = edges
        .iter()
        .flat_map(|e| needs(*e).iter())
        .filter(|n| sources.get(n).is_none())
        .map(|n| n.to_string())
        .collect();
    missing.sort();
    missing.dedup();
    if !missing.is_empty() {
        return Err(Error::Dependency(missing));
    }
    let mut ordered = edges.to_vec();
    ordered.sort();
    ordered.dedup();
    ordered
        .into_iter()
        .map(|edge| {
            let source = source_constants(edge, sources, config);
            let mut verdict = EdgeVerdict {
                edge,
                source: source.clone(),
                transferred: None,
                target_measured: None,
                bound: None,
                at: None,
                status: VerdictStatus::Infeasible,
                slack: None,
                note: None,
            };
            if !source_is_finite(&source) {
                verdict.note = Some("source constant is not finite".into());
                return Ok(verdict);
            }
            let aux = sources.doubling_g.as_ref().map(ClassConstantReport::value_or_max);
            match transfer_constants(edge, &source, aux)? {
                TransferOutcome::Infeasible { reason } => verdict.note = Some(reason),
                TransferOutcome::Feasible { constants } => {
                    let (measured, bound, at) = measure_target(edge, &constants, views, config)?;
                    verdict.transferred = Some(constants);
                    verdict.target_measured = Some(measured);
                    verdict.bound = Some(bound);
                    verdict.at = at;
                    verdict.slack = Some(bound - measured);
                    verdict.status = if within_bound(measured, bound) {
                        VerdictStatus::Pass
                    } else {
                        VerdictStatus::Fail
                    };
                }
            }
            Ok(verdict)
        })
        .collect()
}

/// Measures sources and verifies the listed edges in one call.
pub fn verify_sample(sample: &OrbitSample, config: &HarnessConfig, edges: &[EdgeId]) -> Result<Vec<EdgeVerdict>> {
    let views = Views::new(sample, config)?;
    let sources = SourceReports::measure(&views, config, edges)?;
    verify_edges(&views, &sources, config, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassConstants as K;

    fn feasible_constants(edge: EdgeId, source: K) -> K {
        match transfer_constants(edge, &source, None).unwrap() {
            TransferOutcome::Feasible { constants } => constants,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_shape() {
        let g = proof_grid();
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(*g.last().unwrap() < 1.0);
    }

    #[test]
    fn rh_to_cf_keeps_constant() {
        let got = feasible_constants(EdgeId::T3, K::ReverseHolder { c: 1.1180, q: 2.0 });
        assert_eq!(got, K::CoifmanFefferman { c: 1.1180, eps: 0.5 });
    }

    #[test]
    fn am_to_avg_substitutes() {
        let got = feasible_constants(EdgeId::T6, K::Muckenhoupt { alpha: 0.5, beta: 0.5 });
        assert_eq!(got, K::AvgDelta { gamma: 0.5, delta: 0.5 });
    }

    #[test]
    fn rh_to_log_closed_form() {
        let got = feasible_constants(EdgeId::T7, K::ReverseHolder { c: 1.0, q: 2.0 });
        assert_eq!(got, K::Log { c: 8.0 });
    }

    #[test]
    fn lambda_to_rh_picks_largest_delta() {
        let got = feasible_constants(EdgeId::T2, K::Lambda { c: 2.0, beta: 0.5 });
        let K::ReverseHolder { c, q } = got else { panic!() };
        let d = q - 1.0;
        assert!(2.0 * d / ((1.0 + d) * 0.5f64.powf(1.0 + d)) < 0.5);
        assert_eq!(c, 2f64.powf(1.0 / q));
        let next = proof_grid().into_iter().find(|&x| x > d).unwrap();
        assert!(2.0 * next / ((1.0 + next) * 0.5f64.powf(1.0 + next)) >= 0.5);
    }

    #[test]
    fn infeasible_is_not_an_error() {
        let out = transfer_constants(EdgeId::T2, &K::Lambda { c: 1e300, beta: 1e-3 }, None).unwrap();
        assert!(matches!(out, TransferOutcome::Infeasible { .. }));
    }

    #[test]
    fn t1_needs_doubling() {
        let src = K::AvgDelta { gamma: 0.5, delta: 0.25 };
        assert!(matches!(transfer_constants(EdgeId::T1, &src, None), Err(Error::Dependency(_))));
        let got = transfer_constants(EdgeId::T1, &src, Some(3.0)).unwrap();
        assert_eq!(got, TransferOutcome::Feasible { constants: K::Lambda { c: 4.0, beta: 0.5 } });
    }

    #[test]
    fn mismatched_source_is_rejected() {
        assert!(transfer_constants(EdgeId::T3, &K::Exp { c: 2.0 }, None).is_err());
    }

    #[test]
    fn dual_rh_example() {
        let s = OrbitSample::new(vec![1.0, 4.0], vec![1.0, 1.0]).unwrap();
        let cfg = HarnessConfig::default();
        let views = Views::new(&s, &cfg).unwrap();
        let rh = classes::rh_constant(&views.dual, &views.family, 2.0).unwrap().value.unwrap();
        assert!((rh - 1.25).abs() < 1e-12, "{rh}");
        let v = verify_edges(&views, &SourceReports::measure(&views, &cfg, &[EdgeId::T14]).unwrap(), &cfg, &[EdgeId::T14]).unwrap();
        assert_eq!(v[0].status, VerdictStatus::Pass);
        assert!((v[0].target_measured.unwrap() - 1.5625).abs() < 1e-12);
        assert!((v[0].bound.unwrap() - 1.5625).abs() < 1e-12);
    }

    #[test]
    fn missing_sources_are_listed() {
        let s = OrbitSample::unweighted(vec![1.0, 2.0, 3.0]).unwrap();
        let cfg = HarnessConfig::default();
        let views = Views::new(&s, &cfg).unwrap();
        let err = verify_edges(&views, &SourceReports::default(), &cfg, &[EdgeId::T1, EdgeId::T9]).unwrap_err();
        match err {
            Error::Dependency(names) => assert_eq!(names, vec!["ap_unweighted", "delta", "doubling_g"]),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn constant_weight_passes_everything() {
        let s = OrbitSample::new(vec![2.0; 12], vec![1.0; 12]).unwrap();
        let v = verify_sample(&s, &HarnessConfig::default(), &EdgeId::ALL).unwrap();
        assert_eq!(v.len(), 15);
        for e in &v {
            assert_eq!(e.status, VerdictStatus::Pass, "{e:?}");
        }
    }
}
