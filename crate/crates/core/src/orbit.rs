//! Orbit samples `(omega_i, g_i) = (omega(T^i x), g(T^i x))`.
//!
//! The underlying space is `[0, 1)` and the canonical transformation is the
//! circle rotation `x -> frac(x + alpha)`. Explicit orbit points and explicit
//! index-wise weight values are also accepted.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::error::{Error, Result};

/// Largest denominator checked by the near-rational warning.
pub const NEAR_RATIONAL_MAX_DENOMINATOR: u32 = 64;
/// Distance to `p/q` below which a rotation angle is flagged.
pub const NEAR_RATIONAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransformationSpec {
    /// `x_i = frac(x0 + i * alpha)`.
    Rotation { alpha: f64 },
    /// User supplied orbit points `x_i` in `[0, 1)`; `x0` is ignored.
    ExplicitSequence { points: Vec<f64> },
}

impl TransformationSpec {
    pub fn rotation(alpha: f64) -> Self {
        TransformationSpec::Rotation { alpha }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TransformationSpec::Rotation { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::validation(
                        "alpha",
                        format!("rotation angle {alpha} must lie in (0, 1)"),
                    ));
                }
            }
            TransformationSpec::ExplicitSequence { points } => {
                if let Some((i, x)) = points
                    .iter()
                    .enumerate()
                    .find(|(_, x)| !(x.is_finite() && **x >= 0.0 && **x < 1.0))
                {
                    return Err(Error::validation(
                        "points",
                        format!("orbit point {i} = {x} must lie in [0, 1)"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Returns `(p, q)` with the smallest `q <= 64` such that `|alpha - p/q| < 1e-9`.
    pub fn near_rational(&self) -> Option<(u32, u32)> {
        let TransformationSpec::Rotation { alpha } = self else {
            return None;
        };
        (1..=NEAR_RATIONAL_MAX_DENOMINATOR).find_map(|q| {
            let p = (alpha * q as f64).round();
            ((alpha - p / q as f64).abs() < NEAR_RATIONAL_TOLERANCE).then_some((p as u32, q))
        })
    }

    fn point(&self, x0: f64, i: usize) -> f64 {
        match self {
            TransformationSpec::Rotation { alpha } => {
                // i * alpha is reduced first so large i keeps its precision.
                let step = (i as f64 * alpha).fract();
                let x = x0 + step;
                if x >= 1.0 {
                    x - 1.0
                } else {
                    x
                }
            }
            TransformationSpec::ExplicitSequence { points } => points[i],
        }
    }
}

/// A sub-interval `[start, end)` of `[0, 1)` carrying a constant weight value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    Constant { value: f64 },
    /// `|x - center|^exponent`, exponent > -1.
    Power { center: f64, exponent: f64 },
    /// Step function; the levels must tile `[0, 1)`.
    Piecewise { levels: Vec<Level> },
    /// Values indexed by orbit position rather than by point.
    Explicit { values: Vec<f64> },
}

impl WeightSpec {
    pub fn constant(value: f64) -> Self {
        WeightSpec::Constant { value }
    }

    pub fn power(center: f64, exponent: f64) -> Self {
        WeightSpec::Power { center, exponent }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        match self {
            WeightSpec::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(Error::validation(
                        format!("{name}.value"),
                        format!("constant {value} must be finite and > 0"),
                    ));
                }
            }
            WeightSpec::Power { center, exponent } => {
                if !center.is_finite() {
                    return Err(Error::validation(
                        format!("{name}.center"),
                        format!("center {center} must be finite"),
                    ));
                }
                if !(exponent.is_finite() && *exponent > -1.0) {
                    return Err(Error::validation(
                        format!("{name}.exponent"),
                        format!("exponent {exponent} must be > -1"),
                    ));
                }
            }
            WeightSpec::Piecewise { levels } => {
                if levels.is_empty() {
                    return Err(Error::validation(
                        format!("{name}.levels"),
                        "at least one level is required",
                    ));
                }
                let mut sorted: Vec<&Level> = levels.iter().collect();
                sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
                let mut cursor = 0.0;
                for level in sorted {
                    if !(level.value.is_finite() && level.value > 0.0) {
                        return Err(Error::validation(
                            format!("{name}.levels"),
                            format!("level value {} must be finite and > 0", level.value),
                        ));
                    }
                    if level.start != cursor || !(level.end > level.start) {
                        return Err(Error::validation(
                            format!("{name}.levels"),
                            format!(
                                "levels must tile [0, 1) without gaps or overlaps (at {})",
                                level.start
                            ),
                        ));
                    }
                    cursor = level.end;
                }
                if cursor != 1.0 {
                    return Err(Error::validation(
                        format!("{name}.levels"),
                        format!("levels end at {cursor}, not at 1"),
                    ));
                }
            }
            WeightSpec::Explicit { values } => {
                if let Some((i, v)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(v.is_finite() && **v > 0.0))
                {
                    return Err(Error::validation(
                        format!("{name}.values[{i}]"),
                        format!("explicit value {v} must be finite and > 0"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn eval(&self, x: f64, i: usize) -> f64 {
        match self {
            WeightSpec::Constant { value } => *value,
            WeightSpec::Power { center, exponent } => (x - center).abs().powf(*exponent),
            WeightSpec::Piecewise { levels } => levels
                .iter()
                .find(|l| l.start <= x && x < l.end)
                .map_or(f64::NAN, |l| l.value),
            WeightSpec::Explicit { values } => values[i],
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        match self {
            WeightSpec::Constant { value } => write!(f, "const:{value}"),
            WeightSpec::Power { center, exponent } => write!(f, "power:{center},{exponent}"),
            WeightSpec::Piecewise { levels } => {
                let parts: Vec<String> = levels
                    .iter()
                    .map(|l| format!("{}-{}={}", l.start, l.end, l.value))
                    .collect();
                write!(f, "piecewise:{}", parts.join(";"))
            }
            WeightSpec::Explicit { values } => write!(f, "explicit:{}", join(values)),
        }
    }
}

/// Parses `const:C`, `power:C0,A`, `piecewise:a-b=v;...` and `explicit:v0,v1,...`.
impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::validation("weight spec", reason);
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("{t:?} is not a number")))
        };
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("{s:?} has no kind prefix")))?;
        let spec = match kind.trim() {
            "const" | "constant" => WeightSpec::Constant { value: num(body)? },
            "power" => {
                let (c, a) = body
                    .split_once(',')
                    .ok_or_else(|| bad("power expects center,exponent".into()))?;
                WeightSpec::Power {
                    center: num(c)?,
                    exponent: num(a)?,
                }
            }
            "piecewise" => {
                let mut levels = Vec::new();
                for part in body.split(';').filter(|p| !p.trim().is_empty()) {
                    let (range, value) = part
                        .split_once('=')
                        .ok_or_else(|| bad(format!("level {part:?} expects a-b=v")))?;
                    let (a, b) = range
                        .split_once('-')
                        .ok_or_else(|| bad(format!("level {part:?} expects a-b=v")))?;
                    levels.push(Level {
                        start: num(a)?,
                        end: num(b)?,
                        value: num(value)?,
                    });
                }
                WeightSpec::Piecewise { levels }
            }
            "explicit" => WeightSpec::Explicit {
                values: body.split(',').map(num).collect::<Result<_>>()?,
            },
            other => return Err(bad(format!("unknown weight kind {other:?}"))),
        };
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum SampleMeta {
    Generated {
        transform: TransformationSpec,
        omega: WeightSpec,
        g: WeightSpec,
        x0: f64,
        n: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        warnings: Vec<String>,
    },
    File {
        path: PathBuf,
    },
    Inline,
}

/// Paired strictly positive sequences `omega` and `g` of equal length `N >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSample {
    omega: Vec<f64>,
    g: Vec<f64>,
    meta: SampleMeta,
}

impl OrbitSample {
    pub fn new(omega: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        Self::with_meta(omega, g, SampleMeta::Inline)
    }

    /// Sample with `g = 1` everywhere.
    pub fn unweighted(omega: Vec<f64>) -> Result<Self> {
        let g = vec![1.0; omega.len()];
        Self::new(omega, g)
    }

    pub fn with_meta(omega: Vec<f64>, g: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if omega.len() != g.len() {
            return Err(Error::LengthMismatch {
                omega: omega.len(),
                g: g.len(),
            });
        }
        if omega.is_empty() {
            return Err(Error::validation("sample", "N must be at least 1"));
        }
        for (name, values) in [("omega", &omega), ("g", &g)] {
            if let Some((row, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > 0.0))
            {
                return Err(Error::InvalidEntry {
                    row,
                    reason: format!("{name} = {v} must be finite and > 0"),
                });
            }
        }
        Ok(OrbitSample { omega, g, meta })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    pub fn warnings(&self) -> &[String] {
        match &self.meta {
            SampleMeta::Generated { warnings, .. } => warnings,
            _ => &[],
        }
    }

    /// Same omega with `g` replaced by ones.
    pub fn with_unit_g(&self) -> OrbitSample {
        OrbitSample {
            omega: self.omega.clone(),
            g: vec![1.0; self.len()],
            meta: self.meta.clone(),
        }
    }

    /// The pair `(omega^{-1}, omega)`: weight `1/omega` with reference weight `omega`.
    pub fn dual(&self) -> OrbitSample {
        OrbitSample {
            omega: self.omega.iter().map(|w| w.recip()).collect(),
            g: self.omega.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Rescales `g` so that its arithmetic mean is 1. `omega` is untouched.
    pub fn normalize_g(&self) -> OrbitSample {
        let mean = crate::dyadic::compensated_sum(self.g.iter().copied()) / self.len() as f64;
        let g = self.g.iter().map(|x| x / mean).collect();
        OrbitSample {
            omega: self.omega.clone(),
            g,
            meta: self.meta.clone(),
        }
    }

    pub fn save(&self, path: &Path, format: SampleFormat) -> Result<()> {
        let bytes = match format {
            SampleFormat::Json => self.to_json_bytes(),
            SampleFormat::Csv => self.to_csv_bytes()?,
        };
        Ok(canonical::write_atomic(path, &bytes)?)
    }

    pub fn load(path: &Path, format: SampleFormat) -> Result<OrbitSample> {
        let text = fs::read_to_string(path)?;
        let mut sample = match format {
            SampleFormat::Json => Self::from_json_str(&text),
            SampleFormat::Csv => Self::from_csv_str(&text),
        }
        .map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })?;
        sample.meta = SampleMeta::File {
            path: path.to_path_buf(),
        };
        Ok(sample)
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Doc<'a> {
            omega: &'a [f64],
            g: &'a [f64],
            meta: &'a SampleMeta,
        }
        canonical::to_json_bytes(&Doc {
            omega: &self.omega,
            g: &self.g,
            meta: &self.meta,
        })
    }

    pub fn from_json_str(text: &str) -> Result<OrbitSample> {
        #[derive(Deserialize)]
        struct Doc {
            omega: Vec<Option<f64>>,
            g: Vec<Option<f64>>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<json>"),
            reason: e.to_string(),
        })?;
        // JSON has no NaN/Inf literal; non-finite values arrive as null.
        let unwrap = |name: &str, v: Vec<Option<f64>>| -> Result<Vec<f64>> {
            v.into_iter()
                .enumerate()
                .map(|(row, x)| {
                    x.ok_or_else(|| Error::InvalidEntry {
                        row,
                        reason: format!("{name} is null or non-finite"),
                    })
                })
                .collect()
        };
        let omega = unwrap("omega", doc.omega)?;
        let g = unwrap("g", doc.g)?;
        OrbitSample::new(omega, g)
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["index", "omega", "g"])
            .map_err(csv_io)?;
        for (i, (w, g)) in self.omega.iter().zip(&self.g).enumerate() {
            // Display for f64 is the shortest exact round-trip decimal.
            writer
                .write_record([i.to_string(), w.to_string(), g.to_string()])
                .map_err(csv_io)?;
        }
        writer.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Row numbers in errors are 0-based data rows (the header is not counted).
    pub fn from_csv_str(text: &str) -> Result<OrbitSample> {
        let parse_err = |reason: String| Error::Parse {
            path: PathBuf::from("<csv>"),
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| parse_err(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["index", "omega", "g"] {
            return Err(parse_err(format!(
                "expected header index,omega,g, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut omega = Vec::new();
        let mut g = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| match e.kind() {
                csv::ErrorKind::UnequalLengths { .. } => Error::LengthMismatch {
                    omega: omega.len() + 1,
                    g: g.len(),
                },
                _ => parse_err(e.to_string()),
            })?;
            record[0].parse::<u64>().map_err(|_| Error::InvalidEntry {
                row,
                reason: format!("index {:?} is not an integer", &record[0]),
            })?;
            let field = |col: usize, name: &str| -> Result<f64> {
                let v: f64 = record[col].parse().map_err(|_| Error::InvalidEntry {
                    row,
                    reason: format!("{name} {:?} is not a number", &record[col]),
                })?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidEntry {
                        row,
                        reason: format!("{name} = {v} must be finite and > 0"),
                    });
                }
                Ok(v)
            };
            omega.push(field(1, "omega")?);
            g.push(field(2, "g")?);
        }
        OrbitSample::new(omega, g)
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    Csv,
    Json,
}

impl SampleFormat {
    /// Guesses the format from the file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> SampleFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SampleFormat::Csv,
            _ => SampleFormat::Json,
        }
    }
}

/// Evaluates `omega` and `g` along the orbit of `x0`.
pub fn sample_orbit(
    transform: &TransformationSpec,
    omega_spec: &WeightSpec,
    g_spec: &WeightSpec,
    x0: f64,
    n: usize,
) -> Result<OrbitSample> {
    if n == 0 {
        return Err(Error::validation("n", "N must be at least 1"));
    }
    if !(x0.is_finite() && (0.0..1.0).contains(&x0)) {
        return Err(Error::validation("x0", format!("start point {x0} must lie in [0, 1)")));
    }
    transform.validate()?;
    omega_spec.validate("omega")?;
    g_spec.validate("g")?;
    if let TransformationSpec::ExplicitSequence { points } = transform {
        if points.len() < n {
            return Err(Error::validation(
                "points",
                format!("{} orbit points supplied, {n} required", points.len()),
            ));
        }
    }
    for (name, spec) in [("omega", omega_spec), ("g", g_spec)] {
        if let WeightSpec::Explicit { values } = spec {
            if values.len() != n {
                return Err(Error::validation(
                    format!("{name}.values"),
                    format!("{} explicit values supplied for N = {n}", values.len()),
                ));
            }
        }
    }

    let mut warnings = Vec::new();
    if let Some((p, q)) = transform.near_rational() {
        warnings.push(format!(
            "rotation angle is within {NEAR_RATIONAL_TOLERANCE:e} of {p}/{q}; the orbit is nearly periodic"
        ));
    }

    let mut omega = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let x = transform.point(x0, i);
        for (spec, out) in [(omega_spec, &mut omega), (g_spec, &mut g)] {
            let v = spec.eval(x, i);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::SingularEvaluation { index: i, x, value: v });
            }
            out.push(v);
        }
    }
    OrbitSample::with_meta(
        omega,
        g,
        SampleMeta::Generated {
            transform: transform.clone(),
            omega: omega_spec.clone(),
            g: g_spec.clone(),
            x0,
            n,
            warnings,
        },
    )
}
