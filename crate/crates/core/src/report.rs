//! Analysis across classes, report assembly and curve export.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::classes::{self, ClassConstantReport, ClassId, WeightRole, WindowFamily, WindowMode};
use crate::dyadic::{GMode, PrefixSums, Transform};
use crate::error::{Error, Result};
use crate::harness::EdgeVerdict;
use crate::orbit::OrbitSample;

pub const TOOL: &str = "ainfty";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which reference weight the estimators use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GModeChoice {
    /// The sample's `g`, except for the classes only defined with `g = 1`.
    #[default]
    Auto,
    Weighted,
    Unweighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub eps: f64,
    pub s_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub mass_grid: Vec<f64>,
    pub windows: WindowMode,
    pub k_min: usize,
    /// `None` means the sample length.
    pub k_max: Option<usize>,
    pub g_mode: GModeChoice,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            p: 2.0,
            q: 2.0,
            beta: 0.5,
            eps: 0.5,
            s_grid: classes::DEFAULT_S_GRID.to_vec(),
            gamma_grid: classes::default_gamma_grid(),
            mass_grid: classes::default_gamma_grid(),
            windows: WindowMode::All,
            k_min: 1,
            k_max: None,
            g_mode: GModeChoice::Auto,
        }
    }
}

impl AnalysisParams {
    pub fn family(&self, n: usize) -> Result<WindowFamily> {
        let fam = WindowFamily::new(self.windows, self.k_min, self.k_max.unwrap_or(n));
        fam.validate(n)?;
        Ok(fam)
    }
}

fn unweighted_only(class: ClassId) -> bool {
    matches!(class, ClassId::Exp | ClassId::Sw | ClassId::Med)
}

/// Computes the requested class reports on `sample`.
pub fn analyze(sample: &OrbitSample, params: &AnalysisParams, which: &[ClassId]) -> Result<BTreeMap<ClassId, ClassConstantReport>> {
    let fam = params.family(sample.len())?;
    if params.g_mode == GModeChoice::Weighted {
        if let Some(c) = which.iter().find(|c| unweighted_only(**c)) {
            return Err(Error::UnsupportedMode(c.name()));
        }
    }
    let main_mode = match params.g_mode {
        GModeChoice::Unweighted => GMode::Unweighted,
        _ => GMode::Weighted,
    };
    let wants = |c: ClassId| which.contains(&c);
    let mut main_t = vec![Transform::Identity];
    if wants(ClassId::Ap) {
        main_t.push(Transform::ApDual(params.p));
    }
    if wants(ClassId::Rh) {
        main_t.push(Transform::Power(params.q));
    }
    let main = PrefixSums::build(sample, &main_t, main_mode)?;
    let unit = if which.iter().any(|c| unweighted_only(*c)) {
        let mut t = vec![Transform::Identity, Transform::Log];
        t.extend(params.s_grid.iter().map(|&s| Transform::PowerExcess(s)));
        Some(PrefixSums::build(sample, &t, GMode::Unweighted)?)
    } else {
        None
    };
    let mut out = BTreeMap::new();
    let mut classes_sorted = which.to_vec();
    classes_sorted.sort();
    classes_sorted.dedup();
    for class in classes_sorted {
        let u = || unit.as_ref().expect("unit-g prefix sums are built for unweighted classes");
        let report = match class {
            ClassId::Ap => classes::ap_constant(&main, &fam, params.p)?,
            ClassId::Rh => classes::rh_constant(&main, &fam, params.q)?,
            ClassId::Exp => classes::exp_constant(u(), &fam)?,
            ClassId::Sw => classes::sw_constant(u(), &fam, &params.s_grid)?,
            ClassId::Avg => classes::avg_delta_curve(&main, &fam, &params.gamma_grid)?,
            ClassId::Lambda => classes::lambda_constant(&main, &fam, params.beta)?,
            ClassId::Cf => classes::cf_constant(&main, &fam, params.eps)?,
            ClassId::Am => classes::am_curve(&main, &fam, &params.mass_grid)?,
            ClassId::Amhat => classes::amhat_curve(&main, &fam, &params.mass_grid)?,
            ClassId::Log => classes::log_constant(&main, &fam)?,
            ClassId::Med => classes::med_constant(u(), &fam)?,
            ClassId::DoublingG => classes::doubling_constant(&main, &fam, WeightRole::G)?,
            ClassId::DoublingOmega => classes::doubling_constant(&main, &fam, WeightRole::Omega)?,
        };
        out.insert(class, report);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Stats {
        Stats {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: crate::dyadic::compensated_sum(values.iter().copied()) / values.len() as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDigest {
    pub len: usize,
    pub omega: Stats,
    pub g: Stats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SampleDigest {
    pub fn of(sample: &OrbitSample) -> SampleDigest {
        SampleDigest {
            len: sample.len(),
            omega: Stats::of(sample.omega()),
            g: Stats::of(sample.g()),
            warnings: sample.warnings().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Output of `analyze` and `verify`. The config echo is whatever the caller
/// needs to rerun the command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub sample: SampleDigest,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub classes: BTreeMap<ClassId, ClassConstantReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<EdgeVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl AnalysisReport {
    pub fn new(command: &str, config: serde_json::Value, sample: &OrbitSample) -> Self {
        AnalysisReport {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            config,
            sample: SampleDigest::of(sample),
            classes: BTreeMap::new(),
            verdicts: Vec::new(),
            timing: None,
        }
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        canonical::to_json_bytes(self)
    }
}

/// Writes one two-column CSV per curve-valued class plus `index.json`
/// mapping class name to file name. Returns the files written; with no
/// curves present nothing is written.
pub fn emit_curves(report: &AnalysisReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let curves: Vec<_> = report
        .classes
        .iter()
        .filter_map(|(id, r)| r.curve.as_ref().map(|c| (*id, c)))
        .collect();
    if curves.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir)?;
    let mut index = BTreeMap::new();
    let mut written = Vec::new();
    for (id, curve) in curves {
        let (x, y) = curve.kind.labels();
        let mut text = format!("{x},{y}\n");
        for p in &curve.points {
            text.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        let name = format!("{}.csv", id.name());
        let path = dir.join(&name);
        canonical::write_atomic(&path, text.as_bytes())?;
        index.insert(id.name().to_string(), name);
        written.push(path);
    }
    let index_path = dir.join("index.json");
    canonical::write_atomic(&index_path, &canonical::to_json_bytes(&index))?;
    written.push(index_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_all_on_small_sample() {
        let s = OrbitSample::new(vec![1.0, 3.0, 2.0, 5.0], vec![1.0, 2.0, 1.0, 1.0]).unwrap();
        let r = analyze(&s, &AnalysisParams::default(), &ClassId::ALL).unwrap();
        assert_eq!(r.len(), ClassId::ALL.len());
        for (id, rep) in &r {
            if let Some(floor) = id.floor() {
                assert!(rep.value_or_max() >= floor, "{id}: {rep:?}");
            }
        }
    }

    #[test]
    fn weighted_mode_rejects_unweighted_classes() {
        let s = OrbitSample::unweighted(vec![1.0, 2.0]).unwrap();
        let params = AnalysisParams {
            g_mode: GModeChoice::Weighted,
            ..AnalysisParams::default()
        };
        assert!(matches!(analyze(&s, &params, &[ClassId::Exp]), Err(Error::UnsupportedMode("exp"))));
    }

    #[test]
    fn curves_for_constant_weight_and_421() {
        let dir = tempfile::tempdir().unwrap();
        let s = OrbitSample::unweighted(vec![3.0; 4]).unwrap();
        let mut report = AnalysisReport::new("analyze", serde_json::Value::Null, &s);
        report.classes = analyze(&s, &AnalysisParams::default(), &[ClassId::Avg, ClassId::Log]).unwrap();
        let files = emit_curves(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(dir.path().join("avg.csv")).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "gamma,delta");
        assert_eq!(rows.len(), 20);
        assert!(rows[1..].iter().all(|r| r.ends_with(",0")));
        let index: BTreeMap<String, String> =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("index.json")).unwrap()).unwrap();
        assert_eq!(index.keys().collect::<Vec<_>>(), vec!["avg"]);

        let s = OrbitSample::unweighted(vec![4.0, 2.0, 1.0]).unwrap();
        report.classes = analyze(&s, &AnalysisParams::default(), &[ClassId::Cf]).unwrap();
        emit_curves(&report, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("cf.csv")).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        let want = [[1.0 / 3.0, 4.0 / 7.0], [2.0 / 3.0, 6.0 / 7.0], [1.0, 1.0]];
        for (r, w) in rows.iter().zip(want) {
            assert!((r[0] - w[0]).abs() < 1e-15 && (r[1] - w[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn no_curves_is_a_no_op() {
        let dir = tempfile::tempdir().unwrap();
        let s = OrbitSample::unweighted(vec![1.0, 2.0]).unwrap();
        let mut report = AnalysisReport::new("analyze", serde_json::Value::Null, &s);
        report.classes = analyze(&s, &AnalysisParams::default(), &[ClassId::Log]).unwrap();
        assert!(emit_curves(&report, &dir.path().join("curves")).unwrap().is_empty());
        assert!(!dir.path().join("curves").exists());
    }
}
