//! Scenario ingestion, execution and result emission.
//!
//! Scenario files are JSON documents describing slice bases, stage maps
//! (explicit matrices or named gates), pre/postselected amplitudes and probe
//! placements; complex numbers are always two-element `[re, im]` arrays.
//! The two builtin scenarios can be requested by name, either from the
//! `builtin` key of a file or directly. Results come back as one row per
//! probe (and per coupling value when sweeping), sorted by probe label and
//! coupling so the emitted CSV is byte-stable regardless of evaluation
//! order.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Basis, BasisLabel, Ket, LinOp, StageSequence};
use crate::pointer::GaussianBase;
use crate::protocol::{run_coupled, weak_value, Mode, Probe, Regime};
use crate::scenario::{NamedProbe, Scenario};
use crate::setups;

/// Names accepted by [`builtin_scenario`] and the `builtin` file key.
pub const BUILTINS: [&str; 2] = ["three-path", "nested-mzi"];

/// Build a named builtin scenario. The three-path scenario is solved at the
/// angles that make the open-arm weak values exactly +1 and -1.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    match name {
        "three-path" => {
            let (alpha, phi) = setups::solve_unit_weak_values()?;
            Ok(
                setups::build_three_path(alpha, phi, &setups::RegionOverlaps::full())?
                    .into_scenario(),
            )
        }
        "nested-mzi" => Ok(setups::build_nested_mzi()?.into_scenario()),
        other => Err(Error::Parse {
            key: "builtin".into(),
            reason: format!("unknown builtin '{other}' (expected one of {BUILTINS:?})"),
        }),
    }
}

// ---------------------------------------------------------------------------
// scenario files
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub paths: Vec<String>,
    pub spins: SpinSpec,
}

/// Either the string "none" or an explicit list of spin projections.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpinSpec {
    None(String),
    Values(Vec<i8>),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub slice: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Detection-efficiency factor scaling a region projector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
}

/// On-disk scenario description. `builtin`, when present, overrides every
/// other key.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slices: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preselect: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<ProbeSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub postselect: Option<BTreeMap<String, serde_json::Value>>,
}

fn label_to_string(l: &BasisLabel) -> String {
    match l.spin {
        None => l.path.clone(),
        Some(s) => format!("{}:{s:+}", l.path),
    }
}

fn parse_label(s: &str, key: &str) -> Result<BasisLabel> {
    match s.rsplit_once(':') {
        None => Ok(BasisLabel::path(s)),
        Some((path, spin)) => {
            let spin: i8 = spin.parse().map_err(|_| Error::Parse {
                key: key.to_string(),
                reason: format!("label '{s}' has a malformed spin tag"),
            })?;
            BasisLabel::with_spin(path, spin).map_err(|e| Error::Parse {
                key: key.to_string(),
                reason: e.to_string(),
            })
        }
    }
}

fn parse_amplitude(v: &serde_json::Value, key: &str) -> Result<Complex64> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Parse {
            key: key.to_string(),
            reason: "amplitude must be a two-element [re, im] array".into(),
        })?;
    let num = |x: &serde_json::Value| -> Result<f64> {
        x.as_f64().ok_or_else(|| Error::Parse {
            key: key.to_string(),
            reason: "amplitude components must be finite numbers".into(),
        })
    };
    Ok(Complex64::new(num(&arr[0])?, num(&arr[1])?))
}

fn parse_matrix(
    rows: &[Vec<[f64; 2]>],
    nrows: usize,
    ncols: usize,
    key: &str,
) -> Result<DMatrix<Complex64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse {
            key: key.to_string(),
            reason: format!("matrix must be {nrows}x{ncols}"),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn ket_from_map(
    basis: &std::sync::Arc<Basis>,
    map: &BTreeMap<String, serde_json::Value>,
    key: &str,
) -> Result<Ket> {
    let mut entries = Vec::with_capacity(map.len());
    for (name, value) in map {
        let entry_key = format!("{key}.{name}");
        let label = parse_label(name, &entry_key)?;
        if !basis.contains(&label) {
            return Err(Error::Validation {
                key: entry_key,
                reason: "label not present on that slice".into(),
            });
        }
        entries.push((label, parse_amplitude(value, &entry_key)?));
    }
    Ket::from_map(basis.clone(), &entries).map_err(|e| Error::Validation {
        key: key.to_string(),
        reason: e.to_string(),
    })
}

/// 50/50 beamsplitter convention: straight-through amplitude `1/sqrt(2)`,
/// reflected amplitude `i/sqrt(2)`.
fn bs50_stage(
    current: &std::sync::Arc<Basis>,
    next: &std::sync::Arc<Basis>,
    from: &[String],
    to: &[String],
    key: &str,
) -> Result<DMatrix<Complex64>> {
    if from.is_empty() || from.len() > 2 || to.len() != 2 {
        return Err(Error::Parse {
            key: key.into(),
            reason: "bs50 needs one or two 'from' paths and exactly two 'to' paths".into(),
        });
    }
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ir = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let mut mat = DMatrix::zeros(next.dim(), current.dim());
    let mut involved = vec![false; current.dim()];
    for (j, l) in current.labels().iter().enumerate() {
        let Some(pos) = from.iter().position(|p| *p == l.path) else {
            continue;
        };
        involved[j] = true;
        let mut out = |path: &str, amp: Complex64| -> Result<()> {
            let mut target = l.clone();
            target.path = path.to_string();
            let i = next.index_of(&target).ok_or_else(|| Error::Validation {
                key: key.into(),
                reason: format!("bs50 output label '{target}' missing on the next slice"),
            })?;
            mat[(i, j)] += amp;
            Ok(())
        };
        match pos {
            0 => {
                out(&to[0], r)?;
                out(&to[1], ir)?;
            }
            _ => {
                out(&to[0], ir)?;
                out(&to[1], r)?;
            }
        }
    }
    if !involved.iter().any(|&x| x) {
        return Err(Error::Validation {
            key: key.into(),
            reason: "bs50 'from' paths not present on the current slice".into(),
        });
    }
    fill_identity_for_uninvolved(&mut mat, current, next, &involved, key)?;
    Ok(mat)
}

fn merge_stage(
    current: &std::sync::Arc<Basis>,
    next: &std::sync::Arc<Basis>,
    from: &[String],
    to: &[String],
    key: &str,
) -> Result<DMatrix<Complex64>> {
    if from.len() < 2 || to.len() != 1 {
        return Err(Error::Parse {
            key: key.into(),
            reason: "merge needs at least two 'from' paths and one 'to' path".into(),
        });
    }
    let mut mat = DMatrix::zeros(next.dim(), current.dim());
    let mut involved = vec![false; current.dim()];
    let mut used_targets = vec![false; next.dim()];
    for (j, l) in current.labels().iter().enumerate() {
        if !from.contains(&l.path) {
            continue;
        }
        involved[j] = true;
        let mut target = l.clone();
        target.path = to[0].clone();
        let i = next.index_of(&target).ok_or_else(|| Error::Validation {
            key: key.into(),
            reason: format!("merge target label '{target}' missing on the next slice"),
        })?;
        if used_targets[i] {
            return Err(Error::Validation {
                key: key.into(),
                reason: format!(
                    "merge would map two arms onto '{target}'; merged arms must carry \
                     distinguishable spin tags"
                ),
            });
        }
        used_targets[i] = true;
        mat[(i, j)] = Complex64::new(1.0, 0.0);
    }
    if !involved.iter().any(|&x| x) {
        return Err(Error::Validation {
            key: key.into(),
            reason: "merge 'from' paths not present on the current slice".into(),
        });
    }
    fill_identity_for_uninvolved(&mut mat, current, next, &involved, key)?;
    Ok(mat)
}

fn wigner_stage(
    current: &std::sync::Arc<Basis>,
    next: &std::sync::Arc<Basis>,
    beta: f64,
    key: &str,
) -> Result<DMatrix<Complex64>> {
    if current != next {
        return Err(Error::Validation {
            key: key.into(),
            reason: "spin rotations require identical bases on both slices".into(),
        });
    }
    let d = setups::wigner_d1(beta);
    let mut mat = DMatrix::zeros(next.dim(), current.dim());
    for (j, l) in current.labels().iter().enumerate() {
        let Some(spin) = l.spin else {
            return Err(Error::Validation {
                key: key.into(),
                reason: format!("label '{l}' has no spin to rotate"),
            });
        };
        for m in [1i8, 0, -1] {
            let mut target = l.clone();
            target.spin = Some(m);
            let i = next.index_of(&target).ok_or_else(|| Error::Validation {
                key: key.into(),
                reason: format!(
                    "spin rotation needs the full spin triplet on path '{}'",
                    l.path
                ),
            })?;
            mat[(i, j)] = Complex64::new(d.element(m, spin), 0.0);
        }
    }
    Ok(mat)
}

fn phase_stage(
    current: &std::sync::Arc<Basis>,
    next: &std::sync::Arc<Basis>,
    theta: f64,
    paths: &[String],
    key: &str,
) -> Result<DMatrix<Complex64>> {
    if current != next {
        return Err(Error::Validation {
            key: key.into(),
            reason: "phase plates require identical bases on both slices".into(),
        });
    }
    if paths.is_empty() {
        return Err(Error::Parse {
            key: key.into(),
            reason: "phase gate needs a nonempty 'paths' list".into(),
        });
    }
    let phase = Complex64::from_polar(1.0, theta);
    let mut mat = DMatrix::identity(current.dim(), current.dim());
    let mut hit = false;
    for (j, l) in current.labels().iter().enumerate() {
        if paths.contains(&l.path) {
            mat[(j, j)] = phase;
            hit = true;
        }
    }
    if !hit {
        return Err(Error::Validation {
            key: key.into(),
            reason: "phase 'paths' not present on the slice".into(),
        });
    }
    Ok(mat)
}

fn fill_identity_for_uninvolved(
    mat: &mut DMatrix<Complex64>,
    current: &std::sync::Arc<Basis>,
    next: &std::sync::Arc<Basis>,
    involved: &[bool],
    key: &str,
) -> Result<()> {
    for (j, l) in current.labels().iter().enumerate() {
        if involved[j] {
            continue;
        }
        let i = next.index_of(l).ok_or_else(|| Error::Validation {
            key: key.into(),
            reason: format!("uninvolved label '{l}' must persist onto the next slice"),
        })?;
        mat[(i, j)] = Complex64::new(1.0, 0.0);
    }
    Ok(())
}

fn stage_from_spec(
    spec: &StageSpec,
    current: &std::sync::Arc<Basis>,
    next: &std::sync::Arc<Basis>,
    index: usize,
) -> Result<LinOp> {
    let key = format!("stages[{index}]");
    let mat = match (&spec.matrix, &spec.gate) {
        (Some(rows), None) => parse_matrix(rows, next.dim(), current.dim(), &key)?,
        (None, Some(gate)) => {
            let (name, param) = match gate.split_once(':') {
                Some((n, p)) => (n, Some(p)),
                None => (gate.as_str(), None),
            };
            let parse_param = |p: Option<&str>| -> Result<f64> {
                p.ok_or_else(|| Error::Parse {
                    key: key.clone(),
                    reason: format!("gate '{name}' needs a numeric parameter"),
                })?
                .parse()
                .map_err(|_| Error::Parse {
                    key: key.clone(),
                    reason: format!("gate parameter in '{gate}' is not a number"),
                })
            };
            let empty = Vec::new();
            let from = spec.from.as_ref().unwrap_or(&empty);
            let to = spec.to.as_ref().unwrap_or(&empty);
            let paths = spec.paths.as_ref().unwrap_or(&empty);
            match name {
                "bs50" => bs50_stage(current, next, from, to, &key)?,
                "merge" => merge_stage(current, next, from, to, &key)?,
                "wigner_d1" => wigner_stage(current, next, parse_param(param)?, &key)?,
                "phase" => phase_stage(current, next, parse_param(param)?, paths, &key)?,
                other => {
                    return Err(Error::Parse {
                        key,
                        reason: format!("unknown gate '{other}'"),
                    })
                }
            }
        }
        _ => {
            return Err(Error::Parse {
                key,
                reason: "stage needs exactly one of 'matrix' or 'gate'".into(),
            })
        }
    };
    LinOp::from_matrix(current.clone(), next.clone(), mat)
}

/// Assemble a scenario from a parsed file.
pub fn scenario_from_spec(file: &ScenarioFile) -> Result<Scenario> {
    if let Some(name) = &file.builtin {
        return builtin_scenario(name);
    }
    let stages = file.stages.as_ref().ok_or_else(|| Error::Parse {
        key: "stages".into(),
        reason: "missing".into(),
    })?;

    // slice bases, either explicit or the full product on every slice
    let slice_bases: Vec<std::sync::Arc<Basis>> = if let Some(slices) = &file.slices {
        if slices.len() != stages.len() + 1 {
            return Err(Error::Validation {
                key: "slices".into(),
                reason: format!(
                    "{} slices for {} stages (need stages + 1)",
                    slices.len(),
                    stages.len()
                ),
            });
        }
        slices
            .iter()
            .enumerate()
            .map(|(i, labels)| {
                let key = format!("slices[{i}]");
                let parsed: Vec<BasisLabel> = labels
                    .iter()
                    .map(|s| parse_label(s, &key))
                    .collect::<Result<_>>()?;
                Basis::new(parsed).map_err(|e| Error::Validation {
                    key,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<_>>()?
    } else {
        let spec = file.basis.as_ref().ok_or_else(|| Error::Parse {
            key: "basis".into(),
            reason: "need either 'basis' or 'slices'".into(),
        })?;
        let basis = match &spec.spins {
            SpinSpec::None(word) if word == "none" => Basis::spatial(&spec.paths),
            SpinSpec::None(word) => {
                return Err(Error::Parse {
                    key: "basis.spins".into(),
                    reason: format!("expected \"none\" or a list of spins, got '{word}'"),
                })
            }
            SpinSpec::Values(spins) => Basis::product(&spec.paths, spins),
        }
        .map_err(|e| Error::Validation {
            key: "basis".into(),
            reason: e.to_string(),
        })?;
        vec![basis; stages.len() + 1]
    };

    let mut seq = StageSequence::new(slice_bases[0].clone());
    for (i, spec) in stages.iter().enumerate() {
        let op = stage_from_spec(spec, &slice_bases[i], &slice_bases[i + 1], i)?;
        seq.push_stage(op)?;
    }

    let pre_map = file.preselect.as_ref().ok_or_else(|| Error::Parse {
        key: "preselect".into(),
        reason: "missing".into(),
    })?;
    let post_map = file.postselect.as_ref().ok_or_else(|| Error::Parse {
        key: "postselect".into(),
        reason: "missing".into(),
    })?;
    let preselect = ket_from_map(&slice_bases[0], pre_map, "preselect")?;
    let postselect = ket_from_map(slice_bases.last().unwrap(), post_map, "postselect")?;

    let mut probes = Vec::new();
    for (i, spec) in file.probes.as_deref().unwrap_or(&[]).iter().enumerate() {
        let key = format!("probes[{i}]");
        let basis = seq.basis(spec.slice).map_err(|_| Error::Validation {
            key: key.clone(),
            reason: format!("slice {} out of range", spec.slice),
        })?;
        let observable = match (&spec.region, &spec.observable) {
            (Some(region), None) => {
                let projector = LinOp::path_projector(basis.clone(), region).map_err(|e| {
                    Error::Validation {
                        key: key.clone(),
                        reason: e.to_string(),
                    }
                })?;
                let factor = spec.overlap.unwrap_or(1.0);
                if !(0.0..=1.0).contains(&factor) {
                    return Err(Error::Validation {
                        key: format!("{key}.overlap"),
                        reason: format!("factor {factor} outside [0, 1]"),
                    });
                }
                projector.scaled(Complex64::new(factor, 0.0))
            }
            (None, Some(rows)) => {
                let mat =
                    parse_matrix(rows, basis.dim(), basis.dim(), &format!("{key}.observable"))?;
                LinOp::square(basis.clone(), mat)?
            }
            _ => {
                return Err(Error::Parse {
                    key,
                    reason: "probe needs exactly one of 'region' or 'observable'".into(),
                })
            }
        };
        let sigma = spec.sigma.unwrap_or(setups::DEFAULT_POINTER_SIGMA);
        let pointer = GaussianBase::new(sigma).map_err(|e| Error::Validation {
            key: format!("{key}.sigma"),
            reason: e.to_string(),
        })?;
        let label = spec.label.clone().unwrap_or_else(|| match &spec.region {
            Some(region) => format!("t{}:{}", spec.slice, region),
            None => format!("t{}:probe{}", spec.slice, i),
        });
        probes.push(NamedProbe {
            label,
            probe: Probe {
                slice: spec.slice,
                observable,
                pointer,
                g: spec.g.unwrap_or(setups::DEFAULT_PROBE_G),
            },
        });
    }

    Scenario::new("file", seq, preselect, postselect, probes)
}

/// Load and validate a scenario file from disk.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        key: path.display().to_string(),
        reason: e.to_string(),
    })?;
    scenario_from_spec(&file)
}

/// Serialize a scenario into the explicit file form (slices, stage matrices,
/// amplitude maps, probe observables). Reloading the emitted document yields
/// a scenario with identical results.
pub fn emit_scenario(scenario: &Scenario) -> ScenarioFile {
    let seq = scenario.sequence();
    let slices: Vec<Vec<String>> = (0..seq.n_slices())
        .map(|s| {
            seq.basis(s)
                .unwrap()
                .labels()
                .iter()
                .map(label_to_string)
                .collect()
        })
        .collect();
    let stages: Vec<StageSpec> = seq
        .stages()
        .iter()
        .map(|op| {
            let m = op.matrix();
            let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| [m[(i, j)].re, m[(i, j)].im])
                        .collect()
                })
                .collect();
            StageSpec {
                matrix: Some(rows),
                ..StageSpec::default()
            }
        })
        .collect();
    let ket_map = |k: &Ket| -> BTreeMap<String, serde_json::Value> {
        k.basis()
            .labels()
            .iter()
            .filter_map(|l| {
                let a = k.amplitude(l).unwrap();
                if a == Complex64::new(0.0, 0.0) {
                    None
                } else {
                    Some((label_to_string(l), serde_json::json!([a.re, a.im])))
                }
            })
            .collect()
    };
    let probes: Vec<ProbeSpec> = scenario
        .probes()
        .iter()
        .map(|np| {
            let m = np.probe.observable.matrix();
            let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| [m[(i, j)].re, m[(i, j)].im])
                        .collect()
                })
                .collect();
            ProbeSpec {
                label: Some(np.label.clone()),
                slice: np.probe.slice,
                region: None,
                observable: Some(rows),
                sigma: Some(np.probe.pointer.sigma()),
                g: Some(np.probe.g),
                overlap: None,
            }
        })
        .collect();
    ScenarioFile {
        builtin: None,
        basis: None,
        slices: Some(slices),
        preselect: Some(ket_map(scenario.preselect())),
        stages: Some(stages),
        probes: Some(probes),
        postselect: Some(ket_map(scenario.postselect())),
    }
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

/// Coupling strengths to evaluate per probe.
#[derive(Clone, Copy, Debug)]
pub enum Coupling {
    /// Use each probe's own g.
    PerProbe,
    /// Override every probe with one g.
    Fixed(f64),
    /// Log-spaced sweep from min to max with n points.
    Sweep { min: f64, max: f64, n: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct RunFlags {
    pub analytic: bool,
    pub mode: Mode,
    pub coupling: Coupling,
}

impl Default for RunFlags {
    fn default() -> Self {
        Self {
            analytic: false,
            mode: Mode::Exact,
            coupling: Coupling::PerProbe,
        }
    }
}

/// One evaluated probe at one coupling value.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRow {
    pub probe: String,
    pub slice: usize,
    pub g: f64,
    pub weak_value: Option<[f64; 2]>,
    pub shift: Option<f64>,
    pub prob: f64,
    pub regime: String,
    pub initial_fidelity: Option<f64>,
}

/// A probe whose evaluation failed; other rows are unaffected.
#[derive(Clone, Debug, Serialize)]
pub struct RowError {
    pub probe: String,
    pub g: f64,
    pub error: String,
}

fn sweep_values(c: Coupling, probe_g: f64) -> Result<Vec<f64>> {
    match c {
        Coupling::PerProbe => Ok(vec![probe_g]),
        Coupling::Fixed(g) => Ok(vec![g]),
        Coupling::Sweep { min, max, n } => {
            if !min.is_finite() || !max.is_finite() || min <= 0.0 || max < min || n == 0 {
                return Err(Error::Domain(format!(
                    "sweep needs 0 < min <= max and n >= 1, got [{min}, {max}] x {n}"
                )));
            }
            if n == 1 {
                return Ok(vec![min]);
            }
            let ratio = max / min;
            Ok((0..n)
                .map(|i| min * ratio.powf(i as f64 / (n - 1) as f64))
                .collect())
        }
    }
}

fn evaluate(
    scenario: &Scenario,
    np: &NamedProbe,
    g: f64,
    flags: &RunFlags,
) -> std::result::Result<ResultRow, RowError> {
    let fail = |e: Error| RowError {
        probe: np.label.clone(),
        g,
        error: e.to_string(),
    };
    if flags.analytic {
        let wv = weak_value(scenario, &np.probe.observable, np.probe.slice).map_err(fail)?;
        let overlap = scenario.selection_overlap(np.probe.slice).map_err(fail)?;
        return Ok(ResultRow {
            probe: np.label.clone(),
            slice: np.probe.slice,
            g,
            weak_value: Some([wv.re, wv.im]),
            shift: Some(g * wv.re),
            prob: overlap.norm_sqr(),
            regime: Regime::Analytic.to_string(),
            initial_fidelity: None,
        });
    }
    let probe = Probe {
        g,
        ..np.probe.clone()
    };
    let report = run_coupled(scenario, &probe, flags.mode).map_err(fail)?;
    Ok(ResultRow {
        probe: np.label.clone(),
        slice: np.probe.slice,
        g,
        weak_value: report.weak_value.map(|w| [w.re, w.im]),
        shift: report.pointer_shift,
        prob: report.postselect_prob,
        regime: report.regime.to_string(),
        initial_fidelity: report.initial_fidelity,
    })
}

/// Run every probe of the scenario at the requested couplings. Rows are
/// evaluated in parallel and returned sorted by (probe label, g); failures
/// are collected per row instead of aborting the run.
pub fn run_scenario(
    scenario: &Scenario,
    flags: &RunFlags,
) -> Result<(Vec<ResultRow>, Vec<RowError>)> {
    let mut tasks = Vec::new();
    for np in scenario.probes() {
        for g in sweep_values(flags.coupling, np.probe.g)? {
            tasks.push((np, g));
        }
    }
    let outcomes: Vec<_> = tasks
        .par_iter()
        .map(|(np, g)| evaluate(scenario, np, *g, flags))
        .collect();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for out in outcomes {
        match out {
            Ok(r) => rows.push(r),
            Err(e) => errors.push(e),
        }
    }
    rows.sort_by(|a, b| a.probe.cmp(&b.probe).then(a.g.total_cmp(&b.g)));
    errors.sort_by(|a, b| a.probe.cmp(&b.probe).then(a.g.total_cmp(&b.g)));
    Ok((rows, errors))
}

// ---------------------------------------------------------------------------
// emission
// ---------------------------------------------------------------------------

/// 12 significant digits, locale-independent, with negative zero folded.
fn fmt_sig12(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => fmt_sig12(v),
        None => "undefined".into(),
    }
}

pub const CSV_HEADER: &str = "probe,slice,wv_re,wv_im,shift,prob,regime";

/// Deterministic CSV: fixed header, 12 significant digits, `\n` endings.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.probe,
            r.slice,
            fmt_opt(r.weak_value.map(|w| w[0])),
            fmt_opt(r.weak_value.map(|w| w[1])),
            fmt_opt(r.shift),
            fmt_sig12(r.prob),
            r.regime,
        ));
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    scenario: &'a str,
    rows: &'a [ResultRow],
    errors: &'a [RowError],
}

/// Structured mirror of the CSV, including per-row coupling and fidelity.
pub fn rows_to_json(scenario_name: &str, rows: &[ResultRow], errors: &[RowError]) -> String {
    let report = JsonReport {
        scenario: scenario_name,
        rows,
        errors,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serialization");
    s.push('\n');
    s
}
