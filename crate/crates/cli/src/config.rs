//! Experiment configuration and its validation.

use std::fmt;
use std::path::{Path, PathBuf};

use harmlab_core::analysis::{KernelSource, Thresholds};
use harmlab_core::domain::{make_domain, Domain, DomainSpec};
use harmlab_core::harmonic::{equal_arcs, validate_cells, Cell, WalkConfig};
use harmlab_core::{Ball, Point};
use serde::{Deserialize, Serialize};

/// One offending config field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn field(field: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Closed-form Poisson kernel (balls, half-spaces, wedges).
    #[default]
    Kernel,
    /// Walk-on-spheres exit points.
    Walks,
    /// `|∇h| dH^{n-1}` on the zero set of a polynomial domain.
    ZeroSet,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Poles {
    /// Interior pole; the domain default when absent.
    #[serde(default)]
    pub plus: Option<Vec<f64>>,
    /// Pole in the complement; its default when absent.
    #[serde(default)]
    pub minus: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSettings {
    pub n_walks: u64,
    #[serde(default)]
    pub epsilon_shell: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSpec {
    EqualArcs { center: Vec<f64>, radius: f64, count: usize },
    List(Vec<Cell>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRule {
    Explicit(Vec<Vec<f64>>),
    /// Boundary sample of `count` points in `B(center, radius)`.
    Sample { center: Vec<f64>, radius: f64, count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Analyses {
    pub lambda: bool,
    pub density: bool,
    pub flatness: bool,
    pub beurling: bool,
    pub gamma: bool,
    pub dimension: bool,
    pub theta: bool,
}

impl Default for Analyses {
    fn default() -> Self {
        Analyses {
            lambda: true,
            density: true,
            flatness: true,
            beurling: false,
            gamma: false,
            dimension: true,
            theta: false,
        }
    }
}

impl Analyses {
    fn two_sided(&self) -> bool {
        self.lambda || self.beurling || self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: PathBuf::from("harmlab-out"),
        }
    }
}

fn default_resolution() -> usize {
    400
}

fn default_beurling_factor() -> f64 {
    4.0
}

fn default_theta_points() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub domain: DomainSpec,
    #[serde(default)]
    pub poles: Poles,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub walks: Option<WalkSettings>,
    /// Cells for a harmonic-measure estimate table.
    #[serde(default)]
    pub cells: Option<CellSpec>,
    pub points: PointRule,
    /// Strictly decreasing radii.
    pub scales: Vec<f64>,
    #[serde(default)]
    pub analyses: Analyses,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_beurling_factor")]
    pub beurling_factor: f64,
    /// Atoms per local measure in blow-ups.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    #[serde(default)]
    pub output: Output,
    /// Master seed; required.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A validated config with everything resolved.
#[derive(Clone, Debug)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub domain: Domain,
    pub complement: Domain,
    pub pole_plus: Point,
    pub pole_minus: Option<Point>,
    pub walk_plus: Option<WalkConfig>,
    pub walk_minus: Option<WalkConfig>,
    pub cells: Vec<Cell>,
    pub points: Vec<Point>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Vec<FieldError>> {
        serde_json::from_str(text).map_err(|e| vec![field("<config>", e.to_string())])
    }

    pub fn load(path: &Path) -> Result<Self, Vec<FieldError>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![field("<config>", format!("{}: {e}", path.display()))])?;
        Self::from_json(&text)
    }

    /// Checks every field and resolves defaults; collects all problems
    /// instead of stopping at the first one.
    pub fn plan(&self) -> Result<Plan, Vec<FieldError>> {
        let mut errs = Vec::new();
        if self.seed.is_none() {
            errs.push(field("seed", "a master seed is required"));
        }
        if self.scales.is_empty() {
            errs.push(field("scales", "at least one scale is required"));
        } else if self.scales.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            errs.push(field("scales", "scales must be positive and finite"));
        } else if self.scales.windows(2).any(|w| w[1] >= w[0]) {
            errs.push(field("scales", "scale grid must be strictly decreasing"));
        }
        if self.resolution == 0 {
            errs.push(field("resolution", "must be positive"));
        }
        if self.theta_points == 0 {
            errs.push(field("theta_points", "must be positive"));
        }
        if !(self.beurling_factor >= 1.0) {
            errs.push(field("beurling_factor", "must be at least 1"));
        }
        check_output(&self.output.dir, &mut errs);
        let domain = match make_domain(&self.domain) {
            Ok(d) => d,
            Err(e) => {
                errs.push(field("domain", e.to_string()));
                return Err(errs);
            }
        };
        let dim = domain.dim();
        let complement = domain.complement();
        let seed = self.seed.unwrap_or(0);

        let point_of = |v: &[f64], name: &str, errs: &mut Vec<FieldError>| -> Option<Point> {
            if v.len() != dim || v.iter().any(|c| !c.is_finite()) {
                errs.push(field(name, format!("expected {dim} finite coordinates")));
                None
            } else {
                Some(Point::from_slice(v))
            }
        };
        let pole_plus = match &self.poles.plus {
            Some(v) => point_of(v, "poles.plus", &mut errs),
            None => domain.default_pole(),
        };
        let pole_plus = match pole_plus {
            Some(p) if domain.contains(&p) && domain.safe_distance(&p) > 0.0 => Some(p),
            Some(_) => {
                errs.push(field("poles.plus", "pole must lie strictly inside the domain"));
                None
            }
            None => {
                if self.poles.plus.is_none() {
                    errs.push(field("poles.plus", "domain has no default pole; give one"));
                }
                None
            }
        };
        let wants_minus = self.analyses.two_sided();
        let pole_minus = if wants_minus {
            let p = match &self.poles.minus {
                Some(v) => point_of(v, "poles.minus", &mut errs),
                None => complement.default_pole(),
            };
            match p {
                Some(p) if complement.contains(&p) && complement.safe_distance(&p) > 0.0 => Some(p),
                Some(_) => {
                    errs.push(field("poles.minus", "pole must lie strictly inside the complement"));
                    None
                }
                None => {
                    if self.poles.minus.is_none() {
                        errs.push(field("poles.minus", "complement has no default pole; give one"));
                    }
                    None
                }
            }
        } else {
            None
        };

        match self.estimator {
            Estimator::Kernel => {
                if let Some(p) = pole_plus {
                    if let Err(e) = KernelSource::new(domain.clone(), p) {
                        errs.push(field("estimator", format!("kernel estimator unavailable: {e}")));
                    }
                }
                if let Some(p) = pole_minus {
                    if let Err(e) = KernelSource::new(complement.clone(), p) {
                        errs.push(field("estimator", format!("kernel estimator unavailable on the complement: {e}")));
                    }
                }
            }
            Estimator::ZeroSet => {
                if !matches!(self.domain, DomainSpec::PolyZeroSet { .. }) {
                    errs.push(field("estimator", "zero_set needs a poly_zero_set domain"));
                }
            }
            Estimator::Walks => {}
        }
        let needs_walks = self.estimator == Estimator::Walks || self.cells.is_some();
        let walk_cfg = |pole_seed: u64| -> Result<Option<WalkConfig>, String> {
            match &self.walks {
                None if needs_walks => Err("walk settings are required for walk estimates".into()),
                None => Ok(None),
                Some(w) => {
                    let base = WalkConfig::for_domain(&domain, w.n_walks, pole_seed);
                    WalkConfig::new(
                        w.n_walks,
                        w.epsilon_shell.unwrap_or(base.epsilon_shell),
                        w.max_steps.unwrap_or(base.max_steps),
                        pole_seed,
                    )
                    .map(Some)
                    .map_err(|e| e.to_string())
                }
            }
        };
        let walk_plus = walk_cfg(seed).unwrap_or_else(|e| {
            errs.push(field("walks", e));
            None
        });
        let walk_minus = walk_plus.map(|c| WalkConfig {
            seed: harmlab_core::rng::mix64(seed.wrapping_add(1)),
            ..c
        });

        let cells = match &self.cells {
            None => Vec::new(),
            Some(CellSpec::EqualArcs { center, radius, count }) => {
                if dim != 2 {
                    errs.push(field("cells", "arcs need a planar domain"));
                    Vec::new()
                } else if *count == 0 || !(*radius > 0.0) {
                    errs.push(field("cells", "arc count and radius must be positive"));
                    Vec::new()
                } else {
                    point_of(center, "cells.center", &mut errs)
                        .map(|c| equal_arcs(c, *radius, *count))
                        .unwrap_or_default()
                }
            }
            Some(CellSpec::List(list)) => list.clone(),
        };
        if let Err(e) = validate_cells(&cells) {
            errs.push(field("cells", e.to_string()));
        }

        let points = match &self.points {
            PointRule::Explicit(list) => {
                if list.is_empty() {
                    errs.push(field("points", "no boundary points given"));
                }
                let tol = 1e-9 * domain.scale();
                list.iter()
                    .enumerate()
                    .filter_map(|(i, v)| {
                        let name = format!("points[{i}]");
                        let p = point_of(v, &name, &mut errs)?;
                        if domain.boundary_distance(&p) > tol {
                            errs.push(field(&name, "point is not on the boundary"));
                            return None;
                        }
                        Some(p)
                    })
                    .collect()
            }
            PointRule::Sample { center, radius, count } => {
                let c = point_of(center, "points.sample.center", &mut errs);
                match (c, Ball::new(c.unwrap_or(Point::ZERO), *radius)) {
                    (Some(_), Ok(ball)) if *count > 0 => {
                        match harmlab_core::domain::boundary_sample(&domain, &ball, *count, seed) {
                            Ok(s) => s.points,
                            Err(e) => {
                                errs.push(field("points.sample", e.to_string()));
                                Vec::new()
                            }
                        }
                    }
                    (Some(_), _) => {
                        errs.push(field("points.sample", "radius and count must be positive"));
                        Vec::new()
                    }
                    (None, _) => Vec::new(),
                }
            }
        };

        if !errs.is_empty() {
            return Err(errs);
        }
        Ok(Plan {
            config: self.clone(),
            seed,
            domain,
            complement,
            pole_plus: pole_plus.expect("checked above"),
            pole_minus,
            walk_plus,
            walk_minus,
            cells,
            points,
        })
    }
}

/// The output directory either exists as a writable directory or can be
/// created below a writable ancestor.
fn check_output(dir: &Path, errs: &mut Vec<FieldError>) {
    let mut p = dir.to_path_buf();
    loop {
        match std::fs::metadata(&p) {
            Ok(m) => {
                if !m.is_dir() {
                    errs.push(field("output.dir", format!("{} is not a directory", p.display())));
                } else if m.permissions().readonly() {
                    errs.push(field("output.dir", format!("{} is not writable", p.display())));
                }
                return;
            }
            Err(_) => {
                if !p.pop() || p.as_os_str().is_empty() {
                    return;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "domain": {"kind": "ball", "params": {"center": [0.0, 0.0], "radius": 1.0}},
            "points": {"explicit": [[1.0, 0.0]]},
            "scales": [0.5, 0.25, 0.125, 0.0625],
            "seed": 1
        })
    }

    fn plan(v: serde_json::Value) -> Result<Plan, Vec<FieldError>> {
        ExperimentConfig::from_json(&v.to_string())?.plan()
    }

    #[test]
    fn minimal_config_resolves() {
        let p = plan(base()).unwrap();
        assert_eq!(p.pole_plus, Point::ZERO);
        assert_eq!(p.pole_minus, Some(Point::new2(0.0, 2.0)));
        assert_eq!(p.points.len(), 1);
    }

    #[test]
    fn increasing_scales_named() {
        let mut v = base();
        v["scales"] = serde_json::json!([0.1, 0.2, 0.3, 0.4]);
        let errs = plan(v).unwrap_err();
        assert!(errs.iter().any(|e| e.field == "scales"), "{errs:?}");
    }

    #[test]
    fn all_problems_reported() {
        let mut v = base();
        v.as_object_mut().unwrap().remove("seed");
        v["points"] = serde_json::json!({"explicit": [[0.5, 0.0]]});
        v["estimator"] = serde_json::json!("walks");
        let errs = plan(v).unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert!(fields.contains(&"seed") && fields.contains(&"points[0]") && fields.contains(&"walks"), "{fields:?}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v = base();
        v["sedd"] = serde_json::json!(3);
        assert!(plan(v).is_err());
    }

    #[test]
    fn kernel_needs_an_oracle_domain() {
        let mut v = base();
        v["domain"] = serde_json::json!({"kind": "koch_snowflake", "params": {"level": 2}});
        v["points"] = serde_json::json!({"sample": {"center": [0.0, 0.577350269189626], "radius": 0.3, "count": 3}});
        let errs = plan(v).unwrap_err();
        assert!(errs.iter().any(|e| e.field == "estimator"), "{errs:?}");
    }
}
