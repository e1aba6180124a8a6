//! Staged execution of an experiment and its manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use harmlab_core::analysis::{
    beurling_check, classify_batch, gamma_profile, local_dimension, records_to_csv, theta_density, ClassifyOptions,
    GammaInputs, GreenField, KernelSource, MeasureSource, PolynomialPart, PotentialField, QuadSpec, WalkSource,
    ZeroSetSource, LOST_MASS_LIMIT,
};
use harmlab_core::domain::{boundary_sample, DomainSpec};
use harmlab_core::harmonic::wos_measure;
use harmlab_core::Ball;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Estimator, ExperimentConfig, Plan};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub name: String,
    pub config_sha256: String,
    pub seed: u64,
    pub seconds: f64,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<OutputEntry>,
    /// Every stage succeeded.
    pub complete: bool,
}

impl RunManifest {
    pub fn warnings(&self) -> impl Iterator<Item = (&str, &str)> {
        self.stages
            .iter()
            .flat_map(|s| s.warnings.iter().map(move |w| (s.name.as_str(), w.as_str())))
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest round-trip form of a float, empty for non-finite values.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("outputs serialize");
    s.push(b'\n');
    s
}

type Files = Vec<(String, Vec<u8>)>;

struct Context<'a> {
    plan: &'a Plan,
    plus: Box<dyn MeasureSource>,
    minus: Option<Box<dyn MeasureSource>>,
}

fn sources(plan: &Plan) -> Result<(Box<dyn MeasureSource>, Option<Box<dyn MeasureSource>>, Vec<String>), CliError> {
    let mut warnings = Vec::new();
    let plus: Box<dyn MeasureSource> = match plan.config.estimator {
        Estimator::Kernel => Box::new(KernelSource::new(plan.domain.clone(), plan.pole_plus)?),
        Estimator::ZeroSet => Box::new(ZeroSetSource::new(zero_set_poly(&plan.config.domain))),
        Estimator::Walks => Box::new(WalkSource::new(
            &plan.domain,
            &plan.pole_plus,
            plan.walk_plus.as_ref().expect("validated"),
        )?),
    };
    let minus: Option<Box<dyn MeasureSource>> = match plan.pole_minus {
        None => None,
        Some(pm) => Some(match plan.config.estimator {
            Estimator::Kernel => Box::new(KernelSource::new(plan.complement.clone(), pm)?),
            Estimator::ZeroSet => Box::new(ZeroSetSource::new(zero_set_poly(&plan.config.domain))),
            Estimator::Walks => Box::new(WalkSource::new(
                &plan.complement,
                &pm,
                plan.walk_minus.as_ref().expect("validated"),
            )?),
        }),
    };
    for (side, s) in [("plus", Some(&plus)), ("minus", minus.as_ref())] {
        if let Some(s) = s {
            if s.lost_mass() > LOST_MASS_LIMIT {
                warnings.push(format!("{side} side lost mass {}", s.lost_mass()));
            }
        }
    }
    Ok((plus, minus, warnings))
}

fn zero_set_poly(spec: &DomainSpec) -> harmlab_core::harmonic::HarmonicPolynomial {
    match spec {
        DomainSpec::PolyZeroSet { polynomial, .. } => polynomial.clone(),
        _ => unreachable!("validated: zero_set estimator needs a polynomial domain"),
    }
}

fn stage_estimate(plan: &Plan) -> Result<(Files, Vec<String>), CliError> {
    let cfg = plan.walk_plus.as_ref().expect("validated");
    let est = wos_measure(&plan.domain, &plan.pole_plus, &plan.cells, cfg)?;
    let mut warnings = Vec::new();
    if est.lost_mass > LOST_MASS_LIMIT {
        warnings.push(format!("lost mass {}", est.lost_mass));
    }
    if est.max_steps_warning {
        warnings.push("more than 1% of walks hit max_steps".into());
    }
    Ok((
        vec![
            ("estimate.csv".into(), est.to_csv().into_bytes()),
            ("estimate.json".into(), json(&est)),
        ],
        warnings,
    ))
}

fn stage_classify(ctx: &Context) -> Result<(Files, Vec<String>), CliError> {
    let a = &ctx.plan.config.analyses;
    let t = &ctx.plan.config.thresholds;
    let opts = ClassifyOptions {
        flatness: a.flatness,
        density: a.density,
        resolution: ctx.plan.config.resolution,
    };
    // without a second side the ratio is taken against ω⁺ itself
    let minus = ctx.minus.as_deref().unwrap_or(ctx.plus.as_ref());
    let results = classify_batch(ctx.plus.as_ref(), minus, &ctx.plan.points, &ctx.plan.config.scales, t, &opts);
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (q, r) in ctx.plan.points.iter().zip(results) {
        let rec = r?;
        if rec.ratio.iter().any(|v| v.is_nan()) {
            warnings.push(format!("unresolved scales at {q:?}"));
        }
        if a.flatness && rec.flatness.is_none() {
            warnings.push(format!("no flatness profile at {q:?}: blow-up unresolved"));
        }
        records.push(rec);
    }
    Ok((
        vec![
            ("classification.json".into(), json(&records)),
            ("classification.csv".into(), records_to_csv(&records).into_bytes()),
        ],
        warnings,
    ))
}

fn potentials(plan: &Plan) -> Result<(Box<dyn PotentialField>, Box<dyn PotentialField>), CliError> {
    let pm = plan.pole_minus.expect("two-sided analyses resolve a minus pole");
    Ok(match plan.config.estimator {
        Estimator::ZeroSet => {
            let h = zero_set_poly(&plan.config.domain);
            (Box::new(PolynomialPart::positive(h.clone())), Box::new(PolynomialPart::negative(h)))
        }
        Estimator::Kernel => (
            Box::new(GreenField::closed_form(plan.domain.clone(), plan.pole_plus)?),
            Box::new(GreenField::closed_form(plan.complement.clone(), pm)?),
        ),
        Estimator::Walks => (
            Box::new(GreenField::estimated(plan.domain.clone(), plan.pole_plus, plan.walk_plus.expect("validated"))),
            Box::new(GreenField::estimated(plan.complement.clone(), pm, plan.walk_minus.expect("validated"))),
        ),
    })
}

fn stage_beurling(ctx: &Context) -> Result<(Files, Vec<String>), CliError> {
    let minus = ctx.minus.as_deref().expect("two-sided analyses build a minus source");
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    let pots = if ctx.plan.config.analyses.gamma {
        Some(potentials(ctx.plan)?)
    } else {
        None
    };
    for q in &ctx.plan.points {
        let gamma: Option<GammaInputs> = pots.as_ref().map(|(a, b)| (a.as_ref(), b.as_ref(), QuadSpec::default()));
        let p = beurling_check(ctx.plus.as_ref(), minus, q, &ctx.plan.config.scales, ctx.plan.config.beurling_factor, gamma)?;
        if let Some(w) = &p.withheld {
            warnings.push(format!("verdict withheld at {q:?}: {w}"));
        }
        out.push(p);
    }
    Ok((vec![("beurling.json".into(), json(&out))], warnings))
}

fn stage_gamma(ctx: &Context) -> Result<(Files, Vec<String>), CliError> {
    let (up, um) = potentials(ctx.plan)?;
    let mut radii = ctx.plan.config.scales.clone();
    radii.reverse();
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for q in &ctx.plan.points {
        let p = gamma_profile(up.as_ref(), um.as_ref(), q, &radii, &QuadSpec::default())?;
        if !p.monotone {
            warnings.push(format!("gamma not monotone within error bars at {q:?}"));
        }
        out.push(p);
    }
    Ok((vec![("gamma.json".into(), json(&out))], warnings))
}

fn stage_dimension(ctx: &Context) -> Result<(Files, Vec<String>), CliError> {
    let s = &ctx.plan.config.scales;
    let (r_max, r_min) = (s[0], s[s.len() - 1]);
    let n = s.len().max(5);
    let mut csv = String::from("q_x,q_y,q_z,slope,intercept,residual,used,dropped\n");
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    for q in &ctx.plan.points {
        if !(r_min < r_max) {
            return Err(CliError::Stage("dimension needs at least two distinct scales".into()));
        }
        match local_dimension(ctx.plus.as_ref(), q, r_min, r_max, n) {
            Ok(f) => {
                if f.flagged() {
                    warnings.push(format!("dropped {} unresolved radii at {q:?}", f.dropped.len()));
                }
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    num(q.x()),
                    num(q.y()),
                    num(q.z()),
                    num(f.slope),
                    num(f.intercept),
                    num(f.residual),
                    f.radii.len(),
                    f.dropped.len()
                )
                .unwrap();
                fits.push(Some(f));
            }
            Err(harmlab_core::Error::TooFewScales(k)) => {
                warnings.push(format!("only {k} resolved radii at {q:?}"));
                writeln!(csv, "{},{},{},,,,{k},", num(q.x()), num(q.y()), num(q.z())).unwrap();
                fits.push(None);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((
        vec![("dimension.json".into(), json(&fits)), ("dimension.csv".into(), csv.into_bytes())],
        warnings,
    ))
}

fn stage_theta(ctx: &Context) -> Result<(Files, Vec<String>), CliError> {
    let plan = ctx.plan;
    let mut csv = String::from("q_x,q_y,q_z,radius,theta,points,insufficient\n");
    let mut warnings = Vec::new();
    for q in &plan.points {
        let sample = boundary_sample(&plan.domain, &Ball::new(*q, plan.config.scales[0])?, plan.config.theta_points, plan.seed)?;
        for &r in &plan.config.scales {
            let t = theta_density(&sample, q, r)?;
            if t.insufficient {
                warnings.push(format!("theta at {q:?}, r = {r}: only {} sample points", t.points_in_ball));
            }
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                num(q.x()),
                num(q.y()),
                num(q.z()),
                num(r),
                num(t.value),
                t.points_in_ball,
                t.insufficient
            )
            .unwrap();
        }
    }
    Ok((vec![("theta.csv".into(), csv.into_bytes())], warnings))
}

/// Runs every requested stage, writes artifacts and `manifest.json` into
/// `out_dir`, and returns the manifest. Stage failures are recorded rather
/// than returned.
pub fn run(plan: &Plan, out_dir: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut rec = Recorder {
        out_dir,
        stages: Vec::new(),
        outputs: Vec::new(),
    };
    let a = plan.config.analyses;
    if !plan.cells.is_empty() {
        let t = Instant::now();
        rec.record("estimate", t, stage_estimate(plan))?;
    }
    let t = Instant::now();
    let ctx = match sources(plan) {
        Ok((plus, minus, warnings)) => {
            rec.record("sources", t, Ok((Vec::new(), warnings)))?;
            Some(Context { plan, plus, minus })
        }
        Err(e) => {
            rec.record("sources", t, Err(e))?;
            None
        }
    };
    type Stage = fn(&Context) -> Result<(Files, Vec<String>), CliError>;
    let analyses: [(&str, bool, Stage); 5] = [
        ("classify", a.lambda || a.density || a.flatness, stage_classify),
        ("beurling", a.beurling, stage_beurling),
        ("gamma", a.gamma, stage_gamma),
        ("dimension", a.dimension, stage_dimension),
        ("theta", a.theta, stage_theta),
    ];
    for (name, enabled, f) in analyses {
        if !enabled {
            continue;
        }
        match &ctx {
            Some(ctx) => {
                let t = Instant::now();
                rec.record(name, t, f(ctx))?;
            }
            None => rec.stages.push(StageRecord {
                name: name.to_string(),
                status: StageStatus::Skipped,
                seconds: 0.0,
                warnings: Vec::new(),
                error: Some("estimator unavailable".into()),
            }),
        }
    }

    let manifest = RunManifest {
        tool: "harmlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        name: plan.config.name.clone(),
        config_sha256: config_digest(&plan.config),
        seed: plan.seed,
        seconds: start.elapsed().as_secs_f64(),
        complete: rec.stages.iter().all(|s| s.status == StageStatus::Ok),
        stages: rec.stages,
        outputs: rec.outputs,
    };
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, json(&manifest)).map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

struct Recorder<'a> {
    out_dir: &'a Path,
    stages: Vec<StageRecord>,
    outputs: Vec<OutputEntry>,
}

impl Recorder<'_> {
    /// Writes a stage's files and logs its outcome. Only I/O errors abort.
    fn record(&mut self, name: &str, t: Instant, res: Result<(Files, Vec<String>), CliError>) -> Result<(), CliError> {
        let (status, warnings, error) = match res {
            Ok((files, warnings)) => {
                for (file, bytes) in files {
                    let path = self.out_dir.join(&file);
                    std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
                    self.outputs.push(OutputEntry {
                        path: file,
                        sha256: sha256_hex(&bytes),
                        bytes: bytes.len() as u64,
                    });
                }
                (StageStatus::Ok, warnings, None)
            }
            Err(e @ CliError::Io { .. }) => return Err(e),
            Err(e) => (StageStatus::Failed, Vec::new(), Some(e.to_string())),
        };
        self.stages.push(StageRecord {
            name: name.to_string(),
            status,
            seconds: t.elapsed().as_secs_f64(),
            warnings,
            error,
        });
        Ok(())
    }
}

/// Digest of the canonical JSON form of the config, output location excluded.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.output = Default::default();
    sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
}

/// The output directory: an explicit override, or the config's own.
pub fn output_dir(config: &ExperimentConfig, over: Option<&Path>) -> PathBuf {
    over.map(Path::to_path_buf).unwrap_or_else(|| config.output.dir.clone())
}
