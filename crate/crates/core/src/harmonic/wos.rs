//! Walk-on-spheres estimates of harmonic measure and Green functions.
//!
//! Each walk jumps to a uniform point on the largest sphere that stays inside
//! `Ω` until it is within `epsilon_shell` of the boundary, then exits at the
//! nearest boundary point. Exteriors of bounded boundaries teleport far walkers
//! back to a sphere around the boundary using the exterior Poisson kernel, and
//! in space they may escape to infinity; escaped and truncated walks are
//! counted as lost mass.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainSpec, Side};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::harmonic::oracle::fundamental_solution;
use crate::rng::{stream, unit_direction, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub n_walks: u64,
    /// Absorption distance to the boundary.
    pub epsilon_shell: f64,
    pub max_steps: u64,
    pub seed: u64,
}

impl WalkConfig {
    pub fn new(n_walks: u64, epsilon_shell: f64, max_steps: u64, seed: u64) -> Result<Self> {
        let cfg = WalkConfig {
            n_walks,
            epsilon_shell,
            max_steps,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `epsilon_shell = 1e-6 · scale` and a generous step cap.
    pub fn for_domain(domain: &Domain, n_walks: u64, seed: u64) -> Self {
        WalkConfig {
            n_walks,
            epsilon_shell: 1e-6 * domain.scale(),
            max_steps: 100_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_walks == 0 {
            return Err(Error::InvalidArgument("n_walks must be at least 1".into()));
        }
        if !(self.epsilon_shell > 0.0 && self.epsilon_shell.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_shell must be positive, got {}",
                self.epsilon_shell
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// A boundary cell: a closed ball, or the boundary points whose angle about
/// `center` lies in `[start, end)` (planar only).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Ball { center: Point, radius: f64 },
    Arc { center: Point, radius: f64, start: f64, end: f64 },
}

impl Cell {
    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Cell::Ball { center, radius } => p.dist(center) <= *radius,
            Cell::Arc {
                center, start, end, ..
            } => {
                let a = (*p - *center).angle();
                (a - start).rem_euclid(TAU) < end - start
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Cell::Ball { .. } => "ball",
            Cell::Arc { .. } => "arc",
        }
    }

    fn length_scale(&self) -> f64 {
        match self {
            Cell::Ball { radius, .. } => *radius,
            Cell::Arc {
                radius, start, end, ..
            } => 0.5 * radius * (end - start),
        }
    }
}

/// `k` equal arcs covering the circle `|x - center| = radius`.
pub fn equal_arcs(center: Point, radius: f64, k: usize) -> Vec<Cell> {
    (0..k)
        .map(|j| Cell::Arc {
            center,
            radius,
            start: TAU * j as f64 / k as f64,
            end: TAU * (j + 1) as f64 / k as f64,
        })
        .collect()
}

/// Rejects malformed or overlapping cells.
pub fn validate_cells(cells: &[Cell]) -> Result<()> {
    for (i, c) in cells.iter().enumerate() {
        match c {
            Cell::Ball { radius, center } => {
                if !(*radius > 0.0 && radius.is_finite() && center.is_finite()) {
                    return Err(Error::InvalidArgument(format!("cell {i}: bad ball")));
                }
            }
            Cell::Arc { start, end, .. } => {
                if !(end > start && end - start <= TAU + 1e-12) {
                    return Err(Error::InvalidArgument(format!("cell {i}: bad arc [{start}, {end})")));
                }
            }
        }
        for (j, d) in cells.iter().enumerate().take(i) {
            let overlap = match (c, d) {
                (
                    Cell::Ball {
                        center: c1,
                        radius: r1,
                    },
                    Cell::Ball {
                        center: c2,
                        radius: r2,
                    },
                ) => c1.dist(c2) < r1 + r2,
                (
                    Cell::Arc {
                        center: c1,
                        start: s1,
                        end: e1,
                        ..
                    },
                    Cell::Arc {
                        center: c2,
                        start: s2,
                        end: e2,
                        ..
                    },
                ) => {
                    c1 == c2
                        && ((s2 - s1).rem_euclid(TAU) < (e1 - s1) - 1e-12
                            || (s1 - s2).rem_euclid(TAU) < (e2 - s2) - 1e-12)
                }
                _ => false,
            };
            if overlap {
                return Err(Error::InvalidArgument(format!("cells {j} and {i} overlap")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub domain: DomainSpec,
    pub pole: Point,
    pub cells: Vec<Cell>,
    pub hits: Vec<u64>,
    pub probabilities: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Walks that reached the boundary, inside a cell or not.
    pub absorbed: u64,
    pub escaped: u64,
    pub truncated: u64,
    /// `(escaped + truncated) / n_walks`.
    pub lost_mass: f64,
    /// First-order bound on the shell bias, `epsilon_shell / smallest cell scale`.
    pub bias_bound: f64,
    /// More than 1% of walks hit `max_steps`.
    pub max_steps_warning: bool,
    pub config: WalkConfig,
}

impl MeasureEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }

    /// One row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell,kind,center_x,center_y,center_z,radius,start,end,hits,probability,std_error\n");
        for (i, c) in self.cells.iter().enumerate() {
            let (center, radius, start, end) = match c {
                Cell::Ball { center, radius } => (center, radius, String::new(), String::new()),
                Cell::Arc {
                    center,
                    radius,
                    start,
                    end,
                } => (center, radius, start.to_string(), end.to_string()),
            };
            writeln!(
                out,
                "{i},{},{},{},{},{radius},{start},{end},{},{},{}",
                c.kind(),
                center.x(),
                center.y(),
                center.z(),
                self.hits[i],
                self.probabilities[i],
                self.std_errors[i]
            )
            .unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Exit {
    Boundary(Point),
    Escaped,
    Truncated,
}

/// Exterior teleport geometry: enclosure center, return-sphere radius and the
/// distance beyond which walkers are teleported.
struct Teleport {
    center: Point,
    sphere: f64,
    trigger: f64,
}

fn teleport_for(domain: &Domain) -> Option<Teleport> {
    if domain.side() != Side::Exterior {
        return None;
    }
    let (center, r) = domain.boundary_enclosure()?;
    Some(Teleport {
        center,
        sphere: 1.5 * r,
        trigger: 4.0 * r,
    })
}

/// Samples the exit point on `|y - c| = R` of Brownian motion from `x` with
/// `|x - c| > R`, conditioned on hitting: by Kelvin inversion this is the
/// interior Poisson kernel at `x*`, sampled by rejection from uniform.
fn exterior_return(t: &Teleport, x: &Point, dim: usize, rng: &mut ChaCha8Rng) -> Point {
    let v = *x - t.center;
    let rho2 = v.norm_sq();
    let a = v * (t.sphere * t.sphere / rho2);
    let an = a.norm();
    loop {
        let u = unit_direction(rng, dim);
        let y = u * t.sphere;
        let ratio = ((t.sphere - an) / y.dist(&a)).powi(dim as i32);
        if rng.gen::<f64>() < ratio {
            return t.center + y;
        }
    }
}

pub(crate) fn walk(domain: &Domain, start: &Point, cfg: &WalkConfig, rng: &mut ChaCha8Rng) -> (Exit, u64) {
    let dim = domain.dim();
    let teleport = teleport_for(domain);
    let kill = 1e6 * domain.scale();
    let mut x = *start;
    let mut steps = 0;
    loop {
        if steps >= cfg.max_steps {
            return (Exit::Truncated, steps);
        }
        if let Some(t) = &teleport {
            let rho = x.dist(&t.center);
            if rho >= t.trigger {
                // the plane is recurrent; in space the return probability is R/ρ
                if dim == 3 && rng.gen::<f64>() >= t.sphere / rho {
                    return (Exit::Escaped, steps);
                }
                x = exterior_return(t, &x, dim, rng);
                steps += 1;
                continue;
            }
        }
        let d = domain.safe_distance(&x);
        if d <= cfg.epsilon_shell {
            let (_, p) = domain.nearest_boundary(&x);
            return (Exit::Boundary(p), steps);
        }
        if x.dist(start) > kill {
            return (Exit::Escaped, steps);
        }
        x += unit_direction(rng, dim) * d;
        steps += 1;
    }
}

fn check_pole(domain: &Domain, pole: &Point) -> Result<()> {
    if !pole.is_finite() || !domain.contains(pole) || domain.safe_distance(pole) <= 0.0 {
        return Err(Error::InvalidPole);
    }
    Ok(())
}

fn walk_exits(domain: &Domain, start: &Point, cfg: &WalkConfig, purpose: Purpose) -> Vec<Exit> {
    (0..cfg.n_walks)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, purpose, i);
            walk(domain, start, cfg, &mut rng).0
        })
        .collect()
}

/// Estimates `ω^{pole}(cell)` for each cell.
pub fn wos_measure(domain: &Domain, pole: &Point, cells: &[Cell], cfg: &WalkConfig) -> Result<MeasureEstimate> {
    cfg.validate()?;
    validate_cells(cells)?;
    check_pole(domain, pole)?;
    let exits = walk_exits(domain, pole, cfg, Purpose::Walk);
    let mut hits = vec![0u64; cells.len()];
    let (mut absorbed, mut escaped, mut truncated) = (0, 0, 0);
    for e in &exits {
        match e {
            Exit::Boundary(p) => {
                absorbed += 1;
                if let Some(k) = cells.iter().position(|c| c.contains(p)) {
                    hits[k] += 1;
                }
            }
            Exit::Escaped => escaped += 1,
            Exit::Truncated => truncated += 1,
        }
    }
    let n = cfg.n_walks as f64;
    let probabilities: Vec<f64> = hits.iter().map(|&h| h as f64 / n).collect();
    let std_errors = probabilities.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    let min_scale = cells
        .iter()
        .map(Cell::length_scale)
        .fold(f64::INFINITY, f64::min);
    Ok(MeasureEstimate {
        domain: domain.spec().clone(),
        pole: *pole,
        cells: cells.to_vec(),
        hits,
        probabilities,
        std_errors,
        absorbed,
        escaped,
        truncated,
        lost_mass: (escaped + truncated) as f64 / n,
        bias_bound: if cells.is_empty() { 0.0 } else { cfg.epsilon_shell / min_scale },
        max_steps_warning: truncated as f64 > 0.01 * n,
        config: *cfg,
    })
}

/// Exit points of `n_walks` walks from `pole`, as an equal-weight measure of
/// total mass `absorbed / n_walks`.
pub fn wos_exit_points(domain: &Domain, pole: &Point, cfg: &WalkConfig) -> Result<(Vec<Point>, MeasureEstimate)> {
    cfg.validate()?;
    check_pole(domain, pole)?;
    let exits = walk_exits(domain, pole, cfg, Purpose::Walk);
    let points: Vec<Point> = exits
        .iter()
        .filter_map(|e| match e {
            Exit::Boundary(p) => Some(*p),
            _ => None,
        })
        .collect();
    let escaped = exits.iter().filter(|e| **e == Exit::Escaped).count() as u64;
    let truncated = exits.iter().filter(|e| **e == Exit::Truncated).count() as u64;
    let n = cfg.n_walks as f64;
    let summary = MeasureEstimate {
        domain: domain.spec().clone(),
        pole: *pole,
        cells: Vec::new(),
        hits: Vec::new(),
        probabilities: Vec::new(),
        std_errors: Vec::new(),
        absorbed: points.len() as u64,
        escaped,
        truncated,
        lost_mass: (escaped + truncated) as f64 / n,
        bias_bound: 0.0,
        max_steps_warning: truncated as f64 > 0.01 * n,
        config: *cfg,
    };
    Ok((points, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Walks that contributed; truncated walks are excluded.
    pub used: u64,
    pub truncated: u64,
}

/// `G(X, pole) = Φ(X - pole) - E[Φ(W - pole)]`, `W` the exit point of a walk
/// from `X`. Walks escaping to infinity in space contribute `Φ(∞) = 0`.
pub fn green_estimate(domain: &Domain, pole: &Point, x: &Point, cfg: &WalkConfig) -> Result<GreenEstimate> {
    cfg.validate()?;
    check_pole(domain, pole)?;
    check_pole(domain, x)?;
    if x == pole {
        return Err(Error::InvalidArgument("Green function is singular at the pole".into()));
    }
    let dim = domain.dim();
    let exits = walk_exits(domain, x, cfg, Purpose::Green);
    let mut values = Vec::with_capacity(exits.len());
    let mut truncated = 0;
    for e in &exits {
        match e {
            Exit::Boundary(w) => values.push(fundamental_solution(dim, &(*w - *pole))),
            Exit::Escaped if dim == 3 => values.push(0.0),
            _ => truncated += 1,
        }
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument("too few completed walks".into()));
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(GreenEstimate {
        value: fundamental_solution(dim, &(*x - *pole)) - mean,
        std_error: (var / m).sqrt(),
        used: values.len() as u64,
        truncated,
    })
}
