//! INI run configuration.
//!
//! Sections and keys (all optional unless the command needs them):
//!
//! ```ini
//! [run]
//! seed = 42
//!
//! [potential]
//! kind = characteristic        ; power_law | characteristic | quadratic | tabulated | zero
//! alpha = 1.0                  ; power_law
//! breakpoints = 0:0.2, 0.5:1   ; tabulated, s:value pairs
//! q = 1.0
//! m = 1
//! w0_kind = none               ; none | tilted
//! w0_scale = 0.0
//!
//! [geometry]
//! n = 2
//! R = 4.7                      ; comma list for a sweep
//! N = 2000
//! M = 400
//!
//! [solver]
//! eps, refine_passes, multires, stages, levels_per_cell, tube, critical_tol,
//! max_iters, field_tol, cascade_levels, continuation, harmonic_sweeps, jitter
//!
//! [field]
//! domain = disk                ; interval | rectangle | disk
//! lo = -1 / hi = 1             ; interval
//! lo = 0:0 / hi = 2:1          ; rectangle
//! radius = 4.66                ; disk
//! cells = 400
//! boundary = hedgehog          ; constant | hedgehog | hedgehog_gap | edges
//! value = 1, 0                 ; constant
//! gap_angle / gap_half_width   ; hedgehog_gap
//! left / right / bottom / top  ; edges
//!
//! [checks]
//! interior_balls = 0:0:2.3; 1:0:3   ; x:y:R entries
//! boundary_balls = 4.6:0:3
//! pohozaev_center = 0:0
//! pohozaev_radii = 1, 2
//! monotonicity_radii = 1, 2, 3
//! maximum_principle = false
//! dead_core = false
//! zero_tolerance = 1e-3
//! positivity_floor = 1e-6
//! pohozaev_tolerance = 0.05
//!
//! [output]
//! profile_csv = out/profile_upper.csv   ; plotdata inputs
//! field_csv = out/field.csv
//! oracle = none                          ; none | log_core | harmonic | first_integral | cosh
//! downsample = 200
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::field::{BoundarySpec, CascadeOptions, FieldProblem, FieldSolveOptions, Geometry};
use crate::potential::{AngularPotential, PotentialSpec, RadialKind, RadialPotential};
use crate::radial::{LevelSpec, RadialSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Critical,
    Verify,
    Plotdata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    None,
    LogCore,
    Harmonic,
    FirstIntegral,
    Cosh,
}

impl OracleKind {
    fn name(self) -> &'static str {
        match self {
            OracleKind::None => "none",
            OracleKind::LogCore => "log_core",
            OracleKind::Harmonic => "harmonic",
            OracleKind::FirstIntegral => "first_integral",
            OracleKind::Cosh => "cosh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChecksConfig {
    pub interior_balls: Vec<Ball>,
    pub boundary_balls: Vec<Ball>,
    pub pohozaev_center: [f64; 2],
    pub pohozaev_radii: Vec<f64>,
    pub monotonicity_radii: Vec<f64>,
    pub maximum_principle: bool,
    pub dead_core: bool,
    pub zero_tolerance: Option<f64>,
    pub positivity_floor: Option<f64>,
    pub pohozaev_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub geometry: Geometry,
    pub cells: usize,
    pub boundary: BoundarySpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub profile_csv: Option<PathBuf>,
    pub field_csv: Option<PathBuf>,
    pub oracle: OracleKind,
    pub downsample: usize,
}

/// Parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub kind: RadialKind,
    pub q: f64,
    pub m: usize,
    pub w0_scale: Option<f64>,
    pub n: u32,
    pub radii: Vec<f64>,
    /// `N` and `M`; `None` when absent from the file.
    pub grid: Option<(usize, usize)>,
    pub solver: RadialSolver,
    pub critical_tol: Option<f64>,
    pub cascade: CascadeOptions,
    pub jitter: f64,
    pub field: Option<FieldConfig>,
    pub checks: ChecksConfig,
    pub output: OutputConfig,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

struct Section<'a> {
    name: &'static str,
    entries: BTreeMap<String, String>,
    used: std::cell::RefCell<Vec<String>>,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl Section<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().push(key.to_string());
        self.entries.get(key).map(|s| s.trim())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| config_err(format!("[{}] {key} = {v:?}: {e}", self.name))),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_list(v).map(Some).map_err(|e| config_err(format!("[{}] {key}: {e}", self.name))),
        }
    }

    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        for key in self.entries.keys() {
            if !used.iter().any(|u| u == key) {
                return Err(config_err(format!("unknown key [{}] {key}", self.name)));
            }
        }
        Ok(())
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

fn parse_tuple(v: &str, len: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<f64> = v
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if parts.len() != len {
        return Err(format!("{v:?} needs {len} ':'-separated numbers"));
    }
    Ok(parts)
}

fn parse_balls(v: &str) -> std::result::Result<Vec<Ball>, String> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let t = parse_tuple(s, 3)?;
            if !(t[2] > 0.0) {
                return Err(format!("ball radius must be positive in {s:?}"));
            }
            Ok(Ball { center: [t[0], t[1]], radius: t[2] })
        })
        .collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

const SECTIONS: [&str; 7] = ["run", "potential", "geometry", "solver", "field", "checks", "output"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| config_err(format!("malformed INI: {e}")))?;
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (name, props) in &ini {
            let entries: BTreeMap<String, String> = props.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            match name {
                None if entries.is_empty() => continue,
                None => return Err(config_err("keys outside a section")),
                Some(s) if !SECTIONS.contains(&s) => return Err(config_err(format!("unknown section [{s}]"))),
                Some(s) => {
                    if sections.insert(s.to_string(), entries).is_some() {
                        return Err(config_err(format!("duplicate section [{s}]")));
                    }
                }
            }
        }
        let section = |name: &'static str| Section {
            name,
            entries: sections.get(name).cloned().unwrap_or_default(),
            used: Default::default(),
            _marker: std::marker::PhantomData,
        };
        let run = section("run");
        let pot = section("potential");
        let geo = section("geometry");
        let sol = section("solver");
        let fld = section("field");
        let chk = section("checks");
        let out = section("output");

        let seed = run.or("seed", 42u64)?;

        let kind_name = pot.get("kind").ok_or_else(|| config_err("[potential] kind is required"))?.to_string();
        let kind = match kind_name.as_str() {
            "power_law" => RadialKind::PowerLaw {
                alpha: pot.parse("alpha")?.ok_or_else(|| config_err("[potential] alpha is required for power_law"))?,
            },
            "characteristic" => RadialKind::Characteristic,
            "quadratic" => RadialKind::Quadratic,
            "zero" => RadialKind::Zero,
            "tabulated" => {
                let raw = pot.get("breakpoints").ok_or_else(|| config_err("[potential] breakpoints is required"))?;
                let breakpoints = raw
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_tuple(s, 2).map(|t| (t[0], t[1])))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| config_err(format!("[potential] breakpoints: {e}")))?;
                RadialKind::Tabulated { breakpoints }
            }
            other => return Err(config_err(format!("[potential] unknown kind {other:?}"))),
        };
        if !matches!(kind, RadialKind::PowerLaw { .. }) && pot.get("alpha").is_some() {
            return Err(config_err("[potential] alpha only applies to power_law"));
        }
        let q = pot.or("q", 1.0f64)?;
        let m = pot.or("m", 1usize)?;
        let w0_scale = match pot.get("w0_kind").unwrap_or("none") {
            "none" => {
                if pot.get("w0_scale").is_some() {
                    return Err(config_err("[potential] w0_scale needs w0_kind = tilted"));
                }
                None
            }
            "tilted" => Some(pot.or("w0_scale", 0.0f64)?),
            other => return Err(config_err(format!("[potential] unknown w0_kind {other:?}"))),
        };

        let n = geo.or("n", 2u32)?;
        let radii = geo.list("R")?.unwrap_or_default();
        let grid = match (geo.parse::<usize>("N")?, geo.parse::<usize>("M")?) {
            (None, None) => None,
            (cells, levels) => {
                let d = RadialSolver::default();
                Some((cells.unwrap_or(d.cells), levels.unwrap_or(d.levels.m())))
            }
        };

        let defaults = RadialSolver::default();
        let solver = RadialSolver {
            cells: grid.map_or(defaults.cells, |g| g.0),
            levels: LevelSpec::Uniform { m: grid.map_or(defaults.levels.m(), |g| g.1) },
            eps: sol.or("eps", defaults.eps)?,
            refine_passes: sol.or("refine_passes", defaults.refine_passes)?,
            multires: sol.or("multires", defaults.multires)?,
            stages: sol.or("stages", defaults.stages)?,
            levels_per_cell: sol.or("levels_per_cell", defaults.levels_per_cell)?,
            tube: sol.or("tube", defaults.tube)?,
            budget: defaults.budget,
        };
        let critical_tol = sol.parse("critical_tol")?;
        let fdef = CascadeOptions::default();
        let jitter = sol.or("jitter", 0.0f64)?;
        let cascade = CascadeOptions {
            levels: sol.or("cascade_levels", fdef.levels)?,
            harmonic_sweeps: sol.or("harmonic_sweeps", fdef.harmonic_sweeps)?,
            jitter: None,
            continuation: sol.or("continuation", fdef.continuation)?,
            solve: FieldSolveOptions {
                max_iters: sol.or("max_iters", fdef.solve.max_iters)?,
                tol: sol.or("field_tol", fdef.solve.tol)?,
                ..fdef.solve
            },
        };

        let field = match fld.get("domain") {
            None => None,
            Some(domain) => {
                let domain = domain.to_string();
                let geometry = match domain.as_str() {
                    "interval" => Geometry::Interval { lo: fld.or("lo", -1.0f64)?, hi: fld.or("hi", 1.0f64)? },
                    "rectangle" => {
                        let pair = |key: &str, default: [f64; 2]| -> Result<[f64; 2]> {
                            match fld.get(key) {
                                None => Ok(default),
                                Some(v) => {
                                    let t = parse_tuple(v, 2).map_err(|e| config_err(format!("[field] {key}: {e}")))?;
                                    Ok([t[0], t[1]])
                                }
                            }
                        };
                        Geometry::Rectangle { lo: pair("lo", [0.0, 0.0])?, hi: pair("hi", [1.0, 1.0])? }
                    }
                    "disk" => Geometry::Disk {
                        radius: fld
                            .parse("radius")?
                            .ok_or_else(|| config_err("[field] radius is required for disk"))?,
                    },
                    other => return Err(config_err(format!("[field] unknown domain {other:?}"))),
                };
                let vector = |key: &str| -> Result<Vec<f64>> {
                    fld.list(key)?.ok_or_else(|| config_err(format!("[field] {key} is required")))
                };
                let boundary = match fld.get("boundary").unwrap_or("constant") {
                    "constant" => BoundarySpec::Constant { value: vector("value")? },
                    "hedgehog" => BoundarySpec::Hedgehog,
                    "hedgehog_gap" => BoundarySpec::HedgehogGap {
                        angle: fld.or("gap_angle", 0.0f64)?,
                        half_width: fld
                            .parse("gap_half_width")?
                            .ok_or_else(|| config_err("[field] gap_half_width is required"))?,
                    },
                    "edges" => BoundarySpec::Edges {
                        left: vector("left")?,
                        right: vector("right")?,
                        bottom: if n == 1 { fld.list("bottom")?.unwrap_or_default() } else { vector("bottom")? },
                        top: if n == 1 { fld.list("top")?.unwrap_or_default() } else { vector("top")? },
                    },
                    other => return Err(config_err(format!("[field] unknown boundary {other:?}"))),
                };
                Some(FieldConfig { geometry, cells: fld.or("cells", 100usize)?, boundary })
            }
        };

        let balls = |key: &str| -> Result<Vec<Ball>> {
            match chk.get(key) {
                None => Ok(Vec::new()),
                Some(v) => parse_balls(v).map_err(|e| config_err(format!("[checks] {key}: {e}"))),
            }
        };
        let checks = ChecksConfig {
            interior_balls: balls("interior_balls")?,
            boundary_balls: balls("boundary_balls")?,
            pohozaev_center: match chk.get("pohozaev_center") {
                None => [0.0, 0.0],
                Some(v) => {
                    let t = parse_tuple(v, 2).map_err(|e| config_err(format!("[checks] pohozaev_center: {e}")))?;
                    [t[0], t[1]]
                }
            },
            pohozaev_radii: chk.list("pohozaev_radii")?.unwrap_or_default(),
            monotonicity_radii: chk.list("monotonicity_radii")?.unwrap_or_default(),
            maximum_principle: chk.or("maximum_principle", false)?,
            dead_core: chk.or("dead_core", false)?,
            zero_tolerance: chk.parse("zero_tolerance")?,
            positivity_floor: chk.parse("positivity_floor")?,
            pohozaev_tolerance: chk.or("pohozaev_tolerance", 0.05f64)?,
        };

        let output = OutputConfig {
            profile_csv: out.get("profile_csv").map(PathBuf::from),
            field_csv: out.get("field_csv").map(PathBuf::from),
            oracle: match out.get("oracle").unwrap_or("none") {
                "none" => OracleKind::None,
                "log_core" => OracleKind::LogCore,
                "harmonic" => OracleKind::Harmonic,
                "first_integral" => OracleKind::FirstIntegral,
                "cosh" => OracleKind::Cosh,
                other => return Err(config_err(format!("[output] unknown oracle {other:?}"))),
            },
            downsample: out.or("downsample", 200usize)?,
        };

        for s in [&run, &pot, &geo, &sol, &fld, &chk, &out] {
            s.finish()?;
        }

        let cfg = RunConfig {
            seed,
            kind,
            q,
            m,
            w0_scale,
            n,
            radii,
            grid,
            solver,
            critical_tol,
            cascade,
            jitter,
            field,
            checks,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        RadialPotential::new(self.kind.clone(), self.q).map_err(|e| config_err(e.to_string()))?;
        if self.m == 0 {
            return Err(config_err("[potential] m must be positive"));
        }
        if self.n == 0 {
            return Err(config_err("[geometry] n must be positive"));
        }
        if let Some(s) = self.w0_scale {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(config_err("[potential] w0_scale must be nonnegative"));
            }
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(config_err("[geometry] R must be positive"));
        }
        if let Some((cells, levels)) = self.grid {
            if cells < 16 {
                return Err(config_err(format!("[geometry] N = {cells} is below the minimum 16")));
            }
            if levels < 8 {
                return Err(config_err(format!("[geometry] M = {levels} is below the minimum 8")));
            }
        }
        self.solver.validate().map_err(|e| config_err(e.to_string()))?;
        if let Some(t) = self.critical_tol {
            if !(t > 0.0) {
                return Err(config_err("[solver] critical_tol must be positive"));
            }
        }
        if !(self.jitter >= 0.0) {
            return Err(config_err("[solver] jitter must be nonnegative"));
        }
        if self.cascade.solve.max_iters == 0 || !(self.cascade.solve.tol >= 0.0) {
            return Err(config_err("[solver] max_iters must be positive and field_tol nonnegative"));
        }
        if let Some(f) = &self.field {
            if f.geometry.n() != self.n as usize {
                return Err(config_err(format!(
                    "[field] domain {} is {}-dimensional but [geometry] n = {}",
                    f.geometry.name(),
                    f.geometry.n(),
                    self.n
                )));
            }
            let lattice = f.geometry.lattice(f.cells).map_err(|e| config_err(e.to_string()))?;
            crate::field::GridField::new(lattice, self.m, self.q, &f.boundary)
                .map_err(|e| config_err(e.to_string()))?;
        }
        if self.output.downsample < 2 {
            return Err(config_err("[output] downsample must be at least 2"));
        }
        Ok(())
    }

    /// Checks the keys a command needs.
    pub fn require(&self, command: Command) -> Result<()> {
        match command {
            Command::Profile => {
                if self.radii.is_empty() {
                    return Err(config_err("[geometry] R is required for profile"));
                }
            }
            Command::Critical => {}
            Command::Verify => {
                if self.field.is_none() {
                    return Err(config_err("[field] section with a domain is required for verify"));
                }
            }
            Command::Plotdata => {
                if self.output.profile_csv.is_none() && self.output.field_csv.is_none() {
                    return Err(config_err("[output] profile_csv or field_csv is required for plotdata"));
                }
                if self.output.oracle != OracleKind::None && self.radii.len() != 1 {
                    return Err(config_err("[geometry] a single R is required for an oracle overlay"));
                }
            }
        }
        Ok(())
    }

    pub fn radial_potential(&self) -> RadialPotential {
        RadialPotential::new(self.kind.clone(), self.q).expect("validated")
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let w0 = match self.w0_scale {
            None => AngularPotential::None,
            Some(scale) => AngularPotential::Tilted { scale },
        };
        PotentialSpec::new(self.radial_potential(), w0, self.m)
    }

    /// Radial solver actually used by `command`: the critical-radius search
    /// uses [`RadialSolver::bisection_preset`] unless `N`/`M` are given.
    pub fn solver_for(&self, command: Command) -> RadialSolver {
        if command == Command::Critical && self.grid.is_none() {
            let preset = RadialSolver::bisection_preset();
            RadialSolver { cells: preset.cells, levels: preset.levels, ..self.solver.clone() }
        } else {
            self.solver.clone()
        }
    }

    pub fn cascade_options(&self) -> CascadeOptions {
        CascadeOptions { jitter: (self.jitter > 0.0).then_some((self.jitter, self.seed)), ..self.cascade.clone() }
    }

    pub fn field_problem(&self) -> Result<FieldProblem> {
        let f = self.field.as_ref().ok_or_else(|| config_err("no [field] section"))?;
        Ok(FieldProblem {
            geometry: f.geometry.clone(),
            cells: f.cells,
            boundary: f.boundary.clone(),
            spec: self.potential_spec()?,
        })
    }

    /// Every setting with defaults filled in, as `section → key → value`.
    /// Parsing [`RunConfig::to_ini`] of this map reproduces the configuration.
    pub fn resolved(&self, command: Command) -> BTreeMap<&'static str, BTreeMap<&'static str, String>> {
        let mut out: BTreeMap<&'static str, BTreeMap<&'static str, String>> = BTreeMap::new();
        let mut put = |s: &'static str, k: &'static str, v: String| {
            out.entry(s).or_default().insert(k, v);
        };
        put("run", "seed", self.seed.to_string());
        match &self.kind {
            RadialKind::PowerLaw { alpha } => {
                put("potential", "kind", "power_law".into());
                put("potential", "alpha", format!("{alpha:?}"));
            }
            RadialKind::Characteristic => put("potential", "kind", "characteristic".into()),
            RadialKind::Quadratic => put("potential", "kind", "quadratic".into()),
            RadialKind::Zero => put("potential", "kind", "zero".into()),
            RadialKind::Tabulated { breakpoints } => {
                put("potential", "kind", "tabulated".into());
                put(
                    "potential",
                    "breakpoints",
                    breakpoints.iter().map(|(s, v)| format!("{s:?}:{v:?}")).collect::<Vec<_>>().join(", "),
                );
            }
        }
        put("potential", "q", format!("{:?}", self.q));
        put("potential", "m", self.m.to_string());
        match self.w0_scale {
            None => put("potential", "w0_kind", "none".into()),
            Some(s) => {
                put("potential", "w0_kind", "tilted".into());
                put("potential", "w0_scale", format!("{s:?}"));
            }
        }
        put("geometry", "n", self.n.to_string());
        if !self.radii.is_empty() {
            put("geometry", "R", fmt_list(&self.radii));
        }
        let solver = self.solver_for(command);
        put("geometry", "N", solver.cells.to_string());
        put("geometry", "M", solver.levels.m().to_string());
        put("solver", "eps", format!("{:?}", solver.eps));
        put("solver", "refine_passes", solver.refine_passes.to_string());
        put("solver", "multires", solver.multires.to_string());
        put("solver", "stages", solver.stages.to_string());
        put("solver", "levels_per_cell", solver.levels_per_cell.to_string());
        put("solver", "tube", solver.tube.to_string());
        if let Some(t) = self.critical_tol {
            put("solver", "critical_tol", format!("{t:?}"));
        }
        put("solver", "max_iters", self.cascade.solve.max_iters.to_string());
        put("solver", "field_tol", format!("{:?}", self.cascade.solve.tol));
        put("solver", "cascade_levels", self.cascade.levels.to_string());
        put("solver", "continuation", self.cascade.continuation.to_string());
        put("solver", "harmonic_sweeps", self.cascade.harmonic_sweeps.to_string());
        put("solver", "jitter", format!("{:?}", self.jitter));
        if let Some(f) = &self.field {
            put("field", "cells", f.cells.to_string());
            match &f.geometry {
                Geometry::Interval { lo, hi } => {
                    put("field", "domain", "interval".into());
                    put("field", "lo", format!("{lo:?}"));
                    put("field", "hi", format!("{hi:?}"));
                }
                Geometry::Rectangle { lo, hi } => {
                    put("field", "domain", "rectangle".into());
                    put("field", "lo", format!("{:?}:{:?}", lo[0], lo[1]));
                    put("field", "hi", format!("{:?}:{:?}", hi[0], hi[1]));
                }
                Geometry::Disk { radius } => {
                    put("field", "domain", "disk".into());
                    put("field", "radius", format!("{radius:?}"));
                }
            }
            match &f.boundary {
                BoundarySpec::Constant { value } => {
                    put("field", "boundary", "constant".into());
                    put("field", "value", fmt_list(value));
                }
                BoundarySpec::Hedgehog => put("field", "boundary", "hedgehog".into()),
                BoundarySpec::HedgehogGap { angle, half_width } => {
                    put("field", "boundary", "hedgehog_gap".into());
                    put("field", "gap_angle", format!("{angle:?}"));
                    put("field", "gap_half_width", format!("{half_width:?}"));
                }
                BoundarySpec::Edges { left, right, bottom, top } => {
                    put("field", "boundary", "edges".into());
                    put("field", "left", fmt_list(left));
                    put("field", "right", fmt_list(right));
                    if !bottom.is_empty() {
                        put("field", "bottom", fmt_list(bottom));
                    }
                    if !top.is_empty() {
                        put("field", "top", fmt_list(top));
                    }
                }
            }
        }
        let balls = |b: &[Ball]| {
            b.iter()
                .map(|b| format!("{:?}:{:?}:{:?}", b.center[0], b.center[1], b.radius))
                .collect::<Vec<_>>()
                .join("; ")
        };
        let c = &self.checks;
        if !c.interior_balls.is_empty() {
            put("checks", "interior_balls", balls(&c.interior_balls));
        }
        if !c.boundary_balls.is_empty() {
            put("checks", "boundary_balls", balls(&c.boundary_balls));
        }
        put("checks", "pohozaev_center", format!("{:?}:{:?}", c.pohozaev_center[0], c.pohozaev_center[1]));
        if !c.pohozaev_radii.is_empty() {
            put("checks", "pohozaev_radii", fmt_list(&c.pohozaev_radii));
        }
        if !c.monotonicity_radii.is_empty() {
            put("checks", "monotonicity_radii", fmt_list(&c.monotonicity_radii));
        }
        put("checks", "maximum_principle", c.maximum_principle.to_string());
        put("checks", "dead_core", c.dead_core.to_string());
        if let Some(z) = c.zero_tolerance {
            put("checks", "zero_tolerance", format!("{z:?}"));
        }
        if let Some(z) = c.positivity_floor {
            put("checks", "positivity_floor", format!("{z:?}"));
        }
        put("checks", "pohozaev_tolerance", format!("{:?}", c.pohozaev_tolerance));
        if let Some(p) = &self.output.profile_csv {
            put("output", "profile_csv", p.display().to_string());
        }
        if let Some(p) = &self.output.field_csv {
            put("output", "field_csv", p.display().to_string());
        }
        put("output", "oracle", self.output.oracle.name().into());
        put("output", "downsample", self.output.downsample.to_string());
        out
    }

    pub fn resolved_json(&self, command: Command) -> Value {
        serde_json::to_value(self.resolved(command)).expect("string map")
    }

    /// INI text of [`RunConfig::resolved`].
    pub fn to_ini(&self, command: Command) -> String {
        let mut text = String::new();
        let resolved = self.resolved(command);
        for section in SECTIONS {
            if let Some(keys) = resolved.get(section) {
                let _ = writeln!(text, "[{section}]");
                for (k, v) in keys {
                    let _ = writeln!(text, "{k} = {v}");
                }
                text.push('\n');
            }
        }
        text
    }

    /// Rebuilds INI text from a report's embedded `config` object.
    pub fn ini_from_json(config: &Value) -> Result<String> {
        let obj = config.as_object().ok_or_else(|| config_err("embedded config is not an object"))?;
        let mut text = String::new();
        for (section, keys) in obj {
            let keys = keys.as_object().ok_or_else(|| config_err(format!("section {section} is not an object")))?;
            let _ = writeln!(text, "[{section}]");
            for (k, v) in keys {
                let v = v.as_str().ok_or_else(|| config_err(format!("{section}.{k} is not a string")))?;
                let _ = writeln!(text, "{k} = {v}");
            }
            text.push('\n');
        }
        Ok(text)
    }
}
