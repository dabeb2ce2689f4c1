//! Forward, invert, pipeline and gallery commands.
//!
//! Commands return reports; printing is left to the caller.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::dataset::{sidecar_path, write_atomic};
use crate::forward::{sidecar, synthesize_dataset, NearFieldDataset};
use crate::geometry::{distance_to_polygon, InterfaceProfile, ObstacleCurve, Point2, SamplingGrid};
use crate::inversion::{add_noise, format_sig9, indicator_map, IndicatorMap, NearFieldMatrix, NormConvention, RegularizationPolicy};

use super::config::{emit_config, load_config, parse_config, RegularizationMode, RunConfig};
use super::presets::{paper_scale, Preset};

pub const DATASET_FILE: &str = "dataset.lsmnf";

/// Command-line adjustments applied on top of a config file or preset.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub noise: Option<f64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub morozov: Option<f64>,
    pub grid: Option<String>,
    pub threads: Option<usize>,
    pub paper_scale: bool,
    pub unweighted_norm: bool,
    pub threshold: Option<f64>,
    pub out: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
}

/// Parses `X1MIN:X1MAX:STEP,X2MIN:X2MAX:STEP`.
pub fn parse_grid_spec(spec: &str) -> Result<([f64; 2], f64, [f64; 2], f64)> {
    let bad = || Error::Config(format!("grid {spec:?} is not of the form X1MIN:X1MAX:STEP,X2MIN:X2MAX:STEP"));
    let axes: Vec<&str> = spec.split(',').collect();
    if axes.len() != 2 {
        return Err(bad());
    }
    let mut parsed = Vec::with_capacity(2);
    for axis in axes {
        let v: Vec<f64> = axis
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if v.len() != 3 {
            return Err(bad());
        }
        parsed.push(([v[0], v[1]], v[2]));
    }
    Ok((parsed[0].0, parsed[0].1, parsed[1].0, parsed[1].1))
}

/// Builds the run configuration from a file or preset plus overrides.
pub fn resolve_config(o: &Overrides) -> Result<RunConfig> {
    let mut c = match (&o.config, &o.preset) {
        (Some(_), Some(_)) => return Err(Error::Config("--config and --preset are mutually exclusive".into())),
        (Some(path), None) => load_config(path)?,
        (None, Some(name)) => name.parse::<Preset>()?.config(),
        (None, None) => parse_config("")?,
    };
    if o.paper_scale {
        paper_scale(&mut c);
    }
    if let Some(v) = o.noise {
        c.noise.level = v;
    }
    if let Some(v) = o.seed {
        c.noise.seed = v;
    }
    match (o.alpha, o.morozov) {
        (Some(_), Some(_)) => return Err(Error::Config("--alpha and --morozov are mutually exclusive".into())),
        (Some(a), None) => {
            c.inversion.mode = RegularizationMode::FixedAlpha;
            c.inversion.alpha = a;
        }
        (None, Some(level)) => {
            c.inversion.mode = RegularizationMode::Morozov;
            c.inversion.morozov_level = Some(level);
        }
        (None, None) => {}
    }
    if let Some(spec) = &o.grid {
        let (x1, s1, x2, s2) = parse_grid_spec(spec)?;
        c.grid.x1_range = x1;
        c.grid.step_x1 = s1;
        c.grid.x2_range = x2;
        c.grid.step_x2 = s2;
    }
    if let Some(t) = o.threads {
        c.run.threads = t;
    }
    if o.unweighted_norm {
        c.inversion.norm = NormConvention::Unweighted;
    }
    if let Some(t) = o.threshold {
        c.inversion.threshold = t;
    }
    if let Some(out) = &o.out {
        c.run.out = out.clone();
    }
    c.validate()?;
    Ok(c)
}

/// Sets the global worker count; 0 leaves the default.
pub fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .or_else(|e| {
            if rayon::current_num_threads() == threads {
                Ok(())
            } else {
                Err(Error::Config(format!("cannot set thread count: {e}")))
            }
        })
}

/// Perturbation region and obstacle, for distance queries.
pub struct SceneRegions {
    interface: Vec<(f64, f64)>,
    obstacle: Option<(ObstacleCurve, Vec<Point2>)>,
}

impl SceneRegions {
    pub fn new(interface: &InterfaceProfile, obstacle: &ObstacleCurve) -> Result<Self> {
        let interface = match interface.support() {
            None => vec![],
            Some((lo, hi)) => {
                let samples = ((hi - lo) / 0.005).ceil() as usize;
                (0..=samples)
                    .map(|k| lo + (hi - lo) * k as f64 / samples as f64)
                    .map(|t| (t, interface.eval(t)))
                    .filter(|(_, f)| f.abs() > 1e-12)
                    .collect()
            }
        };
        let obstacle = if obstacle.is_none() {
            None
        } else {
            Some((obstacle.clone(), obstacle.polygon(1024)?))
        };
        Ok(Self { interface, obstacle })
    }

    /// Distance to the region between the interface and `x2 = 0`.
    pub fn distance_to_perturbation(&self, z: Point2) -> f64 {
        self.interface
            .iter()
            .map(|&(t, f)| {
                let (lo, hi) = if f < 0.0 { (f, 0.0) } else { (0.0, f) };
                let dx2 = if z.x2 < lo {
                    lo - z.x2
                } else if z.x2 > hi {
                    z.x2 - hi
                } else {
                    0.0
                };
                (z.x1 - t).hypot(dx2)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn inside_obstacle(&self, z: Point2) -> bool {
        self.obstacle.as_ref().is_some_and(|(c, _)| c.contains(z))
    }

    pub fn distance_to_obstacle(&self, z: Point2) -> f64 {
        match &self.obstacle {
            None => f64::INFINITY,
            Some((c, poly)) => {
                if c.contains(z) {
                    0.0
                } else {
                    distance_to_polygon(z, poly)
                }
            }
        }
    }

    pub fn distance(&self, z: Point2) -> f64 {
        self.distance_to_perturbation(z).min(self.distance_to_obstacle(z))
    }
}

/// Mean indicator inside the scatterers over the mean farther than one unit away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contrast {
    pub interior: f64,
    pub exterior: f64,
    pub ratio: f64,
}

pub fn contrast(map: &IndicatorMap, regions: &SceneRegions) -> Option<Contrast> {
    let interior = map.mean_where(|z| regions.distance(z) == 0.0);
    let exterior = map.mean_where(|z| regions.distance(z) > 1.0);
    (interior.is_finite() && exterior.is_finite() && exterior > 0.0).then(|| Contrast {
        interior,
        exterior,
        ratio: interior / exterior,
    })
}

/// Bilinear interpolation of `nind` on the map's lattice; `None` outside it.
pub fn sample_nind(map: &IndicatorMap, z: Point2) -> Option<f64> {
    let g = &map.grid;
    let (nx, ny) = g.shape();
    let u = (z.x1 - g.x1_range[0]) / g.step_x1;
    let v = (z.x2 - g.x2_range[0]) / g.step_x2;
    if !(u >= 0.0 && v >= 0.0 && u <= (nx - 1) as f64 && v <= (ny - 1) as f64) {
        return None;
    }
    let (i, j) = ((u.floor() as usize).min(nx.saturating_sub(2)), (v.floor() as usize).min(ny.saturating_sub(2)));
    let (fu, fv) = (u - i as f64, v - j as f64);
    let at = |i: usize, j: usize| map.nind[(j.min(ny - 1)) * nx + i.min(nx - 1)];
    Some(
        (1.0 - fu) * (1.0 - fv) * at(i, j)
            + fu * (1.0 - fv) * at(i + 1, j)
            + (1.0 - fu) * fv * at(i, j + 1)
            + fu * fv * at(i + 1, j + 1),
    )
}

#[derive(Debug, Clone)]
pub struct ForwardReport {
    pub dataset: PathBuf,
    pub n: usize,
    pub unknowns: usize,
    pub cells: usize,
    pub boundary_nodes: usize,
    pub condition_estimate: Option<f64>,
    pub us_norm: f64,
    pub near_field_norm: f64,
    pub seconds: f64,
    pub warnings: Vec<String>,
}

impl ForwardReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "dataset      {}", self.dataset.display());
        let _ = writeln!(s, "receivers    {}", self.n);
        let _ = writeln!(
            s,
            "unknowns     {} ({} cells, {} boundary nodes)",
            self.unknowns, self.cells, self.boundary_nodes
        );
        if let Some(c) = self.condition_estimate {
            let _ = writeln!(s, "condition    {c:.3e}");
        }
        let _ = writeln!(s, "|us|_F       {:.6e}", self.us_norm);
        let _ = writeln!(s, "|us - g0s|_F {:.6e}", self.near_field_norm);
        let _ = writeln!(s, "time         {:.2} s", self.seconds);
        s
    }
}

pub fn cmd_forward(config: &RunConfig) -> Result<ForwardReport> {
    config.validate()?;
    let scenario = config.scenario();
    let mut warnings = vec![];
    if scenario.interface.is_flat() && scenario.obstacle.is_none() {
        warnings.push("background scene: N will be zero".to_string());
    }
    let start = Instant::now();
    let (data, op) = synthesize_dataset(&scenario)?;
    let seconds = start.elapsed().as_secs_f64();
    let path = config.run.out.join(DATASET_FILE);
    let side = sidecar(&scenario, &op)?;
    data.write(&path, &side)?;
    write_atomic(&config.run.out.join("config.toml"), emit_config(config)?.as_bytes())?;
    Ok(ForwardReport {
        dataset: path,
        n: data.n(),
        unknowns: op.unknowns(),
        cells: op.mesh.len(),
        boundary_nodes: op.boundary_len(),
        condition_estimate: op.condition_estimate(),
        us_norm: data.us.norm(),
        near_field_norm: data.near_field().norm(),
        seconds,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct BandReport {
    pub csv: PathBuf,
    pub mask: PathBuf,
    pub map: IndicatorMap,
    pub argmax: Point2,
    pub contrast: Option<Contrast>,
}

#[derive(Debug, Clone)]
pub struct InvertReport {
    pub bands: Vec<BandReport>,
    pub noise: f64,
    pub effective_noise: f64,
    pub seed: u64,
    pub seconds: f64,
    pub warnings: Vec<String>,
}

impl InvertReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(
            s,
            "noise        {:.4}% requested, {:.4}% effective (seed {})",
            100.0 * self.noise,
            100.0 * self.effective_noise,
            self.seed
        );
        for b in &self.bands {
            let _ = writeln!(s, "indicator    {} ({} points)", b.csv.display(), b.map.len());
            let _ = writeln!(s, "  argmax     ({}, {})", format_sig9(b.argmax.x1), format_sig9(b.argmax.x2));
            match b.contrast {
                Some(c) => {
                    let _ = writeln!(
                        s,
                        "  contrast   {:.3} (interior mean {:.4}, exterior mean {:.4})",
                        c.ratio, c.interior, c.exterior
                    );
                }
                None => {
                    let _ = writeln!(s, "  contrast   n/a");
                }
            }
        }
        let _ = writeln!(s, "time         {:.2} s", self.seconds);
        s
    }
}

#[derive(Serialize)]
struct MapSidecar<'a> {
    fingerprint: &'a str,
    scenario: &'a crate::forward::Scenario,
    grid: &'a SamplingGrid,
    policy: RegularizationPolicy,
    norm: NormConvention,
    noise: f64,
    effective_noise: f64,
    seed: u64,
    threshold: f64,
    degenerate: bool,
    failed_points: usize,
    unreached_points: usize,
    argmax: [f64; 2],
    contrast: Option<Contrast>,
    seconds: f64,
}

fn band_names(count: usize) -> Vec<(String, String)> {
    if count == 1 {
        vec![("indicator.csv".into(), "mask.csv".into())]
    } else {
        (1..=count)
            .map(|i| (format!("indicator_s{i}.csv"), format!("mask_s{i}.csv")))
            .collect()
    }
}

fn mask_csv(map: &IndicatorMap, threshold: f64) -> String {
    let mut out = String::from("x1,x2,mask\n");
    for (p, v) in map.points.iter().zip(&map.nind) {
        let _ = writeln!(out, "{},{},{}", format_sig9(p.x1), format_sig9(p.x2), u8::from(*v >= threshold));
    }
    out
}

/// Images the scene from a stored dataset.
pub fn cmd_invert(dataset: &Path, config: &RunConfig) -> Result<InvertReport> {
    config.validate()?;
    let start = Instant::now();
    let scenario = config.scenario();
    let data = NearFieldDataset::read(dataset)?;
    data.check_fingerprint(&scenario)?;
    let greens = scenario.greens()?;
    let line = scenario.measurement;

    let delta = config.noise.level;
    let seed = config.noise.seed;
    let us = if delta > 0.0 { add_noise(&data.us, delta, seed) } else { data.us.clone() };
    let clean = data.us.norm();
    let effective_noise = if clean > 0.0 { (&us - &data.us).norm() / clean } else { 0.0 };
    let n = NearFieldMatrix::from_parts(&us, &data.g0s, &line)?;

    let mut warnings = vec![];
    if n.is_zero() {
        warnings.push("background scene: N is zero and the indicator is constant".to_string());
    }
    let policy = config.policy();
    let regions = SceneRegions::new(&scenario.interface, &scenario.obstacle)?;
    let grids = config.grid.bands();
    let fingerprint = data.fingerprint_hex();
    let mut bands = Vec::with_capacity(grids.len());
    for (grid, (csv_name, mask_name)) in grids.iter().zip(band_names(grids.len())) {
        let band_start = Instant::now();
        let mut map = indicator_map(&n, grid, &line, &policy, &greens, config.inversion.norm)?;
        map.metadata.seed = seed;
        map.metadata.noise = delta;
        map.metadata.fingerprint = fingerprint.clone();
        if map.failed > 0 {
            warnings.push(format!("{csv_name}: {} sampling points failed and were set to 0", map.failed));
        }
        if map.unreached > 0 {
            warnings.push(format!(
                "{csv_name}: discrepancy target out of reach at {} points; smallest alpha used",
                map.unreached
            ));
        }
        let argmax = map.argmax();
        let contrast = contrast(&map, &regions);
        let csv = config.run.out.join(&csv_name);
        let mask = config.run.out.join(&mask_name);
        write_atomic(&csv, map.to_csv().as_bytes())?;
        write_atomic(&mask, mask_csv(&map, config.inversion.threshold).as_bytes())?;
        let side = MapSidecar {
            fingerprint: &fingerprint,
            scenario: &scenario,
            grid,
            policy,
            norm: config.inversion.norm,
            noise: delta,
            effective_noise,
            seed,
            threshold: config.inversion.threshold,
            degenerate: map.degenerate,
            failed_points: map.failed,
            unreached_points: map.unreached,
            argmax: [argmax.x1, argmax.x2],
            contrast,
            seconds: band_start.elapsed().as_secs_f64(),
        };
        write_atomic(&sidecar_path(&csv), serde_json::to_string_pretty(&side)?.as_bytes())?;
        bands.push(BandReport {
            csv,
            mask,
            map,
            argmax,
            contrast,
        });
    }
    Ok(InvertReport {
        bands,
        noise: delta,
        effective_noise,
        seed,
        seconds: start.elapsed().as_secs_f64(),
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub forward: ForwardReport,
    pub invert: InvertReport,
}

impl PipelineReport {
    pub fn summary(&self) -> String {
        format!("{}{}", self.forward.summary(), self.invert.summary())
    }
}

pub fn cmd_pipeline(config: &RunConfig) -> Result<PipelineReport> {
    let forward = cmd_forward(config)?;
    let invert = cmd_invert(&forward.dataset, config)?;
    Ok(PipelineReport { forward, invert })
}

pub struct GalleryEntry {
    pub preset: Preset,
    pub summary: &'static str,
    pub interface: String,
    pub obstacle: String,
}

pub fn cmd_gallery() -> Vec<GalleryEntry> {
    Preset::ALL
        .into_iter()
        .map(|p| {
            let (interface, obstacle) = p.formulas();
            GalleryEntry {
                preset: p,
                summary: p.summary(),
                interface,
                obstacle,
            }
        })
        .collect()
}

pub fn gallery_text() -> String {
    let mut s = String::new();
    for e in cmd_gallery() {
        let c = e.preset.config();
        let _ = writeln!(s, "{:<9} {}", e.preset.name(), e.summary);
        let _ = writeln!(s, "          interface: {}", e.interface);
        let _ = writeln!(s, "          obstacle:  {}", e.obstacle);
        let _ = writeln!(
            s,
            "          k1={} k2={} a={} b={} n={} grid step {}{}",
            c.wavenumbers.k1,
            c.wavenumbers.k2,
            c.measurement.a,
            c.measurement.b,
            c.measurement.n,
            c.grid.step_x1,
            if c.grid.split_x2.is_empty() {
                String::new()
            } else {
                format!(", split at x2={:?}", c.grid.split_x2)
            }
        );
    }
    s
}
