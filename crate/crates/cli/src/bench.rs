//! Seconds per image for each coordinate kind, grid resolution and precise mode.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use cagewarp::coords::CoordinateKind;
use cagewarp::field::{load_field, VoxelRadianceField};
use cagewarp::geometry::{load_obj, Aabb, CagePair, Vec3};
use cagewarp::render::{load_cameras, render_image, Camera, RenderConfig};
use cagewarp::warp::{DeformConfig, DeformedField, WarpCounters};
use serde::{Deserialize, Serialize};

use crate::commands::{dump, required, usage};
use crate::CliError;

/// Timings of the original GPU implementation (one A100), seconds per image.
const REFERENCE: [(&str, &str, f64); 5] = [
    ("128", "mvc", 0.98),
    ("128", "hc", 0.90),
    ("128", "gc", 2.49),
    ("precise", "mvc", 102.0),
    ("precise", "gc", 243.0),
];

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchJob {
    pub field: Option<PathBuf>,
    pub cameras: Option<PathBuf>,
    pub cage_canonical: Option<PathBuf>,
    pub cage_deformed: Option<PathBuf>,
    pub coords: Vec<CoordinateKind>,
    pub grid_res: Vec<usize>,
    pub image_size: usize,
    pub samples: usize,
    pub runs: usize,
    pub warmup: usize,
    pub no_precise: bool,
    pub csv: Option<PathBuf>,
}

impl Default for BenchJob {
    fn default() -> Self {
        BenchJob {
            field: None,
            cameras: None,
            cage_canonical: None,
            cage_deformed: None,
            coords: CoordinateKind::ALL.to_vec(),
            grid_res: vec![64, 128],
            image_size: 100,
            samples: 128,
            runs: 3,
            warmup: 1,
            no_precise: false,
            csv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Grid(usize),
    Precise,
}

impl Mode {
    fn label(self) -> String {
        match self {
            Mode::Grid(n) => format!("{n}^3"),
            Mode::Precise => "precise".into(),
        }
    }

    fn key(self) -> String {
        match self {
            Mode::Grid(n) => n.to_string(),
            Mode::Precise => "precise".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Cell {
    mode: Mode,
    kind: CoordinateKind,
    /// `None` when the combination does not exist (precise harmonic).
    seconds: Option<f64>,
    setup_seconds: f64,
    counters: WarpCounters,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Camera at a fixed angle that sees all of `bounds`.
fn default_camera(bounds: &Aabb, size: usize) -> Result<Camera, CliError> {
    let angle = 0.7f64;
    let radius = 0.5 * bounds.diagonal();
    let dist = radius / (0.5 * angle).sin();
    let eye = bounds.center() + Vec3::new(0.3, 0.4, 1.0).normalize() * dist;
    Ok(Camera::look_at(size, size, angle, eye, bounds.center(), Vec3::y())?)
}

fn deformed<'a>(field: &'a VoxelRadianceField, pair: &CagePair, kind: CoordinateKind, mode: Mode) -> Result<DeformedField<'a>, CliError> {
    let config = DeformConfig {
        kind,
        n: match mode {
            Mode::Grid(n) => n,
            Mode::Precise => 128,
        },
        precise: mode == Mode::Precise,
        delta_t: None,
    };
    Ok(DeformedField::new(field, pair.clone(), config)?)
}

/// Closed-form evaluations spent by one render of `size`² pixels with `samples` per ray.
fn evaluations(scene: &DeformedField, camera: &Camera, size: usize, samples: usize) -> Result<u64, CliError> {
    let cam = Camera::new(
        size,
        size,
        camera.fx * size as f64 / camera.width as f64,
        camera.fy * size as f64 / camera.height as f64,
        camera.cx * size as f64 / camera.width as f64,
        camera.cy * size as f64 / camera.height as f64,
        camera.c2w,
    )?;
    let config = RenderConfig {
        samples,
        ..RenderConfig::default()
    };
    scene.reset_counters();
    render_image(scene, &cam, &config)?;
    Ok(scene.counters().closed_form_evaluations())
}

pub fn bench(job: BenchJob, dump_only: bool) -> Result<(), CliError> {
    if dump(&job, dump_only) {
        return Ok(());
    }
    let field_path = required(&job.field, "field")?;
    let canonical = required(&job.cage_canonical, "cage-canonical")?;
    let deformed_path = required(&job.cage_deformed, "cage-deformed")?;
    if job.coords.is_empty() {
        return Err(usage("--coords needs at least one kind"));
    }
    if job.grid_res.iter().any(|&n| n < cagewarp::warp::MIN_GRID_RES) {
        return Err(usage(format!("--grid-res values must be at least {}", cagewarp::warp::MIN_GRID_RES)));
    }
    if job.image_size < 2 || job.samples < 4 || job.runs == 0 {
        return Err(usage("--image-size must be >= 2, --samples >= 4 and --runs >= 1"));
    }

    let field = load_field(field_path)?;
    let pair = CagePair::new(load_obj(canonical)?, load_obj(deformed_path)?)?;
    let bounds = field.domain().union(&pair.bbox());
    let camera = match &job.cameras {
        Some(p) => load_cameras(p, Some((job.image_size, job.image_size)))?
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Runtime(anyhow::anyhow!("{}: no camera frames", p.display())))?,
        None => default_camera(&bounds, job.image_size)?,
    };
    let config = RenderConfig {
        samples: job.samples,
        ..RenderConfig::default()
    };

    let mut modes: Vec<Mode> = job.grid_res.iter().map(|&n| Mode::Grid(n)).collect();
    if !job.no_precise {
        modes.push(Mode::Precise);
    }
    let mut cells = Vec::new();
    for &mode in &modes {
        for &kind in &job.coords {
            if mode == Mode::Precise && !kind.has_closed_form() {
                cells.push(Cell {
                    mode,
                    kind,
                    seconds: None,
                    setup_seconds: 0.0,
                    counters: WarpCounters::default(),
                });
                continue;
            }
            let start = Instant::now();
            let scene = deformed(&field, &pair, kind, mode)?;
            let setup_seconds = start.elapsed().as_secs_f64();
            for _ in 0..job.warmup {
                render_image(&scene, &camera, &config)?;
            }
            let mut times = Vec::with_capacity(job.runs);
            for _ in 0..job.runs {
                scene.reset_counters();
                let t = Instant::now();
                render_image(&scene, &camera, &config)?;
                times.push(t.elapsed().as_secs_f64());
            }
            let seconds = median(times);
            log::info!("{} {kind}: {seconds:.3} s per image", mode.label());
            cells.push(Cell {
                mode,
                kind,
                seconds: Some(seconds),
                setup_seconds,
                counters: scene.counters(),
            });
        }
    }

    let checks = check_counts(&job, &field, &pair, &camera)?;
    let report = text_report(&job, &modes, &cells, &checks);
    print!("{report}");
    let csv = csv_report(&job, &cells);
    match &job.csv {
        Some(path) => cagewarp::write_atomic(path, csv.as_bytes())?,
        None => print!("\n{csv}"),
    }
    if let Some(bad) = checks.iter().find(|c| !c.ok) {
        return Err(CliError::Runtime(anyhow::anyhow!("evaluation count check failed: {}", bad.text)));
    }
    Ok(())
}

struct Check {
    text: String,
    ok: bool,
}

/// Grid mode must spend the same number of closed-form evaluations whatever
/// the image size and sample count; precise mode must spend more on larger jobs.
fn check_counts(job: &BenchJob, field: &VoxelRadianceField, pair: &CagePair, camera: &Camera) -> Result<Vec<Check>, CliError> {
    let s = job.image_size.max(4);
    let m = job.samples;
    let sizes = [(s / 2, m), (s, m / 2), (s, m)];
    let mut checks = Vec::new();
    if let Some(&n) = job.grid_res.first() {
        let kind = job.coords[0];
        let scene = deformed(field, pair, kind, Mode::Grid(n))?;
        let counts = sizes
            .iter()
            .map(|&(sz, mm)| evaluations(&scene, camera, sz, mm))
            .collect::<Result<Vec<_>, _>>()?;
        let ok = counts.iter().all(|&c| c == counts[0]);
        checks.push(Check {
            text: format!(
                "{kind} grid {n}^3: closed-form evaluations {} / {} / {} at {}²×{} / {}²×{} / {}²×{} ({})",
                counts[0],
                counts[1],
                counts[2],
                sizes[0].0,
                sizes[0].1,
                sizes[1].0,
                sizes[1].1,
                sizes[2].0,
                sizes[2].1,
                if ok { "independent of image size and samples" } else { "DEPENDS on image size or samples" }
            ),
            ok,
        });
    }
    if !job.no_precise {
        if let Some(&kind) = job.coords.iter().find(|k| k.has_closed_form()) {
            // Small jobs keep the check cheap, but tiny ones can miss the cage.
            let (b, mb) = ((s / 4).max(8), (m / 4).max(8));
            let small = [(b, mb), (2 * b, mb), (b, 2 * mb)];
            let scene = deformed(field, pair, kind, Mode::Precise)?;
            let counts = small
                .iter()
                .map(|&(sz, mm)| evaluations(&scene, camera, sz, mm))
                .collect::<Result<Vec<_>, _>>()?;
            let ok = counts[1] > counts[0] && counts[2] > counts[0];
            checks.push(Check {
                text: format!(
                    "{kind} precise: closed-form evaluations {} / {} / {} at {}²×{} / {}²×{} / {}²×{} ({})",
                    counts[0],
                    counts[1],
                    counts[2],
                    small[0].0,
                    small[0].1,
                    small[1].0,
                    small[1].1,
                    small[2].0,
                    small[2].1,
                    if ok { "grows with image size and samples" } else { "DOES NOT grow" }
                ),
                ok,
            });
        }
    }
    Ok(checks)
}

fn text_report(job: &BenchJob, modes: &[Mode], cells: &[Cell], checks: &[Check]) -> String {
    let mut out = String::new();
    let cell = |mode: Mode, kind: CoordinateKind| cells.iter().find(|c| c.mode == mode && c.kind == kind);
    let _ = writeln!(
        out,
        "Seconds per image ({0}x{0} pixels, {1} samples per ray, median of {2} after {3} warmup)",
        job.image_size, job.samples, job.runs, job.warmup
    );
    let _ = write!(out, "{:<10}", "");
    for k in &job.coords {
        let _ = write!(out, "{:>12}", k.as_str().to_uppercase());
    }
    out.push('\n');
    for &mode in modes {
        let _ = write!(out, "{:<10}", mode.label());
        for &k in &job.coords {
            let v = cell(mode, k).and_then(|c| c.seconds).map_or("N/A".to_string(), |s| format!("{s:.3}"));
            let _ = write!(out, "{v:>12}");
        }
        out.push('\n');
    }

    let _ = writeln!(out, "\nSetup seconds (coordinate precompute and occupancy)");
    for &mode in modes.iter().filter(|m| matches!(m, Mode::Grid(_))) {
        let _ = write!(out, "{:<10}", mode.label());
        for &k in &job.coords {
            let v = cell(mode, k).map_or("-".to_string(), |c| format!("{:.2}", c.setup_seconds));
            let _ = write!(out, "{v:>12}");
        }
        out.push('\n');
    }

    if modes.contains(&Mode::Precise) {
        let _ = writeln!(out, "\nSpeedup of grid over precise rendering");
        for &mode in modes.iter().filter(|m| matches!(m, Mode::Grid(_))) {
            let _ = write!(out, "{:<10}", mode.label());
            for &k in &job.coords {
                let ratio = cell(Mode::Precise, k)
                    .and_then(|p| p.seconds)
                    .zip(cell(mode, k).and_then(|c| c.seconds))
                    .map_or("N/A".to_string(), |(p, g)| format!("{:.1}x", p / g));
                let _ = write!(out, "{ratio:>12}");
            }
            out.push('\n');
        }
    }

    let _ = writeln!(out, "\nClosed-form weight evaluations per configuration (precompute + per-sample)");
    for c in cells.iter().filter(|c| c.seconds.is_some()) {
        let _ = writeln!(
            out,
            "  {:<8} {:<4} total {:>10}  precompute {:>9}  grid samples {:>10}  precise samples {:>10}  fallbacks {}",
            c.mode.label(),
            c.kind.as_str(),
            c.counters.closed_form_evaluations(),
            c.counters.precompute_evaluations,
            c.counters.grid_samples,
            c.counters.precise_samples,
            c.counters.fallback_samples + c.counters.nearest_node_samples
        );
    }
    for c in checks {
        let _ = writeln!(out, "  check: {}", c.text);
    }

    let _ = write!(out, "\nReference, original implementation on one A100 GPU (s/image):");
    for (mode, kind, secs) in REFERENCE {
        let label = if mode == "precise" { "precise".to_string() } else { format!("{mode}^3") };
        let _ = write!(out, " {} {label} {secs};", kind.to_uppercase());
    }
    let _ = writeln!(out, " HC precise N/A.");
    let _ = writeln!(
        out,
        "Absolute timings are not comparable across hardware; compare the precise/grid ratios (reference MVC 102/0.98 = {:.0}x).",
        102.0 / 0.98
    );
    out
}

fn csv_report(job: &BenchJob, cells: &[Cell]) -> String {
    let mut out = String::from(
        "mode,coords,image_size,samples,seconds,setup_seconds,closed_form_evaluations,precompute_evaluations,grid_samples,precise_samples,fallback_samples,nearest_node_samples,reference_seconds\n",
    );
    for c in cells {
        let reference = REFERENCE
            .iter()
            .find(|(m, k, _)| *m == c.mode.key() && *k == c.kind.as_str())
            .map_or(String::new(), |r| r.2.to_string());
        let secs = c.seconds.map_or("N/A".to_string(), |s| format!("{s:.6}"));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{},{},{},{},{},{},{}",
            c.mode.key(),
            c.kind,
            job.image_size,
            job.samples,
            secs,
            c.setup_seconds,
            c.counters.closed_form_evaluations(),
            c.counters.precompute_evaluations,
            c.counters.grid_samples,
            c.counters.precise_samples,
            c.counters.fallback_samples,
            c.counters.nearest_node_samples,
            reference
        );
    }
    out
}
