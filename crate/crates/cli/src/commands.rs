use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use cagewarp::coords::CoordinateKind;
use cagewarp::field::{bake_analytic, load_field, save_field, AnalyticSceneSpec, VoxelRadianceField};
use cagewarp::geometry::{generate_cage, interpolate_cage, load_obj, save_obj, CagePair, CAGE_VERTEX_BUDGET};
use cagewarp::render::{
    load_cameras, psnr, render_image, write_disparity, write_image, write_opacity, Camera, ImageFormat, RadianceQuery, RenderConfig,
    RenderOutput,
};
use cagewarp::warp::{
    load_coord_grid, load_or_precompute, precompute_coord_grid, save_coord_grid, unenclosed_nodes, DeformConfig,
    DeformedField,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub(crate) fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| usage(format!("missing required option --{flag}")))
}

/// Prints the resolved job as JSON; returns true when the caller should stop.
pub(crate) fn dump(job: &impl Serialize, dump: bool) -> bool {
    if dump {
        println!("{}", serde_json::to_string_pretty(job).expect("jobs serialize"));
    }
    dump
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BakeJob {
    pub scene: Option<PathBuf>,
    pub res: usize,
    pub out: Option<PathBuf>,
}

impl Default for BakeJob {
    fn default() -> Self {
        BakeJob {
            scene: None,
            res: 64,
            out: None,
        }
    }
}

pub fn bake(job: BakeJob, dump_only: bool) -> Result<(), CliError> {
    if dump(&job, dump_only) {
        return Ok(());
    }
    let scene = required(&job.scene, "scene")?;
    let out = required(&job.out, "out")?;
    if job.res < 2 {
        return Err(usage(format!("--res must be at least 2, got {}", job.res)));
    }
    let spec = AnalyticSceneSpec::load(scene)?;
    let field = bake_analytic(&spec, [job.res; 3])?;
    save_field(&field, out)?;
    println!(
        "baked {} primitives into {}^3 voxels (sh degree {}) -> {}",
        spec.primitives.len(),
        job.res,
        field.sh_degree(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenCageJob {
    pub field: Option<PathBuf>,
    pub threshold: f64,
    pub dilate: usize,
    pub coarse_res: usize,
    pub out: Option<PathBuf>,
}

impl Default for GenCageJob {
    fn default() -> Self {
        GenCageJob {
            field: None,
            threshold: 1.0,
            dilate: 1,
            coarse_res: 6,
            out: None,
        }
    }
}

pub fn gen_cage(job: GenCageJob, dump_only: bool) -> Result<(), CliError> {
    if dump(&job, dump_only) {
        return Ok(());
    }
    let field_path = required(&job.field, "field")?;
    let out = required(&job.out, "out")?;
    if job.coarse_res == 0 {
        return Err(usage("--coarse-res must be positive"));
    }
    let field = load_field(field_path)?;
    let cage = generate_cage(&field.density_grid(), job.threshold, job.dilate, job.coarse_res)?;
    save_obj(&cage.mesh, out)?;
    println!("cage vertices: {}", cage.vertex_count());
    if !cage.within_budget {
        log::warn!(
            "cage has {} vertices, outside the recommended {}..={}",
            cage.vertex_count(),
            CAGE_VERTEX_BUDGET.start(),
            CAGE_VERTEX_BUDGET.end()
        );
    }
    Ok(())
}

/// Dense voxels the canonical cage misses stay in place when it deforms.
fn warn_unenclosed(field: &VoxelRadianceField, pair: &CagePair) {
    let missed = unenclosed_nodes(field, pair.canonical(), GenCageJob::default().threshold);
    if let Some(p) = missed.first() {
        log::warn!(
            "{} field nodes with density above {} lie outside the canonical cage (e.g. {:.3}, {:.3}, {:.3}); they will not move",
            missed.len(),
            GenCageJob::default().threshold,
            p.x,
            p.y,
            p.z
        );
    }
}

/// Cage and coordinate options shared by precompute, render and animate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CageOptions {
    pub cage_canonical: Option<PathBuf>,
    pub cage_deformed: Option<PathBuf>,
    pub coords: CoordinateKind,
    pub grid_res: usize,
    pub precise: bool,
}

impl CageOptions {
    fn with_res(grid_res: usize) -> Self {
        CageOptions {
            cage_canonical: None,
            cage_deformed: None,
            coords: CoordinateKind::Mvc,
            grid_res,
            precise: false,
        }
    }

    fn deform_config(&self) -> DeformConfig {
        DeformConfig {
            kind: self.coords,
            n: self.grid_res,
            precise: self.precise,
            delta_t: None,
        }
    }

    /// Checks the option combination; returns whether a cage pair was given.
    fn validate(&self, needs_pair: bool) -> Result<bool, CliError> {
        if self.precise && !self.coords.has_closed_form() {
            return Err(usage(format!(
                "--precise cannot be used with --coords {}: {}",
                self.coords,
                cagewarp::Error::PreciseHarmonic
            )));
        }
        if !self.precise && self.grid_res < cagewarp::warp::MIN_GRID_RES {
            return Err(usage(format!(
                "--grid-res must be at least {}, got {}",
                cagewarp::warp::MIN_GRID_RES,
                self.grid_res
            )));
        }
        match (&self.cage_canonical, &self.cage_deformed) {
            (Some(_), Some(_)) => Ok(true),
            (None, None) if !needs_pair => Ok(false),
            (None, None) => Err(usage("missing required options --cage-canonical and --cage-deformed")),
            (Some(_), None) => Err(usage("--cage-canonical given without --cage-deformed")),
            (None, Some(_)) => Err(usage("--cage-deformed given without --cage-canonical")),
        }
    }

    fn load_pair(&self) -> Result<CagePair, CliError> {
        let c = self.cage_canonical.as_ref().expect("validated");
        let d = self.cage_deformed.as_ref().expect("validated");
        let canonical = load_obj(c)?;
        let deformed = load_obj(d)?;
        CagePair::new(canonical, deformed)
            .with_context(|| format!("cages {} and {}", c.display(), d.display()))
            .map_err(CliError::Runtime)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PrecomputeJob {
    pub field: Option<PathBuf>,
    #[serde(flatten)]
    pub cage: CageOptions,
    pub out: Option<PathBuf>,
}

impl Default for PrecomputeJob {
    fn default() -> Self {
        PrecomputeJob {
            field: None,
            cage: CageOptions::with_res(128),
            out: None,
        }
    }
}

pub fn precompute(job: PrecomputeJob, dump_only: bool) -> Result<(), CliError> {
    if dump(&job, dump_only) {
        return Ok(());
    }
    job.cage.validate(true)?;
    if job.cage.precise {
        return Err(usage("--precise evaluates coordinates per sample; there is nothing to precompute"));
    }
    let out = required(&job.out, "out")?;
    if let Some(f) = &job.field {
        load_field(f)?;
    }
    let pair = job.cage.load_pair()?;
    let start = Instant::now();
    let grid = precompute_coord_grid(&pair, job.cage.coords, job.cage.grid_res)?;
    save_coord_grid(&grid, out)?;
    println!(
        "{} coordinates on {}^3 nodes ({} valid, {} evaluations) in {:.2} s -> {}",
        grid.kind(),
        grid.res(),
        grid.valid_count(),
        grid.evaluations(),
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

/// Field, camera and ray-marching options shared by render and animate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewOptions {
    pub field: Option<PathBuf>,
    pub cameras: Option<PathBuf>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub samples: usize,
    pub near: Option<f64>,
    pub far: Option<f64>,
    pub background: [f64; 3],
    pub white_background: bool,
    pub format: String,
    pub opacity: bool,
    pub out: Option<PathBuf>,
}

impl Default for ViewOptions {
    fn default() -> Self {
        let r = RenderConfig::default();
        ViewOptions {
            field: None,
            cameras: None,
            width: None,
            height: None,
            samples: r.samples,
            near: None,
            far: None,
            background: r.background,
            white_background: false,
            format: "png".into(),
            opacity: false,
            out: None,
        }
    }
}

struct View {
    field: VoxelRadianceField,
    opacity: bool,
    cameras: Vec<Camera>,
    config: RenderConfig,
    format: ImageFormat,
    out: PathBuf,
}

impl ViewOptions {
    fn validate(&self) -> Result<(RenderConfig, ImageFormat), CliError> {
        required(&self.field, "field")?;
        required(&self.cameras, "cameras")?;
        required(&self.out, "out")?;
        let format = match self.format.to_ascii_lowercase().as_str() {
            "png" => ImageFormat::Png,
            "ppm" => ImageFormat::Ppm,
            other => return Err(usage(format!("--format must be png or ppm, got `{other}`"))),
        };
        if self.width.is_some() != self.height.is_some() {
            return Err(usage("--width and --height must be given together"));
        }
        if self.width == Some(0) || self.height == Some(0) {
            return Err(usage("--width and --height must be positive"));
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(usage("--background components must lie in [0, 1]"));
        }
        let config = RenderConfig {
            samples: self.samples,
            near: self.near,
            far: self.far,
            background: self.background,
            white_background: self.white_background,
            ..RenderConfig::default()
        };
        config.validate().map_err(|e| usage(e.to_string()))?;
        Ok((config, format))
    }

    fn load(&self, config: RenderConfig, format: ImageFormat) -> Result<View, CliError> {
        let field = load_field(self.field.as_ref().expect("validated"))?;
        let size = self.width.zip(self.height);
        let cameras = load_cameras(self.cameras.as_ref().expect("validated"), size)?;
        if cameras.is_empty() {
            return Err(CliError::Runtime(anyhow::anyhow!(
                "{}: no camera frames",
                self.cameras.as_ref().unwrap().display()
            )));
        }
        let out = self.out.clone().expect("validated");
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(View {
            field,
            opacity: self.opacity,
            cameras,
            config,
            format,
            out,
        })
    }
}

fn write_frame(view: &View, image: &RenderOutput, index: usize) -> Result<PathBuf, CliError> {
    let ext = view.format.extension();
    let rgb = view.out.join(format!("rgb_{index:03}.{ext}"));
    write_image(image, &rgb, view.format)?;
    write_disparity(image, view.out.join(format!("disparity_{index:03}.{ext}")), view.format)?;
    if view.opacity {
        write_opacity(image, view.out.join(format!("opacity_{index:03}.{ext}")), view.format)?;
    }
    Ok(rgb)
}

fn render_timed(scene: &impl RadianceQuery, camera: &Camera, config: &RenderConfig) -> Result<(RenderOutput, f64), CliError> {
    let start = Instant::now();
    let image = render_image(scene, camera, config)?;
    Ok((image, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderJob {
    #[serde(flatten)]
    pub view: ViewOptions,
    #[serde(flatten)]
    pub cage: CageOptions,
    pub grid: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub compare_canonical: bool,
}

impl Default for RenderJob {
    fn default() -> Self {
        RenderJob {
            view: ViewOptions::default(),
            cage: CageOptions::with_res(128),
            grid: None,
            cache_dir: None,
            compare_canonical: false,
        }
    }
}

pub fn render(job: RenderJob, dump_only: bool) -> Result<(), CliError> {
    if dump(&job, dump_only) {
        return Ok(());
    }
    let (config, format) = job.view.validate()?;
    let deform = job.cage.validate(false)?;
    if !deform && (job.grid.is_some() || job.compare_canonical || job.cage.precise) {
        return Err(usage("--grid, --precise and --compare-canonical need --cage-canonical and --cage-deformed"));
    }
    if job.cage.precise && (job.grid.is_some() || job.cache_dir.is_some()) {
        return Err(usage("--precise does not use a coordinate grid; drop --grid/--cache-dir"));
    }
    if job.grid.is_some() && job.cache_dir.is_some() {
        return Err(usage("--grid and --cache-dir are mutually exclusive"));
    }
    let view = job.view.load(config, format)?;

    if !deform {
        for (i, cam) in view.cameras.iter().enumerate() {
            let (image, secs) = render_timed(&view.field, cam, &view.config)?;
            let path = write_frame(&view, &image, i)?;
            println!("frame {i}: {secs:.2} s -> {}", path.display());
        }
        return Ok(());
    }

    let pair = job.cage.load_pair()?;
    warn_unenclosed(&view.field, &pair);
    let dc = job.cage.deform_config();
    let start = Instant::now();
    let deformed = match (&job.grid, &job.cache_dir) {
        (Some(path), _) => DeformedField::with_grid(&view.field, pair, dc, load_coord_grid(path)?)?,
        (None, Some(dir)) => {
            let grid = load_or_precompute(&pair, dc.kind, dc.n, dir)?;
            DeformedField::with_grid(&view.field, pair, dc, grid)?
        }
        (None, None) => DeformedField::new(&view.field, pair, dc)?,
    };
    log::info!("deformation setup took {:.2} s", start.elapsed().as_secs_f64());
    for (i, cam) in view.cameras.iter().enumerate() {
        deformed.reset_counters();
        let (image, secs) = render_timed(&deformed, cam, &view.config)?;
        let path = write_frame(&view, &image, i)?;
        let c = deformed.counters();
        log::info!(
            "frame {i}: grid samples {}, precise samples {}, fallbacks {}, nearest-node {}",
            c.grid_samples,
            c.precise_samples,
            c.fallback_samples,
            c.nearest_node_samples
        );
        print!("frame {i}: {secs:.2} s -> {}", path.display());
        if job.compare_canonical {
            // March the same ray interval so both images share sample positions.
            let (near, far) = view.config.ray_range(cam, &deformed.bounds())?;
            let same_range = RenderConfig {
                near: Some(near),
                far: Some(far),
                ..view.config
            };
            let reference = render_image(&view.field, cam, &same_range)?;
            print!(", PSNR vs canonical {:.2} dB", psnr(&image.rgb, &reference.rgb));
        }
        println!();
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AnimateJob {
    #[serde(flatten)]
    pub view: ViewOptions,
    #[serde(flatten)]
    pub cage: CageOptions,
    pub camera_index: usize,
    pub frames: usize,
    pub t0: f64,
    pub t1: f64,
}

impl Default for AnimateJob {
    fn default() -> Self {
        AnimateJob {
            view: ViewOptions::default(),
            cage: CageOptions::with_res(64),
            camera_index: 0,
            frames: 8,
            t0: 0.0,
            t1: 1.0,
        }
    }
}

/// Interpolation parameter of each frame, evenly spaced from `t0` to `t1`.
pub fn frame_times(t0: f64, t1: f64, frames: usize) -> Vec<f64> {
    if frames == 1 {
        return vec![t0];
    }
    (0..frames)
        .map(|i| t0 + (t1 - t0) * i as f64 / (frames - 1) as f64)
        .collect()
}

pub fn animate(job: AnimateJob, dump_only: bool) -> Result<(), CliError> {
    if dump(&job, dump_only) {
        return Ok(());
    }
    let (config, format) = job.view.validate()?;
    job.cage.validate(true)?;
    if job.frames == 0 {
        return Err(usage("--frames must be positive"));
    }
    for (flag, t) in [("t0", job.t0), ("t1", job.t1)] {
        if !(0.0..=1.0).contains(&t) {
            return Err(usage(format!("--{flag} must lie in [0, 1], got {t}")));
        }
    }
    let view = job.view.load(config, format)?;
    let camera = view.cameras.get(job.camera_index).ok_or_else(|| {
        usage(format!(
            "--camera-index {} out of range ({} cameras)",
            job.camera_index,
            view.cameras.len()
        ))
    })?;
    let pair = job.cage.load_pair()?;
    warn_unenclosed(&view.field, &pair);
    for (i, t) in frame_times(job.t0, job.t1, job.frames).into_iter().enumerate() {
        let cage = interpolate_cage(&pair, t)?;
        let frame_pair = pair.with_deformed(cage)?;
        let deformed = DeformedField::new(&view.field, frame_pair, job.cage.deform_config())?;
        let (image, secs) = render_timed(&deformed, camera, &view.config)?;
        let path = write_frame(&view, &image, i)?;
        println!("frame {i} (t = {t:.4}): {secs:.2} s -> {}", path.display());
    }
    Ok(())
}
