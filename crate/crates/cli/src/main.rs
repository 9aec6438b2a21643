//! Command-line driver for garment texture recovery.
//!
//! Subcommands cover the full pipeline: `fit` registers a template to a pair
//! of catalog views and recovers its coarse texture, `warp-tps` runs the
//! thin-plate-spline baseline, `refine` fills unobserved texels, `simulate`
//! and `eval` drive the synthetic corpus, and `preview` renders any
//! mesh/texture pair for inspection.
//!
//! Exit codes: 0 success, 2 bad invocation, 3 bad input, 4 numerical failure.
//! Failures print exactly one `error[<class>]: <message>` line to stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use garmtex::error::ErrorKind;
use garmtex::fit::{fit_garment, FitConfig, Observation, ViewObservation, TEXTURE_INIT};
use garmtex::geometry::{load_obj, rasterize_uv_domain, save_obj, BlendshapeSet, TemplateMesh};
use garmtex::harness::{evaluate, load_dataset, simulate_pairs, write_dataset, Method, SimSpec};
use garmtex::refine::{
    inpaint_ns, refine_from_coverage, refine_texture, RefineParams, ResidualMask,
};
use garmtex::render::{
    render_textured, Camera, CoverageMap, Image, TextureMap, View, COVERAGE_PNG_SCALE,
};
use garmtex::{templates, Error, Result, Vec2, Vec3};

#[derive(Parser)]
#[command(
    name = "garmtex",
    version,
    about = "Recovers UV texture maps for garment template meshes from front/back catalog images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a template to front/back views and recover its texture.
    Fit(FitArgs),
    /// Bake a texture by thin-plate-spline warping of landmark points.
    WarpTps(WarpTpsArgs),
    /// Fill unobserved texels of a coarse texture and blend the result.
    Refine(RefineArgs),
    /// Generate a synthetic corpus of (ground truth, recovered) pairs.
    Simulate(SimulateArgs),
    /// Score recovery methods against ground truth over a dataset.
    Eval(EvalArgs),
    /// Render a mesh from both views, optionally textured and deformed.
    Preview(PreviewArgs),
}

/// Mesh input: a built-in template or an OBJ file.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct MeshSource {
    /// Built-in template name (quad | mini | tshirt).
    #[arg(long)]
    template: Option<String>,
    /// Triangulated OBJ with per-corner UVs.
    #[arg(long)]
    obj: Option<PathBuf>,
}

impl MeshSource {
    fn load(&self) -> Result<(TemplateMesh, Option<BlendshapeSet>)> {
        match (&self.template, &self.obj) {
            (Some(name), None) => {
                let t = templates::builtin(name)?;
                Ok((t.mesh, Some(t.blendshapes)))
            }
            (None, Some(path)) => Ok((load_obj(path)?, None)),
            _ => unreachable!("clap enforces exactly one source"),
        }
    }
}

/// Catalog observation inputs shared by fit and warp-tps.
#[derive(Args)]
struct ObservationArgs {
    /// Front catalog image (RGB PNG).
    #[arg(long)]
    front: PathBuf,
    /// Back catalog image (RGB PNG).
    #[arg(long)]
    back: PathBuf,
    /// Front silhouette mask (grayscale PNG, >= 128 inside).
    #[arg(long)]
    mask_front: PathBuf,
    /// Back silhouette mask (grayscale PNG).
    #[arg(long)]
    mask_back: PathBuf,
    /// Landmark pixels JSON: {"front": {name: [x, y]}, "back": {...}}.
    #[arg(long)]
    landmarks: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// Fit configuration TOML profile; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set steps_shape=100.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<FitConfig> {
        let mut cfg = match &self.config {
            Some(path) => FitConfig::from_toml_str(&read_file(path)?)?,
            None => FitConfig::default(),
        };
        for pair in &self.set {
            cfg.apply_override(pair)?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RefineParamArgs {
    /// Refinement parameter TOML profile; defaults apply when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override one refinement key (repeatable), e.g. --set ns_iterations=200.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RefineParamArgs {
    fn load(&self) -> Result<RefineParams> {
        let mut params = match &self.params {
            Some(path) => RefineParams::from_toml_str(&read_file(path)?)?,
            None => RefineParams::default(),
        };
        for pair in &self.set {
            params.apply_override(pair)?;
        }
        Ok(params)
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    mesh: MeshSource,
    #[command(flatten)]
    obs: ObservationArgs,
    /// Output directory for coarse.png, coverage.png, fitted.obj, trace.csv.
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct WarpTpsArgs {
    #[command(flatten)]
    mesh: MeshSource,
    #[command(flatten)]
    obs: ObservationArgs,
    /// Output directory for tps.png and tps_mask.png.
    #[arg(short, long)]
    out: PathBuf,
    /// Texture resolution to bake at.
    #[arg(long, default_value_t = 512)]
    resolution: usize,
}

/// Hole source for refine: a fit coverage map or an explicit mask.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct HoleSource {
    /// Coverage PNG written by fit (16-bit grayscale).
    #[arg(long)]
    coverage: Option<PathBuf>,
    /// Explicit hole mask PNG (grayscale, >= 128 = hole).
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[command(flatten)]
    mesh: MeshSource,
    /// Coarse texture PNG to repair.
    #[arg(long)]
    coarse: PathBuf,
    #[command(flatten)]
    holes: HoleSource,
    /// Output directory for fine.png and mask.png.
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    params: RefineParamArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Corpus specification TOML.
    #[arg(long)]
    spec: PathBuf,
    /// Output dataset directory (one subdirectory per sample).
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset directory produced by simulate.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for report.csv and report.json.
    #[arg(short, long)]
    out: PathBuf,
    /// Comma-separated methods to score (phase1, tps).
    #[arg(long, default_value = "phase1,tps")]
    methods: String,
    #[command(flatten)]
    params: RefineParamArgs,
}

#[derive(Args)]
struct PreviewArgs {
    #[command(flatten)]
    mesh: MeshSource,
    /// Texture PNG; a neutral gray map is used when omitted.
    #[arg(long)]
    texture: Option<PathBuf>,
    /// Blendshape coefficient NAME=VALUE (repeatable, templates only).
    #[arg(long = "coeff", value_name = "NAME=VALUE")]
    coeffs: Vec<String>,
    /// Output directory for front_render.png and back_render.png.
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_workers() {
        eprintln!("error[invocation]: {msg}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, label) = match e.kind() {
                ErrorKind::BadInput => (3u8, "input"),
                ErrorKind::Numerical => (4u8, "numerical"),
            };
            // The contract is a single stderr line; some wrapped parser
            // errors (TOML) render multi-line, so collapse whitespace.
            let msg: Vec<String> =
                e.to_string().split_whitespace().map(str::to_string).collect();
            eprintln!("error[{label}]: {}", msg.join(" "));
            ExitCode::from(code)
        }
    }
}

/// Worker-thread override for corpus parallelism.
fn configure_workers() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("GARMTEX_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or(format!("GARMTEX_WORKERS must be a positive integer, got \"{raw}\""))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => run_fit(args),
        Command::WarpTps(args) => run_warp_tps(args),
        Command::Refine(args) => run_refine(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Eval(args) => run_eval(args),
        Command::Preview(args) => run_preview(args),
    }
}

fn run_fit(args: FitArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let (mesh, _) = args.mesh.load()?;
    let obs = load_observation(&args.obs)?;
    let result = fit_garment(&mesh, &obs, &cfg)?;

    ensure_dir(&args.out)?;
    result.texture.save_png(args.out.join("coarse.png"))?;
    result.coverage.to_image(COVERAGE_PNG_SCALE).save_png_gray16(args.out.join("coverage.png"))?;
    let mut fitted = mesh;
    fitted.vertices = result.vertices.clone();
    save_obj(&fitted, args.out.join("fitted.obj"))?;
    write_file(&args.out.join("trace.csv"), &trace_csv(&result))?;
    println!(
        "fit: scale {:.4}, {} shape + {} texture steps -> {}",
        result.scale,
        result.shape_trace.len(),
        result.texture_trace.len(),
        args.out.display()
    );
    Ok(())
}

fn run_warp_tps(args: WarpTpsArgs) -> Result<()> {
    let (mesh, _) = args.mesh.load()?;
    let obs = load_observation(&args.obs)?;
    let (texture, mask) = garmtex::tps::tps_bake_texture(&mesh, &obs, args.resolution)?;

    ensure_dir(&args.out)?;
    texture.save_png(args.out.join("tps.png"))?;
    mask.to_image().save_png(args.out.join("tps_mask.png"))?;
    let domain = rasterize_uv_domain(&mesh, args.resolution)?;
    println!(
        "warp-tps: baked {0}x{0}, {1:.1}% of domain unobserved -> {2}",
        args.resolution,
        100.0 * mask.hole_fraction(&domain),
        args.out.display()
    );
    Ok(())
}

fn run_refine(args: RefineArgs) -> Result<()> {
    let params = args.params.load()?;
    let (mesh, _) = args.mesh.load()?;
    let coarse = TextureMap::load_png(&args.coarse)?;
    let domain = rasterize_uv_domain(&mesh, coarse.resolution)?;

    let (fine, mask) = match (&args.holes.coverage, &args.holes.mask) {
        (Some(path), None) => {
            let img = load_gray(path, coarse.resolution)?;
            let coverage = CoverageMap::from_image(&img, COVERAGE_PNG_SCALE);
            refine_from_coverage(&coarse, &coverage, &domain, &params)?
        }
        (None, Some(path)) => {
            let img = load_gray(path, coarse.resolution)?;
            let mask = ResidualMask::from_image(&img, &domain)?;
            let inpainted = inpaint_ns(&coarse, &mask, &domain, &params)?;
            let fine = refine_texture(&coarse, &inpainted, &mask, &domain, &params)?;
            (fine, mask)
        }
        _ => unreachable!("clap enforces exactly one hole source"),
    };

    ensure_dir(&args.out)?;
    fine.save_png(args.out.join("fine.png"))?;
    mask.to_image().save_png(args.out.join("mask.png"))?;
    println!(
        "refine: filled {} texels ({:.1}% of domain) -> {}",
        mask.hole_count(),
        100.0 * mask.hole_fraction(&domain),
        args.out.display()
    );
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let spec = SimSpec::from_toml_str(&read_file(&args.spec)?)?;
    let cfg = args.config.load()?;
    let dataset = simulate_pairs(&spec, &cfg)?;
    write_dataset(&dataset, &args.out)?;
    println!(
        "simulate: {} samples written to {} ({} skipped)",
        dataset.samples.len(),
        args.out.display(),
        dataset.skipped.len()
    );
    for (index, reason) in &dataset.skipped {
        println!("  skipped sample {index}: {reason}");
    }
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let params = args.params.load()?;
    let methods: Vec<Method> =
        args.methods.split(',').map(|m| Method::parse(m.trim())).collect::<Result<_>>()?;
    let dataset = load_dataset(&args.data)?;
    let report = evaluate(&dataset.samples, &methods, &params)?;

    ensure_dir(&args.out)?;
    write_file(&args.out.join("report.csv"), &report.to_csv())?;
    write_file(&args.out.join("report.json"), &report.to_json()?)?;
    for s in &report.summary {
        println!(
            "eval: {:<7} {:<8} mean ssim {:.4}, mean psnr {:.2}, n={}",
            s.method, s.stage, s.mean_ssim, s.mean_psnr, s.count
        );
    }
    println!("eval: report written to {}", args.out.display());
    Ok(())
}

fn run_preview(args: PreviewArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let (mesh, blendshapes) = args.mesh.load()?;
    let vertices = preview_vertices(&mesh, blendshapes.as_ref(), &args.coeffs)?;
    let texture = match &args.texture {
        Some(path) => TextureMap::load_png(path)?,
        None => TextureMap::filled(cfg.texture_resolution, TEXTURE_INIT),
    };

    ensure_dir(&args.out)?;
    for (view, name) in [(View::Front, "front_render.png"), (View::Back, "back_render.png")] {
        let camera = Camera::new(view, cfg.world_extent, cfg.image_size);
        let render = render_textured(&mesh, &vertices, &texture, &camera);
        render.image.save_png(args.out.join(name))?;
    }
    println!("preview: rendered both views -> {}", args.out.display());
    Ok(())
}

fn preview_vertices(
    mesh: &TemplateMesh,
    blendshapes: Option<&BlendshapeSet>,
    coeffs: &[String],
) -> Result<Vec<Vec3>> {
    if coeffs.is_empty() {
        return Ok(mesh.vertices.clone());
    }
    let Some(shapes) = blendshapes else {
        return Err(Error::Config {
            msg: "--coeff requires a built-in template (OBJ meshes carry no blendshapes)".into(),
        });
    };
    let names = shapes.names();
    let mut values = vec![0.0; names.len()];
    for pair in coeffs {
        let (name, value) = pair.split_once('=').ok_or_else(|| Error::Config {
            msg: format!("coefficient '{pair}' is not of the form name=value"),
        })?;
        let idx = names.iter().position(|n| n == name).ok_or_else(|| Error::Config {
            msg: format!("unknown blendshape \"{name}\" (available: {})", names.join(", ")),
        })?;
        values[idx] = value.parse().map_err(|_| Error::Config {
            msg: format!("coefficient value '{value}' for \"{name}\" is not a number"),
        })?;
    }
    shapes.apply(&values)
}

/// Loads the five observation files and checks the image/mask pairing.
fn load_observation(args: &ObservationArgs) -> Result<Observation> {
    let lm = load_landmarks(&args.landmarks)?;
    let front = load_view(&args.front, &args.mask_front, lm.front)?;
    let back = load_view(&args.back, &args.mask_back, lm.back)?;
    Ok(Observation { front, back })
}

fn load_view(
    image_path: &Path,
    mask_path: &Path,
    landmarks: BTreeMap<String, [f64; 2]>,
) -> Result<ViewObservation> {
    let image = Image::load_png(image_path)?;
    let mask = Image::load_png(mask_path)?;
    if image.channels != 3 {
        return Err(Error::BadImage {
            path: image_path.display().to_string(),
            msg: format!("catalog image must be RGB, got {} channel(s)", image.channels),
        });
    }
    if mask.channels != 1 {
        return Err(Error::BadImage {
            path: mask_path.display().to_string(),
            msg: format!("mask must be grayscale, got {} channel(s)", mask.channels),
        });
    }
    if mask.width != image.width || mask.height != image.height {
        return Err(Error::SizeMismatch {
            what: "silhouette mask",
            expected: format!("{}x{}", image.width, image.height),
            got: format!("{}x{}", mask.width, mask.height),
        });
    }
    let landmarks =
        landmarks.into_iter().map(|(k, [x, y])| (k, Vec2::new(x, y))).collect();
    Ok(ViewObservation { image, mask, landmarks })
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct LandmarkFile {
    front: BTreeMap<String, [f64; 2]>,
    back: BTreeMap<String, [f64; 2]>,
}

fn load_landmarks(path: &Path) -> Result<LandmarkFile> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| Error::BadJson { path: path.display().to_string(), msg: e.to_string() })
}

/// Per-step energy log of both optimization stages; empty cells where a
/// term does not apply to the stage.
fn trace_csv(result: &garmtex::fit::FitResult) -> String {
    let mut out =
        String::from("stage,step,total,silhouette,landmark,rigidity,normal,photo,smoothness\n");
    for row in &result.shape_trace {
        out.push_str(&format!(
            "shape,{},{},{},{},{},{},,\n",
            row.step, row.total, row.silhouette, row.landmark, row.rigidity, row.normal
        ));
    }
    for row in &result.texture_trace {
        out.push_str(&format!(
            "texture,{},{},,,,,{},{}\n",
            row.step, row.total, row.photo, row.smoothness
        ));
    }
    out
}

fn load_gray(path: &Path, resolution: usize) -> Result<Image> {
    let img = Image::load_png(path)?;
    if img.channels != 1 || img.width != resolution || img.height != resolution {
        return Err(Error::BadImage {
            path: path.display().to_string(),
            msg: format!(
                "expected {resolution}x{resolution} grayscale, got {}x{}x{}",
                img.width, img.height, img.channels
            ),
        });
    }
    Ok(img)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io { path: path.into(), source: e })
}
