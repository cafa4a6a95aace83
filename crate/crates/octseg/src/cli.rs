//! Command-line front end.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit status. Exit codes: 0 success, 2 usage, 3 I/O, 4 validation,
//! 5 internal.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, DepthFormat, VolumeFormat};
use crate::phantom::{evaluate, generate, ErrorReport, PhantomSpec};
use crate::pipeline::{segment_all, thickness_map, BoundaryId, PipelineConfig, Segmentation};
use crate::render::{render_overlay, save_png, save_thickness_heatmap, RenderStyle};
use crate::volume::{Volume, VolumeMeta};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "octseg", version, about = "Seven-boundary retinal OCT segmentation")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a volume and write the seven boundary maps.
    Segment(SegmentArgs),
    /// Compare a segmentation with ground truth.
    Eval(EvalArgs),
    /// Draw a B-scan overlay or a thickness heatmap.
    Render(RenderArgs),
    /// Generate a synthetic volume with ground truth.
    Phantom(PhantomArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Raw,
    Pgm,
}

impl From<FormatArg> for VolumeFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Raw => VolumeFormat::Raw,
            FormatArg::Pgm => VolumeFormat::PgmStack,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// Raw volume (with .json sidecar) or directory of PGM B-scans.
    #[arg(long)]
    pub input: PathBuf,
    /// Volume format; guessed from the path when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Pipeline configuration JSON; omitted fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Axial scale, overriding the sidecar.
    #[arg(long = "scale-um-per-px")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory holding the segmentation CSVs.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory holding the ground-truth CSVs.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long = "scale-um-per-px")]
    pub scale: Option<f64>,
    /// Report CSV; defaults to `evaluation.csv` in the input directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Volume to draw on; required for overlays, optional for heatmaps
    /// (where it only supplies the axial scale).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Directory holding the boundary CSVs.
    #[arg(long)]
    pub boundaries: PathBuf,
    /// B-scan index for an overlay.
    #[arg(long, conflicts_with = "thickness", required_unless_present = "thickness")]
    pub frame: Option<usize>,
    /// Heatmap of the thickness between two boundaries.
    #[arg(long, num_args = 2, value_names = ["TOP", "BOTTOM"])]
    pub thickness: Option<Vec<String>>,
    /// Render style JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "scale-um-per-px")]
    pub scale: Option<f64>,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    /// Phantom spec JSON; the clean default when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::Image(image::ImageError::IoError(_)) => EXIT_IO,
        Error::Image(image::ImageError::Encoding(_) | image::ImageError::Parameter(_)) => EXIT_INTERNAL,
        Error::Image(_)
        | Error::Format(_)
        | Error::DimensionMismatch(_)
        | Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::Json(_)
        | Error::Csv(_) => EXIT_VALIDATION,
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match catch_unwind(AssertUnwindSafe(|| execute(&cli))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            EXIT_INTERNAL
        }
    }
}

/// Run a parsed command, inside a thread pool of the requested size.
pub fn execute(cli: &Cli) -> Result<()> {
    let body = || match &cli.command {
        Command::Segment(a) => cmd_segment(a).map(|s| {
            println!(
                "segmented {}x{}x{} in {:.2} s ({:.3} s per frame), {} flagged columns",
                s.width, s.frames, s.depth, s.total_seconds, s.seconds_per_frame, s.flagged_columns
            );
        }),
        Command::Eval(a) => cmd_eval(a).map(|r| print!("{}", r.to_table())),
        Command::Render(a) => cmd_render(a).map(|p| println!("wrote {}", p.display())),
        Command::Phantom(a) => cmd_phantom(a).map(|_| println!("wrote {}", a.out.display())),
    };
    match cli.threads {
        None => body(),
        Some(0) => Err(Error::InvalidArgument("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {n} threads: {e}")))?
            .install(body),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_input(path: &Path, format: Option<FormatArg>, scale: Option<f64>) -> Result<(Volume<u8>, VolumeMeta)> {
    let format = format.map_or_else(|| VolumeFormat::detect(path), Into::into);
    let (vol, mut meta) = io::load_volume(path, format)?;
    if scale.is_some() {
        meta.axial_um_per_px = scale;
    }
    meta.check()?;
    Ok((vol, meta))
}

/// Contents of `summary.json` written by [`cmd_segment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub input: String,
    pub width: usize,
    pub frames: usize,
    pub depth: usize,
    pub axial_um_per_px: Option<f64>,
    /// Wall time per stage in execution order, in seconds.
    pub stages: Vec<(String, f64)>,
    pub total_seconds: f64,
    pub seconds_per_frame: f64,
    pub flagged_columns: usize,
    pub flagged_by_boundary: BTreeMap<String, usize>,
    pub degraded_rows: usize,
    pub low_contrast: bool,
    pub rpe_peak_response: f64,
    pub smoothing_iterations: BTreeMap<String, usize>,
}

impl SegmentSummary {
    fn new(input: &Path, vol: &Volume<u8>, meta: &VolumeMeta, seg: &Segmentation) -> Self {
        let (width, frames, depth) = vol.dims();
        let total = seg.total_time().as_secs_f64();
        let q = &seg.quality;
        let by_name = |m: &BTreeMap<BoundaryId, usize>| m.iter().map(|(k, v)| (k.name().to_string(), *v)).collect();
        Self {
            input: input.display().to_string(),
            width,
            frames,
            depth,
            axial_um_per_px: meta.axial_um_per_px,
            stages: seg.timings.iter().map(|(n, t)| (n.to_string(), t.as_secs_f64())).collect(),
            total_seconds: total,
            seconds_per_frame: total / frames as f64,
            flagged_columns: q.flagged_count(),
            flagged_by_boundary: by_name(&q.flagged_by_boundary),
            degraded_rows: q.degraded_rows,
            low_contrast: q.low_contrast,
            rpe_peak_response: q.rpe_peak_response,
            smoothing_iterations: by_name(&q.smoothing_iterations),
        }
    }
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Segment `args.input` and write seven CSVs, seven 16-bit PGMs and
/// `summary.json` into `args.out`. Nothing is left behind on failure.
pub fn cmd_segment(args: &SegmentArgs) -> Result<SegmentSummary> {
    let (vol, meta) = load_input(&args.input, args.format, args.scale)?;
    let cfg = match &args.config {
        Some(p) => PipelineConfig::from_json(&read_text(p)?)?,
        None => PipelineConfig::default(),
    };
    cfg.validate(vol.dims())?;
    let seg = segment_all(&vol, &cfg)?;
    let summary = SegmentSummary::new(&args.input, &vol, &meta, &seg);

    let created_dir = !args.out.exists();
    let written = || -> Result<()> {
        io::save_boundary_set(&seg.boundaries, &args.out, true)?;
        let json = serde_json::to_string_pretty(&summary)?;
        io::write(&args.out.join(SUMMARY_FILE), json.as_bytes())
    };
    if let Err(e) = written() {
        remove_segment_outputs(&args.out, created_dir);
        return Err(e);
    }
    Ok(summary)
}

fn remove_segment_outputs(dir: &Path, created_dir: bool) {
    if created_dir {
        let _ = fs::remove_dir_all(dir);
        return;
    }
    for id in BoundaryId::ALL {
        for f in [DepthFormat::Csv, DepthFormat::Pgm16] {
            let _ = fs::remove_file(io::boundary_path(dir, id, f));
        }
    }
    let _ = fs::remove_file(dir.join(SUMMARY_FILE));
}

pub const EVAL_FILE: &str = "evaluation.csv";

/// Score the CSVs in `args.input` against those in `args.truth` and write
/// the report as CSV.
pub fn cmd_eval(args: &EvalArgs) -> Result<ErrorReport> {
    let result = io::load_boundary_set(&args.input)?;
    let truth = io::load_boundary_set(&args.truth)?;
    let meta = VolumeMeta {
        axial_um_per_px: args.scale,
        source: args.input.display().to_string(),
    };
    let report = evaluate(&result, &truth, &meta)?;
    let out = args.out.clone().unwrap_or_else(|| args.input.join(EVAL_FILE));
    io::write(&out, report.to_csv().as_bytes())?;
    Ok(report)
}

/// Write an overlay or heatmap PNG and return its path.
pub fn cmd_render(args: &RenderArgs) -> Result<PathBuf> {
    let style = match &args.config {
        Some(p) => serde_json::from_str::<RenderStyle>(&read_text(p)?)?,
        None => RenderStyle::default(),
    };
    style.validate()?;
    let set = io::load_boundary_set(&args.boundaries)?;

    if let Some(names) = &args.thickness {
        let top: BoundaryId = names[0].parse()?;
        let bottom: BoundaryId = names[1].parse()?;
        let mut meta = match &args.input {
            Some(p) => load_input(p, args.format, None)?.1,
            None => VolumeMeta::default(),
        };
        if args.scale.is_some() {
            meta.axial_um_per_px = args.scale;
        }
        // Without a scale the heatmap is in pixels.
        let unit = if meta.axial_um_per_px.is_some() { "um" } else { "px" };
        if meta.axial_um_per_px.is_none() {
            meta.axial_um_per_px = Some(1.0);
        }
        let values = thickness_map(&set, top, bottom, &meta)?;
        save_thickness_heatmap(&values, top, bottom, unit, style.ramp, &args.out)?;
        return Ok(args.out.clone());
    }

    let frame = args
        .frame
        .ok_or_else(|| Error::InvalidArgument("either --frame or --thickness is required".into()))?;
    let input = args
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("an overlay needs --input".into()))?;
    let (vol, _) = load_input(input, args.format, args.scale)?;
    let img = render_overlay(&vol, &set, frame, &style)?;
    save_png(&img, &args.out)?;
    Ok(args.out.clone())
}

pub const PHANTOM_VOLUME: &str = "volume.raw";
pub const PHANTOM_SPEC: &str = "phantom.json";
pub const PHANTOM_TRUTH: &str = "truth";

/// Write `volume.raw` with its sidecar, the spec actually used and the
/// truth CSVs under `truth/`.
pub fn cmd_phantom(args: &PhantomArgs) -> Result<PhantomSpec> {
    let mut spec = match &args.config {
        Some(p) => PhantomSpec::from_json(&read_text(p)?)?,
        None => PhantomSpec::default(),
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let (vol, truth) = generate(&spec)?;
    let meta = VolumeMeta::new(spec.axial_um_per_px, format!("phantom seed {}", spec.seed))?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    io::save_volume_raw(&vol, &meta, &args.out.join(PHANTOM_VOLUME))?;
    io::write(&args.out.join(PHANTOM_SPEC), spec.to_json()?.as_bytes())?;
    io::save_boundary_set(&truth, &args.out.join(PHANTOM_TRUTH), false)?;
    Ok(spec)
}
