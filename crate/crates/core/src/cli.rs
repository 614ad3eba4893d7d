//! Command-line surface.
//!
//! `run` parses arguments, dispatches and returns the process exit code:
//! 0 on success, 1 when an operation fails, 2 on usage errors. Nothing is
//! read from the environment; settings come from flags and the optional
//! config file.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{connected_components, hstack, HALF_MAX};
use crate::camera::{PointCloud, ViewSpec};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fit::fit;
use crate::gradcheck::run_gradcheck;
use crate::io::{read_cloud, read_image, write_cloud, write_image, write_raw_grid, write_trace};
use crate::losses::{eval_metrics, render, render_maps};
use crate::shapes;
use crate::splat::SplatConfig;
use crate::visual::sobel_edges;

#[derive(Parser, Debug)]
#[command(name = "edgefit", version, about = "Point-cloud projection, edge/corner maps, metrics and fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a cloud from one view into a splatted image.
    Project(ProjectArgs),
    /// Render a cloud and write its suppressed edge and corner maps.
    Maps(MapsArgs),
    /// Binarize an image and write its Sobel edge magnitude.
    Sobel(SobelArgs),
    /// Fit an initial cloud to a target cloud by Adam on the coordinates.
    Fit(FitArgs),
    /// Print 100*CD and 100*EMD after ICP alignment of pred onto gt.
    Metrics(MetricsArgs),
    /// Finite-difference audit of every analytic gradient.
    Gradcheck(GradcheckArgs),
    /// Render one cloud at several splat variances side by side.
    SweepSigma(SweepArgs),
}

#[derive(Args, Debug)]
struct ViewArgs {
    /// Azimuth in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    azimuth: f64,
    /// Elevation in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    elevation: f64,
    /// Run configuration file (camera, image size, splat and kernel settings).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write exact values as text next to each image (`<out>.txt`).
    #[arg(long)]
    raw: bool,
    /// Clamp values to [0, 255] instead of mapping [min, max] to [0, 255].
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// Input cloud (xyz text or ASCII PLY).
    cloud: PathBuf,
    /// Output graymap.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    view: ViewArgs,
}

#[derive(Args, Debug)]
struct MapsArgs {
    /// Input cloud (xyz text or ASCII PLY).
    cloud: PathBuf,
    /// Output graymap for the edge map.
    #[arg(long)]
    edge_out: PathBuf,
    /// Output graymap for the corner map.
    #[arg(long)]
    corner_out: PathBuf,
    #[command(flatten)]
    view: ViewArgs,
}

#[derive(Args, Debug)]
struct SobelArgs {
    /// Input graymap (P5 or P2).
    image: PathBuf,
    /// Output graymap.
    #[arg(long, short)]
    out: PathBuf,
    /// Binarization threshold on values scaled to [0, 1].
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Also write exact values as text (`<out>.txt`).
    #[arg(long)]
    raw: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initial cloud; overrides io.initial_path.
    #[arg(long)]
    initial: Option<PathBuf>,
    /// Target cloud; overrides io.target_path.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Fitted cloud output; overrides io.output_path.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Per-step trace output; overrides io.trace_path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Predicted cloud.
    pred: PathBuf,
    /// Ground-truth cloud.
    gt: PathBuf,
    /// Print a `name, cd_x100, emd_x100` table row instead of two numbers.
    #[arg(long, value_name = "NAME")]
    table: Option<String>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random instances per check.
    #[arg(long, default_value_t = 20)]
    instances: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Input cloud; without it a ring of `--ring-points` points is used.
    cloud: Option<PathBuf>,
    /// Comma-separated splat variances in px².
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.5, 1.0, 2.0])]
    values: Vec<f64>,
    /// Points on the built-in ring.
    #[arg(long, default_value_t = 24)]
    ring_points: usize,
    /// Radius of the built-in ring in world units.
    #[arg(long, default_value_t = 0.15)]
    ring_radius: f64,
    /// Output strip graymap.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    view: ViewArgs,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn view_of(args: &ViewArgs, cfg: &RunConfig) -> Result<ViewSpec> {
    let v = ViewSpec { azimuth: args.azimuth, elevation: args.elevation, distance: cfg.distance };
    v.validate()?;
    Ok(v)
}

fn raw_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

fn export(grid: &crate::raster::ImageGrid, out: &Path, normalize: bool, raw: bool) -> Result<()> {
    write_image(grid, out, normalize)?;
    if raw {
        write_raw_grid(grid, raw_path(out))?;
    }
    Ok(())
}

fn required(path: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::Config(format!("no {what} path given (flag or config)")))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    let w = |out: &mut dyn Write, s: String| -> Result<()> {
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<stdout>", e))
    };
    match cmd {
        Command::Project(a) => {
            let cfg = load_config(a.view.config.as_deref())?;
            let cloud = read_cloud(&a.cloud)?;
            let img = render(&cloud, &view_of(&a.view, &cfg)?, &cfg.render)?;
            export(&img, &a.out, !a.view.no_normalize, a.view.raw)?;
            w(out, format!("wrote {} (max {})\n", a.out.display(), img.max()))
        }
        Command::Maps(a) => {
            let cfg = load_config(a.view.config.as_deref())?;
            let cloud = read_cloud(&a.cloud)?;
            let maps = render_maps(&cloud, &view_of(&a.view, &cfg)?, &cfg.render)?;
            export(&maps.edge, &a.edge_out, !a.view.no_normalize, a.view.raw)?;
            export(&maps.corner, &a.corner_out, !a.view.no_normalize, a.view.raw)?;
            w(out, format!("wrote {} and {}\n", a.edge_out.display(), a.corner_out.display()))
        }
        Command::Sobel(a) => {
            if !a.threshold.is_finite() {
                return Err(Error::Parameter(format!("threshold must be finite, got {}", a.threshold)));
            }
            let img = read_image(&a.image)?;
            let edges = sobel_edges(&img, a.threshold);
            export(&edges, &a.out, true, a.raw)?;
            w(out, format!("wrote {}\n", a.out.display()))
        }
        Command::Fit(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            if let Some(s) = a.seed {
                cfg.fit.seed = s;
            }
            let initial = read_cloud(required(a.initial.or(cfg.initial_path.clone()), "initial cloud")?)?;
            let target = read_cloud(required(a.target.or(cfg.target_path.clone()), "target cloud")?)?;
            let (fitted, trace) = fit(&initial, &target, &cfg.pool_views(), &cfg.fit, &cfg.render)?;
            if let Some(p) = a.out.or(cfg.output_path.clone()) {
                write_cloud(&fitted, p)?;
            }
            if let Some(p) = a.trace.or(cfg.trace_path.clone()) {
                write_trace(&trace, p)?;
            }
            let first = trace.reports.first().map(|r| r.total).unwrap_or(0.0);
            let last = trace.reports.last().map(|r| r.total).unwrap_or(0.0);
            w(out, format!("steps {} loss {} -> {}\n", trace.len(), first, last))
        }
        Command::Metrics(a) => {
            let pred = read_cloud(&a.pred)?;
            let gt = read_cloud(&a.gt)?;
            let m = eval_metrics(&pred, &gt)?;
            match a.table {
                Some(name) => w(out, format!("{name}, {:.2}, {:.2}\n", m.cd_x100, m.emd_x100)),
                None => w(out, format!("{:.2} {:.2}\n", m.cd_x100, m.emd_x100)),
            }
        }
        Command::Gradcheck(a) => {
            if a.instances == 0 {
                return Err(Error::Parameter("instances must be positive".into()));
            }
            let report = run_gradcheck(a.seed, a.instances)?;
            w(out, format!("{report}\n"))?;
            if report.all_passed() {
                Ok(())
            } else {
                Err(Error::Contract("gradient audit failed".into()))
            }
        }
        Command::SweepSigma(a) => {
            let cfg = load_config(a.view.config.as_deref())?;
            let cloud: PointCloud = match &a.cloud {
                Some(p) => read_cloud(p)?,
                None => shapes::ring(a.ring_points, a.ring_radius)?,
            };
            let view = view_of(&a.view, &cfg)?;
            let mut images = Vec::with_capacity(a.values.len());
            for &s2 in &a.values {
                let mut rc = cfg.render;
                rc.splat =
                    SplatConfig { height: rc.splat.height, width: rc.splat.width, ..SplatConfig::with_sigma2(s2) };
                rc.validate()?;
                let img = render(&cloud, &view, &rc)?;
                let n = connected_components(&img, HALF_MAX);
                w(out, format!("sigma2={s2} components={n} max={}\n", img.max()))?;
                images.push(img);
            }
            if let Some(p) = &a.out {
                let strip = hstack(&images)?;
                export(&strip, p, true, a.view.raw)?;
            }
            Ok(())
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("edgefit").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["metrics", "--bogus"]).0, 2);
        assert_eq!(call(&[]).0, 2);
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("sweep-sigma"));
    }

    #[test]
    fn missing_file_exits_1() {
        let (code, _, err) = call(&["metrics", "/nonexistent/a.xyz", "/nonexistent/b.xyz"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error:"));
    }
}
