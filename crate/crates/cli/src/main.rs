use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use surfseg::driver::{run, RunReport};
use surfseg::experiment::{Experiment, PhantomSpec};
use surfseg::trimesh::{export_obj, export_stl, read_obj, SurfaceMesh, SurfaceSet};
use surfseg::voxel_image::{load_raw, make_phantom, save_raw, Phantom};
use surfseg::Aabb;

#[derive(Parser)]
#[command(name = "surfseg", version, about = "Active-surface segmentation of 3D images")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic binary volume as <out>.json + <out>.raw.
    Phantom {
        /// two_balls, one_ball, torus, custom_ball or custom_torus
        #[arg(long)]
        kind: String,
        /// Voxel counts, e.g. 100x60x60.
        #[arg(long, value_parser = parse_dims)]
        dims: [usize; 3],
        /// World box as xmin,ymin,zmin,xmax,ymax,zmax.
        #[arg(long, value_parser = parse_domain)]
        domain: Option<[[f64; 3]; 2]>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, value_parser = parse_point)]
        center: Option<[f64; 3]>,
        #[arg(long)]
        major: Option<f64>,
        #[arg(long)]
        minor: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a segmentation from a JSON config.
    Segment {
        /// Image header; defaults to the phantom block of the config.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        /// Writes <prefix>.obj and <prefix>.report.json.
        #[arg(long)]
        out_prefix: PathBuf,
        /// Overrides max_steps from the config.
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Print per-surface metrics of an OBJ file as JSON.
    MeshInfo {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Convert an OBJ file to OBJ or binary STL.
    Export {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Taken from the output extension when omitted.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Obj,
    Stl,
}

fn parse_floats<const N: usize>(s: &str, sep: char) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(sep)
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} values, got {}", v.len()))
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "dims must be NXxNYxNZ".to_string())
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    parse_floats::<3>(s, ',')
}

fn parse_domain(s: &str) -> Result<[[f64; 3]; 2], String> {
    let v = parse_floats::<6>(s, ',')?;
    Ok([[v[0], v[1], v[2]], [v[3], v[4], v[5]]])
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A segmentation that aborted; outputs were still written.
#[derive(Debug)]
struct NumericalAbort(String);

impl std::fmt::Display for NumericalAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalAbort {}

fn config_err<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| ConfigError(e).into())
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_phantom(
    kind: &str,
    dims: [usize; 3],
    domain: Option<[[f64; 3]; 2]>,
    radius: Option<f64>,
    center: Option<[f64; 3]>,
    major: Option<f64>,
    minor: Option<f64>,
    out: &Path,
) -> Result<()> {
    let phantom = Phantom::parse(kind, radius, center, major, minor).ok_or_else(|| {
        ConfigError(anyhow!(
            "unknown phantom kind {kind:?} or missing shape flags; kinds: two_balls, one_ball, torus, custom_ball (--radius), custom_torus (--major --minor)"
        ))
    })?;
    let [lo, hi] = domain.unwrap_or_else(|| {
        let (lo, hi) = phantom.default_domain();
        [lo, hi]
    });
    let g = config_err(make_phantom::<f64>(&phantom, dims, Aabb::from_f64(lo, hi)).map_err(Into::into))?;
    let header = with_ext(out, ".json");
    let payload = save_raw(&g, &header).with_context(|| format!("writing {}", header.display()))?;
    println!("{} {}", header.display(), payload.display());
    Ok(())
}

fn cmd_segment(image: Option<&Path>, config: &Path, prefix: &Path, max_steps: Option<usize>) -> Result<()> {
    let exp = config_err(Experiment::load(config).with_context(|| format!("reading {}", config.display())))?;
    let grid = match (image, &exp.phantom) {
        (Some(p), _) => config_err(load_raw::<f64>(p).with_context(|| format!("loading {}", p.display())))?,
        (None, Some(spec)) => config_err(PhantomSpec::build(spec).map_err(Into::into))?,
        (None, None) => return Err(ConfigError(anyhow!("no --image given and the config has no phantom block")).into()),
    };
    let seeds = config_err(exp.seed_surfaces::<f64>().map_err(Into::into))?;
    let mut cfg = exp.run_config::<f64>();
    if let Some(m) = max_steps {
        cfg.max_steps = m;
    }
    let (surfaces, report, failure) = match run(&grid, seeds, &cfg) {
        Ok((s, r)) => (s, r, None),
        Err(f) => {
            let msg = f.to_string();
            let f = *f;
            (f.surfaces, f.report, Some(msg))
        }
    };
    write_outputs(prefix, &surfaces, &report)?;
    log::info!("{} steps, {} events, stop: {}", report.steps, report.events.len(), report.stop_reason);
    match failure {
        Some(msg) => Err(NumericalAbort(msg).into()),
        None => Ok(()),
    }
}

fn write_outputs(prefix: &Path, s: &SurfaceSet<f64>, report: &RunReport) -> Result<()> {
    let obj = with_ext(prefix, ".obj");
    export_obj(s, &obj).with_context(|| format!("writing {}", obj.display()))?;
    let rep = with_ext(prefix, ".report.json");
    let text = serde_json::to_string_pretty(report)?;
    fs::write(&rep, text + "\n").with_context(|| format!("writing {}", rep.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct MeshInfo {
    surface: usize,
    vertices: usize,
    edges: usize,
    faces: usize,
    euler: i64,
    genus: Option<i64>,
    closed: bool,
    area: f64,
    volume: Option<f64>,
}

fn mesh_info(m: &SurfaceMesh<f64>) -> MeshInfo {
    let closed = m.is_closed();
    MeshInfo {
        surface: m.surface_id,
        vertices: m.referenced_vertex_count(),
        edges: m.edge_count(),
        faces: m.num_faces(),
        euler: m.euler_characteristic(),
        genus: m.genus(),
        closed,
        area: m.total_area(),
        volume: closed.then(|| m.signed_volume().abs()),
    }
}

fn cmd_mesh_info(mesh: &Path) -> Result<()> {
    let meshes = config_err(read_obj::<f64>(mesh).with_context(|| format!("reading {}", mesh.display())))?;
    let info: Vec<MeshInfo> = meshes.iter().map(mesh_info).collect();
    println!("{}", serde_json::to_string_pretty(&info)?);
    Ok(())
}

fn cmd_export(mesh: &Path, out: &Path, format: Option<Format>) -> Result<()> {
    let meshes = config_err(read_obj::<f64>(mesh).with_context(|| format!("reading {}", mesh.display())))?;
    let mut set = SurfaceSet::new();
    for m in meshes {
        set.push(m, surfseg::trimesh::RegionPair::new(1, 2))?;
    }
    let format = match format {
        Some(f) => f,
        None => match out.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("stl") => Format::Stl,
            Some("obj") => Format::Obj,
            _ => bail!(ConfigError(anyhow!("cannot tell the format of {}; pass --format", out.display()))),
        },
    };
    match format {
        Format::Obj => export_obj(&set, out)?,
        Format::Stl => export_stl(&set, out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Phantom {
            kind,
            dims,
            domain,
            radius,
            center,
            major,
            minor,
            out,
        } => cmd_phantom(kind, *dims, *domain, *radius, *center, *major, *minor, out),
        Cmd::Segment {
            image,
            config,
            out_prefix,
            max_steps,
        } => cmd_segment(image.as_deref(), config, out_prefix, *max_steps),
        Cmd::MeshInfo { mesh } => cmd_mesh_info(mesh),
        Cmd::Export { mesh, out, format } => cmd_export(mesh, out, *format),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(2)
            } else if e.is::<NumericalAbort>() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
