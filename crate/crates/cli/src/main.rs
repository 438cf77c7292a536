use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use stipplemix::figures::FigureId;
use stipplemix::{
    EdgeFilter, FieldSource, GammaSpec, OutputKind, PipelineConfig, SizePolicy,
};

/// Stippling by interpolation of point distributions.
#[derive(Parser)]
#[command(name = "stipple", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Regenerate the toy interpolation sweeps as point-cloud images.
    Figures {
        /// uniform-to-normal | normal-to-annulus | masked-field |
        /// bias-sweep | all
        id: String,
        /// Output directory.
        #[arg(short, long, default_value = "figures")]
        out: PathBuf,
        #[arg(long, env = "STIPPLEMIX_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Input grayscale PNG.
    #[arg(short, long)]
    input: Option<PathBuf>,

    /// Output file; .svg extension selects SVG, anything else raster PNG.
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// JSON config file; flags override its fields.
    #[arg(short, long)]
    config: Option<PathBuf>,

    #[arg(long, env = "STIPPLEMIX_SEED")]
    seed: Option<u64>,

    /// Edge detector: canny, dog, or log.
    #[arg(long)]
    filter: Option<String>,

    /// Edge dot spacing in path pixels.
    #[arg(long)]
    d0: Option<f64>,

    /// Half-range of uniform spacing noise.
    #[arg(long)]
    dn: Option<f64>,

    /// Interpolation bias in [-1, 1].
    #[arg(long)]
    bias: Option<f64>,

    /// Mixing function: linear or band:L1,L2.
    #[arg(long)]
    gamma: Option<String>,

    /// Dot sizes: constant:r, modulated:min,max, or discrete:a,b,...
    #[arg(long)]
    sizes: Option<String>,

    /// Output resolution in pixels per inch.
    #[arg(long)]
    ppi: Option<f64>,

    /// Page size in millimetres, WxH.
    #[arg(long)]
    page: Option<String>,

    /// External boundary mask PNG for the distance field.
    #[arg(long)]
    mask: Option<PathBuf>,

    /// Total dots to place (default: black cells of the mixed DPF).
    #[arg(long)]
    n_dots: Option<usize>,

    /// Directory for intermediate-stage dumps.
    #[arg(long)]
    debug_dir: Option<PathBuf>,
}

fn parse_gamma(s: &str) -> Result<GammaSpec, String> {
    if s == "linear" {
        return Ok(GammaSpec::Linear);
    }
    if let Some(rest) = s.strip_prefix("band:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() == 2 {
            let l1 = parts[0].parse().map_err(|e| format!("bad L1: {e}"))?;
            let l2 = parts[1].parse().map_err(|e| format!("bad L2: {e}"))?;
            return Ok(GammaSpec::Band { l1, l2 });
        }
    }
    Err(format!("--gamma expects 'linear' or 'band:L1,L2', got '{s}'"))
}

fn parse_sizes(s: &str) -> Result<SizePolicy, String> {
    let err = || format!("--sizes expects constant:r, modulated:min,max, or discrete:a,b,..., got '{s}'");
    if let Some(rest) = s.strip_prefix("constant:") {
        let size = rest.parse().map_err(|_| err())?;
        return Ok(SizePolicy::Constant { size });
    }
    if let Some(rest) = s.strip_prefix("modulated:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() == 2 {
            let min = parts[0].parse().map_err(|_| err())?;
            let max = parts[1].parse().map_err(|_| err())?;
            return Ok(SizePolicy::Modulated { min, max });
        }
        return Err(err());
    }
    if let Some(rest) = s.strip_prefix("discrete:") {
        let sizes: Result<Vec<f64>, _> = rest.split(',').map(str::parse).collect();
        return Ok(SizePolicy::RandomDiscrete {
            sizes: sizes.map_err(|_| err())?,
        });
    }
    Err(err())
}

fn parse_filter(s: &str) -> Result<EdgeFilter, String> {
    match s {
        "canny" => Ok(EdgeFilter::Canny {
            low_thresh: 0.1,
            high_thresh: 0.3,
            sigma: 1.4,
        }),
        "dog" => Ok(EdgeFilter::Dog {
            sigma1: 1.0,
            sigma2: 1.6,
            thresh: 0.1,
        }),
        "log" => Ok(EdgeFilter::Log {
            sigma: 1.4,
            thresh: 0.1,
        }),
        other => Err(format!("--filter expects canny, dog, or log, got '{other}'")),
    }
}

fn parse_page(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() == 2 {
        if let (Ok(w), Ok(h)) = (parts[0].parse(), parts[1].parse()) {
            return Ok((w, h));
        }
    }
    Err(format!("--page expects WxH in mm, got '{s}'"))
}

fn build_config(args: &RunArgs) -> Result<PipelineConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| e.to_string())?,
        None => {
            let input = args
                .input
                .clone()
                .ok_or("either --input or --config is required")?;
            PipelineConfig::new(input)
        }
    };
    if let Some(input) = &args.input {
        cfg.input = input.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(filter) = &args.filter {
        cfg.edges.filter = parse_filter(filter)?;
    }
    if let Some(d0) = args.d0 {
        cfg.edges.d0 = d0;
    }
    if let Some(dn) = args.dn {
        cfg.edges.dn = dn;
    }
    if let Some(bias) = args.bias {
        cfg.mix.bias = bias;
    }
    if let Some(gamma) = &args.gamma {
        cfg.mix.gamma = parse_gamma(gamma)?;
    }
    if let Some(sizes) = &args.sizes {
        cfg.render.size_policy = parse_sizes(sizes)?;
    }
    if let Some(ppi) = args.ppi {
        cfg.render.page.ppi = ppi;
    }
    if let Some(page) = &args.page {
        let (w, h) = parse_page(page)?;
        cfg.render.page.width_mm = w;
        cfg.render.page.height_mm = h;
    }
    if let Some(mask) = &args.mask {
        cfg.mix.field_source = FieldSource::ExternalMask { file: mask.clone() };
    }
    if let Some(n) = args.n_dots {
        cfg.n_dots = Some(n);
    }
    if let Some(dir) = &args.debug_dir {
        cfg.debug_dir = Some(dir.clone());
    }
    let svg_out = args
        .output
        .as_ref()
        .map(|p| p.extension().and_then(|e| e.to_str()) == Some("svg"))
        .unwrap_or(true);
    cfg.render.output = if svg_out {
        OutputKind::Svg
    } else {
        OutputKind::Raster
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run_stipple(args: &RunArgs) -> Result<(), String> {
    let cfg = build_config(args)?;
    let out = stipplemix::pipeline::run_pipeline(&cfg).map_err(|e| e.to_string())?;
    match &args.output {
        Some(path) => {
            if let Some(svg) = &out.svg {
                std::fs::write(path, svg).map_err(|e| e.to_string())?;
            } else if let Some(raster) = &out.raster {
                raster.save_png(path).map_err(|e| e.to_string())?;
            }
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&out.stats).map_err(|e| e.to_string())?
            );
        }
        None => {
            if let Some(svg) = &out.svg {
                print!("{svg}");
            } else {
                return Err("raster output needs --output".into());
            }
        }
    }
    Ok(())
}

fn run_figures(id: &str, out: &PathBuf, seed: u64) -> Result<(), String> {
    let ids: Vec<FigureId> = if id == "all" {
        FigureId::ALL.to_vec()
    } else {
        vec![FigureId::from_str(id).map_err(|e| e.to_string())?]
    };
    for id in ids {
        let files =
            stipplemix::figures::write_figure(id, out, seed).map_err(|e| e.to_string())?;
        eprintln!("{}: {} frames", id.name(), files.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::Figures { id, out, seed }) => run_figures(id, out, *seed),
        None => run_stipple(&cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
