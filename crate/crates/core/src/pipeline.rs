//! End-to-end driver: input image -> area + edge distributions ->
//! distance-field mix -> sampling -> sized dots -> SVG or raster.

use std::path::{Path, PathBuf};

use crate::area::{self, AreaParams, DotClass};
use crate::edges::{self, EdgeParams};
use crate::error::{Error, Result};
use crate::interp::{self, DistanceMetric, FieldSource, MixSpec};
use crate::pgrid::{BinaryMask, ProbGrid};
use crate::raster::GrayRaster;
use crate::render::{self, DotSet, OutputKind, RenderConfig};
use crate::sampler::{sample_dpf_opts, SampleRun, SubCell};

// stage sub-seed salts, xor'd with the run seed
const SEED_EDGES: u64 = 0x9e37_79b9_7f4a_7c15;
const SEED_SAMPLE: u64 = 0xc2b2_ae3d_27d4_eb4f;
const SEED_JITTER: u64 = 0x1656_67b1_9e37_79f9;
const SEED_SIZES: u64 = 0x27d4_eb2f_1656_67c5;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PipelineConfig {
    /// Input tone image (grayscale PNG); the only required field.
    pub input: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Total dots to place; defaults to the number of black cells in
    /// the mixed distribution.
    #[serde(default)]
    pub n_dots: Option<usize>,
    #[serde(default)]
    pub area: AreaParams,
    #[serde(default)]
    pub edges: EdgeParams,
    #[serde(default)]
    pub mix: MixSpec,
    #[serde(default)]
    pub render: RenderConfig,
    /// When set, intermediate stages are dumped here as PNG/text.
    #[serde(default)]
    pub debug_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: input.into(),
            seed: 0,
            n_dots: None,
            area: AreaParams::default(),
            edges: EdgeParams::default(),
            mix: MixSpec::default(),
            render: RenderConfig::default(),
            debug_dir: None,
        }
    }

    /// Reads a config from a single JSON file; every section except
    /// `input` is optional.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let cfg: PipelineConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.mix.validate()?;
        self.render.size_policy.validate()?;
        if self.area.packing == 0 {
            return Err(Error::Config("area.packing must be >= 1".into()));
        }
        if self.edges.d0 < 1.0 {
            return Err(Error::Config(format!(
                "edges.d0 must be >= 1, got {}",
                self.edges.d0
            )));
        }
        if self.edges.dn < 0.0 || self.edges.dn > self.edges.d0 {
            return Err(Error::Config(format!(
                "edges.dn must lie in [0, d0], got {}",
                self.edges.dn
            )));
        }
        Ok(())
    }
}

/// Run summary for logs and the CLI.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StatsReport {
    pub grid_width: usize,
    pub grid_height: usize,
    pub black_cells_area: usize,
    pub black_cells_edge: usize,
    pub black_cells_mixed: usize,
    pub n_dots: usize,
    pub n_edge_dots: usize,
    pub n_area_dots: usize,
    /// True when the boundary mask was empty and the mix fell back to
    /// the pure area distribution.
    pub field_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dots: DotSet,
    pub run: SampleRun,
    pub classes: Vec<DotClass>,
    pub svg: Option<String>,
    pub raster: Option<GrayRaster>,
    pub stats: StatsReport,
}

/// Executes the full pipeline; errors carry the stage they arose in.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    if !config.input.exists() {
        return Err(Error::FileNotFound(config.input.clone()).in_stage("input"));
    }
    let image = GrayRaster::load_png(&config.input).map_err(|e| e.in_stage("input"))?;
    run_pipeline_on(&image, config)
}

/// Same as [`run_pipeline`] but with an in-memory input image.
pub fn run_pipeline_on(image: &GrayRaster, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let seed = config.seed;

    // area distribution from halftoning; packing > 1 shrinks the grid
    let work = if config.area.packing > 1 {
        image.downsample(config.area.packing)
    } else {
        image.clone()
    };
    let work_params = AreaParams {
        packing: 1,
        ..config.area.clone()
    };
    let area_grid = area::halftone_distribution(&work, &work_params);
    let (gw, gh) = (area_grid.width(), area_grid.height());

    // edge distribution at the same grid resolution
    let stage = edges::edge_stage(&work, &config.edges, seed ^ SEED_EDGES);
    let edge_grid = stage.grid.clone();

    // boundary set feeding the distance field
    let boundary = match &config.mix.field_source {
        FieldSource::EdgeMask => stage.cleaned.clone(),
        FieldSource::ExternalMask { file } => {
            let m = BinaryMask::load_png(file).map_err(|e| e.in_stage("field"))?;
            if m.width() != gw || m.height() != gh {
                return Err(
                    Error::DimensionMismatch(gw, gh, m.width(), m.height()).in_stage("field")
                );
            }
            m
        }
    };

    // mix the two distributions through the distance field; an empty
    // boundary leaves nothing to measure distance to, so fall back to
    // the pure area distribution
    let field_fallback = boundary.count_black() == 0;
    let (mixed, field) = if field_fallback {
        (area_grid.clone(), None)
    } else {
        let df = interp::distance_field(&boundary, DistanceMetric::Euclidean)
            .map_err(|e| e.in_stage("field"))?;
        let mixed = interp::interp_with_field(&edge_grid, &area_grid, &df, &config.mix)
            .map_err(|e| e.in_stage("mix"))?;
        (mixed, Some(df))
    };

    // place the dots
    let n = config.n_dots.unwrap_or_else(|| mixed.black_count());
    let run = if n == 0 || mixed.black_count() == 0 {
        SampleRun {
            n_total: 0,
            seed,
            placements: Vec::new(),
        }
    } else {
        sample_dpf_opts(&mixed, n, seed ^ SEED_SAMPLE, SubCell::Jitter)
            .map_err(|e| e.in_stage("sample"))?
    };

    // a dot belongs to the edge set when its cell carries edge mass
    let classes: Vec<DotClass> = run
        .placements
        .iter()
        .map(|p| {
            if edge_grid.is_black(p.cell) {
                DotClass::Edge
            } else {
                DotClass::Area
            }
        })
        .collect();

    let points = area::jitter_dots(&run, &classes, gw, gh, &work_params, seed ^ SEED_JITTER);
    let dots = render::assign_sizes(
        &points,
        &classes,
        (gw, gh),
        Some(&work),
        &config.render,
        seed ^ SEED_SIZES,
    )
    .map_err(|e| e.in_stage("render"))?;

    let (svg, raster) = match config.render.output {
        OutputKind::Svg => (Some(render::render_svg(&dots, &config.render)), None),
        OutputKind::Raster => (
            None,
            Some(render::render_raster(&dots, &config.render).map_err(|e| e.in_stage("render"))?),
        ),
    };

    let n_edge_dots = classes.iter().filter(|c| **c == DotClass::Edge).count();
    let stats = StatsReport {
        grid_width: gw,
        grid_height: gh,
        black_cells_area: area_grid.black_count(),
        black_cells_edge: edge_grid.black_count(),
        black_cells_mixed: mixed.black_count(),
        n_dots: run.placements.len(),
        n_edge_dots,
        n_area_dots: run.placements.len() - n_edge_dots,
        field_fallback,
    };

    if let Some(dir) = &config.debug_dir {
        dump_debug(
            dir, &area_grid, &stage, field.as_ref(), &mixed, &run, gw,
        )
        .map_err(|e| e.in_stage("debug"))?;
    }

    Ok(PipelineOutput {
        dots,
        run,
        classes,
        svg,
        raster,
        stats,
    })
}

fn dump_debug(
    dir: &Path,
    area_grid: &ProbGrid,
    stage: &edges::EdgeStage,
    field: Option<&interp::DistanceField>,
    mixed: &ProbGrid,
    run: &SampleRun,
    grid_width: usize,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    area_grid.save_png(&dir.join("area_dpf.png"))?;
    stage.raw.save_png(&dir.join("edges_raw.png"))?;
    stage.cleaned.save_png(&dir.join("edges_cleaned.png"))?;
    stage.walked.save_png(&dir.join("edges_walked.png"))?;
    stage.grid.save_png(&dir.join("edge_dpf.png"))?;
    if let Some(df) = field {
        df.save_png(&dir.join("distance_field.png"))?;
    }
    mixed.save_png(&dir.join("mixed_dpf.png"))?;
    let file = std::fs::File::create(dir.join("samples.txt"))?;
    run.write_text(grid_width, std::io::BufWriter::new(file))?;
    Ok(())
}
