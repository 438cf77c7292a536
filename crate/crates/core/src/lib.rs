//! Stipple-distribution interpolation: build discrete probability
//! functions (DPFs) from images or analytic densities, mix pairs of them
//! through a distance field, and place dots deterministically for SVG or
//! raster stippling output.
//!
//! The usual entry points are [`pipeline::run_pipeline`] for the full
//! image-to-stipples flow and the per-stage modules for custom setups:
//! [`pgrid`] (distributions), [`sampler`] (dot placement), [`interp`]
//! (distance-field mixing), [`edges`], [`area`], [`render`].

pub mod area;
pub mod edges;
pub mod error;
pub mod figures;
pub mod interp;
pub mod pgrid;
pub mod pipeline;
pub mod raster;
pub mod render;
pub mod sampler;
pub mod synth;

pub use area::{AreaParams, DotClass, HalftoneKind};
pub use edges::{EdgeFilter, EdgeParams, Prefilter};
pub use error::{Error, Result};
pub use interp::{DistanceField, DistanceMetric, FieldSource, GammaSpec, MixSpec};
pub use pgrid::{AnalyticPdf, BinaryMask, InitPolicy, ProbGrid, Rect};
pub use pipeline::{PipelineConfig, PipelineOutput, StatsReport};
pub use raster::GrayRaster;
pub use render::{
    DotSet, EdgeSizePolicy, OutputKind, PageSpec, RenderConfig, SizePolicy, TextureAtlas,
};
pub use sampler::{DpfSampler, Placement, SampleRun, SubCell};
