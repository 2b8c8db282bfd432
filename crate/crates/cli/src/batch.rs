//! The `render` and `ablate` subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cagewarp_core::cage::CageSetup;
use cagewarp_core::render::{image_metrics, render, Camera, ImageMetrics, RenderSettings};
use cagewarp_core::warp::{AdjustmentMode, DeformedField};
use log::info;
use serde::Serialize;

use crate::error::CliError;
use crate::inputs::{load_camera_file, BatchInputs};
use crate::oracle::{exact_stages, grid_vs_exact, stack_discontinuity, STRADDLE_FRACTION};

pub struct RenderArgs {
    pub scene: PathBuf,
    pub cages: PathBuf,
    pub script: Option<PathBuf>,
    pub camera: PathBuf,
    pub mode: AdjustmentMode,
    pub warp_resolution: usize,
    pub settings: RenderSettings,
    pub oracle: bool,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub index: usize,
    pub png: String,
    pub raw: String,
    pub revision: u64,
    pub vs_unedited: ImageMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vs_exact: Option<ImageMetrics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenderReport {
    pub mode: String,
    pub warp_resolution: usize,
    pub samples_per_ray: usize,
    pub seed: u64,
    pub edits: usize,
    pub discontinuity_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_vs_exact_error: Option<f64>,
    pub frames: Vec<FrameReport>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn run_render(args: &RenderArgs) -> Result<RenderReport, CliError> {
    let inputs = BatchInputs::load(&args.scene, &args.cages, args.script.as_deref(), args.mode)?;
    let cameras = load_camera_file(&args.camera)?;
    args.settings.validate()?;
    if args.warp_resolution < 2 {
        return Err(CliError::Validation(format!(
            "--warp-resolution must be at least 2, got {}",
            args.warp_resolution
        )));
    }
    let mut session = inputs.build_session(&inputs.cages, Some(args.warp_resolution), args.settings)?;
    let stages = session.stages();
    let scene = inputs.scene.clone();
    let eps = STRADDLE_FRACTION * inputs.scene_diameter();

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let exact = DeformedField::new(scene.clone(), exact_stages(&stages))?;
    let mut frames = Vec::new();
    for (index, camera) in cameras.iter().enumerate() {
        let frame = session.render(camera)?;
        let plain = render(&*scene, camera, &args.settings)?;
        let vs_exact = if args.oracle {
            Some(image_metrics(&frame.image, &render(&exact, camera, &args.settings)?)?)
        } else {
            None
        };
        let png = format!("frame_{index:03}.png");
        let raw = format!("frame_{index:03}.f32");
        write(&args.out.join(&png), &frame.image.encode_png()?)?;
        write(&args.out.join(&raw), &frame.image.encode_raw())?;
        info!("wrote {png}");
        frames.push(FrameReport {
            index,
            png,
            raw,
            revision: frame.revision,
            vs_unedited: image_metrics(&frame.image, &plain)?,
            vs_exact,
        });
    }
    let report = RenderReport {
        mode: args.mode.to_string(),
        warp_resolution: args.warp_resolution,
        samples_per_ray: args.settings.samples_per_ray,
        seed: args.settings.seed,
        edits: stages.len(),
        discontinuity_energy: stack_discontinuity(&scene, &stages, eps),
        grid_vs_exact_error: args.oracle.then(|| grid_vs_exact(&scene, &stages, args.settings.seed)),
        frames,
    };
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    write(&args.out.join("metrics.json"), &json)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    OuterScale(Vec<f64>),
    Resolution(Vec<usize>),
}

impl std::str::FromStr for Sweep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| format!("sweep {s:?} must look like outer-scale=1.2,1.5 or resolution=64,128"))?;
        let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err("sweep needs at least one value".into());
        }
        match name {
            "outer-scale" => values
                .iter()
                .map(|v| v.parse::<f64>().map_err(|e| format!("bad scale {v:?}: {e}")))
                .collect::<Result<_, _>>()
                .map(Sweep::OuterScale),
            "resolution" => values
                .iter()
                .map(|v| v.parse::<usize>().map_err(|e| format!("bad resolution {v:?}: {e}")))
                .collect::<Result<_, _>>()
                .map(Sweep::Resolution),
            other => Err(format!("unknown sweep {other:?} (expected outer-scale or resolution)")),
        }
    }
}

pub struct AblateArgs {
    pub scene: PathBuf,
    pub cages: PathBuf,
    pub script: Option<PathBuf>,
    pub camera: Option<PathBuf>,
    pub mode: AdjustmentMode,
    pub sweep: Sweep,
    pub warp_resolution: usize,
    pub settings: RenderSettings,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub sweep: &'static str,
    pub value: f64,
    pub discontinuity_energy: f64,
    pub grid_vs_exact_error: f64,
    pub bake_ms: f64,
    pub render_ms: Option<f64>,
}

pub fn run_ablate(args: &AblateArgs) -> Result<Vec<AblationRow>, CliError> {
    let inputs = BatchInputs::load(&args.scene, &args.cages, args.script.as_deref(), args.mode)?;
    let camera: Option<Camera> = match &args.camera {
        Some(p) => Some(load_camera_file(p)?.remove(0)),
        None => None,
    };
    args.settings.validate()?;
    let eps = STRADDLE_FRACTION * inputs.scene_diameter();

    let configs: Vec<(&'static str, f64, CageSetup, usize)> = match &args.sweep {
        Sweep::OuterScale(scales) => scales
            .iter()
            .map(|&s| {
                let outer = inputs.cages.inner.scaled(s)?;
                Ok((
                    "outer-scale",
                    s,
                    CageSetup {
                        outer,
                        inner: inputs.cages.inner.clone(),
                    },
                    args.warp_resolution,
                ))
            })
            .collect::<Result<_, CliError>>()?,
        Sweep::Resolution(rs) => rs
            .iter()
            .map(|&r| ("resolution", r as f64, inputs.cages.clone(), r))
            .collect(),
    };
    for (_, _, _, r) in &configs {
        if *r < 2 {
            return Err(CliError::Validation(format!(
                "warp resolution must be at least 2, got {r}"
            )));
        }
    }

    let mut rows = Vec::new();
    for (sweep, value, cages, resolution) in configs {
        let start = Instant::now();
        let mut session = inputs.build_session(&cages, Some(resolution), args.settings)?;
        let bake_ms = start.elapsed().as_secs_f64() * 1e3;
        let stages = session.stages();
        let render_ms = match &camera {
            Some(cam) => {
                let start = Instant::now();
                session.render(cam)?;
                Some(start.elapsed().as_secs_f64() * 1e3)
            }
            None => None,
        };
        rows.push(AblationRow {
            sweep,
            value,
            discontinuity_energy: stack_discontinuity(&inputs.scene, &stages, eps),
            grid_vs_exact_error: grid_vs_exact(&inputs.scene, &stages, args.settings.seed),
            bake_ms,
            render_ms,
        });
        info!("{sweep}={value} done");
    }

    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(&args.out).map_err(|e| CliError::Compute(e.to_string()))?;
    for row in &rows {
        w.serialize(row).map_err(|e| CliError::Compute(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(&args.out, e))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(
            "outer-scale=1.2,1.5,2.0".parse::<Sweep>().unwrap(),
            Sweep::OuterScale(vec![1.2, 1.5, 2.0])
        );
        assert_eq!("resolution=64".parse::<Sweep>().unwrap(), Sweep::Resolution(vec![64]));
        assert!("resolution=".parse::<Sweep>().is_err());
        assert!("size=1".parse::<Sweep>().is_err());
        assert!("outer-scale=x".parse::<Sweep>().is_err());
    }
}
