//! Loading and validating CLI input files.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use cagewarp_core::cage::{CageSetup, HexCage};
use cagewarp_core::field::{load_scene, RadianceField};
use cagewarp_core::render::{load_cameras, Camera, RenderSettings};
use cagewarp_core::session::{Session, SessionConfig};
use cagewarp_core::warp::{AdjustmentMode, Manipulation};
use cagewarp_core::Point3;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

/// One edit of a script: manipulations of the inner (or outer) cage, applied
/// in order and then committed.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEdit {
    #[serde(default)]
    pub mode: Option<String>,
    pub manipulations: Vec<Manipulation>,
}

/// A script is either a bare list of manipulations (one edit) or
/// `{"edits": [...]}` for several committed edits.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Single(Vec<Manipulation>),
    Multi { edits: Vec<ScriptEdit> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCages {
    outer: [[f64; 3]; 8],
    inner: [[f64; 3]; 8],
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse_in(path, e))
}

fn cage(raw: &[[f64; 3]; 8], name: &str) -> Result<HexCage, CliError> {
    HexCage::new(raw.map(|v| Point3::new(v[0], v[1], v[2])))
        .map_err(|e| CliError::Validation(format!("{name} cage: {e}")))
}

pub fn load_cages(path: &Path) -> Result<CageSetup, CliError> {
    let raw: RawCages = read_json(path)?;
    Ok(CageSetup {
        outer: cage(&raw.outer, "outer")?,
        inner: cage(&raw.inner, "inner")?,
    })
}

pub fn load_script(path: Option<&Path>) -> Result<Vec<ScriptEdit>, CliError> {
    let Some(path) = path else {
        return Ok(vec![ScriptEdit {
            mode: None,
            manipulations: Vec::new(),
        }]);
    };
    Ok(match read_json::<ScriptFile>(path)? {
        ScriptFile::Single(manipulations) => vec![ScriptEdit {
            mode: None,
            manipulations,
        }],
        ScriptFile::Multi { edits } => edits,
    })
}

pub fn load_scene_file(path: &Path) -> Result<Arc<dyn RadianceField>, CliError> {
    Ok(load_scene(path)?)
}

pub fn load_camera_file(path: &Path) -> Result<Vec<Camera>, CliError> {
    let cams = load_cameras(path)?;
    if cams.is_empty() {
        return Err(CliError::Validation(format!("{}: no camera frames", path.display())));
    }
    Ok(cams)
}

pub fn parse_mode(s: &str) -> Result<AdjustmentMode, CliError> {
    s.parse().map_err(CliError::Usage)
}

/// Everything a batch run needs, loaded and validated before any output is
/// written.
pub struct BatchInputs {
    pub scene: Arc<dyn RadianceField>,
    pub scene_path: String,
    pub cages: CageSetup,
    pub edits: Vec<ScriptEdit>,
    pub mode: AdjustmentMode,
}

impl BatchInputs {
    pub fn load(scene: &Path, cages: &Path, script: Option<&Path>, mode: AdjustmentMode) -> Result<Self, CliError> {
        let inputs = Self {
            scene: load_scene_file(scene)?,
            scene_path: scene.display().to_string(),
            cages: load_cages(cages)?,
            edits: load_script(script)?,
            mode,
        };
        for e in &inputs.edits {
            if let Some(m) = &e.mode {
                parse_mode(m)?;
            }
        }
        Ok(inputs)
    }

    /// Applies the script to a fresh session, committing each edit.
    pub fn build_session(
        &self,
        cages: &CageSetup,
        warp_resolution: Option<usize>,
        settings: RenderSettings,
    ) -> Result<Session, CliError> {
        let mut s = Session::new(SessionConfig {
            warp_resolution,
            background_bake: false,
            ..Default::default()
        });
        s.set_scene(self.scene.clone(), Some(self.scene_path.clone()));
        s.set_settings(settings)?;
        s.set_cages(cages.outer.clone(), cages.inner.clone())?;
        for edit in &self.edits {
            let mode = match &edit.mode {
                Some(m) => parse_mode(m)?,
                None => self.mode,
            };
            s.begin_edit(mode)?;
            for m in &edit.manipulations {
                s.apply_manipulation(m)?;
            }
            s.commit()?;
        }
        Ok(s)
    }

    /// Length used to scale probe separations.
    pub fn scene_diameter(&self) -> f64 {
        match self.scene.bounds() {
            Some(b) => b.diameter(),
            None => self.cages.outer.diameter(),
        }
    }
}
