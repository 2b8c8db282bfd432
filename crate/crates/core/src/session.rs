//! The interactive editing state machine.
//!
//! Phases run `Idle -> SettingCages -> Editing -> SettingCages`. Every
//! mutating call either succeeds and bumps the revision, or fails and leaves
//! the session untouched. Warp grids for the live edit are baked on a
//! background thread; until a bake lands, renders use the exact mapping.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cage::{CageError, CagePair, CageSetup, HexCage};
use crate::field::{load_scene, FieldError, RadianceField};
use crate::render::{draw_cage, render_cancellable, Camera, CameraFile, Image, RenderError, RenderSettings};
use crate::warp::{
    bake_warp_grid_cancellable, AdjustmentMode, DeformedField, EditSpec, Manipulation, WarpError, WarpGrid, WarpStage,
    DEFAULT_MAX_STACK, DEFAULT_WARP_RESOLUTION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    SettingCages,
    Editing,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{op} is not allowed in phase {phase}")]
    Phase { op: &'static str, phase: Phase },
    #[error("no scene loaded")]
    NoScene,
    #[error("nothing to undo")]
    EmptyStack,
    #[error("edit stack is full ({0} edits)")]
    StackFull(usize),
    #[error("unknown camera {0:?}")]
    UnknownCamera(String),
    #[error(transparent)]
    Cage(#[from] CageError),
    #[error(transparent)]
    Warp(#[from] WarpError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Bake resolution; `None` renders every edit through the exact mapping.
    pub warp_resolution: Option<usize>,
    pub max_stack: usize,
    /// Bake on a background thread instead of inline. A runtime choice, so
    /// it is not written to save files.
    #[serde(skip)]
    pub background_bake: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            warp_resolution: Some(DEFAULT_WARP_RESOLUTION),
            max_stack: DEFAULT_MAX_STACK,
            background_bake: true,
        }
    }
}

struct PendingBake {
    edit: EditSpec,
    cancel: Arc<AtomicBool>,
    handle: JoinHandle<Result<Option<WarpGrid>, WarpError>>,
}

/// Save-file form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSave {
    pub scene: Option<String>,
    pub phase: Phase,
    pub staged: Option<CageSetup>,
    pub committed: Vec<EditSpec>,
    pub live: Option<EditSpec>,
    pub settings: RenderSettings,
    pub cameras: BTreeMap<String, CameraFile>,
    pub config: SessionConfig,
}

/// Bake progress as reported to clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BakeStatus {
    pub pending: bool,
    pub live_grid_ready: bool,
    pub resolution: Option<usize>,
}

/// One rendered image tagged with the session revision it shows.
#[derive(Debug, Clone)]
pub struct Frame {
    pub revision: u64,
    pub image: Image,
}

/// Everything needed to render the session state at one revision, detached
/// from the session so it can run on another thread.
#[derive(Clone)]
pub struct RenderJob {
    revision: u64,
    field: Arc<DeformedField<Arc<dyn RadianceField>>>,
    settings: RenderSettings,
    overlay: Vec<HexCage>,
}

impl RenderJob {
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn field(&self) -> &DeformedField<Arc<dyn RadianceField>> {
        &self.field
    }

    pub fn settings(&self) -> &RenderSettings {
        &self.settings
    }

    /// Renders; `Ok(None)` when cancelled.
    pub fn run(&self, camera: &Camera, cancel: &AtomicBool) -> Result<Option<Frame>, RenderError> {
        let Some(mut image) = render_cancellable(&*self.field, camera, &self.settings, cancel)? else {
            return Ok(None);
        };
        for (i, cage) in self.overlay.iter().enumerate() {
            let color = if i == 0 { [1.0, 0.55, 0.0] } else { [0.0, 0.6, 1.0] };
            draw_cage(&mut image, camera, cage, color);
        }
        Ok(Some(Frame {
            revision: self.revision,
            image,
        }))
    }
}

pub struct Session {
    config: SessionConfig,
    phase: Phase,
    scene: Option<Arc<dyn RadianceField>>,
    scene_path: Option<String>,
    staged: Option<CagePair>,
    committed: Vec<WarpStage>,
    live: Option<EditSpec>,
    live_grid: Option<(EditSpec, Arc<WarpGrid>)>,
    pending: Option<PendingBake>,
    settings: RenderSettings,
    cameras: BTreeMap<String, Camera>,
    revision: u64,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(SessionConfig::default())
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Some(p) = self.pending.take() {
            p.cancel.store(true, Ordering::Relaxed);
        }
    }
}

impl Session {
    pub fn new(config: SessionConfig) -> Self {
        Self {
            config,
            phase: Phase::Idle,
            scene: None,
            scene_path: None,
            staged: None,
            committed: Vec::new(),
            live: None,
            live_grid: None,
            pending: None,
            settings: RenderSettings::default(),
            cameras: BTreeMap::new(),
            revision: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn settings(&self) -> &RenderSettings {
        &self.settings
    }

    pub fn staged(&self) -> Option<&CagePair> {
        self.staged.as_ref()
    }

    pub fn live_edit(&self) -> Option<&EditSpec> {
        self.live.as_ref()
    }

    pub fn committed(&self) -> impl ExactSizeIterator<Item = &EditSpec> {
        self.committed.iter().map(|s| &*s.edit)
    }

    pub fn scene(&self) -> Option<&Arc<dyn RadianceField>> {
        self.scene.as_ref()
    }

    pub fn cameras(&self) -> &BTreeMap<String, Camera> {
        &self.cameras
    }

    fn bump(&mut self) {
        self.revision += 1;
    }

    fn require(&self, op: &'static str, allowed: &[Phase]) -> Result<(), SessionError> {
        if allowed.contains(&self.phase) {
            Ok(())
        } else {
            Err(SessionError::Phase { op, phase: self.phase })
        }
    }

    pub fn load_scene(&mut self, path: &Path) -> Result<(), SessionError> {
        let scene = load_scene(path)?;
        self.set_scene(scene, Some(path.display().to_string()));
        Ok(())
    }

    /// Installs an in-memory scene; `path` is what a save file records.
    pub fn set_scene(&mut self, scene: Arc<dyn RadianceField>, path: Option<String>) {
        self.scene = Some(scene);
        self.scene_path = path;
        self.bump();
    }

    pub fn set_settings(&mut self, settings: RenderSettings) -> Result<(), SessionError> {
        settings.validate()?;
        self.settings = settings;
        self.bump();
        Ok(())
    }

    pub fn set_camera(&mut self, name: impl Into<String>, camera: Camera) {
        self.cameras.insert(name.into(), camera);
        self.bump();
    }

    pub fn camera(&self, name: &str) -> Result<&Camera, SessionError> {
        self.cameras
            .get(name)
            .ok_or_else(|| SessionError::UnknownCamera(name.to_owned()))
    }

    pub fn set_cages(&mut self, outer: HexCage, inner: HexCage) -> Result<(), SessionError> {
        self.require("set_cages", &[Phase::Idle, Phase::SettingCages])?;
        let pair = CagePair::new(outer, inner)?;
        self.staged = Some(pair);
        self.phase = Phase::SettingCages;
        self.bump();
        Ok(())
    }

    pub fn begin_edit(&mut self, mode: AdjustmentMode) -> Result<(), SessionError> {
        self.require("begin_edit", &[Phase::SettingCages])?;
        let pair = self.staged.as_ref().expect("cages are staged while setting cages");
        if self.committed.len() >= self.config.max_stack {
            return Err(SessionError::StackFull(self.committed.len()));
        }
        let edit = EditSpec::new(pair.outer.clone(), pair.inner_canonical.clone(), mode)?;
        self.set_live(edit);
        self.phase = Phase::Editing;
        self.bump();
        Ok(())
    }

    pub fn set_mode(&mut self, mode: AdjustmentMode) -> Result<(), SessionError> {
        self.require("set_mode", &[Phase::Editing])?;
        let edit = self.live.as_ref().expect("live edit while editing").with_mode(mode);
        self.set_live(edit);
        self.bump();
        Ok(())
    }

    pub fn apply_manipulation(&mut self, m: &Manipulation) -> Result<(), SessionError> {
        self.require("manipulate", &[Phase::Editing])?;
        let edit = self.live.as_ref().expect("live edit while editing").apply(m)?;
        self.set_live(edit);
        self.bump();
        Ok(())
    }

    /// Drops manipulations of the live edit past `len`.
    pub fn truncate_live(&mut self, len: usize) -> Result<(), SessionError> {
        self.require("truncate", &[Phase::Editing])?;
        let edit = self.live.as_ref().expect("live edit while editing").truncated(len)?;
        self.set_live(edit);
        self.bump();
        Ok(())
    }

    pub fn commit(&mut self) -> Result<(), SessionError> {
        self.require("commit", &[Phase::Editing])?;
        self.flush_bakes();
        let edit = self.live.take().expect("live edit while editing");
        let grid = self.grid_for(&edit);
        self.live_grid = None;
        self.staged = Some(CagePair::new(
            edit.cages().outer.clone(),
            edit.cages().inner_deformed.clone(),
        )?);
        self.committed.push(WarpStage {
            edit: Arc::new(edit),
            grid,
        });
        self.phase = Phase::SettingCages;
        self.bump();
        Ok(())
    }

    pub fn undo(&mut self) -> Result<(), SessionError> {
        self.require("undo", &[Phase::Idle, Phase::SettingCages])?;
        if self.committed.pop().is_none() {
            return Err(SessionError::EmptyStack);
        }
        self.bump();
        Ok(())
    }

    fn set_live(&mut self, edit: EditSpec) {
        if let Some(p) = self.pending.take() {
            p.cancel.store(true, Ordering::Relaxed);
        }
        let needs_bake = !edit.is_identity() && self.grid_for(&edit).is_none();
        if let (true, Some(resolution)) = (needs_bake, self.config.warp_resolution) {
            if self.config.background_bake {
                let cancel = Arc::new(AtomicBool::new(false));
                let job = edit.clone();
                let flag = cancel.clone();
                let handle = thread::spawn(move || bake_warp_grid_cancellable(&job, resolution, &flag));
                self.pending = Some(PendingBake {
                    edit: edit.clone(),
                    cancel,
                    handle,
                });
            } else {
                let never = AtomicBool::new(false);
                if let Ok(Some(grid)) = bake_warp_grid_cancellable(&edit, resolution, &never) {
                    self.live_grid = Some((edit.clone(), Arc::new(grid)));
                }
            }
        }
        self.live = Some(edit);
    }

    /// Baked grid matching `edit`, if one has landed.
    fn grid_for(&self, edit: &EditSpec) -> Option<Arc<WarpGrid>> {
        match &self.live_grid {
            Some((e, g)) if e == edit => Some(g.clone()),
            _ => None,
        }
    }

    /// Collects a finished background bake without blocking.
    pub fn poll_bakes(&mut self) {
        if self.pending.as_ref().is_some_and(|p| p.handle.is_finished()) {
            self.collect_bake();
        }
    }

    /// Blocks until the pending bake, if any, has landed.
    pub fn flush_bakes(&mut self) {
        if self.pending.is_some() {
            self.collect_bake();
        }
    }

    fn collect_bake(&mut self) {
        let p = self.pending.take().expect("pending bake");
        match p.handle.join() {
            Ok(Ok(Some(grid))) => {
                debug!("bake landed at resolution {}", grid.resolution());
                self.live_grid = Some((p.edit, Arc::new(grid)));
            }
            Ok(Ok(None)) => {}
            Ok(Err(e)) => info!("bake failed, rendering the exact mapping: {e}"),
            Err(_) => info!("bake thread panicked, rendering the exact mapping"),
        }
    }

    pub fn bake_status(&mut self) -> BakeStatus {
        self.poll_bakes();
        BakeStatus {
            pending: self.pending.is_some(),
            live_grid_ready: self.live.as_ref().is_some_and(|e| self.grid_for(e).is_some()),
            resolution: self.config.warp_resolution,
        }
    }

    /// Committed stages plus the live edit.
    pub fn stages(&self) -> Vec<WarpStage> {
        let mut stages = self.committed.clone();
        if let Some(edit) = &self.live {
            stages.push(WarpStage {
                edit: Arc::new(edit.clone()),
                grid: self.grid_for(edit),
            });
        }
        stages
    }

    /// Snapshot for rendering. With `settle`, pending bakes are waited for
    /// first, so the frame does not depend on bake timing. With `overlay`,
    /// the staged or live cage wireframes are drawn over the image.
    pub fn render_job(&mut self, settle: bool, overlay: bool) -> Result<RenderJob, SessionError> {
        if settle {
            self.flush_bakes();
        } else {
            self.poll_bakes();
        }
        let scene = self.scene.clone().ok_or(SessionError::NoScene)?;
        let field = DeformedField::with_max_depth(scene, self.stages(), self.config.max_stack + 1)?;
        let mut cages = Vec::new();
        if overlay {
            let pair = self.live.as_ref().map(|e| e.cages()).or(self.staged.as_ref());
            if let Some(pair) = pair {
                cages.push(pair.outer.clone());
                cages.push(pair.inner_deformed.clone());
            }
        }
        Ok(RenderJob {
            revision: self.revision,
            field: Arc::new(field),
            settings: self.settings,
            overlay: cages,
        })
    }

    /// Renders the current state synchronously with settled bakes.
    pub fn render(&mut self, camera: &Camera) -> Result<Frame, SessionError> {
        let job = self.render_job(true, false)?;
        let never = AtomicBool::new(false);
        Ok(job.run(camera, &never)?.expect("render was not cancelled"))
    }

    pub fn to_save(&self) -> SessionSave {
        SessionSave {
            scene: self.scene_path.clone(),
            phase: self.phase,
            staged: self.staged.as_ref().map(|p| CageSetup {
                outer: p.outer.clone(),
                inner: p.inner_canonical.clone(),
            }),
            committed: self.committed().cloned().collect(),
            live: self.live.clone(),
            settings: self.settings,
            cameras: self.cameras.iter().map(|(k, c)| (k.clone(), c.to_file())).collect(),
            config: self.config,
        }
    }

    pub fn save_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_save()).expect("session save serializes")
    }

    /// Rebuilds a session from a save file, loading the scene (relative
    /// paths resolve against `scene_root`) and rebaking every grid inline.
    pub fn restore(save: &SessionSave, scene_root: &Path) -> Result<Self, SessionError> {
        let mut config = save.config;
        config.background_bake = false;
        let mut s = Session::new(config);
        if let Some(path) = &save.scene {
            let scene = load_scene(scene_root.join(path))?;
            s.set_scene(scene, Some(path.clone()));
        }
        s.settings = save.settings;
        for (name, file) in &save.cameras {
            s.cameras.insert(name.clone(), Camera::from_file(file)?);
        }
        for edit in &save.committed {
            s.set_live(edit.clone());
            let grid = s.grid_for(edit);
            s.live = None;
            s.live_grid = None;
            s.committed.push(WarpStage {
                edit: Arc::new(edit.clone()),
                grid,
            });
        }
        s.staged = match &save.staged {
            Some(c) => Some(c.clone().into_pair()?),
            None => None,
        };
        if let Some(edit) = &save.live {
            s.set_live(edit.clone());
        }
        s.phase = save.phase;
        s.config.background_bake = save.config.background_bake;
        s.revision = 1;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cage::TransformParams;
    use crate::field::AnalyticField;
    use nalgebra::{Point3, Vector3};

    fn session() -> Session {
        let mut s = Session::new(SessionConfig {
            warp_resolution: Some(24),
            background_bake: false,
            ..Default::default()
        });
        let scene = AnalyticField::sphere(Point3::origin(), 0.3, Vector3::new(0.9, 0.3, 0.2), 8.0);
        s.set_scene(Arc::new(scene), None);
        s
    }

    fn cages() -> (HexCage, HexCage) {
        (
            HexCage::axis_aligned(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0)).unwrap(),
            HexCage::axis_aligned(Point3::new(-0.4, -0.4, -0.4), Point3::new(0.4, 0.4, 0.4)).unwrap(),
        )
    }

    #[test]
    fn phase_errors_do_not_mutate() {
        let mut s = session();
        let before = (s.save_json(), s.revision());
        assert!(matches!(
            s.begin_edit(AdjustmentMode::Continuous),
            Err(SessionError::Phase { phase: Phase::Idle, .. })
        ));
        assert!(s.commit().is_err());
        assert!(matches!(s.undo(), Err(SessionError::EmptyStack)));
        assert!(s.apply_manipulation(&Manipulation::translate(Vector3::x())).is_err());
        assert_eq!((s.save_json(), s.revision()), before);
    }

    #[test]
    fn containment_rejection_names_vertices() {
        let mut s = session();
        let (o, _) = cages();
        let inner = HexCage::axis_aligned(Point3::new(0.5, -0.4, -0.4), Point3::new(1.5, 0.4, 0.4)).unwrap();
        match s.set_cages(o, inner) {
            Err(SessionError::Cage(CageError::Containment { vertices, .. })) => assert_eq!(vertices, vec![1, 3, 5, 7]),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.phase(), Phase::Idle);
    }

    #[test]
    fn edit_commit_undo_cycle() {
        let mut s = session();
        let (o, i) = cages();
        s.set_cages(o, i).unwrap();
        s.begin_edit(AdjustmentMode::DISCRETE_EMPTY).unwrap();
        s.apply_manipulation(&Manipulation::translate(Vector3::new(0.2, 0.0, 0.0)))
            .unwrap();
        let rev = s.revision();
        let bad = Manipulation::transform(TransformParams::scale(Vector3::repeat(4.0)));
        let before = s.save_json();
        assert!(s.apply_manipulation(&bad).is_err());
        assert_eq!((s.save_json(), s.revision()), (before, rev));
        assert!(s.bake_status().live_grid_ready);
        s.commit().unwrap();
        assert_eq!(s.phase(), Phase::SettingCages);
        assert_eq!(s.committed().len(), 1);
        assert_eq!(
            s.staged().unwrap().inner_canonical,
            s.committed().next().unwrap().cages().inner_deformed
        );
        s.undo().unwrap();
        assert_eq!(s.committed().len(), 0);
        assert!(s.revision() > rev);
    }

    #[test]
    fn mode_toggle_rebakes() {
        let mut s = session();
        let (o, i) = cages();
        s.set_cages(o, i).unwrap();
        s.begin_edit(AdjustmentMode::DISCRETE_EMPTY).unwrap();
        s.apply_manipulation(&Manipulation::translate(Vector3::new(0.1, 0.1, 0.0)))
            .unwrap();
        s.set_mode(AdjustmentMode::Continuous).unwrap();
        assert_eq!(s.live_edit().unwrap().mode(), AdjustmentMode::Continuous);
        assert!(s.bake_status().live_grid_ready);
        let stages = s.stages();
        assert_eq!(stages.len(), 1);
        let grid = stages[0].grid.as_ref().unwrap();
        assert_eq!(grid.bbox(), s.live_edit().unwrap().cages().outer.aabb());
    }

    #[test]
    fn background_bake_lands() {
        let mut s = session();
        s.config.background_bake = true;
        let (o, i) = cages();
        s.set_cages(o, i).unwrap();
        s.begin_edit(AdjustmentMode::Continuous).unwrap();
        s.apply_manipulation(&Manipulation::translate(Vector3::new(0.1, 0.0, 0.0)))
            .unwrap();
        s.flush_bakes();
        let status = s.bake_status();
        assert!(!status.pending && status.live_grid_ready);
    }

    #[test]
    fn save_and_restore_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        std::fs::write(
            &path,
            r#"{"kind":"sphere","center":[0,0,0],"radius":0.3,"color":[0.9,0.3,0.2],"density":8}"#,
        )
        .unwrap();
        let mut s = session();
        s.set_scene(load_scene(&path).unwrap(), Some("scene.json".into()));
        let (o, i) = cages();
        s.set_cages(o, i).unwrap();
        s.begin_edit(AdjustmentMode::DISCRETE_COPY).unwrap();
        s.apply_manipulation(&Manipulation::translate(Vector3::new(0.0, 0.3, 0.0)))
            .unwrap();
        s.commit().unwrap();
        s.begin_edit(AdjustmentMode::Continuous).unwrap();
        s.apply_manipulation(&Manipulation::transform(TransformParams::rotation(Vector3::new(
            0.0, 0.4, 0.0,
        ))))
        .unwrap();
        let json = s.save_json();
        let back: SessionSave = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);
        let restored = Session::restore(&back, dir.path()).unwrap();
        assert_eq!(restored.save_json(), json);
        assert_eq!(restored.stages().len(), 2);
    }
}
