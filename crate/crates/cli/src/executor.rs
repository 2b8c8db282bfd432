//! Applies protocol commands to a session. Shared by the service and by
//! headless replay.

use std::path::{Component, Path, PathBuf};

use cagewarp_core::cage::CageSetup;
use cagewarp_core::field::load_scene;
use cagewarp_core::render::Camera;
use cagewarp_core::session::{RenderJob, Session, SessionConfig};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::protocol::{
    Ack, CommandKind, CommandMessage, FrameEncoding, LoadScenePayload, ManipulatePayload, ModePayload,
    RenderRequestPayload, StateReport,
};

/// A render the caller should run, outside of the command loop if it likes.
pub struct PendingRender {
    pub request_id: u64,
    pub job: RenderJob,
    pub camera: Camera,
    pub encoding: FrameEncoding,
}

pub struct Executor {
    session: Session,
    scene_root: PathBuf,
    last_id: Option<u64>,
    /// Treat every render request as settled (used by replay).
    force_settle: bool,
}

impl Executor {
    pub fn new(config: SessionConfig, scene_root: PathBuf) -> Self {
        Self {
            session: Session::new(config),
            scene_root,
            last_id: None,
            force_settle: false,
        }
    }

    pub fn settle_renders(mut self) -> Self {
        self.force_settle = true;
        self
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn session_mut(&mut self) -> &mut Session {
        &mut self.session
    }

    /// Runs one command. Render requests are validated and snapshotted here
    /// but rendered by the caller.
    pub fn handle(&mut self, msg: &CommandMessage) -> (Ack, Option<PendingRender>) {
        if let Some(last) = self.last_id {
            if msg.id <= last {
                let err = format!("command id {} is not greater than previous id {last}", msg.id);
                return (Ack::error(Some(msg.id), self.session.revision(), err), None);
            }
        }
        self.last_id = Some(msg.id);
        match self.dispatch(msg) {
            Ok((result, render)) => (Ack::ok(msg.id, self.session.revision(), result), render),
            Err(e) => (Ack::error(Some(msg.id), self.session.revision(), e), None),
        }
    }

    fn dispatch(&mut self, msg: &CommandMessage) -> Result<(Option<Value>, Option<PendingRender>), String> {
        let s = &mut self.session;
        match msg.kind {
            CommandKind::LoadScene => {
                let p: LoadScenePayload = payload(&msg.payload)?;
                let path = resolve_under(&self.scene_root, &p.path)?;
                let scene = load_scene(&path).map_err(|e| e.to_string())?;
                s.set_scene(scene, Some(p.path));
            }
            CommandKind::SetCages => {
                let c: CageSetup = payload(&msg.payload)?;
                s.set_cages(c.outer, c.inner).map_err(|e| e.to_string())?;
            }
            CommandKind::BeginEdit => {
                let m: ModePayload = payload(&msg.payload)?;
                s.begin_edit(m.parse()?).map_err(|e| e.to_string())?;
            }
            CommandKind::SetMode => {
                let m: ModePayload = payload(&msg.payload)?;
                s.set_mode(m.parse()?).map_err(|e| e.to_string())?;
            }
            CommandKind::Manipulate => {
                let m: ManipulatePayload = payload(&msg.payload)?;
                s.apply_manipulation(&m).map_err(|e| e.to_string())?;
            }
            CommandKind::Commit => s.commit().map_err(|e| e.to_string())?,
            CommandKind::Undo => s.undo().map_err(|e| e.to_string())?,
            CommandKind::GetState => {
                let bake = s.bake_status();
                let save = s.to_save();
                let report = StateReport {
                    phase: s.phase(),
                    revision: s.revision(),
                    stack_depth: s.committed().len(),
                    scene: save.scene,
                    staged: save.staged,
                    live: save.live,
                    bake,
                };
                return Ok((Some(serde_json::to_value(report).expect("state serializes")), None));
            }
            CommandKind::BakeStatus => {
                let status = s.bake_status();
                return Ok((Some(serde_json::to_value(status).expect("status serializes")), None));
            }
            CommandKind::RenderRequest => {
                let r: RenderRequestPayload = payload(&msg.payload)?;
                let camera = Camera::from_file(&r.camera).map_err(|e| e.to_string())?;
                if let Some(settings) = r.settings {
                    if settings != *s.settings() {
                        s.set_settings(settings).map_err(|e| e.to_string())?;
                    }
                }
                let job = s
                    .render_job(r.settle || self.force_settle, r.overlay)
                    .map_err(|e| e.to_string())?;
                let render = PendingRender {
                    request_id: msg.id,
                    job,
                    camera,
                    encoding: r.encoding,
                };
                return Ok((None, Some(render)));
            }
        }
        Ok((None, None))
    }
}

fn payload<T: DeserializeOwned>(v: &Value) -> Result<T, String> {
    let v = if v.is_null() {
        Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_json::from_value(v).map_err(|e| format!("bad payload: {e}"))
}

/// Joins a client-supplied relative path onto `root`, refusing anything that
/// could escape it.
fn resolve_under(root: &Path, rel: &str) -> Result<PathBuf, String> {
    let rel = Path::new(rel);
    if rel
        .components()
        .any(|c| !matches!(c, Component::Normal(_) | Component::CurDir))
    {
        return Err(format!(
            "scene path {} must be relative to the scene root",
            rel.display()
        ));
    }
    Ok(root.join(rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn exec() -> Executor {
        Executor::new(
            SessionConfig {
                warp_resolution: Some(8),
                background_bake: false,
                ..Default::default()
            },
            PathBuf::from("."),
        )
    }

    fn cmd(id: u64, kind: CommandKind, payload: Value) -> CommandMessage {
        CommandMessage { id, kind, payload }
    }

    #[test]
    fn fresh_state_is_idle() {
        let mut e = exec();
        let (ack, _) = e.handle(&cmd(1, CommandKind::GetState, Value::Null));
        let r = ack.result.unwrap();
        assert_eq!(r["phase"], "Idle");
        assert_eq!(r["stack_depth"], 0);
    }

    #[test]
    fn ids_must_increase() {
        let mut e = exec();
        assert!(e.handle(&cmd(5, CommandKind::GetState, Value::Null)).0.ok);
        let (ack, _) = e.handle(&cmd(5, CommandKind::GetState, Value::Null));
        assert!(!ack.ok);
        assert!(e.handle(&cmd(6, CommandKind::GetState, Value::Null)).0.ok);
    }

    #[test]
    fn containment_error_names_vertices() {
        let mut e = exec();
        let outer = [
            [-1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        let inner = [
            [0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [0.0, 0.5, 0.0],
            [2.0, 0.5, 0.0],
            [0.0, 0.0, 0.5],
            [2.0, 0.0, 0.5],
            [0.0, 0.5, 0.5],
            [2.0, 0.5, 0.5],
        ];
        let (ack, _) = e.handle(&cmd(1, CommandKind::SetCages, json!({"outer": outer, "inner": inner})));
        assert!(!ack.ok);
        let err = ack.error.unwrap();
        assert!(err.contains("[1, 3, 5, 7]"), "{err}");
        assert_eq!(ack.revision, 0);
    }

    #[test]
    fn escaping_scene_paths_are_refused() {
        assert!(resolve_under(Path::new("/srv"), "../etc/passwd").is_err());
        assert!(resolve_under(Path::new("/srv"), "/etc/passwd").is_err());
        assert_eq!(
            resolve_under(Path::new("/srv"), "a/b.json").unwrap(),
            PathBuf::from("/srv/a/b.json")
        );
    }

    #[test]
    fn render_without_scene_errors() {
        let mut e = exec();
        let cam = Camera::new(cagewarp_core::Matrix4::identity(), 0.8, 4, 4).unwrap();
        let (ack, render) = e.handle(&cmd(
            1,
            CommandKind::RenderRequest,
            json!({"camera": serde_json::to_value(cam.to_file()).unwrap()}),
        ));
        assert!(!ack.ok && render.is_none());
    }
}
