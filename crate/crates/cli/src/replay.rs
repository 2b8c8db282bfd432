//! Headless replay of a recorded command log.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use cagewarp_core::session::{Frame, SessionConfig};
use serde_json::Value;

use crate::error::CliError;
use crate::executor::Executor;
use crate::protocol::{Ack, CommandMessage};

pub struct ReplayOutcome {
    pub acks: Vec<Ack>,
    pub save_json: String,
    /// Result of the last render request in the log.
    pub final_frame: Option<Frame>,
}

/// Parses a log of single-line JSON commands. Hello lines and server
/// messages (anything with a `type` field) are skipped so a full transcript
/// can be replayed as is.
pub fn parse_log(text: &str) -> Result<Vec<CommandMessage>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).map_err(|e| CliError::Parse(format!("log line {}: {e}", i + 1)))?;
        if value.get("hello").is_some() || value.get("type").is_some() {
            continue;
        }
        out.push(serde_json::from_value(value).map_err(|e| CliError::Parse(format!("log line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Runs `commands` on a fresh session. Renders wait for bakes so the result
/// does not depend on timing.
pub fn replay(
    commands: &[CommandMessage],
    scene_root: PathBuf,
    config: SessionConfig,
) -> Result<ReplayOutcome, CliError> {
    let config = SessionConfig {
        background_bake: false,
        ..config
    };
    let mut exec = Executor::new(config, scene_root).settle_renders();
    let mut acks = Vec::with_capacity(commands.len());
    let mut final_frame = None;
    let never = AtomicBool::new(false);
    for msg in commands {
        let (ack, render) = exec.handle(msg);
        acks.push(ack);
        if let Some(r) = render {
            final_frame = Some(
                r.job
                    .run(&r.camera, &never)?
                    .expect("replay renders are never cancelled"),
            );
        }
    }
    Ok(ReplayOutcome {
        acks,
        save_json: exec.session().save_json(),
        final_frame,
    })
}

/// Writes `session.json`, `acks.jsonl` and, if anything was rendered,
/// `final.png` and `final.f32` into `out`.
pub fn write_outcome(outcome: &ReplayOutcome, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = out.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))
    };
    write("session.json", outcome.save_json.as_bytes())?;
    let acks: String = outcome
        .acks
        .iter()
        .map(|a| serde_json::to_string(a).expect("ack serializes") + "\n")
        .collect();
    write("acks.jsonl", acks.as_bytes())?;
    if let Some(frame) = &outcome.final_frame {
        write("final.png", &frame.image.encode_png()?)?;
        write("final.f32", &frame.image.encode_raw())?;
    }
    Ok(())
}
