//! Line-delimited JSON messages spoken between the service and its clients.
//!
//! A connection opens with the client's [`Hello`]; after a matching reply,
//! every line is a [`CommandMessage`] from the client or an [`Ack`],
//! [`FrameMessage`] or [`Cancelled`] notice from the server.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use cagewarp_core::cage::CageSetup;
use cagewarp_core::render::{CameraFile, Image, RenderSettings};
use cagewarp_core::session::{BakeStatus, Phase};
use cagewarp_core::warp::{AdjustmentMode, EditSpec, Manipulation};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: &str = "cagewarp/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub hello: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloReply {
    #[serde(rename = "type")]
    pub kind: String,
    pub version: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl HelloReply {
    pub fn accept() -> Self {
        Self {
            kind: "hello".into(),
            version: PROTOCOL_VERSION.into(),
            ok: true,
            reason: None,
        }
    }

    pub fn refuse(reason: String) -> Self {
        Self {
            kind: "hello".into(),
            version: PROTOCOL_VERSION.into(),
            ok: false,
            reason: Some(reason),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    LoadScene,
    SetCages,
    BeginEdit,
    Manipulate,
    SetMode,
    Commit,
    Undo,
    RenderRequest,
    GetState,
    BakeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandMessage {
    pub id: u64,
    pub kind: CommandKind,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadScenePayload {
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModePayload {
    pub mode: String,
}

impl ModePayload {
    pub fn parse(&self) -> Result<AdjustmentMode, String> {
        self.mode.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrameEncoding {
    #[default]
    #[serde(rename = "png-base64")]
    PngBase64,
    #[serde(rename = "raw-f32le")]
    RawF32le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequestPayload {
    pub camera: CameraFile,
    #[serde(default)]
    pub settings: Option<RenderSettings>,
    #[serde(default)]
    pub encoding: FrameEncoding,
    /// Wait for pending bakes so the frame does not depend on bake timing.
    #[serde(default)]
    pub settle: bool,
    /// Draw the staged or live cage wireframes over the frame.
    #[serde(default)]
    pub overlay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub phase: Phase,
    pub revision: u64,
    pub stack_depth: usize,
    pub scene: Option<String>,
    pub staged: Option<CageSetup>,
    pub live: Option<EditSpec>,
    pub bake: BakeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    #[serde(rename = "type")]
    pub kind: String,
    pub id: Option<u64>,
    pub ok: bool,
    pub revision: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Ack {
    pub fn ok(id: u64, revision: u64, result: Option<Value>) -> Self {
        Self {
            kind: "ack".into(),
            id: Some(id),
            ok: true,
            revision,
            result,
            error: None,
        }
    }

    pub fn error(id: Option<u64>, revision: u64, error: String) -> Self {
        Self {
            kind: "ack".into(),
            id,
            ok: false,
            revision,
            result: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub request_id: u64,
    pub revision: u64,
    pub width: usize,
    pub height: usize,
    pub encoding: FrameEncoding,
    /// Base64 of the PNG file or of the row-major RGB f32le samples.
    pub payload: String,
}

impl FrameMessage {
    pub fn encode(request_id: u64, revision: u64, image: &Image, encoding: FrameEncoding) -> Result<Self, String> {
        let bytes = match encoding {
            FrameEncoding::PngBase64 => image.encode_png().map_err(|e| e.to_string())?,
            FrameEncoding::RawF32le => image.encode_raw(),
        };
        Ok(Self {
            kind: "frame".into(),
            request_id,
            revision,
            width: image.width(),
            height: image.height(),
            encoding,
            payload: STANDARD.encode(bytes),
        })
    }

    pub fn payload_bytes(&self) -> Result<Vec<u8>, String> {
        STANDARD.decode(&self.payload).map_err(|e| e.to_string())
    }

    /// Decodes a raw frame, checking its length against the dimensions.
    pub fn decode_raw(&self) -> Result<Image, String> {
        if self.encoding != FrameEncoding::RawF32le {
            return Err("frame is not raw-f32le".into());
        }
        Image::decode_raw(self.width, self.height, &self.payload_bytes()?).map_err(|e| e.to_string())
    }
}

/// Sent instead of a frame when a newer render request superseded this one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cancelled {
    #[serde(rename = "type")]
    pub kind: String,
    pub request_id: u64,
}

impl Cancelled {
    pub fn new(request_id: u64) -> Self {
        Self {
            kind: "cancelled".into(),
            request_id,
        }
    }
}

/// Payload of `manipulate`.
pub type ManipulatePayload = Manipulation;

/// Payload of `set_cages`.
pub type SetCagesPayload = CageSetup;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_round_trip() {
        let line = r#"{"id":3,"kind":"manipulate","payload":{"op":"transform","translation":[0.1,0,0]}}"#;
        let msg: CommandMessage = serde_json::from_str(line).unwrap();
        assert_eq!(msg.kind, CommandKind::Manipulate);
        let m: ManipulatePayload = serde_json::from_value(msg.payload.clone()).unwrap();
        assert_eq!(m, Manipulation::translate(cagewarp_core::Vector3::new(0.1, 0.0, 0.0)));
        let again: CommandMessage = serde_json::from_str(&serde_json::to_string(&msg).unwrap()).unwrap();
        assert_eq!(again, msg);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(serde_json::from_str::<CommandMessage>(r#"{"id":1,"kind":"explode"}"#).is_err());
    }

    #[test]
    fn raw_frame_checks_length() {
        let img = Image::filled(4, 2, [0.5, 0.25, 1.0]);
        let mut frame = FrameMessage::encode(1, 7, &img, FrameEncoding::RawF32le).unwrap();
        assert_eq!(frame.payload_bytes().unwrap().len(), 4 * 2 * 3 * 4);
        assert_eq!(frame.decode_raw().unwrap().rgb(), img.rgb());
        frame.width = 5;
        assert!(frame.decode_raw().is_err());
        let json = serde_json::to_string(&frame).unwrap();
        assert!(json.contains(r#""encoding":"raw-f32le""#));
    }
}
