//! The RAF wire format: a 4-byte big-endian payload length followed by one
//! UTF-8 JSON object with keys in the order
//! `v,id,kind,class,member,target,args,result,error`. `args` is always
//! present; the other optional keys are omitted when absent.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::RemoteRef;

pub const VERSION: u32 = 1;
pub const MAX_PAYLOAD: usize = 16 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Invoke,
    Reply,
    Err,
    Make,
    Discover,
}

impl Kind {
    pub fn is_request(self) -> bool {
        matches!(self, Kind::Invoke | Kind::Make | Kind::Discover)
    }
}

/// Primitives travel by value, transformed instances as `ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", content = "v", rename_all = "lowercase")]
pub enum TaggedValue {
    Int(i32),
    Long(i64),
    Bool(bool),
    Str(String),
    Null,
    Ref(RemoteRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvocationMessage {
    pub v: u32,
    pub id: u64,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<RemoteRef>,
    pub args: Vec<TaggedValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<TaggedValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl InvocationMessage {
    fn bare(id: u64, kind: Kind) -> Self {
        InvocationMessage {
            v: VERSION,
            id,
            kind,
            class: None,
            member: None,
            target: None,
            args: Vec::new(),
            result: None,
            error: None,
        }
    }

    pub fn make(id: u64, class: &str) -> Self {
        InvocationMessage { class: Some(class.to_string()), ..Self::bare(id, Kind::Make) }
    }

    pub fn discover(id: u64, class: &str) -> Self {
        InvocationMessage { class: Some(class.to_string()), ..Self::bare(id, Kind::Discover) }
    }

    pub fn invoke(id: u64, class: &str, member: &str, target: RemoteRef, args: Vec<TaggedValue>) -> Self {
        InvocationMessage {
            class: Some(class.to_string()),
            member: Some(member.to_string()),
            target: Some(target),
            args,
            ..Self::bare(id, Kind::Invoke)
        }
    }

    pub fn reply(id: u64, result: Option<TaggedValue>) -> Self {
        InvocationMessage { result, ..Self::bare(id, Kind::Reply) }
    }

    pub fn err(id: u64, error: impl Into<String>) -> Self {
        InvocationMessage { error: Some(error.into()), ..Self::bare(id, Kind::Err) }
    }

    /// Per-kind field requirements.
    pub fn validate(&self) -> Result<(), WireError> {
        let bad = |why: &str| Err(WireError::Invalid(format!("{:?} message {why}", self.kind).to_lowercase()));
        if self.v != VERSION {
            return Err(WireError::Version(self.v));
        }
        match self.kind {
            Kind::Invoke if self.target.is_none() => bad("without target"),
            Kind::Invoke if self.member.is_none() => bad("without member"),
            Kind::Make | Kind::Discover if self.class.is_none() => bad("without class"),
            Kind::Err if self.error.is_none() => bad("without error"),
            Kind::Reply if self.error.is_some() => bad("with error"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    Version(u32),
    #[error("truncated frame: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("payload of {0} bytes exceeds the 16 MiB limit")]
    TooLarge(usize),
    #[error("invalid message: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

pub fn encode_payload(m: &InvocationMessage) -> Result<Vec<u8>, WireError> {
    m.validate()?;
    let payload = serde_json::to_vec(m).map_err(|e| WireError::Malformed(e.to_string()))?;
    if payload.len() > MAX_PAYLOAD {
        return Err(WireError::TooLarge(payload.len()));
    }
    Ok(payload)
}

pub fn encode_message(m: &InvocationMessage) -> Result<Vec<u8>, WireError> {
    let payload = encode_payload(m)?;
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn decode_payload(payload: &[u8]) -> Result<InvocationMessage, WireError> {
    let raw: serde_json::Value = serde_json::from_slice(payload).map_err(|e| WireError::Malformed(e.to_string()))?;
    match raw.get("v").and_then(serde_json::Value::as_u64) {
        Some(v) if v == VERSION as u64 => {}
        Some(v) => return Err(WireError::Version(v.try_into().unwrap_or(u32::MAX))),
        None => return Err(WireError::Malformed("missing version".into())),
    }
    let m: InvocationMessage = serde_json::from_value(raw).map_err(|e| WireError::Malformed(e.to_string()))?;
    m.validate()?;
    Ok(m)
}

/// Decodes exactly one complete frame.
pub fn decode_message(b: &[u8]) -> Result<InvocationMessage, WireError> {
    if b.len() < 4 {
        return Err(WireError::Truncated { expected: 4, got: b.len() });
    }
    let len = u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::TooLarge(len));
    }
    let body = &b[4..];
    if body.len() < len {
        return Err(WireError::Truncated { expected: len, got: body.len() });
    }
    if body.len() > len {
        return Err(WireError::Malformed(format!("{} trailing bytes", body.len() - len)));
    }
    decode_payload(body)
}

/// Reads one frame, prefix included. `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Vec<u8>>, WireError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut prefix[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(WireError::Truncated { expected: 4, got }),
            n => got += n,
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::TooLarge(len));
    }
    let mut frame = prefix.to_vec();
    frame.resize(4 + len, 0);
    r.read_exact(&mut frame[4..]).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Truncated { expected: len, got: 0 },
        _ => WireError::Io(e),
    })?;
    Ok(Some(frame))
}

pub fn write_frame(w: &mut impl Write, frame: &[u8]) -> Result<(), WireError> {
    w.write_all(frame)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discover_frame_layout() {
        let bytes = encode_message(&InvocationMessage::discover(7, "X")).unwrap();
        let json = br#"{"v":1,"id":7,"kind":"discover","class":"X","args":[]}"#;
        assert_eq!(&bytes[..4], &[0x00, 0x00, 0x00, 0x36]);
        assert_eq!(&bytes[4..], json);
    }

    #[test]
    fn truncated_prefix_is_rejected() {
        assert!(matches!(decode_message(&[0, 0]), Err(WireError::Truncated { .. })));
        let mut frame = encode_message(&InvocationMessage::make(1, "C")).unwrap();
        frame.pop();
        assert!(matches!(decode_message(&frame), Err(WireError::Truncated { .. })));
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        let frame = |json: &str| {
            let mut b = (json.len() as u32).to_be_bytes().to_vec();
            b.extend_from_slice(json.as_bytes());
            b
        };
        let extra = frame(r#"{"v":1,"id":1,"kind":"make","class":"C","args":[],"x":0}"#);
        assert!(matches!(decode_message(&extra), Err(WireError::Malformed(_))));
        let v2 = frame(r#"{"v":2,"id":1,"kind":"make","class":"C","args":[]}"#);
        assert!(matches!(decode_message(&v2), Err(WireError::Version(2))));
        let no_target = frame(r#"{"v":1,"id":1,"kind":"invoke","member":"m","args":[]}"#);
        assert!(matches!(decode_message(&no_target), Err(WireError::Invalid(_))));
    }

    #[test]
    fn tagged_values_shape() {
        let r = RemoteRef { node: "n2".into(), oid: 12, class: "X".into() };
        let m = InvocationMessage::invoke(3, "X", "m", r, vec![TaggedValue::Long(5)]);
        let json = String::from_utf8(encode_payload(&m).unwrap()).unwrap();
        assert_eq!(
            json,
            r#"{"v":1,"id":3,"kind":"invoke","class":"X","member":"m","target":{"node":"n2","oid":12,"class":"X"},"args":[{"t":"long","v":5}]}"#
        );
        let reply = InvocationMessage::reply(3, Some(TaggedValue::Null));
        assert_eq!(String::from_utf8(encode_payload(&reply).unwrap()).unwrap(), r#"{"v":1,"id":3,"kind":"reply","args":[],"result":{"t":"null"}}"#);
    }

    #[test]
    fn oversized_payload_is_refused() {
        let m = InvocationMessage { args: vec![TaggedValue::Str("x".repeat(MAX_PAYLOAD))], ..InvocationMessage::make(1, "C") };
        assert!(matches!(encode_message(&m), Err(WireError::TooLarge(_))));
    }
}
