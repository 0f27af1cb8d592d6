//! JSON wire format for remote model endpoints.
//!
//! Request:
//! `{"model", "messages": [{"role", "content": [{"type": "frame"|"text", ...}]}],
//!   "want_token_probs", "max_tokens"}`
//!
//! Response: `{"text", "first_token_probs": [{"token", "prob"}]}`; the
//! probability list may be absent or `null`.
//!
//! Requests are serialized compactly with fields in the order above, so the
//! encoding of a given call is byte-stable.

use serde::{Deserialize, Serialize};

use super::{BackendCall, TokenProb};
use crate::error::{Error, Result};
use crate::link::{FrameRef, Message};

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub want_token_probs: bool,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub text: String,
    #[serde(default)]
    pub first_token_probs: Option<Vec<TokenProb>>,
}

/// Expand a frame URI template. `{video}` becomes the video id and `{time}`
/// the frame time in seconds with millisecond precision.
pub fn frame_uri(template: &str, video_id: &str, frame: &FrameRef) -> String {
    template
        .replace("{video}", video_id)
        .replace("{time}", &format!("{:.3}", frame.time))
}

pub fn build_request(call: &BackendCall, model: &str, frame_template: &str) -> WireRequest {
    let resolve = |f: &FrameRef| frame_uri(frame_template, &call.video_id, f);
    WireRequest {
        model: model.to_string(),
        messages: call.prompt.to_messages(&resolve),
        want_token_probs: call.want_token_probs,
        max_tokens: call.max_tokens,
    }
}

pub fn encode_request(call: &BackendCall, model: &str, frame_template: &str) -> Result<String> {
    Ok(serde_json::to_string(&build_request(
        call,
        model,
        frame_template,
    ))?)
}

pub fn decode_response(body: &str) -> Result<WireResponse> {
    let resp: WireResponse = serde_json::from_str(body)
        .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
    if let Some(probs) = &resp.first_token_probs {
        if let Some(bad) = probs
            .iter()
            .find(|p| !(p.prob.is_finite() && p.prob >= 0.0))
        {
            return Err(Error::Protocol(format!(
                "token {:?} has invalid probability {}",
                bad.token, bad.prob
            )));
        }
    }
    Ok(resp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uri_template() {
        let f = FrameRef::at(12.5, 4);
        assert_eq!(
            frame_uri("file:///v/{video}.mp4#t={time}", "abc", &f),
            "file:///v/abc.mp4#t=12.500"
        );
    }

    #[test]
    fn decode_variants() {
        let r =
            decode_response(r#"{"text":"Yes","first_token_probs":[{"token":"Yes","prob":0.9}]}"#)
                .unwrap();
        assert_eq!(r.first_token_probs.unwrap()[0].prob, 0.9);
        let r = decode_response(r#"{"text":"[[1, 2]]"}"#).unwrap();
        assert!(r.first_token_probs.is_none());
        let r = decode_response(r#"{"text":"x","first_token_probs":null}"#).unwrap();
        assert!(r.first_token_probs.is_none());
        assert!(matches!(
            decode_response("{not json"),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            decode_response(r#"{"txt":"x"}"#),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            decode_response(r#"{"text":"x","first_token_probs":[{"token":"Yes","prob":-1}]}"#),
            Err(Error::Protocol(_))
        ));
    }
}
