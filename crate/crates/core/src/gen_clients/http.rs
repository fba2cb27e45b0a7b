//! Minimal blocking JSON-over-HTTP client shared by the live backends.

use std::io::Cursor;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use image::RgbImage;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ClientError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpSettings {
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_timeout() -> f64 {
    120.0
}

impl HttpSettings {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), token: None, timeout_secs: default_timeout() }
    }
}

pub struct JsonClient {
    settings: HttpSettings,
    agent: ureq::Agent,
}

impl JsonClient {
    pub fn new(settings: HttpSettings) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(settings.timeout_secs.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        Self { settings, agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.settings.endpoint
    }

    pub fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, ClientError> {
        let mut req = self.agent.post(&self.settings.endpoint);
        if let Some(token) = &self.settings.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(body).map_err(map_error)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_error)?;
        if status == 429 || status >= 500 {
            return Err(ClientError::Transport(format!("HTTP {status}: {text}")));
        }
        if status >= 400 {
            return Err(ClientError::Malformed(format!("HTTP {status}: {text}")));
        }
        serde_json::from_str(&text).map_err(|e| ClientError::Malformed(format!("{e}: {text}")))
    }
}

fn map_error(e: ureq::Error) -> ClientError {
    match e {
        ureq::Error::Timeout(_) => ClientError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => ClientError::Timeout,
        other => ClientError::Transport(other.to_string()),
    }
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>, image::ImageError> {
    let mut buf = Cursor::new(Vec::new());
    image.write_to(&mut buf, image::ImageFormat::Png)?;
    Ok(buf.into_inner())
}

pub fn encode_png_base64(image: &RgbImage) -> Result<String, ClientError> {
    let png = encode_png(image).map_err(|e| ClientError::Malformed(format!("png encode: {e}")))?;
    Ok(STANDARD.encode(png))
}

pub fn decode_png_base64(data: &str) -> Result<RgbImage, ClientError> {
    let bytes = STANDARD
        .decode(data.trim())
        .map_err(|e| ClientError::Malformed(format!("base64: {e}")))?;
    image::load_from_memory(&bytes)
        .map(|img| img.to_rgb8())
        .map_err(|e| ClientError::Malformed(format!("image decode: {e}")))
}
