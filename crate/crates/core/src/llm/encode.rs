use std::fmt;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LofError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MediaType {
    #[serde(rename = "image/png")]
    Png,
    #[serde(rename = "image/jpeg")]
    Jpeg,
}

impl MediaType {
    pub fn sniff(bytes: &[u8]) -> Option<MediaType> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(MediaType::Png)
        } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
            Some(MediaType::Jpeg)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MediaType::Png => "image/png",
            MediaType::Jpeg => "image/jpeg",
        }
    }
}

impl fmt::Display for MediaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A base64-encoded image ready to embed in a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePayload {
    pub media_type: MediaType,
    pub data: String,
}

impl ImagePayload {
    pub fn data_url(&self) -> String {
        format!("data:{};base64,{}", self.media_type, self.data)
    }
}

/// Standard alphabet, padded.
pub fn encode_bytes(bytes: &[u8]) -> String {
    STANDARD.encode(bytes)
}

pub fn decode_payload(data: &str) -> Result<Vec<u8>> {
    STANDARD
        .decode(data)
        .map_err(|e| LofError::Invalid(format!("bad base64: {e}")))
}

pub fn encode_image_bytes(bytes: &[u8]) -> Result<ImagePayload> {
    let media_type = MediaType::sniff(bytes)
        .ok_or_else(|| LofError::InvalidImage("not a PNG or JPEG file".into()))?;
    Ok(ImagePayload {
        media_type,
        data: encode_bytes(bytes),
    })
}

pub fn encode_image(path: &Path) -> Result<ImagePayload> {
    let bytes = std::fs::read(path).io_context(|| format!("reading {}", path.display()))?;
    encode_image_bytes(&bytes).map_err(|e| match e {
        LofError::InvalidImage(msg) => LofError::InvalidImage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base64_length_law() {
        assert_eq!(encode_bytes(&[0xFF, 0xD8, 0xFF]).len(), 4);
        let four = encode_bytes(&[0xFF, 0xD8, 0xFF, 0xE0]);
        assert_eq!(four.len(), 8);
        // One leftover byte takes two pad characters.
        assert!(four.ends_with("=="));
        let five = encode_bytes(&[1, 2, 3, 4, 5]);
        assert!(five.ends_with('=') && !five.ends_with("=="));
    }

    #[test]
    fn sniffing() {
        let jpeg = encode_image_bytes(&[0xFF, 0xD8, 0xFF]).unwrap();
        assert_eq!(jpeg.media_type, MediaType::Jpeg);
        assert_eq!(jpeg.data, "/9j/");
        assert!(jpeg.data_url().starts_with("data:image/jpeg;base64,"));
        assert!(matches!(
            encode_image_bytes(b"GIF89a"),
            Err(LofError::InvalidImage(_))
        ));
    }

    #[test]
    fn unreadable_file() {
        assert!(encode_image(Path::new("/definitely/not/here.png")).is_err());
    }
}
