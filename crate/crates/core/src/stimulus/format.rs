//! The `.rdk` movie container.
//!
//! Byte layout (all integers little-endian):
//!
//! | offset | size | field                               |
//! |--------|------|-------------------------------------|
//! | 0      | 8    | magic `RDKMOVIE`                    |
//! | 8      | 4    | format version (1)                  |
//! | 12     | 4    | dtype code (1 = u8)                 |
//! | 16     | 4    | frame width in px                   |
//! | 20     | 4    | frame height in px                  |
//! | 24     | 4    | frame count                         |
//! | 28     | 4    | length P of the parameter block     |
//! | 32     | P    | generation parameters as JSON       |
//! | 32+P   | W*H*F| pixels, frame-major, rows top-down  |
//!
//! The parameter block makes files self-describing, so a loaded stimulus
//! round-trips the full generation record, not just the pixels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::stimulus::{RdkParams, Stimulus};

pub const RDK_MAGIC: &[u8; 8] = b"RDKMOVIE";
pub const RDK_VERSION: u32 = 1;
const DTYPE_U8: u32 = 1;

/// Serializes a stimulus to the `.rdk` byte layout.
pub fn encode(stimulus: &Stimulus) -> Vec<u8> {
    let params_json =
        serde_json::to_vec(&stimulus.params).expect("RdkParams serialization cannot fail");
    let mut out = Vec::with_capacity(32 + params_json.len() + stimulus.data.len());
    out.extend_from_slice(RDK_MAGIC);
    out.extend_from_slice(&RDK_VERSION.to_le_bytes());
    out.extend_from_slice(&DTYPE_U8.to_le_bytes());
    out.extend_from_slice(&stimulus.params.frame_size.to_le_bytes());
    out.extend_from_slice(&stimulus.params.frame_size.to_le_bytes());
    out.extend_from_slice(&stimulus.params.n_frames.to_le_bytes());
    out.extend_from_slice(&(params_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&params_json);
    out.extend_from_slice(&stimulus.data);
    out
}

/// Parses the `.rdk` byte layout. `origin` is used in error messages only.
pub fn decode(bytes: &[u8], origin: &str) -> Result<Stimulus> {
    let fail = |detail: String| Error::StimulusFormat(format!("{origin}: {detail}"));
    if bytes.len() < 32 {
        return Err(fail(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[0..8] != RDK_MAGIC {
        return Err(fail("bad magic, not an .rdk file".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != RDK_VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    if u32_at(12) != DTYPE_U8 {
        return Err(fail(format!("unsupported dtype code {}", u32_at(12))));
    }
    let (width, height, n_frames) = (u32_at(16), u32_at(20), u32_at(24));
    let params_len = u32_at(28) as usize;
    if bytes.len() < 32 + params_len {
        return Err(fail("truncated parameter block".into()));
    }
    let params: RdkParams = serde_json::from_slice(&bytes[32..32 + params_len])
        .map_err(|e| fail(format!("parameter block: {e}")))?;
    if params.frame_size != width || params.frame_size != height || params.n_frames != n_frames {
        return Err(fail(format!(
            "header dims {width}x{height}x{n_frames} disagree with parameters \
             {0}x{0}x{1}",
            params.frame_size, params.n_frames
        )));
    }
    let expected = width as usize * height as usize * n_frames as usize;
    let payload = &bytes[32 + params_len..];
    if payload.len() != expected {
        return Err(fail(format!(
            "payload holds {} bytes, dims require {expected}",
            payload.len()
        )));
    }
    Ok(Stimulus {
        params,
        data: payload.to_vec(),
    })
}

/// Writes a stimulus to `path`.
pub fn save_stimulus(stimulus: &Stimulus, path: &Path) -> Result<()> {
    std::fs::write(path, encode(stimulus)).map_err(|e| Error::io(path, e))
}

/// Reads a stimulus from `path`.
pub fn load_stimulus(path: &Path) -> Result<Stimulus> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::{generate_stimulus, Direction, RdkParams};

    fn tiny_stimulus() -> Stimulus {
        let mut p = RdkParams::new(0.6, Direction::Left, 42);
        p.n_frames = 8;
        generate_stimulus(&p).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let s = tiny_stimulus();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("movie.rdk");
        save_stimulus(&s, &path).unwrap();
        let loaded = load_stimulus(&path).unwrap();
        assert_eq!(s, loaded);
    }

    #[test]
    fn encode_is_deterministic() {
        let s = tiny_stimulus();
        assert_eq!(encode(&s), encode(&s));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = encode(&tiny_stimulus());
        let cut = &bytes[..bytes.len() - 100];
        let err = decode(cut, "test").unwrap_err();
        assert!(matches!(err, Error::StimulusFormat(_)), "{err}");
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = encode(&tiny_stimulus());
        bytes[0] = b'X';
        assert!(matches!(
            decode(&bytes, "test"),
            Err(Error::StimulusFormat(_))
        ));
    }

    #[test]
    fn header_payload_mismatch_is_rejected() {
        let mut bytes = encode(&tiny_stimulus());
        // Corrupt the frame-count field; payload length no longer matches.
        bytes[24..28].copy_from_slice(&100u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes, "test"),
            Err(Error::StimulusFormat(_))
        ));
    }
}
