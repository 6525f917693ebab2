//! Model files: a one-line header carrying the format version and a SHA-256
//! of the JSON body that follows it.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::ForecastModel;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "sadi-model";

pub fn to_bytes(model: &ForecastModel) -> Result<Vec<u8>> {
    let body = serde_json::to_vec(model)?;
    let digest = hex::encode(Sha256::digest(&body));
    let mut out = format!("{MAGIC} v{FORMAT_VERSION} sha256={digest}\n").into_bytes();
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ForecastModel> {
    // a file cut inside its header has lost the checksum as well
    let nl = bytes.iter().position(|b| *b == b'\n').ok_or(Error::Checksum)?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Format("not a model file".into()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format("missing format version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let expected = parts
        .next()
        .and_then(|c| c.strip_prefix("sha256="))
        .ok_or_else(|| Error::Format("missing checksum".into()))?;
    let body = &bytes[nl + 1..];
    if hex::encode(Sha256::digest(body)) != expected {
        return Err(Error::Checksum);
    }
    serde_json::from_slice(body).map_err(|e| Error::Format(e.to_string()))
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn save_model(model: &ForecastModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &to_bytes(model)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ForecastModel> {
    from_bytes(&std::fs::read(path)?)
}
