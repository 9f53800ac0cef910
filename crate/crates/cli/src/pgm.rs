//! Binary 8-bit PGM (`P5`) reading and writing.

use std::path::Path;

use tdfusion::Image;

use crate::CliError;

/// `round(255·v)` after clamping to `[0, 1]`.
pub fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode(img: &Image) -> Vec<u8> {
    encode_raw(img.height(), img.width(), 255, img.data().iter().map(|&v| to_byte(v)))
}

/// Label map with `maxval` equal to the largest class index.
pub fn encode_labels(height: usize, width: usize, labels: &[usize], classes: usize) -> Vec<u8> {
    let maxval = classes.saturating_sub(1).max(1);
    encode_raw(height, width, maxval, labels.iter().map(|&l| l as u8))
}

fn encode_raw(height: usize, width: usize, maxval: usize, px: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    out.extend(px);
    out
}

/// Pixel values scaled by `1/maxval` into `[0, 1]`.
pub fn decode(bytes: &[u8]) -> Result<Image, CliError> {
    let bad = |m: &str| CliError::Input(format!("PGM: {m}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("only binary P5 images are supported"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let raster = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
    if raster.len() != width * height {
        return Err(bad(&format!(
            "expected {} pixels, found {}",
            width * height,
            raster.len()
        )));
    }
    let data = raster.iter().map(|&b| b as f64 / maxval as f64).collect();
    Image::new(height, width, data).map_err(|e| bad(&e.to_string()))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<Image, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    decode(&bytes)
}
