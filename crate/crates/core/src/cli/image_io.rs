//! 8-bit grayscale PGM (read/write) and PNG (write).

use std::fs;
use std::path::Path;

use crate::grid::{GridSpec, ScalarField};

use super::CliError;

fn image_error(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Image {
        path: path.to_path_buf(),
        reason: msg.into(),
    }
}

/// Header tokens and the offset of the first raster byte.
fn header_tokens(data: &[u8], count: usize) -> Option<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < count {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        tokens.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
    }
    Some((tokens, pos))
}

/// Decodes a binary (`P5`) or ASCII (`P2`) PGM with `maxval ≤ 255`.
/// Values are rescaled to `[0, 255]`. Row `j` of the file is grid row `j`.
pub fn decode_pgm(data: &[u8], path: &Path) -> Result<ScalarField, CliError> {
    let (tokens, end) =
        header_tokens(data, 4).ok_or_else(|| image_error(path, "truncated PGM header"))?;
    let magic = tokens[0].as_str();
    if magic != "P5" && magic != "P2" {
        return Err(image_error(
            path,
            format!("unsupported magic `{magic}` (expected P5 or P2)"),
        ));
    }
    let dim = |s: &str, what: &str| -> Result<usize, CliError> {
        s.parse()
            .map_err(|_| image_error(path, format!("bad {what} `{s}`")))
    };
    let width = dim(&tokens[1], "width")?;
    let height = dim(&tokens[2], "height")?;
    let maxval = dim(&tokens[3], "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(image_error(
            path,
            format!("maxval {maxval} outside 1..=255"),
        ));
    }
    let spec = GridSpec::new(width, height).map_err(|e| image_error(path, e.to_string()))?;
    let count = width * height;
    let raw: Vec<u32> = if magic == "P5" {
        // exactly one whitespace byte separates the header from the raster
        let body = data.get(end + 1..).unwrap_or(&[]);
        if body.len() < count {
            return Err(image_error(
                path,
                format!("expected {count} pixels, found {}", body.len()),
            ));
        }
        body[..count].iter().map(|&b| b as u32).collect()
    } else {
        let text = String::from_utf8_lossy(&data[end..]);
        let vals: Result<Vec<u32>, _> = text
            .split_ascii_whitespace()
            .take(count)
            .map(str::parse)
            .collect();
        let vals = vals.map_err(|_| image_error(path, "non-numeric pixel"))?;
        if vals.len() < count {
            return Err(image_error(
                path,
                format!("expected {count} pixels, found {}", vals.len()),
            ));
        }
        vals
    };
    if let Some(&v) = raw.iter().find(|&&v| v as usize > maxval) {
        return Err(image_error(
            path,
            format!("pixel {v} exceeds maxval {maxval}"),
        ));
    }
    let scale = 255.0 / maxval as f64;
    let values = raw.into_iter().map(|v| v as f64 * scale).collect();
    ScalarField::from_vec(spec, values).map_err(|e| image_error(path, e.to_string()))
}

pub fn read_pgm(path: &Path) -> Result<ScalarField, CliError> {
    let data = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_pgm(&data, path)
}

/// Rounds to the nearest integer in `[0, 255]`.
pub fn to_bytes(v: &ScalarField) -> Vec<u8> {
    v.values()
        .iter()
        .map(|&x| {
            if x.is_nan() {
                0
            } else {
                x.round().clamp(0.0, 255.0) as u8
            }
        })
        .collect()
}

pub fn encode_pgm(v: &ScalarField) -> Vec<u8> {
    let s = v.spec();
    let mut out = format!("P5\n{} {}\n255\n", s.m(), s.n()).into_bytes();
    out.extend(to_bytes(v));
    out
}

/// Encodes an 8-bit grayscale PNG.
pub fn encode_png(v: &ScalarField) -> Result<Vec<u8>, png::EncodingError> {
    let s = v.spec();
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, s.m() as u32, s.n() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&to_bytes(v))?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, v: &ScalarField) -> Result<(), CliError> {
    fs::write(path, encode_pgm(v)).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_png(path: &Path, v: &ScalarField) -> Result<(), CliError> {
    let bytes = encode_png(v).map_err(|e| image_error(path, e.to_string()))?;
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField {
        let s = GridSpec::new(5, 3).unwrap();
        ScalarField::from_index_fn(s, |i, j| ((i * 37 + j * 91) % 256) as f64)
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let v = sample();
        let bytes = encode_pgm(&v);
        let back = decode_pgm(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, v);
        assert_eq!(encode_pgm(&back), bytes);
    }

    #[test]
    fn ascii_with_comments_and_maxval() {
        let text = b"P2\n# a comment\n3 3\n# another\n15\n0 15 0\n15 0 15\n0 0 0\n";
        let v = decode_pgm(text, Path::new("mem")).unwrap();
        assert_eq!(v.get(1, 0), 255.0);
        assert_eq!(v.get(0, 1), 255.0);
        assert_eq!(v.get(2, 2), 0.0);
    }

    #[test]
    fn malformed_inputs_rejected() {
        let p = Path::new("mem");
        assert!(decode_pgm(b"P6\n3 3\n255\n", p).is_err());
        assert!(decode_pgm(b"P5\n3 3\n255\n\x00\x01", p).is_err());
        assert!(decode_pgm(b"P5\n3 3\n65535\n", p).is_err());
        assert!(decode_pgm(b"P2\n3 3\n10\n0 1 2 3 4 5 6 7 11\n", p).is_err());
        assert!(decode_pgm(b"P5\n3", p).is_err());
    }

    #[test]
    fn png_has_signature() {
        let bytes = encode_png(&sample()).unwrap();
        assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
    }

    #[test]
    fn bytes_are_rounded_and_clamped() {
        let s = GridSpec::new(3, 3).unwrap();
        let v = ScalarField::from_index_fn(s, |i, _| [-4.0, 127.5, 300.0][i]);
        assert_eq!(&to_bytes(&v)[..3], &[0, 128, 255]);
    }
}
