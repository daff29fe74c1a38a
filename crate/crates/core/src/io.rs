//! File formats: binary PGM input/output, the `STF1` raw raster, an HSV
//! orientation rendering as binary PPM, and CSV tables.
//!
//! # `STF1` layout (all integers little-endian)
//!
//! | bytes          | content                                         |
//! |----------------|-------------------------------------------------|
//! | 4              | magic `STF1`                                    |
//! | u32            | dtype code, `1` = float32                       |
//! | u32            | number of axes `D` (1..=16)                     |
//! | u64 × D        | extent of each axis, axis 0 fastest             |
//! | u32            | number of planes `P ≥ 1`                        |
//! | u32            | tag length `L`                                  |
//! | L              | UTF-8 tag                                       |
//! | 4·P·Πdims      | float32 LE samples, plane after plane           |
//!
//! Samples are computed in f64 and rounded to f32 only here.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ScalarField, Shape};
use crate::filterbank::ResponseField;
use crate::linalg::packed_len;
use crate::tensor::{Construction, TensorField};

pub const RAW_MAGIC: &[u8; 4] = b"STF1";
pub const RAW_FORMAT_VERSION: u32 = 1;
pub const DTYPE_F32: u32 = 1;
const MAX_AXES: u32 = 16;

/// Parsed `STF1` header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterHeader {
    pub dims: Vec<usize>,
    pub planes: usize,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawRaster {
    pub header: RasterHeader,
    /// `planes[p]` holds `Πdims` samples.
    pub planes: Vec<Vec<f32>>,
}

impl RawRaster {
    pub fn from_f64(dims: &[usize], planes: &[Vec<f64>], tag: impl Into<String>) -> Result<Self> {
        let n: usize = Shape::new(dims)?.len();
        if planes.is_empty() {
            return Err(Error::param("raster needs at least one plane"));
        }
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::DimMismatch("raster plane does not match dims".into()));
        }
        Ok(RawRaster {
            header: RasterHeader {
                dims: dims.to_vec(),
                planes: planes.len(),
                tag: tag.into(),
            },
            planes: planes.iter().map(|p| p.iter().map(|&v| v as f32).collect()).collect(),
        })
    }

    pub fn planes_f64(&self) -> Vec<Vec<f64>> {
        self.planes
            .iter()
            .map(|p| p.iter().map(|&v| v as f64).collect())
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let h = &self.header;
        let n: usize = h.dims.iter().product();
        let mut out = Vec::with_capacity(32 + 8 * h.dims.len() + h.tag.len() + 4 * n * h.planes);
        out.extend_from_slice(RAW_MAGIC);
        out.extend_from_slice(&DTYPE_F32.to_le_bytes());
        out.extend_from_slice(&(h.dims.len() as u32).to_le_bytes());
        for &d in &h.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&(h.planes as u32).to_le_bytes());
        out.extend_from_slice(&(h.tag.len() as u32).to_le_bytes());
        out.extend_from_slice(h.tag.as_bytes());
        for p in &self.planes {
            for v in p {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != RAW_MAGIC {
            return Err(Error::parse(0, "bad magic, expected STF1"));
        }
        let dtype = r.u32()?;
        if dtype != DTYPE_F32 {
            return Err(Error::parse(4, format!("unsupported dtype code {dtype}")));
        }
        let axes_at = r.pos;
        let axes = r.u32()?;
        if axes == 0 || axes > MAX_AXES {
            return Err(Error::parse(
                axes_at,
                format!("axis count {axes} outside 1..={MAX_AXES}"),
            ));
        }
        let mut dims = Vec::with_capacity(axes as usize);
        for _ in 0..axes {
            let at = r.pos;
            let d = r.u64()?;
            let d = usize::try_from(d)
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| Error::parse(at, format!("invalid extent {d}")))?;
            dims.push(d);
        }
        let planes_at = r.pos;
        let planes = r.u32()? as usize;
        if planes == 0 {
            return Err(Error::parse(planes_at, "plane count must be >= 1"));
        }
        let tag_at = r.pos;
        let tag_len = r.u32()? as usize;
        let tag = std::str::from_utf8(r.take(tag_len)?)
            .map_err(|_| Error::parse(tag_at + 4, "tag is not UTF-8"))?
            .to_string();

        let payload_at = r.pos;
        let samples = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::parse(axes_at, "dims product overflows"))?;
        let expected = samples
            .checked_mul(planes)
            .and_then(|v| v.checked_mul(4))
            .ok_or_else(|| Error::parse(planes_at, "payload size overflows"))?;
        let remaining = bytes.len() - payload_at;
        if remaining != expected {
            return Err(Error::parse(
                payload_at,
                format!("payload is {remaining} bytes, header implies {expected}"),
            ));
        }
        let payload = &bytes[payload_at..];
        let planes = payload
            .chunks_exact(4 * samples)
            .map(|plane| {
                plane
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect()
            })
            .collect::<Vec<Vec<f32>>>();
        Ok(RawRaster {
            header: RasterHeader {
                dims,
                planes: planes.len(),
                tag,
            },
            planes,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::parse(self.pos, format!("truncated: need {n} more bytes")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_le_bytes(a))
    }
}

pub const SCALAR_TAG: &str = "scalar";

pub fn scalar_to_raw(f: &ScalarField) -> Result<RawRaster> {
    RawRaster::from_f64(f.dims(), &[f.values().to_vec()], SCALAR_TAG)
}

pub fn scalar_from_raw(raw: &RawRaster) -> Result<ScalarField> {
    if raw.header.planes != 1 {
        return Err(Error::param(format!(
            "expected a single-plane image, found {} planes (tag '{}')",
            raw.header.planes, raw.header.tag
        )));
    }
    ScalarField::new(&raw.header.dims, raw.planes_f64().remove(0), true)
}

/// Tensor fields are tagged with their construction name.
pub fn tensor_to_raw(t: &TensorField) -> Result<RawRaster> {
    RawRaster::from_f64(t.shape().dims(), t.planes(), t.construction().as_str())
}

pub fn tensor_from_raw(raw: &RawRaster) -> Result<TensorField> {
    let construction: Construction = raw.header.tag.parse()?;
    let planes = raw.header.planes;
    let dim = (2..=16)
        .find(|&n| packed_len(n) == planes)
        .ok_or_else(|| Error::param(format!("{planes} planes is not a packed symmetric tensor")))?;
    TensorField::new(Shape::new(&raw.header.dims)?, dim, raw.planes_f64(), construction)
}

pub fn responses_to_raw(q: &[ResponseField], tag: &str) -> Result<RawRaster> {
    let first = q.first().ok_or_else(|| Error::param("no response fields"))?;
    let planes: Vec<Vec<f64>> = q.iter().map(|r| r.values().to_vec()).collect();
    RawRaster::from_f64(first.shape().dims(), &planes, tag)
}

pub fn responses_from_raw(raw: &RawRaster) -> Result<Vec<ResponseField>> {
    let shape = Shape::new(&raw.header.dims)?;
    raw.planes_f64()
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            // f32 rounding cannot make a nonnegative value negative
            ResponseField::new(shape.clone(), p, format!("q{}", k + 1))
        })
        .collect()
}

/// Grey image as stored in a PGM file, samples scaled to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub values: Vec<f64>,
}

impl PgmImage {
    pub fn into_field(self) -> Result<ScalarField> {
        ScalarField::new(&[self.width, self.height], self.values, false)
    }
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => *pos += 1,
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            _ => break,
        }
    }
}

fn header_int(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse(start, format!("expected {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(start, format!("{what} out of range")))
}

/// Decodes a binary (P5) PGM, 8- or 16-bit.
pub fn decode_pgm(bytes: &[u8]) -> Result<PgmImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::parse(0, "not a binary PGM (missing P5 magic)"));
    }
    let mut pos = 2;
    let width = header_int(bytes, &mut pos, "width")? as usize;
    let height = header_int(bytes, &mut pos, "height")? as usize;
    let maxval_at = pos;
    let maxval = header_int(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(maxval_at, format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::parse(pos, "expected whitespace after maxval")),
    }
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bps))
        .ok_or_else(|| Error::parse(maxval_at, "image size overflows"))?;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(Error::parse(
            bytes.len(),
            format!("truncated payload: {} of {need} bytes", payload.len()),
        ));
    }
    let scale = 1.0 / maxval as f64;
    let values = if bps == 1 {
        payload[..need].iter().map(|&b| b as f64 * scale).collect()
    } else {
        payload[..need]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 * scale)
            .collect()
    };
    Ok(PgmImage {
        width,
        height,
        maxval: maxval as u16,
        values,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PgmImage> {
    decode_pgm(&fs::read(path)?)
}

/// Encodes a 2-D field as P5, clamping values to `[0, 1]`.
pub fn encode_pgm(f: &ScalarField, maxval: u16) -> Result<Vec<u8>> {
    if f.ndim() != 2 {
        return Err(Error::param("PGM output needs a 2-D field"));
    }
    if maxval == 0 {
        return Err(Error::param("maxval must be >= 1"));
    }
    let (w, h) = (f.dims()[0], f.dims()[1]);
    let mut out = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
    let m = maxval as f64;
    for &v in f.values() {
        let q = (v.clamp(0.0, 1.0) * m).round() as u16;
        if maxval < 256 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    Ok(out)
}

pub fn write_pgm(f: &ScalarField, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
    fs::write(path, encode_pgm(f, maxval)?)?;
    Ok(())
}

/// Standard HSV → RGB with `h` in degrees, `s, v ∈ [0, 1]`.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let byte = |u: f64| ((u + m).clamp(0.0, 1.0) * 255.0).round() as u8;
    [byte(r), byte(g), byte(b)]
}

/// Orientation colour: hue is twice the angle, value is the certainty.
pub fn orientation_color(angle: f64, certainty: f64) -> [u8; 3] {
    let hue = (2.0 * angle).rem_euclid(2.0 * PI).to_degrees();
    hsv_to_rgb(hue, 1.0, certainty.clamp(0.0, 1.0))
}

/// Renders angles and certainties of a `width × height` grid as P6.
pub fn encode_orientation_ppm(angles: &[f64], certainty: &[f64], dims: &[usize]) -> Result<Vec<u8>> {
    if dims.len() != 2 {
        return Err(Error::param("orientation rendering needs a 2-D grid"));
    }
    let (w, h) = (dims[0], dims[1]);
    if angles.len() != w * h || certainty.len() != w * h {
        return Err(Error::DimMismatch("angle/certainty size does not match grid".into()));
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for (&a, &c) in angles.iter().zip(certainty) {
        out.extend_from_slice(&orientation_color(a, c));
    }
    Ok(out)
}

pub fn write_orientation_ppm(angles: &[f64], certainty: &[f64], dims: &[usize], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_orientation_ppm(angles, certainty, dims)?)?;
    Ok(())
}

/// Writes a header row and data rows.
pub fn write_csv<W: Write>(writer: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_2x2_scaling() {
        let bytes = b"P5\n2 2\n255\n\x00\x80\xff\x40";
        let img = decode_pgm(bytes).unwrap();
        let want = [0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0];
        for (a, b) in img.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((img.values[1] - 0.502).abs() < 1e-3);
        assert!((img.values[3] - 0.251).abs() < 1e-3);
    }

    #[test]
    fn pgm_header_errors() {
        assert!(matches!(decode_pgm(b"P5 0 0 255\n"), Err(Error::Parse { .. })));
        assert!(decode_pgm(b"P5 0 0").is_err());
        assert!(decode_pgm(b"P2 2 2 255\n0000").is_err());
        assert!(decode_pgm(b"P5 2 2 70000\n").is_err());
        match decode_pgm(b"P5 2 2 255\n\x00\x01") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 13),
            other => panic!("{other:?}"),
        }
        let with_comment = b"P5\n# made by hand\n2 1\n255\n\x10\x20";
        assert_eq!(decode_pgm(with_comment).unwrap().width, 2);
    }

    #[test]
    fn pgm_16_bit() {
        let f = ScalarField::from_fn(&[4, 4], false, |c| (c[0] + 4 * c[1]) as f64 / 15.0).unwrap();
        let img = decode_pgm(&encode_pgm(&f, 65535).unwrap()).unwrap();
        assert_eq!(img.maxval, 65535);
        for (a, b) in img.values.iter().zip(f.values()) {
            assert!((a - b).abs() <= 0.5 / 65535.0);
        }
    }

    #[test]
    fn raw_magic_and_length_checks() {
        let f = ScalarField::constant(&[4, 4], 1.5).unwrap();
        let mut bytes = scalar_to_raw(&f).unwrap().encode();
        assert_eq!(&bytes[..4], RAW_MAGIC);
        let back = scalar_from_raw(&RawRaster::decode(&bytes).unwrap()).unwrap();
        assert_eq!(back.values(), f.values());

        bytes.push(0);
        assert!(RawRaster::decode(&bytes).is_err());
        bytes.pop();
        bytes[0] = b'X';
        assert!(matches!(RawRaster::decode(&bytes), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn raw_overflow_guard() {
        let mut b = Vec::new();
        b.extend_from_slice(RAW_MAGIC);
        b.extend_from_slice(&DTYPE_F32.to_le_bytes());
        b.extend_from_slice(&3u32.to_le_bytes());
        for _ in 0..3 {
            b.extend_from_slice(&u64::MAX.to_le_bytes());
        }
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&0u32.to_le_bytes());
        let err = RawRaster::decode(&b).unwrap_err().to_string();
        assert!(err.contains("overflow") || err.contains("extent"), "{err}");

        let mut b = Vec::new();
        b.extend_from_slice(RAW_MAGIC);
        b.extend_from_slice(&DTYPE_F32.to_le_bytes());
        b.extend_from_slice(&2u32.to_le_bytes());
        b.extend_from_slice(&(1u64 << 40).to_le_bytes());
        b.extend_from_slice(&(1u64 << 40).to_le_bytes());
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&0u32.to_le_bytes());
        assert!(RawRaster::decode(&b).unwrap_err().to_string().contains("overflow"));
    }

    #[test]
    fn orientation_colours() {
        assert_eq!(orientation_color(1.0, 0.0), [0, 0, 0]);
        assert_eq!(orientation_color(0.0, 1.0), [255, 0, 0]);
        assert_eq!(orientation_color(PI / 2.0, 1.0), orientation_color(-PI / 2.0, 1.0));
        assert_eq!(orientation_color(PI / 6.0, 1.0), [255, 255, 0]);
        let ppm = encode_orientation_ppm(&[0.0; 16], &[0.0; 16], &[4, 4]).unwrap();
        assert!(ppm.starts_with(b"P6\n4 4\n255\n"));
        assert!(ppm[11..].iter().all(|&b| b == 0));
        assert!(encode_orientation_ppm(&[0.0; 8], &[0.0; 8], &[2, 2, 2]).is_err());
    }
}
