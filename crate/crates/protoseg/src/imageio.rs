//! In-memory image types and binary PPM/PGM (netpbm) reading/writing.
//!
//! Images are H×W×3 interleaved `f64` in [0,1]. Masks written as 8-bit
//! PGM scale the soft value by 255; label maps use 16-bit PGM (big-endian
//! samples, per the netpbm spec).

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

/// Interleaved RGB image, components in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuf {
    pub width: usize,
    pub height: usize,
    /// row-major, 3 components per pixel
    pub data: Vec<f64>,
}

impl ImageBuf {
    pub fn new(width: usize, height: usize) -> ImageBuf {
        ImageBuf {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }
}

/// Binary mask over the pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> BinaryMask {
        BinaryMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, y: usize, x: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

fn read_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    // skip whitespace and '#' comments
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated netpbm header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_dim(tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Format(format!("bad {what} '{tok}' in netpbm header")))
}

struct PnmHeader {
    magic: String,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> Result<PnmHeader> {
    let mut pos = 0;
    let magic = read_token(bytes, &mut pos)?;
    let width = parse_dim(&read_token(bytes, &mut pos)?, "width")?;
    let height = parse_dim(&read_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_dim(&read_token(bytes, &mut pos)?, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("netpbm image has zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates header and raster
    pos += 1;
    Ok(PnmHeader {
        magic,
        width,
        height,
        maxval,
        data_start: pos,
    })
}

/// Read a binary PPM (P6) into an [`ImageBuf`].
pub fn read_ppm(path: &Path) -> Result<ImageBuf> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let h = parse_pnm_header(&bytes)?;
    if h.magic != "P6" {
        return Err(Error::Format(format!(
            "{}: expected P6 magic, got {}",
            path.display(),
            h.magic
        )));
    }
    let bytes_per = if h.maxval > 255 { 2 } else { 1 };
    let need = h.width * h.height * 3 * bytes_per;
    let raster = &bytes[h.data_start.min(bytes.len())..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "{}: raster truncated ({} of {need} bytes)",
            path.display(),
            raster.len()
        )));
    }
    let mut img = ImageBuf::new(h.width, h.height);
    for i in 0..h.width * h.height * 3 {
        let v = if bytes_per == 1 {
            raster[i] as f64
        } else {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as f64
        };
        img.data[i] = v / h.maxval as f64;
    }
    Ok(img)
}

/// Write a binary PPM (P6, maxval 255).
pub fn write_ppm(path: &Path, img: &ImageBuf) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write!(f, "P6\n{} {}\n255\n", img.width, img.height)?;
    let raster: Vec<u8> = img
        .data
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    f.write_all(&raster)?;
    Ok(())
}

/// Grayscale image read from a PGM, values scaled to [0,1].
pub struct GrayBuf {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// Read a binary PGM (P5), 8- or 16-bit.
pub fn read_pgm(path: &Path) -> Result<GrayBuf> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let h = parse_pnm_header(&bytes)?;
    if h.magic != "P5" {
        return Err(Error::Format(format!(
            "{}: expected P5 magic, got {}",
            path.display(),
            h.magic
        )));
    }
    let bytes_per = if h.maxval > 255 { 2 } else { 1 };
    let need = h.width * h.height * bytes_per;
    let raster = &bytes[h.data_start.min(bytes.len())..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "{}: raster truncated ({} of {need} bytes)",
            path.display(),
            raster.len()
        )));
    }
    let mut data = Vec::with_capacity(h.width * h.height);
    for i in 0..h.width * h.height {
        let v = if bytes_per == 1 {
            raster[i] as f64
        } else {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as f64
        };
        data.push(v / h.maxval as f64);
    }
    Ok(GrayBuf {
        width: h.width,
        height: h.height,
        data,
    })
}

/// Write grayscale values in [0,1] as an 8-bit binary PGM.
pub fn write_pgm8(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::Dimension(format!(
            "pgm payload {} != {width}x{height}",
            values.len()
        )));
    }
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    let raster: Vec<u8> = values
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    f.write_all(&raster)?;
    Ok(())
}

/// Write raw 16-bit samples as a binary PGM (maxval 65535, big-endian).
pub fn write_pgm16(path: &Path, width: usize, height: usize, values: &[u16]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::Dimension(format!(
            "pgm payload {} != {width}x{height}",
            values.len()
        )));
    }
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n65535\n")?;
    let mut raster = Vec::with_capacity(values.len() * 2);
    for &v in values {
        raster.extend_from_slice(&v.to_be_bytes());
    }
    f.write_all(&raster)?;
    Ok(())
}

/// Read a PGM as a binary mask (values above 0.5 are foreground).
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let g = read_pgm(path)?;
    Ok(BinaryMask {
        width: g.width,
        height: g.height,
        data: g.data.iter().map(|&v| v > 0.5).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.ppm");
        let mut img = ImageBuf::new(3, 2);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = (i as f64 / 18.0 * 255.0).round() / 255.0;
        }
        write_ppm(&p, &img).unwrap();
        let back = read_ppm(&p).unwrap();
        assert_eq!(back.width, 3);
        assert_eq!(back.height, 2);
        for (a, b) in img.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn pgm16_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.pgm");
        let vals: Vec<u16> = vec![0, 1, 2, 700, 65535, 3];
        write_pgm16(&p, 3, 2, &vals).unwrap();
        let back = read_pgm(&p).unwrap();
        for (i, &v) in vals.iter().enumerate() {
            assert!((back.data[i] - v as f64 / 65535.0).abs() < 1e-9);
        }
    }

    #[test]
    fn truncated_ppm_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.ppm");
        std::fs::write(&p, b"P6\n4 4\n255\nshort").unwrap();
        match read_ppm(&p) {
            Err(Error::Format(m)) => assert!(m.contains("truncated")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.ppm");
        std::fs::write(&p, b"P5\n1 1\n255\nx").unwrap();
        assert!(matches!(read_ppm(&p), Err(Error::Format(_))));
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.pgm");
        std::fs::write(&p, b"P5\n# a comment\n2 1\n255\n\x00\xff").unwrap();
        let g = read_pgm(&p).unwrap();
        assert_eq!(g.width, 2);
        assert!((g.data[1] - 1.0).abs() < 1e-9);
    }
}
