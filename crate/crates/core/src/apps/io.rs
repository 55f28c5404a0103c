//! File formats for benchmark inputs and outputs.
//!
//! * frames: concatenated raw 8-bit grayscale frames, or binary PGM (P5)
//! * samples: little-endian f32 pairs, interleaved re, im
//! * taps: text, one branch per line, 10 `re,im` pairs
//! * schedule: text, one entry per line, either `k` (first k branches) or
//!   `k: i1,...,ik` with 1-based branch indices

use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex;
use thiserror::Error;

use super::dpd::{DpdConfigToken, DpdError, DpdTaps, BRANCHES, TAPS};
use super::motion::Frame;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Frames(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sample file length {0} is not a multiple of 8 bytes")]
    Samples(usize),
}

fn io_err(path: &Path, source: io::Error) -> FormatError {
    FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

pub fn split_frames(bytes: &[u8], width: usize, height: usize) -> Result<Vec<Frame>, FormatError> {
    let size = width * height;
    if size == 0 || !bytes.len().is_multiple_of(size) {
        return Err(FormatError::Frames(format!(
            "{} bytes is not a whole number of {width}x{height} frames",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks(size)
        .map(|c| Frame {
            width,
            height,
            pixels: c.to_vec(),
        })
        .collect())
}

/// Reads raw frames, or PGM frames when the file starts with `P5`.
pub fn read_frames(path: &Path, width: usize, height: usize) -> Result<Vec<Frame>, FormatError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(b"P5") {
        return parse_pgm(&bytes);
    }
    split_frames(&bytes, width, height)
}

pub fn write_frames(path: &Path, frames: &[Frame]) -> Result<(), FormatError> {
    let bytes: Vec<u8> = frames
        .iter()
        .flat_map(|f| f.pixels.iter().copied())
        .collect();
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Parses one or more concatenated binary PGM images with maxval ≤ 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<Vec<Frame>, FormatError> {
    let mut frames = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        if bytes[pos].is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(FormatError::Frames("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(FormatError::Frames(format!(
                "unsupported PGM magic {}",
                fields[0]
            )));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| FormatError::Frames(format!("bad PGM header field {s:?}")))
        };
        let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(FormatError::Frames(format!(
                "PGM maxval {maxval} not supported"
            )));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let end = pos + width * height;
        if end > bytes.len() {
            return Err(FormatError::Frames("truncated PGM raster".into()));
        }
        frames.push(Frame {
            width,
            height,
            pixels: bytes[pos..end].to_vec(),
        });
        pos = end;
    }
    Ok(frames)
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<Complex<f32>>, FormatError> {
    if !bytes.len().is_multiple_of(8) {
        return Err(FormatError::Samples(bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex::new(re, im)
        })
        .collect())
}

pub fn encode_samples(samples: &[Complex<f32>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

pub fn read_samples(path: &Path) -> Result<Vec<Complex<f32>>, FormatError> {
    decode_samples(&fs::read(path).map_err(|e| io_err(path, e))?)
}

pub fn write_samples(path: &Path, samples: &[Complex<f32>]) -> Result<(), FormatError> {
    fs::write(path, encode_samples(samples)).map_err(|e| io_err(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_taps(text: &str) -> Result<DpdTaps<f32>, FormatError> {
    let mut taps = DpdTaps::identity();
    let mut count = 0;
    for (line, content) in content_lines(text) {
        if count == BRANCHES {
            return Err(parse_err(line, format!("more than {BRANCHES} branches")));
        }
        let pairs: Vec<&str> = content.split_whitespace().collect();
        if pairs.len() != TAPS {
            return Err(parse_err(
                line,
                format!("expected {TAPS} taps, found {}", pairs.len()),
            ));
        }
        for (k, pair) in pairs.iter().enumerate() {
            let (re, im) = pair
                .split_once(',')
                .ok_or_else(|| parse_err(line, format!("tap {pair:?} is not re,im")))?;
            let v = |s: &str| {
                s.trim()
                    .parse::<f32>()
                    .map_err(|_| parse_err(line, format!("bad number {s:?}")))
            };
            taps.branches[count][k] = Complex::new(v(re)?, v(im)?);
        }
        count += 1;
    }
    if count != BRANCHES {
        return Err(parse_err(
            0,
            format!("expected {BRANCHES} branches, found {count}"),
        ));
    }
    Ok(taps)
}

pub fn format_taps(taps: &DpdTaps<f32>) -> String {
    let mut out = String::new();
    for branch in &taps.branches {
        let line: Vec<String> = branch
            .iter()
            .map(|c| format!("{:e},{:e}", c.re, c.im))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn schedule_entry(line: usize, content: &str) -> Result<DpdConfigToken, FormatError> {
    let wrap = |e: DpdError| parse_err(line, e.to_string());
    let count = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| parse_err(line, format!("bad branch count {s:?}")))
    };
    match content.split_once(':') {
        None => DpdConfigToken::first(count(content)?).map_err(wrap),
        Some((k, list)) => {
            let k = count(k)?;
            let mut indices = Vec::new();
            for item in list.split(',') {
                let i = item
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(line, format!("bad branch index {item:?}")))?;
                if !(1..=BRANCHES).contains(&i) {
                    return Err(wrap(DpdError::BranchIndex(i)));
                }
                indices.push(i - 1);
            }
            let token = DpdConfigToken::from_indices(indices.iter().copied()).map_err(wrap)?;
            if token.active_count() != k || indices.len() != k {
                return Err(wrap(DpdError::SetSize {
                    declared: k,
                    listed: indices.len(),
                }));
            }
            Ok(token)
        }
    }
}

pub fn parse_schedule(text: &str) -> Result<Vec<DpdConfigToken>, FormatError> {
    let schedule = content_lines(text)
        .map(|(line, content)| schedule_entry(line, content))
        .collect::<Result<Vec<_>, _>>()?;
    if schedule.is_empty() {
        return Err(parse_err(0, DpdError::EmptySchedule.to_string()));
    }
    Ok(schedule)
}

pub fn format_schedule(schedule: &[DpdConfigToken]) -> String {
    let mut out = String::new();
    for t in schedule {
        let list: Vec<String> = t.active().map(|b| (b + 1).to_string()).collect();
        out.push_str(&format!("{}: {}\n", t.active_count(), list.join(",")));
    }
    out
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}
