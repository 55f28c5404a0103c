//! Video Motion Detection: Gaussian smoothing, frame differencing against the
//! previous frame, thresholding and a 5-pixel median.
//!
//! ```text
//!  source -> gauss ==(cur)==> thres -> med -> sink
//!                  \=(prev, one delay token)=/
//! ```
//!
//! Gauss writes every filtered frame to two channels. The second one starts
//! with an all-zero frame, so Thres always sees the current frame next to the
//! previous one.

use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::model::{
    build_network, Actor, ActorError, ActorSpec, ChannelSpec, ModelError, NetworkGraph, PortSpec,
};
use crate::runtime::{
    bulk_kernel_adapter, run, token_wise, ExecutionConfig, Firing, RunError, RunStats,
};

pub const DEFAULT_WIDTH: usize = 320;
pub const DEFAULT_HEIGHT: usize = 240;
pub const DEFAULT_THRESHOLD: u8 = 32;

/// 1-D binomial weights; the 2-D kernel is their outer product over 256.
const BINOMIAL: [u32; 5] = [1, 4, 6, 4, 1];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MotionError {
    #[error("frame {width}x{height} is smaller than the {need}x{need} window")]
    FrameTooSmall {
        width: usize,
        height: usize,
        need: usize,
    },
    #[error("frame dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("pixel buffer holds {got} bytes, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// 8-bit grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, MotionError> {
        if pixels.len() != width * height {
            return Err(MotionError::BufferSize {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn token_size(&self) -> usize {
        self.width * self.height
    }

    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

fn check_size(width: usize, height: usize, need: usize) -> Result<(), MotionError> {
    if width < need || height < need {
        Err(MotionError::FrameTooSmall {
            width,
            height,
            need,
        })
    } else {
        Ok(())
    }
}

/// 5x5 binomial smoothing. Two-pixel borders on every side are copied.
pub fn gauss5x5_into(
    src: &[u8],
    dst: &mut [u8],
    width: usize,
    height: usize,
) -> Result<(), MotionError> {
    check_size(width, height, 5)?;
    dst.copy_from_slice(src);
    for y in 2..height - 2 {
        for x in 2..width - 2 {
            let mut acc = 0u32;
            for (dy, wy) in BINOMIAL.iter().enumerate() {
                let row = &src[(y + dy - 2) * width + x - 2..][..5];
                let line: u32 = row.iter().zip(BINOMIAL).map(|(&p, wx)| p as u32 * wx).sum();
                acc += line * wy;
            }
            dst[y * width + x] = ((acc + 128) >> 8).min(255) as u8;
        }
    }
    Ok(())
}

pub fn gauss5x5(frame: &Frame) -> Result<Frame, MotionError> {
    let mut out = vec![0; frame.pixels.len()];
    gauss5x5_into(&frame.pixels, &mut out, frame.width, frame.height)?;
    Ok(Frame {
        pixels: out,
        ..*frame
    })
}

/// 255 where the two frames differ by more than `threshold`, else 0.
pub fn thres_diff_into(prev: &[u8], cur: &[u8], dst: &mut [u8], threshold: u8) {
    for ((d, &p), &c) in dst.iter_mut().zip(prev).zip(cur) {
        *d = if p.abs_diff(c) > threshold { 255 } else { 0 };
    }
}

pub fn thres_diff(prev: &Frame, cur: &Frame, threshold: u8) -> Result<Frame, MotionError> {
    if (prev.width, prev.height) != (cur.width, cur.height) {
        return Err(MotionError::DimensionMismatch(
            prev.width,
            prev.height,
            cur.width,
            cur.height,
        ));
    }
    let mut out = vec![0; cur.pixels.len()];
    thres_diff_into(&prev.pixels, &cur.pixels, &mut out, threshold);
    Ok(Frame {
        pixels: out,
        ..*cur
    })
}

fn median_of_5(mut v: [u8; 5]) -> u8 {
    v.sort_unstable();
    v[2]
}

/// Median of each pixel and its four direct neighbours. One-pixel border copied.
pub fn median5_into(
    src: &[u8],
    dst: &mut [u8],
    width: usize,
    height: usize,
) -> Result<(), MotionError> {
    check_size(width, height, 3)?;
    dst.copy_from_slice(src);
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let i = y * width + x;
            dst[i] = median_of_5([
                src[i],
                src[i - width],
                src[i + width],
                src[i - 1],
                src[i + 1],
            ]);
        }
    }
    Ok(())
}

pub fn median5(frame: &Frame) -> Result<Frame, MotionError> {
    let mut out = vec![0; frame.pixels.len()];
    median5_into(&frame.pixels, &mut out, frame.width, frame.height)?;
    Ok(Frame {
        pixels: out,
        ..*frame
    })
}

/// Sequential reference: gauss, difference against the previous filtered
/// frame (all-zero before the first), threshold, median.
pub fn oracle_motion_detection(frames: &[Frame], threshold: u8) -> Result<Vec<Frame>, MotionError> {
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let mut prev = Frame::filled(first.width, first.height, 0);
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        let g = gauss5x5(f)?;
        let t = thres_diff(&prev, &g, threshold)?;
        out.push(median5(&t)?);
        prev = g;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotionParams {
    pub width: usize,
    pub height: usize,
    pub threshold: u8,
    /// Token rate of every channel.
    pub rate: usize,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            threshold: DEFAULT_THRESHOLD,
            rate: 1,
        }
    }
}

impl MotionParams {
    pub fn token_size(&self) -> usize {
        self.width * self.height
    }

    fn check(&self) -> Result<(), MotionError> {
        if self.rate == 0 {
            return Err(MotionError::InvalidParams(
                "token rate must be at least 1".into(),
            ));
        }
        check_size(self.width, self.height, 5)
    }
}

/// Emits `r` frames per firing and stops after the last one.
pub struct FrameSource {
    frames: Vec<Frame>,
    next: usize,
    rate: usize,
}

impl Actor for FrameSource {
    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let out = io.output(0).ok_or("source output inactive")?;
        let size = out.len() / self.rate;
        for chunk in out.chunks_exact_mut(size) {
            let f = self
                .frames
                .get(self.next)
                .ok_or("source ran out of frames")?;
            chunk.copy_from_slice(&f.pixels);
            self.next += 1;
        }
        if self.next + self.rate > self.frames.len() {
            io.request_stop();
        }
        Ok(())
    }
}

/// Frames received by the sink actor.
#[derive(Clone, Default)]
pub struct FrameCollector(Arc<Mutex<Vec<u8>>>);

impl FrameCollector {
    pub fn frames(&self, width: usize, height: usize) -> Vec<Frame> {
        let data = self.0.lock().unwrap_or_else(|e| e.into_inner());
        data.chunks_exact(width * height)
            .map(|p| Frame {
                width,
                height,
                pixels: p.to_vec(),
            })
            .collect()
    }
}

struct FrameSink(FrameCollector);

impl Actor for FrameSink {
    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let data = io.input(0).ok_or("sink input inactive")?;
        self.0
             .0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .extend_from_slice(data);
        Ok(())
    }
}

pub mod ids {
    pub const SOURCE: &str = "source";
    pub const GAUSS: &str = "gauss";
    pub const THRES: &str = "thres";
    pub const MED: &str = "med";
    pub const SINK: &str = "sink";

    pub const SOURCE_GAUSS: &str = "source_gauss";
    pub const GAUSS_THRES: &str = "gauss_thres";
    pub const GAUSS_THRES_DELAY: &str = "gauss_thres_delay";
    pub const THRES_MED: &str = "thres_med";
    pub const MED_SINK: &str = "med_sink";
}

/// Builds the five-actor network. The number of frames must be a multiple of
/// the token rate; the source stops once every frame has been sent.
pub fn build_motion_detection_network(
    params: &MotionParams,
    frames: Vec<Frame>,
) -> Result<(NetworkGraph, FrameCollector), MotionError> {
    params.check()?;
    if !frames.len().is_multiple_of(params.rate) {
        return Err(MotionError::InvalidParams(format!(
            "{} frames is not a multiple of token rate {}",
            frames.len(),
            params.rate
        )));
    }
    for f in &frames {
        if (f.width, f.height) != (params.width, params.height) {
            return Err(MotionError::DimensionMismatch(
                f.width,
                f.height,
                params.width,
                params.height,
            ));
        }
    }
    let (w, h, r, t) = (params.width, params.height, params.rate, params.threshold);
    let size = params.token_size();
    let port = [(size, r)];

    let gauss = bulk_kernel_adapter(
        token_wise(
            move |i: &[&[u8]], o: &mut [&mut [u8]]| {
                let (first, rest) = o.split_at_mut(1);
                gauss5x5_into(i[0], first[0], w, h).map_err(|e| ActorError(e.to_string()))?;
                rest[0].copy_from_slice(first[0]);
                Ok(())
            },
            &[size],
            &[size, size],
        ),
        &port,
        &[(size, r), (size, r)],
    );
    let thres = bulk_kernel_adapter(
        token_wise(
            move |i: &[&[u8]], o: &mut [&mut [u8]]| {
                thres_diff_into(i[1], i[0], o[0], t);
                Ok(())
            },
            &[size, size],
            &[size],
        ),
        &[(size, r), (size, r)],
        &port,
    );
    let med = bulk_kernel_adapter(
        token_wise(
            move |i: &[&[u8]], o: &mut [&mut [u8]]| {
                median5_into(i[0], o[0], w, h).map_err(|e| ActorError(e.to_string()))
            },
            &[size],
            &[size],
        ),
        &port,
        &port,
    );

    let collector = FrameCollector::default();
    let actors = vec![
        ActorSpec::new_static(
            ids::SOURCE,
            vec![PortSpec::output(ids::SOURCE_GAUSS)],
            FrameSource {
                frames,
                next: 0,
                rate: r,
            },
        ),
        ActorSpec::new_static(
            ids::GAUSS,
            vec![
                PortSpec::input(ids::SOURCE_GAUSS),
                PortSpec::output(ids::GAUSS_THRES),
                PortSpec::output(ids::GAUSS_THRES_DELAY),
            ],
            gauss,
        ),
        ActorSpec::new_static(
            ids::THRES,
            vec![
                PortSpec::input(ids::GAUSS_THRES),
                PortSpec::input(ids::GAUSS_THRES_DELAY),
                PortSpec::output(ids::THRES_MED),
            ],
            thres,
        ),
        ActorSpec::new_static(
            ids::MED,
            vec![
                PortSpec::input(ids::THRES_MED),
                PortSpec::output(ids::MED_SINK),
            ],
            med,
        ),
        ActorSpec::new_static(
            ids::SINK,
            vec![PortSpec::input(ids::MED_SINK)],
            FrameSink(collector.clone()),
        ),
    ];
    let channels = vec![
        ChannelSpec::new(ids::SOURCE_GAUSS, size, r),
        ChannelSpec::new(ids::GAUSS_THRES, size, r),
        ChannelSpec::new(ids::GAUSS_THRES_DELAY, size, r).with_delay(),
        ChannelSpec::new(ids::THRES_MED, size, r),
        ChannelSpec::new(ids::MED_SINK, size, r),
    ];
    let net = build_network(actors, channels)?;
    Ok((net, collector))
}

#[derive(Debug, Error)]
pub enum MotionRunError {
    #[error(transparent)]
    Build(#[from] MotionError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Runs the network over `frames` and returns the output frames.
pub fn run_motion_detection(
    params: &MotionParams,
    frames: Vec<Frame>,
    cfg: &ExecutionConfig,
) -> Result<(Vec<Frame>, RunStats), MotionRunError> {
    let firings = (frames.len() / params.rate.max(1)) as u64;
    let (net, out) = build_motion_detection_network(params, frames)?;
    let cfg = ExecutionConfig {
        source_firing_limit: Some(firings),
        ..cfg.clone()
    };
    let stats = run(net, &cfg)?;
    Ok((out.frames(params.width, params.height), stats))
}
