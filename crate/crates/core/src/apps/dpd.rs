//! Dynamic Predistortion: ten parallel branches, each a memoryless
//! nonlinearity `x·|x|^(k-1)` followed by a 10-tap complex FIR filter, summed
//! into one output. A configuration actor picks which 2 to 10 branches are
//! active once per reconfiguration period.
//!
//! Network (every sample edge is a pair of channels, real and imaginary):
//!
//! ```text
//!            config --ctl--> poly, adder
//!  source ==> poly ==(k)==> fir_k ==(k)==> adder ==> sink      k = 1..10
//! ```
//!
//! `poly` and `adder` are dynamic: for inactive branches their ports carry
//! no tokens in that firing. One firing of the dynamic part processes one
//! period of samples, so every channel on that path has token rate 1. The
//! graph has 2 + 20 + 20 + 2 sample channels and 2 control channels.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use thiserror::Error;

use crate::model::{
    build_network, Actor, ActorError, ActorSpec, ChannelSpec, FiringRates, ModelError,
    NetworkGraph, PortSpec,
};
use crate::num::Sample;
use crate::runtime::{run, ExecutionConfig, Firing, RunError, RunStats};

pub const BRANCHES: usize = 10;
pub const TAPS: usize = 10;
pub const DEFAULT_PERIOD: usize = 65_536;
pub const MIN_ACTIVE: usize = 2;
pub const MAX_ACTIVE: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DpdError {
    #[error("active branch count {0} outside [2, 10]")]
    ActiveCount(usize),
    #[error("branch index {0} outside 1..=10")]
    BranchIndex(usize),
    #[error("active set lists {listed} branches but declares {declared}")]
    SetSize { declared: usize, listed: usize },
    #[error("empty reconfiguration schedule")]
    EmptySchedule,
    #[error("block lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Complex samples stored as separate real and imaginary arrays.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleBlock<T> {
    pub re: Vec<T>,
    pub im: Vec<T>,
}

impl<T: Sample> SampleBlock<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            re: vec![T::zero(); len],
            im: vec![T::zero(); len],
        }
    }

    pub fn from_complex(samples: &[Complex<T>]) -> Self {
        Self {
            re: samples.iter().map(|c| c.re).collect(),
            im: samples.iter().map(|c| c.im).collect(),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex<T>> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&re, &im)| Complex::new(re, im))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

/// 10-tap complex FIR filter with its 9-sample history.
#[derive(Debug, Clone, PartialEq)]
pub struct Fir10<T> {
    taps: [Complex<T>; TAPS],
    /// history[0] is the most recent past input.
    history: [Complex<T>; TAPS - 1],
}

impl<T: Sample> Fir10<T> {
    pub fn new(taps: [Complex<T>; TAPS]) -> Self {
        Self {
            taps,
            history: [Complex::new(T::zero(), T::zero()); TAPS - 1],
        }
    }

    pub fn taps(&self) -> &[Complex<T>; TAPS] {
        &self.taps
    }

    /// `y[n] = Σ_k taps[k]·x[n-k]`, summed from k = 0 upwards.
    pub fn filter_into(&mut self, re: &[T], im: &[T], out_re: &mut [T], out_im: &mut [T]) {
        for (n, (&xr, &xi)) in re.iter().zip(im).enumerate() {
            let x = Complex::new(xr, xi);
            let mut acc = self.taps[0] * x;
            for (tap, past) in self.taps[1..].iter().zip(&self.history) {
                acc = acc + *tap * *past;
            }
            self.history.copy_within(0..TAPS - 2, 1);
            self.history[0] = x;
            out_re[n] = acc.re;
            out_im[n] = acc.im;
        }
    }

    pub fn filter(&mut self, block: &SampleBlock<T>) -> SampleBlock<T> {
        let mut out = SampleBlock::zeros(block.len());
        self.filter_into(&block.re, &block.im, &mut out.re, &mut out.im);
        out
    }
}

/// Branch nonlinearity `x·|x|^(k-1)` for branch `k` in 1..=10.
pub fn poly_sample<T: Sample>(k: usize, x: Complex<T>) -> Complex<T> {
    if k <= 1 {
        return x;
    }
    x * x.norm().powi(k as i32 - 1)
}

pub fn poly_branch_into<T: Sample>(
    k: usize,
    re: &[T],
    im: &[T],
    out_re: &mut [T],
    out_im: &mut [T],
) {
    for n in 0..re.len() {
        let y = poly_sample(k, Complex::new(re[n], im[n]));
        out_re[n] = y.re;
        out_im[n] = y.im;
    }
}

pub fn poly_branch<T: Sample>(k: usize, block: &SampleBlock<T>) -> SampleBlock<T> {
    let mut out = SampleBlock::zeros(block.len());
    poly_branch_into(k, &block.re, &block.im, &mut out.re, &mut out.im);
    out
}

/// Which branches run during one reconfiguration period.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DpdConfigToken {
    mask: u16,
}

impl DpdConfigToken {
    pub const BYTES: usize = 2;

    /// Branches given as zero-based indices.
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Result<Self, DpdError> {
        let mut mask = 0u16;
        for i in indices {
            if i >= BRANCHES {
                return Err(DpdError::BranchIndex(i + 1));
            }
            mask |= 1 << i;
        }
        Self::from_mask(mask)
    }

    /// The first `count` branches.
    pub fn first(count: usize) -> Result<Self, DpdError> {
        if !(MIN_ACTIVE..=MAX_ACTIVE).contains(&count) {
            return Err(DpdError::ActiveCount(count));
        }
        Self::from_indices(0..count)
    }

    pub fn from_mask(mask: u16) -> Result<Self, DpdError> {
        if mask >> BRANCHES != 0 {
            return Err(DpdError::BranchIndex(BRANCHES + 1));
        }
        let count = mask.count_ones() as usize;
        if !(MIN_ACTIVE..=MAX_ACTIVE).contains(&count) {
            return Err(DpdError::ActiveCount(count));
        }
        Ok(Self { mask })
    }

    pub fn mask(&self) -> u16 {
        self.mask
    }

    pub fn active_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Zero-based branch index.
    pub fn is_active(&self, branch: usize) -> bool {
        branch < BRANCHES && self.mask & (1 << branch) != 0
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..BRANCHES).filter(|&b| self.is_active(b))
    }

    pub fn encode(&self) -> [u8; 2] {
        self.mask.to_le_bytes()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DpdError> {
        let raw: [u8; 2] = bytes
            .try_into()
            .map_err(|_| DpdError::InvalidParams("control token must be 2 bytes".into()))?;
        Self::from_mask(u16::from_le_bytes(raw))
    }
}

impl fmt::Debug for DpdConfigToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set: Vec<usize> = self.active().map(|b| b + 1).collect();
        write!(f, "DpdConfigToken{set:?}")
    }
}

/// Element-wise sum of the active branch outputs, in branch order.
pub fn dpd_adder<T: Sample>(
    active: &DpdConfigToken,
    branches: &[SampleBlock<T>],
) -> Result<SampleBlock<T>, DpdError> {
    if branches.len() != active.active_count() {
        return Err(DpdError::SetSize {
            declared: active.active_count(),
            listed: branches.len(),
        });
    }
    let len = branches.first().map_or(0, SampleBlock::len);
    let mut out = SampleBlock::zeros(len);
    for b in branches {
        if b.len() != len || b.im.len() != len {
            return Err(DpdError::LengthMismatch(len, b.len()));
        }
        accumulate(&mut out.re, &b.re);
        accumulate(&mut out.im, &b.im);
    }
    Ok(out)
}

fn accumulate<T: Sample>(acc: &mut [T], x: &[T]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a = *a + v;
    }
}

/// Taps for every branch.
#[derive(Debug, Clone, PartialEq)]
pub struct DpdTaps<T> {
    pub branches: [[Complex<T>; TAPS]; BRANCHES],
}

impl<T: Sample> DpdTaps<T> {
    /// Every branch an identity filter.
    pub fn identity() -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let mut t = [zero; TAPS];
        t[0] = Complex::new(T::one(), T::zero());
        Self {
            branches: [t; BRANCHES],
        }
    }

    fn filters(&self) -> Vec<Fir10<T>> {
        self.branches.iter().map(|t| Fir10::new(*t)).collect()
    }
}

/// Sequential reference: per period, apply each active branch's
/// nonlinearity and filter, and sum in branch order. Inactive filters keep
/// their history untouched.
pub fn oracle_dpd<T: Sample>(
    samples: &[Complex<T>],
    taps: &DpdTaps<T>,
    schedule: &[DpdConfigToken],
    period: usize,
) -> Result<Vec<Complex<T>>, DpdError> {
    if schedule.is_empty() {
        return Err(DpdError::EmptySchedule);
    }
    if period == 0 {
        return Err(DpdError::InvalidParams("period must be at least 1".into()));
    }
    let mut filters = taps.filters();
    let mut out = Vec::with_capacity(samples.len());
    for (p, chunk) in samples.chunks(period).enumerate() {
        let cfg = schedule[p % schedule.len()];
        let block = SampleBlock::from_complex(chunk);
        let outputs: Vec<SampleBlock<T>> = cfg
            .active()
            .map(|b| filters[b].filter(&poly_branch(b + 1, &block)))
            .collect();
        out.extend(dpd_adder(&cfg, &outputs)?.to_complex());
    }
    Ok(out)
}

fn as_samples<T: Sample>(bytes: &[u8]) -> Result<&[T], ActorError> {
    bytemuck::try_cast_slice(bytes).map_err(|e| ActorError(format!("sample view: {e}")))
}

fn as_samples_mut<T: Sample>(bytes: &mut [u8]) -> Result<&mut [T], ActorError> {
    bytemuck::try_cast_slice_mut(bytes).map_err(|e| ActorError(format!("sample view: {e}")))
}

/// Emits one period of samples per firing, zero-padding the last one.
struct SampleSource<T> {
    samples: Arc<[Complex<T>]>,
    next: usize,
}

impl<T: Sample> Actor for SampleSource<T> {
    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let (_, outs) = io.ports();
        let [Some(re), Some(im)] = outs else {
            return Err("source outputs inactive".into());
        };
        let re = as_samples_mut::<T>(re)?;
        let im = as_samples_mut::<T>(im)?;
        let period = re.len();
        let end = (self.next + period).min(self.samples.len());
        let chunk = &self.samples[self.next.min(end)..end];
        for n in 0..period {
            let x = chunk.get(n).copied().unwrap_or_default();
            re[n] = x.re;
            im[n] = x.im;
        }
        self.next = end;
        if self.next >= self.samples.len() {
            io.request_stop();
        }
        Ok(())
    }
}

/// Emits the schedule, cycling, to the poly and adder control channels.
pub struct ConfigSource {
    schedule: Vec<DpdConfigToken>,
    next: usize,
}

impl ConfigSource {
    pub fn new(schedule: Vec<DpdConfigToken>) -> Result<Self, DpdError> {
        if schedule.is_empty() {
            return Err(DpdError::EmptySchedule);
        }
        Ok(Self { schedule, next: 0 })
    }
}

impl Actor for ConfigSource {
    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let token = self.schedule[self.next % self.schedule.len()].encode();
        self.next += 1;
        let (_, outs) = io.ports();
        for out in outs.iter_mut() {
            out.as_deref_mut()
                .ok_or("config output inactive")?
                .copy_from_slice(&token);
        }
        Ok(())
    }
}

/// Computes every active branch's nonlinearity. Regular ports: input re, im;
/// then re, im for each branch.
pub struct PolyActor<T> {
    active: Option<DpdConfigToken>,
    _t: std::marker::PhantomData<T>,
}

impl<T: Sample> PolyActor<T> {
    pub fn new() -> Self {
        Self {
            active: None,
            _t: std::marker::PhantomData,
        }
    }
}

impl<T: Sample> Default for PolyActor<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Sample> Actor for PolyActor<T> {
    fn has_control(&self) -> bool {
        true
    }

    fn control(&mut self, token: &[u8], declared: &[usize]) -> Result<FiringRates, ActorError> {
        let cfg = DpdConfigToken::decode(token).map_err(|e| ActorError(e.to_string()))?;
        self.active = Some(cfg);
        Ok(FiringRates::select(declared, |port| {
            port < 2 || cfg.is_active((port - 2) / 2)
        }))
    }

    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let cfg = self.active.ok_or("poly fired without control token")?;
        let (ins, outs) = io.ports();
        let re = as_samples::<T>(ins[0].ok_or("poly input inactive")?)?;
        let im = as_samples::<T>(ins[1].ok_or("poly input inactive")?)?;
        for b in cfg.active() {
            let (o_re, o_im) = outs[2 * b..2 * b + 2].split_at_mut(1);
            let o_re =
                as_samples_mut::<T>(o_re[0].as_deref_mut().ok_or("branch output inactive")?)?;
            let o_im =
                as_samples_mut::<T>(o_im[0].as_deref_mut().ok_or("branch output inactive")?)?;
            poly_branch_into(b + 1, re, im, o_re, o_im);
        }
        Ok(())
    }
}

/// Static FIR actor for one branch.
pub struct FirActor<T> {
    fir: Fir10<T>,
}

impl<T: Sample> FirActor<T> {
    pub fn new(taps: [Complex<T>; TAPS]) -> Self {
        Self {
            fir: Fir10::new(taps),
        }
    }
}

impl<T: Sample> Actor for FirActor<T> {
    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let (ins, outs) = io.ports();
        let re = as_samples::<T>(ins[0].ok_or("fir input inactive")?)?;
        let im = as_samples::<T>(ins[1].ok_or("fir input inactive")?)?;
        let (o_re, o_im) = outs.split_at_mut(1);
        let o_re = as_samples_mut::<T>(o_re[0].as_deref_mut().ok_or("fir output inactive")?)?;
        let o_im = as_samples_mut::<T>(o_im[0].as_deref_mut().ok_or("fir output inactive")?)?;
        self.fir.filter_into(re, im, o_re, o_im);
        Ok(())
    }
}

/// Sums the active branches. Regular ports: re, im per branch; then the
/// output re, im.
pub struct AdderActor<T> {
    active: Option<DpdConfigToken>,
    _t: std::marker::PhantomData<T>,
}

impl<T: Sample> AdderActor<T> {
    pub fn new() -> Self {
        Self {
            active: None,
            _t: std::marker::PhantomData,
        }
    }
}

impl<T: Sample> Default for AdderActor<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Sample> Actor for AdderActor<T> {
    fn has_control(&self) -> bool {
        true
    }

    fn control(&mut self, token: &[u8], declared: &[usize]) -> Result<FiringRates, ActorError> {
        let cfg = DpdConfigToken::decode(token).map_err(|e| ActorError(e.to_string()))?;
        self.active = Some(cfg);
        let inputs = 2 * BRANCHES;
        Ok(FiringRates::select(declared, |port| {
            port >= inputs || cfg.is_active(port / 2)
        }))
    }

    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let cfg = self.active.ok_or("adder fired without control token")?;
        let (ins, outs) = io.ports();
        let (o_re, o_im) = outs.split_at_mut(1);
        let o_re = as_samples_mut::<T>(o_re[0].as_deref_mut().ok_or("adder output inactive")?)?;
        let o_im = as_samples_mut::<T>(o_im[0].as_deref_mut().ok_or("adder output inactive")?)?;
        o_re.fill(T::zero());
        o_im.fill(T::zero());
        for b in cfg.active() {
            let re = as_samples::<T>(ins[2 * b].ok_or("active branch input missing")?)?;
            let im = as_samples::<T>(ins[2 * b + 1].ok_or("active branch input missing")?)?;
            if re.len() != o_re.len() {
                return Err(ActorError(
                    DpdError::LengthMismatch(o_re.len(), re.len()).to_string(),
                ));
            }
            accumulate(o_re, re);
            accumulate(o_im, im);
        }
        Ok(())
    }
}

/// Samples received by the sink actor.
pub struct SampleCollector<T> {
    data: Arc<Mutex<Vec<Complex<T>>>>,
    total: usize,
}

impl<T> Clone for SampleCollector<T> {
    fn clone(&self) -> Self {
        Self {
            data: self.data.clone(),
            total: self.total,
        }
    }
}

impl<T: Sample> SampleCollector<T> {
    /// Output samples with the padding of the last period removed.
    pub fn samples(&self) -> Vec<Complex<T>> {
        let data = self.data.lock().unwrap_or_else(|e| e.into_inner());
        data[..self.total.min(data.len())].to_vec()
    }
}

struct SampleSink<T>(SampleCollector<T>);

impl<T: Sample> Actor for SampleSink<T> {
    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        let re = as_samples::<T>(io.input(0).ok_or("sink input inactive")?)?;
        let im = as_samples::<T>(io.input(1).ok_or("sink input inactive")?)?;
        let mut data = self.0.data.lock().unwrap_or_else(|e| e.into_inner());
        data.extend(re.iter().zip(im).map(|(&r, &i)| Complex::new(r, i)));
        Ok(())
    }
}

pub mod ids {
    pub const SOURCE: &str = "source";
    pub const CONFIG: &str = "config";
    pub const POLY: &str = "poly";
    pub const ADDER: &str = "adder";
    pub const SINK: &str = "sink";
    pub const CTL_POLY: &str = "ctl_poly";
    pub const CTL_ADDER: &str = "ctl_adder";

    /// FIR actor of zero-based branch `b`.
    pub fn fir(b: usize) -> String {
        format!("fir{}", b + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpdParams {
    /// Samples per reconfiguration period, which is also samples per token.
    pub period: usize,
}

impl Default for DpdParams {
    fn default() -> Self {
        Self {
            period: DEFAULT_PERIOD,
        }
    }
}

impl DpdParams {
    /// Firings of each source needed to cover `samples` samples.
    pub fn periods(&self, samples: usize) -> u64 {
        samples.div_ceil(self.period) as u64
    }
}

fn pair(prefix: &str) -> [String; 2] {
    [format!("{prefix}_re"), format!("{prefix}_im")]
}

/// Builds the predistortion network over `samples`.
pub fn build_dpd_network<T: Sample>(
    params: &DpdParams,
    samples: Vec<Complex<T>>,
    taps: &DpdTaps<T>,
    schedule: Vec<DpdConfigToken>,
) -> Result<(NetworkGraph, SampleCollector<T>), DpdError> {
    if params.period == 0 {
        return Err(DpdError::InvalidParams("period must be at least 1".into()));
    }
    let token = params.period * T::BYTES;
    let collector = SampleCollector {
        data: Arc::new(Mutex::new(Vec::with_capacity(samples.len()))),
        total: samples.len(),
    };

    let src = pair("source_poly");
    let branch_in: Vec<[String; 2]> = (0..BRANCHES)
        .map(|b| pair(&format!("poly_{}", ids::fir(b))))
        .collect();
    let branch_out: Vec<[String; 2]> = (0..BRANCHES)
        .map(|b| pair(&format!("{}_adder", ids::fir(b))))
        .collect();
    let out = pair("adder_sink");

    let mut channels: Vec<ChannelSpec> = Vec::new();
    for name in src
        .iter()
        .chain(branch_in.iter().flatten())
        .chain(branch_out.iter().flatten())
        .chain(&out)
    {
        channels.push(ChannelSpec::new(name.as_str(), token, 1));
    }
    channels.push(ChannelSpec::new(ids::CTL_POLY, DpdConfigToken::BYTES, 1));
    channels.push(ChannelSpec::new(ids::CTL_ADDER, DpdConfigToken::BYTES, 1));

    let mut actors = vec![
        ActorSpec::new_static(
            ids::SOURCE,
            src.iter().map(PortSpec::output).collect(),
            SampleSource {
                samples: samples.into(),
                next: 0,
            },
        ),
        ActorSpec::new_static(
            ids::CONFIG,
            vec![
                PortSpec::output(ids::CTL_POLY),
                PortSpec::output(ids::CTL_ADDER),
            ],
            ConfigSource::new(schedule)?,
        ),
    ];
    let mut poly_ports = vec![PortSpec::control(ids::CTL_POLY)];
    poly_ports.extend(src.iter().map(PortSpec::input));
    poly_ports.extend(branch_in.iter().flatten().map(PortSpec::output));
    actors.push(ActorSpec::new_dynamic(
        ids::POLY,
        poly_ports,
        PolyActor::<T>::new(),
    ));

    for b in 0..BRANCHES {
        let mut ports: Vec<PortSpec> = branch_in[b].iter().map(PortSpec::input).collect();
        ports.extend(branch_out[b].iter().map(PortSpec::output));
        actors.push(ActorSpec::new_static(
            ids::fir(b),
            ports,
            FirActor::new(taps.branches[b]),
        ));
    }

    let mut adder_ports = vec![PortSpec::control(ids::CTL_ADDER)];
    adder_ports.extend(branch_out.iter().flatten().map(PortSpec::input));
    adder_ports.extend(out.iter().map(PortSpec::output));
    actors.push(ActorSpec::new_dynamic(
        ids::ADDER,
        adder_ports,
        AdderActor::<T>::new(),
    ));
    actors.push(ActorSpec::new_static(
        ids::SINK,
        out.iter().map(PortSpec::input).collect(),
        SampleSink(collector.clone()),
    ));

    let net = build_network(actors, channels)?;
    if let Some(c) = net
        .dynamic_channels()
        .into_iter()
        .find(|c| c.token_rate != 1)
    {
        return Err(DpdError::InvalidParams(format!(
            "dynamic channel {} has rate {}",
            c.id, c.token_rate
        )));
    }
    Ok((net, collector))
}

#[derive(Debug, Error)]
pub enum DpdRunError {
    #[error(transparent)]
    Build(#[from] DpdError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Runs the network over `samples` and returns the output samples.
pub fn run_dpd<T: Sample>(
    params: &DpdParams,
    samples: Vec<Complex<T>>,
    taps: &DpdTaps<T>,
    schedule: Vec<DpdConfigToken>,
    cfg: &ExecutionConfig,
) -> Result<(Vec<Complex<T>>, RunStats), DpdRunError> {
    let periods = params.periods(samples.len());
    let (net, out) = build_dpd_network(params, samples, taps, schedule)?;
    let cfg = ExecutionConfig {
        source_firing_limit: Some(periods),
        ..cfg.clone()
    };
    let stats = run(net, &cfg)?;
    Ok((out.samples(), stats))
}

/// Largest per-sample relative error `|a-b| / max(|a|, |b|)`; samples that
/// are both zero count as exact. Returns the index and value of the worst
/// sample, or `None` when the lengths differ.
pub fn max_relative_error<T: Sample>(a: &[Complex<T>], b: &[Complex<T>]) -> Option<(usize, f64)> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst = (0, 0.0);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let x = Complex::new(x.re.to_f64()?, x.im.to_f64()?);
        let y = Complex::new(y.re.to_f64()?, y.im.to_f64()?);
        let scale = x.norm().max(y.norm());
        let err = if scale == 0.0 {
            0.0
        } else {
            (x - y).norm() / scale
        };
        let err = if err.is_nan() { f64::INFINITY } else { err };
        if err > worst.1 {
            worst = (i, err);
        }
    }
    Some(worst)
}
