//! Dynamic dataflow runtime for multicore stream processing.
//!
//! Applications are networks of actors joined by bounded FIFO channels.
//! Actors may be static (fixed token rates) or dynamic (a control token
//! chooses, per firing, whether each regular port transfers 0 or `r`
//! tokens). Channels may start with one delay token. Every actor runs on its
//! own thread and blocks on channel I/O.
//!
//! * [`model`]: networks, actors, ports, rates and validation.
//! * [`channel`]: channel buffers and their access pattern.
//! * [`runtime`]: execution of a network.
//! * [`apps`]: Motion Detection and Dynamic Predistortion benchmarks with
//!   single-threaded reference implementations.
//! * [`cli`]: the benchmark command implementations.

pub mod apps;
pub mod channel;
pub mod cli;
pub mod model;
pub mod num;
pub mod runtime;

pub use channel::{capacity_bytes, capacity_tokens, memory_bytes, read_region, write_region};
pub use model::{
    build_network, validate, Actor, ActorError, ActorKind, ActorSpec, ChannelSpec, FiringRates,
    NetworkGraph, PortSpec,
};
pub use num::Sample;
pub use runtime::{run, ExecutionConfig, Firing, Mapping, RunStats};

/// Single-precision complex sample, the type the predistorter runs on.
pub type Complex32 = num_complex::Complex<f32>;
pub type Complex64 = num_complex::Complex<f64>;

pub type Fir10F32 = apps::dpd::Fir10<f32>;
pub type Fir10F64 = apps::dpd::Fir10<f64>;
pub type SampleBlockF32 = apps::dpd::SampleBlock<f32>;
pub type SampleBlockF64 = apps::dpd::SampleBlock<f64>;
pub type DpdTapsF32 = apps::dpd::DpdTaps<f32>;
pub type DpdTapsF64 = apps::dpd::DpdTaps<f64>;
