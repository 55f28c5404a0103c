//! Actors built from kernels that see whole channel regions.
//!
//! A kernel receives each input port's `r` tokens as one contiguous array and
//! fills each output port's `r` tokens the same way, the shape device kernels
//! expect. [`token_wise`] turns a per-token function into such a kernel.

use crate::model::{Actor, ActorError};
use crate::runtime::Firing;

pub trait BulkKernel: Send {
    fn run(&mut self, inputs: &[&[u8]], outputs: &mut [&mut [u8]]) -> Result<(), ActorError>;
}

impl<F> BulkKernel for F
where
    F: FnMut(&[&[u8]], &mut [&mut [u8]]) -> Result<(), ActorError> + Send,
{
    fn run(&mut self, inputs: &[&[u8]], outputs: &mut [&mut [u8]]) -> Result<(), ActorError> {
        self(inputs, outputs)
    }
}

/// Static actor that passes whole regions to a kernel.
pub struct KernelActor<K> {
    kernel: K,
    input_bytes: Vec<usize>,
    output_bytes: Vec<usize>,
}

/// Wraps `kernel` as a static actor. `inputs`/`outputs` give
/// `(token_size, rate)` for every port; every region handed to the kernel is
/// checked against `token_size * rate`.
pub fn bulk_kernel_adapter<K: BulkKernel>(
    kernel: K,
    inputs: &[(usize, usize)],
    outputs: &[(usize, usize)],
) -> KernelActor<K> {
    KernelActor {
        kernel,
        input_bytes: inputs.iter().map(|&(s, r)| s * r).collect(),
        output_bytes: outputs.iter().map(|&(s, r)| s * r).collect(),
    }
}

fn length_mismatch(dir: &str, port: usize, expected: usize, got: usize) -> ActorError {
    ActorError(format!(
        "kernel {dir} port {port}: region is {got} bytes, expected {expected}"
    ))
}

impl<K: BulkKernel> Actor for KernelActor<K> {
    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        if io.input_count() != self.input_bytes.len()
            || io.output_count() != self.output_bytes.len()
        {
            return Err(ActorError::new(
                "kernel port count differs from actor ports",
            ));
        }
        let (ins, outs) = io.ports();
        let mut inputs = Vec::with_capacity(ins.len());
        for (i, (slot, &want)) in ins.iter().zip(&self.input_bytes).enumerate() {
            let data = slot.ok_or_else(|| ActorError::new("kernel input inactive"))?;
            if data.len() != want {
                return Err(length_mismatch("input", i, want, data.len()));
            }
            inputs.push(data);
        }
        let mut outputs = Vec::with_capacity(outs.len());
        for (i, (slot, &want)) in outs.iter_mut().zip(&self.output_bytes).enumerate() {
            let data = slot
                .as_deref_mut()
                .ok_or_else(|| ActorError::new("kernel output inactive"))?;
            if data.len() != want {
                return Err(length_mismatch("output", i, want, data.len()));
            }
            outputs.push(data);
        }
        self.kernel.run(&inputs, &mut outputs)
    }
}

/// Kernel that applies `f` to each token position independently.
pub struct TokenWise<F> {
    f: F,
    input_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
}

/// `f` sees one token per input and one token per output. The number of
/// tokens per region is inferred from the first port.
pub fn token_wise<F>(f: F, input_sizes: &[usize], output_sizes: &[usize]) -> TokenWise<F>
where
    F: FnMut(&[&[u8]], &mut [&mut [u8]]) -> Result<(), ActorError> + Send,
{
    TokenWise {
        f,
        input_sizes: input_sizes.to_vec(),
        output_sizes: output_sizes.to_vec(),
    }
}

impl<F> BulkKernel for TokenWise<F>
where
    F: FnMut(&[&[u8]], &mut [&mut [u8]]) -> Result<(), ActorError> + Send,
{
    fn run(&mut self, inputs: &[&[u8]], outputs: &mut [&mut [u8]]) -> Result<(), ActorError> {
        let tokens = match (inputs.first(), outputs.first()) {
            (Some(d), _) => d.len() / self.input_sizes[0],
            (None, Some(d)) => d.len() / self.output_sizes[0],
            (None, None) => return Ok(()),
        };
        for t in 0..tokens {
            let ins: Vec<&[u8]> = inputs
                .iter()
                .zip(&self.input_sizes)
                .map(|(d, &s)| &d[t * s..(t + 1) * s])
                .collect();
            let mut outs: Vec<&mut [u8]> = outputs
                .iter_mut()
                .zip(&self.output_sizes)
                .map(|(d, &s)| &mut d[t * s..(t + 1) * s])
                .collect();
            (self.f)(&ins, &mut outs)?;
        }
        Ok(())
    }
}
