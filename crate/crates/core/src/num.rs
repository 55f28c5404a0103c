//! Scalar abstraction for the signal-processing kernels.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Real sample type carried on float channels.
///
/// Samples are moved through channels as raw bytes, so the type must be
/// plain-old-data as well as a float.
pub trait Sample:
    Float + FromPrimitive + bytemuck::Pod + Debug + Default + Send + Sync + 'static
{
    /// Bytes per sample on a channel.
    const BYTES: usize = std::mem::size_of::<Self>();

    fn to_le_bytes_vec(self) -> Vec<u8>;
    fn from_le_slice(bytes: &[u8]) -> Self;
}

impl Sample for f32 {
    fn to_le_bytes_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_slice(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte slice"))
    }
}

impl Sample for f64 {
    fn to_le_bytes_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_slice(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte slice"))
    }
}
