//! Bounded FIFO channels.
//!
//! Capacity is fixed by the token rate `r`:
//!
//! * regular channel: `2r` tokens, used as a double buffer whose two halves
//!   alternate between writer and reader;
//! * channel with a delay token: `3r + 1` tokens. The initial token sits in
//!   slot 0, write number `w` fills slots `(w mod 3)·r + 1 ..= (w mod 3)·r + r`
//!   and read number `n` takes slots `(n mod 3)·r .. (n mod 3)·r + r`. After
//!   every third write the last slot (`3r`) is copied into slot 0 so the
//!   next read again sees a contiguous region.
//!
//! Every region handed out is contiguous, so actor code always gets plain
//! slices. A channel has exactly one [`Producer`] and one [`Consumer`];
//! start calls block until the requested region is free or filled.

use std::cell::UnsafeCell;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use thiserror::Error;

use crate::model::{ChannelSpec, NetworkGraph};

/// Number of token slots backing a channel.
pub fn capacity_tokens(spec: &ChannelSpec) -> usize {
    if spec.has_delay {
        spec.token_rate * 3 + 1
    } else {
        spec.token_rate * 2
    }
}

pub fn capacity_bytes(spec: &ChannelSpec) -> usize {
    capacity_tokens(spec) * spec.token_size
}

/// Length of the access pattern before it repeats.
pub fn phase_count(spec: &ChannelSpec) -> usize {
    if spec.has_delay {
        3
    } else {
        2
    }
}

/// A contiguous run of token slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRange {
    pub first: usize,
    pub len: usize,
}

impl SlotRange {
    pub fn last(&self) -> usize {
        self.first + self.len - 1
    }

    pub fn contains(&self, slot: usize) -> bool {
        slot >= self.first && slot < self.first + self.len
    }
}

/// Slots filled by a write in the given phase.
pub fn write_region(spec: &ChannelSpec, phase: usize) -> SlotRange {
    let r = spec.token_rate;
    let phase = phase % phase_count(spec);
    let first = if spec.has_delay {
        phase * r + 1
    } else {
        phase * r
    };
    SlotRange { first, len: r }
}

/// Slots consumed by a read in the given phase.
pub fn read_region(spec: &ChannelSpec, phase: usize) -> SlotRange {
    let r = spec.token_rate;
    let phase = phase % phase_count(spec);
    SlotRange {
        first: phase * r,
        len: r,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

/// An acquired region of a channel, valid until the matching end call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionHandle {
    pub first_slot: usize,
    pub length: usize,
    pub direction: Access,
    ticket: u64,
}

impl RegionHandle {
    pub fn slots(&self) -> SlotRange {
        SlotRange {
            first: self.first_slot,
            len: self.length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("channel `{channel}` transfers {expected} tokens per access, {got} requested")]
    RateMismatch {
        channel: String,
        expected: usize,
        got: usize,
    },
    #[error("channel `{channel}`: a {access:?} region is already outstanding")]
    AlreadyOutstanding { channel: String, access: Access },
    #[error("channel `{channel}`: {access:?} handle is not outstanding")]
    NotOutstanding { channel: String, access: Access },
    #[error("channel `{0}`: reader is gone")]
    Disconnected(String),
    #[error("channel `{0}`: write after end of stream")]
    Closed(String),
}

#[derive(Debug, Default)]
struct State {
    writes: u64,
    reads: u64,
    end_of_stream: bool,
    reader_gone: bool,
}

struct Shared {
    spec: ChannelSpec,
    storage: Box<[UnsafeCell<u64>]>,
    state: Mutex<State>,
    changed: Condvar,
}

// SAFETY: the storage is only touched through regions whose slot ranges are
// disjoint between the single producer and the single consumer. The
// acquisition predicates in `Producer::write_start` / `Consumer::read_start`
// guarantee this and the mutex orders every hand-over.
unsafe impl Sync for Shared {}
unsafe impl Send for Shared {}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn base(&self) -> *mut u8 {
        UnsafeCell::raw_get(self.storage.as_ptr()) as *mut u8
    }

    fn rate(&self) -> u64 {
        self.spec.token_rate as u64
    }

    /// Tokens committed and not yet released.
    fn tokens_available(&self, st: &State) -> usize {
        let initial = u64::from(self.spec.has_delay);
        ((initial + st.writes * self.rate()) - st.reads * self.rate()) as usize
    }

    // The next write's slots were last read by read `writes - 2`; the writer
    // may proceed once that read has been released.
    fn can_write(&self, st: &State) -> bool {
        st.writes <= st.reads + 1
    }

    fn can_read(&self, st: &State) -> bool {
        self.tokens_available(st) >= self.spec.token_rate
    }

    fn slot_bytes(&self, range: SlotRange) -> (usize, usize) {
        (
            range.first * self.spec.token_size,
            range.len * self.spec.token_size,
        )
    }
}

/// Read-only view of a channel's counters.
#[derive(Clone)]
pub struct ChannelProbe(Arc<Shared>);

impl ChannelProbe {
    pub fn spec(&self) -> &ChannelSpec {
        &self.0.spec
    }

    pub fn tokens_available(&self) -> usize {
        let st = self.0.lock();
        self.0.tokens_available(&st)
    }

    /// Tokens committed by writes so far.
    pub fn committed(&self) -> u64 {
        self.0.lock().writes * self.0.rate()
    }

    /// Tokens released by reads so far.
    pub fn released(&self) -> u64 {
        self.0.lock().reads * self.0.rate()
    }

    pub fn is_closed(&self) -> bool {
        self.0.lock().end_of_stream
    }
}

/// Creates a channel and returns its two endpoints.
pub fn channel(spec: ChannelSpec) -> (Producer, Consumer) {
    let bytes = capacity_bytes(&spec);
    let words = bytes.div_ceil(8);
    let storage: Box<[UnsafeCell<u64>]> = (0..words).map(|_| UnsafeCell::new(0)).collect();
    let shared = Arc::new(Shared {
        spec,
        storage,
        state: Mutex::new(State::default()),
        changed: Condvar::new(),
    });
    if shared.spec.has_delay {
        let init = shared.spec.initial_token_bytes();
        // SAFETY: no endpoint exists yet.
        unsafe {
            std::ptr::copy_nonoverlapping(init.as_ptr(), shared.base(), shared.spec.token_size);
        }
    }
    (
        Producer {
            shared: shared.clone(),
            outstanding: None,
            next_ticket: 0,
        },
        Consumer {
            shared,
            outstanding: None,
            next_ticket: 0,
        },
    )
}

/// Writing end of a channel. Dropping it signals end of stream.
pub struct Producer {
    shared: Arc<Shared>,
    outstanding: Option<RegionHandle>,
    next_ticket: u64,
}

impl Producer {
    pub fn spec(&self) -> &ChannelSpec {
        &self.shared.spec
    }

    pub fn probe(&self) -> ChannelProbe {
        ChannelProbe(self.shared.clone())
    }

    /// Blocks until `n` slots are free and returns them as one region.
    /// `n` must equal the channel's token rate.
    pub fn write_start(&mut self, n: usize) -> Result<RegionHandle, ChannelError> {
        let sh = &self.shared;
        if n != sh.spec.token_rate {
            return Err(ChannelError::RateMismatch {
                channel: sh.spec.id.clone(),
                expected: sh.spec.token_rate,
                got: n,
            });
        }
        if self.outstanding.is_some() {
            return Err(ChannelError::AlreadyOutstanding {
                channel: sh.spec.id.clone(),
                access: Access::Write,
            });
        }
        let mut st = sh.lock();
        loop {
            if st.end_of_stream {
                return Err(ChannelError::Closed(sh.spec.id.clone()));
            }
            if st.reader_gone {
                return Err(ChannelError::Disconnected(sh.spec.id.clone()));
            }
            if sh.can_write(&st) {
                break;
            }
            st = sh.changed.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        let range = write_region(
            &sh.spec,
            (st.writes % phase_count(&sh.spec) as u64) as usize,
        );
        drop(st);
        let h = RegionHandle {
            first_slot: range.first,
            length: range.len,
            direction: Access::Write,
            ticket: self.next_ticket,
        };
        self.next_ticket += 1;
        self.outstanding = Some(h);
        Ok(h)
    }

    /// Mutable bytes of the outstanding write region.
    pub fn region_mut(&mut self, h: &RegionHandle) -> Result<&mut [u8], ChannelError> {
        self.check(h)?;
        let (off, len) = self.shared.slot_bytes(h.slots());
        // SAFETY: the region is reserved for this producer until write_end
        // and the borrow is tied to `&mut self`.
        Ok(unsafe { std::slice::from_raw_parts_mut(self.shared.base().add(off), len) })
    }

    /// Commits the region and wakes the reader.
    pub fn write_end(&mut self, h: RegionHandle) -> Result<(), ChannelError> {
        self.check(&h)?;
        let sh = &self.shared;
        let spec = &sh.spec;
        if spec.has_delay && h.first_slot + h.length == 3 * spec.token_rate + 1 {
            // Slot 0 was released by the read that preceded this write's
            // acquisition, and nobody can read it before the commit below.
            let last = 3 * spec.token_rate * spec.token_size;
            unsafe {
                std::ptr::copy_nonoverlapping(sh.base().add(last), sh.base(), spec.token_size);
            }
        }
        self.outstanding = None;
        let mut st = sh.lock();
        st.writes += 1;
        drop(st);
        sh.changed.notify_all();
        Ok(())
    }

    /// Copies `data` (exactly `r` tokens) into the channel.
    pub fn write(&mut self, data: &[u8]) -> Result<(), ChannelError> {
        let h = self.write_start(self.shared.spec.token_rate)?;
        self.region_mut(&h)?.copy_from_slice(data);
        self.write_end(h)
    }

    /// Signals end of stream. No further writes are accepted.
    pub fn close(&mut self) {
        let mut st = self.shared.lock();
        st.end_of_stream = true;
        drop(st);
        self.shared.changed.notify_all();
    }

    fn check(&self, h: &RegionHandle) -> Result<(), ChannelError> {
        if self.outstanding.as_ref() == Some(h) {
            Ok(())
        } else {
            Err(ChannelError::NotOutstanding {
                channel: self.shared.spec.id.clone(),
                access: Access::Write,
            })
        }
    }
}

impl Drop for Producer {
    fn drop(&mut self) {
        self.close();
    }
}

/// Reading end of a channel. Dropping it unblocks and fails any waiting
/// writer.
pub struct Consumer {
    shared: Arc<Shared>,
    outstanding: Option<RegionHandle>,
    next_ticket: u64,
}

impl Consumer {
    pub fn spec(&self) -> &ChannelSpec {
        &self.shared.spec
    }

    pub fn probe(&self) -> ChannelProbe {
        ChannelProbe(self.shared.clone())
    }

    /// Blocks until `n` tokens are committed and returns them as one region.
    /// Returns `Ok(None)` once the writer has closed the channel and fewer
    /// than `n` tokens remain.
    pub fn read_start(&mut self, n: usize) -> Result<Option<RegionHandle>, ChannelError> {
        let sh = &self.shared;
        if n != sh.spec.token_rate {
            return Err(ChannelError::RateMismatch {
                channel: sh.spec.id.clone(),
                expected: sh.spec.token_rate,
                got: n,
            });
        }
        if self.outstanding.is_some() {
            return Err(ChannelError::AlreadyOutstanding {
                channel: sh.spec.id.clone(),
                access: Access::Read,
            });
        }
        let mut st = sh.lock();
        loop {
            if sh.can_read(&st) {
                break;
            }
            if st.end_of_stream {
                return Ok(None);
            }
            st = sh.changed.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        let range = read_region(&sh.spec, (st.reads % phase_count(&sh.spec) as u64) as usize);
        drop(st);
        let h = RegionHandle {
            first_slot: range.first,
            length: range.len,
            direction: Access::Read,
            ticket: self.next_ticket,
        };
        self.next_ticket += 1;
        self.outstanding = Some(h);
        Ok(Some(h))
    }

    /// Bytes of the outstanding read region.
    pub fn region(&self, h: &RegionHandle) -> Result<&[u8], ChannelError> {
        self.check(h)?;
        let (off, len) = self.shared.slot_bytes(h.slots());
        // SAFETY: the region holds committed tokens the writer cannot touch
        // until read_end.
        Ok(unsafe { std::slice::from_raw_parts(self.shared.base().add(off), len) })
    }

    /// Releases the region and wakes the writer.
    pub fn read_end(&mut self, h: RegionHandle) -> Result<(), ChannelError> {
        self.check(&h)?;
        self.outstanding = None;
        let mut st = self.shared.lock();
        st.reads += 1;
        drop(st);
        self.shared.changed.notify_all();
        Ok(())
    }

    /// Reads exactly `r` tokens, or `None` at end of stream.
    pub fn read(&mut self) -> Result<Option<Vec<u8>>, ChannelError> {
        let Some(h) = self.read_start(self.shared.spec.token_rate)? else {
            return Ok(None);
        };
        let data = self.region(&h)?.to_vec();
        self.read_end(h)?;
        Ok(Some(data))
    }

    fn check(&self, h: &RegionHandle) -> Result<(), ChannelError> {
        if self.outstanding.as_ref() == Some(h) {
            Ok(())
        } else {
            Err(ChannelError::NotOutstanding {
                channel: self.shared.spec.id.clone(),
                access: Access::Read,
            })
        }
    }
}

impl Drop for Consumer {
    fn drop(&mut self) {
        let mut st = self.shared.lock();
        st.reader_gone = true;
        drop(st);
        self.shared.changed.notify_all();
    }
}

/// Buffer memory of one channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMemory {
    pub id: String,
    pub token_rate: usize,
    pub token_size: usize,
    pub has_delay: bool,
    pub capacity_tokens: usize,
    pub capacity_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryReport {
    pub channels: Vec<ChannelMemory>,
    pub total_bytes: usize,
}

/// Buffer memory of every channel in a network and their sum.
pub fn memory_bytes(net: &NetworkGraph) -> MemoryReport {
    let channels: Vec<ChannelMemory> = net
        .channels()
        .iter()
        .map(|c| ChannelMemory {
            id: c.id.clone(),
            token_rate: c.token_rate,
            token_size: c.token_size,
            has_delay: c.has_delay,
            capacity_tokens: capacity_tokens(c),
            capacity_bytes: capacity_bytes(c),
        })
        .collect();
    let total_bytes = channels.iter().map(|c| c.capacity_bytes).sum();
    MemoryReport {
        channels,
        total_bytes,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::thread;
    use std::time::Duration;

    use super::*;

    fn spec(r: usize, delay: bool) -> ChannelSpec {
        let s = ChannelSpec::new("c", 1, r);
        if delay {
            s.with_delay()
        } else {
            s
        }
    }

    #[test]
    fn capacities() {
        assert_eq!(capacity_tokens(&spec(4, true)), 13);
        assert_eq!(capacity_tokens(&spec(1, true)), 4);
        let frame = ChannelSpec::new("f", 76800, 1);
        assert_eq!(capacity_tokens(&frame), 2);
        assert_eq!(capacity_bytes(&frame), 153_600);
        assert_eq!(capacity_bytes(&frame.with_delay()), 307_200);
    }

    #[test]
    fn delay_layout_for_rate_four() {
        let s = spec(4, true);
        assert_eq!(write_region(&s, 0), SlotRange { first: 1, len: 4 });
        assert_eq!(write_region(&s, 2), SlotRange { first: 9, len: 4 });
        assert_eq!(write_region(&s, 2).last(), 12);
        assert_eq!(read_region(&s, 0), SlotRange { first: 0, len: 4 });
        assert_eq!(read_region(&s, 2), SlotRange { first: 8, len: 4 });
        assert_eq!(
            write_region(&spec(1, true), 1),
            SlotRange { first: 2, len: 1 }
        );
        assert_eq!(
            read_region(&spec(1, true), 0),
            SlotRange { first: 0, len: 1 }
        );
    }

    #[test]
    fn regular_layout_alternates_halves() {
        let s = spec(3, false);
        assert_eq!(write_region(&s, 0), SlotRange { first: 0, len: 3 });
        assert_eq!(write_region(&s, 1), SlotRange { first: 3, len: 3 });
        assert_eq!(write_region(&s, 2), write_region(&s, 0));
        assert_eq!(read_region(&s, 1), write_region(&s, 1));
    }

    #[test]
    fn empty_regular_channel_writes_slot_zero() {
        let (mut tx, rx) = channel(spec(1, false));
        let h = tx.write_start(1).unwrap();
        assert_eq!(h.first_slot, 0);
        assert_eq!(rx.probe().tokens_available(), 0);
        tx.write_end(h).unwrap();
        assert_eq!(rx.probe().tokens_available(), 1);
    }

    #[test]
    fn rate_and_outstanding_errors() {
        let (mut tx, mut rx) = channel(spec(2, false));
        assert!(matches!(
            tx.write_start(1),
            Err(ChannelError::RateMismatch { .. })
        ));
        let h = tx.write_start(2).unwrap();
        assert!(matches!(
            tx.write_start(2),
            Err(ChannelError::AlreadyOutstanding {
                access: Access::Write,
                ..
            })
        ));
        tx.write_end(h).unwrap();
        assert!(matches!(
            tx.write_end(h),
            Err(ChannelError::NotOutstanding {
                access: Access::Write,
                ..
            })
        ));

        assert!(matches!(
            rx.read_start(3),
            Err(ChannelError::RateMismatch { .. })
        ));
        let h = rx.read_start(2).unwrap().unwrap();
        assert!(matches!(
            rx.read_start(2),
            Err(ChannelError::AlreadyOutstanding {
                access: Access::Read,
                ..
            })
        ));
        rx.read_end(h).unwrap();
        assert!(matches!(
            rx.read_end(h),
            Err(ChannelError::NotOutstanding {
                access: Access::Read,
                ..
            })
        ));
        assert!(rx.region(&h).is_err());
    }

    #[test]
    fn delay_token_alone_satisfies_rate_one() {
        let init = ChannelSpec::new("d", 2, 1).with_initial_token(vec![7, 9]);
        let (_tx, mut rx) = channel(init);
        let h = rx.read_start(1).unwrap().unwrap();
        assert_eq!(h.first_slot, 0);
        assert_eq!(rx.region(&h).unwrap(), &[7, 9]);
        rx.read_end(h).unwrap();
    }

    #[test]
    fn copy_back_after_third_write() {
        let s = ChannelSpec::new("d", 1, 4).with_delay();
        let (mut tx, mut rx) = channel(s);
        let mut next = 1u8;
        for _ in 0..3 {
            tx.write(&[next, next + 1, next + 2, next + 3]).unwrap();
            next += 4;
            rx.read().unwrap().unwrap();
        }
        // token 12 (value 12) was written to slot 12 and copied to slot 0.
        tx.write(&[13, 14, 15, 16]).unwrap();
        let h = rx.read_start(4).unwrap().unwrap();
        assert_eq!(h.first_slot, 0);
        assert_eq!(rx.region(&h).unwrap(), &[12, 13, 14, 15]);
    }

    #[test]
    fn end_of_stream_drains_before_none() {
        let (mut tx, mut rx) = channel(spec(1, false));
        tx.write(&[5]).unwrap();
        tx.close();
        assert!(matches!(tx.write_start(1), Err(ChannelError::Closed(_))));
        assert_eq!(rx.read().unwrap(), Some(vec![5]));
        assert_eq!(rx.read().unwrap(), None);
    }

    #[test]
    fn writer_blocks_until_reader_releases() {
        let (mut tx, mut rx) = channel(spec(1, false));
        tx.write(&[1]).unwrap();
        tx.write(&[2]).unwrap();
        let resumed = Arc::new(AtomicBool::new(false));
        let flag = resumed.clone();
        let t = thread::spawn(move || {
            tx.write(&[3]).unwrap();
            flag.store(true, Ordering::SeqCst);
            tx
        });
        thread::sleep(Duration::from_millis(50));
        assert!(!resumed.load(Ordering::SeqCst));
        assert_eq!(rx.read().unwrap(), Some(vec![1]));
        let _tx = t.join().unwrap();
        assert!(resumed.load(Ordering::SeqCst));
        assert_eq!(rx.read().unwrap(), Some(vec![2]));
        assert_eq!(rx.read().unwrap(), Some(vec![3]));
    }

    #[test]
    fn blocked_writer_fails_when_reader_drops() {
        let (mut tx, rx) = channel(spec(1, false));
        tx.write(&[1]).unwrap();
        tx.write(&[2]).unwrap();
        let t = thread::spawn(move || tx.write(&[3]));
        thread::sleep(Duration::from_millis(20));
        drop(rx);
        assert!(matches!(
            t.join().unwrap(),
            Err(ChannelError::Disconnected(_))
        ));
    }

    #[test]
    fn memory_of_single_channel() {
        use crate::model::{build_network, ActorError, ActorSpec, PortSpec};
        use crate::runtime::Firing;
        struct Nop;
        impl crate::model::Actor for Nop {
            fn fire(&mut self, _io: &mut Firing<'_>) -> Result<(), ActorError> {
                Ok(())
            }
        }
        let net = build_network(
            vec![
                ActorSpec::new_static("a", vec![PortSpec::output("c")], Nop),
                ActorSpec::new_static("b", vec![PortSpec::input("c")], Nop),
            ],
            vec![ChannelSpec::new("c", 76800, 1)],
        )
        .unwrap();
        let rep = memory_bytes(&net);
        assert_eq!(rep.total_bytes, 153_600);
        assert_eq!(rep.channels[0].capacity_tokens, 2);
    }
}
