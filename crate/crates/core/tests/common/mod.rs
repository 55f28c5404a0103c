#![allow(dead_code)]

use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use dynflow::build_network;
use dynflow::channel::{channel, phase_count, read_region, write_region, RegionHandle};
use dynflow::model::{Actor, ActorError, ActorSpec, ChannelSpec, NetworkGraph, PortSpec};
use dynflow::runtime::Firing;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Runs `f` on its own thread; `None` if it does not finish within `limit`.
pub fn watchdog<T: Send + 'static>(
    limit: Duration,
    f: impl FnOnce() -> T + Send + 'static,
) -> Option<T> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let _ = tx.send(f());
    });
    rx.recv_timeout(limit).ok()
}

/// Outcome of pushing a random stream through one channel.
#[derive(Debug)]
pub struct StreamCheck {
    pub written: usize,
    pub read: usize,
    /// Read stream equals initial token followed by the written stream.
    pub equal: bool,
    /// Every region had `r` tokens at the slots the layout prescribes.
    pub layout_ok: bool,
}

fn random_token(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    (0..size).map(|_| rng.gen()).collect()
}

/// Writes `writes` random r-token blocks from one thread and reads from
/// another, both stalling at random.
pub fn pump(spec: ChannelSpec, writes: usize, seed: u64, stalls: bool) -> StreamCheck {
    let r = spec.token_rate;
    let size = spec.token_size;
    let initial = spec.initial_token_bytes();
    let has_delay = spec.has_delay;
    let phases = phase_count(&spec);
    let wspec = spec.clone();
    let rspec = spec.clone();
    let (mut tx, mut rx) = channel(spec);

    let writer = thread::spawn(move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stall = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut ok = true;
        for w in 0..writes {
            let h = tx.write_start(r).expect("write_start");
            ok &= h.slots() == write_region(&wspec, w % phases) && h.length == r;
            let region = tx.region_mut(&h).unwrap();
            for t in 0..r {
                region[t * size..(t + 1) * size].copy_from_slice(&random_token(&mut rng, size));
            }
            if stalls && stall.gen_ratio(1, 64) {
                thread::sleep(Duration::from_micros(stall.gen_range(0..50)));
            }
            tx.write_end(h).unwrap();
        }
        ok
    });

    let mut expected = ChaCha8Rng::seed_from_u64(seed);
    let mut stall = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    let mut equal = true;
    let mut layout_ok = true;
    let mut read = 0usize;
    let mut first = has_delay;
    let mut q = 0;
    while let Some(h) = rx.read_start(r).expect("read_start") {
        layout_ok &= h.slots() == read_region(&rspec, q % phases) && h.length == r;
        let region = rx.region(&h).unwrap();
        for t in 0..r {
            let want = if first {
                first = false;
                initial.clone()
            } else {
                random_token(&mut expected, size)
            };
            equal &= region[t * size..(t + 1) * size] == want[..];
        }
        if stalls && stall.gen_ratio(1, 64) {
            thread::yield_now();
        }
        rx.read_end(h).unwrap();
        read += r;
        q += 1;
    }
    layout_ok &= writer.join().unwrap();
    let total = writes * r + usize::from(has_delay);
    equal &= read == total / r * r;
    StreamCheck {
        written: writes * r,
        read,
        equal,
        layout_ok,
    }
}

/// Slots of a handle, for comparing against the layout.
pub fn span(h: &RegionHandle) -> (usize, usize) {
    (h.first_slot, h.first_slot + h.length - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Init,
    Fire,
    Finish,
}

pub type Log = Arc<Mutex<Vec<(String, Event)>>>;

/// Pass-through actor that logs its lifecycle.
pub struct Recorder {
    pub id: String,
    pub log: Log,
}

impl Recorder {
    fn note(&self, e: Event) {
        self.log.lock().unwrap().push((self.id.clone(), e));
    }
}

impl Actor for Recorder {
    fn init(&mut self) -> Result<(), ActorError> {
        self.note(Event::Init);
        Ok(())
    }

    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError> {
        self.note(Event::Fire);
        let index = io.index() as u8;
        let (ins, outs) = io.ports();
        if let (Some(Some(i)), Some(Some(o))) = (ins.first(), outs.first_mut()) {
            o.copy_from_slice(i);
        } else if let Some(Some(o)) = outs.first_mut() {
            o.fill(index);
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), ActorError> {
        self.note(Event::Finish);
        Ok(())
    }
}

/// source -> a1 -> ... -> a{n-2} -> sink, all logging into one log.
pub fn recorded_pipeline(n: usize, rate: usize, log: &Log) -> NetworkGraph {
    assert!(n >= 2);
    let mut actors = Vec::new();
    let mut channels = Vec::new();
    for i in 0..n {
        let mut ports = Vec::new();
        if i > 0 {
            ports.push(PortSpec::input(format!("c{}", i - 1)));
        }
        if i + 1 < n {
            ports.push(PortSpec::output(format!("c{i}")));
            channels.push(ChannelSpec::new(format!("c{i}"), 4, rate));
        }
        let id = format!("a{i}");
        actors.push(ActorSpec::new_static(
            id.clone(),
            ports,
            Recorder {
                id,
                log: log.clone(),
            },
        ));
    }
    build_network(actors, channels).unwrap()
}

/// Checks the lifecycle order for every actor in `ids`. Returns a
/// description of the first problem.
pub fn check_lifecycle(
    log: &[(String, Event)],
    ids: &[String],
    firings: usize,
) -> Result<(), String> {
    let last_init = log.iter().rposition(|(_, e)| *e == Event::Init);
    let first_fire = log.iter().position(|(_, e)| *e == Event::Fire);
    if let (Some(i), Some(f)) = (last_init, first_fire) {
        if i > f {
            return Err("an init ran after some actor fired".into());
        }
    }
    for id in ids {
        let events: Vec<Event> = log
            .iter()
            .filter(|(a, _)| a == id)
            .map(|(_, e)| *e)
            .collect();
        let inits = events.iter().filter(|e| **e == Event::Init).count();
        let finishes = events.iter().filter(|e| **e == Event::Finish).count();
        let fires = events.iter().filter(|e| **e == Event::Fire).count();
        if inits != 1 || finishes != 1 {
            return Err(format!("{id}: {inits} inits, {finishes} finishes"));
        }
        if events.first() != Some(&Event::Init) || events.last() != Some(&Event::Finish) {
            return Err(format!("{id}: init/finish do not bracket firings"));
        }
        if fires != firings {
            return Err(format!("{id}: {fires} firings, expected {firings}"));
        }
    }
    Ok(())
}

pub fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}
