//! Network execution: one OS thread per actor, blocking channel I/O, and
//! drain-then-stop shutdown.
//!
//! Each actor thread runs `init`, waits for every other actor to finish its
//! own `init`, and then fires until its inputs reach end of stream (or, for
//! sources, until the firing limit). A firing reads the control token first
//! when the actor is dynamic, then acquires every active input and output
//! region, calls `fire`, and finally releases inputs and commits outputs.
//! When an actor stops it closes its outputs, which lets downstream actors
//! drain what is left and stop in turn, and then runs `finish`.

mod firing;
mod kernel;

pub use firing::Firing;
pub use kernel::{bulk_kernel_adapter, token_wise, BulkKernel, KernelActor, TokenWise};

use std::collections::BTreeMap;
use std::sync::Barrier;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use thiserror::Error;

use crate::channel::{channel, ChannelError, ChannelProbe, Consumer, Producer};
use crate::model::{
    control_dispatch, validate, Actor, ActorKind, ActorSpec, Direction, DispatchError, FiringRates,
    ModelError, NetworkGraph, PortKind, Violation,
};

/// Actor-to-core placement policy.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Mapping {
    /// The OS scheduler places every actor.
    #[default]
    Free,
    /// Actors named in the table are pinned to the given core. Others use
    /// their `mapping_hint`, or float when they have none.
    Fixed(BTreeMap<String, usize>),
}

#[derive(Debug, Clone)]
pub struct ExecutionConfig {
    pub mapping: Mapping,
    /// Number of firings after which each source actor stops.
    pub source_firing_limit: Option<u64>,
    pub stats_enabled: bool,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            mapping: Mapping::Free,
            source_firing_limit: None,
            stats_enabled: true,
        }
    }
}

impl ExecutionConfig {
    pub fn with_limit(limit: u64) -> Self {
        Self {
            source_firing_limit: Some(limit),
            ..Self::default()
        }
    }

    /// Requests that `actor` run on `core`, switching to fixed mapping.
    pub fn pin(&mut self, actor: impl Into<String>, core: usize) -> &mut Self {
        if let Mapping::Free = self.mapping {
            self.mapping = Mapping::Fixed(BTreeMap::new());
        }
        if let Mapping::Fixed(table) = &mut self.mapping {
            table.insert(actor.into(), core);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init,
    Control,
    Fire,
    Finish,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("network is not valid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Config(#[from] ModelError),
    #[error("actor `{actor}` failed in {stage:?}: {message}")]
    ActorFault {
        actor: String,
        stage: Stage,
        message: String,
    },
    #[error("actor `{actor}`: {source}")]
    Dispatch {
        actor: String,
        source: DispatchError,
    },
    #[error("actor `{actor}`: {source}")]
    Channel { actor: String, source: ChannelError },
    #[error("actor `{0}` thread panicked")]
    Panicked(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActorStats {
    pub id: String,
    pub firings: u64,
    /// Core the actor was pinned to, if pinning took effect.
    pub core: Option<usize>,
    /// Offset from run start of the first firing's start.
    pub first_firing: Option<Duration>,
    /// Offset from run start of the last firing's end.
    pub last_firing: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelCounters {
    pub id: String,
    pub committed: u64,
    pub released: u64,
    /// Tokens left unread at exit, including an unread delay token.
    pub remaining: usize,
}

#[derive(Debug, Clone)]
pub struct RunStats {
    pub actors: Vec<ActorStats>,
    pub channels: Vec<ChannelCounters>,
    pub wall: Duration,
}

impl RunStats {
    pub fn actor(&self, id: &str) -> Option<&ActorStats> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn firings(&self, id: &str) -> Option<u64> {
        self.actor(id).map(|a| a.firings)
    }

    /// Steady-state throughput of `actor` in `units_per_firing` per second,
    /// measured from the start of its first firing to the end of its last.
    pub fn throughput(&self, actor: &str, units_per_firing: f64) -> Option<f64> {
        let a = self.actor(actor)?;
        let span = a.last_firing?.checked_sub(a.first_firing?)?;
        if span.is_zero() {
            return None;
        }
        Some(a.firings as f64 * units_per_firing / span.as_secs_f64())
    }
}

/// Endpoints of one actor, split by role.
struct Ports {
    control: Option<Consumer>,
    inputs: Vec<Consumer>,
    outputs: Vec<Producer>,
    declared: Vec<usize>,
}

struct Outcome {
    firings: u64,
    first: Option<Instant>,
    last: Option<Instant>,
    core: Option<usize>,
    result: Result<(), RunError>,
}

/// Executes a network until every actor has stopped.
pub fn run(net: NetworkGraph, cfg: &ExecutionConfig) -> Result<RunStats, RunError> {
    let violations = validate(&net);
    if !violations.is_empty() {
        return Err(RunError::Invalid(violations));
    }
    if let Mapping::Fixed(table) = &cfg.mapping {
        for id in table.keys() {
            if net.actor(id).is_none() {
                return Err(ModelError::UnknownActor(id.clone()).into());
            }
        }
    }
    for c in net.dynamic_channels() {
        if c.token_rate != 1 {
            warn!(
                "channel `{}` is on a dynamic path with token rate {}; the network may deadlock",
                c.id, c.token_rate
            );
        }
    }

    let declared: Vec<Vec<usize>> = net
        .actors()
        .iter()
        .map(|a| net.regular_port_rates(a))
        .collect();
    let (actors, channels, wiring) = net.into_parts();

    let mut slots: Vec<Vec<Option<Endpoint>>> = actors
        .iter()
        .map(|a| (0..a.ports.len()).map(|_| None).collect())
        .collect();
    let mut probes: Vec<ChannelProbe> = Vec::with_capacity(channels.len());
    for spec in channels {
        let ends = wiring[&spec.id];
        let (tx, rx) = channel(spec);
        probes.push(tx.probe());
        slots[ends.writer.actor][ends.writer.port] = Some(Endpoint::Out(tx));
        slots[ends.reader.actor][ends.reader.port] = Some(Endpoint::In(rx));
    }

    let available_cores = core_affinity::get_core_ids().unwrap_or_default();
    let placements: Vec<Option<usize>> = actors
        .iter()
        .map(|a| {
            let wanted = match &cfg.mapping {
                Mapping::Free => None,
                Mapping::Fixed(table) => table.get(&a.id).copied().or(a.mapping_hint),
            }?;
            if available_cores.iter().any(|c| c.id == wanted) {
                Some(wanted)
            } else {
                warn!(
                    "actor `{}`: core {wanted} is not available ({} cores); using free mapping",
                    a.id,
                    available_cores.len()
                );
                None
            }
        })
        .collect();

    let barrier = Barrier::new(actors.len());
    let start = Instant::now();
    let ids: Vec<String> = actors.iter().map(|a| a.id.clone()).collect();

    let outcomes: Vec<Outcome> = thread::scope(|scope| {
        let handles: Vec<_> = actors
            .into_iter()
            .zip(slots)
            .zip(declared)
            .zip(placements)
            .map(|(((actor, endpoints), declared), core)| {
                let ports = split_ports(&actor, endpoints, declared);
                let barrier = &barrier;
                thread::Builder::new()
                    .name(actor.id.clone())
                    .spawn_scoped(scope, move || actor_main(actor, ports, core, cfg, barrier))
                    .expect("spawn actor thread")
            })
            .collect();
        handles
            .into_iter()
            .zip(&ids)
            .map(|(h, id)| {
                h.join().unwrap_or_else(|_| Outcome {
                    firings: 0,
                    first: None,
                    last: None,
                    core: None,
                    result: Err(RunError::Panicked(id.clone())),
                })
            })
            .collect()
    });
    let wall = start.elapsed();

    let mut stats = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    for (id, o) in ids.into_iter().zip(outcomes) {
        if let Err(e) = o.result {
            first_error.get_or_insert(e);
        }
        stats.push(ActorStats {
            id,
            firings: o.firings,
            core: o.core,
            first_firing: o.first.map(|t| t.duration_since(start)),
            last_firing: o.last.map(|t| t.duration_since(start)),
        });
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    let channels = probes
        .iter()
        .map(|p| ChannelCounters {
            id: p.spec().id.clone(),
            committed: p.committed(),
            released: p.released(),
            remaining: p.tokens_available(),
        })
        .collect();
    Ok(RunStats {
        actors: stats,
        channels,
        wall,
    })
}

enum Endpoint {
    In(Consumer),
    Out(Producer),
}

fn split_ports(actor: &ActorSpec, endpoints: Vec<Option<Endpoint>>, declared: Vec<usize>) -> Ports {
    let mut control = None;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (spec, end) in actor.ports.iter().zip(endpoints) {
        match (spec.kind, spec.direction, end.expect("every port is wired")) {
            (PortKind::Control, _, Endpoint::In(c)) => control = Some(c),
            (PortKind::Regular, Direction::Input, Endpoint::In(c)) => inputs.push(c),
            (PortKind::Regular, Direction::Output, Endpoint::Out(p)) => outputs.push(p),
            _ => unreachable!("endpoint direction matches port direction"),
        }
    }
    Ports {
        control,
        inputs,
        outputs,
        declared,
    }
}

fn actor_main(
    mut actor: ActorSpec,
    ports: Ports,
    core: Option<usize>,
    cfg: &ExecutionConfig,
    barrier: &Barrier,
) -> Outcome {
    let mut core = core;
    if let Some(id) = core {
        if !core_affinity::set_for_current(core_affinity::CoreId { id }) {
            warn!(
                "actor `{}`: pinning to core {id} failed; running unpinned",
                actor.id
            );
            core = None;
        }
    }
    let fault = |stage, e: crate::model::ActorError| RunError::ActorFault {
        actor: actor.id.clone(),
        stage,
        message: e.0,
    };

    let init = actor.behavior.init();
    barrier.wait();
    let mut outcome = Outcome {
        firings: 0,
        first: None,
        last: None,
        core,
        result: Ok(()),
    };
    if let Err(e) = init {
        outcome.result = Err(fault(Stage::Init, e));
        return outcome;
    }

    let limit = if actor.is_source() {
        cfg.source_firing_limit
    } else {
        None
    };
    let dynamic = actor.kind == ActorKind::Dynamic;
    let result = firing_loop(
        actor.behavior.as_mut(),
        &actor.id,
        ports,
        dynamic,
        limit,
        cfg.stats_enabled,
        &mut outcome,
    );
    // Ports were dropped by `firing_loop`: outputs are closed, inputs released.
    debug!(
        "actor `{}` stopped after {} firings",
        actor.id, outcome.firings
    );
    let finish = actor.behavior.finish().map_err(|e| fault(Stage::Finish, e));
    outcome.result = result.and(finish);
    outcome
}

fn firing_loop(
    behavior: &mut dyn Actor,
    id: &str,
    mut ports: Ports,
    dynamic: bool,
    limit: Option<u64>,
    timed: bool,
    outcome: &mut Outcome,
) -> Result<(), RunError> {
    let chan = |source| RunError::Channel {
        actor: id.to_owned(),
        source,
    };
    let static_rates = FiringRates::all(&ports.declared);
    let n_in = ports.inputs.len();

    loop {
        if limit.is_some_and(|l| outcome.firings >= l) {
            return Ok(());
        }

        let dispatched;
        let rates = if dynamic {
            let ctl = ports
                .control
                .as_mut()
                .expect("dynamic actor has a control port");
            let Some(h) = ctl.read_start(1).map_err(chan)? else {
                return Ok(());
            };
            let token = ctl.region(&h).map_err(chan)?;
            dispatched =
                control_dispatch(behavior, &ports.declared, token).map_err(|e| match e {
                    DispatchError::Fault(err) => RunError::ActorFault {
                        actor: id.to_owned(),
                        stage: Stage::Control,
                        message: err.0,
                    },
                    other => RunError::Dispatch {
                        actor: id.to_owned(),
                        source: other,
                    },
                })?;
            ctl.read_end(h).map_err(chan)?;
            &dispatched
        } else {
            &static_rates
        };

        let started = timed.then(Instant::now);

        let mut in_handles = Vec::with_capacity(n_in);
        for (i, c) in ports.inputs.iter_mut().enumerate() {
            let rate = rates.rate(i);
            if rate == 0 {
                in_handles.push(None);
                continue;
            }
            match c.read_start(rate).map_err(chan)? {
                Some(h) => in_handles.push(Some(h)),
                None => return Ok(()),
            }
        }
        let mut out_handles = Vec::with_capacity(ports.outputs.len());
        for (j, p) in ports.outputs.iter_mut().enumerate() {
            let rate = rates.rate(n_in + j);
            if rate == 0 {
                out_handles.push(None);
                continue;
            }
            match p.write_start(rate) {
                Ok(h) => out_handles.push(Some(h)),
                // Downstream has stopped; nothing more can be delivered.
                Err(ChannelError::Disconnected(_)) => return Ok(()),
                Err(e) => return Err(chan(e)),
            }
        }

        let stop = {
            let inputs = ports
                .inputs
                .iter()
                .zip(&in_handles)
                .map(|(c, h)| h.as_ref().map(|h| c.region(h)).transpose())
                .collect::<Result<Vec<_>, _>>()
                .map_err(chan)?;
            let outputs = ports
                .outputs
                .iter_mut()
                .zip(&out_handles)
                .map(|(p, h)| h.as_ref().map(|h| p.region_mut(h)).transpose())
                .collect::<Result<Vec<_>, _>>()
                .map_err(chan)?;
            let mut io = Firing::new(inputs, outputs, outcome.firings);
            behavior.fire(&mut io).map_err(|e| RunError::ActorFault {
                actor: id.to_owned(),
                stage: Stage::Fire,
                message: e.0,
            })?;
            io.stop_requested()
        };

        for (c, h) in ports.inputs.iter_mut().zip(in_handles) {
            if let Some(h) = h {
                c.read_end(h).map_err(chan)?;
            }
        }
        for (p, h) in ports.outputs.iter_mut().zip(out_handles) {
            if let Some(h) = h {
                p.write_end(h).map_err(chan)?;
            }
        }

        outcome.firings += 1;
        if let Some(t) = started {
            outcome.first.get_or_insert(t);
            outcome.last = Some(Instant::now());
        }
        if stop {
            return Ok(());
        }
    }
}
