//! Actor networks: ports, channels, actors, firing rates and the structural
//! rules a network must satisfy before it can be executed.
//!
//! A network is a set of actors connected by FIFO channels. Every channel
//! joins exactly one output port to exactly one input port and carries tokens
//! of a fixed byte size at a fixed token rate `r`. Static actors transfer `r`
//! tokens on every port per firing. Dynamic actors own one control port
//! (rate 1); the value of each control token decides, for that firing only,
//! whether every regular port transfers `0` or `r` tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::runtime::Firing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortKind {
    Regular,
    Control,
}

/// One port of an actor and the channel attached to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSpec {
    pub direction: Direction,
    pub kind: PortKind,
    pub channel: String,
}

impl PortSpec {
    pub fn input(channel: impl Into<String>) -> Self {
        Self {
            direction: Direction::Input,
            kind: PortKind::Regular,
            channel: channel.into(),
        }
    }

    pub fn output(channel: impl Into<String>) -> Self {
        Self {
            direction: Direction::Output,
            kind: PortKind::Regular,
            channel: channel.into(),
        }
    }

    pub fn control(channel: impl Into<String>) -> Self {
        Self {
            direction: Direction::Input,
            kind: PortKind::Control,
            channel: channel.into(),
        }
    }

    pub fn is_control(&self) -> bool {
        self.kind == PortKind::Control
    }
}

/// Static description of a FIFO channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSpec {
    pub id: String,
    /// Bytes per token.
    pub token_size: usize,
    /// Tokens transferred per read or write.
    pub token_rate: usize,
    /// Whether the channel starts with one initial (delay) token.
    pub has_delay: bool,
    /// Payload of the initial token; all-zero when `None`.
    pub initial_token: Option<Vec<u8>>,
}

impl ChannelSpec {
    pub fn new(id: impl Into<String>, token_size: usize, token_rate: usize) -> Self {
        Self {
            id: id.into(),
            token_size,
            token_rate,
            has_delay: false,
            initial_token: None,
        }
    }

    pub fn with_delay(mut self) -> Self {
        self.has_delay = true;
        self
    }

    pub fn with_initial_token(mut self, payload: Vec<u8>) -> Self {
        self.has_delay = true;
        self.initial_token = Some(payload);
        self
    }

    /// The initial token payload, zero-filled unless one was given.
    pub fn initial_token_bytes(&self) -> Vec<u8> {
        self.initial_token
            .clone()
            .unwrap_or_else(|| vec![0; self.token_size])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActorKind {
    Static,
    Dynamic,
}

/// Failure raised by actor code. Aborts the run.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct ActorError(pub String);

impl ActorError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl From<String> for ActorError {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&str> for ActorError {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Behavior of an actor.
///
/// `fire` is mandatory. `init` runs once before the first firing and
/// `finish` once after the last. Dynamic actors must override both
/// `has_control` and `control`; `control` receives the raw control token and
/// the declared token rate of every regular port (inputs first, then
/// outputs, each in declaration order) and returns the rates for the coming
/// firing. It must not touch channels.
pub trait Actor: Send {
    fn init(&mut self) -> Result<(), ActorError> {
        Ok(())
    }

    fn has_control(&self) -> bool {
        false
    }

    fn control(&mut self, _token: &[u8], _declared: &[usize]) -> Result<FiringRates, ActorError> {
        Err(ActorError::new("actor has no control function"))
    }

    fn fire(&mut self, io: &mut Firing<'_>) -> Result<(), ActorError>;

    fn finish(&mut self) -> Result<(), ActorError> {
        Ok(())
    }
}

/// Per-firing token rate of every regular port, ordered inputs first and
/// then outputs, each group in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringRates(Vec<usize>);

impl FiringRates {
    pub fn new(rates: Vec<usize>) -> Self {
        Self(rates)
    }

    /// Every port at its declared rate.
    pub fn all(declared: &[usize]) -> Self {
        Self(declared.to_vec())
    }

    /// Every port idle.
    pub fn none(declared: &[usize]) -> Self {
        Self(vec![0; declared.len()])
    }

    /// Port `i` active iff `active(i)`.
    pub fn select(declared: &[usize], mut active: impl FnMut(usize) -> bool) -> Self {
        Self(
            declared
                .iter()
                .enumerate()
                .map(|(i, &r)| if active(i) { r } else { 0 })
                .collect(),
        )
    }

    pub fn rate(&self, port: usize) -> usize {
        self.0[port]
    }

    pub fn is_active(&self, port: usize) -> bool {
        self.0[port] != 0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// An actor instance in a network.
pub struct ActorSpec {
    pub id: String,
    pub kind: ActorKind,
    pub ports: Vec<PortSpec>,
    pub behavior: Box<dyn Actor>,
    /// Core the actor should be pinned to, if any.
    pub mapping_hint: Option<usize>,
}

impl ActorSpec {
    pub fn new(
        id: impl Into<String>,
        kind: ActorKind,
        ports: Vec<PortSpec>,
        behavior: impl Actor + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            ports,
            behavior: Box::new(behavior),
            mapping_hint: None,
        }
    }

    pub fn new_static(
        id: impl Into<String>,
        ports: Vec<PortSpec>,
        behavior: impl Actor + 'static,
    ) -> Self {
        Self::new(id, ActorKind::Static, ports, behavior)
    }

    pub fn new_dynamic(
        id: impl Into<String>,
        ports: Vec<PortSpec>,
        behavior: impl Actor + 'static,
    ) -> Self {
        Self::new(id, ActorKind::Dynamic, ports, behavior)
    }

    pub fn pinned(mut self, core: usize) -> Self {
        self.mapping_hint = Some(core);
        self
    }

    pub fn is_source(&self) -> bool {
        !self.ports.iter().any(|p| p.direction == Direction::Input)
    }

    pub fn is_sink(&self) -> bool {
        !self.ports.iter().any(|p| p.direction == Direction::Output)
    }

    /// Regular ports in rate order: inputs first, then outputs.
    pub fn regular_ports(&self) -> impl Iterator<Item = &PortSpec> {
        let inputs = self
            .ports
            .iter()
            .filter(|p| p.kind == PortKind::Regular && p.direction == Direction::Input);
        let outputs = self
            .ports
            .iter()
            .filter(|p| p.kind == PortKind::Regular && p.direction == Direction::Output);
        inputs.chain(outputs)
    }

    pub fn control_ports(&self) -> impl Iterator<Item = &PortSpec> {
        self.ports.iter().filter(|p| p.is_control())
    }
}

impl fmt::Debug for ActorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActorSpec")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("ports", &self.ports)
            .field("mapping_hint", &self.mapping_hint)
            .finish_non_exhaustive()
    }
}

/// Position of a port: actor index and port index within that actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortRef {
    pub actor: usize,
    pub port: usize,
}

/// Writer and reader of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoints {
    pub writer: PortRef,
    pub reader: PortRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate actor id `{0}`")]
    DuplicateActor(String),
    #[error("duplicate channel id `{0}`")]
    DuplicateChannel(String),
    #[error("actor `{actor}` references unknown channel `{channel}`")]
    DanglingChannel { actor: String, channel: String },
    #[error("channel `{channel}` has more than one {end:?} endpoint")]
    MultipleEndpoints { channel: String, end: Direction },
    #[error("channel `{channel}` has no {end:?} endpoint")]
    MissingEndpoint { channel: String, end: Direction },
    #[error("actor `{actor}` declares a control port that is not an input")]
    ControlPortNotInput { actor: String },
    #[error("channel `{channel}`: {reason}")]
    InvalidChannel { channel: String, reason: String },
    #[error("unknown actor `{0}`")]
    UnknownActor(String),
}

/// A rule broken by a built network.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    ControlRateNotOne {
        actor: String,
        channel: String,
        rate: usize,
    },
    DelayOnControl {
        actor: String,
        channel: String,
    },
    MissingControlFunction {
        actor: String,
    },
    UnexpectedControlFunction {
        actor: String,
    },
    ControlPortOnStatic {
        actor: String,
    },
    ControlPortCount {
        actor: String,
        count: usize,
    },
    UndelayedCycle {
        channels: Vec<String>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ControlRateNotOne {
                actor,
                channel,
                rate,
            } => write!(
                f,
                "actor `{actor}`: control rate must be 1 (channel `{channel}` has rate {rate})"
            ),
            Violation::DelayOnControl { actor, channel } => write!(
                f,
                "actor `{actor}`: control channel `{channel}` must not carry a delay token"
            ),
            Violation::MissingControlFunction { actor } => {
                write!(f, "actor `{actor}`: dynamic actor without control function")
            }
            Violation::UnexpectedControlFunction { actor } => {
                write!(
                    f,
                    "actor `{actor}`: static actor provides a control function"
                )
            }
            Violation::ControlPortOnStatic { actor } => {
                write!(f, "actor `{actor}`: static actor with control port")
            }
            Violation::ControlPortCount { actor, count } => write!(
                f,
                "actor `{actor}`: dynamic actor needs exactly one control port, found {count}"
            ),
            Violation::UndelayedCycle { channels } => {
                write!(
                    f,
                    "undelayed cycle through channels {}",
                    channels.join(", ")
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispatchError {
    #[error("actor is not dynamic")]
    NotDynamic,
    #[error("control function failed: {0}")]
    Fault(ActorError),
    #[error("firing rates cover {got} ports, actor has {expected} regular ports")]
    WrongLength { expected: usize, got: usize },
    #[error("port {port}: rate {rate} is neither 0 nor {declared}")]
    InvalidRate {
        port: usize,
        rate: usize,
        declared: usize,
    },
}

/// Actors, channels and the port-to-channel wiring between them.
#[derive(Debug)]
pub struct NetworkGraph {
    actors: Vec<ActorSpec>,
    channels: Vec<ChannelSpec>,
    wiring: BTreeMap<String, Endpoints>,
}

/// Assembles a network and checks that every reference resolves.
pub fn build_network(
    actors: Vec<ActorSpec>,
    channels: Vec<ChannelSpec>,
) -> Result<NetworkGraph, ModelError> {
    let mut seen = BTreeSet::new();
    for a in &actors {
        if !seen.insert(a.id.as_str()) {
            return Err(ModelError::DuplicateActor(a.id.clone()));
        }
    }
    let mut index = BTreeMap::new();
    for (i, c) in channels.iter().enumerate() {
        if index.insert(c.id.clone(), i).is_some() {
            return Err(ModelError::DuplicateChannel(c.id.clone()));
        }
        let invalid = |reason: &str| ModelError::InvalidChannel {
            channel: c.id.clone(),
            reason: reason.to_owned(),
        };
        if c.token_rate == 0 {
            return Err(invalid("token rate must be at least 1"));
        }
        if c.token_size == 0 {
            return Err(invalid("token size must be at least 1"));
        }
        if let Some(init) = &c.initial_token {
            if !c.has_delay {
                return Err(invalid("initial token payload without delay"));
            }
            if init.len() != c.token_size {
                return Err(invalid(
                    "initial token payload length differs from token size",
                ));
            }
        }
    }

    let mut writers: BTreeMap<&str, PortRef> = BTreeMap::new();
    let mut readers: BTreeMap<&str, PortRef> = BTreeMap::new();
    for (ai, a) in actors.iter().enumerate() {
        for (pi, p) in a.ports.iter().enumerate() {
            if p.is_control() && p.direction != Direction::Input {
                return Err(ModelError::ControlPortNotInput {
                    actor: a.id.clone(),
                });
            }
            if !index.contains_key(&p.channel) {
                return Err(ModelError::DanglingChannel {
                    actor: a.id.clone(),
                    channel: p.channel.clone(),
                });
            }
            let side = match p.direction {
                Direction::Output => &mut writers,
                Direction::Input => &mut readers,
            };
            let at = PortRef {
                actor: ai,
                port: pi,
            };
            if side.insert(p.channel.as_str(), at).is_some() {
                return Err(ModelError::MultipleEndpoints {
                    channel: p.channel.clone(),
                    end: p.direction,
                });
            }
        }
    }

    let mut wiring = BTreeMap::new();
    for c in &channels {
        let missing = |end| ModelError::MissingEndpoint {
            channel: c.id.clone(),
            end,
        };
        let writer = *writers
            .get(c.id.as_str())
            .ok_or_else(|| missing(Direction::Output))?;
        let reader = *readers
            .get(c.id.as_str())
            .ok_or_else(|| missing(Direction::Input))?;
        wiring.insert(c.id.clone(), Endpoints { writer, reader });
    }

    Ok(NetworkGraph {
        actors,
        channels,
        wiring,
    })
}

impl NetworkGraph {
    pub fn actors(&self) -> &[ActorSpec] {
        &self.actors
    }

    pub fn channels(&self) -> &[ChannelSpec] {
        &self.channels
    }

    pub fn wiring(&self) -> &BTreeMap<String, Endpoints> {
        &self.wiring
    }

    pub fn actor(&self, id: &str) -> Option<&ActorSpec> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn channel(&self, id: &str) -> Option<&ChannelSpec> {
        self.channels.iter().find(|c| c.id == id)
    }

    fn actor_index(&self, id: &str) -> Result<usize, ModelError> {
        self.actors
            .iter()
            .position(|a| a.id == id)
            .ok_or_else(|| ModelError::UnknownActor(id.to_owned()))
    }

    /// Declared token rates of an actor's regular ports, in rate order.
    pub fn regular_port_rates(&self, actor: &ActorSpec) -> Vec<usize> {
        actor
            .regular_ports()
            .map(|p| self.channel(&p.channel).map_or(0, |c| c.token_rate))
            .collect()
    }

    /// Requests that `actor_id` run on `core`.
    pub fn pin_actor(&mut self, actor_id: &str, core: usize) -> Result<(), ModelError> {
        let i = self.actor_index(actor_id)?;
        self.actors[i].mapping_hint = Some(core);
        Ok(())
    }

    /// Channels attached to a regular port of a dynamic actor.
    pub fn dynamic_channels(&self) -> Vec<&ChannelSpec> {
        let ids: BTreeSet<&str> = self
            .actors
            .iter()
            .filter(|a| a.kind == ActorKind::Dynamic)
            .flat_map(|a| a.regular_ports().map(|p| p.channel.as_str()))
            .collect();
        self.channels
            .iter()
            .filter(|c| ids.contains(c.id.as_str()))
            .collect()
    }

    /// Runs the named actor's control function on `token` and checks the
    /// result against the actor's ports.
    pub fn control_dispatch(
        &mut self,
        actor_id: &str,
        token: &[u8],
    ) -> Result<FiringRates, DispatchError> {
        let i = self
            .actor_index(actor_id)
            .map_err(|_| DispatchError::NotDynamic)?;
        if self.actors[i].kind != ActorKind::Dynamic {
            return Err(DispatchError::NotDynamic);
        }
        let declared = self.regular_port_rates(&self.actors[i]);
        control_dispatch(self.actors[i].behavior.as_mut(), &declared, token)
    }

    pub(crate) fn into_parts(
        self,
    ) -> (
        Vec<ActorSpec>,
        Vec<ChannelSpec>,
        BTreeMap<String, Endpoints>,
    ) {
        (self.actors, self.channels, self.wiring)
    }
}

/// Invokes `behavior.control` and checks that the returned rates cover every
/// regular port with either 0 or the port's declared rate.
pub fn control_dispatch(
    behavior: &mut dyn Actor,
    declared: &[usize],
    token: &[u8],
) -> Result<FiringRates, DispatchError> {
    if !behavior.has_control() {
        return Err(DispatchError::NotDynamic);
    }
    let rates = behavior
        .control(token, declared)
        .map_err(DispatchError::Fault)?;
    if rates.len() != declared.len() {
        return Err(DispatchError::WrongLength {
            expected: declared.len(),
            got: rates.len(),
        });
    }
    for (port, (&rate, &r)) in rates.as_slice().iter().zip(declared).enumerate() {
        if rate != 0 && rate != r {
            return Err(DispatchError::InvalidRate {
                port,
                rate,
                declared: r,
            });
        }
    }
    Ok(rates)
}

/// Lists every rule the network breaks. An empty list means the network may
/// be executed. The order is stable: actor rules by actor id, then cycles.
pub fn validate(net: &NetworkGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut actors: Vec<&ActorSpec> = net.actors.iter().collect();
    actors.sort_by(|a, b| a.id.cmp(&b.id));

    for a in actors {
        let controls: Vec<&PortSpec> = a.control_ports().collect();
        match a.kind {
            ActorKind::Static => {
                if !controls.is_empty() {
                    out.push(Violation::ControlPortOnStatic {
                        actor: a.id.clone(),
                    });
                }
                if a.behavior.has_control() {
                    out.push(Violation::UnexpectedControlFunction {
                        actor: a.id.clone(),
                    });
                }
            }
            ActorKind::Dynamic => {
                if controls.len() != 1 {
                    out.push(Violation::ControlPortCount {
                        actor: a.id.clone(),
                        count: controls.len(),
                    });
                }
                if !a.behavior.has_control() {
                    out.push(Violation::MissingControlFunction {
                        actor: a.id.clone(),
                    });
                }
            }
        }
        for p in controls {
            let Some(c) = net.channel(&p.channel) else {
                continue;
            };
            if c.token_rate != 1 {
                out.push(Violation::ControlRateNotOne {
                    actor: a.id.clone(),
                    channel: c.id.clone(),
                    rate: c.token_rate,
                });
            }
            if c.has_delay {
                out.push(Violation::DelayOnControl {
                    actor: a.id.clone(),
                    channel: c.id.clone(),
                });
            }
        }
    }

    out.extend(undelayed_cycles(net));
    out
}

fn undelayed_cycles(net: &NetworkGraph) -> Vec<Violation> {
    let mut g: DiGraph<usize, &str> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..net.actors.len()).map(|i| g.add_node(i)).collect();
    for c in net.channels.iter().filter(|c| !c.has_delay) {
        let ends = net.wiring[&c.id];
        g.add_edge(
            nodes[ends.writer.actor],
            nodes[ends.reader.actor],
            c.id.as_str(),
        );
    }

    let mut cycles = Vec::new();
    for scc in tarjan_scc(&g) {
        let members: BTreeSet<NodeIndex> = scc.iter().copied().collect();
        let mut channels: Vec<String> = g
            .edge_indices()
            .filter(|&e| {
                let (s, t) = g.edge_endpoints(e).expect("edge exists");
                members.contains(&s) && members.contains(&t)
            })
            .map(|e| g[e].to_owned())
            .collect();
        if channels.is_empty() {
            continue;
        }
        channels.sort();
        cycles.push(Violation::UndelayedCycle { channels });
    }
    cycles.sort();
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Nop;

    impl Actor for Nop {
        fn fire(&mut self, _io: &mut Firing<'_>) -> Result<(), ActorError> {
            Ok(())
        }
    }

    /// Dynamic actor whose control function returns a fixed rate vector.
    struct Fixed(Vec<usize>);

    impl Actor for Fixed {
        fn has_control(&self) -> bool {
            true
        }

        fn control(
            &mut self,
            _token: &[u8],
            _declared: &[usize],
        ) -> Result<FiringRates, ActorError> {
            Ok(FiringRates::new(self.0.clone()))
        }

        fn fire(&mut self, _io: &mut Firing<'_>) -> Result<(), ActorError> {
            Ok(())
        }
    }

    fn src_sink(rate: usize) -> Result<NetworkGraph, ModelError> {
        build_network(
            vec![
                ActorSpec::new_static("src", vec![PortSpec::output("c")], Nop),
                ActorSpec::new_static("sink", vec![PortSpec::input("c")], Nop),
            ],
            vec![ChannelSpec::new("c", 4, rate)],
        )
    }

    #[test]
    fn smallest_network_is_valid() {
        let net = src_sink(1).unwrap();
        assert_eq!(net.actors().len(), 2);
        assert!(net.actor("src").unwrap().is_source());
        assert!(net.actor("sink").unwrap().is_sink());
        assert!(validate(&net).is_empty());
    }

    #[test]
    fn dangling_and_unattached_channels_are_rejected() {
        let err = build_network(
            vec![ActorSpec::new_static(
                "src",
                vec![PortSpec::output("c")],
                Nop,
            )],
            vec![ChannelSpec::new("c", 1, 1)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            ModelError::MissingEndpoint {
                channel: "c".into(),
                end: Direction::Input
            }
        );

        let err = build_network(
            vec![ActorSpec::new_static(
                "src",
                vec![PortSpec::output("x")],
                Nop,
            )],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::DanglingChannel { .. }));
    }

    #[test]
    fn duplicate_ids_and_double_attachment_are_rejected() {
        let err = build_network(
            vec![
                ActorSpec::new_static("a", vec![PortSpec::output("c")], Nop),
                ActorSpec::new_static("a", vec![PortSpec::input("c")], Nop),
            ],
            vec![ChannelSpec::new("c", 1, 1)],
        )
        .unwrap_err();
        assert_eq!(err, ModelError::DuplicateActor("a".into()));

        let err = build_network(
            vec![
                ActorSpec::new_static("a", vec![PortSpec::output("c")], Nop),
                ActorSpec::new_static("b", vec![PortSpec::input("c")], Nop),
            ],
            vec![ChannelSpec::new("c", 1, 1), ChannelSpec::new("c", 1, 1)],
        )
        .unwrap_err();
        assert_eq!(err, ModelError::DuplicateChannel("c".into()));

        let err = build_network(
            vec![
                ActorSpec::new_static("a", vec![PortSpec::output("c"), PortSpec::output("c")], Nop),
                ActorSpec::new_static("b", vec![PortSpec::input("c")], Nop),
            ],
            vec![ChannelSpec::new("c", 1, 1)],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ModelError::MultipleEndpoints {
                end: Direction::Output,
                ..
            }
        ));
    }

    #[test]
    fn invalid_channel_parameters_are_rejected() {
        assert!(matches!(
            src_sink(0),
            Err(ModelError::InvalidChannel { .. })
        ));
        let err = build_network(
            vec![
                ActorSpec::new_static("a", vec![PortSpec::output("c")], Nop),
                ActorSpec::new_static("b", vec![PortSpec::input("c")], Nop),
            ],
            vec![ChannelSpec::new("c", 4, 1).with_initial_token(vec![1, 2])],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::InvalidChannel { .. }));
    }

    fn dynamic_net(ctrl: ChannelSpec, behavior: impl Actor + 'static) -> NetworkGraph {
        build_network(
            vec![
                ActorSpec::new_static("cfg", vec![PortSpec::output("ctl")], Nop),
                ActorSpec::new_static("src", vec![PortSpec::output("d")], Nop),
                ActorSpec::new_dynamic(
                    "dyn",
                    vec![PortSpec::control("ctl"), PortSpec::input("d")],
                    behavior,
                ),
            ],
            vec![ctrl, ChannelSpec::new("d", 8, 1)],
        )
        .unwrap()
    }

    #[test]
    fn control_channel_rules() {
        let net = dynamic_net(ChannelSpec::new("ctl", 1, 2), Fixed(vec![1]));
        let v = validate(&net);
        assert_eq!(
            v,
            vec![Violation::ControlRateNotOne {
                actor: "dyn".into(),
                channel: "ctl".into(),
                rate: 2
            }]
        );
        assert!(v[0].to_string().contains("control rate must be 1"));

        let net = dynamic_net(ChannelSpec::new("ctl", 1, 1).with_delay(), Fixed(vec![1]));
        assert_eq!(
            validate(&net),
            vec![Violation::DelayOnControl {
                actor: "dyn".into(),
                channel: "ctl".into()
            }]
        );

        let net = dynamic_net(ChannelSpec::new("ctl", 1, 1), Nop);
        assert_eq!(
            validate(&net),
            vec![Violation::MissingControlFunction {
                actor: "dyn".into()
            }]
        );
    }

    #[test]
    fn static_actor_with_control_port_is_flagged() {
        let net = build_network(
            vec![
                ActorSpec::new_static("cfg", vec![PortSpec::output("ctl")], Nop),
                ActorSpec::new_static("s", vec![PortSpec::control("ctl")], Nop),
            ],
            vec![ChannelSpec::new("ctl", 1, 1)],
        )
        .unwrap();
        assert_eq!(
            validate(&net),
            vec![Violation::ControlPortOnStatic { actor: "s".into() }]
        );
    }

    #[test]
    fn undelayed_cycle_is_flagged_and_delayed_cycle_is_not() {
        let cycle = |delay: bool| {
            let back = ChannelSpec::new("ba", 1, 1);
            build_network(
                vec![
                    ActorSpec::new_static(
                        "a",
                        vec![PortSpec::input("ba"), PortSpec::output("ab")],
                        Nop,
                    ),
                    ActorSpec::new_static(
                        "b",
                        vec![PortSpec::input("ab"), PortSpec::output("ba")],
                        Nop,
                    ),
                ],
                vec![
                    ChannelSpec::new("ab", 1, 1),
                    if delay { back.with_delay() } else { back },
                ],
            )
            .unwrap()
        };
        let v = validate(&cycle(false));
        assert_eq!(
            v,
            vec![Violation::UndelayedCycle {
                channels: vec!["ab".into(), "ba".into()]
            }]
        );
        assert!(v[0].to_string().contains("undelayed cycle"));
        assert!(validate(&cycle(true)).is_empty());
    }

    #[test]
    fn validate_is_order_stable() {
        let make = || {
            build_network(
                vec![
                    ActorSpec::new_static("z", vec![PortSpec::control("c1")], Nop),
                    ActorSpec::new_static("a", vec![PortSpec::control("c2")], Nop),
                    ActorSpec::new_static(
                        "m",
                        vec![PortSpec::output("c1"), PortSpec::output("c2")],
                        Nop,
                    ),
                ],
                vec![
                    ChannelSpec::new("c1", 1, 3),
                    ChannelSpec::new("c2", 1, 1).with_delay(),
                ],
            )
            .unwrap()
        };
        let first = validate(&make());
        assert_eq!(first, validate(&make()));
        let actors: Vec<_> = first
            .iter()
            .filter_map(|v| match v {
                Violation::ControlPortOnStatic { actor } => Some(actor.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(actors, ["a", "z"]);
    }

    #[test]
    fn dispatch_checks_rates() {
        let mut net = dynamic_net(ChannelSpec::new("ctl", 1, 1), Fixed(vec![1]));
        assert_eq!(
            net.control_dispatch("dyn", &[0]).unwrap(),
            FiringRates::new(vec![1])
        );

        let mut net = dynamic_net(ChannelSpec::new("ctl", 1, 1), Fixed(vec![2]));
        assert_eq!(
            net.control_dispatch("dyn", &[0]).unwrap_err(),
            DispatchError::InvalidRate {
                port: 0,
                rate: 2,
                declared: 1
            }
        );

        let mut net = dynamic_net(ChannelSpec::new("ctl", 1, 1), Fixed(vec![]));
        assert_eq!(
            net.control_dispatch("dyn", &[0]).unwrap_err(),
            DispatchError::WrongLength {
                expected: 1,
                got: 0
            }
        );
        assert_eq!(
            net.control_dispatch("src", &[0]).unwrap_err(),
            DispatchError::NotDynamic
        );
    }

    #[test]
    fn pin_unknown_actor_fails() {
        let mut net = src_sink(1).unwrap();
        net.pin_actor("src", 0).unwrap();
        assert_eq!(net.actor("src").unwrap().mapping_hint, Some(0));
        assert_eq!(
            net.pin_actor("nope", 0),
            Err(ModelError::UnknownActor("nope".into()))
        );
    }

    #[test]
    fn firing_rate_helpers() {
        let declared = [1, 4, 2];
        assert_eq!(FiringRates::all(&declared).as_slice(), &[1, 4, 2]);
        assert_eq!(FiringRates::none(&declared).as_slice(), &[0, 0, 0]);
        let sel = FiringRates::select(&declared, |i| i != 1);
        assert_eq!(sel.as_slice(), &[1, 0, 2]);
        assert!(!sel.is_active(1));
    }
}
