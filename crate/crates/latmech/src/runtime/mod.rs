//! Deterministic message-passing executor.
//!
//! Every module — real or virtual — is a logical process; interaction happens
//! only along the connection graph. Virtual modules are emulated by a real
//! neighbor (their host): their handlers execute inside the host process and
//! messages addressed to them are relayed there. The scheduler delivers one
//! message at a time, either to a uniformly random nonempty edge queue
//! (seeded, reproducible) or in round-robin order; delivery between any given
//! sender/receiver pair is FIFO. Identical seed and policy replay the exact
//! same trace.
//!
//! A module's handlers never run concurrently with each other, and the
//! drivers keep per-module state constant-size apart from degree-proportional
//! buffers, so the same protocol code would behave identically on one thread
//! per module.

pub mod message;
pub mod trace;

pub use message::{AggValue, BcastValue, Message, MessageKind, Payload, VerdictFlags};
pub use trace::{ExecutionTrace, MessageRecord};

use crate::model::{ConfigError, Configuration, ModuleKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

/// Scheduling discipline for message delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulePolicy {
    /// Uniformly random nonempty queue, seeded.
    Random,
    /// Fixed cyclic order over (receiver, sender) pairs.
    RoundRobin,
}

#[derive(Debug, Error, PartialEq)]
pub enum RuntimeError {
    #[error("deadlock: no runnable process but the protocol is incomplete")]
    Deadlock,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver diagonal entry {entry} of module {module} is not positive: {value}")]
    SingularDiagonal {
        module: u32,
        entry: usize,
        value: f64,
    },
}

/// Assigns every virtual module to its emulating host: the lowest-id real
/// neighbor. Real modules host themselves.
pub fn assign_virtuals(config: &Configuration) -> Result<Vec<usize>, ConfigError> {
    let mut hosts = Vec::with_capacity(config.len());
    for idx in 0..config.len() {
        match config.module(idx).kind {
            ModuleKind::Real => hosts.push(idx),
            ModuleKind::Virtual => {
                // neighbors are sorted by id, so the first real one wins
                let host = config
                    .neighbors(idx)
                    .iter()
                    .copied()
                    .find(|&j| config.module(j).kind == ModuleKind::Real)
                    .ok_or(ConfigError::OrphanVirtualModule(config.module(idx).id))?;
                hosts.push(host);
            }
        }
    }
    Ok(hosts)
}

/// A distributed protocol driven by the runtime. One instance owns the state
/// of every logical module; the runtime guarantees `on_message` is only
/// invoked for messages addressed to `me` from an adjacent module.
pub trait Program {
    /// Called once per logical module (in index order) before any delivery.
    fn on_start(&mut self, me: usize, ctx: &mut Ctx);
    /// Handles one delivered message.
    fn on_message(&mut self, me: usize, msg: &Message, ctx: &mut Ctx);
    /// Queried at quiescence; `false` means deadlock.
    fn is_complete(&self) -> bool;
}

/// Send interface handed to handlers.
pub struct Ctx<'a> {
    config: &'a Configuration,
    hosts: &'a [usize],
    me: usize,
    outbox: Vec<Message>,
    skew: u32,
}

impl<'a> Ctx<'a> {
    pub fn me(&self) -> usize {
        self.me
    }

    pub fn config(&self) -> &Configuration {
        self.config
    }

    pub fn neighbors_of(&self, idx: usize) -> &[usize] {
        self.config.neighbors(idx)
    }

    /// Sends from the handled module to an adjacent one.
    pub fn send(&mut self, to: usize, payload: Payload) {
        self.send_from(self.me, to, payload);
    }

    /// Sends on behalf of a module hosted in the same process (virtual
    /// emulation). Locality still holds: `to` must neighbor `sender`.
    pub fn send_from(&mut self, sender: usize, to: usize, payload: Payload) {
        assert_eq!(
            self.hosts[sender], self.hosts[self.me],
            "module {} may only speak for modules it hosts",
            self.me
        );
        assert!(
            self.config.are_adjacent(sender, to),
            "non-local send {} -> {}",
            sender,
            to
        );
        self.outbox.push(Message {
            sender,
            receiver: to,
            payload,
        });
    }

    /// Reports an observed iteration skew across an edge (synchronizer
    /// diagnostic, recorded in the trace).
    pub fn observe_skew(&mut self, skew: u32) {
        self.skew = self.skew.max(skew);
    }
}

/// The executor. One instance carries trace and scheduler state across the
/// protocol phases of a pipeline run.
pub struct Runtime<'a> {
    config: &'a Configuration,
    hosts: Vec<usize>,
    /// Directed edges sorted by (receiver, sender); queue per edge.
    edges: Vec<(usize, usize)>,
    edge_of: HashMap<(usize, usize), usize>,
    queues: Vec<VecDeque<Message>>,
    nonempty: Vec<usize>,
    nonempty_pos: Vec<usize>,
    rng: ChaCha8Rng,
    policy: SchedulePolicy,
    fidelity: bool,
    rr_cursor: usize,
    rr_cycles: u64,
    pub trace: ExecutionTrace,
}

const NOT_QUEUED: usize = usize::MAX;

impl<'a> Runtime<'a> {
    pub fn new(
        config: &'a Configuration,
        policy: SchedulePolicy,
        seed: u64,
        fidelity: bool,
        record_messages: bool,
    ) -> Result<Self, RuntimeError> {
        let hosts = assign_virtuals(config)?;
        let mut edges = Vec::with_capacity(config.degree_sum());
        for receiver in 0..config.len() {
            for &sender in config.neighbors(receiver) {
                edges.push((receiver, sender));
            }
        }
        edges.sort_unstable();
        let edge_of = edges
            .iter()
            .enumerate()
            .map(|(i, &(r, s))| ((s, r), i))
            .collect();
        let queues = vec![VecDeque::new(); edges.len()];
        Ok(Runtime {
            config,
            hosts,
            nonempty_pos: vec![NOT_QUEUED; edges.len()],
            nonempty: Vec::new(),
            edges,
            edge_of,
            queues,
            rng: ChaCha8Rng::seed_from_u64(seed),
            policy,
            fidelity,
            rr_cursor: 0,
            rr_cycles: 0,
            trace: ExecutionTrace::new(config.len(), record_messages),
        })
    }

    /// Completed sweeps over the edge set under the round-robin policy:
    /// a proxy for synchronous execution rounds.
    pub fn round_robin_cycles(&self) -> u64 {
        self.rr_cycles
    }

    pub fn config(&self) -> &'a Configuration {
        self.config
    }

    pub fn hosts(&self) -> &[usize] {
        &self.hosts
    }

    pub fn fidelity(&self) -> bool {
        self.fidelity
    }

    fn flush(&mut self, ctx_outbox: &mut Vec<Message>, skew: u32, hosts: &[usize]) {
        self.trace.observe_skew(skew);
        for mut msg in ctx_outbox.drain(..) {
            if self.fidelity {
                msg.payload.quantize();
            }
            let size = msg.payload.size_bytes();
            let frag_sizes: Vec<u32> = if self.fidelity && size > message::MAX_PAYLOAD_BYTES {
                let n = msg.payload.fragment_count();
                let base = size / n;
                let extra = size % n;
                (0..n).map(|i| base + u32::from(i < extra)).collect()
            } else {
                vec![size]
            };
            let internal = hosts[msg.sender] == hosts[msg.receiver];
            self.trace.on_send(self.config, &msg, &frag_sizes, internal);
            let edge = self.edge_of[&(msg.sender, msg.receiver)];
            self.queues[edge].push_back(msg);
            if self.nonempty_pos[edge] == NOT_QUEUED {
                self.nonempty_pos[edge] = self.nonempty.len();
                self.nonempty.push(edge);
            }
        }
    }

    fn pick_edge(&mut self) -> usize {
        match self.policy {
            SchedulePolicy::Random => {
                let i = self.rng.gen_range(0..self.nonempty.len());
                self.nonempty[i]
            }
            SchedulePolicy::RoundRobin => loop {
                let edge = self.rr_cursor % self.edges.len();
                self.rr_cursor = (self.rr_cursor + 1) % self.edges.len();
                if self.rr_cursor == 0 {
                    self.rr_cycles += 1;
                }
                if self.nonempty_pos[edge] != NOT_QUEUED {
                    break edge;
                }
            },
        }
    }

    /// Runs one protocol phase to quiescence. The phase deadlocks if the
    /// queues drain before the program reports completion.
    pub fn run(&mut self, program: &mut dyn Program) -> Result<(), RuntimeError> {
        let hosts = std::mem::take(&mut self.hosts);
        let result = self.run_inner(program, &hosts);
        self.hosts = hosts;
        result
    }

    fn run_inner(
        &mut self,
        program: &mut dyn Program,
        hosts: &[usize],
    ) -> Result<(), RuntimeError> {
        let mut ctx = Ctx {
            config: self.config,
            hosts,
            me: 0,
            outbox: Vec::new(),
            skew: 0,
        };
        for idx in 0..self.config.len() {
            ctx.me = idx;
            ctx.skew = 0;
            self.trace.on_step(idx);
            program.on_start(idx, &mut ctx);
            let skew = ctx.skew;
            self.flush(&mut ctx.outbox, skew, hosts);
        }
        while !self.nonempty.is_empty() {
            let edge = self.pick_edge();
            let msg = self.queues[edge].pop_front().expect("nonempty queue");
            if self.queues[edge].is_empty() {
                let pos = self.nonempty_pos[edge];
                let last = *self.nonempty.last().unwrap();
                self.nonempty.swap_remove(pos);
                self.nonempty_pos[edge] = NOT_QUEUED;
                if last != edge {
                    self.nonempty_pos[last] = pos;
                }
            }
            ctx.me = msg.receiver;
            ctx.skew = 0;
            self.trace.on_step(msg.receiver);
            program.on_message(msg.receiver, &msg, &mut ctx);
            let skew = ctx.skew;
            self.flush(&mut ctx.outbox, skew, hosts);
        }
        if program.is_complete() {
            Ok(())
        } else {
            Err(RuntimeError::Deadlock)
        }
    }
}

/// Convenience one-shot: build a runtime, run a single program, return the
/// trace.
pub fn run_program(
    config: &Configuration,
    program: &mut dyn Program,
    seed: u64,
    policy: SchedulePolicy,
) -> Result<ExecutionTrace, RuntimeError> {
    let mut rt = Runtime::new(config, policy, seed, false, true)?;
    rt.run(program)?;
    Ok(rt.trace)
}
