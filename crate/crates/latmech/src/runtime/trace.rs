//! Execution traces: per-message records, per-kind counters, per-module step
//! counts and synchronizer diagnostics.

use super::message::{Message, MessageKind};
use crate::model::{Configuration, ModuleId};
use std::fmt::Write as _;

/// One traced physical message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageRecord {
    /// Jacobi round for solver messages, 0 otherwise.
    pub round: u32,
    pub sender: ModuleId,
    pub receiver: ModuleId,
    pub kind: MessageKind,
    pub bytes: u32,
    /// Both endpoints live in the same host process (virtual emulation).
    pub internal: bool,
}

/// Accumulated trace of one or more protocol phases on the same runtime.
#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    /// Full records; populated only when message recording is on.
    pub records: Vec<MessageRecord>,
    /// Logical messages per kind.
    pub count_by_kind: [u64; 7],
    /// Physical fragments per kind (differs from logical under fidelity mode).
    pub physical_by_kind: [u64; 7],
    pub bytes_by_kind: [u64; 7],
    /// Messages whose endpoints share a host process.
    pub internal_count: u64,
    /// Handler activations per logical module.
    pub steps_per_module: Vec<u64>,
    /// Jacobi messages sent per round.
    pub jacobi_round_totals: Vec<u64>,
    /// Largest |iter_p − iter_q| ever observed across an edge.
    pub max_iter_skew: u32,
    recording: bool,
}

impl ExecutionTrace {
    pub fn new(modules: usize, recording: bool) -> Self {
        ExecutionTrace {
            records: Vec::new(),
            count_by_kind: [0; 7],
            physical_by_kind: [0; 7],
            bytes_by_kind: [0; 7],
            internal_count: 0,
            steps_per_module: vec![0; modules],
            jacobi_round_totals: Vec::new(),
            max_iter_skew: 0,
            recording,
        }
    }

    pub fn recording(&self) -> bool {
        self.recording
    }

    pub(super) fn on_send(
        &mut self,
        config: &Configuration,
        msg: &Message,
        fragments: &[u32],
        internal: bool,
    ) {
        let kind = msg.payload.kind();
        let k = kind.index();
        self.count_by_kind[k] += 1;
        self.physical_by_kind[k] += fragments.len() as u64;
        self.bytes_by_kind[k] += fragments.iter().map(|&b| b as u64).sum::<u64>();
        if internal {
            self.internal_count += 1;
        }
        if kind == MessageKind::JacobiState {
            let round = msg.payload.round() as usize;
            if self.jacobi_round_totals.len() <= round {
                self.jacobi_round_totals.resize(round + 1, 0);
            }
            self.jacobi_round_totals[round] += 1;
        }
        if self.recording {
            let sender = config.module(msg.sender).id;
            let receiver = config.module(msg.receiver).id;
            for &bytes in fragments {
                self.records.push(MessageRecord {
                    round: msg.payload.round(),
                    sender,
                    receiver,
                    kind,
                    bytes,
                    internal,
                });
            }
        }
    }

    pub(super) fn on_step(&mut self, module: usize) {
        self.steps_per_module[module] += 1;
    }

    pub(super) fn observe_skew(&mut self, skew: u32) {
        self.max_iter_skew = self.max_iter_skew.max(skew);
    }

    pub fn total_logical(&self) -> u64 {
        self.count_by_kind.iter().sum()
    }

    pub fn count_of(&self, kind: MessageKind) -> u64 {
        self.count_by_kind[kind.index()]
    }

    /// Line-delimited export: `round,sender,receiver,kind,bytes` per physical
    /// message. Requires recording.
    pub fn export_lines(&self) -> String {
        let mut out = String::new();
        out.push_str("round,sender,receiver,kind,bytes\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.round,
                r.sender,
                r.receiver,
                r.kind.name(),
                r.bytes
            )
            .unwrap();
        }
        out
    }

    /// Per-kind summary table (logical count, physical count, bytes).
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str("kind,messages,fragments,bytes\n");
        for kind in MessageKind::ALL {
            let k = kind.index();
            writeln!(
                out,
                "{},{},{},{}",
                kind.name(),
                self.count_by_kind[k],
                self.physical_by_kind[k],
                self.bytes_by_kind[k]
            )
            .unwrap();
        }
        out
    }
}
