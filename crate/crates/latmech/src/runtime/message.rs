//! Typed neighbor-to-neighbor message payloads and their wire-size
//! accounting.
//!
//! Sizes are counted with 4-byte floats and small integers, matching the
//! block hardware conventions; kind and addressing ride in the frame header
//! and are not counted. Payloads larger than [`MAX_PAYLOAD_BYTES`] are split
//! into fragments when fidelity mode is on (a six-float state vector becomes
//! two half-vectors).

use crate::overload::OverloadSummary;
use crate::stability::{SafeAngleRange, SupportSet};

/// Hardware-faithful payload ceiling per physical message.
pub const MAX_PAYLOAD_BYTES: u32 = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Init,
    Tree,
    TreeAck,
    JacobiState,
    AggregateUp,
    BroadcastDown,
    Verdict,
}

impl MessageKind {
    pub const ALL: [MessageKind; 7] = [
        MessageKind::Init,
        MessageKind::Tree,
        MessageKind::TreeAck,
        MessageKind::JacobiState,
        MessageKind::AggregateUp,
        MessageKind::BroadcastDown,
        MessageKind::Verdict,
    ];

    pub fn index(&self) -> usize {
        match self {
            MessageKind::Init => 0,
            MessageKind::Tree => 1,
            MessageKind::TreeAck => 2,
            MessageKind::JacobiState => 3,
            MessageKind::AggregateUp => 4,
            MessageKind::BroadcastDown => 5,
            MessageKind::Verdict => 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MessageKind::Init => "Init",
            MessageKind::Tree => "Tree",
            MessageKind::TreeAck => "TreeAck",
            MessageKind::JacobiState => "JacobiState",
            MessageKind::AggregateUp => "AggregateUp",
            MessageKind::BroadcastDown => "BroadcastDown",
            MessageKind::Verdict => "Verdict",
        }
    }
}

/// Merge-able aggregation payload for converge-cast. Every variant is a
/// fixed-size record so per-module memory stays constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggValue {
    Count(u64),
    /// Total mass and mass-weighted position sum.
    MassMoment { mass: f64, weighted: [f64; 3] },
    /// Safe-angle union for the simplified balance check.
    Angle(SafeAngleRange),
    /// Active support points for the model-based balance check.
    Support(SupportSet),
    /// Connection overload roll-up.
    Overload(OverloadSummary),
    /// Solver convergence diagnostic: squared residual and contact-state
    /// change count.
    Residual { sq: f64, changes: u64 },
    /// Generic sum (e.g. squared residual norms).
    Scalar(f64),
    /// All-true flag conjunction.
    Flag(bool),
}

impl AggValue {
    /// The associative-commutative merge used by every tree aggregation.
    /// Mixing variants is a protocol bug.
    pub fn merge(&self, other: &AggValue) -> AggValue {
        match (self, other) {
            (AggValue::Count(a), AggValue::Count(b)) => AggValue::Count(a + b),
            (
                AggValue::MassMoment { mass: m1, weighted: w1 },
                AggValue::MassMoment { mass: m2, weighted: w2 },
            ) => AggValue::MassMoment {
                mass: m1 + m2,
                weighted: [w1[0] + w2[0], w1[1] + w2[1], w1[2] + w2[2]],
            },
            (AggValue::Angle(a), AggValue::Angle(b)) => AggValue::Angle(a.merge(b)),
            (AggValue::Support(a), AggValue::Support(b)) => AggValue::Support(a.merge(b)),
            (AggValue::Overload(a), AggValue::Overload(b)) => AggValue::Overload(a.merge(b)),
            (
                AggValue::Residual { sq: s1, changes: c1 },
                AggValue::Residual { sq: s2, changes: c2 },
            ) => AggValue::Residual {
                sq: s1 + s2,
                changes: c1 + c2,
            },
            (AggValue::Scalar(a), AggValue::Scalar(b)) => AggValue::Scalar(a + b),
            (AggValue::Flag(a), AggValue::Flag(b)) => AggValue::Flag(*a && *b),
            (a, b) => panic!("cannot merge mismatched aggregate values {a:?} and {b:?}"),
        }
    }

    fn size_bytes(&self) -> u32 {
        match self {
            AggValue::Count(_) => 4,
            AggValue::MassMoment { .. } => 16,
            AggValue::Angle(_) => 17, // tag + arc (2f32) + seams (2f32)
            AggValue::Support(s) => 1 + 12 * s.point_count() as u32,
            AggValue::Overload(_) => 10, // util f32 + count u16 + witness 2×u16
            AggValue::Residual { .. } => 8, // sq f32 + changes u32
            AggValue::Scalar(_) => 4,
            AggValue::Flag(_) => 1,
        }
    }

    fn quantize(&mut self) {
        match self {
            AggValue::Count(_) | AggValue::Flag(_) => {}
            AggValue::MassMoment { mass, weighted } => {
                *mass = round_f32(*mass);
                for w in weighted {
                    *w = round_f32(*w);
                }
            }
            AggValue::Angle(a) => a.quantize(),
            AggValue::Support(s) => s.quantize(),
            AggValue::Overload(o) => o.max_utilization = round_f32(o.max_utilization),
            AggValue::Residual { sq, .. } => *sq = round_f32(*sq),
            AggValue::Scalar(s) => *s = round_f32(*s),
        }
    }
}

/// Values pushed root-to-leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcastValue {
    /// Planar center-of-mass coordinates.
    PlanarCom { x: f64, y: f64 },
    /// Residual diagnostic (early-stop extension).
    Residual(f64),
}

impl BcastValue {
    fn size_bytes(&self) -> u32 {
        match self {
            BcastValue::PlanarCom { .. } => 8,
            BcastValue::Residual(_) => 4,
        }
    }

    fn quantize(&mut self) {
        match self {
            BcastValue::PlanarCom { x, y } => {
                *x = round_f32(*x);
                *y = round_f32(*y);
            }
            BcastValue::Residual(r) => *r = round_f32(*r),
        }
    }
}

/// Global verdict flags broadcast at the end of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerdictFlags {
    pub stable: bool,
    pub marginal: bool,
    pub overloaded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    Init { iterations: u32 },
    Tree { depth: u16 },
    TreeAck { accepted: bool },
    JacobiState { round: u32, state: [f64; 6] },
    AggregateUp(AggValue),
    BroadcastDown(BcastValue),
    Verdict(VerdictFlags),
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::Init { .. } => MessageKind::Init,
            Payload::Tree { .. } => MessageKind::Tree,
            Payload::TreeAck { .. } => MessageKind::TreeAck,
            Payload::JacobiState { .. } => MessageKind::JacobiState,
            Payload::AggregateUp(_) => MessageKind::AggregateUp,
            Payload::BroadcastDown(_) => MessageKind::BroadcastDown,
            Payload::Verdict(_) => MessageKind::Verdict,
        }
    }

    /// Payload size with 4-byte floats.
    pub fn size_bytes(&self) -> u32 {
        match self {
            Payload::Init { .. } => 4,
            Payload::Tree { .. } => 2,
            Payload::TreeAck { .. } => 1,
            Payload::JacobiState { .. } => 24,
            Payload::AggregateUp(v) => v.size_bytes(),
            Payload::BroadcastDown(v) => v.size_bytes(),
            Payload::Verdict(_) => 1,
        }
    }

    /// Number of physical fragments in fidelity mode.
    pub fn fragment_count(&self) -> u32 {
        self.size_bytes().div_ceil(MAX_PAYLOAD_BYTES)
    }

    /// Rounds every float to 4-byte precision (fidelity mode).
    pub fn quantize(&mut self) {
        match self {
            Payload::JacobiState { state, .. } => {
                for v in state {
                    *v = round_f32(*v);
                }
            }
            Payload::AggregateUp(v) => v.quantize(),
            Payload::BroadcastDown(v) => v.quantize(),
            _ => {}
        }
    }

    /// Round tag for the trace (Jacobi rounds; other kinds are untagged).
    pub fn round(&self) -> u32 {
        match self {
            Payload::JacobiState { round, .. } => *round,
            _ => 0,
        }
    }
}

fn round_f32(v: f64) -> f64 {
    v as f32 as f64
}

/// One logical message between adjacent logical modules. `sender` and
/// `receiver` are module indices into the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub receiver: usize,
    pub payload: Payload,
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }

    pub fn size_bytes(&self) -> u32 {
        self.payload.size_bytes()
    }
}
