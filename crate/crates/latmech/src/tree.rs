//! Centroid-rooted spanning tree and the two aggregation primitives built on
//! it: converge-cast (leaves to root) and broadcast (root to leaves).
//!
//! Construction floods a `Tree` message from the centroid; the first copy a
//! module receives fixes its parent, and every copy is answered with a
//! `TreeAck` so parents learn their children. Only real modules join the
//! tree; hosted virtual modules contribute their aggregation inputs through
//! their host. Each aggregation costs exactly `n−1` messages over the `n`
//! tree nodes.

use crate::model::{Configuration, ModuleKind};
use crate::runtime::{AggValue, BcastValue, Ctx, Message, Payload, Program, Runtime, RuntimeError, VerdictFlags};

/// Per-module view of the finished tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeState {
    /// `None` exactly at the root (the centroid).
    pub parent: Option<usize>,
    /// Sorted child indices.
    pub children: Vec<usize>,
    pub depth: u32,
}

/// The whole tree: states for real modules, `None` for virtual ones.
#[derive(Debug, Clone)]
pub struct Tree {
    pub states: Vec<Option<TreeState>>,
    pub root: usize,
}

impl Tree {
    pub fn depth(&self) -> u32 {
        self.states
            .iter()
            .flatten()
            .map(|s| s.depth)
            .max()
            .unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        self.states.iter().flatten().count()
    }

    fn state(&self, idx: usize) -> &TreeState {
        self.states[idx].as_ref().expect("module is a tree node")
    }
}

struct TreeNode {
    is_root: bool,
    joined: bool,
    parent: Option<usize>,
    depth: u32,
    children: Vec<usize>,
}

struct TreeProgram {
    nodes: Vec<Option<TreeNode>>,
}

impl TreeProgram {
    fn new(config: &Configuration) -> Self {
        let nodes = (0..config.len())
            .map(|idx| {
                (config.module(idx).kind == ModuleKind::Real).then(|| TreeNode {
                    is_root: idx == config.centroid(),
                    joined: false,
                    parent: None,
                    depth: 0,
                    children: Vec::new(),
                })
            })
            .collect();
        TreeProgram { nodes }
    }

    fn real_neighbors(ctx: &Ctx, me: usize) -> Vec<usize> {
        ctx.neighbors_of(me)
            .iter()
            .copied()
            .filter(|&j| ctx.config().module(j).kind == ModuleKind::Real)
            .collect()
    }
}

impl Program for TreeProgram {
    fn on_start(&mut self, me: usize, ctx: &mut Ctx) {
        let Some(node) = &mut self.nodes[me] else {
            return;
        };
        if node.is_root {
            node.joined = true;
            for n in Self::real_neighbors(ctx, me) {
                ctx.send(n, Payload::Tree { depth: 0 });
            }
        }
    }

    fn on_message(&mut self, me: usize, msg: &Message, ctx: &mut Ctx) {
        let node = self.nodes[me].as_mut().expect("tree messages are real-only");
        match msg.payload {
            Payload::Tree { depth } => {
                if node.joined {
                    ctx.send(msg.sender, Payload::TreeAck { accepted: false });
                } else {
                    node.joined = true;
                    node.parent = Some(msg.sender);
                    node.depth = u32::from(depth) + 1;
                    ctx.send(msg.sender, Payload::TreeAck { accepted: true });
                    let my_depth = node.depth as u16;
                    for n in Self::real_neighbors(ctx, me) {
                        if n != msg.sender {
                            ctx.send(n, Payload::Tree { depth: my_depth });
                        }
                    }
                }
            }
            Payload::TreeAck { accepted } => {
                if accepted {
                    node.children.push(msg.sender);
                }
            }
            _ => panic!("unexpected message kind in tree phase"),
        }
    }

    fn is_complete(&self) -> bool {
        self.nodes.iter().flatten().all(|n| n.joined)
    }
}

/// Builds the centroid-rooted spanning tree over the real modules.
pub fn build_tree(rt: &mut Runtime) -> Result<Tree, RuntimeError> {
    let mut prog = TreeProgram::new(rt.config());
    rt.run(&mut prog)?;
    let states = prog
        .nodes
        .into_iter()
        .map(|n| {
            n.map(|mut n| {
                n.children.sort_unstable();
                TreeState {
                    parent: n.parent,
                    children: n.children,
                    depth: n.depth,
                }
            })
        })
        .collect();
    Ok(Tree {
        states,
        root: rt.config().centroid(),
    })
}

struct CastNode {
    acc: AggValue,
    missing: usize,
    /// Buffered child values, merged in child order once all arrived.
    inbox: Vec<(usize, AggValue)>,
}

struct CastProgram<'t, F: Fn(&AggValue, &AggValue) -> AggValue> {
    tree: &'t Tree,
    merge: F,
    nodes: Vec<Option<CastNode>>,
    result: Option<AggValue>,
}

impl<F: Fn(&AggValue, &AggValue) -> AggValue> CastProgram<'_, F> {
    fn try_send_up(&mut self, me: usize, ctx: &mut Ctx) {
        let node = self.nodes[me].as_mut().expect("cast node");
        if node.missing > 0 {
            return;
        }
        // canonical merge order: own value, then children by index
        let state = self.tree.state(me);
        let mut inbox = std::mem::take(&mut node.inbox);
        inbox.sort_by_key(|(child, _)| *child);
        debug_assert_eq!(inbox.len(), state.children.len());
        let mut acc = node.acc;
        for (_, v) in &inbox {
            acc = (self.merge)(&acc, v);
        }
        match state.parent {
            Some(parent) => ctx.send(parent, Payload::AggregateUp(acc)),
            None => self.result = Some(acc),
        }
    }
}

impl<F: Fn(&AggValue, &AggValue) -> AggValue> Program for CastProgram<'_, F> {
    fn on_start(&mut self, me: usize, ctx: &mut Ctx) {
        if self.nodes[me].is_some() {
            self.try_send_up(me, ctx);
        }
    }

    fn on_message(&mut self, me: usize, msg: &Message, ctx: &mut Ctx) {
        let Payload::AggregateUp(v) = msg.payload else {
            panic!("unexpected message kind in converge-cast");
        };
        let node = self.nodes[me].as_mut().expect("cast node");
        node.inbox.push((msg.sender, v));
        node.missing -= 1;
        self.try_send_up(me, ctx);
    }

    fn is_complete(&self) -> bool {
        self.result.is_some()
    }
}

/// Folds one value per logical module up the tree with `merge`, returning the
/// total at the root. Virtual modules' values are pre-merged into their host
/// (emulation), so the message cost is exactly `tree nodes − 1`.
pub fn converge_cast_with(
    rt: &mut Runtime,
    tree: &Tree,
    values: &[AggValue],
    merge: impl Fn(&AggValue, &AggValue) -> AggValue,
) -> Result<AggValue, RuntimeError> {
    assert_eq!(values.len(), rt.config().len());
    let hosts = rt.hosts().to_vec();
    let mut folded: Vec<Option<AggValue>> = values
        .iter()
        .enumerate()
        .map(|(idx, v)| tree.states[idx].is_some().then_some(*v))
        .collect();
    for idx in 0..values.len() {
        if tree.states[idx].is_none() {
            let host = hosts[idx];
            let acc = folded[host].as_ref().expect("host is a tree node");
            folded[host] = Some(merge(acc, &values[idx]));
        }
    }
    let nodes = (0..values.len())
        .map(|idx| {
            folded[idx].map(|acc| CastNode {
                acc,
                missing: tree.state(idx).children.len(),
                inbox: Vec::new(),
            })
        })
        .collect();
    let mut prog = CastProgram {
        tree,
        merge,
        nodes,
        result: None,
    };
    rt.run(&mut prog)?;
    Ok(prog.result.expect("complete cast has a result"))
}

/// [`converge_cast_with`] using the standard per-variant merge.
pub fn converge_cast(
    rt: &mut Runtime,
    tree: &Tree,
    values: &[AggValue],
) -> Result<AggValue, RuntimeError> {
    converge_cast_with(rt, tree, values, AggValue::merge)
}

struct BroadcastProgram<'t> {
    tree: &'t Tree,
    payload: Payload,
    received: Vec<Option<Payload>>,
    count: usize,
    expected: usize,
}

impl BroadcastProgram<'_> {
    fn forward(&mut self, me: usize, payload: Payload, ctx: &mut Ctx) {
        self.received[me] = Some(payload);
        self.count += 1;
        for &child in &self.tree.state(me).children {
            ctx.send(child, payload);
        }
    }
}

impl Program for BroadcastProgram<'_> {
    fn on_start(&mut self, me: usize, ctx: &mut Ctx) {
        if me == self.tree.root {
            let payload = self.payload;
            self.forward(me, payload, ctx);
        }
    }

    fn on_message(&mut self, me: usize, msg: &Message, ctx: &mut Ctx) {
        // forward what was actually received; fidelity mode may have
        // quantized it in flight
        self.forward(me, msg.payload, ctx);
    }

    fn is_complete(&self) -> bool {
        self.count == self.expected
    }
}

fn run_broadcast(
    rt: &mut Runtime,
    tree: &Tree,
    payload: Payload,
) -> Result<Vec<Payload>, RuntimeError> {
    let mut prog = BroadcastProgram {
        tree,
        payload,
        received: vec![None; rt.config().len()],
        count: 0,
        expected: tree.node_count(),
    };
    rt.run(&mut prog)?;
    // virtual modules see their host's copy (emulation)
    let hosts = rt.hosts();
    Ok((0..rt.config().len())
        .map(|idx| prog.received[hosts[idx]].expect("broadcast reached every host"))
        .collect())
}

/// Pushes a value from the root to every tree node (`n−1` messages); returns
/// the value each logical module holds afterwards (the host's copy for
/// virtual modules).
pub fn broadcast(
    rt: &mut Runtime,
    tree: &Tree,
    value: BcastValue,
) -> Result<Vec<BcastValue>, RuntimeError> {
    let received = run_broadcast(rt, tree, Payload::BroadcastDown(value))?;
    Ok(received
        .into_iter()
        .map(|p| match p {
            Payload::BroadcastDown(v) => v,
            _ => unreachable!(),
        })
        .collect())
}

/// Broadcasts the final verdict flags from the centroid.
pub fn broadcast_verdict(
    rt: &mut Runtime,
    tree: &Tree,
    flags: VerdictFlags,
) -> Result<(), RuntimeError> {
    run_broadcast(rt, tree, Payload::Verdict(flags))?;
    Ok(())
}
