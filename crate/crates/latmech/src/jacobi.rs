//! Distributed weighted Jacobi solution of the elastic equilibrium.
//!
//! Each module repeatedly relaxes its own six unknowns against the last
//! states received from its neighbors:
//!
//! ```text
//! u_p ← β·D_p⁻¹·(F_p − R_p·u_p − Σ_q C_pq·u_q) + (1−β)·u_p
//! ```
//!
//! where `D_p`/`R_p` are the diagonal and remainder of the summed own-blocks
//! of p's connections (ground contacts contribute their corrected tangent,
//! refreshed from the trial state every iteration) and `C_pq` couples p to
//! neighbor q. Supports are immobile, so ground connections have no coupling
//! term.
//!
//! The procedure is started by the centroid, which floods an `Init` message
//! with the iteration budget down the spanning tree; every module then sends
//! its zero initial state to its neighbors and advances one iteration each
//! time it holds a full set of neighbor states for the current round — the
//! Alpha-synchronizer pattern, which keeps adjacent iteration counters within
//! one of each other. Execution is budgeted: exactly `max_iterations` updates
//! per module, with residual diagnostics aggregated over the tree every
//! `report_every` rounds (and an optional early stop below `tolerance`).

use crate::beam::{rotated_stiffness, Stiffness6x6};
use crate::contact::{evaluate_support, ContactState};
use crate::model::{Configuration, Dof6, FacetDir, Wrench6};
use crate::runtime::{
    AggValue, BcastValue, Ctx, Message, Payload, Program, Runtime, RuntimeError,
};
use crate::scenario::SolverSpec;
use crate::tree::{broadcast, converge_cast, Tree};
use nalgebra::Vector6;

/// Knobs of the distributed solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relaxation weight in (0, 1].
    pub beta: f64,
    /// Contact regularization factor in (0, 1).
    pub gamma: f64,
    /// Exact number of iterations every module executes (unless the early
    /// stop fires).
    pub max_iterations: u32,
    /// Rounds between residual checkpoints.
    pub report_every: u32,
    /// Early-stop threshold on the residual relative to the total load norm;
    /// checked at checkpoints only. `None` runs the full budget.
    pub tolerance: Option<f64>,
}

impl SolverSettings {
    pub fn from_spec(spec: &SolverSpec) -> Self {
        SolverSettings {
            beta: spec.beta,
            gamma: spec.gamma,
            max_iterations: spec.max_iterations,
            report_every: (spec.max_iterations / 10).max(1),
            tolerance: spec.tolerance,
        }
    }

    pub fn validate(&self) {
        assert!(self.beta > 0.0 && self.beta <= 1.0);
        assert!(self.gamma > 0.0 && self.gamma < 1.0);
        assert!(self.max_iterations >= 1);
        assert!(self.report_every >= 1);
    }
}

/// One checkpoint of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    /// Iteration count reached at this checkpoint.
    pub round: u32,
    /// Global equilibrium residual norm (evaluated at the last exchanged
    /// round).
    pub residual: f64,
    /// Contact classification changes since the previous checkpoint.
    pub state_changes: u64,
}

/// Result of a distributed solve.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// Final per-module states (after the last computed update).
    pub states: Vec<Dof6>,
    /// Last states actually exchanged with neighbors; overload and contact
    /// extraction work on these, so both endpoints of a connection agree.
    pub published: Vec<Dof6>,
    /// Final contact classification per module support.
    pub contact_states: Vec<Vec<(FacetDir, ContactState)>>,
    /// Updates each module executed.
    pub iterations: u32,
    /// Last round at which any contact classification changed.
    pub last_change_round: Option<u32>,
    pub convergence_log: Vec<ConvergenceRow>,
    /// Per-module squared equilibrium residuals at the last executed round.
    pub residual_sq: Vec<f64>,
    /// Per-round state snapshots (round 0 = zeros), when recording was on.
    pub history: Option<Vec<Vec<Dof6>>>,
}

struct NeighborLink {
    idx: usize,
    own: Stiffness6x6,
    coupling: Stiffness6x6,
    expected: u32,
    buf: [Option<[f64; 6]>; 2],
}

/// Result of one local update: next state, refreshed contact classification,
/// squared equilibrium residual at the consumed round.
pub type IterationStep = (Dof6, Vec<(FacetDir, ContactState)>, f64);

/// Per-module solver state: current iterate, neighbor buffers, and the
/// constant beam blocks. Memory is constant apart from the per-neighbor
/// buffers.
pub struct JacobiLocal {
    state: Dof6,
    published: Dof6,
    iter: u32,
    links: Vec<NeighborLink>,
    facets: Vec<FacetDir>,
    contact: Vec<(FacetDir, ContactState)>,
    load: Wrench6,
    residual_sq: f64,
    changes_since_report: u64,
    last_change_round: Option<u32>,
}

impl JacobiLocal {
    fn new(config: &Configuration, idx: usize) -> Self {
        let links = config
            .neighbors(idx)
            .iter()
            .map(|&q| {
                let blocks = rotated_stiffness(config, idx, q).expect("neighbors are adjacent");
                NeighborLink {
                    idx: q,
                    own: blocks.own,
                    coupling: blocks.coupling,
                    expected: 0,
                    buf: [None, None],
                }
            })
            .collect();
        let facets = config.ground_facets_of(idx).to_vec();
        JacobiLocal {
            state: Dof6::zero(),
            published: Dof6::zero(),
            iter: 0,
            links,
            contact: facets.iter().map(|&f| (f, ContactState::stable_contact())).collect(),
            facets,
            load: config.external_load(idx),
            residual_sq: 0.0,
            changes_since_report: 0,
            last_change_round: None,
        }
    }

    fn ready(&self) -> bool {
        let slot = (self.iter % 2) as usize;
        self.links.iter().all(|l| l.buf[slot].is_some())
    }

    /// One weighted Jacobi update from the buffered neighbor states.
    /// Returns the new state, the refreshed contact classification, and the
    /// squared equilibrium residual at the consumed round.
    pub fn local_iterate(
        &self,
        config: &Configuration,
        module: usize,
        settings: &SolverSettings,
    ) -> Result<IterationStep, RuntimeError> {
        let slot = (self.iter % 2) as usize;
        let mut summed = Stiffness6x6::zeros();
        let mut coupled = Vector6::zeros();
        for l in &self.links {
            summed += l.own;
            let u_q = Vector6::from_row_slice(&l.buf[slot].expect("buffered neighbor state"));
            coupled += l.coupling * u_q;
        }
        let mut contact = Vec::with_capacity(self.facets.len());
        for &facet in &self.facets {
            let support = evaluate_support(&self.state, facet, config.params(), settings.gamma);
            summed += support.tangent;
            contact.push((facet, support.state));
        }

        let residual = summed * self.state.0 + coupled - self.load.0;
        let mut next = Vector6::zeros();
        for i in 0..6 {
            let d = summed[(i, i)];
            if d <= 0.0 {
                return Err(RuntimeError::SingularDiagonal {
                    module: config.module(module).id.0,
                    entry: i,
                    value: d,
                });
            }
            // β·D⁻¹·(F − R·u − Σ C·u_q) + (1−β)·u; since the residual is
            // S·u + Σ C·u_q − F and R = S − D, the target equals u − residual/D
            let rhs = self.state.0[i] - residual[i] / d;
            next[i] = settings.beta * rhs + (1.0 - settings.beta) * self.state.0[i];
        }
        Ok((Dof6(next), contact, residual.norm_squared()))
    }
}

enum PendingError {
    Runtime(RuntimeError),
}

/// Driver for the solve phase; one instance owns every module's state.
pub struct JacobiProgram<'a> {
    config: &'a Configuration,
    tree: &'a Tree,
    virtuals_of: Vec<Vec<usize>>,
    settings: SolverSettings,
    total_budget: u32,
    chunk_budget: u32,
    locals: Vec<JacobiLocal>,
    started: Vec<bool>,
    init_seen: Vec<bool>,
    record_history: bool,
    history: Vec<Vec<Dof6>>,
    error: Option<PendingError>,
}

impl<'a> JacobiProgram<'a> {
    fn new(
        rt: &Runtime,
        config: &'a Configuration,
        tree: &'a Tree,
        settings: SolverSettings,
        record_history: bool,
        warm_start: Option<&[Dof6]>,
    ) -> Self {
        let hosts = rt.hosts().to_vec();
        let mut virtuals_of = vec![Vec::new(); config.len()];
        for idx in 0..config.len() {
            if hosts[idx] != idx {
                virtuals_of[hosts[idx]].push(idx);
            }
        }
        let locals: Vec<JacobiLocal> = (0..config.len())
            .map(|i| {
                let mut local = JacobiLocal::new(config, i);
                if let Some(start) = warm_start {
                    local.state = start[i];
                }
                local
            })
            .collect();
        let history = if record_history {
            vec![locals.iter().map(|l| l.state).collect()]
        } else {
            Vec::new()
        };
        JacobiProgram {
            config,
            tree,
            virtuals_of,
            settings,
            total_budget: settings.max_iterations,
            chunk_budget: settings.report_every.min(settings.max_iterations),
            locals,
            started: vec![false; config.len()],
            init_seen: vec![false; config.len()],
            record_history,
            history,
            error: None,
        }
    }

    fn handle_init(&mut self, me: usize, ctx: &mut Ctx) {
        if self.init_seen[me] {
            return;
        }
        self.init_seen[me] = true;
        for &child in &self.tree.states[me].as_ref().expect("real module").children {
            ctx.send(
                child,
                Payload::Init {
                    iterations: self.total_budget,
                },
            );
        }
        self.start_module(me, ctx);
        for v in self.virtuals_of[me].clone() {
            self.start_module(v, ctx);
        }
    }

    fn start_module(&mut self, m: usize, ctx: &mut Ctx) {
        if self.started[m] {
            return;
        }
        self.started[m] = true;
        let state = self.locals[m].state.0;
        for l in 0..self.locals[m].links.len() {
            let to = self.locals[m].links[l].idx;
            ctx.send_from(
                m,
                to,
                Payload::JacobiState {
                    round: 0,
                    state: state.into(),
                },
            );
        }
        self.locals[m].published = self.locals[m].state;
        self.try_advance(m, ctx);
    }

    fn try_advance(&mut self, m: usize, ctx: &mut Ctx) {
        if self.error.is_some() {
            return;
        }
        while self.started[m] && self.locals[m].iter < self.chunk_budget && self.locals[m].ready()
        {
            let (next, contact, residual_sq) =
                match self.locals[m].local_iterate(self.config, m, &self.settings) {
                    Ok(v) => v,
                    Err(e) => {
                        self.error = Some(PendingError::Runtime(e));
                        return;
                    }
                };
            let local = &mut self.locals[m];
            let round_done = local.iter;
            if contact != local.contact {
                local.changes_since_report += 1;
                local.last_change_round = Some(round_done + 1);
            }
            local.contact = contact;
            local.residual_sq = residual_sq;
            let slot = (local.iter % 2) as usize;
            for l in &mut local.links {
                l.buf[slot] = None;
            }
            local.iter += 1;
            local.state = next;
            let iter = local.iter;
            if iter < self.total_budget {
                local.published = local.state;
                let state: [f64; 6] = local.state.0.into();
                for l in 0..self.locals[m].links.len() {
                    let to = self.locals[m].links[l].idx;
                    ctx.send_from(m, to, Payload::JacobiState { round: iter, state });
                }
            }
            if self.record_history {
                if self.history.len() <= iter as usize {
                    self.history
                        .push(self.locals.iter().map(|l| l.state).collect());
                    self.history[iter as usize][m] = self.locals[m].state;
                } else {
                    self.history[iter as usize][m] = self.locals[m].state;
                }
            }
            // synchronizer diagnostic: adjacent counters stay within one
            for &q in self.config.neighbors(m) {
                let skew = self.locals[m].iter.abs_diff(self.locals[q].iter);
                ctx.observe_skew(skew);
            }
        }
    }

    fn all_done(&self) -> bool {
        self.locals
            .iter()
            .enumerate()
            .all(|(m, l)| l.iter >= self.chunk_budget.min(self.total_budget) || !self.started[m])
    }

    fn next_chunk(&mut self) {
        self.chunk_budget = (self.chunk_budget + self.settings.report_every).min(self.total_budget);
    }
}

impl Program for JacobiProgram<'_> {
    fn on_start(&mut self, me: usize, ctx: &mut Ctx) {
        if self.config.module(me).kind != crate::model::ModuleKind::Real {
            return;
        }
        if me == self.tree.root && !self.init_seen[me] {
            self.handle_init(me, ctx);
        } else if self.started[me] {
            // chunk resume: buffered states may allow further progress
            self.try_advance(me, ctx);
            for v in self.virtuals_of[me].clone() {
                self.try_advance(v, ctx);
            }
        }
    }

    fn on_message(&mut self, me: usize, msg: &Message, ctx: &mut Ctx) {
        match msg.payload {
            Payload::Init { .. } => self.handle_init(me, ctx),
            Payload::JacobiState { round, state } => {
                {
                    let local = &mut self.locals[me];
                    let link = local
                        .links
                        .iter_mut()
                        .find(|l| l.idx == msg.sender)
                        .expect("sender is a neighbor");
                    assert_eq!(round, link.expected, "rounds arrive in order");
                    let slot = (round % 2) as usize;
                    assert!(link.buf[slot].is_none(), "buffer slot still occupied");
                    link.buf[slot] = Some(state);
                    link.expected += 1;
                }
                self.try_advance(me, ctx);
            }
            _ => panic!("unexpected message kind in solve phase"),
        }
    }

    fn is_complete(&self) -> bool {
        self.error.is_some() || (self.started.iter().all(|&s| s) && self.all_done())
    }
}

/// Runs the full solve: `Init` flood, budgeted Jacobi rounds with residual
/// checkpoints every `report_every` rounds, optional early stop, and final
/// contact states. Set `record_history` to keep every round's states (used
/// by the convergence studies).
pub fn solve(
    rt: &mut Runtime,
    tree: &Tree,
    settings: SolverSettings,
    record_history: bool,
) -> Result<SolveOutput, RuntimeError> {
    solve_from(rt, tree, settings, record_history, None)
}

/// [`solve`] with an injected starting state (e.g. the solution of the
/// configuration before the planned additions), which cuts the iterations
/// needed when the perturbation is small. Default is the zero state.
pub fn solve_from(
    rt: &mut Runtime,
    tree: &Tree,
    settings: SolverSettings,
    record_history: bool,
    warm_start: Option<&[Dof6]>,
) -> Result<SolveOutput, RuntimeError> {
    settings.validate();
    let config = rt.config();
    if let Some(start) = warm_start {
        assert_eq!(start.len(), config.len());
    }
    let mut prog = JacobiProgram::new(rt, config, tree, settings, record_history, warm_start);
    let mut log = Vec::new();

    // reference load norm for the relative early stop
    let load_reference = if settings.tolerance.is_some() {
        let values: Vec<AggValue> = (0..config.len())
            .map(|i| AggValue::Scalar(config.external_load(i).0.norm_squared()))
            .collect();
        let AggValue::Scalar(sq) = converge_cast(rt, tree, &values)? else {
            unreachable!()
        };
        sq.sqrt().max(f64::MIN_POSITIVE)
    } else {
        1.0
    };

    loop {
        rt.run(&mut prog)?;
        if let Some(PendingError::Runtime(e)) = prog.error.take() {
            return Err(e);
        }
        let reached = prog.locals.iter().map(|l| l.iter).max().unwrap_or(0);
        let values: Vec<AggValue> = prog
            .locals
            .iter()
            .map(|l| AggValue::Residual {
                sq: l.residual_sq,
                changes: l.changes_since_report,
            })
            .collect();
        let AggValue::Residual { sq, changes } = converge_cast(rt, tree, &values)? else {
            unreachable!()
        };
        for l in &mut prog.locals {
            l.changes_since_report = 0;
        }
        let residual = sq.sqrt();
        log.push(ConvergenceRow {
            round: reached,
            residual,
            state_changes: changes,
        });
        if let Some(tol) = settings.tolerance {
            broadcast(rt, tree, BcastValue::Residual(residual))?;
            if residual / load_reference <= tol {
                break;
            }
        }
        if prog.chunk_budget >= prog.total_budget {
            break;
        }
        prog.next_chunk();
    }

    let iterations = prog.locals.iter().map(|l| l.iter).max().unwrap_or(0);
    Ok(SolveOutput {
        states: prog.locals.iter().map(|l| l.state).collect(),
        published: prog.locals.iter().map(|l| l.published).collect(),
        contact_states: prog.locals.iter().map(|l| l.contact.clone()).collect(),
        iterations,
        last_change_round: prog.locals.iter().filter_map(|l| l.last_change_round).max(),
        convergence_log: log,
        residual_sq: prog.locals.iter().map(|l| l.residual_sq).collect(),
        history: record_history.then_some(prog.history),
    })
}

/// Distributed equilibrium-residual norm: converge-cast of the per-module
/// squared residuals, square-rooted at the root.
pub fn residual_norm(
    rt: &mut Runtime,
    tree: &Tree,
    residual_sq: &[f64],
) -> Result<f64, RuntimeError> {
    let values: Vec<AggValue> = residual_sq.iter().map(|&s| AggValue::Scalar(s)).collect();
    let AggValue::Scalar(sq) = converge_cast(rt, tree, &values)? else {
        unreachable!()
    };
    Ok(sq.sqrt())
}
