//! Depth-first search over the binary variables of an [`IlpModel`] with
//! bounds-consistency propagation on every row, a reachability propagator per
//! block, and a completion step that fills sizes, supplies and flows once all
//! binaries are fixed.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::grid::SolutionGrid;
use crate::model::{exclusion_row, Family, IlpModel, LinearConstraint, Sense, VarId, VarKey};
use crate::rules;

/// Resource caps for one search. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveLimits {
    pub time: Option<Duration>,
    pub nodes: Option<u64>,
}

impl SolveLimits {
    pub fn with_time(time: Duration) -> Self {
        SolveLimits {
            time: Some(time),
            nodes: None,
        }
    }

    fn deadline(&self, start: Instant) -> Option<Instant> {
        self.time.map(|t| start + t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    TimedOut,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    /// Branching decisions taken.
    pub nodes: u64,
    /// Calls to the propagation fixpoint.
    pub propagations: u64,
    #[serde(serialize_with = "ser_millis")]
    pub elapsed: Duration,
}

fn ser_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1000.0)
}

impl SolveStats {
    fn absorb(&mut self, other: &SolveStats) {
        self.nodes += other.nodes;
        self.propagations += other.propagations;
        self.elapsed += other.elapsed;
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<SolutionGrid>,
    /// Full assignment, indexed by variable id, when feasible.
    pub values: Option<Vec<i64>>,
    pub stats: SolveStats,
}

/// Solutions found by [`enumerate`].
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub solutions: Vec<SolutionGrid>,
    /// The last search proved that no further solution exists.
    pub exhausted: bool,
    /// A limit interrupted the enumeration.
    pub truncated: bool,
    pub stats: SolveStats,
}

/// Verdict of a uniqueness probe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Uniqueness {
    Unique,
    /// Another solution, distinct from the reference one.
    NotUnique(SolutionGrid),
    /// The search hit a limit; nothing is proven.
    Unknown,
}

impl Uniqueness {
    pub fn is_unique(&self) -> bool {
        matches!(self, Uniqueness::Unique)
    }
}

pub fn solve(m: &IlpModel, limits: SolveLimits) -> SolveOutcome {
    Solver::new(m).run(limits)
}

/// Solves repeatedly, excluding each solution found, until the model is
/// infeasible, `cap` solutions are collected, or limits run out. The time
/// limit covers the whole enumeration.
pub fn enumerate(m: &IlpModel, cap: usize, limits: SolveLimits) -> Enumeration {
    let start = Instant::now();
    let mut solver = Solver::new(m);
    let mut out = Enumeration {
        solutions: Vec::new(),
        exhausted: false,
        truncated: false,
        stats: SolveStats::default(),
    };
    while out.solutions.len() < cap {
        let remaining = SolveLimits {
            time: limits.time.map(|t| t.saturating_sub(start.elapsed())),
            nodes: limits.nodes.map(|n| n.saturating_sub(out.stats.nodes)),
        };
        let res = solver.run(remaining);
        out.stats.absorb(&res.stats);
        match res.status {
            SolveStatus::Feasible => {
                let s = res.solution.expect("feasible outcome carries a grid");
                solver.add_row(&exclusion_row(m, &s));
                out.solutions.push(s);
            }
            SolveStatus::Infeasible => {
                out.exhausted = true;
                break;
            }
            SolveStatus::TimedOut => {
                out.truncated = true;
                break;
            }
        }
    }
    out.stats.elapsed = start.elapsed();
    out
}

/// Whether `s` is the only solution of `m`.
pub fn is_unique(m: &IlpModel, s: &SolutionGrid, limits: SolveLimits) -> Uniqueness {
    let mut solver = Solver::new(m);
    solver.add_row(&exclusion_row(m, s));
    let res = solver.run(limits);
    match res.status {
        SolveStatus::Infeasible => Uniqueness::Unique,
        SolveStatus::Feasible => Uniqueness::NotUnique(res.solution.expect("grid")),
        SolveStatus::TimedOut => Uniqueness::Unknown,
    }
}

const NONE: u32 = u32::MAX;

/// Rows normalized to `sum(coef * var) <= rhs`, stored contiguously.
#[derive(Clone, Debug, Default)]
struct Rows {
    start: Vec<u32>,
    coef: Vec<i64>,
    var: Vec<u32>,
    rhs: Vec<i64>,
}

impl Rows {
    fn len(&self) -> usize {
        self.rhs.len()
    }

    fn push(&mut self, terms: impl Iterator<Item = (i64, u32)>, rhs: i64) {
        if self.start.is_empty() {
            self.start.push(0);
        }
        for (a, v) in terms {
            self.coef.push(a);
            self.var.push(v);
        }
        self.start.push(self.coef.len() as u32);
        self.rhs.push(rhs);
    }

    fn span(&self, r: usize) -> std::ops::Range<usize> {
        self.start[r] as usize..self.start[r + 1] as usize
    }
}

/// Block data in solver-friendly form.
#[derive(Clone, Debug)]
struct BlockInfo {
    active: u32,
    y: Vec<u32>,
    on_path: Vec<bool>,
    adjacent: Vec<Vec<usize>>,
}

/// Reusable search state over one model plus any added rows.
pub struct Solver<'m> {
    model: &'m IlpModel,
    rows: Rows,
    extra: Vec<LinearConstraint>,
    occurs: Vec<Vec<u32>>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    trail: Vec<(u32, i64, i64)>,
    queue: VecDeque<u32>,
    queued: Vec<bool>,
    blocks: Vec<BlockInfo>,
    block_of: Vec<u32>,
    block_dirty: Vec<bool>,
    order: Vec<u32>,
    stats: SolveStats,
    // Scratch buffers for the reachability propagator.
    seen: Vec<bool>,
    union: Vec<bool>,
    stack: Vec<usize>,
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -floor_div(-a, b)
}

enum Leaf {
    Solution(Vec<i64>),
    Reject,
}

struct Frame {
    var: u32,
    mark: usize,
    alternative: Option<i64>,
}

impl<'m> Solver<'m> {
    pub fn new(model: &'m IlpModel) -> Self {
        Self::with_order(model, BranchOrder::default())
    }

    pub fn with_order(model: &'m IlpModel, how: BranchOrder) -> Self {
        let n = model.vars().len();
        let mut s = Solver {
            model,
            rows: Rows::default(),
            extra: Vec::new(),
            occurs: vec![Vec::new(); n],
            lo: model.vars().iter().map(|v| v.lower).collect(),
            hi: model.vars().iter().map(|v| v.upper).collect(),
            trail: Vec::new(),
            queue: VecDeque::new(),
            queued: Vec::new(),
            blocks: Vec::new(),
            block_of: vec![NONE; n],
            block_dirty: Vec::new(),
            order: Vec::new(),
            stats: SolveStats::default(),
            seen: Vec::new(),
            union: Vec::new(),
            stack: Vec::new(),
        };
        for c in model.constraints() {
            s.push_constraint(c);
        }
        for (bi, b) in model.blocks().iter().enumerate() {
            let y: Vec<u32> = b.cells.iter().map(|&(_, v)| v.0).collect();
            for &v in &y {
                s.block_of[v as usize] = bi as u32;
            }
            s.blocks.push(BlockInfo {
                active: b.active.0,
                y,
                on_path: b.on_path.clone(),
                adjacent: b.adjacent.clone(),
            });
        }
        s.block_dirty = vec![true; s.blocks.len()];
        s.order = branch_order(model, &s.occurs, how);
        s
    }

    /// Adds a row that every later search must respect.
    pub fn add_row(&mut self, c: &LinearConstraint) {
        self.extra.push(c.clone());
        self.push_constraint(c);
    }

    fn push_constraint(&mut self, c: &LinearConstraint) {
        let mut add = |sign: i64| {
            let r = self.rows.len() as u32;
            self.rows
                .push(c.terms.iter().map(|&(a, v)| (sign * a, v.0)), sign * c.rhs);
            for &(_, v) in &c.terms {
                self.occurs[v.index()].push(r);
            }
        };
        match c.sense {
            Sense::Le => add(1),
            Sense::Ge => add(-1),
            Sense::Eq => {
                add(1);
                add(-1);
            }
        }
    }

    fn reset(&mut self) {
        for (i, v) in self.model.vars().iter().enumerate() {
            self.lo[i] = v.lower;
            self.hi[i] = v.upper;
        }
        self.trail.clear();
        self.queue.clear();
        self.queued = vec![false; self.rows.len()];
        self.block_dirty.iter_mut().for_each(|d| *d = true);
        self.stats = SolveStats::default();
    }

    /// Runs a fresh search from the root.
    pub fn run(&mut self, limits: SolveLimits) -> SolveOutcome {
        let start = Instant::now();
        self.reset();
        let status = self.search(&limits, start);
        self.stats.elapsed = start.elapsed();
        let (status, values) = match status {
            Ok(Some(values)) => (SolveStatus::Feasible, Some(values)),
            Ok(None) => (SolveStatus::Infeasible, None),
            Err(()) => (SolveStatus::TimedOut, None),
        };
        let solution = values.as_ref().map(|v| self.model.solution_from(v));
        if let Some(s) = &solution {
            debug_assert!(rules::verify(self.model.puzzle(), s).is_ok());
        }
        SolveOutcome {
            status,
            solution,
            values,
            stats: self.stats,
        }
    }

    /// `Ok(Some)` on a solution, `Ok(None)` when exhausted, `Err` on a limit.
    fn search(&mut self, limits: &SolveLimits, start: Instant) -> Result<Option<Vec<i64>>, ()> {
        let deadline = limits.deadline(start);
        for r in 0..self.rows.len() {
            self.enqueue(r as u32);
        }
        let mut frames: Vec<Frame> = Vec::new();
        let mut consistent = self.propagate();
        loop {
            if consistent {
                match self.pick() {
                    Some(var) => {
                        self.stats.nodes += 1;
                        if limits.nodes.is_some_and(|cap| self.stats.nodes > cap)
                            || deadline.is_some_and(|d| Instant::now() >= d)
                        {
                            return Err(());
                        }
                        let (first, second) = self.value_order(var);
                        frames.push(Frame {
                            var,
                            mark: self.trail.len(),
                            alternative: Some(second),
                        });
                        consistent = self.assign(var, first) && self.propagate();
                        continue;
                    }
                    None => match self.leaf() {
                        Leaf::Solution(values) => return Ok(Some(values)),
                        Leaf::Reject => {}
                    },
                }
            }
            // Backtrack to the newest frame with an untried value.
            loop {
                let Some(frame) = frames.last_mut() else {
                    return Ok(None);
                };
                let mark = frame.mark;
                let var = frame.var;
                match frame.alternative.take() {
                    Some(value) => {
                        self.undo(mark);
                        consistent = self.assign(var, value) && self.propagate();
                        break;
                    }
                    None => {
                        frames.pop();
                    }
                }
            }
        }
    }

    fn value_order(&self, var: u32) -> (i64, i64) {
        match self.model.var(VarId(var)).family() {
            Family::CellX => (0, 1),
            _ => (1, 0),
        }
    }

    fn pick(&self) -> Option<u32> {
        self.order
            .iter()
            .copied()
            .find(|&v| self.lo[v as usize] != self.hi[v as usize])
    }

    fn leaf(&mut self) -> Leaf {
        let mut values = self.lo.clone();
        if !self.model.complete_integers(&mut values) {
            return Leaf::Reject;
        }
        if !self.model.is_satisfied_by(&values)
            || !self.extra.iter().all(|c| c.is_satisfied(&values))
        {
            return Leaf::Reject;
        }
        Leaf::Solution(values)
    }

    fn enqueue(&mut self, r: u32) {
        if !self.queued[r as usize] {
            self.queued[r as usize] = true;
            self.queue.push_back(r);
        }
    }

    fn set_bounds(&mut self, v: u32, lo: i64, hi: i64) -> bool {
        let i = v as usize;
        let (old_lo, old_hi) = (self.lo[i], self.hi[i]);
        let (lo, hi) = (lo.max(old_lo), hi.min(old_hi));
        if lo == old_lo && hi == old_hi {
            return true;
        }
        if lo > hi {
            return false;
        }
        self.trail.push((v, old_lo, old_hi));
        self.lo[i] = lo;
        self.hi[i] = hi;
        for k in 0..self.occurs[i].len() {
            let r = self.occurs[i][k];
            self.enqueue(r);
        }
        let b = self.block_of[i];
        if b != NONE {
            self.block_dirty[b as usize] = true;
        }
        true
    }

    fn assign(&mut self, v: u32, value: i64) -> bool {
        self.set_bounds(v, value, value)
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, lo, hi) = self.trail.pop().unwrap();
            self.lo[v as usize] = lo;
            self.hi[v as usize] = hi;
        }
        while let Some(r) = self.queue.pop_front() {
            self.queued[r as usize] = false;
        }
    }

    /// Row and reachability propagation to a common fixpoint.
    fn propagate(&mut self) -> bool {
        self.stats.propagations += 1;
        loop {
            while let Some(r) = self.queue.pop_front() {
                self.queued[r as usize] = false;
                if !self.propagate_row(r as usize) {
                    self.undo_queue();
                    return false;
                }
            }
            let mut changed = false;
            for b in 0..self.blocks.len() {
                if !self.block_dirty[b] {
                    continue;
                }
                self.block_dirty[b] = false;
                let before = self.trail.len();
                if !self.propagate_block(b) {
                    self.undo_queue();
                    return false;
                }
                changed |= self.trail.len() != before;
            }
            if !changed && self.queue.is_empty() {
                return true;
            }
        }
    }

    fn undo_queue(&mut self) {
        while let Some(r) = self.queue.pop_front() {
            self.queued[r as usize] = false;
        }
    }

    fn propagate_row(&mut self, r: usize) -> bool {
        let span = self.rows.span(r);
        let rhs = self.rows.rhs[r];
        let mut min_act = 0i64;
        for k in span.clone() {
            let (a, v) = (self.rows.coef[k], self.rows.var[k] as usize);
            min_act += if a > 0 {
                a * self.lo[v]
            } else {
                a * self.hi[v]
            };
        }
        if min_act > rhs {
            return false;
        }
        for k in span {
            let (a, v) = (self.rows.coef[k], self.rows.var[k]);
            let i = v as usize;
            if self.lo[i] == self.hi[i] {
                continue;
            }
            let own = if a > 0 {
                a * self.lo[i]
            } else {
                a * self.hi[i]
            };
            let slack = rhs - (min_act - own);
            let ok = if a > 0 {
                let bound = floor_div(slack, a);
                bound >= self.hi[i] || self.set_bounds(v, i64::MIN, bound)
            } else {
                let bound = ceil_div(slack, a);
                bound <= self.lo[i] || self.set_bounds(v, bound, i64::MAX)
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Removes cells no admissible anchor can reach. A block holds exactly one
    /// cell of its arrow, so the search from each anchor may not cross other
    /// path cells; an anchor is admissible only if its reach covers every cell
    /// already forced into the block.
    fn propagate_block(&mut self, b: usize) -> bool {
        let info = &self.blocks[b];
        let n = info.y.len();
        if self.hi[info.active as usize] == 0 {
            return true;
        }
        let forced: Vec<usize> = (0..n)
            .filter(|&i| self.lo[info.y[i] as usize] == 1)
            .collect();
        let forced_anchor = forced.iter().copied().find(|&i| info.on_path[i]);
        self.seen.clear();
        self.seen.resize(n, false);
        self.union.clear();
        self.union.resize(n, false);
        let mut any = false;
        for s in 0..n {
            if !info.on_path[s] || !self.hi[info.y[s] as usize] == 1 {
                continue;
            }
            if forced_anchor.is_some_and(|f| f != s) {
                continue;
            }
            self.seen.iter_mut().for_each(|x| *x = false);
            self.seen[s] = true;
            self.stack.clear();
            self.stack.push(s);
            while let Some(i) = self.stack.pop() {
                for &j in &info.adjacent[i] {
                    if !self.seen[j] && !info.on_path[j] && self.hi[info.y[j] as usize] == 1 {
                        self.seen[j] = true;
                        self.stack.push(j);
                    }
                }
            }
            if forced.iter().all(|&f| self.seen[f]) {
                any = true;
                for i in 0..n {
                    self.union[i] |= self.seen[i];
                }
            }
        }
        if !any && !forced.is_empty() {
            return false;
        }
        let prune: Vec<u32> = (0..n)
            .filter(|&i| !self.union[i] && self.hi[info.y[i] as usize] == 1)
            .map(|i| info.y[i])
            .collect();
        prune.into_iter().all(|v| self.set_bounds(v, 0, 0))
    }
}

/// Which binaries the search fixes first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BranchOrder {
    /// x, then y, then b, then t.
    CellsFirst,
    /// Block variables on arrow cells (anchor choice), then t, then b, then
    /// the remaining y, then x.
    #[default]
    AnchorsFirst,
}

/// Static branching order by family; within a family, variables with more
/// row occurrences first, ties by variable key.
fn branch_order(m: &IlpModel, occurs: &[Vec<u32>], how: BranchOrder) -> Vec<u32> {
    let p = m.puzzle();
    let rank = |key: &VarKey| match how {
        BranchOrder::CellsFirst => match key.family() {
            Family::CellX => 0,
            Family::BlockY => 1,
            Family::ActB => 2,
            _ => 3,
        },
        BranchOrder::AnchorsFirst => match *key {
            VarKey::BlockY { cell, .. } if p.arrow_at(cell).is_some() => 0,
            VarKey::TransT { .. } => 1,
            VarKey::ActB { .. } => 2,
            VarKey::BlockY { .. } => 3,
            _ => 4,
        },
    };
    let mut order: Vec<u32> = (0..m.vars().len() as u32)
        .filter(|&v| m.var(VarId(v)).is_binary())
        .collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (m.var(VarId(a)), m.var(VarId(b)));
        rank(&va.key)
            .cmp(&rank(&vb.key))
            .then(occurs[b as usize].len().cmp(&occurs[a as usize].len()))
            .then(va.key.cmp(&vb.key))
    });
    order
}
