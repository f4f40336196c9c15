//! Random puzzle generation: biased random-walk arrows, evolving blocks placed
//! by backtracking, then greedy removal of clues while the solution stays
//! unique.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{CellState, Coord, Puzzle, SolutionGrid};
use crate::model::build_model;
use crate::solver::{is_unique, SolveLimits, Uniqueness};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenParams {
    /// Fraction of cells covered by arrows and blocks before carving starts.
    pub target_fill: f64,
    pub max_tries: u32,
    pub min_arrow: usize,
    pub p_stop_arrow: f64,
    pub min_blocks: usize,
    pub p_stop_blocks: f64,
    /// Weight of going straight; each turn weighs 1.
    pub straight_bias: f64,
    pub seed: u64,
    /// Placement attempts allowed per arrow before giving up on it.
    pub placement_budget: u32,
    /// Node cap for each uniqueness probe. A node cap rather than a clock
    /// keeps generation reproducible.
    pub probe_nodes: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            target_fill: 0.6,
            max_tries: 200,
            min_arrow: 3,
            p_stop_arrow: 0.25,
            min_blocks: 2,
            p_stop_blocks: 0.5,
            straight_bias: 3.0,
            seed: 0,
            placement_budget: 2000,
            probe_nodes: 2_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("generation failed: no arrow could be committed within {0} tries")]
    NoArrows(u32),
}

impl GenParams {
    pub fn validate(&self, rows: usize, cols: usize) -> Result<(), GenError> {
        let bad = |msg: &str| Err(GenError::InvalidParams(msg.to_string()));
        if rows < 2 || cols < 2 {
            return bad("board must be at least 2x2");
        }
        if !(0.0..=1.0).contains(&self.target_fill) {
            return bad("target_fill must lie in [0, 1]");
        }
        for (name, p) in [
            ("p_stop_arrow", self.p_stop_arrow),
            ("p_stop_blocks", self.p_stop_blocks),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(GenError::InvalidParams(format!(
                    "{name} must lie in (0, 1)"
                )));
            }
        }
        if self.min_arrow < 3 {
            return bad("min_arrow must be at least 3");
        }
        if self.min_blocks < 2 {
            return bad("min_blocks must be at least 2");
        }
        if self.straight_bias.is_nan() || self.straight_bias < 1.0 {
            return bad("straight_bias must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Up, Dir::Down, Dir::Left, Dir::Right];

    fn step(self, c: Coord, rows: usize, cols: usize) -> Option<Coord> {
        let (r, col) = (c.row, c.col);
        let next = match self {
            Dir::Up => Coord::new(r.checked_sub(1)?, col),
            Dir::Down => Coord::new(r + 1, col),
            Dir::Left => Coord::new(r, col.checked_sub(1)?),
            Dir::Right => Coord::new(r, col + 1),
        };
        (next.row >= 1 && next.col >= 1 && next.row <= rows && next.col <= cols).then_some(next)
    }
}

/// One cell of the working board. A block anchor is both an arrow cell and a
/// block cell; every other cell holds at most one of the two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenCell {
    /// (arrow index, position along it)
    pub arrow: Option<(usize, usize)>,
    /// (arrow index, block ordinal starting at 1)
    pub block: Option<(usize, usize)>,
}

impl GenCell {
    fn is_free(self) -> bool {
        self.arrow.is_none() && self.block.is_none()
    }
}

/// Working board with an undo journal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenBoard {
    rows: usize,
    cols: usize,
    cells: Vec<GenCell>,
    arrows: Vec<Vec<Coord>>,
    /// Journal start mark of each committed arrow.
    arrow_marks: Vec<usize>,
    journal: Vec<(usize, GenCell)>,
}

impl GenBoard {
    pub fn new(rows: usize, cols: usize) -> Self {
        GenBoard {
            rows,
            cols,
            cells: vec![GenCell::default(); rows * cols],
            arrows: Vec::new(),
            arrow_marks: Vec::new(),
            journal: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn arrows(&self) -> &[Vec<Coord>] {
        &self.arrows
    }

    fn index(&self, c: Coord) -> usize {
        (c.row - 1) * self.cols + (c.col - 1)
    }

    pub fn cell(&self, c: Coord) -> GenCell {
        self.cells[self.index(c)]
    }

    fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.rows * self.cols).map(|i| Coord::new(i / self.cols + 1, i % self.cols + 1))
    }

    fn write(&mut self, c: Coord, cell: GenCell) {
        let i = self.index(c);
        self.journal.push((i, self.cells[i]));
        self.cells[i] = cell;
    }

    fn mark(&self) -> usize {
        self.journal.len()
    }

    fn undo_to(&mut self, mark: usize) {
        while self.journal.len() > mark {
            let (i, old) = self.journal.pop().unwrap();
            self.cells[i] = old;
        }
    }

    /// Removes the most recently committed arrow and its blocks.
    pub fn undo_last_arrow(&mut self) {
        if let Some(mark) = self.arrow_marks.pop() {
            self.arrows.pop();
            self.undo_to(mark);
        }
    }

    pub fn reset(&mut self) {
        *self = GenBoard::new(self.rows, self.cols);
    }

    /// (arrow cells + block cells) / board size, counting anchors once.
    pub fn fill(&self) -> f64 {
        let used = self.cells.iter().filter(|c| !c.is_free()).count();
        used as f64 / self.cells.len() as f64
    }

    fn neighbors(&self, c: Coord) -> impl Iterator<Item = Coord> + '_ {
        Dir::ALL
            .into_iter()
            .filter_map(move |d| d.step(c, self.rows, self.cols))
    }

    /// Puzzle with every free cell shaded and every block cell given, and the
    /// block layout as its solution.
    pub fn fully_clued(&self) -> (Puzzle, SolutionGrid) {
        let states = self
            .cells
            .iter()
            .map(|cell| match (cell.block, cell.arrow) {
                (Some(_), _) => CellState::GivenSquare,
                (None, Some(_)) => CellState::Empty,
                (None, None) => CellState::Shaded,
            })
            .collect();
        let squares = self.cells.iter().map(|cell| cell.block.is_some()).collect();
        let puzzle = Puzzle::new(self.rows, self.cols, states, self.arrows.clone())
            .expect("generated board is a well-formed puzzle");
        (
            puzzle,
            SolutionGrid::from_cells(self.rows, self.cols, squares),
        )
    }
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.gen_bool(p)
}

/// Efraimidis-Spirakis weighted random permutation: key u^(1/w), largest
/// key first.
pub fn weighted_shuffle<T: Clone>(items: &[T], weights: &[f64], rng: &mut impl Rng) -> Vec<T> {
    assert_eq!(items.len(), weights.len());
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            debug_assert!(w > 0.0);
            // gen() is in [0, 1); flip it to stay strictly positive.
            let u: f64 = 1.0 - rng.gen::<f64>();
            (u.powf(1.0 / w), i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| items[i].clone()).collect()
}

/// Every block obtained by adding one on-board orthogonal neighbor.
pub fn get_evolutions(block: &BTreeSet<Coord>, rows: usize, cols: usize) -> Vec<BTreeSet<Coord>> {
    let mut frontier = BTreeSet::new();
    for &c in block {
        for d in Dir::ALL {
            if let Some(nb) = d.step(c, rows, cols) {
                if !block.contains(&nb) {
                    frontier.insert(nb);
                }
            }
        }
    }
    frontier
        .into_iter()
        .map(|c| {
            let mut s = block.clone();
            s.insert(c);
            s
        })
        .collect()
}

/// Samples the next walking direction from `c`. Legal directions lead to a
/// free on-board cell not already on the path; going straight weighs
/// `straight_bias`, each turn 1. `None` means the walk is stuck.
pub fn get_next_dir(
    board: &GenBoard,
    path: &[Coord],
    c: Coord,
    d: Dir,
    params: &GenParams,
    rng: &mut ChaCha8Rng,
) -> Option<Dir> {
    let legal: Vec<Dir> = legal_dirs(board, path, c);
    if legal.is_empty() {
        return None;
    }
    let weights: Vec<f64> = legal
        .iter()
        .map(|&x| if x == d { params.straight_bias } else { 1.0 })
        .collect();
    let dist = WeightedIndex::new(&weights).expect("positive weights");
    Some(legal[dist.sample(rng)])
}

fn legal_dirs(board: &GenBoard, path: &[Coord], c: Coord) -> Vec<Dir> {
    Dir::ALL
        .into_iter()
        .filter(|d| {
            d.step(c, board.rows, board.cols)
                .is_some_and(|nb| board.cell(nb).is_free() && !path.contains(&nb))
        })
        .collect()
}

/// Anchor indices usable for the next block.
fn valid_indices(len: usize, idx: usize, placed: usize, params: &GenParams) -> Vec<usize> {
    let first = if placed == 0 { 0 } else { idx + 2 };
    let still_needed = params.min_blocks.saturating_sub(placed + 1);
    let Some(last) = (len - 1).checked_sub(2 * still_needed) else {
        return Vec::new();
    };
    (first..=last).collect()
}

struct Placement<'a> {
    params: &'a GenParams,
    arrow: usize,
    path: &'a [Coord],
    budget: u32,
}

impl Placement<'_> {
    fn can_place(&self, board: &GenBoard, cells: &BTreeSet<Coord>, anchor: Coord) -> bool {
        for &c in cells {
            let cell = board.cell(c);
            if cell.block.is_some() {
                return false;
            }
            if c == anchor {
                continue;
            }
            if cell.arrow.is_some() {
                return false;
            }
            if board.neighbors(c).any(|nb| board.cell(nb).block.is_some()) {
                return false;
            }
        }
        // The anchor itself must not touch another block either.
        !board
            .neighbors(anchor)
            .any(|nb| !cells.contains(&nb) && board.cell(nb).block.is_some())
    }

    /// Recursive placement; places blocks on `board` and leaves them there on
    /// success.
    fn place(
        &mut self,
        board: &mut GenBoard,
        blocks: &mut Vec<BTreeSet<Coord>>,
        idx: usize,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        if blocks.len() >= self.params.min_blocks && bernoulli(rng, self.params.p_stop_blocks) {
            return true;
        }
        let cands = valid_indices(self.path.len(), idx, blocks.len(), self.params);
        let weights: Vec<f64> = cands
            .iter()
            .map(|&j| (self.path.len() - j) as f64)
            .collect();
        for j in weighted_shuffle(&cands, &weights, rng) {
            let target = self.path[j];
            let mut shapes = match blocks.last() {
                Some(prev) => get_evolutions(prev, board.rows, board.cols),
                None => self.first_shapes(board, target, rng),
            };
            shapes.shuffle(rng);
            for shape in shapes {
                let mut anchors: Vec<Coord> = shape.iter().copied().collect();
                anchors.shuffle(rng);
                for anchor in anchors {
                    if self.budget == 0 {
                        return false;
                    }
                    self.budget -= 1;
                    let Some(cells) = align(&shape, anchor, target, board.rows, board.cols) else {
                        continue;
                    };
                    if !self.can_place(board, &cells, target) {
                        continue;
                    }
                    let mark = board.mark();
                    let ordinal = blocks.len() + 1;
                    for &c in &cells {
                        let mut cell = board.cell(c);
                        cell.block = Some((self.arrow, ordinal));
                        board.write(c, cell);
                    }
                    blocks.push(cells);
                    if self.place(board, blocks, j, rng) {
                        return true;
                    }
                    blocks.pop();
                    board.undo_to(mark);
                }
            }
        }
        false
    }

    /// Candidate shapes for the first block: evolutions of a random
    /// polyomino one cell smaller than the drawn size.
    fn first_shapes(
        &self,
        board: &GenBoard,
        seed: Coord,
        rng: &mut ChaCha8Rng,
    ) -> Vec<BTreeSet<Coord>> {
        let mut size = 1;
        while size < board.rows * board.cols && !bernoulli(rng, self.params.p_stop_blocks) {
            size += 1;
        }
        let mut poly: BTreeSet<Coord> = [seed].into_iter().collect();
        if size == 1 {
            return vec![poly];
        }
        while poly.len() < size - 1 {
            let grown = get_evolutions(&poly, board.rows, board.cols);
            match grown.choose(rng) {
                Some(next) => poly = next.clone(),
                None => break,
            }
        }
        get_evolutions(&poly, board.rows, board.cols)
    }
}

/// Translates `shape` so that `anchor` lands on `target`.
fn align(
    shape: &BTreeSet<Coord>,
    anchor: Coord,
    target: Coord,
    rows: usize,
    cols: usize,
) -> Option<BTreeSet<Coord>> {
    let t = anchor.delta(target);
    shape.iter().map(|c| c.offset(t, rows, cols)).collect()
}

/// Draws one arrow and tries to place its blocks. On failure the board is
/// left unchanged.
pub fn try_add_arrow(board: &mut GenBoard, params: &GenParams, rng: &mut ChaCha8Rng) -> bool {
    let free: Vec<Coord> = board
        .coords()
        .filter(|&c| board.cell(c).is_free())
        .collect();
    let Some(&start) = free.choose(rng) else {
        return false;
    };
    let mut path = vec![start];
    let first = legal_dirs(board, &path, start);
    let Some(&d0) = first.choose(rng) else {
        return false;
    };
    let mut c = start;
    let mut d = d0;
    loop {
        c = d.step(c, board.rows, board.cols).expect("legal step");
        path.push(c);
        match get_next_dir(board, &path, c, d, params, rng) {
            Some(next) => d = next,
            None => break,
        }
        if bernoulli(rng, params.p_stop_arrow) {
            break;
        }
    }
    if path.len() < params.min_arrow {
        return false;
    }

    let mark = board.mark();
    let arrow = board.arrows.len();
    for (pos, &p) in path.iter().enumerate() {
        board.write(
            p,
            GenCell {
                arrow: Some((arrow, pos)),
                block: None,
            },
        );
    }
    let mut placement = Placement {
        params,
        arrow,
        path: &path,
        budget: params.placement_budget,
    };
    let mut blocks = Vec::new();
    if placement.place(board, &mut blocks, 0, rng) {
        board.arrows.push(path);
        board.arrow_marks.push(mark);
        true
    } else {
        board.undo_to(mark);
        false
    }
}

/// Statistics about one generation run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenMeta {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub params: GenParams,
    pub fill: f64,
    pub arrows: usize,
    pub givens: usize,
    pub shaded: usize,
    pub probes: usize,
    pub tries: u32,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub puzzle: Puzzle,
    pub solution: SolutionGrid,
    pub meta: GenMeta,
}

/// Limits used for every uniqueness probe during generation.
pub fn probe_limits(params: &GenParams) -> SolveLimits {
    SolveLimits {
        time: None,
        nodes: Some(params.probe_nodes),
    }
}

/// Greedy clue removal in Fisher-Yates order. A clue stays blank only when
/// the solver proves the solution is still unique. Returns the puzzle and
/// the number of probes.
pub fn carve_to_unique(
    board: &GenBoard,
    params: &GenParams,
    rng: &mut ChaCha8Rng,
) -> (Puzzle, SolutionGrid, usize) {
    let (mut puzzle, solution) = board.fully_clued();
    let mut cells: Vec<Coord> = puzzle.coords().collect();
    cells.shuffle(rng);
    let mut probes = 0;
    for c in cells {
        if puzzle.state(c) == CellState::Empty {
            continue;
        }
        let candidate = puzzle
            .with_state(c, CellState::Empty)
            .expect("blanking a cell keeps the puzzle valid");
        probes += 1;
        let verdict = is_unique(&build_model(&candidate), &solution, probe_limits(params));
        if verdict == Uniqueness::Unique {
            puzzle = candidate;
        }
    }
    (puzzle, solution, probes)
}

/// Runs the full generation pipeline.
pub fn generate(rows: usize, cols: usize, params: &GenParams) -> Result<Generated, GenError> {
    params.validate(rows, cols)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut board = GenBoard::new(rows, cols);
    let reset_every = params.max_tries.div_ceil(4).max(1);
    let mut tries = 0;
    let mut failures = 0;
    while board.fill() < params.target_fill && tries < params.max_tries {
        // A committed arrow that leaves the fully clued board ambiguous (an
        // unclued arrow cell can host an extra block) counts as a failure, so
        // the backtrack below drops it.
        if try_add_arrow(&mut board, params, &mut rng) && fully_clued_is_unique(&board, params) {
            failures = 0;
            continue;
        }
        failures += 1;
        if failures % reset_every == 0 {
            board.reset();
        } else {
            board.undo_last_arrow();
        }
        tries += 1;
    }
    if board.arrows.is_empty() {
        return Err(GenError::NoArrows(params.max_tries));
    }
    let fill = board.fill();
    let (puzzle, solution, probes) = carve_to_unique(&board, params, &mut rng);
    let count = |s: CellState| puzzle.cells().iter().filter(|&&x| x == s).count();
    let meta = GenMeta {
        rows,
        cols,
        seed: params.seed,
        params: params.clone(),
        fill,
        arrows: board.arrows.len(),
        givens: count(CellState::GivenSquare),
        shaded: count(CellState::Shaded),
        probes,
        tries,
    };
    Ok(Generated {
        puzzle,
        solution,
        meta,
    })
}

fn fully_clued_is_unique(board: &GenBoard, params: &GenParams) -> bool {
    let (p, s) = board.fully_clued();
    is_unique(&build_model(&p), &s, probe_limits(params)) == Uniqueness::Unique
}
