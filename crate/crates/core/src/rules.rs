//! Direct checker for the Evolomino rules, independent of the ILP model.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::grid::{neighbors, CellState, Coord, Puzzle, SolutionGrid};

/// A connected group of squares holding exactly one on-arrow square.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub cells: BTreeSet<Coord>,
    pub anchor: Coord,
    pub arrow_id: usize,
    /// 1-based position along the arrow.
    pub ordinal: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    SquareOnShaded,
    GivenMissing,
    BlockWithoutAnchor,
    BlockWithMultipleAnchors,
    ArrowTooFewBlocks,
    ConsecutiveArrowSquares,
    BadSizeProgression,
    BadShapeProgression,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
    pub cells: Vec<Coord>,
}

impl Violation {
    fn new(rule: Rule, detail: impl Into<String>, cells: Vec<Coord>) -> Self {
        Self {
            rule,
            detail: detail.into(),
            cells,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.rule, self.detail)?;
        if !self.cells.is_empty() {
            let cells: Vec<String> = self.cells.iter().map(Coord::to_string).collect();
            write!(f, " [{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Splits the squares into blocks, collecting every cell-level violation.
fn segment(p: &Puzzle, s: &SolutionGrid) -> (Vec<Block>, Vec<Violation>) {
    assert_eq!(
        (p.rows(), p.cols()),
        (s.rows(), s.cols()),
        "solution dimensions do not match the puzzle"
    );
    let mut violations = Vec::new();
    for c in p.coords() {
        match (p.state(c), s.get(c)) {
            (CellState::Shaded, true) => violations.push(Violation::new(
                Rule::SquareOnShaded,
                format!("square on shaded cell {c}"),
                vec![c],
            )),
            (CellState::GivenSquare, false) => violations.push(Violation::new(
                Rule::GivenMissing,
                format!("given square at {c} is missing"),
                vec![c],
            )),
            _ => {}
        }
    }

    let mut seen = vec![false; p.num_cells()];
    let mut blocks = Vec::new();
    for start in p.coords() {
        if !s.get(start) || seen[p.index(start)] {
            continue;
        }
        let mut cells = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen[p.index(start)] = true;
        while let Some(c) = queue.pop_front() {
            cells.insert(c);
            for nb in neighbors(p, c) {
                if s.get(nb) && !seen[p.index(nb)] {
                    seen[p.index(nb)] = true;
                    queue.push_back(nb);
                }
            }
        }
        let anchors: Vec<Coord> = cells
            .iter()
            .copied()
            .filter(|&c| p.arrow_at(c).is_some())
            .collect();
        match anchors.as_slice() {
            [] => violations.push(Violation::new(
                Rule::BlockWithoutAnchor,
                "block has no square on an arrow",
                cells.into_iter().collect(),
            )),
            [anchor] => {
                let (arrow_id, _) = p.arrow_at(*anchor).expect("anchor lies on an arrow");
                blocks.push(Block {
                    cells,
                    anchor: *anchor,
                    arrow_id,
                    ordinal: 0,
                });
            }
            _ => violations.push(Violation::new(
                Rule::BlockWithMultipleAnchors,
                format!("block has {} squares on arrows", anchors.len()),
                anchors,
            )),
        }
    }

    blocks.sort_by_key(|b| (b.arrow_id, p.arrow_at(b.anchor).map(|(_, pos)| pos)));
    let mut counter = vec![0; p.arrows().len()];
    for b in &mut blocks {
        counter[b.arrow_id] += 1;
        b.ordinal = counter[b.arrow_id];
    }
    (blocks, violations)
}

/// Partitions the squares of `s` into blocks, ordered by arrow and then by
/// anchor position along the arrow.
pub fn extract_blocks(p: &Puzzle, s: &SolutionGrid) -> Result<Vec<Block>, Vec<Violation>> {
    let (blocks, violations) = segment(p, s);
    if violations.is_empty() {
        Ok(blocks)
    } else {
        Err(violations)
    }
}

fn min_cell(cells: &BTreeSet<Coord>) -> Option<Coord> {
    cells.iter().next().copied()
}

/// True iff `next` is `prev` translated (no rotation or reflection) plus one cell.
pub fn check_evolution(prev: &Block, next: &Block) -> bool {
    evolves(&prev.cells, &next.cells)
}

pub(crate) fn evolves(prev: &BTreeSet<Coord>, next: &BTreeSet<Coord>) -> bool {
    if next.len() != prev.len() + 1 {
        return false;
    }
    let Some(origin) = min_cell(prev) else {
        return next.len() == 1;
    };
    // The image of prev's first cell must be one of next's cells.
    next.iter().any(|&target| {
        let dr = target.row as i64 - origin.row as i64;
        let dc = target.col as i64 - origin.col as i64;
        prev.iter().all(|c| {
            let r = c.row as i64 + dr;
            let col = c.col as i64 + dc;
            r >= 1 && col >= 1 && next.contains(&Coord::new(r as usize, col as usize))
        })
    })
}

/// Checks every rule and returns the complete list of violations.
pub fn verify(p: &Puzzle, s: &SolutionGrid) -> Result<(), Vec<Violation>> {
    let (blocks, mut violations) = segment(p, s);

    for a in p.arrows() {
        for pair in a.path.windows(2) {
            if s.get(pair[0]) && s.get(pair[1]) {
                violations.push(Violation::new(
                    Rule::ConsecutiveArrowSquares,
                    format!("consecutive squares on arrow {}", a.id),
                    pair.to_vec(),
                ));
            }
        }
        let on_arrow: Vec<&Block> = blocks.iter().filter(|b| b.arrow_id == a.id).collect();
        if on_arrow.len() < 2 {
            violations.push(Violation::new(
                Rule::ArrowTooFewBlocks,
                format!("arrow {} passes through {} block(s)", a.id, on_arrow.len()),
                on_arrow.iter().map(|b| b.anchor).collect(),
            ));
        }
        for pair in on_arrow.windows(2) {
            let (prev, next) = (pair[0], pair[1]);
            if next.len() != prev.len() + 1 {
                violations.push(Violation::new(
                    Rule::BadSizeProgression,
                    format!(
                        "arrow {} block {} has size {} after size {}",
                        a.id,
                        next.ordinal,
                        next.len(),
                        prev.len()
                    ),
                    vec![prev.anchor, next.anchor],
                ));
            } else if !check_evolution(prev, next) {
                violations.push(Violation::new(
                    Rule::BadShapeProgression,
                    format!(
                        "arrow {} block {} does not contain a translate of block {}",
                        a.id, next.ordinal, prev.ordinal
                    ),
                    vec![prev.anchor, next.anchor],
                ));
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
