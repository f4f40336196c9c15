//! Board representation, the puzzle/solution text formats and the derived
//! cell sets (regions, translations, arrow order) used by the model builder.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// A cell position. Rows and columns are 1-based, row 1 is the top row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Shifts the coordinate, returning `None` when it leaves a `rows` x `cols` board.
    pub fn offset(self, t: Translation, rows: usize, cols: usize) -> Option<Coord> {
        let r = self.row as i64 + t.drow as i64;
        let c = self.col as i64 + t.dcol as i64;
        if r < 1 || c < 1 || r > rows as i64 || c > cols as i64 {
            None
        } else {
            Some(Coord::new(r as usize, c as usize))
        }
    }

    pub fn is_adjacent(self, other: Coord) -> bool {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col) == 1
    }

    /// The vector leading from `self` to `to`.
    pub fn delta(self, to: Coord) -> Translation {
        Translation::new(
            to.row as i32 - self.row as i32,
            to.col as i32 - self.col as i32,
        )
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellState {
    Empty,
    Shaded,
    GivenSquare,
}

impl CellState {
    fn symbol(self) -> char {
        match self {
            CellState::Empty => '.',
            CellState::Shaded => '#',
            CellState::GivenSquare => 'O',
        }
    }
}

/// A rigid 2-D shift between two consecutive blocks on an arrow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Translation {
    pub drow: i32,
    pub dcol: i32,
}

impl Translation {
    pub const fn new(drow: i32, dcol: i32) -> Self {
        Self { drow, dcol }
    }

    /// Zero and unit shifts can never relate two disjoint, non-touching blocks.
    pub fn is_admissible(self) -> bool {
        self.drow.abs() + self.dcol.abs() > 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Arrow {
    pub id: usize,
    /// Tail first, head last.
    pub path: Vec<Coord>,
}

impl Arrow {
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    pub fn position(&self, c: Coord) -> Option<usize> {
        self.path.iter().position(|&p| p == c)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("cell {0} is not on arrow {1}")]
    NotOnArrow(Coord, usize),
}

/// An immutable Evolomino board.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Puzzle {
    rows: usize,
    cols: usize,
    cells: Vec<CellState>,
    arrows: Vec<Arrow>,
    /// For each cell, the arrow index and path position it lies on.
    on_arrow: Vec<Option<(usize, usize)>>,
}

impl Puzzle {
    /// Builds a puzzle, checking every structural invariant. Errors carry line 0.
    pub fn new(
        rows: usize,
        cols: usize,
        cells: Vec<CellState>,
        paths: Vec<Vec<Coord>>,
    ) -> Result<Self, ParseError> {
        let arrow_lines = vec![0; paths.len()];
        Self::build(rows, cols, cells, paths, &arrow_lines)
    }

    fn build(
        rows: usize,
        cols: usize,
        cells: Vec<CellState>,
        paths: Vec<Vec<Coord>>,
        lines: &[usize],
    ) -> Result<Self, ParseError> {
        if rows == 0 || cols == 0 {
            return Err(ParseError::new(0, "board dimensions must be positive"));
        }
        if cells.len() != rows * cols {
            return Err(ParseError::new(0, "cell count does not match dimensions"));
        }
        let mut on_arrow = vec![None; rows * cols];
        let mut arrows = Vec::with_capacity(paths.len());
        for (id, path) in paths.into_iter().enumerate() {
            let line = lines[id];
            if path.len() < 3 {
                return Err(ParseError::new(line, "arrow length < 3"));
            }
            for (pos, &c) in path.iter().enumerate() {
                if c.row < 1 || c.col < 1 || c.row > rows || c.col > cols {
                    return Err(ParseError::new(
                        line,
                        format!("arrow cell {c} is off the board"),
                    ));
                }
                if pos > 0 && !path[pos - 1].is_adjacent(c) {
                    return Err(ParseError::new(line, "non-contiguous arrow path"));
                }
                let idx = (c.row - 1) * cols + (c.col - 1);
                if cells[idx] == CellState::Shaded {
                    return Err(ParseError::new(line, format!("arrow over shaded cell {c}")));
                }
                match on_arrow[idx] {
                    Some((other, _)) if other == id => {
                        return Err(ParseError::new(line, format!("arrow revisits cell {c}")));
                    }
                    Some(_) => {
                        return Err(ParseError::new(line, format!("overlapping arrows at {c}")));
                    }
                    None => on_arrow[idx] = Some((id, pos)),
                }
            }
            arrows.push(Arrow { id, path });
        }
        Ok(Self {
            rows,
            cols,
            cells,
            arrows,
            on_arrow,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    /// Row-major scalar index, 0-based.
    pub fn index(&self, c: Coord) -> usize {
        (c.row - 1) * self.cols + (c.col - 1)
    }

    pub fn coord(&self, index: usize) -> Coord {
        Coord::new(index / self.cols + 1, index % self.cols + 1)
    }

    pub fn state(&self, c: Coord) -> CellState {
        self.cells[self.index(c)]
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.row >= 1 && c.col >= 1 && c.row <= self.rows && c.col <= self.cols
    }

    /// The arrow index and path position of `c`, if it lies on an arrow.
    pub fn arrow_at(&self, c: Coord) -> Option<(usize, usize)> {
        self.on_arrow[self.index(c)]
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.num_cells()).map(move |i| self.coord(i))
    }

    /// Returns a copy with one cell's state replaced.
    pub fn with_state(&self, c: Coord, state: CellState) -> Result<Puzzle, ParseError> {
        let mut cells = self.cells.clone();
        cells[self.index(c)] = state;
        let paths = self.arrows.iter().map(|a| a.path.clone()).collect();
        Puzzle::new(self.rows, self.cols, cells, paths)
    }
}

const MAGIC: &str = "evolomino v1";

fn parse_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(usize, usize), ParseError> {
    let (no, magic) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "empty file"))?;
    if magic.trim_end() != MAGIC {
        return Err(ParseError::new(no, format!("expected `{MAGIC}`")));
    }
    let (no, dims) = lines
        .next()
        .ok_or_else(|| ParseError::new(no + 1, "missing dimensions line"))?;
    let parts: Vec<&str> = dims.split_whitespace().collect();
    let bad = || ParseError::new(no, "expected `rows <m> cols <n>`");
    if parts.len() != 4 || parts[0] != "rows" || parts[2] != "cols" {
        return Err(bad());
    }
    let rows: usize = parts[1].parse().map_err(|_| bad())?;
    let cols: usize = parts[3].parse().map_err(|_| bad())?;
    if rows == 0 || cols == 0 {
        return Err(ParseError::new(no, "board dimensions must be positive"));
    }
    let (no, grid) = lines
        .next()
        .ok_or_else(|| ParseError::new(no + 1, "missing `grid:` line"))?;
    if grid.trim_end() != "grid:" {
        return Err(ParseError::new(no, "expected `grid:`"));
    }
    Ok((rows, cols))
}

fn parse_coord(token: &str, line: usize) -> Result<Coord, ParseError> {
    let bad = || ParseError::new(line, format!("malformed coordinate `{token}`"));
    let (r, c) = token.split_once(',').ok_or_else(bad)?;
    Ok(Coord::new(
        r.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}

/// Parses the `evolomino v1` puzzle format.
pub fn parse_puzzle(text: &str) -> Result<Puzzle, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (rows, cols) = parse_header(&mut lines)?;
    let mut cells = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (no, line) = lines
            .next()
            .ok_or_else(|| ParseError::new(4 + r, "grid ends early"))?;
        let line = line.trim_end();
        if line.chars().count() != cols {
            return Err(ParseError::new(
                no,
                format!("expected {cols} grid characters"),
            ));
        }
        for ch in line.chars() {
            cells.push(match ch {
                '.' => CellState::Empty,
                '#' => CellState::Shaded,
                'O' => CellState::GivenSquare,
                other => {
                    return Err(ParseError::new(
                        no,
                        format!("unknown grid character `{other}`"),
                    ))
                }
            });
        }
    }
    let mut paths = Vec::new();
    let mut path_lines = Vec::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix("arrow:")
            .ok_or_else(|| ParseError::new(no, "expected `arrow:` line"))?;
        let path = rest
            .split_whitespace()
            .map(|tok| parse_coord(tok, no))
            .collect::<Result<Vec<_>, _>>()?;
        paths.push(path);
        path_lines.push(no);
    }
    Puzzle::build(rows, cols, cells, paths, &path_lines)
}

/// Writes the canonical text form; `parse_puzzle` inverts it exactly.
pub fn serialize_puzzle(p: &Puzzle) -> String {
    let mut out = format!("{MAGIC}\nrows {} cols {}\ngrid:\n", p.rows, p.cols);
    for row in p.cells.chunks(p.cols) {
        out.extend(row.iter().map(|s| s.symbol()));
        out.push('\n');
    }
    for a in &p.arrows {
        out.push_str("arrow:");
        for c in &a.path {
            out.push_str(&format!(" {c}"));
        }
        out.push('\n');
    }
    out
}

impl fmt::Display for Puzzle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_puzzle(self))
    }
}

/// Square placement for every cell of a board.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SolutionGrid {
    rows: usize,
    cols: usize,
    square: Vec<bool>,
}

impl SolutionGrid {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            square: vec![false; rows * cols],
        }
    }

    pub fn from_cells(rows: usize, cols: usize, square: Vec<bool>) -> Self {
        assert_eq!(square.len(), rows * cols, "solution size mismatch");
        Self { rows, cols, square }
    }

    pub fn from_squares(rows: usize, cols: usize, squares: &[Coord]) -> Self {
        let mut s = Self::empty(rows, cols);
        for &c in squares {
            s.set(c, true);
        }
        s
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[bool] {
        &self.square
    }

    pub fn get(&self, c: Coord) -> bool {
        self.square[(c.row - 1) * self.cols + (c.col - 1)]
    }

    pub fn set(&mut self, c: Coord, value: bool) {
        self.square[(c.row - 1) * self.cols + (c.col - 1)] = value;
    }

    pub fn squares(&self) -> Vec<Coord> {
        (0..self.square.len())
            .filter(|&i| self.square[i])
            .map(|i| Coord::new(i / self.cols + 1, i % self.cols + 1))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.square.iter().filter(|&&b| b).count()
    }
}

/// Writes a solution; shaded cells of `p` are echoed as `#`.
pub fn serialize_solution(p: &Puzzle, s: &SolutionGrid) -> String {
    let mut out = format!("{MAGIC}\nrows {} cols {}\ngrid:\n", s.rows, s.cols);
    for (i, &sq) in s.square.iter().enumerate() {
        let ch = if sq {
            '*'
        } else if p.cells.get(i) == Some(&CellState::Shaded) {
            '#'
        } else {
            '.'
        };
        out.push(ch);
        if (i + 1) % s.cols == 0 {
            out.push('\n');
        }
    }
    out
}

pub fn parse_solution(text: &str) -> Result<SolutionGrid, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (rows, cols) = parse_header(&mut lines)?;
    let mut square = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (no, line) = lines
            .next()
            .ok_or_else(|| ParseError::new(4 + r, "grid ends early"))?;
        let line = line.trim_end();
        if line.chars().count() != cols {
            return Err(ParseError::new(
                no,
                format!("expected {cols} grid characters"),
            ));
        }
        for ch in line.chars() {
            square.push(match ch {
                '*' => true,
                '.' | '#' => false,
                other => {
                    return Err(ParseError::new(
                        no,
                        format!("unknown solution character `{other}`"),
                    ))
                }
            });
        }
    }
    if let Some((no, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(ParseError::new(no, "trailing content after solution grid"));
    }
    Ok(SolutionGrid { rows, cols, square })
}

/// How the region of an arrow is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RegionRule {
    /// BFS blocked by shading and foreign arrows, and additionally by cells
    /// touching a given square that sits on a foreign arrow.
    #[default]
    Refined,
    /// BFS blocked by shading and foreign arrows only.
    Literal,
}

/// Cells that may belong to a block anchored on arrow `a`.
pub fn region(p: &Puzzle, a: &Arrow) -> BTreeSet<Coord> {
    region_with(p, a, RegionRule::Refined)
}

pub fn region_with(p: &Puzzle, a: &Arrow, rule: RegionRule) -> BTreeSet<Coord> {
    region_mask(p, a.id, rule)
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| p.coord(i))
        .collect()
}

/// Region as a per-cell mask in row-major order.
pub fn region_mask(p: &Puzzle, arrow: usize, rule: RegionRule) -> Vec<bool> {
    let n = p.num_cells();
    let mut blocked = vec![false; n];
    for i in 0..n {
        let c = p.coord(i);
        let foreign_arrow = matches!(p.on_arrow[i], Some((id, _)) if id != arrow);
        blocked[i] |= p.cells[i] == CellState::Shaded || foreign_arrow;
        if foreign_arrow && rule == RegionRule::Refined && p.cells[i] == CellState::GivenSquare {
            for nb in neighbors(p, c) {
                blocked[p.index(nb)] = true;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &c in &p.arrows[arrow].path {
        let i = p.index(c);
        seen[i] = true;
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        for nb in neighbors(p, c) {
            let j = p.index(nb);
            if !seen[j] && !blocked[j] {
                seen[j] = true;
                queue.push_back(nb);
            }
        }
    }
    seen
}

/// ⌈|path| / 2⌉: anchors of distinct blocks cannot be consecutive path cells.
pub fn max_blocks(a: &Arrow) -> usize {
    a.path.len().div_ceil(2)
}

/// Admissible shifts from `i` that land inside the region of `a`.
pub fn translations_from(p: &Puzzle, a: &Arrow, i: Coord) -> BTreeSet<Translation> {
    let mask = region_mask(p, a.id, RegionRule::Refined);
    translations_in_mask(p, &mask, i).into_iter().collect()
}

pub(crate) fn translations_in_mask(p: &Puzzle, mask: &[bool], i: Coord) -> Vec<Translation> {
    mask.iter()
        .enumerate()
        .filter(|(_, &inside)| inside)
        .map(|(j, _)| i.delta(p.coord(j)))
        .filter(|t| t.is_admissible())
        .collect()
}

pub fn next_on_arrow(a: &Arrow, i: Coord) -> Result<Option<Coord>, GridError> {
    let pos = a.position(i).ok_or(GridError::NotOnArrow(i, a.id))?;
    Ok(a.path.get(pos + 1).copied())
}

pub fn preceding_on_arrow(a: &Arrow, i: Coord) -> Result<Vec<Coord>, GridError> {
    let pos = a.position(i).ok_or(GridError::NotOnArrow(i, a.id))?;
    Ok(a.path[..pos].to_vec())
}

/// Orthogonal neighbours clipped to the board, in up/left/right/down order.
pub fn neighbors(p: &Puzzle, i: Coord) -> impl Iterator<Item = Coord> {
    let (rows, cols) = (p.rows, p.cols);
    [(-1, 0), (0, -1), (0, 1), (1, 0)]
        .into_iter()
        .filter_map(move |(dr, dc)| i.offset(Translation::new(dr, dc), rows, cols))
}
