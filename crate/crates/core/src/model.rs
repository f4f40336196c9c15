//! Compiles a puzzle into the integer linear feasibility model: cell, block,
//! activation, size, flow-supply, flow and translation variables together
//! with every row tagged by the constraint family it comes from.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::grid::{
    max_blocks, neighbors, region_mask, translations_in_mask, CellState, Coord, Puzzle, RegionRule,
    SolutionGrid, Translation,
};
use crate::rules;

mod lp;

pub use lp::export_lp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Family {
    CellX,
    BlockY,
    ActB,
    SizeN,
    SupplyF,
    FlowF,
    TransT,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::CellX,
        Family::BlockY,
        Family::ActB,
        Family::SizeN,
        Family::SupplyF,
        Family::FlowF,
        Family::TransT,
    ];

    pub fn is_binary(self) -> bool {
        matches!(
            self,
            Family::CellX | Family::BlockY | Family::ActB | Family::TransT
        )
    }
}

/// Identity of a model variable. Arrow ids are 0-based, block numbers 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKey {
    CellX {
        cell: Coord,
    },
    BlockY {
        arrow: usize,
        block: usize,
        cell: Coord,
    },
    ActB {
        arrow: usize,
        block: usize,
    },
    SizeN {
        arrow: usize,
        block: usize,
    },
    SupplyF {
        arrow: usize,
        block: usize,
        cell: Coord,
    },
    FlowF {
        arrow: usize,
        block: usize,
        from: Coord,
        to: Coord,
    },
    TransT {
        arrow: usize,
        block: usize,
        shift: Translation,
    },
}

impl VarKey {
    pub fn family(&self) -> Family {
        match self {
            VarKey::CellX { .. } => Family::CellX,
            VarKey::BlockY { .. } => Family::BlockY,
            VarKey::ActB { .. } => Family::ActB,
            VarKey::SizeN { .. } => Family::SizeN,
            VarKey::SupplyF { .. } => Family::SupplyF,
            VarKey::FlowF { .. } => Family::FlowF,
            VarKey::TransT { .. } => Family::TransT,
        }
    }
}

fn signed(v: i32) -> String {
    if v < 0 {
        format!("m{}", -v)
    } else {
        v.to_string()
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarKey::CellX { cell } => write!(f, "x_{}_{}", cell.row, cell.col),
            VarKey::BlockY { arrow, block, cell } => {
                write!(f, "y_{arrow}_{block}_{}_{}", cell.row, cell.col)
            }
            VarKey::ActB { arrow, block } => write!(f, "b_{arrow}_{block}"),
            VarKey::SizeN { arrow, block } => write!(f, "N_{arrow}_{block}"),
            VarKey::SupplyF { arrow, block, cell } => {
                write!(f, "F_{arrow}_{block}_{}_{}", cell.row, cell.col)
            }
            VarKey::FlowF {
                arrow,
                block,
                from,
                to,
            } => write!(
                f,
                "f_{arrow}_{block}_{}_{}_{}_{}",
                from.row, from.col, to.row, to.col
            ),
            VarKey::TransT {
                arrow,
                block,
                shift,
            } => write!(
                f,
                "t_{arrow}_{block}_{}_{}",
                signed(shift.drow),
                signed(shift.dcol)
            ),
        }
    }
}

/// A catalogued variable with its integer bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarRef {
    pub key: VarKey,
    pub lower: i64,
    pub upper: i64,
}

impl VarRef {
    pub fn family(&self) -> Family {
        self.key.family()
    }

    pub fn is_binary(&self) -> bool {
        self.family().is_binary()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Constraint family a row was generated from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    /// Each square lies in exactly one block.
    Cover,
    /// No two consecutive arrow cells are both squares.
    Spacing,
    /// Inactive blocks are empty.
    Inactive,
    /// An active block has exactly one square on its arrow.
    OneAnchor,
    /// Block k active implies block k-1 active.
    ActOrder,
    /// Anchors advance along the arrow.
    AnchorOrder,
    /// Horizontal neighbours never sit in different blocks.
    SepH,
    /// Vertical neighbours never sit in different blocks.
    SepV,
    /// Size variable equals the block's square count.
    Size,
    /// Active block at least one larger than its predecessor.
    GrowLo,
    /// Active block at most one larger than its predecessor.
    GrowHi,
    /// Flow balance at off-arrow cells.
    Balance,
    /// Flow balance at arrow cells, which may supply.
    SourceBalance,
    /// Total supply equals block size.
    Supply,
    /// Only a square on the arrow supplies.
    AnchorSupply,
    /// Flow leaves only block cells.
    FlowFrom,
    /// Flow enters only block cells.
    FlowTo,
    /// Flow nonnegativity, counted only under `Convention::Bounds`; never emitted.
    FlowNonneg,
    /// An active block picks exactly one translation.
    OneShift,
    /// Every predecessor square has an admissible translation.
    ShiftCover,
    /// The chosen translation maps the predecessor into the block.
    ShiftMap,
    /// Solution exclusion cut.
    Excl,
    /// Single-variable fixings.
    Fix,
}

impl Tag {
    pub const ALL: [Tag; 23] = [
        Tag::Cover,
        Tag::Spacing,
        Tag::Inactive,
        Tag::OneAnchor,
        Tag::ActOrder,
        Tag::AnchorOrder,
        Tag::SepH,
        Tag::SepV,
        Tag::Size,
        Tag::GrowLo,
        Tag::GrowHi,
        Tag::Balance,
        Tag::SourceBalance,
        Tag::Supply,
        Tag::AnchorSupply,
        Tag::FlowFrom,
        Tag::FlowTo,
        Tag::FlowNonneg,
        Tag::OneShift,
        Tag::ShiftCover,
        Tag::ShiftMap,
        Tag::Excl,
        Tag::Fix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tag::Cover => "cover",
            Tag::Spacing => "spacing",
            Tag::Inactive => "inactive",
            Tag::OneAnchor => "one_anchor",
            Tag::ActOrder => "act_order",
            Tag::AnchorOrder => "anchor_order",
            Tag::SepH => "sep_h",
            Tag::SepV => "sep_v",
            Tag::Size => "size",
            Tag::GrowLo => "grow_lo",
            Tag::GrowHi => "grow_hi",
            Tag::Balance => "balance",
            Tag::SourceBalance => "source_balance",
            Tag::Supply => "supply",
            Tag::AnchorSupply => "anchor_supply",
            Tag::FlowFrom => "flow_from",
            Tag::FlowTo => "flow_to",
            Tag::FlowNonneg => "flow_nonneg",
            Tag::OneShift => "one_shift",
            Tag::ShiftCover => "shift_cover",
            Tag::ShiftMap => "shift_map",
            Tag::Excl => "excl",
            Tag::Fix => "fix",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearConstraint {
    pub terms: Vec<(i64, VarId)>,
    pub sense: Sense,
    pub rhs: i64,
    pub tag: Tag,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[i64]) -> i64 {
        self.terms.iter().map(|&(a, v)| a * values[v.index()]).sum()
    }

    pub fn is_satisfied(&self, values: &[i64]) -> bool {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Eq => lhs == self.rhs,
            Sense::Ge => lhs >= self.rhs,
        }
    }
}

/// Choice of the big-M constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BigM {
    /// M = |C| everywhere.
    #[default]
    Board,
    /// M = |C_a| per arrow.
    Tight,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub big_m: BigM,
    pub region: RegionRule,
    /// Also create flow variables between two cells of the same arrow path.
    /// They appear in no balance row and never change the solution set.
    pub in_path_flows: bool,
}

/// Variables of one block `(arrow, block)` used by structural reasoning.
#[derive(Clone, Debug)]
pub struct BlockVars {
    pub arrow: usize,
    pub block: usize,
    pub active: VarId,
    /// Region cells (row-major) with their y variables.
    pub cells: Vec<(Coord, VarId)>,
    /// Whether each entry of `cells` lies on the arrow path.
    pub on_path: Vec<bool>,
    /// Adjacency between entries of `cells`.
    pub adjacent: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct IlpModel {
    puzzle: Puzzle,
    options: BuildOptions,
    big_m: i64,
    vars: Vec<VarRef>,
    lookup: HashMap<VarKey, VarId>,
    constraints: Vec<LinearConstraint>,
    blocks: Vec<BlockVars>,
}

struct Builder {
    vars: Vec<VarRef>,
    lookup: HashMap<VarKey, VarId>,
    constraints: Vec<LinearConstraint>,
}

impl Builder {
    fn var(&mut self, key: VarKey, upper: i64) -> VarId {
        let id = VarId(self.vars.len() as u32);
        let upper = if key.family().is_binary() { 1 } else { upper };
        self.vars.push(VarRef {
            key,
            lower: 0,
            upper,
        });
        let prev = self.lookup.insert(key, id);
        debug_assert!(prev.is_none(), "duplicate variable {key}");
        id
    }

    fn id(&self, key: &VarKey) -> Option<VarId> {
        self.lookup.get(key).copied()
    }

    fn row(&mut self, tag: Tag, terms: Vec<(i64, VarId)>, sense: Sense, rhs: i64) {
        debug_assert!(terms.iter().all(|&(a, _)| a != 0));
        self.constraints.push(LinearConstraint {
            terms,
            sense,
            rhs,
            tag,
        });
    }
}

struct ArrowData {
    mask: Vec<bool>,
    cells: Vec<Coord>,
    blocks: usize,
    m_size: i64,
}

/// Builds the model with default options.
pub fn build_model(p: &Puzzle) -> IlpModel {
    build_model_with(p, BuildOptions::default())
}

pub fn build_model_with(p: &Puzzle, opts: BuildOptions) -> IlpModel {
    let board_m = p.num_cells() as i64;
    let arrows: Vec<ArrowData> = p
        .arrows()
        .iter()
        .map(|a| {
            let mask = region_mask(p, a.id, opts.region);
            let cells: Vec<Coord> = (0..p.num_cells())
                .filter(|&i| mask[i])
                .map(|i| p.coord(i))
                .collect();
            let m_size = match opts.big_m {
                BigM::Board => board_m,
                BigM::Tight => cells.len() as i64,
            };
            ArrowData {
                mask,
                blocks: max_blocks(a),
                cells,
                m_size,
            }
        })
        .collect();
    let on_path = |a: usize, c: Coord| matches!(p.arrow_at(c), Some((id, _)) if id == a);

    let mut b = Builder {
        vars: Vec::new(),
        lookup: HashMap::new(),
        constraints: Vec::new(),
    };

    // Variables, family by family.
    for c in p.coords() {
        b.var(VarKey::CellX { cell: c }, 1);
    }
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            for &cell in &data.cells {
                b.var(
                    VarKey::BlockY {
                        arrow: a,
                        block: k,
                        cell,
                    },
                    1,
                );
            }
        }
    }
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            b.var(VarKey::ActB { arrow: a, block: k }, 1);
        }
    }
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            b.var(VarKey::SizeN { arrow: a, block: k }, data.m_size);
        }
    }
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            for &cell in &p.arrows()[a].path {
                b.var(
                    VarKey::SupplyF {
                        arrow: a,
                        block: k,
                        cell,
                    },
                    data.m_size,
                );
            }
        }
    }
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            for &from in &data.cells {
                for to in neighbors(p, from) {
                    if !data.mask[p.index(to)] {
                        continue;
                    }
                    if on_path(a, from) && on_path(a, to) && !opts.in_path_flows {
                        continue;
                    }
                    b.var(
                        VarKey::FlowF {
                            arrow: a,
                            block: k,
                            from,
                            to,
                        },
                        data.m_size,
                    );
                }
            }
        }
    }
    // Shifts usable from at least one region cell, per arrow.
    let shifts_from: Vec<BTreeMap<Coord, Vec<Translation>>> = arrows
        .iter()
        .map(|data| {
            data.cells
                .iter()
                .map(|&c| (c, translations_in_mask(p, &data.mask, c)))
                .collect()
        })
        .collect();
    for (a, data) in arrows.iter().enumerate() {
        let mut all: Vec<Translation> = shifts_from[a].values().flatten().copied().collect();
        all.sort();
        all.dedup();
        for k in 2..=data.blocks {
            for &shift in &all {
                b.var(
                    VarKey::TransT {
                        arrow: a,
                        block: k,
                        shift,
                    },
                    1,
                );
            }
        }
    }

    let x = |c: Coord| VarId(p.index(c) as u32);
    let y = |b: &Builder, a: usize, k: usize, cell: Coord| {
        b.id(&VarKey::BlockY {
            arrow: a,
            block: k,
            cell,
        })
    };
    let act = |b: &Builder, a: usize, k: usize| {
        b.id(&VarKey::ActB { arrow: a, block: k })
            .expect("activation variable")
    };
    let size = |b: &Builder, a: usize, k: usize| {
        b.id(&VarKey::SizeN { arrow: a, block: k })
            .expect("size variable")
    };

    // cover: each square belongs to exactly one block.
    for c in p.coords() {
        let mut terms = Vec::new();
        for (a, data) in arrows.iter().enumerate() {
            if !data.mask[p.index(c)] {
                continue;
            }
            for k in 1..=data.blocks {
                terms.push((1, y(&b, a, k, c).expect("block variable")));
            }
        }
        if terms.is_empty() {
            b.row(Tag::Fix, vec![(1, x(c))], Sense::Eq, 0);
        } else {
            terms.push((-1, x(c)));
            b.row(Tag::Cover, terms, Sense::Eq, 0);
        }
    }
    // spacing: no two consecutive squares along an arrow.
    for arrow in p.arrows() {
        for pair in arrow.path.windows(2) {
            b.row(
                Tag::Spacing,
                vec![(1, x(pair[0])), (1, x(pair[1]))],
                Sense::Le,
                1,
            );
        }
    }
    // inactive: inactive blocks are empty.
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            let mut terms: Vec<(i64, VarId)> = data
                .cells
                .iter()
                .map(|&c| (1, y(&b, a, k, c).unwrap()))
                .collect();
            terms.push((-data.m_size, act(&b, a, k)));
            b.row(Tag::Inactive, terms, Sense::Le, 0);
        }
    }
    // one_anchor: an active block holds exactly one square on its arrow.
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            let mut terms: Vec<(i64, VarId)> = p.arrows()[a]
                .path
                .iter()
                .map(|&c| (1, y(&b, a, k, c).unwrap()))
                .collect();
            terms.push((-1, act(&b, a, k)));
            b.row(Tag::OneAnchor, terms, Sense::Eq, 0);
        }
    }
    // act_order: activation order.
    for (a, data) in arrows.iter().enumerate() {
        for k in 2..=data.blocks {
            let terms = vec![(1, act(&b, a, k)), (-1, act(&b, a, k - 1))];
            b.row(Tag::ActOrder, terms, Sense::Le, 0);
        }
    }
    // anchor_order: block k is anchored after block k-1 along the arrow.
    for (a, data) in arrows.iter().enumerate() {
        let path = &p.arrows()[a].path;
        for k in 2..=data.blocks {
            for (pos, &c) in path.iter().enumerate().skip(1) {
                let mut terms: Vec<(i64, VarId)> = path[..pos]
                    .iter()
                    .map(|&j| (1, y(&b, a, k, j).unwrap()))
                    .collect();
                terms.push((1, y(&b, a, k - 1, c).unwrap()));
                b.row(Tag::AnchorOrder, terms, Sense::Le, 1);
            }
        }
    }
    // sep_h/sep_v: adjacent cells never belong to different blocks.
    for c in p.coords() {
        for (tag, nb) in [
            (Tag::SepH, Coord::new(c.row, c.col + 1)),
            (Tag::SepV, Coord::new(c.row + 1, c.col)),
        ] {
            if !p.contains(nb) {
                continue;
            }
            for (a, da) in arrows.iter().enumerate() {
                if !da.mask[p.index(c)] {
                    continue;
                }
                for k in 1..=da.blocks {
                    for (a2, db) in arrows.iter().enumerate() {
                        if !db.mask[p.index(nb)] {
                            continue;
                        }
                        for k2 in 1..=db.blocks {
                            if (a, k) == (a2, k2) {
                                continue;
                            }
                            let terms = vec![
                                (1, y(&b, a, k, c).unwrap()),
                                (1, y(&b, a2, k2, nb).unwrap()),
                            ];
                            b.row(tag, terms, Sense::Le, 1);
                        }
                    }
                }
            }
        }
    }
    // size: block size.
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            let mut terms: Vec<(i64, VarId)> = data
                .cells
                .iter()
                .map(|&c| (-1, y(&b, a, k, c).unwrap()))
                .collect();
            terms.push((1, size(&b, a, k)));
            b.row(Tag::Size, terms, Sense::Eq, 0);
        }
    }
    // grow_lo/grow_hi: an active block is one square larger than its predecessor.
    for (a, data) in arrows.iter().enumerate() {
        let m = data.m_size;
        for k in 2..=data.blocks {
            let (nk, nprev, bk) = (size(&b, a, k), size(&b, a, k - 1), act(&b, a, k));
            b.row(
                Tag::GrowLo,
                vec![(1, nk), (-1, nprev), (-m, bk)],
                Sense::Ge,
                1 - m,
            );
            b.row(
                Tag::GrowHi,
                vec![(1, nk), (-1, nprev), (m, bk)],
                Sense::Le,
                1 + m,
            );
        }
    }
    // balance/source_balance: flow balance for consumers and potential sources.
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            for &c in &data.cells {
                let source = on_path(a, c);
                let mut terms = Vec::new();
                for nb in neighbors(p, c) {
                    if !data.mask[p.index(nb)] || (source && on_path(a, nb)) {
                        continue;
                    }
                    let inflow = VarKey::FlowF {
                        arrow: a,
                        block: k,
                        from: nb,
                        to: c,
                    };
                    let outflow = VarKey::FlowF {
                        arrow: a,
                        block: k,
                        from: c,
                        to: nb,
                    };
                    if let (Some(i), Some(o)) = (b.id(&inflow), b.id(&outflow)) {
                        terms.push((1, i));
                        terms.push((-1, o));
                    }
                }
                terms.push((-1, y(&b, a, k, c).unwrap()));
                if source {
                    let supply = b
                        .id(&VarKey::SupplyF {
                            arrow: a,
                            block: k,
                            cell: c,
                        })
                        .unwrap();
                    terms.push((1, supply));
                    b.row(Tag::SourceBalance, terms, Sense::Eq, 0);
                } else {
                    b.row(Tag::Balance, terms, Sense::Eq, 0);
                }
            }
        }
    }
    // supply: total supply equals block size; anchor_supply: only the anchor supplies.
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            let path = &p.arrows()[a].path;
            let mut terms: Vec<(i64, VarId)> = path
                .iter()
                .map(|&c| {
                    (
                        1,
                        b.id(&VarKey::SupplyF {
                            arrow: a,
                            block: k,
                            cell: c,
                        })
                        .unwrap(),
                    )
                })
                .collect();
            terms.push((-1, size(&b, a, k)));
            b.row(Tag::Supply, terms, Sense::Eq, 0);
        }
    }
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks {
            for &c in &p.arrows()[a].path {
                let supply = b
                    .id(&VarKey::SupplyF {
                        arrow: a,
                        block: k,
                        cell: c,
                    })
                    .unwrap();
                let terms = vec![(1, supply), (-data.m_size, y(&b, a, k, c).unwrap())];
                b.row(Tag::AnchorSupply, terms, Sense::Le, 0);
            }
        }
    }
    // flow_from/flow_to: flow only between cells of the block.
    let flows: Vec<(VarId, usize, usize, Coord, Coord)> = b
        .vars
        .iter()
        .enumerate()
        .filter_map(|(i, v)| match v.key {
            VarKey::FlowF {
                arrow,
                block,
                from,
                to,
            } => Some((VarId(i as u32), arrow, block, from, to)),
            _ => None,
        })
        .collect();
    for &(f, a, k, from, _) in &flows {
        let m = arrows[a].m_size;
        b.row(
            Tag::FlowFrom,
            vec![(1, f), (-m, y(&b, a, k, from).unwrap())],
            Sense::Le,
            0,
        );
    }
    for &(f, a, k, _, to) in &flows {
        let m = arrows[a].m_size;
        b.row(
            Tag::FlowTo,
            vec![(1, f), (-m, y(&b, a, k, to).unwrap())],
            Sense::Le,
            0,
        );
    }
    // one_shift: an active block takes exactly one shift.
    let trans = |b: &Builder, a: usize, k: usize, shift: Translation| {
        b.id(&VarKey::TransT {
            arrow: a,
            block: k,
            shift,
        })
    };
    for (a, data) in arrows.iter().enumerate() {
        for k in 2..=data.blocks {
            let mut terms: Vec<(i64, VarId)> = b
                .vars
                .iter()
                .enumerate()
                .filter(|(_, v)| {
                    matches!(v.key, VarKey::TransT { arrow, block, .. } if arrow == a && block == k)
                })
                .map(|(i, _)| (1, VarId(i as u32)))
                .collect();
            terms.push((-1, act(&b, a, k)));
            b.row(Tag::OneShift, terms, Sense::Eq, 0);
        }
    }
    // shift_cover: every square of block k-1 has a usable shift.
    for (a, data) in arrows.iter().enumerate() {
        for k in 2..=data.blocks {
            for &c in &data.cells {
                let mut terms: Vec<(i64, VarId)> = shifts_from[a][&c]
                    .iter()
                    .map(|&t| (1, trans(&b, a, k, t).unwrap()))
                    .collect();
                terms.push((-1, y(&b, a, k - 1, c).unwrap()));
                terms.push((-1, act(&b, a, k)));
                b.row(Tag::ShiftCover, terms, Sense::Ge, -1);
            }
        }
    }
    // shift_map: the chosen shift maps block k-1 into block k.
    for (a, data) in arrows.iter().enumerate() {
        for k in 2..=data.blocks {
            for &c in &data.cells {
                for &t in &shifts_from[a][&c] {
                    let target = c
                        .offset(t, p.rows(), p.cols())
                        .expect("shift stays on board");
                    let terms = vec![
                        (1, y(&b, a, k, target).unwrap()),
                        (-1, y(&b, a, k - 1, c).unwrap()),
                        (-1, trans(&b, a, k, t).unwrap()),
                    ];
                    b.row(Tag::ShiftMap, terms, Sense::Ge, -1);
                }
            }
        }
    }
    // Fixed inputs.
    for c in p.coords() {
        match p.state(c) {
            CellState::Shaded => b.row(Tag::Fix, vec![(1, x(c))], Sense::Eq, 0),
            CellState::GivenSquare => b.row(Tag::Fix, vec![(1, x(c))], Sense::Eq, 1),
            CellState::Empty => {}
        }
    }
    for (a, data) in arrows.iter().enumerate() {
        for k in 1..=data.blocks.min(2) {
            b.row(Tag::Fix, vec![(1, act(&b, a, k))], Sense::Eq, 1);
        }
    }

    let mut blocks = Vec::new();
    for (a, data) in arrows.iter().enumerate() {
        let local: HashMap<Coord, usize> = data
            .cells
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        let adjacent: Vec<Vec<usize>> = data
            .cells
            .iter()
            .map(|&c| {
                neighbors(p, c)
                    .filter_map(|nb| local.get(&nb).copied())
                    .collect()
            })
            .collect();
        for k in 1..=data.blocks {
            blocks.push(BlockVars {
                arrow: a,
                block: k,
                active: act(&b, a, k),
                cells: data
                    .cells
                    .iter()
                    .map(|&c| (c, y(&b, a, k, c).unwrap()))
                    .collect(),
                on_path: data.cells.iter().map(|&c| on_path(a, c)).collect(),
                adjacent: adjacent.clone(),
            });
        }
    }

    b.constraints.sort_by_key(|c| c.tag);
    let Builder {
        vars,
        lookup,
        constraints,
        ..
    } = b;
    IlpModel {
        puzzle: p.clone(),
        options: opts,
        big_m: board_m,
        vars,
        lookup,
        constraints,
        blocks,
    }
}

impl IlpModel {
    pub fn puzzle(&self) -> &Puzzle {
        &self.puzzle
    }

    pub fn options(&self) -> BuildOptions {
        self.options
    }

    /// The board-size big-M.
    pub fn big_m(&self) -> i64 {
        self.big_m
    }

    pub fn vars(&self) -> &[VarRef] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &VarRef {
        &self.vars[id.index()]
    }

    pub fn id(&self, key: &VarKey) -> Option<VarId> {
        self.lookup.get(key).copied()
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn blocks(&self) -> &[BlockVars] {
        &self.blocks
    }

    /// The cell variable of `c`.
    pub fn x(&self, c: Coord) -> VarId {
        VarId(self.puzzle.index(c) as u32)
    }

    /// Index of the first violated constraint, if any.
    pub fn first_violation(&self, values: &[i64]) -> Option<usize> {
        if values.len() != self.vars.len() {
            return Some(usize::MAX);
        }
        let out_of_bounds = self
            .vars
            .iter()
            .zip(values)
            .any(|(v, &val)| val < v.lower || val > v.upper);
        if out_of_bounds {
            return Some(usize::MAX);
        }
        self.constraints
            .iter()
            .position(|c| !c.is_satisfied(values))
    }

    pub fn is_satisfied_by(&self, values: &[i64]) -> bool {
        self.first_violation(values).is_none()
    }

    /// Reads the square layout off a full assignment.
    pub fn solution_from(&self, values: &[i64]) -> SolutionGrid {
        let p = &self.puzzle;
        let cells = (0..p.num_cells()).map(|i| values[i] == 1).collect();
        SolutionGrid::from_cells(p.rows(), p.cols(), cells)
    }

    /// Fills size, supply and flow variables from fixed binaries. Flows are
    /// routed along a BFS tree of each active block rooted at its anchor.
    /// Returns false if some active block is not a connected set with exactly
    /// one anchor.
    pub fn complete_integers(&self, values: &mut [i64]) -> bool {
        for v in self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_binary())
            .map(|(i, _)| i)
        {
            values[v] = 0;
        }
        for blk in &self.blocks {
            let (a, k) = (blk.arrow, blk.block);
            let members: Vec<usize> = (0..blk.cells.len())
                .filter(|&i| values[blk.cells[i].1.index()] == 1)
                .collect();
            let n = members.len() as i64;
            let size = self.id(&VarKey::SizeN { arrow: a, block: k }).unwrap();
            values[size.index()] = n;
            if members.is_empty() {
                continue;
            }
            let anchors: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&i| blk.on_path[i])
                .collect();
            let [root] = anchors[..] else {
                return false;
            };
            let supply = self
                .id(&VarKey::SupplyF {
                    arrow: a,
                    block: k,
                    cell: blk.cells[root].0,
                })
                .unwrap();
            values[supply.index()] = n;

            let mut parent = vec![usize::MAX; blk.cells.len()];
            let mut order = Vec::with_capacity(members.len());
            let mut in_block = vec![false; blk.cells.len()];
            for &i in &members {
                in_block[i] = true;
            }
            parent[root] = root;
            let mut queue = VecDeque::from([root]);
            while let Some(i) = queue.pop_front() {
                order.push(i);
                for &j in &blk.adjacent[i] {
                    if in_block[j] && parent[j] == usize::MAX {
                        parent[j] = i;
                        queue.push_back(j);
                    }
                }
            }
            if order.len() != members.len() {
                return false;
            }
            let mut subtree = vec![1i64; blk.cells.len()];
            for &i in order.iter().rev() {
                if i == root {
                    continue;
                }
                let par = parent[i];
                subtree[par] += subtree[i];
                let flow = self
                    .id(&VarKey::FlowF {
                        arrow: a,
                        block: k,
                        from: blk.cells[par].0,
                        to: blk.cells[i].0,
                    })
                    .expect("flow variable inside region");
                values[flow.index()] = subtree[i];
            }
        }
        true
    }

    /// A full feasible assignment inducing `s`, or `None` when `s` breaks a
    /// rule or cannot be represented in this model.
    pub fn completion(&self, s: &SolutionGrid) -> Option<Vec<i64>> {
        let p = &self.puzzle;
        let blocks = rules::extract_blocks(p, s).ok()?;
        let mut values = vec![0i64; self.vars.len()];
        for c in p.coords() {
            values[self.x(c).index()] = s.get(c) as i64;
        }
        let mut by_arrow: Vec<Vec<&rules::Block>> = vec![Vec::new(); p.arrows().len()];
        for b in &blocks {
            by_arrow[b.arrow_id].push(b);
        }
        for (a, list) in by_arrow.iter().enumerate() {
            for (pos, blk) in list.iter().enumerate() {
                let k = pos + 1;
                let active = self.id(&VarKey::ActB { arrow: a, block: k })?;
                values[active.index()] = 1;
                for &cell in &blk.cells {
                    let yv = self.id(&VarKey::BlockY {
                        arrow: a,
                        block: k,
                        cell,
                    })?;
                    values[yv.index()] = 1;
                }
                if k >= 2 {
                    let prev = list[pos - 1];
                    let shift = list[pos]
                        .cells
                        .iter()
                        .map(|&target| first_cell(prev).delta(target))
                        .find(|&t| {
                            prev.cells.iter().all(|&c| {
                                c.offset(t, p.rows(), p.cols())
                                    .is_some_and(|d| blk.cells.contains(&d))
                            })
                        })?;
                    let tv = self.id(&VarKey::TransT {
                        arrow: a,
                        block: k,
                        shift,
                    })?;
                    values[tv.index()] = 1;
                }
            }
        }
        if !self.complete_integers(&mut values) {
            return None;
        }
        self.is_satisfied_by(&values).then_some(values)
    }
}

fn first_cell(b: &rules::Block) -> Coord {
    *b.cells.iter().next().expect("non-empty block")
}

/// Forbids the square layout `s`: at least one cell must change.
pub fn add_exclusion(m: &IlpModel, s: &SolutionGrid) -> IlpModel {
    let mut out = m.clone();
    out.constraints.push(exclusion_row(m, s));
    out
}

pub(crate) fn exclusion_row(m: &IlpModel, s: &SolutionGrid) -> LinearConstraint {
    let p = &m.puzzle;
    let mut ones = 0;
    let terms = p
        .coords()
        .map(|c| {
            if s.get(c) {
                ones += 1;
                (-1, m.x(c))
            } else {
                (1, m.x(c))
            }
        })
        .collect();
    LinearConstraint {
        terms,
        sense: Sense::Ge,
        rhs: 1 - ones,
        tag: Tag::Excl,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Nonnegativity bounds of flows and supplies counted as rows.
    Bounds,
    /// Variable bounds are not rows.
    #[default]
    Structural,
}

impl std::str::FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bounds" => Ok(Convention::Bounds),
            "structural" => Ok(Convention::Structural),
            other => Err(format!("unknown convention `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub convention: Convention,
    pub vars: BTreeMap<Family, usize>,
    pub constraints: BTreeMap<Tag, usize>,
    pub total_vars: usize,
    pub total_constraints: usize,
}

pub fn stats(m: &IlpModel, convention: Convention) -> ModelStats {
    let mut vars: BTreeMap<Family, usize> = Family::ALL.iter().map(|&f| (f, 0)).collect();
    for v in &m.vars {
        *vars.get_mut(&v.family()).unwrap() += 1;
    }
    let mut constraints: BTreeMap<Tag, usize> = Tag::ALL.iter().map(|&t| (t, 0)).collect();
    for c in &m.constraints {
        *constraints.get_mut(&c.tag).unwrap() += 1;
    }
    if convention == Convention::Bounds {
        *constraints.get_mut(&Tag::FlowNonneg).unwrap() += vars[&Family::FlowF];
        *constraints.get_mut(&Tag::AnchorSupply).unwrap() += vars[&Family::SupplyF];
    }
    ModelStats {
        convention,
        total_vars: vars.values().sum(),
        total_constraints: constraints.values().sum(),
        vars,
        constraints,
    }
}

impl fmt::Display for ModelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<15} {:>8} {:>12}", "family", "vars", "constraints")?;
        for fam in Family::ALL {
            writeln!(
                f,
                "{:<15} {:>8} {:>12}",
                format!("{fam:?}"),
                self.vars[&fam],
                "-"
            )?;
        }
        for tag in Tag::ALL {
            writeln!(
                f,
                "{:<15} {:>8} {:>12}",
                tag.name(),
                "-",
                self.constraints[&tag]
            )?;
        }
        writeln!(
            f,
            "{:<15} {:>8} {:>12}",
            "total", self.total_vars, self.total_constraints
        )
    }
}
