//! MapReduce arrays (MRAs).
//!
//! An MRA is an `F × K` grid of stars and integers where every integer occurs
//! at least twice, and any two equal integers sit in distinct rows and
//! distinct columns with stars at both crossing cells. [`build_mra`] produces
//! one from a Steiner system: rows are points, columns are pairs `(A, U)` of a
//! block and one of its t-subsets, and the cell `(λ, (A, U))` is a star when
//! `λ ∈ A` and otherwise the lexicographic rank of `{λ} ∪ U` among
//! `(t+1)`-subsets.
//!
//! [`validate_mra`] accepts arbitrary grids and does not look at labels, so it
//! also serves as an independent check on the builder.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::designs::Design;
use crate::par::{self, Exec};
use crate::subsets::{binomial, rank_subset, KSubset, SubsetError};

#[derive(Debug, Error)]
pub enum MraError {
    #[error("MRA construction needs a Steiner system (m = 1), got m = {0}")]
    UnsupportedDesign(usize),
    #[error("parameters need Λ > α ≥ t ≥ 1 (Λ={num_points}, α={alpha}, t={t})")]
    Parameters {
        num_points: usize,
        alpha: usize,
        t: usize,
    },
    #[error(transparent)]
    Subset(#[from] SubsetError),
    #[error("grid shape: {0}")]
    Shape(String),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed MRA CSV: {0}")]
    Malformed(String),
    #[error("identity violated: {0}")]
    Identity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MraEntry {
    Star,
    Int(u64),
}

impl MraEntry {
    pub fn is_star(self) -> bool {
        self == MraEntry::Star
    }

    pub fn as_int(self) -> Option<u64> {
        match self {
            MraEntry::Int(s) => Some(s),
            MraEntry::Star => None,
        }
    }
}

impl fmt::Display for MraEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MraEntry::Star => f.write_str("*"),
            MraEntry::Int(s) => write!(f, "{s}"),
        }
    }
}

impl std::str::FromStr for MraEntry {
    type Err = MraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "*" => Ok(MraEntry::Star),
            other => other
                .parse()
                .map(MraEntry::Int)
                .map_err(|_| MraError::Malformed(format!("bad cell {other:?}"))),
        }
    }
}

/// Row-major `rows × cols` grid of entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    cells: Vec<MraEntry>,
}

/// Cell coordinates, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, cells: Vec<MraEntry>) -> Result<Self, MraError> {
        if cells.len() != rows * cols {
            return Err(MraError::Shape(format!(
                "{} cells for a {rows}x{cols} grid",
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_rows(rows: Vec<Vec<MraEntry>>) -> Result<Self, MraError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MraError::Shape("ragged rows".into()));
        }
        let n = rows.len();
        Self::new(n, cols, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> MraEntry {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, entry: MraEntry) {
        self.cells[row * self.cols + col] = entry;
    }

    pub fn row(&self, row: usize) -> &[MraEntry] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    /// Positions of every integer, in row-major order per value.
    pub fn occurrences(&self) -> BTreeMap<u64, Vec<Cell>> {
        let mut map: BTreeMap<u64, Vec<Cell>> = BTreeMap::new();
        for (i, e) in self.cells.iter().enumerate() {
            if let MraEntry::Int(s) = *e {
                map.entry(s).or_default().push(Cell {
                    row: i / self.cols,
                    col: i % self.cols,
                });
            }
        }
        map
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    /// Every integer occurs exactly `g` times.
    Regular(usize),
    Irregular,
}

impl Regularity {
    pub fn g(self) -> Option<usize> {
        match self {
            Regularity::Regular(g) => Some(g),
            Regularity::Irregular => None,
        }
    }
}

impl Serialize for Regularity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Regularity::Regular(g) => s.serialize_u64(*g as u64),
            Regularity::Irregular => s.serialize_str("irregular"),
        }
    }
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::Regular(g) => write!(f, "{g}"),
            Regularity::Irregular => f.write_str("irregular"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MraViolation {
    /// C1: the integer occurs only once.
    SingleOccurrence { value: u64, at: Cell },
    SameRow {
        value: u64,
        first: Cell,
        second: Cell,
    },
    SameColumn {
        value: u64,
        first: Cell,
        second: Cell,
    },
    /// C2: a crossing cell of two equal integers is not a star.
    CrossingNotStar {
        value: u64,
        first: Cell,
        second: Cell,
        crossing: Cell,
    },
}

impl MraViolation {
    fn anchor(&self) -> (Cell, u64) {
        match *self {
            Self::SingleOccurrence { value, at } => (at, value),
            Self::SameRow { value, first, .. }
            | Self::SameColumn { value, first, .. }
            | Self::CrossingNotStar { value, first, .. } => (first, value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MraReport {
    pub is_mra: bool,
    pub g: Regularity,
    /// Number of distinct integers.
    pub s: usize,
    pub violations: Vec<MraViolation>,
}

pub fn validate_mra(grid: &Grid) -> MraReport {
    validate_mra_with(grid, Exec::default())
}

/// Checks C1 and C2 over every pair of equal integers. Violations are sorted
/// by the position of their first cell, independent of `exec`.
pub fn validate_mra_with(grid: &Grid, exec: Exec) -> MraReport {
    let occurrences: Vec<(u64, Vec<Cell>)> = grid.occurrences().into_iter().collect();
    let per_value = par::map_slice(exec, &occurrences, |(value, cells)| {
        let value = *value;
        let mut out = Vec::new();
        if cells.len() == 1 {
            out.push(MraViolation::SingleOccurrence {
                value,
                at: cells[0],
            });
        }
        for (i, &first) in cells.iter().enumerate() {
            for &second in &cells[i + 1..] {
                if first.row == second.row {
                    out.push(MraViolation::SameRow {
                        value,
                        first,
                        second,
                    });
                } else if first.col == second.col {
                    out.push(MraViolation::SameColumn {
                        value,
                        first,
                        second,
                    });
                } else {
                    for crossing in [
                        Cell {
                            row: first.row,
                            col: second.col,
                        },
                        Cell {
                            row: second.row,
                            col: first.col,
                        },
                    ] {
                        if !grid.get(crossing.row, crossing.col).is_star() {
                            out.push(MraViolation::CrossingNotStar {
                                value,
                                first,
                                second,
                                crossing,
                            });
                        }
                    }
                }
            }
        }
        out
    });
    let mut violations: Vec<MraViolation> = per_value.into_iter().flatten().collect();
    violations.sort_by_key(MraViolation::anchor);

    let multiplicities: BTreeSet<usize> = occurrences.iter().map(|(_, c)| c.len()).collect();
    let g = match (multiplicities.len(), multiplicities.first()) {
        (1, Some(&g)) if g >= 2 => Regularity::Regular(g),
        _ => Regularity::Irregular,
    };
    MraReport {
        is_mra: violations.is_empty(),
        g,
        s: occurrences.len(),
        violations,
    }
}

/// Column label `(A, U)` with the index of `A` in design block order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnLabel {
    pub block_index: usize,
    pub block: KSubset,
    pub subset: KSubset,
}

/// An MRA built from a design, with row and column labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mra {
    num_points: usize,
    alpha: usize,
    t: usize,
    columns: Vec<ColumnLabel>,
    grid: Grid,
}

impl Mra {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn columns(&self) -> &[ColumnLabel] {
        &self.columns
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Row labels are the points `1..=Λ`.
    pub fn row_labels(&self) -> Vec<usize> {
        (1..=self.num_points).collect()
    }

    /// Entry at point `lambda` (1-based) and column `col` (0-based).
    pub fn entry(&self, lambda: usize, col: usize) -> MraEntry {
        self.grid.get(lambda - 1, col)
    }

    pub fn num_blocks(&self) -> usize {
        self.columns.last().map_or(0, |c| c.block_index + 1)
    }

    /// Number of columns per block, `C(α, t)`.
    pub fn cols_per_block(&self) -> usize {
        binomial(self.alpha, self.t).expect("small") as usize
    }

    /// Column range belonging to the block at `block_index`.
    pub fn block_columns(&self, block_index: usize) -> std::ops::Range<usize> {
        let w = self.cols_per_block();
        block_index * w..(block_index + 1) * w
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        export_mra(self, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// Builds the `Λ × C(Λ, t)` array from a `t-(Λ, α, 1)` design.
pub fn build_mra(design: &Design) -> Result<Mra, MraError> {
    build_mra_with(design, Exec::default())
}

pub fn build_mra_with(design: &Design, exec: Exec) -> Result<Mra, MraError> {
    if design.m() != 1 {
        return Err(MraError::UnsupportedDesign(design.m()));
    }
    let (num_points, alpha, t) = (design.num_points(), design.alpha(), design.t());
    if !(num_points > alpha && alpha >= t && t >= 1) {
        return Err(MraError::Parameters {
            num_points,
            alpha,
            t,
        });
    }
    let columns: Vec<ColumnLabel> = design
        .blocks()
        .iter()
        .enumerate()
        .flat_map(|(block_index, block)| {
            block
                .subsets_of_size(t)
                .into_iter()
                .map(move |subset| ColumnLabel {
                    block_index,
                    block: block.clone(),
                    subset,
                })
        })
        .collect();
    let rows = par::map_range(exec, num_points, |row| -> Result<Vec<MraEntry>, MraError> {
        let lambda = row + 1;
        columns
            .iter()
            .map(|col| {
                if col.block.contains(lambda) {
                    Ok(MraEntry::Star)
                } else {
                    Ok(MraEntry::Int(rank_subset(
                        num_points,
                        &col.subset.with(lambda),
                    )?))
                }
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Mra {
        num_points,
        alpha,
        t,
        columns,
        grid: Grid::from_rows(rows)?,
    })
}

/// `(F, K, S, g)` predicted for the array built from a `t-(Λ, α, 1)` design.
pub fn expected_parameters(num_points: usize, alpha: usize, t: usize) -> (usize, u64, u64, usize) {
    let k = binomial(num_points, t).expect("small");
    let s = k * (num_points - alpha) as u64 / (t as u64 + 1);
    (num_points, k, s, t + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MraStats {
    pub s: usize,
    pub g: Regularity,
    pub stars_per_column: Vec<usize>,
    pub stars_per_row: Vec<usize>,
    /// Ranks in `[C(Λ, t+1)]` that never appear in the grid.
    pub missing_ranks: BTreeSet<u64>,
    pub s_prime: usize,
}

/// Counts the array's structure and checks `S + S' = C(Λ, t+1)` and
/// `S' = C(Λ, t)(α − t)/(t + 1)`.
pub fn mra_stats(mra: &Mra) -> Result<MraStats, MraError> {
    let grid = &mra.grid;
    let occurrences = grid.occurrences();
    let multiplicities: BTreeSet<usize> = occurrences.values().map(Vec::len).collect();
    let g = match (multiplicities.len(), multiplicities.first()) {
        (1, Some(&g)) if g >= 2 => Regularity::Regular(g),
        _ => Regularity::Irregular,
    };
    let stars_per_column = (0..grid.cols())
        .map(|c| {
            (0..grid.rows())
                .filter(|&r| grid.get(r, c).is_star())
                .count()
        })
        .collect();
    let stars_per_row = (0..grid.rows())
        .map(|r| grid.row(r).iter().filter(|e| e.is_star()).count())
        .collect();
    let total = binomial(mra.num_points, mra.t + 1)?;
    let missing_ranks: BTreeSet<u64> = (1..=total)
        .filter(|r| !occurrences.contains_key(r))
        .collect();
    let stats = MraStats {
        s: occurrences.len(),
        g,
        stars_per_column,
        stars_per_row,
        s_prime: missing_ranks.len(),
        missing_ranks,
    };

    if (stats.s + stats.s_prime) as u64 != total {
        return Err(MraError::Identity(format!(
            "S + S' = {} + {} != C({}, {}) = {total}",
            stats.s,
            stats.s_prime,
            mra.num_points,
            mra.t + 1
        )));
    }
    let s_prime_closed =
        binomial(mra.num_points, mra.t)? * (mra.alpha - mra.t) as u64 / (mra.t as u64 + 1);
    if stats.s_prime as u64 != s_prime_closed {
        return Err(MraError::Identity(format!(
            "S' = {} but C(Λ,t)(α−t)/(t+1) = {s_prime_closed}",
            stats.s_prime
        )));
    }
    Ok(stats)
}

/// Writes the labelled array as CSV: a block-label header row, a t-subset
/// header row, then one row per point. Sets use [`KSubset::render`] with
/// `n = Λ`.
pub fn export_mra<W: Write>(mra: &Mra, out: W) -> Result<(), MraError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let n = mra.num_points;
    let mut header = vec![String::new()];
    header.extend(mra.columns.iter().map(|c| c.block.render(n)));
    w.write_record(&header)?;
    let mut header = vec![String::new()];
    header.extend(mra.columns.iter().map(|c| c.subset.render(n)));
    w.write_record(&header)?;
    for row in 0..mra.grid.rows() {
        let mut record = vec![KSubset::singleton(row + 1).render(n)];
        record.extend(mra.grid.row(row).iter().map(ToString::to_string));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn import_mra<R: Read>(input: R) -> Result<Mra, MraError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let records = reader.records().collect::<Result<Vec<_>, _>>()?;
    if records.len() < 3 {
        return Err(MraError::Malformed("missing header or data rows".into()));
    }
    // the set notation depends on Λ, which is the number of data rows
    let num_points = records.len() - 2;
    let parse_set = |text: &str| {
        KSubset::parse_braced(text, num_points)
            .ok_or_else(|| MraError::Malformed(format!("bad set {text:?}")))
    };
    let blocks = records[0]
        .iter()
        .skip(1)
        .map(parse_set)
        .collect::<Result<Vec<_>, _>>()?;
    let subsets = records[1]
        .iter()
        .skip(1)
        .map(parse_set)
        .collect::<Result<Vec<_>, _>>()?;
    if blocks.is_empty() || blocks.len() != subsets.len() {
        return Err(MraError::Malformed("header rows disagree".into()));
    }
    let alpha = blocks[0].len();
    let t = subsets[0].len();

    let mut columns = Vec::with_capacity(blocks.len());
    let mut block_index = 0;
    for (i, (block, subset)) in blocks.into_iter().zip(subsets).enumerate() {
        if i > 0 && columns.last().map(|c: &ColumnLabel| &c.block) != Some(&block) {
            block_index += 1;
        }
        if block.len() != alpha || subset.len() != t || !subset.is_subset_of(&block) {
            return Err(MraError::Malformed(format!(
                "column {} label ({block}, {subset}) inconsistent",
                i + 1
            )));
        }
        columns.push(ColumnLabel {
            block_index,
            block,
            subset,
        });
    }

    let mut rows = Vec::with_capacity(records.len() - 2);
    for (i, record) in records[2..].iter().enumerate() {
        let label = record.get(0).map(parse_set).transpose()?;
        if label != Some(KSubset::singleton(i + 1)) {
            return Err(MraError::Malformed(format!(
                "row {} label out of order",
                i + 1
            )));
        }
        let row = record
            .iter()
            .skip(1)
            .map(str::parse)
            .collect::<Result<Vec<MraEntry>, _>>()?;
        rows.push(row);
    }
    let grid = Grid::from_rows(rows)?;
    if grid.cols() != columns.len() {
        return Err(MraError::Malformed("row width differs from header".into()));
    }
    Ok(Mra {
        num_points,
        alpha,
        t,
        columns,
        grid,
    })
}
