//! Square grids anchored at a station, 9-cells, and nearest-station lookup.
//!
//! Cell `(c, r)` is the half-open square
//! `[ox + c*phi, ox + (c+1)*phi) x [oy + r*phi, oy + (r+1)*phi)`: it owns its
//! south and west edges except the south-east and north-west corners.

use std::cmp::Ordering;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::exact::{floor_i64, Rational};
use crate::model::{distance_sq, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub col: i64,
    pub row: i64,
}

impl Cell {
    pub const fn new(col: i64, row: i64) -> Self {
        Cell { col, row }
    }

    pub fn offset(self, dc: i64, dr: i64) -> Cell {
        Cell::new(self.col + dc, self.row + dr)
    }

    /// True when `o` belongs to the 9-cell around `self`.
    pub fn near(self, o: Cell) -> bool {
        (self.col - o.col).abs() <= 1 && (self.row - o.row).abs() <= 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    origin: Point,
    spacing: Rational,
}

impl Grid {
    pub fn new(origin: Point, spacing: Rational) -> Result<Self> {
        if !spacing.is_positive() {
            return Err(Error::Precondition("grid spacing must be positive".into()));
        }
        Ok(Grid { origin, spacing })
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn spacing(&self) -> &Rational {
        &self.spacing
    }

    pub fn vertex(&self, col: i64, row: i64) -> Point {
        Point::new(
            &self.origin.x + &self.spacing * Rational::from_integer(col.into()),
            &self.origin.y + &self.spacing * Rational::from_integer(row.into()),
        )
    }

    /// South-west and north-east corners.
    pub fn corners(&self, c: Cell) -> (Point, Point) {
        (self.vertex(c.col, c.row), self.vertex(c.col + 1, c.row + 1))
    }

    pub fn cell_area(&self) -> Rational {
        &self.spacing * &self.spacing
    }
}

pub fn cell_of(grid: &Grid, p: &Point) -> Cell {
    let c = floor_i64(&((&p.x - &grid.origin.x) / &grid.spacing));
    let r = floor_i64(&((&p.y - &grid.origin.y) / &grid.spacing));
    Cell::new(c, r)
}

pub fn nine_cell(c: Cell) -> [Cell; 9] {
    let mut out = [c; 9];
    let mut k = 0;
    for dc in -1..=1 {
        for dr in -1..=1 {
            out[k] = c.offset(dc, dr);
            k += 1;
        }
    }
    out
}

/// One unit edge on the outer boundary of a 9-cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerimeterEdge {
    pub a: Point,
    pub b: Point,
    pub exterior: Cell,
}

/// The 12 perimeter edges of the 9-cell around `c`, listed clockwise from the
/// west end of the north side, each tagged with the cell across it.
pub fn nine_cell_boundary_edges(grid: &Grid, c: Cell) -> Vec<PerimeterEdge> {
    let (x0, x3) = (c.col - 1, c.col + 2);
    let (y0, y3) = (c.row - 1, c.row + 2);
    let mut out = Vec::with_capacity(12);
    for k in 0..3 {
        let x = x0 + k;
        out.push(PerimeterEdge { a: grid.vertex(x, y3), b: grid.vertex(x + 1, y3), exterior: Cell::new(x, y3) });
    }
    for k in 0..3 {
        let y = y3 - k;
        out.push(PerimeterEdge { a: grid.vertex(x3, y), b: grid.vertex(x3, y - 1), exterior: Cell::new(x3, y - 1) });
    }
    for k in 0..3 {
        let x = x3 - k;
        out.push(PerimeterEdge { a: grid.vertex(x, y0), b: grid.vertex(x - 1, y0), exterior: Cell::new(x - 1, y0 - 1) });
    }
    for k in 0..3 {
        let y = y0 + k;
        out.push(PerimeterEdge { a: grid.vertex(x0, y), b: grid.vertex(x0, y + 1), exterior: Cell::new(x0 - 1, y) });
    }
    out
}

/// Exact kd-tree over station positions. Queries return a nearest station,
/// lowest index among equidistant ones.
#[derive(Clone, Debug)]
pub struct NearestIndex {
    points: Vec<Point>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

#[derive(Clone, Debug)]
struct Node {
    station: usize,
    vertical: bool,
    left: Option<usize>,
    right: Option<usize>,
}

impl NearestIndex {
    pub fn build(points: &[Point]) -> NearestIndex {
        let mut idx = NearestIndex { points: points.to_vec(), nodes: Vec::with_capacity(points.len()), root: None };
        let mut order: Vec<usize> = (0..points.len()).collect();
        idx.root = idx.build_rec(&mut order, 0);
        idx
    }

    fn key(&self, s: usize, vertical: bool) -> &Rational {
        if vertical {
            &self.points[s].x
        } else {
            &self.points[s].y
        }
    }

    fn build_rec(&mut self, items: &mut [usize], depth: usize) -> Option<usize> {
        if items.is_empty() {
            return None;
        }
        let vertical = depth.is_multiple_of(2);
        items.sort_by(|&a, &b| self.key(a, vertical).cmp(self.key(b, vertical)).then(a.cmp(&b)));
        let mid = items.len() / 2;
        let station = items[mid];
        let (lo, rest) = items.split_at_mut(mid);
        let left = self.build_rec(lo, depth + 1);
        let right = self.build_rec(&mut rest[1..], depth + 1);
        self.nodes.push(Node { station, vertical, left, right });
        Some(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nearest(&self, p: &Point) -> usize {
        let mut best: Option<(Rational, usize)> = None;
        if let Some(r) = self.root {
            self.search(r, p, &mut best);
        }
        best.expect("nearest index over an empty station set").1
    }

    fn better(cand: &(Rational, usize), best: &Option<(Rational, usize)>) -> bool {
        match best {
            None => true,
            Some(b) => match cand.0.cmp(&b.0) {
                Ordering::Less => true,
                Ordering::Equal => cand.1 < b.1,
                Ordering::Greater => false,
            },
        }
    }

    fn search(&self, n: usize, p: &Point, best: &mut Option<(Rational, usize)>) {
        let node = &self.nodes[n];
        let s = &self.points[node.station];
        let cand = (distance_sq(s, p), node.station);
        if Self::better(&cand, best) {
            *best = Some(cand);
        }
        let diff = if node.vertical { &p.x - &s.x } else { &p.y - &s.y };
        // equal keys may sit on either side, so ties visit both subtrees
        let (near, far) = if diff.is_negative() { (node.left, node.right) } else { (node.right, node.left) };
        if let Some(c) = near {
            self.search(c, p, best);
        }
        if let Some(c) = far {
            let d2 = &diff * &diff;
            if best.as_ref().is_none_or(|b| d2 <= b.0) {
                self.search(c, p, best);
            }
        }
    }
}

pub fn nearest_station(idx: &NearestIndex, p: &Point) -> usize {
    idx.nearest(p)
}
