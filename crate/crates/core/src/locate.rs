//! Approximate point location: each zone gets a grid whose cells are
//! certified inside (PLUS), certified outside (MINUS) or undecided (MAYBE).
//!
//! The MAYBE ring comes from tracing the zone boundary cell by cell. Grid
//! vertices exactly on the boundary are treated as inside, which amounts to
//! tracing a slightly enlarged zone; the cells around such vertices are added
//! to the ring explicitly so the true boundary is always covered.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{dyadic_floor, floor_i64, format_rational, parse_rational, sqrt_enclosure, to_f64, Rational};
use crate::filter::{Probe, Status};
use crate::geom::{cell_of, nine_cell, Cell, Grid, NearestIndex};
use crate::model::{Network, NetworkFile, Point};
use crate::poly::{count_distinct_roots, hear_poly_on_line, LineParam};
use crate::zones::{explicit_bounds, refined_bounds_with, unit_direction, BoundsSource, RadiusBounds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellClass {
    Plus,
    Minus,
    Maybe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryAnswer {
    In(usize),
    Maybe(usize),
    Out,
}

impl std::fmt::Display for QueryAnswer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueryAnswer::In(i) => write!(f, "IN {i}"),
            QueryAnswer::Maybe(i) => write!(f, "MAYBE {i}"),
            QueryAnswer::Out => write!(f, "OUT"),
        }
    }
}

fn check_eps(eps: &Rational) -> Result<()> {
    if !eps.is_positive() || eps >= &Rational::one() {
        return Err(Error::Epsilon);
    }
    Ok(())
}

/// `eps * inner^2 / (18 * outer)` before rounding.
pub fn grid_spacing_exact(bounds: &RadiusBounds, eps: &Rational) -> Result<Rational> {
    check_eps(eps)?;
    if !bounds.inner_lo.is_positive() || bounds.inner_lo > bounds.outer_hi {
        return Err(Error::Precondition("invalid radius bounds".into()));
    }
    Ok(eps * &bounds.inner_lo * &bounds.inner_lo / (Rational::from_integer(18.into()) * &bounds.outer_hi))
}

/// The grid spacing rounded down to a dyadic rational with 32 significant
/// bits, which keeps vertex coordinates exact in double precision.
pub fn grid_spacing(bounds: &RadiusBounds, eps: &Rational) -> Result<Rational> {
    Ok(dyadic_floor(&grid_spacing_exact(bounds, eps)?, 32))
}

/// Bounds used by the index: the explicit bounds intersected with bounds
/// refined from eight ray crossings. Both are sound, so their intersection is.
pub fn index_bounds(net: &Network, i: usize) -> Result<RadiusBounds> {
    let e = explicit_bounds(net, i)?;
    let dirs: Vec<Point> = (0..8).map(|k| unit_direction(std::f64::consts::PI * k as f64 / 4.0)).collect();
    let r = refined_bounds_with(net, i, &dirs, &Rational::new(1.into(), 1_000_000.into()))?;
    Ok(RadiusBounds {
        inner_lo: e.inner_lo.max(r.inner_lo),
        outer_hi: e.outer_hi.min(r.outer_hi),
        kappa: e.kappa,
        kappa_sq: e.kappa_sq,
        source: BoundsSource::Refined,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Side {
    S,
    E,
    N,
    W,
}

impl Side {
    fn opposite(self) -> Side {
        match self {
            Side::S => Side::N,
            Side::N => Side::S,
            Side::E => Side::W,
            Side::W => Side::E,
        }
    }

    fn step(self, c: Cell) -> Cell {
        match self {
            Side::S => c.offset(0, -1),
            Side::E => c.offset(1, 0),
            Side::N => c.offset(0, 1),
            Side::W => c.offset(-1, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Clockwise,
    CounterClockwise,
}

/// A boundary crossing on a cell side, numbered along the side in the
/// counter-clockwise direction of the cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Crossing {
    side: Side,
    ord: usize,
    /// Moving counter-clockwise around the cell, the crossing goes from
    /// outside the zone to inside.
    inward: bool,
}

/// The key of a unit edge: its lower-left vertex and direction.
type EdgeKey = (i64, i64, bool);

const SPLIT_DEPTH: u32 = 20;
const SPLIT_BUDGET: usize = 64;

pub(crate) struct Tracer<'a> {
    probe: Probe<'a>,
    grid: &'a Grid,
    net: &'a Network,
    i: usize,
    sx: f64,
    sy: f64,
    phi: f64,
    exact_vertices: HashMap<(i64, i64), Status>,
    exact_edges: HashMap<EdgeKey, usize>,
    on_vertices: Vec<(i64, i64)>,
    seen_on: HashSet<(i64, i64)>,
    pub sturm_calls: usize,
}

impl<'a> Tracer<'a> {
    pub fn new(net: &'a Network, i: usize, grid: &'a Grid) -> Self {
        let (sx, sy) = grid.origin().to_f64();
        Tracer {
            probe: Probe::new(net, i),
            grid,
            net,
            i,
            sx,
            sy,
            phi: to_f64(grid.spacing()),
            exact_vertices: HashMap::new(),
            exact_edges: HashMap::new(),
            on_vertices: Vec::new(),
            seen_on: HashSet::new(),
            sturm_calls: 0,
        }
    }

    fn vertex_f64(&self, c: i64, r: i64) -> (f64, f64, f64) {
        let dx = c as f64 * self.phi;
        let dy = r as f64 * self.phi;
        let perr = 4.0 * f64::EPSILON * (self.sx.abs() + self.sy.abs() + dx.abs() + dy.abs());
        (self.sx + dx, self.sy + dy, perr)
    }

    fn vertex(&mut self, c: i64, r: i64) -> Status {
        let (x, y, perr) = self.vertex_f64(c, r);
        if let Some(s) = self.probe.float_status(x, y, perr) {
            return s;
        }
        if let Some(&s) = self.exact_vertices.get(&(c, r)) {
            return s;
        }
        let s = self.probe.exact(&self.grid.vertex(c, r));
        self.exact_vertices.insert((c, r), s);
        if s == Status::On && self.seen_on.insert((c, r)) {
            self.on_vertices.push((c, r));
        }
        s
    }

    /// Crossings of the traced boundary with the unit edge `key`, whose
    /// endpoints have statuses `sa` and `sb`.
    fn edge(&mut self, key: EdgeKey, sa: Status, sb: Status) -> Result<usize> {
        match (sa.received(), sb.received()) {
            (true, true) => Ok(0),
            (true, false) | (false, true) => Ok(1),
            (false, false) => self.out_out(key),
        }
    }

    /// Both endpoints outside: either the edge misses the zone or it cuts
    /// through it (a tangency counts as a cut of the enlarged zone).
    fn out_out(&mut self, key: EdgeKey) -> Result<usize> {
        if let Some(&n) = self.exact_edges.get(&key) {
            return Ok(n);
        }
        let n = match self.bisect_out_out(key) {
            Some(n) => n,
            None => self.sturm_out_out(key)?,
        };
        self.exact_edges.insert(key, n);
        Ok(n)
    }

    /// Point at `k / 2^SPLIT_DEPTH` along the edge, in floats with its error.
    fn edge_point_f64(&self, key: EdgeKey, k: u64) -> (f64, f64, f64) {
        let (c, r, horizontal) = key;
        let t = k as f64 / (1u64 << SPLIT_DEPTH) as f64;
        let (fc, fr) = if horizontal { (c as f64 + t, r as f64) } else { (c as f64, r as f64 + t) };
        let (dx, dy) = (fc * self.phi, fr * self.phi);
        let perr = 4.0 * f64::EPSILON * (self.sx.abs() + self.sy.abs() + dx.abs() + dy.abs());
        (self.sx + dx, self.sy + dy, perr)
    }

    fn edge_point(&self, key: EdgeKey, k: u64) -> Point {
        let (c, r, horizontal) = key;
        let t = self.grid.spacing() * Rational::new(k.into(), (1u64 << SPLIT_DEPTH).into());
        let v = self.grid.vertex(c, r);
        if horizontal {
            Point::new(v.x + t, v.y)
        } else {
            Point::new(v.x, v.y + t)
        }
    }

    /// Bisects the edge until every piece carries a float certificate or an
    /// exact split point lies in the enlarged zone. `None` when the budget
    /// runs out.
    fn bisect_out_out(&self, key: EdgeKey) -> Option<usize> {
        let full = 1u64 << SPLIT_DEPTH;
        let mut stack = vec![(0u64, full)];
        let mut budget = SPLIT_BUDGET;
        while let Some((lo, hi)) = stack.pop() {
            if self.certify_piece(self.edge_point_f64(key, lo), self.edge_point_f64(key, hi)) {
                continue;
            }
            if hi - lo < 2 || budget == 0 {
                return None;
            }
            budget -= 1;
            let mid = (lo + hi) / 2;
            let (x, y, e) = self.edge_point_f64(key, mid);
            let st = self.probe.float_status(x, y, e).unwrap_or_else(|| self.probe.exact(&self.edge_point(key, mid)));
            if st != Status::Out {
                return Some(2);
            }
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
        Some(0)
    }

    fn sturm_out_out(&mut self, key: EdgeKey) -> Result<usize> {
        self.sturm_calls += 1;
        let (c, r, horizontal) = key;
        let a = self.grid.vertex(c, r);
        let d = if horizontal {
            Point::new(self.grid.spacing().clone(), Rational::zero())
        } else {
            Point::new(Rational::zero(), self.grid.spacing().clone())
        };
        let q = hear_poly_on_line(self.net, self.i, &LineParam::new(a, d)?);
        if q.is_zero() {
            return Err(Error::Inconsistent("zone boundary contains a grid line".into()));
        }
        match count_distinct_roots(&q, &Rational::zero(), &Rational::one())? {
            0 => Ok(0),
            1 | 2 => Ok(2),
            k => Err(Error::Inconsistent(format!("{k} boundary points on one edge; zone is not convex"))),
        }
    }

    /// Float certificate that the margin stays negative on the segment
    /// `a b`: the larger endpoint margin plus a second-derivative bound.
    fn certify_piece(&self, (xa, ya, ea): (f64, f64, f64), (xb, yb, eb): (f64, f64, f64)) -> bool {
        let (Some(ma), Some(mb)) = (self.probe.margin(xa, ya, ea), self.probe.margin(xb, yb, eb)) else {
            return false;
        };
        let top = (ma.g + ma.err).max(mb.g + mb.err);
        if top >= 0.0 {
            return false;
        }
        let len = (xb - xa).hypot(yb - ya) + 2.0 * ea.max(eb);
        let slack = 2.0 * ea.max(eb) + 1e-12 * self.phi;
        let mut m = 0.0;
        for j in 0..self.net.len() {
            let (px, py) = self.probe.station_f64(j);
            let d = seg_distance(px, py, xa, ya, xb, yb) * (1.0 - 1e-12) - slack;
            if !(d > 0.0) {
                return false;
            }
            m += self.probe.weight_f64(j) / (d * d * d * d);
        }
        let bend = 6.0 * m * len * len / 8.0 * 1.01;
        top + bend < 0.0
    }

    fn crossings(&mut self, cell: Cell) -> Result<Vec<Crossing>> {
        let (c, r) = (cell.col, cell.row);
        let sw = self.vertex(c, r);
        let se = self.vertex(c + 1, r);
        let ne = self.vertex(c + 1, r + 1);
        let nw = self.vertex(c, r + 1);
        let sides = [
            (Side::S, (c, r, true), sw, se),
            (Side::E, (c + 1, r, false), se, ne),
            (Side::N, (c, r + 1, true), ne, nw),
            (Side::W, (c, r, false), nw, sw),
        ];
        let mut out = Vec::with_capacity(4);
        for (side, key, a, b) in sides {
            // `a -> b` runs counter-clockwise around the cell
            let (ea, eb) = if matches!(side, Side::N | Side::W) { (b, a) } else { (a, b) };
            let n = self.edge(key, ea, eb)?;
            match n {
                0 => {}
                1 => out.push(Crossing { side, ord: 0, inward: !a.received() }),
                _ => {
                    out.push(Crossing { side, ord: 0, inward: true });
                    out.push(Crossing { side, ord: 1, inward: false });
                }
            }
        }
        Ok(out)
    }

    fn side_count(&mut self, cell: Cell, side: Side) -> Result<usize> {
        Ok(self.crossings(cell)?.iter().filter(|x| x.side == side).count())
    }

    /// Follows the boundary from `c1`, whose west side carries the starting
    /// crossing, until the walk closes. Returns every visited cell in order.
    pub fn trace(&mut self, c1: Cell, orientation: Orientation, max_steps: usize) -> Result<Vec<Cell>> {
        let cw = orientation == Orientation::Clockwise;
        let mut path = Vec::new();
        // state: current cell and the crossing through which the walk entered
        let (start_cell, start_entry) = if cw {
            (c1, (Side::W, 0))
        } else {
            let n = self.side_count(c1.offset(-1, 0), Side::E)?;
            (c1.offset(-1, 0), (Side::E, n.saturating_sub(1)))
        };
        let (mut cell, mut entry) = (start_cell, start_entry);
        loop {
            path.push(cell);
            if path.len() > max_steps {
                return Err(Error::Inconsistent("boundary walk did not close".into()));
            }
            let xs = self.crossings(cell)?;
            let inward_entry = cw;
            let pos = xs
                .iter()
                .position(|x| x.side == entry.0 && x.ord == entry.1 && x.inward == inward_entry)
                .ok_or_else(|| Error::Inconsistent(format!("no entry crossing in cell {cell:?}")))?;
            let k = xs.len();
            let exit = if cw { xs[(pos + k - 1) % k] } else { xs[(pos + 1) % k] };
            if exit.inward == inward_entry {
                return Err(Error::Inconsistent(format!("crossings do not alternate in cell {cell:?}")));
            }
            let n = xs.iter().filter(|x| x.side == exit.side).count();
            cell = exit.side.step(cell);
            entry = (exit.side.opposite(), n - 1 - exit.ord);
            if (cell, entry) == (start_cell, start_entry) {
                break;
            }
        }
        if !cw {
            path.rotate_right(1);
        }
        Ok(path)
    }

    /// Cells around grid vertices that lie exactly on the boundary.
    pub fn on_vertex_cells(&self) -> Vec<Cell> {
        self.on_vertices
            .iter()
            .flat_map(|&(c, r)| [Cell::new(c - 1, r - 1), Cell::new(c, r - 1), Cell::new(c - 1, r), Cell::new(c, r)])
            .collect()
    }

    /// The cell north of the station whose west side the boundary crosses.
    pub fn first_boundary_cell(&mut self, bounds: &RadiusBounds) -> Result<Cell> {
        let phi = self.grid.spacing();
        let mut lo = floor_i64(&(&bounds.inner_lo / phi));
        let mut hi = floor_i64(&(&bounds.outer_hi / phi)) + 1;
        if !self.vertex(0, lo).received() || self.vertex(0, hi).received() {
            return Err(Error::BoundsViolation("north column does not cross the boundary".into()));
        }
        while hi - lo > 1 {
            let m = lo + (hi - lo) / 2;
            if self.vertex(0, m).received() {
                lo = m;
            } else {
                hi = m;
            }
        }
        Ok(Cell::new(0, lo))
    }
}

fn seg_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0);
    let (qx, qy) = (ax + t * dx, ay + t * dy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

fn check_index_pre(net: &Network, i: usize) -> Result<()> {
    net.check_index(i)?;
    if net.is_trivial() {
        return Err(Error::TrivialNetwork);
    }
    if !net.is_uniform() {
        return Err(Error::NonUniform);
    }
    if net.beta() <= &Rational::one() {
        return Err(Error::BetaTooSmall);
    }
    Ok(())
}

pub fn find_first_boundary_cell(net: &Network, i: usize, grid: &Grid) -> Result<Cell> {
    check_index_pre(net, i)?;
    if net.is_colocated(i) {
        return Err(Error::DegenerateZone(i));
    }
    let bounds = explicit_bounds(net, i)?;
    Tracer::new(net, i, grid).first_boundary_cell(&bounds)
}

fn step_limit(grid: &Grid, bounds: &RadiusBounds) -> usize {
    let q = to_f64(&(&bounds.outer_hi / grid.spacing()));
    (64.0 * q + 4096.0).min(1e9) as usize
}

/// Selects the cells C_1, C_2, ... from a boundary walk: each is the first
/// visited cell outside the 9-cell of its predecessor.
pub fn select_ring_cells(path: &[Cell]) -> Vec<Cell> {
    let mut out: Vec<Cell> = Vec::new();
    for &c in path {
        if out.last().is_none_or(|&last| !last.near(c)) {
            out.push(c);
        }
    }
    out
}

/// Traces the boundary clockwise from `c1` and returns the selected cells.
pub fn brp(net: &Network, i: usize, grid: &Grid, c1: Cell) -> Result<Vec<Cell>> {
    Ok(select_ring_cells(&boundary_walk(net, i, grid, c1, Orientation::Clockwise)?))
}

/// Every cell the boundary walk visits, in order.
pub fn boundary_walk(net: &Network, i: usize, grid: &Grid, c1: Cell, orientation: Orientation) -> Result<Vec<Cell>> {
    check_index_pre(net, i)?;
    let bounds = explicit_bounds(net, i)?;
    Tracer::new(net, i, grid).trace(c1, orientation, step_limit(grid, &bounds))
}

pub type Columns = BTreeMap<i64, Vec<i64>>;

/// The union of 9-cells around `cells` plus `extra`, grouped by column.
pub fn classify_columns(cells: &[Cell], extra: &[Cell]) -> Columns {
    let mut all: Vec<(i64, i64)> = cells
        .iter()
        .flat_map(|&c| nine_cell(c))
        .chain(extra.iter().copied())
        .map(|c| (c.col, c.row))
        .collect();
    all.sort_unstable();
    all.dedup();
    let mut cols = Columns::new();
    for (c, r) in all {
        cols.entry(c).or_default().push(r);
    }
    cols
}

pub fn classify_cell(columns: &Columns, cell: Cell) -> CellClass {
    let Some(rows) = columns.get(&cell.col) else {
        return CellClass::Minus;
    };
    match rows.binary_search(&cell.row) {
        Ok(_) => CellClass::Maybe,
        Err(k) if k > 0 && k < rows.len() => CellClass::Plus,
        Err(_) => CellClass::Minus,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZoneIndex {
    pub station: usize,
    pub degenerate: bool,
    origin: Point,
    spacing: Rational,
    bounds: Option<RadiusBounds>,
    columns: Columns,
}

/// Diagnostics gathered while building one zone.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ZoneStats {
    pub walk_len: usize,
    pub ring_cells: usize,
    pub maybe_cells: usize,
    pub on_vertices: usize,
    pub sturm_calls: usize,
    pub max_column_rows: usize,
}

impl ZoneIndex {
    pub fn grid(&self) -> Option<Grid> {
        (!self.degenerate).then(|| Grid::new(self.origin.clone(), self.spacing.clone()).expect("positive spacing"))
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn spacing(&self) -> &Rational {
        &self.spacing
    }

    pub fn bounds(&self) -> Option<&RadiusBounds> {
        self.bounds.as_ref()
    }

    pub fn columns(&self) -> &Columns {
        &self.columns
    }

    pub fn maybe_count(&self) -> usize {
        self.columns.values().map(Vec::len).sum()
    }

    pub fn classify(&self, cell: Cell) -> CellClass {
        if self.degenerate {
            return CellClass::Minus;
        }
        classify_cell(&self.columns, cell)
    }

    /// Class of the cell holding `p`.
    pub fn classify_point(&self, p: &Point) -> CellClass {
        if self.degenerate {
            return CellClass::Minus;
        }
        let c = Cell::new(
            floor_i64(&((&p.x - &self.origin.x) / &self.spacing)),
            floor_i64(&((&p.y - &self.origin.y) / &self.spacing)),
        );
        self.classify(c)
    }

    /// PLUS cells as `(col, first_row, last_row)` runs.
    pub fn plus_runs(&self) -> Vec<(i64, i64, i64)> {
        let mut out = Vec::new();
        for (&c, rows) in &self.columns {
            for w in rows.windows(2) {
                if w[1] > w[0] + 1 {
                    out.push((c, w[0] + 1, w[1] - 1));
                }
            }
        }
        out
    }

    fn degenerate_zone(net: &Network, i: usize) -> ZoneIndex {
        ZoneIndex {
            station: i,
            degenerate: true,
            origin: net.position(i).clone(),
            spacing: Rational::zero(),
            bounds: None,
            columns: Columns::new(),
        }
    }
}

pub fn build_zone_index(net: &Network, i: usize, eps: &Rational) -> Result<ZoneIndex> {
    Ok(build_zone_index_with(net, i, eps, None)?.0)
}

/// Builds one zone, optionally forcing the grid spacing.
pub fn build_zone_index_with(
    net: &Network,
    i: usize,
    eps: &Rational,
    spacing: Option<&Rational>,
) -> Result<(ZoneIndex, ZoneStats)> {
    check_eps(eps)?;
    check_index_pre(net, i)?;
    if net.is_colocated(i) {
        return Ok((ZoneIndex::degenerate_zone(net, i), ZoneStats::default()));
    }
    let bounds = index_bounds(net, i)?;
    let phi = match spacing {
        Some(s) => s.clone(),
        None => grid_spacing(&bounds, eps)?,
    };
    let grid = Grid::new(net.position(i).clone(), phi.clone())?;
    let mut tracer = Tracer::new(net, i, &grid);
    let c1 = tracer.first_boundary_cell(&bounds)?;
    let path = tracer.trace(c1, Orientation::Clockwise, step_limit(&grid, &bounds))?;
    let ring = select_ring_cells(&path);
    let extra = tracer.on_vertex_cells();
    let columns = classify_columns(&ring, &extra);
    let stats = ZoneStats {
        walk_len: path.len(),
        ring_cells: ring.len(),
        maybe_cells: columns.values().map(Vec::len).sum(),
        on_vertices: tracer.on_vertices.len(),
        sturm_calls: tracer.sturm_calls,
        max_column_rows: columns.values().map(Vec::len).max().unwrap_or(0),
    };
    let zone = ZoneIndex { station: i, degenerate: false, origin: grid.origin().clone(), spacing: phi, bounds: Some(bounds), columns };
    Ok((zone, stats))
}

#[derive(Clone, Debug)]
pub struct DiagramIndex {
    network: Network,
    nearest: NearestIndex,
    zones: Vec<ZoneIndex>,
    eps: Rational,
}

impl PartialEq for DiagramIndex {
    fn eq(&self, o: &Self) -> bool {
        self.network == o.network && self.zones == o.zones && self.eps == o.eps
    }
}

impl DiagramIndex {
    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn zones(&self) -> &[ZoneIndex] {
        &self.zones
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn nearest(&self) -> &NearestIndex {
        &self.nearest
    }

    pub fn query(&self, p: &Point) -> QueryAnswer {
        query(self, p)
    }

    /// Replaces the stored MAYBE rows of one zone; for tests of the verifier.
    pub fn with_columns(mut self, zone: usize, columns: Columns) -> Self {
        self.zones[zone].columns = columns;
        self
    }
}

pub fn build_diagram_index(net: &Network, eps: &Rational) -> Result<DiagramIndex> {
    check_eps(eps)?;
    if net.is_trivial() {
        return Err(Error::TrivialNetwork);
    }
    let zones = (0..net.len())
        .into_par_iter()
        .map(|i| build_zone_index(net, i, eps))
        .collect::<Result<Vec<_>>>()?;
    let positions: Vec<Point> = net.stations().iter().map(|s| s.pos.clone()).collect();
    Ok(DiagramIndex { network: net.clone(), nearest: NearestIndex::build(&positions), zones, eps: eps.clone() })
}

pub fn query(idx: &DiagramIndex, p: &Point) -> QueryAnswer {
    let i = idx.nearest.nearest(p);
    if p == idx.network.position(i) {
        return QueryAnswer::In(i);
    }
    match idx.zones[i].classify_point(p) {
        CellClass::Plus => QueryAnswer::In(i),
        CellClass::Maybe => QueryAnswer::Maybe(i),
        CellClass::Minus => QueryAnswer::Out,
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexFile {
    version: u64,
    eps: String,
    network: NetworkFile,
    zones: Vec<ZoneFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneFile {
    station: usize,
    degenerate: bool,
    origin: [String; 2],
    phi: String,
    delta_lo: String,
    #[serde(rename = "Delta")]
    delta_hi: String,
    columns: Vec<ColumnFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnFile {
    col: i64,
    maybe_rows: Vec<i64>,
}

const CRC_TAG: &str = "CRC32 ";

pub fn serialize_index(idx: &DiagramIndex) -> Vec<u8> {
    let zero = Rational::zero();
    let file = IndexFile {
        version: 1,
        eps: format_rational(&idx.eps),
        network: idx.network.to_file(),
        zones: idx
            .zones
            .iter()
            .map(|z| ZoneFile {
                station: z.station,
                degenerate: z.degenerate,
                origin: [format_rational(&z.origin.x), format_rational(&z.origin.y)],
                phi: format_rational(&z.spacing),
                delta_lo: format_rational(z.bounds.as_ref().map_or(&zero, |b| &b.inner_lo)),
                delta_hi: format_rational(z.bounds.as_ref().map_or(&zero, |b| &b.outer_hi)),
                columns: z.columns.iter().map(|(&col, rows)| ColumnFile { col, maybe_rows: rows.clone() }).collect(),
            })
            .collect(),
    };
    let body = serde_json::to_string(&file).expect("index serialises");
    let crc = crc32fast::hash(body.as_bytes());
    format!("{body}\n{CRC_TAG}{crc:08x}\n").into_bytes()
}

pub fn deserialize_index(bytes: &[u8]) -> Result<DiagramIndex> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Parse("index is not UTF-8".into()))?;
    let trimmed = text.strip_suffix('\n').unwrap_or(text);
    let (body, tail) = trimmed
        .rsplit_once('\n')
        .ok_or_else(|| Error::Parse("index has no checksum line".into()))?;
    let hex = tail.strip_prefix(CRC_TAG).ok_or_else(|| Error::Parse("malformed checksum line".into()))?;
    let want = u32::from_str_radix(hex, 16).map_err(|_| Error::Parse("malformed checksum".into()))?;
    if crc32fast::hash(body.as_bytes()) != want {
        return Err(Error::Checksum);
    }
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| Error::Parse(e.to_string()))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(1) => {}
        Some(v) => return Err(Error::Version(v)),
        None => return Err(Error::Parse("missing version".into())),
    }
    let file: IndexFile = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let network = Network::from_file(file.network)?;
    let eps = parse_rational(&file.eps)?;
    check_eps(&eps)?;
    if file.zones.len() != network.len() {
        return Err(Error::Parse("zone count differs from station count".into()));
    }
    let mut zones = Vec::with_capacity(file.zones.len());
    for (k, z) in file.zones.into_iter().enumerate() {
        if z.station != k {
            return Err(Error::Parse("zones must be listed in station order".into()));
        }
        let origin = Point::new(parse_rational(&z.origin[0])?, parse_rational(&z.origin[1])?);
        if &origin != network.position(k) {
            return Err(Error::Parse(format!("zone {k} is not anchored at its station")));
        }
        let mut columns = Columns::new();
        for c in z.columns {
            if c.maybe_rows.is_empty() || !c.maybe_rows.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Parse(format!("rows of column {} must be strictly increasing", c.col)));
            }
            if columns.insert(c.col, c.maybe_rows).is_some() {
                return Err(Error::Parse(format!("column {} listed twice", c.col)));
            }
        }
        if z.degenerate {
            zones.push(ZoneIndex { station: k, degenerate: true, origin, spacing: Rational::zero(), bounds: None, columns });
            continue;
        }
        let spacing = parse_rational(&z.phi)?;
        if !spacing.is_positive() {
            return Err(Error::Parse(format!("zone {k} has non-positive spacing")));
        }
        let k2 = network.kappa_sq(k);
        let bounds = RadiusBounds {
            inner_lo: parse_rational(&z.delta_lo)?,
            outer_hi: parse_rational(&z.delta_hi)?,
            kappa: sqrt_enclosure(&k2).lo,
            kappa_sq: k2,
            source: BoundsSource::Refined,
        };
        zones.push(ZoneIndex { station: k, degenerate: false, origin, spacing, bounds: Some(bounds), columns });
    }
    let positions: Vec<Point> = network.stations().iter().map(|s| s.pos.clone()).collect();
    Ok(DiagramIndex { nearest: NearestIndex::build(&positions), network, zones, eps })
}

/// Uniformly random point of a cell, with coordinates on a `2^-20` sub-grid.
pub fn random_point_in_cell<R: rand::Rng>(rng: &mut R, grid: &Grid, cell: Cell) -> Point {
    const SUB: i64 = 1 << 20;
    let u = rng.gen_range(0..SUB);
    let v = rng.gen_range(0..SUB);
    let phi = grid.spacing();
    let den = phi.denom() * SUB;
    let coord = |o: &Rational, k: i64, w: i64| o + Rational::new(phi.numer() * (BigInt::from(k) * SUB + w), den.clone());
    let x = coord(&grid.origin().x, cell.col, u);
    let y = coord(&grid.origin().y, cell.row, v);
    Point::new(x, y)
}

/// Upper bound `ceil(18 pi outer / phi)` on the MAYBE count, pi rounded up.
pub fn maybe_count_bound(zone: &ZoneIndex) -> Option<u64> {
    let b = zone.bounds.as_ref()?;
    let q = Rational::from_integer(18.into()) * Rational::new(355.into(), 113.into()) * &b.outer_hi / &zone.spacing;
    q.ceil().to_integer().to_u64()
}

pub fn cell_of_point(zone: &ZoneIndex, p: &Point) -> Option<Cell> {
    zone.grid().map(|g| cell_of(&g, p))
}
