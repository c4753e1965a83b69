//! Radius bounds for reception zones, closed forms for two stations, and the
//! brute-force oracles (ray search, probes, rasterisation, area counts).

use std::f64::consts::{FRAC_PI_2, PI};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{from_f64, sqrt_enclosure, to_f64, Enclosure, Rational};
use crate::filter::{Probe, Status};
use crate::model::{distance_sq, Network, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundsSource {
    Explicit,
    Refined,
}

/// Sound radius bounds around a station: every disc of radius `inner_lo`
/// lies in the zone and the zone lies in the disc of radius `outer_hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadiusBounds {
    /// Lower bound on the inscribed radius.
    pub inner_lo: Rational,
    /// Upper bound on the circumscribed radius.
    pub outer_hi: Rational,
    /// Lower enclosure end of the distance to the nearest other station.
    pub kappa: Rational,
    pub kappa_sq: Rational,
    pub source: BoundsSource,
}

impl RadiusBounds {
    pub fn ratio_f64(&self) -> f64 {
        to_f64(&(&self.outer_hi / &self.inner_lo))
    }
}

pub(crate) fn check_zone(net: &Network, i: usize) -> Result<()> {
    net.check_index(i)?;
    if !net.is_uniform() {
        return Err(Error::NonUniform);
    }
    if net.beta() <= &Rational::one() {
        return Err(Error::BetaTooSmall);
    }
    if net.is_colocated(i) {
        return Err(Error::DegenerateZone(i));
    }
    Ok(())
}

pub fn explicit_bounds(net: &Network, i: usize) -> Result<RadiusBounds> {
    check_zone(net, i)?;
    let k2 = net.kappa_sq(i);
    let kappa = sqrt_enclosure(&k2);
    let nk = net.noise() * &k2;
    let n1 = Rational::from_integer(BigInt::from(net.len() - 1));
    let one = Rational::one();
    let near = sqrt_enclosure(&(net.beta() * (&n1 + &nk)));
    let far = sqrt_enclosure(&(net.beta() * (&one + &nk)));
    if far.lo <= one {
        return Err(Error::BetaTooSmall);
    }
    Ok(RadiusBounds {
        inner_lo: &kappa.lo / (&near.hi + &one),
        outer_hi: &kappa.hi / (&far.lo - &one),
        kappa: kappa.lo,
        kappa_sq: k2,
        source: BoundsSource::Explicit,
    })
}

/// Right and left extents of zone 0 on the axis for stations at 0 (power 1)
/// and 1 (power `p1`), no noise.
pub fn two_station_extent(p1: &Rational, beta: &Rational) -> Result<(Enclosure, Enclosure)> {
    let x = beta * p1;
    let one = Rational::one();
    if x <= one {
        return Err(Error::Precondition("beta * power must exceed 1".into()));
    }
    let r = sqrt_enclosure(&x);
    if r.lo <= one {
        return Err(Error::Precondition("beta * power too close to 1".into()));
    }
    let right = Enclosure::new((&r.hi + &one).recip(), (&r.lo + &one).recip());
    let left = Enclosure::new(-(&r.lo - &one).recip(), -(&r.hi - &one).recip());
    Ok((right, left))
}

/// Enclosure of `(sqrt(beta) + 1) / (sqrt(beta) - 1)`.
pub fn fatness_bound(beta: &Rational) -> Result<Enclosure> {
    let one = Rational::one();
    let r = sqrt_enclosure(beta);
    if r.lo <= one {
        return Err(Error::BetaTooSmall);
    }
    Ok(Enclosure::new((&r.hi + &one) / (&r.hi - &one), (&r.lo + &one) / (&r.lo - &one)))
}

/// An exactly unit rational vector close to angle `theta`.
pub fn unit_direction(theta: f64) -> Point {
    let q = (theta / FRAC_PI_2).floor();
    let rest = theta - q * FRAC_PI_2;
    let scale = 1i64 << 20;
    let k = ((rest * 0.5).tan() * scale as f64).round().clamp(0.0, scale as f64) as i64;
    let t = Rational::new(k.into(), scale.into());
    let one = Rational::one();
    let den = &one + &t * &t;
    let c = (&one - &t * &t) / &den;
    let s = (&t + &t) / &den;
    match (q as i64).rem_euclid(4) {
        0 => Point::new(c, s),
        1 => Point::new(-s, c),
        2 => Point::new(-c, -s),
        _ => Point::new(s, -c),
    }
}

/// Ray crossings of one zone boundary.
pub struct RaySearch<'a> {
    probe: Probe<'a>,
    bounds: RadiusBounds,
}

impl<'a> RaySearch<'a> {
    pub fn new(net: &'a Network, i: usize) -> Result<Self> {
        let bounds = explicit_bounds(net, i)?;
        Ok(RaySearch { probe: Probe::new(net, i), bounds })
    }

    pub fn bounds(&self) -> &RadiusBounds {
        &self.bounds
    }

    fn at(&self, d: &Point, t: &Rational) -> Point {
        self.probe.network().position(self.probe.station()).add(&d.scale(t))
    }

    /// Enclosure `[r-, r+]` of the crossing distance along `dir`, with
    /// `r+ / r- <= 1 + rel_tol`.
    pub fn crossing(&self, dir: &Point, rel_tol: &Rational) -> Result<Enclosure> {
        if dir.is_zero() {
            return Err(Error::Precondition("direction must be nonzero".into()));
        }
        if !rel_tol.is_positive() || rel_tol > &Rational::one() {
            return Err(Error::Precondition("relative tolerance must lie in (0, 1]".into()));
        }
        let len = sqrt_enclosure(&(&dir.x * &dir.x + &dir.y * &dir.y));
        let dist = |t: &Rational| Enclosure::new(t * &len.lo, t * &len.hi);
        let lo0 = &self.bounds.inner_lo / &len.hi;
        let hi0 = &self.bounds.outer_hi / &len.lo;
        match self.probe.status(&self.at(dir, &lo0)) {
            Status::Out => return Err(Error::BoundsViolation("point at the inner bound is not received".into())),
            Status::On => return Ok(dist(&lo0)),
            Status::In => {}
        }
        match self.probe.status(&self.at(dir, &hi0)) {
            Status::In => return Err(Error::BoundsViolation("point at the outer bound is received".into())),
            Status::On => return Ok(dist(&hi0)),
            Status::Out => {}
        }
        let half = rel_tol / Rational::from_integer(2.into());
        if let Some(e) = self.float_bracket(dir, &lo0, &hi0, &half)? {
            return Ok(dist(&e.0).hull(&dist(&e.1)));
        }
        let factor = Rational::one() + &half;
        let (mut lo, mut hi) = (lo0, hi0);
        while hi > &lo * &factor {
            let mid = (&lo + &hi) / Rational::from_integer(2.into());
            match self.probe.status(&self.at(dir, &mid)) {
                Status::In => lo = mid,
                Status::Out => hi = mid,
                Status::On => return Ok(dist(&mid)),
            }
        }
        Ok(Enclosure::new(&lo * &len.lo, &hi * &len.hi))
    }

    /// Float bisection followed by an exact check of a narrow bracket.
    fn float_bracket(
        &self,
        dir: &Point,
        lo0: &Rational,
        hi0: &Rational,
        half: &Rational,
    ) -> Result<Option<(Rational, Rational)>> {
        let (sx, sy) = self.probe.station_f64(self.probe.station());
        let (dx, dy) = dir.to_f64();
        let (mut a, mut b) = (to_f64(lo0), to_f64(hi0));
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            match self.probe.margin(sx + m * dx, sy + m * dy, 0.0) {
                Some(g) if g.g >= 0.0 => a = m,
                Some(_) => b = m,
                None => return Ok(None),
            }
        }
        let t = 0.5 * (a + b);
        let w = to_f64(half) * 0.45;
        let (Some(lo), Some(hi)) = (from_f64(t * (1.0 - w)), from_f64(t * (1.0 + w))) else {
            return Ok(None);
        };
        let lo = if &lo < lo0 { lo0.clone() } else { lo };
        let hi = if &hi > hi0 { hi0.clone() } else { hi };
        if hi > &lo * (Rational::one() + half) {
            return Ok(None);
        }
        let sl = self.probe.status(&self.at(dir, &lo));
        let sh = self.probe.status(&self.at(dir, &hi));
        Ok(match (sl, sh) {
            (Status::On, _) => Some((lo.clone(), lo)),
            (_, Status::On) => Some((hi.clone(), hi)),
            (Status::In, Status::Out) => Some((lo, hi)),
            _ => None,
        })
    }
}

impl Enclosure {
    pub fn hull(&self, o: &Enclosure) -> Enclosure {
        Enclosure::new(self.lo.clone().min(o.lo.clone()), self.hi.clone().max(o.hi.clone()))
    }
}

pub fn boundary_ray_search(net: &Network, i: usize, dir: &Point, rel_tol: &Rational) -> Result<Enclosure> {
    RaySearch::new(net, i)?.crossing(dir, rel_tol)
}

pub fn default_rel_tol() -> Rational {
    Rational::new(1.into(), 1000.into())
}

pub fn refined_bounds(net: &Network, i: usize) -> Result<RadiusBounds> {
    refined_bounds_with(net, i, &[Point::from_ints(0, 1)], &default_rel_tol())
}

/// Bounds from ray crossings and the fatness constant `F`: the largest
/// crossing divided by `F` bounds the inscribed radius from below and the
/// smallest crossing times `F` bounds the circumscribed radius from above.
pub fn refined_bounds_with(net: &Network, i: usize, dirs: &[Point], rel_tol: &Rational) -> Result<RadiusBounds> {
    let search = RaySearch::new(net, i)?;
    let f = fatness_bound(net.beta())?;
    let mut best_lo: Option<Rational> = None;
    let mut least_hi: Option<Rational> = None;
    for d in dirs {
        let r = search.crossing(d, rel_tol)?;
        if best_lo.as_ref().is_none_or(|b| &r.lo > b) {
            best_lo = Some(r.lo.clone());
        }
        if least_hi.as_ref().is_none_or(|b| &r.hi < b) {
            least_hi = Some(r.hi);
        }
    }
    let (lo, hi) = match (best_lo, least_hi) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Precondition("at least one direction is required".into())),
    };
    let e = search.bounds();
    Ok(RadiusBounds {
        inner_lo: lo / &f.hi,
        outer_hi: hi * &f.hi,
        kappa: e.kappa.clone(),
        kappa_sq: e.kappa_sq.clone(),
        source: BoundsSource::Refined,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Radii {
    /// Smallest sampled crossing distance.
    pub inner: Enclosure,
    /// Largest sampled crossing distance.
    pub outer: Enclosure,
}

impl Radii {
    /// Upper bound on the measured ratio.
    pub fn ratio_hi(&self) -> Rational {
        &self.outer.hi / &self.inner.lo
    }
}

pub fn measure_radii(net: &Network, i: usize, angles: usize, rel_tol: &Rational) -> Result<Radii> {
    if angles == 0 {
        return Err(Error::Precondition("at least one angle is required".into()));
    }
    let search = RaySearch::new(net, i)?;
    let mut inner: Option<Enclosure> = None;
    let mut outer: Option<Enclosure> = None;
    for k in 0..angles {
        let d = unit_direction(2.0 * PI * k as f64 / angles as f64);
        let r = search.crossing(&d, rel_tol)?;
        if inner.as_ref().is_none_or(|e| r.lo < e.lo) {
            inner = Some(r.clone());
        }
        if outer.as_ref().is_none_or(|e| r.hi > e.hi) {
            outer = Some(r);
        }
    }
    Ok(Radii { inner: inner.unwrap(), outer: outer.unwrap() })
}

/// Radius of a disc around station `i` that contains its zone, or a
/// generous search radius when no bound is available.
pub fn sampling_radius(net: &Network, i: usize) -> Rational {
    if let Ok(b) = explicit_bounds(net, i) {
        return b.outer_hi;
    }
    let s = net.position(i);
    if net.noise().is_positive() {
        let r2 = net.power(i) / (net.beta() * net.noise());
        return sqrt_enclosure(&r2).hi;
    }
    let far = net.stations().iter().map(|t| distance_sq(s, &t.pos)).max().unwrap_or_else(Rational::one);
    sqrt_enclosure(&far).hi * Rational::from_integer(2.into()) + Rational::one()
}

fn random_point(rng: &mut ChaCha8Rng, c: &Point, r: &Rational) -> Point {
    const SCALE: i64 = 1 << 24;
    let den = Rational::from_integer(SCALE.into());
    loop {
        let a = rng.gen_range(-SCALE..=SCALE);
        let b = rng.gen_range(-SCALE..=SCALE);
        if (a as i128).pow(2) + (b as i128).pow(2) <= (SCALE as i128).pow(2) {
            let x = Rational::from_integer(a.into()) / &den * r;
            let y = Rational::from_integer(b.into()) / &den * r;
            return Point::new(&c.x + x, &c.y + y);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexityWitness {
    pub p1: Point,
    pub p2: Point,
    pub q: Point,
}

/// Status of `a + (b - a) * k / m`, using a float evaluation when it is
/// conclusive.
fn status_on_segment(probe: &Probe, a: &Point, b: &Point, af: (f64, f64), bf: (f64, f64), k: i64, m: i64) -> (Status, Option<Point>) {
    let u = k as f64 / m as f64;
    let x = af.0 + (bf.0 - af.0) * u;
    let y = af.1 + (bf.1 - af.1) * u;
    let mag = af.0.abs() + af.1.abs() + bf.0.abs() + bf.1.abs();
    if let Some(s) = probe.float_status(x, y, 8.0 * f64::EPSILON * mag) {
        return (s, None);
    }
    let t = Rational::new(k.into(), m.into());
    let p = a.add(&b.sub(a).scale(&t));
    (probe.exact(&p), Some(p))
}

/// Samples pairs of received points and checks 33 evenly spaced points
/// between them. Returns the first non-received point found.
pub fn convexity_probe(net: &Network, i: usize, trials: usize, seed: u64) -> Result<Option<ConvexityWitness>> {
    net.check_index(i)?;
    let probe = Probe::new(net, i);
    let r = sampling_radius(net, i);
    let s = net.position(i).clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let draw = |rng: &mut ChaCha8Rng| -> Option<Point> {
        for _ in 0..4000 {
            let p = random_point(rng, &s, &r);
            if probe.status(&p).received() {
                return Some(p);
            }
        }
        None
    };
    for _ in 0..trials {
        let (Some(p1), Some(p2)) = (draw(&mut rng), draw(&mut rng)) else {
            return Ok(None);
        };
        let (f1, f2) = (p1.to_f64(), p2.to_f64());
        for k in 1..=33 {
            let (st, exact) = status_on_segment(&probe, &p1, &p2, f1, f2, k, 34);
            if st == Status::Out {
                let q = exact.unwrap_or_else(|| p1.add(&p2.sub(&p1).scale(&Rational::new(k.into(), 34.into()))));
                return Ok(Some(ConvexityWitness { p1, p2, q }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarWitness {
    pub received: Point,
    pub nearer_missed: Point,
}

/// Samples `rays` random rays from station `i` with `samples` points each and
/// checks that membership along each ray is a prefix.
pub fn star_shape_probe(net: &Network, i: usize, rays: usize, samples: usize, seed: u64) -> Result<Option<StarWitness>> {
    net.check_index(i)?;
    let probe = Probe::new(net, i);
    let r = sampling_radius(net, i);
    let s = net.position(i).clone();
    let sf = s.to_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
    let m = samples.max(1) as i64;
    for _ in 0..rays {
        let d = unit_direction(rng.gen_range(0.0..2.0 * PI));
        let far = s.add(&d.scale(&r));
        let ff = far.to_f64();
        let mut missed: Option<i64> = None;
        for k in 1..=m {
            let (st, _) = status_on_segment(&probe, &s, &far, sf, ff, k, m);
            match (st.received(), missed) {
                (false, None) => missed = Some(k),
                (true, Some(j)) => {
                    let at = |k: i64| s.add(&far.sub(&s).scale(&Rational::new(k.into(), m.into())));
                    return Ok(Some(StarWitness { received: at(k), nearer_missed: at(j) }));
                }
                _ => {}
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BBox {
    pub x0: Rational,
    pub y0: Rational,
    pub x1: Rational,
    pub y1: Rational,
}

impl BBox {
    pub fn new(x0: Rational, y0: Rational, x1: Rational, y1: Rational) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::Raster("bounding box must have x0 < x1 and y0 < y1".into()));
        }
        Ok(BBox { x0, y0, x1, y1 })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterLabel {
    pub width: usize,
    pub height: usize,
    pub bbox: BBox,
    /// Row-major labels, row 0 at the top (largest y).
    pub labels: Vec<Option<usize>>,
}

impl RasterLabel {
    pub fn get(&self, col: usize, row: usize) -> Option<usize> {
        self.labels[row * self.width + col]
    }

    /// Exact centre of a pixel.
    pub fn center(&self, col: usize, row: usize) -> Point {
        pixel_center(&self.bbox, self.width, self.height, col, row)
    }
}

fn pixel_center(b: &BBox, w: usize, h: usize, col: usize, row: usize) -> Point {
    let two = BigInt::from(2);
    let fx = Rational::new(BigInt::from(2 * col + 1), &two * BigInt::from(w));
    let fy = Rational::new(BigInt::from(2 * row + 1), &two * BigInt::from(h));
    Point::new(&b.x0 + (&b.x1 - &b.x0) * fx, &b.y1 - (&b.y1 - &b.y0) * fy)
}

/// Labels each pixel centre with the station that receives it, if any.
/// Among several receiving stations (possible only when beta < 1) the one
/// with the largest energy wins, lowest index on ties.
pub fn rasterize(net: &Network, bbox: &BBox, width: usize, height: usize) -> Result<RasterLabel> {
    if width == 0 || height == 0 {
        return Err(Error::Raster("resolution must be at least 1x1".into()));
    }
    let n = net.len();
    let sx: Vec<(f64, f64)> = net.stations().iter().map(|s| s.pos.to_f64()).collect();
    let psi: Vec<f64> = net.stations().iter().map(|s| to_f64(&s.power)).collect();
    let noise = to_f64(net.noise());
    let beta = to_f64(net.beta());
    let (x0, x1, y0, y1) = (to_f64(&bbox.x0), to_f64(&bbox.x1), to_f64(&bbox.y0), to_f64(&bbox.y1));
    let rows: Vec<Vec<Option<usize>>> = (0..height)
        .into_par_iter()
        .map(|row| {
            let y = y1 - (y1 - y0) * (row as f64 + 0.5) / height as f64;
            (0..width)
                .map(|col| {
                    let x = x0 + (x1 - x0) * (col as f64 + 0.5) / width as f64;
                    let mut e = vec![0.0; n];
                    let mut total = noise;
                    let mut close = false;
                    for j in 0..n {
                        let d2 = (x - sx[j].0).powi(2) + (y - sx[j].1).powi(2);
                        close |= !(d2 > 1e-18 * (x.abs() + y.abs() + 1.0).powi(2));
                        e[j] = psi[j] / d2;
                        total += e[j];
                    }
                    let mut best = 0;
                    for j in 1..n {
                        if e[j] > e[best] {
                            best = j;
                        }
                    }
                    let runner = (0..n).filter(|&j| j != best).map(|j| e[j]).fold(0.0, f64::max);
                    let tied = runner >= e[best] * (1.0 - 1e-9);
                    let sinr = e[best] / (total - e[best]);
                    let margin = (sinr / beta - 1.0).abs();
                    if close || tied || !margin.is_finite() || margin < 1e-6 {
                        return exact_label(net, &pixel_center(bbox, width, height, col, row));
                    }
                    (sinr >= beta).then_some(best)
                })
                .collect()
        })
        .collect();
    Ok(RasterLabel { width, height, bbox: bbox.clone(), labels: rows.into_iter().flatten().collect() })
}

fn exact_label(net: &Network, p: &Point) -> Option<usize> {
    if let Some(j) = net.stations().iter().position(|s| &s.pos == p) {
        return Some(j);
    }
    let mut best: Option<(Rational, usize)> = None;
    for j in 0..net.len() {
        let e = net.energy(j, p).expect("not a station");
        if best.as_ref().is_none_or(|b| e > b.0) {
            best = Some((e, j));
        }
    }
    let j = best.unwrap().1;
    net.is_received(j, p).then_some(j)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AreaEstimate {
    pub value: Rational,
    pub error: Rational,
    pub spacing: Rational,
    pub cells: u64,
}

/// Largest `r` in `[seed, limit)` with `f(r)`, given that `f` holds on a
/// prefix of that range starting at `seed`. Gallops from `guess`.
fn last_true(mut f: impl FnMut(i64) -> bool, seed: i64, guess: i64, limit: i64) -> i64 {
    let g = guess.clamp(seed, limit - 1);
    let (mut lo, mut hi);
    let mut step = 1;
    if f(g) {
        lo = g;
        loop {
            let t = lo + step;
            if t >= limit {
                hi = limit;
                break;
            }
            if f(t) {
                lo = t;
                step *= 2;
            } else {
                hi = t;
                break;
            }
        }
    } else {
        hi = g;
        loop {
            let t = hi - step;
            if t <= seed {
                lo = seed;
                break;
            }
            if f(t) {
                lo = t;
                break;
            }
            hi = t;
            step *= 2;
        }
    }
    while hi - lo > 1 {
        let m = lo + (hi - lo) / 2;
        if f(m) {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}


/// Grid count with cell diameter at most `outer / resolution`.
pub fn area_estimate(net: &Network, i: usize, resolution: u32) -> Result<AreaEstimate> {
    if resolution == 0 {
        return Err(Error::Precondition("resolution must be positive".into()));
    }
    let b = explicit_bounds(net, i)?;
    // side h with h * sqrt(2) <= outer / resolution
    let h = &b.outer_hi * Rational::new(7.into(), 10.into()) / Rational::from_integer(resolution.into());
    area_estimate_with_spacing(net, i, &h)
}

/// Counts cell centres of the `h`-grid anchored at the station that lie in
/// the zone. Each column's run of received centres is found by search from a
/// seed inside an inscribed polygon, which relies on convexity. The error
/// bound charges one full cell for every cell the boundary can touch.
pub fn area_estimate_with_spacing(net: &Network, i: usize, h: &Rational) -> Result<AreaEstimate> {
    if !h.is_positive() {
        return Err(Error::Precondition("spacing must be positive".into()));
    }
    let search = RaySearch::new(net, i)?;
    let bounds = search.bounds().clone();
    let probe = Probe::new(net, i);
    let s = net.position(i);
    let (sxf, syf) = s.to_f64();
    let hf = to_f64(h);
    let outer_f = to_f64(&bounds.outer_hi);
    let span = (outer_f / hf).ceil() as i64 + 1;

    // Seed polygon from float ray searches; points the filter cannot
    // certify count as outside, and every seed is re-checked below.
    let rays = ((8.0 * (outer_f / hf).sqrt()).ceil() as usize).clamp(64, 8192);
    let inner_f = to_f64(&bounds.inner_lo);
    let mut poly = Vec::with_capacity(rays);
    for k in 0..rays {
        let a = 2.0 * PI * k as f64 / rays as f64;
        let (dx, dy) = (a.cos(), a.sin());
        let inside = |r: f64| {
            let (x, y) = (sxf + r * dx, syf + r * dy);
            let perr = 4.0 * f64::EPSILON * (sxf.abs() + syf.abs() + r);
            probe.float_status(x, y, perr).is_some_and(|st| st.received())
        };
        let (mut lo, mut hi) = (inner_f * (1.0 - 1e-9), outer_f);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        poly.push((dx * lo, dy * lo));
    }
    let chains = Chains::new(&poly);

    let center = |k: i64| (k as f64 + 0.5) * hf;
    let status = |c: i64, r: i64| -> bool {
        let (x, y) = (sxf + center(c), syf + center(r));
        let perr = 4.0 * f64::EPSILON * (sxf.abs() + syf.abs() + center(c).abs() + center(r).abs());
        match probe.float_status(x, y, perr) {
            Some(st) => st.received(),
            None => {
                let half = Rational::new(1.into(), 2.into());
                let cx = &s.x + h * (Rational::from_integer(c.into()) + &half);
                let cy = &s.y + h * (Rational::from_integer(r.into()) + &half);
                probe.exact(&Point::new(cx, cy)).received()
            }
        }
    };

    let mut cells: u64 = 0;
    let mut prev: Option<(i64, i64)> = None;
    for c in -span..span {
        let xr = center(c);
        let Some((ylo, yhi)) = chains.chord(xr) else {
            prev = None;
            continue;
        };
        let mid = ((0.5 * (ylo + yhi)) / hf - 0.5).round() as i64;
        let Some(seed) = [mid, mid + 1, mid - 1].into_iter().find(|&r| status(c, r)) else {
            prev = None;
            continue;
        };
        // received rows form an interval containing `seed`
        let (gt, gb) = prev.unwrap_or((seed, seed));
        let top = last_true(|r| status(c, r), seed, gt, span);
        let bottom = -last_true(|r| status(c, -r), -seed, -gb, span + 1);
        prev = Some((top, bottom));
        cells += (top - bottom + 1) as u64;
    }
    let area = h * h;
    let perimeter_cells = {
        // 2 pi outer / h, with pi rounded up
        let pi_hi = Rational::new(355.into(), 113.into());
        let q = Rational::from_integer(2.into()) * pi_hi * &bounds.outer_hi / h;
        q.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
    };
    Ok(AreaEstimate {
        value: Rational::from_integer(cells.into()) * &area,
        error: Rational::from_integer((4 * perimeter_cells + 4).into()) * &area,
        spacing: h.clone(),
        cells,
    })
}

/// Upper and lower x-monotone chains of a convex polygon listed by angle.
struct Chains {
    upper: Vec<(f64, f64)>,
    lower: Vec<(f64, f64)>,
}

impl Chains {
    fn new(poly: &[(f64, f64)]) -> Chains {
        let n = poly.len();
        let left = (0..n).min_by(|&a, &b| poly[a].0.total_cmp(&poly[b].0)).unwrap();
        let right = (0..n).max_by(|&a, &b| poly[a].0.total_cmp(&poly[b].0)).unwrap();
        let walk = |from: usize, to: usize| {
            let mut v = Vec::new();
            let mut k = from;
            loop {
                v.push(poly[k]);
                if k == to {
                    break;
                }
                k = (k + 1) % n;
            }
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        };
        Chains { upper: walk(right, left), lower: walk(left, right) }
    }

    fn interp(chain: &[(f64, f64)], x: f64) -> Option<f64> {
        let k = chain.partition_point(|p| p.0 < x);
        if k == 0 || k == chain.len() {
            return None;
        }
        let (a, b) = (chain[k - 1], chain[k]);
        let t = if b.0 > a.0 { (x - a.0) / (b.0 - a.0) } else { 0.5 };
        Some(a.1 + t * (b.1 - a.1))
    }

    fn chord(&self, x: f64) -> Option<(f64, f64)> {
        let hi = Self::interp(&self.upper, x)?;
        let lo = Self::interp(&self.lower, x)?;
        (lo <= hi).then_some((lo, hi))
    }
}
