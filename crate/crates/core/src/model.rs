//! Networks of stations and exact evaluation of energy, interference, SINR
//! and zone membership. The path-loss exponent is fixed at 2.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(BigInt::from(x).into(), BigInt::from(y).into())
    }

    pub fn origin() -> Self {
        Point::from_ints(0, 0)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (to_f64(&self.x), to_f64(&self.y))
    }

    pub fn add(&self, o: &Point) -> Point {
        Point::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn sub(&self, o: &Point) -> Point {
        Point::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn scale(&self, k: &Rational) -> Point {
        Point::new(&self.x * k, &self.y * k)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
}

pub fn distance_sq(p: &Point, q: &Point) -> Rational {
    let dx = &q.x - &p.x;
    let dy = &q.y - &p.y;
    &dx * &dx + &dy * &dy
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Station {
    pub pos: Point,
    pub power: Rational,
}

impl Station {
    pub fn unit(pos: Point) -> Self {
        Station { pos, power: Rational::one() }
    }
}

/// Stations located at a query point: the lowest index, and whether the
/// station asked about is among them.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StationHit {
    pub first: usize,
    pub own: bool,
}

#[derive(Clone, Debug)]
pub struct Network {
    stations: Vec<Station>,
    noise: Rational,
    beta: Rational,
    scaled: Scaled,
}

impl PartialEq for Network {
    fn eq(&self, o: &Self) -> bool {
        self.stations == o.stations && self.noise == o.noise && self.beta == o.beta
    }
}

impl Eq for Network {}

/// Station coordinates and powers over common denominators, so that SINR
/// comparisons run on integers.
#[derive(Clone, Debug)]
struct Scaled {
    /// Common denominator of all coordinates.
    den: BigInt,
    xs: Vec<BigInt>,
    ys: Vec<BigInt>,
    /// Power numerators over the common denominator `power_den`.
    powers: Vec<BigInt>,
    power_den: BigInt,
}

impl Scaled {
    fn new(stations: &[Station]) -> Scaled {
        let den = stations
            .iter()
            .fold(BigInt::one(), |d, s| d.lcm(s.pos.x.denom()).lcm(s.pos.y.denom()));
        let power_den = stations.iter().fold(BigInt::one(), |d, s| d.lcm(s.power.denom()));
        let lift = |r: &Rational, d: &BigInt| r.numer() * (d / r.denom());
        Scaled {
            xs: stations.iter().map(|s| lift(&s.pos.x, &den)).collect(),
            ys: stations.iter().map(|s| lift(&s.pos.y, &den)).collect(),
            powers: stations.iter().map(|s| lift(&s.power, &power_den)).collect(),
            den,
            power_den,
        }
    }
}

impl Network {
    pub fn new(stations: Vec<Station>, noise: Rational, beta: Rational) -> Result<Self> {
        if stations.len() < 2 {
            return Err(Error::InvalidNetwork("at least two stations are required".into()));
        }
        if noise.is_negative() {
            return Err(Error::InvalidNetwork("noise must be non-negative".into()));
        }
        if !beta.is_positive() {
            return Err(Error::InvalidNetwork("beta must be positive".into()));
        }
        if let Some(k) = stations.iter().position(|s| !s.power.is_positive()) {
            return Err(Error::InvalidNetwork(format!("station {k} has non-positive power")));
        }
        Ok(Network { scaled: Scaled::new(&stations), stations, noise, beta })
    }

    pub fn uniform(positions: Vec<Point>, noise: Rational, beta: Rational) -> Result<Self> {
        Network::new(positions.into_iter().map(Station::unit).collect(), noise, beta)
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn noise(&self) -> &Rational {
        &self.noise
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn position(&self, i: usize) -> &Point {
        &self.stations[i].pos
    }

    pub fn power(&self, i: usize) -> &Rational {
        &self.stations[i].power
    }

    pub fn is_uniform(&self) -> bool {
        self.stations.iter().all(|s| s.power.is_one())
    }

    /// Two stations, no noise and `beta = 1`: both zones are half-planes.
    pub fn is_trivial(&self) -> bool {
        self.len() == 2 && self.noise.is_zero() && self.beta.is_one()
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::StationIndex { index: i, len: self.len() })
        }
    }

    /// True when another station sits exactly on station `i`.
    pub fn is_colocated(&self, i: usize) -> bool {
        let s = self.position(i);
        self.stations.iter().enumerate().any(|(j, t)| j != i && &t.pos == s)
    }

    /// Squared distance from station `i` to its nearest other station.
    pub fn kappa_sq(&self, i: usize) -> Rational {
        let s = self.position(i);
        self.stations
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, t)| distance_sq(s, &t.pos))
            .min()
            .expect("network has at least two stations")
    }

    fn station_at(&self, p: &Point) -> Option<usize> {
        self.stations.iter().position(|s| &s.pos == p)
    }

    pub fn energy(&self, i: usize, p: &Point) -> Result<Rational> {
        self.check_index(i)?;
        let d2 = distance_sq(self.position(i), p);
        if d2.is_zero() {
            return Err(Error::AtStation(i));
        }
        Ok(self.power(i) / d2)
    }

    pub fn interference(&self, i: usize, p: &Point) -> Result<Rational> {
        self.check_index(i)?;
        if let Some(j) = self.station_at(p) {
            return Err(Error::AtStation(j));
        }
        let mut sum = Rational::zero();
        for (j, s) in self.stations.iter().enumerate() {
            if j != i {
                sum += &s.power / distance_sq(&s.pos, p);
            }
        }
        Ok(sum)
    }

    pub fn sinr(&self, i: usize, p: &Point) -> Result<Rational> {
        self.check_index(i)?;
        let (signal, others, all, t) = self.scaled_terms(i, p).map_err(|h| Error::AtStation(h.first))?;
        let n2 = self.noise.denom();
        let num = n2 * &t * signal;
        let den = n2 * &t * others + self.noise.numer() * &self.scaled.power_den * all;
        Ok(Rational::new(num, den))
    }

    /// Integer form of the SINR terms at a non-station point `p`.
    ///
    /// With `p = (X, Y) / D` and stations `(A_j, B_j) / E`, the squared
    /// distances are `m_j / T` with `T = (D E)^2` and integers `m_j`. Returns
    /// `(psi_i M / m_i, sum_{j != i} psi_j M / m_j, M, T)` for `M = prod m_j`,
    /// powers taken over their common denominator.
    /// Fails with the stations located at `p`, if any.
    fn scaled_terms(&self, i: usize, p: &Point) -> std::result::Result<(BigInt, BigInt, BigInt, BigInt), StationHit> {
        let sc = &self.scaled;
        let d = p.x.denom().lcm(p.y.denom());
        let xe = p.x.numer() * (&d / p.x.denom()) * &sc.den;
        let ye = p.y.numer() * (&d / p.y.denom()) * &sc.den;
        let m: Vec<BigInt> = sc
            .xs
            .iter()
            .zip(&sc.ys)
            .map(|(a, b)| {
                let u = &xe - a * &d;
                let v = &ye - b * &d;
                &u * &u + &v * &v
            })
            .collect();
        if let Some(first) = m.iter().position(|v| v.is_zero()) {
            return Err(StationHit { first, own: m[i].is_zero() });
        }
        let n = m.len();
        let mut suffix = vec![BigInt::one(); n + 1];
        for k in (0..n).rev() {
            suffix[k] = &suffix[k + 1] * &m[k];
        }
        let mut prefix = BigInt::one();
        let mut others = BigInt::zero();
        let mut signal = BigInt::zero();
        for k in 0..n {
            let rest = &prefix * &suffix[k + 1];
            if k == i {
                signal = &sc.powers[k] * rest;
            } else {
                others += &sc.powers[k] * rest;
            }
            prefix *= &m[k];
        }
        let de = &d * &sc.den;
        Ok((signal, others, prefix, &de * &de))
    }

    /// Compares `sinr(i, p)` with `beta`, or reports the stations at `p`.
    pub(crate) fn sinr_cmp_beta(&self, i: usize, p: &Point) -> std::result::Result<Ordering, StationHit> {
        let (signal, others, all, t) = self.scaled_terms(i, p)?;
        let (b1, b2) = (self.beta.numer(), self.beta.denom());
        let (n1, n2) = (self.noise.numer(), self.noise.denom());
        let lhs = b2 * n2 * &t * signal;
        let rhs = b1 * (n2 * &t * others + n1 * &self.scaled.power_den * all);
        Ok(lhs.cmp(&rhs))
    }

    /// Membership in the reception zone: the station itself, or a non-station
    /// point whose SINR reaches `beta`.
    pub fn is_received(&self, i: usize, p: &Point) -> bool {
        match self.sinr_cmp_beta(i, p) {
            Ok(o) => o != Ordering::Less,
            Err(hit) => hit.own,
        }
    }

    pub fn sinr_f64(&self, i: usize, p: (f64, f64)) -> f64 {
        let mut e = 0.0;
        let mut int = to_f64(&self.noise);
        for (j, s) in self.stations.iter().enumerate() {
            let (sx, sy) = s.pos.to_f64();
            let d2 = (p.0 - sx).powi(2) + (p.1 - sy).powi(2);
            let v = to_f64(&s.power) / d2;
            if j == i {
                e = v;
            } else {
                int += v;
            }
        }
        e / int
    }

    pub fn transform(&self, t: &Similarity) -> Network {
        let s2 = &t.scale * &t.scale;
        let stations: Vec<Station> =
            self.stations.iter().map(|s| Station { pos: t.apply(&s.pos), power: s.power.clone() }).collect();
        Network { scaled: Scaled::new(&stations), stations, noise: &self.noise / s2, beta: self.beta.clone() }
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            version: 1,
            beta: format_rational(&self.beta),
            noise: format_rational(&self.noise),
            stations: self
                .stations
                .iter()
                .map(|s| StationFile {
                    x: format_rational(&s.pos.x),
                    y: format_rational(&s.pos.y),
                    power: Some(format_rational(&s.power)),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("network serialises")
    }

    pub fn from_json(text: &str) -> Result<Network> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Network::from_file(file)
    }

    pub(crate) fn to_file(&self) -> NetworkFile {
        serde_json::from_str(&self.to_json()).expect("round trip")
    }

    pub(crate) fn from_file(file: NetworkFile) -> Result<Network> {
        if file.version != 1 {
            return Err(Error::Version(file.version));
        }
        let mut stations = Vec::with_capacity(file.stations.len());
        for s in file.stations {
            let power = match s.power {
                Some(p) => parse_rational(&p)?,
                None => Rational::one(),
            };
            stations.push(Station { pos: Point::new(parse_rational(&s.x)?, parse_rational(&s.y)?), power });
        }
        Network::new(stations, parse_rational(&file.noise)?, parse_rational(&file.beta)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub(crate) struct NetworkFile {
    pub version: u64,
    pub beta: String,
    pub noise: String,
    pub stations: Vec<StationFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub(crate) struct StationFile {
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<String>,
}

/// `p -> scale * R p + translation` with `R` an exact orthogonal matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Similarity {
    matrix: [[Rational; 2]; 2],
    translation: Point,
    scale: Rational,
}

impl Similarity {
    pub fn new(matrix: [[Rational; 2]; 2], translation: Point, scale: Rational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::InvalidTransform("scale must be positive".into()));
        }
        let [[a, b], [c, d]] = &matrix;
        let one = Rational::one();
        let orthogonal =
            a * a + c * c == one && b * b + d * d == one && (a * b + c * d).is_zero();
        if !orthogonal {
            return Err(Error::InvalidTransform("matrix is not orthogonal".into()));
        }
        Ok(Similarity { matrix, translation, scale })
    }

    /// Rotation by the angle with the given cosine and sine.
    pub fn rotation(cos: Rational, sin: Rational, translation: Point, scale: Rational) -> Result<Self> {
        let m = [[cos.clone(), -sin.clone()], [sin, cos]];
        Similarity::new(m, translation, scale)
    }

    pub fn identity() -> Self {
        Similarity::scaling(Rational::one()).expect("positive")
    }

    pub fn scaling(scale: Rational) -> Result<Self> {
        let (o, z) = (Rational::one(), Rational::zero());
        Similarity::new([[o.clone(), z.clone()], [z, o]], Point::origin(), scale)
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn apply(&self, p: &Point) -> Point {
        let [[a, b], [c, d]] = &self.matrix;
        let x = (a * &p.x + b * &p.y) * &self.scale + &self.translation.x;
        let y = (c * &p.x + d * &p.y) * &self.scale + &self.translation.y;
        Point::new(x, y)
    }
}

/// Groups stations by location; used for degenerate-zone bookkeeping.
pub fn colocated_groups(net: &Network) -> BTreeMap<Point, Vec<usize>> {
    let mut m: BTreeMap<Point, Vec<usize>> = BTreeMap::new();
    for (j, s) in net.stations().iter().enumerate() {
        m.entry(s.pos.clone()).or_default().push(j);
    }
    m
}

/// A uniform-power network of `n` distinct stations on the lattice
/// `(1/4) Z^2`, drawn uniformly from the square `[-spread, spread]^2`.
pub fn random_uniform_network(n: usize, seed: u64, spread: u32, noise: Rational, beta: Rational) -> Result<Network> {
    use rand::{Rng, SeedableRng};
    let side = 4 * i64::from(spread);
    if ((2 * side + 1) as u128).pow(2) < n as u128 {
        return Err(Error::InvalidNetwork("spread too small for the requested station count".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::BTreeSet::new();
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let a = rng.gen_range(-side..=side);
        let b = rng.gen_range(-side..=side);
        if seen.insert((a, b)) {
            pts.push(Point::new(Rational::new(a.into(), 4.into()), Rational::new(b.into(), 4.into())));
        }
    }
    Network::uniform(pts, noise, beta)
}
