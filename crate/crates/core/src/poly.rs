//! Exact univariate polynomials, Sturm sequences and the segment test.
//!
//! Sturm chains are computed on primitive integer polynomials: each remainder
//! is a pseudo-remainder corrected to a positive multiple of the true
//! remainder and then divided by its content, so sign patterns are unchanged.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{sign_of, Rational};
use crate::model::{Network, Point};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        UniPoly::new(c.iter().map(|&v| Rational::from_integer(v.into())).collect())
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        UniPoly::new(vec![c])
    }

    /// `x - a`
    pub fn linear_root(a: &Rational) -> Self {
        UniPoly::new(vec![-a.clone(), Rational::one()])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    pub fn add(&self, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = Rational::zero();
        UniPoly::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&z) + o.coeffs.get(k).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, o: &UniPoly) -> UniPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, k: &Rational) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, o: &UniPoly) -> UniPoly {
        if self.is_zero() || o.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (a, x) in self.coeffs.iter().enumerate() {
            for (b, y) in o.coeffs.iter().enumerate() {
                out[a + b] += x * y;
            }
        }
        UniPoly::new(out)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lc = d.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (UniPoly::zero(), self.clone());
        }
        let mut q = vec![Rational::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = &r[k + dd] / &lc;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[k + j] -= &c * dc;
                }
            }
            q[k] = c;
        }
        r.truncate(dd);
        (UniPoly::new(q), UniPoly::new(r))
    }

    /// Divides out the factor `x - a`; requires `p(a) = 0`.
    pub fn deflate(&self, a: &Rational) -> UniPoly {
        let n = self.coeffs.len();
        assert!(n >= 2, "cannot deflate a constant");
        let mut q = vec![Rational::zero(); n - 1];
        let mut carry = Rational::zero();
        for k in (1..n).rev() {
            carry = carry * a + &self.coeffs[k];
            q[k - 1] = carry.clone();
        }
        debug_assert!((carry * a + &self.coeffs[0]).is_zero());
        UniPoly::new(q)
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        match a.leading() {
            Some(l) => {
                let inv = l.recip();
                a.scale(&inv)
            }
            None => a,
        }
    }

    pub fn sign_at(&self, t: &Rational) -> i8 {
        IntPoly::primitive(self).sign_at(t)
    }
}

/// Primitive integer polynomial, ascending coefficients, positive multiple of
/// its rational source.
#[derive(Clone, Debug, PartialEq, Eq)]
struct IntPoly(Vec<BigInt>);

impl IntPoly {
    fn primitive(p: &UniPoly) -> IntPoly {
        let mut l = BigInt::one();
        for c in &p.coeffs {
            l = l.lcm(c.denom());
        }
        let v = p.coeffs.iter().map(|c| c.numer() * (&l / c.denom())).collect();
        IntPoly(v).normalized()
    }

    fn normalized(mut self) -> IntPoly {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        let mut g = BigInt::zero();
        for c in &self.0 {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        if !g.is_zero() && !g.is_one() {
            for c in &mut self.0 {
                *c /= &g;
            }
        }
        self
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn to_uni(&self) -> UniPoly {
        UniPoly::new(self.0.iter().map(|c| Rational::from_integer(c.clone())).collect())
    }

    /// A positive multiple of `-rem(a, b)`.
    fn neg_rem(a: &IntPoly, b: &IntPoly) -> IntPoly {
        let db = b.degree();
        let lb = b.0.last().unwrap();
        let mut r = a.0.clone();
        let mut steps = 0u32;
        while r.len() > db {
            let lr = r.pop().unwrap();
            let shift = r.len() - db;
            for c in r.iter_mut() {
                *c *= lb;
            }
            for (j, bc) in b.0.iter().take(db).enumerate() {
                r[shift + j] -= &lr * bc;
            }
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
            steps += 1;
        }
        // r = lb^steps * rem(a, b)
        let flip = lb.is_negative() && steps % 2 == 1;
        if !flip {
            for c in r.iter_mut() {
                *c = -&*c;
            }
        }
        IntPoly(r).normalized()
    }

    fn sign_at(&self, t: &Rational) -> i8 {
        if self.0.is_empty() {
            return 0;
        }
        // sum c_k p^k q^(m-k), a positive multiple of the value at p/q
        let (p, q) = (t.numer(), t.denom());
        if q.is_one() {
            let mut acc = BigInt::zero();
            for c in self.0.iter().rev() {
                acc = acc * p + c;
            }
            return sign_of(&acc);
        }
        let mut acc = self.0.last().unwrap().clone();
        let mut qpow = BigInt::one();
        for c in self.0.iter().rev().skip(1) {
            qpow *= q;
            acc = acc * p + c * &qpow;
        }
        sign_of(&acc)
    }

    fn sign_at_inf(&self, negative: bool) -> i8 {
        let lead = sign_of(self.0.last().unwrap());
        if negative && self.degree() % 2 == 1 {
            -lead
        } else {
            lead
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SturmSeq {
    pub polys: Vec<UniPoly>,
    ints: Vec<IntPoly>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extended {
    NegInf,
    Finite(Rational),
    PosInf,
}

pub fn sturm_sequence(p: &UniPoly) -> Result<SturmSeq> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mut polys = vec![p.clone()];
    let mut ints = vec![IntPoly::primitive(p)];
    let d = p.derivative();
    if !d.is_zero() {
        ints.push(IntPoly::primitive(&d));
        polys.push(d);
        loop {
            let k = ints.len();
            let next = IntPoly::neg_rem(&ints[k - 2], &ints[k - 1]);
            if next.is_zero() {
                break;
            }
            polys.push(next.to_uni());
            ints.push(next);
        }
    }
    Ok(SturmSeq { polys, ints })
}

fn count_changes(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for s in signs.filter(|&s| s != 0) {
        if last != 0 && s != last {
            n += 1;
        }
        last = s;
    }
    n
}

pub fn var_at(seq: &SturmSeq, t: &Extended) -> usize {
    match t {
        Extended::Finite(x) => count_changes(seq.ints.iter().map(|p| p.sign_at(x))),
        Extended::PosInf => count_changes(seq.ints.iter().map(|p| p.sign_at_inf(false))),
        Extended::NegInf => count_changes(seq.ints.iter().map(|p| p.sign_at_inf(true))),
    }
}

/// Distinct real roots in the open interval `(a, b)`.
pub fn count_distinct_roots(p: &UniPoly, a: &Rational, b: &Rational) -> Result<usize> {
    if a >= b {
        return Err(Error::EmptyInterval);
    }
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let mut q = p.clone();
    while q.degree() > Some(0) && q.sign_at(a) == 0 {
        q = q.deflate(a);
    }
    while q.degree() > Some(0) && q.sign_at(b) == 0 {
        q = q.deflate(b);
    }
    if q.degree() == Some(0) {
        return Ok(0);
    }
    let seq = sturm_sequence(&q)?;
    let va = var_at(&seq, &Extended::Finite(a.clone()));
    let vb = var_at(&seq, &Extended::Finite(b.clone()));
    Ok(va - vb)
}

/// Distinct real roots in `(a, b)` plus the endpoints selected by the flags.
pub fn count_roots_between(
    p: &UniPoly,
    a: &Rational,
    b: &Rational,
    include_a: bool,
    include_b: bool,
) -> Result<usize> {
    let open = count_distinct_roots(p, a, b)?;
    let ea = usize::from(include_a && p.sign_at(a) == 0);
    let eb = usize::from(include_b && p.sign_at(b) == 0);
    Ok(open + ea + eb)
}

/// The line `origin + t * direction`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineParam {
    origin: Point,
    direction: Point,
}

impl LineParam {
    pub fn new(origin: Point, direction: Point) -> Result<Self> {
        if direction.is_zero() {
            return Err(Error::DegenerateSegment);
        }
        Ok(LineParam { origin, direction })
    }

    pub fn through(a: &Point, b: &Point) -> Result<Self> {
        LineParam::new(a.clone(), b.sub(a))
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn direction(&self) -> &Point {
        &self.direction
    }

    pub fn at(&self, t: &Rational) -> Point {
        self.origin.add(&self.direction.scale(t))
    }
}

/// The characteristic polynomial of zone `i` restricted to `line`:
/// non-positive exactly where the SINR of station `i` reaches `beta`.
///
/// Built over the integers after clearing every denominator, then scaled back
/// once at the end.
pub fn hear_poly_on_line(net: &Network, i: usize, line: &LineParam) -> UniPoly {
    let n = net.len();
    let mut l = BigInt::one();
    for c in [&line.origin.x, &line.origin.y, &line.direction.x, &line.direction.y] {
        l = l.lcm(c.denom());
    }
    for s in net.stations() {
        l = l.lcm(s.pos.x.denom()).lcm(s.pos.y.denom());
    }
    let scaled = |c: &Rational| c.numer() * (&l / c.denom());
    let (dx, dy) = (scaled(&line.direction.x), scaled(&line.direction.y));
    let (ox, oy) = (scaled(&line.origin.x), scaled(&line.origin.y));
    let quads: Vec<Vec<BigInt>> = net
        .stations()
        .iter()
        .map(|s| {
            let ex = &ox - scaled(&s.pos.x);
            let ey = &oy - scaled(&s.pos.y);
            vec![&ex * &ex + &ey * &ey, (&ex * &dx + &ey * &dy) * 2, &dx * &dx + &dy * &dy]
        })
        .collect();
    let mut pden = BigInt::one();
    for j in 0..n {
        pden = pden.lcm(net.power(j).denom());
    }
    let pnum: Vec<BigInt> =
        (0..n).map(|j| net.power(j).numer() * (&pden / net.power(j).denom())).collect();

    let mut prefix = vec![vec![BigInt::one()]];
    for q in &quads {
        let next = int_mul(prefix.last().unwrap(), q);
        prefix.push(next);
    }
    let mut suffix = vec![vec![BigInt::one()]; n + 1];
    for j in (0..n).rev() {
        suffix[j] = int_mul(&suffix[j + 1], &quads[j]);
    }
    let l2 = &l * &l;
    let (b1, b2) = (net.beta().numer(), net.beta().denom());
    let (n1, n2) = (net.noise().numer(), net.noise().denom());
    let len = 2 * n + 1;
    let mut acc = vec![BigInt::zero(); len];
    let full_k = b1 * n1 * &pden;
    if !full_k.is_zero() {
        for (a, c) in acc.iter_mut().zip(&prefix[n]) {
            *a += &full_k * c;
        }
    }
    for j in 0..n {
        let rest = int_mul(&prefix[j], &suffix[j + 1]);
        let k = if j == i { -(b2 * n2 * &l2 * &pnum[j]) } else { b1 * n2 * &l2 * &pnum[j] };
        for (a, c) in acc.iter_mut().zip(&rest) {
            *a += &k * c;
        }
    }
    let den = b2 * n2 * &pden * num_traits::pow(l2, n);
    UniPoly::new(acc.into_iter().map(|c| Rational::new(c, den.clone())).collect())
}

fn int_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (x, ca) in a.iter().enumerate() {
        for (y, cb) in b.iter().enumerate() {
            out[x + y] += ca * cb;
        }
    }
    out
}

/// A segment with per-endpoint inclusion flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub include_a: bool,
    pub include_b: bool,
}

impl Segment {
    pub fn closed(a: Point, b: Point) -> Self {
        Segment { a, b, include_a: true, include_b: true }
    }

    pub fn open(a: Point, b: Point) -> Self {
        Segment { a, b, include_a: false, include_b: false }
    }
}

/// Number of distinct boundary points of zone `i` on the segment.
pub fn segment_test(net: &Network, i: usize, seg: &Segment) -> Result<usize> {
    net.check_index(i)?;
    let line = LineParam::through(&seg.a, &seg.b)?;
    let q = hear_poly_on_line(net, i, &line);
    if q.is_zero() {
        return Err(Error::Inconsistent("zone boundary contains a whole line".into()));
    }
    count_roots_between(&q, &Rational::zero(), &Rational::one(), seg.include_a, seg.include_b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tangency {
    Crossing,
    Tangency,
}

/// Decides whether a single boundary point on `seg` is a crossing or a
/// tangency by closing a square on each side of the segment. The boundary
/// crosses iff it leaves both squares through their closing sides.
pub fn resolve_tangency(
    net: &Network,
    i: usize,
    seg: &Segment,
    side_extent: Option<&Rational>,
) -> Result<Tangency> {
    if segment_test(net, i, seg)? != 1 {
        return Err(Error::Precondition("the segment must meet the boundary exactly once".into()));
    }
    let d = seg.b.sub(&seg.a);
    let mut normal = Point::new(-d.y.clone(), d.x.clone());
    if let Some(h) = side_extent {
        if !h.is_positive() {
            return Err(Error::Precondition("side extent must be positive".into()));
        }
        let len = crate::exact::sqrt_enclosure(&(&d.x * &d.x + &d.y * &d.y)).lo;
        normal = normal.scale(&(h / len));
    }
    let mut exits = [false; 2];
    for (k, sign) in [1i64, -1].into_iter().enumerate() {
        let off = normal.scale(&Rational::from_integer(sign.into()));
        let a2 = seg.a.add(&off);
        let b2 = seg.b.add(&off);
        for (p, q) in [(&seg.a, &a2), (&a2, &b2), (&b2, &seg.b)] {
            if segment_test(net, i, &Segment::closed(p.clone(), q.clone()))? > 0 {
                exits[k] = true;
                break;
            }
        }
    }
    Ok(if exits[0] && exits[1] { Tangency::Crossing } else { Tangency::Tangency })
}
