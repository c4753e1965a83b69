//! Float-filtered zone membership. A double-precision evaluation with a
//! rigorous error bound settles most queries; the rest fall back to exact
//! rational arithmetic.

use std::cmp::Ordering;

use crate::exact::to_f64;
use crate::model::{Network, Point};

const U: f64 = f64::EPSILON * 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    In,
    On,
    Out,
}

impl Status {
    /// Membership with boundary points counted as members.
    pub fn received(self) -> bool {
        self != Status::Out
    }
}

pub struct Probe<'a> {
    net: &'a Network,
    i: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    mags: Vec<f64>,
    psi: Vec<f64>,
    beta: f64,
    noise: f64,
}

/// Float value of `E_i - beta (I + N)` with an absolute error bound.
#[derive(Clone, Copy, Debug)]
pub struct Margin {
    pub g: f64,
    pub err: f64,
}

impl<'a> Probe<'a> {
    pub fn new(net: &'a Network, i: usize) -> Self {
        let mut xs = Vec::with_capacity(net.len());
        let mut ys = Vec::with_capacity(net.len());
        for s in net.stations() {
            let (x, y) = s.pos.to_f64();
            xs.push(x);
            ys.push(y);
        }
        let mags = xs.iter().zip(&ys).map(|(x, y)| x.abs() + y.abs()).collect();
        Probe {
            net,
            i,
            xs,
            ys,
            mags,
            psi: net.stations().iter().map(|s| to_f64(&s.power)).collect(),
            beta: to_f64(net.beta()),
            noise: to_f64(net.noise()),
        }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn station(&self) -> usize {
        self.i
    }

    pub fn station_f64(&self, j: usize) -> (f64, f64) {
        (self.xs[j], self.ys[j])
    }

    /// Weight of station `j` in the margin: its power, times beta for
    /// interferers.
    pub fn weight_f64(&self, j: usize) -> f64 {
        if j == self.i {
            self.psi[j]
        } else {
            self.beta * self.psi[j]
        }
    }

    /// Evaluates the margin at `(x, y)`, which approximates the true point to
    /// within `perr` in each coordinate. `None` when the point is too close to
    /// a station for a meaningful bound.
    pub fn margin(&self, x: f64, y: f64, perr: f64) -> Option<Margin> {
        let mut signal = 0.0;
        let mut signal_rel = 0.0;
        let mut others = 0.0;
        let mut others_err = 0.0;
        for j in 0..self.xs.len() {
            let dx = x - self.xs[j];
            let dy = y - self.ys[j];
            // station coordinates carry a conversion error of 2u |s|
            let base = perr + 2.0 * U * self.mags[j];
            let ex = base + U * dx.abs();
            let ey = base + U * dy.abs();
            let d2 = dx * dx + dy * dy;
            let err = 2.0 * (dx.abs() * ex + dy.abs() * ey) + ex * ex + ey * ey + 3.0 * U * d2;
            if !(err < 0.1 * d2) {
                return None;
            }
            let rho = err / d2;
            let e = self.psi[j] / d2;
            let rel = 1.12 * rho + 4.0 * U;
            if j == self.i {
                signal = e;
                signal_rel = rel;
            } else {
                others += e;
                others_err += e * rel;
            }
        }
        let n = self.xs.len() as f64;
        let total = others + self.noise;
        let total_err = others_err + (n + 2.0) * U * total + 2.0 * U * self.noise;
        let rhs = self.beta * total;
        let rhs_err = self.beta * total_err + 4.0 * U * rhs;
        let g = signal - rhs;
        let err = 2.0 * (signal * signal_rel + rhs_err + U * g.abs()) + f64::MIN_POSITIVE;
        Some(Margin { g, err })
    }

    /// Strict float decision, or `None` when the margin is inconclusive.
    pub fn float_status(&self, x: f64, y: f64, perr: f64) -> Option<Status> {
        let m = self.margin(x, y, perr)?;
        if m.g > m.err {
            Some(Status::In)
        } else if m.g < -m.err {
            Some(Status::Out)
        } else {
            None
        }
    }

    pub fn exact(&self, p: &Point) -> Status {
        match self.net.sinr_cmp_beta(self.i, p) {
            Ok(Ordering::Greater) => Status::In,
            Ok(Ordering::Equal) => Status::On,
            Ok(Ordering::Less) => Status::Out,
            Err(hit) if hit.own => Status::In,
            Err(_) => Status::Out,
        }
    }

    pub fn status(&self, p: &Point) -> Status {
        let (x, y) = p.to_f64();
        let perr = 2.0 * U * (x.abs() + y.abs());
        self.float_status(x, y, perr).unwrap_or_else(|| self.exact(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat, Rational};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn agrees_with_exact_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(2..6);
            let pts = (0..n).map(|_| Point::new(rat(rng.gen_range(-50..50), 7), rat(rng.gen_range(-50..50), 9))).collect();
            let beta = rat(rng.gen_range(3..20), 2);
            let net = Network::uniform(pts, rat(rng.gen_range(0..3), 10), beta).unwrap();
            let probe = Probe::new(&net, 0);
            for _ in 0..200 {
                let p = Point::new(rat(rng.gen_range(-900..900), 113), rat(rng.gen_range(-900..900), 127));
                let want = net.is_received(0, &p);
                assert_eq!(probe.status(&p).received(), want);
            }
        }
    }

    #[test]
    fn boundary_points_need_exact_fallback() {
        let net = Network::uniform(vec![Point::origin(), Point::from_ints(1, 0)], int(0), int(4)).unwrap();
        let probe = Probe::new(&net, 0);
        let on = Point::new(rat(1, 3), Rational::from_integer(0.into()));
        assert_eq!(probe.status(&on), Status::On);
        assert_eq!(probe.status(&Point::from_ints(-1, 0)), Status::On);
        assert_eq!(probe.status(&Point::origin()), Status::In);
        assert_eq!(probe.status(&Point::from_ints(1, 0)), Status::Out);
    }
}
