#![allow(dead_code)]

use sinr::exact::{int, rat};
use sinr::model::random_uniform_network;
use sinr::{Network, Point, Rational};

pub const CORPUS_SIZE: usize = 50;

pub fn corpus_beta(k: usize) -> Rational {
    [rat(3, 2), int(2), int(4), int(6)][k % 4].clone()
}

pub fn corpus_noise(k: usize) -> Rational {
    [int(0), rat(1, 10)][(k / 4) % 2].clone()
}

/// Network `k` of the test corpus: 2 to 8 stations on the quarter lattice.
pub fn corpus_net(k: usize) -> Network {
    random_uniform_network(2 + k % 7, 1000 + k as u64, 4, corpus_noise(k), corpus_beta(k)).unwrap()
}

pub fn corpus() -> Vec<Network> {
    (0..CORPUS_SIZE).map(corpus_net).collect()
}

/// Two stations at 0 and 1 on the x axis.
pub fn canonical(beta: i64) -> Network {
    Network::uniform(vec![Point::from_ints(0, 0), Point::from_ints(1, 0)], int(0), int(beta)).unwrap()
}
