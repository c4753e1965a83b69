//! Reproduces the search that produced the frozen beta = 3/10 fixture used by
//! the acceptance suite. Run with `cargo test --test fixture_search -- --ignored --nocapture`.

use sinr::exact::rat;
use sinr::model::random_uniform_network;
use sinr::zones::convexity_probe;

#[test]
#[ignore]
fn search_nonconvex_fixture() {
    for seed in 0..200u64 {
        let n = 3 + (seed % 2) as usize;
        let net = random_uniform_network(n, seed, 2, rat(1, 20), rat(3, 10)).unwrap();
        for i in 0..n {
            if let Some(w) = convexity_probe(&net, i, 500, 1).unwrap() {
                println!("seed {seed} station {i} witness {:?}", w.q.to_f64());
                println!("{}", net.to_json());
                return;
            }
        }
    }
    panic!("no non-convex network found");
}
