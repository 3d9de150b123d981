mod common;

use common::{p9, random_region, random_vertex_boundary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trimix::colouring::{count, PartialEdgeColouring};
use trimix::glauber::*;
use trimix::lattice::{LatticeCoord, Region};

fn path(n: i32) -> Region {
    Region::new((0..n).map(|i| LatticeCoord::at(0, 2 * i))).unwrap()
}

#[test]
fn one_step_on_a_free_vertex_is_uniform() {
    let cfg = ChainConfig::free(Region::from_pairs(&[(0, 0)]).unwrap(), p9());
    let chain = Chain::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut seen = [0u32; 9];
    for _ in 0..90_000 {
        let mut s = chain.first_state().unwrap();
        chain.step(&mut s, &mut rng);
        seen[s.colours[0] as usize - 1] += 1;
    }
    for c in seen {
        assert!((c as f64 - 10_000.0).abs() < 500.0, "{seen:?}");
    }
}

#[test]
fn steps_keep_the_state_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..8 {
        let region = random_region(&mut rng, n);
        let b = random_vertex_boundary(&mut rng, &region, 9);
        for update in [Update::HeatBath, Update::Rejection] {
            let mut cfg = ChainConfig::new(region.clone(), b.clone(), p9());
            cfg.update = update;
            let chain = Chain::new(&cfg).unwrap();
            let mut s = chain.first_state().unwrap();
            for _ in 0..20_000 {
                chain.step(&mut s, &mut rng);
                assert!(chain.is_valid(&s.colours));
            }
            assert!(s.colouring(&region).is_proper());
        }
    }
}

#[test]
fn every_vertex_has_three_choices() {
    // Six neighbours exclude at most six of nine colours.
    let region = Region::from_pairs(&[(0, 0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let b = random_vertex_boundary(&mut rng, &region, 9);
        let cfg = ChainConfig::new(region.clone(), b, p9());
        let m = exact_transition_matrix(&cfg, DEFAULT_STATE_CAP).unwrap();
        assert!(m.len() >= 3);
    }
}

#[test]
fn uniform_is_stationary_for_both_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut done = 0;
    while done < 10 {
        let region = random_region(&mut rng, 1 + done % 3);
        let b = random_vertex_boundary(&mut rng, &region, 9);
        for update in [Update::HeatBath, Update::Rejection] {
            let mut cfg = ChainConfig::new(region.clone(), b.clone(), p9());
            cfg.update = update;
            let m = match exact_transition_matrix(&cfg, 2000) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let exact = count(&region, &PartialEdgeColouring::from_vertex(&region, &b), None, p9()).unwrap();
            assert_eq!(exact, m.len().into());
            assert!(m.rows_sum_to_one());
            assert!(m.uniform_is_stationary());
        }
        done += 1;
    }
}

#[test]
fn two_vertex_chain_is_ergodic() {
    let cfg = ChainConfig::free(path(2), p9());
    let m = exact_transition_matrix(&cfg, DEFAULT_STATE_CAP).unwrap();
    assert_eq!(m.len(), 72);
    assert!(m.is_irreducible());
    assert!(m.has_positive_diagonal());
}

#[test]
fn state_cap_is_enforced() {
    let cfg = ChainConfig::free(path(5), p9());
    assert!(exact_transition_matrix(&cfg, 5000).is_err());
}

#[test]
fn exact_curve_decreases() {
    let cfg = ChainConfig::free(path(2), p9());
    let m = exact_transition_matrix(&cfg, DEFAULT_STATE_CAP).unwrap();
    let curve = m.tv_curve(0, 30);
    assert!((curve[0] - (1.0 - 1.0 / 72.0)).abs() < 1e-12);
    assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(curve[30] < 0.01);
}

#[test]
fn empirical_curve_starts_at_a_point_mass() {
    let cfg = ChainConfig::free(path(2), p9());
    let pts = tv_decay(&cfg, 2000, 5, 9).unwrap();
    assert!((pts[0].tv - (1.0 - 1.0 / 72.0)).abs() < 1e-12);
    assert!(pts.windows(2).all(|w| w[1].smoothed <= w[0].smoothed));
}

#[test]
fn approximate_count_of_a_free_vertex() {
    let cfg = ChainConfig::free(Region::from_pairs(&[(0, 0)]).unwrap(), p9());
    let r = approx_count(&cfg, ApproxOptions { samples_per_factor: 20_000, ..Default::default() }).unwrap();
    assert!(r.low <= 9.0 && 9.0 <= r.high, "{r:?}");
}

#[test]
fn approximate_count_is_seed_consistent() {
    let cfg = ChainConfig::free(path(2), p9());
    let a = approx_count(&cfg, ApproxOptions { samples_per_factor: 5000, seed: 1, ..Default::default() }).unwrap();
    let b = approx_count(&cfg, ApproxOptions { samples_per_factor: 5000, seed: 2, ..Default::default() }).unwrap();
    assert!(a.low.max(b.low) <= a.high.min(b.high), "{a:?} {b:?}");
    let again = approx_count(&cfg, ApproxOptions { samples_per_factor: 5000, seed: 1, ..Default::default() }).unwrap();
    assert_eq!(a, again);
}
