mod common;

use common::{p9, random_pair, raw_mu_max, shapes_up_to};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimix::boundary::BoundaryShape;
use trimix::colouring::{marginal, tv_distance};
use trimix::lattice::LatticeCoord;
use trimix::mu::*;

const V: LatticeCoord = LatticeCoord::at(0, 0);
const W: LatticeCoord = LatticeCoord::at(0, -2);

#[test]
fn canonical_max_matches_raw_sweep() {
    for r in shapes_up_to(3) {
        let shape = BoundaryShape::new(&r, V, W, p9()).unwrap();
        let canonical = mu_max(shape, 1).unwrap().value;
        assert_eq!(canonical, raw_mu_max(&r, p9()), "{r:?}");
    }
}

#[test]
fn shrinking_never_lowers_the_maximum() {
    let shapes = shapes_up_to(3);
    let maxima: Vec<BigRational> = shapes
        .iter()
        .map(|r| mu_max(BoundaryShape::new(r, V, W, p9()).unwrap(), 1).unwrap().value)
        .collect();
    let mirror = |r: &trimix::lattice::Region| r.transform(trimix::lattice::Symmetry::Reflection(0), V);
    for (big, mb) in shapes.iter().zip(&maxima) {
        for (small, ms) in shapes.iter().zip(&maxima) {
            if small.is_subset(big) || mirror(small).is_subset(big) {
                assert!(mb <= ms, "{big:?} {small:?}");
            }
        }
    }
}

#[test]
fn single_vertex_values() {
    let r = trimix::lattice::Region::from_pairs(&[(0, 0)]).unwrap();
    let shape = BoundaryShape::new(&r, V, W, p9()).unwrap();
    assert_eq!(mu_max(shape.clone(), 1).unwrap().value, BigRational::new(1.into(), 3.into()));
    let search = MuSearch::new(shape).unwrap();
    for seed in 0..3 {
        assert_eq!(mu_hill_climb(&search, seed, 5, 50).unwrap().value, BigRational::new(1.into(), 3.into()));
    }
}

#[test]
fn worker_count_does_not_change_the_result() {
    let r = trimix::lattice::Region::from_pairs(&[(0, 0), (-1, 1), (0, 2)]).unwrap();
    let s = MuSearch::new(BoundaryShape::new(&r, V, W, p9()).unwrap()).unwrap();
    let one = s.mu_max(1).unwrap();
    assert_eq!(one, s.mu_max(4).unwrap());
    assert_eq!(one.record("x"), s.mu_max(3).unwrap().record("x"));
}

#[test]
fn hill_climb_is_a_reproducible_lower_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let r = common::random_region(&mut rng, n);
        let vs: Vec<LatticeCoord> = r.iter().collect();
        let v = vs[rng.gen_range(0..vs.len())];
        let outside: Vec<LatticeCoord> = v.neighbours().into_iter().filter(|u| !r.contains(*u)).collect();
        let w = outside[rng.gen_range(0..outside.len())];
        let Ok(shape) = BoundaryShape::new(&r, v, w, p9()) else { continue };
        let s = MuSearch::new(shape).unwrap();
        let exact = s.mu_max(1).unwrap().value;
        let a = mu_hill_climb(&s, 11, 3, 40).unwrap();
        assert!(a.value <= exact);
        assert_eq!(a, mu_hill_climb(&s, 11, 3, 40).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mu_is_the_tv_of_the_marginals(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let x = random_pair(&mut rng, n, 9);
        let mu = mu_exact(&x, p9()).unwrap();
        let p = marginal(&x.region, &x.b, x.v, p9()).unwrap();
        let q = marginal(&x.region, &x.b_prime, x.v, p9()).unwrap();
        prop_assert_eq!(&mu.value, &tv_distance(&p, &q));
        prop_assert!(mu.value >= BigRational::from_integer(0.into()));
        prop_assert!(mu.value <= BigRational::from_integer(1.into()));
    }

    #[test]
    fn mu_ignores_labels_and_symmetries(seed in any::<u64>(), k in 0u8..6, mirror in any::<bool>(), shift in 0u8..7) {
        use trimix::colouring::PartialEdgeColouring;
        use trimix::lattice::{Edge, Symmetry};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let x = random_pair(&mut rng, n, 9);
        let base = mu_exact(&x, p9()).unwrap().value;
        // Relabel colours 3..=9 cyclically and move the pair by a symmetry.
        let perm = |c: u8| if c >= 3 { (c - 3 + shift) % 7 + 3 } else { c };
        let s = if mirror { Symmetry::Reflection(k) } else { Symmetry::Rotation(k) };
        let region = x.region.transform(s, V);
        let mv = |b: &PartialEdgeColouring| {
            let m = b
                .iter()
                .map(|(e, c)| {
                    let (a, z) = e.endpoints();
                    (Edge::new(s.apply(a, V), s.apply(z, V)).unwrap(), perm(c))
                })
                .collect();
            PartialEdgeColouring::from_map(&region, m, p9()).unwrap()
        };
        let y = trimix::boundary::EdgeBoundaryPair {
            b: mv(&x.b),
            b_prime: mv(&x.b_prime),
            v: s.apply(x.v, V),
            w: s.apply(x.w, V),
            region: region.clone(),
        };
        prop_assert_eq!(mu_exact(&y, p9()).unwrap().value, base);
    }
}
