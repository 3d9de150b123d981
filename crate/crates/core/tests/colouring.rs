mod common;

use common::{p9, random_edge_boundary, random_region, random_vertex_boundary};
use num_traits::One;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use trimix::colouring::*;
use trimix::lattice::{Edge, Region, Symmetry};

fn instance(seed: u64, max: usize, top: u8) -> (Region, PartialEdgeColouring) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max);
    let r = random_region(&mut rng, n);
    let b = random_edge_boundary(&mut rng, &r, top);
    (r, b)
}

fn edge_map(b: &PartialEdgeColouring) -> BTreeMap<Edge, u8> {
    b.iter().collect()
}

#[test]
fn dp_matches_brute_force() {
    for seed in 0..200 {
        let (r, b) = instance(seed, 6, 9);
        assert_eq!(
            count(&r, &b, None, p9()).unwrap(),
            brute_force_count(&r, &b, None, p9(), DEFAULT_BRUTE_FORCE_CAP).unwrap(),
            "seed {seed}"
        );
    }
}

#[test]
fn brute_force_cap() {
    let r9 = Region::new((0..9).map(|i| trimix::lattice::LatticeCoord::at(0, 2 * i))).unwrap();
    let b9 = PartialEdgeColouring::zero(&r9);
    assert!(brute_force_count(&r9, &b9, None, p9(), 8).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn breakdown_sums_to_count(seed in any::<u64>()) {
        let (r, b) = instance(seed, 6, 9);
        let v = r.iter().next().unwrap();
        let bd = count_breakdown(&r, &b, v, p9()).unwrap();
        prop_assert_eq!(bd.total(), count(&r, &b, None, p9()).unwrap());
        for c in 1..=9u8 {
            prop_assert_eq!(bd.n(c as usize), &count(&r, &b, Some((v, c)), p9()).unwrap());
        }
    }

    #[test]
    fn count_is_symmetric(seed in any::<u64>(), k in 0u8..6, mirror in any::<bool>()) {
        let (r, b) = instance(seed, 6, 9);
        let s = if mirror { Symmetry::Reflection(k) } else { Symmetry::Rotation(k) };
        let anchor = r.iter().next().unwrap();
        let t = r.transform(s, anchor);
        let moved: BTreeMap<Edge, u8> = b
            .iter()
            .map(|(e, c)| {
                let (x, y) = e.endpoints();
                (Edge::new(s.apply(x, anchor), s.apply(y, anchor)).unwrap(), c)
            })
            .collect();
        let tb = PartialEdgeColouring::from_map(&t, moved, p9()).unwrap();
        prop_assert_eq!(count(&r, &b, None, p9()).unwrap(), count(&t, &tb, None, p9()).unwrap());
    }

    #[test]
    fn colour_permutations_permute_breakdowns(seed in any::<u64>(), shift in 1u8..9) {
        let (r, b) = instance(seed, 5, 9);
        let v = r.iter().next().unwrap();
        let perm = |c: u8| if c == 0 { 0 } else { (c - 1 + shift) % 9 + 1 };
        let pb = PartialEdgeColouring::from_map(&r, edge_map(&b).into_iter().map(|(e, c)| (e, perm(c))).collect(), p9()).unwrap();
        let a = count_breakdown(&r, &b, v, p9()).unwrap();
        let z = count_breakdown(&r, &pb, v, p9()).unwrap();
        for c in 1..=9u8 {
            prop_assert_eq!(a.n(c as usize), z.n(perm(c) as usize));
        }
    }

    #[test]
    fn clearing_a_boundary_colour_never_lowers_the_count(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (r, b) = instance(seed, 6, 9);
        let edges: Vec<Edge> = b.iter().map(|(e, _)| e).collect();
        let e = edges[pick.index(edges.len())];
        let mut cleared = b.clone();
        cleared.set(e, 0).unwrap();
        prop_assert!(count(&r, &cleared, None, p9()).unwrap() >= count(&r, &b, None, p9()).unwrap());
    }

    #[test]
    fn marginals_are_distributions(seed in any::<u64>()) {
        let (r, b) = instance(seed, 5, 9);
        let v = r.iter().next().unwrap();
        if let Ok(m) = marginal(&r, &b, v, p9()) {
            prop_assert!(m.total().is_one());
        }
    }

    #[test]
    fn tv_is_a_metric(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let r = Region::from_pairs(&[(0, 0), (0, 2)]).unwrap();
        let v = r.iter().next().unwrap();
        let mk = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let b = random_edge_boundary(&mut rng, &r, 9);
            marginal(&r, &b, v, p9())
        };
        let (Ok(p), Ok(q), Ok(u)) = (mk(s1), mk(s2), mk(s3)) else { return Ok(()) };
        prop_assert_eq!(tv_distance(&p, &q), tv_distance(&q, &p));
        prop_assert!(tv_distance(&p, &p) == num_rational::BigRational::from_integer(0.into()));
        prop_assert!(tv_distance(&p, &u) <= tv_distance(&p, &q) + tv_distance(&q, &u));
    }

    #[test]
    fn vertex_and_edge_forms_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let r = random_region(&mut rng, n);
        let vb = random_vertex_boundary(&mut rng, &r, 9);
        let eb = PartialEdgeColouring::from_vertex(&r, &vb);
        let colours: BTreeMap<_, _> = r.iter().map(|p| (p, rng.gen_range(1..=9u8))).collect();
        let c = Colouring::new(colours);
        prop_assert_eq!(agrees(&r, &c, &vb).unwrap(), agrees(&r, &c, &eb).unwrap());
    }
}
