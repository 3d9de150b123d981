mod common;

use common::{p9, random_pair};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trimix::boundary::EdgeBoundaryPair;
use trimix::colouring::{marginal, Colouring, PartialEdgeColouring};
use trimix::coupling::{build_tree, cost, gamma_d, normalise, p_table, sample_coupling_with};
use trimix::lattice::{Edge, LatticeCoord, Region};
use trimix::mu::mu_exact;

fn single_vertex() -> EdgeBoundaryPair {
    let region = Region::from_pairs(&[(0, 0)]).unwrap();
    let (v, w) = (LatticeCoord::at(0, 0), LatticeCoord::at(0, -2));
    let mut b = PartialEdgeColouring::zero(&region);
    let mut bp = b.clone();
    b.set(Edge::new(w, v).unwrap(), 1).unwrap();
    bp.set(Edge::new(w, v).unwrap(), 2).unwrap();
    EdgeBoundaryPair { region, w, v, b, b_prime: bp }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn single_vertex_table_puts_mass_at_2_1() {
    let t = p_table(&single_vertex(), p9()).unwrap();
    assert_eq!(t.off_diagonal_mass(), ratio(1, 8));
    assert_eq!(t.get(2, 1), &ratio(1, 8));
    assert_eq!(t.off_diagonal().count(), 1);
}

#[test]
fn identical_marginals_give_diagonal_table() {
    let p = marginal(&single_vertex().region, &single_vertex().b, LatticeCoord::at(0, 0), p9()).unwrap();
    let t = trimix::coupling::optimal_coupling(&p, &p);
    assert!(t.off_diagonal_mass().is_zero());
}

#[test]
fn table_sums_match_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = 1 + rand::Rng::gen_range(&mut rng, 0..4);
        let x = random_pair(&mut rng, n, 4);
        let t = p_table(&x, p9()).unwrap();
        let m1 = marginal(&x.region, &x.b, x.v, p9()).unwrap();
        let m2 = marginal(&x.region, &x.b_prime, x.v, p9()).unwrap();
        for c in 1..=9 {
            assert_eq!(&t.row_sum(c), m1.prob(c));
            assert_eq!(&t.col_sum(c), m2.prob(c));
        }
        assert_eq!(t.off_diagonal_mass(), mu_exact(&x, p9()).unwrap().value);
    }
}

#[test]
fn empty_ex_tree_is_a_star() {
    let x = single_vertex();
    let tree = build_tree(&x, 3, p9()).unwrap();
    assert!(tree.edges.iter().all(|e| e.parent == 0 && e.level == 1));
    assert!(tree.edges.len() <= 72);
    assert!(gamma_d(&x, 2, p9()).unwrap().is_zero());
    assert_eq!(cost(x.v, &tree), ratio(1, 8));
}

#[test]
fn gamma_matches_tree_traversal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..20 {
        let x = random_pair(&mut rng, 1 + k % 3, 3);
        let tree = build_tree(&x, 3, p9()).unwrap();
        assert!(tree.levels() <= 3);
        assert_eq!(tree.gamma(1), mu_exact(&x, p9()).unwrap().value);
        let mut total = BigRational::zero();
        for d in 1..=3 {
            let g = gamma_d(&x, d, p9()).unwrap();
            assert_eq!(g, tree.gamma(d), "pair {k} level {d}");
            total += g;
        }
        let costs = x.region.iter().fold(BigRational::zero(), |a, v| a + cost(v, &tree));
        assert_eq!(costs, total);
    }
}

#[test]
fn normalise_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_pair(&mut rng, 3, 3);
    let n = normalise(&x, p9()).unwrap();
    assert_eq!(n.v, LatticeCoord::at(0, 0));
    assert_eq!(n.w, LatticeCoord::at(0, -2));
    assert_eq!(normalise(&n, p9()).unwrap(), n);
    assert_eq!(gamma_d(&x, 2, p9()).unwrap(), gamma_d(&n, 2, p9()).unwrap());
}

#[test]
fn sampled_pairs_have_the_right_marginals() {
    let region = Region::from_pairs(&[(0, 0), (0, 2)]).unwrap();
    let (v, w) = (LatticeCoord::at(0, 0), LatticeCoord::at(0, -2));
    let mut b = PartialEdgeColouring::zero(&region);
    for e in region.edge_boundary() {
        if e.is_incident(LatticeCoord::at(1, 1)) {
            b.set(e, 3).unwrap();
        }
    }
    let mut bp = b.clone();
    b.set(Edge::new(w, v).unwrap(), 1).unwrap();
    bp.set(Edge::new(w, v).unwrap(), 2).unwrap();
    let x = EdgeBoundaryPair { region: region.clone(), w, v, b, b_prime: bp };
    let mu = mu_exact(&x, p9()).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20_000;
    let mut at_v = [[0u32; 9]; 2];
    let mut disagree = 0;
    for _ in 0..n {
        let (c, cp): (Colouring, Colouring) = sample_coupling_with(&x, &mut rng, p9(), 6).unwrap();
        assert!(c.is_proper() && cp.is_proper());
        at_v[0][c.get(v).unwrap() as usize - 1] += 1;
        at_v[1][cp.get(v).unwrap() as usize - 1] += 1;
        if c.get(v) != cp.get(v) {
            disagree += 1;
        }
    }
    let m1 = marginal(&region, &x.b, v, p9()).unwrap();
    let m2 = marginal(&region, &x.b_prime, v, p9()).unwrap();
    let tv = |counts: &[u32; 9], m: &trimix::colouring::Distribution| {
        (1..=9)
            .map(|c| (counts[c - 1] as f64 / n as f64 - ratio_f(m.prob(c))).abs())
            .sum::<f64>()
            / 2.0
    };
    assert!(tv(&at_v[0], &m1) < 0.02);
    assert!(tv(&at_v[1], &m2) < 0.02);
    assert!((disagree as f64 / n as f64 - ratio_f(&mu)).abs() < 0.02);
    let _ = BigRational::one();
}

fn ratio_f(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap()
}
