//! Brute-force oracles and algebraic invariants.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdlc::kernel::{index, product_set, product_set_equals, subgroup_closure, LampWindow, MatWindow};
use tdlc::limits::{chabauty_distance, ClosedSubgroupApprox, Distance};
use tdlc::linear::{q, qf, scale_formula, LinearModel, QMatrix, ValShape};
use tdlc::shift::{EPSeq, ShiftElement, ShiftModel};
use tdlc::{Model, SubgroupImage, WindowGroup};

/// Closure by repeated full products until nothing new appears.
fn naive_closure<W: WindowGroup>(w: &W, gens: &[W::Elem]) -> BTreeSet<W::Elem> {
    let mut s: BTreeSet<W::Elem> = gens.iter().cloned().collect();
    s.insert(w.identity());
    loop {
        let mut next = s.clone();
        for a in &s {
            next.insert(w.inv(a));
            for b in &s {
                next.insert(w.mul(a, b));
            }
        }
        if next.len() == s.len() {
            return s;
        }
        s = next;
    }
}

/// Number of distinct left cosets, by explicit partition.
fn naive_index<W: WindowGroup>(w: &W, u: &BTreeSet<W::Elem>, v: &BTreeSet<W::Elem>) -> usize {
    let mut covered = BTreeSet::new();
    let mut count = 0;
    for x in u {
        if covered.contains(x) {
            continue;
        }
        count += 1;
        for y in v {
            covered.insert(w.mul(x, y));
        }
    }
    count
}

fn check_kernel_against_oracles<W: WindowGroup>(w: &W, gens: &[Vec<W::Elem>]) {
    let subs: Vec<SubgroupImage<W::Elem>> = gens
        .iter()
        .map(|g| {
            let s = subgroup_closure(w, g, 1 << 16).unwrap();
            assert_eq!(s.elements, naive_closure(w, g));
            s
        })
        .collect();
    let full = SubgroupImage::from_set(w, w.elements(1 << 16).unwrap().into_iter().collect());
    for a in &subs {
        assert_eq!(index(&full, a).unwrap() as usize, naive_index(w, &full.elements, &a.elements));
        for b in &subs {
            if b.is_subgroup_of(a) {
                assert_eq!(index(a, b).unwrap() as usize, naive_index(w, &a.elements, &b.elements));
            } else {
                assert!(index(a, b).is_err());
            }
            let brute = product_set(w, a, b);
            for t in [&full, a] {
                let fast = product_set_equals(w, a, b, t).unwrap();
                assert_eq!(fast.equal, brute == t.elements);
                if let Some(x) = fast.witness {
                    assert!(t.contains(&x) && !brute.contains(&x));
                }
            }
        }
    }
}

#[test]
fn kernel_matches_enumeration_on_lamp_window() {
    let w = LampWindow::new(2, 2);
    let els = w.elements(64).unwrap();
    assert_eq!(els.len(), 32);
    let mut gens: Vec<Vec<Vec<u8>>> = vec![vec![]];
    for a in &els {
        gens.push(vec![a.clone()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        gens.push((0..2).map(|_| els[rng.gen_range(0..32)].clone()).collect());
    }
    check_kernel_against_oracles(&w, &gens);
}

#[test]
fn kernel_matches_enumeration_on_gl2_mod_4() {
    let w = MatWindow::new(2, 2, 2);
    let els = w.elements(1000).unwrap();
    assert_eq!(els.len(), 96);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut gens: Vec<Vec<Vec<u64>>> = vec![vec![]];
    for _ in 0..25 {
        let n = rng.gen_range(1..=2);
        gens.push((0..n).map(|_| els[rng.gen_range(0..96)].clone()).collect());
    }
    check_kernel_against_oracles(&w, &gens);
}

/// Grows a generating set inside the image; the image is a subgroup iff
/// the generated subgroup never leaves it.
fn shape_image_is_subgroup(p: u64, shape: &str, k: u32) -> bool {
    let lm = LinearModel::new(p, 2).unwrap();
    let img = lm.image(&lm.shape(shape.parse().unwrap()), k).unwrap();
    let w = lm.window(k);
    let mut gens = Vec::new();
    let mut h = SubgroupImage::trivial(&w);
    for x in &img.elements {
        if !h.contains(x) {
            gens.push(x.clone());
            h = subgroup_closure(&w, &gens, 1 << 17).unwrap();
            if !h.is_subgroup_of(&img) {
                return false;
            }
        }
    }
    h.elements == img.elements
}

#[test]
fn group_shapes_give_subgroups() {
    let shapes = ["0,0;0,0", "0,1;0,0", "0,0;1,0", "1,1;1,1", "0,2;1,0", "1,2;1,1", "2,1;3,2", "0,inf;0,0", "inf,0;inf,inf"];
    for (p, kmax) in [(2u64, 4u32), (3, 2)] {
        for s in shapes {
            let shape: ValShape = s.parse().unwrap();
            assert!(shape.is_group_shape());
            for k in 1..=kmax {
                assert!(shape_image_is_subgroup(p, s, k), "{s} p={p} k={k}");
            }
        }
    }
}

#[test]
fn non_group_shape_is_detected() {
    let broken: ValShape = "0,-1;0,0".parse().unwrap();
    assert!(!broken.is_group_shape());
}

fn approx_battery() -> Vec<ClosedSubgroupApprox<ShiftModel>> {
    let sm = ShiftModel::new(2).unwrap();
    let w = sm.window(3);
    let els = w.elements(1 << 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut out = vec![];
    for i in 0..30 {
        let n = i % 4;
        let g: Vec<_> = (0..n).map(|_| els[rng.gen_range(0..els.len())].clone()).collect();
        let top = subgroup_closure(&w, &g, 1 << 8).unwrap();
        out.push(ClosedSubgroupApprox::from_top(&sm, &top, 3).unwrap());
    }
    out
}

fn numeric(d: Distance) -> f64 {
    match d {
        Distance::Dyadic(m) => 0.5f64.powi(m as i32),
        Distance::Indistinguishable(_) => 0.0,
    }
}

#[test]
fn chabauty_distance_is_an_ultrametric() {
    let bat = approx_battery();
    for a in &bat {
        assert!(chabauty_distance(a, a).unwrap().is_indistinguishable());
        for b in &bat {
            let ab = chabauty_distance(a, b).unwrap();
            assert_eq!(ab, chabauty_distance(b, a).unwrap());
            assert_eq!(ab.is_indistinguishable(), a.images == b.images);
            for c in &bat {
                let ac = numeric(chabauty_distance(a, c).unwrap());
                let bc = numeric(chabauty_distance(b, c).unwrap());
                assert!(ac <= numeric(ab).max(bc));
            }
        }
    }
}

#[test]
fn scale_formula_is_multiplicative_in_powers() {
    for (g, p) in [("2,0;0,1", 2), ("3,1;0,1", 3), ("4,0,0;0,2,0;0,0,1", 2), ("1,2;1,1/2", 2)] {
        let g: QMatrix = g.parse().unwrap();
        let s = scale_formula(&g, p);
        for m in 1..=4 {
            assert_eq!(scale_formula(&g.pow(m), p), s.pow(m as u32), "{g} {m}");
        }
    }
}

fn lamp_strategy(p: u8) -> impl Strategy<Value = ShiftElement> {
    (proptest::collection::vec(0..p, 0..8), -6i64..6, -3i64..4)
        .prop_map(move |(vals, lo, m)| ShiftElement::new(EPSeq::from_window(p, lo, &vals), m))
}

fn ep_strategy(p: u8) -> impl Strategy<Value = EPSeq> {
    (
        proptest::collection::vec(0..p, 1..3),
        -5i64..5,
        proptest::collection::vec(0..p, 0..5),
        proptest::collection::vec(0..p, 1..3),
    )
        .prop_map(move |(l, s, c, r)| EPSeq::new(p, l, s, c, r).unwrap())
}

fn small_matrix() -> impl Strategy<Value = QMatrix> {
    proptest::collection::vec(-6i64..7, 4)
        .prop_filter_map("singular", |v| QMatrix::from_ints(2, &v).ok())
}

proptest! {
    #[test]
    fn shift_group_laws(a in lamp_strategy(3), b in lamp_strategy(3), c in lamp_strategy(3)) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert!(a.mul(&a.inv()).is_identity());
        let s = a.to_string();
        prop_assert_eq!(ShiftElement::parse(3, &s).unwrap(), a);
    }

    #[test]
    fn ep_arithmetic(a in ep_strategy(2), b in ep_strategy(2), m in -7i64..7) {
        prop_assert!(a.add(&b).sub(&b) == a.clone());
        prop_assert_eq!(a.shift(m).shift(-m), a.clone());
        for i in -12..12 {
            prop_assert_eq!(a.add(&b).get(i), (a.get(i) + b.get(i)) % 2);
            prop_assert_eq!(a.shift(m).get(i), a.get(i - m));
        }
        prop_assert_eq!(EPSeq::parse_ep(2, &a.to_ep_string()).unwrap(), a);
    }

    #[test]
    fn matrix_group_laws(a in small_matrix(), b in small_matrix()) {
        prop_assert!(a.mul(&a.inv()).is_identity());
        let ab = a.mul(&b);
        prop_assert_eq!(ab.det(), &(a.det() * b.det()));
        prop_assert_eq!(a.to_string().parse::<QMatrix>().unwrap(), a.clone());
        prop_assert_eq!(a.mul(&b).inv(), b.inv().mul(&a.inv()));
    }

    #[test]
    fn contraction_is_closed_under_products(
        x in lamp_strategy(2), y in lamp_strategy(2), m in -3i64..4,
    ) {
        let sm = ShiftModel::new(2).unwrap();
        let g = ShiftElement::translation(2, m);
        let (x, y) = (ShiftElement::lamp_only(x.lamp), ShiftElement::lamp_only(y.lamp));
        let cx = sm.con_oracle(&g, &x).unwrap();
        let cy = sm.con_oracle(&g, &y).unwrap();
        if cx && cy {
            prop_assert!(sm.con_oracle(&g, &sm.mul(&x, &y)).unwrap());
        }
    }

    #[test]
    fn project_is_a_homomorphism(a in 0i64..4, b in 0i64..4, c in 0i64..4, d in 0i64..4,
                                  e in 0i64..4, f in 0i64..4) {
        let lm = LinearModel::new(2, 2).unwrap();
        let x = QMatrix::from_ints(2, &[1 + 2 * a, b, c, 1 + 2 * d]);
        let y = QMatrix::from_ints(2, &[1 + 2 * e, f, 2 * a, 1]);
        if let (Ok(x), Ok(y)) = (x, y) {
            if x.in_gl_zp(2) && y.in_gl_zp(2) {
                let w = lm.window(3);
                let px = lm.project(&x, 3).unwrap();
                let py = lm.project(&y, 3).unwrap();
                prop_assert_eq!(lm.project(&x.mul(&y), 3).unwrap(), w.mul(&px, &py));
            }
        }
    }

    #[test]
    fn conjugated_shape_membership(a in -5i64..6, b in -5i64..6, j in -3i64..4) {
        let lm = LinearModel::new(3, 2).unwrap();
        let g = QMatrix::diag(&[q(3), q(1)]).unwrap();
        let iw = lm.shape("0,1;0,0".parse().unwrap());
        let x = QMatrix::from_ints(2, &[1, a, 3 * b, 1]).unwrap();
        let cs = lm.conjugate_set(&iw, &g, j).unwrap();
        prop_assert_eq!(lm.contains(&iw, &x), lm.contains(&cs, &g.pow(j).conj(&x)));
    }

    #[test]
    fn scale_formula_of_diagonal(e1 in -3i64..4) {
        let g = QMatrix::diag(&[qf(8i64.pow(e1.max(0) as u32), 8i64.pow((-e1).max(0) as u32)), q(1)]).unwrap();
        prop_assert_eq!(scale_formula(&g, 2), 2u128.pow(3 * e1.unsigned_abs() as u32));
    }
}
