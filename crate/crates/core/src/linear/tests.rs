use super::*;
use crate::kernel::WindowGroup;

fn m(s: &str) -> QMatrix {
    s.parse().unwrap()
}

fn iwahori(model: &LinearModel) -> ShapeSubgroup {
    model.shape("0,1;0,0".parse().unwrap())
}

#[test]
fn level_zero_parts_for_diag_p_1() {
    let lm = LinearModel::new(3, 2).unwrap();
    let g = m("3,0;0,1");
    let (plus, minus, zero) = lm.symbolic_parts(&lm.reference(), &g).unwrap().unwrap();
    assert_eq!(plus.shape.to_string(), "0,inf;0,0");
    assert_eq!(minus.shape.to_string(), "0,0;inf,0");
    assert_eq!(zero.shape.to_string(), "0,inf;inf,0");
    let (p2, m2, z2) = lm.symbolic_parts(&lm.reference(), &lm.identity()).unwrap().unwrap();
    assert!(p2 == lm.reference() && m2 == lm.reference() && z2 == lm.reference());
}

#[test]
fn ul_split_examples() {
    let lm = LinearModel::new(3, 2).unwrap();
    let g = m("3,0;0,1");
    let u = iwahori(&lm);
    let (wm, wp) = lm.split(&u, &g, &m("1,3;1,1")).unwrap();
    assert_eq!(wm, m("1,3;0,1"));
    assert_eq!(wp, m("-2,0;1,1"));
    let (a, b) = lm.split(&u, &g, &lm.identity()).unwrap();
    assert!(a.is_identity() && b.is_identity());
    let err = lm.split(&lm.reference(), &g, &m("0,1;1,0"));
    assert!(matches!(err, Err(Error::Factorization { .. })));
}

#[test]
fn split_off_zero_keeps_diagonal() {
    let lm = LinearModel::new(2, 2).unwrap();
    let g = m("2,0;0,1");
    let t = m("3,0;4,5");
    let (rest, zero) = lm.split_off_zero(&lm.reference(), &g, &t).unwrap();
    assert_eq!(zero, m("3,0;0,5"));
    assert_eq!(rest.mul(&zero), t);
    assert_eq!(lm.con_oracle(&lm.inv(&g), &rest), Some(true));
}

#[test]
fn contraction_oracle_examples() {
    let lm = LinearModel::new(2, 2).unwrap();
    let g = m("2,0;0,1");
    assert_eq!(lm.con_oracle(&g, &m("1,1;0,1")), Some(true));
    assert_eq!(lm.con_oracle(&g, &m("1,0;1,1")), Some(false));
    assert_eq!(lm.con_oracle(&g, &lm.identity()), Some(true));
    assert_eq!(con_oracle_linear(2, &m("0,2;1,0"), &lm.identity()).ok(), None);
}

#[test]
fn proximity_levels() {
    let lm = LinearModel::new(2, 2).unwrap();
    assert_eq!(lm.proximity_level(&lm.identity()), Level::Infinite);
    assert_eq!(lm.proximity_level(&m("1,4;0,1")), Level::Finite(2));
    assert_eq!(lm.proximity_level(&m("3,0;0,1")), Level::Finite(1));
    assert_eq!(lm.proximity_level(&m("1,0;0,2")), Level::Outside);
    assert_eq!(lm.proximity_level(&m("1,1/2;0,1")), Level::Outside);
}

#[test]
fn projection_requires_p_integral() {
    let lm = LinearModel::new(2, 2).unwrap();
    assert!(matches!(lm.project(&m("1,1/2;0,1"), 2), Err(Error::OutsideReference(_))));
    assert_eq!(lm.project(&m("1,5;0,3"), 2).unwrap(), vec![1, 1, 0, 3]);
}

#[test]
fn shape_images_have_expected_orders() {
    let lm = LinearModel::new(2, 2).unwrap();
    assert_eq!(lm.image(&lm.reference(), 2).unwrap().order(), 96);
    assert_eq!(lm.image(&iwahori(&lm), 2).unwrap().order(), 32);
    assert_eq!(lm.image(&lm.level_set(1), 2).unwrap().order(), 16);
    assert_eq!(lm.image(&lm.level_set(1), 0).unwrap().order(), 1);
    let lm3 = LinearModel::new(3, 2).unwrap().with_cap(1000);
    assert!(matches!(lm3.image(&lm3.reference(), 3), Err(Error::ResolutionTooFine { .. })));
}

#[test]
fn shape_images_are_subgroups() {
    for (p, k) in [(2, 2), (3, 1)] {
        let lm = LinearModel::new(p, 2).unwrap();
        let w = lm.window(k);
        for s in ["0,0;0,0", "0,1;0,0", "0,0;1,0", "1,1;1,1", "1,2;1,1", "0,inf;0,0", "inf,0;inf,inf"] {
            let shape: ValShape = s.parse().unwrap();
            assert!(shape.is_group_shape(), "{s}");
            let img = lm.image(&lm.shape(shape), k).unwrap();
            assert!(img.is_closed(&w), "{s} at p={p}");
        }
    }
}

#[test]
fn conjugated_shapes_match_membership() {
    let lm = LinearModel::new(2, 2).unwrap();
    let g = m("2,0;0,1");
    let c = lm.conjugate_set(&lm.reference(), &g, 1).unwrap();
    let x = m("1,1;0,1");
    assert!(lm.contains(&lm.reference(), &x));
    assert_eq!(lm.contains(&c, &lm.conj(&g, &x)), true);
    assert!(!lm.contains(&c, &x));
}

#[test]
fn con_closure_for_conjugated_element() {
    // g = h·diag(2,1)·h⁻¹ in the standard frame: the root group is not a
    // frame shape, so the one-parameter path is used.
    let lm = LinearModel::new(2, 2).unwrap();
    let h = m("1,1;0,1");
    let g = h.conj(&m("2,0;0,1"));
    let img = lm.con_closure_image(&g, 3).unwrap().unwrap();
    assert_eq!(img.order(), 8);
    let x = h.conj(&m("1,1;0,1"));
    assert_eq!(lm.con_oracle(&g, &x), Some(true));
    assert!(img.contains(&lm.project(&x, 3).unwrap()));
    let diag = lm.con_closure_image(&m("2,0;0,1"), 3).unwrap().unwrap();
    assert_eq!(diag.order(), 8);
    let trivial = lm.con_closure_image(&lm.identity(), 3).unwrap().unwrap();
    assert_eq!(trivial.order(), 1);
}

#[test]
fn adapted_frame_diagonalizes() {
    let h = m("1,1;0,1");
    let g = h.conj(&m("2,0;0,1"));
    let lm = LinearModel::adapted_to(2, &g).unwrap();
    let e = lm.eigen(&g).unwrap();
    assert_eq!(&e.basis, lm.frame());
    assert_eq!(lm.minusminus_certificate(&lm.reference(), &g), Some(true));
}

#[test]
fn eventually_in_level_examples() {
    let lm = LinearModel::new(2, 2).unwrap();
    let g = m("2,0;0,1");
    assert_eq!(lm.eventually_in_level(&g, &m("1,1;0,1"), 3), Some(true));
    assert_eq!(lm.eventually_in_level(&g, &m("1,0;1,1"), 0), Some(false));
    assert_eq!(lm.eventually_in_level(&g, &m("3,0;0,1"), 1), Some(true));
    assert_eq!(lm.eventually_in_level(&g, &m("3,0;0,1"), 2), Some(false));
}

#[test]
fn lift_is_a_section_of_project() {
    let lm = LinearModel::new(2, 2).unwrap();
    let w = lm.window(2);
    for e in w.elements(1000).unwrap() {
        assert_eq!(lm.project(&lm.lift(&e, 2), 2).unwrap(), e);
    }
}

#[test]
fn set_grammar_round_trips() {
    let lm = LinearModel::new(2, 2).unwrap();
    let iw = iwahori(&lm);
    assert_eq!(lm.parse_set(&iw.to_string()).unwrap(), iw);
    assert_eq!(lm.parse_set("0,1;0,0").unwrap(), iw);
    assert_eq!(lm.parse_set("level:2").unwrap(), lm.level_set(2));
    let h = m("1,1;0,1");
    let ad = LinearModel::adapted_to(2, &h.conj(&m("2,0;0,1"))).unwrap();
    let s = ad.reference();
    assert_eq!(ad.parse_set(&s.to_string()).unwrap(), s);
    assert!(matches!(lm.parse_set(&s.to_string()), Err(Error::BasisMismatch)));
    assert!(lm.parse_set("0,1,2;0,0,0;0,0,0").is_err());
}
