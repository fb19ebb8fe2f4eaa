//! Finite-precision group machinery shared by both models.
//!
//! Every model exposes a filtration `B_0 ⊇ B_1 ⊇ …` of compact open
//! subgroups with trivial intersection. The quotient of the reference
//! compact open by `B_k` is a finite *window group*; subgroups of the
//! ambient group are compared through their images in these windows.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::{self, Debug};
use std::hash::Hash;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Default bound on the number of elements any enumeration may materialize.
pub const DEFAULT_CAP: usize = 1 << 16;

/// Position of an element in the model filtration: the largest `k` with
/// `x ∈ B_k`.
///
/// `Outside` means the element is not even in `B_0`; `Infinite` is reserved
/// for the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Outside,
    Finite(u32),
    Infinite,
}

impl Level {
    pub fn at_least(self, k: u32) -> bool {
        self >= Level::Finite(k)
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Level::Finite(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Outside => write!(f, "outside"),
            Level::Finite(k) => write!(f, "{k}"),
            Level::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Level::Finite(k) => s.serialize_u32(*k),
            Level::Outside => s.serialize_str("outside"),
            Level::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Three-valued outcome of a semi-decision.
///
/// `TrueAtResolution` is a positive answer certified only up to the
/// resolution and horizon that were checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tri {
    True,
    TrueAtResolution,
    False,
    Inconclusive,
}

impl Tri {
    pub fn exact(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }

    pub fn is_true(self) -> bool {
        matches!(self, Tri::True | Tri::TrueAtResolution)
    }
}

/// A finite quotient group with canonical element representatives.
pub trait WindowGroup {
    type Elem: Clone + Ord + Hash + Debug;

    /// Stable description used to detect mixing of windows.
    fn describe(&self) -> String;
    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
    fn order(&self) -> u128;
    fn encode(&self, a: &Self::Elem) -> Vec<u8>;
    /// All elements, provided the order is at most `cap`.
    fn elements(&self, cap: usize) -> Result<Vec<Self::Elem>>;
}

/// A subgroup of a window group, stored as a sorted set of canonical
/// representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupImage<E: Ord> {
    pub window: String,
    pub elements: BTreeSet<E>,
}

impl<E: Clone + Ord + Hash + Debug> SubgroupImage<E> {
    pub fn trivial<W: WindowGroup<Elem = E>>(w: &W) -> Self {
        SubgroupImage { window: w.describe(), elements: BTreeSet::from([w.identity()]) }
    }

    /// Wraps a set that the caller knows to be a subgroup.
    pub fn from_set<W: WindowGroup<Elem = E>>(w: &W, elements: BTreeSet<E>) -> Self {
        SubgroupImage { window: w.describe(), elements }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, x: &E) -> bool {
        self.elements.contains(x)
    }

    pub fn is_subgroup_of(&self, other: &Self) -> bool {
        self.window == other.window && self.elements.is_subset(&other.elements)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        same_window(&self.window, &other.window)?;
        Ok(SubgroupImage {
            window: self.window.clone(),
            elements: self.elements.intersection(&other.elements).cloned().collect(),
        })
    }

    /// Image under `x ↦ c x c⁻¹`.
    pub fn conjugate<W: WindowGroup<Elem = E>>(&self, w: &W, c: &E) -> Self {
        let ci = w.inv(c);
        let elements = self.elements.iter().map(|x| w.mul(&w.mul(c, x), &ci)).collect();
        SubgroupImage { window: self.window.clone(), elements }
    }

    /// Checks the group axioms on the stored set.
    pub fn is_closed<W: WindowGroup<Elem = E>>(&self, w: &W) -> bool {
        if !self.elements.contains(&w.identity()) {
            return false;
        }
        self.elements.iter().all(|a| {
            self.elements.contains(&w.inv(a))
                && self.elements.iter().all(|b| self.elements.contains(&w.mul(a, b)))
        })
    }
}

fn same_window(a: &str, b: &str) -> Result<()> {
    if a != b {
        return Err(Error::WindowMismatch { left: a.to_string(), right: b.to_string() });
    }
    Ok(())
}

/// Smallest subgroup of the window containing `gens`.
///
/// Breadth-first saturation under right multiplication by generators; in a
/// finite group this already yields closure under inverses.
pub fn subgroup_closure<W: WindowGroup>(
    w: &W,
    gens: &[W::Elem],
    cap: usize,
) -> Result<SubgroupImage<W::Elem>> {
    let id = w.identity();
    let gens: Vec<W::Elem> = gens.iter().filter(|g| **g != id).cloned().collect();
    let mut seen: HashSet<W::Elem> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = w.mul(&x, g);
            if !seen.contains(&y) {
                if seen.len() >= cap {
                    return Err(Error::ResolutionTooFine { cap });
                }
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(SubgroupImage { window: w.describe(), elements: seen.into_iter().collect() })
}

/// Outcome of [`product_set_equals`]; the witness is an element of the
/// target that the product set misses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCheck<E> {
    pub equal: bool,
    pub witness: Option<E>,
}

/// Decides whether `{ab : a ∈ A, b ∈ B} = T`.
///
/// For subgroups `A, B ≤ T` the product set has `|A||B|/|A∩B|` elements,
/// so equality reduces to a count; the witness search only runs on failure.
pub fn product_set_equals<W: WindowGroup>(
    w: &W,
    a: &SubgroupImage<W::Elem>,
    b: &SubgroupImage<W::Elem>,
    t: &SubgroupImage<W::Elem>,
) -> Result<ProductCheck<W::Elem>> {
    same_window(&a.window, &t.window)?;
    same_window(&b.window, &t.window)?;
    let inside = a.elements.is_subset(&t.elements) && b.elements.is_subset(&t.elements);
    if inside {
        let meet = a.elements.intersection(&b.elements).count();
        if a.order() * b.order() == t.order() * meet {
            return Ok(ProductCheck { equal: true, witness: None });
        }
    }
    let a_inv: Vec<W::Elem> = a.elements.iter().map(|x| w.inv(x)).collect();
    let witness = t
        .elements
        .iter()
        .find(|x| !a_inv.iter().any(|ai| b.contains(&w.mul(ai, x))))
        .cloned();
    Ok(ProductCheck { equal: false, witness })
}

/// Brute-force product set; used as an oracle in tests.
pub fn product_set<W: WindowGroup>(
    w: &W,
    a: &SubgroupImage<W::Elem>,
    b: &SubgroupImage<W::Elem>,
) -> BTreeSet<W::Elem> {
    a.elements.iter().flat_map(|x| b.elements.iter().map(move |y| w.mul(x, y))).collect()
}

/// `[U : V]` for `V ≤ U`.
pub fn index<E: Clone + Ord + Hash + Debug>(
    u: &SubgroupImage<E>,
    v: &SubgroupImage<E>,
) -> Result<u64> {
    same_window(&u.window, &v.window)?;
    if let Some(x) = v.elements.iter().find(|x| !u.contains(x)) {
        return Err(Error::NotContained { witness: format!("{x:?}") });
    }
    Ok((u.order() / v.order()) as u64)
}

/// The additive window `F_p^{[-k,k]}` of the lamp group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LampWindow {
    pub p: u8,
    pub k: u32,
}

impl LampWindow {
    pub fn new(p: u8, k: u32) -> Self {
        LampWindow { p, k }
    }

    pub fn width(&self) -> usize {
        2 * self.k as usize + 1
    }

    /// Unit vector at coordinate `i ∈ [-k, k]`.
    pub fn delta(&self, i: i64) -> Vec<u8> {
        let mut v = vec![0; self.width()];
        v[(i + self.k as i64) as usize] = 1;
        v
    }
}

impl WindowGroup for LampWindow {
    type Elem = Vec<u8>;

    fn describe(&self) -> String {
        format!("lamp(p={},k={})", self.p, self.k)
    }
    fn identity(&self) -> Vec<u8> {
        vec![0; self.width()]
    }
    fn mul(&self, a: &Vec<u8>, b: &Vec<u8>) -> Vec<u8> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }
    fn inv(&self, a: &Vec<u8>) -> Vec<u8> {
        a.iter().map(|x| (self.p - x) % self.p).collect()
    }
    fn order(&self) -> u128 {
        (self.p as u128).pow(self.width() as u32)
    }
    fn encode(&self, a: &Vec<u8>) -> Vec<u8> {
        a.clone()
    }
    fn elements(&self, cap: usize) -> Result<Vec<Vec<u8>>> {
        if self.order() > cap as u128 {
            return Err(Error::ResolutionTooFine { cap });
        }
        let mut out = vec![self.identity()];
        for i in 0..self.width() {
            let mut next = Vec::with_capacity(out.len() * self.p as usize);
            for v in &out {
                for c in 0..self.p {
                    let mut w = v.clone();
                    w[i] = c;
                    next.push(w);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

/// `GL_n(Z/p^k)`, elements stored row-major with entries in `[0, p^k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatWindow {
    pub p: u64,
    pub n: usize,
    pub k: u32,
}

impl MatWindow {
    pub fn new(p: u64, n: usize, k: u32) -> Self {
        MatWindow { p, n, k }
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.k)
    }

    pub fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.modulus() as i128) as u64
    }

    pub fn is_unit(&self, x: u64) -> bool {
        self.k == 0 || x % self.p != 0
    }

    pub fn det(&self, a: &[u64]) -> u64 {
        let m = self.modulus() as i128;
        det_mod(a, self.n, m) as u64
    }
}

fn det_mod(a: &[u64], n: usize, m: i128) -> i128 {
    if m == 1 {
        return 0;
    }
    if n == 1 {
        return a[0] as i128 % m;
    }
    // Laplace expansion along the first row; n is tiny.
    let mut acc = 0i128;
    for c in 0..n {
        let minor: Vec<u64> = (1..n)
            .flat_map(|r| (0..n).filter(move |&j| j != c).map(move |j| (r, j)))
            .map(|(r, j)| a[r * n + j])
            .collect();
        let term = (a[c] as i128 * det_mod(&minor, n - 1, m)) % m;
        acc = if c % 2 == 0 { acc + term } else { acc - term };
    }
    acc.rem_euclid(m)
}

/// Inverse of a unit modulo `m`.
pub fn inv_mod(a: i128, m: i128) -> Option<i128> {
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 && m != 1 {
        return None;
    }
    Some(s0.rem_euclid(m))
}

impl WindowGroup for MatWindow {
    type Elem = Vec<u64>;

    fn describe(&self) -> String {
        format!("gl(n={},p={},k={})", self.n, self.p, self.k)
    }
    fn identity(&self) -> Vec<u64> {
        let m = self.modulus();
        (0..self.n * self.n).map(|i| if i % (self.n + 1) == 0 { 1 % m } else { 0 }).collect()
    }
    fn mul(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        let n = self.n;
        let m = self.modulus() as u128;
        let mut out = vec![0u64; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut s = 0u128;
                for j in 0..n {
                    s = (s + a[r * n + j] as u128 * b[j * n + c] as u128) % m;
                }
                out[r * n + c] = s as u64;
            }
        }
        out
    }
    fn inv(&self, a: &Vec<u64>) -> Vec<u64> {
        let n = self.n;
        let m = self.modulus() as i128;
        if m == 1 {
            return a.clone();
        }
        // Gauss-Jordan over Z/p^k choosing a unit pivot in each column.
        let mut left: Vec<i128> = a.iter().map(|&x| x as i128).collect();
        let mut right: Vec<i128> = self.identity().iter().map(|&x| x as i128).collect();
        for c in 0..n {
            let piv = (c..n)
                .find(|&r| left[r * n + c] % self.p as i128 != 0)
                .expect("window element is invertible");
            for j in 0..n {
                left.swap(c * n + j, piv * n + j);
                right.swap(c * n + j, piv * n + j);
            }
            let pinv = inv_mod(left[c * n + c], m).expect("unit pivot");
            for j in 0..n {
                left[c * n + j] = (left[c * n + j] * pinv).rem_euclid(m);
                right[c * n + j] = (right[c * n + j] * pinv).rem_euclid(m);
            }
            for r in 0..n {
                if r != c && left[r * n + c] != 0 {
                    let f = left[r * n + c];
                    for j in 0..n {
                        left[r * n + j] = (left[r * n + j] - f * left[c * n + j]).rem_euclid(m);
                        right[r * n + j] = (right[r * n + j] - f * right[c * n + j]).rem_euclid(m);
                    }
                }
            }
        }
        right.into_iter().map(|x| x as u64).collect()
    }
    fn order(&self) -> u128 {
        // |GL_n(F_p)| · p^{n²(k-1)}
        if self.k == 0 {
            return 1;
        }
        let p = self.p as u128;
        let n = self.n as u32;
        let mut base = 1u128;
        for i in 0..n {
            base *= p.pow(n) - p.pow(i);
        }
        base * p.pow(n * n * (self.k - 1))
    }
    fn encode(&self, a: &Vec<u64>) -> Vec<u8> {
        a.iter().flat_map(|x| x.to_be_bytes()).collect()
    }
    fn elements(&self, cap: usize) -> Result<Vec<Vec<u64>>> {
        if self.order() > cap as u128 {
            return Err(Error::ResolutionTooFine { cap });
        }
        let m = self.modulus();
        let cells = self.n * self.n;
        let total = (m as u128).pow(cells as u32);
        let mut out = Vec::new();
        let mut cur = vec![0u64; cells];
        for _ in 0..total {
            if self.is_unit(self.det(&cur)) {
                out.push(cur.clone());
            }
            for c in cur.iter_mut().rev() {
                *c += 1;
                if *c < m {
                    break;
                }
                *c = 0;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2(bits: &[u8]) -> Vec<u8> {
        bits.to_vec()
    }

    #[test]
    fn closure_of_single_vector_has_order_two() {
        // F_2^3 is the lamp window of radius 1.
        let w = LampWindow::new(2, 1);
        let s = subgroup_closure(&w, &[f2(&[1, 0, 0])], DEFAULT_CAP).unwrap();
        assert_eq!(s.elements, BTreeSet::from([f2(&[0, 0, 0]), f2(&[1, 0, 0])]));
        let e = subgroup_closure(&w, &[], DEFAULT_CAP).unwrap();
        assert_eq!(e.order(), 1);
    }

    #[test]
    fn closure_reports_cap() {
        let w = LampWindow::new(2, 3);
        let gens: Vec<_> = (-3..=3).map(|i| w.delta(i)).collect();
        assert_eq!(subgroup_closure(&w, &gens, 100), Err(Error::ResolutionTooFine { cap: 100 }));
    }

    #[test]
    fn index_of_order_two_subgroup_in_f2_cubed() {
        let w = LampWindow::new(2, 1);
        let all = SubgroupImage::from_set(&w, w.elements(64).unwrap().into_iter().collect());
        let v = subgroup_closure(&w, &[w.delta(-1)], DEFAULT_CAP).unwrap();
        assert_eq!(index(&all, &all).unwrap(), 1);
        assert_eq!(index(&all, &v).unwrap(), 4);
        assert!(matches!(index(&v, &all), Err(Error::NotContained { .. })));
    }

    #[test]
    fn gl2_mod4_order_and_inverse() {
        let w = MatWindow::new(2, 2, 2);
        let els = w.elements(DEFAULT_CAP).unwrap();
        assert_eq!(els.len() as u128, w.order());
        assert_eq!(els.len(), 96);
        for x in &els {
            assert_eq!(w.mul(x, &w.inv(x)), w.identity());
        }
    }

    #[test]
    fn trivial_factors_do_not_cover() {
        let w = LampWindow::new(2, 1);
        let t = SubgroupImage::from_set(&w, w.elements(64).unwrap().into_iter().collect());
        let one = SubgroupImage::trivial(&w);
        let r = product_set_equals(&w, &one, &one, &t).unwrap();
        assert!(!r.equal);
        assert!(r.witness.is_some_and(|x| x != w.identity()));
        assert!(product_set_equals(&w, &t, &t, &t).unwrap().equal);
    }

    #[test]
    fn level_ordering() {
        assert!(Level::Infinite > Level::Finite(1_000_000));
        assert!(Level::Outside < Level::Finite(0));
        assert!(Level::Infinite.at_least(7));
    }
}
