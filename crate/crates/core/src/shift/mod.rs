//! The lamplighter-type group `G = F_p^Z ⋊ Z`.
//!
//! The shift acts by `σ(b)_i = b_{i-1}`. Elements carry eventually periodic
//! lamp configurations, a dense subgroup of the compact lamp group on which
//! all arithmetic is exact. The lamp group `L` is the reference compact open
//! subgroup and the filtration is `W(k) = {(a, 0) : a_i = 0 for |i| ≤ k}`.

mod fp;
mod seq;
mod set;

use std::fmt;

pub use seq::EPSeq;
pub use set::LampSet;

use crate::error::{Error, Result};
use crate::kernel::{subgroup_closure, LampWindow, Level, SubgroupImage, DEFAULT_CAP};
use crate::model::{Image, Model};

/// `(lamp, m)` with multiplication `(a, m)(b, n) = (a + σ^m b, m + n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShiftElement {
    pub lamp: EPSeq,
    pub shift: i64,
}

impl ShiftElement {
    pub fn new(lamp: EPSeq, shift: i64) -> Self {
        ShiftElement { lamp, shift }
    }

    pub fn identity(p: u8) -> Self {
        ShiftElement { lamp: EPSeq::zero(p), shift: 0 }
    }

    pub fn translation(p: u8, m: i64) -> Self {
        ShiftElement { lamp: EPSeq::zero(p), shift: m }
    }

    pub fn lamp_only(lamp: EPSeq) -> Self {
        ShiftElement { lamp, shift: 0 }
    }

    pub fn p(&self) -> u8 {
        self.lamp.p()
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.p() != other.p() {
            return Err(Error::PrimeMismatch(self.p() as u64, other.p() as u64));
        }
        Ok(self.mul(other))
    }

    pub fn mul(&self, other: &Self) -> Self {
        ShiftElement {
            lamp: self.lamp.add(&other.lamp.shift(self.shift)),
            shift: self.shift + other.shift,
        }
    }

    pub fn inv(&self) -> Self {
        ShiftElement { lamp: self.lamp.shift(-self.shift).neg(), shift: -self.shift }
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0 && self.lamp.is_zero()
    }

    /// Parses products of `shift:<m>`, `lamp:<i1,i2,...>` and
    /// `lamp-ep:<L>|<core@offset>|<R>` factors joined by `*`.
    pub fn parse(p: u8, s: &str) -> Result<Self> {
        let mut acc = ShiftElement::identity(p);
        let mut pos = 0;
        for factor in s.split('*') {
            let f = factor.trim();
            let lead = pos + (factor.len() - factor.trim_start().len());
            let bad = |msg: &str| Error::Parse { pos: lead, msg: msg.to_string() };
            let x = if let Some(rest) = f.strip_prefix("shift:") {
                let m = rest.trim().parse::<i64>().map_err(|_| bad("bad shift amount"))?;
                ShiftElement::translation(p, m)
            } else if let Some(rest) = f.strip_prefix("lamp-ep:") {
                let lamp = EPSeq::parse_ep(p, rest).map_err(|e| match e {
                    Error::Parse { pos, msg } => Error::Parse { pos: lead + 8 + pos, msg },
                    other => other,
                })?;
                ShiftElement::lamp_only(lamp)
            } else if let Some(rest) = f.strip_prefix("lamp:") {
                let idx: Vec<i64> = if rest.trim().is_empty() {
                    vec![]
                } else {
                    rest.split(',')
                        .map(|t| t.trim().parse::<i64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("bad lamp index"))?
                };
                ShiftElement::lamp_only(EPSeq::from_support(p, &idx))
            } else {
                return Err(bad("expected shift:, lamp: or lamp-ep:"));
            };
            acc = acc.mul(&x);
            pos += factor.len() + 1;
        }
        Ok(acc)
    }
}

impl fmt::Display for ShiftElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lamp.is_zero() {
            return write!(f, "shift:{}", self.shift);
        }
        match self.lamp.support() {
            Some(sup) => {
                let idx: Vec<String> = sup
                    .iter()
                    .flat_map(|&(i, c)| std::iter::repeat_n(i.to_string(), c as usize))
                    .collect();
                write!(f, "lamp:{}", idx.join(","))?;
            }
            None => write!(f, "lamp-ep:{}", self.lamp)?,
        }
        if self.shift != 0 {
            write!(f, "*shift:{}", self.shift)?;
        }
        Ok(())
    }
}

/// Exact decision of `x ∈ con(g)`.
///
/// Conjugating a lamp by `g = (a, m)` applies `σ^m`, so for `m > 0` the lamp
/// must die out towards `-∞`, for `m < 0` towards `+∞`, and for `m = 0`
/// only the identity contracts. Elements with nonzero shift never contract.
pub fn con_oracle_shift(g: &ShiftElement, x: &ShiftElement) -> bool {
    if x.shift != 0 {
        return false;
    }
    match g.shift {
        0 => x.lamp.is_zero(),
        m if m > 0 => x.lamp.left_tail_zero(),
        _ => x.lamp.right_tail_zero(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftModel {
    pub p: u8,
    pub cap: usize,
}

impl ShiftModel {
    pub fn new(p: u8) -> Result<Self> {
        if ![2, 3, 5, 7].contains(&p) {
            return Err(Error::UnsupportedPrime(p as u64));
        }
        Ok(ShiftModel { p, cap: DEFAULT_CAP })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn shift(&self) -> ShiftElement {
        ShiftElement::translation(self.p, 1)
    }

    pub fn lamp(&self, support: &[i64]) -> ShiftElement {
        ShiftElement::lamp_only(EPSeq::from_support(self.p, support))
    }

    pub fn parse(&self, s: &str) -> Result<ShiftElement> {
        ShiftElement::parse(self.p, s)
    }

    /// Window image of `nub(g)`: everything when `g` moves the lamps,
    /// trivial otherwise.
    pub fn nub_oracle(&self, g: &ShiftElement, k: u32) -> Result<Image<Self>> {
        let w = self.window(k);
        if g.shift == 0 {
            return Ok(SubgroupImage::trivial(&w));
        }
        self.image(&LampSet::full(self.p), k)
    }

    /// Symbolic parts for an interval subgroup; `None` when the translates
    /// of the interval leave gaps or the subgroup is not in interval form.
    pub fn interval_u_parts(&self, u: &LampSet, m: i64) -> Option<(LampSet, LampSet, LampSet)> {
        let p = self.p;
        if m == 0 || u.is_full() {
            return Some((u.clone(), u.clone(), u.clone()));
        }
        let (lo, hi) = u.interval()?;
        if hi - lo + 1 < m.abs() {
            return None;
        }
        let zero = LampSet::half_lines(p, Some(0), Some(0));
        if m > 0 {
            Some((LampSet::half_lines(p, None, Some(lo)), LampSet::half_lines(p, Some(hi), None), zero))
        } else {
            Some((LampSet::half_lines(p, Some(hi), None), LampSet::half_lines(p, None, Some(lo)), zero))
        }
    }
}

impl Model for ShiftModel {
    type Elem = ShiftElement;
    type Set = LampSet;
    type Window = LampWindow;

    fn name(&self) -> &'static str {
        "shift"
    }
    fn cap(&self) -> usize {
        self.cap
    }
    fn identity(&self) -> ShiftElement {
        ShiftElement::identity(self.p)
    }
    fn mul(&self, a: &ShiftElement, b: &ShiftElement) -> ShiftElement {
        a.mul(b)
    }
    fn inv(&self, a: &ShiftElement) -> ShiftElement {
        a.inv()
    }
    fn pow(&self, a: &ShiftElement, e: i64) -> ShiftElement {
        // Telescoping sum of shifted lamps; avoids repeated canonicalization.
        let (base, e) = if e < 0 { (a.inv(), -e) } else { (a.clone(), e) };
        let mut lamp = EPSeq::zero(self.p);
        for j in 0..e {
            lamp = lamp.add(&base.lamp.shift(j * base.shift));
        }
        ShiftElement { lamp, shift: base.shift * e }
    }
    fn is_identity(&self, x: &ShiftElement) -> bool {
        x.is_identity()
    }

    fn proximity_level(&self, x: &ShiftElement) -> Level {
        if x.shift != 0 {
            return Level::Outside;
        }
        match x.lamp.min_abs_support() {
            None => Level::Infinite,
            Some(0) => Level::Outside,
            Some(d) => Level::Finite(d as u32 - 1),
        }
    }

    fn window(&self, k: u32) -> LampWindow {
        LampWindow::new(self.p, k)
    }

    fn project(&self, x: &ShiftElement, k: u32) -> Result<Vec<u8>> {
        if x.shift != 0 {
            return Err(Error::OutsideReference(x.to_string()));
        }
        Ok(x.lamp.window(k))
    }

    fn lift(&self, w: &Vec<u8>, k: u32) -> ShiftElement {
        ShiftElement::lamp_only(EPSeq::from_window(self.p, -(k as i64), w))
    }

    fn contains(&self, s: &LampSet, x: &ShiftElement) -> bool {
        x.shift == 0 && s.contains(&x.lamp)
    }

    fn image(&self, s: &LampSet, k: u32) -> Result<Image<Self>> {
        let w = self.window(k);
        let span = s.window_span(k);
        if span.len() as f64 * (self.p as f64).log2() > (self.cap as f64).log2() {
            return Err(Error::ResolutionTooFine { cap: self.cap });
        }
        subgroup_closure(&w, &span, self.cap)
    }

    fn conjugate_set(&self, s: &LampSet, g: &ShiftElement, j: i64) -> Result<LampSet> {
        Ok(s.shifted(g.shift * j))
    }

    fn intersect(&self, a: &LampSet, b: &LampSet) -> Result<LampSet> {
        Ok(a.intersect(b))
    }

    fn describe_set(&self, s: &LampSet) -> String {
        s.to_string()
    }
    fn describe_elem(&self, x: &ShiftElement) -> String {
        x.to_string()
    }

    fn reference(&self) -> LampSet {
        LampSet::full(self.p)
    }

    fn level_set(&self, m: u32) -> LampSet {
        LampSet::level(self.p, m)
    }

    fn tidy_seeds(&self, k: u32) -> Vec<LampSet> {
        std::iter::once(LampSet::full(self.p))
            .chain((0..=k).map(|m| LampSet::level(self.p, m)))
            .collect()
    }

    fn symbolic_parts(
        &self,
        u: &LampSet,
        g: &ShiftElement,
    ) -> Result<Option<(LampSet, LampSet, LampSet)>> {
        Ok(self.interval_u_parts(u, g.shift))
    }

    fn split(&self, u: &LampSet, g: &ShiftElement, x: &ShiftElement) -> Result<(ShiftElement, ShiftElement)> {
        if !self.contains(u, x) {
            return Err(Error::Hypothesis(format!("{x} is not in {u}")));
        }
        let m = g.shift;
        if m == 0 || u.is_full() {
            return Ok((x.clone(), self.identity()));
        }
        let Some((lo, hi)) = u.interval() else {
            return Err(Error::UnsupportedClass(format!("no lamp split for {u}")));
        };
        if hi - lo + 1 < m.abs() {
            return Err(Error::UnsupportedClass(format!("{u} has gaps under shift {m}")));
        }
        let low = ShiftElement::lamp_only(x.lamp.restrict(None, Some(lo - 1)));
        let high = ShiftElement::lamp_only(x.lamp.restrict(Some(hi + 1), None));
        // U_- keeps the coordinates the shift carries towards the window.
        Ok(if m > 0 { (high, low) } else { (low, high) })
    }

    fn split_off_zero(
        &self,
        u: &LampSet,
        g: &ShiftElement,
        t: &ShiftElement,
    ) -> Option<(ShiftElement, ShiftElement)> {
        let (_, _, zero) = self.interval_u_parts(u, g.shift)?;
        if zero.is_trivial() {
            Some((t.clone(), self.identity()))
        } else {
            // U_0 = U_+ here and con(g⁻¹) ∩ U_+ may be taken trivial.
            Some((self.identity(), t.clone()))
        }
    }

    fn con_oracle(&self, g: &ShiftElement, x: &ShiftElement) -> Option<bool> {
        Some(con_oracle_shift(g, x))
    }

    fn par_oracle(&self, _g: &ShiftElement, _x: &ShiftElement) -> Option<bool> {
        // Conjugation orbits stay in a single coset of the compact lamp group.
        Some(true)
    }

    fn eventually_in_level(&self, g: &ShiftElement, x: &ShiftElement, m: u32) -> Option<bool> {
        if x.shift != 0 {
            return Some(false);
        }
        Some(match g.shift {
            0 => self.proximity_level(x).at_least(m),
            s if s > 0 => x.lamp.left_tail_zero(),
            _ => x.lamp.right_tail_zero(),
        })
    }

    fn con_closure_image(&self, g: &ShiftElement, k: u32) -> Result<Option<Image<Self>>> {
        self.nub_oracle(g, k).map(Some)
    }

    fn con_element(&self, g: &ShiftElement, coeffs: &[i64]) -> Option<ShiftElement> {
        if g.shift == 0 {
            return Some(self.identity());
        }
        // Finitely supported lamps contract under any nonzero translation.
        let p = self.p as i64;
        let vals: Vec<u8> = coeffs.iter().map(|c| c.rem_euclid(p) as u8).collect();
        let lo = -(vals.len() as i64) / 2;
        Some(ShiftElement::lamp_only(EPSeq::from_window(self.p, lo, &vals)))
    }

    fn minusminus_certificate(&self, u: &LampSet, g: &ShiftElement) -> Option<bool> {
        (g.shift == 0 || u.is_full()).then_some(true)
    }
}
