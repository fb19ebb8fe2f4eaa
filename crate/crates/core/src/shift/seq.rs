use std::fmt;

use crate::error::{Error, Result};

/// An eventually periodic bi-infinite sequence over `F_p`.
///
/// Coordinate `i` is `left[i mod |left|]` for `i < start`,
/// `core[i - start]` for `start ≤ i < start + |core|`, and
/// `right[i mod |right|]` above the core. Periods are anchored at absolute
/// index 0, which makes the canonical form unique: minimal period words,
/// the left region extended as far as possible, then the core kept minimal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EPSeq {
    p: u8,
    left: Vec<u8>,
    start: i64,
    core: Vec<u8>,
    right: Vec<u8>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn minimal_word(w: &[u8]) -> Vec<u8> {
    let n = w.len();
    for d in 1..=n {
        if n % d == 0 && (0..n).all(|j| w[j] == w[j % d]) {
            return w[..d].to_vec();
        }
    }
    w.to_vec()
}

fn at(w: &[u8], i: i64) -> u8 {
    w[i.rem_euclid(w.len() as i64) as usize]
}

impl EPSeq {
    pub fn new(p: u8, left: Vec<u8>, start: i64, core: Vec<u8>, right: Vec<u8>) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::Invalid("period words must be nonempty".into()));
        }
        if left.iter().chain(&core).chain(&right).any(|&c| c >= p) {
            return Err(Error::Invalid(format!("digit out of range for p={p}")));
        }
        Ok(EPSeq { p, left, start, core, right }.canonical())
    }

    pub fn zero(p: u8) -> Self {
        EPSeq { p, left: vec![0], start: 0, core: vec![], right: vec![0] }
    }

    /// Finitely supported sequence with value `c` at each listed index
    /// (repeated indices add up).
    pub fn from_support(p: u8, support: &[i64]) -> Self {
        let mut s = Self::zero(p);
        for &i in support {
            s = s.add(&Self::delta(p, i, 1));
        }
        s
    }

    pub fn delta(p: u8, i: i64, c: u8) -> Self {
        EPSeq { p, left: vec![0], start: i, core: vec![c % p], right: vec![0] }.canonical()
    }

    /// Sequence equal to `values` on `[lo, lo + len)` and zero elsewhere.
    pub fn from_window(p: u8, lo: i64, values: &[u8]) -> Self {
        EPSeq { p, left: vec![0], start: lo, core: values.to_vec(), right: vec![0] }.canonical()
    }

    pub fn p(&self) -> u8 {
        self.p
    }
    pub fn left(&self) -> &[u8] {
        &self.left
    }
    pub fn right(&self) -> &[u8] {
        &self.right
    }
    pub fn core(&self) -> &[u8] {
        &self.core
    }
    pub fn start(&self) -> i64 {
        self.start
    }
    pub fn end(&self) -> i64 {
        self.start + self.core.len() as i64
    }

    pub fn get(&self, i: i64) -> u8 {
        if i < self.start {
            at(&self.left, i)
        } else if i < self.end() {
            self.core[(i - self.start) as usize]
        } else {
            at(&self.right, i)
        }
    }

    fn canonical(self) -> Self {
        let left = minimal_word(&self.left);
        let right = minimal_word(&self.right);
        let span = lcm(left.len(), right.len()) as i64;
        let end = self.end();
        let first_mismatch = (self.start..end + span).find(|&i| self.get(i) != at(&left, i));
        let Some(new_start) = first_mismatch else {
            return EPSeq { p: self.p, left: left.clone(), start: 0, core: vec![], right: left };
        };
        let mut new_end = end.max(new_start);
        while new_end > new_start && self.get(new_end - 1) == at(&right, new_end - 1) {
            new_end -= 1;
        }
        let core = (new_start..new_end).map(|i| self.get(i)).collect();
        EPSeq { p: self.p, left, start: new_start, core, right }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u8, u8) -> u8) -> Self {
        let ll = lcm(self.left.len(), other.left.len());
        let rl = lcm(self.right.len(), other.right.len());
        let left = (0..ll as i64).map(|j| f(at(&self.left, j), at(&other.left, j))).collect();
        let right = (0..rl as i64).map(|j| f(at(&self.right, j), at(&other.right, j))).collect();
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        let core = (start..end).map(|i| f(self.get(i), other.get(i))).collect();
        EPSeq { p: self.p, left, start, core, right }.canonical()
    }

    pub fn add(&self, other: &Self) -> Self {
        let p = self.p;
        self.zip_with(other, |a, b| (a + b) % p)
    }

    pub fn neg(&self) -> Self {
        let p = self.p;
        self.zip_with(self, |a, _| (p - a) % p)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// `σ^m`, where `σ(b)_i = b_{i-1}`.
    pub fn shift(&self, m: i64) -> Self {
        let rot = |w: &[u8]| (0..w.len() as i64).map(|j| at(w, j - m)).collect::<Vec<_>>();
        EPSeq {
            p: self.p,
            left: rot(&self.left),
            start: self.start + m,
            core: self.core.clone(),
            right: rot(&self.right),
        }
        .canonical()
    }

    pub fn is_zero(&self) -> bool {
        self.left_tail_zero() && self.right_tail_zero() && self.core.is_empty()
    }

    pub fn left_tail_zero(&self) -> bool {
        self.left == [0]
    }

    pub fn right_tail_zero(&self) -> bool {
        self.right == [0]
    }

    pub fn is_finitely_supported(&self) -> bool {
        self.left_tail_zero() && self.right_tail_zero()
    }

    /// Nonzero coordinates with multiplicity, for finitely supported sequences.
    pub fn support(&self) -> Option<Vec<(i64, u8)>> {
        if !self.is_finitely_supported() {
            return None;
        }
        Some(
            (self.start..self.end())
                .filter_map(|i| {
                    let c = self.get(i);
                    (c != 0).then_some((i, c))
                })
                .collect(),
        )
    }

    /// The sequence with coordinates outside `[lo, hi]` set to zero.
    pub fn restrict(&self, lo: Option<i64>, hi: Option<i64>) -> Self {
        let mut a = self.start;
        let mut e = self.end();
        if let Some(l) = lo {
            a = a.min(l);
            e = e.max(l);
        }
        if let Some(h) = hi {
            a = a.min(h + 1);
            e = e.max(h + 1);
        }
        let inside = |i: i64| lo.is_none_or(|l| i >= l) && hi.is_none_or(|h| i <= h);
        let core = (a..e).map(|i| if inside(i) { self.get(i) } else { 0 }).collect();
        EPSeq {
            p: self.p,
            left: if lo.is_none() { self.left.clone() } else { vec![0] },
            start: a,
            core,
            right: if hi.is_none() { self.right.clone() } else { vec![0] },
        }
        .canonical()
    }

    /// Whether every coordinate in `[lo, hi]` vanishes.
    pub fn vanishes_on(&self, lo: Option<i64>, hi: Option<i64>) -> bool {
        self.restrict(lo, hi).is_zero()
    }

    /// Smallest `|i|` with a nonzero coordinate, `None` for the zero sequence.
    pub fn min_abs_support(&self) -> Option<u64> {
        if self.is_zero() {
            return None;
        }
        let bound = self.start.abs().max(self.end().abs())
            + self.left.len().max(self.right.len()) as i64;
        (0..=bound).find(|&d| self.get(d) != 0 || self.get(-d) != 0).map(|d| d as u64)
    }

    /// Values on `[-k, k]`.
    pub fn window(&self, k: u32) -> Vec<u8> {
        let k = k as i64;
        (-k..=k).map(|i| self.get(i)).collect()
    }

    /// Partial sums `a_i = Σ_{m ≤ i} b_m`; requires a zero left tail.
    pub fn partial_sums(&self) -> Result<Self> {
        if !self.left_tail_zero() {
            return Err(Error::Invalid("partial sums need a zero left tail".into()));
        }
        let p = self.p;
        let mut acc = 0u8;
        let core: Vec<u8> = self
            .core
            .iter()
            .map(|&c| {
                acc = (acc + c) % p;
                acc
            })
            .collect();
        // Over one full block of p periods the running sum returns to its
        // starting offset, so the right tail has period p·|right| (phase
        // anchored at absolute indices).
        let block = self.right.len() * p as usize;
        let end = self.end();
        let tail: Vec<u8> = (end..end + block as i64)
            .map(|i| {
                acc = (acc + at(&self.right, i)) % p;
                acc
            })
            .collect();
        let right = (0..block as i64)
            .map(|j| tail[(j - end).rem_euclid(block as i64) as usize])
            .collect();
        Ok(EPSeq { p, left: vec![0], start: self.start, core, right }.canonical())
    }

    /// Text form `L|core@offset|R` with one digit per coordinate.
    pub fn to_ep_string(&self) -> String {
        let d = |w: &[u8]| w.iter().map(|c| char::from(b'0' + c)).collect::<String>();
        format!("{}|{}@{}|{}", d(&self.left), d(&self.core), self.start, d(&self.right))
    }

    pub fn parse_ep(p: u8, s: &str) -> Result<Self> {
        let bad = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.to_string() };
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 3 {
            return Err(bad(0, "expected L|core@offset|R"));
        }
        let digits = |w: &str, pos: usize| -> Result<Vec<u8>> {
            w.chars()
                .enumerate()
                .map(|(j, c)| {
                    c.to_digit(10)
                        .filter(|&v| v < p as u32)
                        .map(|v| v as u8)
                        .ok_or_else(|| bad(pos + j, "digit out of range"))
                })
                .collect()
        };
        let left = digits(parts[0], 0)?;
        let core_pos = parts[0].len() + 1;
        let (core_digits, offset) =
            parts[1].split_once('@').ok_or_else(|| bad(core_pos, "missing '@'"))?;
        let core = digits(core_digits, core_pos)?;
        let start: i64 = offset
            .parse()
            .map_err(|_| bad(core_pos + core_digits.len() + 1, "bad offset"))?;
        let right = digits(parts[2], core_pos + parts[1].len() + 1)?;
        EPSeq::new(p, left, start, core, right)
            .map_err(|e| bad(0, &e.to_string()))
    }
}

impl fmt::Display for EPSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ep_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_absorbs_core_into_tails() {
        let s = EPSeq::new(2, vec![1, 1], 3, vec![1, 0, 1, 0], vec![0, 0]).unwrap();
        assert_eq!(s.left(), &[1]);
        assert_eq!(s.right(), &[0]);
        assert_eq!(s.start(), 4);
        assert_eq!(s.core(), &[0, 1]);
        assert_eq!(s.get(2), 1);
        assert_eq!(s.get(4), 0);
        assert_eq!(s.get(5), 1);
        assert_eq!(s.get(6), 0);
    }

    #[test]
    fn periodic_sequences_collapse() {
        let s = EPSeq::new(2, vec![0, 1], 5, vec![0, 1], vec![1, 0, 1, 0]).unwrap();
        // 0101.. anchored at 0 on the left; right word 1010 read at absolute
        // index i gives 1 at even i, so they differ.
        assert!(!s.is_zero());
        let t = EPSeq::new(3, vec![1, 2], -4, vec![1, 2], vec![1, 2]).unwrap();
        assert_eq!(t.core(), &[] as &[u8]);
        assert_eq!(t.start(), 0);
    }

    #[test]
    fn delta_shift_and_sums() {
        let d = EPSeq::delta(2, 0, 1);
        assert_eq!(d.shift(1), EPSeq::delta(2, 1, 1));
        assert!(d.add(&d).is_zero());
        let a = d.partial_sums().unwrap();
        assert_eq!(a.right(), &[1]);
        assert!(a.left_tail_zero());
        assert_eq!(a.get(-1), 0);
        assert_eq!(a.get(0), 1);
    }

    #[test]
    fn restrict_and_vanish() {
        let s = EPSeq::new(2, vec![1], 0, vec![], vec![0, 1]).unwrap();
        let r = s.restrict(Some(-2), Some(3));
        for i in -5..8 {
            let want = if (-2..=3).contains(&i) { s.get(i) } else { 0 };
            assert_eq!(r.get(i), want, "i={i}");
        }
        assert!(EPSeq::delta(2, 5, 1).vanishes_on(None, Some(4)));
        assert!(!EPSeq::delta(2, 5, 1).vanishes_on(Some(5), None));
    }

    #[test]
    fn text_round_trip() {
        let s = EPSeq::new(3, vec![2], -1, vec![0, 1], vec![1, 2]).unwrap();
        let t = EPSeq::parse_ep(3, &s.to_ep_string()).unwrap();
        assert_eq!(s, t);
        assert!(EPSeq::parse_ep(2, "0|2@0|0").is_err());
    }
}
