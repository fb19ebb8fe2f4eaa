use std::fmt;

use super::fp;
use crate::error::{Error, Result};
use super::seq::EPSeq;

/// A compact subgroup of the lamp group `F_p^Z`, cut out by finitely many
/// linear conditions on a window plus optional half-line vanishing.
///
/// Without half-lines this is a compact open subgroup containing `W(radius)`
/// (the subspace form); with them it describes the closed parts `U_±`, `U_0`.
/// The representation is kept canonical so structural equality is set
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LampSet {
    p: u8,
    radius: u32,
    /// RREF rows over the coordinates `[-radius, radius]`.
    constraints: Vec<Vec<u8>>,
    /// `a_i = 0` for every `i ≤ below`.
    below: Option<i64>,
    /// `a_i = 0` for every `i ≥ above`.
    above: Option<i64>,
}

fn embed(row: &[u8], from: u32, to: u32, offset: i64) -> Vec<u8> {
    // Coordinate i of the old window becomes coordinate i + offset.
    let mut out = vec![0u8; 2 * to as usize + 1];
    for (j, &c) in row.iter().enumerate() {
        if c != 0 {
            let i = j as i64 - from as i64 + offset;
            out[(i + to as i64) as usize] = c;
        }
    }
    out
}

impl LampSet {
    /// The whole lamp group.
    pub fn full(p: u8) -> Self {
        LampSet { p, radius: 0, constraints: vec![], below: None, above: None }
    }

    /// `{a : a_i = 0 for i ∈ [lo, hi]}`.
    pub fn vanish_interval(p: u8, lo: i64, hi: i64) -> Self {
        let radius = lo.abs().max(hi.abs()) as u32;
        let rows = (lo..=hi)
            .map(|i| {
                let mut r = vec![0u8; 2 * radius as usize + 1];
                r[(i + radius as i64) as usize] = 1;
                r
            })
            .collect();
        Self::raw(p, radius, rows, None, None)
    }

    /// `W(k)`.
    pub fn level(p: u8, k: u32) -> Self {
        Self::vanish_interval(p, -(k as i64), k as i64)
    }

    pub fn half_lines(p: u8, below: Option<i64>, above: Option<i64>) -> Self {
        Self::raw(p, 0, vec![], below, above)
    }

    /// Subspace given by constraint rows on `[-radius, radius]`.
    pub fn from_constraints(p: u8, radius: u32, rows: Vec<Vec<u8>>) -> Self {
        Self::raw(p, radius, rows, None, None)
    }

    fn raw(p: u8, radius: u32, rows: Vec<Vec<u8>>, below: Option<i64>, above: Option<i64>) -> Self {
        LampSet { p, radius, constraints: rows, below, above }.canonical()
    }

    fn forced_zero(&self, i: i64) -> bool {
        self.below.is_some_and(|b| i <= b) || self.above.is_some_and(|a| i >= a)
    }

    fn canonical(mut self) -> Self {
        let r = self.radius as i64;
        if self.below.is_some_and(|b| self.above.is_some_and(|a| b + 1 >= a)) {
            // Everything vanishes.
            return LampSet { p: self.p, radius: 0, constraints: vec![], below: Some(0), above: Some(0) };
        }
        for row in self.constraints.iter_mut() {
            for (j, c) in row.iter_mut().enumerate() {
                let i = j as i64 - r;
                if self.below.is_some_and(|b| i <= b) || self.above.is_some_and(|a| i >= a) {
                    *c = 0;
                }
            }
        }
        let mut rows = fp::rref(&self.constraints, self.p);
        // Unit rows adjacent to a half-line extend it.
        loop {
            let unit = |rows: &Vec<Vec<u8>>, i: i64| -> Option<usize> {
                if i.abs() > r {
                    return None;
                }
                let col = (i + r) as usize;
                rows.iter().position(|row| {
                    row[col] != 0 && row.iter().enumerate().all(|(j, &c)| j == col || c == 0)
                })
            };
            let mut changed = false;
            if let Some(b) = self.below {
                if let Some(pos) = unit(&rows, b + 1) {
                    rows.remove(pos);
                    self.below = Some(b + 1);
                    changed = true;
                }
            }
            if let Some(a) = self.above {
                if let Some(pos) = unit(&rows, a - 1) {
                    rows.remove(pos);
                    self.above = Some(a - 1);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            for row in rows.iter_mut() {
                for (j, c) in row.iter_mut().enumerate() {
                    let i = j as i64 - r;
                    if self.below.is_some_and(|b| i <= b) || self.above.is_some_and(|a| i >= a) {
                        *c = 0;
                    }
                }
            }
            rows = fp::rref(&rows, self.p);
        }
        if self.below.is_some_and(|b| self.above.is_some_and(|a| b + 1 >= a)) {
            return LampSet { p: self.p, radius: 0, constraints: vec![], below: Some(0), above: Some(0) };
        }
        // Shrink the radius while the outer columns are unused.
        let mut radius = self.radius;
        while radius > 0 {
            let w = 2 * radius as usize;
            if rows.iter().all(|row| row[0] == 0 && row[w] == 0) {
                rows = rows.into_iter().map(|row| row[1..w].to_vec()).collect();
                radius -= 1;
            } else {
                break;
            }
        }
        if rows.is_empty() {
            radius = 0;
        }
        LampSet { p: self.p, radius, constraints: rows, below: self.below, above: self.above }
    }

    /// Parses the display grammar (`L`, `1`, `vanish[lo,hi]`, or
    /// `&`-joined `vanish(-inf,b]`, `vanish[a,inf)`, `row@-r:digits`) and
    /// `level:k` for `W(k)`.
    pub fn parse(p: u8, s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.to_string() };
        match s {
            "L" => return Ok(Self::full(p)),
            "1" => return Ok(Self::half_lines(p, Some(0), Some(0))),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("level:") {
            return k.trim().parse().map(|k| Self::level(p, k)).map_err(|_| bad(6, "bad level"));
        }
        let int = |t: &str, pos: usize| t.trim().parse::<i64>().map_err(|_| bad(pos, "bad index"));
        let (mut below, mut above) = (None, None);
        let mut rows: Vec<(u32, Vec<u8>)> = Vec::new();
        let mut pos = 0;
        for part in s.split('&') {
            if let Some(b) = part.strip_prefix("vanish(-inf,").and_then(|t| t.strip_suffix(']')) {
                below = Some(int(b, pos + 12)?);
            } else if let Some(a) = part.strip_prefix("vanish[").and_then(|t| t.strip_suffix(",inf)")) {
                above = Some(int(a, pos + 7)?);
            } else if let Some(iv) = part.strip_prefix("vanish[").and_then(|t| t.strip_suffix(']')) {
                let (lo, hi) = iv.split_once(',').ok_or_else(|| bad(pos + 7, "expected lo,hi"))?;
                let (lo, hi) = (int(lo, pos + 7)?, int(hi, pos + 8 + lo.len())?);
                if lo > hi {
                    return Err(bad(pos + 7, "empty interval"));
                }
                let w = Self::vanish_interval(p, lo, hi);
                rows.extend(w.constraints.iter().map(|r| (w.radius, r.clone())));
            } else if let Some(row) = part.strip_prefix("row@") {
                let (start, digits) = row.split_once(':').ok_or_else(|| bad(pos + 4, "expected ':'"))?;
                let r = -int(start, pos + 4)?;
                let vals: Vec<u8> = digits.bytes().map(|c| c.wrapping_sub(b'0')).collect();
                if r < 0 || vals.len() as i64 != 2 * r + 1 || vals.iter().any(|&c| c >= p) {
                    return Err(bad(pos + 4, "row must cover [-r, r] with digits below p"));
                }
                rows.push((r as u32, vals));
            } else {
                return Err(bad(pos, "unknown lamp subgroup term"));
            }
            pos += part.len() + 1;
        }
        let radius = rows.iter().map(|(r, _)| *r).max().unwrap_or(0);
        let rows = rows.iter().map(|(r, row)| embed(row, *r, radius, 0)).collect();
        Ok(Self::raw(p, radius, rows, below, above))
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn is_full(&self) -> bool {
        self.constraints.is_empty() && self.below.is_none() && self.above.is_none()
    }

    pub fn is_trivial(&self) -> bool {
        self.below.is_some() && self.above.is_some() && self.constraints.is_empty()
            && self.below.unwrap() + 1 >= self.above.unwrap()
    }

    pub fn is_open(&self) -> bool {
        self.below.is_none() && self.above.is_none()
    }

    /// `Some((lo, hi))` when the set is exactly `{a : a vanishes on [lo, hi]}`.
    pub fn interval(&self) -> Option<(i64, i64)> {
        if !self.is_open() || self.constraints.is_empty() {
            return None;
        }
        let r = self.radius as i64;
        let mut cols: Vec<i64> = Vec::new();
        for row in &self.constraints {
            let nz: Vec<usize> = (0..row.len()).filter(|&j| row[j] != 0).collect();
            if nz.len() != 1 {
                return None;
            }
            cols.push(nz[0] as i64 - r);
        }
        cols.sort();
        let (lo, hi) = (cols[0], *cols.last().unwrap());
        (hi - lo + 1 == cols.len() as i64).then_some((lo, hi))
    }

    pub fn below(&self) -> Option<i64> {
        self.below
    }

    pub fn above(&self) -> Option<i64> {
        self.above
    }

    pub fn contains(&self, a: &EPSeq) -> bool {
        if let Some(b) = self.below {
            if !a.vanishes_on(None, Some(b)) {
                return false;
            }
        }
        if let Some(t) = self.above {
            if !a.vanishes_on(Some(t), None) {
                return false;
            }
        }
        let win = a.window(self.radius);
        self.constraints.iter().all(|row| {
            row.iter().zip(&win).map(|(x, y)| *x as u32 * *y as u32).sum::<u32>() % self.p as u32
                == 0
        })
    }

    /// Image under `σ^m`.
    pub fn shifted(&self, m: i64) -> Self {
        let to = self.radius + m.unsigned_abs() as u32;
        let rows = self.constraints.iter().map(|row| embed(row, self.radius, to, m)).collect();
        Self::raw(self.p, to, rows, self.below.map(|b| b + m), self.above.map(|a| a + m))
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let to = self.radius.max(other.radius);
        let rows = self
            .constraints
            .iter()
            .map(|row| embed(row, self.radius, to, 0))
            .chain(other.constraints.iter().map(|row| embed(row, other.radius, to, 0)))
            .collect();
        let below = match (self.below, other.below) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let above = match (self.above, other.above) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Self::raw(self.p, to, rows, below, above)
    }

    /// Spanning vectors of the projection onto `[-k, k]`.
    pub fn window_span(&self, k: u32) -> Vec<Vec<u8>> {
        let q = self.radius.max(k);
        let width = 2 * q as usize + 1;
        let mut rows: Vec<Vec<u8>> =
            self.constraints.iter().map(|row| embed(row, self.radius, q, 0)).collect();
        for i in -(q as i64)..=q as i64 {
            if self.forced_zero(i) {
                let mut r = vec![0u8; width];
                r[(i + q as i64) as usize] = 1;
                rows.push(r);
            }
        }
        let lo = (q - k) as usize;
        let basis = fp::nullspace(&rows, width, self.p);
        let proj: Vec<Vec<u8>> =
            basis.into_iter().map(|v| v[lo..lo + 2 * k as usize + 1].to_vec()).collect();
        fp::rref(&proj, self.p)
    }
}

impl fmt::Display for LampSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_full() {
            return write!(f, "L");
        }
        if self.is_trivial() {
            return write!(f, "1");
        }
        if let Some((lo, hi)) = self.interval() {
            return write!(f, "vanish[{lo},{hi}]");
        }
        let mut parts = Vec::new();
        if let Some(b) = self.below {
            parts.push(format!("vanish(-inf,{b}]"));
        }
        if let Some(a) = self.above {
            parts.push(format!("vanish[{a},inf)"));
        }
        for row in &self.constraints {
            let s: String = row.iter().map(|c| char::from(b'0' + c)).collect();
            parts.push(format!("row@{}:{s}", -(self.radius as i64)));
        }
        write!(f, "{}", parts.join("&"))
    }
}
