use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num::{One, Zero};

use super::matrix::{vp, QMatrix, Q};
use crate::error::{Error, Result};

/// Lower bound on an entry valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    NegInf,
    Fin(i64),
    Inf,
}

impl Add<i64> for Bound {
    type Output = Bound;
    fn add(self, d: i64) -> Bound {
        match self {
            Bound::Fin(m) => Bound::Fin(m + d),
            b => b,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-inf"),
            Bound::Fin(m) => write!(f, "{m}"),
            Bound::Inf => write!(f, "inf"),
        }
    }
}

impl FromStr for Bound {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inf" | "+inf" => Ok(Bound::Inf),
            "-inf" => Ok(Bound::NegInf),
            t => t.parse().map(Bound::Fin).map_err(|_| format!("bad bound '{t}'")),
        }
    }
}

fn meets(v: Option<i64>, b: Bound) -> bool {
    match (v, b) {
        (_, Bound::NegInf) => true,
        (None, _) => true,
        (Some(_), Bound::Inf) => false,
        (Some(v), Bound::Fin(m)) => v >= m,
    }
}

/// Matrix of valuation bounds `M_rs`.
///
/// Off the diagonal `M_rs` bounds `val(y_rs)`. On the diagonal `0` asks for
/// an integral entry, `m ≥ 1` asks for `val(y_rr − 1) ≥ m` and `inf` forces
/// `y_rr = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValShape {
    n: usize,
    b: Vec<Bound>,
}

impl ValShape {
    pub fn new(n: usize, b: Vec<Bound>) -> Result<Self> {
        if b.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: b.len() });
        }
        Ok(ValShape { n, b })
    }

    pub fn uniform(n: usize, m: i64) -> Self {
        ValShape { n, b: vec![Bound::Fin(m); n * n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Bound) -> Self {
        ValShape { n, b: (0..n * n).map(|i| f(i / n, i % n)).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, s: usize) -> Bound {
        self.b[r * self.n + s]
    }

    pub fn meet(&self, other: &Self) -> Self {
        ValShape::from_fn(self.n, |r, s| self.get(r, s).max(other.get(r, s)))
    }

    /// Bounds after conjugating by a diagonal matrix with entry valuations
    /// `v`, raised to the power `j`.
    pub fn conjugated(&self, v: &[i64], j: i64) -> Self {
        ValShape::from_fn(self.n, |r, s| {
            if r == s {
                self.get(r, s)
            } else {
                self.get(r, s) + j * (v[r] - v[s])
            }
        })
    }

    /// Entrywise condition on `y`, which is already written in the shape's
    /// basis. The determinant must be a unit as well.
    pub fn admits(&self, y: &QMatrix, p: u64) -> bool {
        if vp(y.det(), p) != Some(0) {
            return false;
        }
        (0..self.n).all(|r| {
            (0..self.n).all(|s| {
                let e = y.get(r, s);
                if r != s {
                    return meets(vp(e, p), self.get(r, s));
                }
                match self.get(r, r) {
                    Bound::NegInf => true,
                    Bound::Inf => e.is_one(),
                    Bound::Fin(m) if m <= 0 => meets(vp(e, p), Bound::Fin(m)),
                    Bound::Fin(m) => meets(vp(&(e - Q::one()), p), Bound::Fin(m)),
                }
            })
        })
    }

    pub fn is_integral(&self) -> bool {
        self.b.iter().all(|&x| x >= Bound::Fin(0))
    }

    /// The triangle condition `M_rs ≤ M_rt + M_ts` that makes the set
    /// closed under multiplication.
    pub fn is_group_shape(&self) -> bool {
        let n = self.n;
        let add = |a: Bound, b: Bound| match (a, b) {
            (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
            (Bound::Inf, _) | (_, Bound::Inf) => Bound::Inf,
            (Bound::Fin(x), Bound::Fin(y)) => Bound::Fin(x + y),
        };
        let eff = |r: usize, s: usize| {
            let b = self.get(r, s);
            // A diagonal entry always contributes the unit part.
            if r == s {
                Bound::Fin(0)
            } else {
                b
            }
        };
        (0..n).all(|r| {
            (0..n).all(|s| {
                r == s
                    || (0..n).all(|t| t == r || t == s || self.get(r, s) <= add(eff(r, t), eff(t, s)))
            })
        }) && (0..n).all(|r| {
            // Diagonal entries stay integral and keep their congruence level
            // under products.
            let d = self.get(r, r).max(Bound::Fin(0));
            self.get(r, r) >= Bound::Fin(0)
                && (0..n).all(|t| t == r || d <= add(self.get(r, t), self.get(t, r)))
        })
    }
}

impl fmt::Display for ValShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.n)
            .map(|r| (0..self.n).map(|s| self.get(r, s).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", rows.join(";"))
    }
}

impl FromStr for ValShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut b = Vec::new();
        let mut width = None;
        let mut pos = 0;
        for row in s.split(';') {
            let mut count = 0;
            for cell in row.split(',') {
                let x = cell.trim().parse::<Bound>().map_err(|msg| Error::Parse { pos, msg })?;
                b.push(x);
                count += 1;
                pos += cell.len() + 1;
            }
            if *width.get_or_insert(count) != count {
                return Err(Error::Parse { pos, msg: "ragged rows".into() });
            }
        }
        let n = width.unwrap_or(0);
        ValShape::new(n, b)
    }
}

/// A compact subgroup `B · {y : y admitted by shape} · B⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShapeSubgroup {
    pub basis: QMatrix,
    pub shape: ValShape,
}

impl ShapeSubgroup {
    pub fn new(basis: QMatrix, shape: ValShape) -> Self {
        ShapeSubgroup { basis, shape }
    }

    pub fn contains(&self, x: &QMatrix, p: u64) -> bool {
        let y = self.basis.inv().mul(x).mul(&self.basis);
        self.shape.admits(&y, p)
    }
}

impl fmt::Display for ShapeSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.basis.is_identity() {
            write!(f, "shape[{}]", self.shape)
        } else {
            write!(f, "shape[{}]@basis[{}]", self.shape, self.basis)
        }
    }
}

/// Valuation of `y_rs` for `y` the identity-shifted entry used by levels.
pub fn entry_level(y: &QMatrix, r: usize, s: usize, p: u64) -> Option<i64> {
    let e = y.get(r, s);
    if r == s {
        vp(&(e - Q::one()), p)
    } else if e.is_zero() {
        None
    } else {
        vp(e, p)
    }
}
