use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `p`-adic valuation of a rational; `None` stands for `+∞` (the value 0).
pub fn vp(x: &Q, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let count = |n: &BigInt| {
        let pb = BigInt::from(p);
        let mut n = n.abs();
        let mut c = 0i64;
        while (&n % &pb).is_zero() {
            n /= &pb;
            c += 1;
        }
        c
    };
    Some(count(x.numer()) - count(x.denom()))
}

pub fn is_p_integral(x: &Q, p: u64) -> bool {
    vp(x, p).is_none_or(|v| v >= 0)
}

/// Residue of a `p`-integral rational modulo `m` (a power of `p`).
pub fn residue(x: &Q, m: u64) -> Option<u64> {
    let mb = BigInt::from(m);
    let n = x.numer() % &mb;
    let d = x.denom() % &mb;
    let n = ((n % &mb) + &mb) % &mb;
    let d = ((d % &mb) + &mb) % &mb;
    let d: i128 = i128::try_from(d).ok()?;
    let inv = crate::kernel::inv_mod(d, m as i128)?;
    let n: i128 = i128::try_from(n).ok()?;
    Some(((n * inv).rem_euclid(m as i128)) as u64)
}

/// An invertible `n × n` rational matrix regarded inside `GL_n(Q_p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    n: usize,
    entries: Vec<Q>,
    det: Q,
}

impl QMatrix {
    pub fn new(n: usize, entries: Vec<Q>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: entries.len() });
        }
        let det = determinant(n, &entries);
        if det.is_zero() {
            return Err(Error::Singular);
        }
        Ok(QMatrix { n, entries, det })
    }

    /// Unchecked constructor for singular helpers such as nilpotents.
    pub(crate) fn raw(n: usize, entries: Vec<Q>) -> Self {
        let det = determinant(n, &entries);
        QMatrix { n, entries, det }
    }

    pub fn from_ints(n: usize, xs: &[i64]) -> Result<Self> {
        Self::new(n, xs.iter().map(|&x| q(x)).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![Q::one(); n]).expect("identity is invertible")
    }

    pub fn diag(d: &[Q]) -> Result<Self> {
        let n = d.len();
        let mut e = vec![Q::zero(); n * n];
        for (i, x) in d.iter().enumerate() {
            e[i * n + i] = x.clone();
        }
        Self::new(n, e)
    }

    /// `I + c·E_{rs}` (zero-based indices).
    pub fn elementary(n: usize, r: usize, s: usize, c: Q) -> Result<Self> {
        let mut m = Self::identity(n).entries;
        m[r * n + s] += c;
        Self::new(n, m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn det(&self) -> &Q {
        &self.det
    }

    pub fn get(&self, r: usize, s: usize) -> &Q {
        &self.entries[r * self.n + s]
    }

    pub fn entries(&self) -> &[Q] {
        &self.entries
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|r| {
            (0..self.n).all(|s| {
                let e = self.get(r, s);
                if r == s {
                    e.is_one()
                } else {
                    e.is_zero()
                }
            })
        })
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|r| (0..self.n).all(|s| r == s || self.get(r, s).is_zero()))
    }

    pub fn diagonal(&self) -> Vec<Q> {
        (0..self.n).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut e = vec![Q::zero(); n * n];
        for r in 0..n {
            for j in 0..n {
                let a = &self.entries[r * n + j];
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = &other.entries[j * n + c];
                    if !b.is_zero() {
                        e[r * n + c] += a * b;
                    }
                }
            }
        }
        QMatrix { n, entries: e, det: &self.det * &other.det }
    }

    pub fn inv(&self) -> Self {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut b = Self::identity(n).entries;
        for c in 0..n {
            let piv = (c..n).find(|&r| !a[r * n + c].is_zero()).expect("invertible");
            for j in 0..n {
                a.swap(c * n + j, piv * n + j);
                b.swap(c * n + j, piv * n + j);
            }
            let s = a[c * n + c].recip();
            for j in 0..n {
                a[c * n + j] = &a[c * n + j] * &s;
                b[c * n + j] = &b[c * n + j] * &s;
            }
            for r in 0..n {
                if r != c && !a[r * n + c].is_zero() {
                    let f = a[r * n + c].clone();
                    for j in 0..n {
                        let ta = &f * &a[c * n + j];
                        let tb = &f * &b[c * n + j];
                        a[r * n + j] -= ta;
                        b[r * n + j] -= tb;
                    }
                }
            }
        }
        QMatrix { n, entries: b, det: self.det.recip() }
    }

    /// `self · x · self⁻¹`.
    pub fn conj(&self, x: &Self) -> Self {
        self.mul(x).mul(&self.inv())
    }

    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut acc = Self::identity(self.n);
        let mut sq = base;
        let mut e = e.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    pub fn trace(&self) -> Q {
        (0..self.n).map(|i| self.get(i, i).clone()).fold(Q::zero(), |a, b| a + b)
    }

    pub fn is_p_integral(&self, p: u64) -> bool {
        self.entries.iter().all(|x| is_p_integral(x, p))
    }

    /// Membership in `GL_n(Z_p)`.
    pub fn in_gl_zp(&self, p: u64) -> bool {
        self.is_p_integral(p) && vp(&self.det, p) == Some(0)
    }
}

pub(crate) fn determinant(n: usize, e: &[Q]) -> Q {
    let mut a = e.to_vec();
    let mut det = Q::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !a[r * n + c].is_zero()) else {
            return Q::zero();
        };
        if piv != c {
            for j in 0..n {
                a.swap(c * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = a[c * n + c].clone();
        det *= &d;
        for r in c + 1..n {
            if !a[r * n + c].is_zero() {
                let f = &a[r * n + c] / &d;
                for j in c..n {
                    let t = &f * &a[c * n + j];
                    a[r * n + j] -= t;
                }
            }
        }
    }
    det
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", rows.join(";"))
    }
}

impl FromStr for QMatrix {
    type Err = Error;

    /// Row-major, `;` between rows, `,` between entries, `a/b` rationals.
    fn from_str(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut width = None;
        let mut pos = 0;
        for row in s.split(';') {
            let mut count = 0;
            for cell in row.split(',') {
                let t = cell.trim();
                let x = Q::from_str(t).map_err(|_| Error::Parse {
                    pos: pos + (cell.len() - cell.trim_start().len()),
                    msg: format!("bad rational '{t}'"),
                })?;
                entries.push(x);
                count += 1;
                pos += cell.len() + 1;
            }
            match width {
                None => width = Some(count),
                Some(w) if w != count => {
                    return Err(Error::Parse { pos, msg: "ragged rows".into() });
                }
                _ => {}
            }
        }
        let n = width.unwrap_or(0);
        if entries.len() != n * n {
            return Err(Error::Parse { pos: 0, msg: "matrix must be square".into() });
        }
        QMatrix::new(n, entries)
    }
}
