//! Finitary checks of global statements: window images of the Tits core,
//! anisotropic quotients of the shift model, and explicit normal-closure
//! witnesses.
//!
//! These are proxies. [`tits_core_image`] only sees the window images of the
//! contraction closures of a finite schedule; [`quotient_anisotropy_check`]
//! exercises "quotient contraction groups trivial ⇔ core image inside `N`"
//! on that schedule and nothing stronger.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{subgroup_closure, SubgroupImage};
use crate::model::{Image, Model, WinElem};
use crate::shift::{con_oracle_shift, EPSeq, ShiftElement, ShiftModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TitsCoreImage<E: Ord> {
    pub resolution: u32,
    pub image: SubgroupImage<E>,
    /// Generators that were actually needed to reach the image.
    pub generators: Vec<E>,
}

/// Subgroup of the level-`k` window generated by the images of
/// `closure(con(g)) ∩ U_ref` over the schedule.
pub fn tits_core_image<M: Model>(
    model: &M,
    k: u32,
    schedule: &[M::Elem],
) -> Result<TitsCoreImage<WinElem<M>>> {
    let w = model.window(k);
    let mut image: Image<M> = SubgroupImage::trivial(&w);
    let mut generators = Vec::new();
    for g in schedule {
        let Some(c) = model.con_closure_image(g, k)? else {
            return Err(Error::UnsupportedClass(format!(
                "no contraction closure for {}",
                model.describe_elem(g)
            )));
        };
        for x in &c.elements {
            if !image.contains(x) {
                generators.push(x.clone());
                image = subgroup_closure(&w, &generators, model.cap())?;
            }
        }
    }
    Ok(TitsCoreImage { resolution: k, image, generators })
}

/// Closed normal subgroups of the shift model with computable quotients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalSubgroup {
    /// The lamp group; the quotient is `Z`, discrete.
    Lamps,
    Trivial,
}

impl fmt::Display for NormalSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalSubgroup::Lamps => "lamps",
            NormalSubgroup::Trivial => "trivial",
        })
    }
}

impl FromStr for NormalSubgroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lamps" | "lamp-subgroup" => Ok(NormalSubgroup::Lamps),
            "trivial" => Ok(NormalSubgroup::Trivial),
            _ => Err(Error::UnsupportedClass(format!("unsupported quotient by {s}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientDescriptor {
    pub model: ShiftModel,
    pub normal: NormalSubgroup,
}

impl QuotientDescriptor {
    pub fn new(model: ShiftModel, normal: NormalSubgroup) -> Self {
        QuotientDescriptor { model, normal }
    }

    pub fn quotient_tag(&self) -> &'static str {
        match self.normal {
            NormalSubgroup::Lamps => "Z",
            NormalSubgroup::Trivial => "shift",
        }
    }

    pub fn contains(&self, x: &ShiftElement) -> bool {
        match self.normal {
            NormalSubgroup::Lamps => x.shift == 0,
            NormalSubgroup::Trivial => x.is_identity(),
        }
    }

    fn sample_member<R: Rng>(&self, rng: &mut R) -> ShiftElement {
        match self.normal {
            NormalSubgroup::Lamps => ShiftElement::lamp_only(random_lamp(self.model.p, rng)),
            NormalSubgroup::Trivial => self.model.identity(),
        }
    }

    /// `g x g⁻¹ ∈ N` for sampled `g ∈ G`, `x ∈ N`.
    pub fn check_normal<R: Rng>(&self, samples: usize, rng: &mut R) -> bool {
        (0..samples).all(|_| {
            let g = random_element(self.model.p, rng);
            let x = self.sample_member(rng);
            self.contains(&self.model.conj(&g, &x))
        })
    }

    /// Whether `con(gN)` is trivial in `G/N`.
    pub fn quotient_con_trivial(&self, g: &ShiftElement) -> bool {
        match self.normal {
            // Z is abelian and discrete.
            NormalSubgroup::Lamps => true,
            NormalSubgroup::Trivial => g.shift == 0,
        }
    }

    /// Window image of `N ∩ U_ref` at level `k`.
    pub fn image(&self, k: u32) -> Result<Image<ShiftModel>> {
        match self.normal {
            NormalSubgroup::Lamps => self.model.image(&self.model.reference(), k),
            NormalSubgroup::Trivial => Ok(SubgroupImage::trivial(&self.model.window(k))),
        }
    }
}

fn random_lamp<R: Rng>(p: u8, rng: &mut R) -> EPSeq {
    let len = rng.gen_range(0..=8usize);
    let lo = rng.gen_range(-10..=10i64);
    let vals: Vec<u8> = (0..len).map(|_| rng.gen_range(0..p)).collect();
    EPSeq::from_window(p, lo, &vals)
}

fn random_element<R: Rng>(p: u8, rng: &mut R) -> ShiftElement {
    ShiftElement::new(random_lamp(p, rng), rng.gen_range(-3..=3))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PushforwardRow {
    pub g: String,
    pub samples: usize,
    /// Every sampled element of `con(g)` lies in `N`, so the image of
    /// `con(g)·N` in `G/N` is trivial.
    pub image_trivial: bool,
    pub quotient_con_trivial: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnisotropyRow {
    pub k: u32,
    pub core_order: usize,
    pub core_in_n: bool,
    pub quotient_anisotropic: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnisotropyReport {
    pub normal: NormalSubgroup,
    pub quotient: &'static str,
    pub normal_ok: bool,
    pub pushforward: Vec<PushforwardRow>,
    pub rows: Vec<AnisotropyRow>,
    pub pass: bool,
}

/// Checks, over the schedule, that `con(g)N/N = con(gN)` and that the Tits
/// core image lies in `N` exactly when every quotient contraction group is
/// trivial, at each resolution `1..=k_max`.
pub fn quotient_anisotropy_check<R: Rng>(
    q: &QuotientDescriptor,
    schedule: &[ShiftElement],
    k_max: u32,
    samples: usize,
    rng: &mut R,
) -> Result<AnisotropyReport> {
    let sm = &q.model;
    let normal_ok = q.check_normal(50, rng);
    let mut pushforward = Vec::new();
    for g in schedule {
        let mut in_n = true;
        for _ in 0..samples {
            let len = rng.gen_range(1..=12usize);
            let coeffs: Vec<i64> = (0..len).map(|_| rng.gen_range(0..sm.p as i64)).collect();
            let c = sm.con_element(g, &coeffs).expect("shift model parametrizes con");
            if !con_oracle_shift(g, &c) {
                return Err(Error::CheckFailed(format!("{c} is not in con({g})")));
            }
            in_n &= q.contains(&c);
        }
        // In G/N the contraction group of gN is the image of con(g), so both
        // sides are trivial together when con(g) ⊆ N.
        let qt = q.quotient_con_trivial(g);
        let image_trivial = match q.normal {
            NormalSubgroup::Lamps => in_n,
            NormalSubgroup::Trivial => g.shift == 0,
        };
        pushforward.push(PushforwardRow {
            g: g.to_string(),
            samples,
            image_trivial,
            quotient_con_trivial: qt,
            pass: image_trivial == qt,
        });
    }
    let anisotropic = schedule.iter().all(|g| q.quotient_con_trivial(g));
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let core = tits_core_image(sm, k, schedule)?;
        let core_in_n = core.image.is_subgroup_of(&q.image(k)?);
        rows.push(AnisotropyRow {
            k,
            core_order: core.image.order(),
            core_in_n,
            quotient_anisotropic: anisotropic,
            pass: core_in_n == anisotropic,
        });
    }
    let pass = normal_ok && pushforward.iter().all(|r| r.pass) && rows.iter().all(|r| r.pass);
    Ok(AnisotropyReport { normal: q.normal, quotient: q.quotient_tag(), normal_ok, pushforward, rows, pass })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalClosureWitness {
    pub b: EPSeq,
    pub a: EPSeq,
    /// `((a,0)·(0,1)·(a,0)⁻¹)·(0,1)⁻¹`.
    pub product: ShiftElement,
    pub replay: bool,
}

/// Writes `(b, 0)` as a product of a conjugate of the shift and the inverse
/// shift, using `a_i = Σ_{m ≤ i} b_m`.
pub fn normal_closure_witness(b: &EPSeq) -> Result<NormalClosureWitness> {
    if !b.left_tail_zero() {
        return Err(Error::UnsupportedClass(format!("{b} has a nonzero left tail")));
    }
    let p = b.p();
    let a = b.partial_sums()?;
    let g = ShiftElement::translation(p, 1);
    let x = ShiftElement::lamp_only(a.clone());
    let product = x.mul(&g).mul(&x.inv()).mul(&g.inv());
    let replay = product == ShiftElement::lamp_only(b.clone());
    Ok(NormalClosureWitness { b: b.clone(), a, product, replay })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_for_delta_zero() {
        let b = EPSeq::delta(2, 0, 1);
        let w = normal_closure_witness(&b).unwrap();
        assert!(w.replay);
        assert_eq!(w.a, EPSeq::new(2, vec![0], 0, vec![], vec![1]).unwrap());
    }

    #[test]
    fn witness_for_zero_and_two_deltas() {
        let w = normal_closure_witness(&EPSeq::zero(3)).unwrap();
        assert!(w.replay && w.a.is_zero());
        let b = EPSeq::from_support(2, &[-3, 2]);
        let w = normal_closure_witness(&b).unwrap();
        assert!(w.replay);
        assert_eq!(w.a, EPSeq::from_support(2, &[-3, -2, -1, 0, 1]));
    }

    #[test]
    fn witness_rejects_left_tail() {
        let b = EPSeq::new(2, vec![1], 0, vec![], vec![0]).unwrap();
        assert!(matches!(normal_closure_witness(&b), Err(Error::UnsupportedClass(_))));
    }
}
