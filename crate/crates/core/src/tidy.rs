//! Tidy subgroups, scale and the nub, for any [`Model`].

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{index, product_set_equals, SubgroupImage, Tri};
use crate::model::{Image, Model, WinElem};

/// `U_+`, `U_-`, `U_0` of a compact open `U` for `g`.
///
/// The sets are present when the model has closed forms for them (or the
/// finite intersections stabilized exactly); the images are taken at
/// resolution `k`.
#[derive(Debug, Clone)]
pub struct UParts<M: Model> {
    pub u: M::Set,
    pub plus: Option<M::Set>,
    pub minus: Option<M::Set>,
    pub zero: Option<M::Set>,
    pub u_img: Image<M>,
    pub plus_img: Image<M>,
    pub minus_img: Image<M>,
    pub zero_img: Image<M>,
    pub k: u32,
    pub symbolic: bool,
}

/// `∩_{i=lo}^{hi} g^i S g^{-i}`.
pub fn conjugate_intersection<M: Model>(
    model: &M,
    s: &M::Set,
    g: &M::Elem,
    lo: i64,
    hi: i64,
) -> Result<M::Set> {
    let mut acc = model.conjugate_set(s, g, lo)?;
    for i in lo + 1..=hi {
        acc = model.intersect(&acc, &model.conjugate_set(s, g, i)?)?;
    }
    Ok(acc)
}

/// Image of `∩_{i ∈ 0..=±H} g^i U g^{-i}` once two successive horizons agree.
fn stable_image<M: Model>(
    model: &M,
    u: &M::Set,
    g: &M::Elem,
    sign: i64,
    k: u32,
    horizon: u32,
) -> Result<Image<M>> {
    let mut prev: Option<Image<M>> = None;
    let mut acc = u.clone();
    for h in 0..=horizon as i64 {
        if h > 0 {
            acc = model.intersect(&acc, &model.conjugate_set(u, g, sign * h)?)?;
        }
        let img = model.image(&acc, k)?;
        if prev.as_ref() == Some(&img) {
            return Ok(img);
        }
        prev = Some(img);
    }
    Err(Error::NoStabilization(horizon))
}

pub fn u_parts<M: Model>(
    model: &M,
    u: &M::Set,
    g: &M::Elem,
    k: u32,
    horizon: u32,
) -> Result<UParts<M>> {
    let u_img = model.image(u, k)?;
    if let Some((plus, minus, zero)) = model.symbolic_parts(u, g)? {
        return Ok(UParts {
            u: u.clone(),
            plus_img: model.image(&plus, k)?,
            minus_img: model.image(&minus, k)?,
            zero_img: model.image(&zero, k)?,
            plus: Some(plus),
            minus: Some(minus),
            zero: Some(zero),
            u_img,
            k,
            symbolic: true,
        });
    }
    let plus_img = stable_image(model, u, g, 1, k, horizon)?;
    let minus_img = stable_image(model, u, g, -1, k, horizon)?;
    let zero_img = plus_img.intersection(&minus_img)?;
    Ok(UParts {
        u: u.clone(),
        plus: None,
        minus: None,
        zero: None,
        u_img,
        plus_img,
        minus_img,
        zero_img,
        k,
        symbolic: false,
    })
}

/// Result of the tidy-above test.
///
/// `checked_to` is the finest resolution at which the product check ran;
/// resolutions beyond the cap are skipped rather than guessed.
#[derive(Debug, Clone)]
pub struct TidyAbove<M: Model> {
    pub holds: bool,
    pub failing_k: Option<u32>,
    pub witness: Option<WinElem<M>>,
    pub checked_to: u32,
}

pub fn is_tidy_above<M: Model>(
    model: &M,
    u: &M::Set,
    g: &M::Elem,
    k_max: u32,
    horizon: u32,
) -> Result<TidyAbove<M>> {
    let mut checked_to = 0;
    for k in 1..=k_max {
        let parts = match u_parts(model, u, g, k, horizon) {
            Ok(p) => p,
            Err(Error::ResolutionTooFine { .. }) if k > 1 => break,
            Err(e) => return Err(e),
        };
        let w = model.window(k);
        let check = product_set_equals(&w, &parts.plus_img, &parts.minus_img, &parts.u_img)?;
        if !check.equal {
            return Ok(TidyAbove {
                holds: false,
                failing_k: Some(k),
                witness: check.witness,
                checked_to: k,
            });
        }
        checked_to = k;
    }
    Ok(TidyAbove { holds: true, failing_k: None, witness: None, checked_to })
}

/// `∩_{i=0}^{k} g^i U g^{-i}` for the smallest `k ≤ max_k` that is tidy above.
pub fn tidy_above_procedure<M: Model>(
    model: &M,
    u: &M::Set,
    g: &M::Elem,
    max_k: u32,
    resolution: u32,
    horizon: u32,
) -> Result<(M::Set, u32)> {
    for k in 0..=max_k {
        let v = conjugate_intersection(model, u, g, 0, k as i64)?;
        if is_tidy_above(model, &v, g, resolution, horizon)?.holds {
            return Ok((v, k));
        }
    }
    Err(Error::CapExceeded { max_k })
}

#[derive(Debug, Clone, Serialize)]
pub struct TidyBelow {
    pub value: Tri,
    pub witness: Option<String>,
    /// Conjugation exponent at which the witness appeared.
    pub at_j: Option<i64>,
    pub certificate: bool,
}

/// Looks for `x ∈ (g^j U_- g^{-j} ∩ U) \ U_-` with `0 ≥ j ≥ −horizon`, and the
/// mirror statement for `U_+`.
pub fn is_tidy_below<M: Model>(
    model: &M,
    u: &M::Set,
    g: &M::Elem,
    horizon: u32,
    k: u32,
) -> Result<TidyBelow> {
    let cert = model.minusminus_certificate(u, g);
    if cert == Some(true) {
        return Ok(TidyBelow { value: Tri::True, witness: None, at_j: None, certificate: true });
    }
    let Some((plus, minus, _)) = model.symbolic_parts(u, g)? else {
        return Ok(TidyBelow { value: Tri::Inconclusive, witness: None, at_j: None, certificate: false });
    };
    for (part, sign) in [(&minus, 1i64), (&plus, -1)] {
        let target = model.image(part, k)?;
        for step in 0..=horizon as i64 {
            let j = -sign * step;
            let s = model.intersect(&model.conjugate_set(part, g, j)?, u)?;
            let img = model.image(&s, k)?;
            for w in img.elements.difference(&target.elements) {
                let x = model.lift(w, k);
                if model.contains(&s, &x) && !model.contains(part, &x) {
                    return Ok(TidyBelow {
                        value: Tri::False,
                        witness: Some(model.describe_elem(&x)),
                        at_j: Some(j),
                        certificate: false,
                    });
                }
            }
        }
    }
    Ok(TidyBelow { value: Tri::Inconclusive, witness: None, at_j: None, certificate: false })
}

#[derive(Debug, Clone)]
pub struct TidyReport<M: Model> {
    pub tidy: M::Set,
    pub k_used: u32,
    pub above: TidyAbove<M>,
    pub below: TidyBelow,
    pub resolution: u32,
}

/// Runs the procedure from `seed` and tests the result on both sides.
pub fn tidy_from<M: Model>(
    model: &M,
    seed: &M::Set,
    g: &M::Elem,
    max_k: u32,
    resolution: u32,
    horizon: u32,
) -> Result<TidyReport<M>> {
    let (v, k_used) = tidy_above_procedure(model, seed, g, max_k, resolution, horizon)?;
    let above = is_tidy_above(model, &v, g, resolution, horizon)?;
    let below = is_tidy_below(model, &v, g, horizon, resolution.min(above.checked_to.max(1)))?;
    Ok(TidyReport { tidy: v, k_used, above, below, resolution })
}

/// A subgroup tidy for `g`: the first seed whose procedure output is
/// certified tidy below.
pub fn find_tidy<M: Model>(
    model: &M,
    g: &M::Elem,
    max_k: u32,
    resolution: u32,
    horizon: u32,
) -> Result<TidyReport<M>> {
    let mut last_err = None;
    for seed in model.tidy_seeds(resolution) {
        match tidy_from(model, &seed, g, max_k, resolution, horizon) {
            Ok(r) if r.below.value == Tri::True => return Ok(r),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Hypothesis("no seed produced a tidy subgroup".into())))
}

/// Every distinct procedure output, over all seeds, that is certified tidy.
pub fn all_tidy<M: Model>(
    model: &M,
    g: &M::Elem,
    max_k: u32,
    resolution: u32,
    horizon: u32,
) -> Result<Vec<M::Set>> {
    let mut out: Vec<M::Set> = Vec::new();
    for seed in model.tidy_seeds(resolution) {
        if let Ok(r) = tidy_from(model, &seed, g, max_k, resolution, horizon) {
            if r.below.value == Tri::True && !out.contains(&r.tidy) {
                out.push(r.tidy);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Hypothesis("no seed produced a tidy subgroup".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScaleReport<M: Model> {
    pub scale: u64,
    pub tidy: TidyReport<M>,
    /// `U_+ ∩ B_k ⊆ g⁻¹ U_+ g`, so the window index is the true index.
    pub exact: bool,
}

/// `[g U_+ g⁻¹ : U_+]`, computed as `[U_+ : g⁻¹ U_+ g]` so that both sets
/// stay inside the reference subgroup.
pub fn scale_index<M: Model>(
    model: &M,
    g: &M::Elem,
    k: u32,
    max_k: u32,
    horizon: u32,
) -> Result<ScaleReport<M>> {
    let tidy = find_tidy(model, g, max_k, k, horizon)?;
    let plus = match model.symbolic_parts(&tidy.tidy, g)? {
        Some((plus, _, _)) => plus,
        None => return Err(Error::UnsupportedClass("scale needs closed U_+".into())),
    };
    let inner = model.conjugate_set(&plus, g, -1)?;
    let a = model.image(&plus, k)?;
    let b = model.image(&inner, k)?;
    let scale = index(&a, &b)?;
    let deep = model.intersect(&plus, &model.level_set(k))?;
    let exact = model.intersect(&deep, &inner)? == deep;
    Ok(ScaleReport { scale, tidy, exact })
}

pub fn con_membership<M: Model>(model: &M, g: &M::Elem, x: &M::Elem, k: u32, horizon: u32) -> Tri {
    match model.con_oracle(g, x) {
        Some(b) => Tri::exact(b),
        None => model.con_by_trajectory(g, x, k, horizon),
    }
}

pub fn par_membership<M: Model>(model: &M, g: &M::Elem, x: &M::Elem, horizon: u32) -> Tri {
    if let Some(b) = model.par_oracle(g, x) {
        return Tri::exact(b);
    }
    // The orbit staying inside B_0 bounds it; leaving proves nothing.
    let mut y = x.clone();
    for _ in 0..=horizon {
        if !model.proximity_level(&y).at_least(0) {
            return Tri::Inconclusive;
        }
        y = model.conj(g, &y);
    }
    Tri::TrueAtResolution
}

/// One characterization of the nub at window level.
#[derive(Debug, Clone, Serialize)]
pub struct NubEntry {
    pub name: &'static str,
    pub order: Option<usize>,
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct NubReport<M: Model> {
    pub image: Image<M>,
    pub entries: Vec<NubEntry>,
}

/// Elements of `pool` whose canonical lift passes `keep`; `None` as soon as
/// an oracle declines to answer.
fn filter_window<M: Model>(
    model: &M,
    k: u32,
    pool: &Image<M>,
    keep: impl Fn(&M::Elem) -> Option<bool>,
) -> Option<Image<M>> {
    let w = model.window(k);
    let mut els = BTreeSet::new();
    for e in &pool.elements {
        if keep(&model.lift(e, k))? {
            els.insert(e.clone());
        }
    }
    Some(SubgroupImage::from_set(&w, els))
}

/// Window image of `nub(g)` at resolution `k`, computed five ways.
///
/// `tidy` lists the compact opens used for the intersection
/// characterization; conjugates `g^j V g^{-j}` with `|j| ≤ j_max` are
/// intersected. Any disagreement is an error.
pub fn nub_compute<M: Model>(
    model: &M,
    g: &M::Elem,
    k: u32,
    j_max: u32,
    tidy: &[M::Set],
) -> Result<NubReport<M>> {
    let gi = model.inv(g);
    let reference = model.image(&model.reference(), k)?;
    let mut found: Vec<(&'static str, Option<Image<M>>)> = Vec::new();

    let iv = match (model.con_closure_image(g, k)?, model.con_closure_image(&gi, k)?) {
        (Some(a), Some(b)) => Some(a.intersection(&b)?),
        _ => None,
    };
    found.push(("con-closures", iv));

    let mut inter: Option<Image<M>> = None;
    for v in tidy {
        let s = conjugate_intersection(model, v, g, -(j_max as i64), j_max as i64)?;
        let img = model.image(&s, k)?;
        inter = Some(match inter {
            None => img,
            Some(acc) => acc.intersection(&img)?,
        });
    }
    found.push(("tidy-intersection", inter));

    let bco = filter_window(model, k, &reference, |x| {
        Some(model.con_oracle(g, x)? && model.par_oracle(&gi, x)?)
    });
    found.push(("bco-closure", bco));

    let iii = model
        .con_closure_image(g, k)?
        .and_then(|c| filter_window(model, k, &c, |x| model.par_oracle(&gi, x)));
    found.push(("con-closure-par", iii));

    // Intersection over the neighbourhoods B_m, m ≤ k, evaluated per element.
    let rb = filter_window(model, k, &reference, |x| {
        if !model.par_oracle(&gi, x)? {
            return Some(false);
        }
        for m in 0..=k {
            if !model.eventually_in_level(g, x, m)? {
                return Some(false);
            }
        }
        Some(true)
    });
    found.push(("rbco-closure", rb));

    let Some(common) = found.iter().find_map(|(_, i)| i.clone()) else {
        return Err(Error::UnsupportedClass("no nub characterization applies".into()));
    };
    let mut entries = Vec::new();
    let mut bad = Vec::new();
    for (name, img) in &found {
        let agrees = img.as_ref().map(|i| i == &common);
        if agrees == Some(false) {
            bad.push(format!("{name}: order {}", img.as_ref().unwrap().order()));
        }
        entries.push(NubEntry { name, order: img.as_ref().map(|i| i.order()), agrees });
    }
    if !bad.is_empty() {
        return Err(Error::Disagreement(format!(
            "reference order {} vs {}",
            common.order(),
            bad.join(", ")
        )));
    }
    Ok(NubReport { image: common, entries })
}

/// Window-level forms of the structure identities for `U_{--}` and `U_-`.
#[derive(Debug, Clone, Serialize)]
pub struct WindowIdentities {
    pub k: u32,
    /// `image(U_{--} ∩ U_ref) = image(con(g))·image(U_0)`.
    pub minusminus: bool,
    /// `image(U_-) = image(con(g) ∩ U_-)·image(U_0)`.
    pub minus: bool,
    /// `image(U_-) = image(con(g) ∩ U)·image(U_0)`.
    pub minus_via_u: bool,
    pub order_minusminus: usize,
    pub order_minus: usize,
}

/// Evaluates the identities at resolution `k`.
///
/// `U_{--}` is the increasing union of `g^{-j} U_- g^j`, taken for
/// `j ≤ horizon`. Images of `con(g) ∩ S` are the intersections of the
/// contraction-closure image with the image of `S`.
pub fn window_identities<M: Model>(
    model: &M,
    u: &M::Set,
    g: &M::Elem,
    k: u32,
    horizon: u32,
) -> Result<WindowIdentities> {
    let w = model.window(k);
    let Some((_, minus, zero)) = model.symbolic_parts(u, g)? else {
        return Err(Error::UnsupportedClass(format!("no closed-form parts for {}", model.describe_set(u))));
    };
    let Some(con) = model.con_closure_image(g, k)? else {
        return Err(Error::UnsupportedClass(format!("no contraction closure for {}", model.describe_elem(g))));
    };
    let reference = model.reference();
    let minus_img = model.image(&minus, k)?;
    let zero_img = model.image(&zero, k)?;
    let u_img = model.image(u, k)?;
    let mut mm = minus_img.clone();
    for j in 1..=horizon as i64 {
        let s = model.intersect(&model.conjugate_set(&minus, g, -j)?, &reference)?;
        let img = model.image(&s, k)?;
        if !mm.is_subgroup_of(&img) {
            return Err(Error::CheckFailed("translates of U_- are not increasing".into()));
        }
        mm = img;
    }
    let eq = |a: &Image<M>, t: &Image<M>| -> Result<bool> {
        Ok(product_set_equals(&w, a, &zero_img, t)?.equal)
    };
    let con_minus = con.intersection(&minus_img)?;
    let con_u = con.intersection(&u_img)?;
    Ok(WindowIdentities {
        k,
        minusminus: eq(&con, &mm)?,
        minus: eq(&con_minus, &minus_img)?,
        minus_via_u: eq(&con_u, &minus_img)?,
        order_minusminus: mm.order(),
        order_minus: minus_img.order(),
    })
}
