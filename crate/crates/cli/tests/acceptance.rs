//! Acceptance run: twelve criteria, one PASS/FAIL line each, all exact.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdlc::kernel::{index, product_set, product_set_equals, subgroup_closure, LampWindow, MatWindow};
use tdlc::limits::{
    adjust_to_contraction, chabauty_distance, con_transport_check, conjugator_forward, conjugator_two_sided,
    linear_schedule, net_experiment, nub_by_con_closures, nub_transport_check, replay, shift_schedule,
    verify_trace, ClosedSubgroupApprox, Distance, NetRow,
};
use tdlc::linear::{qf, scale_formula, LinearModel, QMatrix, ShapeSubgroup};
use tdlc::shift::{EPSeq, ShiftElement, ShiftModel};
use tdlc::tidy::{
    all_tidy, is_tidy_above, is_tidy_below, nub_compute, scale_index, tidy_above_procedure, window_identities,
};
use tdlc::verify::{normal_closure_witness, quotient_anisotropy_check, NormalSubgroup, QuotientDescriptor};
use tdlc::{Model, SubgroupImage, Tri, WindowGroup};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn diag(d: &[(i64, i64)]) -> QMatrix {
    QMatrix::diag(&d.iter().map(|&(a, b)| qf(a, b)).collect::<Vec<_>>()).unwrap()
}

fn iwahori(lm: &LinearModel) -> ShapeSubgroup {
    lm.shape("0,1;0,0".parse().unwrap())
}

/// Random Iwahori element; `deep` puts the lower-left entry in `pZ` too,
/// `lower` zeroes the upper-right entry.
fn random_iwahori(p: i64, deep: bool, lower: bool, rng: &mut ChaCha8Rng) -> QMatrix {
    let a = 1 + p * rng.gen_range(-6..7);
    let d = 1 + p * rng.gen_range(-6..7);
    let b = if lower { 0 } else { p * rng.gen_range(-6..7) };
    let c = rng.gen_range(-6..7) * if deep { p } else { 1 };
    QMatrix::from_ints(2, &[a, b, c, d]).unwrap()
}

/// Random lamp supported in `±[lo, hi]`.
fn random_lamp(p: u8, lo: i64, hi: i64, rng: &mut ChaCha8Rng) -> ShiftElement {
    let w = (hi - lo + 1) as usize;
    let right: Vec<u8> = (0..w).map(|_| rng.gen_range(0..p)).collect();
    let left: Vec<u8> = (0..w).map(|_| rng.gen_range(0..p)).collect();
    ShiftElement::lamp_only(EPSeq::from_window(p, lo, &right).add(&EPSeq::from_window(p, -hi, &left)))
}

fn forward_battery<M: Model>(model: &M, g: &M::Elem, uset: &M::Set, us: &[M::Elem], n: u32) -> Result<usize, String> {
    let mut certs = 0;
    for u in us {
        let tr = conjugator_forward(model, g, u, uset, n).map_err(e2s)?;
        verify_trace(model, &tr, uset).map_err(|e| format!("{}: {e}", model.describe_elem(u)))?;
        if let Some(k) = replay(model, g, u, &tr.t, uset, 0..=n as i64) {
            return Err(format!("replay fails at k={k} for u={}", model.describe_elem(u)));
        }
        certs += tr.certificates.len();
    }
    Ok(certs)
}

fn forward_replay() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut certs = 0;
    for p in [2u64, 3] {
        let lm = LinearModel::new(p, 2).map_err(e2s)?;
        let us: Vec<_> = (0..100).map(|_| random_iwahori(p as i64, false, false, &mut rng)).collect();
        certs += forward_battery(&lm, &diag(&[(p as i64, 1), (1, 1)]), &iwahori(&lm), &us, 20)?;
        let sm = ShiftModel::new(p as u8).map_err(e2s)?;
        let us: Vec<_> = (0..100).map(|_| random_lamp(sm.p, 2, 21, &mut rng)).collect();
        certs += forward_battery(&sm, &sm.shift(), &sm.level_set(1), &us, 20)?;
    }
    let t = start.elapsed();
    ensure(t.as_secs_f64() < 60.0, || format!("took {t:?}"))?;
    Ok(format!("400 pairs, {certs} certificates replayed, {:.1}s", t.as_secs_f64()))
}

fn two_sided_battery<M: Model>(model: &M, g: &M::Elem, uset: &M::Set, us: &[M::Elem]) -> Result<(), String> {
    for u in us {
        let ts = conjugator_two_sided(model, g, u, uset, 10).map_err(e2s)?;
        if let Some(k) = replay(model, g, u, &ts.r, uset, -10..=10) {
            return Err(format!("two-sided replay fails at k={k} for u={}", model.describe_elem(u)));
        }
    }
    Ok(())
}

fn two_sided_replay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for p in [2u64, 3] {
        let lm = LinearModel::new(p, 2).map_err(e2s)?;
        let us: Vec<_> = (0..50).map(|_| random_iwahori(p as i64, true, false, &mut rng)).collect();
        two_sided_battery(&lm, &diag(&[(p as i64, 1), (1, 1)]), &iwahori(&lm), &us)?;
        let sm = ShiftModel::new(p as u8).map_err(e2s)?;
        let us: Vec<_> = (0..50).map(|_| random_lamp(sm.p, 4, 13, &mut rng)).collect();
        two_sided_battery(&sm, &sm.shift(), &sm.level_set(2), &us)?;
    }
    Ok("200 pairs, |k| <= 10".into())
}

fn transport_pair<M: Model>(
    model: &M,
    own_frame: impl Fn(&M::Elem) -> Option<M>,
    g: &M::Elem,
    u: &M::Elem,
    uset: &M::Set,
    rng: &mut ChaCha8Rng,
) -> Result<usize, String> {
    let tr = conjugator_forward(model, g, u, uset, 20).map_err(e2s)?;
    let (t, _, _) = adjust_to_contraction(model, uset, g, &tr.t);
    let rep = con_transport_check(model, g, u, &t, 50, 3, rng).map_err(e2s)?;
    ensure(rep.pass && rep.window_failures == 0, || format!("con transport: {rep:?}"))?;
    let ts = conjugator_two_sided(model, g, u, uset, 10).map_err(e2s)?;
    let gu = model.mul(g, u);
    let a = nub_by_con_closures(model, g, 3).map_err(e2s)?;
    let b = match nub_by_con_closures(model, &gu, 3) {
        Ok(b) => b,
        Err(e) => match own_frame(&gu) {
            Some(m) => nub_by_con_closures(&m, &gu, 3).map_err(e2s)?,
            None => return Err(e.to_string()),
        },
    };
    let rep = nub_transport_check(model, &ts.r, &a, &b, 3).map_err(e2s)?;
    ensure(rep.pass, || format!("nub transport: {rep:?}"))?;
    Ok(100)
}

fn transport() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut samples = 0;
    let sm = ShiftModel::new(2).map_err(e2s)?;
    for _ in 0..5 {
        let u = random_lamp(2, 4, 13, &mut rng);
        samples += transport_pair(&sm, |_| None, &sm.shift(), &u, &sm.level_set(2), &mut rng)?;
    }
    let lm = LinearModel::new(2, 2).map_err(e2s)?;
    let g = diag(&[(2, 1), (1, 1)]);
    for _ in 0..5 {
        let u = random_iwahori(2, true, true, &mut rng);
        let own = |x: &QMatrix| LinearModel::adapted_to(2, x).ok();
        samples += transport_pair(&lm, own, &g, &u, &iwahori(&lm), &mut rng)?;
    }
    Ok(format!("10 pairs, {samples} con samples, nub at K=3, no counterexamples"))
}

fn net_rows() -> Result<Vec<(&'static str, Vec<NetRow>)>, String> {
    let sm = ShiftModel::new(2).map_err(e2s)?;
    let a = net_experiment(&sm, &sm.shift(), &shift_schedule(&sm, 8), 6, 10).map_err(e2s)?;
    let lm = LinearModel::new(2, 2).map_err(e2s)?;
    let b = net_experiment(&lm, &diag(&[(2, 1), (1, 1)]), &linear_schedule(&lm, 8), 6, 10).map_err(e2s)?;
    Ok(vec![("shift", a), ("linear", b)])
}

fn net_conjugators() -> Outcome {
    let mut worst = i64::MIN;
    for (name, rows) in net_rows()? {
        ensure(rows.len() == 8, || format!("{name}: {} rows", rows.len()))?;
        for r in &rows {
            ensure(r.t_in_plus, || format!("{name}: t_{} outside U_+", r.n))?;
            if let Some(c) = r.lag {
                worst = worst.max(c);
                ensure(c <= 1, || format!("{name}: lag {c} at n={}", r.n))?;
            }
        }
    }
    Ok(format!("n = 1..8, t_n in U_+, c = {}", if worst == i64::MIN { "none (t_n trivial)".into() } else { worst.to_string() }))
}

fn net_distances() -> Outcome {
    for (name, rows) in net_rows()? {
        for w in rows.windows(2) {
            ensure(w[1].d_con <= w[0].d_con && w[1].d_nub <= w[0].d_nub, || format!("{name}: increase at n={}", w[1].n))?;
        }
        for r in rows.iter().filter(|r| r.n >= 6) {
            let ok = r.d_con == Distance::Indistinguishable(6) && r.d_nub == Distance::Indistinguishable(6);
            ensure(ok, || format!("{name}: n={} not indistinguishable", r.n))?;
        }
    }
    Ok("non-increasing, indist@6 by n = 6 in both models".into())
}

fn identity_battery<M: Model>(model: &M, battery: &[(M::Set, M::Elem)]) -> Result<usize, String> {
    let mut n = 0;
    for (u, g) in battery {
        let tidy = is_tidy_below(model, u, g, 12, 4).map_err(e2s)?.value == Tri::True;
        for k in 1..=4 {
            let r = window_identities(model, u, g, k, 2 * k + 4).map_err(e2s)?;
            let what = || format!("{} k={k}: {r:?}", model.describe_set(u));
            ensure(r.minusminus && r.minus && (!tidy || r.minus_via_u), what)?;
            n += 1;
        }
    }
    Ok(n)
}

fn tidy_theorem() -> Outcome {
    for p in [2u64, 3] {
        let lm = LinearModel::new(p, 2).map_err(e2s)?;
        let g = diag(&[(p as i64, 1), (1, 1)]);
        let (v, k) = tidy_above_procedure(&lm, &lm.reference(), &g, 10, 2, 10).map_err(e2s)?;
        ensure(k == 1 && v == iwahori(&lm), || format!("p={p}: got {v} after {k}"))?;
        let seed = is_tidy_above(&lm, &lm.reference(), &g, 2, 10).map_err(e2s)?;
        ensure(!seed.holds && seed.witness.is_some(), || format!("p={p}: no level-0 witness"))?;
    }
    let sm = ShiftModel::new(2).map_err(e2s)?;
    let g = sm.shift();
    for m in 1..=3 {
        let u = sm.level_set(m);
        let above = is_tidy_above(&sm, &u, &g, 4, 10).map_err(e2s)?;
        let below = is_tidy_below(&sm, &u, &g, 10, m + 1).map_err(e2s)?;
        ensure(above.holds, || format!("W({m}) not tidy above"))?;
        ensure(below.value == Tri::False && below.witness.is_some(), || format!("W({m}): {below:?}"))?;
    }
    let lm = LinearModel::new(2, 2).map_err(e2s)?;
    let iw = iwahori(&lm);
    let lin = [
        (iw.clone(), diag(&[(2, 1), (1, 1)])),
        (iw.clone(), diag(&[(1, 1), (2, 1)])),
        (iw.clone(), diag(&[(2, 1), (1, 2)])),
        (lm.level_set(1), diag(&[(2, 1), (1, 1)])),
        (iw, lm.identity()),
    ];
    let shift = [
        (sm.reference(), g.clone()),
        (sm.level_set(1), g.clone()),
        (sm.level_set(2), sm.inv(&g)),
        (sm.level_set(3), g.clone()),
        (sm.level_set(1), sm.identity()),
    ];
    let n = identity_battery(&lm, &lin)? + identity_battery(&sm, &shift)?;
    Ok(format!("Iwahori in one step for p = 2, 3; W(1..3) witnesses; {n} window identity cases at K <= 4"))
}

fn nub_battery<M: Model>(
    model_for: impl Fn(&M::Elem) -> M,
    elems: &[M::Elem],
    expect: impl Fn(&M, &M::Elem, u32) -> usize,
) -> Result<usize, String> {
    let mut min_available = usize::MAX;
    for g in elems {
        let model = model_for(g);
        for k in 1..=4 {
            let tidy = all_tidy(&model, g, 10, k, 10).map_err(e2s)?;
            let r = nub_compute(&model, g, k, 2 * k + 2, &tidy).map_err(|e| format!("{}: {e}", model.describe_elem(g)))?;
            ensure(r.entries.iter().all(|e| e.agrees != Some(false)), || format!("{}: {:?}", model.describe_elem(g), r.entries))?;
            min_available = min_available.min(r.entries.iter().filter(|e| e.order.is_some()).count());
            let want = expect(&model, g, k);
            ensure(r.image.order() == want, || format!("{} k={k}: order {} want {want}", model.describe_elem(g), r.image.order()))?;
        }
    }
    Ok(min_available)
}

fn nub_theorem() -> Outcome {
    let sm = ShiftModel::new(2).map_err(e2s)?;
    let shift: Vec<_> = ["shift:1", "shift:-1", "shift:2", "lamp:0*shift:1", "lamp:-1,2*shift:-3", "lamp:1", "shift:0"]
        .iter()
        .map(|s| sm.parse(s).unwrap())
        .collect();
    let a = nub_battery(
        |_| sm,
        &shift,
        |m, g, k| if g.shift != 0 { m.window(k).order() as usize } else { 1 },
    )?;
    let h = QMatrix::from_ints(2, &[3, 1, 1, 1]).unwrap();
    let lin = vec![
        diag(&[(2, 1), (1, 1)]),
        diag(&[(1, 1), (2, 1)]),
        diag(&[(2, 1), (1, 2)]),
        QMatrix::identity(2),
        QMatrix::from_ints(2, &[2, 2, 0, 1]).unwrap(),
        h.conj(&diag(&[(2, 1), (1, 1)])),
        diag(&[(4, 1), (1, 1)]),
    ];
    let b = nub_battery(|g| LinearModel::adapted_to(2, g).unwrap(), &lin, |_, _, _| 1)?;
    Ok(format!("7 + 7 elements at K = 1..4; characterizations available: shift >= {a}, linear >= {b}; all agree"))
}

fn exact_scale<M: Model>(model: &M, g: &M::Elem, k: u32) -> Result<u64, String> {
    let r = scale_index(model, g, k, 10, 10).map_err(e2s)?;
    ensure(r.exact, || format!("{}: window {k} too coarse", model.describe_elem(g)))?;
    Ok(r.scale)
}

fn scale_consistency() -> Outcome {
    let start = Instant::now();
    let h = QMatrix::from_ints(2, &[3, 1, 1, 1]).unwrap();
    for p in [2i64, 3] {
        let pu = p as u64;
        let mut cases: Vec<(QMatrix, u64)> = vec![
            (diag(&[(p, 1), (1, 1)]), pu),
            (diag(&[(p, 1), (1, p)]), pu * pu),
            (QMatrix::identity(2), 1),
        ];
        cases.push((h.conj(&cases[0].0), pu));
        cases.push((h.conj(&cases[1].0), pu * pu));
        cases.push((diag(&[(p * p, 1), (p, 1), (1, 1)]), pu.pow(4)));
        for (g, want) in cases {
            let lm = LinearModel::adapted_to(pu, &g).map_err(e2s)?.with_cap(1 << 20);
            let k = if g.n() == 3 { 2 } else { 3 };
            let s = exact_scale(&lm, &g, k)?;
            // The index is computed first; the closed form is compared after.
            ensure(s == want && s as u128 == scale_formula(&g, pu), || format!("{g}: index {s}, want {want}"))?;
        }
        let sm = ShiftModel::new(p as u8).map_err(e2s)?;
        for g in [sm.shift(), sm.identity(), sm.parse("lamp:0*shift:-2").unwrap()] {
            ensure(exact_scale(&sm, &g, 3)? == 1, || format!("shift scale of {g}"))?;
        }
    }
    let t = start.elapsed();
    ensure(t.as_secs_f64() < 30.0, || format!("took {t:?}"))?;
    Ok(format!("p = 2, 3; n = 2, 3; {:.1}s", t.as_secs_f64()))
}

fn anisotropy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sm = ShiftModel::new(2).map_err(e2s)?;
    let g = sm.shift();
    let schedules = [vec![g.clone(), sm.inv(&g), sm.mul(&sm.lamp(&[0]), &g)], vec![sm.lamp(&[1])], vec![]];
    for n in [NormalSubgroup::Lamps, NormalSubgroup::Trivial] {
        let q = QuotientDescriptor::new(sm, n);
        for s in &schedules {
            let rep = quotient_anisotropy_check(&q, s, 4, 50, &mut rng).map_err(e2s)?;
            ensure(rep.pass, || format!("{n}: {}", serde_json::to_string(&rep).unwrap()))?;
        }
    }
    Ok("N = lamps and N = trivial, K = 1..4, both directions".into())
}

fn witness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for p in [2u8, 3] {
        for _ in 0..100 {
            let vals: Vec<u8> = (0..21).map(|_| rng.gen_range(0..p)).collect();
            let b = EPSeq::from_window(p, -10, &vals);
            let w = normal_closure_witness(&b).map_err(e2s)?;
            // Independent replay in the group law.
            let sm = ShiftModel::new(p).map_err(e2s)?;
            let a = ShiftElement::lamp_only(w.a.clone());
            let t = sm.shift();
            let prod = sm.mul(&sm.mul(&sm.mul(&a, &t), &sm.inv(&a)), &sm.inv(&t));
            ensure(w.replay && prod == ShiftElement::lamp_only(b.clone()), || format!("b = {}", b.to_ep_string()))?;
        }
    }
    Ok("200 random b in F_p^[-10,10], p = 2, 3".into())
}

fn naive_closure<W: WindowGroup>(w: &W, gens: &[W::Elem]) -> BTreeSet<W::Elem> {
    let mut s: BTreeSet<W::Elem> = gens.iter().cloned().collect();
    s.insert(w.identity());
    loop {
        let mut next = s.clone();
        for a in &s {
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

fn naive_index<W: WindowGroup>(w: &W, u: &BTreeSet<W::Elem>, v: &BTreeSet<W::Elem>) -> usize {
    let mut covered = BTreeSet::new();
    let mut count = 0;
    for x in u {
        if covered.insert(x.clone()) {
            count += 1;
            covered.extend(v.iter().map(|y| w.mul(x, y)));
        }
    }
    count
}

fn kernel_vs_enumeration<W: WindowGroup>(w: &W, rng: &mut ChaCha8Rng, trials: usize) -> Result<usize, String> {
    let els = w.elements(1 << 12).map_err(e2s)?;
    let full = SubgroupImage::from_set(w, els.iter().cloned().collect());
    let subs: Vec<_> = (0..trials)
        .map(|i| {
            let g: Vec<_> = (0..i % 3).map(|_| els[rng.gen_range(0..els.len())].clone()).collect();
            let s = subgroup_closure(w, &g, 1 << 12).unwrap();
            (s, naive_closure(w, &g))
        })
        .collect();
    let mut checks = 0;
    for (a, naive) in &subs {
        ensure(a.elements == *naive, || "closure differs".into())?;
        for (b, _) in &subs {
            if b.is_subgroup_of(a) {
                let i = index(a, b).map_err(e2s)? as usize;
                ensure(i == naive_index(w, &a.elements, &b.elements), || "index differs".into())?;
            }
            let brute = product_set(w, a, b);
            for t in [&full, a] {
                let fast = product_set_equals(w, a, b, t).map_err(e2s)?;
                ensure(fast.equal == (brute == t.elements), || "product set differs".into())?;
            }
            checks += 1;
        }
    }
    Ok(checks)
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = kernel_vs_enumeration(&LampWindow::new(2, 2), &mut rng, 40)?;
    let b = kernel_vs_enumeration(&MatWindow::new(2, 2, 2), &mut rng, 30)?;
    let sm = ShiftModel::new(2).map_err(e2s)?;
    let w = sm.window(3);
    let els = w.elements(1 << 8).map_err(e2s)?;
    let bat: Vec<_> = (0..30)
        .map(|i| {
            let g: Vec<_> = (0..i % 4).map(|_| els[rng.gen_range(0..els.len())].clone()).collect();
            ClosedSubgroupApprox::from_top(&sm, &subgroup_closure(&w, &g, 1 << 8).unwrap(), 3).unwrap()
        })
        .collect();
    let num = |d: Distance| match d {
        Distance::Dyadic(m) => 0.5f64.powi(m as i32),
        Distance::Indistinguishable(_) => 0.0,
    };
    for x in &bat {
        for y in &bat {
            let xy = chabauty_distance(x, y).map_err(e2s)?;
            ensure(xy == chabauty_distance(y, x).map_err(e2s)?, || "not symmetric".into())?;
            ensure(xy.is_indistinguishable() == (x.images == y.images), || "identity of indiscernibles".into())?;
            for z in &bat {
                let xz = num(chabauty_distance(x, z).map_err(e2s)?);
                let yz = num(chabauty_distance(y, z).map_err(e2s)?);
                ensure(xz <= num(xy).max(yz), || "strong triangle inequality".into())?;
            }
        }
    }
    Ok(format!("{a} pairs on F_2^[-2,2], {b} on GL_2(Z/4); ultrametric on 30 approximations"))
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_tdlc"))
            .args(["theorem-check", "--which", "all", "--seed", "7"])
            .output()
            .map_err(e2s)
    };
    let a = run()?;
    let b = run()?;
    ensure(a.status.success() && b.status.success(), || {
        format!("exit {:?}: {}", a.status.code(), String::from_utf8_lossy(&a.stderr))
    })?;
    ensure(a.stdout == b.stdout, || "outputs differ".into())?;
    Ok(format!("{} rows, byte-identical, exit 0", a.stdout.iter().filter(|&&c| c == b'\n').count()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("forward conjugator replay", forward_replay),
        ("two-sided conjugator replay", two_sided_replay),
        ("con and nub transport", transport),
        ("net conjugators approach the identity", net_conjugators),
        ("con and nub distances shrink", net_distances),
        ("tidying procedure and window identities", tidy_theorem),
        ("nub characterizations agree", nub_theorem),
        ("scale index matches closed form", scale_consistency),
        ("quotient anisotropy", anisotropy),
        ("normal closure witness", witness),
        ("kernel oracles and ultrametric", oracles),
        ("theorem-check determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
