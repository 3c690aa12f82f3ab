//! Acceptance criteria 1–10. Runs without the libtest harness so every
//! criterion prints exactly one pass/fail line.

use std::collections::{BTreeSet, HashSet};
use std::process::Command;
use std::time::{Duration, Instant};

use accum_lab::constructors::{build_nk_basis, check_nk_membership};
use accum_lab::expr::{parse_rule, parse_set_expr};
use accum_lab::omega::{AlmostDisjointFamily, BinaryPattern, OmegaCombination, pairwise_distance};
use accum_lab::oracle::{cluster_accumulation, perturb_c0, OracleConfig};
use accum_lab::rational::{int, ratio, Rational};
use accum_lab::set_gates::{dense_gate, lineable_gate, Conclusion, GateReason};
use accum_lab::span_geometry::{
    decrement_witness, epsilon_bound, gap_witness, interaction, linearly_independent, overflow_peel, spectrum,
    witness_max_and_submax,
};
use accum_lab::step_seq::StepSequence;
use accum_lab::verify::{case_rng, quarter_values, random_coef, random_step_seq, ESTIMATE_MODULI};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

const SEED: u64 = 7;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- brute force ------------------------------------------------------------

/// Distinct value tuples `(x¹_n, …, xᵏ_n)` over one joint period past every
/// threshold, scaled to integers by a common denominator. Each tuple recurs
/// once per period, so it is attained infinitely often.
struct Tuples {
    rows: Vec<Vec<i128>>,
}

impl Tuples {
    fn len(&self) -> usize {
        self.rows.len()
    }
}

fn tuples(seqs: &[&StepSequence]) -> Tuples {
    let start = seqs.iter().map(|s| s.threshold()).max().unwrap_or(1);
    let period = seqs.iter().fold(1u64, |m, s| m.lcm(&s.period()));
    let mut seen = HashSet::new();
    let mut raw = Vec::new();
    for n in start..start + period {
        let t: Vec<Rational> = seqs.iter().map(|s| s.value_at(n).clone()).collect();
        if seen.insert(t.clone()) {
            raw.push(t);
        }
    }
    let den = raw.iter().flatten().fold(BigInt::one(), |d, q| d.lcm(q.denom()));
    let rows = raw.iter().map(|t| t.iter().map(|q| scale(q, &den)).collect()).collect();
    Tuples { rows }
}

fn scale(q: &Rational, den: &BigInt) -> i128 {
    (q * Rational::from_integer(den.clone())).to_integer().to_i128().expect("small values")
}

/// `|L_z|` for `z = Σ cᵢ xᵢ`: the number of distinct `Σ cᵢ tᵢ` over the tuples.
fn brute_count(tuples: &Tuples, coefs: &[Rational]) -> usize {
    let den = coefs.iter().fold(BigInt::one(), |d, q| d.lcm(q.denom()));
    let cs: Vec<i128> = coefs.iter().map(|q| scale(q, &den)).collect();
    let mut values = HashSet::new();
    for t in &tuples.rows {
        let v = t.iter().zip(&cs).fold(0i128, |acc, (x, c)| {
            acc.checked_add(x.checked_mul(*c).expect("no overflow")).expect("no overflow")
        });
        values.insert(v);
    }
    values.len()
}

fn brute_limits(x: &StepSequence) -> BTreeSet<Rational> {
    let start = x.threshold();
    (start..start + x.period()).map(|n| x.value_at(n).clone()).collect()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// ---- criteria -----------------------------------------------------------------

fn criterion_1() -> Outcome {
    let moduli: Vec<u64> = (1..=60).collect();
    let t0 = Instant::now();
    let mut submax = 0;
    for case in 0..200u64 {
        let mut rng = case_rng(SEED, 101, case);
        let (x, y) = loop {
            let x = random_step_seq(&mut rng, 2..=6, &moduli, true);
            let y = random_step_seq(&mut rng, 2..=6, &moduli, true);
            if linearly_independent(&x, &y) {
                break (x, y);
            }
        };
        let tp = tuples(&[&x, &y]);
        let e = tp.len();
        let si = interaction(&x, &y);
        let spec = spectrum(&si);
        ensure(spec.iter().max() == Some(&e), || format!("case {case}: spectrum {spec:?}, |E| = {e}"))?;
        ensure(si.e_count() == e, || format!("case {case}: e_count {}", si.e_count()))?;
        for (l, m) in si.direction_classes() {
            let c = brute_count(&tp, &[l.clone(), m.clone()]);
            ensure(spec.contains(&c), || format!("case {case}: direction ({l}, {m}) gives {c}"))?;
        }
        if e >= 2 {
            submax += 1;
            let (max, sub) = witness_max_and_submax(&x, &y).map_err(|err| format!("case {case}: {err}"))?;
            let bmax = brute_count(&tp, &[max.lambda.clone(), max.mu.clone()]);
            let bsub = brute_count(&tp, &[sub.lambda.clone(), sub.mu.clone()]);
            ensure(bmax == e && max.cardinality == e, || format!("case {case}: max witness {bmax}"))?;
            ensure(bsub < e && bsub == sub.cardinality, || format!("case {case}: sub witness {bsub}"))?;
        }
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(10), || format!("runtime {}", secs(dt)))?;
    Ok(format!("200 pairs, {submax} sub-max witnesses, {}", secs(dt)))
}

fn criterion_2() -> Outcome {
    let moduli: Vec<u64> = (1..=60).collect();
    let t0 = Instant::now();
    for case in 0..100u64 {
        let mut rng = case_rng(SEED, 102, case);
        let y = random_step_seq(&mut rng, 3..=6, &moduli, true);
        let n2 = brute_limits(&y).len();
        let n1 = rng.gen_range(2..n2);
        let x_vals = quarter_values(&mut rng, n1);
        let mut g: Vec<usize> = (0..n2).map(|i| if i < n1 { i } else { rng.gen_range(0..n1) }).collect();
        g.shuffle(&mut rng);
        let x = StepSequence::new(y.parts().iter().zip(&g).map(|(p, &j)| (x_vals[j].clone(), p.cell.clone())))
            .map_err(|e| e.to_string())?;
        let tp = tuples(&[&x, &y]);
        ensure(brute_limits(&x).len() == n1 && tp.len() == n2, || format!("case {case}: bad instance"))?;
        let w = gap_witness(&x, &y).map_err(|e| format!("case {case}: {e}"))?;
        let card = brute_count(&tp, &[w.report.lambda.clone(), w.report.mu.clone()]);
        ensure(n2 - n1 < card && card < n2, || format!("case {case}: {card} outside ({}, {n2})", n2 - n1))?;
        ensure(card == tp.len() - w.multiplicity, || format!("case {case}: {card} != |E| - {}", w.multiplicity))?;
        ensure(w.report.cardinality == card, || format!("case {case}: reported {}", w.report.cardinality))?;
        ensure(w.report.lambda == -&w.c && w.report.mu.is_one(), || format!("case {case}: not -Cx + y"))?;
        let cfg = OracleConfig::for_step_sequence(&w.report.witness);
        let clusters = cluster_accumulation(&w.report.witness.eval_prefix(cfg.prefix_len), &cfg);
        ensure(clusters.len() == card, || format!("case {case}: oracle {}", clusters.len()))?;
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(10), || format!("runtime {}", secs(dt)))?;
    Ok(format!("100 instances, {}", secs(dt)))
}

fn criterion_3() -> Outcome {
    let y = StepSequence::from_residue_values(&[int(0), int(0), int(1), int(1)]);
    let hand = decrement_witness(&y, &int(0)).map_err(|e| e.to_string())?;
    let tp = tuples(&[&hand.x, &y]);
    let hand_card = brute_count(&tp, &[hand.report.lambda.clone(), hand.report.mu.clone()]);
    ensure(hand.c == ratio(1, 2) && hand_card == 3, || format!("hand instance C = {}, card {hand_card}", hand.c))?;
    let moduli: Vec<u64> = (1..=60).collect();
    for case in 0..50u64 {
        let mut rng = case_rng(SEED, 103, case);
        let y = random_step_seq(&mut rng, 2..=6, &moduli, true);
        let vals: Vec<Rational> = brute_limits(&y).into_iter().collect();
        let delta = vals.windows(2).map(|w| &w[1] - &w[0]).min().expect("two values");
        let norm = (1..y.threshold() + y.period()).map(|n| y.value_at(n).abs()).max().expect("nonempty");
        ensure(delta >= ratio(1, 4) && norm <= int(5), || format!("case {case}: generator out of range"))?;
        let eps = (delta / (int(8) * norm)).min(ratio(1, 2));
        ensure(epsilon_bound(&y).ok() == Some(eps.clone()), || format!("case {case}: epsilon {eps}"))?;
        let d = decrement_witness(&y, &eps).map_err(|e| format!("case {case}: {e}"))?;
        let tp = tuples(&[&d.x, &y]);
        let card = brute_count(&tp, &[d.report.lambda.clone(), d.report.mu.clone()]);
        ensure(card + 1 == tp.len(), || format!("case {case}: card {card}, |E| {}", tp.len()))?;
        ensure(d.report.cardinality == card, || format!("case {case}: reported {}", d.report.cardinality))?;
        let cfg = OracleConfig::for_step_sequence(&d.report.witness);
        let clusters = cluster_accumulation(&d.report.witness.eval_prefix(cfg.prefix_len), &cfg);
        ensure(clusters.len() == card, || format!("case {case}: oracle {}", clusters.len()))?;
    }
    Ok("hand instance C = 1/2, card 3; 50 seeded y".into())
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    for fam in 0..100u64 {
        let mut rng = case_rng(SEED, 104, fam);
        let k = rng.gen_range(1..=4);
        let family: Vec<StepSequence> = (0..k).map(|_| random_step_seq(&mut rng, 1..=6, &ESTIMATE_MODULI, true)).collect();
        let refs: Vec<&StepSequence> = family.iter().collect();
        let tp = tuples(&refs);
        let n: Vec<u64> = family.iter().map(|x| brute_limits(x).len() as u64).collect();
        ensure(n.iter().all(|&c| c <= 6), || format!("family {fam}: |L| > 6"))?;
        let head: u64 = n[..k - 1].iter().product();
        let lower = ratio(n[k - 1] as i64, head as i64);
        let upper = head * n[k - 1];
        for v in 0..100 {
            let mut coefs: Vec<Rational> =
                (0..k).map(|_| if rng.gen_bool(0.25) { Rational::zero() } else { random_coef(&mut rng) }).collect();
            coefs[k - 1] = random_coef(&mut rng);
            let card = brute_count(&tp, &coefs);
            let c = int(card as i64);
            ensure(lower <= c && card as u64 <= upper, || {
                format!("family {fam} vector {v}: {card} outside [{lower}, {upper}]")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} combinations, zero violations"))
}

fn criterion_5() -> Outcome {
    // (label, expr, lineable holds, lineable k, dense holds)
    let fixtures = [
        ("2N+1", "2N+1", true, Some(2), false),
        ("2N", "2N", true, Some(2), false),
        ("{n^2 : n >= 2}", "poly(1,0,0)@2", false, None, false),
        ("{3^n : n >= 1}", "exp(3)@1", false, None, false),
        ("N \\ {1}", "N\\{1}", true, Some(1), true),
    ];
    for (label, expr, l_holds, l_k, d_holds) in fixtures {
        let a = parse_set_expr(expr).map_err(|e| format!("{label}: {e}"))?;
        let lin = lineable_gate(&a, 10).map_err(|e| format!("{label}: {e}"))?;
        let den = dense_gate(&a).map_err(|e| format!("{label}: {e}"))?;
        ensure(lin.holds == l_holds && lin.witness_k == l_k, || format!("{label}: lineable {lin:?}"))?;
        ensure(den.holds == d_holds, || format!("{label}: dense {den:?}"))?;
        if !l_holds {
            ensure(lin.reason == GateReason::GapDivergence, || format!("{label}: reason {:?}", lin.reason))?;
        }
        // brute shift counts on [1, 10^5]
        let bound = 100_000u64;
        let members: BTreeSet<u64> = a.members_up_to(bound + 20).into_iter().collect();
        let shift_count = |k: u64| members.iter().filter(|&&n| n <= bound && members.contains(&(n + k))).count();
        for k in 1..=10u64 {
            let c = shift_count(k);
            let expect_infinite = match l_k {
                Some(k0) => k % k0 == 0,
                None => false,
            };
            if expect_infinite {
                ensure(c as u64 >= bound / 4, || format!("{label}: k = {k} gives only {c} pairs"))?;
            } else {
                ensure(c <= 2, || format!("{label}: k = {k} gives {c} pairs"))?;
            }
        }
        if let Some(k) = lin.witness_k {
            ensure(lin.evidence.iter().all(|&n| members.contains(&n) && members.contains(&(n + k))), || {
                format!("{label}: evidence {:?}", lin.evidence)
            })?;
        }
        for v in [&lin, &den] {
            ensure(v.note.contains("necessary"), || format!("{label}: note {}", v.note))?;
        }
    }
    let two_n = lineable_gate(&parse_set_expr("2N").map_err(|e| e.to_string())?, 10).map_err(|e| e.to_string())?;
    ensure(two_n.conclusion == Conclusion::Open, || format!("2N conclusion {:?}", two_n.conclusion))?;
    Ok("5 fixtures exact; 2N lineability reported open".into())
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    let rule = parse_rule("k^2").map_err(|e| e.to_string())?;
    let report = build_nk_basis(&rule, 3).map_err(|e| e.to_string())?;
    let sq = |k: u64| BigInt::from(k) * BigInt::from(k);
    let l = &report.l_values;
    ensure(l.len() == 3 && l[0] == 2 && l[1] == 18 && l[2] >= 2304, || format!("l = {l:?}"))?;
    let mut product = BigInt::one();
    let mut prev_k: Option<u64> = None;
    for (j, (&lj, &kj)) in l.iter().zip(&report.k_indices).enumerate() {
        if let Some(pk) = prev_k {
            ensure(BigInt::from(lj) >= sq(pk + 1) * &product, || format!("certificate for l_{} fails", j + 1))?;
        }
        product *= lj;
        ensure(sq(kj) > product && sq(kj - 1) <= product, || format!("k_{} = {kj} not least", j + 1))?;
        prev_k = Some(kj);
    }
    ensure(report.k_indices == [2, 7, 289], || format!("k = {:?}", report.k_indices))?;
    for (b, &lj) in report.basis.iter().zip(l) {
        ensure(brute_limits(b).len() as u64 == lj, || format!("|L| of basis vector is not {lj}"))?;
    }
    let refs: Vec<&StepSequence> = report.basis.iter().collect();
    let tp = tuples(&refs);
    let removed: Vec<(BigInt, BigInt)> = report.k_indices.iter().map(|&k| (sq(k), sq(k + 1))).collect();
    let set = report.removed_indices();
    let pool = [int(0), int(1), int(-1), int(2), int(-3), ratio(1, 2), ratio(-2, 3), ratio(5, 7), ratio(7, 3)];
    for t in 0..200u64 {
        let mut rng = case_rng(SEED, 106, t);
        let coefs: Vec<Rational> = loop {
            let c: Vec<Rational> = (0..3).map(|_| pool.choose(&mut rng).expect("pool").clone()).collect();
            if c.iter().any(|q| !q.is_zero()) {
                break c;
            }
        };
        let top = coefs.iter().rposition(|q| !q.is_zero()).expect("nonzero");
        let card = BigInt::from(brute_count(&tp, &coefs));
        let lower = if top == 0 { BigInt::from(2) } else { sq(report.k_indices[top - 1] + 1) };
        let upper = sq(report.k_indices[top]);
        ensure(lower <= card && card < upper, || format!("trial {t}: {card} outside [{lower}, {upper})"))?;
        ensure(removed.iter().all(|(a, b)| !(a <= &card && &card < b)), || format!("trial {t}: {card} removed"))?;
        let chk = check_nk_membership(&report, &coefs, &rule, &set).map_err(|e| e.to_string())?;
        ensure(chk.holds() && BigInt::from(chk.card) == card, || format!("trial {t}: library check {chk:?}"))?;
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(30), || format!("runtime {}", secs(dt)))?;
    Ok(format!("l = {l:?}, 200 combinations, {}", secs(dt)))
}

fn criterion_7() -> Outcome {
    let moduli = [2, 3, 4, 5, 6, 7, 8, 9];
    let n = 3;
    for case in 0..20u64 {
        let mut rng = case_rng(SEED, 107, case);
        let start = (0..1000).find_map(|_| {
            let fam: Vec<StepSequence> = (0..n).map(|_| random_step_seq(&mut rng, 1..=3, &moduli, true)).collect();
            let coefs: Vec<Rational> = (0..n).map(|_| random_coef(&mut rng)).collect();
            let refs: Vec<&StepSequence> = fam.iter().collect();
            (brute_count(&tuples(&refs), &coefs) > n).then_some((fam, coefs))
        });
        let (fam, coefs) = start.ok_or_else(|| format!("case {case}: no start found"))?;
        ensure(fam.iter().all(|x| brute_limits(x).len() <= 3), || format!("case {case}: |L| > 3"))?;
        let p = overflow_peel(&fam, &coefs, n).map_err(|e| format!("case {case}: {e}"))?;
        let kept = p.coefficients.len();
        let refs: Vec<&StepSequence> = fam[..kept].iter().collect();
        let card = brute_count(&tuples(&refs), &p.coefficients);
        ensure((4..=9).contains(&card) && card == p.cardinality, || format!("case {case}: card {card}"))?;
        ensure(p.coefficients[..] == coefs[..kept], || format!("case {case}: coefficients changed"))?;
    }
    Ok("20 families, all peeled cardinalities in [4, 9]".into())
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let labels: Vec<BinaryPattern> = ["bin(;0)", "bin(;1)", "bin(;01)", "bin(1;0)", "bin(0;1)"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("{e}"))?;
    let fam = AlmostDisjointFamily::new(labels).map_err(|e| e.to_string())?;
    let half = ratio(1, 2);
    let xs: Vec<_> = (0..5).map(|i| fam.vector(i, half.clone())).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let prefix = 20_000u64;
    let mut pairs = 0;
    for i in 0..5 {
        for j in i + 1..5 {
            let d = pairwise_distance(&xs[i], &xs[j]).map_err(|e| e.to_string())?;
            let w = d.witness.ok_or_else(|| format!("pair {i},{j}: no witness"))?;
            let gap_at = |n: u64| (xs[i].value_at(n) - xs[j].value_at(n)).abs();
            ensure(d.distance.is_one() && gap_at(w).is_one(), || format!("pair {i},{j}: {d:?}"))?;
            ensure((1..=prefix).all(|n| gap_at(n) <= int(1)), || format!("pair {i},{j}: values exceed [0, 1]"))?;
            pairs += 1;
        }
    }
    let pool = [int(1), int(-1), int(2), int(-2), int(3), ratio(1, 3), ratio(-3, 2)];
    let m_max = 4u32;
    for case in 0..10u64 {
        let mut rng = case_rng(SEED, 108, case);
        let k = rng.gen_range(1..=3);
        let mut idx: Vec<usize> = (0..5).collect();
        idx.shuffle(&mut rng);
        let terms: Vec<(Rational, _)> =
            idx[..k].iter().map(|&i| (pool.choose(&mut rng).expect("pool").clone(), xs[i].clone())).collect();
        let mut predicted: BTreeSet<Rational> = BTreeSet::from([Rational::zero()]);
        for (a, _) in &terms {
            let mut c = Rational::one();
            for _ in 0..=m_max {
                predicted.insert(a * &c);
                c *= &half;
            }
        }
        let comb = OmegaCombination::new(terms).map_err(|e| e.to_string())?;
        let cfg = OracleConfig::exact(prefix as usize, comb.burn_in()).map_err(|e| e.to_string())?;
        let clusters = cluster_accumulation(&comb.eval_prefix(prefix as usize, Some(m_max)), &cfg);
        ensure(clusters == predicted, || format!("case {case}: clusters {clusters:?}, predicted {predicted:?}"))?;
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(20), || format!("runtime {}", secs(dt)))?;
    Ok(format!("{pairs} distances exactly 1, 10 combinations, {}", secs(dt)))
}

fn criterion_9() -> Outcome {
    let moduli: Vec<u64> = (1..=60).collect();
    for case in 0..500u64 {
        let mut rng = case_rng(SEED, 109, case);
        let x = random_step_seq(&mut rng, 1..=8, &moduli, true);
        let symbolic: BTreeSet<Rational> = x.accumulation_set().0.into_iter().collect();
        ensure(symbolic == brute_limits(&x), || format!("case {case}: symbolic set differs from brute force"))?;
        let len = x.threshold() as usize + 20 * x.period() as usize;
        let exact = OracleConfig::exact(len, x.threshold() - 1).map_err(|e| e.to_string())?;
        let clusters = cluster_accumulation(&x.eval_prefix(len), &exact);
        ensure(clusters == symbolic, || format!("case {case}: exact clusters {clusters:?}"))?;
        let burn_in = x.threshold().max(100);
        let len = burn_in as usize + 20 * x.period() as usize;
        let tolerant = OracleConfig::new(len, burn_in, ratio(1, 50), 3).map_err(|e| e.to_string())?;
        let perturbed = perturb_c0(&x, int(1)).map_err(|e| e.to_string())?;
        let count = cluster_accumulation(&perturbed.prefix(len), &tolerant).len();
        ensure(count == symbolic.len(), || format!("case {case}: {count} perturbed clusters vs {}", symbolic.len()))?;
    }
    Ok("500 sequences, exact and perturbed oracles agree".into())
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_accum-lab");
    let run = || {
        let t = Instant::now();
        let out = Command::new(bin)
            .args(["verify", "--suite", "all", "--seed", "7"])
            .env_remove("ACCUM_LAB_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        Ok::<_, String>((out, t.elapsed()))
    };
    let (a, ta) = run()?;
    let (b, tb) = run()?;
    ensure(a.status.success() && b.status.success(), || {
        format!("exit {:?}: {}", a.status.code(), String::from_utf8_lossy(&a.stderr))
    })?;
    ensure(a.stdout == b.stdout, || "reports differ between runs".into())?;
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).map_err(|e| e.to_string())?;
    ensure(report["checks_failed"] == 0, || format!("checks_failed = {}", report["checks_failed"]))?;
    let slowest = ta.max(tb);
    ensure(slowest < Duration::from_secs(120), || format!("runtime {}", secs(slowest)))?;
    Ok(format!("{} bytes identical, {} checks passed, {}", a.stdout.len(), report["checks_passed"], secs(slowest)))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        match f() {
            Ok(detail) => println!("criterion {n}: pass ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL ({why})");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
