//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p divtower --test acceptance` (add `--release` for speed).

use std::collections::{HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use divtower::certificates::{
    alpha_values, covers, divergence_exponent, phi_certificates, snowflake_exponent, verify_certificate, Tier,
};
use divtower::divergence::{delta_rho, Avoidant, AvoidanceQuery, Caps, Estimator};
use divtower::metrics::{phi_fiber_distortion, CayleyBall, Retractions};
use divtower::normal_form::{self, Group};
use divtower::tower::{build_b, build_g_phi, free_spec, inclusion_map, lattice_spec};
use divtower::witness::{PathWitness, WitnessKit};
use divtower::words::{Letter, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Wall-clock budgets.
const NF_BUDGET: Duration = Duration::from_secs(300);
const WITNESS_BUDGET: Duration = Duration::from_secs(600);
/// Absolute tolerance for floating-point exponent comparisons.
const EXPONENT_TOL: f64 = 1e-12;
/// Density scan cell width.
const CELL: f64 = 0.1;
const SEED: u64 = 0x5eed_d1f7;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn group(m: usize) -> Arc<Group> {
    Arc::new(Group::new(&build_g_phi(m, 1).expect("tower")).expect("group"))
}

/// All freely reduced words of length at most `n`.
fn reduced_words(g: &Group, n: usize) -> Vec<Word> {
    let letters = g.alphabet().letters();
    let mut out = vec![Word::identity(g.alphabet())];
    let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                if w.last().is_some_and(|&p| p.cancels(l)) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().map(|v| Word::reduce(g.alphabet(), v.iter().copied()).expect("same alphabet")));
        frontier = next;
    }
    out
}

fn c1_normal_form_vs_bfs() -> Outcome {
    let start = Instant::now();
    let g = group(2);
    let spec = g.spec().clone();
    let ball = CayleyBall::build(&g, 2, 1_000_000).map_err(err)?;
    let words = reduced_words(&g, 2);
    let class: Vec<u32> = words
        .iter()
        .map(|w| ball.lookup(&g.elem(w).expect("word").encode()).expect("in ball"))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..words.len()).flat_map(|i| (i..words.len()).map(move |j| (i, j))).collect();
    let disagreements: usize = pairs
        .par_iter()
        .map(|&(i, j)| {
            let same = normal_form::equal(&spec, &words[i], &words[j]).expect("word problem");
            usize::from(same != (class[i] == class[j]))
        })
        .sum();
    let elapsed = start.elapsed();
    ensure(disagreements == 0, || format!("{disagreements} disagreements"))?;
    ensure(elapsed <= NF_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{} words, {} vertices, {} pairs, 0 disagreements", words.len(), ball.len(), pairs.len()))
}

fn c2_exact_length_formula() -> Outcome {
    let reg = Retractions::for_group(group(3)).map_err(err)?;
    let g = reg.group().clone();
    let mut checked = 0;
    for i in 1..=3 {
        for j in i + 1..=3 {
            for p in -10i64..=10 {
                for q in -10i64..=10 {
                    let w = g.parse(&format!("s{i}^{p} s{j}^{q}")).map_err(err)?;
                    let expect = (p.abs() + q.abs()) as u64;
                    let lower = reg.lower_bound(&w).map_err(err)?.value;
                    ensure(w.len() as u64 == expect && lower == expect, || {
                        format!("s{i}^{p} s{j}^{q}: upper {} lower {lower}", w.len())
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} words certified exact"))
}

fn c3_isometric_embeddings() -> Outcome {
    let g1 = group(1);
    let ball1 = CayleyBall::build(&g1, 3, 5_000_000).map_err(err)?;
    let ab = g1.alphabet();
    let gens = ["a1", "a2"].map(|n| ab.letter(n).expect("generator"));
    let mut fxz = vec![Vec::<Letter>::new()];
    let mut frontier = fxz.clone();
    for _ in 0..3 {
        let mut next = Vec::new();
        for w in &frontier {
            for l in gens.iter().flat_map(|&l| [l, l.inv()]) {
                if w.last().is_some_and(|&p| p.cancels(l)) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        fxz.extend(next.iter().cloned());
        frontier = next;
    }
    for w in &fxz {
        let e = g1.elem(&Word::reduce(ab, w.iter().copied()).map_err(err)?).map_err(err)?;
        let d = ball1.distance(&g1, &e).ok_or("outside the radius-3 ball")?;
        ensure(d as usize == w.len(), || format!("R_xz length {} but G1 length {d}", w.len()))?;
    }
    let g2 = group(2);
    let ball2 = CayleyBall::build(&g2, 2, 5_000_000).map_err(err)?;
    let inner = ball1.sphere(0).start..ball1.sphere(2).end;
    for i in inner.clone() {
        let w = ball1.path_to(i).relabel(g2.alphabet(), &|s| s.to_string()).map_err(err)?;
        let d2 = ball2.distance(&g2, &g2.elem(&w).map_err(err)?).ok_or("outside the radius-2 ball")?;
        ensure(d2 == ball1.nodes()[i].dist, || format!("{w}: G1 {} vs G2 {d2}", ball1.nodes()[i].dist))?;
    }
    Ok(format!("{} elements of F_xz, {} elements of G1", fxz.len(), inner.len()))
}

/// `φ: a ↦ aba, b ↦ a` on plain strings.
fn phi_power_a(k: usize) -> String {
    let mut s = String::from("a");
    for _ in 0..k {
        s = s.chars().map(|c| if c == 'a' { "aba" } else { "a" }).collect();
    }
    s
}

fn c4_distortion_table() -> Outcome {
    let t = phi_fiber_distortion(8, 50_000_000).map_err(err)?;
    ensure(t.raw.len() == 9, || format!("table has {} entries", t.raw.len()))?;
    ensure(t.raw.windows(2).all(|w| w[0] <= w[1]), || format!("not monotone: {:?}", t.raw))?;
    for k in 0..=3 {
        let len = phi_power_a(k).len() as u64;
        ensure(t.raw[2 * k + 1] >= len, || format!("Dist({}) = {} < {len}", 2 * k + 1, t.raw[2 * k + 1]))?;
    }
    Ok(format!("Dist(0..=8) = {:?}", t.raw))
}

fn c5_certificates() -> Outcome {
    let seq = phi_certificates(25).map_err(err)?;
    let table = phi_fiber_distortion(8, 50_000_000).map_err(err)?;
    let rep = verify_certificate(&seq, 3.0, Some(&table), true).map_err(err)?;
    ensure(rep.passed(), || format!("{rep:?}"))?;
    for c in seq.elements.iter().take(12) {
        let oracle = phi_power_a(c.index as usize);
        let explicit: String = c.explicit.as_deref().ok_or("missing explicit word")?.split_whitespace().collect();
        ensure(explicit == oracle, || format!("a_{} mismatch", c.index))?;
        let rev: String = oracle.chars().rev().collect();
        ensure(rev == oracle && c.palindrome == Some(true), || format!("a_{} not palindromic", c.index))?;
    }
    let exact = rep.per_index.iter().filter(|r| r.tier == Tier::Exact).count();
    let surrogate = rep.per_index.iter().filter(|r| r.tier == Tier::Surrogate).count();
    ensure(exact + surrogate == rep.per_index.len(), || "unchecked indices".into())?;
    Ok(format!("n = 1..=25, condition (3): {exact} exact, {surrogate} surrogate; palindromes n <= 12"))
}

fn c6_witness_suite() -> Outcome {
    let start = Instant::now();
    let kits = [WitnessKit::new(1), WitnessKit::new(2), WitnessKit::new(3)]
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let r0 = kits[0].r0() as u64;
    let mut count = 0;
    let mut longest = 0;
    for r in [r0, 2 * r0, 4 * r0] {
        let n = r as i64;
        let mut batch: Vec<(&WitnessKit, PathWitness)> = Vec::new();
        let (k1, k2, k3) = (&kits[0], &kits[1], &kits[2]);
        batch.push((k1, k1.witness_s1_detour(n).map_err(err)?));
        batch.push((k2, k2.witness_fiber_crossing(r).map_err(err)?.1));
        for (a, b) in [(1, 1), (-1, 1), (1, -1), (-1, -1)] {
            batch.push((k2, k2.witness_corner_g2(r, a, b).map_err(err)?));
            batch.push((k3, k3.witness_corner_g3(r, a, b).map_err(err)?));
        }
        for eps in [1, -1] {
            batch.push((k2, k2.witness_shift_s2(n, eps).map_err(err)?));
            batch.push((k3, k3.witness_shift_s3(n, eps).map_err(err)?));
        }
        let x = k1.group.parse(&format!("s1^-{r}")).map_err(err)?;
        let e = Word::identity(k1.group.alphabet());
        batch.push((k1, k1.witness_avoidant_modification(&x, 2 * n, &e, None).map_err(err)?));
        for (kit, w) in &batch {
            let rep = kit.verify(w).map_err(err)?;
            ensure(rep.passed(), || format!("{} at r = {r}: {rep:?}", w.kind))?;
            longest = longest.max(w.len());
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed <= WITNESS_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{count} witnesses verified, longest {longest} edges"))
}

/// Shortest path in ℤ² between two points avoiding `|p|₁ < radius`, inside a box.
fn lattice_bfs(from: (i64, i64), to: (i64, i64), radius: i64, half: i64) -> Option<u64> {
    let inside = |p: (i64, i64)| p.0.abs() + p.1.abs() < radius;
    let mut dist = HashMap::from([(from, 0u64)]);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        let d = dist[&p];
        if p == to {
            return Some(d);
        }
        for q in [(p.0 + 1, p.1), (p.0 - 1, p.1), (p.0, p.1 + 1), (p.0, p.1 - 1)] {
            if q.0.abs() > half || q.1.abs() > half || inside(q) || dist.contains_key(&q) {
                continue;
            }
            dist.insert(q, d + 1);
            queue.push_back(q);
        }
    }
    None
}

fn lattice_word(g: &Group, p: (i64, i64)) -> Word {
    g.parse(&format!("e1^{} e2^{}", p.0, p.1)).expect("lattice word")
}

fn c7_divergence_sanity() -> Outcome {
    // Free group: complements of balls split into subtrees by prefix.
    let f2 = Arc::new(Group::new(&free_spec(2)).map_err(err)?);
    let est = Estimator::for_group(f2.clone(), Caps::default()).map_err(err)?;
    let sphere = reduced_words(&f2, 3).into_iter().filter(|w| w.len() == 3).collect::<Vec<_>>();
    let mut free_checked = 0;
    for radius in 1..=3u64 {
        for x in &sphere {
            for y in &sphere {
                let got = est.query(&AvoidanceQuery::around_identity(x.clone(), y.clone(), radius)).map_err(err)?;
                let k = radius as usize;
                let same_branch = x.letters()[..k] == y.letters()[..k];
                let want = if same_branch {
                    Avoidant::Finite(x.invert().concat(y).map_err(err)?.len() as u64)
                } else {
                    Avoidant::Infinite
                };
                ensure(got == want, || format!("F2 {x} -> {y} at {radius}: {got:?} vs {want:?}"))?;
                free_checked += 1;
            }
        }
    }
    // ℤ²: exact agreement with a brute-force lattice search.
    let z2 = Arc::new(Group::new(&lattice_spec(2)).map_err(err)?);
    let est = Estimator::for_group(z2.clone(), Caps::default()).map_err(err)?;
    let mut lattice_checked = 0;
    for r in 1..=5i64 {
        let pts: Vec<(i64, i64)> =
            (-r..=r).flat_map(|x| (-r..=r).map(move |y| (x, y))).filter(|p| p.0.abs() + p.1.abs() == r).collect();
        for radius in 0..=r {
            for (i, &p) in pts.iter().enumerate() {
                for &q in &pts[i..] {
                    let q_ = AvoidanceQuery::around_identity(lattice_word(&z2, p), lattice_word(&z2, q), radius as u64);
                    let got = est.query(&q_).map_err(err)?;
                    let want = lattice_bfs(p, q, radius, 3 * r + 2).map_or(Avoidant::Infinite, Avoidant::Finite);
                    ensure(got == want, || format!("Z2 {p:?} -> {q:?} at {radius}: {got:?} vs {want:?}"))?;
                    lattice_checked += 1;
                }
            }
        }
    }
    // δ_ρ is monotone in ρ wherever every pair resolved.
    let mut rows = 0;
    for (spec, rmax) in [(lattice_spec(2), 4usize), (lattice_spec(3), 2)] {
        let est = Estimator::for_group(Arc::new(Group::new(&spec).map_err(err)?), Caps::default()).map_err(err)?;
        for r in 1..=rmax {
            let mut prev = 0;
            for rho in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let rep = delta_rho(&est, r, rho).map_err(err)?;
                if rep.unknown_pairs > 0 {
                    continue;
                }
                let v = rep.value.unwrap_or(u64::MAX);
                ensure(v >= prev, || format!("{} r = {r}: δ drops to {v} at ρ = {rho}", spec.name))?;
                prev = v;
                rows += 1;
            }
        }
    }
    Ok(format!("{free_checked} free queries, {lattice_checked} lattice queries, {rows} monotone δ rows"))
}

fn c8_inclusion() -> Outcome {
    let mut relators = 0;
    for m in 1..=4 {
        let g = build_g_phi(m, 1).map_err(err)?;
        let b = build_b(m, 1).map_err(err)?;
        let inc = inclusion_map(&g, &b).map_err(err)?;
        let bg = Group::new(&b).map_err(err)?;
        for r in g.relator_words().map_err(err)? {
            let img = inc.apply(&r).map_err(err)?;
            ensure(bg.is_identity(&img).map_err(err)?, || format!("m = {m}: relator {r} maps to {img}"))?;
            relators += 1;
        }
    }
    let g = build_g_phi(1, 1).map_err(err)?;
    let b = build_b(1, 1).map_err(err)?;
    let inc = inclusion_map(&g, &b).map_err(err)?;
    let (gg, bg) = (Group::new(&g).map_err(err)?, Group::new(&b).map_err(err)?);
    let letters = gg.alphabet().letters();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sampled = 0;
    while sampled < 100 {
        let len = rng.gen_range(1..=3);
        let w = Word::reduce(gg.alphabet(), (0..len).map(|_| letters[rng.gen_range(0..letters.len())])).map_err(err)?;
        if w.is_empty() || gg.is_identity(&w).map_err(err)? {
            continue;
        }
        let img = inc.apply(&w).map_err(err)?;
        ensure(!bg.is_identity(&img).map_err(err)?, || format!("{w} dies in B1"))?;
        sampled += 1;
    }
    Ok(format!("{relators} relators over m = 1..=4, {sampled} sampled elements stay nontrivial"))
}

fn c9_exponents() -> Outcome {
    let silver = 1.0 + 2f64.sqrt();
    for m in 2..=50u32 {
        for n in 1..=50u32 {
            let rep = snowflake_exponent::<f64>(m, n);
            let beta = n as f64 * silver.ln() / (m as f64).ln();
            ensure((rep.beta - beta).abs() <= EXPONENT_TOL * beta.max(1.0), || format!("β({m},{n}) = {}", rep.beta))?;
            ensure(rep.beta_valid == (beta >= 1.0), || format!("validity of β({m},{n})"))?;
            if rep.beta_valid {
                for level in 2..=10u32 {
                    let alpha = divergence_exponent(level, rep.beta);
                    let want = level as f64 - 1.0 + 1.0 / beta;
                    ensure((alpha - want).abs() <= EXPONENT_TOL, || format!("α({level},{m},{n}) = {alpha}"))?;
                }
            }
        }
    }
    let alphas = alpha_values::<f64>(2..=10, 50, 50);
    let cells = covers(&alphas, 2.0, 10.0, CELL);
    let missed: Vec<f64> = cells.iter().filter(|(_, hit)| !hit).map(|(lo, _)| *lo).collect();
    ensure(cells.len() == 80 && missed.is_empty(), || format!("uncovered cells at {missed:?}"))?;
    Ok(format!("{} exponents cover all {} cells of [2, 10]", alphas.len(), cells.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("normal form agrees with BFS identification in G2", c1_normal_form_vs_bfs),
        ("|s_i^p s_j^q| = |p| + |q| in G3", c2_exact_length_formula),
        ("isometric embeddings F_xz < G1 < G2", c3_isometric_embeddings),
        ("fiber distortion table n <= 8", c4_distortion_table),
        ("certificate sequence n <= 25 with C = 3", c5_certificates),
        ("witness suite at r0, 2r0, 4r0", c6_witness_suite),
        ("divergence estimator sanity", c7_divergence_sanity),
        ("inclusion G_m -> B_m", c8_inclusion),
        ("exponent calculators and density", c9_exponents),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

