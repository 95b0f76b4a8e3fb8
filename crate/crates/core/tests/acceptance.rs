//! End-to-end acceptance checks. Runs as a plain binary so that the
//! one-line verdict for each criterion is always printed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use apfree::constructions::{amplify, bootstrap, join_lemma, partition_r, pigeonhole_part, Infeasibility};
use apfree::greedy::{generate, GreedyGenerator};
use apfree::measure::{exact_reciprocal_sum, mu};
use apfree::progression::{extension_creates_ap, find_ap_witness, insertion_creates_ap, is_ap_free};
use apfree::search::{max_mu_subset, SearchMethod};
use apfree::topology::{closedness_check, continuity_check, convergence_index, Convergence, DescribedSet, SetSequence};
use apfree::{Error, IntegerSet};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn set(v: &[u64]) -> IntegerSet {
    IntegerSet::new(v.to_vec()).unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn within(elapsed: Duration, limit_secs: u64, what: &str) -> Result<(), String> {
    if elapsed > Duration::from_secs(limit_secs) {
        return Err(format!("{what} took {elapsed:.2?}, limit {limit_secs} s"));
    }
    Ok(())
}

fn greedy_cross_oracle() -> Outcome {
    let start = Instant::now();
    let s = generate(3, 200).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let oracle = common::brute_force_greedy(3, 200);
    ensure!(s.as_slice() == oracle.as_slice(), "generator disagrees with brute-force greedy");
    for (n, &a) in (1..).zip(s.as_slice()) {
        ensure!(a == common::base_three_term(n), "term {n} = {a}, base-3 formula gives {}", common::base_three_term(n));
    }
    within(elapsed, 1, "generate(3, 200)")?;
    Ok(format!("200 terms match oracle and base-3 formula in {elapsed:.2?}"))
}

fn self_consistency() -> Outcome {
    let start = Instant::now();
    for p in 3..=5 {
        let s = generate(p, 500).map_err(|e| e.to_string())?;
        if let Some(w) = find_ap_witness(&s, p).map_err(|e| e.to_string())? {
            return Err(format!("p = {p}: 500-term prefix contains {w}"));
        }
        let terms = s.as_slice();
        for i in 0..100 {
            let below = s.prefix(i);
            let lo = if i == 0 { 1 } else { terms[i - 1] + 1 };
            for y in lo..terms[i] {
                ensure!(
                    extension_creates_ap(&below, y, p).map_err(|e| e.to_string())?,
                    "p = {p}: skipped {y} could have been added after {} terms",
                    i
                );
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 10, "p = 3, 4, 5 scan")?;
    Ok(format!("500-term prefixes AP-free and 100-term prefixes minimal in {elapsed:.2?}"))
}

fn measure_exactness(rng: &mut ChaCha8Rng) -> Outcome {
    let s = generate(3, 1000).map_err(|e| e.to_string())?;
    let m = mu(&s);
    let exact = m.exact().map_err(|e| e.to_string())?.to_f64().ok_or("exact value not representable")?;
    let rel = (m.approx() - exact).abs() / exact;
    ensure!(rel <= 1e-9, "relative gap {rel:e} between exact and compensated sums");

    for _ in 0..100 {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for x in 1..=rng.gen_range(1..400u64) {
            match rng.gen_range(0..3) {
                0 => a.push(x),
                1 => b.push(x),
                _ => {}
            }
        }
        let (a, b) = (set(&a), set(&b));
        let (ma, mb, mu_union) = (mu(&a), mu(&b), mu(&a.union(&b)));
        ensure!(
            mu_union.exact().unwrap() == &(ma.exact().unwrap() + mb.exact().unwrap()),
            "additivity fails for {a} and {b}"
        );
        let c: u64 = rng.gen_range(1..1000);
        let scaled = mu(&a.affine(c, 0).unwrap());
        ensure!(
            scaled.exact().unwrap() * BigRational::from_integer(c.into()) == *ma.exact().unwrap(),
            "scaling by {c} fails for {a}"
        );
    }
    Ok(format!("relative gap {rel:.1e} on 1000 terms; 100 additivity/scaling pairs exact"))
}

fn amplifier_reproduction() -> Outcome {
    let report = amplify(&set(&[1]), &set(&[1, 2, 4, 5, 10]), 3).map_err(|e| e.to_string())?;
    ensure!(report.result == set(&[1, 2, 4, 8, 10, 20]), "result {}", report.result);
    let m = report.mu_result.exact().map_err(|e| e.to_string())?.clone();
    ensure!(m == rat(81, 40), "μ = {m}");
    ensure!(m >= rat(2, 1), "μ below 2");
    ensure!(!common::has_ap(report.result.as_slice(), 3), "result contains a 3-AP");
    Ok(format!("{} with μ = {m}", report.result))
}

fn bootstrap_halting() -> Outcome {
    let start = Instant::now();
    let run = bootstrap(3, 2, 10_000_000).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(run.steps.len() == 1, "{} steps completed", run.steps.len());
    let halt = run.halted.as_ref().ok_or("run did not halt")?;
    ensure!(halt.step == 2, "halted at step {}", halt.step);
    let Infeasibility::HarmonicCeiling { ceiling } = &halt.cause else {
        return Err(format!("halted without a ceiling certificate: {}", halt.cause));
    };
    ensure!(ceiling.upper_bound < 40.0, "H bound {} not below 40", ceiling.upper_bound);
    ensure!((halt.required as f64) > ceiling.upper_bound, "requirement {} is within reach", halt.required);
    within(elapsed, 5, "bootstrap")?;
    Ok(format!(
        "step 1 -> {}; step 2 needs μ >= {} but H_{{10^7}} <= {:.4} < 40 ({elapsed:.2?})",
        run.steps[0].result, halt.required, ceiling.upper_bound
    ))
}

fn random_ap_free(rng: &mut ChaCha8Rng, lo: u64, hi: u64, attempts: usize, p: usize) -> IntegerSet {
    let mut s = IntegerSet::empty();
    for _ in 0..attempts {
        let x = rng.gen_range(lo..=hi);
        if !s.contains(x) && !insertion_creates_ap(&s, x, p).unwrap() {
            s = s.union(&set(&[x]));
        }
    }
    s
}

fn partition_suite(rng: &mut ChaCha8Rng) -> Outcome {
    let mut sizes = 0usize;
    for instance in 0..1000 {
        let m: u64 = rng.gen_range(1..=50);
        let p: usize = rng.gen_range(3..=5);
        let a1 = random_ap_free(rng, 1, m, 8, p);
        let attempts = rng.gen_range(1..80);
        let r = random_ap_free(rng, 2 * m, 200 * m, attempts, p);
        sizes += r.len();
        ensure!(!common::has_ap(r.as_slice(), p), "instance {instance}: generated R has an AP");

        let part = partition_r(&r, m).map_err(|e| format!("instance {instance}: {e}"))?;
        for &(x, b) in &part.block_map {
            let (lo, hi) = b.interval(m);
            ensure!(lo <= x as u128 && (x as u128) < hi, "instance {instance}: {x} outside its block");
            ensure!(part.part(b.j).contains(x), "instance {instance}: {x} not in class {}", b.j);
        }
        ensure!(part.block_map.len() == r.len(), "instance {instance}: block map incomplete");
        ensure!(part.reassemble() == r, "instance {instance}: classes do not reassemble R");
        let total: usize = part.parts.iter().map(IntegerSet::len).sum();
        ensure!(total == r.len(), "instance {instance}: classes overlap");

        let choice = pigeonhole_part(&r, m).map_err(|e| e.to_string())?;
        let mu_r = common::reciprocal_sum(r.as_slice());
        ensure!(
            common::reciprocal_sum(choice.part.as_slice()) * BigRational::from_integer(4.into()) >= mu_r,
            "instance {instance}: chosen class below μ(R)/4"
        );

        match join_lemma(&a1, &r, m, p) {
            Ok(j) => ensure!(!common::has_ap(j.result.as_slice(), p), "instance {instance}: join has an AP"),
            Err(e @ Error::ClaimViolated { .. }) => return Err(format!("instance {instance}: {e}")),
            Err(e) => return Err(format!("instance {instance}: unexpected {e}")),
        }
    }
    Ok(format!("1000 instances ({sizes} elements of R in total), no violations"))
}

fn search_equivalence() -> Outcome {
    let start = Instant::now();
    for p in [3, 4] {
        for n in 1..=18 {
            let ex = max_mu_subset(n, p, SearchMethod::Exhaustive).map_err(|e| e.to_string())?;
            let bb = max_mu_subset(n, p, SearchMethod::BranchAndBound).map_err(|e| e.to_string())?;
            ensure!(ex.best_set == bb.best_set, "N = {n}, p = {p}: {} vs {}", ex.best_set, bb.best_set);
            ensure!(ex.best_mu.exact().unwrap() == bb.best_mu.exact().unwrap(), "N = {n}, p = {p}: μ differs");
            if n <= 12 {
                let (oracle_set, oracle_mu) = common::best_subset(n, p);
                ensure!(ex.best_set.as_slice() == oracle_set.as_slice(), "N = {n}, p = {p}: oracle disagrees");
                ensure!(ex.best_mu.exact().unwrap() == &oracle_mu, "N = {n}, p = {p}: oracle μ disagrees");
            }
        }
    }
    let spot = max_mu_subset(5, 3, SearchMethod::BranchAndBound).map_err(|e| e.to_string())?;
    ensure!(spot.best_set == set(&[1, 2, 4, 5]), "(5, 3) gives {}", spot.best_set);
    ensure!(spot.best_mu.exact().unwrap() == &rat(39, 20), "(5, 3) μ = {:?}", spot.best_mu.exact_string());
    let elapsed = start.elapsed();
    within(elapsed, 60, "search sweep")?;
    Ok(format!("N <= 18, p in {{3,4}} agree; (5,3) -> {{1,2,4,5}}, 39/20 ({elapsed:.2?})"))
}

fn topology_checks() -> Outcome {
    let a = generate(3, 100).map_err(|e| e.to_string())?;
    let limit = DescribedSet::finite(a.clone());
    let seq = SetSequence::truncations(&a, a.max());
    for k in [5, 14, 50] {
        match convergence_index(&seq, &limit, k).map_err(|e| e.to_string())? {
            Convergence::Converged { n_k } => ensure!(n_k as u64 <= k, "n_{k} = {n_k}"),
            Convergence::NotConvergedAtHorizon => return Err(format!("no convergence at k = {k}")),
        }
    }
    let closed = closedness_check(&seq, &limit, 3, 30).map_err(|e| e.to_string())?;
    ensure!(closed.passed, "closedness failed: {:?}", closed.witness);

    let eps = rat(1, 10);
    let report = continuity_check(&seq, &limit, &eps, a.max()).map_err(|e| e.to_string())?;
    ensure!(report.within_epsilon && report.max_deviation < eps, "max deviation {}", report.max_deviation);
    ensure!(report.bound_holds, "two-tail bound fails");
    // recompute the deviation independently over every member past N_0
    let mu_a = common::reciprocal_sum(a.as_slice());
    let mut worst = BigRational::zero();
    for n in report.big_n0 as u64..=a.max() {
        let an: Vec<u64> = a.iter().filter(|&x| x <= n).collect();
        let dev = (common::reciprocal_sum(&an) - &mu_a).abs();
        ensure!(dev <= report.two_tail_bound, "A_{n} deviates by {dev}, beyond the two-tail bound");
        worst = worst.max(dev);
    }
    ensure!(worst == report.max_deviation, "reported deviation {} vs recomputed {worst}", report.max_deviation);
    Ok(format!(
        "n_k <= k at 5/14/50; closed at window 30; N_0 = {}, max deviation {:.5} < 0.1",
        report.big_n0,
        report.max_deviation.to_f64().unwrap_or(f64::NAN)
    ))
}

fn performance_floor() -> Outcome {
    let start = Instant::now();
    let mut g = GreedyGenerator::new(3).map_err(|e| e.to_string())?;
    for _ in 0..100_000 {
        g.next_term().map_err(|e| e.to_string())?;
    }
    let s = g.terms();
    let elapsed = start.elapsed();
    ensure!(s.len() == 100_000, "{} terms", s.len());
    ensure!(s.max() == common::base_three_term(100_000), "last term {}", s.max());
    // membership map plus sieve, each a bitmap over at most twice the largest term
    let bits = g.allocated_bits();
    ensure!(bits <= 4 * s.max() + 1024, "{bits} bits allocated for largest term {}", s.max());
    ensure!(is_ap_free(&s.prefix(2000), 3).unwrap(), "prefix contains a 3-AP");
    ensure!(exact_reciprocal_sum(&s.as_slice()[..10]) > BigRational::zero(), "degenerate sum");
    within(elapsed, 30, "generate(3, 10^5)")?;
    Ok(format!(
        "10^5 terms up to {} in {elapsed:.2?}, {:.1} MiB of bitmaps",
        s.max(),
        bits as f64 / 8.0 / (1 << 20) as f64
    ))
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a9f3);
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id} [{tag}] {name}: {detail}");
        results.push((id, name, outcome));
    };
    run(1, "greedy cross-oracle", &mut greedy_cross_oracle);
    run(2, "greedy self-consistency", &mut self_consistency);
    let mut r3 = ChaCha8Rng::seed_from_u64(rng.gen());
    run(3, "measure exactness", &mut || measure_exactness(&mut r3));
    run(4, "amplifier reproduction", &mut amplifier_reproduction);
    run(5, "bootstrap halting certificate", &mut bootstrap_halting);
    let mut r6 = ChaCha8Rng::seed_from_u64(rng.gen());
    run(6, "partition and join suite", &mut || partition_suite(&mut r6));
    run(7, "search oracle equivalence", &mut search_equivalence);
    run(8, "topology finite-scale checks", &mut topology_checks);
    run(9, "performance floor", &mut performance_floor);

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
