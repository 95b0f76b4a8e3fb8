use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use apfree::constructions::{
    amplify, bootstrap, find_amplifier, join_lemma, partition_r, pigeonhole_part, AmplifierSearch, Bootstrap,
};
use apfree::greedy::{generate_up_to, GreedyCache};
use apfree::measure::{gerver_reference, mu, parse_rational, running_mu};
use apfree::progression::{find_ap_witness, insertion_creates_ap};
use apfree::search::{max_mu_subset_with, SearchMethod, SearchOptions, SearchResult};
use apfree::seqfile::{format_sequence, read_sequence_file, SequenceFile};
use apfree::topology::{closedness_check, continuity_check, convergence_index, Convergence, DescribedSet, SetSequence};
use apfree::{Error, IntegerSet, ReciprocalSum};

use crate::output::{CliError, Format, Method, Sink, Status};
use crate::{Command, GlobalOpts};

type CmdResult = Result<Status, CliError>;

pub fn run(command: Command, g: &GlobalOpts) -> CmdResult {
    let mut sink = Sink::open(g.out.as_deref())?;
    let status = match command {
        Command::Gen { p, count, limit, with_mu, no_cache } => {
            let cache = (!no_cache).then(|| GreedyCache::new(&g.cache_dir));
            gen(&mut sink, g.format.unwrap_or(Format::Text), p, count, limit, with_mu, cache)
        }
        Command::Verify { p, file } => verify(&mut sink, fmt(g), p, &file),
        Command::Mu { file, p } => mu_report(&mut sink, fmt(g), p, &file),
        Command::Amplify { file, amplifier, p, budget } => {
            amplify_cmd(&mut sink, fmt(g), p, &file, amplifier.as_deref(), budget)
        }
        Command::Partition { file: Some(file), head, m, p, .. } => {
            let m = m.ok_or_else(|| CliError::Usage("--m is required with --file".into()))?;
            partition_file(&mut sink, fmt(g), p.unwrap_or(3), m, &file, head.as_deref())
        }
        Command::Partition { file: None, head: Some(_), .. } => {
            return Err(CliError::Usage("--head requires --file".into()));
        }
        Command::Partition { file: None, head: None, m, p, count, seed } => {
            partition_random(&mut sink, fmt(g), m, p, count, seed)
        }
        Command::Search { n, p, method } => search(&mut sink, fmt(g), n, p, method, g.jobs > 1),
        Command::Converge { file, p, window, epsilon, limit } => {
            converge(&mut sink, fmt(g), &file, p, window, &epsilon, limit)
        }
        Command::Bootstrap { p, count, budget } => bootstrap_cmd(&mut sink, fmt(g), p, count, budget),
    }?;
    sink.finish()?;
    Ok(status)
}

fn fmt(g: &GlobalOpts) -> Format {
    g.format.unwrap_or(Format::Json)
}

fn read_file(path: &Path) -> Result<SequenceFile, CliError> {
    read_sequence_file(path).map_err(|e| CliError::io(path, e))?.map_err(|e| match e {
        Error::Parse { line, message } => CliError::Usage(format!("{}:{line}: {message}", path.display())),
        other => CliError::Domain(other),
    })
}

/// `--p` if given, else the file header; the two must agree.
fn resolve_p(flag: Option<usize>, file: &SequenceFile, path: &Path) -> Result<Option<usize>, CliError> {
    match (flag, file.p) {
        (Some(a), Some(b)) if a != b => {
            Err(CliError::Usage(format!("--p {a} contradicts p={b} in {}", path.display())))
        }
        (a, b) => Ok(a.or(b)),
    }
}

fn require_p(p: Option<usize>, path: &Path) -> Result<usize, CliError> {
    p.ok_or_else(|| CliError::Usage(format!("--p is required: {} has no p= header", path.display())))
}

fn exact_or_null(m: &ReciprocalSum) -> Value {
    m.exact_string().map_or(Value::Null, Value::String)
}

fn spaced(set: &IntegerSet) -> String {
    set.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn mu_table(sink: &mut Sink, set: &IntegerSet) -> Result<(), CliError> {
    sink.line("n,a_n,mu_approx")?;
    for (i, (a, m)) in set.iter().zip(running_mu(set)).enumerate() {
        sink.line(format_args!("{},{a},{m}", i + 1))?;
    }
    Ok(())
}

fn gen(
    sink: &mut Sink,
    format: Format,
    p: usize,
    count: Option<usize>,
    limit: Option<u64>,
    with_mu: bool,
    cache: Option<GreedyCache>,
) -> CmdResult {
    let start = Instant::now();
    let set = match (count, cache) {
        (Some(n), Some(cache)) => {
            eprintln!("generating {n} terms of S_{p} (cache {})", cache.dir().display());
            cache.generate(p, n).map_err(|e| CliError::io(&cache.path(p), e))??
        }
        (Some(n), None) => {
            eprintln!("generating {n} terms of S_{p}");
            apfree::greedy::generate(p, n)?
        }
        (None, _) => {
            let limit = limit.expect("clap enforces --count or --limit");
            eprintln!("generating S_{p} up to {limit}");
            generate_up_to(p, limit)?
        }
    };
    eprintln!("done: {} terms, largest {}, {:.2?}", set.len(), set.max(), start.elapsed());
    let m = with_mu.then(|| mu(&set));
    match format {
        Format::Text => {
            let comment = m.as_ref().map(|m| {
                format!("mu_exact={}\nmu_approx={}", m.exact_string().unwrap_or_else(|| "null".into()), m.approx())
            });
            sink.text(&format_sequence(&set, Some(p), comment.as_deref()))?;
        }
        Format::Json => {
            let mut report = json!({ "p": p, "count": set.len(), "terms": set });
            if let Some(m) = &m {
                report["mu_exact"] = exact_or_null(m);
                report["mu_approx"] = json!(m.approx());
            }
            sink.json(&report)?;
        }
        Format::Csv => mu_table(sink, &set)?,
    }
    Ok(Status::Ok)
}

fn verify(sink: &mut Sink, format: Format, p: Option<usize>, path: &Path) -> CmdResult {
    let file = read_file(path)?;
    let p = require_p(resolve_p(p, &file, path)?, path)?;
    let witness = find_ap_witness(&file.set, p)?;
    match format {
        Format::Json => sink.json(&json!({
            "p": p,
            "count": file.set.len(),
            "ap_free": witness.is_none(),
            "witness": witness,
        }))?,
        Format::Csv => {
            sink.line("p,count,ap_free,start,diff,length")?;
            let (s, d, l) = witness.map_or((String::new(), String::new(), String::new()), |w| {
                (w.start.to_string(), w.diff.to_string(), w.length.to_string())
            });
            sink.line(format_args!("{p},{},{},{s},{d},{l}", file.set.len(), witness.is_none()))?;
        }
        Format::Text => match witness {
            None => sink.line(format_args!("AP-free: {} terms, p = {p}", file.set.len()))?,
            Some(w) => {
                sink.line(format_args!("progression found: start={} diff={} length={}", w.start, w.diff, w.length))?
            }
        },
    }
    Ok(if witness.is_none() { Status::Ok } else { Status::Failed })
}

fn mu_report(sink: &mut Sink, format: Format, p: Option<usize>, path: &Path) -> CmdResult {
    let file = read_file(path)?;
    let p = resolve_p(p, &file, path)?;
    let reference = p.map(gerver_reference).transpose()?;
    let m = mu(&file.set);
    match format {
        Format::Json => sink.json(&json!({
            "count": file.set.len(),
            "mu_exact": exact_or_null(&m),
            "mu_approx": m.approx(),
            "error_bound": m.error_bound(),
            "p": p,
            "reference_p_log_p": reference,
            "log_base": "e",
        }))?,
        Format::Csv => mu_table(sink, &file.set)?,
        Format::Text => {
            sink.line(format_args!("count: {}", file.set.len()))?;
            sink.line(format_args!("mu_exact: {}", m.exact_string().unwrap_or_else(|| "(over exactness cap)".into())))?;
            sink.line(format_args!("mu_approx: {} (error bound {:e})", m.approx(), m.error_bound()))?;
            if let (Some(p), Some(r)) = (p, reference) {
                sink.line(format_args!("reference p ln p (p = {p}, natural log): {r}"))?;
            }
        }
    }
    Ok(Status::Ok)
}

fn amplify_cmd(
    sink: &mut Sink,
    format: Format,
    p: Option<usize>,
    base_path: &Path,
    amp_path: Option<&Path>,
    budget: u64,
) -> CmdResult {
    let base = read_file(base_path)?;
    let p = require_p(resolve_p(p, &base, base_path)?, base_path)?;
    let amplifier = match amp_path {
        Some(path) => {
            let file = read_file(path)?;
            resolve_p(Some(p), &file, path)?;
            file.set
        }
        None => {
            eprintln!("searching greedy prefixes up to {budget} for an amplifier with sum >= {}", 2 * base.set.max());
            match find_amplifier(p, base.set.max(), budget)? {
                AmplifierSearch::Found(e) => e,
                AmplifierSearch::Infeasible(cause) => {
                    match format {
                        Format::Json => sink.json(&json!({ "p": p, "amplified": false, "infeasible": cause }))?,
                        _ => sink.line(format_args!("no amplifier within budget {budget}: {cause}"))?,
                    }
                    return Ok(Status::Failed);
                }
            }
        }
    };
    let report = amplify(&base.set, &amplifier, p)?;
    match format {
        Format::Json => sink.json(&report)?,
        Format::Csv => {
            sink.line("p,scale,count,max,mu_base,mu_amplifier,mu_result_exact,mu_result_approx")?;
            sink.line(format_args!(
                "{p},{},{},{},{},{},{},{}",
                report.scale,
                report.result.len(),
                report.result.max(),
                report.mu_base.approx(),
                report.mu_amplifier.approx(),
                report.mu_result.exact_string().unwrap_or_default(),
                report.mu_result.approx()
            ))?;
        }
        Format::Text => {
            let comment = format!(
                "base {} amplified by {} scaled by {}\nmu_exact={}",
                report.base,
                report.amplifier,
                report.scale,
                report.mu_result.exact_string().unwrap_or_else(|| "null".into())
            );
            sink.text(&format_sequence(&report.result, Some(p), Some(&comment)))?;
        }
    }
    Ok(Status::Ok)
}

fn partition_file(sink: &mut Sink, format: Format, p: usize, m: u64, path: &Path, head: Option<&Path>) -> CmdResult {
    let r = read_file(path)?;
    resolve_p(Some(p), &r, path)?;
    let partition = partition_r(&r.set, m)?;
    let choice = pigeonhole_part(&r.set, m)?;
    let join = match head {
        Some(hp) => {
            let a1 = read_file(hp)?;
            resolve_p(Some(p), &a1, hp)?;
            Some(join_lemma(&a1.set, &r.set, m, p)?)
        }
        None => None,
    };
    match format {
        Format::Json => sink.json(&json!({
            "m": m,
            "p": p,
            "classes": partition.parts,
            "blocks": partition.block_map,
            "choice": { "j": choice.j, "mu_class": choice.mu_part, "mu_total": choice.mu_total, "mu_classes": choice.mu_parts },
            "join": join,
        }))?,
        Format::Csv => {
            sink.line("x,j,i,block_lo,block_hi")?;
            for (x, b) in &partition.block_map {
                let (lo, hi) = b.interval(m);
                sink.line(format_args!("{x},{},{},{lo},{hi}", b.j, b.i))?;
            }
        }
        Format::Text => {
            for (j, part) in (1..).zip(&partition.parts) {
                sink.line(format_args!("R_{j} = {part}"))?;
            }
            sink.line(format_args!(
                "heaviest class R_{}: mu = {} of total {}",
                choice.j,
                choice.mu_part.exact_string().unwrap_or_default(),
                choice.mu_total.exact_string().unwrap_or_default()
            ))?;
            if let Some(j) = &join {
                sink.line(format_args!("join = {} (mu = {})", j.result, j.mu_result.exact_string().unwrap_or_default()))?;
            }
        }
    }
    Ok(Status::Ok)
}

fn random_ap_free(rng: &mut ChaCha8Rng, lo: u64, hi: u64, attempts: usize, p: usize) -> Result<IntegerSet, CliError> {
    let mut s = IntegerSet::empty();
    for _ in 0..attempts {
        let x = rng.gen_range(lo..=hi);
        if !s.contains(x) && !insertion_creates_ap(&s, x, p)? {
            s = s.union(&IntegerSet::new(vec![x])?);
        }
    }
    Ok(s)
}

#[derive(Serialize)]
struct Instance {
    instance: usize,
    m: u64,
    p: usize,
    head: IntegerSet,
    tail_len: usize,
    class: u8,
    mu_class: Option<String>,
    mu_tail: Option<String>,
    join_len: Option<usize>,
    error: Option<String>,
}

/// Seeded random head/tail instances pushed through partition and join.
fn partition_random(
    sink: &mut Sink,
    format: Format,
    m: Option<u64>,
    p: Option<usize>,
    count: usize,
    seed: u64,
) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    eprintln!("running {count} random partition instances (seed {seed})");
    if format == Format::Csv {
        sink.line("instance,m,p,head_len,tail_len,class,mu_class,mu_tail,join_len,error")?;
    }
    let mut violations = 0usize;
    for instance in 0..count {
        let m = m.unwrap_or_else(|| rng.gen_range(1..=50));
        let p = p.unwrap_or_else(|| rng.gen_range(3..=5));
        let head = random_ap_free(&mut rng, 1, m, 8, p)?;
        let attempts = rng.gen_range(1..80);
        let tail = random_ap_free(&mut rng, 2 * m, 200 * m, attempts, p)?;
        let choice = pigeonhole_part(&tail, m)?;
        let (join_len, error) = match join_lemma(&head, &tail, m, p) {
            Ok(j) => (Some(j.result.len()), None),
            Err(e) => {
                violations += 1;
                (None, Some(e.to_string()))
            }
        };
        let row = Instance {
            instance,
            m,
            p,
            tail_len: tail.len(),
            head,
            class: choice.j,
            mu_class: choice.mu_part.exact_string(),
            mu_tail: choice.mu_total.exact_string(),
            join_len,
            error,
        };
        match format {
            Format::Json => sink.json(&row)?,
            Format::Csv => sink.line(format_args!(
                "{},{},{},{},{},{},{},{},{},{}",
                row.instance,
                row.m,
                row.p,
                row.head.len(),
                row.tail_len,
                row.class,
                row.mu_class.unwrap_or_default(),
                row.mu_tail.unwrap_or_default(),
                row.join_len.map(|l| l.to_string()).unwrap_or_default(),
                row.error.unwrap_or_default().replace(',', ";")
            ))?,
            Format::Text => {}
        }
    }
    match format {
        Format::Json => sink.json(&json!({ "instances": count, "seed": seed, "violations": violations }))?,
        Format::Text => sink.line(format_args!("{count} instances (seed {seed}), {violations} violations"))?,
        Format::Csv => {}
    }
    Ok(if violations == 0 { Status::Ok } else { Status::Failed })
}

fn search(sink: &mut Sink, format: Format, n: u64, p: usize, method: Method, parallel: bool) -> CmdResult {
    let method = match method {
        Method::Exhaustive => SearchMethod::Exhaustive,
        Method::Bnb => SearchMethod::BranchAndBound,
    };
    let opts = SearchOptions { parallel };
    let run = |n: u64| -> Result<(SearchResult, IntegerSet), CliError> {
        Ok((max_mu_subset_with(n, p, method, opts)?, generate_up_to(p, n)?))
    };
    let start = Instant::now();
    eprintln!("searching [1, {n}] for p = {p} ({method})");
    match format {
        Format::Json => {
            let (result, greedy) = run(n)?;
            let greedy_mu = mu(&greedy);
            let mut report = serde_json::to_value(&result).expect("serializable");
            report["greedy_set"] = json!(greedy);
            report["greedy_mu"] = json!(greedy_mu);
            report["greedy_is_optimal"] = json!(greedy_mu.exact_opt() == result.best_mu.exact_opt());
            sink.json(&report)?;
        }
        Format::Csv => {
            sink.line("n,best_mu_exact,best_mu_approx,greedy_mu_exact,greedy_mu_approx,best_set")?;
            for k in 1..=n {
                let (result, greedy) = run(k)?;
                let g = mu(&greedy);
                sink.line(format_args!(
                    "{k},{},{},{},{},{}",
                    result.best_mu.exact_string().unwrap_or_default(),
                    result.best_mu.approx(),
                    g.exact_string().unwrap_or_default(),
                    g.approx(),
                    spaced(&result.best_set)
                ))?;
            }
        }
        Format::Text => {
            let (result, greedy) = run(n)?;
            sink.line(format_args!("best set: {}", result.best_set))?;
            sink.line(format_args!(
                "best mu: {} ({})",
                result.best_mu.exact_string().unwrap_or_default(),
                result.best_mu.approx()
            ))?;
            sink.line(format_args!("greedy set: {} (mu {})", greedy, mu(&greedy).exact_string().unwrap_or_default()))?;
            sink.line(format_args!("nodes explored: {}", result.nodes_explored))?;
        }
    }
    eprintln!("done in {:.2?}", start.elapsed());
    Ok(Status::Ok)
}

/// Manifest lines: `limit <file>` once, then `member <file>` per member in
/// sequence order. Relative paths resolve against the manifest's directory.
fn read_manifest(path: &Path) -> Result<(PathBuf, Vec<PathBuf>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let bad = |line: usize, msg: &str| CliError::Usage(format!("{}:{line}: {msg}", path.display()));
    let mut limit = None;
    let mut members = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (kind, file) =
            line.split_once(char::is_whitespace).ok_or_else(|| bad(i + 1, "expected `<kind> <file>`"))?;
        let file = base.join(file.trim());
        match kind {
            "limit" if limit.is_none() => limit = Some(file),
            "limit" => return Err(bad(i + 1, "more than one limit")),
            "member" => members.push(file),
            other => return Err(bad(i + 1, &format!("unknown entry `{other}`"))),
        }
    }
    let limit = limit.ok_or_else(|| bad(0, "no limit entry"))?;
    if members.is_empty() {
        return Err(bad(0, "no member entries"));
    }
    Ok((limit, members))
}

fn converge(
    sink: &mut Sink,
    format: Format,
    path: &Path,
    p: Option<usize>,
    window: u64,
    epsilon: &str,
    horizon: Option<u64>,
) -> CmdResult {
    let eps = parse_rational(epsilon)
        .filter(Signed::is_positive)
        .ok_or_else(|| CliError::Usage(format!("--epsilon {epsilon}: expected a positive fraction or decimal")))?;
    let (limit_path, member_paths) = read_manifest(path)?;
    let limit_file = read_file(&limit_path)?;
    let p = require_p(resolve_p(p, &limit_file, &limit_path)?, &limit_path)?;
    let describe = |set: &IntegerSet| match horizon {
        Some(h) => DescribedSet::truncated(set, h),
        None => DescribedSet::finite(set.clone()),
    };
    let mut reach = limit_file.set.max();
    let mut members = Vec::with_capacity(member_paths.len());
    for mp in &member_paths {
        let f = read_file(mp)?;
        reach = reach.max(f.set.max());
        members.push(describe(&f.set));
    }
    let limit = describe(&limit_file.set);
    let seq = SetSequence::new(members);
    let horizon = horizon.unwrap_or(reach);
    eprintln!("checking {} members against {} up to {horizon}", seq.len(), limit_path.display());

    let convergence = convergence_index(&seq, &limit, window)?;
    let closedness = closedness_check(&seq, &limit, p, window);
    let continuity = continuity_check(&seq, &limit, &eps, horizon);
    let passed = matches!(convergence, Convergence::Converged { .. })
        && matches!(&closedness, Ok(c) if c.passed)
        && matches!(&continuity, Ok(c) if c.within_epsilon && c.bound_holds);
    let as_value = |r: Result<Value, Error>| r.unwrap_or_else(|e| json!({ "error": e.to_string() }));
    let report = json!({
        "p": p,
        "members": seq.len(),
        "window": window,
        "horizon": horizon,
        "epsilon": apfree::measure::format_rational(&eps),
        "convergence": convergence,
        "closedness": as_value(closedness.map(|c| serde_json::to_value(c).expect("serializable"))),
        "continuity": as_value(continuity.map(|c| serde_json::to_value(c).expect("serializable"))),
        "passed": passed,
    });
    match format {
        Format::Json => sink.json(&report)?,
        Format::Csv => {
            sink.line("p,members,window,horizon,epsilon,passed")?;
            sink.line(format_args!(
                "{p},{},{window},{horizon},{},{passed}",
                seq.len(),
                report["epsilon"].as_str().unwrap_or("")
            ))?;
        }
        Format::Text => sink.text(&serde_json::to_string_pretty(&report).expect("serializable"))?,
    }
    if format == Format::Text {
        sink.line("")?;
    }
    Ok(if passed { Status::Ok } else { Status::Failed })
}

fn bootstrap_cmd(sink: &mut Sink, format: Format, p: usize, steps: usize, budget: u64) -> CmdResult {
    eprintln!("bootstrapping p = {p}: up to {steps} steps, budget {budget}");
    let run: Bootstrap = bootstrap(p, steps, budget)?;
    match format {
        Format::Json => sink.json(&run)?,
        Format::Csv => {
            sink.line("step,count,max,mu_exact,mu_approx")?;
            sink.line(format_args!(
                "0,{},{},{},{}",
                run.initial.len(),
                run.initial.max(),
                exact_str(&run.mu_initial),
                run.mu_initial.approx()
            ))?;
            for (i, s) in run.steps.iter().enumerate() {
                sink.line(format_args!(
                    "{},{},{},{},{}",
                    i + 1,
                    s.result.len(),
                    s.result.max(),
                    exact_str(&s.mu_result),
                    s.mu_result.approx()
                ))?;
            }
        }
        Format::Text => {
            sink.line(format_args!("A_0 = {} (mu {})", run.initial, exact_str(&run.mu_initial)))?;
            for (i, s) in run.steps.iter().enumerate() {
                sink.line(format_args!(
                    "A_{} = {} (amplifier {}, scale {}, mu {})",
                    i + 1,
                    s.result,
                    s.amplifier,
                    s.scale,
                    exact_str(&s.mu_result)
                ))?;
            }
            match &run.halted {
                Some(h) => sink.line(format_args!(
                    "halted at step {}: needs an amplifier with sum >= {} inside [1, {budget}]; {}",
                    h.step, h.required, h.cause
                ))?,
                None => sink.line(format_args!("completed {steps} steps"))?,
            }
        }
    }
    Ok(Status::Ok)
}

fn exact_str(m: &ReciprocalSum) -> String {
    m.exact_string().unwrap_or_else(|| format!("~{}", m.approx()))
}
