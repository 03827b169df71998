//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

use std::process::ExitCode;
use std::time::Instant;

use hfold_core::bounds::main_bound;
use hfold_core::structure::{build_extremal, union_cardinality, ExtremalExtras, ExtremalKind};
use hfold_core::subseq::{
    closed_form_prediction, is_dilated_interval, subsequence_sum_set, SubseqClaim,
};
use hfold_core::sumset::capacity;
use hfold_core::verify::{run_campaign, Check, GridConfig, Outcome, Verdict};
use hfold_core::{
    brute_force_sumset, sumset_extrema, ClaimKind, FoldParams, HSpec, IntSet, RepSequence,
    SumsetTable,
};

type CriterionResult = Result<String, String>;
type Criterion = (&'static str, fn() -> CriterionResult);

/// Calls `f` on every `choose`-subset of `lo..=hi`, in lexicographic order.
fn subsets(lo: i64, hi: i64, choose: usize, f: &mut dyn FnMut(&[i64])) {
    fn go(next: i64, hi: i64, left: usize, cur: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
        if left == 0 {
            f(cur);
            return;
        }
        let mut x = next;
        while x + left as i64 - 1 <= hi {
            cur.push(x);
            go(x + 1, hi, left - 1, cur, f);
            cur.pop();
            x += 1;
        }
    }
    go(lo, hi, choose, &mut Vec::new(), f);
}

fn sets(lo: i64, hi: i64, k: usize) -> Vec<IntSet> {
    let mut out = Vec::new();
    subsets(lo, hi, k, &mut |s| {
        out.push(IntSet::new(s.iter().copied()).unwrap())
    });
    out
}

fn h_sets(lo: u32, hi: u32, t: usize) -> Vec<HSpec> {
    let mut out = Vec::new();
    subsets(lo as i64, hi as i64, t, &mut |s| {
        out.push(HSpec::new(s.iter().map(|&h| h as u32)).unwrap())
    });
    out
}

fn workers() -> usize {
    std::thread::available_parallelism()
        .map_or(2, |n| n.get())
        .max(2)
}

fn oracle_equivalence() -> CriterionResult {
    let (mut checked, mut mismatches) = (0u64, Vec::new());
    for k in 2..=4 {
        for a in sets(1, 9, k) {
            for r in 1..=3u32 {
                let top = capacity(k, r) as u32;
                let table = SumsetTable::build(&a, r, top).map_err(|e| e.to_string())?;
                for h in 0..=top {
                    let oracle = brute_force_sumset(&a, FoldParams::new(h, r).unwrap())
                        .map_err(|e| e.to_string())?;
                    checked += 1;
                    if table.layer(h) != oracle {
                        mismatches.push(format!("A={a} h={h} r={r}"));
                    }
                }
            }
        }
    }
    if mismatches.is_empty() {
        Ok(format!("{checked} (A, h, r) triples agree"))
    } else {
        Err(format!(
            "{} mismatches, first {}",
            mismatches.len(),
            mismatches[0]
        ))
    }
}

fn main_grid(workers: usize) -> GridConfig {
    GridConfig {
        k_min: 3,
        k_max: 6,
        element_lo: 1,
        element_hi: 10,
        r_min: 1,
        r_max: 3,
        t_min: 2,
        t_max: 3,
        dedupe_dilation: true,
        checks: vec![Check::Direct],
        workers: Some(workers),
        ..Default::default()
    }
}

fn main_theorem_grid() -> CriterionResult {
    let run = run_campaign(&main_grid(workers())).map_err(|e| e.to_string())?;
    let t = &run.report.body.tallies["direct"];
    let odd_regime = run.records.iter().find(|r| {
        !matches!(
            r.regime.as_deref(),
            Some("MainTheorem") | Some("UnrestrictedHA")
        )
    });
    if let Some(r) = odd_regime {
        return Err(format!(
            "unexpected regime {:?} at A={} H={}",
            r.regime, r.set, r.hs
        ));
    }
    if t.violated == 0 && t.errors == 0 && t.inapplicable == 0 {
        Ok(format!(
            "{} instances, {} tight, 0 violations",
            t.checked, t.tight
        ))
    } else {
        Err(format!(
            "violated={} errors={} inapplicable={}",
            t.violated, t.errors, t.inapplicable
        ))
    }
}

fn tightness() -> CriterionResult {
    let kinds = [
        ExtremalKind::DirectTight,
        ExtremalKind::FullRangeTight,
        ExtremalKind::HighTight,
        ExtremalKind::ZeroDirectTight,
        ExtremalKind::ZeroFullRangeTight,
        ExtremalKind::ZeroHighTight,
    ];
    let mut n = 0;
    for kind in kinds {
        for k in 4..=8usize {
            for r in 1..=3u32 {
                let e = build_extremal(kind, k, r, &ExtremalExtras::default())
                    .map_err(|e| format!("{kind} k={k} r={r}: {e}"))?;
                let (ki, ri) = (k as i64, r as i64);
                // Closed forms restated here so a slip in the builder shows up.
                let want = match kind {
                    ExtremalKind::DirectTight => ri * ki * (ki + 1) / 2 - ri - 2,
                    ExtremalKind::FullRangeTight => ri * ki * (ki + 1) / 2,
                    ExtremalKind::HighTight => ki * ri + 1,
                    ExtremalKind::ZeroDirectTight => ri * ki * (ki - 1) / 2 - ri - 1,
                    ExtremalKind::ZeroFullRangeTight => ri * ki * (ki - 1) / 2 + 1,
                    _ => (2 * ki - 3) * ri + 1,
                };
                let got = union_cardinality(&e.set, &e.hs, r).map_err(|e| e.to_string())? as i64;
                if got != want || e.expected != want {
                    return Err(format!(
                        "{kind} k={k} r={r}: enumerated {got}, builder {}, closed form {want}",
                        e.expected
                    ));
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} constructions exact"))
}

fn inverse_main() -> CriterionResult {
    let cfg = GridConfig {
        k_min: 6,
        k_max: 6,
        element_lo: 1,
        element_hi: 12,
        r_min: 1,
        r_max: 2,
        t_min: 2,
        t_max: 2,
        dedupe_dilation: true,
        checks: vec![Check::Inverse(ClaimKind::Main)],
        workers: Some(workers()),
        ..Default::default()
    };
    let run = run_campaign(&cfg).map_err(|e| e.to_string())?;
    let t = &run.report.body.tallies["inverse:main"];
    if t.conclusion_violated == 0 && t.violated == 0 && t.errors == 0 {
        Ok(format!(
            "{} instances, {} equality instances, all with AP structure",
            t.checked, t.conclusion_held
        ))
    } else {
        Err(format!(
            "conclusion violated {} times, bound violated {}, errors {}",
            t.conclusion_violated, t.violated, t.errors
        ))
    }
}

fn reductions() -> CriterionResult {
    let mut n = 0;
    for t in 2..=4usize {
        for hs in h_sets(1, 12, t) {
            let h = hs.as_slice();
            let ht = hs.max();
            for k in 3..=8usize {
                let ki = k as i64;
                let unrestricted = main_bound(k, &hs, ht).map_err(|e| e.to_string())?.value;
                let want = ht as i64 * (ki - 1) + t as i64;
                if unrestricted != want {
                    return Err(format!("r=max(H): k={k} H={hs}: {unrestricted} != {want}"));
                }
                if (ht as usize) < k {
                    let restricted = main_bound(k, &hs, 1).map_err(|e| e.to_string())?.value;
                    let mut want = t as i64;
                    let mut prev = 0i64;
                    for &hi in h {
                        want += (hi as i64 - prev) * (ki - hi as i64);
                        prev = hi as i64;
                    }
                    if restricted != want {
                        return Err(format!("r=1: k={k} H={hs}: {restricted} != {want}"));
                    }
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} (k, H) pairs reduce exactly"))
}

fn structural() -> CriterionResult {
    let mut n = 0u64;
    for k in 2..=4 {
        for a in sets(1, 9, k) {
            for r in 1..=3u32 {
                let top = capacity(k, r) as u32;
                let table = SumsetTable::build(&a, r, top).map_err(|e| e.to_string())?;
                for c in [2i64, 3] {
                    let dilated = SumsetTable::build(&a.dilate(c).unwrap(), r, top).unwrap();
                    for h in 0..=top {
                        let scaled: Vec<i64> = table.layer(h).iter().map(|x| x * c).collect();
                        if dilated.layer(h) != scaled {
                            return Err(format!("dilation c={c} A={a} h={h} r={r}"));
                        }
                    }
                }
                for h in 0..=top {
                    if table.layer_len(h) != table.layer_len(top - h) {
                        return Err(format!("complement A={a} h={h} r={r}"));
                    }
                    let layer = table.layer(h);
                    let (lo, hi) = sumset_extrema(&a, FoldParams::new(h, r).unwrap())
                        .map_err(|e| e.to_string())?;
                    if layer.first() != Some(&lo) || layer.last() != Some(&hi) {
                        return Err(format!("extrema A={a} h={h} r={r}: ({lo}, {hi})"));
                    }
                    n += 1;
                }
            }
        }
    }
    Ok(format!(
        "{n} layers: symmetric, dilation-equivariant, extrema attained"
    ))
}

fn non_ap_gap() -> CriterionResult {
    let mut n = 0;
    for k in 3..=5usize {
        for a in sets(1, 9, k) {
            for r in 1..=3u32 {
                let top = k as u32 * r;
                for hs in [[1, top], [top - 1, top]] {
                    let hs = HSpec::new(hs).unwrap();
                    let got = union_cardinality(&a, &hs, r).map_err(|e| e.to_string())?;
                    if got != k as u64 + 1 {
                        return Err(format!("A={a} H={hs} r={r}: {got} != {}", k + 1));
                    }
                    n += 1;
                }
            }
        }
    }
    Ok(format!("{n} instances equal k+1"))
}

fn zero_main_campaign() -> CriterionResult {
    let cfg = GridConfig {
        k_min: 4,
        k_max: 7,
        element_lo: 1,
        element_hi: 10,
        r_min: 1,
        r_max: 3,
        t_min: 2,
        t_max: 2,
        h_hi_k_shift: -2,
        h_hi_offset: -1,
        contains_zero: true,
        checks: vec![Check::Direct],
        workers: Some(workers()),
        ..Default::default()
    };
    let run = run_campaign(&cfg).map_err(|e| e.to_string())?;
    let body = &run.report.body;
    if body.instances_checked as usize != run.records.len() {
        return Err("some instances have no status".into());
    }
    let target = IntSet::interval(0, 5).unwrap();
    let flagged = body
        .counterexamples
        .iter()
        .find(|c| c.set == target && c.hs.as_slice() == [3, 4] && c.r == 2);
    match flagged {
        Some(c) if c.formula == Some(19) && c.enumerated == Some(18) && c.verdict == Verdict::Violated => {
            Ok(format!(
                "{} instances reported ({:?}); {} discrepancies incl. A=[0,5] H={{3,4}} r=2: 19 vs 18",
                body.instances_checked,
                body.outcome,
                body.counterexamples.len()
            ))
        }
        Some(c) => Err(format!("flagged with formula {:?}, enumerated {:?}", c.formula, c.enumerated)),
        None => Err("A=[0,5] H={3,4} r=2 not flagged".into()),
    }
}

fn subsequence_closed_forms() -> CriterionResult {
    let mut n = 0;
    for k in 3..=7usize {
        for d in 1..=3i64 {
            for zero in [false, true] {
                let base = if zero {
                    IntSet::interval(0, k as i64 - 1)
                } else {
                    IntSet::interval(1, k as i64)
                }
                .unwrap()
                .dilate(d)
                .unwrap();
                for r in 1..=3u32 {
                    let seq = RepSequence::new(base.clone(), r).unwrap();
                    for alpha in 1..=(k as u32 * r).saturating_sub(2) {
                        let got = subsequence_sum_set(&seq, alpha)
                            .map_err(|e| e.to_string())?
                            .len() as i64;
                        let want = closed_form_prediction(SubseqClaim::Tail, k, r, alpha, zero)
                            .map_err(|e| e.to_string())?
                            .value;
                        if got != want {
                            return Err(format!("{seq} alpha={alpha}: {got} != {want}"));
                        }
                        n += 1;
                    }
                }
            }
        }
    }
    // Strict inequality off the progressions, where the inverse statements apply.
    let mut strict = 0;
    let cases: [(usize, bool); 3] = [(6, false), (7, false), (7, true)];
    for (k, zero) in cases {
        let free = k - usize::from(zero);
        for a in sets(1, 9, free) {
            let base = if zero {
                IntSet::new(std::iter::once(0).chain(a.elements().iter().copied())).unwrap()
            } else {
                a
            };
            if is_dilated_interval(&base) {
                continue;
            }
            for r in 1..=3u32 {
                let seq = RepSequence::new(base.clone(), r).unwrap();
                let alphas: Vec<u32> = if k >= 7 {
                    (1..=k as u32 * r - 2).collect()
                } else {
                    vec![1]
                };
                for alpha in alphas {
                    let got = subsequence_sum_set(&seq, alpha)
                        .map_err(|e| e.to_string())?
                        .len() as i64;
                    let want = closed_form_prediction(SubseqClaim::Tail, k, r, alpha, zero)
                        .map_err(|e| e.to_string())?
                        .value;
                    if got <= want {
                        return Err(format!(
                            "non-progression {seq} alpha={alpha}: {got} <= {want}"
                        ));
                    }
                    strict += 1;
                }
            }
        }
    }
    Ok(format!(
        "{n} progression cases exact, {strict} non-progression cases strict"
    ))
}

fn determinism() -> CriterionResult {
    let one = run_campaign(&main_grid(1)).map_err(|e| e.to_string())?;
    let many = run_campaign(&main_grid(workers().max(4))).map_err(|e| e.to_string())?;
    let (a, b) = (one.report.body_json(), many.report.body_json());
    let records = |c: &hfold_core::verify::Campaign| serde_json::to_string(&c.records).unwrap();
    if a != b {
        Err("report bodies differ".into())
    } else if records(&one) != records(&many) {
        Err("per-instance records differ".into())
    } else if one.report.body.outcome == Outcome::Clean {
        Ok(format!(
            "1 vs {} workers: identical report bodies and {} identical records",
            many.report.run.workers,
            one.records.len()
        ))
    } else {
        Err(format!("outcome {:?}", one.report.body.outcome))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("main bound over the exhaustive grid", main_theorem_grid),
        ("tightness constructions", tightness),
        ("inverse main claim", inverse_main),
        ("special-case reductions", reductions),
        ("structural properties", structural),
        ("non-progression extremal sets", non_ap_gap),
        ("zero-containing bound campaign", zero_main_campaign),
        ("subsequence closed forms", subsequence_closed_forms),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
