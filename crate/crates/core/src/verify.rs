//! Verification campaigns: enumerate `(A, H, r)` grids, compare every bound
//! and inverse claim against the engine, and produce deterministic reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{classify_regime, HSpec};
use crate::structure::{auto_claim, inverse_verdict, ClaimKind};
use crate::sumset::{IntSet, SumsetError, SumsetTable};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("projected {projected} instances exceeds cap {cap}")]
    CapExceeded { projected: u128, cap: u64 },
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// What to check on each instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    /// The regime's lower bound, picked by `classify_regime`.
    Direct,
    /// An inverse claim chosen from the instance's regime.
    InverseAuto,
    Inverse(ClaimKind),
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Direct => f.write_str("direct"),
            Check::InverseAuto => f.write_str("inverse"),
            Check::Inverse(c) => write!(f, "inverse:{c}"),
        }
    }
}

impl FromStr for Check {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "direct" => Ok(Check::Direct),
            "inverse" | "inverse:auto" => Ok(Check::InverseAuto),
            other => {
                let claim = other.strip_prefix("inverse:").unwrap_or(other);
                claim
                    .parse::<ClaimKind>()
                    .map(Check::Inverse)
                    .map_err(|_| VerifyError::UnknownCheck(s.to_string()))
            }
        }
    }
}

impl Serialize for Check {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Check {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_h_lo() -> u32 {
    1
}
fn default_shift() -> i64 {
    -1
}
fn default_cap() -> u64 {
    5_000_000
}
fn default_checks() -> Vec<Check> {
    vec![Check::Direct]
}

/// Campaign grid. The `H` window is `[h_lo, h_hi]` with
/// `h_hi = (k + h_hi_k_shift)·r + h_hi_offset` unless `h_hi_fixed` is set;
/// the defaults give `(k-1)r - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Window for `A` (for `A ∖ {0}` when `contains_zero`).
    pub element_lo: i64,
    pub element_hi: i64,
    pub r_min: u32,
    pub r_max: u32,
    pub t_min: usize,
    pub t_max: usize,
    #[serde(default = "default_h_lo")]
    pub h_lo: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_hi_fixed: Option<u32>,
    #[serde(default = "default_shift")]
    pub h_hi_k_shift: i64,
    #[serde(default = "default_shift")]
    pub h_hi_offset: i64,
    /// Regime families to keep; empty keeps everything.
    #[serde(default)]
    pub regimes: Vec<String>,
    #[serde(default = "default_checks")]
    pub checks: Vec<Check>,
    /// `A = {0} ∪ A'` with `A'` drawn from the window and `|A| = k`.
    #[serde(default)]
    pub contains_zero: bool,
    /// Keep only `A` whose differences from `min(A)` have gcd 1.
    #[serde(default)]
    pub dedupe_dilation: bool,
    #[serde(default = "default_cap")]
    pub instance_cap: u64,
    /// Not part of the report body: results never depend on it.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Draw this many random instances instead of enumerating (needs `seed`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<u64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            k_min: 3,
            k_max: 5,
            element_lo: 1,
            element_hi: 8,
            r_min: 1,
            r_max: 3,
            t_min: 2,
            t_max: 2,
            h_lo: 1,
            h_hi_fixed: None,
            h_hi_k_shift: -1,
            h_hi_offset: -1,
            regimes: Vec::new(),
            checks: default_checks(),
            contains_zero: false,
            dedupe_dilation: false,
            instance_cap: default_cap(),
            workers: None,
            seed: None,
            sample: None,
        }
    }
}

const REGIME_FAMILIES: [&str; 7] = [
    "MainTheorem",
    "SplitHigh",
    "AllHigh",
    "ZeroMain",
    "ZeroSplitHigh",
    "ZeroAllHigh",
    "UnrestrictedHA",
];

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self, VerifyError> {
        toml::from_str(text).map_err(|e| VerifyError::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let bad = |m: String| Err(VerifyError::InvalidConfig(m));
        if self.k_min == 0 || self.k_min > self.k_max {
            return bad(format!("k range [{}, {}]", self.k_min, self.k_max));
        }
        if self.r_min == 0 || self.r_min > self.r_max {
            return bad(format!("r range [{}, {}]", self.r_min, self.r_max));
        }
        if self.t_min == 0 || self.t_min > self.t_max {
            return bad(format!("t range [{}, {}]", self.t_min, self.t_max));
        }
        if self.h_lo == 0 {
            return bad("h_lo must be positive".into());
        }
        if self.element_lo > self.element_hi {
            return bad(format!(
                "element window [{}, {}]",
                self.element_lo, self.element_hi
            ));
        }
        if self.contains_zero && self.element_lo <= 0 {
            return bad("with contains_zero the element window must be positive".into());
        }
        let need = self.k_max - usize::from(self.contains_zero);
        let width = (self.element_hi - self.element_lo + 1) as u128;
        if width < need as u128 {
            return bad(format!("element window width {width} < {need}"));
        }
        if self.checks.is_empty() {
            return bad("no checks selected".into());
        }
        if let Some(r) = self
            .regimes
            .iter()
            .find(|r| !REGIME_FAMILIES.contains(&r.as_str()))
        {
            return bad(format!("unknown regime `{r}`"));
        }
        if self.sample.is_some() && self.seed.is_none() {
            return bad("sampled campaigns need an explicit seed".into());
        }
        Ok(())
    }

    fn h_window(&self, k: usize, r: u32) -> Option<(u32, u32)> {
        let hi = match self.h_hi_fixed {
            Some(h) => h as i64,
            None => (k as i64 + self.h_hi_k_shift) * r as i64 + self.h_hi_offset,
        };
        (hi >= self.h_lo as i64).then_some((self.h_lo, hi as u32))
    }

    fn free_elements(&self, k: usize) -> usize {
        k - usize::from(self.contains_zero)
    }
}

/// One `(A, H, r)` instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub r: u32,
    pub set: IntSet,
    pub hs: HSpec,
}

impl Instance {
    pub fn k(&self) -> usize {
        self.set.len()
    }
}

/// Instances sharing `(A, r)`, so one table serves all of their `H`.
#[derive(Clone, Debug)]
struct Group {
    first_index: u64,
    r: u32,
    set: IntSet,
    hs: Vec<HSpec>,
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Lexicographic `choose`-subsets of `lo..=hi`.
fn combinations(lo: i64, hi: i64, choose: usize, mut visit: impl FnMut(&[i64])) {
    let n = (hi - lo + 1).max(0) as usize;
    if choose > n {
        return;
    }
    let mut idx: Vec<usize> = (0..choose).collect();
    let mut buf = vec![0i64; choose];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = lo + i as i64;
        }
        visit(&buf);
        let Some(pos) = (0..choose).rev().find(|&p| idx[p] != p + n - choose) else {
            return;
        };
        idx[pos] += 1;
        for p in pos + 1..choose {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// Upper estimate of the instance count (ignores dedupe and regime filters).
pub fn projected_count(cfg: &GridConfig) -> u128 {
    if let Some(n) = cfg.sample {
        return n as u128;
    }
    let width = (cfg.element_hi - cfg.element_lo + 1).max(0) as u128;
    let mut total: u128 = 0;
    for r in cfg.r_min..=cfg.r_max {
        for k in cfg.k_min..=cfg.k_max {
            let Some((lo, hi)) = cfg.h_window(k, r) else {
                continue;
            };
            let hw = (hi - lo + 1) as u128;
            let hs: u128 = (cfg.t_min..=cfg.t_max)
                .map(|t| binomial(hw, t as u128))
                .fold(0, u128::saturating_add);
            let sets = binomial(width, cfg.free_elements(k) as u128);
            total = total.saturating_add(sets.saturating_mul(hs));
        }
    }
    total
}

fn regime_family(set: &IntSet, hs: &HSpec, r: u32) -> Option<&'static str> {
    classify_regime(set.len(), r, hs, set.contains_zero())
        .ok()
        .map(|rep| rep.regime.family())
}

fn keep(cfg: &GridConfig, set: &IntSet, hs: &HSpec, r: u32) -> bool {
    cfg.regimes.is_empty()
        || regime_family(set, hs, r).is_some_and(|f| cfg.regimes.iter().any(|x| x == f))
}

fn make_set(cfg: &GridConfig, free: &[i64]) -> IntSet {
    let mut v = free.to_vec();
    if cfg.contains_zero {
        v.insert(0, 0);
    }
    IntSet::new(v).expect("combinations are distinct and nonempty")
}

fn h_candidates(cfg: &GridConfig, k: usize, r: u32) -> Vec<HSpec> {
    let Some((lo, hi)) = cfg.h_window(k, r) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for t in cfg.t_min..=cfg.t_max {
        combinations(lo as i64, hi as i64, t, |c| {
            out.push(HSpec::new(c.iter().map(|&h| h as u32)).expect("positive h"));
        });
    }
    out
}

fn enumerate_groups(cfg: &GridConfig) -> Result<Vec<Group>, VerifyError> {
    cfg.validate()?;
    let projected = projected_count(cfg);
    if projected > cfg.instance_cap as u128 {
        return Err(VerifyError::CapExceeded {
            projected,
            cap: cfg.instance_cap,
        });
    }
    if cfg.sample.is_some() {
        return sample_groups(cfg);
    }
    let mut groups = Vec::new();
    let mut index = 0u64;
    for r in cfg.r_min..=cfg.r_max {
        for k in cfg.k_min..=cfg.k_max {
            let hcands = h_candidates(cfg, k, r);
            if hcands.is_empty() {
                continue;
            }
            combinations(
                cfg.element_lo,
                cfg.element_hi,
                cfg.free_elements(k),
                |free| {
                    let set = make_set(cfg, free);
                    if cfg.dedupe_dilation && !set.is_gcd_normalized() {
                        return;
                    }
                    let hs: Vec<HSpec> = hcands
                        .iter()
                        .filter(|h| keep(cfg, &set, h, r))
                        .cloned()
                        .collect();
                    if hs.is_empty() {
                        return;
                    }
                    let n = hs.len() as u64;
                    groups.push(Group {
                        first_index: index,
                        r,
                        set,
                        hs,
                    });
                    index += n;
                },
            );
        }
    }
    Ok(groups)
}

fn sample_groups(cfg: &GridConfig) -> Result<Vec<Group>, VerifyError> {
    let n = cfg.sample.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let width = (cfg.element_hi - cfg.element_lo + 1) as usize;
    let mut groups = Vec::new();
    let mut attempts = 0u64;
    let max_attempts = n.saturating_mul(100).max(100);
    while (groups.len() as u64) < n && attempts < max_attempts {
        attempts += 1;
        let r = rng.gen_range(cfg.r_min..=cfg.r_max);
        let k = rng.gen_range(cfg.k_min..=cfg.k_max);
        let Some((lo, hi)) = cfg.h_window(k, r) else {
            continue;
        };
        let t = rng.gen_range(cfg.t_min..=cfg.t_max);
        let hw = (hi - lo + 1) as usize;
        if t > hw {
            continue;
        }
        let free: Vec<i64> = sample_indices(&mut rng, width, cfg.free_elements(k))
            .into_iter()
            .map(|i| cfg.element_lo + i as i64)
            .collect();
        let set = make_set(cfg, &{
            let mut f = free;
            f.sort_unstable();
            f
        });
        let hs = HSpec::new(
            sample_indices(&mut rng, hw, t)
                .into_iter()
                .map(|i| lo + i as u32),
        )
        .expect("positive h");
        if cfg.dedupe_dilation && !set.is_gcd_normalized() || !keep(cfg, &set, &hs, r) {
            continue;
        }
        groups.push(Group {
            first_index: groups.len() as u64,
            r,
            set,
            hs: vec![hs],
        });
    }
    Ok(groups)
}

/// The instance stream in enumeration order: `r`, then `k`, then `A` as a
/// sorted combination, then `H` by size and lexicographically.
pub fn enumerate_instances(cfg: &GridConfig) -> Result<Vec<Instance>, VerifyError> {
    Ok(enumerate_groups(cfg)?
        .into_iter()
        .flat_map(|g| {
            let (r, set) = (g.r, g.set);
            g.hs.into_iter().map(move |hs| Instance {
                r,
                set: set.clone(),
                hs,
            })
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Bound held strictly (direct), or no equality (inverse).
    Held,
    /// Equality with the bound; for inverse checks the conclusion held too.
    Tight,
    /// Bound exceeded the true size, or an inverse conclusion failed.
    Violated,
    /// Hypotheses not met; values are still recorded.
    Inapplicable,
    Error,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Held => "held",
            Verdict::Tight => "tight",
            Verdict::Violated => "violated",
            Verdict::Inapplicable => "inapplicable",
            Verdict::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: u64,
    pub r: u32,
    pub k: usize,
    pub set: IntSet,
    pub hs: HSpec,
    pub check: Check,
    /// Regime family (direct) or the inverse claim id.
    pub regime: Option<String>,
    pub formula: Option<i64>,
    pub enumerated: Option<u64>,
    pub verdict: Verdict,
    /// Conclusion of an inverse claim when it was tested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusion_ok: Option<bool>,
    /// Unmet hypotheses, failed conclusions, or the error message.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl InstanceRecord {
    fn blank(index: u64, set: &IntSet, hs: &HSpec, r: u32, check: Check) -> Self {
        Self {
            index,
            r,
            k: set.len(),
            set: set.clone(),
            hs: hs.clone(),
            check,
            regime: None,
            formula: None,
            enumerated: None,
            verdict: Verdict::Error,
            conclusion_ok: None,
            notes: Vec::new(),
        }
    }

    pub fn instance(&self) -> Instance {
        Instance {
            r: self.r,
            set: self.set.clone(),
            hs: self.hs.clone(),
        }
    }
}

fn cardinality(
    table: Option<&SumsetTable>,
    set: &IntSet,
    hs: &HSpec,
    r: u32,
) -> Result<u64, SumsetError> {
    match table {
        Some(t) if t.max_h() >= hs.max() => Ok(t.union_len(hs.as_slice()) as u64),
        _ => Ok(SumsetTable::build(set, r, hs.max())?.union_len(hs.as_slice()) as u64),
    }
}

fn direct_with(
    index: u64,
    set: &IntSet,
    hs: &HSpec,
    r: u32,
    table: Option<&SumsetTable>,
) -> InstanceRecord {
    let mut rec = InstanceRecord::blank(index, set, hs, r, Check::Direct);
    let report = match classify_regime(set.len(), r, hs, set.contains_zero()) {
        Ok(rep) => rep,
        Err(e) => {
            rec.notes.push(e.to_string());
            return rec;
        }
    };
    rec.regime = Some(report.regime.family().to_string());
    rec.formula = Some(report.value());
    rec.notes = report.violations().to_vec();
    if set.contains_zero() {
        if !set.all_nonnegative() {
            rec.notes.push("A nonnegative".into());
        }
    } else if !set.all_positive() {
        rec.notes.push("A positive".into());
    }
    match cardinality(table, set, hs, r) {
        Ok(n) => rec.enumerated = Some(n),
        Err(e) => {
            rec.notes.push(e.to_string());
            return rec;
        }
    }
    let (n, f) = (rec.enumerated.unwrap_or(0) as i64, report.value());
    rec.verdict = if !rec.notes.is_empty() {
        Verdict::Inapplicable
    } else if n < f {
        Verdict::Violated
    } else if n == f {
        Verdict::Tight
    } else {
        Verdict::Held
    };
    rec
}

/// Compares `|H^(r)A|` with the lower bound of the instance's regime;
/// whether 0 ∈ A is read off the set.
pub fn check_direct(set: &IntSet, hs: &HSpec, r: u32) -> InstanceRecord {
    direct_with(0, set, hs, r, None)
}

/// Runs an inverse claim on one instance.
pub fn check_inverse(set: &IntSet, hs: &HSpec, r: u32, claim: Option<ClaimKind>) -> InstanceRecord {
    let check = claim.map_or(Check::InverseAuto, Check::Inverse);
    inverse_with(0, set, hs, r, check)
}

fn inverse_with(index: u64, set: &IntSet, hs: &HSpec, r: u32, check: Check) -> InstanceRecord {
    let mut rec = InstanceRecord::blank(index, set, hs, r, check);
    let claim = match check {
        Check::Inverse(c) => c,
        _ => match auto_claim(set, hs, r) {
            Ok(c) => c,
            Err(e) => {
                rec.notes.push(e.to_string());
                return rec;
            }
        },
    };
    rec.regime = Some(claim.id().to_string());
    let v = match inverse_verdict(set, hs, r, claim) {
        Ok(v) => v,
        Err(e) => {
            rec.notes.push(e.to_string());
            return rec;
        }
    };
    rec.formula = v.bound;
    rec.enumerated = Some(v.cardinality);
    rec.conclusion_ok = v.conclusion_ok;
    rec.notes = v.violations.clone();
    rec.verdict = if !v.hypotheses_ok() || v.bound.is_none() {
        if v.bound.is_none() && v.hypotheses_ok() {
            rec.notes.push("bound not evaluable".into());
        }
        Verdict::Inapplicable
    } else if (v.cardinality as i64) < v.bound.unwrap_or(i64::MIN) {
        Verdict::Violated
    } else {
        match v.conclusion_ok {
            Some(true) => Verdict::Tight,
            Some(false) => {
                rec.notes.extend(v.conclusion_failures.iter().cloned());
                Verdict::Violated
            }
            None => Verdict::Held,
        }
    };
    rec
}

/// Re-runs one check on one instance, as a campaign would.
pub fn replay(instance: &Instance, check: Check) -> InstanceRecord {
    match check {
        Check::Direct => check_direct(&instance.set, &instance.hs, instance.r),
        other => inverse_with(0, &instance.set, &instance.hs, instance.r, other),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub checked: u64,
    pub inapplicable: u64,
    pub held: u64,
    pub tight: u64,
    pub violated: u64,
    pub errors: u64,
    /// Inapplicable instances whose size still fell below the formula.
    pub below_formula_outside_hypotheses: u64,
    pub conclusion_held: u64,
    pub conclusion_violated: u64,
}

impl Tally {
    fn add(&mut self, rec: &InstanceRecord) {
        self.checked += 1;
        match rec.verdict {
            Verdict::Held => self.held += 1,
            Verdict::Tight => self.tight += 1,
            Verdict::Violated => self.violated += 1,
            Verdict::Inapplicable => self.inapplicable += 1,
            Verdict::Error => self.errors += 1,
        }
        if rec.verdict == Verdict::Inapplicable {
            if let (Some(f), Some(n)) = (rec.formula, rec.enumerated) {
                if (n as i64) < f {
                    self.below_formula_outside_hypotheses += 1;
                }
            }
        }
        match rec.conclusion_ok {
            Some(true) => self.conclusion_held += 1,
            Some(false) => self.conclusion_violated += 1,
            None => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Clean,
    Violations,
    /// Some instances errored and none violated a claim.
    PartialFailure,
}

/// Everything in a report that depends only on the config.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportBody {
    pub config: GridConfig,
    pub instances_checked: u64,
    pub outcome: Outcome,
    pub tallies: BTreeMap<String, Tally>,
    /// Violations in enumeration order.
    pub counterexamples: Vec<InstanceRecord>,
    /// Error records in enumeration order.
    pub errors: Vec<InstanceRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInfo {
    pub workers: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub body: ReportBody,
    pub run: RunInfo,
}

impl VerifyReport {
    /// Canonical bytes of the worker-independent part.
    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("report body serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, VerifyError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), VerifyError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json().as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

pub struct Campaign {
    pub report: VerifyReport,
    pub records: Vec<InstanceRecord>,
}

fn check_group(g: &Group, checks: &[Check]) -> Vec<InstanceRecord> {
    let top = g.hs.iter().map(HSpec::max).max().unwrap_or(0);
    let table = SumsetTable::build(&g.set, g.r, top);
    let mut out = Vec::with_capacity(g.hs.len() * checks.len());
    for (offset, hs) in g.hs.iter().enumerate() {
        let index = g.first_index + offset as u64;
        for &check in checks {
            let rec = match (&table, check) {
                (Err(e), _) => {
                    let mut rec = InstanceRecord::blank(index, &g.set, hs, g.r, check);
                    rec.notes.push(e.to_string());
                    rec
                }
                (Ok(t), Check::Direct) => direct_with(index, &g.set, hs, g.r, Some(t)),
                (Ok(_), other) => inverse_with(index, &g.set, hs, g.r, other),
            };
            out.push(rec);
        }
    }
    out
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Enumerates and checks the grid. Records come back in enumeration order
/// whatever the worker count.
pub fn run_campaign(cfg: &GridConfig) -> Result<Campaign, VerifyError> {
    let start = Instant::now();
    let groups = enumerate_groups(cfg)?;
    let workers = cfg.workers.unwrap_or_else(default_workers).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| VerifyError::Pool(e.to_string()))?;
    let checks = &cfg.checks;
    let nested: Vec<Vec<InstanceRecord>> =
        pool.install(|| groups.par_iter().map(|g| check_group(g, checks)).collect());
    let records: Vec<InstanceRecord> = nested.into_iter().flatten().collect();

    let mut tallies: BTreeMap<String, Tally> = BTreeMap::new();
    for rec in &records {
        tallies.entry(rec.check.to_string()).or_default().add(rec);
    }
    let counterexamples: Vec<InstanceRecord> = records
        .iter()
        .filter(|r| r.verdict == Verdict::Violated)
        .cloned()
        .collect();
    let errors: Vec<InstanceRecord> = records
        .iter()
        .filter(|r| r.verdict == Verdict::Error)
        .cloned()
        .collect();
    let outcome = if !counterexamples.is_empty() {
        Outcome::Violations
    } else if !errors.is_empty() {
        Outcome::PartialFailure
    } else {
        Outcome::Clean
    };
    let instances_checked = groups.iter().map(|g| g.hs.len() as u64).sum();
    let body = ReportBody {
        config: cfg.clone(),
        instances_checked,
        outcome,
        tallies,
        counterexamples,
        errors,
    };
    let run = RunInfo {
        workers,
        wall_ms: start.elapsed().as_millis() as u64,
    };
    Ok(Campaign {
        report: VerifyReport { body, run },
        records,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    r: u32,
    k: usize,
    #[serde(rename = "A")]
    set: String,
    #[serde(rename = "H")]
    hs: String,
    claim: String,
    regime: &'a str,
    formula: Option<i64>,
    enumerated: Option<u64>,
    verdict: String,
}

pub fn write_csv<W: std::io::Write>(records: &[InstanceRecord], out: W) -> Result<(), VerifyError> {
    let mut w = csv::Writer::from_writer(out);
    for rec in records {
        w.serialize(CsvRow {
            r: rec.r,
            k: rec.k,
            set: rec.set.to_string(),
            hs: rec.hs.to_string(),
            claim: rec.check.to_string(),
            regime: rec.regime.as_deref().unwrap_or(""),
            formula: rec.formula,
            enumerated: rec.enumerated,
            verdict: rec.verdict.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[i64]) -> IntSet {
        IntSet::new(xs.iter().copied()).unwrap()
    }

    fn hs(xs: &[u32]) -> HSpec {
        HSpec::new(xs.iter().copied()).unwrap()
    }

    #[test]
    fn small_enumeration_example() {
        let cfg = GridConfig {
            k_min: 3,
            k_max: 3,
            element_lo: 1,
            element_hi: 4,
            r_min: 1,
            r_max: 1,
            t_min: 2,
            t_max: 2,
            h_hi_fixed: Some(2),
            ..Default::default()
        };
        let inst = enumerate_instances(&cfg).unwrap();
        assert_eq!(inst.len(), 4);
        assert!(inst.iter().all(|i| i.hs == hs(&[1, 2])));
        assert_eq!(inst[0].set, set(&[1, 2, 3]));
        assert_eq!(inst[3].set, set(&[2, 3, 4]));
    }

    #[test]
    fn regime_filter_can_empty_the_stream() {
        let cfg = GridConfig {
            regimes: vec!["ZeroMain".into()],
            ..Default::default()
        };
        assert!(enumerate_instances(&cfg).unwrap().is_empty());
        let run = run_campaign(&cfg).unwrap();
        assert_eq!(run.report.body.instances_checked, 0);
        assert_eq!(run.report.body.outcome, Outcome::Clean);
    }

    #[test]
    fn dedupe_skips_dilates() {
        let cfg = GridConfig {
            k_min: 3,
            k_max: 3,
            element_lo: 1,
            element_hi: 6,
            dedupe_dilation: true,
            ..Default::default()
        };
        let sets: Vec<IntSet> = enumerate_instances(&cfg)
            .unwrap()
            .into_iter()
            .map(|i| i.set)
            .collect();
        assert!(sets.contains(&set(&[1, 2, 3])));
        assert!(!sets.contains(&set(&[2, 4, 6])));
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut seen = Vec::new();
        combinations(1, 4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        let mut n = 0;
        combinations(1, 2, 3, |_| n += 1);
        assert_eq!(n, 0);
        assert_eq!(binomial(12, 6), 924);
    }

    #[test]
    fn direct_examples() {
        let rec = check_direct(&IntSet::interval(1, 5).unwrap(), &hs(&[2, 3]), 2);
        assert_eq!((rec.formula, rec.enumerated), (Some(13), Some(13)));
        assert_eq!(rec.verdict, Verdict::Tight);
        let rec = check_direct(&set(&[1, 2, 4, 8, 16]), &hs(&[2, 3]), 2);
        assert_eq!(rec.verdict, Verdict::Held);
        assert!(rec.enumerated.unwrap() > 13);
        let rec = check_direct(&IntSet::interval(0, 5).unwrap(), &hs(&[3, 4]), 2);
        assert_eq!(rec.regime.as_deref(), Some("ZeroMain"));
        assert_eq!((rec.formula, rec.enumerated), (Some(19), Some(18)));
        assert_eq!(rec.verdict, Verdict::Violated);
    }

    #[test]
    fn inverse_examples() {
        let a = IntSet::interval(1, 6).unwrap();
        let rec = check_inverse(&a, &hs(&[2, 3]), 2, Some(ClaimKind::Main));
        assert_eq!(rec.verdict, Verdict::Tight);
        assert_eq!(rec.conclusion_ok, Some(true));
        let rec = check_inverse(&a, &hs(&[2, 4]), 2, Some(ClaimKind::Main));
        assert_ne!(rec.verdict, Verdict::Violated);
        let rec = check_inverse(
            &IntSet::interval(1, 5).unwrap(),
            &hs(&[2, 3]),
            2,
            Some(ClaimKind::Main),
        );
        assert_eq!(rec.verdict, Verdict::Inapplicable);
    }

    #[test]
    fn config_validation() {
        let mut cfg = GridConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.element_hi = 3;
        assert!(matches!(cfg.validate(), Err(VerifyError::InvalidConfig(_))));
        let cfg = GridConfig {
            sample: Some(10),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = GridConfig {
            regimes: vec!["Nope".into()],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = GridConfig {
            instance_cap: 10,
            ..Default::default()
        };
        assert!(matches!(
            run_campaign(&cfg),
            Err(VerifyError::CapExceeded { cap: 10, .. })
        ));
    }

    #[test]
    fn check_strings_round_trip() {
        for s in ["direct", "inverse", "inverse:main", "inverse:zero-all-high"] {
            assert_eq!(s.parse::<Check>().unwrap().to_string(), s);
        }
        assert_eq!(
            "main".parse::<Check>().unwrap(),
            Check::Inverse(ClaimKind::Main)
        );
        assert!("bogus".parse::<Check>().is_err());
    }

    #[test]
    fn toml_config_parses() {
        let cfg = GridConfig::from_toml(
            "k_min = 4\nk_max = 5\nelement_lo = 1\nelement_hi = 6\nr_min = 1\nr_max = 2\n\
             t_min = 2\nt_max = 2\ncontains_zero = true\nh_hi_k_shift = -2\n\
             checks = [\"direct\", \"inverse:zero-main\"]\n",
        )
        .unwrap();
        assert!(cfg.contains_zero);
        assert_eq!(cfg.h_window(5, 2), Some((1, 5)));
        assert_eq!(cfg.checks.len(), 2);
        assert!(GridConfig::from_toml("k_min = 1\nbogus = 2").is_err());
    }

    #[test]
    fn sampled_campaign_is_seeded() {
        let cfg = GridConfig {
            sample: Some(40),
            seed: Some(7),
            ..Default::default()
        };
        let a = enumerate_instances(&cfg).unwrap();
        let b = enumerate_instances(&cfg).unwrap();
        assert_eq!(a.len(), 40);
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_expected_columns() {
        let rec = check_direct(&IntSet::interval(1, 5).unwrap(), &hs(&[2, 3]), 2);
        let mut buf = Vec::new();
        write_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("r,k,A,H,claim,regime,formula,enumerated,verdict")
        );
        assert_eq!(
            lines.next(),
            Some("2,5,\"{1,2,3,4,5}\",\"{2,3}\",direct,MainTheorem,13,13,tight")
        );
    }
}
