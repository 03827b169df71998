//! Arithmetic-progression structure: detection, extremal constructions, and
//! verdicts for the inverse claims (equality with a lower bound forces `A`
//! and `H` to be progressions).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    boundary_bound, classical_bound, classify_regime, main_bound, single_fold_bound,
    zero_main_bound, BoundError, BoundaryKind, Classical, Formula, HSpec, Regime,
};
use crate::sumset::{brute_force_sumset, FoldParams, IntSet, SumsetError, SumsetTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("missing input: {0}")]
    MissingExtra(&'static str),
    #[error("unknown claim kind `{0}`")]
    UnknownClaimKind(String),
    #[error("unknown extremal kind `{0}`")]
    UnknownExtremalKind(String),
    #[error(transparent)]
    Sumset(#[from] SumsetError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

/// Whether a sorted sequence is an arithmetic progression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApWitness {
    Progression { first: i64, diff: i64 },
    Irregular,
}

impl ApWitness {
    pub fn is_ap(&self) -> bool {
        matches!(self, ApWitness::Progression { .. })
    }

    pub fn diff(&self) -> Option<i64> {
        match self {
            ApWitness::Progression { diff, .. } => Some(*diff),
            ApWitness::Irregular => None,
        }
    }
}

impl fmt::Display for ApWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApWitness::Progression { first, diff } => write!(f, "AP(first={first}, diff={diff})"),
            ApWitness::Irregular => f.write_str("not an AP"),
        }
    }
}

/// Progression check on a strictly increasing slice. Sequences of length at
/// most two are progressions; a singleton has difference 0.
pub fn ap_witness_of(xs: &[i64]) -> ApWitness {
    match xs {
        [] => ApWitness::Irregular,
        [x] => ApWitness::Progression { first: *x, diff: 0 },
        [x, y, rest @ ..] => {
            let diff = y - x;
            let mut prev = *y;
            for &z in rest {
                if z - prev != diff {
                    return ApWitness::Irregular;
                }
                prev = z;
            }
            ApWitness::Progression { first: *x, diff }
        }
    }
}

pub fn ap_witness(set: &IntSet) -> ApWitness {
    ap_witness_of(set.elements())
}

pub fn ap_witness_h(hs: &HSpec) -> ApWitness {
    let v: Vec<i64> = hs.as_slice().iter().map(|&h| h as i64).collect();
    ap_witness_of(&v)
}

/// Known instances whose sumset size is pinned in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtremalKind {
    /// `A = [1,k]`, `H = [1,(k-1)r-1]`.
    DirectTight,
    /// `A = [1,k]`, `H = [1,rk]`.
    FullRangeTight,
    /// `A = [1,k]`, `H = [(k-1)r, kr]`.
    HighTight,
    /// `A = [0,k-1]`, `H = [1,(k-2)r-1]`.
    ZeroDirectTight,
    /// `A = [0,k-1]`, `H = [1,(k-1)r]`.
    ZeroFullRangeTight,
    /// `A = [0,k-1]`, `H = [(k-2)r,(k-1)r]`.
    ZeroHighTight,
    /// Any `A` with `k ≥ 3`, `H = {1, rk}` or `{rk-1, rk}`.
    NonApGap,
    /// `A = {a_1, a_2, a_1+a_2}` (optionally with 0), `H ⊆ {1,2,3}`, `r = 1`.
    NonApSmall,
}

impl ExtremalKind {
    pub const ALL: [ExtremalKind; 8] = [
        ExtremalKind::DirectTight,
        ExtremalKind::FullRangeTight,
        ExtremalKind::HighTight,
        ExtremalKind::ZeroDirectTight,
        ExtremalKind::ZeroFullRangeTight,
        ExtremalKind::ZeroHighTight,
        ExtremalKind::NonApGap,
        ExtremalKind::NonApSmall,
    ];

    pub fn min_k(self) -> usize {
        match self {
            ExtremalKind::ZeroDirectTight
            | ExtremalKind::ZeroFullRangeTight
            | ExtremalKind::ZeroHighTight => 4,
            _ => 3,
        }
    }

    fn id(self) -> &'static str {
        match self {
            ExtremalKind::DirectTight => "direct-tight",
            ExtremalKind::FullRangeTight => "full-range-tight",
            ExtremalKind::HighTight => "high-tight",
            ExtremalKind::ZeroDirectTight => "zero-direct-tight",
            ExtremalKind::ZeroFullRangeTight => "zero-full-range-tight",
            ExtremalKind::ZeroHighTight => "zero-high-tight",
            ExtremalKind::NonApGap => "non-ap-gap",
            ExtremalKind::NonApSmall => "non-ap-small",
        }
    }
}

impl fmt::Display for ExtremalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExtremalKind {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        ExtremalKind::ALL
            .into_iter()
            .find(|k| k.id().replace('-', "") == norm)
            .ok_or_else(|| StructureError::UnknownExtremalKind(s.to_string()))
    }
}

/// Inputs some constructions need beyond `(k, r)`.
#[derive(Clone, Debug, Default)]
pub struct ExtremalExtras {
    /// `NonApGap`: the base set.
    pub set: Option<IntSet>,
    /// `NonApGap`: use `{rk-1, rk}` instead of `{1, rk}`.
    pub upper_pair: bool,
    /// `NonApSmall`: `0 < a_1 < a_2`.
    pub pair: Option<(i64, i64)>,
    /// `NonApSmall`: include 0 in `A`.
    pub with_zero: bool,
    /// `NonApSmall`: subset of `{1,2,3}`; defaults to all of it.
    pub hs: Option<HSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extremal {
    pub kind: ExtremalKind,
    pub set: IntSet,
    pub hs: HSpec,
    pub r: u32,
    pub expected: i64,
    /// True when `expected` came from enumeration rather than a closed form.
    pub expected_by_oracle: bool,
}

pub fn build_extremal(
    kind: ExtremalKind,
    k: usize,
    r: u32,
    extras: &ExtremalExtras,
) -> Result<Extremal, StructureError> {
    if r == 0 {
        return Err(SumsetError::ZeroMultiplicity.into());
    }
    let ri = r as i64;
    let interval = |lo: i64, hi: i64| -> Result<HSpec, StructureError> {
        if lo < 1 || hi < lo {
            return Err(StructureError::HypothesisViolated(format!(
                "H = [{lo},{hi}] is empty for k={k}, r={r}"
            )));
        }
        Ok(HSpec::interval(lo as u32, hi as u32)?)
    };
    let need_k = |min: usize, have: usize| {
        if have < min {
            Err(StructureError::HypothesisViolated(format!(
                "{kind} needs k >= {min} (k={have})"
            )))
        } else {
            Ok(())
        }
    };

    let (set, hs, expected, by_oracle) = match kind {
        ExtremalKind::NonApGap => {
            let set = extras
                .set
                .clone()
                .ok_or(StructureError::MissingExtra("set"))?;
            need_k(3, set.len())?;
            let top = (set.len() as u32) * r;
            let hs = if extras.upper_pair {
                HSpec::new([top - 1, top])?
            } else {
                HSpec::new([1, top])?
            };
            let expected = set.len() as i64 + 1;
            (set, hs, expected, false)
        }
        ExtremalKind::NonApSmall => {
            if r != 1 {
                return Err(StructureError::HypothesisViolated(format!(
                    "{kind} needs r = 1 (r={r})"
                )));
            }
            let (a1, a2) = extras.pair.ok_or(StructureError::MissingExtra("pair"))?;
            if !(0 < a1 && a1 < a2) {
                return Err(StructureError::HypothesisViolated(format!(
                    "{kind} needs 0 < a1 < a2 (a1={a1}, a2={a2})"
                )));
            }
            let mut raw = vec![a1, a2, a1 + a2];
            if extras.with_zero {
                raw.push(0);
            }
            let set = IntSet::new(raw)?;
            let hs = match &extras.hs {
                Some(h) if h.max() <= 3 => h.clone(),
                Some(h) => {
                    return Err(StructureError::HypothesisViolated(format!(
                        "{kind} needs H within {{1,2,3}} (H={h})"
                    )))
                }
                None => HSpec::interval(1, 3)?,
            };
            let mut sums: Vec<i64> = Vec::new();
            for &h in hs.as_slice() {
                sums.extend(brute_force_sumset(&set, FoldParams::new(h, 1)?)?);
            }
            sums.sort_unstable();
            sums.dedup();
            (set, hs, sums.len() as i64, true)
        }
        _ => {
            need_k(kind.min_k(), k)?;
            let ki = k as i64;
            let positive = IntSet::interval(1, ki)?;
            let zero = IntSet::interval(0, ki - 1)?;
            match kind {
                ExtremalKind::DirectTight => (
                    positive,
                    interval(1, (ki - 1) * ri - 1)?,
                    ri * ki * (ki + 1) / 2 - ri - 2,
                    false,
                ),
                ExtremalKind::FullRangeTight => (
                    positive,
                    interval(1, ri * ki)?,
                    ri * ki * (ki + 1) / 2,
                    false,
                ),
                ExtremalKind::HighTight => (
                    positive,
                    interval((ki - 1) * ri, ki * ri)?,
                    ki * ri + 1,
                    false,
                ),
                ExtremalKind::ZeroDirectTight => (
                    zero,
                    interval(1, (ki - 2) * ri - 1)?,
                    ri * ki * (ki - 1) / 2 - ri - 1,
                    false,
                ),
                ExtremalKind::ZeroFullRangeTight => (
                    zero,
                    interval(1, (ki - 1) * ri)?,
                    ri * ki * (ki - 1) / 2 + 1,
                    false,
                ),
                ExtremalKind::ZeroHighTight => (
                    zero,
                    interval((ki - 2) * ri, (ki - 1) * ri)?,
                    (2 * ki - 3) * ri + 1,
                    false,
                ),
                ExtremalKind::NonApGap | ExtremalKind::NonApSmall => unreachable!(),
            }
        }
    };
    Ok(Extremal {
        kind,
        set,
        hs,
        r,
        expected,
        expected_by_oracle: by_oracle,
    })
}

/// `|H^(r)A|` via the engine; members of `H` above `k·r` contribute nothing.
pub fn union_cardinality(set: &IntSet, hs: &HSpec, r: u32) -> Result<u64, SumsetError> {
    let table = SumsetTable::build(set, r, hs.max())?;
    Ok(table.union_len(hs.as_slice()) as u64)
}

/// Inverse claims: each names a lower bound and the progression structure
/// that equality with it is supposed to force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimKind {
    /// Single `h`: equality forces `A` to be an AP.
    SingleFold,
    /// `r ≥ max(H)`, so `H^(r)A = HA`.
    UnrestrictedUnion,
    /// `r = 1`, so `H^(r)A = H^∧A`; forces `d = 1`.
    RestrictedUnion,
    /// Positive `A`, `r ≤ max(H) ≤ (k-1)r-1`.
    Main,
    /// Positive `A`, `H` straddles `(k-1)r` with at least two members above.
    SplitHigh,
    /// Positive `A`, only `max(H)` above `(k-1)r-1`.
    TopHigh,
    /// Positive `A`, all of `H` in `((k-1)r-1, kr)`.
    AllHigh,
    ZeroMain,
    ZeroSplitHigh,
    ZeroTopHigh,
    ZeroAllHigh,
}

impl ClaimKind {
    pub const ALL: [ClaimKind; 11] = [
        ClaimKind::SingleFold,
        ClaimKind::UnrestrictedUnion,
        ClaimKind::RestrictedUnion,
        ClaimKind::Main,
        ClaimKind::SplitHigh,
        ClaimKind::TopHigh,
        ClaimKind::AllHigh,
        ClaimKind::ZeroMain,
        ClaimKind::ZeroSplitHigh,
        ClaimKind::ZeroTopHigh,
        ClaimKind::ZeroAllHigh,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ClaimKind::SingleFold => "single-fold",
            ClaimKind::UnrestrictedUnion => "unrestricted-union",
            ClaimKind::RestrictedUnion => "restricted-union",
            ClaimKind::Main => "main",
            ClaimKind::SplitHigh => "split-high",
            ClaimKind::TopHigh => "top-high",
            ClaimKind::AllHigh => "all-high",
            ClaimKind::ZeroMain => "zero-main",
            ClaimKind::ZeroSplitHigh => "zero-split-high",
            ClaimKind::ZeroTopHigh => "zero-top-high",
            ClaimKind::ZeroAllHigh => "zero-all-high",
        }
    }

    fn with_zero(self) -> bool {
        matches!(
            self,
            ClaimKind::ZeroMain
                | ClaimKind::ZeroSplitHigh
                | ClaimKind::ZeroTopHigh
                | ClaimKind::ZeroAllHigh
        )
    }

    /// The claim matching a direct-bound regime.
    pub fn for_regime(regime: Regime, t: usize) -> ClaimKind {
        match regime {
            Regime::MainTheorem => ClaimKind::Main,
            Regime::SplitHigh(t0) if t0 < t => ClaimKind::SplitHigh,
            Regime::SplitHigh(_) => ClaimKind::TopHigh,
            Regime::AllHigh => ClaimKind::AllHigh,
            Regime::ZeroMain => ClaimKind::ZeroMain,
            Regime::ZeroSplitHigh(t0) if t0 < t => ClaimKind::ZeroSplitHigh,
            Regime::ZeroSplitHigh(_) => ClaimKind::ZeroTopHigh,
            Regime::ZeroAllHigh => ClaimKind::ZeroAllHigh,
            Regime::UnrestrictedHA => ClaimKind::UnrestrictedUnion,
        }
    }
}

impl fmt::Display for ClaimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ClaimKind {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ClaimKind::ALL
            .into_iter()
            .find(|c| c.id() == norm)
            .ok_or_else(|| StructureError::UnknownClaimKind(s.to_string()))
    }
}

/// Picks the claim that matches the regime `classify_regime` selects.
pub fn auto_claim(set: &IntSet, hs: &HSpec, r: u32) -> Result<ClaimKind, StructureError> {
    if hs.len() == 1 {
        return Ok(ClaimKind::SingleFold);
    }
    let report = classify_regime(set.len(), r, hs, set.contains_zero())?;
    Ok(ClaimKind::for_regime(report.regime, hs.len()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InverseReport {
    pub claim: ClaimKind,
    pub cardinality: u64,
    /// The claim's bound; `None` when it cannot be evaluated for this input.
    pub bound: Option<i64>,
    pub violations: Vec<String>,
    pub equality: bool,
    pub h_ap: ApWitness,
    /// Witness for `A`, or for `A ∖ {0}` under the zero claims.
    pub a_ap: ApWitness,
    /// Witness for the whole `A` under the zero claims.
    pub whole_ap: Option<ApWitness>,
    /// Set only when the hypotheses hold and equality is attained.
    pub conclusion_ok: Option<bool>,
    pub conclusion_failures: Vec<String>,
}

impl InverseReport {
    pub fn hypotheses_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Conclusion {
    /// Largest allowed common difference of `H`.
    max_diff: Option<i64>,
    /// `d` must be 1.
    unit: bool,
}

struct Hyp(Vec<String>);

impl Hyp {
    fn need(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.0.push(what.into());
        }
    }
}

pub fn inverse_verdict(
    set: &IntSet,
    hs: &HSpec,
    r: u32,
    claim: ClaimKind,
) -> Result<InverseReport, StructureError> {
    if r == 0 {
        return Err(SumsetError::ZeroMultiplicity.into());
    }
    let k = set.len();
    let t = hs.len();
    let (ki, ri) = (k as i64, r as i64);
    let (h1, ht) = (hs.min() as i64, hs.max() as i64);
    let mut hyp = Hyp(Vec::new());

    let zero = claim.with_zero() || (claim == ClaimKind::RestrictedUnion && set.contains_zero());
    if claim.with_zero() {
        hyp.need(set.contains_zero(), "0 in A");
        hyp.need(set.all_nonnegative(), "A nonnegative");
    } else if claim == ClaimKind::RestrictedUnion {
        hyp.need(set.all_nonnegative(), "A nonnegative");
    } else if claim != ClaimKind::SingleFold {
        hyp.need(set.all_positive(), "A positive");
    }
    if claim != ClaimKind::SingleFold {
        hyp.need(t >= 2, format!("t >= 2 (t={t})"));
    }

    // Threshold below which H counts as "main": (k-1)r-1, or (k-2)r-1 with zero.
    let lag = if claim.with_zero() { 2 } else { 1 };
    let main_top = (ki - lag) * ri - 1;
    let high_top = (ki - lag + 1) * ri;
    let min_k = if claim.with_zero() { 7 } else { 6 };

    let split = |hyp: &mut Hyp, t0: Option<usize>| {
        if let Some(t0) = t0 {
            hyp.need(
                (t0, h1) != (2, 1),
                format!("(t0, h_1) != (2, 1) (t0={t0}, h_1={h1})"),
            );
        }
    };

    let (formula, conclusion): (Option<Formula>, Conclusion) = match claim {
        ClaimKind::SingleFold => {
            hyp.need(t == 1, format!("single h (t={t})"));
            hyp.need(k >= 3, format!("k >= 3 (k={k})"));
            hyp.need(h1 >= 2, format!("h >= 2 (h={h1})"));
            hyp.need(ri <= h1 && h1 <= ki * ri - 2, "r <= h <= kr-2");
            hyp.need((k, h1, r) != (4, 2, 1), "(k, h, r) != (4, 2, 1)");
            (
                Some(single_fold_bound(k, hs.min(), r)?),
                Conclusion {
                    max_diff: None,
                    unit: false,
                },
            )
        }
        ClaimKind::UnrestrictedUnion => {
            hyp.need(k >= 2, format!("k >= 2 (k={k})"));
            hyp.need(ri >= ht, format!("r >= max(H) (r={r}, max(H)={ht})"));
            (
                Some(classical_bound(Classical::UnionFold(hs), k)?),
                Conclusion {
                    max_diff: None,
                    unit: false,
                },
            )
        }
        ClaimKind::RestrictedUnion => {
            hyp.need(r == 1, format!("r = 1 (r={r})"));
            let (need_k, limit) = if zero { (7, ki - 2) } else { (6, ki - 1) };
            hyp.need(k >= need_k, format!("k >= {need_k} (k={k})"));
            hyp.need(ht <= limit, format!("max(H) <= {limit}"));
            let f = classical_bound(
                Classical::UnionRestricted {
                    hs,
                    contains_zero: zero,
                },
                k,
            )?;
            (
                Some(f),
                Conclusion {
                    max_diff: Some(1),
                    unit: true,
                },
            )
        }
        ClaimKind::Main | ClaimKind::ZeroMain => {
            hyp.need(k >= min_k, format!("k >= {min_k} (k={k})"));
            hyp.need(
                ri <= ht && ht <= main_top,
                format!("r <= max(H) <= {main_top}"),
            );
            let f = if claim == ClaimKind::Main {
                main_bound(k, hs, r).ok()
            } else if k >= 2 {
                zero_main_bound(k, hs, r).ok()
            } else {
                None
            };
            (
                f,
                Conclusion {
                    max_diff: Some(ri),
                    unit: claim == ClaimKind::ZeroMain && h1 > 1,
                },
            )
        }
        ClaimKind::SplitHigh
        | ClaimKind::ZeroSplitHigh
        | ClaimKind::TopHigh
        | ClaimKind::ZeroTopHigh => {
            hyp.need(k >= min_k, format!("k >= {min_k} (k={k})"));
            let t0 = hs.first_at_least(main_top + 1);
            let top_only = matches!(claim, ClaimKind::TopHigh | ClaimKind::ZeroTopHigh);
            match t0 {
                None => hyp.need(false, format!("some h above {main_top}")),
                Some(t0) if top_only => hyp.need(t0 == t, format!("only max(H) above {main_top}")),
                Some(t0) => hyp.need(t0 < t && t0 >= 2, format!("2 <= t0 < t (t0={t0}, t={t})")),
            }
            split(&mut hyp, t0);
            hyp.need(ht < high_top, format!("max(H) < {high_top}"));
            let kind = if claim.with_zero() {
                BoundaryKind::ZeroSplitHigh
            } else {
                BoundaryKind::SplitHigh
            };
            let f = t0.and_then(|t0| boundary_bound(kind, k, hs, r, Some(t0)).ok());
            (
                f,
                Conclusion {
                    max_diff: Some(ri),
                    unit: claim.with_zero() && h1 > 1,
                },
            )
        }
        ClaimKind::AllHigh | ClaimKind::ZeroAllHigh => {
            hyp.need(r >= 2, format!("r >= 2 (r={r})"));
            hyp.need(k >= min_k, format!("k >= {min_k} (k={k})"));
            hyp.need(
                main_top < h1 && ht < high_top,
                format!("{main_top} < min(H) <= max(H) < {high_top}"),
            );
            let kind = if claim.with_zero() {
                BoundaryKind::ZeroAllHigh
            } else {
                BoundaryKind::AllHigh
            };
            (
                boundary_bound(kind, k, hs, r, None).ok(),
                Conclusion {
                    max_diff: Some(ri - 1),
                    unit: false,
                },
            )
        }
    };

    let cardinality = union_cardinality(set, hs, r)?;
    let bound = formula.as_ref().map(|f| f.value);
    let equality = bound == Some(cardinality as i64);

    let h_ap = ap_witness_h(hs);
    let stripped = if zero { set.without_zero() } else { None };
    let core_set = stripped.as_ref().unwrap_or(set);
    let a_ap = ap_witness(core_set);
    let whole_ap = zero.then(|| ap_witness(set));

    let mut failures = Vec::new();
    let conclusion_ok = (hyp.0.is_empty() && equality).then(|| {
        let d = if claim == ClaimKind::SingleFold {
            Some(1)
        } else {
            h_ap.diff()
        };
        match d {
            None => failures.push("H is not an AP".to_string()),
            Some(d) => {
                if let Some(max) = conclusion.max_diff {
                    if d > max {
                        failures.push(format!("H difference {d} exceeds {max}"));
                    }
                }
                if conclusion.unit && d != 1 {
                    failures.push(format!("H difference {d} is not 1"));
                }
                match a_ap.diff() {
                    None => failures.push("A is not an AP".to_string()),
                    Some(_) if claim == ClaimKind::SingleFold => {}
                    Some(diff) => {
                        let want = d * core_set.min();
                        if diff != want {
                            failures.push(format!("A difference {diff} != d*min = {want}"));
                        }
                    }
                }
            }
        }
        failures.is_empty()
    });

    Ok(InverseReport {
        claim,
        cardinality,
        bound,
        violations: hyp.0,
        equality,
        h_ap,
        a_ap,
        whole_ap,
        conclusion_ok,
        conclusion_failures: failures,
    })
}
