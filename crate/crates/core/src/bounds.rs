//! Closed-form lower bounds for `|H^(r)A|` and the regime classifier.
//!
//! Evaluators always compute their formula. Failed hypotheses are
//! recorded on the returned [`Formula`] instead of short-circuiting, so a
//! harness can tell "bound fails" apart from "bound does not apply". Call
//! [`Formula::checked`] to turn violations into an error.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sumset::write_braced;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("H must be nonempty")]
    EmptyH,
    #[error("H must contain positive integers only")]
    NonPositiveH,
    #[error("multiplicity bound r must be at least 1")]
    ZeroMultiplicity,
    #[error("set cardinality k must be at least 1")]
    ZeroCardinality,
    #[error("no pivot: r = {r} exceeds max(H) = {h_max}")]
    BadPivot { r: u32, h_max: u32 },
    #[error("split index t0 = {t0} is invalid for t = {t}")]
    BadSplit { t0: usize, t: usize },
    #[error("hypothesis violated: {}", .0.join("; "))]
    HypothesisViolated(Vec<String>),
    #[error("unclassifiable: {0}")]
    Unclassifiable(String),
}

/// `H = {h_1 < … < h_t}`, a nonempty set of positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct HSpec(Vec<u32>);

impl HSpec {
    pub fn new(raw: impl IntoIterator<Item = u32>) -> Result<Self, BoundError> {
        let mut v: Vec<u32> = raw.into_iter().collect();
        if v.is_empty() {
            return Err(BoundError::EmptyH);
        }
        v.sort_unstable();
        v.dedup();
        if v[0] == 0 {
            return Err(BoundError::NonPositiveH);
        }
        Ok(Self(v))
    }

    pub fn interval(lo: u32, hi: u32) -> Result<Self, BoundError> {
        Self::new(lo..=hi)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `t = |H|`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> u32 {
        self.0[0]
    }

    pub fn max(&self) -> u32 {
        self.0[self.0.len() - 1]
    }

    /// `{h_1, …, h_n}`; `None` for `n = 0` or `n > t`.
    pub fn prefix(&self, n: usize) -> Option<Self> {
        (n >= 1 && n <= self.0.len()).then(|| Self(self.0[..n].to_vec()))
    }

    /// `h_i = m_i·r + ε_i` for `i = 0..=t` with the sentinel `h_0 = 0`.
    pub fn decompose(&self, r: u32) -> Result<Decomposition, BoundError> {
        if r == 0 {
            return Err(BoundError::ZeroMultiplicity);
        }
        let h: Vec<u32> = std::iter::once(0).chain(self.0.iter().copied()).collect();
        let m = h.iter().map(|&x| x / r).collect();
        let eps = h.iter().map(|&x| x % r).collect();
        let pivot = (1..h.len()).find(|&i| h[i - 1] < r && r <= h[i]);
        Ok(Decomposition {
            r,
            h,
            m,
            eps,
            pivot,
        })
    }

    /// 1-based index of the first `h_i ≥ threshold`.
    pub fn first_at_least(&self, threshold: i64) -> Option<usize> {
        self.0
            .iter()
            .position(|&h| h as i64 >= threshold)
            .map(|p| p + 1)
    }
}

impl TryFrom<Vec<u32>> for HSpec {
    type Error = BoundError;

    fn try_from(v: Vec<u32>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<HSpec> for Vec<u32> {
    fn from(h: HSpec) -> Self {
        h.0
    }
}

impl fmt::Display for HSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_braced(f, &self.0)
    }
}

/// Quotients and remainders of `H` by `r`, indexed `0..=t` (index 0 is the
/// sentinel `h_0 = 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub r: u32,
    pub h: Vec<u32>,
    pub m: Vec<u32>,
    pub eps: Vec<u32>,
    /// The `l` with `h_{l-1} < r ≤ h_l`, when `r ≤ h_t`.
    pub pivot: Option<usize>,
}

impl Decomposition {
    pub fn t(&self) -> usize {
        self.h.len() - 1
    }

    /// The `i`-th summand of the main bound.
    fn step(&self, k: i64, i: usize) -> i64 {
        let r = self.r as i64;
        let (m, mp) = (self.m[i] as i64, self.m[i - 1] as i64);
        let (e, ep) = (self.eps[i] as i64, self.eps[i - 1] as i64);
        r * (m - mp) * (k - m) + (e - ep) * (k - m - 1) - e.max(ep) * (m - mp) + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: i64,
}

impl Term {
    fn new(label: impl Into<String>, value: i64) -> Self {
        Self {
            label: label.into(),
            value,
        }
    }
}

/// A bound value with its additive breakdown and any failed hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub name: String,
    pub value: i64,
    pub terms: Vec<Term>,
    pub violations: Vec<String>,
}

impl Formula {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: 0,
            terms: Vec::new(),
            violations: Vec::new(),
        }
    }

    fn term(mut self, label: impl Into<String>, value: i64) -> Self {
        self.value += value;
        self.terms.push(Term::new(label, value));
        self
    }

    fn absorb(mut self, prefix: &str, other: Formula) -> Self {
        for t in other.terms {
            self = self.term(format!("{prefix}{}", t.label), t.value);
        }
        self.violations.extend(other.violations);
        self
    }

    fn require(mut self, ok: bool, what: impl Into<String>) -> Self {
        if !ok {
            self.violations.push(what.into());
        }
        self
    }

    pub fn hypotheses_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn checked(self) -> Result<Self, BoundError> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(BoundError::HypothesisViolated(self.violations))
        }
    }
}

fn check_common(k: usize, r: u32) -> Result<(), BoundError> {
    if k == 0 {
        return Err(BoundError::ZeroCardinality);
    }
    if r == 0 {
        return Err(BoundError::ZeroMultiplicity);
    }
    Ok(())
}

/// `𝓛(H^(r)A)` in its pivot form: `h_{l-1}(k-1) + (l-1)` plus one term for
/// each `i = l..=t`. Requires `r ≤ max(H)`.
pub fn main_bound(k: usize, hs: &HSpec, r: u32) -> Result<Formula, BoundError> {
    check_common(k, r)?;
    let d = hs.decompose(r)?;
    let l = d.pivot.ok_or(BoundError::BadPivot { r, h_max: hs.max() })?;
    let k = k as i64;
    let mut f = Formula::new("main").term(
        format!("h_{}(k-1)+{}", l - 1, l - 1),
        d.h[l - 1] as i64 * (k - 1) + (l as i64 - 1),
    );
    for i in l..=d.t() {
        f = f.term(format!("i={i}"), d.step(k, i));
    }
    Ok(f)
}

/// `𝓛(H^(r)A)` as a single sum over `i = 1..=t`. Agrees with [`main_bound`]
/// when `r ≤ max(H)`; for `r > max(H)` it collapses to `h_t(k-1) + t`.
pub fn main_bound_single_sum(k: usize, hs: &HSpec, r: u32) -> Result<i64, BoundError> {
    check_common(k, r)?;
    let (k, r) = (k as i64, r as i64);
    let mut prev = (0i64, 0i64);
    let mut total = 0;
    for &h in hs.as_slice() {
        let (m, e) = (h as i64 / r, h as i64 % r);
        let (mp, ep) = prev;
        total += r * (m - mp) * (k - m) + (e - ep) * (k - m - 1) - e.max(ep) * (m - mp) + 1;
        prev = (m, e);
    }
    Ok(total)
}

fn main_bound_extended(k: usize, hs: &HSpec, r: u32) -> Result<Formula, BoundError> {
    let d = hs.decompose(r)?;
    if d.pivot.is_some() {
        return main_bound(k, hs, r);
    }
    let k = k as i64;
    let mut f = Formula::new("main");
    for i in 1..=d.t() {
        f = f.term(format!("i={i}"), d.step(k, i));
    }
    Ok(f)
}

/// `mr(k-m) + (h-mr)(k-2m-1) + 1` with `m = ⌊h/r⌋`; valid for `1 ≤ r ≤ h ≤ kr`.
pub fn single_fold_bound(k: usize, h: u32, r: u32) -> Result<Formula, BoundError> {
    check_common(k, r)?;
    let (ki, hi, ri) = (k as i64, h as i64, r as i64);
    let m = hi / ri;
    Ok(Formula::new("h^(r)A")
        .term("mr(k-m)", m * ri * (ki - m))
        .term("(h-mr)(k-2m-1)", (hi - m * ri) * (ki - 2 * m - 1))
        .term("1", 1)
        .require(r <= h, format!("r <= h (r={r}, h={h})"))
        .require(
            (h as u64) <= k as u64 * r as u64,
            format!("h <= kr (h={h}, kr={})", k as u64 * r as u64),
        ))
}

/// The classical bounds this family generalizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classical<'a> {
    /// `|hA| ≥ hk - h + 1`.
    HFold { h: u32 },
    /// `|h^∧A| ≥ hk - h² + 1`, for `1 ≤ h ≤ k`.
    RestrictedHFold { h: u32 },
    /// `|HA| ≥ h_t(k-1) + t` for `A` of positive integers.
    UnionFold(&'a HSpec),
    /// `|H^∧A|` for nonnegative `A`, split on whether `0 ∈ A`.
    UnionRestricted { hs: &'a HSpec, contains_zero: bool },
}

pub fn classical_bound(kind: Classical<'_>, k: usize) -> Result<Formula, BoundError> {
    if k == 0 {
        return Err(BoundError::ZeroCardinality);
    }
    let ki = k as i64;
    let f = match kind {
        Classical::HFold { h } => {
            let h = h as i64;
            Formula::new("hA")
                .term("h(k-1)", h * (ki - 1))
                .term("1", 1)
                .require(h >= 1, "h >= 1")
        }
        Classical::RestrictedHFold { h } => {
            let h = h as i64;
            Formula::new("h^A")
                .term("hk-h^2", h * ki - h * h)
                .term("1", 1)
                .require(h >= 1 && h <= ki, format!("1 <= h <= k (h={h}, k={k})"))
        }
        Classical::UnionFold(hs) => Formula::new("HA")
            .term("h_t(k-1)", hs.max() as i64 * (ki - 1))
            .term("t", hs.len() as i64),
        Classical::UnionRestricted { hs, contains_zero } => {
            let h: Vec<i64> = std::iter::once(0)
                .chain(hs.as_slice().iter().map(|&x| x as i64))
                .collect();
            let shift = i64::from(contains_zero);
            let mut f = Formula::new("H^A");
            if contains_zero {
                f = f.term("h_1", h[1]);
            }
            for i in 1..h.len() {
                f = f.term(format!("i={i}"), (h[i] - h[i - 1]) * (ki - h[i] - shift));
            }
            let limit = ki - shift;
            f.term("t", hs.len() as i64).require(
                hs.max() as i64 <= limit,
                format!(
                    "h_t <= {} (h_t={})",
                    if contains_zero { "k-1" } else { "k" },
                    hs.max()
                ),
            )
        }
    };
    Ok(f)
}

/// Prefix contributed by the zero element:
/// `m_1 r(m-m_1+1) + (h_1-m_1 r)(m-2m_1)` with `m = ⌈h_1/r⌉`, `m_1 = ⌊h_1/r⌋`.
fn zero_prefix(hs: &HSpec, r: u32) -> Formula {
    let (h1, ri) = (hs.min() as i64, r as i64);
    let m1 = h1 / ri;
    let m = (h1 + ri - 1) / ri;
    Formula::new("zero-prefix")
        .term("m_1 r(m-m_1+1)", m1 * ri * (m - m1 + 1))
        .term("(h_1-m_1 r)(m-2m_1)", (h1 - m1 * ri) * (m - 2 * m1))
}

fn zero_prefixed(k: usize, hs: &HSpec, r: u32, extended: bool) -> Result<Formula, BoundError> {
    let rest = if extended {
        main_bound_extended(k - 1, hs, r)?
    } else {
        main_bound(k - 1, hs, r)?
    };
    Ok(Formula::new("zero")
        .absorb("", zero_prefix(hs, r))
        .absorb("A': ", rest))
}

/// Lower bound for `0 ∈ A`: the zero prefix plus `𝓛` over `A ∖ {0}` (size `k-1`).
pub fn zero_main_bound(k: usize, hs: &HSpec, r: u32) -> Result<Formula, BoundError> {
    check_common(k, r)?;
    if k < 2 {
        return Err(BoundError::ZeroCardinality);
    }
    let (ki, ri, ht) = (k as i64, r as i64, hs.max() as i64);
    let mut f = zero_prefixed(k, hs, r, false)?;
    f.name = "ZeroMain".into();
    Ok(f.require(k >= 4, format!("k >= 4 (k={k})"))
        .require(hs.len() >= 2, format!("t >= 2 (t={})", hs.len()))
        .require(
            ht < (ki - 2) * ri,
            format!("max(H) <= (k-2)r-1 = {}", (ki - 2) * ri - 1),
        ))
}

/// Boundary-regime bounds for `H` reaching past `(k-1)r` (resp. `(k-2)r` when
/// `0 ∈ A`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// `𝓛(H_{t0-1}) + t - t0 + 2`.
    SplitHigh,
    /// `m_1 r(k-m_1) + (h_1-m_1 r)(k-2m_1-1) + t`.
    AllHigh,
    /// Zero prefix over `H_{t0-1}` plus `t - t0 + 2`.
    ZeroSplitHigh,
    /// Same shape as `AllHigh` with the `(k-2)r` threshold.
    ZeroAllHigh,
}

impl BoundaryKind {
    fn with_zero(self) -> bool {
        matches!(
            self,
            BoundaryKind::ZeroSplitHigh | BoundaryKind::ZeroAllHigh
        )
    }

    /// Lower threshold `(k-1)r`, or `(k-2)r` with zero.
    fn threshold(self, k: usize, r: u32) -> i64 {
        let lag = if self.with_zero() { 2 } else { 1 };
        (k as i64 - lag) * r as i64
    }

    fn ceiling(self, k: usize, r: u32) -> i64 {
        self.threshold(k, r) + r as i64
    }
}

/// Default split index: the least `t0` with `h_{t0}` at or above the regime
/// threshold.
pub fn default_split(kind: BoundaryKind, k: usize, hs: &HSpec, r: u32) -> Option<usize> {
    hs.first_at_least(kind.threshold(k, r))
}

pub fn boundary_bound(
    kind: BoundaryKind,
    k: usize,
    hs: &HSpec,
    r: u32,
    t0: Option<usize>,
) -> Result<Formula, BoundError> {
    check_common(k, r)?;
    let t = hs.len();
    let (ki, ri) = (k as i64, r as i64);
    let lo = kind.threshold(k, r);
    let hi = kind.ceiling(k, r);
    let min_k = if kind.with_zero() { 4 } else { 3 };
    let top_ok = (hs.max() as i64) <= hi;
    let top_msg = format!("max(H) <= {hi}");

    let f = match kind {
        BoundaryKind::AllHigh | BoundaryKind::ZeroAllHigh => {
            let h1 = hs.min() as i64;
            let m1 = h1 / ri;
            Formula::new(format!("{kind:?}"))
                .term("m_1 r(k-m_1)", m1 * ri * (ki - m1))
                .term("(h_1-m_1 r)(k-2m_1-1)", (h1 - m1 * ri) * (ki - 2 * m1 - 1))
                .term("t", t as i64)
                .require(h1 >= lo, format!("h_1 >= {lo}"))
        }
        BoundaryKind::SplitHigh | BoundaryKind::ZeroSplitHigh => {
            let t0 = t0
                .or_else(|| default_split(kind, k, hs, r))
                .ok_or(BoundError::BadSplit { t0: 0, t })?;
            let prefix = hs.prefix(t0 - 1).ok_or(BoundError::BadSplit { t0, t })?;
            if t0 > t {
                return Err(BoundError::BadSplit { t0, t });
            }
            let body = if kind.with_zero() {
                if k < 2 {
                    return Err(BoundError::ZeroCardinality);
                }
                zero_prefixed(k, &prefix, r, true)?
            } else {
                main_bound_extended(k, &prefix, r)?
            };
            let straddle = (prefix.max() as i64) < lo && hs.as_slice()[t0 - 1] as i64 >= lo;
            Formula::new(format!("{kind:?}"))
                .absorb("prefix: ", body)
                .term("t-t0+2", t as i64 - t0 as i64 + 2)
                .require(t0 >= 2, format!("t0 >= 2 (t0={t0})"))
                .require(straddle, format!("h_(t0-1) < {lo} <= h_t0"))
        }
    };
    Ok(f.require(top_ok, top_msg)
        .require(k >= min_k, format!("k >= {min_k} (k={k})")))
}

/// Regime selected by [`classify_regime`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t0")]
pub enum Regime {
    MainTheorem,
    SplitHigh(usize),
    AllHigh,
    ZeroMain,
    ZeroSplitHigh(usize),
    ZeroAllHigh,
    UnrestrictedHA,
}

impl Regime {
    pub fn family(&self) -> &'static str {
        match self {
            Regime::MainTheorem => "MainTheorem",
            Regime::SplitHigh(_) => "SplitHigh",
            Regime::AllHigh => "AllHigh",
            Regime::ZeroMain => "ZeroMain",
            Regime::ZeroSplitHigh(_) => "ZeroSplitHigh",
            Regime::ZeroAllHigh => "ZeroAllHigh",
            Regime::UnrestrictedHA => "UnrestrictedHA",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::SplitHigh(t0) | Regime::ZeroSplitHigh(t0) => {
                write!(f, "{}(t0={t0})", self.family())
            }
            _ => f.write_str(self.family()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub regime: Regime,
    pub formula: Formula,
}

impl BoundReport {
    pub fn value(&self) -> i64 {
        self.formula.value
    }

    pub fn hypotheses_ok(&self) -> bool {
        self.formula.hypotheses_ok()
    }

    pub fn violations(&self) -> &[String] {
        &self.formula.violations
    }
}

/// Picks the bound that applies to `(k, r, H, 0 ∈ A)` and evaluates it.
pub fn classify_regime(
    k: usize,
    r: u32,
    hs: &HSpec,
    contains_zero: bool,
) -> Result<BoundReport, BoundError> {
    check_common(k, r)?;
    let (ki, ri) = (k as i64, r as i64);
    let (h1, ht) = (hs.min() as i64, hs.max() as i64);

    let (regime, mut formula) = if r as i64 > ht {
        let f = classical_bound(Classical::UnionFold(hs), k)?.require(
            !contains_zero,
            "0 not in A (H^(r)A = HA bound needs positive A)",
        );
        (Regime::UnrestrictedHA, f)
    } else if !contains_zero {
        if h1 > ki * ri {
            return Err(BoundError::Unclassifiable(format!(
                "min(H) = {h1} exceeds kr = {}",
                ki * ri
            )));
        }
        if ht < (ki - 1) * ri {
            (Regime::MainTheorem, main_bound(k, hs, r)?)
        } else if h1 >= (ki - 1) * ri {
            let f = boundary_bound(BoundaryKind::AllHigh, k, hs, r, None)?;
            (Regime::AllHigh, f)
        } else {
            let t0 = default_split(BoundaryKind::SplitHigh, k, hs, r)
                .expect("max(H) reaches the threshold");
            let f = boundary_bound(BoundaryKind::SplitHigh, k, hs, r, Some(t0))?;
            (Regime::SplitHigh(t0), f)
        }
    } else {
        if h1 > (ki - 1) * ri {
            return Err(BoundError::Unclassifiable(format!(
                "min(H) = {h1} exceeds (k-1)r = {}",
                (ki - 1) * ri
            )));
        }
        if ht < (ki - 2) * ri {
            (Regime::ZeroMain, zero_main_bound(k, hs, r)?)
        } else if h1 >= (ki - 2) * ri {
            let f = boundary_bound(BoundaryKind::ZeroAllHigh, k, hs, r, None)?;
            (Regime::ZeroAllHigh, f)
        } else {
            let t0 = default_split(BoundaryKind::ZeroSplitHigh, k, hs, r)
                .expect("max(H) reaches the threshold");
            let f = boundary_bound(BoundaryKind::ZeroSplitHigh, k, hs, r, Some(t0))?;
            (Regime::ZeroSplitHigh(t0), f)
        }
    };

    let min_k = if matches!(regime, Regime::ZeroMain) {
        4
    } else {
        3
    };
    if k < min_k && !formula.violations.iter().any(|v| v.starts_with("k >=")) {
        formula.violations.push(format!("k >= {min_k} (k={k})"));
    }
    if hs.len() < 2 && !formula.violations.iter().any(|v| v.starts_with("t >=")) {
        formula.violations.push(format!("t >= 2 (t={})", hs.len()));
    }
    formula.name = regime.family().to_string();
    Ok(BoundReport { regime, formula })
}
