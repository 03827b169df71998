//! Subset sums and subsequence sums as specializations of `H^(r)A`:
//! `Σ_α(A) = [α,k]^(1)A` and `Σ_α(𝔸) = [α,kr]^(r)A`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::{ap_witness, ApWitness};
use crate::sumset::{IntSet, SumsetError, SumsetTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubseqError {
    #[error("alpha must lie in [1, {max}] (got {alpha})")]
    BadAlpha { alpha: u32, max: u64 },
    #[error("hypothesis violated: {}", .0.join("; "))]
    HypothesisViolated(Vec<String>),
    #[error("unknown subsequence claim `{0}`")]
    UnknownClaim(String),
    #[error(transparent)]
    Sumset(#[from] SumsetError),
}

/// `(a_1, …, a_k)_r`: each element of `base` repeated exactly `r` times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepSequence {
    pub base: IntSet,
    pub r: u32,
}

impl RepSequence {
    pub fn new(base: IntSet, r: u32) -> Result<Self, SubseqError> {
        if r == 0 {
            return Err(SumsetError::ZeroMultiplicity.into());
        }
        Ok(Self { base, r })
    }

    pub fn k(&self) -> usize {
        self.base.len()
    }

    pub fn length(&self) -> u64 {
        self.k() as u64 * self.r as u64
    }
}

impl fmt::Display for RepSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.base, self.r)
    }
}

fn tail_sums(base: &IntSet, r: u32, alpha: u32) -> Result<IntSet, SubseqError> {
    let top = base.len() as u64 * r as u64;
    if alpha == 0 || alpha as u64 > top {
        return Err(SubseqError::BadAlpha { alpha, max: top });
    }
    let table = SumsetTable::build(base, r, top as u32)?;
    let hs: Vec<u32> = (alpha..=top as u32).collect();
    Ok(IntSet::new(table.union(&hs))?)
}

/// `Σ_α(A)`: sums of subsets of size at least `alpha`.
pub fn subset_sum_set(set: &IntSet, alpha: u32) -> Result<IntSet, SubseqError> {
    tail_sums(set, 1, alpha)
}

/// `Σ_α(𝔸)`: sums of subsequences of length at least `alpha`.
pub fn subsequence_sum_set(seq: &RepSequence, alpha: u32) -> Result<IntSet, SubseqError> {
    tail_sums(&seq.base, seq.r, alpha)
}

/// Closed-form statements about `|Σ_α(𝔸)|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubseqClaim {
    /// Lower bound on `|Σ(𝔸)|`.
    Full,
    /// Equality in `Full` forces `𝔸 = d∗[1,k]_r` (or `d∗[0,k-1]_r`).
    FullInverse,
    /// Lower bound on `|Σ_α(𝔸)|`.
    Tail,
    /// Equality in `Tail` forces the same progression structure.
    TailInverse,
}

impl SubseqClaim {
    pub const ALL: [SubseqClaim; 4] = [
        SubseqClaim::Full,
        SubseqClaim::FullInverse,
        SubseqClaim::Tail,
        SubseqClaim::TailInverse,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SubseqClaim::Full => "full",
            SubseqClaim::FullInverse => "full-inverse",
            SubseqClaim::Tail => "tail",
            SubseqClaim::TailInverse => "tail-inverse",
        }
    }

    pub fn is_inverse(self) -> bool {
        matches!(self, SubseqClaim::FullInverse | SubseqClaim::TailInverse)
    }
}

impl fmt::Display for SubseqClaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SubseqClaim {
    type Err = SubseqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        SubseqClaim::ALL
            .into_iter()
            .find(|c| c.id() == norm)
            .ok_or_else(|| SubseqError::UnknownClaim(s.to_string()))
    }
}

/// The progression an inverse claim predicts: `d∗[1,k]_r` or `d∗[0,k-1]_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedShape {
    pub starts_at_zero: bool,
    pub k: usize,
    pub r: u32,
}

impl fmt::Display for ExpectedShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = if self.starts_at_zero {
            (0, self.k as i64 - 1)
        } else {
            (1, self.k as i64)
        };
        write!(f, "d*[{lo},{hi}]_{}", self.r)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub claim: SubseqClaim,
    /// The bound, or for inverse claims the value whose attainment triggers them.
    pub value: i64,
    pub shape: Option<ExpectedShape>,
    /// `m` with `(m-1)r ≤ α < mr`.
    pub m: u64,
    pub violations: Vec<String>,
}

impl Prediction {
    pub fn hypotheses_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn checked(self) -> Result<Self, SubseqError> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(SubseqError::HypothesisViolated(self.violations))
        }
    }
}

/// Evaluates a claim's closed form. The value is always computed; unmet
/// hypotheses are listed rather than raised (see `Prediction::checked`).
pub fn closed_form_prediction(
    claim: SubseqClaim,
    k: usize,
    r: u32,
    alpha: u32,
    contains_zero: bool,
) -> Result<Prediction, SubseqError> {
    if r == 0 {
        return Err(SumsetError::ZeroMultiplicity.into());
    }
    let top = k as u64 * r as u64;
    let alpha = match claim {
        SubseqClaim::Full | SubseqClaim::FullInverse => 1,
        _ => alpha,
    };
    if alpha == 0 || alpha as u64 > top {
        return Err(SubseqError::BadAlpha { alpha, max: top });
    }
    let (ki, ri, a) = (k as i64, r as i64, alpha as i64);
    let m = a / ri + 1;
    let mut violations = Vec::new();
    let mut need = |ok: bool, what: String| {
        if !ok {
            violations.push(what);
        }
    };

    let min_k = match (claim, contains_zero) {
        (SubseqClaim::Full, false) => 3,
        (SubseqClaim::Full, true) | (SubseqClaim::Tail, _) => 4,
        (SubseqClaim::FullInverse, false) => 6,
        (SubseqClaim::FullInverse, true) | (SubseqClaim::TailInverse, _) => 7,
    };
    need(k >= min_k, format!("k >= {min_k} (k={k})"));
    match claim {
        SubseqClaim::Tail => need(a < ki * ri, format!("alpha < kr (alpha={a})")),
        SubseqClaim::TailInverse => need(a <= ki * ri - 2, format!("alpha <= kr-2 (alpha={a})")),
        _ => {}
    }

    let value = if contains_zero {
        ri * ki * (ki - 1) / 2 - ri * m * (m - 1) / 2 + (m - 1) * (m * ri - a) + 1
    } else {
        ri * ki * (ki + 1) / 2 - ri * m * (m + 1) / 2 + m * (m * ri - a) + 1
    };
    let shape = claim.is_inverse().then_some(ExpectedShape {
        starts_at_zero: contains_zero,
        k,
        r,
    });
    Ok(Prediction {
        claim,
        value,
        shape,
        m: m as u64,
        violations,
    })
}

/// Whether `base = d∗[1,k]` (or `d∗[0,k-1]`) for some `d ≥ 1`.
pub fn is_dilated_interval(base: &IntSet) -> bool {
    match ap_witness(base) {
        ApWitness::Progression { first, diff } if base.len() == 1 => first > 0 && diff == 0,
        ApWitness::Progression { first, diff } => diff > 0 && (first == 0 || first == diff),
        ApWitness::Irregular => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubseqReport {
    pub sequence: RepSequence,
    pub alpha: u32,
    pub prediction: Prediction,
    pub cardinality: u64,
    pub holds: bool,
    pub equality: bool,
    pub base_is_dilated_interval: bool,
    /// Inverse claims only: `Some` once hypotheses hold and equality is attained.
    pub conclusion_ok: Option<bool>,
}

/// Computes `|Σ_α(𝔸)|` and compares it with the claim.
pub fn check_subsequence_claim(
    seq: &RepSequence,
    alpha: u32,
    claim: SubseqClaim,
) -> Result<SubseqReport, SubseqError> {
    let prediction =
        closed_form_prediction(claim, seq.k(), seq.r, alpha, seq.base.contains_zero())?;
    let alpha = match claim {
        SubseqClaim::Full | SubseqClaim::FullInverse => 1,
        _ => alpha,
    };
    let cardinality = subsequence_sum_set(seq, alpha)?.len() as u64;
    let holds = cardinality as i64 >= prediction.value;
    let equality = cardinality as i64 == prediction.value;
    let dilated = seq.base.all_nonnegative() && is_dilated_interval(&seq.base);
    let conclusion_ok =
        (claim.is_inverse() && prediction.hypotheses_ok() && equality).then_some(dilated);
    Ok(SubseqReport {
        sequence: seq.clone(),
        alpha,
        prediction,
        cardinality,
        holds,
        equality,
        base_is_dilated_interval: dilated,
        conclusion_ok,
    })
}
