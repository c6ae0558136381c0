//! Compression certificates and their independent verification.
//!
//! A certificate is replayed from its value maps alone: the verifier
//! needs no state from whatever produced the step, only the source set
//! and the injective partial maps.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::set::{enumerate_progressions, IntSet};

/// Injective partial map from input values to output values.
pub type ValueMap = BTreeMap<BigInt, BigInt>;

/// Which residue half a modular reduction kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfChoice {
    /// Residues in [0, (p-1)/2].
    Low,
    /// Residues in [(p-1)/2 + 1, p-1].
    High,
}

impl HalfChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            HalfChoice::Low => "low",
            HalfChoice::High => "high",
        }
    }
}

/// Kind-specific parameters of one compression step, sufficient to
/// reproduce how the step was built (informational for the verifier).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepParams {
    /// Kernel-based compression: scaled solution of the second-difference
    /// system, chosen from the cube [0, cube_side - 1]^t.
    Exponential {
        denominator: BigInt,
        cube_side: u64,
        point: Vec<BigInt>,
        shift: BigInt,
    },
    /// Reduction modulo a prime followed by keeping one residue half.
    ModHalf {
        prime: u64,
        kept: HalfChoice,
        rebase: BigInt,
        /// Whether floor(prime/2) <= n^3 for the input size n.
        cubic_target_met: bool,
    },
    /// Prune the elements sharing a difference divisible by the chosen
    /// window prime, then reduce modulo it and keep one half.
    TriplePruneModHalf {
        prime: u64,
        kept: HalfChoice,
        rebase: BigInt,
        window_lo: u64,
        window_hi: u64,
        primes_in_window: usize,
        triple_count: usize,
        pruned: Vec<BigInt>,
        /// Whether the input span stayed within 8 n^3.
        span_within_cubic: bool,
    },
    /// Affine renormalization y -> y + shift.
    ShiftNormalize { shift: BigInt },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Exponential,
    ModHalf,
    TriplePruneModHalf,
    ShiftNormalize,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Exponential => "exponential",
            StepKind::ModHalf => "mod_half",
            StepKind::TriplePruneModHalf => "triple_prune_mod_half",
            StepKind::ShiftNormalize => "shift_normalize",
        }
    }
}

/// One application of a compressing construction: parameters plus the
/// injective partial value map it induced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressionStep {
    pub params: StepParams,
    pub map: ValueMap,
}

impl CompressionStep {
    pub fn kind(&self) -> StepKind {
        match self.params {
            StepParams::Exponential { .. } => StepKind::Exponential,
            StepParams::ModHalf { .. } => StepKind::ModHalf,
            StepParams::TriplePruneModHalf { .. } => StepKind::TriplePruneModHalf,
            StepParams::ShiftNormalize { .. } => StepKind::ShiftNormalize,
        }
    }

    pub fn domain(&self) -> IntSet {
        IntSet::new(self.map.keys().cloned())
    }

    pub fn output(&self) -> IntSet {
        IntSet::new(self.map.values().cloned())
    }

    pub fn retained(&self) -> usize {
        self.map.len()
    }

    /// Replay this step's value map against an input set.
    pub fn verify(&self, input: &IntSet) -> Result<VerificationReport> {
        verify_value_map(input, &self.map)
    }
}

/// Result of replaying a value map against a set.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub injective: bool,
    pub domain_size: usize,
    /// 3-term progressions of the input lying fully inside the map domain.
    pub progressions_checked: usize,
    pub violations: usize,
    /// First violated progression: (input triple, image triple).
    pub first_violation: Option<(Vec<BigInt>, Vec<BigInt>)>,
    pub retained: usize,
    pub max_output: Option<BigInt>,
    pub pass: bool,
}

/// Check that `map` is an injective partial map on `x` preserving every
/// 3-term progression relation x_i - 2 x_j + x_k = 0 whose elements all
/// lie in the map's domain.
///
/// Verification replays only the value map; it is independent of how the
/// step was produced. A map referencing values absent from `x` is a
/// malformed certificate, not a failed one.
pub fn verify_value_map(x: &IntSet, map: &ValueMap) -> Result<VerificationReport> {
    for from in map.keys() {
        if !x.contains(from) {
            return Err(Error::MalformedCertificate(format!(
                "map domain value {from} is not an element of the input set"
            )));
        }
    }
    let images: BTreeSet<&BigInt> = map.values().collect();
    let injective = images.len() == map.len();

    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut first_violation = None;
    for p in enumerate_progressions(x, 3)? {
        let v = p.values();
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        let (Some(ya), Some(yb), Some(yc)) = (map.get(a), map.get(b), map.get(c)) else {
            continue;
        };
        checked += 1;
        let relation = ya + yc - BigInt::from(2) * yb;
        if !relation.is_zero() {
            violations += 1;
            if first_violation.is_none() {
                first_violation = Some((
                    vec![a.clone(), b.clone(), c.clone()],
                    vec![ya.clone(), yb.clone(), yc.clone()],
                ));
            }
        }
    }

    let pass = injective && violations == 0;
    Ok(VerificationReport {
        injective,
        domain_size: map.len(),
        progressions_checked: checked,
        violations,
        first_violation,
        retained: map.len(),
        max_output: map.values().max().cloned(),
        pass,
    })
}

/// A composed certificate: an ordered list of steps together with the
/// induced injective partial map from the source set to the final set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressionChain {
    source: IntSet,
    steps: Vec<CompressionStep>,
    composed: ValueMap,
    final_set: IntSet,
}

impl CompressionChain {
    /// Compose `steps` over `source`. Each step's domain must lie inside
    /// the previous step's output (the first inside `source`).
    pub fn new(source: IntSet, steps: Vec<CompressionStep>) -> Result<Self> {
        let mut current = source.clone();
        for (i, step) in steps.iter().enumerate() {
            if !step.domain().is_subset_of(&current) {
                return Err(Error::MalformedCertificate(format!(
                    "step {i} ({}) maps values outside its input set",
                    step.kind().as_str()
                )));
            }
            current = step.output();
        }
        let composed = compose_maps(&source, &steps);
        let final_set = IntSet::new(composed.values().cloned());
        Ok(CompressionChain {
            source,
            steps,
            composed,
            final_set,
        })
    }

    pub fn source(&self) -> &IntSet {
        &self.source
    }

    pub fn steps(&self) -> &[CompressionStep] {
        &self.steps
    }

    pub fn composed(&self) -> &ValueMap {
        &self.composed
    }

    pub fn final_set(&self) -> &IntSet {
        &self.final_set
    }

    pub fn retained(&self) -> usize {
        self.composed.len()
    }

    /// Preimage of `s` under the composed map.
    pub fn pull_back(&self, s: &IntSet) -> Result<IntSet> {
        if !s.is_subset_of(&self.final_set) {
            return Err(Error::InvalidInput(
                "pull-back target is not a subset of the final set".into(),
            ));
        }
        let back: ValueMap = self
            .composed
            .iter()
            .map(|(from, to)| (to.clone(), from.clone()))
            .collect();
        let pre = IntSet::new(s.iter().map(|v| back[v].clone()));
        debug_assert_eq!(pre.len(), s.len());
        Ok(pre)
    }

    /// Replay every step against its input, replay the composed map
    /// against the source, and check that the stored composition matches
    /// the recomputed one.
    pub fn verify(&self) -> Result<ChainVerificationReport> {
        let mut step_reports = Vec::with_capacity(self.steps.len());
        let mut current = self.source.clone();
        for step in &self.steps {
            step_reports.push(step.verify(&current)?);
            current = step.output();
        }
        let composed_report = verify_value_map(&self.source, &self.composed)?;
        let composition_consistent = compose_maps(&self.source, &self.steps) == self.composed
            && self.final_set.len() == self.composed.len();
        let pass = step_reports.iter().all(|r| r.pass)
            && composed_report.pass
            && composition_consistent;
        Ok(ChainVerificationReport {
            step_reports,
            composed: composed_report,
            composition_consistent,
            pass,
        })
    }
}

fn compose_maps(source: &IntSet, steps: &[CompressionStep]) -> ValueMap {
    let mut composed = ValueMap::new();
    'outer: for x in source.iter() {
        let mut v = x.clone();
        for step in steps {
            match step.map.get(&v) {
                Some(next) => v = next.clone(),
                None => continue 'outer,
            }
        }
        composed.insert(x.clone(), v);
    }
    composed
}

#[derive(Debug, Clone)]
pub struct ChainVerificationReport {
    pub step_reports: Vec<VerificationReport>,
    pub composed: VerificationReport,
    pub composition_consistent: bool,
    pub pass: bool,
}
