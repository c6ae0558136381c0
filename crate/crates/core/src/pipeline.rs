//! End-to-end composition: exponential, cubic, and almost-linear
//! compressions chained into one certificate, pull-back of subsets along
//! the composed map, shift-intersection against a progression-free
//! target, and the full AP-free subset extraction.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::certificate::{
    CompressionChain, CompressionStep, StepParams, ValueMap,
};
use crate::error::{Error, Result};
use crate::extremal::{behrend_set, greedy_apfree, max_apfree_subset, GTable};
use crate::kernel::compress_exponential;
use crate::modular::{compress_almost_linear, compress_cubic};
use crate::set::{is_progression_free, IntSet};

/// Largest target-interval length for which the extraction uses the
/// exact segment solver instead of a construction.
const EXACT_TARGET_MAX: u64 = 32;

/// Parameters of the full pipeline.
///
/// epsilon is the total admissible loss fraction, in (3/4, 1). The
/// window constant for the almost-linear stage defaults to 1/delta with
/// delta = 2 epsilon - 3/2, which keeps that stage's loss within
/// (1/2 + delta) of its input.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    epsilon: BigRational,
    delta: BigRational,
    c: BigRational,
    s: u64,
    k: usize,
    seed: u64,
}

impl PipelineConfig {
    pub fn new(epsilon: BigRational) -> Result<Self> {
        let three_quarters = BigRational::new(3.into(), 4.into());
        if epsilon <= three_quarters || epsilon >= BigRational::one() {
            return Err(Error::InvalidParameter(format!(
                "loss fraction must lie strictly between 3/4 and 1, got {epsilon}"
            )));
        }
        let delta =
            BigRational::from_integer(2.into()) * &epsilon - BigRational::new(3.into(), 2.into());
        let c = delta.recip();
        Ok(PipelineConfig {
            epsilon,
            delta,
            c,
            s: 2,
            k: 3,
            seed: 0,
        })
    }

    pub fn with_c(mut self, c: BigRational) -> Result<Self> {
        if c <= BigRational::from_integer(2.into()) {
            return Err(Error::InvalidParameter(format!(
                "window constant must exceed 2, got {c}"
            )));
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_s(mut self, s: u64) -> Result<Self> {
        if s < 1 {
            return Err(Error::InvalidParameter(
                "shift multiplier must be at least 1".into(),
            ));
        }
        self.s = s;
        Ok(self)
    }

    pub fn with_k(mut self, k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParameter(format!(
                "progression length k must be at least 3, got {k}"
            )));
        }
        self.k = k;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn c(&self) -> &BigRational {
        &self.c
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: &'static str,
    pub input_size: usize,
    pub retained: usize,
    /// max - min of the stage output.
    pub output_span: BigInt,
    /// Whether the stage kept at least its nominal share of elements.
    pub nominal_retention_met: bool,
}

#[derive(Debug, Clone)]
pub struct CompressReport {
    pub input_size: usize,
    pub retained: usize,
    /// The final set lies in [1, interval_length].
    pub interval_length: BigInt,
    pub loss_fraction: BigRational,
    /// 3/4 + delta/2, the budget the stage accounting guarantees when
    /// every stage meets its nominal retention.
    pub loss_budget: BigRational,
    pub loss_within_budget: bool,
    pub stages_nominal: bool,
    /// interval_length / (n ln n).
    pub interval_constant: f64,
    pub stages: Vec<StageReport>,
}

#[derive(Debug, Clone)]
pub struct CompressOutcome {
    pub chain: CompressionChain,
    pub report: CompressReport,
}

fn stage_report(
    stage: &'static str,
    input_size: usize,
    step: &CompressionStep,
    nominal: bool,
) -> StageReport {
    StageReport {
        stage,
        input_size,
        retained: step.retained(),
        output_span: step.output().span(),
        nominal_retention_met: nominal,
    }
}

/// Compose the three compressions and a final shift to minimum 1.
///
/// The chain always verifies; the loss budget 3/4 + delta/2 is reported,
/// and is guaranteed only when every stage met its nominal retention
/// (the report says whether both held).
pub fn compress_full(x: &IntSet, cfg: &PipelineConfig) -> Result<CompressOutcome> {
    let n = x.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "pipeline needs at least 4 elements, got {n}"
        )));
    }

    let step1 = compress_exponential(x).map_err(|e| e.in_stage("exponential"))?;
    let x1 = step1.output();
    let r1 = stage_report("exponential", n, &step1, true);

    let step2 = compress_cubic(&x1).map_err(|e| e.in_stage("mod_half"))?;
    let x2 = step2.output();
    let nominal2 = step2.retained() >= x1.len().div_ceil(2);
    let r2 = stage_report("mod_half", x1.len(), &step2, nominal2);

    let step3 = compress_almost_linear(&x2, cfg.c())
        .map_err(|e| e.in_stage("triple_prune_mod_half"))?;
    let x3 = step3.output();
    let nominal3 = {
        // prune kept at least (1 - 2/c) of its input, then halving kept
        // at least half of the rest
        let kept_after_prune = match &step3.params {
            StepParams::TriplePruneModHalf { pruned, .. } => x2.len() - pruned.len(),
            _ => unreachable!("almost-linear stage emits triple_prune_mod_half"),
        };
        let input = BigRational::from_integer((x2.len() as u64).into());
        let prune_ok = BigRational::from_integer((kept_after_prune as u64).into())
            >= (BigRational::one()
                - BigRational::from_integer(2.into()) / cfg.c())
                * input;
        let half_ok = step3.retained() >= kept_after_prune.div_ceil(2);
        prune_ok && half_ok
    };
    let r3 = stage_report("triple_prune_mod_half", x2.len(), &step3, nominal3);

    // normalize to minimum 1
    let min = x3.min().expect("stage output nonempty").clone();
    let shift = BigInt::one() - &min;
    let map4: ValueMap = x3.iter().map(|v| (v.clone(), v + &shift)).collect();
    let step4 = CompressionStep {
        params: StepParams::ShiftNormalize {
            shift: shift.clone(),
        },
        map: map4,
    };
    let r4 = stage_report("shift_normalize", x3.len(), &step4, true);

    let chain = CompressionChain::new(x.clone(), vec![step1, step2, step3, step4])?;
    debug_assert!(chain.verify()?.pass);

    let retained = chain.retained();
    let final_set = chain.final_set();
    debug_assert_eq!(final_set.min(), Some(&BigInt::one()));
    let interval_length = final_set.max().expect("nonempty").clone();
    let loss_fraction = BigRational::new(
        BigInt::from(n - retained),
        BigInt::from(n),
    );
    let loss_budget = BigRational::new(3.into(), 4.into())
        + cfg.delta() / BigRational::from_integer(2.into());
    let stages_nominal = nominal2 && nominal3;
    let loss_within_budget = loss_fraction <= loss_budget;
    assert!(
        !stages_nominal || loss_within_budget,
        "stage accounting must bound the total loss"
    );
    let interval_constant = interval_length.to_f64().unwrap_or(f64::INFINITY)
        / (n as f64 * (n as f64).ln());

    Ok(CompressOutcome {
        report: CompressReport {
            input_size: n,
            retained,
            interval_length,
            loss_fraction,
            loss_budget,
            loss_within_budget,
            stages_nominal,
            interval_constant,
            stages: vec![r1, r2, r3, r4],
        },
        chain,
    })
}

/// Preimage of a subset of the final set under the chain's composed map.
pub fn pull_back(chain: &CompressionChain, s: &IntSet) -> Result<IntSet> {
    chain.pull_back(s)
}

/// Smallest shift x in [x_lo, x_hi] maximizing |(A + x) ∩ T|, returned
/// with the intersection. Only shifts aligning some element of A with
/// some element of T can give a nonempty intersection, so only those are
/// scanned.
pub fn best_shift(
    a: &IntSet,
    t: &IntSet,
    x_lo: &BigInt,
    x_hi: &BigInt,
) -> Result<(BigInt, IntSet)> {
    if x_lo > x_hi {
        return Err(Error::InvalidRange(format!(
            "shift range [{x_lo}, {x_hi}] is empty"
        )));
    }
    if a.is_empty() {
        return Ok((x_lo.clone(), IntSet::new([])));
    }
    let mut counts: HashMap<BigInt, usize> = HashMap::new();
    for tv in t.iter() {
        for av in a.iter() {
            let shift = tv - av;
            if &shift >= x_lo && &shift <= x_hi {
                *counts.entry(shift).or_insert(0) += 1;
            }
        }
    }
    let best = counts
        .into_iter()
        .max_by(|(xa, ca), (xb, cb)| ca.cmp(cb).then_with(|| xb.cmp(xa)));
    match best {
        None => Ok((x_lo.clone(), IntSet::new([]))),
        Some((shift, _)) => {
            let shifted = a.translate(&shift);
            Ok((shift, shifted.intersection(t)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMethod {
    Exact,
    Behrend,
    Greedy,
}

impl TargetMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetMethod::Exact => "exact",
            TargetMethod::Behrend => "behrend",
            TargetMethod::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractReport {
    pub input_size: usize,
    pub size: usize,
    pub ratio: BigRational,
    pub interval_length: BigInt,
    pub shift: BigInt,
    pub target_method: TargetMethod,
    pub target_size: usize,
    pub verified_free: bool,
    pub compress: CompressReport,
}

#[derive(Debug, Clone)]
pub struct ExtractOutcome {
    pub subset: IntSet,
    pub report: ExtractReport,
}

fn build_target(bound: u64, k: usize) -> Result<(IntSet, TargetMethod)> {
    if bound <= EXACT_TARGET_MAX {
        let r = max_apfree_subset(&IntSet::segment(1, bound as i64), k)?;
        return Ok((r.witness, TargetMethod::Exact));
    }
    let greedy = greedy_apfree(bound, k)?;
    if k == 3 {
        let behrend = behrend_set(bound);
        if behrend.len() > greedy.len() {
            return Ok((behrend, TargetMethod::Behrend));
        }
    }
    Ok((greedy, TargetMethod::Greedy))
}

/// Compress, intersect a shifted image with a k-AP-free target, and pull
/// the intersection back: a k-AP-free subset of the input.
pub fn extract_apfree(x: &IntSet, cfg: &PipelineConfig) -> Result<ExtractOutcome> {
    let n = x.len();
    let k = cfg.k();
    let outcome = compress_full(x, cfg)?;
    let a = outcome.chain.final_set().clone();
    let m = outcome.report.interval_length.clone();

    let bound = ((cfg.s() + 1) * m.to_u64().ok_or_else(|| {
        Error::InvalidInput("final interval too long for target construction".into())
    })?)
    .max(1);
    let (target, target_method) = build_target(bound, k)?;

    let hi = BigInt::from(cfg.s()) * &m;
    let (shift, hits) = best_shift(&a, &target, &BigInt::zero(), &hi)?;
    let in_a = IntSet::new(hits.iter().map(|v| v - &shift));
    let subset = outcome.chain.pull_back(&in_a)?;

    let verified_free = is_progression_free(&subset, k)?;
    assert!(
        subset.is_empty() || verified_free,
        "extracted subset must be progression-free"
    );
    Ok(ExtractOutcome {
        report: ExtractReport {
            input_size: n,
            size: subset.len(),
            ratio: BigRational::new(BigInt::from(subset.len()), BigInt::from(n)),
            interval_length: m,
            shift,
            target_method,
            target_size: target.len(),
            verified_free,
            compress: outcome.report,
        },
        subset,
    })
}

/// Convenience handle for density computations reusing one cache.
pub fn density_with_cache(k: usize, n: u64, cache: &mut GTable) -> Result<BigRational> {
    crate::extremal::density(k, n, cache)
}
