//! Prime-modulus compressions: reduction modulo a non-dividing prime with
//! the half-interval trick, the cubic-interval construction, and the
//! almost-linear-interval construction over a prime window.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::certificate::{CompressionStep, HalfChoice, StepParams, ValueMap};
use crate::error::{Error, Result};
use crate::set::IntSet;

/// All primes in an inclusive range, exhaustively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeWindow {
    pub lo: u64,
    pub hi: u64,
    pub primes: Vec<u64>,
}

/// Segmented sieve over [lo, hi].
pub fn primes_in_window(lo: u64, hi: u64) -> Result<PrimeWindow> {
    if lo < 2 {
        return Err(Error::InvalidRange(format!(
            "window must start at 2 or above, got {lo}"
        )));
    }
    if hi < lo {
        return Err(Error::InvalidRange(format!(
            "window [{lo}, {hi}] is empty"
        )));
    }
    let root = hi.isqrt();
    let mut base_is_prime = vec![true; (root + 1) as usize];
    let mut base = Vec::new();
    for p in 2..=root {
        if base_is_prime[p as usize] {
            base.push(p);
            let mut q = p * p;
            while q <= root {
                base_is_prime[q as usize] = false;
                q += p;
            }
        }
    }
    let len = (hi - lo + 1) as usize;
    let mut segment = vec![true; len];
    for &p in &base {
        let mut start = (lo).div_ceil(p).max(2) * p;
        if start < p * p {
            start = p * p;
        }
        let mut q = start;
        while q <= hi {
            segment[(q - lo) as usize] = false;
            q += p;
        }
    }
    let primes = segment
        .iter()
        .enumerate()
        .filter_map(|(i, &is_p)| {
            let v = lo + i as u64;
            (is_p && v >= 2).then_some(v)
        })
        .collect();
    Ok(PrimeWindow { lo, hi, primes })
}

/// The smallest prime and its cubic-bound flag found by
/// [`find_nondividing_prime`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NondividingPrime {
    pub prime: u64,
    /// Whether prime < 2 n^3 for the input size n.
    pub within_cubic_bound: bool,
}

fn residues_mod(x: &IntSet, p: u64) -> Vec<u64> {
    let modulus = BigInt::from(p);
    x.iter()
        .map(|v| v.mod_floor(&modulus).to_u64().expect("residue < p"))
        .collect()
}

fn residues_distinct(x: &IntSet, p: u64) -> bool {
    if (x.len() as u128) > p as u128 {
        return false;
    }
    let rs = residues_mod(x, p);
    let mut seen = std::collections::HashSet::with_capacity(rs.len());
    rs.into_iter().all(|r| seen.insert(r))
}

/// Smallest prime dividing no pairwise difference of `x` (equivalently:
/// the residues of `x` modulo it are pairwise distinct).
pub fn find_nondividing_prime(x: &IntSet) -> Result<NondividingPrime> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need at least two elements to have differences".into(),
        ));
    }
    let mut lo = 2u64;
    let mut hi = 4096u64;
    loop {
        let window = primes_in_window(lo, hi)?;
        for p in window.primes {
            if residues_distinct(x, p) {
                let n = n as u128;
                let within = (p as u128) < 2 * n * n * n;
                return Ok(NondividingPrime {
                    prime: p,
                    within_cubic_bound: within,
                });
            }
        }
        lo = hi + 1;
        hi *= 2;
    }
}

fn mod_half_parts(x: &IntSet, p: u64) -> Result<(ValueMap, HalfChoice, BigInt)> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("{p} is not a prime")));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("input set is empty".into()));
    }
    if !residues_distinct(x, p) {
        return Err(Error::Precondition(format!(
            "{p} divides a difference of the input set; residues collide"
        )));
    }
    let residues = residues_mod(x, p);
    let half_bound = (p - 1) / 2;
    let low: Vec<(usize, u64)> = residues
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r <= half_bound)
        .map(|(i, &r)| (i, r))
        .collect();
    let high: Vec<(usize, u64)> = residues
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r > half_bound)
        .map(|(i, &r)| (i, r))
        .collect();
    let (kept, choice) = if low.len() >= high.len() {
        (low, HalfChoice::Low)
    } else {
        (high, HalfChoice::High)
    };
    debug_assert!(kept.len() >= x.len().div_ceil(2), "pigeonhole over halves");
    let rebase = kept.iter().map(|&(_, r)| r).min().expect("nonempty half");
    let elems = x.elements();
    let map: ValueMap = kept
        .iter()
        .map(|&(i, r)| (elems[i].clone(), BigInt::from(r - rebase)))
        .collect();
    Ok((map, choice, BigInt::from(rebase)))
}

/// Map the elements of `x` to their residues modulo `p`, keep the larger
/// residue half (ties toward the low half), and re-base so the minimum
/// kept value is 0.
///
/// The output width is below p/2, which forces every preserved congruence
/// y_i - 2 y_j + y_k = 0 (mod p) to hold over the integers. Requires that
/// `p` divides no difference of `x`.
pub fn reduce_mod_half(x: &IntSet, p: u64) -> Result<CompressionStep> {
    let (map, kept, rebase) = mod_half_parts(x, p)?;
    let n = x.len() as u128;
    let cubic_target_met = (p as u128 / 2) <= n * n * n;
    Ok(CompressionStep {
        params: StepParams::ModHalf {
            prime: p,
            kept,
            rebase,
            cubic_target_met,
        },
        map,
    })
}

/// Compression into a short interval via the smallest non-dividing prime:
/// at least half of the elements survive into [0, floor(p/2)], and the
/// step records whether floor(p/2) <= n^3 was achieved.
pub fn compress_cubic(x: &IntSet) -> Result<CompressionStep> {
    if x.len() < 2 {
        return Err(Error::InvalidInput(
            "cubic compression needs at least two elements".into(),
        ));
    }
    let p = find_nondividing_prime(x)?;
    reduce_mod_half(x, p.prime)
}

/// Almost-linear compression over a prime window.
///
/// Collects primes in [2n, ceil(2 c n ln n)] (auto-extending the upper end
/// until ceil(c n) primes are present, capped at ten times the nominal
/// end), counts for every window prime the pairs of elements whose
/// difference it divides, picks the prime with the fewest such pairs
/// (smallest prime on ties), removes all elements of those pairs, and
/// applies the half-interval reduction modulo the chosen prime.
pub fn compress_almost_linear(x: &IntSet, c: &BigRational) -> Result<CompressionStep> {
    let two = BigRational::from_integer(2.into());
    if c <= &two {
        return Err(Error::InvalidParameter(format!(
            "window constant must exceed 2, got {c}"
        )));
    }
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidInput("input set is empty".into()));
    }
    let c_f = c.to_f64().expect("rational fits f64");
    let lo = (2 * n) as u64;
    let lo = lo.max(2);
    let nominal_hi = {
        let ln_n = (n as f64).ln();
        let h = (2.0 * c_f * n as f64 * ln_n).ceil() as u64;
        h.max(lo)
    };
    let cap = nominal_hi.saturating_mul(10);
    let needed = (c * BigRational::from_integer(n.into()))
        .ceil()
        .to_integer()
        .to_usize()
        .expect("prime target fits usize");

    let mut hi = nominal_hi;
    let mut window = primes_in_window(lo, hi)?;
    while window.primes.len() < needed && hi < cap {
        let ext_lo = hi + 1;
        hi = (hi.saturating_mul(2)).min(cap);
        let ext = primes_in_window(ext_lo, hi)?;
        window.primes.extend(ext.primes);
        window.hi = hi;
    }
    if window.primes.len() < needed {
        return Err(Error::WindowExhausted {
            lo,
            hi,
            found: window.primes.len(),
            needed,
        });
    }

    let n_big = BigInt::from(n);
    let span_within_cubic = x.span() <= BigInt::from(8) * &n_big * &n_big * &n_big;

    // triples (i, j, t): window prime p_t divides x_j - x_i
    let elems = x.elements();
    let mut pairs_by_prime: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = &elems[j] - &elems[i];
            for &p in &window.primes {
                if diff.mod_floor(&BigInt::from(p)).is_zero() {
                    pairs_by_prime.entry(p).or_default().push((i, j));
                }
            }
        }
    }
    // within the cubic span no difference has three factors above 2n
    let triple_total: usize = pairs_by_prime.values().map(Vec::len).sum();
    debug_assert!(!span_within_cubic || triple_total <= n * (n - 1).max(1));

    let chosen = window
        .primes
        .iter()
        .copied()
        .min_by_key(|p| (pairs_by_prime.get(p).map_or(0, Vec::len), *p))
        .expect("window is nonempty");
    let chosen_pairs = pairs_by_prime.remove(&chosen).unwrap_or_default();
    let triple_count = chosen_pairs.len();

    let mut pruned_idx: Vec<usize> = chosen_pairs
        .iter()
        .flat_map(|&(i, j)| [i, j])
        .collect();
    pruned_idx.sort_unstable();
    pruned_idx.dedup();
    let pruned: Vec<BigInt> = pruned_idx.iter().map(|&i| elems[i].clone()).collect();
    let remaining = IntSet::new(
        (0..n)
            .filter(|i| pruned_idx.binary_search(i).is_err())
            .map(|i| elems[i].clone()),
    );
    if remaining.is_empty() {
        return Err(Error::InvalidInput(
            "pruning removed every element; the window constant is too small for this set"
                .into(),
        ));
    }

    let (map, kept, rebase) = mod_half_parts(&remaining, chosen)?;
    Ok(CompressionStep {
        params: StepParams::TriplePruneModHalf {
            prime: chosen,
            kept,
            rebase,
            window_lo: lo,
            window_hi: window.hi,
            primes_in_window: window.primes.len(),
            triple_count,
            pruned,
            span_within_cubic,
        },
        map,
    })
}
