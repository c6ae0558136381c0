//! Exact extremal quantities for progression-free subsets: maximum
//! AP-free subsets of arbitrary sets and of integer segments, a
//! bounded-universe minimizer search, digit-shell and greedy
//! constructions, the block product construction, and exact densities.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::set::{is_progression_free, IntSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BranchBound,
    Naive,
    Cached,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::BranchBound => "branch_bound",
            Method::Naive => "naive",
            Method::Cached => "cached",
        }
    }
}

/// Value and witness of an exact maximum computation.
#[derive(Debug, Clone)]
pub struct ExtremalResult {
    pub value: usize,
    pub witness: IntSet,
    pub method: Method,
    pub k: usize,
    pub instance: String,
}

// ---------------------------------------------------------------------
// branch-and-bound engine
// ---------------------------------------------------------------------

struct Search<'a, T> {
    elems: &'a [T],
    k: usize,
    /// For segment inputs: upper bound on an AP-free subset of any suffix,
    /// indexed by suffix length.
    suffix_bounds: Option<&'a [usize]>,
    /// Stop as soon as a set of this size is found.
    target: Option<usize>,
    best: usize,
    best_witness: Vec<usize>,
    chosen: Vec<usize>,
    chosen_mask: Vec<bool>,
    forbid: Vec<u32>,
    done: bool,
}

impl<'a, T> Search<'a, T>
where
    T: Ord + Clone,
    for<'b> &'b T: Add<&'b T, Output = T> + Sub<&'b T, Output = T>,
{
    fn new(
        elems: &'a [T],
        k: usize,
        suffix_bounds: Option<&'a [usize]>,
        target: Option<usize>,
    ) -> Self {
        Search {
            elems,
            k,
            suffix_bounds,
            target,
            best: 0,
            best_witness: Vec::new(),
            chosen: Vec::new(),
            chosen_mask: vec![false; elems.len()],
            forbid: vec![0; elems.len()],
            done: false,
        }
    }

    fn run(mut self) -> (usize, Vec<usize>) {
        self.dfs(0);
        (self.best, self.best_witness)
    }

    fn dfs(&mut self, idx: usize) {
        if self.done {
            return;
        }
        let n = self.elems.len();
        if idx == n {
            if self.chosen.len() > self.best {
                self.best = self.chosen.len();
                self.best_witness = self.chosen.clone();
                if let Some(t) = self.target {
                    if self.best >= t {
                        self.done = true;
                    }
                }
            }
            return;
        }
        let avail = (idx..n).filter(|&i| self.forbid[i] == 0).count();
        let mut ub = self.chosen.len() + avail;
        if let Some(bounds) = self.suffix_bounds {
            ub = ub.min(self.chosen.len() + bounds[n - idx]);
        }
        let beat = self.target.unwrap_or(self.best + 1);
        if ub < beat {
            return;
        }
        if self.forbid[idx] == 0 {
            let newly = self.include(idx);
            self.dfs(idx + 1);
            self.chosen.pop();
            self.chosen_mask[idx] = false;
            for fi in newly {
                self.forbid[fi] -= 1;
            }
            if self.done {
                return;
            }
        }
        self.dfs(idx + 1);
    }

    /// Add element idx; forbid every element that would now complete a
    /// k-progression. Elements are visited in ascending order, so a
    /// progression is caught exactly when its largest member is added.
    fn include(&mut self, idx: usize) -> Vec<usize> {
        let elems = self.elems;
        let w = &elems[idx];
        let mut newly = Vec::new();
        for ci in 0..self.chosen.len() {
            let u = &elems[self.chosen[ci]];
            // difference d = w - u; the progression ending at w + d needs
            // w - 2d, ..., w - (k-2)d chosen as well
            let mut ok = true;
            let mut t = u.clone();
            for _ in 2..=(self.k - 2) {
                let next = &(&t + u) - w;
                match elems.binary_search(&next) {
                    Ok(i) if self.chosen_mask[i] => t = next,
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let f = &(w + w) - u;
                if let Ok(fi) = elems.binary_search(&f) {
                    self.forbid[fi] += 1;
                    newly.push(fi);
                }
            }
        }
        self.chosen.push(idx);
        self.chosen_mask[idx] = true;
        newly
    }
}

fn solve_indices<T>(
    elems: &[T],
    k: usize,
    suffix_bounds: Option<&[usize]>,
    target: Option<usize>,
) -> (usize, Vec<usize>)
where
    T: Ord + Clone,
    for<'b> &'b T: Add<&'b T, Output = T> + Sub<&'b T, Output = T>,
{
    Search::new(elems, k, suffix_bounds, target).run()
}

// ---------------------------------------------------------------------
// segments
// ---------------------------------------------------------------------

/// Dedicated prover for segments [1..L] in the incremental setting: does
/// an AP-free subset of size exactly table[L-1] + 1 exist? Returns the
/// first witness found in a deterministic canonical order.
///
/// Because the target exceeds the known value of every shorter segment,
/// any witness must contain both endpoints: drop either one and the rest
/// would be an oversized subset of a shorter segment. Both endpoints are
/// therefore preset.
///
/// Interior positions are decided left to right. Reflection maps the
/// search space onto itself, so interior decisions are restricted to
/// configurations lexicographically no smaller than their reflection,
/// compared outward pair by pair.
///
/// Pruning: the undecided window is a segment, so for split points j1 <=
/// j2 the number of further elements is at most (unforbidden positions
/// up to j1) + (known value for the middle length) + (unforbidden
/// positions after j2). Single splits are scanned always; the quadratic
/// two-split refinement runs only when the single-split cap is within 1
/// of the needed count.
struct SegmentProver<'a> {
    len: usize,
    k: usize,
    target: usize,
    /// known values by segment length, complete up to len - 1
    table: &'a [usize],
    chosen: Vec<usize>,
    chosen_mask: u128,
    forbid: Vec<u16>,
    /// last interior position (len - 2)
    limit: usize,
    /// scratch for the two-split bound: allowed counts after each j
    suffix_allowed: Vec<usize>,
    witness: Option<Vec<i64>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MirrorState {
    /// decisions so far equal their reflection; keep enforcing
    Balanced,
    /// lexicographically above the reflection; no further constraint
    Released,
}

impl<'a> SegmentProver<'a> {
    fn prove(len: usize, k: usize, target: usize, table: &'a [usize]) -> Option<Vec<i64>> {
        debug_assert!(len <= 128, "mask width");
        debug_assert_eq!(target, table[len - 1] + 1, "incremental target only");
        if len <= 2 {
            // {1} and {1,2} are progression-free for every k >= 3
            return (target <= len).then(|| (1..=len as i64).take(target).collect());
        }
        let mut s = SegmentProver {
            len,
            k,
            target,
            table,
            chosen: Vec::new(),
            chosen_mask: 0,
            forbid: vec![0; len],
            limit: len - 2,
            suffix_allowed: vec![0; len + 1],
            witness: None,
        };
        // endpoints are forced; preset the right one first so the interior
        // sweep stays ascending afterwards
        let pre = s.include(len - 1);
        debug_assert!(pre.is_empty());
        let _pre = s.include(0);
        s.dfs(1, MirrorState::Balanced);
        s.witness
    }

    fn value_bound(&self, seg_len: usize) -> usize {
        if seg_len < self.table.len() {
            self.table[seg_len]
        } else {
            // monotone unit steps extend the table soundly
            self.table[self.table.len() - 1] + (seg_len - (self.table.len() - 1))
        }
    }

    /// Cap on how many further elements fit into the window [idx, limit].
    fn window_cap(&mut self, idx: usize, needed: usize) -> usize {
        let mut cap = self.value_bound(self.limit - idx + 1);
        let mut allowed = 0usize;
        for j in idx..=self.limit {
            if cap <= allowed {
                break;
            }
            if self.forbid[j] == 0 {
                allowed += 1;
            }
            let with_split = allowed + self.value_bound(self.limit - j);
            if with_split < cap {
                cap = with_split;
            }
        }
        if cap < needed || cap > needed + 1 {
            return cap;
        }
        // near-tight: spend the quadratic two-split refinement
        self.suffix_allowed[self.limit + 1] = 0;
        for j in (idx..=self.limit).rev() {
            self.suffix_allowed[j] =
                self.suffix_allowed[j + 1] + usize::from(self.forbid[j] == 0);
        }
        let mut prefix = 0usize;
        for j1 in idx..=self.limit + 1 {
            if prefix >= cap {
                break;
            }
            for j2 in j1..=self.limit + 1 {
                let middle = self.value_bound(j2 - j1);
                let total = prefix + middle + self.suffix_allowed[j2];
                if total < cap {
                    cap = total;
                }
                if middle >= cap {
                    break;
                }
            }
            if j1 <= self.limit && self.forbid[j1] == 0 {
                prefix += 1;
            }
        }
        cap
    }

    fn dfs(&mut self, idx: usize, mirror: MirrorState) {
        if self.witness.is_some() {
            return;
        }
        if self.chosen.len() == self.target {
            let mut w: Vec<i64> = self.chosen.iter().map(|&i| (i + 1) as i64).collect();
            w.sort_unstable();
            self.witness = Some(w);
            return;
        }
        if idx > self.limit {
            return;
        }
        let needed = self.target - self.chosen.len();
        if self.window_cap(idx, needed) < needed {
            return;
        }
        // mirror partner is decided once we are in the right half
        let partner = self.len - 1 - idx;
        let pair_completes = partner < idx;
        let partner_chosen = self.chosen_mask & (1u128 << partner) != 0;
        if self.forbid[idx] == 0 {
            // canonical rule: at the first differing pair, the element of
            // the pair that is included is the right-half one
            let next_mirror = match mirror {
                MirrorState::Released => Some(MirrorState::Released),
                MirrorState::Balanced if !pair_completes => Some(MirrorState::Balanced),
                MirrorState::Balanced if partner_chosen => Some(MirrorState::Balanced),
                MirrorState::Balanced => Some(MirrorState::Released),
            };
            if let Some(m) = next_mirror {
                let newly = self.include(idx);
                self.dfs(idx + 1, m);
                self.chosen.pop();
                self.chosen_mask &= !(1u128 << idx);
                for fi in newly {
                    self.forbid[fi] -= 1;
                }
                if self.witness.is_some() {
                    return;
                }
            }
        }
        // excluding here while the decided partner is chosen would fall
        // lexicographically below the reflection
        let next_mirror = match mirror {
            MirrorState::Released => MirrorState::Released,
            MirrorState::Balanced if pair_completes && partner_chosen => return,
            MirrorState::Balanced => MirrorState::Balanced,
        };
        self.dfs(idx + 1, next_mirror);
    }

    /// Register idx as chosen and forbid every position that would now
    /// complete a k-progression. Interior positions arrive in ascending
    /// order after the preset endpoints, so a progression is recognized
    /// exactly when its last interior member arrives: either as the
    /// largest member of an all-interior progression, or anchored at the
    /// preset right endpoint through its midpoint with the new element.
    fn include(&mut self, idx: usize) -> Vec<usize> {
        let mut newly = Vec::new();
        let w = idx as i64;
        let hi = (self.len - 1) as i64;
        for ci in 0..self.chosen.len() {
            let u = self.chosen[ci] as i64;
            if u >= w {
                continue;
            }
            let d = w - u;
            let mut ok = true;
            for j in 2..=(self.k as i64 - 2) {
                let t = w - j * d;
                if t < 0 || self.chosen_mask & (1u128 << t) == 0 {
                    ok = false;
                    break;
                }
            }
            if ok {
                let f = w + d;
                if f < hi {
                    self.forbid[f as usize] += 1;
                    newly.push(f as usize);
                }
            }
        }
        // progression through the right endpoint: the element after w is
        // its midpoint with the endpoint, the ones before w are chosen
        if w < hi && self.chosen_mask & (1u128 << hi) != 0 && (w + hi) % 2 == 0 {
            let f = (w + hi) / 2;
            let d = hi - f;
            let mut ok = f > w;
            for j in 2..=(self.k as i64 - 2) {
                let t = f - j * d;
                if t < 0 || self.chosen_mask & (1u128 << t) == 0 {
                    ok = false;
                    break;
                }
            }
            if ok {
                self.forbid[f as usize] += 1;
                newly.push(f as usize);
            }
        }
        self.chosen.push(idx);
        self.chosen_mask |= 1u128 << idx;
        newly
    }
}

/// Extend a table of maximum AP-free subset sizes of [1..L] upward to
/// n_max, reusing already-known lengths for suffix pruning.
///
/// Each length is settled by a targeted search for one more element than
/// the previous length admits; by monotonicity that is the only possible
/// improvement, so the search stops at the first witness found.
fn extend_segment_table(
    k: usize,
    n_max: usize,
    values: &mut Vec<usize>,
    witnesses: &mut Vec<Vec<i64>>,
) {
    if values.is_empty() {
        values.push(0);
        witnesses.push(Vec::new());
    }
    while values.len() <= n_max {
        let l = values.len();
        let prev = values[l - 1];
        let found = if l <= 128 {
            SegmentProver::prove(l, k, prev + 1, values)
        } else {
            // beyond mask width: generic engine with the suffix bound
            let elems: Vec<i64> = (1..=l as i64).collect();
            let bounds: Vec<usize> = (0..=l)
                .map(|len| {
                    if len < values.len() {
                        values[len]
                    } else {
                        values[l - 1] + (len - (l - 1))
                    }
                })
                .collect();
            let (best, wit) = solve_indices(&elems, k, Some(&bounds), Some(prev + 1));
            (best == prev + 1).then(|| wit.into_iter().map(|i| elems[i]).collect())
        };
        match found {
            Some(wit) => {
                values.push(prev + 1);
                witnesses.push(wit);
            }
            None => {
                values.push(prev);
                let inherited = witnesses[l - 1].clone();
                witnesses.push(inherited);
            }
        }
    }
}

/// Persistent store of segment results keyed by (k, n). Kept in memory
/// here; loading and saving live with the command-line front end.
#[derive(Debug, Default, Clone)]
pub struct GTable {
    entries: BTreeMap<(usize, u64), GEntry>,
    dirty: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GEntry {
    pub value: usize,
    pub witness: Vec<BigInt>,
}

impl GTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, k: usize, n: u64) -> Option<&GEntry> {
        self.entries.get(&(k, n))
    }

    pub fn insert(&mut self, k: usize, n: u64, entry: GEntry) {
        if self.entries.get(&(k, n)) != Some(&entry) {
            self.entries.insert((k, n), entry);
            self.dirty = true;
        }
    }

    pub fn remove(&mut self, k: usize, n: u64) {
        if self.entries.remove(&(k, n)).is_some() {
            self.dirty = true;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, u64), &GEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn mark_clean(&mut self) {
        self.dirty = false;
    }
}

fn entry_valid(k: usize, n: u64, entry: &GEntry, prev_value: Option<usize>) -> bool {
    let w = IntSet::new(entry.witness.iter().cloned());
    if w.len() != entry.witness.len() || w.len() != entry.value {
        return false;
    }
    if !w.is_empty() {
        if w.min().unwrap() < &BigInt::from(1) || w.max().unwrap() > &BigInt::from(n) {
            return false;
        }
    }
    if entry.value == 0 || entry.value as u64 > n {
        return false;
    }
    if !is_progression_free(&w, k).unwrap_or(false) {
        return false;
    }
    match prev_value {
        Some(prev) => entry.value >= prev && entry.value <= prev + 1,
        None => entry.value == 1,
    }
}

/// Maximum k-AP-free subset sizes of [1..n] for n = 1..=n_max, with
/// witnesses, read through the cache. Cached entries with invalid
/// witnesses are dropped and recomputed.
pub fn g_table(k: usize, n_max: u64, cache: &mut GTable) -> Result<Vec<ExtremalResult>> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let mut values: Vec<usize> = vec![0];
    let mut witnesses: Vec<Vec<i64>> = vec![Vec::new()];
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let prev = values.last().copied();
        let prev_for_check = if n == 1 { None } else { prev };
        let cached = cache.get(k, n).cloned();
        let (value, witness_vals, method) = match cached {
            Some(entry) if entry_valid(k, n, &entry, prev_for_check) => {
                let wit: Vec<i64> = entry
                    .witness
                    .iter()
                    .map(|v| v.to_i64().expect("validated range"))
                    .collect();
                (entry.value, wit, Method::Cached)
            }
            other => {
                if other.is_some() {
                    eprintln!("warning: dropping invalid cache entry for k={k}, n={n}");
                    cache.remove(k, n);
                }
                extend_segment_table(k, n as usize, &mut values, &mut witnesses);
                (
                    values[n as usize],
                    witnesses[n as usize].clone(),
                    Method::BranchBound,
                )
            }
        };
        // keep the incremental table aligned with accepted cache entries
        if values.len() <= n as usize {
            values.push(value);
            witnesses.push(witness_vals.clone());
        }
        assert!(
            n == 1
                || (value >= values[n as usize - 1]
                    && value <= values[n as usize - 1] + 1),
            "monotone step violated at n={n}"
        );
        let witness = IntSet::new(witness_vals.iter().map(|&v| BigInt::from(v)));
        cache.insert(
            k,
            n,
            GEntry {
                value,
                witness: witness.iter().cloned().collect(),
            },
        );
        out.push(ExtremalResult {
            value,
            witness,
            method,
            k,
            instance: format!("g_{k}({n})"),
        });
    }
    Ok(out)
}

/// g_k(n) alone, through the cache.
pub fn g_value(k: usize, n: u64, cache: &mut GTable) -> Result<ExtremalResult> {
    let mut table = g_table(k, n, cache)?;
    Ok(table.pop().expect("n >= 1"))
}

/// Exact density g_k(n) / n as a rational.
pub fn density(k: usize, n: u64, cache: &mut GTable) -> Result<BigRational> {
    let g = g_value(k, n, cache)?;
    Ok(BigRational::new(BigInt::from(g.value), BigInt::from(n)))
}

// ---------------------------------------------------------------------
// arbitrary sets
// ---------------------------------------------------------------------

fn describe(b: &IntSet) -> String {
    if b.len() <= 10 {
        format!("{b}")
    } else {
        format!("{}-element set", b.len())
    }
}

/// Exact maximum k-AP-free subset of an arbitrary set by branch and
/// bound: elements ascending, include branch first, pruned by available
/// count (and by shorter-segment values when the input is a segment).
///
/// The witness is deterministic: the first maximum-size subset in the
/// search's inclusion order.
pub fn max_apfree_subset(b: &IntSet, k: usize) -> Result<ExtremalResult> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    if b.is_empty() {
        return Err(Error::InvalidInput("input set is empty".into()));
    }
    let instance = format!("f_{k} of {}", describe(b));
    if b.is_contiguous() {
        // translation invariance: solve on [1..len]
        let mut values = Vec::new();
        let mut witnesses = Vec::new();
        extend_segment_table(k, b.len(), &mut values, &mut witnesses);
        let offset = b.min().unwrap() - 1;
        let witness =
            IntSet::new(witnesses[b.len()].iter().map(|&v| BigInt::from(v) + &offset));
        return Ok(ExtremalResult {
            value: values[b.len()],
            witness,
            method: Method::BranchBound,
            k,
            instance,
        });
    }
    let as_small: Option<Vec<i128>> = b.iter().map(|v| v.to_i128()).collect();
    let (value, witness) = match as_small {
        Some(vals) => {
            let (value, idx) = solve_indices(&vals, k, None, None);
            (
                value,
                IntSet::new(idx.into_iter().map(|i| BigInt::from(vals[i]))),
            )
        }
        None => {
            let vals: Vec<BigInt> = b.iter().cloned().collect();
            let (value, idx) = solve_indices(&vals, k, None, None);
            (value, IntSet::new(idx.into_iter().map(|i| vals[i].clone())))
        }
    };
    Ok(ExtremalResult {
        value,
        witness,
        method: Method::BranchBound,
        k,
        instance,
    })
}

/// Independent oracle: exhaustive scan of all subsets. Refuses inputs
/// above 20 elements.
pub fn naive_max_apfree(b: &IntSet, k: usize) -> Result<ExtremalResult> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    let n = b.len();
    if n == 0 {
        return Err(Error::InvalidInput("input set is empty".into()));
    }
    if n > 20 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive scan refused for {n} > 20 elements"
        )));
    }
    let elems = b.elements();
    // bitmasks of every k-progression
    let mut ap_masks: Vec<u32> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = &elems[j] - &elems[i];
            let mut mask = (1u32 << i) | (1u32 << j);
            let mut next = &elems[j] + &d;
            let mut len = 2;
            while len < k {
                match elems.binary_search(&next) {
                    Ok(t) => {
                        mask |= 1 << t;
                        next += &d;
                        len += 1;
                    }
                    Err(_) => break,
                }
            }
            if len == k {
                ap_masks.push(mask);
            }
        }
    }
    let mut best = 0u32;
    let mut best_count = 0;
    for subset in 0u32..(1u32 << n) {
        if subset.count_ones() as usize <= best_count {
            continue;
        }
        if ap_masks.iter().all(|&m| m & subset != m) {
            best = subset;
            best_count = subset.count_ones() as usize;
        }
    }
    let witness = IntSet::new(
        (0..n)
            .filter(|i| best & (1 << i) != 0)
            .map(|i| elems[i].clone()),
    );
    Ok(ExtremalResult {
        value: best_count,
        witness,
        method: Method::Naive,
        k,
        instance: format!("f_{k} of {}", describe(b)),
    })
}

// ---------------------------------------------------------------------
// bounded-universe minimizer
// ---------------------------------------------------------------------

/// Result of the canonical-form minimizer search: an upper bound for the
/// minimum of f_k over all n-element integer sets.
#[derive(Debug, Clone)]
pub struct PhiSearch {
    /// Minimum f_k found over the canonical universe.
    pub value: usize,
    /// The set achieving it, in canonical coordinates (0 = first element).
    pub minimizer: IntSet,
    /// A maximum k-AP-free subset of the minimizer (size = value).
    pub witness: IntSet,
    pub k: usize,
    pub universe_bound: u64,
    pub canonical_sets_examined: usize,
}

/// Minimize f_k(B) over canonical sets B = {0 = b_1 < ... < b_n <= M}
/// with gcd of differences 1 and difference sequence lexicographically
/// no larger than its reversal. Affine invariance of f_k makes every
/// n-element set equivalent to a canonical one once M is large enough,
/// so the result is an upper bound for the unrestricted minimum.
pub fn phi_upper_search(n: usize, k: usize, universe_bound: u64) -> Result<PhiSearch> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if (universe_bound as usize) < n.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "universe bound {universe_bound} cannot hold {n} distinct values from 0"
        )));
    }
    let m = universe_bound as i64;
    let mut best: Option<(usize, Vec<i64>, Vec<i64>)> = None;
    let mut examined = 0usize;
    let mut stack = vec![0i64];
    phi_enum(&mut stack, n, m, &mut examined, &mut best, k);
    let (value, minimizer, witness) = best.expect("at least one canonical set exists");
    Ok(PhiSearch {
        value,
        minimizer: IntSet::from_i64s(&minimizer),
        witness: IntSet::from_i64s(&witness),
        k,
        universe_bound,
        canonical_sets_examined: examined,
    })
}

fn phi_enum(
    prefix: &mut Vec<i64>,
    n: usize,
    m: i64,
    examined: &mut usize,
    best: &mut Option<(usize, Vec<i64>, Vec<i64>)>,
    k: usize,
) {
    if prefix.len() == n {
        if n >= 2 {
            let mut g = 0i64;
            for w in prefix.windows(2) {
                g = num_integer::gcd(g, w[1] - w[0]);
            }
            if g != 1 {
                return;
            }
            let diffs: Vec<i64> = prefix.windows(2).map(|w| w[1] - w[0]).collect();
            let mut rev = diffs.clone();
            rev.reverse();
            if diffs > rev {
                return;
            }
        }
        *examined += 1;
        let (value, wit_idx) = solve_indices(prefix, k, None, None);
        let improves = best.as_ref().map_or(true, |(v, _, _)| value < *v);
        if improves {
            let witness = wit_idx.into_iter().map(|i| prefix[i]).collect();
            *best = Some((value, prefix.clone(), witness));
        }
        return;
    }
    let remaining = (n - prefix.len()) as i64;
    let lo = prefix.last().unwrap() + 1;
    let hi = m - (remaining - 1);
    for v in lo..=hi {
        prefix.push(v);
        phi_enum(prefix, n, m, examined, best, k);
        prefix.pop();
    }
}

// ---------------------------------------------------------------------
// constructions
// ---------------------------------------------------------------------

/// 3-AP-free set in [1, n] built from digit vectors on a Euclidean
/// sphere: digits below d/2 in base d make doubling carry-free, and a
/// fixed norm shell rules out distinct collinear triples. Scans bases
/// d = 2..=12 and all digit counts, keeping the largest shell that fits
/// inside [1, n].
pub fn behrend_set(n: u64) -> IntSet {
    assert!(n >= 1, "need a nonempty range");
    let mut best: Vec<u64> = vec![1];
    for d in 2u64..=12 {
        let q = (d - 1) / 2;
        if q == 0 {
            continue;
        }
        let mut digits = 1u32;
        loop {
            let weight = d.checked_pow(digits - 1);
            match weight {
                Some(w) if w <= n => {}
                _ => break,
            }
            if (q + 1).checked_pow(digits).is_none_or(|c| c > 20_000_000) {
                break;
            }
            let mut shells: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
            let mut vec = vec![0u64; digits as usize];
            collect_shells(d, q, n, &mut vec, 0, 0, 0, &mut shells);
            for shell in shells.values() {
                if shell.len() > best.len() {
                    best = shell.clone();
                }
            }
            digits += 1;
        }
    }
    let out = IntSet::new(best.into_iter().map(BigInt::from));
    debug_assert!(is_progression_free(&out, 3).unwrap());
    out
}

#[allow(clippy::too_many_arguments)]
fn collect_shells(
    d: u64,
    q: u64,
    n: u64,
    digits: &mut Vec<u64>,
    pos: usize,
    value: u64,
    norm: u64,
    shells: &mut BTreeMap<u64, Vec<u64>>,
) {
    if pos == digits.len() {
        if value >= 1 && value <= n {
            shells.entry(norm).or_default().push(value);
        }
        return;
    }
    let place = d.pow(pos as u32);
    for a in 0..=q {
        let value = value + a * place;
        if value > n {
            break;
        }
        digits[pos] = a;
        collect_shells(d, q, n, digits, pos + 1, value, norm + a * a, shells);
    }
}

/// Greedy k-AP-free set: scan 1..=n, keeping each element that closes no
/// k-progression with the elements already kept.
pub fn greedy_apfree(n: u64, k: usize) -> Result<IntSet> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut chosen: Vec<u64> = Vec::new();
    let mut mask = vec![false; (n + 1) as usize];
    'scan: for w in 1..=n {
        for &u in &chosen {
            let d = w - u;
            let mut ok = true;
            // need w - 2d, ..., w - (k-1)d all chosen
            for j in 2..=(k as u64 - 1) {
                let step = j * d;
                if step >= w || !mask[(w - step) as usize] {
                    ok = false;
                    break;
                }
            }
            if ok {
                continue 'scan;
            }
        }
        chosen.push(w);
        mask[w as usize] = true;
    }
    Ok(IntSet::new(chosen.into_iter().map(BigInt::from)))
}

/// Block product: place a translated copy of `s_b` into the middle third
/// of the i-th block of length 3b, for every i in `s_a`. The result
/// multiplies the sizes and stays k-AP-free inside [1, 3ab].
pub fn product_construct(
    s_a: &IntSet,
    a: &BigInt,
    s_b: &IntSet,
    b: &BigInt,
    k: usize,
) -> Result<IntSet> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    if s_a.is_empty() || s_b.is_empty() {
        return Err(Error::InvalidInput("factor sets must be nonempty".into()));
    }
    let one = BigInt::from(1);
    if s_a.min().unwrap() < &one || s_a.max().unwrap() > a {
        return Err(Error::InvalidInput(format!(
            "first factor is not contained in [1, {a}]"
        )));
    }
    if s_b.min().unwrap() < &one || s_b.max().unwrap() > b {
        return Err(Error::InvalidInput(format!(
            "second factor is not contained in [1, {b}]"
        )));
    }
    if !is_progression_free(s_a, 3)? {
        return Err(Error::InvalidInput(
            "first factor contains a 3-term progression".into(),
        ));
    }
    if !is_progression_free(s_b, k)? {
        return Err(Error::InvalidInput(format!(
            "second factor contains a {k}-term progression"
        )));
    }
    let three_b = BigInt::from(3) * b;
    let mut out = Vec::with_capacity(s_a.len() * s_b.len());
    for i in s_a.iter() {
        let base = (i - 1) * &three_b + b;
        for e in s_b.iter() {
            out.push(&base + e);
        }
    }
    let product = IntSet::new(out);
    debug_assert_eq!(product.len(), s_a.len() * s_b.len());
    debug_assert!(product.max().unwrap() <= &(BigInt::from(3) * a * b));
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn set(vals: &[i64]) -> IntSet {
        IntSet::from_i64s(vals)
    }

    #[test]
    fn segment_five_value_four() {
        let r = max_apfree_subset(&IntSet::segment(1, 5), 3).unwrap();
        assert_eq!(r.value, 4);
        assert_eq!(r.witness.len(), 4);
        assert!(is_progression_free(&r.witness, 3).unwrap());
    }

    #[test]
    fn five_point_counterexample_set() {
        let r = max_apfree_subset(&set(&[1, 2, 3, 4, 7]), 3).unwrap();
        assert_eq!(r.value, 3);
    }

    #[test]
    fn segment_nine() {
        let r = max_apfree_subset(&IntSet::segment(1, 9), 3).unwrap();
        assert_eq!(r.value, 5);
    }

    #[test]
    fn naive_examples() {
        assert_eq!(naive_max_apfree(&IntSet::segment(1, 5), 3).unwrap().value, 4);
        assert_eq!(naive_max_apfree(&set(&[1]), 3).unwrap().value, 1);
        assert_eq!(naive_max_apfree(&IntSet::segment(1, 4), 4).unwrap().value, 3);
        assert!(naive_max_apfree(&IntSet::segment(1, 21), 3).is_err());
    }

    #[test]
    fn solver_matches_naive_oracle() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..60 {
            let n = rng.random_range(1..=10usize);
            let vals: Vec<i64> = (0..n).map(|_| rng.random_range(1..=14)).collect();
            let b = set(&vals);
            for k in 3..=5usize {
                let bb = max_apfree_subset(&b, k).unwrap();
                let nv = naive_max_apfree(&b, k).unwrap();
                assert_eq!(bb.value, nv.value, "B={b} k={k}");
                assert!(is_progression_free(&bb.witness, k).unwrap());
                assert_eq!(bb.witness.len(), bb.value);
                assert!(bb.witness.is_subset_of(&b));
            }
        }
    }

    #[test]
    fn g_table_small_values() {
        let mut cache = GTable::new();
        let table = g_table(3, 9, &mut cache).unwrap();
        let values: Vec<usize> = table.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![1, 2, 2, 3, 4, 4, 4, 4, 5]);
        for r in &table {
            assert!(is_progression_free(&r.witness, 3).unwrap());
            assert_eq!(r.witness.len(), r.value);
        }
    }

    #[test]
    fn g_table_k4() {
        let mut cache = GTable::new();
        let table = g_table(4, 6, &mut cache).unwrap();
        let values: Vec<usize> = table.iter().map(|r| r.value).collect();
        // n=4 is the first constrained case: {1,2,3,4} is a 4-progression
        assert_eq!(values[3], 3);
        for w in table.windows(2) {
            assert!(w[1].value == w[0].value || w[1].value == w[0].value + 1);
        }
    }

    #[test]
    fn g_table_reads_through_cache() {
        let mut cache = GTable::new();
        let first = g_table(3, 8, &mut cache).unwrap();
        assert!(first.iter().all(|r| r.method == Method::BranchBound));
        assert!(cache.is_dirty());
        cache.mark_clean();
        let second = g_table(3, 8, &mut cache).unwrap();
        assert!(second.iter().all(|r| r.method == Method::Cached));
        assert!(!cache.is_dirty());
        assert_eq!(
            first.iter().map(|r| r.value).collect::<Vec<_>>(),
            second.iter().map(|r| r.value).collect::<Vec<_>>()
        );
    }

    #[test]
    fn g_table_heals_poisoned_witness() {
        let mut cache = GTable::new();
        g_table(3, 5, &mut cache).unwrap();
        // poison g_3(5) with a witness containing a progression
        cache.insert(
            3,
            5,
            GEntry {
                value: 4,
                witness: vec![1.into(), 2.into(), 3.into(), 5.into()],
            },
        );
        let table = g_table(3, 5, &mut cache).unwrap();
        assert_eq!(table[4].value, 4);
        assert_eq!(table[4].method, Method::BranchBound);
        assert!(is_progression_free(&table[4].witness, 3).unwrap());
    }

    #[test]
    fn density_values() {
        let mut cache = GTable::new();
        assert_eq!(
            density(3, 5, &mut cache).unwrap(),
            BigRational::new(4.into(), 5.into())
        );
        assert_eq!(
            density(3, 1, &mut cache).unwrap(),
            BigRational::from_integer(1.into())
        );
        // g_3(12) = 6, and the product inequality holds against a=b=2
        let d12 = density(3, 12, &mut cache).unwrap();
        assert_eq!(d12, BigRational::new(1.into(), 2.into()));
        let d2 = density(3, 2, &mut cache).unwrap();
        assert!(d12 >= &d2 * &d2 / BigRational::from_integer(3.into()));
    }

    #[test]
    fn affine_invariance() {
        let mut rng = StdRng::seed_from_u64(53);
        for _ in 0..25 {
            let n = rng.random_range(1..=9usize);
            let vals: Vec<i64> = (0..n).map(|_| rng.random_range(-30..=30)).collect();
            let b = set(&vals);
            for k in [3usize, 4] {
                let base = max_apfree_subset(&b, k).unwrap();
                for (a, c) in [(1i64, 7i64), (2, 0), (3, 7), (-1, 0), (-2, 7)] {
                    let img = IntSet::new(
                        b.iter().map(|v| BigInt::from(a) * v + BigInt::from(c)),
                    );
                    let r = max_apfree_subset(&img, k).unwrap();
                    assert_eq!(r.value, base.value, "B={b} a={a} c={c} k={k}");
                    // witnesses transport: the image of the base witness is
                    // a valid witness of the same size
                    let wimg = IntSet::new(
                        base.witness
                            .iter()
                            .map(|v| BigInt::from(a) * v + BigInt::from(c)),
                    );
                    assert!(is_progression_free(&wimg, k).unwrap());
                    assert_eq!(wimg.len(), r.value);
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        let r = phi_upper_search(5, 3, 7).unwrap();
        assert_eq!(r.value, 3);
        assert_eq!(r.minimizer, set(&[0, 1, 2, 3, 6]));
        assert_eq!(r.witness.len(), 3);
        assert!(is_progression_free(&r.witness, 3).unwrap());
        assert!(r.witness.is_subset_of(&r.minimizer));

        let two = phi_upper_search(2, 3, 1).unwrap();
        assert_eq!(two.value, 2);
        assert_eq!(two.minimizer, set(&[0, 1]));

        let four = phi_upper_search(4, 3, 4).unwrap();
        assert_eq!(four.value, 3);
    }

    #[test]
    fn phi_rejects_tight_universe() {
        assert!(phi_upper_search(5, 3, 3).is_err());
    }

    #[test]
    fn phi_at_most_g() {
        let mut cache = GTable::new();
        for k in [3usize, 4] {
            for n in 2..=6usize {
                let g = g_value(k, n as u64, &mut cache).unwrap().value;
                for m in (n as u64 - 1)..=9 {
                    let phi = phi_upper_search(n, k, m).unwrap();
                    assert!(phi.value <= g, "n={n} k={k} M={m}");
                }
            }
        }
    }

    #[test]
    fn behrend_examples() {
        assert_eq!(behrend_set(1), set(&[1]));
        let b10 = behrend_set(10);
        assert!(is_progression_free(&b10, 3).unwrap());
        assert!(b10.max().unwrap() <= &BigInt::from(10));
        assert_eq!(b10, set(&[1, 3, 9]));
        let b100 = behrend_set(100);
        assert!(is_progression_free(&b100, 3).unwrap());
        assert!(b100.max().unwrap() <= &BigInt::from(100));
        // weight-two digit sums of powers of three, capped at 100
        assert_eq!(b100.len(), 9);
    }

    #[test]
    fn behrend_is_never_trivial() {
        for n in [2u64, 5, 17, 33, 64, 250, 1000] {
            let b = behrend_set(n);
            assert!(!b.is_empty());
            assert!(b.min().unwrap() >= &BigInt::from(1));
            assert!(b.max().unwrap() <= &BigInt::from(n));
            assert!(is_progression_free(&b, 3).unwrap());
        }
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(
            greedy_apfree(13, 3).unwrap(),
            set(&[1, 2, 4, 5, 10, 11, 13])
        );
        assert_eq!(greedy_apfree(3, 3).unwrap(), set(&[1, 2]));
        assert_eq!(greedy_apfree(5, 4).unwrap(), set(&[1, 2, 3, 5]));
    }

    #[test]
    fn greedy_always_free() {
        for k in 3..=5usize {
            for n in [1u64, 2, 10, 40, 100] {
                let g = greedy_apfree(n, k).unwrap();
                assert!(is_progression_free(&g, k).unwrap(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn product_examples() {
        let s = product_construct(
            &set(&[1, 2]),
            &BigInt::from(2),
            &set(&[1, 2]),
            &BigInt::from(2),
            3,
        )
        .unwrap();
        assert_eq!(s, set(&[3, 4, 9, 10]));
        assert!(is_progression_free(&s, 3).unwrap());

        let singleton = product_construct(
            &set(&[1]),
            &BigInt::from(1),
            &set(&[1]),
            &BigInt::from(1),
            5,
        )
        .unwrap();
        assert_eq!(singleton, set(&[2]));

        let err = product_construct(
            &set(&[1, 2]),
            &BigInt::from(3),
            &set(&[1, 2, 3]),
            &BigInt::from(3),
            3,
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn product_inequality_small() {
        // density(3ab) >= density_3(a) * density_k(b) / 3 with exact
        // rationals; the heavier ranges run in the acceptance suite
        let mut cache = GTable::new();
        let three = BigRational::from_integer(3.into());
        for k in [3usize, 4] {
            for a in 1..=4u64 {
                for b in 1..=4u64 {
                    let lhs = density(k, 3 * a * b, &mut cache).unwrap();
                    let rhs =
                        density(3, a, &mut cache).unwrap() * density(k, b, &mut cache).unwrap()
                            / &three;
                    assert!(lhs >= rhs, "a={a} b={b} k={k}");
                }
            }
        }
    }

    #[test]
    fn product_outputs_are_free_exhaustively() {
        // all AP-free factor pairs with a, b <= 4
        let subsets = |n: i64| -> Vec<IntSet> {
            let mut out = Vec::new();
            for mask in 1u32..(1 << n) {
                let vals: Vec<i64> =
                    (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
                out.push(set(&vals));
            }
            out
        };
        for k in [3usize, 4] {
            for a in 1..=4i64 {
                for b in 1..=4i64 {
                    for sa in subsets(a) {
                        if !is_progression_free(&sa, 3).unwrap() {
                            continue;
                        }
                        for sb in subsets(b) {
                            if !is_progression_free(&sb, k).unwrap() {
                                continue;
                            }
                            let p = product_construct(
                                &sa,
                                &BigInt::from(a),
                                &sb,
                                &BigInt::from(b),
                                k,
                            )
                            .unwrap();
                            assert_eq!(p.len(), sa.len() * sb.len());
                            assert!(p.min().unwrap() >= &BigInt::from(1));
                            assert!(p.max().unwrap() <= &BigInt::from(3 * a * b));
                            assert!(is_progression_free(&p, k).unwrap());
                        }
                    }
                }
            }
        }
    }
}
