//! Finite-state Markov semigroups: exact periodic measures, invariant-set
//! enumeration, PS-ergodicity decisions, Condition A checks, and sampling
//! of the canonical path-space process.
//!
//! Subsets of the state space are bitmasks (state counts are capped at 20
//! for exhaustive enumeration). The brute-force subset sweep is the
//! trusted oracle; the communicating-class fast path reproduces it and is
//! cross-checked against it.

use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::linalg;
use crate::rng::RandomStream;
use crate::stats;

/// Hard cap for exhaustive subset enumeration.
pub const MAX_ENUMERATION_STATES: usize = 20;

/// Default threshold standing in for "almost surely": states with measure
/// below this are treated as null.
pub const DEFAULT_ATOL: f64 = 1e-12;

/// Row-stochastic matrix: the one-step kernel of a finite chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(ErgoError::InvalidInput("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ErgoError::InvalidInput(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
                return Err(ErgoError::InvalidInput(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ErgoError::InvalidInput(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(StochasticMatrix { n, rows })
    }

    /// Parses `n` lines of `n` comma-separated reals.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|line| {
                line.split(',')
                    .map(|tok| {
                        tok.trim().parse::<f64>().map_err(|e| {
                            ErgoError::InvalidInput(format!("bad matrix entry {tok:?}: {e}"))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        StochasticMatrix::new(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    /// `(P phi)(x) = sum_y P(x, y) phi(y)`.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        assert_eq!(phi.len(), self.n);
        self.rows
            .iter()
            .map(|row| row.iter().zip(phi).map(|(p, v)| p * v).sum())
            .collect()
    }

    /// `P^k phi`.
    pub fn apply_k(&self, k: usize, phi: &[f64]) -> Vec<f64> {
        let mut v = phi.to_vec();
        for _ in 0..k {
            v = self.apply(&v);
        }
        v
    }

    /// Pushforward of a measure: `(rho P)(y) = sum_x rho(x) P(x, y)`.
    pub fn push_forward(&self, rho: &[f64]) -> Vec<f64> {
        assert_eq!(rho.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (x, w) in rho.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for (y, p) in self.rows[x].iter().enumerate() {
                out[y] += w * p;
            }
        }
        out
    }

    pub fn matmul(&self, other: &StochasticMatrix) -> StochasticMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let a = self.rows[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    rows[i][j] += a * other.rows[k][j];
                }
            }
        }
        StochasticMatrix { n, rows }
    }

    /// `P^k` (`P^0` is the identity).
    pub fn power(&self, k: usize) -> StochasticMatrix {
        let n = self.n;
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut out = StochasticMatrix { n, rows };
        for _ in 0..k {
            out = out.matmul(self);
        }
        out
    }
}

/// Inverse-CDF draw from a probability vector; falls back to the last
/// positive entry so roundoff in the cumulative sum cannot select a
/// null state.
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

// ---------------------------------------------------------------------------
// communicating classes
// ---------------------------------------------------------------------------

/// Mutual-reachability classes of the directed graph with edges where the
/// kernel entry exceeds `atol`; classes are sorted by smallest member.
pub fn communicating_classes(m: &StochasticMatrix, atol: f64) -> Vec<Vec<usize>> {
    let n = m.n();
    // boolean transitive closure; n <= 50 keeps this cheap and obvious
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if m.entry(i, j) > atol {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (i..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            assigned[j] = true;
        }
        classes.push(class);
    }
    classes
}

/// Classes no probability mass leaves (recurrent classes of the kernel).
pub fn closed_classes(m: &StochasticMatrix, atol: f64) -> Vec<Vec<usize>> {
    communicating_classes(m, atol)
        .into_iter()
        .filter(|class| {
            class.iter().all(|&x| {
                let inside: f64 = class.iter().map(|&y| m.entry(x, y)).sum();
                inside >= 1.0 - 1e-9
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// periodic measures
// ---------------------------------------------------------------------------

/// A period-`tau` family of probability vectors cycled by the kernel:
/// `laws[k] P = laws[k+1 mod tau]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePeriodicMeasure {
    tau: usize,
    laws: Vec<Vec<f64>>,
}

impl DiscretePeriodicMeasure {
    /// Validates the defining relations against the kernel; used both on
    /// construction and when loading from configs.
    pub fn new(p: &StochasticMatrix, laws: Vec<Vec<f64>>) -> Result<Self> {
        let tau = laws.len();
        if tau == 0 {
            return Err(ErgoError::InvalidInput("period must be at least 1".into()));
        }
        for (k, law) in laws.iter().enumerate() {
            if law.len() != p.n() {
                return Err(ErgoError::PartitionMismatch(format!(
                    "law {k} has {} entries, kernel has {} states",
                    law.len(),
                    p.n()
                )));
            }
            if law.iter().any(|&w| w < -1e-12) {
                return Err(ErgoError::InvalidInput(format!(
                    "law {k} has negative mass"
                )));
            }
            let sum: f64 = law.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(ErgoError::InvalidInput(format!(
                    "law {k} sums to {sum}, expected 1"
                )));
            }
        }
        for k in 0..tau {
            let pushed = p.push_forward(&laws[k]);
            let next = &laws[(k + 1) % tau];
            let defect = pushed
                .iter()
                .zip(next)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if defect > 1e-10 {
                return Err(ErgoError::NotInvariant(format!(
                    "law {k} pushed forward misses law {} by {defect}",
                    (k + 1) % tau
                )));
            }
        }
        Ok(DiscretePeriodicMeasure { tau, laws })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn law(&self, s: usize) -> &[f64] {
        &self.laws[s % self.tau]
    }

    pub fn laws(&self) -> &[Vec<f64>] {
        &self.laws
    }

    /// The invariant time average over one period.
    pub fn average(&self) -> Vec<f64> {
        let n = self.laws[0].len();
        let mut out = vec![0.0; n];
        for law in &self.laws {
            for (o, w) in out.iter_mut().zip(law) {
                *o += w / self.tau as f64;
            }
        }
        out
    }
}

/// Stationary vector of the kernel restricted to one closed class, by
/// direct linear solve: `(Q^T - I) pi = 0` with the last balance equation
/// replaced by the normalization.
fn class_stationary(m: &StochasticMatrix, class: &[usize]) -> Result<Vec<f64>> {
    let k = class.len();
    let mut a = vec![vec![0.0; k]; k];
    for (ri, &x) in class.iter().enumerate() {
        for (ci, &y) in class.iter().enumerate() {
            a[ci][ri] = m.entry(x, y) - f64::from(ri == ci);
        }
    }
    for v in a[k - 1].iter_mut() {
        *v = 1.0;
    }
    let mut b = vec![0.0; k];
    b[k - 1] = 1.0;
    let pi = linalg::solve(&mut a, &mut b)?;
    if pi.iter().any(|&w| w < -1e-9) {
        return Err(ErgoError::NumericalDegeneracy(
            "stationary solve produced negative mass".into(),
        ));
    }
    // clamp roundoff and check the residual on the original kernel
    let pi: Vec<f64> = pi.iter().map(|&w| w.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.iter().map(|w| w / total).collect();
    let mut residual = 0.0f64;
    for (ci, &y) in class.iter().enumerate() {
        let pushed: f64 = class
            .iter()
            .enumerate()
            .map(|(ri, &x)| pi[ri] * m.entry(x, y))
            .sum();
        residual = residual.max((pushed - pi[ci]).abs());
    }
    if residual > 1e-10 {
        return Err(ErgoError::NumericalDegeneracy(format!(
            "stationary residual {residual}"
        )));
    }
    Ok(pi)
}

/// All extremal periodic measures of period `tau`: one per recurrent class
/// of `P^tau`, each extended along the cycle by `rho_k = rho P^k`.
pub fn find_periodic_measures(
    p: &StochasticMatrix,
    tau: usize,
) -> Result<Vec<DiscretePeriodicMeasure>> {
    if tau == 0 {
        return Err(ErgoError::InvalidInput("period must be at least 1".into()));
    }
    let m = p.power(tau);
    let closed = closed_classes(&m, DEFAULT_ATOL);
    // cross-check: the fixed space of P^tau must match the class count
    let n = p.n();
    let mut shifted = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            shifted[i][j] = m.entry(j, i) - f64::from(i == j);
        }
    }
    let fixed_dim = n - linalg::rank(shifted, 1e-8);
    if fixed_dim != closed.len() {
        return Err(ErgoError::NumericalDegeneracy(format!(
            "fixed space dimension {fixed_dim} != {} recurrent classes",
            closed.len()
        )));
    }
    closed
        .iter()
        .map(|class| {
            let pi = class_stationary(&m, class)?;
            let mut rho0 = vec![0.0; n];
            for (w, &x) in pi.iter().zip(class) {
                rho0[x] = *w;
            }
            let mut laws = Vec::with_capacity(tau);
            let mut current = rho0;
            for _ in 0..tau {
                laws.push(current.clone());
                current = p.push_forward(&current);
            }
            DiscretePeriodicMeasure::new(p, laws)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// invariant sets
// ---------------------------------------------------------------------------

/// All subsets fixed by the `tau`-step kernel almost surely under `rho_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSetFamily {
    /// Section index the family was computed at.
    pub s: usize,
    /// Qualifying subsets as bitmasks, ascending.
    pub subsets: Vec<u32>,
    /// Bitmask of `{x : rho_s(x) > atol}`.
    pub support: u32,
    pub atol: f64,
}

pub fn mask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

pub fn indices_to_mask(indices: &[usize]) -> u32 {
    indices.iter().fold(0u32, |m, &i| m | (1 << i))
}

fn support_mask(rho: &[f64], atol: f64) -> u32 {
    rho.iter()
        .enumerate()
        .filter(|(_, &w)| w > atol)
        .fold(0u32, |m, (i, _)| m | (1 << i))
}

/// Exhaustive sweep over all `2^n` bitmasks: a subset qualifies when
/// `(P^tau 1_G)(x)` matches the indicator at every supported state within
/// `atol`. Gray-code order keeps the indicator image incrementally updated.
pub fn enumerate_invariant_sets(
    p: &StochasticMatrix,
    tau: usize,
    rho_s: &[f64],
    s: usize,
    atol: f64,
) -> Result<InvariantSetFamily> {
    let n = p.n();
    if n > MAX_ENUMERATION_STATES {
        return Err(ErgoError::StateSpaceTooLarge {
            n,
            max: MAX_ENUMERATION_STATES,
        });
    }
    if rho_s.len() != n {
        return Err(ErgoError::PartitionMismatch(format!(
            "measure has {} entries, kernel has {n} states",
            rho_s.len()
        )));
    }
    let m = p.power(tau);
    let support = support_mask(rho_s, atol);
    let supported: Vec<usize> = mask_to_indices(support);

    let qualifies = |mask: u32, image: &[f64]| {
        supported.iter().all(|&x| {
            let want = f64::from(mask & (1 << x) != 0);
            (image[x] - want).abs() <= atol
        })
    };

    let mut image = vec![0.0f64; n]; // (P^tau 1_G)(x) for the current mask
    let mut mask = 0u32;
    let mut subsets = Vec::new();
    if qualifies(mask, &image) {
        subsets.push(mask);
    }
    for i in 1u64..(1u64 << n) {
        let bit = i.trailing_zeros() as usize; // gray-code toggle
        let adding = mask & (1 << bit) == 0;
        mask ^= 1 << bit;
        for x in 0..n {
            let col = m.entry(x, bit);
            if adding {
                image[x] += col;
            } else {
                image[x] -= col;
            }
        }
        if qualifies(mask, &image) {
            subsets.push(mask);
        }
    }
    subsets.sort_unstable();
    Ok(InvariantSetFamily {
        s,
        subsets,
        support,
        atol,
    })
}

/// Structural fast path: qualifying subsets are unions of recurrent
/// classes of `P^tau` inside the support plus arbitrary off-support
/// states. Requires the support to be an exact union of closed classes
/// (which holds for any valid periodic measure).
pub fn structural_invariant_sets(
    p: &StochasticMatrix,
    tau: usize,
    rho_s: &[f64],
    s: usize,
    atol: f64,
) -> Result<InvariantSetFamily> {
    let n = p.n();
    if rho_s.len() != n {
        return Err(ErgoError::PartitionMismatch(format!(
            "measure has {} entries, kernel has {n} states",
            rho_s.len()
        )));
    }
    let m = p.power(tau);
    let support = support_mask(rho_s, atol);
    let closed = closed_classes(&m, atol.max(DEFAULT_ATOL));
    let mut class_masks = Vec::new();
    let mut covered = 0u32;
    for class in &closed {
        let cm = indices_to_mask(class);
        if cm & support != 0 {
            if cm & support != cm {
                return Err(ErgoError::NumericalDegeneracy(
                    "support covers a recurrent class only partially".into(),
                ));
            }
            class_masks.push(cm);
            covered |= cm;
        }
    }
    if covered != support {
        return Err(ErgoError::NumericalDegeneracy(
            "support charges transient states".into(),
        ));
    }
    let free = !support & ((1u32 << n) - 1);
    let free_bits = mask_to_indices(free);
    let mut subsets = Vec::new();
    for class_choice in 0u32..(1 << class_masks.len()) {
        let mut base = 0u32;
        for (i, cm) in class_masks.iter().enumerate() {
            if class_choice & (1 << i) != 0 {
                base |= cm;
            }
        }
        for free_choice in 0u64..(1u64 << free_bits.len()) {
            let mut mask = base;
            for (i, &b) in free_bits.iter().enumerate() {
                if free_choice & (1 << i) != 0 {
                    mask |= 1 << b;
                }
            }
            subsets.push(mask);
        }
    }
    subsets.sort_unstable();
    subsets.dedup();
    Ok(InvariantSetFamily {
        s,
        subsets,
        support,
        atol,
    })
}

// ---------------------------------------------------------------------------
// PS-ergodicity
// ---------------------------------------------------------------------------

/// A violating invariant set: its measure sits strictly between 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsWitness {
    pub s: usize,
    pub subset: u32,
    pub states: Vec<usize>,
    pub measure: f64,
}

/// Per-section verdicts; a witness is attached exactly when a section
/// fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsErgodicityVerdict {
    pub per_s: Vec<bool>,
    pub witnesses: Vec<Option<PsWitness>>,
    pub atol: f64,
}

impl PsErgodicityVerdict {
    pub fn all_ergodic(&self) -> bool {
        self.per_s.iter().all(|&v| v)
    }
}

fn measure_of(rho: &[f64], mask: u32) -> f64 {
    mask_to_indices(mask).iter().map(|&i| rho[i]).sum()
}

/// Is `1_G` fixed by the one-step kernel at every supported state? Used to
/// prefer witnesses that are invariant for the full semigroup, which are
/// the strongest counterexamples.
fn one_step_invariant(p: &StochasticMatrix, mask: u32, support: u32, atol: f64) -> bool {
    mask_to_indices(support).iter().all(|&x| {
        let image: f64 = mask_to_indices(mask).iter().map(|&y| p.entry(x, y)).sum();
        (image - f64::from(mask & (1 << x) != 0)).abs() <= atol
    })
}

/// Decides PS-ergodicity by brute force: every invariant set must carry
/// measure <= atol or >= 1 - atol at every section.
pub fn is_ps_ergodic(
    p: &StochasticMatrix,
    tau: usize,
    pm: &DiscretePeriodicMeasure,
    atol: f64,
) -> Result<PsErgodicityVerdict> {
    if pm.tau() != tau {
        return Err(ErgoError::InvalidInput(format!(
            "periodic measure has period {}, expected {tau}",
            pm.tau()
        )));
    }
    let mut per_s = Vec::with_capacity(tau);
    let mut witnesses = Vec::with_capacity(tau);
    for s in 0..tau {
        let rho = pm.law(s);
        let family = enumerate_invariant_sets(p, tau, rho, s, atol)?;
        let violating: Vec<u32> = family
            .subsets
            .iter()
            .copied()
            .filter(|&mask| {
                let v = measure_of(rho, mask);
                v > atol && v < 1.0 - atol
            })
            .collect();
        if violating.is_empty() {
            per_s.push(true);
            witnesses.push(None);
        } else {
            let pick = violating
                .iter()
                .copied()
                .min_by_key(|&mask| {
                    let demoted = !one_step_invariant(p, mask, family.support, atol);
                    (demoted, mask.count_ones(), mask)
                })
                .expect("nonempty");
            per_s.push(false);
            witnesses.push(Some(PsWitness {
                s,
                subset: pick,
                states: mask_to_indices(pick),
                measure: measure_of(rho, pick),
            }));
        }
    }
    Ok(PsErgodicityVerdict {
        per_s,
        witnesses,
        atol,
    })
}

/// Structural decision: a section is ergodic exactly when its support
/// meets a single recurrent class of `P^tau`.
pub fn structural_ps_ergodic(
    p: &StochasticMatrix,
    tau: usize,
    pm: &DiscretePeriodicMeasure,
    atol: f64,
) -> Result<Vec<bool>> {
    if pm.tau() != tau {
        return Err(ErgoError::InvalidInput(format!(
            "periodic measure has period {}, expected {tau}",
            pm.tau()
        )));
    }
    let m = p.power(tau);
    let closed = closed_classes(&m, atol.max(DEFAULT_ATOL));
    Ok((0..tau)
        .map(|s| {
            let support = support_mask(pm.law(s), atol);
            let hits = closed
                .iter()
                .filter(|class| indices_to_mask(class) & support != 0)
                .count();
            hits == 1
        })
        .collect())
}

/// Agreement flag between the brute-force and structural decisions,
/// section by section.
pub fn cross_check_ps(
    p: &StochasticMatrix,
    tau: usize,
    pm: &DiscretePeriodicMeasure,
    atol: f64,
) -> Result<bool> {
    let brute = is_ps_ergodic(p, tau, pm, atol)?;
    let structural = structural_ps_ergodic(p, tau, pm, atol)?;
    Ok(brute.per_s == structural)
}

// ---------------------------------------------------------------------------
// Condition A
// ---------------------------------------------------------------------------

/// Per-subset tally of how sampled traces relate to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaTally {
    pub subset: u32,
    /// Traces entirely inside the subset.
    pub inside: usize,
    /// Traces entirely outside.
    pub outside: usize,
    /// Traces meeting the subset only partially: Condition A violations.
    pub split: usize,
}

impl GammaTally {
    /// The strengthened form: all sampled noise realizations fall on the
    /// same side of the subset.
    pub fn same_side(&self) -> bool {
        self.split == 0 && (self.inside == 0 || self.outside == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionAReport {
    pub n_paths: usize,
    pub window: usize,
    /// Number of (trace, subset) pairs where the trace splits the subset.
    pub violations: usize,
    pub tallies: Vec<GammaTally>,
}

impl ConditionAReport {
    pub fn strengthened_ok(&self) -> bool {
        self.tallies.iter().all(GammaTally::same_side)
    }
}

fn tally_traces(traces: &[Vec<usize>], subsets: &[u32], window: usize) -> ConditionAReport {
    let mut tallies: Vec<GammaTally> = subsets
        .iter()
        .map(|&subset| GammaTally {
            subset,
            inside: 0,
            outside: 0,
            split: 0,
        })
        .collect();
    let mut violations = 0usize;
    for trace in traces {
        for tally in &mut tallies {
            let hits = trace
                .iter()
                .filter(|&&x| tally.subset & (1 << x) != 0)
                .count();
            if hits == trace.len() {
                tally.inside += 1;
            } else if hits == 0 {
                tally.outside += 1;
            } else {
                tally.split += 1;
                violations += 1;
            }
        }
    }
    ConditionAReport {
        n_paths: traces.len(),
        window,
        violations,
        tallies,
    }
}

/// Checks Condition A against traces produced by `sample_trace`, which
/// receives a per-path stream and must return the trace states at
/// `k = 0 .. window-1` multiples of the period.
pub fn check_condition_a<F>(
    mut sample_trace: F,
    subsets: &[u32],
    n_paths: usize,
    window: usize,
    seed: u64,
) -> Result<ConditionAReport>
where
    F: FnMut(&mut RandomStream) -> Result<Vec<usize>>,
{
    if window < 2 {
        return Err(ErgoError::InvalidInput(format!("window {window} < 2")));
    }
    let base = RandomStream::new(seed, 0x636e_6441);
    let mut traces = Vec::with_capacity(n_paths);
    for i in 0..n_paths {
        let mut stream = base.substream(i as u64);
        let trace = sample_trace(&mut stream)?;
        if trace.len() != window {
            return Err(ErgoError::InvalidInput(format!(
                "sampler returned {} states, expected window {window}",
                trace.len()
            )));
        }
        traces.push(trace);
    }
    Ok(tally_traces(&traces, subsets, window))
}

/// Condition A for the canonical chain: the trace law of an adapted path
/// with section law `init`, namely `x_0 ~ init` followed by `P^tau` steps.
pub fn check_condition_a_canonical(
    p: &StochasticMatrix,
    tau: usize,
    init: &[f64],
    subsets: &[u32],
    n_paths: usize,
    window: usize,
    seed: u64,
) -> Result<ConditionAReport> {
    if init.len() != p.n() {
        return Err(ErgoError::PartitionMismatch(format!(
            "initial law has {} entries, kernel has {} states",
            init.len(),
            p.n()
        )));
    }
    let m = p.power(tau);
    check_condition_a(
        |stream| {
            let mut x = sample_index(init, stream.uniform());
            let mut trace = Vec::with_capacity(window);
            trace.push(x);
            for _ in 1..window {
                x = sample_index(m.row(x), stream.uniform());
                trace.push(x);
            }
            Ok(trace)
        },
        subsets,
        n_paths,
        window,
        seed,
    )
}

// ---------------------------------------------------------------------------
// canonical process
// ---------------------------------------------------------------------------

/// Draws `n_paths` tuples of the canonical process at the given times:
/// `x_1 ~ rho`, then `x_{i+1} ~ P^{t_{i+1} - t_i}(x_i, .)`.
pub fn sample_canonical(
    p: &StochasticMatrix,
    rho: &[f64],
    times: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ErgoError::InvalidInput(
            "times must be strictly increasing and nonempty".into(),
        ));
    }
    if rho.len() != p.n() {
        return Err(ErgoError::PartitionMismatch(format!(
            "initial law has {} entries, kernel has {} states",
            rho.len(),
            p.n()
        )));
    }
    let gaps: Vec<usize> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let kernels: Vec<StochasticMatrix> = gaps.iter().map(|&g| p.power(g)).collect();
    let base = RandomStream::new(seed, 0x6361_6e6f);
    Ok((0..n_paths)
        .map(|i| {
            let mut stream = base.substream(i as u64);
            let mut x = sample_index(rho, stream.uniform());
            let mut tuple = Vec::with_capacity(times.len());
            tuple.push(x);
            for kernel in &kernels {
                x = sample_index(kernel.row(x), stream.uniform());
                tuple.push(x);
            }
            tuple
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftInvarianceReport {
    pub mean_raw: f64,
    pub mean_shifted: f64,
    pub z_score: f64,
}

impl ShiftInvarianceReport {
    pub fn pass(&self) -> bool {
        self.z_score.abs() <= 4.0
    }
}

/// Compares `E[phi(x_{t_1..t_m})]` with `E[phi(x_{t_1+k..t_m+k})]` along
/// shared canonical trajectories. Requires `rho P^k = rho`.
pub fn check_shift_invariance_canonical<F>(
    p: &StochasticMatrix,
    rho: &[f64],
    phi: F,
    times: &[usize],
    shift: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ShiftInvarianceReport>
where
    F: Fn(&[usize]) -> f64,
{
    let mut pushed = rho.to_vec();
    for _ in 0..shift {
        pushed = p.push_forward(&pushed);
    }
    let defect = pushed
        .iter()
        .zip(rho)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if defect > 1e-10 {
        return Err(ErgoError::NotInvariant(format!(
            "rho P^{shift} misses rho by {defect}"
        )));
    }
    // merged time grid covering both windows
    let mut merged: Vec<usize> = times.iter().flat_map(|&t| [t, t + shift]).collect();
    merged.sort_unstable();
    merged.dedup();
    let tuples = sample_canonical(p, rho, &merged, n_paths, seed)?;
    let idx = |t: usize| merged.iter().position(|&u| u == t).expect("merged grid");
    let raw_idx: Vec<usize> = times.iter().map(|&t| idx(t)).collect();
    let shifted_idx: Vec<usize> = times.iter().map(|&t| idx(t + shift)).collect();
    let mut raw = Vec::with_capacity(n_paths);
    let mut shifted = Vec::with_capacity(n_paths);
    for tuple in &tuples {
        let a: Vec<usize> = raw_idx.iter().map(|&i| tuple[i]).collect();
        let b: Vec<usize> = shifted_idx.iter().map(|&i| tuple[i]).collect();
        raw.push(phi(&a));
        shifted.push(phi(&b));
    }
    Ok(ShiftInvarianceReport {
        mean_raw: stats::mean(&raw),
        mean_shifted: stats::mean(&shifted),
        z_score: stats::paired_z(&raw, &shifted),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn flip_chain() -> StochasticMatrix {
        StochasticMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    pub fn two_disjoint_2cycles() -> StochasticMatrix {
        StochasticMatrix::new(vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    pub fn four_cycle() -> StochasticMatrix {
        StochasticMatrix::new(vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn matrix_validation() {
        assert!(StochasticMatrix::new(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).is_ok());
        assert!(StochasticMatrix::new(vec![vec![0.5, 0.4], vec![0.3, 0.7]]).is_err());
        assert!(StochasticMatrix::new(vec![vec![1.2, -0.2], vec![0.3, 0.7]]).is_err());
        assert!(StochasticMatrix::new(vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn csv_parsing() {
        assert!(StochasticMatrix::from_csv("zero,1.0\n1.0,0.0").is_err());
        let m = StochasticMatrix::from_csv("0.0, 1.0\n1.0, 0.0\n").unwrap();
        assert_eq!(m.entry(0, 1), 1.0);
    }

    #[test]
    fn semigroup_apply_examples() {
        let p = flip_chain();
        let phi = vec![1.0, 0.0];
        assert_eq!(p.apply_k(0, &phi), phi);
        assert_eq!(p.apply_k(1, &phi), vec![0.0, 1.0]);
        // constants are fixed by any stochastic matrix
        let q = StochasticMatrix::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let c = q.apply_k(5, &[2.5, 2.5]);
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn communicating_class_structure() {
        let p = two_disjoint_2cycles();
        let classes = communicating_classes(&p, 1e-12);
        assert_eq!(classes, vec![vec![0, 1], vec![2, 3]]);
        // P^2 = I: four singleton classes, all closed
        let m = p.power(2);
        assert_eq!(closed_classes(&m, 1e-12).len(), 4);
        // four-cycle squared: {0,2} and {1,3}
        let m = four_cycle().power(2);
        assert_eq!(closed_classes(&m, 1e-12), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn find_periodic_measures_flip_chain() {
        let p = flip_chain();
        let pms = find_periodic_measures(&p, 2).unwrap();
        assert_eq!(pms.len(), 2);
        let laws: Vec<_> = pms.iter().map(|pm| pm.laws().to_vec()).collect();
        assert!(laws.contains(&vec![vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert!(laws.contains(&vec![vec![0.0, 1.0], vec![1.0, 0.0]]));
    }

    #[test]
    fn find_periodic_measures_identity_and_cycles() {
        let eye = StochasticMatrix::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let pms = find_periodic_measures(&eye, 1).unwrap();
        assert_eq!(pms.len(), 3);
        for (i, pm) in pms.iter().enumerate() {
            assert_eq!(pm.law(0)[i], 1.0);
        }

        // brute-force oracle for the two-cycle pair: P^2 = I fixes every
        // basis vector, so the extremals are the four point masses
        let p = two_disjoint_2cycles();
        let pms = find_periodic_measures(&p, 2).unwrap();
        assert_eq!(pms.len(), 4);
        for pm in &pms {
            let rho = pm.law(0);
            let back = p.power(2).push_forward(rho);
            let defect = back
                .iter()
                .zip(rho)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(defect <= 1e-12);
            assert_eq!(rho.iter().filter(|&&w| w > 0.5).count(), 1);
        }

        // the half-half mixture is a valid non-extremal periodic measure
        let mix = DiscretePeriodicMeasure::new(
            &p,
            vec![vec![0.5, 0.0, 0.5, 0.0], vec![0.0, 0.5, 0.0, 0.5]],
        );
        assert!(mix.is_ok());
    }

    #[test]
    fn periodic_measure_validation_rejects_drift() {
        let p = flip_chain();
        assert!(DiscretePeriodicMeasure::new(&p, vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(DiscretePeriodicMeasure::new(&p, vec![vec![0.6, 0.4]]).is_err());
        assert!(DiscretePeriodicMeasure::new(&p, vec![vec![0.5, 0.5]]).is_ok());
    }

    #[test]
    fn invariant_sets_examples() {
        // P^2 = I fixes every indicator: all 16 subsets qualify
        let p = two_disjoint_2cycles();
        let fam = enumerate_invariant_sets(&p, 2, &[0.5, 0.0, 0.5, 0.0], 0, 1e-12).unwrap();
        assert_eq!(fam.subsets.len(), 16);

        // 4-cycle, tau = 2, support {0, 2}: subsets meeting {0,2} in
        // nothing or everything -> 8 of 16
        let p = four_cycle();
        let fam = enumerate_invariant_sets(&p, 2, &[0.5, 0.0, 0.5, 0.0], 0, 1e-12).unwrap();
        assert_eq!(fam.subsets.len(), 8);
        for &mask in &fam.subsets {
            let meet = mask & 0b0101;
            assert!(meet == 0 || meet == 0b0101);
        }

        // irreducible aperiodic chain: only the trivial pair
        let p = StochasticMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let fam = enumerate_invariant_sets(&p, 1, &[0.5, 0.5], 0, 1e-12).unwrap();
        assert_eq!(fam.subsets, vec![0b00, 0b11]);
    }

    #[test]
    fn invariant_sets_structural_matches_brute_force() {
        let cases: Vec<(StochasticMatrix, usize, Vec<f64>)> = vec![
            (two_disjoint_2cycles(), 2, vec![0.5, 0.0, 0.5, 0.0]),
            (four_cycle(), 2, vec![0.5, 0.0, 0.5, 0.0]),
            (four_cycle(), 4, vec![1.0, 0.0, 0.0, 0.0]),
            (flip_chain(), 2, vec![1.0, 0.0]),
            (
                StochasticMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
                1,
                vec![0.5, 0.5],
            ),
        ];
        for (p, tau, rho) in cases {
            let brute = enumerate_invariant_sets(&p, tau, &rho, 0, 1e-12).unwrap();
            let fast = structural_invariant_sets(&p, tau, &rho, 0, 1e-12).unwrap();
            assert_eq!(brute.subsets, fast.subsets);
        }
    }

    #[test]
    fn invariant_family_contains_trivial_and_complements() {
        let p = four_cycle();
        let rho = vec![0.5, 0.0, 0.5, 0.0];
        let fam = enumerate_invariant_sets(&p, 2, &rho, 0, 1e-12).unwrap();
        let full = (1u32 << p.n()) - 1;
        assert!(fam.subsets.contains(&0));
        assert!(fam.subsets.contains(&full));
        for &mask in &fam.subsets {
            assert!(fam.subsets.contains(&(full & !mask)));
        }
    }

    #[test]
    fn ps_ergodicity_worked_instances() {
        // flip chain with point-mass sections: ergodic
        let p = flip_chain();
        let pm = find_periodic_measures(&p, 2).unwrap().remove(0);
        let verdict = is_ps_ergodic(&p, 2, &pm, 1e-12).unwrap();
        assert!(verdict.all_ergodic());
        assert!(verdict.witnesses.iter().all(Option::is_none));

        // mixture over two disjoint cycles: fails with witness {0, 1}
        let p = two_disjoint_2cycles();
        let pm = DiscretePeriodicMeasure::new(
            &p,
            vec![vec![0.5, 0.0, 0.5, 0.0], vec![0.0, 0.5, 0.0, 0.5]],
        )
        .unwrap();
        let verdict = is_ps_ergodic(&p, 2, &pm, 1e-12).unwrap();
        assert!(!verdict.all_ergodic());
        let witness = verdict.witnesses[0].as_ref().unwrap();
        assert_eq!(witness.states, vec![0, 1]);
        assert!((witness.measure - 0.5).abs() < 1e-12);

        // 4-cycle with the period-2 mixture: ergodic
        let p = four_cycle();
        let pm = DiscretePeriodicMeasure::new(
            &p,
            vec![vec![0.5, 0.0, 0.5, 0.0], vec![0.0, 0.5, 0.0, 0.5]],
        )
        .unwrap();
        assert!(is_ps_ergodic(&p, 2, &pm, 1e-12).unwrap().all_ergodic());
    }

    #[test]
    fn cross_check_on_worked_instances() {
        let p = flip_chain();
        let pm = find_periodic_measures(&p, 2).unwrap().remove(0);
        assert!(cross_check_ps(&p, 2, &pm, 1e-12).unwrap());

        let p = two_disjoint_2cycles();
        let pm = DiscretePeriodicMeasure::new(
            &p,
            vec![vec![0.5, 0.0, 0.5, 0.0], vec![0.0, 0.5, 0.0, 0.5]],
        )
        .unwrap();
        // both methods must agree the mixture is not ergodic
        assert!(cross_check_ps(&p, 2, &pm, 1e-12).unwrap());
        assert!(!structural_ps_ergodic(&p, 2, &pm, 1e-12).unwrap()[0]);
    }

    #[test]
    fn condition_a_deterministic_cycle() {
        // 4-cycle trace {0, 2, 0, 2, ...}: contained in {0, 2}
        let p = four_cycle();
        let report =
            check_condition_a_canonical(&p, 2, &[1.0, 0.0, 0.0, 0.0], &[0b0101], 50, 8, 7).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.strengthened_ok());

        // a subset meeting the trace partially is violated at every path
        let report =
            check_condition_a_canonical(&p, 2, &[1.0, 0.0, 0.0, 0.0], &[0b0011], 50, 8, 7).unwrap();
        assert_eq!(report.violations, 50);
        assert!(!report.strengthened_ok());

        // the trivial pair never splits a trace
        let full = (1u32 << 4) - 1;
        let report = check_condition_a_canonical(&p, 2, &[0.25; 4], &[0, full], 50, 8, 7).unwrap();
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn condition_a_window_precondition() {
        let p = flip_chain();
        assert!(matches!(
            check_condition_a_canonical(&p, 2, &[1.0, 0.0], &[0b01], 10, 1, 1),
            Err(ErgoError::InvalidInput(_))
        ));
    }

    #[test]
    fn canonical_sampling_laws() {
        // single time, point mass: every tuple is (0,)
        let p = flip_chain();
        let tuples = sample_canonical(&p, &[1.0, 0.0], &[0], 200, 3).unwrap();
        assert!(tuples.iter().all(|t| t == &vec![0]));

        // flip chain from the uniform law: P(x1=0, x2=1) = 1/2 exactly
        let n = 40_000;
        let tuples = sample_canonical(&p, &[0.5, 0.5], &[0, 1], n, 4).unwrap();
        let hits = tuples.iter().filter(|t| t[0] == 0 && t[1] == 1).count();
        let p_hat = hits as f64 / n as f64;
        assert!((p_hat - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt());

        // i.i.d. rows: components independent with the row law
        let q = StochasticMatrix::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let tuples = sample_canonical(&q, &[0.5, 0.5], &[0, 1], n, 5).unwrap();
        let joint = tuples.iter().filter(|t| t[0] == 0 && t[1] == 1).count() as f64 / n as f64;
        let expect = 0.5 * 0.7;
        assert!((joint - expect).abs() < 4.0 * (expect * (1.0 - expect) / n as f64).sqrt());
    }

    #[test]
    fn shift_invariance_examples() {
        let p = flip_chain();
        let rep = check_shift_invariance_canonical(
            &p,
            &[0.5, 0.5],
            |xs| f64::from(xs[0] == 0),
            &[0],
            1,
            20_000,
            6,
        )
        .unwrap();
        assert!(rep.pass(), "z = {}", rep.z_score);
        assert!((rep.mean_raw - 0.5).abs() < 0.02);

        // identity chain from a point mass: exact equality
        let eye = StochasticMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let rep = check_shift_invariance_canonical(
            &eye,
            &[1.0, 0.0],
            |xs| xs[0] as f64,
            &[0, 2],
            3,
            500,
            6,
        )
        .unwrap();
        assert_eq!(rep.z_score, 0.0);

        // non-invariant initial law is rejected
        assert!(matches!(
            check_shift_invariance_canonical(&p, &[1.0, 0.0], |xs| xs[0] as f64, &[0], 1, 100, 6),
            Err(ErgoError::NotInvariant(_))
        ));
    }

    #[test]
    fn shift_invariance_random_irreducible_chain() {
        // stationary law of a random 3-state chain via the class solver
        let p = StochasticMatrix::new(vec![
            vec![0.2, 0.5, 0.3],
            vec![0.4, 0.1, 0.5],
            vec![0.3, 0.3, 0.4],
        ])
        .unwrap();
        let pm = find_periodic_measures(&p, 1).unwrap().remove(0);
        let rho = pm.law(0).to_vec();
        let observables: Vec<Box<dyn Fn(&[usize]) -> f64>> = vec![
            Box::new(|xs: &[usize]| f64::from(xs[0] == 0)),
            Box::new(|xs: &[usize]| f64::from(xs[0] == xs[1])),
            Box::new(|xs: &[usize]| (xs[0] * xs[1]) as f64 / 4.0),
        ];
        for (i, phi) in observables.into_iter().enumerate() {
            let rep =
                check_shift_invariance_canonical(&p, &rho, phi, &[0, 1], 2, 20_000, 10 + i as u64)
                    .unwrap();
            assert!(rep.pass(), "observable {i}: z = {}", rep.z_score);
        }
    }

    #[test]
    fn enumeration_size_guard() {
        let n = 21;
        let rows = vec![vec![1.0 / n as f64; n]; n];
        let p = StochasticMatrix::new(rows).unwrap();
        assert!(matches!(
            enumerate_invariant_sets(&p, 1, &vec![1.0 / n as f64; n], 0, 1e-12),
            Err(ErgoError::StateSpaceTooLarge { .. })
        ));
    }
}
