//! Upper (sublinear) expectations built from measure families: sup-of-
//! expectations evaluation, capacities, invariance under the dynamics,
//! ergodicity verdicts on finite surrogates, the quasi-sure Birkhoff law
//! of large numbers harness, and the backward recursion defining the
//! canonical sublinear expectation of a Markov semigroup.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ErgoError, Result};
use crate::markov::{mask_to_indices, DiscretePeriodicMeasure, StochasticMatrix};
use crate::measures::{FamilyKind, Partition, PeriodicMeasureFamily};
use crate::noise::NoiseSystem;
use crate::rds::{skew_step, Cocycle, RandomPeriodicPath, SkewState};
use crate::rng::RandomStream;
use crate::stats;

/// Sup of linear expectations over a periodic measure family; the grid
/// surrogate of the sup over `s in [0, tau)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperExpectation {
    pub family: PeriodicMeasureFamily,
}

impl UpperExpectation {
    pub fn new(family: PeriodicMeasureFamily) -> Self {
        UpperExpectation { family }
    }

    pub fn from_discrete(pm: &DiscretePeriodicMeasure) -> Result<Self> {
        Ok(UpperExpectation::new(PeriodicMeasureFamily::from_discrete(
            pm,
        )?))
    }

    /// `max_s E_{rho_s}[phi]` for a cell-resolved observable.
    pub fn evaluate(&self, phi: &[f64]) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for measure in &self.family.measures {
            best = best.max(measure.expect(phi)?);
        }
        Ok(best)
    }

    /// Capacity of a union of cells: `sup_s rho_s(A)`.
    pub fn capacity(&self, cells: &[usize]) -> Result<f64> {
        let mut best: f64 = 0.0;
        for measure in &self.family.measures {
            best = best.max(measure.mass(cells)?);
        }
        Ok(best)
    }

    pub fn cell_count(&self) -> usize {
        self.family.partition().len()
    }
}

// ---------------------------------------------------------------------------
// invariance of the upper expectation
// ---------------------------------------------------------------------------

/// Exact finite-chain form: worst defect of `T[P^k phi] = T[phi]` over the
/// observable battery and `k = 1..=steps`. The family must be the full
/// integer-period family of the kernel, so that shifting permutes it.
pub fn check_sublinear_invariance_exact(
    p: &StochasticMatrix,
    ue: &UpperExpectation,
    phis: &[Vec<f64>],
    steps: usize,
) -> Result<f64> {
    if ue.family.kind != FamilyKind::ExactVector
        || ue.family.partition() != (Partition::FiniteStates { n: p.n() })
    {
        return Err(ErgoError::PartitionMismatch(
            "exact invariance check needs an exact family over the kernel's states".into(),
        ));
    }
    if ue.family.len() != ue.family.tau as usize {
        return Err(ErgoError::GridIncommensurate(format!(
            "family has {} grid points over period {}; one-step shifts must permute the grid",
            ue.family.len(),
            ue.family.tau
        )));
    }
    let mut worst = 0.0f64;
    for phi in phis {
        let base = ue.evaluate(phi)?;
        let mut pushed = phi.clone();
        for _ in 1..=steps {
            pushed = p.apply(&pushed);
            worst = worst.max((ue.evaluate(&pushed)? - base).abs());
        }
    }
    Ok(worst)
}

/// Empirical circle-family form: compares fresh estimates of
/// `E_{rho_{s_j}}[phi(Phi(t, theta_{s_j} w) Y(s_j, w))]` against fresh
/// estimates of `E_{rho_{s_j + t}}[phi]`; `t` must shift the grid by a
/// whole number of points. Returns the worst |z| over grid points and
/// observables.
#[allow(clippy::too_many_arguments)]
pub fn check_sublinear_invariance_empirical<F>(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    grid_points: usize,
    t: f64,
    phis: &[F],
    n: usize,
    seed: u64,
) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let tau = path.tau();
    let step = tau / grid_points as f64;
    let ratio = t / step;
    if (ratio - ratio.round()).abs() > 1e-9 {
        return Err(ErgoError::GridIncommensurate(format!(
            "t = {t} is not a multiple of the grid step {step}"
        )));
    }
    let offset = ratio.round() as usize;
    let base = RandomStream::new(seed, 0x7562_696e);
    let mut worst = 0.0f64;
    for j in 0..grid_points {
        let s_j = j as f64 * step;
        let s_shifted = ((j + offset) % grid_points) as f64 * step;
        for (pi, phi) in phis.iter().enumerate() {
            let salt = (j as u64) << 24 | (pi as u64) << 16;
            // route one: evolve mass from s_j forward by t
            let evolved: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let omega = noise.sample_invariant(base.substream(salt ^ i as u64));
                    let y = path.eval(noise, cocycle, s_j, &omega)?;
                    let shifted = noise.shift(s_j, &omega)?;
                    let pushed = cocycle.apply(noise, t, &shifted, &y)?;
                    Ok(phi(pushed.as_circle()?))
                })
                .collect::<Result<Vec<_>>>()?;
            // route two: sample the family member at s_j + t directly
            let direct: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let omega = noise
                        .sample_invariant(base.substream(salt ^ 0x000d_1ec7 ^ (i as u64) << 1));
                    let y = path.eval(noise, cocycle, s_shifted, &omega)?;
                    Ok(phi(y.as_circle()?))
                })
                .collect::<Result<Vec<_>>>()?;
            let se =
                (stats::variance(&evolved) / n as f64 + stats::variance(&direct) / n as f64).sqrt();
            let diff = stats::mean(&evolved) - stats::mean(&direct);
            let z = if se == 0.0 {
                if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                diff / se
            };
            worst = worst.max(z.abs());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// sublinear ergodicity on finite surrogates
// ---------------------------------------------------------------------------

/// Outcome for one candidate invariant set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetVerdict {
    pub subset: u32,
    pub states: Vec<usize>,
    /// Whether the candidate passed the invariance pre-check; failures are
    /// reported rather than silently skipped.
    pub invariant: bool,
    pub capacity_set: f64,
    pub capacity_complement: f64,
    pub pass: bool,
}

/// For each candidate `B`, verifies `g^{-1}(B) = B` under the
/// deterministic map `g`, then requires `V(B) <= atol` or
/// `V(B^c) <= atol`.
pub fn sublinear_ergodic_check(
    map: &[usize],
    ue: &UpperExpectation,
    candidates: &[u32],
    atol: f64,
) -> Result<Vec<SetVerdict>> {
    let n = ue.cell_count();
    if map.len() != n || map.iter().any(|&y| y >= n) {
        return Err(ErgoError::PartitionMismatch(format!(
            "map acts on {} states, family has {n} cells",
            map.len()
        )));
    }
    let full: u64 = (1u64 << n) - 1;
    candidates
        .iter()
        .map(|&mask| {
            let preimage = (0..n)
                .filter(|&x| mask & (1 << map[x]) != 0)
                .fold(0u32, |m, x| m | (1 << x));
            let invariant = preimage == mask;
            let states = mask_to_indices(mask);
            let complement = mask_to_indices((full as u32) & !mask);
            let v_set = ue.capacity(&states)?;
            let v_comp = ue.capacity(&complement)?;
            Ok(SetVerdict {
                subset: mask,
                states,
                invariant,
                capacity_set: v_set,
                capacity_complement: v_comp,
                pass: invariant && (v_set <= atol || v_comp <= atol),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// the two-interval example and its finite surrogate
// ---------------------------------------------------------------------------

/// The exact two-interval system: `[0, 2)` carrying Lebesgue measure on
/// each unit interval, with the alternating rotation map. Indicator
/// observables are evaluated exactly through interval lengths.
#[derive(Debug, Clone, Copy)]
pub struct TwoIntervalSystem {
    pub alpha: f64,
}

fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

impl TwoIntervalSystem {
    /// `sup` over the two component measures of the indicator of a union
    /// of disjoint intervals in `[0, 2)`.
    pub fn upper_expect_indicator(&self, intervals: &[(f64, f64)]) -> Result<f64> {
        let mut first = 0.0;
        let mut second = 0.0;
        for &(lo, hi) in intervals {
            if !(0.0..=2.0).contains(&lo) || !(0.0..=2.0).contains(&hi) || lo > hi {
                return Err(ErgoError::SetNotRepresentable(format!(
                    "interval ({lo}, {hi}) outside [0, 2)"
                )));
            }
            first += overlap(lo, hi, 0.0, 1.0);
            second += overlap(lo, hi, 1.0, 2.0);
        }
        Ok(first.max(second))
    }

    pub fn capacity(&self, intervals: &[(f64, f64)]) -> Result<f64> {
        self.upper_expect_indicator(intervals)
    }

    /// The alternating map: rotate-and-lift on the first interval, drop
    /// back on the second.
    pub fn map(&self, x: f64) -> f64 {
        if x < 1.0 {
            crate::noise::wrap_unit(x + self.alpha) + 1.0
        } else {
            x - 1.0
        }
    }
}

/// Finite surrogate of the two-interval system: two copies of `Z_q` with
/// the rotation replaced by `+p`, coupled by the same alternating map.
/// State `c * q + i` is point `i` on copy `c`.
#[derive(Debug, Clone, Copy)]
pub struct TwoCircleSurrogate {
    pub p: usize,
    pub q: usize,
}

impl TwoCircleSurrogate {
    pub fn state_count(&self) -> usize {
        2 * self.q
    }

    /// The forward permutation.
    pub fn map(&self) -> Vec<usize> {
        let q = self.q;
        (0..2 * q)
            .map(|x| if x < q { q + (x + self.p) % q } else { x - q })
            .collect()
    }

    /// The two-member family: uniform mass on each copy.
    pub fn upper_expectation(&self) -> Result<UpperExpectation> {
        let n = self.state_count();
        let part = Partition::FiniteStates { n };
        let w = 1.0 / self.q as f64;
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; n];
        for i in 0..self.q {
            first[i] = w;
            second[self.q + i] = w;
        }
        let family = PeriodicMeasureFamily::new(
            2.0,
            vec![0.0, 1.0],
            vec![
                crate::measures::EmpiricalMeasure::new(part, first, 0)?,
                crate::measures::EmpiricalMeasure::new(part, second, 0)?,
            ],
            FamilyKind::ExactVector,
        )?;
        Ok(UpperExpectation::new(family))
    }

    /// Orbit of a state under the map, as a bitmask: invariant by
    /// construction, and proper whenever `gcd(p, q) > 1`.
    pub fn orbit_set(&self, start: usize) -> u32 {
        let map = self.map();
        let mut mask = 0u32;
        let mut x = start;
        loop {
            if mask & (1 << x) != 0 {
                break;
            }
            mask |= 1 << x;
            x = map[x];
        }
        mask
    }
}

// ---------------------------------------------------------------------------
// quasi-sure Birkhoff law of large numbers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SectionDeviation {
    pub s: f64,
    pub deviant_fraction: f64,
}

/// Capacity surrogate of the quasi-sure null set: per-section fractions of
/// paths whose time average misses the target by more than epsilon, and
/// the max over sections.
#[derive(Debug, Clone, Serialize)]
pub struct QsReport {
    pub per_s: Vec<SectionDeviation>,
    pub max_fraction: f64,
    pub target: f64,
    pub epsilon: f64,
    pub horizon: f64,
    pub delta: f64,
    pub n_paths: usize,
}

/// Runs the Birkhoff average experiment: for each grid section `s`,
/// start `n_paths` copies at `(w, Y(s, theta_{-s} w))`, average `xi`
/// along the skew orbit with step `delta` up to time `horizon`, and
/// compare against the family average of `E_{mu_s}[xi]` (estimated with
/// `n_target` dedicated samples per section).
#[allow(clippy::too_many_arguments)]
pub fn birkhoff_qs_lln<F>(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    xi: F,
    horizon: f64,
    delta: f64,
    n_paths: usize,
    grid_points: usize,
    epsilon: f64,
    n_target: usize,
    seed: u64,
) -> Result<QsReport>
where
    F: Fn(&SkewState) -> f64 + Sync,
{
    let steps_f = horizon / delta;
    if (steps_f - steps_f.round()).abs() > 1e-9 {
        return Err(ErgoError::NonCommensurateTime {
            t: horizon,
            mesh: delta,
        });
    }
    let steps = steps_f.round() as usize;
    if steps == 0 || grid_points == 0 || n_paths == 0 {
        return Err(ErgoError::InvalidInput(
            "horizon, grid and path count must be positive".into(),
        ));
    }
    let tau = path.tau();
    let s_grid: Vec<f64> = (0..grid_points)
        .map(|j| j as f64 * tau / grid_points as f64)
        .collect();
    let base = RandomStream::new(seed, 0x7173_6c6c);

    let initial = |s: f64, stream: RandomStream| -> Result<SkewState> {
        let omega = noise.sample_invariant(stream);
        let phase = path.eval_pulled_back(noise, cocycle, s, &omega)?;
        Ok(SkewState {
            noise: omega,
            phase,
        })
    };

    // target: family average of the section expectations of xi
    let mut target = 0.0;
    for (j, &s) in s_grid.iter().enumerate() {
        let values: Vec<f64> = (0..n_target)
            .into_par_iter()
            .map(|i| {
                let stream = base.substream(0x7461_0000 ^ (j as u64) << 32 ^ i as u64);
                initial(s, stream).map(|st| xi(&st))
            })
            .collect::<Result<Vec<_>>>()?;
        target += stats::mean(&values) / grid_points as f64;
    }

    let mut per_s = Vec::with_capacity(grid_points);
    let mut max_fraction = 0.0f64;
    for (j, &s) in s_grid.iter().enumerate() {
        let averages: Vec<f64> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let stream = base.substream(0x7061_0000 ^ (j as u64) << 32 ^ i as u64);
                let mut state = initial(s, stream)?;
                let mut acc = 0.0;
                for _ in 0..steps {
                    acc += xi(&state);
                    state = skew_step(noise, cocycle, delta, &state)?;
                }
                Ok(acc / steps as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        let deviant = averages
            .iter()
            .filter(|&&a| (a - target).abs() > epsilon)
            .count();
        let fraction = deviant as f64 / n_paths as f64;
        max_fraction = max_fraction.max(fraction);
        per_s.push(SectionDeviation {
            s,
            deviant_fraction: fraction,
        });
    }
    Ok(QsReport {
        per_s,
        max_fraction,
        target,
        epsilon,
        horizon,
        delta,
        n_paths,
    })
}

// ---------------------------------------------------------------------------
// canonical sublinear expectation (backward recursion)
// ---------------------------------------------------------------------------

/// Evaluates the canonical sublinear expectation of a window observable
/// `phi(x(t_1), ..., x(t_n))` through the backward recursion: the last
/// coordinate is integrated out with `P^{t_n - t_{n-1}}`, and so on, until
/// the upper expectation is applied to the remaining one-point function.
///
/// With the linear semigroup used here, a singleton family reduces this to
/// the classical canonical expectation.
pub fn canonical_sublinear_expect<F>(
    p: &StochasticMatrix,
    ue: &UpperExpectation,
    times: &[usize],
    phi: F,
) -> Result<f64>
where
    F: Fn(&[usize]) -> f64,
{
    if ue.family.partition() != (Partition::FiniteStates { n: p.n() }) {
        return Err(ErgoError::PartitionMismatch(
            "family must live on the kernel's states".into(),
        ));
    }
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ErgoError::InvalidInput(
            "times must be strictly increasing and nonempty".into(),
        ));
    }
    let n = p.n();
    let window = times.len();
    if n.pow(window as u32) > 10_000_000 {
        return Err(ErgoError::InvalidInput(format!(
            "window tensor {n}^{window} too large"
        )));
    }
    // tensor over tuples, last index fastest
    let mut len = n.pow(window as u32);
    let mut layer: Vec<f64> = (0..len)
        .map(|flat| {
            let mut idx = vec![0usize; window];
            let mut rest = flat;
            for slot in (0..window).rev() {
                idx[slot] = rest % n;
                rest /= n;
            }
            phi(&idx)
        })
        .collect();
    // contract the last coordinate per time gap, right to left
    for gap_idx in (1..window).rev() {
        let gap = times[gap_idx] - times[gap_idx - 1];
        let kernel = p.power(gap);
        len /= n;
        let mut next = vec![0.0; len];
        for (flat, slot) in next.iter_mut().enumerate() {
            // flat encodes (x_1..x_{gap_idx}); the trailing index of `flat`
            // is x_{gap_idx}, the integration point
            let x_last = flat % n;
            let row = kernel.row(x_last);
            let base = flat * n;
            *slot = (0..n).map(|y| row[y] * layer[base + y]).sum();
        }
        layer = next;
    }
    ue.evaluate(&layer)
}
