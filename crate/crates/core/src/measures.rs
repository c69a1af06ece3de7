//! Finite representations of the laws along a periodic family: binned
//! histograms on the circle, exact vectors on finite chains, their
//! period-grid families, and the time average.
//!
//! The continuum of section times `s in [0, tau)` is replaced by `m`
//! equally spaced grid points; the average uses the left-endpoint rule on
//! that grid.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::markov::StochasticMatrix;
use crate::noise::NoiseSystem;
use crate::rds::{Cocycle, PhasePoint, RandomPeriodicPath};
use crate::rng::RandomStream;
use crate::stats;

/// How the phase space is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// `bins` half-open uniform bins on the circle `[0, 1)`.
    CircleBins { bins: usize },
    /// One atom per state of a finite chain.
    FiniteStates { n: usize },
}

impl Partition {
    pub fn len(&self) -> usize {
        match self {
            Partition::CircleBins { bins } => *bins,
            Partition::FiniteStates { n } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell index of a phase point.
    pub fn cell_of(&self, point: &PhasePoint) -> Result<usize> {
        match (self, point) {
            (Partition::CircleBins { bins }, PhasePoint::Circle(x)) => {
                Ok(((x * *bins as f64) as usize).min(bins - 1))
            }
            (Partition::FiniteStates { n }, PhasePoint::State(i)) => {
                if i < n {
                    Ok(*i)
                } else {
                    Err(ErgoError::PartitionMismatch(format!(
                        "state {i} outside 0..{n}"
                    )))
                }
            }
            _ => Err(ErgoError::PartitionMismatch(
                "point kind does not match partition".into(),
            )),
        }
    }

    /// Representative coordinate of a cell (bin center, or the state index).
    pub fn cell_center(&self, i: usize) -> f64 {
        match self {
            Partition::CircleBins { bins } => (i as f64 + 0.5) / *bins as f64,
            Partition::FiniteStates { .. } => i as f64,
        }
    }
}

/// A probability vector over a partition, together with how many samples
/// produced it (`n_samples = 0` marks exact weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub partition: Partition,
    pub weights: Vec<f64>,
    pub n_samples: usize,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl EmpiricalMeasure {
    pub fn new(partition: Partition, weights: Vec<f64>, n_samples: usize) -> Result<Self> {
        if weights.len() != partition.len() {
            return Err(ErgoError::PartitionMismatch(format!(
                "{} weights for {} cells",
                weights.len(),
                partition.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(ErgoError::InvalidInput("negative weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ErgoError::InvalidInput(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(EmpiricalMeasure {
            partition,
            weights,
            n_samples,
            meta: BTreeMap::new(),
        })
    }

    /// Exact point mass at one cell.
    pub fn delta(partition: Partition, cell: usize) -> Result<Self> {
        let mut weights = vec![0.0; partition.len()];
        *weights
            .get_mut(cell)
            .ok_or_else(|| ErgoError::PartitionMismatch(format!("cell {cell} out of range")))? =
            1.0;
        EmpiricalMeasure::new(partition, weights, 0)
    }

    /// Tallies pre-binned cell indices into a measure.
    pub fn from_cells(partition: Partition, cells: &[usize]) -> Result<Self> {
        let mut counts = vec![0usize; partition.len()];
        for &c in cells {
            *counts
                .get_mut(c)
                .ok_or_else(|| ErgoError::PartitionMismatch(format!("cell {c} out of range")))? +=
                1;
        }
        let n = cells.len();
        let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
        EmpiricalMeasure::new(partition, weights, n)
    }

    /// Expectation of a cell-resolved observable.
    pub fn expect(&self, phi: &[f64]) -> Result<f64> {
        if phi.len() != self.weights.len() {
            return Err(ErgoError::PartitionMismatch(format!(
                "observable has {} cells, measure has {}",
                phi.len(),
                self.weights.len()
            )));
        }
        Ok(self.weights.iter().zip(phi).map(|(w, v)| w * v).sum())
    }

    /// Mass of a union of cells.
    pub fn mass(&self, cells: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &c in cells {
            total += self
                .weights
                .get(c)
                .ok_or_else(|| ErgoError::SetNotRepresentable(format!("cell {c} out of range")))?;
        }
        Ok(total)
    }

    /// Two-column CSV `(cell_center, weight)` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_center,weight\n");
        for (i, w) in self.weights.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.partition.cell_center(i), w));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    ExactVector,
    Empirical,
}

/// One measure per grid point `s_j = j tau / m`, all on a common partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicMeasureFamily {
    pub tau: f64,
    pub s_grid: Vec<f64>,
    pub measures: Vec<EmpiricalMeasure>,
    pub kind: FamilyKind,
}

impl PeriodicMeasureFamily {
    pub fn new(
        tau: f64,
        s_grid: Vec<f64>,
        measures: Vec<EmpiricalMeasure>,
        kind: FamilyKind,
    ) -> Result<Self> {
        if measures.is_empty() || s_grid.len() != measures.len() {
            return Err(ErgoError::InvalidInput(
                "family needs one measure per grid point".into(),
            ));
        }
        if s_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ErgoError::InvalidInput(
                "grid must be strictly increasing".into(),
            ));
        }
        let partition = measures[0].partition;
        if measures.iter().any(|m| m.partition != partition) {
            return Err(ErgoError::PartitionMismatch(
                "family members use different partitions".into(),
            ));
        }
        Ok(PeriodicMeasureFamily {
            tau,
            s_grid,
            measures,
            kind,
        })
    }

    /// Wraps the exact section laws of a finite-chain periodic measure.
    pub fn from_discrete(pm: &crate::markov::DiscretePeriodicMeasure) -> Result<Self> {
        let n = pm.law(0).len();
        let measures = pm
            .laws()
            .iter()
            .map(|law| EmpiricalMeasure::new(Partition::FiniteStates { n }, law.clone(), 0))
            .collect::<Result<Vec<_>>>()?;
        PeriodicMeasureFamily::new(
            pm.tau() as f64,
            (0..pm.tau()).map(|k| k as f64).collect(),
            measures,
            FamilyKind::ExactVector,
        )
    }

    pub fn partition(&self) -> Partition {
        self.measures[0].partition
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// Left-endpoint quadrature of `(1/tau) * integral of the family`:
    /// the arithmetic mean of the grid measures.
    pub fn average(&self) -> Result<EmpiricalMeasure> {
        let cells = self.partition().len();
        let mut weights = vec![0.0; cells];
        for measure in &self.measures {
            for (w, v) in weights.iter_mut().zip(&measure.weights) {
                *w += v / self.measures.len() as f64;
            }
        }
        // roundoff from the division accumulates; renormalize exactly
        let sum: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / sum).collect();
        EmpiricalMeasure::new(
            self.partition(),
            weights,
            self.measures.iter().map(|m| m.n_samples).sum(),
        )
    }
}

/// Phase samples of `Y(s, .)` over independent noise draws, keyed per
/// sample index.
fn path_samples(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    s: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<PhasePoint>> {
    let base = RandomStream::new(seed, 0x6d65_6173);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let omega = noise.sample_invariant(base.substream(i as u64));
            path.eval(noise, cocycle, s, &omega)
        })
        .collect()
}

/// Histogram of the law of `Y(s, .)` over `n` i.i.d. noise samples.
pub fn estimate_path_law(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    s: f64,
    n: usize,
    bins: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    if n < 100 {
        return Err(ErgoError::InvalidInput(format!("n = {n} < 100")));
    }
    let partition = match cocycle.phase_space() {
        crate::rds::PhaseSpace::Circle => Partition::CircleBins { bins },
        crate::rds::PhaseSpace::FiniteSet { n } => Partition::FiniteStates { n },
    };
    let points = path_samples(noise, cocycle, path, s, n, seed)?;
    let cells = points
        .iter()
        .map(|p| partition.cell_of(p))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::from_cells(partition, &cells)
}

/// Estimates the whole family on the uniform `m`-point grid over one
/// period.
pub fn estimate_family(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    grid_points: usize,
    n: usize,
    bins: usize,
    seed: u64,
) -> Result<PeriodicMeasureFamily> {
    if grid_points == 0 {
        return Err(ErgoError::InvalidInput("grid must be nonempty".into()));
    }
    let tau = path.tau();
    let s_grid: Vec<f64> = (0..grid_points)
        .map(|j| j as f64 * tau / grid_points as f64)
        .collect();
    let measures = s_grid
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            estimate_path_law(noise, cocycle, path, s, n, bins, seed ^ ((j as u64) << 32))
        })
        .collect::<Result<Vec<_>>>()?;
    PeriodicMeasureFamily::new(tau, s_grid, measures, FamilyKind::Empirical)
}

/// Worst defect of `rho_s P = rho_{s+1}` over an exact family (grid step =
/// one kernel step, wrapping at the period).
pub fn check_family_periodicity_exact(
    p: &StochasticMatrix,
    family: &PeriodicMeasureFamily,
) -> Result<f64> {
    if family.partition() != (Partition::FiniteStates { n: p.n() }) {
        return Err(ErgoError::PartitionMismatch(
            "family partition does not match the kernel".into(),
        ));
    }
    let m = family.len();
    let mut worst = 0.0f64;
    for j in 0..m {
        let pushed = p.push_forward(&family.measures[j].weights);
        let next = &family.measures[(j + 1) % m].weights;
        for (a, b) in pushed.iter().zip(next) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Empirical counterpart: fresh samples of `Y(s_j, .)` advanced by one
/// grid step are compared bin-by-bin against the stored histogram at
/// `s_{j+1}` with a two-sample proportion test; returns the worst |z|.
pub fn check_family_periodicity_empirical(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    family: &PeriodicMeasureFamily,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let partition = family.partition();
    let m = family.len();
    let step = family.tau / m as f64;
    let mut worst = 0.0f64;
    for j in 0..m {
        // Y(s_j + step, .) sampled independently of the stored family
        let points = path_samples(
            noise,
            cocycle,
            path,
            family.s_grid[j] + step,
            n,
            seed ^ ((j as u64) << 40) ^ 0x706d_7065,
        )?;
        let mut counts = vec![0usize; partition.len()];
        for p in &points {
            counts[partition.cell_of(p)?] += 1;
        }
        let target = &family.measures[(j + 1) % m];
        if target.n_samples == 0 {
            return Err(ErgoError::InvalidInput(
                "empirical check needs sampled family members".into(),
            ));
        }
        for (cell, &c) in counts.iter().enumerate() {
            let k_stored = (target.weights[cell] * target.n_samples as f64).round() as usize;
            let z = stats::two_sample_proportion_z(c, n, k_stored, target.n_samples);
            worst = worst.max(z.abs());
        }
    }
    Ok(worst)
}
