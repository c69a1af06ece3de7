//! Measure-preserving noise systems: the base `(Omega, theta_t, P)` over
//! which cocycles run.
//!
//! Four families are built in: the irrational rotation on the circle, the
//! two-coordinate torus flow, the Bernoulli shift on symbol sequences, and
//! a Brownian increment grid standing in for Wiener space. Path-space
//! states (Bernoulli, Wiener) keep a rolling buffer plus an embedded random
//! stream, so shifting consumes the front of the buffer and regenerates the
//! tail instead of materializing infinite paths.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::rng::RandomStream;
use crate::stats;

/// Default rotation number: sqrt(2) - 1, chosen for good equidistribution.
pub const DEFAULT_ALPHA: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Wraps a real into `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Distance on the circle `[0, 1)` with wraparound.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (wrap_unit(a) - wrap_unit(b)).abs();
    d.min(1.0 - d)
}

/// Which base system, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    IrrationalRotation { alpha: f64 },
    Torus2 { alpha: f64 },
    BernoulliShift { symbol_count: usize, window: usize },
    WienerGrid { mesh: f64, horizon: f64 },
}

/// Time domain on which shifts are defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDomain {
    Discrete { step: f64 },
    Continuous,
}

/// A measure-preserving shift family together with a sampler for its
/// invariant measure. Descriptors are immutable and freely shareable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSystem {
    pub kind: NoiseKind,
    pub time_domain: TimeDomain,
    /// Set when a rotation number is (numerically) rational; rational
    /// rotations are allowed so non-ergodic control experiments can be
    /// built, but they void the equidistribution-based checks.
    pub rational_alpha: bool,
}

/// Detects alpha within 1e-12 of p/q for q <= 1024.
fn is_rational(alpha: f64) -> bool {
    for q in 1..=1024u64 {
        let p = (alpha * q as f64).round();
        if (alpha - p / q as f64).abs() < 1e-12 {
            return true;
        }
    }
    false
}

impl NoiseSystem {
    pub fn irrational_rotation(alpha: f64) -> Self {
        NoiseSystem {
            kind: NoiseKind::IrrationalRotation { alpha },
            time_domain: TimeDomain::Discrete { step: 1.0 },
            rational_alpha: is_rational(alpha),
        }
    }

    pub fn torus2(alpha: f64) -> Self {
        NoiseSystem {
            kind: NoiseKind::Torus2 { alpha },
            time_domain: TimeDomain::Continuous,
            rational_alpha: is_rational(alpha),
        }
    }

    pub fn bernoulli(symbol_count: usize, window: usize) -> Result<Self> {
        if !(2..=256).contains(&symbol_count) || window == 0 {
            return Err(ErgoError::InvalidInput(format!(
                "bernoulli shift needs 2..=256 symbols and a nonempty window, got ({symbol_count}, {window})"
            )));
        }
        Ok(NoiseSystem {
            kind: NoiseKind::BernoulliShift {
                symbol_count,
                window,
            },
            time_domain: TimeDomain::Discrete { step: 1.0 },
            rational_alpha: false,
        })
    }

    pub fn wiener_grid(mesh: f64, horizon: f64) -> Result<Self> {
        if mesh <= 0.0 || horizon <= 0.0 {
            return Err(ErgoError::InvalidInput(format!(
                "wiener grid needs positive mesh and horizon, got ({mesh}, {horizon})"
            )));
        }
        let count = horizon / mesh;
        if (count - count.round()).abs() > 1e-9 {
            return Err(ErgoError::NonCommensurateTime { t: horizon, mesh });
        }
        Ok(NoiseSystem {
            kind: NoiseKind::WienerGrid { mesh, horizon },
            time_domain: TimeDomain::Discrete { step: mesh },
            rational_alpha: false,
        })
    }

    /// Converts a time to an exact step count on the discrete mesh.
    /// Continuous systems have no step constraint and return `None`.
    pub fn steps_for(&self, t: f64) -> Result<Option<usize>> {
        if t < 0.0 {
            return Err(ErgoError::InvalidInput(format!(
                "one-sided system, negative time {t}"
            )));
        }
        match self.time_domain {
            TimeDomain::Continuous => Ok(None),
            TimeDomain::Discrete { step } => {
                let k = t / step;
                if (k - k.round()).abs() > 1e-9 {
                    return Err(ErgoError::NonCommensurateTime { t, mesh: step });
                }
                let k = k.round() as usize;
                if let NoiseKind::WienerGrid { horizon, .. } = self.kind {
                    if t > horizon + 1e-12 {
                        return Err(ErgoError::HorizonExceeded { t, horizon });
                    }
                }
                Ok(Some(k))
            }
        }
    }

    /// Validates a shift time without performing the shift.
    pub fn check_shift_time(&self, t: f64) -> Result<()> {
        self.steps_for(t).map(|_| ())
    }

    /// Draws a state distributed according to the invariant measure. The
    /// stream is moved into path-space states so that lazy extension on
    /// later shifts stays reproducible.
    pub fn sample_invariant(&self, mut stream: RandomStream) -> NoiseState {
        match self.kind {
            NoiseKind::IrrationalRotation { .. } => NoiseState::Rotation(stream.uniform()),
            NoiseKind::Torus2 { .. } => {
                let r = stream.uniform();
                let x = stream.uniform();
                NoiseState::Torus { r, x }
            }
            NoiseKind::BernoulliShift {
                symbol_count,
                window,
            } => {
                let symbols = (0..window)
                    .map(|_| stream.index(symbol_count) as u8)
                    .collect();
                NoiseState::Bernoulli {
                    symbol_count,
                    symbols,
                    stream,
                }
            }
            NoiseKind::WienerGrid { mesh, horizon } => {
                let count = (horizon / mesh).round() as usize;
                let sd = mesh.sqrt();
                let increments = (0..count).map(|_| stream.normal(sd)).collect();
                NoiseState::Wiener {
                    mesh,
                    increments,
                    stream,
                }
            }
        }
    }

    /// Applies `theta_t` to a state. Path-space buffers roll forward: the
    /// leading increments/symbols are dropped and fresh ones drawn from the
    /// state's embedded stream, keeping the buffer length constant.
    pub fn shift(&self, t: f64, state: &NoiseState) -> Result<NoiseState> {
        let steps = self.steps_for(t)?;
        match (&self.kind, state) {
            (NoiseKind::IrrationalRotation { alpha }, NoiseState::Rotation(x)) => {
                Ok(NoiseState::Rotation(wrap_unit(x + t * alpha)))
            }
            (NoiseKind::Torus2 { alpha }, NoiseState::Torus { r, x }) => Ok(NoiseState::Torus {
                r: wrap_unit(r + t),
                x: wrap_unit(x + t * alpha),
            }),
            (
                NoiseKind::BernoulliShift { symbol_count, .. },
                NoiseState::Bernoulli {
                    symbols, stream, ..
                },
            ) => {
                let k = steps.expect("bernoulli time domain is discrete");
                let mut symbols = symbols.clone();
                let mut stream = stream.clone();
                for _ in 0..k {
                    symbols.push_back(stream.index(*symbol_count) as u8);
                    symbols.pop_front();
                }
                Ok(NoiseState::Bernoulli {
                    symbol_count: *symbol_count,
                    symbols,
                    stream,
                })
            }
            (
                NoiseKind::WienerGrid { mesh, .. },
                NoiseState::Wiener {
                    increments, stream, ..
                },
            ) => {
                let k = steps.expect("wiener time domain is discrete");
                let sd = mesh.sqrt();
                let mut increments = increments.clone();
                let mut stream = stream.clone();
                for _ in 0..k {
                    increments.push_back(stream.normal(sd));
                    increments.pop_front();
                }
                Ok(NoiseState::Wiener {
                    mesh: *mesh,
                    increments,
                    stream,
                })
            }
            _ => Err(ErgoError::InvalidInput(
                "state does not belong to this noise system".into(),
            )),
        }
    }
}

/// A point of the noise space. Path-space variants carry the stream that
/// generates their lazy extension, so shifting is deterministic per state.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseState {
    Rotation(f64),
    Torus {
        r: f64,
        x: f64,
    },
    Bernoulli {
        symbol_count: usize,
        symbols: VecDeque<u8>,
        stream: RandomStream,
    },
    Wiener {
        mesh: f64,
        increments: VecDeque<f64>,
        stream: RandomStream,
    },
}

impl NoiseState {
    /// The rotating circle coordinate: the point itself for rotations, the
    /// second coordinate for the torus.
    pub fn circle_coordinate(&self) -> Result<f64> {
        match self {
            NoiseState::Rotation(x) => Ok(*x),
            NoiseState::Torus { x, .. } => Ok(*x),
            _ => Err(ErgoError::InvalidInput(
                "state has no circle coordinate".into(),
            )),
        }
    }

    /// The conserved torus coordinate `r`.
    pub fn torus_r(&self) -> Result<f64> {
        match self {
            NoiseState::Torus { r, .. } => Ok(*r),
            _ => Err(ErgoError::InvalidInput("state is not a torus point".into())),
        }
    }

    pub fn symbol(&self, position: usize) -> Result<u8> {
        match self {
            NoiseState::Bernoulli { symbols, .. } => {
                symbols.get(position).copied().ok_or_else(|| {
                    ErgoError::InvalidInput(format!(
                        "symbol position {position} beyond window {}",
                        symbols.len()
                    ))
                })
            }
            _ => Err(ErgoError::InvalidInput("state is not a symbol path".into())),
        }
    }

    /// Bernoulli symbols at positions `0..k`, extending lazily beyond the
    /// stored window via a copy of the embedded stream. Any two extensions
    /// of the same state agree, so the path is well defined.
    pub fn symbols_prefix(&self, k: usize) -> Result<Vec<u8>> {
        match self {
            NoiseState::Bernoulli {
                symbol_count,
                symbols,
                stream,
            } => {
                let mut out: Vec<u8> = symbols.iter().copied().take(k).collect();
                let mut stream = stream.clone();
                while out.len() < k {
                    out.push(stream.index(*symbol_count) as u8);
                }
                Ok(out)
            }
            _ => Err(ErgoError::InvalidInput("state is not a symbol path".into())),
        }
    }

    /// `W(t)` on the increment grid: the sum of the first `t/mesh`
    /// increments (`W(0) = 0`).
    pub fn wiener_value(&self, t: f64) -> Result<f64> {
        match self {
            NoiseState::Wiener {
                mesh, increments, ..
            } => {
                let k = t / mesh;
                if (k - k.round()).abs() > 1e-9 {
                    return Err(ErgoError::NonCommensurateTime { t, mesh: *mesh });
                }
                let k = k.round() as usize;
                if k > increments.len() {
                    return Err(ErgoError::HorizonExceeded {
                        t,
                        horizon: *mesh * increments.len() as f64,
                    });
                }
                Ok(increments.iter().take(k).sum())
            }
            _ => Err(ErgoError::InvalidInput(
                "state is not an increment path".into(),
            )),
        }
    }
}

/// Pathwise distance between two states of the same system: modular for
/// circle coordinates, exact (0 or 1) for symbol buffers, sup-norm for
/// increment buffers. Mismatched shapes score infinity.
pub fn state_distance(a: &NoiseState, b: &NoiseState) -> f64 {
    match (a, b) {
        (NoiseState::Rotation(x), NoiseState::Rotation(y)) => circle_distance(*x, *y),
        (NoiseState::Torus { r: r1, x: x1 }, NoiseState::Torus { r: r2, x: x2 }) => {
            circle_distance(*r1, *r2).max(circle_distance(*x1, *x2))
        }
        (NoiseState::Bernoulli { symbols: s1, .. }, NoiseState::Bernoulli { symbols: s2, .. }) => {
            if s1 == s2 {
                0.0
            } else {
                1.0
            }
        }
        (NoiseState::Wiener { increments: w1, .. }, NoiseState::Wiener { increments: w2, .. }) => {
            if w1.len() != w2.len() {
                f64::INFINITY
            } else {
                w1.iter()
                    .zip(w2)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            }
        }
        _ => f64::INFINITY,
    }
}

/// Outcome of a measure-preservation check: empirical means of an
/// observable before and after the shift, and the paired z-score.
#[derive(Debug, Clone, Serialize)]
pub struct PreservationReport {
    pub mean_raw: f64,
    pub mean_shifted: f64,
    pub z_score: f64,
    pub n: usize,
}

impl PreservationReport {
    pub fn pass(&self) -> bool {
        self.z_score.abs() <= 4.0
    }
}

/// Compares the empirical mean of `phi` against the mean of `phi` after
/// shifting by `t`, over `n` invariant-measure samples. Samples are keyed
/// by logical index, so the result is independent of thread count.
pub fn check_preservation<F>(
    sys: &NoiseSystem,
    t: f64,
    phi: F,
    n: usize,
    seed: u64,
) -> Result<PreservationReport>
where
    F: Fn(&NoiseState) -> f64 + Sync,
{
    if n < 100 {
        return Err(ErgoError::InvalidInput(format!("n = {n} < 100")));
    }
    sys.check_shift_time(t)?;
    let base = RandomStream::new(seed, 0x7073_6861);
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let state = sys.sample_invariant(base.substream(i as u64));
            let shifted = sys.shift(t, &state).expect("shift time validated");
            (phi(&state), phi(&shifted))
        })
        .collect();
    let raw: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let shifted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(PreservationReport {
        mean_raw: stats::mean(&raw),
        mean_shifted: stats::mean(&shifted),
        z_score: stats::paired_z(&raw, &shifted),
        n,
    })
}

/// Boxed bounded observable on noise states.
pub type NoiseObservable = Box<dyn Fn(&NoiseState) -> f64 + Send + Sync>;

/// Fixed five-observable battery per system kind, used by the preservation
/// suite. All observables are bounded.
pub fn standard_battery(kind: &NoiseKind) -> Vec<(String, NoiseObservable)> {
    use std::f64::consts::TAU;
    let named = |name: &str, f: NoiseObservable| (name.to_string(), f);
    match kind {
        NoiseKind::IrrationalRotation { .. } => vec![
            named(
                "sin_2pi_x",
                Box::new(|s| (TAU * s.circle_coordinate().unwrap()).sin()),
            ),
            named(
                "cos_2pi_x",
                Box::new(|s| (TAU * s.circle_coordinate().unwrap()).cos()),
            ),
            named(
                "ind_x_lt_03",
                Box::new(|s| f64::from(s.circle_coordinate().unwrap() < 0.3)),
            ),
            named("x", Box::new(|s| s.circle_coordinate().unwrap())),
            named(
                "sin_4pi_x",
                Box::new(|s| (2.0 * TAU * s.circle_coordinate().unwrap()).sin()),
            ),
        ],
        NoiseKind::Torus2 { .. } => vec![
            named(
                "sin_2pi_x",
                Box::new(|s| (TAU * s.circle_coordinate().unwrap()).sin()),
            ),
            named(
                "cos_2pi_r",
                Box::new(|s| (TAU * s.torus_r().unwrap()).cos()),
            ),
            named(
                "quadrant",
                Box::new(|s| {
                    f64::from(s.torus_r().unwrap() < 0.5 && s.circle_coordinate().unwrap() < 0.5)
                }),
            ),
            named(
                "sin_2pi_r_plus_x",
                Box::new(|s| (TAU * (s.torus_r().unwrap() + s.circle_coordinate().unwrap())).sin()),
            ),
            named(
                "ind_x_band",
                Box::new(|s| {
                    let x = s.circle_coordinate().unwrap();
                    f64::from((0.2..0.7).contains(&x))
                }),
            ),
        ],
        NoiseKind::BernoulliShift { symbol_count, .. } => {
            let m = *symbol_count as f64;
            vec![
                named(
                    "ind_sym0_eq_0",
                    Box::new(|s| f64::from(s.symbol(0).unwrap() == 0)),
                ),
                named(
                    "sym0_scaled",
                    Box::new(move |s| s.symbol(0).unwrap() as f64 / m),
                ),
                named(
                    "ind_sym0_eq_sym1",
                    Box::new(|s| f64::from(s.symbol(0).unwrap() == s.symbol(1).unwrap())),
                ),
                named(
                    "mean_first4",
                    Box::new(move |s| {
                        (0..4).map(|i| s.symbol(i).unwrap() as f64).sum::<f64>() / (4.0 * m)
                    }),
                ),
                named(
                    "ind_sym2_eq_0",
                    Box::new(|s| f64::from(s.symbol(2).unwrap() == 0)),
                ),
            ]
        }
        NoiseKind::WienerGrid { mesh, horizon } => {
            // evaluation times must land on the increment mesh
            let count = (horizon / mesh).round() as usize;
            let at = |frac: f64| (count as f64 * frac).round().max(1.0) * mesh;
            let (half, fifth, two_fifth, full) = (at(0.5), at(0.2), at(0.4), at(1.0));
            vec![
                named(
                    "ind_w_half_pos",
                    Box::new(move |s| f64::from(s.wiener_value(half).unwrap() > 0.0)),
                ),
                named(
                    "sin_w_half",
                    Box::new(move |s| s.wiener_value(half).unwrap().sin()),
                ),
                named(
                    "ind_w_both_pos",
                    Box::new(move |s| {
                        f64::from(
                            s.wiener_value(fifth).unwrap() > 0.0
                                && s.wiener_value(two_fifth).unwrap() > 0.0,
                        )
                    }),
                ),
                named(
                    "cos_w_end",
                    Box::new(move |s| s.wiener_value(full).unwrap().cos()),
                ),
                named(
                    "ind_w_half_small",
                    Box::new(move |s| f64::from(s.wiener_value(half).unwrap().abs() < 0.5)),
                ),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(sys: &NoiseSystem, seed: u64, i: u64) -> NoiseState {
        sys.sample_invariant(RandomStream::new(seed, i))
    }

    #[test]
    fn torus_shift_matches_formula() {
        let sys = NoiseSystem::torus2(DEFAULT_ALPHA);
        let state = NoiseState::Torus { r: 0.25, x: 0.5 };
        let out = sys.shift(1.0, &state).unwrap();
        match out {
            NoiseState::Torus { r, x } => {
                assert!((r - 0.25).abs() < 1e-15);
                assert!(circle_distance(x, wrap_unit(0.5 + DEFAULT_ALPHA)) < 1e-15);
            }
            _ => panic!("wrong state kind"),
        }
    }

    #[test]
    fn shift_zero_is_identity() {
        let systems = [
            NoiseSystem::irrational_rotation(DEFAULT_ALPHA),
            NoiseSystem::torus2(DEFAULT_ALPHA),
            NoiseSystem::bernoulli(2, 8).unwrap(),
            NoiseSystem::wiener_grid(0.01, 0.5).unwrap(),
        ];
        for sys in &systems {
            let state = sample(sys, 3, 1);
            let out = sys.shift(0.0, &state).unwrap();
            assert_eq!(state_distance(&state, &out), 0.0);
        }
    }

    #[test]
    fn rational_rotation_returns_after_full_turn() {
        // alpha = 0.3 rational on purpose: ten unit steps add 3.0, one full turn
        let sys = NoiseSystem::irrational_rotation(0.3);
        assert!(sys.rational_alpha);
        let mut state = NoiseState::Rotation(0.0);
        for _ in 0..10 {
            state = sys.shift(1.0, &state).unwrap();
        }
        // oracle: repeated addition wraps back to the start
        let mut oracle = 0.0;
        for _ in 0..10 {
            oracle = wrap_unit(oracle + 0.3);
        }
        assert!(circle_distance(state.circle_coordinate().unwrap(), oracle) < 1e-15);
        assert!(circle_distance(state.circle_coordinate().unwrap(), 0.0) <= 1e-12);
    }

    #[test]
    fn default_alpha_is_irrational_for_the_detector() {
        assert!(!NoiseSystem::irrational_rotation(DEFAULT_ALPHA).rational_alpha);
    }

    #[test]
    fn noncommensurate_times_are_rejected() {
        let sys = NoiseSystem::bernoulli(2, 4).unwrap();
        let state = sample(&sys, 1, 0);
        assert!(matches!(
            sys.shift(0.5, &state),
            Err(ErgoError::NonCommensurateTime { .. })
        ));
        let wiener = NoiseSystem::wiener_grid(0.01, 0.25).unwrap();
        let w = sample(&wiener, 1, 0);
        assert!(matches!(
            wiener.shift(0.005, &w),
            Err(ErgoError::NonCommensurateTime { .. })
        ));
        assert!(matches!(
            wiener.shift(0.26, &w),
            Err(ErgoError::HorizonExceeded { .. })
        ));
        assert!(wiener.shift(0.25, &w).is_ok());
    }

    #[test]
    fn wiener_horizon_must_divide() {
        assert!(NoiseSystem::wiener_grid(0.01, 0.255).is_err());
        assert!(NoiseSystem::wiener_grid(0.01, 1.0).is_ok());
    }

    #[test]
    fn group_property_battery() {
        let systems = [
            NoiseSystem::irrational_rotation(DEFAULT_ALPHA),
            NoiseSystem::torus2(DEFAULT_ALPHA),
        ];
        let mut picker = RandomStream::new(99, 0);
        for sys in &systems {
            for i in 0..200u64 {
                let (t, s) = match sys.time_domain {
                    TimeDomain::Discrete { step } => {
                        (step * picker.index(7) as f64, step * picker.index(7) as f64)
                    }
                    TimeDomain::Continuous => (3.0 * picker.uniform(), 3.0 * picker.uniform()),
                };
                let state = sample(sys, 5, i);
                let one = sys.shift(t, &sys.shift(s, &state).unwrap()).unwrap();
                let two = sys.shift(t + s, &state).unwrap();
                assert!(state_distance(&one, &two) <= 1e-12);
            }
        }
        // exact equality for the path-space systems
        let bern = NoiseSystem::bernoulli(3, 6).unwrap();
        let wiener = NoiseSystem::wiener_grid(0.05, 0.5).unwrap();
        for i in 0..200u64 {
            let (k, l) = (picker.index(4) as f64, picker.index(4) as f64);
            let b = sample(&bern, 6, i);
            assert_eq!(
                state_distance(
                    &bern.shift(k, &bern.shift(l, &b).unwrap()).unwrap(),
                    &bern.shift(k + l, &b).unwrap()
                ),
                0.0
            );
            let (t, s) = (0.05 * picker.index(5) as f64, 0.05 * picker.index(5) as f64);
            let w = sample(&wiener, 7, i);
            assert_eq!(
                state_distance(
                    &wiener.shift(t, &wiener.shift(s, &w).unwrap()).unwrap(),
                    &wiener.shift(t + s, &w).unwrap()
                ),
                0.0
            );
        }
    }

    proptest! {
        #[test]
        fn prop_torus_group_property(r in 0.0..1.0f64, x in 0.0..1.0f64,
                                     t in 0.0..5.0f64, s in 0.0..5.0f64) {
            let sys = NoiseSystem::torus2(DEFAULT_ALPHA);
            let state = NoiseState::Torus { r, x };
            let one = sys.shift(t, &sys.shift(s, &state).unwrap()).unwrap();
            let two = sys.shift(t + s, &state).unwrap();
            prop_assert!(state_distance(&one, &two) <= 1e-12);
        }
    }

    #[test]
    fn invariant_sampler_moments() {
        // uniform mean on the circle
        let sys = NoiseSystem::irrational_rotation(DEFAULT_ALPHA);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| sample(&sys, 11, i).circle_coordinate().unwrap())
            .collect();
        let se = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!((stats::mean(&xs) - 0.5).abs() < 4.0 * se);

        // W(1) has variance 1 on the grid
        let wiener = NoiseSystem::wiener_grid(0.01, 1.0).unwrap();
        let m = 20_000;
        let ws: Vec<f64> = (0..m)
            .map(|i| sample(&wiener, 12, i).wiener_value(1.0).unwrap())
            .collect();
        let var = stats::variance(&ws);
        assert!((var - 1.0).abs() < 0.05, "var = {var}");

        // fair coin at position 0
        let bern = NoiseSystem::bernoulli(2, 4).unwrap();
        let k = 100_000;
        let zeros = (0..k)
            .filter(|&i| sample(&bern, 13, i).symbol(0).unwrap() == 0)
            .count();
        let p = zeros as f64 / k as f64;
        assert!((p - 0.5).abs() < 4.0 * 0.5 / (k as f64).sqrt());
    }

    #[test]
    fn preservation_examples() {
        use std::f64::consts::TAU;
        let torus = NoiseSystem::torus2(DEFAULT_ALPHA);
        let rep = check_preservation(
            &torus,
            0.37,
            |s: &NoiseState| (TAU * s.circle_coordinate().unwrap()).sin(),
            100_000,
            42,
        )
        .unwrap();
        assert!(rep.pass(), "z = {}", rep.z_score);

        let wiener = NoiseSystem::wiener_grid(0.01, 0.5).unwrap();
        let rep = check_preservation(
            &wiener,
            0.25,
            |s: &NoiseState| f64::from(s.wiener_value(0.25).unwrap() > 0.0),
            50_000,
            43,
        )
        .unwrap();
        assert!(rep.pass(), "z = {}", rep.z_score);
        assert!((rep.mean_raw - 0.5).abs() < 0.02);
        assert!((rep.mean_shifted - 0.5).abs() < 0.02);

        let rot = NoiseSystem::irrational_rotation(DEFAULT_ALPHA);
        let rep = check_preservation(
            &rot,
            1.0,
            |s: &NoiseState| f64::from(s.circle_coordinate().unwrap() < 0.3),
            100_000,
            44,
        )
        .unwrap();
        assert!(rep.pass());
        assert!((rep.mean_raw - 0.3).abs() < 0.01);
        assert!((rep.mean_shifted - 0.3).abs() < 0.01);
    }

    #[test]
    fn preservation_identical_observable_when_t_zero() {
        let sys = NoiseSystem::torus2(DEFAULT_ALPHA);
        let rep =
            check_preservation(&sys, 0.0, |s: &NoiseState| s.torus_r().unwrap(), 500, 7).unwrap();
        assert_eq!(rep.z_score, 0.0);
    }

    #[test]
    fn wiener_shift_composition_in_distribution() {
        // shift(tau) applied k times equals shift(k*tau): exact here because
        // both consume the embedded stream identically; check three cylinder
        // functionals anyway, in the spirit of a distributional test.
        let sys = NoiseSystem::wiener_grid(0.01, 0.5).unwrap();
        let tau = 0.1;
        let functionals: [Box<dyn Fn(&NoiseState) -> f64>; 3] = [
            Box::new(|s| f64::from(s.wiener_value(0.1).unwrap() > 0.0)),
            Box::new(|s| s.wiener_value(0.2).unwrap()),
            Box::new(|s| s.wiener_value(0.3).unwrap().powi(2)),
        ];
        for i in 0..50u64 {
            let state = sample(&sys, 21, i);
            let mut iterated = state.clone();
            for _ in 0..3 {
                iterated = sys.shift(tau, &iterated).unwrap();
            }
            let direct = sys.shift(3.0 * tau, &state).unwrap();
            for f in &functionals {
                assert!((f(&iterated) - f(&direct)).abs() < 1e-12);
            }
        }
    }
}
