//! Cocycles over noise systems, random periodic paths, the skew product,
//! and verification of their defining identities.
//!
//! The two identities checked throughout are the cocycle property
//! `Phi(t+s, w) = Phi(t, theta_s w) . Phi(s, w)` and the pair defining a
//! random periodic path: `Phi(t, theta_s w) Y(s, w) = Y(t+s, w)` and
//! `Y(s+tau, w) = Y(s, theta_tau w)`.

use serde::{Deserialize, Serialize};

use crate::error::{ErgoError, Result};
use crate::noise::{circle_distance, wrap_unit, NoiseState, NoiseSystem, TimeDomain};
use crate::rng::RandomStream;

/// Forcing term for the circle-shift cocycle, evaluated on the noise state's
/// rotating coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleForcing {
    Zero,
    /// `a * sin(2 pi x)` on the rotating coordinate.
    Sine {
        amplitude: f64,
    },
}

impl CircleForcing {
    pub fn eval(&self, state: &NoiseState) -> Result<f64> {
        match self {
            CircleForcing::Zero => Ok(0.0),
            CircleForcing::Sine { amplitude } => {
                Ok(amplitude * (std::f64::consts::TAU * state.circle_coordinate()?).sin())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSpace {
    Circle,
    FiniteSet { n: usize },
}

/// A point of the phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhasePoint {
    Circle(f64),
    State(usize),
}

impl PhasePoint {
    pub fn as_circle(&self) -> Result<f64> {
        match self {
            PhasePoint::Circle(x) => Ok(*x),
            _ => Err(ErgoError::InvalidInput(
                "phase point is not on the circle".into(),
            )),
        }
    }

    pub fn as_state(&self) -> Result<usize> {
        match self {
            PhasePoint::State(i) => Ok(*i),
            _ => Err(ErgoError::InvalidInput(
                "phase point is not a finite state".into(),
            )),
        }
    }
}

/// Distance between phase points: modular on the circle, 0/1 on finite sets.
pub fn phase_distance(a: &PhasePoint, b: &PhasePoint) -> f64 {
    match (a, b) {
        (PhasePoint::Circle(x), PhasePoint::Circle(y)) => circle_distance(*x, *y),
        (PhasePoint::State(i), PhasePoint::State(j)) => {
            if i == j {
                0.0
            } else {
                1.0
            }
        }
        _ => f64::INFINITY,
    }
}

/// Built-in cocycle families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cocycle {
    /// `Phi(t, w) x = x + t + f(theta_t w) - f(w)  (mod 1)` over a noise
    /// system with a rotating circle coordinate.
    CircleShift { forcing: CircleForcing },
    /// Deterministic rotation `Phi(t, w) x = x + t * rate (mod 1)`; the
    /// cocycle of the torus-coordinate path when `rate` is the noise alpha.
    Rotation { rate: f64 },
    /// Per-symbol maps over Bernoulli noise; `maps[symbol][state]` is the
    /// next state. Realizes finite Markov chains as random dynamical systems.
    FiniteMap { maps: Vec<Vec<usize>> },
}

impl Cocycle {
    pub fn finite(maps: Vec<Vec<usize>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(ErgoError::InvalidInput("no symbol maps".into()));
        }
        let n = maps[0].len();
        if n == 0
            || maps
                .iter()
                .any(|m| m.len() != n || m.iter().any(|&v| v >= n))
        {
            return Err(ErgoError::InvalidInput(
                "symbol maps must share a state count and stay in range".into(),
            ));
        }
        Ok(Cocycle::FiniteMap { maps })
    }

    pub fn phase_space(&self) -> PhaseSpace {
        match self {
            Cocycle::CircleShift { .. } | Cocycle::Rotation { .. } => PhaseSpace::Circle,
            Cocycle::FiniteMap { maps } => PhaseSpace::FiniteSet { n: maps[0].len() },
        }
    }

    /// Applies `Phi(t, w)` to a phase point.
    pub fn apply(
        &self,
        noise: &NoiseSystem,
        t: f64,
        omega: &NoiseState,
        x: &PhasePoint,
    ) -> Result<PhasePoint> {
        noise.check_shift_time(t)?;
        match self {
            Cocycle::CircleShift { forcing } => {
                let x = x.as_circle()?;
                let shifted = noise.shift(t, omega)?;
                Ok(PhasePoint::Circle(wrap_unit(
                    x + t + forcing.eval(&shifted)? - forcing.eval(omega)?,
                )))
            }
            Cocycle::Rotation { rate } => {
                let x = x.as_circle()?;
                Ok(PhasePoint::Circle(wrap_unit(x + t * rate)))
            }
            Cocycle::FiniteMap { maps } => {
                let k = noise.steps_for(t)?.ok_or_else(|| {
                    ErgoError::InvalidInput("finite maps need discrete time".into())
                })?;
                let mut state = x.as_state()?;
                for sym in omega.symbols_prefix(k)? {
                    let map = maps.get(sym as usize).ok_or_else(|| {
                        ErgoError::InvalidInput(format!("no map for symbol {sym}"))
                    })?;
                    state = map[state];
                }
                Ok(PhasePoint::State(state))
            }
        }
    }
}

/// Built-in random periodic paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomPeriodicPath {
    /// `Y(s, w) = (s + f(theta_s w)) mod 1`, period 1, over the
    /// circle-shift cocycle with the same forcing.
    CircleShiftPath { forcing: CircleForcing },
    /// `Y(s, w) = x-coordinate of theta_s w`, period 1, over the rotation
    /// cocycle with rate equal to the noise alpha.
    TorusCoordinate,
    /// `Y(s, w) = Phi(s, w) start` on a finite chain, with the declared
    /// period. The pulled-back evaluation uses the one-sided convention:
    /// the start-time offset is absorbed into the path, so
    /// `Y(s, theta_{-s} w)` is evaluated as the forward orbit itself.
    ForwardOrbit { start: usize, tau: f64 },
}

impl RandomPeriodicPath {
    pub fn tau(&self) -> f64 {
        match self {
            RandomPeriodicPath::CircleShiftPath { .. } => 1.0,
            RandomPeriodicPath::TorusCoordinate => 1.0,
            RandomPeriodicPath::ForwardOrbit { tau, .. } => *tau,
        }
    }

    /// `Y(s, w)`.
    pub fn eval(
        &self,
        noise: &NoiseSystem,
        cocycle: &Cocycle,
        s: f64,
        omega: &NoiseState,
    ) -> Result<PhasePoint> {
        match self {
            RandomPeriodicPath::CircleShiftPath { forcing } => {
                let shifted = noise.shift(s, omega)?;
                Ok(PhasePoint::Circle(wrap_unit(s + forcing.eval(&shifted)?)))
            }
            RandomPeriodicPath::TorusCoordinate => {
                let shifted = noise.shift(s, omega)?;
                Ok(PhasePoint::Circle(shifted.circle_coordinate()?))
            }
            RandomPeriodicPath::ForwardOrbit { start, .. } => {
                cocycle.apply(noise, s, omega, &PhasePoint::State(*start))
            }
        }
    }

    /// `Y(s, theta_{-s} w)`: the phase component of the factorisation of
    /// the periodic measure at `s`. Closed forms are used instead of an
    /// inverse shift, which one-sided systems do not have.
    pub fn eval_pulled_back(
        &self,
        noise: &NoiseSystem,
        cocycle: &Cocycle,
        s: f64,
        omega: &NoiseState,
    ) -> Result<PhasePoint> {
        match self {
            RandomPeriodicPath::CircleShiftPath { forcing } => {
                Ok(PhasePoint::Circle(wrap_unit(s + forcing.eval(omega)?)))
            }
            RandomPeriodicPath::TorusCoordinate => {
                Ok(PhasePoint::Circle(omega.circle_coordinate()?))
            }
            RandomPeriodicPath::ForwardOrbit { .. } => self.eval(noise, cocycle, s, omega),
        }
    }
}

/// A point of the product space `Omega x X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewState {
    pub noise: NoiseState,
    pub phase: PhasePoint,
}

/// One application of the skew product `(w, x) -> (theta_t w, Phi(t, w) x)`.
pub fn skew_step(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    t: f64,
    state: &SkewState,
) -> Result<SkewState> {
    let phase = cocycle.apply(noise, t, &state.noise, &state.phase)?;
    let omega = noise.shift(t, &state.noise)?;
    Ok(SkewState {
        noise: omega,
        phase,
    })
}

/// The finite window `{Y(s + k tau, w) : k_min <= k <= k_max}` of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub s: f64,
    pub k_min: i64,
    pub k_max: i64,
    pub points: Vec<PhasePoint>,
}

pub fn trace_set(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    s: f64,
    omega: &NoiseState,
    k_min: i64,
    k_max: i64,
) -> Result<TraceSet> {
    if k_min > k_max {
        return Err(ErgoError::InvalidInput(format!(
            "empty trace window [{k_min}, {k_max}]"
        )));
    }
    let tau = path.tau();
    if s + k_min as f64 * tau < 0.0 {
        return Err(ErgoError::InvalidInput(
            "one-sided noise: trace window reaches negative time".into(),
        ));
    }
    let points = (k_min..=k_max)
        .map(|k| path.eval(noise, cocycle, s + k as f64 * tau, omega))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceSet {
        s,
        k_min,
        k_max,
        points,
    })
}

/// Result of an identity-verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub trials: usize,
    pub max_defect: f64,
    pub tol: f64,
    pub pass: bool,
    pub note: String,
}

fn random_time(noise: &NoiseSystem, picker: &mut RandomStream) -> f64 {
    match noise.time_domain {
        TimeDomain::Discrete { step } => step * picker.index(8) as f64,
        TimeDomain::Continuous => 3.0 * picker.uniform(),
    }
}

fn random_phase(cocycle: &Cocycle, picker: &mut RandomStream) -> PhasePoint {
    match cocycle.phase_space() {
        PhaseSpace::Circle => PhasePoint::Circle(picker.uniform()),
        PhaseSpace::FiniteSet { n } => PhasePoint::State(picker.index(n)),
    }
}

/// Checks `Phi(0) = id` and the cocycle property over random
/// `(t, s, w, x)` draws; reports the worst defect seen.
pub fn verify_cocycle(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    n_trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    if n_trials == 0 {
        return Err(ErgoError::InvalidInput("need at least one trial".into()));
    }
    let base = RandomStream::new(seed, 0x636f6379);
    let mut picker = base.substream(u64::MAX);
    let mut max_defect: f64 = 0.0;
    for i in 0..n_trials {
        let omega = noise.sample_invariant(base.substream(i as u64));
        let x = random_phase(cocycle, &mut picker);
        let (t, s) = (
            random_time(noise, &mut picker),
            random_time(noise, &mut picker),
        );

        let id_defect = phase_distance(&cocycle.apply(noise, 0.0, &omega, &x)?, &x);

        let direct = cocycle.apply(noise, t + s, &omega, &x)?;
        let inner = cocycle.apply(noise, s, &omega, &x)?;
        let shifted = noise.shift(s, &omega)?;
        let composed = cocycle.apply(noise, t, &shifted, &inner)?;
        let defect = phase_distance(&direct, &composed);

        max_defect = max_defect.max(defect).max(id_defect);
    }
    Ok(VerificationReport {
        trials: n_trials,
        max_defect,
        tol,
        pass: max_defect <= tol,
        note: String::new(),
    })
}

/// Checks both defining identities of a random periodic path over random
/// `(t, s, w)` draws.
pub fn verify_rpp(
    noise: &NoiseSystem,
    cocycle: &Cocycle,
    path: &RandomPeriodicPath,
    n_trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    if n_trials == 0 {
        return Err(ErgoError::InvalidInput("need at least one trial".into()));
    }
    let tau = path.tau();
    let base = RandomStream::new(seed, 0x72707021);
    let mut picker = base.substream(u64::MAX);
    let mut max_defect: f64 = 0.0;
    for i in 0..n_trials {
        let omega = noise.sample_invariant(base.substream(i as u64));
        let (t, s) = (
            random_time(noise, &mut picker),
            random_time(noise, &mut picker),
        );

        // Phi(t, theta_s w) Y(s, w) = Y(t+s, w)
        let y_s = path.eval(noise, cocycle, s, &omega)?;
        let shifted = noise.shift(s, &omega)?;
        let pushed = cocycle.apply(noise, t, &shifted, &y_s)?;
        let y_ts = path.eval(noise, cocycle, t + s, &omega)?;
        let d1 = phase_distance(&pushed, &y_ts);

        // Y(s + tau, w) = Y(s, theta_tau w)
        let lhs = path.eval(noise, cocycle, s + tau, &omega)?;
        let theta_tau = noise.shift(tau, &omega)?;
        let rhs = path.eval(noise, cocycle, s, &theta_tau)?;
        let d2 = phase_distance(&lhs, &rhs);

        max_defect = max_defect.max(d1).max(d2);
    }
    Ok(VerificationReport {
        trials: n_trials,
        max_defect,
        tol,
        pass: max_defect <= tol,
        note: "period as declared, minimality unverified".into(),
    })
}

/// The deterministic swap chain on two states, as symbol maps.
pub fn flip_chain_maps() -> Vec<Vec<usize>> {
    vec![vec![1, 0], vec![1, 0]]
}

/// The deterministic cycle `0 -> 1 -> ... -> n-1 -> 0`, as symbol maps.
pub fn cycle_maps(n: usize, symbols: usize) -> Vec<Vec<usize>> {
    let step: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    vec![step; symbols]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::DEFAULT_ALPHA;

    fn torus() -> NoiseSystem {
        NoiseSystem::torus2(DEFAULT_ALPHA)
    }

    #[test]
    fn pure_rotation_apply_matches_formula() {
        let noise = torus();
        let cocycle = Cocycle::CircleShift {
            forcing: CircleForcing::Zero,
        };
        let omega = noise.sample_invariant(RandomStream::new(1, 0));
        let out = cocycle
            .apply(&noise, 0.4, &omega, &PhasePoint::Circle(0.9))
            .unwrap();
        assert!(circle_distance(out.as_circle().unwrap(), 0.3) < 1e-12);
    }

    #[test]
    fn apply_at_zero_is_identity() {
        let noise = torus();
        let cocycle = Cocycle::CircleShift {
            forcing: CircleForcing::Sine { amplitude: 0.1 },
        };
        let omega = noise.sample_invariant(RandomStream::new(2, 0));
        let x = PhasePoint::Circle(0.37);
        let out = cocycle.apply(&noise, 0.0, &omega, &x).unwrap();
        assert_eq!(phase_distance(&out, &x), 0.0);
    }

    #[test]
    fn circle_shift_matches_direct_formula_oracle() {
        // independent re-implementation of x + t + f(theta_t w) - f(w)
        let noise = torus();
        let a = 0.1;
        let cocycle = Cocycle::CircleShift {
            forcing: CircleForcing::Sine { amplitude: a },
        };
        let mut picker = RandomStream::new(3, 9);
        for i in 0..100u64 {
            let omega = noise.sample_invariant(RandomStream::new(3, i));
            let x0 = match &omega {
                NoiseState::Torus { x, .. } => *x,
                _ => unreachable!(),
            };
            let t = 2.0 * picker.uniform();
            let x = picker.uniform();
            let tau_c = std::f64::consts::TAU;
            let oracle = wrap_unit(
                x + t + a * (tau_c * wrap_unit(x0 + t * DEFAULT_ALPHA)).sin()
                    - a * (tau_c * x0).sin(),
            );
            let got = cocycle
                .apply(&noise, t, &omega, &PhasePoint::Circle(x))
                .unwrap()
                .as_circle()
                .unwrap();
            assert!(circle_distance(got, oracle) < 1e-12);
        }
    }

    #[test]
    fn cocycle_identity_circle_families() {
        let noise = torus();
        for forcing in [CircleForcing::Zero, CircleForcing::Sine { amplitude: 0.1 }] {
            let cocycle = Cocycle::CircleShift { forcing };
            let rep = verify_cocycle(&noise, &cocycle, 1000, 11, 1e-12).unwrap();
            assert!(rep.pass, "defect {}", rep.max_defect);
        }
    }

    #[test]
    fn cocycle_identity_finite_chain_exact() {
        let noise = NoiseSystem::bernoulli(2, 8).unwrap();
        let maps = vec![vec![1, 0, 2], vec![2, 1, 0]];
        let cocycle = Cocycle::finite(maps).unwrap();
        let rep = verify_cocycle(&noise, &cocycle, 1000, 12, 0.0).unwrap();
        assert_eq!(rep.max_defect, 0.0);
    }

    #[test]
    fn rpp_identities_builtin_paths() {
        let noise = torus();
        for forcing in [CircleForcing::Zero, CircleForcing::Sine { amplitude: 0.1 }] {
            let cocycle = Cocycle::CircleShift { forcing };
            let path = RandomPeriodicPath::CircleShiftPath { forcing };
            let rep = verify_rpp(&noise, &cocycle, &path, 1000, 13, 1e-12).unwrap();
            assert!(rep.pass, "defect {}", rep.max_defect);
        }
        let cocycle = Cocycle::Rotation {
            rate: DEFAULT_ALPHA,
        };
        let rep = verify_rpp(
            &noise,
            &cocycle,
            &RandomPeriodicPath::TorusCoordinate,
            1000,
            14,
            1e-12,
        )
        .unwrap();
        assert!(rep.pass, "defect {}", rep.max_defect);
    }

    #[test]
    fn stationary_constant_path_on_fixed_point_cocycle() {
        // identity maps fix every state; a constant path is stationary
        let noise = NoiseSystem::bernoulli(2, 4).unwrap();
        let cocycle = Cocycle::finite(vec![vec![0, 1], vec![0, 1]]).unwrap();
        let path = RandomPeriodicPath::ForwardOrbit { start: 1, tau: 3.0 };
        let rep = verify_rpp(&noise, &cocycle, &path, 500, 15, 0.0).unwrap();
        assert_eq!(rep.max_defect, 0.0);
    }

    #[test]
    fn flip_chain_orbit_path_has_exact_identities() {
        let noise = NoiseSystem::bernoulli(2, 8).unwrap();
        let cocycle = Cocycle::finite(flip_chain_maps()).unwrap();
        let path = RandomPeriodicPath::ForwardOrbit { start: 0, tau: 2.0 };
        let rep = verify_rpp(&noise, &cocycle, &path, 1000, 16, 0.0).unwrap();
        assert_eq!(rep.max_defect, 0.0);
    }

    #[test]
    fn skew_step_composes() {
        let noise = torus();
        let cocycle = Cocycle::CircleShift {
            forcing: CircleForcing::Sine { amplitude: 0.1 },
        };
        let mut picker = RandomStream::new(17, 1);
        for i in 0..500u64 {
            let state = SkewState {
                noise: noise.sample_invariant(RandomStream::new(18, i)),
                phase: PhasePoint::Circle(picker.uniform()),
            };
            let (t, s) = (2.0 * picker.uniform(), 2.0 * picker.uniform());
            let one = skew_step(
                &noise,
                &cocycle,
                t,
                &skew_step(&noise, &cocycle, s, &state).unwrap(),
            )
            .unwrap();
            let two = skew_step(&noise, &cocycle, t + s, &state).unwrap();
            assert!(phase_distance(&one.phase, &two.phase) <= 1e-12);
            assert!(crate::noise::state_distance(&one.noise, &two.noise) <= 1e-12);
        }
    }

    #[test]
    fn skew_step_zero_and_pure_rotation() {
        let noise = torus();
        let cocycle = Cocycle::CircleShift {
            forcing: CircleForcing::Zero,
        };
        let state = SkewState {
            noise: noise.sample_invariant(RandomStream::new(19, 0)),
            phase: PhasePoint::Circle(0.25),
        };
        let same = skew_step(&noise, &cocycle, 0.0, &state).unwrap();
        assert_eq!(phase_distance(&same.phase, &state.phase), 0.0);
        // second component advances by t regardless of the noise draw
        for i in 0..10u64 {
            let st = SkewState {
                noise: noise.sample_invariant(RandomStream::new(20, i)),
                phase: PhasePoint::Circle(0.25),
            };
            let out = skew_step(&noise, &cocycle, 0.4, &st).unwrap();
            assert!(circle_distance(out.phase.as_circle().unwrap(), 0.65) < 1e-12);
        }
    }

    #[test]
    fn trace_examples() {
        // constant trace of the zero-forcing circle path: period 1 on the circle
        let noise = torus();
        let cocycle = Cocycle::CircleShift {
            forcing: CircleForcing::Zero,
        };
        let path = RandomPeriodicPath::CircleShiftPath {
            forcing: CircleForcing::Zero,
        };
        let omega = noise.sample_invariant(RandomStream::new(21, 0));
        let trace = trace_set(&noise, &cocycle, &path, 0.2, &omega, 0, 4).unwrap();
        for p in &trace.points {
            assert!(circle_distance(p.as_circle().unwrap(), 0.2) < 1e-12);
        }

        // flip chain, tau = 2: the orbit returns every period
        let bern = NoiseSystem::bernoulli(2, 16).unwrap();
        let flip = Cocycle::finite(flip_chain_maps()).unwrap();
        let path = RandomPeriodicPath::ForwardOrbit { start: 0, tau: 2.0 };
        let omega = bern.sample_invariant(RandomStream::new(22, 0));
        let trace = trace_set(&bern, &flip, &path, 0.0, &omega, 0, 5).unwrap();
        assert!(trace.points.iter().all(|p| p.as_state().unwrap() == 0));

        // four-cycle, tau = 2: alternates between states 0 and 2
        let cycle = Cocycle::finite(cycle_maps(4, 2)).unwrap();
        let path = RandomPeriodicPath::ForwardOrbit { start: 0, tau: 2.0 };
        let trace = trace_set(&bern, &cycle, &path, 0.0, &omega, 0, 5).unwrap();
        let states: Vec<usize> = trace.points.iter().map(|p| p.as_state().unwrap()).collect();
        // oracle: iterate the cycle by hand
        let mut oracle = Vec::new();
        let mut st = 0usize;
        for k in 0..=5 {
            if k > 0 {
                st = (st + 2) % 4;
            }
            oracle.push(st);
        }
        assert_eq!(states, oracle);
        assert_eq!(states, vec![0, 2, 0, 2, 0, 2]);
    }

    #[test]
    fn trace_window_count_and_negative_time() {
        let bern = NoiseSystem::bernoulli(2, 8).unwrap();
        let flip = Cocycle::finite(flip_chain_maps()).unwrap();
        let path = RandomPeriodicPath::ForwardOrbit { start: 0, tau: 2.0 };
        let omega = bern.sample_invariant(RandomStream::new(23, 0));
        let trace = trace_set(&bern, &flip, &path, 0.0, &omega, 1, 4).unwrap();
        assert_eq!(trace.points.len(), 4);
        assert!(trace_set(&bern, &flip, &path, 0.0, &omega, -1, 4).is_err());
    }

    #[test]
    fn trace_equivariance_under_period_shift() {
        // trace(s, theta_tau w, a..b) = trace(s, w, a+1..b+1)
        let bern = NoiseSystem::bernoulli(2, 32).unwrap();
        let flip = Cocycle::finite(flip_chain_maps()).unwrap();
        let path = RandomPeriodicPath::ForwardOrbit { start: 1, tau: 2.0 };
        for i in 0..50u64 {
            let omega = bern.sample_invariant(RandomStream::new(24, i));
            let shifted = bern.shift(2.0, &omega).unwrap();
            let lhs = trace_set(&bern, &flip, &path, 0.0, &shifted, 0, 6).unwrap();
            let rhs = trace_set(&bern, &flip, &path, 0.0, &omega, 1, 7).unwrap();
            for (a, b) in lhs.points.iter().zip(&rhs.points) {
                assert_eq!(phase_distance(a, b), 0.0);
            }
        }
        // and on the circle path within tolerance
        let noise = torus();
        let forcing = CircleForcing::Sine { amplitude: 0.1 };
        let cocycle = Cocycle::CircleShift { forcing };
        let path = RandomPeriodicPath::CircleShiftPath { forcing };
        for i in 0..50u64 {
            let omega = noise.sample_invariant(RandomStream::new(25, i));
            let shifted = noise.shift(1.0, &omega).unwrap();
            let lhs = trace_set(&noise, &cocycle, &path, 0.3, &shifted, 0, 6).unwrap();
            let rhs = trace_set(&noise, &cocycle, &path, 0.3, &omega, 1, 7).unwrap();
            for (a, b) in lhs.points.iter().zip(&rhs.points) {
                assert!(phase_distance(a, b) <= 1e-12);
            }
        }
    }

    #[test]
    fn skew_product_preserves_periodic_measure_empirically() {
        // sample (w, Y(s, theta_{-s} w)), push through the period map, and
        // compare observable means (paired z-test)
        use std::f64::consts::TAU;
        let noise = torus();
        let forcing = CircleForcing::Sine { amplitude: 0.1 };
        let cocycle = Cocycle::CircleShift { forcing };
        let path = RandomPeriodicPath::CircleShiftPath { forcing };
        let s = 0.3;
        let n = 20_000;
        let phi = |st: &SkewState| {
            (TAU * st.phase.as_circle().unwrap()).sin()
                + 0.5 * (TAU * st.noise.circle_coordinate().unwrap()).cos()
        };
        let mut before = Vec::with_capacity(n);
        let mut after = Vec::with_capacity(n);
        for i in 0..n {
            let omega = noise.sample_invariant(RandomStream::new(26, i as u64));
            let phase = path.eval_pulled_back(&noise, &cocycle, s, &omega).unwrap();
            let state = SkewState {
                noise: omega,
                phase,
            };
            before.push(phi(&state));
            after.push(phi(
                &skew_step(&noise, &cocycle, path.tau(), &state).unwrap()
            ));
        }
        let z = crate::stats::paired_z(&before, &after);
        assert!(z.abs() <= 4.0, "z = {z}");
    }
}
