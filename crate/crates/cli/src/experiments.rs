//! One runner per experiment kind. Each returns the check list that
//! decides the exit code and writes its data artifacts through [`OutDir`].

use serde::Serialize;
use std::f64::consts::TAU;

use ergoperiod_core::markov::{
    check_condition_a_canonical, check_shift_invariance_canonical, cross_check_ps,
    enumerate_invariant_sets, find_periodic_measures, indices_to_mask, is_ps_ergodic,
    mask_to_indices, sample_canonical, DiscretePeriodicMeasure, StochasticMatrix,
};
use ergoperiod_core::measures::{check_family_periodicity_empirical, estimate_family, FamilyKind};
use ergoperiod_core::noise::standard_battery;
use ergoperiod_core::rds::{verify_cocycle, verify_rpp, SkewState};
use ergoperiod_core::rng::RandomStream;
use ergoperiod_core::sublinear::{
    birkhoff_qs_lln, check_sublinear_invariance_empirical, check_sublinear_invariance_exact,
    sublinear_ergodic_check, TwoCircleSurrogate, TwoIntervalSystem, UpperExpectation,
};
use ergoperiod_core::wiener::{birkhoff_shift_average, decorrelation, standard_functionals};

use crate::config::*;
use crate::output::{plot_data, CheckResult, OutDir};
use crate::CliError;

pub fn run(
    spec: &ExperimentSpec,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    match spec {
        ExperimentSpec::NoiseCheck(p) => noise_check(p, seed, out),
        ExperimentSpec::RdsVerify(p) => rds_verify(p, seed, out),
        ExperimentSpec::EstimateMeasure(p) => estimate_measure(p, seed, out),
        ExperimentSpec::PsErgodic(p) => ps_ergodic(p, seed, out),
        ExperimentSpec::ConditionA(p) => condition_a(p, seed, out),
        ExperimentSpec::SublinearInvariance(p) => sublinear_invariance(p, seed, out),
        ExperimentSpec::SublinearErgodic(p) => sublinear_ergodic(p, seed, out),
        ExperimentSpec::BirkhoffQs(p) => birkhoff_qs(p, seed, out),
        ExperimentSpec::WienerShift(p) => wiener_shift(p, seed, out),
        ExperimentSpec::CanonicalSample(p) => canonical_sample(p, seed, out),
    }
}

/// Builds the periodic measure from an explicit section law by pushing it
/// around one period, validating closure.
fn measure_from_initial_law(
    p: &StochasticMatrix,
    tau: usize,
    law: &[f64],
) -> Result<DiscretePeriodicMeasure, CliError> {
    let mut laws = Vec::with_capacity(tau);
    let mut current = law.to_vec();
    for _ in 0..tau {
        laws.push(current.clone());
        current = p.push_forward(&current);
    }
    DiscretePeriodicMeasure::new(p, laws).map_err(CliError::Module)
}

// ---------------------------------------------------------------------------
// noise-check
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PreservationDoc {
    system: NoiseSpec,
    t: f64,
    n: usize,
    results: Vec<PreservationRow>,
}

#[derive(Serialize)]
struct PreservationRow {
    observable: String,
    mean_raw: f64,
    mean_shifted: f64,
    z_score: f64,
    pass: bool,
}

fn noise_check(
    params: &NoiseCheckParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let sys = params.noise.build()?;
    let battery = standard_battery(&sys.kind);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (j, (name, phi)) in battery.iter().enumerate() {
        let rep = ergoperiod_core::noise::check_preservation(
            &sys,
            params.t,
            phi.as_ref(),
            params.n,
            seed ^ (j as u64) << 8,
        )
        .map_err(CliError::Module)?;
        checks.push(
            CheckResult::new(format!("preservation/{name}"), rep.pass()).with_value(rep.z_score),
        );
        rows.push(PreservationRow {
            observable: name.clone(),
            mean_raw: rep.mean_raw,
            mean_shifted: rep.mean_shifted,
            z_score: rep.z_score,
            pass: rep.pass(),
        });
    }
    out.write_json(
        "noise_check.json",
        &PreservationDoc {
            system: params.noise.clone(),
            t: params.t,
            n: params.n,
            results: rows,
        },
    )?;
    Ok(checks)
}

// ---------------------------------------------------------------------------
// rds-verify
// ---------------------------------------------------------------------------

fn rds_verify(
    params: &RdsVerifyParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let noise = params.noise.build()?;
    let (cocycle, path) = params.rds.build(&noise)?;
    let cocycle_rep = verify_cocycle(&noise, &cocycle, params.trials, seed, params.tol)
        .map_err(CliError::Module)?;
    let rpp_rep = verify_rpp(&noise, &cocycle, &path, params.trials, seed ^ 1, params.tol)
        .map_err(CliError::Module)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        cocycle_identity: &'a ergoperiod_core::rds::VerificationReport,
        path_identities: &'a ergoperiod_core::rds::VerificationReport,
    }
    out.write_json(
        "rds_verify.json",
        &Doc {
            cocycle_identity: &cocycle_rep,
            path_identities: &rpp_rep,
        },
    )?;
    Ok(vec![
        CheckResult::new("cocycle-identity", cocycle_rep.pass).with_value(cocycle_rep.max_defect),
        CheckResult::new("rpp-identities", rpp_rep.pass).with_value(rpp_rep.max_defect),
    ])
}

// ---------------------------------------------------------------------------
// estimate-measure
// ---------------------------------------------------------------------------

fn estimate_measure(
    params: &EstimateMeasureParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let noise = params.noise.build()?;
    let (cocycle, path) = params.rds.build(&noise)?;
    let family = estimate_family(
        &noise,
        &cocycle,
        &path,
        params.grid_points,
        params.n,
        params.bins,
        seed,
    )
    .map_err(CliError::Module)?;
    let average = family.average().map_err(CliError::Module)?;
    out.write_json("family.json", &family)?;
    out.write_json("average.json", &average)?;
    out.write_csv("average.csv", &average.to_csv())?;

    let mut checks = Vec::new();
    let worst_norm = family
        .measures
        .iter()
        .map(|m| (m.weights.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0f64, f64::max);
    checks.push(CheckResult::new("normalization", worst_norm <= 1e-12).with_value(worst_norm));
    if params.check_periodicity && family.kind == FamilyKind::Empirical {
        let worst_z = check_family_periodicity_empirical(
            &noise,
            &cocycle,
            &path,
            &family,
            params.n,
            seed ^ 0x5a5a,
        )
        .map_err(CliError::Module)?;
        checks.push(CheckResult::new("periodicity-z", worst_z <= 4.0).with_value(worst_z));
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// ps-ergodic
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SubsetDoc {
    bitmask: u32,
    states: Vec<usize>,
}

#[derive(Serialize)]
struct PsMeasureDoc {
    laws: Vec<Vec<f64>>,
    per_s_ergodic: Vec<bool>,
    all_ergodic: bool,
    witnesses: Vec<Option<PsWitnessDoc>>,
    oracle_agreement: bool,
}

#[derive(Serialize)]
struct PsWitnessDoc {
    s: usize,
    subset: SubsetDoc,
    measure: f64,
}

fn ps_ergodic(
    params: &PsErgodicParams,
    _seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let p = params.matrix.build()?;
    let measures = match &params.initial_law {
        Some(law) => vec![measure_from_initial_law(&p, params.tau, law)?],
        None => find_periodic_measures(&p, params.tau).map_err(CliError::Module)?,
    };
    let mut checks = Vec::new();
    let mut docs = Vec::new();
    for (i, pm) in measures.iter().enumerate() {
        let verdict = is_ps_ergodic(&p, params.tau, pm, params.atol).map_err(CliError::Module)?;
        let agree = cross_check_ps(&p, params.tau, pm, params.atol).map_err(CliError::Module)?;
        checks.push(
            CheckResult::new(format!("oracle-agreement/measure{i}"), agree)
                .with_detail(format!("ps_ergodic = {}", verdict.all_ergodic())),
        );
        docs.push(PsMeasureDoc {
            laws: pm.laws().to_vec(),
            per_s_ergodic: verdict.per_s.clone(),
            all_ergodic: verdict.all_ergodic(),
            witnesses: verdict
                .witnesses
                .iter()
                .map(|w| {
                    w.as_ref().map(|w| PsWitnessDoc {
                        s: w.s,
                        subset: SubsetDoc {
                            bitmask: w.subset,
                            states: w.states.clone(),
                        },
                        measure: w.measure,
                    })
                })
                .collect(),
            oracle_agreement: agree,
        });
    }
    #[derive(Serialize)]
    struct Doc {
        tau: usize,
        measures: Vec<PsMeasureDoc>,
    }
    out.write_json(
        "ps_ergodic.json",
        &Doc {
            tau: params.tau,
            measures: docs,
        },
    )?;
    Ok(checks)
}

// ---------------------------------------------------------------------------
// condition-a
// ---------------------------------------------------------------------------

fn condition_a(
    params: &ConditionAParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let p = params.matrix.build()?;
    // the law only seeds the trace sampler, so any probability vector is
    // accepted (a point mass off the Poincare cycle is a legitimate probe)
    let law: Vec<f64> = match &params.initial_law {
        Some(law) => {
            if law.len() != p.n()
                || law.iter().any(|&w| w < 0.0)
                || (law.iter().sum::<f64>() - 1.0).abs() > 1e-10
            {
                return Err(CliError::Config(
                    "initial_law must be a probability vector over the states".into(),
                ));
            }
            law.clone()
        }
        None => find_periodic_measures(&p, params.tau)
            .map_err(CliError::Module)?
            .swap_remove(0)
            .law(0)
            .to_vec(),
    };
    let law = &law[..];
    let subsets: Vec<u32> = match &params.subsets {
        Some(lists) => lists.iter().map(|l| indices_to_mask(l)).collect(),
        None => {
            enumerate_invariant_sets(&p, params.tau, law, 0, params.atol)
                .map_err(CliError::Module)?
                .subsets
        }
    };
    let report = check_condition_a_canonical(
        &p,
        params.tau,
        law,
        &subsets,
        params.n_paths,
        params.window,
        seed,
    )
    .map_err(CliError::Module)?;

    #[derive(Serialize)]
    struct TallyDoc {
        subset: SubsetDoc,
        inside: usize,
        outside: usize,
        split: usize,
        same_side: bool,
    }
    #[derive(Serialize)]
    struct Doc {
        tau: usize,
        section_law: Vec<f64>,
        n_paths: usize,
        window: usize,
        violations: usize,
        strengthened_ok: bool,
        tallies: Vec<TallyDoc>,
    }
    out.write_json(
        "condition_a.json",
        &Doc {
            tau: params.tau,
            section_law: law.to_vec(),
            n_paths: report.n_paths,
            window: report.window,
            violations: report.violations,
            strengthened_ok: report.strengthened_ok(),
            tallies: report
                .tallies
                .iter()
                .map(|t| TallyDoc {
                    subset: SubsetDoc {
                        bitmask: t.subset,
                        states: mask_to_indices(t.subset),
                    },
                    inside: t.inside,
                    outside: t.outside,
                    split: t.split,
                    same_side: t.same_side(),
                })
                .collect(),
        },
    )?;
    Ok(vec![
        CheckResult::new("condition-a/no-splits", report.violations == 0)
            .with_value(report.violations as f64),
        CheckResult::new("condition-a/strengthened", report.strengthened_ok()),
    ])
}

// ---------------------------------------------------------------------------
// sublinear-invariance
// ---------------------------------------------------------------------------

fn sublinear_invariance(
    params: &SublinearInvarianceParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    match (&params.matrix, &params.noise) {
        (Some(matrix), None) => {
            let tau = params
                .tau
                .ok_or_else(|| CliError::Config("matrix mode needs `tau`".into()))?;
            let p = matrix.build()?;
            let pm = match &params.initial_law {
                Some(law) => measure_from_initial_law(&p, tau, law)?,
                None => find_periodic_measures(&p, tau)
                    .map_err(CliError::Module)?
                    .swap_remove(0),
            };
            let ue = UpperExpectation::from_discrete(&pm).map_err(CliError::Module)?;
            let mut stream = RandomStream::new(seed, 0x7375626c);
            let phis: Vec<Vec<f64>> = (0..params.n_phi)
                .map(|_| (0..p.n()).map(|_| 2.0 * stream.uniform() - 1.0).collect())
                .collect();
            let worst =
                check_sublinear_invariance_exact(&p, &ue, &phis, tau).map_err(CliError::Module)?;
            #[derive(Serialize)]
            struct Doc {
                mode: &'static str,
                tau: usize,
                n_phi: usize,
                worst_defect: f64,
                tol: f64,
            }
            out.write_json(
                "sublinear_invariance.json",
                &Doc {
                    mode: "exact",
                    tau,
                    n_phi: params.n_phi,
                    worst_defect: worst,
                    tol: params.tol,
                },
            )?;
            Ok(vec![CheckResult::new(
                "invariance-defect",
                worst <= params.tol,
            )
            .with_value(worst)])
        }
        (None, Some(noise_spec)) => {
            let rds = params
                .rds
                .as_ref()
                .ok_or_else(|| CliError::Config("circle mode needs `rds`".into()))?;
            let grid = params.grid_points.unwrap_or(16);
            let noise = noise_spec.build()?;
            let (cocycle, path) = rds.build(&noise)?;
            let t = params.t.unwrap_or(path.tau() / grid as f64);
            let phis: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = vec![
                Box::new(|x| (TAU * x).sin()),
                Box::new(|x| (TAU * x).cos()),
                Box::new(|x| f64::from(x < 0.3)),
            ];
            let worst = check_sublinear_invariance_empirical(
                &noise, &cocycle, &path, grid, t, &phis, params.n, seed,
            )
            .map_err(CliError::Module)?;
            #[derive(Serialize)]
            struct Doc {
                mode: &'static str,
                grid_points: usize,
                t: f64,
                n: usize,
                worst_z: f64,
            }
            out.write_json(
                "sublinear_invariance.json",
                &Doc {
                    mode: "empirical",
                    grid_points: grid,
                    t,
                    n: params.n,
                    worst_z: worst,
                },
            )?;
            Ok(vec![
                CheckResult::new("invariance-z", worst <= 4.0).with_value(worst)
            ])
        }
        _ => Err(CliError::Config(
            "sublinear-invariance needs exactly one of `matrix` or `noise`".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// sublinear-ergodic
// ---------------------------------------------------------------------------

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sublinear_ergodic(
    params: &SublinearErgodicParams,
    _seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    if params.q == 0 || 2 * params.q > 32 {
        return Err(CliError::Config(format!(
            "q = {} outside 1..=16 (states are bitmask-coded)",
            params.q
        )));
    }
    let surrogate = TwoCircleSurrogate {
        p: params.p,
        q: params.q,
    };
    let ue = surrogate.upper_expectation().map_err(CliError::Module)?;
    let full = (1u32 << surrogate.state_count()) - 1;
    let orbit = surrogate.orbit_set(0);
    let candidates = vec![0u32, full, orbit];
    let verdicts = sublinear_ergodic_check(&surrogate.map(), &ue, &candidates, params.atol)
        .map_err(CliError::Module)?;

    // exact two-interval reference values computed alongside the surrogate
    let exact = TwoIntervalSystem {
        alpha: ergoperiod_core::noise::DEFAULT_ALPHA,
    };
    let first_interval = exact
        .upper_expect_indicator(&[(0.0, 1.0)])
        .map_err(CliError::Module)?;
    let straddle = exact.capacity(&[(0.5, 1.5)]).map_err(CliError::Module)?;

    #[derive(Serialize)]
    struct Doc<'a> {
        p: usize,
        q: usize,
        rational_rotation: bool,
        verdicts: &'a [ergoperiod_core::sublinear::SetVerdict],
        exact_two_interval: ExactDoc,
    }
    #[derive(Serialize)]
    struct ExactDoc {
        upper_expect_first_interval: f64,
        capacity_straddling_set: f64,
    }
    out.write_json(
        "sublinear_ergodic.json",
        &Doc {
            p: params.p,
            q: params.q,
            rational_rotation: true,
            verdicts: &verdicts,
            exact_two_interval: ExactDoc {
                upper_expect_first_interval: first_interval,
                capacity_straddling_set: straddle,
            },
        },
    )?;

    let orbit_should_pass = gcd(params.p, params.q) == 1;
    Ok(vec![
        CheckResult::new("trivial-sets", verdicts[0].pass && verdicts[1].pass),
        CheckResult::new(
            "orbit-set-matches-theory",
            verdicts[2].pass == orbit_should_pass,
        )
        .with_detail(format!(
            "gcd({}, {}) = {}, verdict pass = {}",
            params.p,
            params.q,
            gcd(params.p, params.q),
            verdicts[2].pass
        )),
        CheckResult::new("exact-values", first_interval == 1.0 && straddle == 0.5),
    ])
}

// ---------------------------------------------------------------------------
// birkhoff-qs
// ---------------------------------------------------------------------------

fn birkhoff_qs(
    params: &BirkhoffQsParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let noise = params.noise.build()?;
    let (cocycle, path) = params.rds.build(&noise)?;
    let observable = params.observable.clone();
    let xi = move |st: &SkewState| -> f64 {
        match &observable {
            QsObservable::SinNoiseCoordinate => {
                (TAU * st.noise.circle_coordinate().unwrap_or(0.0)).sin()
            }
            QsObservable::PhaseIndicator { state } => {
                f64::from(st.phase.as_state().map(|x| x == *state).unwrap_or(false))
            }
            QsObservable::Constant { value } => *value,
        }
    };
    if params.horizons.is_empty() {
        return Err(CliError::Config("need at least one horizon".into()));
    }
    let mut reports = Vec::new();
    for &horizon in &params.horizons {
        let report = birkhoff_qs_lln(
            &noise,
            &cocycle,
            &path,
            &xi,
            horizon,
            params.delta,
            params.n_paths,
            params.grid_points,
            params.epsilon,
            params.n_target,
            seed,
        )
        .map_err(CliError::Module)?;
        reports.push(report);
    }
    out.write_json("birkhoff_qs.json", &reports)?;
    let curve: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.horizon, r.max_fraction))
        .collect();
    out.write_csv(
        "deviant_fraction_vs_horizon.csv",
        &plot_data(("horizon", "max_deviant_fraction"), &curve)?,
    )?;
    let last_sections: Vec<(f64, f64)> = reports
        .last()
        .unwrap()
        .per_s
        .iter()
        .map(|d| (d.s, d.deviant_fraction))
        .collect();
    out.write_csv(
        "deviant_fraction_by_section.csv",
        &plot_data(("s", "deviant_fraction"), &last_sections)?,
    )?;

    let fractions: Vec<f64> = reports.iter().map(|r| r.max_fraction).collect();
    let final_fraction = *fractions.last().unwrap();
    let nonincreasing = fractions.windows(2).all(|w| w[0] >= w[1]);
    Ok(vec![
        CheckResult::new("deviant-fraction-final", final_fraction <= 0.01)
            .with_value(final_fraction),
        CheckResult::new("deviant-fraction-nonincreasing", nonincreasing),
    ])
}

// ---------------------------------------------------------------------------
// wiener-shift
// ---------------------------------------------------------------------------

fn wiener_shift(
    params: &WienerShiftParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let mut checks = Vec::new();
    #[derive(Serialize)]
    struct SummaryRow {
        functional: String,
        n: usize,
        estimate: f64,
        stderr: f64,
        target: f64,
        sigmas_from_target: f64,
        pass: bool,
    }
    let mut summary = Vec::new();
    for (i, (functional, target)) in standard_functionals(params.tau).into_iter().enumerate() {
        let orbit = birkhoff_shift_average(
            &functional,
            params.tau,
            params.n_steps,
            params.mesh,
            seed ^ (i as u64) << 4,
        )
        .map_err(CliError::Module)?;
        let sigmas = orbit.sigmas_from(target);
        let pass = sigmas <= 4.0;
        checks.push(
            CheckResult::new(format!("orbit-average/{}", orbit.functional), pass)
                .with_value(sigmas),
        );
        // running-average curve, thinned to about a thousand points
        let stride = (orbit.series.len() / 1000).max(1);
        let mut running = Vec::new();
        let mut acc = 0.0;
        for (k, v) in orbit.series.iter().enumerate() {
            acc += v;
            if (k + 1) % stride == 0 || k + 1 == orbit.series.len() {
                running.push(((k + 1) as f64, acc / (k + 1) as f64));
            }
        }
        out.write_csv(
            &format!("running_average_{}.csv", orbit.functional),
            &plot_data(("n", "running_average"), &running)?,
        )?;
        summary.push(SummaryRow {
            functional: orbit.functional.clone(),
            n: orbit.n,
            estimate: orbit.estimate,
            stderr: orbit.stderr,
            target,
            sigmas_from_target: sigmas,
            pass,
        });
    }
    out.write_json("wiener_shift.json", &summary)?;

    // decorrelation of the depth-1 sign functional at the requested lags
    let battery = standard_functionals(params.tau);
    let sign = &battery[0].0;
    let lag_cov = decorrelation(
        sign,
        sign,
        params.tau,
        &params.lags,
        params.n_steps / 2,
        params.mesh,
        seed ^ 0xdeca,
    )
    .map_err(CliError::Module)?;
    out.write_json("decorrelation.json", &lag_cov)?;
    for lc in &lag_cov {
        let ratio = if lc.stderr == 0.0 {
            f64::INFINITY
        } else {
            lc.covariance.abs() / lc.stderr
        };
        checks.push(
            CheckResult::new(format!("decorrelation/lag{}", lc.lag), ratio <= 4.0)
                .with_value(ratio),
        );
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// canonical-sample
// ---------------------------------------------------------------------------

fn canonical_sample(
    params: &CanonicalSampleParams,
    seed: u64,
    out: &mut OutDir,
) -> Result<Vec<CheckResult>, CliError> {
    let p = params.matrix.build()?;
    let tuples = sample_canonical(&p, &params.law, &params.times, params.n_paths, seed)
        .map_err(CliError::Module)?;

    // empirical first-time marginal, always recorded
    let mut first_marginal = vec![0usize; p.n()];
    for t in &tuples {
        first_marginal[t[0]] += 1;
    }
    #[derive(Serialize)]
    struct Doc {
        times: Vec<usize>,
        n_paths: usize,
        first_time_marginal: Vec<f64>,
    }
    out.write_json(
        "canonical_sample.json",
        &Doc {
            times: params.times.clone(),
            n_paths: params.n_paths,
            first_time_marginal: first_marginal
                .iter()
                .map(|&c| c as f64 / params.n_paths as f64)
                .collect(),
        },
    )?;
    if params.emit_tuples {
        let header = params
            .times
            .iter()
            .map(|t| format!("t{t}"))
            .collect::<Vec<_>>()
            .join(",");
        let mut csv = header + "\n";
        for tuple in &tuples {
            let row = tuple
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",");
            csv.push_str(&row);
            csv.push('\n');
        }
        out.write_csv("tuples.csv", &csv)?;
    }

    let mut checks = Vec::new();
    if let Some(shift) = params.shift {
        let state = params.shift_observable_state;
        let rep = check_shift_invariance_canonical(
            &p,
            &params.law,
            |xs| f64::from(xs[0] == state),
            &params.times,
            shift,
            params.n_paths,
            seed ^ 0x5a17,
        )
        .map_err(CliError::Module)?;
        checks.push(CheckResult::new("shift-invariance-z", rep.pass()).with_value(rep.z_score));
    } else {
        checks.push(CheckResult::new("sampled", true).with_value(params.n_paths as f64));
    }
    Ok(checks)
}
