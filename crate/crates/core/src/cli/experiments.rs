//! Experiment drivers: batches of seeded unreliable schedules, checked
//! against the synchronous fixed point of each epoch.
//!
//! The unique-fixed-point experiment runs many schedules from randomized
//! accordant initial states and asserts that every run whose epoch contains
//! at least the measured pseudocycle budget lands in one identical state,
//! which is a fixed point of the synchronous update. The budget is
//! measured, not assumed: it is the largest number of pseudocycles any
//! converging run actually needed.

use serde::Serialize;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::Algebra;
use crate::asyncsim::{
    find_pseudocycles, generate_schedule, participating_topology, NetworkOverEpochs,
    ScheduleTrace,
};
use crate::cli::config::{
    build_network, participants_per_epoch, schedule_params, InstanceConfig,
};
use crate::convergence::{is_free, sample_accordant_state};
use crate::protocol::{default_horizon, run_synchronous, step, RoutingState, SyncOutcome};

#[derive(Debug, Clone, Serialize)]
pub struct RunEpochSummary {
    pub epoch: usize,
    pub pseudocycles: usize,
    pub reached_fixed_point: bool,
    pub converged_at: Option<usize>,
    pub pseudocycles_needed: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub per_epoch: Vec<RunEpochSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub window: (usize, usize),
    pub sync_steps: usize,
    pub fixed_point: Vec<Vec<String>>,
    /// Largest pseudocycle count any converging run needed; the budget.
    pub k_star: Option<usize>,
    pub runs_meeting_budget: usize,
    pub runs_converged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub n: usize,
    pub schedules: usize,
    pub master_seed: u64,
    pub horizon: usize,
    pub epochs: Vec<EpochReport>,
    pub runs: Vec<RunSummary>,
    pub failures: Vec<String>,
    pub ok: bool,
}

struct EpochPlan<W> {
    epoch: usize,
    seg_start: usize,
    seg_end: usize,
    star: RoutingState<W>,
    sync_steps: usize,
}

fn epoch_windows(cfg: &InstanceConfig, horizon: usize) -> Vec<(usize, usize, usize)> {
    let starts = crate::cli::config::epoch_starts(cfg);
    let mut out = Vec::new();
    let epochs = cfg.epochs.len();
    for e in 0..epochs {
        let seg_start = if e == 0 { 0 } else { starts[e - 1] };
        let seg_end = if e + 1 < epochs {
            starts[e].saturating_sub(1)
        } else {
            horizon
        };
        if seg_start <= horizon && seg_start <= seg_end {
            out.push((e, seg_start, seg_end.min(horizon)));
        }
    }
    out
}

fn epoch_plans<A: Algebra>(
    alg: &A,
    cfg: &InstanceConfig,
    network: &NetworkOverEpochs,
    horizon: usize,
) -> Result<Vec<EpochPlan<A::Weight>>, String> {
    let participants = participants_per_epoch(cfg);
    let mut plans = Vec::new();
    for (epoch, seg_start, seg_end) in epoch_windows(cfg, horizon) {
        let topo = participating_topology(alg, network, epoch, &participants[epoch])
            .map_err(|e| e.to_string())?;
        if alg.enumerate().is_some() {
            let report = is_free(alg, &topo).map_err(|e| e.to_string())?;
            if !report.free {
                return Err(format!(
                    "refusing to run: epoch {epoch} is {}",
                    report.render(alg)
                ));
            }
        }
        let sync_horizon = default_horizon(alg, cfg.n).unwrap_or(10 * cfg.n * cfg.n + 50);
        let (star, sync_steps) = match run_synchronous(
            alg,
            &topo,
            &RoutingState::identity(alg, cfg.n),
            sync_horizon,
        ) {
            SyncOutcome::Converged { state, t } => (state, t),
            SyncOutcome::Oscillating { period, .. } => {
                return Err(format!(
                    "epoch {epoch} oscillates synchronously with period {period}"
                ))
            }
            SyncOutcome::Exhausted { .. } => {
                return Err(format!(
                    "epoch {epoch} found no synchronous fixed point within {sync_horizon} steps"
                ))
            }
        };
        let again = step(alg, &topo, &star).map_err(|e| e.to_string())?;
        if again != star {
            return Err(format!("epoch {epoch} produced a bogus fixed point"));
        }
        plans.push(EpochPlan {
            epoch,
            seg_start,
            seg_end,
            star,
            sync_steps,
        });
    }
    Ok(plans)
}

fn analyze_run<A: Algebra>(
    alg: &A,
    network: &NetworkOverEpochs,
    trace: &ScheduleTrace,
    x0: &RoutingState<A::Weight>,
    plans: &[EpochPlan<A::Weight>],
) -> Result<Vec<RunEpochSummary>, String> {
    let states = crate::asyncsim::run_delta(alg, network, trace, x0).map_err(|e| e.to_string())?;
    let cycles = find_pseudocycles(trace);
    let mut out = Vec::new();
    for plan in plans {
        let in_window: Vec<(usize, usize)> = cycles
            .iter()
            .copied()
            .filter(|&(a, b)| a >= plan.seg_start && b <= plan.seg_end)
            .collect();
        let reached = states[plan.seg_end] == plan.star;
        let (converged_at, needed) = if reached {
            let mut t = plan.seg_end;
            while t > plan.seg_start && states[t - 1] == plan.star {
                t -= 1;
            }
            let needed = in_window.iter().filter(|&&(_, b)| b <= t).count();
            (Some(t), Some(needed))
        } else {
            (None, None)
        };
        out.push(RunEpochSummary {
            epoch: plan.epoch,
            pseudocycles: in_window.len(),
            reached_fixed_point: reached,
            converged_at,
            pseudocycles_needed: needed,
        });
    }
    Ok(out)
}

/// Runs `schedules` seeded unreliable schedules from randomized accordant
/// initial states, measures the pseudocycle budget, and asserts agreement
/// of every budgeted run on one fixed point per epoch.
pub fn unique_fixed_point<A: Algebra>(
    alg: &A,
    cfg: &InstanceConfig,
    schedules: usize,
    master_seed: u64,
    horizon: usize,
) -> Result<ExperimentResult, String> {
    let network = build_network(alg, cfg).map_err(|e| e.to_string())?;
    let plans = epoch_plans(alg, cfg, &network, horizon)?;
    let participants = participants_per_epoch(cfg);

    let mut master = ChaCha8Rng::seed_from_u64(master_seed);
    let seeds: Vec<u64> = (0..schedules).map(|_| master.gen()).collect();

    let mut runs = Vec::new();
    for &seed in &seeds {
        let params = schedule_params(cfg, seed);
        let trace = generate_schedule(&params, cfg.n, horizon);
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let x0 = sample_accordant_state(alg, cfg.n, &participants[0], &mut init_rng);
        let per_epoch = analyze_run(alg, &network, &trace, &x0, &plans)?;
        runs.push(RunSummary { seed, per_epoch });
    }

    let mut failures = Vec::new();
    let mut epochs = Vec::new();
    for (idx, plan) in plans.iter().enumerate() {
        let k_star = runs
            .iter()
            .filter_map(|r| r.per_epoch[idx].pseudocycles_needed)
            .max();
        let mut meeting = 0;
        let mut converged = 0;
        if let Some(k) = k_star {
            let witness = runs
                .iter()
                .find(|r| r.per_epoch[idx].reached_fixed_point)
                .map(|r| r.seed);
            for run in &runs {
                let summary = &run.per_epoch[idx];
                if summary.reached_fixed_point {
                    converged += 1;
                }
                if summary.pseudocycles >= k {
                    meeting += 1;
                    if !summary.reached_fixed_point {
                        failures.push(format!(
                            "epoch {}: seed {} saw {} pseudocycles (budget {k}) but its final \
                             state differs from the fixed point reached by seed {}",
                            plan.epoch,
                            run.seed,
                            summary.pseudocycles,
                            witness.unwrap_or(0),
                        ));
                    }
                }
            }
        } else {
            failures.push(format!(
                "epoch {}: no run reached the fixed point; extend the horizon",
                plan.epoch
            ));
        }
        epochs.push(EpochReport {
            epoch: plan.epoch,
            window: (plan.seg_start, plan.seg_end),
            sync_steps: plan.sync_steps,
            fixed_point: plan.star.render(alg),
            k_star,
            runs_meeting_budget: meeting,
            runs_converged: converged,
        });
    }

    let ok = failures.is_empty();
    Ok(ExperimentResult {
        n: cfg.n,
        schedules,
        master_seed,
        horizon,
        epochs,
        runs,
        failures,
        ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCountStats {
    pub epoch: usize,
    pub sync_steps: usize,
    pub runs_converged: usize,
    pub min_pseudocycles: Option<usize>,
    pub mean_pseudocycles: Option<f64>,
    pub max_pseudocycles: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountToConvergenceResult {
    pub n: usize,
    pub schedules: usize,
    pub master_seed: u64,
    pub horizon: usize,
    pub stats: Vec<ConvergenceCountStats>,
    pub runs: Vec<RunSummary>,
    pub ok: bool,
}

/// Measures, per epoch, how many pseudocycles the asynchronous runs needed
/// to land on the synchronous fixed point, next to the synchronous step
/// count.
pub fn count_to_convergence<A: Algebra>(
    alg: &A,
    cfg: &InstanceConfig,
    schedules: usize,
    master_seed: u64,
    horizon: usize,
) -> Result<CountToConvergenceResult, String> {
    let base = unique_fixed_point(alg, cfg, schedules, master_seed, horizon)?;
    let stats = base
        .epochs
        .iter()
        .map(|er| {
            let needed: Vec<usize> = base
                .runs
                .iter()
                .flat_map(|r| &r.per_epoch)
                .filter(|s| s.epoch == er.epoch)
                .filter_map(|s| s.pseudocycles_needed)
                .collect();
            ConvergenceCountStats {
                epoch: er.epoch,
                sync_steps: er.sync_steps,
                runs_converged: er.runs_converged,
                min_pseudocycles: needed.iter().min().copied(),
                mean_pseudocycles: (!needed.is_empty())
                    .then(|| needed.iter().sum::<usize>() as f64 / needed.len() as f64),
                max_pseudocycles: needed.iter().max().copied(),
            }
        })
        .collect();
    Ok(CountToConvergenceResult {
        n: base.n,
        schedules: base.schedules,
        master_seed: base.master_seed,
        horizon: base.horizon,
        stats,
        runs: base.runs,
        ok: base.ok,
    })
}
