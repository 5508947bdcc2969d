//! One runner per experiment mode.

use std::fs::File;
use std::io::Write;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use spikelab::belavkin::{
    cmatrix_from_pairs, cvector_from_pairs, simulate_belavkin_with, BelavkinModel, DensityMatrix, RunConfig, ThermalModel,
};
use spikelab::graph_metric::hausdorff;
use spikelab::io::{read_planar_set, write_chain, write_column_set, write_columns, write_density_trajectory, write_limit_graph, write_path, write_spikes};
use spikelab::rng::stream;
use spikelab::scale_time::{
    coupled_graph, coupled_trajectory, mixed_local_time_clock, mixed_local_time_clock_with, sample_brownian, sweep, ScaleFunction,
};
use spikelab::spike_limit::{limit_graph_from_clock, sample_first_spike, sample_q_with, sample_spikes_with, FirstSpike, SpikeEvent};
use spikelab::twostate::{simulate_with, SimConfig, TwoStateParams};
use spikelab::validation::{Acceptance, AcceptanceConfig, CRITERIA, GAMMA_SWEEP};

use crate::config::{ExperimentConfig, Mode};
use crate::output::{Manifest, Output};

/// Most rows written for the (ell, beta) and (ell, T^-1) dumps unless
/// `dump_stride` is given.
pub const DUMP_ROWS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    /// Lines for the terminal.
    pub report: Vec<String>,
    /// `false` when a validation criterion failed.
    pub passed: bool,
}

/// Runs `cfg` on a pool of `workers` threads (0: one per core).
pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let out = Output::create(&cfg.output_dir)?;
    let (results, report, passed) = pool
        .install(|| match cfg.mode {
            Mode::Belavkin => belavkin(cfg, &out),
            Mode::Twostate => twostate(cfg, &out),
            Mode::CoupledSweep => coupled_sweep(cfg, &out),
            Mode::LimitSample => limit_sample(cfg, &out),
            Mode::Validate => validate(cfg, &out),
            Mode::HausdorffSweep => hausdorff_sweep(cfg, &out),
        })
        .with_context(|| format!("mode `{}`", cfg.mode))?;
    let manifest = out.finish(cfg, results)?;
    Ok(RunOutcome {
        manifest,
        report,
        passed,
    })
}

type ModeResult = Result<(Value, Vec<String>, bool)>;

fn indexed(name: &str, i: usize) -> String {
    format!("{name}_{i:04}.csv")
}

fn gamma_tag(g: f64) -> String {
    format!("{g:e}")
}

fn belavkin(cfg: &ExperimentConfig, out: &Output) -> ModeResult {
    let g = cfg.get();
    let n = g.count("dim", 0, 1)?;
    let gamma = g.f64("gamma", None)?;
    let model = match g.string("model", Some("thermal"))?.as_str() {
        "thermal" => ThermalModel::new(
            cmatrix_from_pairs(n, &g.f64_list("amplitudes", None)?).context("key `amplitudes`")?,
            cvector_from_pairs(&g.f64_list("n_values", None)?).context("key `n_values`")?,
            g.f64_list("energies", None)?,
            gamma,
        )?
        .to_belavkin(),
        "general" => {
            let couplings = g
                .f64_list_list("couplings")?
                .iter()
                .map(|c| cmatrix_from_pairs(n, c))
                .collect::<spikelab::Result<Vec<_>>>()
                .context("key `couplings`")?;
            BelavkinModel::new(
                cmatrix_from_pairs(n, &g.f64_list("hamiltonian", None)?).context("key `hamiltonian`")?,
                cmatrix_from_pairs(n, &g.f64_list("measurement", None)?).context("key `measurement`")?,
                couplings,
                gamma,
            )?
        }
        other => bail!("key `model` = `{other}`: expected `thermal` or `general`"),
    };
    let rho0 = if g.has("rho0") {
        DensityMatrix::new(cmatrix_from_pairs(n, &g.f64_list("rho0", None)?)?).context("key `rho0`")?
    } else if g.has("populations") {
        DensityMatrix::from_populations(&g.f64_list("populations", None)?).context("key `populations`")?
    } else {
        DensityMatrix::maximally_mixed(n)
    };
    let (dt, horizon) = (g.f64("dt", Some(1e-3))?, g.f64("T", None)?);
    let stride = g.count("stride", 1, 1)?;
    let runs = g.count("trajectories", 1, 1)?;
    let results = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rc = RunConfig::new(dt, horizon, cfg.seed);
            rc.trajectory = i as u64;
            rc.stride = stride;
            let traj = simulate_belavkin_with(&model, &rho0, &rc).with_context(|| format!("trajectory {i}"))?;
            out.write(&indexed("belavkin", i), |w| write_density_trajectory(w, &traj.times, &traj.states))?;
            Ok(json!({ "trajectory": i, "steps": traj.steps, "max_trace_defect": traj.max_trace_defect }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((json!({ "trajectories": results }), Vec::new(), true))
}

fn twostate(cfg: &ExperimentConfig, out: &Output) -> ModeResult {
    let g = cfg.get();
    let params = TwoStateParams::for_integration(g.f64("lambda", Some(1.0))?, g.f64("p", Some(0.3))?, g.f64("gamma", None)?)?;
    let q0 = g.f64("q0", Some(params.p()))?;
    let (dt, horizon) = (g.f64("dt", Some(1e-4))?, g.f64("T", None)?);
    let stride = g.count("stride", 1, 1)?;
    let runs = g.count("trajectories", 1, 1)?;
    let results = (0..runs)
        .into_par_iter()
        .map(|i| {
            let sim = simulate_with(&params, q0, &SimConfig::new(dt, horizon, cfg.seed).trajectory(i as u64).stride(stride))
                .with_context(|| format!("trajectory {i}"))?;
            out.write(&indexed("twostate", i), |w| write_path(w, &sim.path))?;
            Ok(json!({ "trajectory": i, "steps": sim.steps, "clamp_events": sim.clamp_events }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((json!({ "trajectories": results }), Vec::new(), true))
}

fn coupled_sweep(cfg: &ExperimentConfig, out: &Output) -> ModeResult {
    let g = cfg.get();
    let (lambda, p) = (g.f64("lambda", Some(1.0))?, g.f64("p", Some(0.3))?);
    let x0 = g.f64("x0", Some(p))?;
    let gammas = g.f64_list("gammas", Some(&GAMMA_SWEEP))?;
    let (dt_eff, len) = (g.f64("dt_eff", Some(1e-5))?, g.f64("L", Some(50.0))?);
    let (delta, m_min, dt_out) = (g.f64("delta", Some(1e-3))?, g.f64("m_min", Some(1e-3))?, g.f64("dt_out", Some(1e-3))?);

    let beta = sample_brownian(x0, dt_eff, len, cfg.seed)?;
    let clock = match g.f64_opt("epsilon")? {
        Some(eps) => mixed_local_time_clock_with(&beta, lambda, p, eps)?,
        None => mixed_local_time_clock(&beta, lambda, p)?,
    };
    let stride = if g.has("dump_stride") {
        g.count("dump_stride", 1, 1)?
    } else {
        beta.len().div_ceil(DUMP_ROWS).max(1)
    };
    let scales = gammas
        .iter()
        .map(|&gamma| ScaleFunction::new(TwoStateParams::new(lambda, p, gamma)?, x0))
        .collect::<spikelab::Result<Vec<_>>>()?;

    // full sweep per gamma: T^-1 dump, distance to the clock, real time reached
    let full = scales
        .par_iter()
        .zip(&gammas)
        .map(|(s, &gamma)| {
            let mut clock_values = clock.values();
            let (mut sup, mut rows) = (0.0_f64, Vec::with_capacity(DUMP_ROWS + 1));
            let summary = sweep(&beta, s, f64::INFINITY, |x| {
                if let Some(c) = clock_values.next() {
                    sup = sup.max((x.t - c).abs());
                }
                if x.index % stride == 0 {
                    rows.push([x.ell, x.t]);
                }
            })?;
            out.write(&format!("tinv_gamma_{}.csv", gamma_tag(gamma)), |w| write_columns(w, ["ell", "tinv"], rows))?;
            Ok((sup, summary.t_end, summary.capped))
        })
        .collect::<Result<Vec<_>>>()?;
    let reach = full.iter().map(|f| f.1).fold(clock.total(), f64::min);
    let horizon = g.f64("H", Some(0.9 * reach))?;

    let limit = limit_graph_from_clock(&beta, &clock, horizon, m_min)?;
    let limit_set = limit.to_planar_set(delta)?;
    let distances = scales
        .par_iter()
        .zip(&gammas)
        .map(|(s, &gamma)| {
            let tag = gamma_tag(gamma);
            let path = coupled_trajectory(&beta, s, horizon, dt_out)?;
            out.write(&format!("path_gamma_{tag}.csv"), |w| write_path(w, &path))?;
            let graph = coupled_graph(&beta, s, horizon, delta)?;
            out.write(&format!("graph_gamma_{tag}.csv"), |w| write_column_set(w, graph.columns()))?;
            Ok(hausdorff(&graph, &limit_set)?)
        })
        .collect::<Result<Vec<f64>>>()?;

    out.write("beta.csv", |w| {
        write_columns(w, ["ell", "beta"], beta.values().iter().enumerate().step_by(stride).map(|(k, &b)| [beta.time(k), b]))
    })?;
    let n_out = (horizon / dt_out).floor() as usize;
    let sigma = (0..=n_out)
        .map(|k| {
            let t = k as f64 * dt_out;
            Ok([t, clock.sigma(t)?])
        })
        .collect::<spikelab::Result<Vec<_>>>()?;
    out.write("clock.csv", |w| write_columns(w, ["t", "sigma"], sigma))?;
    out.write("limit_graph.csv", |w| write_limit_graph(w, &limit))?;
    // columns plus the levels of the chain, binned like the graphs
    out.write("limit_set.csv", |w| write_column_set(w, limit_set.columns()))?;
    out.write("chain.csv", |w| write_chain(w, &limit.chain))?;
    let table: Vec<[f64; 5]> = gammas
        .iter()
        .zip(&full)
        .zip(&distances)
        .map(|((&gamma, f), &d)| [gamma, d, f.0, f.1, f.2 as f64])
        .collect();
    out.write("hausdorff.csv", |w| {
        write_columns(w, ["gamma", "hausdorff", "sup_tinv_minus_clock", "tinv_end", "phi_capped"], table.iter().copied())
    })?;
    let report = gammas
        .iter()
        .zip(&distances)
        .map(|(g, d)| format!("gamma {g:e}: d_H {d:.4e}"))
        .collect();
    let results = json!({
        "horizon": horizon,
        "clock_total": clock.total(),
        "band": clock.band(),
        "dump_stride": stride,
        "jumps": limit.chain.jump_times().len(),
        "hausdorff": distances,
    });
    Ok((results, report, true))
}

fn limit_sample(cfg: &ExperimentConfig, out: &Output) -> ModeResult {
    let g = cfg.get();
    let (lambda, p) = (g.f64("lambda", Some(1.0))?, g.f64("p", Some(0.3))?);
    let x0 = g.f64("x0", Some(p))?;
    let horizon = g.f64("H", None)?;
    let m_min = g.f64("m_min", Some(1e-3))?;
    let runs = g.count("trajectories", 1, 1)?;
    let results = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i as u64);
            // the first spike fixes the initial state of the chain
            let first = sample_first_spike(x0, &mut rng)?;
            let (initial, first_event) = match first {
                FirstSpike::UpToOne { low } => (1.0, Some(SpikeEvent { t: 0.0, state: 1, m: 1.0 - low })),
                FirstSpike::DownToZero { high } => (0.0, Some(SpikeEvent { t: 0.0, state: 0, m: high })),
                FirstSpike::Point(v) => (v, None),
            };
            let chain = sample_q_with(lambda, p, initial, horizon, &mut rng)?;
            let mut spikes = sample_spikes_with(lambda, p, &chain, m_min, &mut rng)?;
            if let Some(e) = first_event {
                spikes.events.insert(0, e);
            }
            out.write(&indexed("chain", i), |w| write_chain(w, &chain))?;
            out.write(&indexed("spikes", i), |w| write_spikes(w, &spikes))?;
            let (lo, hi) = first.interval();
            Ok(json!({
                "trajectory": i,
                "first_spike": [lo, hi],
                "jumps": chain.jump_times().len(),
                "spikes": spikes.len(),
                "occupation": chain.occupation(),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((json!({ "trajectories": results }), Vec::new(), true))
}

fn validate(cfg: &ExperimentConfig, out: &Output) -> ModeResult {
    let g = cfg.get();
    let defaults = AcceptanceConfig::default();
    let acc = AcceptanceConfig {
        seed: cfg.seed,
        lambda: g.f64("lambda", Some(defaults.lambda))?,
        p: g.f64("p", Some(defaults.p))?,
    };
    let all: Vec<f64> = CRITERIA.iter().map(|c| c.0 as f64).collect();
    let ids = g
        .f64_list("criteria", Some(&all))?
        .into_iter()
        .map(|x| {
            if x.fract() == 0.0 && CRITERIA.iter().any(|c| c.0 as f64 == x) {
                Ok(x as u32)
            } else {
                bail!("key `criteria`: {x} is not a criterion id (1 to 10)")
            }
        })
        .collect::<Result<Vec<_>>>()?;
    // criteria run one after another so that their runtimes are honest
    let runner = Acceptance::new(acc);
    let report = runner.run_all(&ids)?;
    let lines = report.criteria.iter().map(|c| c.line()).collect();
    out.write("validation.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(|e| spikelab::Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })?;
    let passed = report.failed == 0;
    let summary = json!({ "passed": report.passed, "failed": report.failed });
    Ok((summary, lines, passed))
}

fn hausdorff_sweep(cfg: &ExperimentConfig, out: &Output) -> ModeResult {
    let g = cfg.get();
    let reference = g.string("reference", None)?;
    let candidates = g.string_list("candidates")?;
    let horizon = g.f64("H", None)?;
    let deltas = g.f64_list("deltas", Some(&[1e-3]))?;
    let open = |name: &str, delta: f64| -> Result<_> {
        let f = File::open(name).with_context(|| format!("opening {name}"))?;
        read_planar_set(f, horizon, delta).with_context(|| format!("reading {name}"))
    };
    let mut rows = Vec::new();
    for &delta in &deltas {
        let base = open(&reference, delta)?;
        let ds = candidates
            .par_iter()
            .map(|c| Ok(hausdorff(&open(c, delta)?, &base)?))
            .collect::<Result<Vec<f64>>>()?;
        rows.extend(candidates.iter().cloned().zip(ds).map(|(c, d)| (c, delta, d)));
    }
    out.write("hausdorff_sweep.csv", |w| {
        writeln!(w, "candidate,delta,hausdorff")?;
        for (c, delta, d) in &rows {
            writeln!(w, "{c},{delta:.16e},{d:.16e}")?;
        }
        Ok(())
    })?;
    let report = rows.iter().map(|(c, delta, d)| format!("{c} (delta {delta:e}): d_H {d:.4e}")).collect();
    let results = json!({ "rows": rows.iter().map(|(c, delta, d)| json!({ "candidate": c, "delta": delta, "hausdorff": d })).collect::<Vec<_>>() });
    Ok((results, report, true))
}
