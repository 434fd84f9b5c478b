//! Implementations of the CLI subcommands.

use std::path::Path;

use dropo_core::sim::generate_dataset;
use dropo_core::{
    extract_transitions_multi, point_replay_mse, tune_epsilon as run_tune_epsilon,
    DynamicsSample, ObjectiveKind, Simulator, Trajectory, TransitionDataset,
};

use crate::config::RunConfig;
use crate::errors::{CliError, CliResult};
use crate::resultfile::{
    episode_path, sibling, write_sweep_csv, write_trace_csv, ResultFile, TruthFile,
};
use crate::{rawlog, trajfile};

pub fn gen(config: &RunConfig, out: &Path) -> CliResult<()> {
    let sim = config.build_simulator()?;
    let datagen = config.build_datagen(sim.as_ref())?;
    let data = generate_dataset(sim.as_ref(), &datagen)?;
    for (i, traj) in data.trajectories.iter().enumerate() {
        let path = episode_path(out, i, data.trajectories.len());
        trajfile::write(&path, traj)?;
        println!(
            "wrote {} ({} transitions)",
            path.display(),
            traj.actions.len()
        );
    }
    let truth = TruthFile::new(
        datagen.seed,
        datagen.noise_std.clone(),
        sim.param_space().names().to_vec(),
        &data.draws,
    );
    let truth_path = sibling(out, ".truth.toml");
    truth.write(&truth_path)?;
    println!(
        "wrote {} ({} dynamics draws)",
        truth_path.display(),
        truth.draws.len()
    );
    Ok(())
}

pub fn preprocess(
    config: &RunConfig,
    log_path: &Path,
    out: &Path,
    suggest_offset: Option<&str>,
) -> CliResult<()> {
    let roles = config.channel_roles()?;
    let section = config
        .preprocess
        .as_ref()
        .expect("channel_roles validated the section");
    let log = rawlog::read_with_roles(log_path, &roles)?;

    if let Some(pair) = suggest_offset {
        let (base, shifted) = pair.split_once(':').ok_or_else(|| {
            CliError::usage("--suggest-offset expects BASE:SHIFTED channel names")
        })?;
        let estimate = dropo_core::preprocess::estimate_offset(&log, base, shifted)?;
        println!("suggested offset for '{shifted}' relative to '{base}': {estimate} s (heuristic)");
    }

    let offsets = section.offsets.clone().into_iter().collect();
    let synced = dropo_core::preprocess::synchronize(&log, &offsets)?;
    let traj = dropo_core::preprocess::resample_to_timestep(&synced, section.dt)?;
    trajfile::write(out, &traj)?;
    println!(
        "wrote {} ({} states, {} state dims)",
        out.display(),
        traj.states.len(),
        traj.state_dim()
    );
    Ok(())
}

fn load_dataset(
    config: &RunConfig,
    sim: &dyn Simulator,
    paths: &[std::path::PathBuf],
) -> CliResult<TransitionDataset> {
    let lambda = config
        .likelihood
        .as_ref()
        .ok_or_else(|| CliError::usage("config is missing the [likelihood] section"))?
        .lambda;
    let trajectories: Vec<Trajectory> = paths
        .iter()
        .map(|p| trajfile::read(p))
        .collect::<CliResult<_>>()?;
    for (path, traj) in paths.iter().zip(&trajectories) {
        if traj.state_dim() != sim.state_dim() || traj.action_dim() != sim.action_dim() {
            return Err(CliError::usage(format!(
                "{}: trajectory is {}-state/{}-action, simulator expects {}/{}",
                path.display(),
                traj.state_dim(),
                traj.action_dim(),
                sim.state_dim(),
                sim.action_dim()
            )));
        }
    }
    Ok(extract_transitions_multi(&trajectories, lambda)?)
}

pub fn fit(config: &RunConfig, data: &[std::path::PathBuf], out: &Path) -> CliResult<()> {
    let sim = config.build_simulator()?;
    let dataset = load_dataset(config, sim.as_ref(), data)?;
    let fit_cfg = config.build_fit(sim.as_ref())?;
    let result = dropo_core::fit(&dataset, sim.as_ref(), &fit_cfg)?;

    let objective_name = match fit_cfg.objective {
        ObjectiveKind::DropoLogLikelihood => "dropo",
        ObjectiveKind::DroidL2 => "droid",
    };
    let trace_path = sibling(out, ".trace.csv");
    write_trace_csv(
        &trace_path,
        &result,
        fit_cfg.objective == ObjectiveKind::DropoLogLikelihood,
    )?;
    let doc = ResultFile::from_fit(
        &result,
        objective_name,
        dataset.len(),
        trace_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        config.clone(),
    );
    doc.write(out)?;
    println!("wrote {}", out.display());
    for p in &doc.parameters {
        println!("  {}: mean {} std {}", p.name, p.mean, p.std);
    }
    println!(
        "  mse {} ({} per transition), {} evaluations",
        doc.mse, doc.mse_per_transition, doc.evaluations
    );
    Ok(())
}

pub fn tune_epsilon(config: &RunConfig, data: &[std::path::PathBuf], out: &Path) -> CliResult<()> {
    let tuning = config
        .tuning
        .as_ref()
        .ok_or_else(|| CliError::usage("config is missing the [tuning] section"))?
        .clone();
    let sim = config.build_simulator()?;
    let dataset = load_dataset(config, sim.as_ref(), data)?;
    let fit_cfg = config.build_fit(sim.as_ref())?;
    let outcome = run_tune_epsilon(
        &dataset,
        sim.as_ref(),
        &fit_cfg,
        &tuning.epsilon_candidates,
        tuning.tau,
    )?;

    let sweep_path = sibling(out, ".sweep.csv");
    write_sweep_csv(&sweep_path, &outcome.rows)?;
    println!("wrote {}", sweep_path.display());
    for row in &outcome.rows {
        println!(
            "  epsilon {}: total_variance {} mse {}",
            row.epsilon, row.total_variance, row.mse
        );
    }

    match outcome.selected {
        Some(idx) => {
            let fit = &outcome.fits[idx];
            let trace_path = sibling(out, ".trace.csv");
            write_trace_csv(&trace_path, fit, true)?;
            let doc = ResultFile::from_fit(
                fit,
                "dropo",
                dataset.len(),
                trace_path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                config.clone(),
            );
            doc.write(out)?;
            println!(
                "selected epsilon {} (mse {} < tau {})",
                outcome.rows[idx].epsilon, outcome.rows[idx].mse, tuning.tau
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        None => Err(CliError::ThresholdUnreachable(format!(
            "no candidate epsilon reached mse < {} (sweep table at {})",
            tuning.tau,
            sweep_path.display()
        ))),
    }
}

fn parse_named_params(text: &str, sim: &dyn Simulator) -> CliResult<Vec<f64>> {
    let names = sim.param_space().names();
    let mut values = vec![None; names.len()];
    for piece in text.split(',') {
        let (name, value) = piece.split_once('=').ok_or_else(|| {
            CliError::usage(format!("--params entries must be name=value, got '{piece}'"))
        })?;
        let idx = sim
            .param_space()
            .index_of(name.trim())
            .ok_or_else(|| CliError::usage(format!("unknown parameter '{}'", name.trim())))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("invalid value in '{piece}'")))?;
        values[idx] = Some(value);
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::usage(format!("missing parameter '{}'", names[i]))))
        .collect()
}

pub fn replay(
    config: &RunConfig,
    data: &[std::path::PathBuf],
    params: Option<&str>,
    result: Option<&Path>,
    truth: Option<&Path>,
    breakdown: Option<&Path>,
) -> CliResult<()> {
    let sim = config.build_simulator()?;
    let dataset = load_dataset(config, sim.as_ref(), data)?;

    let values = match (params, result, truth) {
        (Some(text), None, None) => parse_named_params(text, sim.as_ref())?,
        (None, Some(path), None) => {
            let doc = ResultFile::read(path)?;
            let names: Vec<_> = doc.parameters.iter().map(|p| p.name.clone()).collect();
            if names != sim.param_space().names() {
                return Err(CliError::usage(format!(
                    "result parameters {names:?} do not match simulator parameters {:?}",
                    sim.param_space().names()
                )));
            }
            doc.means()
        }
        (None, None, Some(path)) => {
            let doc = TruthFile::read(path)?;
            if doc.parameter_names != sim.param_space().names() {
                return Err(CliError::usage(format!(
                    "sidecar parameters {:?} do not match simulator parameters {:?}",
                    doc.parameter_names,
                    sim.param_space().names()
                )));
            }
            doc.draws
                .first()
                .ok_or_else(|| CliError::usage("sidecar holds no dynamics draws"))?
                .values
                .clone()
        }
        _ => {
            return Err(CliError::usage(
                "exactly one of --params, --result or --truth is required",
            ))
        }
    };

    let sample = DynamicsSample::new(values.clone());
    let per_transition = point_replay_mse(&sample, &dataset, sim.as_ref())?;
    println!(
        "replaying {} transitions with {:?} = {:?}",
        dataset.len(),
        sim.param_space().names(),
        values
    );
    for (i, err) in per_transition.iter().enumerate() {
        println!("transition {i}: squared error {err}");
    }
    let total: f64 = per_transition.iter().sum();
    println!("total squared error {total}");
    println!("per-transition mean {}", total / dataset.len() as f64);

    if let Some(path) = breakdown {
        let mut out = String::from("transition");
        for i in 0..dataset.state_dim {
            out.push_str(&format!(",sq_err_{i}"));
        }
        out.push('\n');
        for (i, tr) in dataset.transitions.iter().enumerate() {
            let replayed = sim.replay(&tr.start_state, &tr.actions, &sample)?;
            out.push_str(&format!("{i}"));
            for (a, b) in replayed.iter().zip(&tr.next_state) {
                out.push_str(&format!(",{}", (a - b) * (a - b)));
            }
            out.push('\n');
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
