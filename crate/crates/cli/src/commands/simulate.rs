use clap::Args;
use frmpc_core::market::{load_fr_signal, synth_fr};
use frmpc_core::ocp::resample;
use frmpc_core::sim::{DaeSimulator, Feasibility};
use frmpc_core::{CellState, HourlyCommitment, Plant, PlantState};

use super::num;
use crate::config::AppConfig;
use crate::error::CliError;
use crate::output::OutDir;
use crate::DataArgs;

pub const TRACE_FILE: &str = "trace.csv";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Hours to simulate; the same commitments apply to every hour.
    #[arg(long, default_value_t = 1)]
    hours: usize,
    /// FR band F, MW.
    #[arg(long, default_value_t = 0.0)]
    band: f64,
    /// Energy purchase O, MW.
    #[arg(long, default_value_t = 0.0)]
    order: f64,
    /// Load L, MW.
    #[arg(long, default_value_t = 0.0)]
    load: f64,
    /// Initial stoichiometry of the negative electrode.
    #[arg(long)]
    soc: Option<f64>,
    /// Switch the SEI side reaction off.
    #[arg(long)]
    no_side_reaction: bool,
    #[command(flatten)]
    data: DataArgs,
}

pub fn run(a: &SimulateArgs, mut cfg: AppConfig, out: &OutDir) -> Result<(), CliError> {
    a.data.apply(&mut cfg);
    if a.data.prices.is_some() {
        return Err(CliError::Config("simulate takes no --prices".into()));
    }
    cfg.check_files()?;
    if cfg.paths.params.is_none() {
        return Err(CliError::Config("missing --params (cell parameter file)".into()));
    }
    if a.hours == 0 {
        return Err(CliError::Config("--hours must be at least 1".into()));
    }
    for (name, v) in [("--band", a.band), ("--order", a.order), ("--load", a.load)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::Config(format!("{name} must be a nonnegative number, got {v}")));
        }
    }
    let mut params = cfg.params()?;
    if a.no_side_reaction {
        params = params.without_side_reaction();
    }
    let sim = cfg.sim_config()?;
    let s = sim.steps_per_hour;
    let alpha: Vec<Vec<f64>> = match &cfg.paths.fr_signal {
        Some(p) => load_fr_signal(p)?
            .iter()
            .map(|h| resample(h, s))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("FR signal: {e}")))?,
        None => synth_fr(cfg.seed, a.hours, s),
    };
    let soc = a.soc.unwrap_or(cfg.run.initial_soc);
    if !(0.0..=1.0).contains(&soc) {
        return Err(CliError::Config(format!("--soc {soc} outside [0, 1]")));
    }
    out.claim(&[TRACE_FILE.to_string()])?;

    let plant = DaeSimulator::new(params.clone(), sim);
    let c = HourlyCommitment::new(a.band, a.order, a.load);
    let dt = 3600.0 / s as f64;
    let mut state = PlantState::new(CellState::fresh(&params, soc), &params);
    let start_fade = state.cell.c_f;
    let mut w = csv::Writer::from_writer(out.create(TRACE_FILE)?);
    w.write_record(["t", "P", "E", "V", "C_r", "C_f", "delta_f"])?;
    let mut scheduled = 0.0;
    let mut verdict = Feasibility::Feasible;
    let mut hours_done = 0;
    for h in 0..a.hours {
        let tr = plant.simulate(&state, &c, &alpha[h % alpha.len()], false);
        for k in 0..tr.energy.len() {
            let t = (h * s + k + 1) as f64 * dt;
            w.write_record([
                num(t),
                num(tr.power[k]),
                num(tr.energy[k]),
                num(tr.voltage[k]),
                num(tr.fade_rate[k]),
                num(tr.fade[k]),
                num(tr.film[k]),
            ])?;
            scheduled += tr.power[k] / s as f64;
        }
        state = tr.end;
        hours_done += 1;
        if !tr.is_feasible() {
            verdict = tr.verdict.clone();
            break;
        }
    }
    w.flush().map_err(|e| CliError::io("writing trace", e))?;
    println!(
        "hours={hours_done} steps_per_hour={s} scheduled_mwh={} final_energy_mwh={} fade_increment={} final_fade={} final_film_m={} verdict={}",
        num(scheduled),
        num(state.cell.energy(&params)),
        num(state.cell.c_f - start_fade),
        num(state.cell.c_f),
        num(state.cell.delta_f),
        verdict.label()
    );
    match verdict {
        Feasibility::Feasible => Ok(()),
        Feasibility::OverCharge { step } => Err(CliError::Infeasible(format!(
            "over-charge in hour {hours_done} at step {}",
            step + 1
        ))),
        Feasibility::OverDischarge { step } => Err(CliError::Infeasible(format!(
            "over-discharge in hour {hours_done} at step {}",
            step + 1
        ))),
        Feasibility::SolverFailure { step, cause } => Err(CliError::Infeasible(format!(
            "cell model failed in hour {hours_done} at step {}: {cause}",
            step + 1
        ))),
    }
}
