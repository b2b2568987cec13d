use std::cell::RefCell;

use std::io::Write;

use clap::Args;
use frmpc_core::closed_loop;
use frmpc_core::sim::DaeSimulator;

use super::num;
use crate::config::AppConfig;
use crate::error::CliError;
use crate::output::OutDir;
use crate::DataArgs;

#[derive(Debug, Args)]
pub struct RunArgs {
    /// fixed-band, lf-mpc, lf-fade-mpc or hf-mpc.
    #[arg(long)]
    strategy: Option<String>,
    /// MPC horizon N, hours.
    #[arg(long)]
    horizon: Option<usize>,
    /// Transcription steps per hour of the MPC problems.
    #[arg(long)]
    ocp_steps: Option<usize>,
    /// Maximum closed-loop hours.
    #[arg(long)]
    hours: Option<usize>,
    /// Band of the fixed-band policy, MW.
    #[arg(long)]
    band: Option<f64>,
    /// Fade fraction that ends the run.
    #[arg(long)]
    eol: Option<f64>,
    /// Per-step load in the MPC problems.
    #[arg(long)]
    flexible_load: bool,
    /// Solve-time limit in seconds; slower hours reuse the previous band.
    #[arg(long)]
    deadline: Option<f64>,
    /// Output file prefix [default: the strategy label].
    #[arg(long)]
    prefix: Option<String>,
    /// Also write the per-hour solve times.
    #[arg(long)]
    timing: bool,
    /// Also write every plant step of the applied hours.
    #[arg(long)]
    states: bool,
    #[command(flatten)]
    data: DataArgs,
}

impl RunArgs {
    fn apply(&self, cfg: &mut AppConfig) {
        self.data.apply(cfg);
        if let Some(s) = &self.strategy {
            cfg.strategy.kind = s.clone();
        }
        if let Some(n) = self.horizon {
            cfg.ocp.horizon = n;
        }
        if let Some(s) = self.ocp_steps {
            cfg.ocp.steps_per_hour = s;
        }
        if let Some(h) = self.hours {
            cfg.run.max_hours = h;
        }
        if let Some(f) = self.band {
            cfg.strategy.fixed_band = f;
        }
        if let Some(e) = self.eol {
            cfg.run.eol_threshold = e;
        }
        if self.flexible_load {
            cfg.ocp.flexible_load = true;
        }
        if let Some(d) = self.deadline {
            cfg.run.deadline_s = Some(d);
        }
    }
}

pub fn run(a: &RunArgs, mut cfg: AppConfig, out: &OutDir) -> Result<(), CliError> {
    a.apply(&mut cfg);
    cfg.check_files()?;
    let params = cfg.params()?;
    let rc = cfg.run_config(&params)?;
    let data = cfg.market()?;
    let plant = DaeSimulator::new(params.clone(), cfg.sim_config()?);

    let prefix = a.prefix.clone().unwrap_or_else(|| rc.strategy.kind.label().to_string());
    if prefix.is_empty() || prefix.contains(['/', '\\']) {
        return Err(CliError::Config(format!("bad output prefix '{prefix}'")));
    }
    let ledger_name = format!("{prefix}.ledger.csv");
    let summary_name = format!("{prefix}.summary.json");
    let timing_name = format!("{prefix}.timing.csv");
    let states_name = format!("{prefix}.states.csv");
    let mut names = vec![ledger_name.clone(), summary_name.clone()];
    if a.timing {
        names.push(timing_name.clone());
    }
    if a.states {
        names.push(states_name.clone());
    }
    out.claim(&names)?;

    let states = if a.states {
        let mut w = csv::Writer::from_writer(out.create(&states_name)?);
        w.write_record(["hour", "step", "P", "E", "V", "C_r", "C_f", "delta_f"])?;
        Some(w)
    } else {
        None
    };
    let states = RefCell::new(states);
    let write_err = RefCell::new(None::<csv::Error>);
    let ledger = closed_loop::run_with(&rc, &data, &plant, |t, tr| {
        let mut guard = states.borrow_mut();
        let Some(w) = guard.as_mut() else { return };
        if write_err.borrow().is_some() {
            return;
        }
        for k in 0..tr.energy.len() {
            let r = w.write_record([
                t.to_string(),
                k.to_string(),
                num(tr.power[k]),
                num(tr.energy[k]),
                num(tr.voltage[k]),
                num(tr.fade_rate[k]),
                num(tr.fade[k]),
                num(tr.film[k]),
            ]);
            if let Err(e) = r {
                *write_err.borrow_mut() = Some(e);
                return;
            }
        }
    })?;
    if let Some(e) = write_err.into_inner() {
        return Err(e.into());
    }
    if let Some(mut w) = states.into_inner() {
        w.flush().map_err(|e| CliError::io("writing states", e))?;
    }

    ledger.write_csv(out.create(&ledger_name)?)?;
    let mut w = out.create(&summary_name)?;
    ledger.write_summary_json(&mut w)?;
    w.flush().map_err(|e| CliError::io("writing summary", e))?;
    if a.timing {
        ledger.write_timing_csv(out.create(&timing_name)?)?;
    }
    let s = &ledger.summary;
    println!(
        "strategy={} horizon={} hours={} eol_reached={} lifetime_days={} revenue={} cost={} profit={} final_fade={} flagged_hours={} solver_failures={} out={}",
        s.strategy,
        s.horizon,
        s.hours,
        s.eol_reached,
        s.lifetime_days,
        num(s.revenue),
        num(s.cost),
        num(s.profit),
        num(s.final_fade),
        s.flagged_hours,
        s.solver_failures,
        out.root().join(&summary_name).display()
    );
    Ok(())
}

