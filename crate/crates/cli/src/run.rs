use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use apwave_core::apfunc::{
    mean_and_coefficients, n1_seminorm, IrrationalBasis, LiftedQuadrature, SeminormMethod, TrigPolynomial,
    WindowSchedule,
};
use apwave_core::asymptotics::{
    decay_series, exact_affine_wave, nonexpansiveness_check, profile_operator_T, WaveConfig,
};
use apwave_core::flux::{maximal_affine_interval, nondegeneracy_check, PiecewiseFlux};
use apwave_core::lifting::{
    build_torus_problem_in_frame, compare_direct_vs_lifted, ergodic_mean_check, spectrum_module,
    LiftedProblem, Resolutions,
};
use apwave_core::solver::{cfl_dt, l1_distance, step_with_dt, GridState, RunDiagnostics, TorusGrid};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Frame, Inputs, Kind, RunConfig};

const DEFAULT_SLACK: f64 = 1e-12;

/// Result of one experiment: whether its verdicts held, the files written,
/// and a short machine-readable summary for the manifest.
pub struct Outcome {
    pub verdict_ok: bool,
    pub artifacts: Vec<String>,
    pub summary: Value,
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body).with_context(|| format!("writing {name}"))?;
        self.written.push(name.into());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn snapshot(&mut self, state: &GridState, stem: &str, binary: bool) -> Result<()> {
        state.write_snapshot(self.dir, stem, binary)?;
        self.written.push(format!("{stem}.{}", if binary { "bin" } else { "csv" }));
        self.written.push(format!("{stem}.json"));
        Ok(())
    }
}

pub fn run_experiment(kind: Kind, cfg: &RunConfig, inputs: &Inputs, out: &Path) -> Result<Outcome> {
    let mut w = Writer {
        dir: out,
        written: Vec::new(),
    };
    let (verdict_ok, summary) = match kind {
        Kind::Simulate => simulate(cfg, inputs, &mut w)?,
        Kind::Decay => decay(cfg, inputs, &mut w)?,
        Kind::Travelwave => travelwave(cfg, inputs, &mut w)?,
        Kind::Contract => contract(cfg, inputs, &mut w)?,
        Kind::LiftCompare => lift_compare(cfg, inputs, &mut w)?,
        Kind::NondegCheck => nondeg(cfg, inputs, &mut w)?,
    };
    Ok(Outcome {
        verdict_ok,
        artifacts: w.written,
        summary,
    })
}

fn data(inputs: &Inputs) -> (&TrigPolynomial, &IrrationalBasis, &PiecewiseFlux) {
    let (u0, basis) = inputs.initial.as_ref().expect("validated");
    (u0, basis, inputs.flux.as_ref().expect("validated"))
}

fn frame_speed(cfg: &RunConfig, u0: &TrigPolynomial, f: &PiecewiseFlux) -> Result<f64> {
    Ok(match cfg.frame {
        Frame::Lab => 0.0,
        Frame::Affine => {
            let (level, _) = mean_and_coefficients(u0);
            maximal_affine_interval(f.component(0), level)?.slope()
        }
    })
}

fn lifted(cfg: &RunConfig, u0: &TrigPolynomial, basis: &IrrationalBasis, f: &PiecewiseFlux) -> Result<LiftedProblem> {
    let module = spectrum_module(u0);
    let grid = TorusGrid::uniform(module.rank(), cfg.cells.expect("validated"))?;
    Ok(build_torus_problem_in_frame(u0, basis, f, grid, &module, frame_speed(cfg, u0, f)?)?)
}

#[derive(Serialize)]
struct DiagnosticsVerdict {
    pass: bool,
    mean_drift: f64,
    range_excess: f64,
    tolerance_mean_drift: f64,
    tolerance_range_excess: f64,
}

fn check_diagnostics(cfg: &RunConfig, diags: &[RunDiagnostics]) -> DiagnosticsVerdict {
    let drift = diags.iter().fold(0.0f64, |m, d| m.max(d.max_mean_drift));
    let excess = diags.iter().fold(0.0f64, |m, d| m.max(d.max_range_excess / d.scale()));
    let tol_drift = cfg.tolerances.mean_drift.unwrap_or(1e-12);
    let tol_excess = cfg.tolerances.range_excess.unwrap_or(1e-13);
    DiagnosticsVerdict {
        pass: drift <= tol_drift && excess <= tol_excess,
        mean_drift: drift,
        range_excess: excess,
        tolerance_mean_drift: tol_drift,
        tolerance_range_excess: tol_excess,
    }
}

/// Snapshots of the lifted state at each time. With a second datum, both
/// runs share one time step and their distance is recorded at every step.
fn simulate(cfg: &RunConfig, inputs: &Inputs, w: &mut Writer) -> Result<(bool, Value)> {
    let (u0, basis, f) = data(inputs);
    let times = cfg.times.clone().expect("validated");
    let problem = lifted(cfg, u0, basis, f)?;
    let binary = cfg.binary_snapshots;
    let mut ok = true;
    let mut summary = json!({ "torus_shape": problem.v0.grid().shape(), "frame_speed": problem.frame_speed });

    let second = match &inputs.initial_b {
        Some(b) => {
            let module = problem.map.module();
            let lifted_b = apwave_core::apfunc::LiftedPolynomial::new(b, module)
                .context("initial_b is not spanned by the spectrum of initial")?;
            let values = lifted_b.sample_midpoints(problem.v0.grid().shape());
            Some(GridState::new(problem.v0.grid().clone(), values, 0.0)?)
        }
        None => None,
    };
    let dt = match &second {
        Some(b) => Some(cfl_dt(&problem.v0, &problem.flux, &inputs.scheme)?.min(cfl_dt(b, &problem.flux, &inputs.scheme)?)),
        None => None,
    };

    let mut a = problem.v0.clone();
    let mut b = second.clone();
    let mut rows = Vec::new();
    let mut distances = String::from("step,t,distance\n");
    let mut worst_rise = f64::NEG_INFINITY;
    let mut errors = Vec::new();
    let mut step = 0u64;
    if let Some(b0) = &b {
        distances.push_str(&format!("0,0,{}\n", l1_distance(&a, b0)?));
    }
    for (k, &t) in times.iter().enumerate() {
        match (&mut b, dt) {
            (Some(bs), Some(dt)) => {
                let mut d = l1_distance(&a, bs)?;
                while a.time() < t {
                    let h = dt.min(t - a.time());
                    a = step_with_dt(&a, &problem.flux, &inputs.scheme, h)?;
                    *bs = step_with_dt(bs, &problem.flux, &inputs.scheme, h)?;
                    step += 1;
                    let next = l1_distance(&a, bs)?;
                    worst_rise = worst_rise.max(next - d);
                    d = next;
                    distances.push_str(&format!("{step},{},{next}\n", a.time()));
                    if t - a.time() <= 1e-14 * t.max(1.0) {
                        a = a.restarted(t);
                        *bs = bs.restarted(t);
                    }
                }
            }
            _ => a = problem.advance(&a, &inputs.scheme, t)?,
        }
        w.snapshot(&a, &format!("snapshot_{k:03}"), binary)?;
        let mut row = json!({ "t": t, "mean": apwave_core::solver::mean_mass(&a), "range": a.range() });
        if let Some(ex) = &cfg.exact_wave {
            let exact = GridState::from_fn(a.grid().clone(), |y| {
                let x = y[0] / problem.map.rows()[0][0];
                exact_affine_wave(ex.level, ex.delta, ex.xi, ex.tau, t, x)
            })?;
            let err = l1_distance(&a, &exact)?;
            errors.push(err);
            row["exact_wave_error"] = json!(err);
        }
        rows.push(row);
    }
    let mut diags = vec![*a.diagnostics()];
    if let Some(bs) = &b {
        diags.push(*bs.diagnostics());
        w.text("distance.csv", &distances)?;
        let slack = cfg.tolerances.monotone_slack.unwrap_or(DEFAULT_SLACK);
        let pass = worst_rise <= slack;
        ok &= pass;
        summary["contraction"] = json!({ "pass": pass, "largest_increase": worst_rise, "slack": slack, "dt": dt });
    }
    if let Some(tol) = cfg.tolerances.exact_wave {
        let worst = errors.iter().fold(0.0f64, |m, e| m.max(*e));
        let pass = worst <= tol;
        ok &= pass;
        summary["exact_wave"] = json!({ "pass": pass, "largest_error": worst, "tolerance": tol });
    }
    let dv = check_diagnostics(cfg, &diags);
    ok &= dv.pass;
    summary["times"] = json!(rows);
    summary["conservation"] = serde_json::to_value(&dv)?;
    summary["run_diagnostics"] = json!(diags);
    w.json("summary.json", &summary)?;
    Ok((ok, summary))
}

fn decay(cfg: &RunConfig, inputs: &Inputs, w: &mut Writer) -> Result<(bool, Value)> {
    let (u0, basis, f) = data(inputs);
    let problem = lifted(cfg, u0, basis, f)?;
    let times = cfg.times.clone().expect("validated");
    let initial = apwave_core::solver::l1_deviation(&problem.v0, problem.mean);
    let (series, last) = decay_series(&problem, &inputs.scheme, &times)?;
    w.text("decay.csv", &series.to_csv())?;
    let slack = cfg.tolerances.monotone_slack.unwrap_or(DEFAULT_SLACK);
    let rise = series.max_increase().max(series.values.first().map_or(0.0, |v| v - initial));
    let mut ok = rise <= slack;
    let fin = series.last().unwrap_or(initial);
    let mut verdicts = json!({ "monotone": { "pass": rise <= slack, "largest_increase": rise, "slack": slack } });
    if let Some(th) = cfg.tolerances.decay_final {
        verdicts["final"] = json!({ "pass": fin <= th, "value": fin, "threshold": th });
        ok &= fin <= th;
    }
    if let Some(tol) = cfg.tolerances.decay_change {
        let change = (fin - initial).abs();
        verdicts["unchanged"] = json!({ "pass": change <= tol, "change": change, "tolerance": tol });
        ok &= change <= tol;
    }
    let dv = check_diagnostics(cfg, &[*last.diagnostics()]);
    ok &= dv.pass;
    let summary = json!({
        "level": series.level,
        "initial_deviation": initial,
        "final_deviation": fin,
        "frame_speed": problem.frame_speed,
        "torus_shape": problem.v0.grid().shape(),
        "verdicts": verdicts,
        "conservation": dv,
        "run_diagnostics": last.diagnostics(),
    });
    w.json("decay.json", &summary)?;
    Ok((ok, summary))
}

fn wave_config(cfg: &RunConfig, inputs: &Inputs) -> WaveConfig {
    let mut wc = WaveConfig::new(cfg.cells.expect("validated"));
    wc.scheme = inputs.scheme;
    if let Some(t) = &cfg.times {
        wc.schedule = t.clone();
    }
    let t = &cfg.tolerances;
    let o = &mut wc.options;
    o.quantile = t.quantile.unwrap_or(o.quantile);
    o.tolerances.affine = t.affine.unwrap_or(o.tolerances.affine);
    o.tolerances.mean = t.mean.unwrap_or(o.tolerances.mean);
    o.tolerances.leakage = t.leakage.unwrap_or(o.tolerances.leakage);
    o.tolerances.speed_quanta = t.speed_quanta.unwrap_or(o.tolerances.speed_quanta);
    wc.module = inputs.module.as_ref().map(|(m, _)| m.clone());
    wc
}

fn travelwave(cfg: &RunConfig, inputs: &Inputs, w: &mut Writer) -> Result<(bool, Value)> {
    let (u0, basis, f) = data(inputs);
    let report = profile_operator_T(u0, basis, f, &wave_config(cfg, inputs))?;
    w.json("wave.json", &report)?;
    let mut csv = String::from("x,value\n");
    let n = report.profile_line.len();
    for (i, v) in report.profile_line.iter().enumerate() {
        csv.push_str(&format!("{},{v}\n", report.profile_line_span * i as f64 / n as f64));
    }
    w.text("profile.csv", &csv)?;
    let dv = check_diagnostics(cfg, &[report.run_diagnostics]);
    let ok = report.verdicts.all_pass() && !report.nonconvergence && dv.pass;
    Ok((
        ok,
        json!({
            "speed": report.speed,
            "speed_source": report.speed_source,
            "segment": report.segment,
            "nonconvergence": report.nonconvergence,
            "verdicts": report.verdicts,
            "conservation": dv,
        }),
    ))
}

fn contract(cfg: &RunConfig, inputs: &Inputs, w: &mut Writer) -> Result<(bool, Value)> {
    let (u0, basis, f) = data(inputs);
    let u1 = inputs.initial_b.as_ref().expect("validated");
    let allowance = cfg.tolerances.allowance.unwrap_or(0.02);
    let report = nonexpansiveness_check(u0, u1, basis, f, &wave_config(cfg, inputs), allowance)?;
    w.json("contract.json", &report)?;
    let dv = check_diagnostics(cfg, &report.run_diagnostics);
    Ok((report.pass && dv.pass, json!({ "report": report, "conservation": dv })))
}

fn lift_compare(cfg: &RunConfig, inputs: &Inputs, w: &mut Writer) -> Result<(bool, Value)> {
    let (u0, basis, f) = data(inputs);
    let l = &cfg.lift;
    let mut ok = true;
    let mut out = json!({});
    if let Some(t) = l.t {
        let tol = cfg.tolerances.lift.unwrap_or(0.05);
        let reports = l
            .refinements
            .as_ref()
            .expect("validated")
            .iter()
            .map(|&n| {
                let res = Resolutions {
                    torus_cells: n,
                    direct_cells_per_unit: n,
                    max_denominator: l.max_denominator.unwrap_or(29),
                };
                compare_direct_vs_lifted(u0, basis, f, &inputs.scheme, t, &res)
            })
            .collect::<apwave_core::Result<Vec<_>>>()?;
        let first = reports[0].l1_discrepancy;
        let decreasing = reports.windows(2).all(|r| r[1].l1_discrepancy < r[0].l1_discrepancy);
        let pass = first <= tol && decreasing;
        let diags: Vec<RunDiagnostics> = reports.iter().flat_map(|r| r.run_diagnostics).collect();
        let dv = check_diagnostics(cfg, &diags);
        ok &= pass && dv.pass;
        out["direct_vs_lifted"] = json!({
            "pass": pass,
            "tolerance": tol,
            "decreasing": decreasing,
            "reports": reports,
            "conservation": dv,
        });
    }
    if let Some(windows) = &l.ergodic_windows {
        let module = spectrum_module(u0);
        let n = l.ergodic_cells.unwrap_or(256);
        let problem = build_torus_problem_in_frame(u0, basis, f, TorusGrid::uniform(module.rank(), n)?, &module, 0.0)?;
        let gaps = windows
            .iter()
            .map(|&r| ergodic_mean_check(&problem.v0, &problem.map, r))
            .collect::<apwave_core::Result<Vec<_>>>()?;
        let tol = cfg.tolerances.ergodic.unwrap_or(2e-2);
        let pass = gaps[0].gap <= tol && gaps.windows(2).all(|g| g[1].gap < g[0].gap);
        ok &= pass;
        out["ergodic"] = json!({ "pass": pass, "tolerance": tol, "windows": windows, "gaps": gaps });
    }
    if l.seminorm {
        let module = spectrum_module(u0);
        let lifted = n1_seminorm(
            u0,
            basis,
            &SeminormMethod::Lifted {
                module: &module,
                quadrature: LiftedQuadrature::for_rank(module.rank(), 1e-8),
            },
        )?;
        let windowed = n1_seminorm(
            u0,
            basis,
            &SeminormMethod::Windowed(WindowSchedule {
                windows: vec![250.0, 500.0, 1000.0],
                samples_per_unit: None,
            }),
        )?;
        let tol = cfg.tolerances.seminorm.unwrap_or(1e-2);
        let gap = (lifted.value - windowed.value).abs();
        ok &= gap <= tol;
        out["seminorm"] = json!({ "pass": gap <= tol, "lifted": lifted, "windowed": windowed, "gap": gap, "tolerance": tol });
    }
    w.json("lift.json", &out)?;
    Ok((ok, out))
}

fn nondeg(cfg: &RunConfig, inputs: &Inputs, w: &mut Writer) -> Result<(bool, Value)> {
    let f = inputs.flux.as_ref().expect("validated");
    let (module, basis) = match (&inputs.module, &inputs.initial) {
        (Some((m, b)), _) => (m.clone(), b.clone()),
        (None, Some((u0, b))) => (spectrum_module(u0), b.clone()),
        (None, None) => return Err(anyhow!("nondeg-check needs a module or initial data")),
    };
    let level = match (cfg.level, &inputs.initial) {
        (Some(l), _) => l,
        (None, Some((u0, _))) => mean_and_coefficients(u0).0,
        (None, None) => 0.0,
    };
    let verdict = nondegeneracy_check(f, &module, level)?;
    let report = verdict.report(&basis);
    w.json("nondeg.json", &report)?;
    Ok((verdict.pass(), serde_json::to_value(&report)?))
}
