//! The four workflows: simulate, bound, certify, phi-check.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use kschem_core::bound::{evaluate_bound, BoundError};
use kschem_core::model::{boundedness_certificate, PhiCertificate};
use kschem_core::solver::run;
use kschem_core::{
    DiagnosticsRecord, Grid, GridSpec, ModelParams, ScalarField, SimState, Sink, Termination,
};

use crate::config::{RunConfig, SnapshotFormat};
use crate::csv::{csv_row, fmt_real, CSV_HEADER};
use crate::error::CliError;
use crate::vtk::{write_raw, write_vtk};

/// Streams diagnostics rows to `diagnostics.csv` and per-stride field
/// snapshots into the output directory.
struct ArtifactSink<'a> {
    grid: &'a Grid,
    csv: BufWriter<fs::File>,
    dir: PathBuf,
    stride: u64,
    format: SnapshotFormat,
}

impl ArtifactSink<'_> {
    fn snapshot(&self, state: &SimState) -> Result<(), CliError> {
        let fields: [(&str, &ScalarField); 3] =
            [("u", &state.u), ("v", &state.v), ("w", &state.w)];
        for (name, field) in fields {
            let stem = format!("{name}_{:06}", state.step);
            if matches!(self.format, SnapshotFormat::Vtk | SnapshotFormat::Both) {
                write_vtk(
                    &self.dir.join(format!("{stem}.vtk")),
                    self.grid,
                    field,
                    name,
                    state.t,
                )?;
            }
            if matches!(self.format, SnapshotFormat::Raw | SnapshotFormat::Both) {
                write_raw(
                    &self.dir.join(format!("{stem}.raw")),
                    self.grid,
                    field,
                    name,
                    state.step,
                    state.t,
                )?;
            }
        }
        Ok(())
    }
}

impl Sink for ArtifactSink<'_> {
    fn record(&mut self, rec: &DiagnosticsRecord, state: &SimState) -> Result<(), String> {
        writeln!(self.csv, "{}", csv_row(rec)).map_err(|e| e.to_string())?;
        if self.format != SnapshotFormat::None && rec.step % self.stride == 0 {
            self.snapshot(state).map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

fn summary_json(termination: &Termination, records: &[DiagnosticsRecord]) -> String {
    let (kind, time, step, message) = match termination {
        Termination::Completed => ("completed", None, None, None),
        Termination::BlowupDetected { time, step } => {
            ("blowup_detected", Some(*time), Some(*step), None)
        }
        Termination::SolverFailure { step, message } => {
            ("solver_failure", None, Some(*step), Some(message.clone()))
        }
    };
    let fold = |pick: fn(&DiagnosticsRecord) -> f64| {
        records.iter().map(pick).fold(f64::NEG_INFINITY, f64::max)
    };
    let opt_real = |v: Option<f64>| v.map_or("null".to_string(), fmt_real);
    let opt_int = |v: Option<u64>| v.map_or("null".to_string(), |s| s.to_string());
    let opt_str = |v: Option<String>| {
        v.map_or("null".to_string(), |m| {
            serde_json::to_string(&m).expect("string serializes")
        })
    };
    let last = records.last();
    format!(
        concat!(
            "{{\n",
            "  \"termination\": \"{}\",\n",
            "  \"blowup_time\": {},\n",
            "  \"blowup_step\": {},\n",
            "  \"failure_message\": {},\n",
            "  \"steps\": {},\n",
            "  \"final_time\": {},\n",
            "  \"peak_linf_u\": {},\n",
            "  \"peak_linf_v\": {},\n",
            "  \"peak_linf_w\": {},\n",
            "  \"initial_mass_u\": {},\n",
            "  \"final_mass_u\": {}\n",
            "}}\n"
        ),
        kind,
        opt_real(time),
        opt_int(step),
        opt_str(message),
        last.map_or(0, |r| r.step),
        opt_real(last.map(|r| r.t)),
        fmt_real(fold(|r| r.linf_u)),
        fmt_real(fold(|r| r.linf_v)),
        fmt_real(fold(|r| r.linf_w)),
        opt_real(records.first().map(|r| r.mass_u)),
        opt_real(last.map(|r| r.mass_u)),
    )
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let params = cfg.model_params();
    let data = cfg.initial_data(&grid)?;
    let solver_cfg = cfg.solver_config();

    let dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&dir)?;
    let csv_file = fs::File::create(dir.join("diagnostics.csv"))?;
    let mut csv = BufWriter::new(csv_file);
    writeln!(csv, "{CSV_HEADER}")?;
    let mut sink = ArtifactSink {
        grid: &grid,
        csv,
        dir: dir.clone(),
        stride: cfg.snapshot_stride,
        format: cfg.snapshot_format,
    };

    let result = run(&grid, &params, &data, &solver_cfg, &mut sink).map_err(|e| match e {
        kschem_core::SolverError::Sink { message } => CliError::Io(message),
        kschem_core::SolverError::Config { message } => CliError::Config(message),
        other => CliError::Solver(other.to_string()),
    })?;
    sink.csv.flush()?;

    fs::write(
        dir.join("summary.json"),
        summary_json(&result.termination, &result.records),
    )?;

    match &result.termination {
        Termination::Completed => {
            println!(
                "completed: {} steps to t = {}",
                result.state.step,
                fmt_real(result.state.t)
            );
            Ok(())
        }
        Termination::BlowupDetected { time, step } => {
            println!("blow-up detected at step {step}, t = {}", fmt_real(*time));
            Ok(())
        }
        Termination::SolverFailure { step, message } => Err(CliError::Solver(format!(
            "step {step}: {message} (partial artifacts in {})",
            dir.display()
        ))),
    }
}

fn map_bound_err(e: BoundError) -> CliError {
    match e {
        BoundError::OriginNotInterior { .. } | BoundError::NonPositiveRho { .. } => {
            CliError::Geometry(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

/// Node count for the 2x-refined sensitivity grid (same box, halved h).
fn refine_spec(spec: &GridSpec) -> GridSpec {
    GridSpec {
        lo: spec.lo,
        hi: spec.hi,
        n: [
            2 * spec.n[0] - 1,
            2 * spec.n[1] - 1,
            2 * spec.n[2] - 1,
        ],
    }
}

fn bound_report_json(
    b: &kschem_core::BoundConstants,
    params: &ModelParams,
    refined: Option<(f64, f64)>,
) -> String {
    let refined_block = match refined {
        None => "null".to_string(),
        Some((psi0, t_lower)) => format!(
            "{{ \"psi0\": {}, \"t_lower\": {} }}",
            fmt_real(psi0),
            fmt_real(t_lower)
        ),
    };
    format!(
        concat!(
            "{{\n",
            "  \"rho\": {},\n",
            "  \"d\": {},\n",
            "  \"A1\": {},\n",
            "  \"A2\": {},\n",
            "  \"A3\": {},\n",
            "  \"scriptA\": {},\n",
            "  \"scriptB\": {},\n",
            "  \"scriptC\": {},\n",
            "  \"psi0\": {},\n",
            "  \"t_lower\": {},\n",
            "  \"tau\": {},\n",
            "  \"refined\": {},\n",
            "  \"parameters\": {{\n",
            "    \"chi\": {},\n",
            "    \"alpha\": {},\n",
            "    \"beta\": {},\n",
            "    \"gamma\": {},\n",
            "    \"delta\": {},\n",
            "    \"mu\": {}\n",
            "  }}\n",
            "}}\n"
        ),
        fmt_real(b.rho),
        fmt_real(b.dmax),
        fmt_real(b.a1),
        fmt_real(b.a2),
        fmt_real(b.a3),
        fmt_real(b.script_a),
        fmt_real(b.script_b),
        fmt_real(b.script_c),
        fmt_real(b.psi0),
        fmt_real(b.t_lower),
        b.tau,
        refined_block,
        fmt_real(params.chi),
        fmt_real(params.alpha),
        fmt_real(params.beta),
        fmt_real(params.gamma),
        fmt_real(params.delta),
        fmt_real(params.mu),
    )
}

pub fn cmd_bound(cfg: &RunConfig, refine: bool) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let params = cfg.model_params();
    let data = cfg.initial_data(&grid)?;
    let b = evaluate_bound(&grid, &params, &data).map_err(map_bound_err)?;

    let refined = if refine {
        let rgrid = Grid::new(refine_spec(grid.spec()))
            .map_err(|e| CliError::Config(format!("refined grid: {e}")))?;
        let rdata = cfg.initial_data(&rgrid)?;
        let rb = evaluate_bound(&rgrid, &params, &rdata).map_err(map_bound_err)?;
        Some((rb.psi0, rb.t_lower))
    } else {
        None
    };

    let report = bound_report_json(&b, &params, refined);
    let dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("bound.json"), &report)?;
    print!("{report}");
    Ok(())
}

/// Extremes of the weight-function properties over an even sample of
/// [0, K]: used by both `certify` and `phi-check`.
#[derive(Debug, Clone, Copy)]
pub struct PhiSweep {
    pub samples: usize,
    pub max_identity_residual: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub min_phi_d1: f64,
    pub min_convexity: f64,
}

pub fn phi_sweep(cert: &PhiCertificate, samples: usize) -> Result<PhiSweep, CliError> {
    let mut sweep = PhiSweep {
        samples,
        max_identity_residual: 0.0,
        min_phi: f64::INFINITY,
        max_phi: f64::NEG_INFINITY,
        min_phi_d1: f64::INFINITY,
        min_convexity: f64::INFINITY,
    };
    for i in 0..samples {
        // pin the last sample to K exactly (the product can overshoot by an ulp)
        let x = if i + 1 == samples {
            cert.range
        } else {
            cert.range * i as f64 / (samples - 1) as f64
        };
        let step = |e: kschem_core::ModelError| CliError::Config(e.to_string());
        let phi = cert.phi(x).map_err(step)?;
        sweep.min_phi = sweep.min_phi.min(phi);
        sweep.max_phi = sweep.max_phi.max(phi);
        sweep.min_phi_d1 = sweep.min_phi_d1.min(cert.phi_d1(x).map_err(step)?);
        sweep.min_convexity = sweep
            .min_convexity
            .min(cert.convexity_combination(x).map_err(step)?);
        sweep.max_identity_residual = sweep
            .max_identity_residual
            .max(cert.identity_residual(x).map_err(step)?.abs());
    }
    Ok(sweep)
}

fn print_sweep(sweep: &PhiSweep) {
    println!(
        "phi sweep ({} samples): phi in [{}, {}]",
        sweep.samples,
        fmt_real(sweep.min_phi),
        fmt_real(sweep.max_phi)
    );
    println!("  min phi'            = {}", fmt_real(sweep.min_phi_d1));
    println!("  min (1/p)phi'' - phi' = {}", fmt_real(sweep.min_convexity));
    println!(
        "  max identity residual = {}",
        fmt_real(sweep.max_identity_residual)
    );
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let params = cfg.model_params();
    let data = cfg.initial_data(&grid)?;
    let report = boundedness_certificate(&grid, &params, &data, 3);

    println!(
        "certificate: {}",
        if report.pass { "PASS" } else { "FAIL" }
    );
    println!("K         = {}", fmt_real(report.k_value));
    println!("threshold = {}  (pi*sqrt(2/3))", fmt_real(report.threshold));
    println!("margin    = {}", fmt_real(report.margin));
    println!("tau       = {}", report.tau);
    if let Some(eps) = report.eps {
        println!("eps       = {}", fmt_real(eps));
    }
    if let Some(cert) = &report.phi_cert {
        let sweep = phi_sweep(cert, 1000)?;
        print_sweep(&sweep);
    }
    Ok(())
}

pub fn cmd_phi_check(p: f64, eps: f64, k: f64) -> Result<(), CliError> {
    let cert =
        PhiCertificate::new(p, eps, k).map_err(|e| CliError::Config(e.to_string()))?;
    let bound = kschem_core::model::condition_bound(p, eps);
    println!("admissible K bound = {}", fmt_real(bound));
    println!(
        "K = {} -> {}",
        fmt_real(k),
        if cert.satisfied {
            "well defined"
        } else {
            "NOT admissible"
        }
    );
    if cert.satisfied {
        let sweep = phi_sweep(&cert, 1000)?;
        print_sweep(&sweep);
    }
    Ok(())
}
