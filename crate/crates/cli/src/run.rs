use cfdim::cf::{continuants, cylinder, digits_of, eval_finite_cf};
use cfdim::deviations::{
    decay_rate_fit, deviation_probability_mc, deviation_series, frequency_average, gamma_mass_empirical, Estimator,
};
use cfdim::dimension::{
    entropy_gauss_markov, entropy_smb_mc, kinney_pitcher_dim, local_dimension, lyapunov_gauss_exact, lyapunov_mc,
    verify_gap_bound, GapBudgets,
};
use cfdim::fexp::{
    check_conditions, digits_f, markov_obstruction_defect, ulam_invariant_density, Cumulative, ExpansionScheme,
    GaussCumulative, Lebesgue, UlamCumulative,
};
use cfdim::gauss::{
    find_markov_witness, ln_mu_g_cylinder, markov_defect, mu_g_cylinder, mu_g_cylinder_with, quasi_independence_ratio,
    Precision,
};
use cfdim::process::{
    build_gauss_markov, ln_process_cylinder_mass, process_cylinder_mass, psi_ratio, sample_path, stationarity_residual,
};
use cfdim::repro::run_all;
use cfdim::Result;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::parse;

/// A result as JSON plus the flat table written in CSV mode.
pub struct Output {
    pub result: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Exit with a failure status even though the run completed.
    pub failed: bool,
}

impl Output {
    /// One row whose columns are the top-level fields of `value`.
    fn record<T: Serialize>(value: &T) -> Self {
        let result = serde_json::to_value(value).expect("serializable result");
        let (columns, row) = match &result {
            Value::Object(map) => (map.keys().cloned().collect(), map.values().cloned().collect()),
            other => (vec!["value".into()], vec![other.clone()]),
        };
        Self { result, columns, rows: vec![row], failed: false }
    }

    fn table(result: Value, columns: &[&str], rows: Vec<Vec<Value>>) -> Self {
        Self { result, columns: columns.iter().map(|c| c.to_string()).collect(), rows, failed: false }
    }
}

fn estimator(e: EstimatorArg) -> Estimator {
    match e {
        EstimatorArg::Plain => Estimator::Plain,
        EstimatorArg::Tilted => Estimator::Tilted,
    }
}

pub fn execute(cmd: &Command, seed: u64, with_timing: bool) -> Result<Output> {
    match cmd {
        Command::Cf(c) => cf(c),
        Command::Measure(c) => measure(c),
        Command::Process(c) => process(c, seed),
        Command::Dim(c) => dim(c, seed),
        Command::Dev(c) => dev(c, seed),
        Command::Fexp(c) => fexp(c),
        Command::Repro(ReproCmd::All) => Ok(repro(seed, with_timing)),
    }
}

fn cf(cmd: &CfCmd) -> Result<Output> {
    match cmd {
        CfCmd::Digits { x, n, bits } => {
            let w = digits_of(&parse::point(x, *bits)?, *n)?;
            Ok(Output::record(&json!({ "digits": w })))
        }
        CfCmd::Cylinder { word } => {
            let w = parse::word(word)?;
            let c = cylinder(&w);
            let len = c.length();
            Ok(Output::record(&json!({
                "word": w,
                "low": c.low.to_string(),
                "high": c.high.to_string(),
                "length": len.to_string(),
                "length_f64": len.to_f64(),
                "determinant": continuants(&w).determinant().to_string(),
            })))
        }
        CfCmd::Eval { word } => {
            let v = eval_finite_cf(&parse::word(word)?)?;
            Ok(Output::record(&json!({ "value": v.to_string(), "value_f64": v.to_f64() })))
        }
    }
}

fn measure(cmd: &MeasureCmd) -> Result<Output> {
    match cmd {
        MeasureCmd::Cylinder { word, bits } => {
            let w = parse::word(word)?;
            let m = match bits {
                Some(b) => mu_g_cylinder_with(&w, Precision::Bits(*b)),
                None => mu_g_cylinder(&w),
            };
            Ok(Output::record(&json!({ "word": w, "mass": m.mass, "ln_mass": ln_mu_g_cylinder(&w) })))
        }
        MeasureCmd::Ratio { u, v } => {
            let r = quasi_independence_ratio(&parse::word(u)?, &parse::word(v)?)?;
            Ok(Output::record(&json!({ "ratio": r })))
        }
        MeasureCmd::Defect { b, a, c } => Ok(Output::record(&markov_defect(&parse::word(b)?, &parse::word(a)?, *c)?)),
        MeasureCmd::Witness { k, max_digit, max_m } => Ok(Output::record(&find_markov_witness(*k, *max_digit, *max_m)?)),
    }
}

fn process(cmd: &ProcessCmd, seed: u64) -> Result<Output> {
    match cmd {
        ProcessCmd::Build { process } => {
            let spec = parse::process(process)?;
            Ok(Output::record(&json!({ "id": spec.id(), "spec": spec })))
        }
        ProcessCmd::Sample { process, n } => {
            let path = sample_path(&parse::process(process)?, *n, seed)?;
            Ok(Output::record(&path))
        }
        ProcessCmd::Mass { process, word } => {
            let spec = parse::process(process)?;
            let w = parse::word(word)?;
            Ok(Output::record(&json!({
                "word": w,
                "mass": process_cylinder_mass(&spec, &w)?,
                "ln_mass": ln_process_cylinder_mass(&spec, &w)?,
            })))
        }
        ProcessCmd::Stationarity { k, b, d, cap } => {
            let check = stationarity_residual(&build_gauss_markov(*k)?, &parse::word(b)?, *d, *cap)?;
            let mut out = Output::record(&check);
            out.columns.push("within_bound".into());
            out.rows[0].push(check.within_bound().into());
            out.result["within_bound"] = check.within_bound().into();
            Ok(out)
        }
        ProcessCmd::Psiratio { process, u, v } => {
            let r = psi_ratio(&parse::process(process)?, &parse::word(u)?, &parse::word(v)?)?;
            Ok(Output::record(&json!({ "ratio": r })))
        }
    }
}

fn dim(cmd: &DimCmd, seed: u64) -> Result<Output> {
    match cmd {
        DimCmd::GaussExact => Ok(Output::record(&json!({ "gamma": lyapunov_gauss_exact() }))),
        DimCmd::Entropy { method: EntropyMethod::Series, k, samples, cap, .. } => {
            Ok(Output::record(&entropy_gauss_markov(*k, *samples, *cap, seed)?))
        }
        DimCmd::Entropy { method: EntropyMethod::Smb, process, n, samples, .. } => {
            let h = entropy_smb_mc(&parse::process(process)?, *n, *samples, seed)?;
            Ok(Output::record(&json!({ "h": h.mean, "stderr": h.stderr, "n": n, "samples": samples })))
        }
        DimCmd::Lyapunov { process, n, samples } => Ok(Output::record(&lyapunov_mc(&parse::process(process)?, *n, *samples, seed)?)),
        DimCmd::Kp { law, n, samples } => {
            let d = kinney_pitcher_dim(&parse::law(law)?, *n, *samples, seed)?;
            let mut out = Output::record(&d);
            out.columns.push("stderr_dim".into());
            out.rows[0].push(d.stderr_dim().into());
            out.result["stderr_dim"] = d.stderr_dim().into();
            Ok(out)
        }
        DimCmd::Gap { k, outer_samples, inner_cap, path_len, lyapunov_samples } => {
            let budgets = GapBudgets {
                outer_samples: *outer_samples,
                inner_cap: *inner_cap,
                path_len: *path_len,
                lyapunov_samples: *lyapunov_samples,
            };
            let r = verify_gap_bound(*k, &budgets, seed)?;
            let mut out = Output::record(&r);
            out.columns.push("passed".into());
            out.rows[0].push(r.passed().into());
            out.result["passed"] = r.passed().into();
            out.failed = !r.passed();
            Ok(out)
        }
        DimCmd::Local { process, n, samples } => {
            let d = local_dimension(&parse::process(process)?, *n, *samples, seed)?;
            Ok(Output::record(&json!({ "dim": d.mean, "stderr": d.stderr, "n": n, "samples": samples })))
        }
    }
}

fn dev(cmd: &DevCmd, seed: u64) -> Result<Output> {
    match cmd {
        DevCmd::Frequency { process, a, q, n } => {
            let a = parse::word(a)?;
            let q = parse::subsequence(q)?;
            let spec = parse::process(process)?;
            let len = q.required_len(*n, a.len())?.max(spec.min_len());
            let path = sample_path(&spec, len, seed)?;
            let f = frequency_average(&path.word, &a, &q, *n)?;
            Ok(Output::record(&json!({ "frequency": f, "target": mu_g_cylinder(&a).mass, "n": n, "path_len": len })))
        }
        DevCmd::Probability { a, q, delta, n, samples, estimator: e } => {
            let entry = deviation_probability_mc(
                &parse::word(a)?,
                &parse::subsequence(q)?,
                *delta,
                *n,
                *samples,
                seed,
                estimator(*e),
            )?;
            Ok(Output::record(&entry))
        }
        DevCmd::Decay { a, q, delta, ns, samples, estimator: e } => {
            let s = deviation_series(&parse::word(a)?, &parse::subsequence(q)?, *delta, ns, *samples, seed, estimator(*e))?;
            let fit = decay_rate_fit(&s);
            let rows = s
                .entries
                .iter()
                .map(|e| vec![e.n.into(), e.estimate.into(), e.stderr.into(), e.samples.into(), e.hits.into()])
                .collect();
            let result = json!({
                "series": s,
                "strictly_decreasing": s.strictly_decreasing(),
                "fit": fit.as_ref().ok(),
                "fit_error": fit.as_ref().err().map(|e| e.to_string()),
            });
            Ok(Output::table(result, &["n", "estimate", "stderr", "samples", "hits"], rows))
        }
        DevCmd::GammaMass { process, a, q, delta, n, samples } => {
            let entry = gamma_mass_empirical(
                &parse::process(process)?,
                &parse::word(a)?,
                &parse::subsequence(q)?,
                *delta,
                *n,
                *samples,
                seed,
            )?;
            Ok(Output::record(&entry))
        }
    }
}

fn fexp(cmd: &FexpCmd) -> Result<Output> {
    match cmd {
        FexpCmd::Digits { scheme, x, n, bits } => {
            let s = parse::scheme(scheme)?;
            let d = digits_f(&s, &parse::point(x, *bits)?, *n)?;
            Ok(Output::record(&json!({ "scheme": s.name(), "digits": d })))
        }
        FexpCmd::Ulam { scheme, bins, max_iters, tol } => {
            let d = ulam_invariant_density(&parse::scheme(scheme)?, *bins, *max_iters, *tol)?;
            let rows = d
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| vec![i.into(), (i as f64 / d.bins as f64).into(), (*v).into()])
                .collect();
            Ok(Output::table(serde_json::to_value(&d).expect("serializable"), &["bin", "left", "density"], rows))
        }
        FexpCmd::Conditions { scheme, grid, ell_max } => {
            Ok(Output::record(&check_conditions(&parse::scheme(scheme)?, *grid, *ell_max)?))
        }
        FexpCmd::Obstruction { scheme, cdf, a, probes, bins } => {
            let s = parse::scheme(scheme)?;
            let f: Box<dyn Cumulative> = match cdf {
                CdfArg::Lebesgue => Box::new(Lebesgue),
                CdfArg::Gauss => Box::new(GaussCumulative),
                CdfArg::Ulam => Box::new(UlamCumulative::new(&ulam_invariant_density(&s, *bins, 1000, 1e-12)?)?),
            };
            let defect = markov_obstruction_defect(&s, f.as_ref(), *a, *probes)?;
            Ok(Output::record(&json!({ "scheme": s.name(), "branch": a, "defect": defect })))
        }
    }
}

fn repro(seed: u64, with_timing: bool) -> Output {
    let results = run_all(seed);
    let failed = results.iter().any(|r| !r.passed);
    let mut columns = vec!["id", "name", "status", "detail"];
    if with_timing {
        columns.push("seconds");
    }
    let rows = results
        .iter()
        .map(|r| {
            let mut row = vec![r.id.into(), r.name.clone().into(), if r.passed { "pass" } else { "fail" }.into(), r.detail.clone().into()];
            if with_timing {
                row.push(r.seconds.into());
            }
            row
        })
        .collect();
    let result: Vec<Value> = results
        .iter()
        .map(|r| {
            let mut v = json!({ "id": r.id, "name": r.name, "status": if r.passed { "pass" } else { "fail" }, "detail": r.detail });
            if with_timing {
                v["seconds"] = r.seconds.into();
            }
            v
        })
        .collect();
    let mut out = Output::table(json!({ "checks": result, "passed": !failed }), &columns, rows);
    out.failed = failed;
    out
}
