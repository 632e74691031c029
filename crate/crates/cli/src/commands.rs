use serde::Serialize;
use serde_json::{json, Value};

use gibbs_core::asymptotics::{
    analyticity_probe, check_closure_under_composition, diagnose_subexponential, coefficient_ratio_experiment,
    ClosureReport, ProbeRow, SubexpReport,
};
use gibbs_core::gibbs::{
    cycle_statistics_pgf_check, extract_remainder, has_composite_root, limit_remainder_distribution, ComponentLaw,
    GibbsModel, SnSampler,
};
use gibbs_core::parallel;
use gibbs_core::rational::{self, Rational};
use gibbs_core::species::Species;
use gibbs_core::stats::{
    component_count_experiment, remainder_self_test, size_seed, remainder_tv_experiment, ComponentCountReport,
    RemainderTvReport,
};
use gibbs_core::{Error, TruncatedSeries};

use crate::output::{csv_document, json_document, json_lines, Header, Table};
use crate::{CliResult, Command, Format, RunConfig};

pub fn execute(config: &RunConfig) -> CliResult<Vec<u8>> {
    match &config.command {
        Command::Coeffs => coeffs(config),
        Command::Sample => sample(config),
        Command::Limit => limit(config),
        Command::Asymptotics => asymptotics(config),
        Command::Tv { self_test: false } => tv(config),
        Command::Tv { self_test: true } => self_test(config),
        Command::Pgf { y, w } => pgf(config, *y, *w),
        Command::Diagnose { eps } => diagnose(config, eps),
    }
}

fn model(config: &RunConfig) -> CliResult<GibbsModel> {
    Ok(GibbsModel::new(&config.spec, config.truncation)?)
}

/// JSON document of `result`, or CSV of `table()`.
fn emit<T: Serialize>(config: &RunConfig, result: &T, table: impl FnOnce() -> Table) -> CliResult<Vec<u8>> {
    let header = Header::new(config);
    match config.format {
        Format::Json => json_document(&header, result),
        Format::Csv => csv_document(&header, &table()),
    }
}

fn exact(q: &Rational) -> Value {
    Value::String(q.to_string())
}

fn coeffs(config: &RunConfig) -> CliResult<Vec<u8>> {
    let n = config.truncation;
    let table = if has_composite_root(&config.spec) {
        let m = model(config)?;
        let (g, c, d) = (m.inner_series(1)?, m.composite_series()?, m.derived_series()?);
        let mut t = Table::new(&["n", "inner", "composite", "derived"]);
        for k in 0..=n {
            t.push(vec![json!(k), exact(&g.coeff(k)), exact(&c.coeff(k)), exact(&d.coeff(k))]);
        }
        t
    } else {
        let s = Species::compile(&config.spec)?.ogf(1, n)?;
        let mut t = Table::new(&["n", "coefficient"]);
        for k in 0..=n {
            t.push(vec![json!(k), exact(&s.coeff(k))]);
        }
        t
    };
    emit(config, &table, || table.clone())
}

#[derive(Serialize)]
struct TranscriptLine {
    n: usize,
    canonical: String,
    largest: usize,
    remainder_size: usize,
    components: usize,
    remainder: String,
}

fn sample(config: &RunConfig) -> CliResult<Vec<u8>> {
    let m = model(config)?;
    let mut lines = Vec::new();
    for &n in &config.sizes {
        m.check_lattice(n)?;
        m.check_size(n)?;
        let sampler = SnSampler::new(&m, n, config.method)?;
        lines.extend(parallel::run(config.execution(), size_seed(config.seed, n), config.samples, |_, rng| {
            let s = sampler.sample(rng)?.canonicalize();
            let f = extract_remainder(&m, &s, rng)?;
            Ok(TranscriptLine {
                n,
                canonical: s.to_string(),
                largest: f.largest_size,
                remainder_size: f.remainder_size,
                components: f.component_count,
                remainder: f.remainder.to_string(),
            })
        })?);
    }
    let header = Header::new(config);
    match config.format {
        Format::Json => json_lines(&header, &lines),
        Format::Csv => {
            let mut t = Table::new(&["n", "canonical", "largest", "remainder_size", "components", "remainder"]);
            for l in &lines {
                t.push(vec![
                    json!(l.n),
                    json!(l.canonical),
                    json!(l.largest),
                    json!(l.remainder_size),
                    json!(l.components),
                    json!(l.remainder),
                ]);
            }
            csv_document(&header, &t)
        }
    }
}

fn limit(config: &RunConfig) -> CliResult<Vec<u8>> {
    let m = model(config)?;
    let law = limit_remainder_distribution(&m, config.cap)?;
    let components = ComponentLaw::new(&m, config.cap)?;
    let result = json!({ "remainder": law, "component_count": components });
    emit(config, &result, || {
        let mut t = Table::new(&["object", "size", "probability", "at_lower_rho", "at_upper_rho"]);
        t.note("rho", law.rho);
        t.note("rho_spread", law.rho_spread);
        t.note("normalizer", law.normalizer);
        t.note("normalizer_from_series", law.normalizer_from_series);
        t.note("normalization_error", law.normalization_error);
        for e in &law.entries {
            t.push(vec![json!(e.object.to_string()), json!(e.size), json!(e.probability), json!(e.at_lower_rho), json!(e.at_upper_rho)]);
        }
        t.push(vec![json!("tail"), json!(format!(">{}", law.cap)), json!(law.tail), Value::Null, Value::Null]);
        t.push(vec![json!("total"), Value::Null, json!(law.enumerated_mass + law.tail), Value::Null, Value::Null]);
        t
    })
}

fn asymptotics(config: &RunConfig) -> CliResult<Vec<u8>> {
    let report = coefficient_ratio_experiment(&model(config)?)?;
    emit(config, &report, || {
        let mut t = Table::new(&["n", "ratio", "relative_deviation"]);
        t.note("rho", report.rho.rho);
        t.note("constant", report.constant);
        t.note("constant_from_derived_series", report.constant_from_derived_series);
        if let Some(c) = report.constant_from_composite {
            t.note("constant_from_composite", c);
        }
        t.note("shrinks", report.trend.shrinks());
        for &(n, r) in &report.track {
            t.push(vec![json!(n), json!(r), json!((r / report.constant - 1.0).abs())]);
        }
        t
    })
}

#[derive(Serialize)]
struct TvResult {
    remainder: RemainderTvReport,
    component_count: Vec<ComponentCountReport>,
}

fn tv(config: &RunConfig) -> CliResult<Vec<u8>> {
    let m = model(config)?;
    let exec = config.execution();
    let remainder =
        remainder_tv_experiment(&m, &config.sizes, config.samples, config.cap, config.seed, config.method, exec)?;
    let component_count = config
        .sizes
        .iter()
        .map(|&n| component_count_experiment(&m, n, config.samples, config.seed, config.method, exec))
        .collect::<Result<Vec<_>, Error>>()?;
    let result = TvResult { remainder, component_count };
    emit(config, &result, || {
        let mut t = Table::new(&[
            "n",
            "tv",
            "radius",
            "upper_bound",
            "bias_estimate",
            "mean_remainder_size",
            "beyond_cap",
            "component_tv",
            "component_radius",
        ]);
        t.note("cap", config.cap);
        t.note("samples", config.samples);
        t.note("decreasing", result.remainder.decreasing);
        for (r, c) in result.remainder.rows.iter().zip(&result.component_count) {
            t.push(vec![
                json!(r.n),
                json!(r.tv.distance),
                json!(r.tv.radius),
                json!(r.tv.upper_bound),
                json!(r.tv.bias_estimate),
                json!(r.mean_remainder_size),
                json!(r.beyond_cap),
                json!(c.tv.distance),
                json!(c.tv.radius),
            ]);
        }
        t
    })
}

fn self_test(config: &RunConfig) -> CliResult<Vec<u8>> {
    let m = model(config)?;
    let rows = config
        .sizes
        .iter()
        .map(|&n| {
            m.check_lattice(n)?;
            remainder_self_test(&m, n, config.samples, config.cap, config.seed, config.method, config.execution())
        })
        .collect::<Result<Vec<_>, Error>>()?;
    emit(config, &rows, || {
        let mut t = Table::new(&["n", "tv", "radius", "bias_estimate", "consistent"]);
        for r in &rows {
            t.push(vec![json!(r.n), json!(r.tv.distance), json!(r.tv.radius), json!(r.tv.bias_estimate), json!(r.consistent)]);
        }
        t
    })
}

fn pgf(config: &RunConfig, y: f64, w: f64) -> CliResult<Vec<u8>> {
    let m = model(config)?;
    let report = cycle_statistics_pgf_check(&m, y, w, config.samples, config.seed, config.execution())?;
    emit(config, &report, || {
        let mut t = Table::new(&["y", "w", "samples", "estimate", "standard_error", "exact", "z_score"]);
        t.push(vec![
            json!(report.y),
            json!(report.w),
            json!(report.samples),
            json!(report.estimate),
            json!(report.standard_error),
            json!(report.exact),
            json!(report.z_score()),
        ]);
        t
    })
}

#[derive(Serialize)]
struct Diagnosis {
    subexponential: SubexpReport,
    /// Closure under `exp`: `[z^n] exp(g) / g_n → exp(g(ρ))`.
    closure: ClosureReport,
    /// Only for models with a composite root.
    probe: Option<Vec<ProbeRow>>,
}

/// `Σ_{k ≤ n} z^k / k!`.
fn exp_series(n: usize) -> TruncatedSeries {
    let mut c = Vec::with_capacity(n + 1);
    let mut f = rational::int(1);
    for k in 0..=n {
        if k > 0 {
            f /= rational::int(k as i64);
        }
        c.push(f.clone());
    }
    TruncatedSeries::new(c)
}

fn diagnose(config: &RunConfig, eps: &[f64]) -> CliResult<Vec<u8>> {
    let (g, probe) = if has_composite_root(&config.spec) {
        let m = model(config)?;
        (m.inner_series(1)?, Some(analyticity_probe(&m, eps)?))
    } else {
        (Species::compile(&config.spec)?.ogf(1, config.truncation)?, None)
    };
    let subexponential = diagnose_subexponential(&g)?;
    let closure = check_closure_under_composition(&exp_series(g.truncation()), &g)?;
    let result = Diagnosis { subexponential, closure, probe };
    emit(config, &result, || {
        let s = &result.subexponential;
        let mut t = Table::new(&["n", "ratio", "convolution", "closure_ratio"]);
        t.note("rho", s.rho.rho);
        t.note("span", s.span);
        if let Some(g) = &s.g_at_rho {
            t.note("g_at_rho", g.value);
        }
        t.note("ratio_shrinks", s.ratio.shrinks());
        if let Some(c) = &s.convolution {
            t.note("convolution_shrinks", c.shrinks());
        }
        t.note("closure_target", result.closure.target);
        t.note("verdict_hint", &s.verdict_hint);
        for p in result.probe.iter().flatten() {
            t.note(
                &format!("probe eps={}", p.epsilon),
                format!("value={} residual={} diverges={}", p.value, p.residual, p.divergence_flag),
            );
        }
        let mut rows: std::collections::BTreeMap<usize, [Value; 3]> = Default::default();
        let mut put = |track: &[(usize, f64)], col: usize| {
            for &(n, v) in track {
                rows.entry(n).or_insert([Value::Null, Value::Null, Value::Null])[col] = json!(v);
            }
        };
        put(&s.ratio_track, 0);
        put(&s.convolution_track, 1);
        put(&result.closure.ratio_track, 2);
        for (n, [a, b, c]) in rows {
            t.push(vec![json!(n), a, b, c]);
        }
        t
    })
}
