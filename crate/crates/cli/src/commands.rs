use serde::Serialize;
use serde_json::json;

use pairx_core::error::check_probability;
use pairx_core::evaluator::{
    faithfulness_correlation, insertion_deletion, pointing_game_recognition_with, CurveSet, PgrOptions,
    PointingGameSpec,
};
use pairx_core::exact::{exact_fixlip, exact_p_faithfulness};
use pairx_core::game::{random_tabulated, random_two_additive, tabulate};
use pairx_core::regressor::{fit, select_clique, Boundary};
use pairx_core::rng::derive_seed;
use pairx_core::sampler::{sample, SamplePlan, SamplingMode};
use pairx_core::{BasisSpec, Error, Explanation, Kernel, PlayerSpace, SampleBatch};

use crate::config::{
    BasisChoice, BoundaryChoice, EvaluateArgs, ExactArgs, ExplainArgs, KernelChoice, ModeChoice, SynthArgs, SynthKind,
};
use crate::error::{CliError, CliResult};
use crate::oracle::{self, read_json, SyntheticFile, SyntheticGame, SYNTHETIC_SCHEMA_VERSION};
use crate::run::{absolute, Inputs, Manifest, RunConfig, RunOutput};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Sub-seed labels; every random draw of a run descends from its `--seed`.
pub const SAMPLER_LABEL: &str = "sampler";
pub const CORRELATION_LABEL: &str = "correlation";

pub fn run(config: RunConfig) -> CliResult<Manifest> {
    match config {
        RunConfig::Explain(a) => explain(a),
        RunConfig::Evaluate(a) => evaluate(a),
        RunConfig::Exact(a) => exact(a),
        RunConfig::Synth(a) => synth(a),
    }
}

/// Makes every path in the configuration absolute so the manifest alone
/// suffices to rerun it.
pub fn resolve_paths(config: &mut RunConfig) -> CliResult<()> {
    let oracle = match config {
        RunConfig::Explain(a) => Some(&mut a.oracle),
        RunConfig::Evaluate(a) => {
            a.explanation = absolute(&a.explanation)?;
            if let Some(p) = &a.pointing_spec {
                a.pointing_spec = Some(absolute(p)?);
            }
            Some(&mut a.oracle)
        }
        RunConfig::Exact(a) => Some(&mut a.oracle),
        RunConfig::Synth(_) => None,
    };
    if let Some(o) = oracle {
        if let Some(g) = &o.game {
            o.game = Some(absolute(g)?);
        }
    }
    let out = absolute(config.out())?;
    config.set_out(out);
    Ok(())
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    text.into_bytes()
}

fn kernel_for(choice: KernelChoice, boundary: BoundaryChoice, p: f64) -> CliResult<Kernel> {
    Ok(match choice {
        KernelChoice::Wbanzhaf => Kernel::weighted_banzhaf(p)?,
        KernelChoice::Shapley => Kernel::Shapley {
            boundary: match boundary {
                BoundaryChoice::Constrained => Boundary::Constrained,
                BoundaryChoice::LargeWeight => Boundary::LargeWeight,
            },
        },
    })
}

fn basis_size(choice: BasisChoice, space: &PlayerSpace) -> usize {
    let n = space.size();
    match choice {
        BasisChoice::Full => space.full_basis_size(),
        BasisChoice::CrossModal => 1 + n + space.n_image * space.n_text,
        BasisChoice::Clique(k) => 1 + n + k * k.saturating_sub(1) / 2,
    }
}

pub fn explain(args: ExplainArgs) -> CliResult<Manifest> {
    check_probability(args.p)?;
    let mut out = RunOutput::create(&args.out)?;
    let mut inputs = Inputs::default();
    let game = oracle::open(&args.oracle, &mut inputs)?;
    let space = game.space();
    let kernel = kernel_for(args.kernel, args.boundary, args.p)?;

    let sampler_seed = derive_seed(args.seed, SAMPLER_LABEL);
    let plan = match args.mode {
        ModeChoice::Naive => SamplePlan::naive(space, args.p, args.budget, sampler_seed)?,
        ModeChoice::CrossModal => SamplePlan::cross_modal_budget(space, args.p, args.budget, sampler_seed)?,
    };
    let needed = basis_size(args.basis, &space);
    if plan.budget() < needed {
        return Err(CliError::Usage(format!(
            "budget yields {} masks, below the {needed} coefficients of basis {}",
            plan.budget(),
            args.basis
        )));
    }

    let mut batch = sample(&plan)?;
    let mut values = batch.evaluate(game.as_ref())?;
    if args.kernel == KernelChoice::Shapley {
        // The Shapley kernel pins the empty and full set; make sure both are present.
        let boundary: Vec<_> = [space.empty_mask(), space.full_mask()]
            .into_iter()
            .filter(|m| !batch.masks.contains(m))
            .collect();
        if !boundary.is_empty() {
            values.extend(game.evaluate(&boundary)?);
            let mut masks = batch.masks;
            masks.extend(boundary);
            batch = SampleBatch::from_masks(space, masks)?;
        }
    }

    let e = match args.basis {
        BasisChoice::Full => fit(&batch, &values, &BasisSpec::full(space), kernel)?,
        BasisChoice::CrossModal => fit(&batch, &values, &BasisSpec::cross_modal(space), kernel)?,
        BasisChoice::Clique(k) => {
            let first = fit(&batch, &values, &BasisSpec::first_order(space), kernel)?;
            let basis = select_clique(first.singles(), space, k)?;
            fit(&batch, &values, &basis, kernel)?
        }
    };

    let mut text = e.to_json();
    text.push('\n');
    out.write("explanation.json", text.as_bytes())?;
    let mut audit = Vec::new();
    batch.write_jsonl(&mut audit)?;
    out.write("samples.jsonl", &audit)?;
    let pools = match plan.mode {
        SamplingMode::Naive { .. } => serde_json::Value::Null,
        SamplingMode::CrossModal { image, text } => json!({"image": image, "text": text}),
    };
    let diagnostics = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "space": space,
        "mode": args.mode,
        "p": args.p,
        "sampler_seed": sampler_seed,
        "requested_budget": args.budget,
        "cross_modal_pools": pools,
        "rows": batch.len(),
        "basis": e.basis().label(),
        "basis_size": e.basis().size(),
        "kernel": e.kernel().label(),
        "fit": e.diagnostics(),
    });
    out.write("diagnostics.json", &json_bytes(&diagnostics))?;
    out.finish(RunConfig::Explain(args), inputs)
}

/// A metric value, or why there is none. Undefined metrics do not abort the
/// remaining ones.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Metric {
    Ok { value: f64 },
    Undefined { reason: String },
    NotComputed { reason: String },
}

fn metric(result: Result<f64, Error>) -> CliResult<Metric> {
    match result {
        Ok(value) => Ok(Metric::Ok { value }),
        Err(
            e @ (Error::UndefinedCorrelation(_) | Error::UndefinedPgr | Error::NormalizationDegenerate(_)),
        ) => Ok(Metric::Undefined { reason: e.to_string() }),
        Err(e) => Err(e.into()),
    }
}

/// Area between the normalized insertion and deletion curves over the
/// fraction grid (trapezoid rule).
fn normalized_area(curves: &CurveSet) -> Result<f64, Error> {
    let (ins, del) = curves.normalized()?;
    let gaps: Vec<f64> = ins.iter().zip(&del).map(|(a, b)| a - b).collect();
    let h = 1.0 / (gaps.len() - 1) as f64;
    Ok(gaps.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum())
}

pub fn evaluate(args: EvaluateArgs) -> CliResult<Manifest> {
    let ps = args.eval_p.clone();
    for &p in &ps {
        check_probability(p)?;
    }
    if args.eval_m < 2 {
        return Err(CliError::Usage(format!("--eval-m must be at least 2, got {}", args.eval_m)));
    }
    let mut out = RunOutput::create(&args.out)?;
    let mut inputs = Inputs::default();
    inputs.record(&args.explanation)?;
    let text = std::fs::read_to_string(&args.explanation).map_err(|source| CliError::Read {
        path: args.explanation.clone(),
        source,
    })?;
    let e = Explanation::from_json(&text)?;
    let spec = match &args.pointing_spec {
        Some(path) => {
            inputs.record(path)?;
            let spec: PointingGameSpec = read_json(path)?;
            spec.validate(&e.space())?;
            Some(spec)
        }
        None => None,
    };
    let game = oracle::open(&args.oracle, &mut inputs)?;
    e.space().ensure_same(&game.space())?;

    let ps = if ps.is_empty() { vec![e.p().unwrap_or(0.5)] } else { ps };
    let seed = derive_seed(args.seed, CORRELATION_LABEL);
    let mut correlation = Vec::new();
    for p in ps {
        let value = metric(faithfulness_correlation(&e, game.as_ref(), p, args.eval_m, seed))?;
        correlation.push(json!({"p": p, "m": args.eval_m, "result": value}));
    }
    let curves = insertion_deletion(&e, game.as_ref())?;
    let pgr = match &spec {
        Some(spec) => metric(pointing_game_recognition_with(
            &e,
            spec,
            PgrOptions {
                first_order_fallback: args.pgr_first_order_fallback,
            },
        ))?,
        None => Metric::NotComputed {
            reason: "no pointing spec supplied".into(),
        },
    };
    let report = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "space": e.space(),
        "explanation": {
            "kernel": e.kernel().label(),
            "p": e.p(),
            "basis": e.basis().label(),
            "exact": e.is_exact(),
        },
        "correlation_seed": seed,
        "correlation": correlation,
        "aid": Metric::Ok { value: curves.aid },
        "aid_normalized": metric(normalized_area(&curves))?,
        "empty_value": curves.empty_value,
        "full_value": curves.full_value,
        "pgr": pgr,
    });
    out.write("report.json", &json_bytes(&report))?;
    let mut csv = Vec::new();
    curves.write_csv(&mut csv)?;
    out.write("curves.csv", &csv)?;
    out.finish(RunConfig::Evaluate(args), inputs)
}

pub fn exact(args: ExactArgs) -> CliResult<Manifest> {
    check_probability(args.p)?;
    let mut out = RunOutput::create(&args.out)?;
    let mut inputs = Inputs::default();
    let game = oracle::open(&args.oracle, &mut inputs)?;
    let table = tabulate(game.as_ref())?;
    let solution = exact_fixlip(&table, args.p)?;
    let faithfulness = exact_p_faithfulness(&table, &Explanation::from_exact(&solution, 0.0), args.p)?;
    let e = Explanation::from_exact(&solution, faithfulness);
    let mut text = e.to_json();
    text.push('\n');
    out.write("explanation.json", text.as_bytes())?;
    let report = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "space": e.space(),
        "p": args.p,
        "masks": 1u64 << e.space().size(),
        "p_faithfulness": faithfulness,
    });
    out.write("report.json", &json_bytes(&report))?;
    out.finish(RunConfig::Exact(args), inputs)
}

pub fn synth(args: SynthArgs) -> CliResult<Manifest> {
    let space = PlayerSpace::new(args.n_image, args.n_text)?;
    let mut out = RunOutput::create(&args.out)?;
    let bytes = match args.kind {
        SynthKind::TwoAdditive => json_bytes(&SyntheticFile {
            schema_version: SYNTHETIC_SCHEMA_VERSION,
            game: SyntheticGame::from_two_additive(&random_two_additive(space, args.seed)),
        }),
        SynthKind::Tabulated => json_bytes(&random_tabulated(space, args.seed)?.to_file()),
        SynthKind::Factored => {
            let game = SyntheticGame::Factored {
                n_image: args.n_image,
                n_text: args.n_text,
                dim: args.dim,
                scale: args.scale,
                seed: args.seed,
            };
            game.build()?;
            json_bytes(&SyntheticFile {
                schema_version: SYNTHETIC_SCHEMA_VERSION,
                game,
            })
        }
    };
    out.write("game.json", &bytes)?;
    out.finish(RunConfig::Synth(args), Inputs::default())
}

#[derive(Debug, Serialize)]
pub struct ReplayedArtifact {
    pub name: String,
    pub recorded: Option<String>,
    pub replayed: Option<String>,
    pub identical: bool,
}

/// Reruns a recorded configuration into `out` and compares artifact hashes.
pub fn replay(manifest: &Manifest, out: std::path::PathBuf) -> CliResult<(Manifest, Vec<ReplayedArtifact>)> {
    for (path, expected) in &manifest.inputs {
        let bytes = std::fs::read(path).map_err(|source| CliError::Read {
            path: path.into(),
            source,
        })?;
        let actual = crate::run::sha256_hex(&bytes);
        if &actual != expected {
            return Err(CliError::InputChanged {
                path: path.clone(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    let mut config = manifest.config.clone();
    config.set_out(absolute(&out)?);
    let fresh = run(config)?;
    let mut names: Vec<&String> = manifest.artifacts.keys().chain(fresh.artifacts.keys()).collect();
    names.sort();
    names.dedup();
    let comparison = names
        .into_iter()
        .map(|name| {
            let recorded = manifest.artifacts.get(name).map(|a| a.sha256.clone());
            let replayed = fresh.artifacts.get(name).map(|a| a.sha256.clone());
            ReplayedArtifact {
                name: name.clone(),
                identical: recorded.is_some() && recorded == replayed,
                recorded,
                replayed,
            }
        })
        .collect();
    Ok((fresh, comparison))
}
