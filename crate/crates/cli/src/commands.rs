//! One function per subcommand.

use std::time::Duration;

use rand::Rng;
use serde_json::{json, Value};
use sumfree::constructions::{is_ap3_free, rng};
use sumfree::energy::{additive_energy, hereditary_coefficient, SubsetMode};
use sumfree::fpmodel::{model_pipeline, FieldSpace, PipelineOptions};
use sumfree::io::set_to_value;
use sumfree::solvers::{greedy_sumfree, max_sumfree_subset, Budget, GreedyOrder, SolveOptions};
use sumfree::{Error, GroupSet, Level, Rational, Result, Verdict};

use crate::input::{digest, generator, load_set};
use crate::verify::{corpus, default_check, run_corpus, CorpusOptions};
use crate::{exit, Cli, Command, Global, Outcome, Overrides};

pub fn dispatch(cli: &Cli, overrides: &Overrides) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Mset { input, x, heuristic } => mset(g, input, x.as_deref(), *heuristic),
        Command::Verify { lemma, exhaustive_max, random, sampled, instances, modulus, k, eps, kappa } => {
            let opts = CorpusOptions {
                exhaustive_max: *exhaustive_max,
                random: *random,
                samples: *sampled,
                instances: *instances,
                modulus: *modulus,
                k: *k,
                eps: *eps,
                kappa: *kappa,
                seed: g.seed,
            };
            let items = corpus(*lemma, &opts)?;
            let check = overrides.get(lemma).copied().unwrap_or_else(|| default_check(*lemma));
            let summary = run_corpus(*lemma, &items, check)?;
            let params = json!({
                "lemma": lemma.name(),
                "exhaustive_max": exhaustive_max,
                "random": random,
                "sampled": sampled,
                "instances": instances,
                "modulus": modulus,
                "k": k,
                "eps": eps.map(|e| e.to_string()),
                "kappa": kappa.map(|e| e.to_string()),
            });
            let status = if summary.summary.has_counterexample() { exit::COUNTEREXAMPLE } else { exit::OK };
            Ok(Outcome {
                status,
                input_digest: digest(&[], &params),
                verdicts: json!({ lemma.name(): summary.summary.verdict }),
                result: serde_json::to_value(&summary).map_err(|e| Error::InvalidInput(e.to_string()))?,
                params,
                nodes_explored: None,
            })
        }
        Command::Model { p, n, a, x, density, x_density, k, r, delta, codim, eps0, full } => {
            let spec = ModelSpec {
                p: *p,
                n: *n,
                a: a.as_deref(),
                x: x.as_deref(),
                density: *density,
                x_density: *x_density,
                k: *k,
                r: *r,
                delta: *delta,
                codim: *codim,
                eps0: *eps0,
                full: *full,
            };
            model(g, &spec)
        }
        Command::Construct { family, args } => construct(g, family, args),
        Command::Energy { input, nu, sampled } => energy(g, input, *nu, *sampled),
        Command::Decompose { input, eps } => decompose(g, input, *eps),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn budget(g: &Global) -> Budget {
    Budget { max_nodes: g.budget_nodes, max_time: g.budget_ms.map(Duration::from_millis) }
}

fn mset(g: &Global, input: &str, x_arg: Option<&str>, heuristic: bool) -> Result<Outcome> {
    let a = load_set(input, g.seed)?;
    let x = match x_arg {
        Some(arg) => load_set(arg, g.seed)?,
        None => a.clone(),
    };
    let params = json!({
        "x": x_arg.is_some(),
        "heuristic": heuristic,
        "budget_nodes": g.budget_nodes,
        "budget_ms": g.budget_ms,
    });
    let input_digest = digest(&[&a, &x], &params);
    if heuristic {
        let w = greedy_sumfree(&a, &x, GreedyOrder::DecreasingAbs)?;
        return Ok(Outcome {
            status: exit::OK,
            input_digest,
            params,
            result: json!({ "size": w.len(), "witness": set_to_value(&w), "optimal": false, "method": "greedy" }),
            verdicts: json!({}),
            nodes_explored: None,
        });
    }
    let threads = match g.jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        j => j,
    };
    let res = max_sumfree_subset(&a, &x, &SolveOptions { budget: budget(g), threads, canonical: true })?;
    Ok(Outcome {
        status: if res.optimal { exit::OK } else { exit::BUDGET },
        input_digest,
        params,
        result: json!({ "size": res.size, "witness": set_to_value(&res.witness), "optimal": res.optimal, "method": "exact" }),
        verdicts: json!({}),
        nodes_explored: Some(res.nodes_explored),
    })
}

struct ModelSpec<'a> {
    p: u64,
    n: usize,
    a: Option<&'a str>,
    x: Option<&'a str>,
    density: Rational,
    x_density: Rational,
    k: usize,
    r: u32,
    delta: Rational,
    codim: usize,
    eps0: Option<Rational>,
    full: bool,
}

fn random_subset(space: &FieldSpace, density: Rational, seed: u64) -> Result<GroupSet> {
    if density < Rational::from_integer(0) || density > Rational::from_integer(1) {
        return Err(Error::InvalidInput(format!("density {density} must lie in [0, 1]")));
    }
    let mut r = rng(seed);
    let q = space.order() as i64;
    GroupSet::new(space.ambient(), (0..q).filter(|_| r.gen_ratio(*density.numer() as u32, *density.denom() as u32)))
}

fn model_set(space: &FieldSpace, arg: Option<&str>, density: Rational, seed: u64) -> Result<GroupSet> {
    match arg {
        Some(arg) => {
            let s = load_set(arg, seed)?;
            space.ambient().ensure_same(s.ambient())?;
            Ok(s)
        }
        None => random_subset(space, density, seed),
    }
}

fn model(g: &Global, m: &ModelSpec<'_>) -> Result<Outcome> {
    if m.p.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("p = {} must be an odd prime", m.p)));
    }
    let space = FieldSpace::new(m.p, m.n)?;
    if space.order() > 1 << 16 {
        return Err(Error::Unsupported(format!("F_{}^{} is beyond desk scale", m.p, m.n)));
    }
    let a = model_set(&space, m.a, m.density, g.seed)?;
    let x = model_set(&space, m.x, m.x_density, g.seed.wrapping_add(1))?;
    let opts = PipelineOptions { codim: m.codim, eps0: m.eps0, stop_on_witness: !m.full, seed: g.seed, ..Default::default() };
    let report = model_pipeline(&a, &x, m.k, m.r, m.delta, &opts)?;
    let params = json!({
        "p": m.p,
        "n": m.n,
        "k": m.k,
        "r": m.r,
        "delta": m.delta.to_string(),
        "codim": m.codim,
        "eps0": m.eps0.map(|e| e.to_string()),
        "full": m.full,
        "density": m.a.is_none().then(|| m.density.to_string()),
        "x_density": m.x.is_none().then(|| m.x_density.to_string()),
    });
    Ok(Outcome {
        status: exit::OK,
        input_digest: digest(&[&a, &x], &params),
        verdicts: json!({ "alternative": report.alternative, "rechecks_ok": report.rechecks_ok }),
        result: to_value(&report)?,
        params,
        nodes_explored: None,
    })
}

fn construct(g: &Global, family: &str, args: &[String]) -> Result<Outcome> {
    let spec_text = std::iter::once(family.to_owned()).chain(args.iter().cloned()).collect::<Vec<_>>().join(":");
    let spec = generator(&spec_text, g.seed)?;
    let set = spec.generate()?;
    let params = to_value(&spec)?;
    Ok(Outcome {
        status: exit::OK,
        input_digest: digest(&[], &params),
        result: json!({
            "set": set_to_value(&set),
            "size": set.len(),
            "max": set.max(),
            "ap3_free": (set.len() <= 2000).then(|| is_ap3_free(&set)),
        }),
        verdicts: json!({}),
        params,
        nodes_explored: None,
    })
}

fn energy(g: &Global, input: &str, nu: bool, sampled: Option<usize>) -> Result<Outcome> {
    let a = load_set(input, g.seed)?;
    let mode = match sampled {
        Some(samples) => SubsetMode::Sampled { samples, seed: g.seed },
        None => SubsetMode::Exhaustive,
    };
    let rep = additive_energy(&a)?;
    let n = a.len() as u64;
    let mut result = json!({
        "size": n,
        "energy": rep.energy,
        "normalized": if n == 0 { 0.0 } else { rep.energy as f64 / (n * n * n) as f64 },
        "representations": rep.representations.iter().map(|(s, r)| json!([a.ambient().decode(*s), r])).collect::<Vec<_>>(),
    });
    if nu {
        let h = hereditary_coefficient(&a, mode)?;
        result["nu_star"] = json!(h.nu_star.to_string());
        result["nu_witness"] = to_value(&h.witness)?;
    }
    let params = json!({ "nu": nu, "sampled": sampled });
    Ok(Outcome {
        status: exit::OK,
        input_digest: digest(&[&a], &params),
        params,
        result,
        verdicts: json!({}),
        nodes_explored: None,
    })
}

fn level_key(l: Level) -> String {
    match l {
        Level::Finite(v) => v.to_string(),
        Level::Infinite => "inf".into(),
    }
}

fn decompose(g: &Global, input: &str, eps: Option<Rational>) -> Result<Outcome> {
    let a = load_set(input, g.seed)?;
    let dec = a.two_adic_decompose()?;
    let levels: serde_json::Map<String, Value> =
        dec.levels.iter().map(|(l, s)| (level_key(*l), json!(s.codes()))).collect();
    let mut result = json!({ "size": a.len(), "levels": levels });
    if let Some(eps) = eps {
        let (heavy, rest) = a.heavy_levels(eps)?;
        result["heavy_levels"] = json!(heavy.iter().map(|l| level_key(*l)).collect::<Vec<_>>());
        result["light_elements"] = json!(rest.codes());
        result["heavy_bound_holds"] = json!((eps * heavy.len() as i64) < Rational::from_integer(1));
    }
    let params = json!({ "eps": eps.map(|e| e.to_string()) });
    let holds = result.get("heavy_bound_holds").and_then(Value::as_bool).unwrap_or(true);
    Ok(Outcome {
        status: if holds { exit::OK } else { exit::COUNTEREXAMPLE },
        input_digest: digest(&[&a], &params),
        params,
        result,
        verdicts: json!({ "heavy_level_count": if holds { Verdict::Holds } else { Verdict::Counterexample } }),
        nodes_explored: None,
    })
}
