//! Command dispatch for the `cohist` binary.

pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cohist::family_algebra::{are_compatible, generated_family, is_coarse_graining};
use cohist::histories::{is_weakly_decoherent, ConsistentFamily, Family};
use cohist::inference::{
    find_contrary_inferences, is_ordered_consistent, kent_triple_check, ContraryInferenceCertificate, SearchParams,
    SearchStrategy,
};
use cohist::scenario::{certificate_file, Scenario, ScenarioFile};
use cohist::support_sim::{
    build_support_model, check_axiom1, check_axiom2, check_axiom3_variant, check_condition8, check_partition,
    classify_cases, frequency_table, proposition1_check, CatalogEntry, EventPair, SupportOptions,
};
use cohist::{Error, Projector};

use report::{digest, Report, EXIT_AFFIRMATIVE, EXIT_INPUT_ERROR, EXIT_NEGATIVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "cohist", version, about = "Consistent-histories scenario toolkit")]
pub struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Overrides the scenario seed for randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak-decoherence check of a named family.
    CheckConsistency { family: String },
    /// Probability of a named history in a named family.
    Prob { family: String, history: String },
    /// p(target | given) in a named family.
    Conditional { family: String, target: String, given: String },
    /// Family generated by the named histories.
    GenerateFamily {
        #[arg(required = true)]
        histories: Vec<String>,
    },
    /// Whether two named families lie in a common consistent family.
    Compatible { family_a: String, family_b: String },
    /// Seeded search for contrary inferences.
    FindContrary {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        /// Quadruple `E0,E1,F1,E2` of scenario projectors to evaluate first (repeatable).
        #[arg(long, value_delimiter = ',', num_args = 4)]
        plant: Vec<String>,
        /// Directory receiving one replayable scenario file per certificate.
        #[arg(long)]
        fragments: Option<PathBuf>,
    },
    /// Ordered consistency of a history against a catalog of families.
    OrderedCheck {
        history: String,
        catalog: Vec<String>,
    },
    /// Builds a support model and runs every checker on it.
    SimulateSupport {
        /// Catalog family names.
        #[arg(long, value_delimiter = ',')]
        catalog: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        #[arg(long)]
        ensemble: Option<usize>,
        /// Exclusive event pair `E,F@time` (repeatable).
        #[arg(long)]
        exclusive: Vec<String>,
        /// Contrary quadruple `E0,E1,F1,E2` for condition (8) and the case analysis.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        contrary: Vec<String>,
        /// Writes the ensemble as a text table.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Haar,
    Constrained,
}

/// Failure that maps to the input-error exit status.
#[derive(Debug)]
pub struct InputError(pub String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<(Value, Vec<String>, i32), InputError>;

struct Ctx {
    scenario: Option<Scenario>,
    tol: Option<f64>,
    seed: Option<u64>,
}

impl Ctx {
    fn scenario(&self) -> Result<&Scenario, InputError> {
        self.scenario
            .as_ref()
            .ok_or_else(|| InputError("this command needs --scenario".into()))
    }

    fn tol(&self) -> f64 {
        self.scenario.as_ref().map(|s| s.tol).or(self.tol).unwrap_or(cohist::DEFAULT_TOL)
    }
}

fn family_json(f: &Family) -> Value {
    json!({
        "times": f.times(),
        "slots": f.slots().iter().map(|s| {
            s.labels().iter().zip(s.members()).map(|(l, m)| json!({"label": l, "rank": m.rank()})).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
        "elementary_histories": f.elementary_count().to_string(),
    })
}

fn exit_for(b: bool) -> i32 {
    if b {
        EXIT_AFFIRMATIVE
    } else {
        EXIT_NEGATIVE
    }
}

fn check_consistency(ctx: &Ctx, family: &str) -> Outcome {
    let s = ctx.scenario()?;
    let f = s.family(family)?;
    let r = is_weakly_decoherent(f, &s.rho, s.tol)?;
    let worst = r.worst_pair.map(|(i, j)| {
        json!({
            "first": f.elementary_history(&r.histories[i]).label(),
            "second": f.elementary_history(&r.histories[j]).label(),
            "value": [r.get(i, j).re, r.get(i, j).im],
        })
    });
    Ok((
        json!({
            "family": family,
            "consistent": r.is_weakly_decoherent,
            "max_off_diagonal_re": r.max_off_diagonal_re,
            "worst_pair": worst,
            "elementary_histories": r.len(),
            "tol": r.tol_used,
        }),
        vec![],
        exit_for(r.is_weakly_decoherent),
    ))
}

fn consistent(s: &Scenario, name: &str) -> Result<Option<ConsistentFamily>, InputError> {
    match ConsistentFamily::new(s.family(name)?.clone(), s.rho.clone(), s.tol) {
        Ok(c) => Ok(Some(c)),
        Err(Error::InconsistentFamily { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn prob(ctx: &Ctx, family: &str, history: &str) -> Outcome {
    let s = ctx.scenario()?;
    let h = s.history(history)?;
    let Some(cf) = consistent(s, family)? else {
        return Ok((
            json!({"family": family, "history": history, "consistent": false, "probability": null}),
            vec![format!("family '{family}' is not weakly decoherent; Rule 2 does not apply")],
            EXIT_NEGATIVE,
        ));
    };
    let p = cf.probability(h)?;
    Ok((
        json!({"family": family, "history": history, "history_label": h.label(), "consistent": true, "probability": p}),
        vec![],
        EXIT_AFFIRMATIVE,
    ))
}

fn conditional(ctx: &Ctx, family: &str, target: &str, given: &str) -> Outcome {
    let s = ctx.scenario()?;
    let (t, g) = (s.history(target)?, s.history(given)?);
    let Some(cf) = consistent(s, family)? else {
        return Ok((
            json!({"family": family, "target": target, "given": given, "consistent": false, "probability": null}),
            vec![format!("family '{family}' is not weakly decoherent; Rule 2 does not apply")],
            EXIT_NEGATIVE,
        ));
    };
    let p = cf.conditional_probability(t, g)?;
    let p_given = cf.probability(g)?;
    Ok((
        json!({"family": family, "target": target, "given": given, "consistent": true,
               "probability": p, "p_given": p_given}),
        vec![],
        EXIT_AFFIRMATIVE,
    ))
}

fn generate(ctx: &Ctx, histories: &[String]) -> Outcome {
    let s = ctx.scenario()?;
    let hs = histories
        .iter()
        .map(|n| s.history(n).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    let f = generated_family(&hs, s.tol)?;
    let report = is_weakly_decoherent(&f, &s.rho, s.tol).ok();
    let mut out = family_json(&f);
    out["histories"] = json!(histories);
    out["matches"] = json!(s.family_name(&f));
    out["consistent"] = json!(report.as_ref().map(|r| r.is_weakly_decoherent));
    Ok((out, vec![], EXIT_AFFIRMATIVE))
}

fn compatible(ctx: &Ctx, a: &str, b: &str) -> Outcome {
    let s = ctx.scenario()?;
    let (fa, fb) = (s.family(a)?, s.family(b)?);
    let r = are_compatible(fa, fb, &s.rho, s.tol)?;
    Ok((
        json!({
            "family_a": a,
            "family_b": b,
            "compatible": r.compatible,
            "reason": r.reason,
            "refined_family": r.refined_family.as_ref().map(family_json),
        }),
        vec![],
        exit_for(r.compatible),
    ))
}

fn certificate_json(c: &ContraryInferenceCertificate) -> Value {
    json!({
        "p_joint": c.p_joint,
        "cond_c1": c.cond_c1,
        "cond_c2": c.cond_c2,
        "max_off_diagonal_c1": c.max_off_diagonal_c1,
        "max_off_diagonal_c2": c.max_off_diagonal_c2,
        "ranks": [c.e0.rank(), c.e1.rank(), c.f1.rank(), c.e2.rank()],
    })
}

fn quadruple(s: &Scenario, names: &[String]) -> Result<[Projector; 4], InputError> {
    let ps = names
        .iter()
        .map(|n| s.projector(n).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    ps.try_into()
        .map_err(|_| InputError("a quadruple takes exactly four projector names".into()))
}

#[allow(clippy::too_many_arguments)]
fn find_contrary(
    ctx: &Ctx,
    dim: Option<usize>,
    trials: Option<usize>,
    rank: Option<usize>,
    strategy: Option<StrategyArg>,
    plant: &[String],
    fragments: Option<&PathBuf>,
) -> Outcome {
    let spec = ctx.scenario.as_ref().and_then(|s| s.search.clone());
    let dim = dim
        .or(spec.as_ref().map(|x| x.dim))
        .or(ctx.scenario.as_ref().map(|s| s.dim))
        .ok_or_else(|| InputError("--dim is required without a scenario".into()))?;
    let trials = trials.or(spec.as_ref().map(|x| x.trials)).unwrap_or(1000);
    let mut params = SearchParams::new(dim, trials, ctx.seed.or(spec.as_ref().map(|x| x.seed)).unwrap_or(0));
    params.tol = ctx.tol();
    params.rank = rank.or(spec.as_ref().map(|x| x.rank)).unwrap_or(1);
    params.strategy = match strategy {
        Some(StrategyArg::Haar) => SearchStrategy::Haar,
        Some(StrategyArg::Constrained) => SearchStrategy::Constrained,
        None => spec.as_ref().map(|x| x.strategy).unwrap_or_default(),
    };
    if let Some(s) = &ctx.scenario {
        for q in spec.iter().flat_map(|x| x.planted.iter()) {
            params.planted.push(quadruple(s, q)?);
        }
        for q in plant.chunks(4) {
            params.planted.push(quadruple(s, q)?);
        }
    } else if !plant.is_empty() {
        return Err(InputError("--plant needs --scenario".into()));
    }
    let out = find_contrary_inferences(&params)?;
    let mut certs = Vec::new();
    for (k, found) in out.certificates.iter().enumerate() {
        let fragment: ScenarioFile = certificate_file(&found.certificate);
        if let Some(dir) = fragments {
            std::fs::create_dir_all(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("certificate_{:04}.json", k));
            std::fs::write(&path, fragment.to_json()).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        }
        let mut c = certificate_json(&found.certificate);
        c["trial"] = json!(found.trial);
        c["planted"] = json!(found.planted);
        c["fragment"] = serde_json::to_value(&fragment).expect("scenario documents serialize");
        certs.push(c);
    }
    let found = !certs.is_empty();
    Ok((
        json!({
            "dim": dim,
            "trials": trials,
            "seed": params.seed,
            "strategy": params.strategy,
            "rank": params.rank,
            "planted": params.planted.len(),
            "evaluated": out.evaluated,
            "marginal": out.marginal,
            "certificates": certs,
        }),
        vec![],
        exit_for(found),
    ))
}

fn ordered_check(ctx: &Ctx, history: &str, catalog: &[String]) -> Outcome {
    let s = ctx.scenario()?;
    let h = s.history(history)?;
    let fams = catalog
        .iter()
        .map(|n| s.family(n).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    let v = is_ordered_consistent(h, &fams, &s.rho, s.tol)?;
    let pair = v.violating_pair.as_ref().map(|p| {
        json!({
            "family": catalog[p.family],
            "dominating": p.dominating.label(),
            "weight_history": p.weight_history,
            "weight_dominating": p.weight_dominating,
        })
    });
    Ok((
        json!({
            "history": history,
            "history_label": h.label(),
            "catalog": catalog,
            "ordered_consistent": v.ordered_consistent,
            "violating_pair": pair,
            "dominators_checked": v.dominators_checked,
            "note": "verdict relative to the listed catalog only",
        }),
        vec![],
        exit_for(v.ordered_consistent),
    ))
}

fn parse_pair(s: &Scenario, spec: &str) -> Result<EventPair, InputError> {
    let bad = || InputError(format!("exclusive pair '{spec}' must look like E,F@time"));
    let (names, time) = spec.split_once('@').ok_or_else(bad)?;
    let (e, f) = names.split_once(',').ok_or_else(bad)?;
    let time: f64 = time.trim().parse().map_err(|_| bad())?;
    Ok(EventPair::new(time, s.projector(e.trim())?.clone(), s.projector(f.trim())?.clone()))
}

fn ids(v: &[usize]) -> Value {
    json!({"count": v.len(), "first": v.iter().take(10).collect::<Vec<_>>()})
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    ctx: &Ctx,
    catalog: &[String],
    weights: &[f64],
    ensemble: Option<usize>,
    exclusive: &[String],
    contrary: &[String],
    export: Option<&PathBuf>,
) -> Outcome {
    let s = ctx.scenario()?;
    let spec = s.simulation.clone();
    let names: Vec<String> = if catalog.is_empty() {
        spec.as_ref().map(|x| x.catalog.clone()).unwrap_or_default()
    } else {
        catalog.to_vec()
    };
    if names.is_empty() {
        return Err(InputError("empty catalog".into()));
    }
    let entries = names
        .iter()
        .map(|n| Ok(CatalogEntry::new(n.clone(), s.family(n)?.clone())))
        .collect::<Result<Vec<_>, InputError>>()?;
    let mut warnings = Vec::new();
    let weights: Vec<f64> = if !weights.is_empty() {
        weights.to_vec()
    } else if let Some(w) = spec.as_ref().and_then(|x| x.weights.clone()) {
        w
    } else {
        // Uniform over maximal catalog elements.
        let w: Vec<f64> = entries
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let dominated = entries.iter().enumerate().any(|(j, b)| {
                    j != i
                        && is_coarse_graining(&a.family, &b.family, s.tol).is_ok_and(|r| r.is_coarse_graining)
                        && !is_coarse_graining(&b.family, &a.family, s.tol).is_ok_and(|r| r.is_coarse_graining)
                });
                if dominated {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        warnings.push("no weights given: uniform over maximal catalog families".into());
        w
    };
    let mut opts = SupportOptions::new(
        ensemble.or(spec.as_ref().map(|x| x.ensemble)).unwrap_or(10_000),
        ctx.seed.or(spec.as_ref().map(|x| x.seed)).unwrap_or(0),
    );
    opts.tol = s.tol;
    let pair_specs: Vec<EventPair> = if exclusive.is_empty() {
        spec.iter()
            .flat_map(|x| x.exclusive_pairs.iter())
            .map(|p| Ok(EventPair::new(p.time, s.projector(&p.e)?.clone(), s.projector(&p.f)?.clone())))
            .collect::<Result<_, InputError>>()?
    } else {
        exclusive.iter().map(|e| parse_pair(s, e)).collect::<Result<_, _>>()?
    };
    opts.exclusive_pairs = pair_specs.clone();
    let contrary_names: Option<Vec<String>> = if contrary.is_empty() {
        spec.as_ref().and_then(|x| x.contrary.clone()).map(|c| c.to_vec())
    } else {
        Some(contrary.to_vec())
    };

    let model = build_support_model(entries, &weights, &s.rho, &opts)?;
    if let Some(path) = export {
        std::fs::write(path, model.to_table()).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    let a1 = check_axiom1(&model);
    let a2 = check_axiom2(&model)?;
    let part = check_partition(&model);
    let freq = frequency_table(&model, 3.0, 20.0);
    let freq_ok = freq.iter().all(|r| r.within_bound);
    let mut all_ok = a1.violations.is_empty() && a2.violations.is_empty() && part.is_clean();
    if !pair_specs.is_empty() {
        warnings.push("exclusive pairs enabled: frequencies of the paired families are not Rule-2 samples".into());
    } else {
        all_ok &= freq_ok;
    }

    let mut results = json!({
        "catalog": names,
        "weights": weights,
        "ensemble": model.systems().len(),
        "seed": opts.seed,
        "support_sizes": (0..names.len()).map(|i| model.support(i).len()).collect::<Vec<_>>(),
        "axiom1": {"comparable_pairs": a1.comparable_pairs, "violations": a1.violations.len()},
        "axiom2": {"family_pairs": a2.family_pairs_checked, "shared_histories": a2.shared_histories,
                   "violations": a2.violations.len()},
        "partition": {"families": part.families_checked, "malformed": part.malformed.len(),
                      "violations": part.violations.len()},
        "frequencies": freq.iter().map(|r| json!({
            "family": r.family, "elementary": r.elementary, "support": r.support_size,
            "observed": r.observed, "expected_probability": r.expected_probability,
            "z": if r.z_score.is_finite() { json!(r.z_score) } else { Value::Null },
            "tested": r.tested, "within_3_sigma": r.within_bound,
        })).collect::<Vec<_>>(),
    });

    let mut pairs_to_check = pair_specs.clone();
    if let Some(names4) = &contrary_names {
        let [e0, e1, f1, e2] = quadruple(s, names4)?;
        match kent_triple_check(&e0, &e1, &f1, &e2, &s.rho, s.tol) {
            Ok(cert) => {
                let c1 = model.family_index(&cert.family_c1);
                let c2 = model.family_index(&cert.family_c2);
                match (c1, c2) {
                    (Some(i), Some(j)) => {
                        let ok = check_condition8(&model, i, j, &cert.h0())?;
                        all_ok &= ok;
                        results["condition8"] = json!(ok);
                    }
                    _ => warnings.push("C1 or C2 missing from the catalog: condition (8) skipped".into()),
                }
                match classify_cases(&model, &cert) {
                    Ok(c) => {
                        all_ok &= c.overlap == 0;
                        results["cases"] = json!({
                            "p1": c.p1, "p2": c.p2, "q1": c.q1, "q2": c.q2, "r": c.r,
                            "overlap": c.overlap, "exclusive_event_occurs": c.exclusive_event_occurs,
                        });
                    }
                    Err(Error::CatalogMissingFamily(f)) => {
                        warnings.push(format!("{f} missing from the catalog: case analysis skipped"))
                    }
                    Err(e) => return Err(e.into()),
                }
                if pairs_to_check.is_empty() {
                    pairs_to_check.push(EventPair::new(1.0, e1, f1));
                }
            }
            Err(e) => warnings.push(format!("contrary quadruple does not verify: {e}")),
        }
    }
    let mut exclusivity = Vec::new();
    for p in &pairs_to_check {
        let p1 = proposition1_check(&model, p)?;
        let a3 = check_axiom3_variant(&model, p)?;
        all_ok &= p1.holds();
        exclusivity.push(json!({
            "time": p.time,
            "proposition1": {"holds": p1.holds(), "double_occurrences": ids(&p1.double_occurrences),
                             "antecedent_failures": ids(&p1.antecedent_failures)},
            "axiom3": {"holds": a3.holds(), "clause_i": ids(&a3.clause_i_violations),
                       "clause_ii": ids(&a3.clause_ii_violations),
                       "clause_ii_reverse": ids(&a3.clause_ii_reverse_violations),
                       "undefined_partner": ids(&a3.undefined_partner)},
        }));
    }
    results["exclusive_pairs"] = json!(exclusivity);
    results["all_checks_pass"] = json!(all_ok);
    Ok((results, warnings, exit_for(all_ok)))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckConsistency { .. } => "check-consistency",
        Command::Prob { .. } => "prob",
        Command::Conditional { .. } => "conditional",
        Command::GenerateFamily { .. } => "generate-family",
        Command::Compatible { .. } => "compatible",
        Command::FindContrary { .. } => "find-contrary",
        Command::OrderedCheck { .. } => "ordered-check",
        Command::SimulateSupport { .. } => "simulate-support",
    }
}

/// Runs a parsed invocation; returns the report (also for input errors).
pub fn run(cli: &Cli, raw_args: &[String]) -> Report {
    let name = command_name(&cli.command).to_string();
    let scenario_bytes = cli.scenario.as_ref().map(std::fs::read);
    // The output format does not change the inputs.
    let mut digest_args = Vec::new();
    let mut skip = false;
    for a in raw_args {
        if std::mem::take(&mut skip) || a.starts_with("--format=") {
            continue;
        }
        if a == "--format" {
            skip = true;
            continue;
        }
        digest_args.push(a.clone());
    }
    let bytes = match &scenario_bytes {
        Some(Ok(b)) => Some(b.as_slice()),
        _ => None,
    };
    let inputs_digest = digest(bytes, &digest_args);
    let fail = |msg: String| Report {
        command: name.clone(),
        args: raw_args.to_vec(),
        inputs_digest: inputs_digest.clone(),
        results: json!({"error": msg}),
        warnings: vec![],
        exit_status: EXIT_INPUT_ERROR,
    };

    let scenario = match (&cli.scenario, &scenario_bytes) {
        (Some(path), Some(Err(e))) => return fail(format!("cannot read {}: {e}", path.display())),
        (Some(_), Some(Ok(b))) => {
            let text = String::from_utf8_lossy(b);
            match ScenarioFile::from_json(&text).and_then(|f| f.resolve(cli.tol)) {
                Ok(s) => Some(s),
                Err(e) => return fail(e.to_string()),
            }
        }
        _ => None,
    };
    let ctx = Ctx {
        scenario,
        tol: cli.tol,
        seed: cli.seed,
    };
    let outcome = match &cli.command {
        Command::CheckConsistency { family } => check_consistency(&ctx, family),
        Command::Prob { family, history } => prob(&ctx, family, history),
        Command::Conditional { family, target, given } => conditional(&ctx, family, target, given),
        Command::GenerateFamily { histories } => generate(&ctx, histories),
        Command::Compatible { family_a, family_b } => compatible(&ctx, family_a, family_b),
        Command::FindContrary {
            dim,
            trials,
            rank,
            strategy,
            plant,
            fragments,
        } => find_contrary(&ctx, *dim, *trials, *rank, *strategy, plant, fragments.as_ref()),
        Command::OrderedCheck { history, catalog } => ordered_check(&ctx, history, catalog),
        Command::SimulateSupport {
            catalog,
            weights,
            ensemble,
            exclusive,
            contrary,
            export,
        } => simulate(&ctx, catalog, weights, *ensemble, exclusive, contrary, export.as_ref()),
    };
    match outcome {
        Ok((results, warnings, exit_status)) => Report {
            command: name,
            args: raw_args.to_vec(),
            inputs_digest,
            results,
            warnings,
            exit_status,
        },
        Err(InputError(msg)) => fail(msg),
    }
}

/// Renders a report in the requested format.
pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Machine => report.to_machine(),
        Format::Human => {
            if report.exit_status == EXIT_INPUT_ERROR {
                format!("error: {}\n", report.results["error"].as_str().unwrap_or("unknown"))
            } else {
                report.to_human()
            }
        }
    }
}
