//! `chargegame` command-line front end.

mod dot;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use chargegame::equilibria::default_granularity;
use chargegame::verify;
use chargegame::{
    admissibility, apply_strategy, best_response, build_expanded_graph, efficiency_ratios_with,
    enumerate_equilibria_with, is_k_strong_with, is_nash, max_flow, optimal_welfare, paper_instance, save_document,
    utilities, welfare, CoalitionMode, EquilibriumReport, Error, PaperInstanceId, Quantity, Ratio, SearchOptions,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use input::{agent_index, parse_profile, resolve_prices, Loaded, Source};
use report::{
    emit, profile_text, render_rows, render_structured, strategy_text, utility_cells, utility_columns, Format,
    InstanceInfo, RunReport, Table,
};

#[derive(Debug, Parser)]
#[command(name = "chargegame", version, about = "Battery charging games on time-expanded flow networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Structured)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct Pricing {
    /// `p1,...,pT`, `uniform:c`, `asc:start,step`, `desc:start,step` or
    /// `sign:m1,...,mT`. Defaults to the prices stored with the instance.
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    prices: Option<String>,
}

#[derive(Debug, Clone, Args)]
struct Grid {
    /// Strategy grid step.
    #[arg(long = "g", value_name = "RATIONAL", default_value_t = default_granularity())]
    granularity: Quantity,
}

#[derive(Debug, Clone, Args)]
struct Coalitions {
    /// Largest coalition size.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Only try coalitions of exactly `k` agents.
    #[arg(long)]
    exact: bool,
}

impl Coalitions {
    fn mode(&self) -> CoalitionMode {
        if self.exact {
            CoalitionMode::Exact
        } else {
            CoalitionMode::UpTo
        }
    }
}

#[derive(Debug, Clone, Args)]
struct ProfileArg {
    /// One row per agent, e.g. `1,-1;0,0`.
    #[arg(long, value_name = "ROWS", allow_hyphen_values = true)]
    profile: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instance against the model invariants.
    Validate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        output: Output,
    },
    /// Optimal welfare, and the welfare of a profile if given.
    Welfare {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_name = "ROWS", allow_hyphen_values = true)]
        profile: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Admissibility of every transaction edge, strategy and the profile.
    Admissible {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        output: Output,
    },
    Utilities {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pricing: Pricing,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        output: Output,
    },
    BestResponse {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pricing: Pricing,
        #[command(flatten)]
        profile: ProfileArg,
        /// Agent id or index.
        #[arg(long)]
        agent: String,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        output: Output,
    },
    CheckNe {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pricing: Pricing,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        output: Output,
    },
    CheckStrong {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pricing: Pricing,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        coalitions: Coalitions,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        output: Output,
    },
    /// Every grid equilibrium.
    Enumerate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pricing: Pricing,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        coalitions: Coalitions,
        /// Largest profile space to scan.
        #[arg(long, default_value_t = chargegame::equilibria::DEFAULT_BUDGET)]
        budget: u128,
        #[command(flatten)]
        output: Output,
    },
    /// Price of anarchy and stability over the grid equilibria.
    Ratios {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        pricing: Pricing,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        coalitions: Coalitions,
        #[arg(long, default_value_t = chargegame::equilibria::DEFAULT_BUDGET)]
        budget: u128,
        #[command(flatten)]
        output: Output,
    },
    /// Print a built-in instance as an instance document.
    Paper {
        #[arg(value_name = "ID[:PARAMS]")]
        id: String,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run the acceptance checks; exits 1 if any fails.
    VerifyPaper {
        /// Run a single criterion.
        #[arg(long, value_name = "N")]
        criterion: Option<usize>,
    },
    /// Graphviz drawing of the expanded graph with a maximum flow.
    ExportDot {
        #[command(flatten)]
        source: Source,
        /// Cap transaction edges by this profile; otherwise draw the relaxed graph.
        #[arg(long, value_name = "ROWS", allow_hyphen_values = true)]
        profile: Option<String>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

/// What a command produced, before formatting.
struct Outcome {
    loaded: Loaded,
    granularity: Option<Quantity>,
    prices: Option<chargegame::PriceProfile>,
    result: serde_json::Value,
    tables: Vec<Table>,
    notes: Vec<String>,
    /// Exit code 2 even though a report was written.
    rejected: bool,
}

impl Outcome {
    fn new(loaded: Loaded, result: serde_json::Value, tables: Vec<Table>) -> Self {
        Outcome { loaded, granularity: None, prices: None, result, tables, notes: Vec::new(), rejected: false }
    }
}

fn options(grid: &Grid, coalitions: &Coalitions, budget: u128) -> SearchOptions {
    SearchOptions { granularity: grid.granularity, k: coalitions.k, mode: coalitions.mode(), budget }
}

fn ratio_notes(opt: Quantity, ratios: &[Ratio]) -> Vec<String> {
    let mut notes = Vec::new();
    if opt.is_zero() && ratios.iter().any(|r| matches!(r, Ratio::Finite(_))) {
        notes.push("OPT is 0; 0/0 is reported as ratio 1".to_string());
    }
    if ratios.contains(&Ratio::Infinity) {
        notes.push("an equilibrium has welfare 0 while OPT > 0; ratio reported as inf".to_string());
    }
    notes
}

fn equilibrium_table(loaded: &Loaded, equilibria: &[chargegame::Equilibrium]) -> Table {
    let mut table =
        Table::new(["profile".to_string(), "welfare".to_string()].into_iter().chain(utility_columns(&loaded.instance)));
    for e in equilibria {
        table.push([profile_text(&e.profile), e.welfare.to_string()].into_iter().chain(utility_cells(&e.utilities)));
    }
    table
}

fn summary_table(report: &EquilibriumReport) -> Table {
    let mut summary = Table::new(["opt", "best_welfare", "worst_welfare", "poa", "pos"]);
    let cell = |w: Option<Quantity>| w.map(|q| q.to_string()).unwrap_or_default();
    summary.push([
        report.opt.to_string(),
        cell(report.best_welfare),
        cell(report.worst_welfare),
        report.poa.to_string(),
        report.pos.to_string(),
    ]);
    summary
}

fn validate(source: &Source) -> anyhow::Result<Outcome> {
    match source.load() {
        Ok(loaded) => {
            let i = &loaded.instance;
            let result = json!({ "valid": true, "violations": [], "T": i.horizon, "nodes": i.nodes.len(), "agents": i.agents.len() });
            Ok(Outcome::new(loaded, result, vec![Table::new(["violation"])]))
        }
        Err(err) => {
            let Some(Error::InvalidInstance(violations)) = err.downcast_ref::<Error>() else {
                return Err(err);
            };
            let texts: Vec<String> = violations.iter().map(ToString::to_string).collect();
            let mut table = Table::new(["violation"]);
            for v in &texts {
                table.push([v.clone()]);
            }
            let label = source.paper.clone().unwrap_or_else(|| {
                format!("file:{}", source.file.as_ref().map(|p| p.display().to_string()).unwrap_or_default())
            });
            eprintln!("invalid instance:");
            for v in &texts {
                eprintln!("  {v}");
            }
            // The document did not load, so there is no instance to fingerprint.
            let placeholder = Loaded {
                instance: chargegame::Instance {
                    horizon: 0,
                    nodes: vec![],
                    edges: vec![],
                    demands: Default::default(),
                    agents: vec![],
                },
                prices: None,
                label,
            };
            let mut out = Outcome::new(placeholder, json!({ "valid": false, "violations": texts }), vec![table]);
            out.rejected = true;
            Ok(out)
        }
    }
}

fn analyse(command: &Command) -> anyhow::Result<Outcome> {
    let out = match command {
        Command::Validate { source, .. } => validate(source)?,
        Command::Welfare { source, profile, .. } => {
            let loaded = source.load()?;
            let opt = optimal_welfare(&loaded.instance)?;
            let mut table = Table::new(["quantity", "value"]);
            table.push(["opt".to_string(), opt.to_string()]);
            let mut result = json!({ "opt": opt });
            if let Some(text) = profile {
                let p = parse_profile(text, &loaded.instance)?;
                let w = welfare(&loaded.instance, &p)?;
                table.push(["welfare".to_string(), w.to_string()]);
                result["profile"] = json!(p);
                result["welfare"] = json!(w);
            }
            Outcome::new(loaded, result, vec![table])
        }
        Command::Admissible { source, profile, .. } => {
            let loaded = source.load()?;
            let p = parse_profile(&profile.profile, &loaded.instance)?;
            let verdict = admissibility(&loaded.instance, &p)?;
            let mut table = Table::new(["agent", "step", "direction", "admissible"]);
            for e in &verdict.edges {
                let direction = serde_json::to_value(e.direction)?;
                table.push([
                    loaded.instance.agents[e.agent].id.clone(),
                    (e.step + 1).to_string(),
                    direction.as_str().unwrap_or_default().to_string(),
                    e.admissible.to_string(),
                ]);
            }
            Outcome::new(loaded, json!({ "profile": p, "verdict": verdict }), vec![table])
        }
        Command::Utilities { source, pricing, profile, .. } => {
            let loaded = source.load()?;
            let prices = resolve_prices(pricing.prices.as_deref(), &loaded)?;
            let p = parse_profile(&profile.profile, &loaded.instance)?;
            let u = utilities(&loaded.instance, &p, &prices)?;
            let w = welfare(&loaded.instance, &p)?;
            let mut table = Table::new(["agent", "utility"]);
            for (a, value) in loaded.instance.agents.iter().zip(&u) {
                table.push([a.id.clone(), value.to_string()]);
            }
            let mut out = Outcome::new(loaded, json!({ "profile": p, "utilities": u, "welfare": w }), vec![table]);
            out.prices = Some(prices);
            out
        }
        Command::BestResponse { source, pricing, profile, agent, grid, .. } => {
            let loaded = source.load()?;
            let prices = resolve_prices(pricing.prices.as_deref(), &loaded)?;
            let p = parse_profile(&profile.profile, &loaded.instance)?;
            let b = agent_index(agent, &loaded.instance)?;
            let (strategy, utility) = best_response(&loaded.instance, &prices, &p, b, grid.granularity)?;
            let id = loaded.instance.agents[b].id.clone();
            let mut table = Table::new(["agent", "strategy", "utility"]);
            table.push([id.clone(), strategy_text(&strategy), utility.to_string()]);
            let result = json!({ "profile": p, "agent": id, "strategy": strategy, "utility": utility });
            let mut out = Outcome::new(loaded, result, vec![table]);
            out.prices = Some(prices);
            out.granularity = Some(grid.granularity);
            out
        }
        Command::CheckNe { source, pricing, profile, grid, .. } => {
            let loaded = source.load()?;
            let prices = resolve_prices(pricing.prices.as_deref(), &loaded)?;
            let p = parse_profile(&profile.profile, &loaded.instance)?;
            let verdict = is_nash(&loaded.instance, &prices, &p, grid.granularity)?;
            let mut table = Table::new(["is_nash", "witness_agent", "witness_strategy", "witness_utility"]);
            let witness = verdict.witness.as_ref().map_or([String::new(), String::new(), String::new()], |w| {
                [loaded.instance.agents[w.agent].id.clone(), strategy_text(&w.strategy), w.utility.to_string()]
            });
            table.push([verdict.is_nash.to_string()].into_iter().chain(witness));
            let mut out = Outcome::new(loaded, json!({ "profile": p, "verdict": verdict }), vec![table]);
            out.prices = Some(prices);
            out.granularity = Some(grid.granularity);
            out
        }
        Command::CheckStrong { source, pricing, profile, coalitions, grid, .. } => {
            let loaded = source.load()?;
            let prices = resolve_prices(pricing.prices.as_deref(), &loaded)?;
            let p = parse_profile(&profile.profile, &loaded.instance)?;
            let verdict =
                is_k_strong_with(&loaded.instance, &prices, &p, coalitions.k, grid.granularity, coalitions.mode())?;
            let mut table = Table::new(["k", "holds", "coalition", "strategies"]);
            let witness = verdict.witness.as_ref().map_or([String::new(), String::new()], |w| {
                let ids: Vec<&str> = w.agents.iter().map(|&b| loaded.instance.agents[b].id.as_str()).collect();
                let rows: Vec<String> = w.strategies.iter().map(|s| strategy_text(s)).collect();
                [ids.join(";"), rows.join(";")]
            });
            table.push([verdict.k.to_string(), verdict.holds.to_string()].into_iter().chain(witness));
            let mut out = Outcome::new(loaded, json!({ "profile": p, "verdict": verdict }), vec![table]);
            out.prices = Some(prices);
            out.granularity = Some(grid.granularity);
            out
        }
        Command::Enumerate { source, pricing, grid, coalitions, budget, .. } => {
            let loaded = source.load()?;
            let prices = resolve_prices(pricing.prices.as_deref(), &loaded)?;
            let opts = options(grid, coalitions, *budget);
            let equilibria = enumerate_equilibria_with(&loaded.instance, &prices, &opts)?;
            let table = equilibrium_table(&loaded, &equilibria);
            let space = chargegame::equilibria::space_size(&loaded.instance, grid.granularity)?;
            let result =
                json!({ "k": opts.k, "mode": opts.mode, "space_size": space.to_string(), "equilibria": equilibria });
            let mut out = Outcome::new(loaded, result, vec![table]);
            out.prices = Some(prices);
            out.granularity = Some(grid.granularity);
            out
        }
        Command::Ratios { source, pricing, grid, coalitions, budget, .. } => {
            let loaded = source.load()?;
            let prices = resolve_prices(pricing.prices.as_deref(), &loaded)?;
            let report = efficiency_ratios_with(&loaded.instance, &prices, &options(grid, coalitions, *budget))?;
            let tables = vec![equilibrium_table(&loaded, &report.equilibria), summary_table(&report)];
            let notes = ratio_notes(report.opt, &[report.poa, report.pos]);
            let mut value = serde_json::to_value(&report)?;
            value["space_size"] = json!(report.space_size.to_string());
            let mut out = Outcome::new(loaded, value, tables);
            out.prices = Some(report.prices.clone());
            out.granularity = Some(grid.granularity);
            out.notes = notes;
            out
        }
        Command::Paper { .. } | Command::VerifyPaper { .. } | Command::ExportDot { .. } => {
            unreachable!("handled without a report")
        }
    };
    Ok(out)
}

fn output_of(command: &Command) -> &Output {
    match command {
        Command::Validate { output, .. }
        | Command::Welfare { output, .. }
        | Command::Admissible { output, .. }
        | Command::Utilities { output, .. }
        | Command::BestResponse { output, .. }
        | Command::CheckNe { output, .. }
        | Command::CheckStrong { output, .. }
        | Command::Enumerate { output, .. }
        | Command::Ratios { output, .. } => output,
        _ => unreachable!("command has no report output"),
    }
}

fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Paper { id, out } => {
            let id: PaperInstanceId = id.parse()?;
            let (instance, prices) = paper_instance(id)?;
            emit(&save_document(&instance, Some(&prices)), out.as_deref())?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::VerifyPaper { criterion } => {
            let outcomes = match criterion {
                Some(id) if (1..=verify::CRITERIA).contains(id) => vec![verify::run(*id)],
                Some(id) => anyhow::bail!("criterion {id} outside 1..={}", verify::CRITERIA),
                None => verify::run_all(),
            };
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::ExportDot { source, profile, out } => {
            let loaded = source.load()?;
            let mut graph = build_expanded_graph(&loaded.instance)?;
            if let Some(text) = profile {
                graph = apply_strategy(&graph, &parse_profile(text, &loaded.instance)?)?;
            }
            let flow = max_flow(&graph).flow;
            emit(&dot::export_dot(&graph, Some(&flow))?, out.as_deref())?;
            return Ok(ExitCode::SUCCESS);
        }
        _ => {}
    }

    let start = Instant::now();
    let outcome = analyse(&cli.command)?;
    let output = output_of(&cli.command);
    let text = match output.format {
        Format::Rows => render_rows(&outcome.tables)?,
        Format::Structured => {
            let report = RunReport {
                command: argv,
                instance: InstanceInfo::new(outcome.loaded.label.clone(), &outcome.loaded.instance),
                granularity: outcome.granularity,
                prices: outcome.prices,
                result: outcome.result,
                notes: outcome.notes,
                duration_ms: start.elapsed().as_millis() as u64,
            };
            render_structured(&report)?
        }
    };
    emit(&text, output.out.as_deref())?;
    Ok(if outcome.rejected { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn configure_workers() -> anyhow::Result<()> {
    if let Ok(text) = std::env::var("CHARGEGAME_WORKERS") {
        let n: usize = text.trim().parse().with_context(|| format!("CHARGEGAME_WORKERS=`{text}` is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| run(cli, argv));
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_equilibrium_list() {
        let loaded = Source { paper: Some("fig1".into()), file: None }.load().unwrap();
        let report = EquilibriumReport {
            prices: loaded.prices.clone().unwrap(),
            granularity: Quantity::ONE,
            k: 1,
            mode: CoalitionMode::UpTo,
            space_size: 0,
            equilibria: vec![],
            opt: Quantity::ONE,
            best_welfare: None,
            worst_welfare: None,
            poa: Ratio::of(Quantity::ONE, None),
            pos: Ratio::of(Quantity::ONE, None),
        };
        let text = render_rows(&[equilibrium_table(&loaded, &report.equilibria), summary_table(&report)]).unwrap();
        assert_eq!(
            text,
            "profile,welfare,u_a,u_b\n\nopt,best_welfare,worst_welfare,poa,pos\n1,,,no-equilibrium,no-equilibrium\n"
        );
    }

    #[test]
    fn zero_optimum_is_annotated() {
        assert_eq!(ratio_notes(Quantity::ZERO, &[Ratio::Finite(Quantity::ONE)]).len(), 1);
        assert!(ratio_notes(Quantity::ONE, &[Ratio::Finite(Quantity::ONE)]).is_empty());
    }
}
