use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use teamharness_client::Client;
use teamharness_core::gateway::{EndpointConfig, Gateway, ReplayScript};
use teamharness_core::metrics::{BleuOptions, MetricReport, Tokenization};
use teamharness_core::model::RunConfig;
use teamharness_core::orchestrator::{parse_answers_text, run_task};
use teamharness_core::scoring::{
    compare_conditions, comparison_csv, load_sheets, read_final_scores_csv, write_sheets_csv, write_sheets_json, Rubric,
};
use teamharness_core::workspace::{build_report, metric_report, submit_sheet, validate_answers, Workspace};
use teamharness_server::{serve, ServerConfig};

use crate::*;

pub async fn dispatch(cli: Cli) -> Result<ExitCode> {
    let root = cli.workspace;
    match cli.command {
        Command::Run(args) => run(&root, args).await,
        Command::Replay(args) => replay(&root, args).await,
        Command::Validate(args) => validate(&root, args),
        Command::Metrics(args) => metrics(&root, args),
        Command::Score(ScoreCommand::Import(args)) => score_import(&root, args).await,
        Command::Score(ScoreCommand::Export(args)) => score_export(&root, args),
        Command::Serve(args) => serve_api(&root, args).await,
        Command::Remote(args) => remote(args).await,
        Command::Report => report(&root),
        Command::Stats(StatsCommand::Wilcoxon(args)) => wilcoxon(&root, args),
    }
}

fn ok() -> Result<ExitCode> {
    Ok(ExitCode::SUCCESS)
}

fn token_from(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|t| !t.is_empty())
}

fn next_run_id(ws: &Workspace, config: &RunConfig) -> Result<String> {
    let prefix = format!("{}_{}_", config.mode, config.scenario_id);
    let taken = ws.scan_runs()?;
    let next = (1..)
        .map(|n| format!("{prefix}{n:03}"))
        .find(|id| !taken.iter().any(|e| &e.run_id == id) && !ws.run_dir(id).exists())
        .expect("unbounded range");
    Ok(next)
}

fn run_config(ws: &Workspace, args: &RunArgs) -> Result<RunConfig> {
    let mut config = match &args.manifest {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let (Some(mode), Some(model), Some(scenario)) = (args.mode, &args.model, &args.scenario) else {
                bail!("without --manifest, --mode, --model and --scenario are required");
            };
            RunConfig::new("", mode, model.clone(), scenario.clone())
        }
    };
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(model) = &args.model {
        config.model = model.clone();
    }
    if let Some(scenario) = &args.scenario {
        config.scenario_id = scenario.clone();
    }
    if let Some(path) = &args.endpoint {
        config.endpoint = EndpointConfig::from_file(path)?;
    }
    if args.stub {
        config.endpoint = EndpointConfig::stub();
    }
    config.endpoint = config.endpoint.clone().with_env_overrides()?;
    for (slot, value) in [
        (&mut config.step_pack, &args.step_pack),
        (&mut config.scenario_pack, &args.scenario_pack),
        (&mut config.templates, &args.templates),
    ] {
        if value.is_some() {
            *slot = value.clone();
        }
    }
    config.run_id = match &args.run_id {
        Some(id) => id.clone(),
        None if !config.run_id.is_empty() => config.run_id.clone(),
        None => next_run_id(ws, &config)?,
    };
    config.validate()?;
    Ok(config)
}

async fn run(root: &Path, args: RunArgs) -> Result<ExitCode> {
    let ws = Workspace::open(root)?;
    let config = run_config(&ws, &args)?;
    ws.check_new_run(&config.run_id)?;
    let inputs = ws.resolve_inputs(&config)?;
    let gateway = Gateway::from_config(&config.endpoint)?;
    let record = run_task(&inputs, &gateway).await?;
    let entry = ws.store_run(&record)?;
    if let Some(path) = &args.save_script {
        ReplayScript::record(&record)?
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "{} {} ({} messages, {} answers) -> {}",
        entry.run_id,
        if entry.completed { "completed" } else { "failed" },
        record.transcript.len(),
        record.answers.len(),
        ws.run_dir(&entry.run_id).display()
    );
    if entry.completed {
        ok()
    } else {
        eprintln!("run status: {:?}", record.status);
        Ok(ExitCode::from(1))
    }
}

async fn replay(root: &Path, args: ReplayArgs) -> Result<ExitCode> {
    let ws = Workspace::open(root)?;
    let original = ws.load_run(&args.run_id)?;
    let script = match &args.script {
        Some(path) => ReplayScript::load(path)?,
        None => ReplayScript::record(&original)?,
    };
    let mut config = original.config.clone();
    if let Some(id) = &args.store_as {
        ws.check_new_run(id)?;
        config.run_id = id.clone();
    }
    let inputs = ws.resolve_inputs(&config)?;
    let replayed = run_task(&inputs, &Gateway::replay(script)).await?;
    if !replayed.is_completed() {
        eprintln!("replay of {} failed: {:?}", args.run_id, replayed.status);
        return Ok(ExitCode::from(1));
    }
    if args.store_as.is_some() {
        let entry = ws.store_run(&replayed)?;
        println!("replayed {} into {}", args.run_id, entry.run_id);
        return ok();
    }
    if replayed.same_content(&original) {
        println!(
            "replay of {} reproduced {} exchanges exactly",
            args.run_id,
            replayed.exchanges.len()
        );
        ok()
    } else {
        eprintln!("replay of {} diverged from the stored record", args.run_id);
        Ok(ExitCode::from(1))
    }
}

fn validate(root: &Path, args: ValidateArgs) -> Result<ExitCode> {
    let (label, answers) = match (&args.run_id, &args.answers) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            (path.display().to_string(), parse_answers_text(&text)?)
        }
        (Some(id), None) => (id.clone(), Workspace::open(root)?.load_answers(id)?),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let report = validate_answers(&label, &answers);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_text());
    }
    let violations: usize = report.steps.iter().map(|s| s.violations.len()).sum();
    if args.strict && violations > 0 {
        return Ok(ExitCode::from(1));
    }
    ok()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn metrics_text(report: &MetricReport) -> String {
    let mut out = String::from("model\tcondition\tstep\tdiversity(scenario mean)\tdiversity(pooled)\tmean blanks\n");
    for m in &report.models {
        out += &format!(
            "{}\t{}\t{}\t{}\t{}\t{:.2}\n",
            m.model,
            m.mode,
            m.step,
            fmt_opt(m.diversity_scenario_mean),
            fmt_opt(m.diversity_pooled),
            m.mean_blanks
        );
    }
    if !report.efficiencies.is_empty() {
        out += "\nmodel\tcondition\tsheets\tflexibility\telaboration\toriginality\n";
        for e in &report.efficiencies {
            out += &format!(
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\n",
                e.model, e.mode, e.responses, e.flexibility, e.elaboration, e.originality
            );
        }
    }
    out
}

fn metrics(root: &Path, args: MetricsArgs) -> Result<ExitCode> {
    let ws = Workspace::open(root)?;
    let tokenization = match args.tokenization {
        TokenizationArg::Auto => Tokenization::Auto,
        TokenizationArg::Character => Tokenization::Character,
        TokenizationArg::Whitespace => Tokenization::Whitespace,
    };
    let report = metric_report(&ws, &Rubric::cgpst(), tokenization, BleuOptions::default())?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", metrics_text(&report));
    }
    ok()
}

fn is_final_table(text: &str) -> bool {
    text.lines()
        .next()
        .is_some_and(|h| h.split(',').next().map(str::trim) == Some("model"))
}

async fn score_import(root: &Path, args: ScoreImportArgs) -> Result<ExitCode> {
    let rubric = Rubric::cgpst();
    let text = fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    if is_final_table(&text) {
        if args.server.is_some() {
            bail!("final-score tables are imported into the workspace, not through the API");
        }
        let scores = read_final_scores_csv(&text)?;
        let n = Workspace::open(root)?.sheet_store()?.import_finals(&scores)?;
        println!("imported {n} final score(s)");
        return ok();
    }
    let sheets = load_sheets(&rubric, &args.file)?;
    match &args.server {
        Some(url) => {
            let client = Client::new(url).with_token(token_from(&args.token_env));
            for sheet in &sheets {
                let outcome = client.submit(sheet, None).await?;
                println!(
                    "{} {} v{} total {}",
                    sheet.response_id, sheet.rater_id, outcome.saved.version, outcome.saved.total
                );
            }
        }
        None => {
            let mut store = Workspace::open(root)?.sheet_store()?;
            for sheet in sheets {
                let label = format!("{} {}", sheet.response_id, sheet.rater_id);
                let outcome = submit_sheet(&mut store, &rubric, sheet, None, args.threshold)?;
                let case = outcome
                    .calibration
                    .map(|c| format!(" ({} {:?})", c.case_id, c.status))
                    .unwrap_or_default();
                println!("{label} v{} total {}{case}", outcome.saved.version, outcome.saved.total);
            }
        }
    }
    ok()
}

fn score_export(root: &Path, args: ScoreExportArgs) -> Result<ExitCode> {
    let rubric = Rubric::cgpst();
    let store = Workspace::open(root)?.sheet_store()?;
    let sheets: Vec<_> = store.all_latest().into_iter().cloned().collect();
    let text = match args.format {
        SheetFormat::Csv => write_sheets_csv(&rubric, &sheets)?,
        SheetFormat::Json => write_sheets_json(&sheets),
    };
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    ok()
}

async fn serve_api(root: &Path, args: ServeArgs) -> Result<ExitCode> {
    let mut config = ServerConfig::new(root);
    config.token = token_from(&args.token_env);
    config.threshold = args.threshold;
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!(
        "rater API on http://{} ({})",
        listener.local_addr()?,
        if config.token.is_some() {
            "bearer token required"
        } else {
            "no token"
        }
    );
    serve(listener, config).await?;
    ok()
}

async fn remote(args: RemoteArgs) -> Result<ExitCode> {
    let client = Client::new(&args.server).with_token(token_from(&args.token_env));
    let value = match &args.command {
        RemoteCommand::Sessions => serde_json::to_value(client.sessions().await?)?,
        RemoteCommand::Consistency { session_id } => serde_json::to_value(client.consistency(session_id).await?)?,
        RemoteCommand::Cases => serde_json::to_value(client.calibration_cases().await?)?,
        RemoteCommand::Assign { case_id, rater_id } => serde_json::to_value(client.assign(case_id, rater_id).await?)?,
    };
    println!("{}", serde_json::to_string_pretty(&value)?);
    ok()
}

fn report(root: &Path) -> Result<ExitCode> {
    let ws = Workspace::open(root)?;
    let files = build_report(&ws, &Rubric::cgpst())?;
    for f in &files.files {
        println!("{}", files.dir.join(f).display());
    }
    if !files.pending.is_empty() {
        eprintln!(
            "{} response(s) still pending scores; see pending.json",
            files.pending.len()
        );
    }
    ok()
}

fn wilcoxon(root: &Path, args: WilcoxonArgs) -> Result<ExitCode> {
    let path = match &args.scores {
        Some(path) => path.clone(),
        None => Workspace::open(root)?.reports_dir().join("finals.csv"),
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let scores = read_final_scores_csv(&text)?;
    let results = compare_conditions(&scores, &args.treatment, &args.control)?;
    if results.is_empty() {
        bail!("no model has paired {} and {} scores", args.treatment, args.control);
    }
    if args.csv {
        print!("{}", comparison_csv(&results));
        return ok();
    }
    println!("{} vs {} (alpha {})", args.treatment, args.control, args.alpha);
    println!("model\tpairs\tW+\tp\tmethod\tsignificant");
    for r in &results {
        let w = &r.result;
        println!(
            "{}\t{}\t{}\t{:.6}\t{:?}\t{}",
            r.model,
            r.paired,
            w.w_plus,
            w.p_value,
            w.method,
            if w.p_value <= args.alpha { "yes" } else { "no" }
        );
    }
    ok()
}
