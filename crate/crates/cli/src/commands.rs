//! Subcommand implementations.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use qud_core::backend::{Backend, MockBackend};
use qud_core::dcqa::{build_all_trees, load_articles, load_questions};
use qud_core::encoding::{encode_anchor_query, encode_generation_prompt, EncodingCase, EntitySpan};
use qud_core::eval::aggregate::{by_system, render, render_q1, render_q1_coarse, render_q2};
use qud_core::eval::anchors::predictions_from_trees;
use qud_core::eval::reranker::training_examples;
use qud_core::eval::{
    aggregate_q1, aggregate_q2, agreement_summary, anchor_agreement, q2_agreement, q2_subset,
    rerank_percentile, synth_negatives, GoldAnchor, JudgmentRecord, RerankEvalInstance,
};
use qud_core::io::{self, read_jsonl, FormatError};
use qud_core::metrics::{
    corpus_report, parse_tree_records, AttachmentConvention, DepTreeRecord, TreeRecord,
};
use qud_core::model::QudTree;
use qud_core::parser::{parse, FailPolicy, ParseConfig, ParseTrace, Variant};
use qud_core::rst::{BracketReader, RstReader};
use qud_http::{HttpBackend, HttpConfig};

use crate::error::{Categorize, Category, CliError, CliResult};
use crate::manifest::Run;
use crate::{
    Cli, Command, CompareArgs, EncodeArgs, EvalArgs, EvalKind, FailPolicyArg, MockServeArgs,
    ParseArgs, Rst2depArgs, StatsArgs, SynthNegArgs, TreeInputArgs,
};

pub fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Parse(a) => parse_cmd(a, seed),
        Command::Stats(a) => stats_cmd(a, seed),
        Command::Compare(a) => compare_cmd(a, seed),
        Command::Rst2dep(a) => rst2dep_cmd(a, seed),
        Command::Eval(a) => eval_cmd(a, seed),
        Command::Encode(a) => encode_cmd(a, seed),
        Command::SynthNeg(a) => synth_neg_cmd(a, seed),
        Command::MockServe(a) => mock_serve_cmd(a, seed),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|source| FormatError::Io {
            path: path.to_owned(),
            source,
        })
        .map_err(CliError::from)
}

#[derive(Serialize)]
struct ParseSnapshot<'a> {
    backend: String,
    variant: Option<&'a str>,
    parse: &'a ParseConfig,
    timeout_secs: u64,
    retries: u32,
}

fn parse_cmd(args: ParseArgs, seed: u64) -> CliResult<()> {
    let mut config = ParseConfig {
        num_samples: args.num_samples,
        top_p: args.top_p,
        mask_entities: !args.no_mask,
        rerank: !args.no_rerank,
        seed,
        fail_policy: match args.fail_policy {
            FailPolicyArg::Fast => FailPolicy::Fast,
            FailPolicyArg::Skip => FailPolicy::Skip,
        },
        parallelism: args.parallelism,
    };
    let variant = args
        .variant
        .as_deref()
        .map(str::parse::<Variant>)
        .transpose()
        .or_fail(Category::Usage)?;
    if let Some(v) = variant {
        config = v.apply(&config);
    }
    config.validate().or_fail(Category::Usage)?;

    let (backend, backend_name): (Box<dyn Backend>, String) = match (args.mock, &args.backend_url) {
        (true, _) => (Box::new(MockBackend::new(seed)), "mock".to_owned()),
        (false, Some(url)) => {
            let http = HttpBackend::with_config(
                url,
                HttpConfig {
                    timeout: Duration::from_secs(args.timeout_secs),
                    retries: args.retries,
                },
            );
            (Box::new(http), url.clone())
        }
        (false, None) => return Err(CliError::usage("parse needs --mock or --backend-url")),
    };
    let run = Run::start(
        "parse",
        seed,
        ParseSnapshot {
            backend: backend_name,
            variant: variant.map(Variant::name),
            parse: &config,
            timeout_secs: args.timeout_secs,
            retries: args.retries,
        },
        &[&args.articles],
    );

    let docs = load_articles(&args.articles)?;
    if !args.mock {
        backend.health()?;
    }
    let mut trees: Vec<QudTree> = Vec::with_capacity(docs.len());
    let mut traces: Vec<ParseTrace> = Vec::with_capacity(docs.len());
    for doc in &docs {
        log::info!("parsing {} ({} sentences)", doc.article_id(), doc.len());
        let mut out = parse(doc, &backend, &config).map_err(|e| {
            let e = CliError::from(e);
            CliError::new(
                e.category,
                e.source.context(format!("article '{}'", doc.article_id())),
            )
        })?;
        if let Some(v) = variant {
            out.trace.variant = Some(v.name().to_owned());
        }
        if out.trace.partial {
            log::warn!(
                "{}: partial tree, missing {:?}",
                doc.article_id(),
                out.tree.missing()
            );
        }
        trees.push(out.tree);
        traces.push(out.trace);
    }
    if let Some(trace) = &args.trace {
        run.emit(Some(trace), &io::to_jsonl(&[], &traces))?;
    }
    run.emit(args.out.as_deref(), &io::to_jsonl(&[], &trees))
}

/// Trees from a tree file, or annotator trees from a DCQA questions file.
fn load_trees(path: &Path, articles: Option<&Path>) -> CliResult<Vec<TreeRecord>> {
    let text = read_text(path)?;
    let first: Option<serde_json::Value> = io::parse_jsonl::<serde_json::Value>(path, &text)?
        .into_iter()
        .next()
        .map(|l| l.value);
    let is_questions = first
        .as_ref()
        .is_some_and(|v| v.get("question_text").is_some());
    if !is_questions {
        return Ok(parse_tree_records(path, &text)?);
    }
    let Some(articles) = articles else {
        return Err(CliError::usage(format!(
            "{} holds questions; pass --articles to build annotator trees",
            path.display()
        )));
    };
    let docs = load_articles(articles)?;
    let set = load_questions(path, Some(&docs))?;
    for r in &set.rejected {
        log::warn!("{}:{}: rejected: {}", path.display(), r.line, r.reason);
    }
    let mut out = Vec::new();
    for article in build_all_trees(&set.questions, &docs)? {
        for (worker, tree) in article.trees {
            let forest = tree.to_dep_forest().map_err(|e| {
                CliError::new(
                    Category::Data,
                    anyhow::anyhow!("{}/{worker}: {e}", tree.article_id),
                )
            })?;
            out.push(TreeRecord {
                article_id: tree.article_id,
                label: Some(worker),
                forest,
            });
        }
    }
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "trees".to_owned(), |s| s.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct ReportSnapshot<'a> {
    names: (&'a str, &'a str),
    convention: AttachmentConvention,
    pretty: bool,
    articles: Option<&'a Path>,
}

fn stats_cmd(args: StatsArgs, seed: u64) -> CliResult<()> {
    let name = args.name.clone().unwrap_or_else(|| stem(&args.trees));
    let input = &args.input;
    let run = Run::start(
        "stats",
        seed,
        ReportSnapshot {
            names: (&name, ""),
            convention: AttachmentConvention::NonRoot,
            pretty: input.pretty,
            articles: input.articles.as_deref(),
        },
        &[&args.trees],
    );
    let trees = load_trees(&args.trees, input.articles.as_deref())?;
    let report = corpus_report(&trees, None, (&name, ""), AttachmentConvention::NonRoot)
        .or_fail(Category::Data)?;
    emit_report(&run, input, report)
}

fn compare_cmd(args: CompareArgs, seed: u64) -> CliResult<()> {
    let names = args
        .names
        .clone()
        .unwrap_or_else(|| vec![stem(&args.first), stem(&args.second)]);
    if names.len() != 2 {
        return Err(CliError::usage(
            "--names takes exactly two comma-separated names",
        ));
    }
    let convention = AttachmentConvention::from(args.convention);
    let input = &args.input;
    let run = Run::start(
        "compare",
        seed,
        ReportSnapshot {
            names: (&names[0], &names[1]),
            convention,
            pretty: input.pretty,
            articles: input.articles.as_deref(),
        },
        &[&args.first, &args.second],
    );
    let a = load_trees(&args.first, input.articles.as_deref())?;
    let b = load_trees(&args.second, input.articles.as_deref())?;
    let report =
        corpus_report(&a, Some(&b), (&names[0], &names[1]), convention).or_fail(Category::Data)?;
    emit_report(&run, input, report)
}

fn emit_report(
    run: &Run,
    input: &TreeInputArgs,
    report: qud_core::metrics::CorpusReport,
) -> CliResult<()> {
    let body = if input.pretty {
        report.to_pretty()
    } else {
        report.to_tsv()
    };
    run.emit(input.out.as_deref(), &body)
}

fn rst2dep_cmd(args: Rst2depArgs, seed: u64) -> CliResult<()> {
    let run = Run::start(
        "rst2dep",
        seed,
        serde_json::json!({ "reader": "brackets" }),
        &[&args.file],
    );
    let text = read_text(&args.file)?;
    let trees = BracketReader.read(&text).map_err(|e| {
        CliError::new(
            Category::Input,
            anyhow::anyhow!("{}: {e}", args.file.display()),
        )
    })?;
    let records = trees
        .iter()
        .map(|t| {
            Ok(DepTreeRecord {
                article_id: t.article_id.clone(),
                label: Some("rst".to_owned()),
                tree: t.to_dep().map_err(|e| {
                    CliError::new(Category::Data, anyhow::anyhow!("{}: {e}", t.article_id))
                })?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    run.emit(args.out.as_deref(), &io::to_jsonl(&[], &records))
}

fn eval_cmd(args: EvalArgs, seed: u64) -> CliResult<()> {
    let mut inputs: Vec<&Path> = vec![&args.file];
    if let Some(g) = &args.gold {
        inputs.push(g);
    }
    let kind = format!("{:?}", args.kind).to_ascii_lowercase();
    let run = Run::start(
        "eval",
        seed,
        serde_json::json!({ "kind": kind, "system": args.system, "pretty": args.pretty }),
        &inputs,
    );
    let body = match args.kind {
        EvalKind::Judgments => eval_judgments(&args)?,
        EvalKind::Rerank => eval_rerank(&args)?,
        EvalKind::Anchors => eval_anchors(&args)?,
    };
    run.emit(args.out.as_deref(), &body)
}

fn values<T>(lines: Vec<io::Line<T>>) -> Vec<T> {
    lines.into_iter().map(|l| l.value).collect()
}

fn pct(v: f64) -> String {
    format!("{v:.1}")
}

fn alpha(v: f64) -> String {
    format!("{v:.3}")
}

fn eval_judgments(args: &EvalArgs) -> CliResult<String> {
    let records: Vec<JudgmentRecord> = values(read_jsonl(&args.file)?);
    let systems = by_system(&records, &args.system);
    if systems.is_empty() {
        return Err(CliError::new(
            Category::Data,
            anyhow::anyhow!("no judgment records"),
        ));
    }
    let mut q1 = Vec::new();
    let mut q2 = Vec::new();
    let mut agreement = Vec::new();
    for (name, recs) in &systems {
        let t1 = aggregate_q1(recs).or_fail(Category::Data)?;
        let eligible = q2_subset(recs).or_fail(Category::Data)?;
        let refs: Vec<&JudgmentRecord> = recs
            .iter()
            .filter(|r| eligible.contains(&r.question_id))
            .collect();
        let t2 = aggregate_q2(&refs).or_fail(Category::Data)?;
        let mut row = vec![name.clone()];
        match agreement_summary(recs) {
            Ok(s) => row.extend([
                s.questions.to_string(),
                s.judges.to_string(),
                pct(s.all_agree_pct),
                pct(s.majority_pct),
                alpha(s.alpha_yes_vs_others),
                alpha(s.alpha_coarse),
                alpha(s.alpha_fine),
            ]),
            Err(e) => {
                log::warn!("{name}: Q1 agreement unavailable: {e}");
                row.extend(std::iter::repeat_n("-".to_owned(), 7));
            }
        }
        match q2_agreement(&refs) {
            Ok(s) => row.extend([
                s.questions.to_string(),
                pct(s.all_agree_pct),
                pct(s.majority_pct),
                alpha(s.alpha),
            ]),
            Err(e) => {
                log::warn!("{name}: Q2 agreement unavailable: {e}");
                row.extend(std::iter::repeat_n("-".to_owned(), 4));
            }
        }
        agreement.push(row);
        q1.push((name.clone(), t1));
        q2.push((name.clone(), t2));
    }
    let headers: Vec<String> = [
        "system",
        "q1_questions",
        "judges",
        "q1_all_agree",
        "q1_majority",
        "alpha_yes",
        "alpha_coarse",
        "alpha_fine",
        "q2_questions",
        "q2_all_agree",
        "q2_majority",
        "alpha_q2",
    ]
    .map(str::to_owned)
    .to_vec();

    let mut out = String::new();
    let _ = writeln!(out, "# q1: percent of all judge responses");
    out.push_str(&render_q1(&q1, args.pretty));
    let _ = writeln!(out, "\n# q1-coarse: percent of all judge responses");
    out.push_str(&render_q1_coarse(&q1, args.pretty));
    let _ = writeln!(
        out,
        "\n# q2: percent of answered responses on questions every judge rated yes or minor error on q1"
    );
    out.push_str(&render_q2(&q2, args.pretty));
    let _ = writeln!(
        out,
        "\n# agreement: strict majority = more than half the judges; skipped q2 answers are missing values"
    );
    out.push_str(&render(&headers, &agreement, args.pretty));
    Ok(out)
}

fn eval_rerank(args: &EvalArgs) -> CliResult<String> {
    let instances: Vec<RerankEvalInstance> = values(read_jsonl(&args.file)?);
    let p = rerank_percentile(&instances).or_fail(Category::Data)?;
    let headers = ["instances", "percentile"].map(str::to_owned);
    let rows = vec![vec![instances.len().to_string(), format!("{p:.2}")]];
    Ok(format!(
        "# percentile = mean (rank - 1) / (options - 1) of the gold option, lower is better\n{}",
        render(&headers, &rows, args.pretty)
    ))
}

fn eval_anchors(args: &EvalArgs) -> CliResult<String> {
    let gold_path: &PathBuf = args.gold.as_ref().expect("clap requires --gold");
    let trees: Vec<QudTree> = values(read_jsonl(&args.file)?);
    let set = load_questions(gold_path, None)?;
    let gold: Vec<GoldAnchor> = set.questions.iter().map(GoldAnchor::from).collect();
    let r = anchor_agreement(&predictions_from_trees(&trees), &gold).or_fail(Category::Data)?;
    for (article, answer) in &r.missing {
        log::warn!("no prediction for {article} sentence {answer}");
    }
    let headers = ["instances", "matches", "agreement", "missing"].map(str::to_owned);
    let rows = vec![vec![
        r.instances.to_string(),
        r.matches.to_string(),
        format!("{:.4}", r.agreement),
        r.missing.len().to_string(),
    ]];
    Ok(format!(
        "# agreement = gold anchors equal to the prediction / gold anchors; each annotator counts separately\n{}",
        render(&headers, &rows, args.pretty)
    ))
}

/// `TYPE:START-END` with 0-based inclusive token offsets.
fn parse_span(answer: usize, s: &str) -> CliResult<EntitySpan> {
    let bad = || CliError::usage(format!("span '{s}' is not TYPE:START-END"));
    let (ty, range) = s.rsplit_once(':').ok_or_else(bad)?;
    let (a, b) = range.split_once('-').ok_or_else(bad)?;
    Ok(EntitySpan {
        sentence_index: answer,
        token_start: a.parse().map_err(|_| bad())?,
        token_end: b.parse().map_err(|_| bad())?,
        entity_type: ty.to_owned(),
    })
}

fn encode_cmd(args: EncodeArgs, seed: u64) -> CliResult<()> {
    if let Some(cases_path) = &args.cases {
        let out_dir = args.out_dir.as_ref().expect("clap requires --out-dir");
        let run = Run::start(
            "encode",
            seed,
            serde_json::json!({ "cases": cases_path }),
            &[cases_path],
        );
        let cases: Vec<EncodingCase> =
            serde_json::from_str(&read_text(cases_path)?).map_err(|e| {
                CliError::new(
                    Category::Input,
                    anyhow::anyhow!("{}: {e}", cases_path.display()),
                )
            })?;
        std::fs::create_dir_all(out_dir).or_fail(Category::Output)?;
        for case in &cases {
            let text = case.render().or_fail(Category::Data)?;
            std::fs::write(out_dir.join(format!("{}.txt", case.name)), text + "\n")
                .or_fail(Category::Output)?;
        }
        return run.write_manifest(&out_dir.join("manifest.json"));
    }
    let articles = args.articles.as_ref().expect("clap requires articles");
    let article = args.article.as_deref().expect("clap requires --article");
    let answer = args.answer.expect("clap requires --answer");
    let docs = load_articles(articles)?;
    let doc = docs
        .iter()
        .find(|d| d.article_id() == article)
        .ok_or_else(|| CliError::new(Category::Data, anyhow::anyhow!("no article '{article}'")))?;
    let text = match args.anchor {
        None => {
            encode_anchor_query(doc, answer)
                .or_fail(Category::Data)?
                .text
        }
        Some(anchor) => {
            let spans = args
                .spans
                .iter()
                .map(|s| parse_span(answer, s))
                .collect::<CliResult<Vec<_>>>()?;
            encode_generation_prompt(doc, answer, anchor, &spans, args.question.as_deref())
                .or_fail(Category::Data)?
                .render()
        }
    };
    println!("{text}");
    Ok(())
}

fn synth_neg_cmd(args: SynthNegArgs, seed: u64) -> CliResult<()> {
    let run = Run::start(
        "synth-neg",
        seed,
        serde_json::json!({ "include_positive": args.include_positive }),
        &[&args.articles, &args.questions],
    );
    let docs = load_articles(&args.articles)?;
    let set = load_questions(&args.questions, Some(&docs))?;
    let mut examples = Vec::new();
    for q in &set.questions {
        let Some(doc) = docs.iter().find(|d| d.article_id() == q.article_id) else {
            continue;
        };
        let batch = if args.include_positive {
            training_examples(q, doc)
        } else {
            synth_negatives(q, doc)
        };
        examples.extend(batch.or_fail(Category::Data)?);
    }
    run.emit(args.out.as_deref(), &io::to_jsonl(&[], &examples))
}

fn mock_serve_cmd(args: MockServeArgs, seed: u64) -> CliResult<()> {
    qud_http::serve(MockBackend::new(seed), args.addr, |addr| {
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
    })
    .or_fail(Category::Unreachable)
}
