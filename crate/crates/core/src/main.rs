use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use poster_core::backends::BackendKind;
use poster_core::compose::flatten;
use poster_core::dataset::{corpus_stats, export_finetune, Corpus, DesignRecord, RecordKind};
use poster_core::doc::{deserialize, serialize, EditCommand, ElementId, PosterDocument};
use poster_core::eval::{evaluate_corpus, EvalPoster};
use poster_core::pipeline::service::{serve, Service};
use poster_core::pipeline::{resolve_background, run_pipeline, stylize_element, PipelineConfig, PosterRequest, Session};
use poster_core::raster::RasterImage;
use poster_core::text::{render_all, FontRegistry};

#[derive(Parser)]
#[command(name = "poster", version, about = "Compose posters with exact, editable text")]
struct Cli {
    /// Pipeline config (JSON). Environment variables override it.
    #[arg(long, global = true, env = "POSTER_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for a request.
    Generate {
        #[arg(long)]
        request: PathBuf,
        /// Output PNG.
        #[arg(long)]
        out: PathBuf,
        /// Output document.
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply an edit script (a JSON edit or array of edits) to a document.
    Edit {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out_doc: PathBuf,
        /// Also write the flattened PNG.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten a document to PNG.
    Render {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stylize one element of a document.
    Stylize {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        element: String,
        #[arg(long)]
        prompt: Option<String>,
        #[arg(long)]
        out_doc: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Word precision/recall of rendered posters against their documents.
    /// `<stem>.png` next to each document is used when present.
    Eval {
        #[arg(required = true)]
        docs: Vec<PathBuf>,
        /// Exit non-zero when macro recall falls below this.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Validate every record of a dataset manifest.
    ValidateDataset {
        manifest: PathBuf,
        #[arg(long)]
        json: bool,
        /// Also print corpus statistics (design corpora).
        #[arg(long)]
        stats: bool,
    },
    /// Export design records as planner fine-tuning pairs (JSONL).
    ExportFinetune {
        manifest: PathBuf,
        #[arg(long, default_value = "planner-v1")]
        template: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let mut c = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    c.apply_env()?;
    c.validate()?;
    Ok(c)
}

fn read_doc(path: &Path) -> Result<PosterDocument> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_doc(path: &Path, doc: &PosterDocument) -> Result<()> {
    std::fs::write(path, serialize(doc)).with_context(|| format!("writing {}", path.display()))
}

fn flatten_doc(doc: &PosterDocument, registry: &FontRegistry) -> Result<RasterImage> {
    let out = render_all(doc, registry);
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(flatten(doc, &out.elements)?)
}

fn save_png(img: &RasterImage, path: &Path) -> Result<()> {
    img.save(path).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = load_config(cli.config.as_deref())?;
    let registry = config.registry()?;
    match cli.command {
        Command::Generate {
            request,
            out,
            doc,
            seed,
        } => {
            let text = std::fs::read_to_string(&request)
                .with_context(|| format!("reading {}", request.display()))?;
            let mut req = PosterRequest::from_json(&text)?;
            if let (Some(p), Some(dir)) = (&req.background_image, request.parent()) {
                req.background_image = Some(dir.join(p).to_string_lossy().into_owned());
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            let result = run_pipeline(&req, &config, &registry, None)?;
            for d in &result.diagnostics {
                eprintln!("{d}");
            }
            write_doc(&doc, &result.document)?;
            save_png(&result.image, &out)?;
        }
        Command::Edit {
            doc,
            script,
            out_doc,
            out,
        } => {
            let text = std::fs::read_to_string(&script)
                .with_context(|| format!("reading {}", script.display()))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let edits: Vec<EditCommand> = match value {
                serde_json::Value::Array(_) => serde_json::from_value(value)?,
                v => vec![serde_json::from_value(v)?],
            };
            let mut session = Session::new("cli", read_doc(&doc)?, config.clone());
            if session.current().background.pixels.is_none() {
                let (d, _) = resolve_background(session.current(), &config, None)?;
                session = Session::new("cli", d, config.clone());
            }
            for e in &edits {
                session.edit(e, None)?;
                for d in &session.diagnostics {
                    eprintln!("{d}");
                }
            }
            write_doc(&out_doc, session.current())?;
            if let Some(out) = out {
                save_png(&session.preview(&registry)?, &out)?;
            }
        }
        Command::Render { doc, out } => {
            let d = read_doc(&doc)?;
            let (d, diags) = resolve_background(&d, &config, None)?;
            for x in diags {
                eprintln!("{x}");
            }
            save_png(&flatten_doc(&d, &registry)?, &out)?;
        }
        Command::Stylize {
            doc,
            element,
            prompt,
            out_doc,
            out,
        } => {
            let d = read_doc(&doc)?;
            let (d, _) = resolve_background(&d, &config, None)?;
            let id = ElementId::new(element);
            let Some(el) = d.element(&id) else {
                bail!("unknown element {id}");
            };
            let prompt = prompt.unwrap_or_else(|| el.content.clone());
            let rendered = render_all(&d, &registry).elements;
            let (next, diags) = stylize_element(&d, &rendered, &id, &prompt, &config, None)?;
            for x in diags {
                eprintln!("{x}");
            }
            write_doc(&out_doc, &next)?;
            if let Some(out) = out {
                save_png(&flatten(&next, &rendered)?, &out)?;
            }
        }
        Command::Eval {
            docs,
            threshold,
            json,
        } => {
            let mut loaded = Vec::new();
            for p in &docs {
                let d = read_doc(p)?;
                let (d, _) = resolve_background(&d, &config, None)?;
                let png = p.with_extension("png");
                let img = if png.exists() {
                    RasterImage::load(&png).with_context(|| format!("reading {}", png.display()))?
                } else {
                    flatten_doc(&d, &registry)?
                };
                let id = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                loaded.push((id, d, img));
            }
            let posters: Vec<EvalPoster<'_>> = loaded
                .iter()
                .map(|(id, document, image)| EvalPoster {
                    id: id.clone(),
                    image,
                    document,
                })
                .collect();
            let report = evaluate_corpus(&posters, &registry, config.endpoint(BackendKind::Ocr), None)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_table());
            }
            if threshold.is_some_and(|t| report.recall < t) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::ValidateDataset {
            manifest,
            json,
            stats,
        } => {
            let corpus = Corpus::load(&manifest)?;
            let diags = corpus.validate();
            if json {
                let mut v = serde_json::json!({ "valid": diags.is_empty(), "diagnostics": diags });
                if stats && corpus.manifest.kind == RecordKind::Design {
                    v["stats"] = serde_json::to_value(corpus_stats(&design_records(&corpus)))?;
                }
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                for d in &diags {
                    println!("{d}");
                }
                println!("{} record(s), {} diagnostic(s)", corpus.records.len(), diags.len());
                if stats && corpus.manifest.kind == RecordKind::Design {
                    let s = corpus_stats(&design_records(&corpus));
                    println!("{}", serde_json::to_string_pretty(&s)?);
                }
            }
            if !diags.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::ExportFinetune {
            manifest,
            template,
            out,
        } => {
            let corpus = Corpus::load(&manifest)?;
            if corpus.manifest.kind != RecordKind::Design {
                bail!("only design corpora can be exported");
            }
            let records: Vec<(String, serde_json::Value)> = corpus
                .records
                .iter()
                .map(|r| (r.file.clone(), r.value.clone().unwrap_or(serde_json::Value::Null)))
                .collect();
            let result = export_finetune(&records, &corpus.assets(), &template)?;
            for d in &result.diagnostics {
                eprintln!("excluded {d}");
            }
            std::fs::write(&out, &result.jsonl).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("exported {}, excluded {}", result.exported, result.excluded);
        }
        Command::Serve { addr, workers } => {
            let service = Arc::new(Service::new(config, registry));
            let handle = serve(service, &addr, workers)?;
            eprintln!("listening on {}", handle.base_url());
            handle.join();
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn design_records(corpus: &Corpus) -> Vec<DesignRecord> {
    corpus
        .records
        .iter()
        .filter_map(|r| r.value.clone())
        .filter_map(|v| serde_json::from_value(v).ok())
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
